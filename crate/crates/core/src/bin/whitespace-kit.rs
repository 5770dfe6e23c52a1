fn main() {
    std::process::exit(whitespace_kit::cli::main());
}
