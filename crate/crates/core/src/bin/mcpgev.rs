fn main() {
    std::process::exit(mcpgev::cli::main());
}
