fn main() {
    std::process::exit(cshift::cli::main());
}
