fn main() {
    std::process::exit(sigcore::cli::main())
}
