fn main() {
    std::process::exit(hypergaf::cli::main());
}
