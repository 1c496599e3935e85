fn main() {
    std::process::exit(sdql::cli::main());
}
