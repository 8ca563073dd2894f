fn main() {
    std::process::exit(basisforge::cli::main());
}
