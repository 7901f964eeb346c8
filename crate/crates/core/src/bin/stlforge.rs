fn main() {
    std::process::exit(stlforge::cli::main());
}
