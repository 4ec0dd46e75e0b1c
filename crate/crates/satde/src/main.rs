fn main() {
    std::process::exit(satde::cli::main());
}
