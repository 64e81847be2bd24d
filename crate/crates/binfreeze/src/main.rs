fn main() {
    std::process::exit(binfreeze::cli::run());
}
