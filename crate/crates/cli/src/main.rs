fn main() {
    std::process::exit(couette_cli::run());
}
