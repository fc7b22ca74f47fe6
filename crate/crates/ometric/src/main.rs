fn main() {
    std::process::exit(ometric::cli::run());
}
