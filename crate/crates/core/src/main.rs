fn main() {
    std::process::exit(sardiag::cli::run());
}
