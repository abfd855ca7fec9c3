fn main() {
    std::process::exit(mrkit::cli::run());
}
