fn main() {
    std::process::exit(flatconv::cli::run());
}
