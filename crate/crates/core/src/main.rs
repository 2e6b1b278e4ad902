fn main() {
    std::process::exit(modgen::cli::run());
}
