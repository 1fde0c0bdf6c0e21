fn main() {
    std::process::exit(srcodes::harness::cli::run());
}
