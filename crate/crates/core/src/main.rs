fn main() {
    std::process::exit(edgemask::cli::run(std::env::args()));
}
