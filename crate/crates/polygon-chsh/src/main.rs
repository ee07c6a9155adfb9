fn main() {
    std::process::exit(polygon_chsh::cli::run(std::env::args()));
}
