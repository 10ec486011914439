fn main() {
    std::process::exit(visnir::cli::run());
}
