fn main() {
    std::process::exit(imlab::cli::run_cli(std::env::args()));
}
