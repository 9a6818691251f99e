fn main() {
    std::process::exit(molspec::cli::cli(std::env::args_os()));
}
