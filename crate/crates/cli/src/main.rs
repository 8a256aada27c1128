fn main() {
    std::process::exit(wbvp_cli::run_cli(std::env::args_os()));
}
