fn main() {
    std::process::exit(evolvolin_cli::run_cli(std::env::args_os()));
}
