fn main() {
    std::process::exit(chronos_cli::run(std::env::args_os()));
}
