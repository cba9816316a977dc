fn main() {
    std::process::exit(ellikorn_cli::run(std::env::args_os()));
}
