fn main() {
    std::process::exit(reckon_cli::run(std::env::args_os()));
}
