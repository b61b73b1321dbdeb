fn main() {
    std::process::exit(hurst_cli::run(std::env::args_os()));
}
