fn main() {
    std::process::exit(latsub_cli::run(std::env::args_os()));
}
