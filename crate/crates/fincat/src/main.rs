fn main() {
    std::process::exit(fincat::run_cli(std::env::args_os()));
}
