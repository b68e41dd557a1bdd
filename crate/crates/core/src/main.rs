fn main() {
    std::process::exit(curvetrace::io::run_cli(std::env::args_os()));
}
