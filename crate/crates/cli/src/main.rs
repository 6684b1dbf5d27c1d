fn main() {
    std::process::exit(fireline_cli::main_with_args(std::env::args_os()));
}
