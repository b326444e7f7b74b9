fn main() {
    std::process::exit(berkdyn_cli::main_with_args(std::env::args_os()));
}
