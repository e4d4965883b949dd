fn main() {
    std::process::exit(ringwave::cli::main_with_args(std::env::args_os()));
}
