fn main() {
    std::process::exit(belltasks::cli::main_with_args(std::env::args_os()));
}
