fn main() {
    std::process::exit(qmg1k::cli::main_with_args(std::env::args_os()));
}
