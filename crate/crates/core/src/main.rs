fn main() {
    std::process::exit(qcflow::cli::main_with_args(std::env::args_os()));
}
