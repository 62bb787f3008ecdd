fn main() {
    std::process::exit(omnibor::cli::main_with_args(std::env::args_os().collect()));
}
