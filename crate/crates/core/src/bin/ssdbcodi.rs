fn main() {
    std::process::exit(ssdbcodi::cli::main_with_args(std::env::args_os()));
}
