fn main() {
    std::process::exit(sqss::cli::main_with_args(std::env::args_os()));
}
