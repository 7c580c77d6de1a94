fn main() {
    std::process::exit(asst::cli::main_with_args(std::env::args_os()));
}
