fn main() {
    std::process::exit(curie_weiss_cli::main_with_args(std::env::args_os()));
}
