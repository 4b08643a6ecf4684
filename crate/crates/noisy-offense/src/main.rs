fn main() {
    std::process::exit(noisy_offense::cli::main_with_args(std::env::args_os()));
}
