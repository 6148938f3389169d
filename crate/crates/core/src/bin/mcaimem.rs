fn main() {
    std::process::exit(mcaimem::cli::run(std::env::args_os()));
}
