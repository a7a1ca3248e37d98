fn main() {
    std::process::exit(rabi_chirp::cli::run(std::env::args_os()));
}
