fn main() {
    std::process::exit(wrp_core::cli::run(std::env::args_os()));
}
