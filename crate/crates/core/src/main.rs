fn main() {
    std::process::exit(qromlab::cli::run(std::env::args_os()));
}
