fn main() {
    std::process::exit(imptrack::cli::run(std::env::args_os()));
}
