fn main() {
    std::process::exit(phaselock::cli::run(std::env::args_os()));
}
