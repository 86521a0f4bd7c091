fn main() {
    std::process::exit(congestion_sim::cli::run_args(std::env::args_os()));
}
