fn main() {
    std::process::exit(nsdiag::cli::dispatch(std::env::args_os()));
}
