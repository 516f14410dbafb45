fn main() {
    std::process::exit(indsamp::cli::dispatch(std::env::args_os()));
}
