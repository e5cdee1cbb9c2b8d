fn main() {
    std::process::exit(incdist::cli::dispatch(std::env::args_os()));
}
