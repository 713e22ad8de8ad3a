fn main() {
    std::process::exit(levelscore::cli::dispatch(std::env::args_os()));
}
