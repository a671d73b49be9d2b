fn main() {
    std::process::exit(moran::cli::run(std::env::args_os()));
}
