fn main() {
    std::process::exit(fairalloc::cli::run(std::env::args_os()));
}
