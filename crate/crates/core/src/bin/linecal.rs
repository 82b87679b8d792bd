fn main() {
    std::process::exit(linecal::cli::run(std::env::args_os()));
}
