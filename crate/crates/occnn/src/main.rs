fn main() {
    std::process::exit(occnn::cli::run(std::env::args_os()));
}
