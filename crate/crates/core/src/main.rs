fn main() {
    std::process::exit(gazeformer::cli::run(std::env::args_os()));
}
