fn main() {
    std::process::exit(carpet_slicer::cli::run(std::env::args_os()));
}
