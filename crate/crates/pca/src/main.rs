fn main() {
    std::process::exit(pca::cli::run_to_stdout());
}
