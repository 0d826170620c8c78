fn main() {
    std::process::exit(saliency_bench::cli::main());
}
