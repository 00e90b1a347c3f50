fn main() {
    std::process::exit(manifold_scatter::cli::run(std::env::args_os()));
}
