fn main() {
    std::process::exit(hallugraph::run(std::env::args_os()));
}
