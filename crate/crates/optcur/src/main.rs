fn main() {
    std::process::exit(optcur::cli::run(std::env::args_os()));
}
