fn main() {
    std::process::exit(abelops::cli::run(std::env::args_os()));
}
