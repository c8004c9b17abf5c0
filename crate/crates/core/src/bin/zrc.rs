fn main() {
    std::process::exit(zrc::cli::run(std::env::args_os()));
}
