fn main() {
    std::process::exit(oos_encoding::harness::cli::run(std::env::args_os()));
}
