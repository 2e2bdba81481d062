fn main() {
    std::process::exit(varhardy::cli::run(std::env::args_os()));
}
