fn main() {
    std::process::exit(crindex::cli::run(std::env::args_os()));
}
