fn main() {
    std::process::exit(jrcsim::cli::run(std::env::args_os()));
}
