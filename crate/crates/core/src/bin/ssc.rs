fn main() {
    std::process::exit(ssc::cli::run(std::env::args_os()));
}
