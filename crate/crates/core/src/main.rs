fn main() {
    std::process::exit(knuckle_crane::cli::run(std::env::args_os()));
}
