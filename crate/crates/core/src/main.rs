fn main() {
    std::process::exit(d2d_relay::cli::run(std::env::args_os()));
}
