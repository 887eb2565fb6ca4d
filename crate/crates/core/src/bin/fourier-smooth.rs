fn main() {
    env_logger::init();
    std::process::exit(fourier_smooth::cli::run(std::env::args_os()));
}
