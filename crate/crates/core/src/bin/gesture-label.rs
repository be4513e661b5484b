fn main() {
    env_logger::init();
    std::process::exit(gesture_labeler::cli::run(std::env::args_os()));
}
