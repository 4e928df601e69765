fn main() {
    std::process::exit(dronesurvey::cli::run(std::env::args_os()));
}
