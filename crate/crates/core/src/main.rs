fn main() {
    std::process::exit(spd_means::cli::run_command(std::env::args_os()));
}
