fn main() {
    std::process::exit(mems_lab::cli::run_from(std::env::args_os()));
}
