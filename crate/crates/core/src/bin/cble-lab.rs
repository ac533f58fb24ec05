fn main() {
    std::process::exit(cble_lab::cli::run(std::env::args_os()));
}
