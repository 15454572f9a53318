fn main() {
    std::process::exit(wmtr_core::cli::run(std::env::args_os()));
}
