fn main() {
    std::process::exit(sdv_orchestra::cli::main_with_args(std::env::args_os()));
}
