fn main() {
    std::process::exit(wglab_core::cli::main_with_args(std::env::args_os()));
}
