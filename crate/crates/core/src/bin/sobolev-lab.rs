fn main() {
    std::process::exit(sobolev_lab::cli::main_with(std::env::args_os()));
}
