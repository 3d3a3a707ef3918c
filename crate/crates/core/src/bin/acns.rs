fn main() {
    std::process::exit(acns_core::cli::main_from(std::env::args_os()));
}
