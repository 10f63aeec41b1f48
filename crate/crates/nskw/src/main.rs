fn main() {
    std::process::exit(nskw::cli::main_entry(std::env::args_os()));
}
