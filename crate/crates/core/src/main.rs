fn main() {
    std::process::exit(vanet_moo::cli::main_with(std::env::args_os()));
}
