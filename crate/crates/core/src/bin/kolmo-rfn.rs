fn main() {
    std::process::exit(kolmo_rfn::cli::cli_main(std::env::args_os()));
}
