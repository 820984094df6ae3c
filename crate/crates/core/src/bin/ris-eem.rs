fn main() {
    std::process::exit(ris_eem::cli::cli_main(std::env::args_os()));
}
