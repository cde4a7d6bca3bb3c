fn main() {
    std::process::exit(ldpfreq_cli::cli_main(std::env::args_os()));
}
