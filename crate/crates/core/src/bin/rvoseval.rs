fn main() {
    std::process::exit(rvoseval::cli::cli_main(std::env::args_os()));
}
