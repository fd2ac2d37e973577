fn main() {
    std::process::exit(eoreadout::cli::run(std::env::args_os()));
}
