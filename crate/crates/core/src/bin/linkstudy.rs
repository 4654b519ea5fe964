fn main() {
    std::process::exit(linkstudy::cli::dispatch(std::env::args_os()));
}
