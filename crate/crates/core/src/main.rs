fn main() {
    std::process::exit(mtt::cli::run(std::env::args_os()));
}
