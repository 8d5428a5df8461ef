fn main() {
    std::process::exit(grassnav_cli::execute(std::env::args_os()));
}
