fn main() {
    std::process::exit(tapkin::run(std::env::args_os()));
}
