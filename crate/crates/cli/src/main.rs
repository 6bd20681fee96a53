fn main() {
    std::process::exit(learnpool::run(std::env::args_os()));
}
