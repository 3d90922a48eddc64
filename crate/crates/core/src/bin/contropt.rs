fn main() {
    std::process::exit(contropt::cli::main_from_env());
}
