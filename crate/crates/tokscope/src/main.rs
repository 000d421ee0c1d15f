fn main() {
    std::process::exit(tokscope::cli::main());
}
