fn main() {
    let code = tf_angular::cli::run(std::env::args_os());
    std::process::exit(code);
}
