fn main() {
    let code = semiprop::execute(std::env::args().skip(1), &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
