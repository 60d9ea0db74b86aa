use env_logger::Env;

fn main() {
    env_logger::Builder::from_env(Env::new().filter_or("PAKLO_LOG", "error"))
        .format_timestamp(None)
        .init();
    let code = paklo::cli::run(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
