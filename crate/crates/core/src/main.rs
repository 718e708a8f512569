fn main() {
    let trace = std::env::args().any(|a| a == "--trace");
    let default = if trace { "warn,shapecraft::trace=info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(default)).init();
    std::process::exit(shapecraft::cli::run(std::env::args_os()));
}
