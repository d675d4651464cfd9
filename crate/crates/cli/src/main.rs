fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv: Vec<String> = std::env::args().collect();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = grabit_cli::dispatch(&argv, &mut stdout.lock(), &mut stderr.lock());
    std::process::exit(code);
}
