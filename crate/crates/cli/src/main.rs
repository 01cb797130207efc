use clap::Parser;
use privlp_cli::config::Cli;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::try_parse().unwrap_or_else(|e| {
        // usage errors are configuration errors; help and version exit cleanly
        let code = if e.use_stderr() { 1 } else { 0 };
        let _ = e.print();
        std::process::exit(code);
    });
    std::process::exit(privlp_cli::run(&cli));
}
