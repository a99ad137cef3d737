use clap::Parser;
use qvlc::cli::{execute, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("qvlc: thread pool: {e}");
            std::process::exit(1);
        }
    }
    let code = match cli.command.into_config() {
        Ok(cfg) => execute(&cfg),
        Err(e) => {
            eprintln!("qvlc: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
