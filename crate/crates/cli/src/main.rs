use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = bsg_cli::Args::parse();
    std::process::exit(bsg_cli::main_with(&args));
}
