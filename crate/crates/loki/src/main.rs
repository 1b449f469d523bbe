use clap::Parser;

fn main() {
    loki::cli::init_thread_pool();
    let cli = loki::cli::Cli::parse();
    if let Err(e) = loki::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
