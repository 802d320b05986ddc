use clap::Parser;
use contsynth_cli::args::Cli;

fn main() {
    let cli = Cli::parse();
    if let Ok(threads) = std::env::var("CONTSYNTH_THREADS") {
        match threads.trim().parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            _ => eprintln!("CONTSYNTH_THREADS must be a positive integer; ignoring"),
        }
    }
    match contsynth_cli::run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}
