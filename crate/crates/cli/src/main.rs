use clap::Parser;
use modalbridge_cli::{run, Cli};

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("MODALBRIDGE_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| format!("MODALBRIDGE_THREADS must be a positive integer, got `{v}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // help and version are not errors
            std::process::exit(if e.use_stderr() { modalbridge_cli::exit::CONFIG } else { 0 });
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: config error: {e}");
        std::process::exit(modalbridge_cli::exit::CONFIG);
    }
    match run(&cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
