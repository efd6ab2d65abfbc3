use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use radlab_cli::commands::{run, Cli};
use radlab_cli::output::render;

/// Relative output paths land under $RADLAB_OUT_DIR when it is set.
fn resolve(out: &PathBuf) -> PathBuf {
    match std::env::var_os("RADLAB_OUT_DIR") {
        Some(dir) if out.is_relative() => PathBuf::from(dir).join(out),
        _ => out.clone(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (artifact, config) = match run(&cli.command) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("radlab: {e}");
            return ExitCode::from(if e.is_domain() { 2 } else { 1 });
        }
    };
    let text = render(&artifact, &config, cli.format, cli.precision);
    match &cli.out {
        Some(path) => {
            let path = resolve(path);
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                if let Err(e) = std::fs::create_dir_all(parent) {
                    eprintln!("radlab: {}: {e}", parent.display());
                    return ExitCode::from(1);
                }
            }
            if let Err(e) = std::fs::write(&path, text) {
                eprintln!("radlab: {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::SUCCESS
}
