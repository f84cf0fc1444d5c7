//! Drives the same file-producing pipeline as the `gasrelax` binary from a
//! TOML configuration.
//!
//! cargo run --release --example config_run -- examples/configs/crossings.toml [out-dir]

use std::path::PathBuf;

use gasrelax::config::parse_config;
use gasrelax::runner::run;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "examples/configs/chain.toml".into());
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("gasrelax-example"));
    let text = std::fs::read_to_string(&path)?;
    let config = parse_config(&text)?;
    let manifest = run(&config, &out)?;
    println!("{} -> {}", manifest.experiment, out.display());
    for f in &manifest.outputs {
        println!("  {:<24} {:>10} bytes  {}", f.file, f.bytes, &f.sha256[..16]);
    }
    Ok(())
}
