use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use edgecache::experiment::{
    parse_config, preset_names, run_config, run_preset, validate_config, write_outputs,
};

/// Fetch/cache experiments under dynamic prices.
#[derive(Parser, Debug)]
#[command(name = "edgecache", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a preset (fig2..fig7) or a TOML configuration file.
    Run {
        target: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// `key=value`, repeatable. Dotted keys address nested fields.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        replications: Option<usize>,
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Check a configuration file and print its canonical form.
    Validate { config: PathBuf },
    /// List the presets.
    Presets,
}

fn split_override(raw: &str) -> Result<(String, String)> {
    match raw.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.to_string())),
        _ => bail!("override '{raw}' is not of the form key=value"),
    }
}

fn run(
    target: &str,
    seed: Option<u64>,
    out: &Path,
    raw: &[String],
    replications: Option<usize>,
    horizon: Option<usize>,
) -> Result<()> {
    let mut overrides = raw.iter().map(|r| split_override(r)).collect::<Result<Vec<_>>>()?;
    for (key, value) in [
        ("seed", seed.map(|v| v.to_string())),
        ("replications", replications.map(|v| v.to_string())),
        ("horizon", horizon.map(|v| v.to_string())),
    ] {
        if let Some(v) = value {
            overrides.push((key.to_string(), v));
        }
    }
    let output = if preset_names().contains(&target) {
        run_preset(target, &overrides)?
    } else {
        let path = Path::new(target);
        if !path.exists() {
            bail!(
                "'{target}' is neither a preset ({}) nor an existing file",
                preset_names().join(", ")
            );
        }
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {target}"))?;
        let config = parse_config(&text, &overrides).with_context(|| format!("in {target}"))?;
        run_config(&config)?
    };
    for path in write_outputs(out, &output)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { target, seed, out, overrides, replications, horizon } => {
            run(target, *seed, out, overrides, *replications, *horizon)
        }
        Command::Validate { config } => validate_config(config)
            .map(|c| print!("{}", c.to_canonical()))
            .with_context(|| format!("in {}", config.display())),
        Command::Presets => {
            for name in preset_names() {
                println!("{name}");
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
