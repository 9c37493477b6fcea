mod args;
mod meta;
mod run;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::{json, Value};

use args::Cli;
use meta::Meta;

/// A problem with how the tool was invoked rather than with the data; exits with 1.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;

fn config_file(argv: &[OsString]) -> Option<OsString> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(rest) = s.strip_prefix("--config=") {
            return Some(rest.into());
        }
    }
    None
}

/// Appends `--key value` for every config-file entry whose flag is not already on the
/// command line. Unknown keys surface as unknown flags.
fn merge_config(mut argv: Vec<OsString>) -> Result<Vec<OsString>, UsageError> {
    let Some(path) = config_file(&argv) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| UsageError(format!("--config {}: {e}", path.to_string_lossy())))?;
    let doc: Value = serde_json::from_str(&text)
        .map_err(|e| UsageError(format!("--config {}: {e}", path.to_string_lossy())))?;
    let Value::Object(entries) = doc else {
        return Err(UsageError("--config must hold a JSON object".into()));
    };
    for (key, value) in entries {
        let flag = format!("--{key}");
        let given = argv.iter().any(|a| {
            let a = a.to_string_lossy();
            a == flag || a.starts_with(&format!("{flag}="))
        });
        if given || key == "config" {
            continue;
        }
        let scalar = |v: &Value| match v {
            Value::String(s) => Ok(s.clone()),
            Value::Number(n) => Ok(n.to_string()),
            other => Err(UsageError(format!("--config: unsupported value for {key}: {other}"))),
        };
        match &value {
            Value::Null | Value::Bool(false) => {}
            Value::Bool(true) => argv.push(flag.into()),
            Value::Array(items) => {
                let joined: Result<Vec<String>, _> = items.iter().map(scalar).collect();
                argv.push(flag.into());
                argv.push(joined?.join(",").into());
            }
            v => {
                argv.push(flag.into());
                argv.push(scalar(v)?.into());
            }
        }
    }
    Ok(argv)
}

fn main() -> ExitCode {
    let argv = match merge_config(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    env_logger::Builder::new()
        .filter_level(cli.log_level)
        .format_timestamp(None)
        .init();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: --threads {t}: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    // Thread count and log level never change outputs, so they stay out of the hash.
    let meta = Meta::new(json!({
        "seed": cli.seed,
        "command": serde_json::to_value(&cli.command).expect("arguments serialize"),
    }));
    log::debug!("resolved config {}", meta.to_json());
    match run::run(&cli.command, cli.seed, &meta) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::from(EXIT_DATA)
            }
        }
    }
}
