//! `key=value` config files.
//!
//! Keys are long flag names without the leading dashes. Blank lines and lines
//! starting with `#` are ignored. A boolean flag is set with `key=true` and
//! left alone with `key=false`. Entries are spliced in right after the
//! subcommand, so any flag given on the command line wins.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

pub fn parse(text: &str, origin: &str) -> Result<Vec<(String, String)>> {
    let mut entries = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("{origin}:{}: expected key=value, got {line:?}", n + 1);
        };
        let key = key.trim().trim_start_matches("--");
        if key.is_empty() {
            bail!("{origin}:{}: empty key", n + 1);
        }
        entries.push((key.to_string(), value.trim().to_string()));
    }
    Ok(entries)
}

pub fn to_args(entries: &[(String, String)]) -> Vec<String> {
    let mut args = Vec::new();
    for (key, value) in entries {
        match value.as_str() {
            "true" => args.push(format!("--{key}")),
            "false" => {}
            _ => {
                args.push(format!("--{key}"));
                args.push(value.clone());
            }
        }
    }
    args
}

/// Removes `--config <path>` from `argv` and splices the file's entries in
/// after the subcommand name.
pub fn expand(mut argv: Vec<String>) -> Result<Vec<String>> {
    let Some(pos) = argv
        .iter()
        .position(|a| a == "--config" || a.starts_with("--config="))
    else {
        return Ok(argv);
    };
    let flag = argv.remove(pos);
    let path = match flag.strip_prefix("--config=") {
        Some(p) => p.to_string(),
        None => {
            if pos >= argv.len() {
                bail!("--config needs a file path");
            }
            argv.remove(pos)
        }
    };
    let text = fs::read_to_string(Path::new(&path))
        .with_context(|| format!("reading config file {path}"))?;
    let file_args = to_args(&parse(&text, &path)?);
    // first bare word after the program name is the subcommand
    let sub = argv
        .iter()
        .skip(1)
        .position(|a| !a.starts_with('-'))
        .map(|i| i + 1);
    match sub {
        Some(i) => {
            let tail = argv.split_off(i + 1);
            argv.extend(file_args);
            argv.extend(tail);
            Ok(argv)
        }
        None => bail!("--config needs a subcommand"),
    }
}
