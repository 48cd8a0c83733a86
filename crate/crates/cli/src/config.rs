//! `--config FILE`: flat `key = value` lines become `--key=value` flags
//! placed right after the subcommand, ahead of the user's own flags, so the
//! command line overrides the file.

use std::ffi::OsString;
use std::path::Path;

use anyhow::{bail, Context, Result};

const SUBCOMMANDS: [&str; 6] = ["r1d", "r2d", "sweep", "compare", "facet", "mgcheck"];

/// Flags from a config file body. Keys use the flag names (`eps-inv` or
/// `eps_inv`, `M`, `T`); `#` starts a comment.
pub fn parse(body: &str) -> Result<Vec<OsString>> {
    let mut flags = Vec::new();
    for (n, raw) in body.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {}: expected `key = value`, got `{line}`", n + 1);
        };
        let key = key.trim().replace('_', "-");
        if key.is_empty() || key.starts_with('-') {
            bail!("line {}: bad key `{key}`", n + 1);
        }
        if key == "config" {
            bail!("line {}: config files cannot include other config files", n + 1);
        }
        let value: String = value.split(',').map(str::trim).collect::<Vec<_>>().join(",");
        flags.push(OsString::from(format!("--{key}={value}")));
    }
    Ok(flags)
}

fn config_path(args: &[OsString]) -> Option<(usize, usize, OsString)> {
    for (i, a) in args.iter().enumerate() {
        let s = a.to_string_lossy();
        if s == "--" {
            break;
        }
        if s == "--config" {
            return args.get(i + 1).map(|p| (i, 2, p.clone()));
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some((i, 1, OsString::from(p)));
        }
    }
    None
}

/// Splices the config file's flags into `args`.
pub fn expand(mut args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some((at, width, path)) = config_path(&args) else {
        return Ok(args);
    };
    let path = Path::new(&path);
    let body = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let flags = parse(&body).with_context(|| format!("in config {}", path.display()))?;
    args.drain(at..at + width);
    let Some(sub) = args.iter().position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref())) else {
        // let clap report the missing subcommand
        return Ok(args);
    };
    args.splice(sub + 1..sub + 1, flags);
    Ok(args)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn parses_flat_pairs() {
        let flags = parse("# sweep\nM = 64\neps_inv=16  # trailing\n\nq = 0.5, 0.7\n").unwrap();
        assert_eq!(flags, os(&["--M=64", "--eps-inv=16", "--q=0.5,0.7"]));
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(parse("M 64").is_err());
        assert!(parse("= 3").is_err());
        assert!(parse("config = other.cfg").is_err());
    }

    #[test]
    fn file_flags_precede_command_line_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "M = 64\nmmax = 2\n").unwrap();
        let args = os(&["hsfront", "--config", path.to_str().unwrap(), "sweep", "--M", "32"]);
        assert_eq!(expand(args).unwrap(), os(&["hsfront", "sweep", "--M=64", "--mmax=2", "--M", "32"]));
    }

    #[test]
    fn untouched_without_config() {
        let args = os(&["hsfront", "mgcheck", "--M", "8"]);
        assert_eq!(expand(args.clone()).unwrap(), args);
    }
}
