//! Key-value configuration files, merged underneath command-line flags.
//!
//! A file holds one `key = value` pair per line (`:` also separates), with
//! `#` comments. Keys are long flag names with `-` or `_`. Values `true` and
//! `false` toggle switches.

use std::ffi::OsString;
use std::path::Path;

use super::CliError;

pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .or_else(|| line.split_once(':'))
            .ok_or_else(|| CliError::Config(format!("config line {}: {raw:?}", i + 1)))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() || key == "config" {
            return Err(CliError::Config(format!("config line {}: bad key", i + 1)));
        }
        out.push((key, value.trim().to_string()));
    }
    Ok(out)
}

pub fn read_config(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("config file {}: {e}", path.display())))?;
    parse_config(&text)
}

/// Rewrites `argv` so that config entries come right after the subcommand
/// and before the user's own flags; with later occurrences overriding
/// earlier ones, flags win.
pub fn merge_config(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let mut path = None;
    let mut rest = Vec::with_capacity(argv.len());
    let mut iter = argv.into_iter();
    while let Some(arg) = iter.next() {
        let s = arg.to_string_lossy().into_owned();
        if s == "--config" {
            let v = iter
                .next()
                .ok_or_else(|| CliError::Config("--config needs a path".into()))?;
            path = Some(std::path::PathBuf::from(v));
        } else if let Some(v) = s.strip_prefix("--config=") {
            path = Some(v.into());
        } else {
            rest.push(arg);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let entries = read_config(&path)?;
    let sub = rest
        .iter()
        .position(|a| matches!(a.to_str(), Some("generate" | "verify" | "plot")))
        .ok_or_else(|| CliError::Config("no subcommand given".into()))?;
    let mut injected = Vec::new();
    for (key, value) in entries {
        match value.as_str() {
            "true" => injected.push(OsString::from(format!("--{key}"))),
            "false" => {}
            _ => {
                injected.push(OsString::from(format!("--{key}")));
                injected.push(OsString::from(value));
            }
        }
    }
    let tail = rest.split_off(sub + 1);
    rest.extend(injected);
    rest.extend(tail);
    Ok(rest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_and_comments() {
        let cfg = parse_config("# header\nfamily = fermat\ncount: 150  # trailing\n\nk_max=10\n")
            .unwrap();
        assert_eq!(
            cfg,
            vec![
                ("family".into(), "fermat".into()),
                ("count".into(), "150".into()),
                ("k-max".into(), "10".into())
            ]
        );
        assert!(parse_config("no separator").is_err());
    }

    #[test]
    fn config_goes_before_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "count = 10\nfamily = fermat\n").unwrap();
        let argv: Vec<OsString> = [
            "prog",
            "--config",
            path.to_str().unwrap(),
            "generate",
            "--count",
            "5",
        ]
        .iter()
        .map(OsString::from)
        .collect();
        let merged: Vec<String> = merge_config(argv)
            .unwrap()
            .into_iter()
            .map(|s| s.into_string().unwrap())
            .collect();
        assert_eq!(
            merged,
            vec!["prog", "generate", "--count", "10", "--family", "fermat", "--count", "5"]
        );
    }
}
