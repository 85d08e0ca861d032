//! Run-config files: a flat JSON object whose keys are the command's flag
//! names (`"meta-batches": 50`). Values given on the command line win; keys
//! the command does not know are rejected before any work starts.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

fn object(v: Value, what: &str) -> Result<Map<String, Value>> {
    match v {
        Value::Object(m) => Ok(m),
        _ => bail!("{what} must be a JSON object"),
    }
}

/// Overlay command-line `flags` on the optional config file and return the
/// resolved arguments.
pub fn resolve<T>(flags: &T, config: Option<&Path>, command: &str) -> Result<T>
where
    T: Serialize + DeserializeOwned + Default,
{
    let known = object(serde_json::to_value(T::default())?, "arguments")?;
    let mut merged = Map::new();
    if let Some(path) = config {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let file: Value =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        for (k, v) in object(file, "config file")? {
            if k == "command" {
                if v.as_str() != Some(command) {
                    bail!("config file is for command {v}, not {command:?}");
                }
                continue;
            }
            if !known.contains_key(&k) {
                bail!("unknown key {k:?} in config file for {command}");
            }
            merged.insert(k, v);
        }
    }
    for (k, v) in object(serde_json::to_value(flags)?, "arguments")? {
        if !v.is_null() {
            merged.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(merged)).context("config values have the wrong type")
}

/// Parse a comma-separated list (`"0.6,0.2,0.2"`, `"3,7"`).
pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<T>().map_err(|e| anyhow::anyhow!("bad list entry {x:?}: {e}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Default, Serialize, Deserialize, PartialEq)]
    #[serde(rename_all = "kebab-case")]
    struct Flags {
        meta_batches: Option<usize>,
        outer_lr: Option<f64>,
        out: Option<String>,
    }

    fn write(text: &str) -> tempfile::NamedTempFile {
        let f = tempfile::NamedTempFile::new().unwrap();
        fs::write(f.path(), text).unwrap();
        f
    }

    #[test]
    fn flags_override_the_file() {
        let f = write(r#"{"command": "meta-train", "meta-batches": 50, "outer-lr": 0.01}"#);
        let flags = Flags {
            meta_batches: Some(7),
            ..Flags::default()
        };
        let r = resolve(&flags, Some(f.path()), "meta-train").unwrap();
        assert_eq!(r.meta_batches, Some(7));
        assert_eq!(r.outer_lr, Some(0.01));
        assert_eq!(r.out, None);
    }

    #[test]
    fn unknown_keys_and_wrong_command_are_rejected() {
        let f = write(r#"{"meta-batchez": 50}"#);
        let e = resolve(&Flags::default(), Some(f.path()), "meta-train").unwrap_err();
        assert!(e.to_string().contains("meta-batchez"));
        let f = write(r#"{"command": "serve"}"#);
        assert!(resolve(&Flags::default(), Some(f.path()), "meta-train").is_err());
        let f = write(r#"{"meta-batches": "many"}"#);
        assert!(resolve(&Flags::default(), Some(f.path()), "meta-train").is_err());
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list::<f64>("0.6, 0.2,0.2").unwrap(), vec![0.6, 0.2, 0.2]);
        assert!(parse_list::<u32>("1,x").is_err());
    }
}
