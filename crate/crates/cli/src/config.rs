//! Merging a JSON config file into the command line.
//!
//! Every key of the top-level object becomes a long flag inserted right
//! after the subcommand name. Keys whose flag already appears on the command
//! line are skipped, so flags given there win. Arrays are joined with commas; `true` becomes a bare
//! switch and `false` or `null` drops the key.

use anyhow::{bail, Context, Result};
use serde_json::Value;

/// Returns `args` with the contents of any `--config FILE` spliced in.
pub fn expand(args: Vec<String>, subcommands: &[&str]) -> Result<Vec<String>> {
    let mut path = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            path = Some(it.next().context("--config needs a file path")?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let text = std::fs::read_to_string(&path).with_context(|| format!("cannot read config file {path}"))?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("{path} is not valid JSON"))?;
    let given: Vec<&str> = rest
        .iter()
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a))
        .collect();
    let tokens = to_flags(&value, &given).with_context(|| format!("in config file {path}"))?;
    let at = rest
        .iter()
        .position(|a| subcommands.contains(&a.as_str()))
        .map_or(rest.len(), |i| i + 1);
    rest.splice(at..at, tokens);
    Ok(rest)
}

fn scalar(v: &Value) -> Result<String> {
    Ok(match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        Value::Bool(b) => b.to_string(),
        other => bail!("unsupported value {other}"),
    })
}

fn to_flags(v: &Value, given: &[&str]) -> Result<Vec<String>> {
    let Value::Object(map) = v else { bail!("config must be a JSON object of flag names to values") };
    let mut out = Vec::new();
    for (key, val) in map {
        let name = key.replace('_', "-");
        if given.contains(&name.as_str()) {
            continue;
        }
        let flag = format!("--{name}");
        match val {
            Value::Null | Value::Bool(false) => {}
            Value::Bool(true) => out.push(flag),
            Value::Array(items) => {
                let parts: Result<Vec<String>> = items.iter().map(scalar).collect();
                out.push(flag);
                out.push(parts.with_context(|| format!("key {key:?}"))?.join(","));
            }
            other => {
                out.push(flag);
                out.push(scalar(other).with_context(|| format!("key {key:?}"))?);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_from_object() {
        let v: Value = serde_json::from_str(r#"{"alpha": "2.5", "sizes": [10, 20], "resume": true, "spanning": false}"#).unwrap();
        let f = to_flags(&v, &[]).unwrap();
        assert_eq!(f, vec!["--alpha", "2.5", "--resume", "--sizes", "10,20"]);
        assert_eq!(to_flags(&v, &["sizes", "alpha"]).unwrap(), vec!["--resume"]);
    }

    #[test]
    fn rejects_non_objects() {
        assert!(to_flags(&Value::Array(vec![]), &[]).is_err());
    }
}
