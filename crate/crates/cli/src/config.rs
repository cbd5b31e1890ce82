//! Run files: TOML tables keyed by command path whose entries become flags.
//!
//! ```toml
//! [mixture.plan]
//! catalog = "catalog.tsv"
//! real_fraction = 0.5
//!
//! [run]
//! steps = ["mixture plan", { command = "er fit", args = { out = "fit.json" } }]
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use toml::{Table, Value};

const GROUPS: &[&str] = &["prompts", "manifest", "mixture", "filter", "metrics", "er", "eval", "report", "run"];
/// Global options that consume the following token.
const VALUED_GLOBALS: &[&str] = &["--config", "--threads"];

/// Index just past the command path in `argv`, with the path itself.
pub fn command_path(argv: &[String]) -> Option<(usize, Vec<String>)> {
    let mut i = 1;
    while i < argv.len() {
        let tok = argv[i].as_str();
        if VALUED_GLOBALS.contains(&tok) {
            i += 2;
            continue;
        }
        if tok.starts_with('-') {
            i += 1;
            continue;
        }
        if !GROUPS.contains(&tok) {
            return None;
        }
        if tok == "run" {
            return Some((i + 1, vec![tok.to_string()]));
        }
        return match argv.get(i + 1) {
            Some(leaf) if !leaf.starts_with('-') => Some((i + 2, vec![tok.to_string(), leaf.clone()])),
            _ => None,
        };
    }
    None
}

pub fn config_arg(argv: &[String]) -> Option<PathBuf> {
    let mut it = argv.iter().skip(1);
    while let Some(tok) = it.next() {
        if tok == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(v) = tok.strip_prefix("--config=") {
            return Some(PathBuf::from(v));
        }
    }
    None
}

pub struct RunFile {
    pub path: PathBuf,
    table: Table,
}

impl RunFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading run file {}", path.display()))?;
        let table: Table = text
            .parse()
            .with_context(|| format!("parsing run file {}", path.display()))?;
        Ok(Self {
            path: path.to_path_buf(),
            table,
        })
    }

    fn section(&self, command: &[String]) -> Option<&Table> {
        let mut t = &self.table;
        for part in command {
            t = t.get(part)?.as_table()?;
        }
        Some(t)
    }

    /// Flags from the section of `command`, overlaid with `extra`.
    pub fn flags(&self, command: &[String], extra: Option<&Table>) -> Result<Vec<String>> {
        let mut merged = self.section(command).cloned().unwrap_or_default();
        // A group section also holds its leaf tables; only scalars are flags.
        merged.retain(|_, v| !v.is_table());
        if let Some(extra) = extra {
            merged.extend(extra.iter().map(|(k, v)| (k.clone(), v.clone())));
        }
        to_flags(&merged)
    }

    /// `[run] steps` as `(command path, per-step overrides)`.
    pub fn steps(&self) -> Result<Vec<(Vec<String>, Option<Table>)>> {
        let Some(steps) = self.section(&["run".to_string()]).and_then(|t| t.get("steps")) else {
            bail!("run file {} has no [run] steps", self.path.display());
        };
        let Some(steps) = steps.as_array() else {
            bail!("[run] steps must be an array");
        };
        steps
            .iter()
            .map(|step| {
                let (command, args) = match step {
                    Value::String(s) => (s.as_str(), None),
                    Value::Table(t) => {
                        let command = t
                            .get("command")
                            .and_then(Value::as_str)
                            .context("step table needs a `command` string")?;
                        let args = match t.get("args") {
                            None => None,
                            Some(Value::Table(a)) => Some(a.clone()),
                            Some(_) => bail!("step `args` must be a table"),
                        };
                        (command, args)
                    }
                    other => bail!("unsupported step entry {other}"),
                };
                let path: Vec<String> = command.split_whitespace().map(str::to_string).collect();
                if path.len() != 2 || !GROUPS.contains(&path[0].as_str()) || path[0] == "run" {
                    bail!("step command {command:?} is not a `group command` pair");
                }
                Ok((path, args))
            })
            .collect()
    }
}

fn scalar(key: &str, v: &Value) -> Result<String> {
    Ok(match v {
        Value::String(s) => s.clone(),
        Value::Integer(i) => i.to_string(),
        Value::Float(f) => f.to_string(),
        other => bail!("run file key {key:?}: unsupported value {other}"),
    })
}

fn to_flags(table: &Table) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for (key, value) in table {
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            Value::Boolean(true) => out.push(flag),
            Value::Boolean(false) => {}
            Value::Array(items) => {
                for item in items {
                    out.push(flag.clone());
                    out.push(scalar(key, item)?);
                }
            }
            v => {
                out.push(flag);
                out.push(scalar(key, v)?);
            }
        }
    }
    Ok(out)
}

/// Inserts run-file flags right after the command path so flags given on
/// the command line, which come later, take precedence.
pub fn expand(argv: Vec<String>) -> Result<(Vec<String>, Option<RunFile>)> {
    let Some(path) = config_arg(&argv) else {
        return Ok((argv, None));
    };
    let run_file = RunFile::load(&path)?;
    let Some((at, command)) = command_path(&argv) else {
        return Ok((argv, Some(run_file)));
    };
    if command[0] == "run" {
        return Ok((argv, Some(run_file)));
    }
    let flags = run_file.flags(&command, None)?;
    let mut out = argv;
    out.splice(at..at, flags);
    Ok((out, Some(run_file)))
}
