//! Layered configuration: embedded defaults, then an optional TOML file,
//! then `--set key=value` overrides. Every key is a dotted path
//! `section.name` and must already exist in the defaults.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use toml::Value;

pub const DEFAULTS_NAME: &str = "device.defaults";
const DEFAULTS: &str = include_str!("../profiles/device.defaults.toml");

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    values: BTreeMap<String, Value>,
    /// Seed given in a config file as a top-level `seed = N`.
    pub file_seed: Option<u64>,
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut Vec<(String, Value)>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            _ => out.push((key, v.clone())),
        }
    }
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::String(_) => "string",
        Value::Integer(_) => "integer",
        Value::Float(_) => "float",
        Value::Boolean(_) => "boolean",
        Value::Datetime(_) => "datetime",
        Value::Array(_) => "array",
        Value::Table(_) => "table",
    }
}

/// Accepts `new` in place of `old` when the types agree; integers widen to
/// floats, including inside arrays.
fn coerce(old: &Value, new: Value) -> std::result::Result<Value, String> {
    match (old, new) {
        (Value::Float(_), Value::Integer(i)) => Ok(Value::Float(i as f64)),
        (Value::Array(o), Value::Array(n)) => {
            let Some(proto) = o.first() else {
                return Ok(Value::Array(n));
            };
            n.into_iter().map(|x| coerce(proto, x)).collect::<std::result::Result<_, _>>().map(Value::Array)
        }
        (o, n) if std::mem::discriminant(o) == std::mem::discriminant(&n) => Ok(n),
        (o, n) => Err(format!("expected {}, found {}", type_name(o), type_name(&n))),
    }
}

/// 1-based line of `leaf = ...` inside `[section]`, for error messages.
fn locate(text: &str, key: &str) -> Option<usize> {
    let (section, leaf) = key.rsplit_once('.').unwrap_or(("", key));
    let mut current = String::new();
    for (i, line) in text.lines().enumerate() {
        let l = line.trim();
        if let Some(s) = l.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            current = s.trim().to_string();
        } else if current == section {
            let name = l.split('=').next().unwrap_or("").trim().trim_matches('"');
            if name == leaf || (section.is_empty() && format!("{current}.{name}") == key) {
                return Some(i + 1);
            }
        }
    }
    None
}

impl Config {
    pub fn defaults() -> Self {
        let table: toml::Table = DEFAULTS.parse().expect("embedded defaults parse");
        let mut flat = Vec::new();
        flatten("", &table, &mut flat);
        Self {
            values: flat.into_iter().collect(),
            file_seed: None,
        }
    }

    fn set(&mut self, key: &str, value: Value, location: &str) -> Result<()> {
        let Some(old) = self.values.get(key) else {
            bail!("{location}: unknown key `{key}`");
        };
        let v = coerce(old, value).map_err(|m| anyhow!("{location}: key `{key}`: {m}"))?;
        self.values.insert(key.to_string(), v);
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        self.apply_str(&text, &path.display().to_string())
    }

    pub fn apply_str(&mut self, text: &str, origin: &str) -> Result<()> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
            let at = e
                .span()
                .map(|s| format!(":{}", text[..s.start].lines().count().max(1)))
                .unwrap_or_default();
            anyhow!("{origin}{at}: {}", e.message())
        })?;
        let mut flat = Vec::new();
        flatten("", &table, &mut flat);
        for (key, value) in flat {
            let location = match locate(text, &key) {
                Some(line) => format!("{origin}:{line}"),
                None => origin.to_string(),
            };
            if key == "seed" {
                let seed = value
                    .as_integer()
                    .filter(|s| *s >= 0)
                    .ok_or_else(|| anyhow!("{location}: key `seed`: expected a nonnegative integer"))?;
                self.file_seed = Some(seed as u64);
                continue;
            }
            self.set(&key, value, &location)?;
        }
        Ok(())
    }

    /// Applies `key=value`; the value is parsed as a TOML value, falling
    /// back to a bare string.
    pub fn apply_override(&mut self, arg: &str) -> Result<()> {
        let location = format!("--set {arg}");
        let (key, raw) = arg
            .split_once('=')
            .ok_or_else(|| anyhow!("{location}: expected key=value"))?;
        let key = key.trim();
        let raw = raw.trim();
        let value = format!("v = {raw}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| Value::String(raw.to_string()));
        self.set(key, value, &location)
    }

    fn get(&self, key: &str) -> Result<&Value> {
        self.values
            .get(key)
            .ok_or_else(|| anyhow!("internal: key `{key}` missing from defaults"))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        match self.get(key)? {
            Value::Float(x) => Ok(*x),
            Value::Integer(i) => Ok(*i as f64),
            v => bail!("key `{key}`: expected number, found {}", type_name(v)),
        }
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        match self.get(key)? {
            Value::Integer(i) if *i >= 0 => Ok(*i as u64),
            v => bail!("key `{key}`: expected nonnegative integer, found {v}"),
        }
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        Ok(self.u64(key)? as usize)
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        self.get(key)?
            .as_bool()
            .ok_or_else(|| anyhow!("key `{key}`: expected boolean"))
    }

    pub fn str(&self, key: &str) -> Result<&str> {
        self.get(key)?
            .as_str()
            .ok_or_else(|| anyhow!("key `{key}`: expected string"))
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        let arr = self
            .get(key)?
            .as_array()
            .ok_or_else(|| anyhow!("key `{key}`: expected array"))?;
        arr.iter()
            .map(|v| match v {
                Value::Float(x) => Ok(*x),
                Value::Integer(i) => Ok(*i as f64),
                _ => bail!("key `{key}`: expected an array of numbers"),
            })
            .collect()
    }

    pub fn pair(&self, key: &str) -> Result<(f64, f64)> {
        match self.f64_list(key)?.as_slice() {
            [a, b] => Ok((*a, *b)),
            _ => bail!("key `{key}`: expected two numbers"),
        }
    }

    /// Snapshot of the keys under the given sections, as nested JSON.
    pub fn snapshot(&self, sections: &[&str]) -> serde_json::Value {
        let mut root = serde_json::Map::new();
        for (key, v) in &self.values {
            let (section, leaf) = key.split_once('.').unwrap_or(("", key));
            if !sections.contains(&section) {
                continue;
            }
            let entry = root
                .entry(section.to_string())
                .or_insert_with(|| serde_json::Value::Object(Default::default()));
            if let serde_json::Value::Object(m) = entry {
                m.insert(leaf.to_string(), serde_json::to_value(v).unwrap_or_default());
            }
        }
        serde_json::Value::Object(root)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_flattened() {
        let c = Config::defaults();
        assert_eq!(c.f64("cqed.g").unwrap(), 6.81);
        assert_eq!(c.usize("nuclear.max_lag").unwrap(), 600);
        assert_eq!(c.pair("loss_budget.filter_setup").unwrap(), (0.5, 0.6));
    }

    #[test]
    fn overrides_are_type_checked() {
        let mut c = Config::defaults();
        c.apply_override("cqed.g=7").unwrap();
        assert_eq!(c.f64("cqed.g").unwrap(), 7.0);
        c.apply_override("pulse_invert.family=ten_peak").unwrap();
        assert_eq!(c.str("pulse_invert.family").unwrap(), "ten_peak");
        let e = c.apply_override("nuclear.max_lag=1.5").unwrap_err();
        assert!(e.to_string().contains("nuclear.max_lag"), "{e}");
        let e = c.apply_override("cqed.gg=1").unwrap_err();
        assert!(e.to_string().contains("unknown key `cqed.gg`"), "{e}");
    }

    #[test]
    fn file_errors_carry_line_numbers() {
        let mut c = Config::defaults();
        let text = "seed = 4\n[cqed]\ng = 7.0\nkappa = 3\n";
        let e = c.apply_str(text, "run.toml").unwrap_err().to_string();
        assert!(e.starts_with("run.toml:4: unknown key `cqed.kappa`"), "{e}");
        c.apply_str("seed = 4\n[cqed]\ng = 7.0\n", "run.toml").unwrap();
        assert_eq!(c.file_seed, Some(4));
        assert_eq!(c.f64("cqed.g").unwrap(), 7.0);
        let e = c.apply_str("[cqed\n", "bad.toml").unwrap_err().to_string();
        assert!(e.starts_with("bad.toml:1"), "{e}");
    }
}
