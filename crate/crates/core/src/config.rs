//! Run configuration: a line-oriented `key = value` format with `[command]`
//! sections and `#` comments, plus the small value grammars shared with the
//! command line.
//!
//! ```text
//! format_version = 1
//! [symbol]
//! n = 3
//! m = 0..4
//! xi = 0:0.5:4
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::line::LineFunction;

pub const FORMAT_VERSION: u32 = 1;
/// Upper bound on the length of any expanded range or grid.
pub const MAX_EXPANSION: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Command {
    Symbol,
    Indicial,
    CheckLemma,
    Green,
    ExtensionValidate,
    Glue,
    Solve,
    Accept,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Symbol,
        Command::Indicial,
        Command::CheckLemma,
        Command::Green,
        Command::ExtensionValidate,
        Command::Glue,
        Command::Solve,
        Command::Accept,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Command::Symbol => "symbol",
            Command::Indicial => "indicial",
            Command::CheckLemma => "check-lemma",
            Command::Green => "green",
            Command::ExtensionValidate => "extension-validate",
            Command::Glue => "glue",
            Command::Solve => "solve",
            Command::Accept => "accept",
        }
    }

    /// Keys accepted in this command's section.
    pub fn keys(&self) -> &'static [(&'static str, Kind)] {
        use Kind::*;
        match self {
            Command::Symbol => &[("n", Int), ("gamma", Float), ("m", IntRange), ("xi", FloatGrid)],
            Command::Indicial => &[
                ("n", Int),
                ("gamma", Float),
                ("m", IntRange),
                ("count", Int),
                ("tol", Float),
            ],
            Command::CheckLemma => &[("n", IntRange), ("m_max", Int), ("j_max", Int)],
            Command::Green => &[
                ("n", Int),
                ("m", Int),
                ("input", Text),
                ("delta", Float),
                ("delta0", Float),
            ],
            Command::ExtensionValidate => {
                &[("n", IntRange), ("m", IntRange), ("xi", FloatGrid), ("phi_grid", Int)]
            }
            Command::Glue => &[
                ("n", Int),
                ("epsilon", FloatList),
                ("mu", Float),
                ("convention", Choice(&["centered", "uncentered"])),
                ("delta", Float),
                ("ds", Float),
                ("pad", Float),
                ("perturbation", Float),
                ("sweep", Flag),
            ],
            Command::Solve => &[
                ("n", Int),
                ("L", Float),
                ("mmax", Int),
                ("ns", Int),
                ("amp", Float),
                ("mode", Int),
                ("method", Choice(&["fixed-point", "newton"])),
                ("tol", Float),
                ("max_iter", Int),
            ],
            Command::Accept => &[("only", IntRange)],
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown command `{s}`")))
    }
}

/// Keys valid outside any section and in every command.
pub const COMMON_KEYS: [(&str, Kind); 3] =
    [("format_version", Kind::Int), ("output", Kind::Text), ("threads", Kind::Int)];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Int,
    Float,
    /// `a..b` (inclusive), `a,b,c` or a single integer.
    IntRange,
    /// `a:step:b` (inclusive), a comma list or a single value.
    FloatGrid,
    FloatList,
    Text,
    Flag,
    Choice(&'static [&'static str]),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

/// Raw parse result: entries per section, `""` for the preamble.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub sections: BTreeMap<String, Vec<Entry>>,
}

pub fn parse_config_text(text: &str) -> Result<ConfigFile> {
    let mut file = ConfigFile::default();
    let mut section = String::new();
    file.sections.insert(section.clone(), Vec::new());
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| Error::Parse { line, message: "unterminated section header".into() })?
                .trim();
            if name.parse::<Command>().is_err() {
                return Err(Error::Parse { line, message: format!("unknown section `{name}`") });
            }
            section = name.to_string();
            file.sections.entry(section.clone()).or_default();
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| Error::Parse { line, message: "expected `key = value`".into() })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(Error::Parse { line, message: format!("malformed key `{key}`") });
        }
        let entries = file.sections.get_mut(&section).expect("section exists");
        if entries.iter().any(|e| e.key == key) {
            return Err(Error::Parse { line, message: format!("duplicate key `{key}`") });
        }
        entries.push(Entry { key: key.to_string(), value: value.to_string(), line });
    }
    Ok(file)
}

fn validation(key: &str, message: impl Into<String>) -> Error {
    Error::Validation { key: key.to_string(), message: message.into() }
}

pub fn parse_int_range(text: &str) -> Result<Vec<usize>> {
    let t = text.trim();
    let int = |s: &str| {
        s.trim().parse::<usize>().map_err(|_| Error::invalid(format!("`{s}` is not a non-negative integer")))
    };
    if let Some((a, b)) = t.split_once("..") {
        let (a, b) = (int(a)?, int(b.strip_prefix('=').unwrap_or(b))?);
        if b < a {
            return Err(Error::invalid(format!("empty range {a}..{b}")));
        }
        if b - a >= MAX_EXPANSION {
            return Err(Error::invalid(format!("range {a}..{b} too long")));
        }
        return Ok((a..=b).collect());
    }
    let list = t.split(',').map(int).collect::<Result<Vec<_>>>()?;
    if list.len() > MAX_EXPANSION {
        return Err(Error::invalid("list too long"));
    }
    Ok(list)
}

fn float(s: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| Error::invalid(format!("`{s}` is not a number")))?;
    if !v.is_finite() {
        return Err(Error::invalid(format!("`{s}` is not finite")));
    }
    Ok(v)
}

pub fn parse_float_list(text: &str) -> Result<Vec<f64>> {
    let list = text.split(',').map(float).collect::<Result<Vec<_>>>()?;
    if list.len() > MAX_EXPANSION {
        return Err(Error::invalid("list too long"));
    }
    Ok(list)
}

/// `a:step:b` includes `b` when it lies on the grid (to rounding).
pub fn parse_float_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [a, step, b] => {
            let (a, step, b) = (float(a)?, float(step)?, float(b)?);
            if !(step > 0.0) || b < a {
                return Err(Error::invalid(format!("grid {text} is empty or has non-positive step")));
            }
            let count = ((b - a) / step * (1.0 + 1e-12) + 1e-9).floor();
            if !(count < MAX_EXPANSION as f64) {
                return Err(Error::invalid(format!("grid {text} too long")));
            }
            Ok((0..=count as usize).map(|k| a + k as f64 * step).collect())
        }
        [_] => parse_float_list(text),
        _ => Err(Error::invalid(format!("grid `{text}` must be a:step:b"))),
    }
}

/// A validated value.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(usize),
    Float(f64),
    Ints(Vec<usize>),
    Floats(Vec<f64>),
    Text(String),
    Flag(bool),
}

fn parse_value(key: &str, kind: Kind, raw: &str) -> Result<Value> {
    let wrap = |e: Error| match e {
        Error::InvalidInput(m) => validation(key, m),
        other => other,
    };
    Ok(match kind {
        Kind::Int => Value::Int(
            raw.trim().parse().map_err(|_| validation(key, format!("`{raw}` is not an integer")))?,
        ),
        Kind::Float => Value::Float(float(raw).map_err(wrap)?),
        Kind::IntRange => Value::Ints(parse_int_range(raw).map_err(wrap)?),
        Kind::FloatGrid => Value::Floats(parse_float_grid(raw).map_err(wrap)?),
        Kind::FloatList => Value::Floats(parse_float_list(raw).map_err(wrap)?),
        Kind::Text => Value::Text(raw.to_string()),
        Kind::Flag => Value::Flag(match raw.trim() {
            "" | "true" | "1" | "yes" => true,
            "false" | "0" | "no" => false,
            other => return Err(validation(key, format!("`{other}` is not a boolean"))),
        }),
        Kind::Choice(options) => {
            if !options.contains(&raw.trim()) {
                return Err(validation(key, format!("`{raw}` is not one of {options:?}")));
            }
            Value::Text(raw.trim().to_string())
        }
    })
}

/// Range rules that go beyond the syntax of a value.
fn check_rules(command: Command, key: &str, value: &Value) -> Result<()> {
    let ints = |v: &Value| match v {
        Value::Int(i) => vec![*i],
        Value::Ints(i) => i.clone(),
        _ => vec![],
    };
    let floats = |v: &Value| match v {
        Value::Float(x) => vec![*x],
        Value::Floats(x) => x.clone(),
        _ => vec![],
    };
    match key {
        "n" if ints(value).iter().any(|&n| !(2..=64).contains(&n)) => {
            Err(validation(key, "dimension must lie in 2..=64"))
        }
        "epsilon" if floats(value).iter().any(|&e| !(e > 0.0 && e < 0.25)) => {
            Err(validation(key, "epsilon must lie in (0, 0.25)"))
        }
        "tol" | "ds" | "L" | "delta" | "delta0" if floats(value).iter().any(|&x| x <= 0.0) => {
            Err(validation(key, "must be positive"))
        }
        "mu" if floats(value).iter().any(|&x| x >= 0.0) => Err(validation(key, "must be negative")),
        "format_version" if ints(value) != vec![FORMAT_VERSION as usize] => {
            Err(validation(key, format!("only version {FORMAT_VERSION} is supported")))
        }
        "only" if ints(value).iter().any(|&c| !(1..=10).contains(&c)) => {
            Err(validation(key, "criteria are numbered 1..=10"))
        }
        "threads" if ints(value) == vec![0] => Err(validation(key, "must be at least 1")),
        "ns" if command == Command::Solve && ints(value).iter().any(|&x| x < 4) => {
            Err(validation(key, "need at least 4 samples"))
        }
        _ => Ok(()),
    }
}

/// A fully validated configuration for one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub format_version: u32,
    /// Raw text of every set key, in key order, for output headers.
    pub raw: BTreeMap<String, String>,
    pub values: BTreeMap<String, Value>,
}

impl RunConfig {
    /// Validates raw `key -> value` pairs for `command`; unknown keys are rejected.
    pub fn new(command: Command, raw: BTreeMap<String, String>) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (key, text) in &raw {
            let kind = command
                .keys()
                .iter()
                .chain(COMMON_KEYS.iter())
                .find(|(k, _)| k == key)
                .map(|(_, kind)| *kind)
                .ok_or_else(|| validation(key, format!("unknown key for `{command}`")))?;
            let value = parse_value(key, kind, text)?;
            check_rules(command, key, &value)?;
            values.insert(key.clone(), value);
        }
        Ok(RunConfig { command, format_version: FORMAT_VERSION, raw, values })
    }

    /// Merges the preamble and the command's section of a config file, then
    /// applies `overrides` (command-line flags) on top.
    pub fn from_file(
        command: Command,
        file: &ConfigFile,
        overrides: &BTreeMap<String, String>,
    ) -> Result<Self> {
        for (section, entries) in &file.sections {
            let cmd = if section.is_empty() { None } else { Some(section.parse::<Command>()?) };
            for e in entries {
                let known = COMMON_KEYS.iter().any(|(k, _)| *k == e.key)
                    || cmd.is_some_and(|c| c.keys().iter().any(|(k, _)| *k == e.key));
                if !known {
                    return Err(validation(&e.key, format!("unknown key on line {}", e.line)));
                }
            }
        }
        let mut raw = BTreeMap::new();
        for section in ["", command.name()] {
            for e in file.sections.get(section).into_iter().flatten() {
                raw.insert(e.key.clone(), e.value.clone());
            }
        }
        raw.extend(overrides.iter().map(|(k, v)| (k.clone(), v.clone())));
        Self::new(command, raw)
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.values.get(key)
    }

    pub fn int(&self, key: &str, default: usize) -> usize {
        match self.get(key) {
            Some(Value::Int(i)) => *i,
            _ => default,
        }
    }

    pub fn float(&self, key: &str, default: f64) -> f64 {
        match self.get(key) {
            Some(Value::Float(x)) => *x,
            _ => default,
        }
    }

    pub fn ints(&self, key: &str, default: &[usize]) -> Vec<usize> {
        match self.get(key) {
            Some(Value::Ints(v)) => v.clone(),
            Some(Value::Int(i)) => vec![*i],
            _ => default.to_vec(),
        }
    }

    pub fn floats(&self, key: &str, default: &[f64]) -> Vec<f64> {
        match self.get(key) {
            Some(Value::Floats(v)) => v.clone(),
            Some(Value::Float(x)) => vec![*x],
            _ => default.to_vec(),
        }
    }

    pub fn text(&self, key: &str) -> Option<&str> {
        match self.get(key) {
            Some(Value::Text(s)) => Some(s),
            _ => None,
        }
    }

    pub fn flag(&self, key: &str) -> bool {
        matches!(self.get(key), Some(Value::Flag(true)))
    }

    /// `# key = value` lines recording the configuration.
    pub fn header_lines(&self) -> Vec<String> {
        let mut out = vec![format!("# command = {}", self.command), format!("# format_version = {}", self.format_version)];
        out.extend(
            self.raw.iter().filter(|(k, _)| k.as_str() != "format_version").map(|(k, v)| format!("# {k} = {v}")),
        );
        out
    }
}

/// Reads `s,value` rows (optional header, `#` comments) on a uniform grid.
pub fn read_line_function_csv(text: &str, mode: usize) -> Result<LineFunction> {
    let mut s = Vec::new();
    let mut v = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = content.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(Error::Parse { line, message: format!("expected 2 columns, found {}", fields.len()) });
        }
        match (fields[0].parse::<f64>(), fields[1].parse::<f64>()) {
            (Ok(a), Ok(b)) if a.is_finite() && b.is_finite() => {
                s.push(a);
                v.push(b);
            }
            _ if s.is_empty() && fields[0] == "s" && fields[1] == "value" => {}
            _ => return Err(Error::Parse { line, message: format!("non-numeric row `{content}`") }),
        }
    }
    if s.len() < LineFunction::MIN_LEN {
        return Err(Error::Parse {
            line: text.lines().count(),
            message: format!("{} samples, need at least {}", s.len(), LineFunction::MIN_LEN),
        });
    }
    let ds = (s[s.len() - 1] - s[0]) / (s.len() - 1) as f64;
    if !(ds > 0.0 && ds.is_finite()) {
        return Err(Error::invalid("sample positions must increase"));
    }
    for (k, &sk) in s.iter().enumerate() {
        if (sk - (s[0] + k as f64 * ds)).abs() > 1e-6 * ds {
            return Err(Error::invalid(format!("sample {k} at s = {sk} is off the uniform grid")));
        }
    }
    LineFunction::new(s[0], ds, v, mode)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_and_grids() {
        assert_eq!(parse_int_range("0..4").unwrap(), vec![0, 1, 2, 3, 4]);
        assert_eq!(parse_int_range("3").unwrap(), vec![3]);
        assert_eq!(parse_int_range("1,4").unwrap(), vec![1, 4]);
        assert!(parse_int_range("4..1").is_err());
        assert!(parse_int_range("-1").is_err());
        let xi = parse_float_grid("0:0.5:4").unwrap();
        assert_eq!(xi.len(), 9);
        assert_eq!(xi[8], 4.0);
        assert_eq!(parse_float_grid("0:0.1:0.3").unwrap().len(), 4);
        assert!(parse_float_grid("0:0:1").is_err());
        assert!(parse_float_grid("0:1e-300:1").is_err());
        assert_eq!(parse_float_list("1e-1,5e-2,2.5e-2").unwrap(), vec![0.1, 0.05, 0.025]);
        assert!(parse_float_list("nan").is_err());
    }

    #[test]
    fn file_sections_and_errors() {
        let text = "format_version = 1\n# comment\n[symbol]\nn = 3\nm = 0..4 # trailing\n[glue]\nepsilon = 0.1\n";
        let file = parse_config_text(text).unwrap();
        let cfg = RunConfig::from_file(Command::Symbol, &file, &BTreeMap::new()).unwrap();
        assert_eq!(cfg.int("n", 0), 3);
        assert_eq!(cfg.ints("m", &[]).len(), 5);
        assert!(matches!(
            parse_config_text("[symbol]\nn 3\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(parse_config_text("[nope]\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_config_text("n = 1\nn = 2\n"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn unknown_key_is_named() {
        let file = parse_config_text("[symbol]\nfoo = 1\n").unwrap();
        match RunConfig::from_file(Command::Symbol, &file, &BTreeMap::new()) {
            Err(Error::Validation { key, .. }) => assert_eq!(key, "foo"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn flags_override_and_range_rules() {
        let file = parse_config_text("[glue]\nepsilon = 0.1\n").unwrap();
        let mut flags = BTreeMap::new();
        flags.insert("epsilon".to_string(), "0.05".to_string());
        let cfg = RunConfig::from_file(Command::Glue, &file, &flags).unwrap();
        assert_eq!(cfg.floats("epsilon", &[]), vec![0.05]);
        flags.insert("epsilon".to_string(), "0.5".to_string());
        match RunConfig::from_file(Command::Glue, &file, &flags) {
            Err(Error::Validation { key, .. }) => assert_eq!(key, "epsilon"),
            other => panic!("{other:?}"),
        }
        let empty = parse_config_text("").unwrap();
        let mut only_flags = BTreeMap::new();
        only_flags.insert("n".to_string(), "3".to_string());
        let cfg = RunConfig::from_file(Command::Symbol, &empty, &only_flags).unwrap();
        assert_eq!(cfg.int("n", 0), 3);
    }

    #[test]
    fn csv_reader() {
        let mut text = String::from("# h samples\ns,value\n");
        for k in 0..20 {
            text.push_str(&format!("{},{}\n", -1.0 + 0.1 * k as f64, k as f64));
        }
        let f = read_line_function_csv(&text, 1).unwrap();
        assert_eq!(f.len(), 20);
        assert!((f.ds - 0.1).abs() < 1e-12);
        assert_eq!(f.mode, 1);
        assert!(read_line_function_csv("s,value\n0,1\n", 0).is_err());
        let bad = text.replace("-0.5,5", "-0.45,5");
        assert!(read_line_function_csv(&bad, 0).is_err());
    }
}
