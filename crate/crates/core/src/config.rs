//! Bounds and constant values for bounded checking.
//!
//! The text format is line oriented and shared with scenario and manifest
//! headers:
//!
//! ```text
//! // comment
//! bound bloodPumpingTime 0 320
//! const SetBloodFlow 100
//! cap 1000000
//! ```

use std::collections::BTreeMap;

use thiserror::Error;

use crate::semantics::{Model, State, Ty, Value};

pub const DEFAULT_MAX_STATES: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("variable `{0}` of type NAT has no bound")]
    MissingBound(String),
    #[error("bound for `{var}` has lower {lo} above upper {hi}")]
    EmptyBound { var: String, lo: u64, hi: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckConfig {
    /// Inclusive bounds per natural-valued variable.
    pub bounds: BTreeMap<String, (u64, u64)>,
    /// Constant values as DSL expression text.
    pub consts: BTreeMap<String, String>,
    pub max_states: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            bounds: BTreeMap::new(),
            consts: BTreeMap::new(),
            max_states: DEFAULT_MAX_STATES,
        }
    }
}

impl CheckConfig {
    pub fn bound(mut self, var: &str, lo: u64, hi: u64) -> Self {
        self.bounds.insert(var.to_string(), (lo, hi));
        self
    }

    pub fn constant(mut self, name: &str, value: &str) -> Self {
        self.consts.insert(name.to_string(), value.to_string());
        self
    }

    /// Entries of `other` replace entries of `self`.
    pub fn merged(mut self, other: &CheckConfig) -> Self {
        self.bounds
            .extend(other.bounds.iter().map(|(k, v)| (k.clone(), *v)));
        self.consts
            .extend(other.consts.iter().map(|(k, v)| (k.clone(), v.clone())));
        if other.max_states != DEFAULT_MAX_STATES {
            self.max_states = other.max_states;
        }
        self
    }

    /// Parses the bounds-file format.
    pub fn parse(text: &str) -> Result<CheckConfig, ConfigError> {
        let mut cfg = CheckConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = strip_comment(raw);
            if line.is_empty() {
                continue;
            }
            if !cfg
                .apply_line(line)
                .map_err(|message| ConfigError::Syntax {
                    line: i + 1,
                    message,
                })?
            {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    message: format!("unknown directive `{line}`"),
                });
            }
        }
        Ok(cfg)
    }

    /// Applies a `bound`, `const` or `cap` line; `Ok(false)` if the line is
    /// some other directive.
    pub fn apply_line(&mut self, line: &str) -> Result<bool, String> {
        let mut words = line.split_whitespace();
        match words.next() {
            Some("bound") => {
                let parts: Vec<&str> = words.collect();
                let [var, lo, hi] = parts[..] else {
                    return Err("expected `bound <variable> <lo> <hi>`".into());
                };
                let lo: u64 = lo.parse().map_err(|_| format!("bad number `{lo}`"))?;
                let hi: u64 = hi.parse().map_err(|_| format!("bad number `{hi}`"))?;
                if lo > hi {
                    return Err(format!("empty bound {lo}..{hi}"));
                }
                self.bounds.insert(var.to_string(), (lo, hi));
                Ok(true)
            }
            Some("const") => {
                let name = words.next().ok_or("expected `const <name> <value>`")?;
                let value = words.collect::<Vec<_>>().join(" ");
                if value.is_empty() {
                    return Err("expected `const <name> <value>`".into());
                }
                self.consts.insert(name.to_string(), value);
                Ok(true)
            }
            Some("cap") => {
                let n = words.next().ok_or("expected `cap <states>`")?;
                self.max_states = n.parse().map_err(|_| format!("bad number `{n}`"))?;
                Ok(true)
            }
            _ => Ok(false),
        }
    }

    /// Renders in the bounds-file format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, (lo, hi)) in &self.bounds {
            out.push_str(&format!("bound {k} {lo} {hi}\n"));
        }
        for (k, v) in &self.consts {
            out.push_str(&format!("const {k} {v}\n"));
        }
        if self.max_states != DEFAULT_MAX_STATES {
            out.push_str(&format!("cap {}\n", self.max_states));
        }
        out
    }

    /// Checks that every natural-valued variable of `model` is bounded.
    pub fn validate(&self, model: &Model) -> Result<(), ConfigError> {
        for v in &model.vars {
            if mentions_nat(&v.ty) {
                match self.bounds.get(&v.name) {
                    None => return Err(ConfigError::MissingBound(v.name.clone())),
                    Some(&(lo, hi)) if lo > hi => {
                        return Err(ConfigError::EmptyBound {
                            var: v.name.clone(),
                            lo,
                            hi,
                        })
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    /// Every value of variable `var` within bounds, ascending.
    pub fn domain(&self, model: &Model, var: usize) -> Result<Vec<Value>, ConfigError> {
        let v = &model.vars[var];
        let bound = self.bounds.get(&v.name).copied();
        model
            .sig
            .values_of(&v.ty, bound)
            .ok_or_else(|| ConfigError::MissingBound(v.name.clone()))
    }

    pub fn value_in_bounds(&self, model: &Model, var: usize, value: &Value) -> bool {
        let Some(&(lo, hi)) = self.bounds.get(&model.vars[var].name) else {
            return true;
        };
        within(value, lo, hi)
    }

    /// Whether every bounded variable of `s` lies within its bound.
    pub fn in_bounds(&self, model: &Model, s: &State) -> bool {
        (0..model.vars.len()).all(|i| self.value_in_bounds(model, i, &s[i]))
    }
}

fn within(v: &Value, lo: u64, hi: u64) -> bool {
    match v {
        Value::Nat(n) => (lo..=hi).contains(n),
        Value::Func(_, vals) => vals.iter().all(|x| within(x, lo, hi)),
        _ => true,
    }
}

fn mentions_nat(ty: &Ty) -> bool {
    match ty {
        Ty::Nat => true,
        Ty::Func(d, r) => mentions_nat(d) || mentions_nat(r),
        Ty::Set(t) => mentions_nat(t),
        Ty::Bool | Ty::Enum(_) => false,
    }
}

/// Removes a trailing `//` or leading `#` comment and surrounding space.
pub(crate) fn strip_comment(line: &str) -> &str {
    let line = line.split("//").next().unwrap_or("");
    let line = line.trim();
    if line.starts_with('#') {
        ""
    } else {
        line
    }
}
