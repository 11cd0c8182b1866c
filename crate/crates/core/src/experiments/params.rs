use std::collections::BTreeMap;

use super::ExperimentError;

/// Resolved experiment parameters under dotted keys (`family.rho`).
///
/// Every key must be declared by the experiment's defaults; overrides of
/// unknown keys are rejected, and an override must parse as the same kind
/// (number, boolean, text) as its default.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSet {
    experiment: String,
    values: BTreeMap<String, String>,
}

#[derive(PartialEq)]
enum Kind {
    Number,
    Bool,
    Text,
}

fn kind_of(v: &str) -> Kind {
    if v == "true" || v == "false" {
        Kind::Bool
    } else if v.parse::<f64>().is_ok() {
        Kind::Number
    } else {
        Kind::Text
    }
}

impl ParamSet {
    pub fn new(experiment: &str, defaults: &[(&str, &str)]) -> Self {
        let values = defaults.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        Self { experiment: experiment.into(), values }
    }

    /// Splits `key=value`.
    pub fn parse_assignment(s: &str) -> Result<(String, String), ExperimentError> {
        match s.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
            _ => Err(ExperimentError::InvalidParameter {
                key: s.into(),
                value: String::new(),
                reason: "expected key=value".into(),
            }),
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ExperimentError> {
        let current = self.values.get(key).ok_or_else(|| ExperimentError::UnknownParameter {
            experiment: self.experiment.clone(),
            key: key.into(),
            known: self.values.keys().cloned().collect::<Vec<_>>().join(", "),
        })?;
        let want = kind_of(current);
        if want != Kind::Text && kind_of(value) != want {
            let reason = if want == Kind::Bool { "expected true or false" } else { "expected a number" };
            return Err(ExperimentError::InvalidParameter {
                key: key.into(),
                value: value.into(),
                reason: reason.into(),
            });
        }
        self.values.insert(key.into(), value.into());
        Ok(())
    }

    pub fn apply(&mut self, overrides: &BTreeMap<String, String>) -> Result<(), ExperimentError> {
        for (k, v) in overrides {
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    pub fn resolved(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    pub fn text(&self, key: &str) -> Result<&str, ExperimentError> {
        self.values.get(key).map(String::as_str).ok_or_else(|| ExperimentError::UnknownParameter {
            experiment: self.experiment.clone(),
            key: key.into(),
            known: String::new(),
        })
    }

    fn invalid(&self, key: &str, reason: &str) -> ExperimentError {
        ExperimentError::InvalidParameter {
            key: key.into(),
            value: self.values.get(key).cloned().unwrap_or_default(),
            reason: reason.into(),
        }
    }

    pub fn f64(&self, key: &str) -> Result<f64, ExperimentError> {
        self.text(key)?.parse::<f64>().map_err(|_| self.invalid(key, "expected a number"))
    }

    pub fn usize(&self, key: &str) -> Result<usize, ExperimentError> {
        self.text(key)?.parse::<usize>().map_err(|_| self.invalid(key, "expected a nonnegative integer"))
    }

    pub fn u64(&self, key: &str) -> Result<u64, ExperimentError> {
        self.text(key)?.parse::<u64>().map_err(|_| self.invalid(key, "expected a nonnegative integer"))
    }

    pub fn bool(&self, key: &str) -> Result<bool, ExperimentError> {
        match self.text(key)? {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(self.invalid(key, "expected true or false")),
        }
    }

    /// Comma-separated list of nonnegative integers, e.g. `10,15`.
    pub fn usize_list(&self, key: &str) -> Result<Vec<usize>, ExperimentError> {
        self.text(key)?
            .split(',')
            .map(|s| s.trim().parse::<usize>().map_err(|_| self.invalid(key, "expected a list like 10,15")))
            .collect()
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>, ExperimentError> {
        self.text(key)?
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| self.invalid(key, "expected a list like 1e-8,1e-4")))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ParamSet {
        ParamSet::new("x", &[("family.rho", "0.6"), ("csd.k", "10,15"), ("flag", "true"), ("source", "auto")])
    }

    #[test]
    fn unknown_key_is_an_error() {
        let mut p = sample();
        let e = p.set("family.roh", "0.5").unwrap_err();
        assert!(matches!(e, ExperimentError::UnknownParameter { .. }));
        assert!(e.to_string().contains("family.rho"));
    }

    #[test]
    fn kinds_are_checked() {
        let mut p = sample();
        assert!(p.set("family.rho", "abc").is_err());
        assert!(p.set("flag", "1").is_err());
        p.set("family.rho", "0.25").unwrap();
        p.set("source", "synthetic").unwrap();
        assert_eq!(p.f64("family.rho").unwrap(), 0.25);
        assert_eq!(p.usize_list("csd.k").unwrap(), vec![10, 15]);
        assert!(p.bool("flag").unwrap());
    }

    #[test]
    fn assignment_parsing() {
        assert_eq!(ParamSet::parse_assignment("a.b=3").unwrap(), ("a.b".into(), "3".into()));
        assert!(ParamSet::parse_assignment("novalue").is_err());
        assert!(ParamSet::parse_assignment("=3").is_err());
    }
}
