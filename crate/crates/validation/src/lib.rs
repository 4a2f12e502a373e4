//! Reporting helpers for the acceptance suite in `tests/acceptance.rs`.

use std::fmt::Write;

/// One checked clause of a criterion.
#[derive(Debug, Clone)]
pub struct Check {
    pub label: String,
    pub value: f64,
    pub limit: f64,
    pub ok: bool,
}

/// Outcome of a numbered criterion.
#[derive(Debug, Clone, Default)]
pub struct Verdict {
    pub id: u32,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl Verdict {
    pub fn new(id: u32) -> Self {
        Self {
            id,
            ..Self::default()
        }
    }

    /// Records `value < limit`.
    pub fn below(&mut self, label: &str, value: f64, limit: f64) -> &mut Self {
        self.checks.push(Check {
            label: label.into(),
            value,
            limit,
            ok: value < limit,
        });
        self
    }

    /// Records a boolean clause; `value` is reported for context.
    pub fn holds(&mut self, label: &str, ok: bool, value: f64) -> &mut Self {
        self.checks.push(Check {
            label: label.into(),
            value,
            limit: f64::NAN,
            ok,
        });
        self
    }

    pub fn note(&mut self, s: impl Into<String>) -> &mut Self {
        self.notes.push(s.into());
        self
    }

    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.ok)
    }

    /// The single pass/fail line, followed by indented detail lines.
    pub fn render(&self) -> String {
        let mut out = format!(
            "criterion {}: {}",
            self.id,
            if self.passed() { "PASS" } else { "FAIL" }
        );
        for c in &self.checks {
            let mark = if c.ok { "ok  " } else { "FAIL" };
            if c.limit.is_nan() {
                let _ = write!(out, "\n    [{mark}] {} ({:.6e})", c.label, c.value);
            } else {
                let _ = write!(out, "\n    [{mark}] {} = {:.6e} (limit {:.1e})", c.label, c.value, c.limit);
            }
        }
        for n in &self.notes {
            let _ = write!(out, "\n    note: {n}");
        }
        out
    }
}

/// `|a − b| / |b|`.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_requires_every_check() {
        let mut v = Verdict::new(1);
        assert!(!v.passed());
        v.below("a", 0.5, 1.0);
        assert!(v.passed());
        v.holds("b", false, 0.0);
        assert!(!v.passed());
        assert!(v.render().starts_with("criterion 1: FAIL"));
    }
}
