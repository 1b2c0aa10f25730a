//! Residual bookkeeping and pass/fail verdicts.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Which tolerance of a profile a residual is judged against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualClass {
    Algebraic,
    Differential,
    Curvature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub algebraic: f64,
    pub differential: f64,
    pub curvature: f64,
}

impl Tolerances {
    pub fn for_class(&self, class: ResidualClass) -> f64 {
        match class {
            ResidualClass::Algebraic => self.algebraic,
            ResidualClass::Differential => self.differential,
            ResidualClass::Curvature => self.curvature,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Default,
    Strict,
}

impl Profile {
    pub fn tolerances(self) -> Tolerances {
        match self {
            Profile::Default => Tolerances {
                algebraic: 1e-10,
                differential: 1e-2,
                curvature: 1e-2,
            },
            Profile::Strict => Tolerances {
                algebraic: 1e-12,
                differential: 1e-3,
                curvature: 1e-3,
            },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Profile::Default => "default",
            Profile::Strict => "strict",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "default" => Some(Profile::Default),
            "strict" => Some(Profile::Strict),
            _ => None,
        }
    }
}

/// Max and mean of a per-node residual, with the node where the max occurs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualField {
    pub max: f64,
    pub mean: f64,
    pub argmax_node: [usize; 2],
    pub class: ResidualClass,
}

/// Running max/mean over nodes. Nodes must be pushed in a fixed order for bitwise
/// reproducible means; the first node attaining the max wins.
#[derive(Debug, Clone)]
pub struct Accumulator {
    max: f64,
    sum: f64,
    count: usize,
    argmax: [usize; 2],
    class: ResidualClass,
}

impl Accumulator {
    pub fn new(class: ResidualClass) -> Self {
        Self {
            max: 0.0,
            sum: 0.0,
            count: 0,
            argmax: [0, 0],
            class,
        }
    }

    /// Records a nonnegative residual at node `(iu, iv)`; NaN is kept as the max.
    pub fn push(&mut self, value: f64, iu: usize, iv: usize) {
        if value.is_nan() {
            if !self.max.is_nan() {
                self.max = f64::NAN;
                self.argmax = [iu, iv];
            }
        } else if value > self.max {
            self.max = value;
            self.argmax = [iu, iv];
        }
        self.sum += value;
        self.count += 1;
    }

    pub fn finish(&self) -> ResidualField {
        ResidualField {
            max: self.max,
            mean: if self.count == 0 {
                0.0
            } else {
                self.sum / self.count as f64
            },
            argmax_node: self.argmax,
            class: self.class,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Residuals keyed by equation name, plus the verdict under a tolerance profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatReport {
    pub residuals: BTreeMap<String, ResidualField>,
    /// Numerical rank of each factor's block map, as `[min, max]` over nodes.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ranks: Vec<[usize; 2]>,
    pub tolerances: Tolerances,
    pub verdict: Verdict,
    pub failing: Vec<String>,
}

impl CompatReport {
    pub fn new(tolerances: Tolerances) -> Self {
        Self {
            residuals: BTreeMap::new(),
            ranks: Vec::new(),
            tolerances,
            verdict: Verdict::Pass,
            failing: Vec::new(),
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, field: ResidualField) {
        self.residuals.insert(name.into(), field);
        self.judge();
    }

    /// Merges another report's residuals (same tolerances assumed).
    pub fn merge(&mut self, other: CompatReport) {
        self.residuals.extend(other.residuals);
        if !other.ranks.is_empty() {
            self.ranks = other.ranks;
        }
        self.judge();
    }

    pub fn with_tolerances(mut self, tolerances: Tolerances) -> Self {
        self.tolerances = tolerances;
        self.judge();
        self
    }

    pub fn get(&self, name: &str) -> Option<&ResidualField> {
        self.residuals.get(name)
    }

    pub fn max(&self, name: &str) -> f64 {
        self.residuals.get(name).map_or(f64::NAN, |r| r.max)
    }

    /// Largest residual of a class.
    pub fn class_max(&self, class: ResidualClass) -> f64 {
        self.residuals
            .values()
            .filter(|r| r.class == class)
            .fold(0.0, |a, r| if r.max.is_nan() { f64::NAN } else { a.max(r.max) })
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    fn judge(&mut self) {
        self.failing = self
            .residuals
            .iter()
            .filter(|(_, r)| !(r.max <= self.tolerances.for_class(r.class)))
            .map(|(k, _)| k.clone())
            .collect();
        self.verdict = if self.failing.is_empty() {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accumulator_tracks_first_max_and_mean() {
        let mut a = Accumulator::new(ResidualClass::Algebraic);
        a.push(1.0, 0, 0);
        a.push(3.0, 1, 0);
        a.push(3.0, 2, 0);
        a.push(0.0, 0, 1);
        let f = a.finish();
        assert_eq!(f.max, 3.0);
        assert_eq!(f.mean, 1.75);
        assert_eq!(f.argmax_node, [1, 0]);
    }

    #[test]
    fn verdict_follows_tolerances() {
        let mut r = CompatReport::new(Profile::Default.tolerances());
        let mut a = Accumulator::new(ResidualClass::Differential);
        a.push(5e-3, 2, 2);
        r.insert("eq", a.finish());
        assert!(r.passed());
        let r = r.with_tolerances(Profile::Strict.tolerances());
        assert!(!r.passed());
        assert_eq!(r.failing, ["eq"]);
    }

    #[test]
    fn nan_fails() {
        let mut r = CompatReport::new(Profile::Default.tolerances());
        let mut a = Accumulator::new(ResidualClass::Algebraic);
        a.push(0.0, 0, 0);
        a.push(f64::NAN, 4, 1);
        let f = a.finish();
        assert_eq!(f.argmax_node, [4, 1]);
        r.insert("x", f);
        assert!(!r.passed());
    }
}
