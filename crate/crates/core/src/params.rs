use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Every named constant the embedding procedures use, as explicit runtime values.
///
/// Defaults are calibrated for maximum degree 3 at desk scale; they do not
/// satisfy the asymptotic hierarchy under which the procedures are guaranteed
/// to succeed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamSet {
    /// Degree parameter of extendability.
    pub d: usize,
    /// Expansion factor used when pruning to an expander.
    #[serde(rename = "D")]
    pub big_d: usize,
    /// Multiplier for the size of the last decomposition piece (`K m`).
    #[serde(rename = "K")]
    pub big_k: usize,
    /// Length of bare paths rerouted through the reservoir in the connected case.
    #[serde(rename = "L")]
    pub big_l: usize,
    /// Length of connecting paths through the connector set.
    pub ell: usize,
    pub m: usize,
    pub mu: f64,
    pub lambda: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub delta: f64,
    pub epsilon: f64,
}

impl Default for ParamSet {
    fn default() -> Self {
        ParamSet {
            d: 12,
            big_d: 24,
            big_k: 12,
            big_l: 12,
            ell: 4,
            m: 2,
            mu: 0.05,
            lambda: 0.05,
            gamma1: 1.0 / 360.0,
            gamma2: 1.0 / 15.0,
            delta: 0.1,
            epsilon: 0.01,
        }
    }
}

impl ParamSet {
    pub fn validate(&self) -> Result<()> {
        let ints = [
            ("d", self.d),
            ("D", self.big_d),
            ("K", self.big_k),
            ("L", self.big_l),
            ("ell", self.ell),
            ("m", self.m),
        ];
        for (name, v) in ints {
            if v == 0 {
                return Err(Error::Parameter(format!("{name} must be positive")));
            }
        }
        let rats = [
            ("mu", self.mu),
            ("lambda", self.lambda),
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("delta", self.delta),
            ("epsilon", self.epsilon),
        ];
        for (name, v) in rats {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Parameter(format!("{name} must lie in (0,1), got {v}")));
            }
        }
        if self.gamma1 >= self.gamma2 {
            return Err(Error::Parameter("gamma1 must be below gamma2".into()));
        }
        Ok(())
    }
}

/// What to do when a size or degree hypothesis of a procedure fails.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    /// Refuse to run.
    #[default]
    Enforce,
    /// Run anyway, record the failed hypothesis and verify the outcome afterwards.
    Audit,
}

/// How a property check was established.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum CheckMode {
    /// Every candidate set was covered by the search.
    Exact,
    /// The exact search ran out of budget; a randomized spot check was used.
    Sampled { trials: usize },
}

impl CheckMode {
    pub fn is_exact(&self) -> bool {
        matches!(self, CheckMode::Exact)
    }

    /// The weaker of two modes.
    pub fn meet(self, other: CheckMode) -> CheckMode {
        match (self, other) {
            (CheckMode::Exact, o) => o,
            (s, CheckMode::Exact) => s,
            (CheckMode::Sampled { trials: a }, CheckMode::Sampled { trials: b }) => {
                CheckMode::Sampled { trials: a.min(b) }
            }
        }
    }
}

/// Budgets for the exponential set searches behind every property check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// Node budget of the exact branch-and-bound search.
    pub node_budget: u64,
    /// Node budget used when the instance is small (m <= 3 or at most 14 vertices).
    pub small_node_budget: u64,
    /// Random trials of the fallback spot check.
    pub sample_trials: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            node_budget: 2_000_000,
            small_node_budget: 200_000_000,
            sample_trials: 200,
            seed: 0,
        }
    }
}

impl SearchConfig {
    /// A cheap configuration for inner loops.
    pub fn fast() -> Self {
        SearchConfig {
            node_budget: 20_000,
            small_node_budget: 20_000,
            sample_trials: 24,
            seed: 0,
        }
    }

    pub fn budget_for(&self, set_size: usize, host_size: usize) -> u64 {
        if set_size <= 3 || host_size <= 14 {
            self.small_node_budget.max(self.node_budget)
        } else {
            self.node_budget
        }
    }
}

/// Records hypotheses that failed under [`Policy::Audit`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Audit {
    pub failed: Vec<String>,
}

impl Audit {
    /// Check a hypothesis: error under `Enforce`, record under `Audit`.
    pub fn require(&mut self, policy: Policy, holds: bool, what: impl Into<String>) -> Result<()> {
        if holds {
            return Ok(());
        }
        let what = what.into();
        match policy {
            Policy::Enforce => Err(Error::Size(what)),
            Policy::Audit => {
                if !self.failed.contains(&what) {
                    self.failed.push(what);
                }
                Ok(())
            }
        }
    }

    pub fn note(&mut self, what: impl Into<String>) {
        let what = what.into();
        if !self.failed.contains(&what) {
            self.failed.push(what);
        }
    }

    pub fn extend(&mut self, other: &Audit) {
        for f in &other.failed {
            self.note(f.clone());
        }
    }
}

/// Compare reals produced from rational parameters with a little slack.
pub(crate) const EPS: f64 = 1e-9;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ParamSet::default().validate().unwrap();
        let p = ParamSet {
            gamma1: 0.5,
            gamma2: 0.25,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn params_from_partial_json() {
        let p: ParamSet = serde_json::from_str(r#"{"d": 20, "D": 40}"#).unwrap();
        assert_eq!(p.d, 20);
        assert_eq!(p.big_d, 40);
        assert_eq!(p.big_l, 12);
    }
}
