//! Factored symbolic beliefs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One factor: a belief over mutually exclusive symbolic values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateFactor {
    pub name: String,
    pub values: Vec<String>,
    pub belief: Vec<f64>,
}

impl StateFactor {
    /// Uniform belief over `values`.
    pub fn new(name: impl Into<String>, values: Vec<String>) -> Self {
        let m = values.len().max(1) as f64;
        let belief = vec![1.0 / m; values.len()];
        StateFactor {
            name: name.into(),
            values,
            belief,
        }
    }

    pub fn arity(&self) -> usize {
        self.values.len()
    }

    /// Index of the most likely value; ties go to the lowest index.
    pub fn logical(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.belief.iter().enumerate() {
            if p > self.belief[best] {
                best = i;
            }
        }
        best
    }

    /// One-hot encoding of [`StateFactor::logical`].
    pub fn logical_one_hot(&self) -> Vec<f64> {
        let l = self.logical();
        (0..self.arity()).map(|i| if i == l { 1.0 } else { 0.0 }).collect()
    }

    /// Scales the observed entry by `lambda` and the others by
    /// `(1 - lambda) / (m - 1)`, then renormalizes.
    pub fn update(&mut self, observed: usize, lambda: f64) -> Result<()> {
        let m = self.arity();
        if observed >= m {
            return Err(Error::Domain(format!(
                "observation {observed} out of range for factor {} with {m} values",
                self.name
            )));
        }
        if !(lambda > 0.5 && lambda <= 1.0) {
            return Err(Error::config(format!("confidence {lambda} outside (0.5, 1]")));
        }
        let other = if m > 1 { (1.0 - lambda) / (m - 1) as f64 } else { 0.0 };
        for (i, p) in self.belief.iter_mut().enumerate() {
            *p *= if i == observed { lambda } else { other };
        }
        let total: f64 = self.belief.iter().sum();
        if total > 0.0 && total.is_finite() {
            for p in &mut self.belief {
                *p /= total;
            }
        } else {
            for (i, p) in self.belief.iter_mut().enumerate() {
                *p = if i == observed { 1.0 } else { 0.0 };
            }
        }
        Ok(())
    }

    pub fn probability(&self, value: usize) -> f64 {
        self.belief.get(value).copied().unwrap_or(0.0)
    }
}

/// A discretized observation of one factor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub factor: String,
    pub value: usize,
}

impl Observation {
    pub fn new(factor: impl Into<String>, value: usize) -> Self {
        Observation {
            factor: factor.into(),
            value,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeliefState {
    pub factors: Vec<StateFactor>,
}

impl BeliefState {
    pub fn index(&self, name: &str) -> Option<usize> {
        self.factors.iter().position(|f| f.name == name)
    }

    pub fn factor(&self, name: &str) -> Option<&StateFactor> {
        self.factors.iter().find(|f| f.name == name)
    }

    pub fn update(&mut self, obs: &Observation, lambda: f64) -> Result<()> {
        let i = self
            .index(&obs.factor)
            .ok_or_else(|| Error::Domain(format!("no factor named {}", obs.factor)))?;
        self.factors[i].update(obs.value, lambda)
    }

    pub fn update_all(&mut self, observations: &[Observation], lambda: f64) -> Result<()> {
        for o in observations {
            self.update(o, lambda)?;
        }
        Ok(())
    }

    /// Logical value of every factor, in factor order.
    pub fn logical_state(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.logical()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary() -> StateFactor {
        StateFactor::new("goal", vec!["true".into(), "false".into()])
    }

    #[test]
    fn certainty_collapse() {
        let mut f = binary();
        f.update(1, 1.0).unwrap();
        assert_eq!(f.belief, vec![0.0, 1.0]);
        assert_eq!(f.logical(), 1);
        assert_eq!(f.logical_one_hot(), vec![0.0, 1.0]);
    }

    #[test]
    fn repeated_observations_contract() {
        let mut f = StateFactor::new("x", vec!["a".into(), "b".into(), "c".into()]);
        let mut last = f.probability(2);
        for _ in 0..20 {
            f.update(2, 0.7).unwrap();
            assert!(f.probability(2) >= last);
            last = f.probability(2);
        }
        assert!(last > 0.99);
    }

    #[test]
    fn weak_confidence_step() {
        let eps = 0.01;
        let mut f = binary();
        f.update(0, 0.5 + eps).unwrap();
        assert!((f.belief[0] - (0.5 + eps)).abs() < 1e-12);
        assert!((f.belief[1] - (0.5 - eps)).abs() < 1e-12);
    }

    #[test]
    fn conflicting_certain_observation_falls_back() {
        let mut f = binary();
        f.update(0, 1.0).unwrap();
        f.update(1, 1.0).unwrap();
        assert_eq!(f.belief, vec![0.0, 1.0]);
    }

    #[test]
    fn arity_and_confidence_errors() {
        let mut f = binary();
        assert!(f.update(2, 0.9).is_err());
        assert!(f.update(0, 0.4).is_err());
    }

    #[test]
    fn ties_break_low() {
        assert_eq!(binary().logical(), 0);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn stays_normalized(m in 2usize..6, obs in proptest::collection::vec((0usize..6, 0.501f64..1.0), 1..50)) {
                let mut f = StateFactor::new("f", (0..m).map(|i| i.to_string()).collect());
                for (o, lambda) in obs {
                    f.update(o % m, lambda).unwrap();
                    let sum: f64 = f.belief.iter().sum();
                    prop_assert!((sum - 1.0).abs() < 1e-9);
                    prop_assert!(f.belief.iter().all(|p| (0.0..=1.0).contains(p)));
                }
            }
        }
    }
}
