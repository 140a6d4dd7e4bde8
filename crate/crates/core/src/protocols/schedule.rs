use rand::Rng;

use crate::error::{Error, Result};

/// Accepted distance between a schedule's sum and its target.
pub const SCHEDULE_TOL: f64 = 1e-9;

/// What the per-round increments must add up to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleTarget {
    /// Bob sends all of his amplitude: Σε = 1.
    OneWay,
    /// Alice sends half of hers in total: Σε = 1/2.
    TwoWay,
}

impl ScheduleTarget {
    pub fn sum(self) -> f64 {
        match self {
            ScheduleTarget::OneWay => 1.0,
            ScheduleTarget::TwoWay => 0.5,
        }
    }
}

/// Per-round squared-amplitude increments ε₁..ε_N.
///
/// Inputs within [`SCHEDULE_TOL`] of the target are rescaled so the stored
/// increments hit it to rounding error.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    eps: Vec<f64>,
    target: ScheduleTarget,
}

impl Schedule {
    pub fn new(eps: Vec<f64>, target: ScheduleTarget) -> Result<Self> {
        if eps.is_empty() {
            return Err(Error::InvalidSchedule("schedule is empty".into()));
        }
        if let Some((i, e)) = eps.iter().enumerate().find(|(_, e)| !(e.is_finite() && **e > 0.0)) {
            return Err(Error::InvalidSchedule(format!(
                "entry {i} is {e}; every increment must be positive"
            )));
        }
        let sum: f64 = eps.iter().sum();
        if (sum - target.sum()).abs() > SCHEDULE_TOL {
            return Err(Error::InvalidSchedule(format!(
                "increments sum to {sum}, expected {} (tolerance {SCHEDULE_TOL:e})",
                target.sum()
            )));
        }
        let scale = target.sum() / sum;
        Ok(Self {
            eps: eps.into_iter().map(|e| e * scale).collect(),
            target,
        })
    }

    pub fn uniform(n: usize, target: ScheduleTarget) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSchedule("schedule needs at least one round".into()));
        }
        Self::new(vec![target.sum() / n as f64; n], target)
    }

    /// Random positive increments, each at least 5% of the largest draw.
    pub fn random<R: Rng + ?Sized>(n: usize, target: ScheduleTarget, rng: &mut R) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSchedule("schedule needs at least one round".into()));
        }
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        Self::new(raw.into_iter().map(|x| x * target.sum() / total).collect(), target)
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    pub fn len(&self) -> usize {
        self.eps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps.is_empty()
    }

    pub fn target(&self) -> ScheduleTarget {
        self.target
    }

    /// Prefix sums S₀ = 0, S₁ = ε₁, ..., S_N.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.eps.len() + 1);
        let mut acc = 0.0;
        out.push(acc);
        for e in &self.eps {
            acc += e;
            out.push(acc);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn validates_entries_and_sum() {
        assert!(Schedule::new(vec![0.25, 0.25], ScheduleTarget::TwoWay).is_ok());
        assert!(Schedule::new(vec![0.3, 0.2, 0.5], ScheduleTarget::OneWay).is_ok());
        assert!(Schedule::new(vec![], ScheduleTarget::OneWay).is_err());
        assert!(Schedule::new(vec![0.5, 0.0], ScheduleTarget::TwoWay).is_err());
        assert!(Schedule::new(vec![0.6, -0.1], ScheduleTarget::TwoWay).is_err());
        assert!(Schedule::new(vec![f64::NAN], ScheduleTarget::TwoWay).is_err());
        let err = Schedule::new(vec![0.3, 0.3], ScheduleTarget::TwoWay).unwrap_err();
        assert!(err.to_string().contains("sum to 0.6"));
    }

    #[test]
    fn near_target_sums_are_rescaled() {
        let s = Schedule::new(vec![0.25 + 4e-10, 0.25], ScheduleTarget::TwoWay).unwrap();
        let sum: f64 = s.eps().iter().sum();
        assert!((sum - 0.5).abs() < 1e-15);
    }

    #[test]
    fn uniform_and_random_hit_the_target() {
        let u = Schedule::uniform(4, ScheduleTarget::TwoWay).unwrap();
        assert_eq!(u.eps(), &[0.125; 4]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [1, 2, 5, 32] {
            let r = Schedule::random(n, ScheduleTarget::TwoWay, &mut rng).unwrap();
            assert_eq!(r.len(), n);
            assert!((r.cumulative()[n] - 0.5).abs() < 1e-14);
        }
        assert!(Schedule::uniform(0, ScheduleTarget::OneWay).is_err());
    }
}
