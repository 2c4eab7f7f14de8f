//! Simulated users that correct the planned trajectory toward a known optimum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner::{CorrectionSource, Feedback};
use crate::trajectory::{Correction, Trajectory};

/// How the simulated user picks the timepoint to correct.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// The interior timepoint where planned and optimal differ the most.
    #[default]
    Largest,
    /// A random interior timepoint among those with substantial deviation.
    Anywhere,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimUserConfig {
    pub strategy: Strategy,
    pub seed: u64,
    /// Standard deviation of Gaussian noise added to the corrected configuration.
    pub noise: f64,
}

impl Default for SimUserConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Largest,
            seed: 0,
            noise: 0.0,
        }
    }
}

/// The user stops once no interior waypoint is farther than this from the optimum.
pub const DONE_THRESHOLD: f64 = 1e-3;

/// `Anywhere` picks among timepoints whose deviation is at least this fraction of the largest.
pub const ANYWHERE_FRACTION: f64 = 0.25;

/// Picks a correction of `planned` toward `optimal`, or reports that the
/// user is satisfied.
///
/// Deviations are Euclidean distances between corresponding waypoints;
/// ties in `Largest` go to the earliest timepoint.
pub fn simulate_correction<R: Rng + ?Sized>(
    optimal: &Trajectory,
    planned: &Trajectory,
    cfg: &SimUserConfig,
    rng: &mut R,
) -> Result<Feedback> {
    optimal.check_same_shape(planned)?;
    if !(cfg.noise.is_finite() && cfg.noise >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "noise",
            reason: format!("must be non-negative, got {}", cfg.noise),
        });
    }
    let horizon = planned.horizon();
    let deviations: Vec<f64> = (1..horizon)
        .map(|t| optimal.squared_deviation(planned, t).sqrt())
        .collect();

    let (mut best, mut largest) = (0, f64::NEG_INFINITY);
    for (i, &d) in deviations.iter().enumerate() {
        if d > largest {
            best = i;
            largest = d;
        }
    }
    if largest < DONE_THRESHOLD {
        return Ok(Feedback::Done);
    }

    let index = match cfg.strategy {
        Strategy::Largest => best,
        Strategy::Anywhere => {
            let cutoff = ANYWHERE_FRACTION * largest;
            let candidates: Vec<usize> = deviations
                .iter()
                .enumerate()
                .filter(|(_, d)| **d >= cutoff)
                .map(|(i, _)| i)
                .collect();
            candidates[rng.random_range(0..candidates.len())]
        }
    };
    let t = index + 1;
    let mut q = optimal.waypoint(t).to_vec();
    if cfg.noise > 0.0 {
        for v in &mut q {
            let z: f64 = rng.sample(StandardNormal);
            *v += cfg.noise * z;
        }
    }
    Ok(Feedback::Correct(Correction::new(t, q)))
}

/// A [`CorrectionSource`] that corrects toward a fixed optimal trajectory.
#[derive(Debug, Clone)]
pub struct SimulatedUser {
    optimal: Trajectory,
    cfg: SimUserConfig,
    rng: ChaCha8Rng,
}

impl SimulatedUser {
    pub fn new(optimal: Trajectory, cfg: SimUserConfig) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Self { optimal, cfg, rng }
    }
}

impl CorrectionSource for SimulatedUser {
    fn feedback(&mut self, planned: &Trajectory) -> Result<Feedback> {
        simulate_correction(&self.optimal, planned, &self.cfg, &mut self.rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(values: &[f64]) -> Trajectory {
        Trajectory::from_flat(1, values.to_vec()).unwrap()
    }

    fn largest() -> SimUserConfig {
        SimUserConfig::default()
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(0)
    }

    #[test]
    fn identical_is_done() {
        let xi = line(&[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(simulate_correction(&xi, &xi, &largest(), &mut rng()).unwrap(), Feedback::Done);
    }

    #[test]
    fn largest_picks_argmax() {
        let opt = line(&[0.0, 0.1, 0.9, 0.3, 0.0]);
        let planned = line(&[0.0; 5]);
        let fb = simulate_correction(&opt, &planned, &largest(), &mut rng()).unwrap();
        assert_eq!(fb, Feedback::Correct(Correction::new(2, vec![0.9])));
    }

    #[test]
    fn ties_go_to_smaller_index() {
        let opt = line(&[0.0, 0.5, -0.5, 0.0]);
        let planned = line(&[0.0; 4]);
        let fb = simulate_correction(&opt, &planned, &largest(), &mut rng()).unwrap();
        assert_eq!(fb, Feedback::Correct(Correction::new(1, vec![0.5])));
    }

    #[test]
    fn done_threshold_boundary() {
        let planned = line(&[0.0; 4]);
        let just_below = line(&[0.0, 0.0, DONE_THRESHOLD * (1.0 - 1e-9), 0.0]);
        let at = line(&[0.0, 0.0, DONE_THRESHOLD, 0.0]);
        assert_eq!(
            simulate_correction(&just_below, &planned, &largest(), &mut rng()).unwrap(),
            Feedback::Done
        );
        assert!(matches!(
            simulate_correction(&at, &planned, &largest(), &mut rng()).unwrap(),
            Feedback::Correct(_)
        ));
    }

    #[test]
    fn endpoints_never_selected() {
        let opt = line(&[5.0, 0.2, 0.0, 5.0]);
        let planned = line(&[0.0; 4]);
        let fb = simulate_correction(&opt, &planned, &largest(), &mut rng()).unwrap();
        assert_eq!(fb, Feedback::Correct(Correction::new(1, vec![0.2])));
    }

    #[test]
    fn anywhere_is_seeded_and_restricted() {
        let opt = line(&[0.0, 0.1, 1.0, 0.5, 0.01, 0.3, 0.0]);
        let planned = line(&[0.0; 7]);
        let cfg = SimUserConfig {
            strategy: Strategy::Anywhere,
            seed: 11,
            noise: 0.0,
        };
        let mut a = SimulatedUser::new(opt.clone(), cfg.clone());
        let mut b = SimulatedUser::new(opt.clone(), cfg);
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..200 {
            let fa = a.feedback(&planned).unwrap();
            assert_eq!(fa, b.feedback(&planned).unwrap());
            let Feedback::Correct(c) = fa else { panic!() };
            assert_eq!(c.q, opt.waypoint(c.t));
            seen.insert(c.t);
        }
        // Deviations 0.1 and 0.01 fall under a quarter of the 1.0 maximum.
        assert_eq!(seen.into_iter().collect::<Vec<_>>(), vec![2, 3, 5]);
    }

    #[test]
    fn noise_perturbs_only_when_enabled() {
        let opt = line(&[0.0, 1.0, 0.0]);
        let planned = line(&[0.0; 3]);
        let cfg = SimUserConfig {
            noise: 0.1,
            ..largest()
        };
        let Feedback::Correct(c) = simulate_correction(&opt, &planned, &cfg, &mut rng()).unwrap() else {
            panic!()
        };
        assert_ne!(c.q[0], 1.0);
        assert!((c.q[0] - 1.0).abs() < 1.0);
        let bad = SimUserConfig { noise: -1.0, ..largest() };
        assert!(simulate_correction(&opt, &planned, &bad, &mut rng()).is_err());
    }

    #[test]
    fn length_mismatch() {
        assert!(simulate_correction(&line(&[0.0; 4]), &line(&[0.0; 5]), &largest(), &mut rng()).is_err());
    }
}
