//! Coin schedules and multi-step evolution.
//!
//! Step indices are **1-based**. Step `s` takes the state from time `s − 1` to
//! time `s`; an n-period schedule uses `theta2` exactly when `s % n == 0`, so a
//! two-period run realises `[W(θ₂) W(θ₁)]^{t/2}` and a three-period run
//! `W(θ₂) W(θ₁) W(θ₁)` per period. A run whose length is not a multiple of `n`
//! simply stops mid-period.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::coin::{CoinAngle, InitialCoinState};
use crate::error::{Error, Result};
use crate::state::{PositionProfile, WalkerState, Window};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoinSchedule {
    Homogeneous {
        theta: CoinAngle,
    },
    NPeriod {
        n: u32,
        theta1: CoinAngle,
        theta2: CoinAngle,
    },
    Explicit {
        thetas: Vec<CoinAngle>,
    },
    SplitStep {
        theta1: CoinAngle,
        theta2: CoinAngle,
    },
}

/// The unitary applied at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOperator {
    Full(CoinAngle),
    Split(CoinAngle, CoinAngle),
}

impl CoinSchedule {
    pub fn homogeneous(theta: impl Into<CoinAngle>) -> Self {
        Self::Homogeneous {
            theta: theta.into(),
        }
    }

    pub fn n_period(n: u32, theta1: impl Into<CoinAngle>, theta2: impl Into<CoinAngle>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSchedule(format!(
                "n-period schedules need n >= 2, got {n}"
            )));
        }
        Ok(Self::NPeriod {
            n,
            theta1: theta1.into(),
            theta2: theta2.into(),
        })
    }

    pub fn two_period(theta1: impl Into<CoinAngle>, theta2: impl Into<CoinAngle>) -> Self {
        Self::NPeriod {
            n: 2,
            theta1: theta1.into(),
            theta2: theta2.into(),
        }
    }

    pub fn explicit(thetas: Vec<CoinAngle>) -> Self {
        Self::Explicit { thetas }
    }

    pub fn split_step(theta1: impl Into<CoinAngle>, theta2: impl Into<CoinAngle>) -> Self {
        Self::SplitStep {
            theta1: theta1.into(),
            theta2: theta2.into(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::Homogeneous { .. } => "homogeneous",
            Self::NPeriod { .. } => "n_period",
            Self::Explicit { .. } => "explicit",
            Self::SplitStep { .. } => "split_step",
        }
    }

    /// Number of walk steps spanned by one repetition of the schedule.
    pub fn period_steps(&self) -> u32 {
        match self {
            Self::Homogeneous { .. } | Self::SplitStep { .. } => 1,
            Self::NPeriod { n, .. } => *n,
            Self::Explicit { thetas } => thetas.len() as u32,
        }
    }

    /// Checks structural invariants; `steps` is the planned run length.
    pub fn validate(&self, steps: u64) -> Result<()> {
        let finite = |a: &CoinAngle| a.0.is_finite();
        let ok_angles = match self {
            Self::Homogeneous { theta } => finite(theta),
            Self::NPeriod { theta1, theta2, .. } | Self::SplitStep { theta1, theta2 } => {
                finite(theta1) && finite(theta2)
            }
            Self::Explicit { thetas } => thetas.iter().all(finite),
        };
        if !ok_angles {
            return Err(Error::InvalidSchedule("coin angles must be finite".into()));
        }
        match self {
            Self::NPeriod { n, .. } if *n < 2 => Err(Error::InvalidSchedule(format!(
                "n-period schedules need n >= 2, got {n}"
            ))),
            Self::Explicit { thetas } if (thetas.len() as u64) < steps => {
                Err(Error::InvalidSchedule(format!(
                    "explicit schedule has {} angles but {steps} steps were requested",
                    thetas.len()
                )))
            }
            _ => Ok(()),
        }
    }

    /// Coin angle used at step `s` (1-based).
    pub fn coin_for_step(&self, s: u64) -> Result<CoinAngle> {
        if s == 0 {
            return Err(Error::InvalidArgument("step indices start at 1".into()));
        }
        match self {
            Self::Homogeneous { theta } => Ok(*theta),
            Self::NPeriod { n, theta1, theta2 } => {
                if *n < 2 {
                    return Err(Error::InvalidSchedule(format!(
                        "n-period schedules need n >= 2, got {n}"
                    )));
                }
                Ok(if s.is_multiple_of(u64::from(*n)) { *theta2 } else { *theta1 })
            }
            Self::Explicit { thetas } => thetas
                .get((s - 1) as usize)
                .copied()
                .ok_or(Error::StepOutOfRange {
                    step: s,
                    len: thetas.len(),
                }),
            Self::SplitStep { .. } => Err(Error::Unsupported {
                what: "a single coin per step",
                schedule: "split_step",
            }),
        }
    }

    /// Unitary applied at step `s` (1-based).
    pub fn step_operator(&self, s: u64) -> Result<StepOperator> {
        match self {
            Self::SplitStep { theta1, theta2 } => {
                if s == 0 {
                    return Err(Error::InvalidArgument("step indices start at 1".into()));
                }
                Ok(StepOperator::Split(*theta1, *theta2))
            }
            _ => self.coin_for_step(s).map(StepOperator::Full),
        }
    }
}

/// Snapshots of a run, in increasing step order.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    schedule: CoinSchedule,
    profile: PositionProfile,
    snapshots: Vec<WalkerState>,
}

impl Trajectory {
    pub fn new(schedule: CoinSchedule, profile: PositionProfile, snapshots: Vec<WalkerState>) -> Self {
        Self {
            schedule,
            profile,
            snapshots,
        }
    }

    pub fn schedule(&self) -> &CoinSchedule {
        &self.schedule
    }

    pub fn profile(&self) -> &PositionProfile {
        &self.profile
    }

    pub fn snapshots(&self) -> &[WalkerState] {
        &self.snapshots
    }

    pub fn steps(&self) -> impl Iterator<Item = u64> + '_ {
        self.snapshots.iter().map(WalkerState::step_count)
    }

    pub fn at(&self, step: u64) -> Option<&WalkerState> {
        self.snapshots
            .binary_search_by_key(&step, WalkerState::step_count)
            .ok()
            .map(|i| &self.snapshots[i])
    }

    pub fn last(&self) -> &WalkerState {
        self.snapshots.last().expect("trajectory always holds the final step")
    }

    /// Views a two-period trajectory as a sequence of effective steps.
    ///
    /// Snapshots at even times `2τ` are kept and relabelled `τ`; the even
    /// sublattice `x₀ + 2y` becomes site `x₀ + y`. The result evolves under the
    /// split-step schedule with the same angles, and its schedule is set
    /// accordingly. Odd-sublattice amplitudes are dropped.
    pub fn coarse_grain_two_period(&self) -> Result<Trajectory> {
        let CoinSchedule::NPeriod {
            n: 2,
            theta1,
            theta2,
        } = self.schedule
        else {
            return Err(Error::Unsupported {
                what: "coarse graining",
                schedule: self.schedule.kind_name(),
            });
        };
        let mut snapshots = Vec::new();
        for s in self.snapshots.iter().filter(|s| s.step_count() % 2 == 0) {
            let w = s.window();
            let origin = s.origin();
            let lo = (w.min - origin).div_euclid(2) + i64::from((w.min - origin).rem_euclid(2) != 0);
            let hi = (w.max - origin).div_euclid(2);
            let window = Window::new(origin + lo, origin + hi)?;
            let pick = |f: &dyn Fn(i64) -> crate::coin::C64| {
                (lo..=hi).map(|y| f(origin + 2 * y)).collect::<Vec<_>>()
            };
            let down = pick(&|x| s.down(x));
            let up = pick(&|x| s.up(x));
            snapshots.push(WalkerState::from_amplitudes(
                window,
                origin,
                down,
                up,
                s.step_count() / 2,
            )?);
        }
        let profile = match self.profile {
            PositionProfile::Gaussian { center, width } => PositionProfile::Gaussian {
                center,
                width: width / 2.0,
            },
            p => p,
        };
        Ok(Trajectory::new(
            CoinSchedule::SplitStep { theta1, theta2 },
            profile,
            snapshots,
        ))
    }
}

/// Streaming evolution: one state advanced step by step.
#[derive(Debug, Clone)]
pub struct Walk {
    schedule: CoinSchedule,
    state: WalkerState,
}

impl Walk {
    /// Prepares `coin ⊗ profile` in a window sized for `steps` steps.
    pub fn new(
        coin: InitialCoinState,
        profile: PositionProfile,
        schedule: CoinSchedule,
        steps: u64,
    ) -> Result<Self> {
        schedule.validate(steps)?;
        let state = WalkerState::prepare(coin, profile, steps)?;
        Ok(Self { schedule, state })
    }

    pub fn from_state(schedule: CoinSchedule, state: WalkerState) -> Self {
        Self { schedule, state }
    }

    pub fn state(&self) -> &WalkerState {
        &self.state
    }

    pub fn into_state(self) -> WalkerState {
        self.state
    }

    pub fn schedule(&self) -> &CoinSchedule {
        &self.schedule
    }

    /// Applies the next step of the schedule.
    pub fn advance(&mut self) -> Result<&WalkerState> {
        let s = self.state.step_count() + 1;
        match self.schedule.step_operator(s)? {
            StepOperator::Full(theta) => self.state.full_step(theta)?,
            StepOperator::Split(a, b) => self.state.split_step(a, b)?,
        }
        Ok(&self.state)
    }

    pub fn advance_to(&mut self, step: u64) -> Result<&WalkerState> {
        while self.state.step_count() < step {
            self.advance()?;
        }
        Ok(&self.state)
    }
}

/// Runs `steps` steps and returns snapshots at `record_at ∪ {steps}`.
pub fn evolve(
    coin: InitialCoinState,
    profile: PositionProfile,
    schedule: &CoinSchedule,
    steps: u64,
    record_at: &[u64],
) -> Result<Trajectory> {
    let mut wanted: BTreeSet<u64> = record_at.iter().copied().collect();
    if let Some(&beyond) = wanted.range(steps + 1..).next() {
        return Err(Error::InvalidArgument(format!(
            "record step {beyond} exceeds run length {steps}"
        )));
    }
    wanted.insert(steps);
    let mut walk = Walk::new(coin, profile, schedule.clone(), steps)?;
    let mut snapshots = Vec::with_capacity(wanted.len());
    for &s in &wanted {
        snapshots.push(walk.advance_to(s)?.clone());
    }
    Ok(Trajectory::new(schedule.clone(), profile, snapshots))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4};

    fn prob(s: &WalkerState, x: i64) -> f64 {
        s.down(x).norm_sqr() + s.up(x).norm_sqr()
    }

    #[test]
    fn two_period_indexing() {
        let s = CoinSchedule::two_period(0.1, 0.2);
        let got: Vec<f64> = (1..=4).map(|i| s.coin_for_step(i).unwrap().0).collect();
        assert_eq!(got, vec![0.1, 0.2, 0.1, 0.2]);
    }

    #[test]
    fn three_period_indexing() {
        let s = CoinSchedule::n_period(3, 0.1, 0.2).unwrap();
        let got: Vec<f64> = (1..=6).map(|i| s.coin_for_step(i).unwrap().0).collect();
        assert_eq!(got, vec![0.1, 0.1, 0.2, 0.1, 0.1, 0.2]);
    }

    #[test]
    fn homogeneous_and_explicit() {
        let h = CoinSchedule::homogeneous(0.7);
        assert!((1..50).all(|s| h.coin_for_step(s).unwrap().0 == 0.7));
        let e = CoinSchedule::explicit(vec![CoinAngle(0.1), CoinAngle(0.3)]);
        assert_eq!(e.coin_for_step(2).unwrap().0, 0.3);
        assert_eq!(
            e.coin_for_step(3),
            Err(Error::StepOutOfRange { step: 3, len: 2 })
        );
        assert!(e.validate(3).is_err());
        assert!(h.coin_for_step(0).is_err());
    }

    #[test]
    fn one_period_n_rejected() {
        assert!(CoinSchedule::n_period(1, 0.1, 0.2).is_err());
        let raw = CoinSchedule::NPeriod {
            n: 1,
            theta1: CoinAngle(0.1),
            theta2: CoinAngle(0.2),
        };
        assert!(raw.validate(10).is_err());
        assert!(evolve(InitialCoinState::DOWN, PositionProfile::point(0), &raw, 4, &[]).is_err());
    }

    #[test]
    fn identity_coin_splits_symmetric_state() {
        let tr = evolve(
            InitialCoinState::new(FRAC_PI_4, 0.0),
            PositionProfile::point(0),
            &CoinSchedule::homogeneous(0.0),
            5,
            &[],
        )
        .unwrap();
        let s = tr.last();
        assert_eq!(s.step_count(), 5);
        assert_abs_diff_eq!(prob(s, -5), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(prob(s, 5), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn two_period_two_steps_by_hand() {
        let tr = evolve(
            InitialCoinState::DOWN,
            PositionProfile::point(0),
            &CoinSchedule::two_period(FRAC_PI_4, 0.0),
            2,
            &[],
        )
        .unwrap();
        let s = tr.last();
        assert_abs_diff_eq!(prob(s, -2), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(prob(s, 2), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn snapshots_carry_their_step() {
        let tr = evolve(
            InitialCoinState::DOWN,
            PositionProfile::point(0),
            &CoinSchedule::homogeneous(0.4),
            10,
            &[7, 0, 3, 3],
        )
        .unwrap();
        assert_eq!(tr.steps().collect::<Vec<_>>(), vec![0, 3, 7, 10]);
        assert_eq!(tr.at(7).unwrap().step_count(), 7);
        assert!(tr.at(5).is_none());
        assert!(evolve(
            InitialCoinState::DOWN,
            PositionProfile::point(0),
            &CoinSchedule::homogeneous(0.4),
            10,
            &[11],
        )
        .is_err());
    }

    #[test]
    fn truncated_period_uses_theta1_last() {
        let sched = CoinSchedule::n_period(3, 0.3, 1.1).unwrap();
        let tr = evolve(InitialCoinState::DOWN, PositionProfile::point(0), &sched, 5, &[]).unwrap();
        let explicit = CoinSchedule::explicit([0.3, 0.3, 1.1, 0.3, 0.3].map(CoinAngle).to_vec());
        let tr2 = evolve(InitialCoinState::DOWN, PositionProfile::point(0), &explicit, 5, &[]).unwrap();
        assert_eq!(tr.last().down_amplitudes(), tr2.last().down_amplitudes());
    }

    #[test]
    fn two_period_support_on_even_sites() {
        let tr = evolve(
            InitialCoinState::SYMMETRIC,
            PositionProfile::point(0),
            &CoinSchedule::two_period(FRAC_PI_4, FRAC_PI_3),
            40,
            &[],
        )
        .unwrap();
        let s = tr.last();
        for x in s.window().sites().filter(|x| x % 2 != 0) {
            assert_eq!(s.down(x), Default::default());
            assert_eq!(s.up(x), Default::default());
        }
    }

    #[test]
    fn coarse_grain_requires_two_period() {
        let tr = evolve(
            InitialCoinState::DOWN,
            PositionProfile::point(0),
            &CoinSchedule::homogeneous(0.4),
            4,
            &[],
        )
        .unwrap();
        assert!(tr.coarse_grain_two_period().is_err());
    }
}
