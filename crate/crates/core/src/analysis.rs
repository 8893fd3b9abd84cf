//! Observables: position distribution, spread measures and coin-position
//! entanglement.

use std::ops::RangeInclusive;

use crate::coin::{InitialCoinState, Mat2, C64};
use crate::error::{Error, Result};
use crate::schedule::{CoinSchedule, Walk};
use crate::state::{PositionProfile, WalkerState, Window};

/// Default probability mass for [`Distribution::quantile_radius`].
pub const DEFAULT_QUANTILE_MASS: f64 = 0.99;
/// Default threshold for [`Distribution::support_radius`].
pub const DEFAULT_SUPPORT_EPS: f64 = 1e-10;

/// Position probabilities `P(x, t)` over a window. Sites with exactly zero
/// probability (parity zeros) are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    window: Window,
    origin: i64,
    t: u64,
    p: Vec<f64>,
}

/// `P(x) = |ψ↓(x)|² + |ψ↑(x)|²`.
pub fn probability_distribution(state: &WalkerState) -> Distribution {
    let p = state
        .down_amplitudes()
        .iter()
        .zip(state.up_amplitudes())
        .map(|(d, u)| d.norm_sqr() + u.norm_sqr())
        .collect();
    Distribution {
        window: state.window(),
        origin: state.origin(),
        t: state.step_count(),
        p,
    }
}

impl Distribution {
    pub fn new(window: Window, origin: i64, t: u64, p: Vec<f64>) -> Result<Self> {
        if p.len() != window.len() {
            return Err(Error::InvalidArgument(format!(
                "{} probabilities for a window of {} sites",
                p.len(),
                window.len()
            )));
        }
        if p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidArgument(
                "probabilities must be finite and non-negative".into(),
            ));
        }
        Ok(Self {
            window,
            origin,
            t,
            p,
        })
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn origin(&self) -> i64 {
        self.origin
    }

    pub fn step(&self) -> u64 {
        self.t
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    pub fn at(&self, x: i64) -> f64 {
        self.window.index(x).map_or(0.0, |i| self.p[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.window.sites().zip(self.p.iter().copied())
    }

    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }

    /// Mean position, in absolute site coordinates.
    pub fn mean(&self) -> f64 {
        self.iter().map(|(x, p)| p * x as f64).sum()
    }

    /// `Σ p(x) (x − origin)²`.
    pub fn second_moment_about_origin(&self) -> f64 {
        self.iter()
            .map(|(x, p)| {
                let d = (x - self.origin) as f64;
                p * d * d
            })
            .sum()
    }

    /// Standard deviation about the mean.
    pub fn standard_deviation(&self) -> f64 {
        // Centre on the origin first to avoid cancellation for far-off windows.
        let m = self.mean() - self.origin as f64;
        (self.second_moment_about_origin() - m * m).max(0.0).sqrt()
    }

    /// Smallest `r` with `Σ_{|x − origin| ≤ r} p(x) ≥ mass`.
    ///
    /// A slack of `1e−12` absorbs summation round-off, so `mass = 1` returns the
    /// radius holding all of the probability.
    pub fn quantile_radius(&self, mass: f64) -> u64 {
        let mut by_radius = vec![0.0; self.max_radius() as usize + 1];
        for (x, p) in self.iter() {
            by_radius[(x - self.origin).unsigned_abs() as usize] += p;
        }
        let mut acc = 0.0;
        for (r, p) in by_radius.iter().enumerate() {
            acc += p;
            if acc + 1e-12 >= mass {
                return r as u64;
            }
        }
        self.max_radius()
    }

    /// Largest `|x − origin|` with `p(x) > eps`, or 0 if none.
    pub fn support_radius(&self, eps: f64) -> u64 {
        self.iter()
            .filter(|&(_, p)| p > eps)
            .map(|(x, _)| (x - self.origin).unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    pub fn summary(&self, mass: f64, eps: f64) -> WalkSummary {
        WalkSummary {
            mean: self.mean(),
            sigma: self.standard_deviation(),
            quantile_radius: self.quantile_radius(mass),
            support_radius: self.support_radius(eps),
        }
    }

    fn max_radius(&self) -> u64 {
        (self.window.min - self.origin)
            .unsigned_abs()
            .max((self.window.max - self.origin).unsigned_abs())
    }
}

/// Spread statistics of one distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkSummary {
    pub mean: f64,
    pub sigma: f64,
    pub quantile_radius: u64,
    pub support_radius: u64,
}

/// Reduced coin density matrix `ρ_c = Tr_x |Ψ⟩⟨Ψ|`, rows and columns
/// ordered (down, up).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoinDensityMatrix(pub Mat2);

/// `ρ_c[i][j] = Σ_x ψ_i(x) ψ_j(x)*`.
pub fn reduced_coin_density(state: &WalkerState) -> CoinDensityMatrix {
    let (mut dd, mut uu, mut du) = (0.0, 0.0, C64::default());
    for (d, u) in state.down_amplitudes().iter().zip(state.up_amplitudes()) {
        dd += d.norm_sqr();
        uu += u.norm_sqr();
        du += d * u.conj();
    }
    CoinDensityMatrix(Mat2::new(C64::new(dd, 0.0), du, du.conj(), C64::new(uu, 0.0)))
}

impl CoinDensityMatrix {
    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        (self.0[(0, 0)] + self.0[(1, 1)]).re
    }

    /// Eigenvalues in ascending order, from the closed form for a 2×2
    /// Hermitian matrix.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let a = self.0[(0, 0)].re;
        let d = self.0[(1, 1)].re;
        let b = self.0[(0, 1)];
        let half_tr = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        [half_tr - r, half_tr + r]
    }
}

/// Von Neumann entropy `−Σ λ log₂ λ` in bits. Eigenvalues are clipped to
/// `[0, 1]` and `0 · log 0 = 0`.
pub fn entanglement_entropy(rho: &CoinDensityMatrix) -> f64 {
    rho.eigenvalues()
        .into_iter()
        .map(|l| l.clamp(0.0, 1.0))
        .filter(|&l| l > 0.0)
        .map(|l| -l * l.log2())
        .sum()
}

/// Entanglement entropy after every step `0..=t` of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyTrace {
    values: Vec<f64>,
}

impl EntropyTrace {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    /// Entropy indexed by step; entry 0 is the initial state.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, step: u64) -> Option<f64> {
        self.values.get(step as usize).copied()
    }

    /// Mean entropy over an inclusive step range.
    pub fn mean_over(&self, steps: RangeInclusive<u64>) -> Option<f64> {
        let lo = *steps.start() as usize;
        let hi = (*steps.end() as usize).min(self.values.len().checked_sub(1)?);
        if lo > hi {
            return None;
        }
        let slice = &self.values[lo..=hi];
        Some(slice.iter().sum::<f64>() / slice.len() as f64)
    }
}

pub fn entropy_trace(
    coin: InitialCoinState,
    profile: PositionProfile,
    schedule: &CoinSchedule,
    steps: u64,
) -> Result<EntropyTrace> {
    let mut walk = Walk::new(coin, profile, schedule.clone(), steps)?;
    let mut values = Vec::with_capacity(steps as usize + 1);
    values.push(entanglement_entropy(&reduced_coin_density(walk.state())));
    for _ in 0..steps {
        values.push(entanglement_entropy(&reduced_coin_density(walk.advance()?)));
    }
    Ok(EntropyTrace { values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::evolve;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_4;

    fn run(coin: InitialCoinState, sched: CoinSchedule, t: u64) -> WalkerState {
        evolve(coin, PositionProfile::point(0), &sched, t, &[])
            .unwrap()
            .last()
            .clone()
    }

    #[test]
    fn initial_distribution() {
        let d = probability_distribution(&run(InitialCoinState::DOWN, CoinSchedule::homogeneous(0.3), 0));
        assert_eq!(d.at(0), 1.0);
        assert_eq!(d.standard_deviation(), 0.0);
        assert_eq!(d.quantile_radius(0.99), 0);
        assert_eq!(d.support_radius(1e-10), 0);
    }

    #[test]
    fn identity_coin_two_point_split() {
        let d = probability_distribution(&run(InitialCoinState::SYMMETRIC, CoinSchedule::homogeneous(0.0), 3));
        assert_abs_diff_eq!(d.at(-3), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(d.at(3), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(d.standard_deviation(), 3.0, epsilon = 1e-14);
        assert_eq!(d.quantile_radius(0.999), 3);
        assert_eq!(d.quantile_radius(1.0), 3);

        let d7 = probability_distribution(&run(InitialCoinState::SYMMETRIC, CoinSchedule::homogeneous(0.0), 7));
        for eps in [1e-12, 0.1, 0.49] {
            assert_eq!(d7.support_radius(eps), 7);
        }
    }

    #[test]
    fn quarter_pi_two_steps_by_hand() {
        let d = probability_distribution(&run(InitialCoinState::DOWN, CoinSchedule::homogeneous(FRAC_PI_4), 2));
        assert_abs_diff_eq!(d.at(-2), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(d.at(0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(d.at(2), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(d.total(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn sigma_is_mean_centred() {
        let w = Window::new(0, 2).unwrap();
        let d = Distribution::new(w, 0, 2, vec![0.0, 0.0, 1.0]).unwrap();
        assert_eq!(d.standard_deviation(), 0.0);
        assert_eq!(d.second_moment_about_origin(), 4.0);
        assert!(Distribution::new(w, 0, 2, vec![0.0, -0.1, 1.1]).is_err());
    }

    #[test]
    fn density_of_product_state() {
        let s = run(InitialCoinState::DOWN, CoinSchedule::homogeneous(0.0), 0);
        let rho = reduced_coin_density(&s);
        assert_eq!(rho.0[(0, 0)].re, 1.0);
        assert_eq!(rho.0[(1, 1)].re, 0.0);
        assert_eq!(entanglement_entropy(&rho), 0.0);
    }

    #[test]
    fn identity_coin_maximal_entanglement() {
        let s = run(InitialCoinState::SYMMETRIC, CoinSchedule::homogeneous(0.0), 4);
        let rho = reduced_coin_density(&s);
        assert_abs_diff_eq!(rho.0[(0, 0)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(rho.0[(0, 1)].norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(entanglement_entropy(&rho), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn maximally_mixed_is_one_bit() {
        let half = C64::new(0.5, 0.0);
        let rho = CoinDensityMatrix(Mat2::new(half, C64::default(), C64::default(), half));
        assert_eq!(entanglement_entropy(&rho), 1.0);
    }

    #[test]
    fn entropy_clips_round_off() {
        let rho = CoinDensityMatrix(Mat2::new(
            C64::new(1.0 + 1e-16, 0.0),
            C64::default(),
            C64::default(),
            C64::new(-1e-16, 0.0),
        ));
        let e = entanglement_entropy(&rho);
        assert!(e.is_finite() && e.abs() < 1e-14);
    }

    #[test]
    fn trace_mean_window() {
        let tr = EntropyTrace::new(vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(tr.mean_over(1..=3), Some(2.0));
        assert_eq!(tr.mean_over(2..=99), Some(2.5));
        assert_eq!(tr.mean_over(5..=9), None);
    }

    #[test]
    fn long_run_entropy_quarter_pi() {
        // Reference value from an independent long-run NumPy simulation: 0.8724.
        let tr = entropy_trace(
            InitialCoinState::SYMMETRIC,
            PositionProfile::point(0),
            &CoinSchedule::homogeneous(FRAC_PI_4),
            200,
        )
        .unwrap();
        let mean = tr.mean_over(150..=200).unwrap();
        assert!((mean - 0.87).abs() <= 0.02, "mean entropy {mean}");
    }
}
