//! Verification layer: residuals of the exact lattice recurrences, finite-
//! difference residuals of the continuum equations, and the Dirac-regime
//! configurations of the two-period (equivalently split-step) walk.
//!
//! Lattice spacing, time step and ħ are all 1.

use serde::{Deserialize, Serialize};

use crate::coin::{CoinAngle, Mat2, C64};
use crate::error::{Error, Result};
use crate::schedule::Trajectory;
use crate::state::WalkerState;

/// Tolerance on `|cos(θ₁ + θ₂) − 1|` for the gapless regimes.
pub const GAPLESS_TOL: f64 = 1e-12;
/// Tolerance on `θ₁ = 0` for the gapped regime.
pub const GAPPED_THETA1_TOL: f64 = 1e-10;
/// Largest angle accepted as "small" by the small-angle regimes.
pub const SMALL_ANGLE_LIMIT: f64 = 0.2;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Residual norms. `max_abs` and `location` refer to the per-site residual
/// vector norm `sqrt(|r↓|² + |r↑|²)`; `l2` is the root of the summed squares.
/// Differential residuals divide both by the l2 norm of the field they were
/// evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub max_abs: f64,
    pub l2: f64,
    /// `(x, t)` of `max_abs`, with `t` the later time of the pair.
    pub location: (i64, u64),
    pub samples: usize,
}

#[derive(Default)]
struct Accumulator {
    max_abs: f64,
    sum_sq: f64,
    location: (i64, u64),
    samples: usize,
    field_sq: f64,
}

impl Accumulator {
    fn push(&mut self, x: i64, t: u64, r: [C64; 2], field: [C64; 2]) {
        let sq = r[0].norm_sqr() + r[1].norm_sqr();
        let mag = sq.sqrt();
        if mag > self.max_abs || self.samples == 0 {
            self.max_abs = mag;
            self.location = (x, t);
        }
        self.sum_sq += sq;
        self.field_sq += field[0].norm_sqr() + field[1].norm_sqr();
        self.samples += 1;
    }

    fn report(self, normalise: bool) -> Result<ResidualReport> {
        if self.samples == 0 {
            return Err(Error::ResidualInput("no interior sites to evaluate".into()));
        }
        let scale = if normalise {
            let n = self.field_sq.sqrt();
            if n == 0.0 {
                return Err(Error::ResidualInput("field is identically zero".into()));
            }
            n
        } else {
            1.0
        };
        Ok(ResidualReport {
            max_abs: self.max_abs / scale,
            l2: self.sum_sq.sqrt() / scale,
            location: self.location,
            samples: self.samples,
        })
    }
}

/// Exact lattice recurrences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum RecurrenceFamily {
    /// One homogeneous step `t → t+1`.
    OnePeriod { theta: CoinAngle },
    /// Two raw two-period steps `t−1 → t+1` (θ₁ then θ₂) with `x ± 2` offsets;
    /// uses pairs whose earlier time is even.
    TwoPeriodPairStep { theta1: CoinAngle, theta2: CoinAngle },
    /// The two-period pair step folded into one effective step with `x ± 1`
    /// offsets.
    CombinedStep { theta1: CoinAngle, theta2: CoinAngle },
    /// One split step `t → t+1`.
    SplitStep { theta1: CoinAngle, theta2: CoinAngle },
}

impl RecurrenceFamily {
    fn spacing(&self) -> u64 {
        match self {
            Self::TwoPeriodPairStep { .. } => 2,
            _ => 1,
        }
    }
}

/// `C(θ)` applied to `(d, u)`.
fn rotate(theta: CoinAngle, d: C64, u: C64) -> (C64, C64) {
    let (s, c) = theta.0.sin_cos();
    (c * d - I * s * u, -I * s * d + c * u)
}

/// Right-hand side of the two-coin recurrence with neighbour offset `h`:
/// `ψ↓(x) = cos θ₂ [C(θ₁)ψ(x+h)]↓ − i sin θ₂ [C(θ₁)ψ(x)]↑`,
/// `ψ↑(x) = −i sin θ₂ [C(θ₁)ψ(x)]↓ + cos θ₂ [C(θ₁)ψ(x−h)]↑`.
fn two_coin_rhs(prev: &WalkerState, x: i64, h: i64, theta1: CoinAngle, theta2: CoinAngle) -> [C64; 2] {
    let (s2, c2) = theta2.0.sin_cos();
    let (a_right, _) = rotate(theta1, prev.down(x + h), prev.up(x + h));
    let (a_here, b_here) = rotate(theta1, prev.down(x), prev.up(x));
    let (_, b_left) = rotate(theta1, prev.down(x - h), prev.up(x - h));
    [
        c2 * a_right - I * s2 * b_here,
        -I * s2 * a_here + c2 * b_left,
    ]
}

/// Residual of an exact recurrence over every qualifying snapshot pair and
/// every interior site.
pub fn recurrence_residual(trajectory: &Trajectory, family: RecurrenceFamily) -> Result<ResidualReport> {
    let gap = family.spacing();
    let snaps = trajectory.snapshots();
    let mut acc = Accumulator::default();
    let mut pairs = 0usize;
    for (i, prev) in snaps.iter().enumerate() {
        let t0 = prev.step_count();
        if gap == 2 && t0 % 2 != 0 {
            continue;
        }
        let Some(next) = snaps[i + 1..].iter().find(|s| s.step_count() == t0 + gap) else {
            continue;
        };
        if prev.window() != next.window() {
            return Err(Error::SnapshotSpacing("snapshot windows differ".into()));
        }
        pairs += 1;
        let h = gap as i64;
        let w = prev.window();
        for x in (w.min + h)..=(w.max - h) {
            let rhs = match family {
                RecurrenceFamily::OnePeriod { theta } => {
                    let (d, _) = rotate(theta, prev.down(x + 1), prev.up(x + 1));
                    let (_, u) = rotate(theta, prev.down(x - 1), prev.up(x - 1));
                    [d, u]
                }
                RecurrenceFamily::TwoPeriodPairStep { theta1, theta2 } => {
                    two_coin_rhs(prev, x, 2, theta1, theta2)
                }
                RecurrenceFamily::CombinedStep { theta1, theta2 }
                | RecurrenceFamily::SplitStep { theta1, theta2 } => {
                    two_coin_rhs(prev, x, 1, theta1, theta2)
                }
            };
            let r = [next.down(x) - rhs[0], next.up(x) - rhs[1]];
            acc.push(x, t0 + gap, r, [next.down(x), next.up(x)]);
        }
    }
    if pairs == 0 {
        return Err(Error::SnapshotSpacing(format!(
            "no snapshot pairs {gap} step(s) apart{}",
            if gap == 2 { " starting at an even step" } else { "" }
        )));
    }
    acc.report(false)
}

/// Continuum equation `∂ₜψ = A ∂ₓψ + B ψ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum PdeModel {
    /// `A = [[cos θ, −i sin θ], [i sin θ, −cos θ]]`,
    /// `B = [[cos θ − 1, −i sin θ], [−i sin θ, cos θ − 1]]`.
    OnePeriod { theta: CoinAngle },
    /// `A = cos θ₂ [[cos θ₁, −i sin θ₁], [i sin θ₁, −cos θ₁]]`, `B` as above
    /// with `θ = θ₁ + θ₂`.
    TwoPeriod { theta1: CoinAngle, theta2: CoinAngle },
    /// Dirac form `A = velocity_matrix`, `B = −i m σₓ`.
    Dirac(DiracConfig),
}

impl PdeModel {
    fn generators(&self) -> (Mat2, Mat2) {
        let rot = |theta: f64, scale: f64| {
            let (s, c) = theta.sin_cos();
            Mat2::new(
                C64::new(scale * c, 0.0),
                C64::new(0.0, -scale * s),
                C64::new(0.0, scale * s),
                C64::new(-scale * c, 0.0),
            )
        };
        let drift = |theta: f64| {
            let (s, c) = theta.sin_cos();
            Mat2::new(
                C64::new(c - 1.0, 0.0),
                C64::new(0.0, -s),
                C64::new(0.0, -s),
                C64::new(c - 1.0, 0.0),
            )
        };
        match *self {
            Self::OnePeriod { theta } => (rot(theta.0, 1.0), drift(theta.0)),
            Self::TwoPeriod { theta1, theta2 } => {
                (rot(theta1.0, theta2.cos()), drift(theta1.0 + theta2.0))
            }
            Self::Dirac(cfg) => {
                let m = C64::new(0.0, -cfg.mass_coefficient);
                let z = C64::default();
                (cfg.velocity_matrix, Mat2::new(z, m, m, z))
            }
        }
    }
}

/// Spatial derivative stencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DifferenceScheme {
    /// `(ψ(x+1) − ψ(x−1)) / 2` on both components.
    #[default]
    Central,
    /// Forward differences in the ψ↓ equation and backward differences in the
    /// ψ↑ equation, following the direction each component is shifted from.
    /// The two-period equation is then exact on effective-step trajectories.
    Upwind,
}

/// Normalised residual of a continuum equation on consecutive snapshots, with
/// a forward difference in time and central differences in space.
pub fn differential_residual(trajectory: &Trajectory, model: PdeModel) -> Result<ResidualReport> {
    differential_residual_with(trajectory, model, DifferenceScheme::Central)
}

pub fn differential_residual_with(
    trajectory: &Trajectory,
    model: PdeModel,
    scheme: DifferenceScheme,
) -> Result<ResidualReport> {
    if trajectory.profile().is_point() {
        return Err(Error::ResidualInput(
            "finite differences need a smooth packet, not a point-localised state".into(),
        ));
    }
    let (a, b) = model.generators();
    let snaps = trajectory.snapshots();
    let mut acc = Accumulator::default();
    let mut pairs = 0usize;
    for pair in snaps.windows(2) {
        let (prev, next) = (&pair[0], &pair[1]);
        if next.step_count() != prev.step_count() + 1 {
            continue;
        }
        let w = prev.window();
        if w.len() < 3 {
            return Err(Error::ResidualInput(
                "window too small for central differences".into(),
            ));
        }
        if next.window() != w {
            return Err(Error::SnapshotSpacing("snapshot windows differ".into()));
        }
        pairs += 1;
        for x in (w.min + 1)..=(w.max - 1) {
            let psi = [prev.down(x), prev.up(x)];
            let dt = [next.down(x) - psi[0], next.up(x) - psi[1]];
            let forward = [prev.down(x + 1) - psi[0], prev.up(x + 1) - psi[1]];
            let backward = [psi[0] - prev.down(x - 1), psi[1] - prev.up(x - 1)];
            let central = [0.5 * (forward[0] + backward[0]), 0.5 * (forward[1] + backward[1])];
            let rhs = |row: usize| {
                let dx = match scheme {
                    DifferenceScheme::Central => central,
                    DifferenceScheme::Upwind if row == 0 => forward,
                    DifferenceScheme::Upwind => backward,
                };
                a[(row, 0)] * dx[0] + a[(row, 1)] * dx[1] + b[(row, 0)] * psi[0] + b[(row, 1)] * psi[1]
            };
            acc.push(x, next.step_count(), [dt[0] - rhs(0), dt[1] - rhs(1)], psi);
        }
    }
    if pairs == 0 {
        return Err(Error::SnapshotSpacing(
            "no consecutive snapshots to difference".into(),
        ));
    }
    acc.report(true)
}

/// Requested Dirac regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiracRegime {
    /// `θ₁ = 0`, small `θ₂`: massive equation with mass `θ₂`.
    Gapped,
    /// `cos(θ₁ + θ₂) = 1`: massless equation with a rotated velocity matrix.
    GaplessGeneral,
    /// Small `θ₁`, `θ₂ = −θ₁`: massless equation with a diagonal velocity
    /// matrix.
    GaplessDiagonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiracConfig {
    pub regime: DiracRegime,
    pub theta1: CoinAngle,
    pub theta2: CoinAngle,
    pub mass_coefficient: f64,
    pub velocity_matrix: Mat2,
}

impl DiracConfig {
    pub fn is_gapless(&self) -> bool {
        matches!(
            self.regime,
            DiracRegime::GaplessGeneral | DiracRegime::GaplessDiagonal
        )
    }

    /// Two-period continuum model the configuration was derived from.
    pub fn lattice_model(&self) -> PdeModel {
        PdeModel::TwoPeriod {
            theta1: self.theta1,
            theta2: self.theta2,
        }
    }
}

fn gapless_defect(theta1: CoinAngle, theta2: CoinAngle) -> f64 {
    ((theta1.0 + theta2.0).cos() - 1.0).abs()
}

/// Builds the Dirac form of the two-period continuum equation for `regime`,
/// checking its preconditions.
pub fn dirac_config(regime: DiracRegime, theta1: CoinAngle, theta2: CoinAngle) -> Result<DiracConfig> {
    if !(theta1.0.is_finite() && theta2.0.is_finite()) {
        return Err(Error::DiracRegime("angles must be finite".into()));
    }
    let z = C64::default();
    let (mass_coefficient, velocity_matrix) = match regime {
        DiracRegime::Gapped => {
            if theta1.0.abs() > GAPPED_THETA1_TOL {
                return Err(Error::DiracRegime(format!(
                    "gapped regime needs theta1 = 0, got {}",
                    theta1.0
                )));
            }
            if theta2.0.abs() > SMALL_ANGLE_LIMIT {
                return Err(Error::DiracRegime(format!(
                    "gapped regime needs |theta2| <= {SMALL_ANGLE_LIMIT}, got {}",
                    theta2.0
                )));
            }
            let speed = 1.0 - 0.5 * theta2.0 * theta2.0;
            // Snap to the massless case where the gapless test would pass, so
            // the mass vanishes exactly when cos(θ₁ + θ₂) = 1.
            let mass = if gapless_defect(theta1, theta2) < GAPLESS_TOL {
                0.0
            } else {
                theta2.0
            };
            (mass, Mat2::new(C64::new(speed, 0.0), z, z, C64::new(-speed, 0.0)))
        }
        DiracRegime::GaplessGeneral | DiracRegime::GaplessDiagonal => {
            let defect = gapless_defect(theta1, theta2);
            if defect >= GAPLESS_TOL {
                return Err(Error::DiracRegime(format!(
                    "gapless regimes need cos(theta1 + theta2) = 1, off by {defect:e}"
                )));
            }
            let c2 = theta2.cos();
            if regime == DiracRegime::GaplessDiagonal {
                if theta1.0.abs() > SMALL_ANGLE_LIMIT {
                    return Err(Error::DiracRegime(format!(
                        "diagonal gapless regime needs |theta1| <= {SMALL_ANGLE_LIMIT}, got {}",
                        theta1.0
                    )));
                }
                (0.0, Mat2::new(C64::new(c2, 0.0), z, z, C64::new(-c2, 0.0)))
            } else {
                let (s1, c1) = theta1.0.sin_cos();
                (
                    0.0,
                    Mat2::new(
                        C64::new(c2 * c1, 0.0),
                        C64::new(0.0, -c2 * s1),
                        C64::new(0.0, c2 * s1),
                        C64::new(-c2 * c1, 0.0),
                    ),
                )
            }
        }
    };
    Ok(DiracConfig {
        regime,
        theta1,
        theta2,
        mass_coefficient,
        velocity_matrix,
    })
}

/// Predicted light-cone radius `t |cos θ₁ cos θ₂|` after `t` steps; with
/// `θ₁ = 0` in the gapped regime this is `t |cos θ₂|`.
pub fn dirac_spread_check(config: &DiracConfig, t: u64) -> f64 {
    t as f64 * (config.theta1.cos() * config.theta2.cos()).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coin::InitialCoinState;
    use crate::schedule::{evolve, CoinSchedule};
    use crate::state::PositionProfile;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4};

    fn all_steps(t: u64) -> Vec<u64> {
        (0..=t).collect()
    }

    fn hermitian_err(m: &Mat2) -> f64 {
        (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn one_period_recurrence_and_mismatch_control() {
        let tr = evolve(
            InitialCoinState::DOWN,
            PositionProfile::point(0),
            &CoinSchedule::homogeneous(FRAC_PI_4),
            30,
            &all_steps(30),
        )
        .unwrap();
        let ok = recurrence_residual(&tr, RecurrenceFamily::OnePeriod { theta: CoinAngle(FRAC_PI_4) }).unwrap();
        assert!(ok.max_abs <= 1e-13, "{ok:?}");
        let bad = recurrence_residual(&tr, RecurrenceFamily::OnePeriod { theta: CoinAngle(FRAC_PI_3) }).unwrap();
        assert!(bad.max_abs > 0.05, "{bad:?}");
        assert!(bad.max_abs <= bad.l2 * (bad.samples as f64).sqrt());
    }

    #[test]
    fn split_step_recurrence() {
        let (a, b) = (CoinAngle(0.7), CoinAngle(-0.3));
        let tr = evolve(
            InitialCoinState::new(0.4, 1.0),
            PositionProfile::point(0),
            &CoinSchedule::split_step(a, b),
            25,
            &all_steps(25),
        )
        .unwrap();
        let r = recurrence_residual(&tr, RecurrenceFamily::SplitStep { theta1: a, theta2: b }).unwrap();
        assert!(r.max_abs <= 1e-13);
    }

    #[test]
    fn pair_step_needs_even_start() {
        let tr = evolve(
            InitialCoinState::DOWN,
            PositionProfile::point(0),
            &CoinSchedule::two_period(0.4, 0.9),
            7,
            &[3, 5],
        )
        .unwrap();
        let fam = RecurrenceFamily::TwoPeriodPairStep { theta1: CoinAngle(0.4), theta2: CoinAngle(0.9) };
        assert!(matches!(
            recurrence_residual(&tr, fam),
            Err(Error::SnapshotSpacing(_))
        ));
        let tr = evolve(
            InitialCoinState::DOWN,
            PositionProfile::point(0),
            &CoinSchedule::two_period(0.4, 0.9),
            8,
            &[4, 6],
        )
        .unwrap();
        assert!(recurrence_residual(&tr, fam).unwrap().max_abs <= 1e-13);
    }

    #[test]
    fn differential_residual_rejects_point_states() {
        let tr = evolve(
            InitialCoinState::DOWN,
            PositionProfile::point(0),
            &CoinSchedule::homogeneous(0.1),
            3,
            &all_steps(3),
        )
        .unwrap();
        assert!(matches!(
            differential_residual(&tr, PdeModel::OnePeriod { theta: CoinAngle(0.1) }),
            Err(Error::ResidualInput(_))
        ));
    }

    #[test]
    fn free_transport_is_exact_upwind_and_second_order_central() {
        let up = InitialCoinState::new(std::f64::consts::FRAC_PI_2, 0.0);
        let model = PdeModel::OnePeriod { theta: CoinAngle(0.0) };
        let run = |w: f64| {
            evolve(
                up,
                PositionProfile::gaussian(0, w).unwrap(),
                &CoinSchedule::homogeneous(0.0),
                10,
                &all_steps(10),
            )
            .unwrap()
        };
        let exact = differential_residual_with(&run(10.0), model, DifferenceScheme::Upwind).unwrap();
        assert!(exact.l2 < 1e-14, "{exact:?}");
        let r10 = differential_residual(&run(10.0), model).unwrap().l2;
        let r20 = differential_residual(&run(20.0), model).unwrap().l2;
        assert!(r20 < 1e-3);
        // Central differences leave half the second derivative, ~1/(4w²).
        assert!((r10 / r20 - 4.0).abs() < 0.2, "ratio {}", r10 / r20);
    }

    #[test]
    fn two_period_upwind_equals_combined_step() {
        let (a, b) = (CoinAngle(0.6), CoinAngle(1.1));
        let tr = evolve(
            InitialCoinState::SYMMETRIC,
            PositionProfile::gaussian(0, 6.0).unwrap(),
            &CoinSchedule::split_step(a, b),
            12,
            &all_steps(12),
        )
        .unwrap();
        let r = differential_residual_with(&tr, PdeModel::TwoPeriod { theta1: a, theta2: b }, DifferenceScheme::Upwind)
            .unwrap();
        assert!(r.l2 < 1e-13, "{r:?}");
    }

    #[test]
    fn dirac_regimes() {
        let cfg = dirac_config(DiracRegime::Gapped, CoinAngle(0.0), CoinAngle(0.0)).unwrap();
        assert_eq!(cfg.mass_coefficient, 0.0);
        assert_eq!(cfg.velocity_matrix[(0, 0)].re, 1.0);
        assert_eq!(cfg.velocity_matrix[(1, 1)].re, -1.0);

        let cfg = dirac_config(DiracRegime::Gapped, CoinAngle(0.0), CoinAngle(0.1)).unwrap();
        assert_abs_diff_eq!(cfg.mass_coefficient, 0.1);
        assert_abs_diff_eq!(cfg.velocity_matrix[(0, 0)].re, 0.995, epsilon = 1e-15);

        let cfg = dirac_config(DiracRegime::GaplessGeneral, CoinAngle(FRAC_PI_3), CoinAngle(-FRAC_PI_3)).unwrap();
        assert!(hermitian_err(&cfg.velocity_matrix) < 1e-14);
        let v = cfg.velocity_matrix;
        // Traceless Hermitian 2×2: eigenvalues ±sqrt(a² + |b|²).
        let e = (v[(0, 0)].re.powi(2) + v[(0, 1)].norm_sqr()).sqrt();
        assert_abs_diff_eq!(e, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!((v[(0, 0)] + v[(1, 1)]).norm(), 0.0, epsilon = 1e-15);

        assert!(dirac_config(DiracRegime::Gapped, CoinAngle(0.1), CoinAngle(0.1)).is_err());
        assert!(dirac_config(DiracRegime::Gapped, CoinAngle(0.0), CoinAngle(1.0)).is_err());
        assert!(dirac_config(DiracRegime::GaplessGeneral, CoinAngle(0.3), CoinAngle(0.2)).is_err());
        assert!(dirac_config(DiracRegime::GaplessDiagonal, CoinAngle(1.0), CoinAngle(-1.0)).is_err());
        assert!(dirac_config(DiracRegime::GaplessDiagonal, CoinAngle(0.01), CoinAngle(-0.01)).is_ok());
    }

    #[test]
    fn dirac_cone_radii() {
        let t = 200;
        let d = dirac_config(DiracRegime::GaplessDiagonal, CoinAngle(1e-4), CoinAngle(-1e-4)).unwrap();
        assert_abs_diff_eq!(dirac_spread_check(&d, t), 200.0, epsilon = 1e-5);
        let g = dirac_config(DiracRegime::GaplessGeneral, CoinAngle(FRAC_PI_4), CoinAngle(-FRAC_PI_4)).unwrap();
        assert_abs_diff_eq!(dirac_spread_check(&g, t), 100.0, epsilon = 1e-12);
        let m = dirac_config(DiracRegime::Gapped, CoinAngle(0.0), CoinAngle(0.05)).unwrap();
        assert_abs_diff_eq!(dirac_spread_check(&m, t), 199.75, epsilon = 1e-3);
    }
}
