//! Momentum-space analysis of one effective step.
//!
//! Convention: `ψ(k) = Σ_x e^{−ikx} ψ(x)`, so the left-moving down component
//! picks up `e^{+ik}` per shift and the full shift is `D(k) = diag(e^{ik},
//! e^{−ik})`. Eigenvalues of the Bloch matrix are written `e^{−iω}`; with this
//! choice the identity coin gives `ω = ∓k`.
//!
//! Group velocities come from the Hermitian velocity operator
//! `V(k) = i M'(k) M(k)†`: for an eigenvector `u` of the unitary `M`,
//! `dω/dk = ⟨u|V|u⟩`. At band touchings, where eigenvectors are not unique,
//! the eigenvalues of `V` give the two branch velocities.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::coin::{make_coin, CoinAngle, Mat2, C64};
use crate::error::{Error, Result};
use crate::schedule::CoinSchedule;

/// Eigenphase gap below which two bands are treated as touching.
pub const BAND_TOUCH_GAP: f64 = 1e-9;

/// Default k-grid size for [`max_group_speed`].
pub const DEFAULT_K_COUNT: usize = 4097;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Momentum-space matrix of one effective step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochMatrix {
    pub k: f64,
    pub matrix: Mat2,
}

fn diag(a: C64, b: C64) -> Mat2 {
    Mat2::new(a, C64::default(), C64::default(), b)
}

/// `(M, dM/dk)` for one effective step of `schedule`.
fn bloch_with_derivative(schedule: &CoinSchedule, k: f64) -> Result<(Mat2, Mat2)> {
    let ep = C64::from_polar(1.0, k);
    let em = C64::from_polar(1.0, -k);
    let shift = diag(ep, em);
    let shift_d = diag(I * ep, -I * em);
    let full = |theta: CoinAngle| {
        let c = make_coin(theta);
        (shift * c, shift_d * c)
    };
    let chain = |steps: &mut dyn Iterator<Item = CoinAngle>| {
        let mut m = Mat2::identity();
        let mut dm = Mat2::zeros();
        for theta in steps {
            let (b, db) = full(theta);
            dm = db * m + b * dm;
            m = b * m;
        }
        (m, dm)
    };
    match schedule {
        CoinSchedule::Homogeneous { theta } => Ok(full(*theta)),
        CoinSchedule::NPeriod { n, .. } => {
            if *n < 2 {
                return Err(Error::InvalidSchedule(format!(
                    "n-period schedules need n >= 2, got {n}"
                )));
            }
            let mut coins = (1..=u64::from(*n)).map(|s| {
                schedule
                    .coin_for_step(s)
                    .expect("n-period schedules define every step")
            });
            Ok(chain(&mut coins))
        }
        CoinSchedule::SplitStep { theta1, theta2 } => {
            let (c1, c2) = (make_coin(*theta1), make_coin(*theta2));
            let one = C64::new(1.0, 0.0);
            let zero = C64::default();
            let minus = diag(ep, one);
            let minus_d = diag(I * ep, zero);
            let plus = diag(one, em);
            let plus_d = diag(zero, -I * em);
            let m = plus * c2 * minus * c1;
            let dm = plus_d * c2 * minus * c1 + plus * c2 * minus_d * c1;
            Ok((m, dm))
        }
        CoinSchedule::Explicit { .. } => Err(Error::Unsupported {
            what: "Bloch analysis",
            schedule: "explicit",
        }),
    }
}

/// Bloch matrix of one effective step: `D(k)C(θ)` for homogeneous walks, the
/// ordered product of the `n` per-step matrices for n-period walks and
/// `D₊(k)C(θ₂)D₋(k)C(θ₁)` for split-step walks.
pub fn bloch_matrix(schedule: &CoinSchedule, k: f64) -> Result<BlochMatrix> {
    let (matrix, _) = bloch_with_derivative(schedule, k)?;
    Ok(BlochMatrix { k, matrix })
}

impl BlochMatrix {
    /// Eigenvalues from the 2×2 closed form.
    pub fn eigenvalues(&self) -> [C64; 2] {
        eigen2(&self.matrix).map(|(l, _)| l)
    }

    /// Eigenphases `ω` with eigenvalues `e^{−iω}`, each in `(−π, π]`.
    pub fn eigenphases(&self) -> [f64; 2] {
        self.eigenvalues().map(|l| -l.arg())
    }
}

/// Eigenpairs of a 2×2 matrix, eigenvectors normalised.
fn eigen2(m: &Mat2) -> [(C64, [C64; 2]); 2] {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let half_tr = 0.5 * (a + d);
    let disc = (0.25 * (a - d) * (a - d) + b * c).sqrt();
    let lambdas = [half_tr + disc, half_tr - disc];
    let scale = a.norm() + b.norm() + c.norm() + d.norm();
    let tiny = 1e-14 * scale.max(1.0);
    let mut out = [(C64::default(), [C64::default(); 2]); 2];
    for (j, &l) in lambdas.iter().enumerate() {
        let v = if b.norm() >= c.norm() && b.norm() > tiny {
            [b, l - a]
        } else if c.norm() > tiny {
            [l - d, c]
        } else {
            // Diagonal: first root pairs with the basis vector whose diagonal
            // entry it is closest to.
            let first_is_a = (lambdas[0] - a).norm() <= (lambdas[0] - d).norm();
            if (j == 0) == first_is_a {
                [C64::new(1.0, 0.0), C64::default()]
            } else {
                [C64::default(), C64::new(1.0, 0.0)]
            }
        };
        let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        out[j] = (l, [v[0] / n, v[1] / n]);
    }
    out
}

fn expectation(op: &Mat2, u: &[C64; 2]) -> f64 {
    let w0 = op[(0, 0)] * u[0] + op[(0, 1)] * u[1];
    let w1 = op[(1, 0)] * u[0] + op[(1, 1)] * u[1];
    (u[0].conj() * w0 + u[1].conj() * w1).re
}

fn hermitian_eigenvalues(h: &Mat2) -> [f64; 2] {
    let a = h[(0, 0)].re;
    let d = h[(1, 1)].re;
    let b = 0.5 * (h[(0, 1)] + h[(1, 0)].conj());
    let half = 0.5 * (a + d);
    let r = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    [half - r, half + r]
}

/// `|u↓|²` of the normalised eigenvector of a Hermitian `h` for eigenvalue `lo`.
fn lower_eigvec_down_weight(h: &Mat2, lo: f64) -> f64 {
    let a = h[(0, 0)].re;
    let d = h[(1, 1)].re;
    let b = 0.5 * (h[(0, 1)] + h[(1, 0)].conj());
    // Rows of (h − lo) give (b, lo − a) and (lo − d, b*) as candidate vectors.
    let (x, y) = if (lo - a).abs() >= (lo - d).abs() {
        (b.norm_sqr(), (lo - a) * (lo - a))
    } else {
        ((lo - d) * (lo - d), b.norm_sqr())
    };
    if x + y == 0.0 {
        // Scalar h: any basis works, pick ↓ for the lower slot.
        return 1.0;
    }
    x / (x + y)
}

fn wrap(phase: f64) -> f64 {
    let w = (phase + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy)]
struct Eigenmode {
    omega: f64,
    velocity: f64,
    down_weight: f64,
}

/// Both eigenmodes at `k` plus whether the bands touch there.
fn modes_at(schedule: &CoinSchedule, k: f64) -> Result<([Eigenmode; 2], bool)> {
    let (m, dm) = bloch_with_derivative(schedule, k)?;
    let velocity_op = (dm * m.adjoint()) * I;
    let pairs = eigen2(&m);
    let omegas = pairs.map(|(l, _)| -l.arg());
    let touching = wrap(omegas[0] - omegas[1]).abs() < BAND_TOUCH_GAP;
    let mut modes = pairs.map(|(l, u)| Eigenmode {
        omega: -l.arg(),
        velocity: expectation(&velocity_op, &u),
        down_weight: u[0].norm_sqr(),
    });
    if touching {
        // Degenerate eigenvectors are arbitrary here; the velocity
        // eigenvectors resolve the two branches instead.
        let [lo, hi] = hermitian_eigenvalues(&velocity_op);
        let w_lo = lower_eigvec_down_weight(&velocity_op, lo);
        modes[0].velocity = lo;
        modes[0].down_weight = w_lo;
        modes[1].velocity = hi;
        modes[1].down_weight = 1.0 - w_lo;
    }
    Ok((modes, touching))
}

fn max_speed_at(schedule: &CoinSchedule, k: f64) -> Result<f64> {
    let (modes, _) = modes_at(schedule, k)?;
    Ok(modes[0].velocity.abs().max(modes[1].velocity.abs()))
}

/// One k-sample of the two bands. Velocities are per effective step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSample {
    pub k: f64,
    pub omega_plus: f64,
    pub omega_minus: f64,
    pub v_plus: f64,
    pub v_minus: f64,
    /// Bands touch at this k (gap below [`BAND_TOUCH_GAP`]); labels and
    /// velocities here rely on continuity and are less reliable.
    pub band_touching: bool,
}

/// Band structure sampled on a k-grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralCurve {
    /// Walk steps spanned by one effective step.
    pub period_steps: u32,
    pub samples: Vec<BandSample>,
}

impl SpectralCurve {
    pub fn has_band_touching(&self) -> bool {
        self.samples.iter().any(|s| s.band_touching)
    }

    /// Largest `|dω/dk|` over the samples, per effective step.
    pub fn max_abs_velocity(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.v_plus.abs().max(s.v_minus.abs()))
            .fold(0.0, f64::max)
    }
}

/// `count` evenly spaced points covering `[−π, π]`.
pub fn k_grid(count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..count)
            .map(|i| -PI + 2.0 * PI * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// Eigenphase bands and group velocities on `k_grid`.
///
/// The first sample labels as `+` the mode with the larger down-spin weight;
/// later samples are matched to the branch whose linear extrapolation
/// `ω + v Δk` lies closest, and phases are unwrapped along each branch.
pub fn exact_dispersion(schedule: &CoinSchedule, k_grid: &[f64]) -> Result<SpectralCurve> {
    if k_grid
        .iter()
        .any(|k| !k.is_finite() || *k < -PI - 1e-12 || *k > PI + 1e-12)
    {
        return Err(Error::InvalidArgument("k-grid must lie in [-π, π]".into()));
    }
    if k_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "k-grid must be strictly increasing".into(),
        ));
    }
    let mut samples: Vec<BandSample> = Vec::with_capacity(k_grid.len());
    for &k in k_grid {
        let (mut modes, touching) = modes_at(schedule, k)?;
        let sample = match samples.last() {
            None => {
                if modes[1].down_weight > modes[0].down_weight {
                    modes.swap(0, 1);
                }
                BandSample {
                    k,
                    omega_plus: modes[0].omega,
                    omega_minus: modes[1].omega,
                    v_plus: modes[0].velocity,
                    v_minus: modes[1].velocity,
                    band_touching: touching,
                }
            }
            Some(prev) => {
                let dk = k - prev.k;
                let pred_plus = prev.omega_plus + prev.v_plus * dk;
                let pred_minus = prev.omega_minus + prev.v_minus * dk;
                let cost = |a: &Eigenmode, b: &Eigenmode| {
                    wrap(a.omega - pred_plus).abs()
                        + wrap(b.omega - pred_minus).abs()
                        + 1e-6 * ((a.velocity - prev.v_plus).abs() + (b.velocity - prev.v_minus).abs())
                };
                if cost(&modes[1], &modes[0]) < cost(&modes[0], &modes[1]) {
                    modes.swap(0, 1);
                }
                BandSample {
                    k,
                    omega_plus: pred_plus + wrap(modes[0].omega - pred_plus),
                    omega_minus: pred_minus + wrap(modes[1].omega - pred_minus),
                    v_plus: modes[0].velocity,
                    v_minus: modes[1].velocity,
                    band_touching: touching,
                }
            }
        };
        samples.push(sample);
    }
    // Central differences on the unwrapped branches where the bands touch.
    for i in 0..samples.len() {
        if samples[i].band_touching && i > 0 && i + 1 < samples.len() {
            let (a, b) = (samples[i - 1], samples[i + 1]);
            let dk = b.k - a.k;
            samples[i].v_plus = (b.omega_plus - a.omega_plus) / dk;
            samples[i].v_minus = (b.omega_minus - a.omega_minus) / dk;
        }
    }
    Ok(SpectralCurve {
        period_steps: schedule.period_steps(),
        samples,
    })
}

/// Exact light-cone speed of a schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupSpeed {
    /// `max_k |dω/dk|` divided by the walk steps per effective step.
    pub per_step: f64,
    /// Momentum of the maximiser.
    pub k: f64,
    /// Bands touch somewhere on the search grid.
    pub band_touching: bool,
}

/// `max_k |dω/dk|` per walk step, from a [`DEFAULT_K_COUNT`]-point grid
/// refined by golden-section search around the best grid point.
pub fn max_group_speed(schedule: &CoinSchedule) -> Result<GroupSpeed> {
    max_group_speed_on(schedule, DEFAULT_K_COUNT)
}

pub fn max_group_speed_on(schedule: &CoinSchedule, k_count: usize) -> Result<GroupSpeed> {
    if k_count < 3 {
        return Err(Error::InvalidArgument("k-grid needs at least 3 points".into()));
    }
    let grid = k_grid(k_count);
    let mut best = (0usize, f64::NEG_INFINITY);
    let mut touching = false;
    for (i, &k) in grid.iter().enumerate() {
        let (modes, t) = modes_at(schedule, k)?;
        touching |= t;
        let s = modes[0].velocity.abs().max(modes[1].velocity.abs());
        if s > best.1 {
            best = (i, s);
        }
    }
    let (i, grid_best) = best;
    let lo = grid[i.saturating_sub(1)];
    let hi = grid[(i + 1).min(grid.len() - 1)];
    let (k_ref, s_ref) = golden_section_max(|k| max_speed_at(schedule, k), lo, hi, 1e-13)?;
    let (k, speed) = if s_ref >= grid_best {
        (k_ref, s_ref)
    } else {
        (grid[i], grid_best)
    };
    Ok(GroupSpeed {
        per_step: speed / f64::from(schedule.period_steps()),
        k,
        band_touching: touching,
    })
}

fn golden_section_max(
    f: impl Fn(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

/// Which closed-form speed law to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedKind {
    One,
    Two,
    Three,
    N(u32),
}

impl SpeedKind {
    /// Law matching a schedule; split-step walks share the two-period law.
    pub fn for_schedule(schedule: &CoinSchedule) -> Option<(Self, CoinAngle, CoinAngle)> {
        match *schedule {
            CoinSchedule::Homogeneous { theta } => Some((Self::One, theta, theta)),
            CoinSchedule::NPeriod { n: 2, theta1, theta2 }
            | CoinSchedule::SplitStep { theta1, theta2 } => Some((Self::Two, theta1, theta2)),
            CoinSchedule::NPeriod { n: 3, theta1, theta2 } => Some((Self::Three, theta1, theta2)),
            CoinSchedule::NPeriod { n, theta1, theta2 } if n >= 2 => {
                Some((Self::N(n), theta1, theta2))
            }
            _ => None,
        }
    }
}

/// Signed branch velocities of a closed-form speed law.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupVelocities(pub Vec<f64>);

impl GroupVelocities {
    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

/// Closed-form per-step group velocities from the continuum limit.
///
/// - `One`: `∓cos θ₁`
/// - `Two`: `∓cos θ₁ cos θ₂`
/// - `Three`: `±(v₁ ± v₂)/2`
/// - `N(n)`: `±((n−2)v₁ ± v₂)/(n−1)`, which reduces to the two- and
///   three-period laws at `n = 2, 3`.
pub fn law_group_velocity(
    kind: SpeedKind,
    theta1: CoinAngle,
    theta2: CoinAngle,
) -> Result<GroupVelocities> {
    let v1 = theta1.cos();
    let v2 = theta1.cos() * theta2.cos();
    let mixed = |n: f64| {
        let mut out = Vec::with_capacity(4);
        for outer in [1.0, -1.0] {
            for inner in [1.0, -1.0] {
                out.push(outer * ((n - 2.0) * v1 + inner * v2) / (n - 1.0));
            }
        }
        GroupVelocities(out)
    };
    Ok(match kind {
        SpeedKind::One => GroupVelocities(vec![-v1, v1]),
        SpeedKind::Two => GroupVelocities(vec![-v2, v2]),
        SpeedKind::Three => mixed(3.0),
        SpeedKind::N(n) if n >= 2 => mixed(f64::from(n)),
        SpeedKind::N(n) => {
            return Err(Error::InvalidArgument(format!(
                "period must be at least 2, got {n}"
            )))
        }
    })
}

/// Predicted spread radius `t · max|v|` of the closed-form law:
/// `t|cos θ₁ cos θ₂|` (two), `(t/2)(|cos θ₁| + |cos θ₁ cos θ₂|)` (three),
/// `(t/(n−1))((n−2)|cos θ₁| + |cos θ₁ cos θ₂|)` (n).
pub fn spread_bound(kind: SpeedKind, theta1: CoinAngle, theta2: CoinAngle, t: u64) -> Result<f64> {
    Ok(t as f64 * law_group_velocity(kind, theta1, theta2)?.max_abs())
}

/// Continuum-limit dispersion `ω = ∓k v + i(cos(θ₁ + θ₂) − 1)` for the one-
/// (`θ₂` ignored) and two-period laws, ordered `(+, −)`. Other laws have no
/// closed-form dispersion.
pub fn law_dispersion(kind: SpeedKind, theta1: CoinAngle, theta2: CoinAngle, k: f64) -> Option<[C64; 2]> {
    let (v, damping) = match kind {
        SpeedKind::One => (theta1.cos(), theta1.cos() - 1.0),
        SpeedKind::Two => (
            theta1.cos() * theta2.cos(),
            (theta1.0 + theta2.0).cos() - 1.0,
        ),
        _ => return None,
    };
    Some([C64::new(-k * v, damping), C64::new(k * v, damping)])
}
