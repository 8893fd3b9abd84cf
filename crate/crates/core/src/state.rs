//! Dense walker state and the elementary unitaries (coin, full shift, half
//! shifts).
//!
//! Amplitudes live in two contiguous arrays over an inclusive site window
//! that the caller sizes from the planned number of steps. Shifts never wrap:
//! moving a nonzero amplitude past the window edge is a
//! [`Error::WindowOverflow`].

use serde::{Deserialize, Serialize};

use crate::coin::{make_coin, CoinAngle, InitialCoinState, C64};
use crate::error::{Error, Result};

/// Gaussian amplitudes are truncated to exactly zero beyond this many widths
/// from the centre (`exp(−144/4)` is below double-precision resolution).
const GAUSSIAN_CUTOFF_WIDTHS: f64 = 12.0;

/// Inclusive interval of lattice sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Window {
    pub min: i64,
    pub max: i64,
}

impl Window {
    pub fn new(min: i64, max: i64) -> Result<Self> {
        if max < min {
            return Err(Error::InvalidArgument(format!(
                "empty window [{min}, {max}]"
            )));
        }
        Ok(Self { min, max })
    }

    /// Window `[center − radius, center + radius]`.
    pub fn centered(center: i64, radius: u64) -> Self {
        let r = radius as i64;
        Self {
            min: center - r,
            max: center + r,
        }
    }

    pub fn len(&self) -> usize {
        (self.max - self.min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, x: i64) -> bool {
        (self.min..=self.max).contains(&x)
    }

    pub fn index(&self, x: i64) -> Option<usize> {
        self.contains(x).then(|| (x - self.min) as usize)
    }

    pub fn site(&self, index: usize) -> i64 {
        self.min + index as i64
    }

    pub fn sites(&self) -> impl Iterator<Item = i64> + Clone {
        self.min..=self.max
    }

    /// Shrinks the window by `by` sites on each side.
    pub fn shrink(&self, by: u64) -> Self {
        let by = by as i64;
        let min = (self.min + by).min(self.max);
        Self {
            min,
            max: (self.max - by).max(min),
        }
    }
}

/// Spatial shape of the initial wave packet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PositionProfile {
    Point { center: i64 },
    /// Amplitudes `∝ exp(−(x − center)² / 4w²)`, i.e. a probability density
    /// of standard deviation `w` sites.
    Gaussian { center: i64, width: f64 },
}

impl Default for PositionProfile {
    fn default() -> Self {
        Self::Point { center: 0 }
    }
}

impl PositionProfile {
    pub fn point(center: i64) -> Self {
        Self::Point { center }
    }

    pub fn gaussian(center: i64, width: f64) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::InvalidProfile(format!(
                "gaussian width must be positive and finite, got {width}"
            )));
        }
        Ok(Self::Gaussian { center, width })
    }

    pub fn center(&self) -> i64 {
        match *self {
            Self::Point { center } | Self::Gaussian { center, .. } => center,
        }
    }

    pub fn is_point(&self) -> bool {
        matches!(self, Self::Point { .. })
    }

    /// Half-extent of the nonzero part of the packet.
    pub fn reach(&self) -> u64 {
        match *self {
            Self::Point { .. } => 0,
            Self::Gaussian { width, .. } => (GAUSSIAN_CUTOFF_WIDTHS * width).ceil() as u64,
        }
    }

    /// Window that can absorb `steps` full steps without overflow: the packet
    /// reach plus `steps + 1` sites on each side.
    pub fn window_for(&self, steps: u64) -> Window {
        Window::centered(self.center(), self.reach() + steps + 1)
    }

    /// Normalised position amplitudes over `window`.
    pub fn amplitudes(&self, window: Window) -> Result<Vec<f64>> {
        let mut amps = vec![0.0; window.len()];
        match *self {
            Self::Point { center } => {
                let i = window.index(center).ok_or_else(|| {
                    Error::InvalidProfile(format!("center {center} outside window"))
                })?;
                amps[i] = 1.0;
            }
            Self::Gaussian { center, width } => {
                let reach = self.reach() as i64;
                for (a, x) in amps.iter_mut().zip(window.sites()) {
                    let d = (x - center) as f64;
                    if (x - center).abs() <= reach {
                        *a = (-d * d / (4.0 * width * width)).exp();
                    }
                }
                let norm = amps.iter().map(|a| a * a).sum::<f64>().sqrt();
                if norm == 0.0 {
                    return Err(Error::InvalidProfile(
                        "gaussian packet does not overlap the window".into(),
                    ));
                }
                amps.iter_mut().for_each(|a| *a /= norm);
            }
        }
        Ok(amps)
    }
}

/// Two-component amplitude field over a bounded window at a given step.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkerState {
    window: Window,
    origin: i64,
    down: Vec<C64>,
    up: Vec<C64>,
    step_count: u64,
}

impl WalkerState {
    /// All-zero state over `window`; `origin` is the reference site for
    /// radius measurements.
    pub fn zeros(window: Window, origin: i64) -> Self {
        Self {
            window,
            origin,
            down: vec![C64::default(); window.len()],
            up: vec![C64::default(); window.len()],
            step_count: 0,
        }
    }

    /// Product state `spinor ⊗ profile` in a window sized for `steps` steps.
    pub fn prepare(coin: InitialCoinState, profile: PositionProfile, steps: u64) -> Result<Self> {
        Self::prepare_in(coin, profile, profile.window_for(steps))
    }

    /// Product state `spinor ⊗ profile` over an explicit window.
    pub fn prepare_in(
        coin: InitialCoinState,
        profile: PositionProfile,
        window: Window,
    ) -> Result<Self> {
        let [a, b] = coin.spinor();
        let amps = profile.amplitudes(window)?;
        Ok(Self {
            window,
            origin: profile.center(),
            down: amps.iter().map(|&f| a * f).collect(),
            up: amps.iter().map(|&f| b * f).collect(),
            step_count: 0,
        })
    }

    pub fn from_amplitudes(
        window: Window,
        origin: i64,
        down: Vec<C64>,
        up: Vec<C64>,
        step_count: u64,
    ) -> Result<Self> {
        if down.len() != window.len() || up.len() != window.len() {
            return Err(Error::InvalidArgument(format!(
                "amplitude arrays of length {}/{} do not match window of {} sites",
                down.len(),
                up.len(),
                window.len()
            )));
        }
        Ok(Self {
            window,
            origin,
            down,
            up,
            step_count,
        })
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn origin(&self) -> i64 {
        self.origin
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn set_step_count(&mut self, t: u64) {
        self.step_count = t;
    }

    pub fn down_amplitudes(&self) -> &[C64] {
        &self.down
    }

    pub fn up_amplitudes(&self) -> &[C64] {
        &self.up
    }

    /// ψ↓(x), zero outside the window.
    pub fn down(&self, x: i64) -> C64 {
        self.window
            .index(x)
            .map_or(C64::default(), |i| self.down[i])
    }

    /// ψ↑(x), zero outside the window.
    pub fn up(&self, x: i64) -> C64 {
        self.window.index(x).map_or(C64::default(), |i| self.up[i])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.down
            .iter()
            .chain(&self.up)
            .map(|z| z.norm_sqr())
            .sum()
    }

    /// Multiplies every amplitude by `factor`.
    pub fn scale(&mut self, factor: C64) {
        self.down
            .iter_mut()
            .chain(self.up.iter_mut())
            .for_each(|z| *z *= factor);
    }

    /// Largest `|x − origin|` carrying a nonzero amplitude.
    pub fn nonzero_radius(&self) -> Option<u64> {
        self.window
            .sites()
            .zip(self.down.iter().zip(&self.up))
            .filter(|(_, (d, u))| **d != C64::default() || **u != C64::default())
            .map(|(x, _)| (x - self.origin).unsigned_abs())
            .max()
    }

    /// Applies `C(θ)` to the spinor at every site.
    pub fn apply_coin(&mut self, theta: CoinAngle) {
        let c = make_coin(theta);
        let (c00, c01, c10, c11) = (c[(0, 0)], c[(0, 1)], c[(1, 0)], c[(1, 1)]);
        for (d, u) in self.down.iter_mut().zip(self.up.iter_mut()) {
            let (a, b) = (*d, *u);
            *d = c00 * a + c01 * b;
            *u = c10 * a + c11 * b;
        }
    }

    /// `S₋`: ψ↓(x) ← ψ↓(x+1); ψ↑ untouched.
    pub fn apply_half_shift_minus(&mut self) -> Result<()> {
        if self.down[0] != C64::default() {
            return Err(self.overflow());
        }
        self.down.rotate_left(1);
        Ok(())
    }

    /// `S₊`: ψ↑(x) ← ψ↑(x−1); ψ↓ untouched.
    pub fn apply_half_shift_plus(&mut self) -> Result<()> {
        if self.up[self.up.len() - 1] != C64::default() {
            return Err(self.overflow());
        }
        self.up.rotate_right(1);
        Ok(())
    }

    /// Spin-conditioned shift `S = S₊ S₋`. Does not touch the step count.
    pub fn apply_shift(&mut self) -> Result<()> {
        if self.down[0] != C64::default() || self.up[self.up.len() - 1] != C64::default() {
            return Err(self.overflow());
        }
        self.down.rotate_left(1);
        self.up.rotate_right(1);
        Ok(())
    }

    /// One walk step `S (C(θ) ⊗ I)`.
    pub fn full_step(&mut self, theta: CoinAngle) -> Result<()> {
        // The edge amplitudes after the coin decide overflow; checking them
        // up front leaves the state untouched on error.
        let c = make_coin(theta);
        let last = self.down.len() - 1;
        let left = c[(0, 0)] * self.down[0] + c[(0, 1)] * self.up[0];
        let right = c[(1, 0)] * self.down[last] + c[(1, 1)] * self.up[last];
        if left != C64::default() || right != C64::default() {
            return Err(self.overflow());
        }
        self.apply_coin(theta);
        self.apply_shift()?;
        self.step_count += 1;
        Ok(())
    }

    /// One split step `S₊ (C(θ₂) ⊗ I) S₋ (C(θ₁) ⊗ I)`.
    pub fn split_step(&mut self, theta1: CoinAngle, theta2: CoinAngle) -> Result<()> {
        let (c1, c2) = (make_coin(theta1), make_coin(theta2));
        let last = self.down.len() - 1;
        let left = c1[(0, 0)] * self.down[0] + c1[(0, 1)] * self.up[0];
        // After S₋ the last down slot is empty, so only the up part feeds the
        // right edge.
        let right = c2[(1, 1)] * (c1[(1, 0)] * self.down[last] + c1[(1, 1)] * self.up[last]);
        if left != C64::default() || right != C64::default() {
            return Err(self.overflow());
        }
        self.apply_coin(theta1);
        self.apply_half_shift_minus()?;
        self.apply_coin(theta2);
        self.apply_half_shift_plus()?;
        self.step_count += 1;
        Ok(())
    }

    fn overflow(&self) -> Error {
        Error::WindowOverflow {
            min: self.window.min,
            max: self.window.max,
        }
    }
}
