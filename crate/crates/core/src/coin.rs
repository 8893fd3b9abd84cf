//! Coin operator and initial internal state.

use std::f64::consts::PI;

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type C64 = Complex64;

/// 2×2 complex matrix acting on the (down, up) spinor.
pub type Mat2 = Matrix2<C64>;

/// Rotation angle of the single-parameter coin, in radians.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoinAngle(pub f64);

impl CoinAngle {
    pub const fn new(theta: f64) -> Self {
        Self(theta)
    }

    /// `fraction * π`.
    pub fn pi_fraction(fraction: f64) -> Self {
        Self(fraction * PI)
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn cos(self) -> f64 {
        self.0.cos()
    }

    pub fn sin(self) -> f64 {
        self.0.sin()
    }

    pub fn matrix(self) -> Mat2 {
        make_coin(self)
    }
}

impl From<f64> for CoinAngle {
    fn from(theta: f64) -> Self {
        Self(theta)
    }
}

/// `[[cos θ, −i sin θ], [−i sin θ, cos θ]]`
pub fn make_coin(theta: CoinAngle) -> Mat2 {
    let (s, c) = theta.0.sin_cos();
    let diag = C64::new(c, 0.0);
    let off = C64::new(0.0, -s);
    Mat2::new(diag, off, off, diag)
}

/// Internal state `cos δ |0⟩ + e^{−iη} sin δ |1⟩`, where `|0⟩` is the
/// left-moving (down) component and `|1⟩` the right-moving (up) one.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InitialCoinState {
    pub delta: f64,
    pub eta: f64,
}

impl InitialCoinState {
    /// Pure down spinor (δ = 0).
    pub const DOWN: Self = Self {
        delta: 0.0,
        eta: 0.0,
    };

    /// Equal-weight real superposition (δ = π/4, η = 0). For this coin it
    /// yields a left-right symmetric distribution.
    pub const SYMMETRIC: Self = Self {
        delta: std::f64::consts::FRAC_PI_4,
        eta: 0.0,
    };

    pub fn new(delta: f64, eta: f64) -> Self {
        Self { delta, eta }
    }

    /// `(ψ↓, ψ↑)` components.
    pub fn spinor(&self) -> [C64; 2] {
        let (s, c) = self.delta.sin_cos();
        [C64::new(c, 0.0), C64::from_polar(s, -self.eta)]
    }
}
