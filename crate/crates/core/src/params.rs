//! Problem parameters and the closed-form constants of the three classical
//! solutions (hyperplane, sphere, cylinder).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimension `n` of the hypersurface and the constant `lambda` in
/// `H + <X, nu> = lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub n: u32,
    pub lambda: f64,
}

/// `(-lambda + sqrt(lambda^2 + 4k)) / 2`, the positive root of
/// `rho^2 + lambda rho - k = 0`, evaluated without cancellation.
fn positive_root(lambda: f64, k: f64) -> f64 {
    let disc = (lambda * lambda + 4.0 * k).sqrt();
    if lambda > 0.0 {
        2.0 * k / (lambda + disc)
    } else {
        0.5 * (disc - lambda)
    }
}

impl Params {
    pub fn new(n: u32, lambda: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParams(format!("n must be >= 2, got {n}")));
        }
        if !lambda.is_finite() {
            return Err(Error::InvalidParams(format!(
                "lambda must be finite, got {lambda}"
            )));
        }
        Ok(Params { n, lambda })
    }

    pub fn validate(&self) -> Result<()> {
        Params::new(self.n, self.lambda).map(|_| ())
    }

    #[inline]
    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    /// Radius of the round sphere centred at the origin.
    pub fn sphere_radius(&self) -> f64 {
        positive_root(self.lambda, self.nf())
    }

    /// Radius of the cylinder `S^{n-1} x R` whose axis passes through the origin.
    pub fn cylinder_radius(&self) -> f64 {
        positive_root(self.lambda, self.nf() - 1.0)
    }

    /// Distance of the hyperplane solution `x = -lambda` from the origin, signed.
    pub fn plane_offset(&self) -> f64 {
        -self.lambda
    }

    /// Coefficient of the zeroth-order term in the linearization about the
    /// sphere: `sphere_radius * sqrt(lambda^2 + 4n)`.
    pub fn a_coefficient(&self) -> f64 {
        self.sphere_radius() * (self.lambda * self.lambda + 4.0 * self.nf()).sqrt()
    }

    /// Lower end `-2 / sqrt(n + 2)` of the existence window.
    pub fn theorem_lambda_min(&self) -> f64 {
        -2.0 / (self.nf() + 2.0).sqrt()
    }

    /// True iff `-2/sqrt(n+2) < lambda < 0`.
    pub fn in_theorem_range(&self) -> bool {
        self.lambda > self.theorem_lambda_min() && self.lambda < 0.0
    }
}
