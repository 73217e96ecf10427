//! Right-hand sides of the profile-curve equations and the pointwise
//! geometric quantities derived from them.
//!
//! Every function here is pure. Singular loci (`r = 0`, `u = 0`, `phi = 0`)
//! are rejected; series starts at the axis live in the integrator.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::Params;

/// Arc-length state of the profile curve in the half-plane `{(x, r): r >= 0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileState {
    pub s: f64,
    pub x: f64,
    pub r: f64,
    pub theta: f64,
}

/// Profile written locally as `x = f(r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphOverR {
    pub r: f64,
    pub f: f64,
    pub fp: f64,
}

/// Profile written in polar form `rho = rho(phi)`, `phi = atan(r / x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarState {
    pub phi: f64,
    pub rho: f64,
    pub rhop: f64,
}

/// State measured from the hyperplane solution: `h = x + lambda`,
/// `delta = theta - pi/2`.
///
/// Near the plane both components are tiny and carry full relative
/// precision, which `(x, theta)` cannot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneOffset {
    pub h: f64,
    pub r: f64,
    pub delta: f64,
}

impl PlaneOffset {
    pub fn from_profile(p: &Params, st: &ProfileState) -> Self {
        PlaneOffset {
            h: st.x + p.lambda,
            r: st.r,
            delta: st.theta - FRAC_PI_2,
        }
    }

    pub fn to_profile(&self, p: &Params, s: f64) -> ProfileState {
        ProfileState {
            s,
            x: self.h - p.lambda,
            r: self.r,
            theta: FRAC_PI_2 + self.delta,
        }
    }
}

fn require_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be > 0, got {v}")))
    }
}

/// `(x', r', theta')` of the arc-length system.
pub fn rhs_arclength(p: &Params, st: &ProfileState) -> Result<(f64, f64, f64)> {
    require_positive("r", st.r)?;
    let (sin_t, cos_t) = st.theta.sin_cos();
    let n1 = p.nf() - 1.0;
    let dtheta = (n1 / st.r - st.r) * cos_t + st.x * sin_t + p.lambda;
    Ok((cos_t, sin_t, dtheta))
}

/// The arc-length system in plane-offset variables: `(h', r', delta')`.
///
/// Algebraically identical to [`rhs_arclength`]; the `lambda (1 - cos delta)`
/// term is written as `2 lambda sin^2(delta/2)` so that every term is
/// proportional to the offset.
pub fn rhs_plane_offset(p: &Params, st: &PlaneOffset) -> Result<(f64, f64, f64)> {
    require_positive("r", st.r)?;
    Ok(rhs_plane_offset_unchecked(p, st))
}

#[inline]
pub(crate) fn rhs_plane_offset_unchecked(p: &Params, st: &PlaneOffset) -> (f64, f64, f64) {
    let (sin_d, cos_d) = st.delta.sin_cos();
    let half = (0.5 * st.delta).sin();
    let n1 = p.nf() - 1.0;
    let ddelta = -(n1 / st.r - st.r) * sin_d + st.h * cos_d + 2.0 * p.lambda * half * half;
    (-sin_d, cos_d, ddelta)
}

/// `f''` for a profile written as `x = f(r)`.
pub fn rhs_graph_over_r(p: &Params, g: &GraphOverR) -> Result<f64> {
    require_positive("r", g.r)?;
    let q = 1.0 + g.fp * g.fp;
    let n1 = p.nf() - 1.0;
    Ok(q * ((g.r - n1 / g.r) * g.fp - g.f - p.lambda * q.sqrt()))
}

/// `u''` for a profile written as `r = u(x)`.
pub fn rhs_graph_over_x(p: &Params, x: f64, u: f64, up: f64) -> Result<f64> {
    require_positive("u", u)?;
    let q = 1.0 + up * up;
    let n1 = p.nf() - 1.0;
    Ok(q * (x * up - u + n1 / u + p.lambda * q.sqrt()))
}

/// `rho''` for a profile written in polar form.
pub fn rhs_polar(p: &Params, st: &PolarState) -> Result<f64> {
    require_positive("phi", st.phi)?;
    require_positive("rho", st.rho)?;
    let (rho, rp) = (st.rho, st.rhop);
    let q = rho * rho + rp * rp;
    let n = p.nf();
    let cot = st.phi.cos() / st.phi.sin();
    let bracket = n - rho * rho - (n - 1.0) * (rp / rho) * cot - p.lambda * q.sqrt();
    Ok((rp * rp + q * bracket) / rho)
}

/// Principal curvatures with respect to the normal `(-r', x' alpha)`:
/// `n - 1` rotational curvatures `-cos(theta)/r` followed by the profile
/// curvature `theta'`.
pub fn principal_curvatures(p: &Params, st: &ProfileState, dtheta: f64) -> Result<Vec<f64>> {
    require_positive("r", st.r)?;
    let rot = -st.theta.cos() / st.r;
    let mut k = vec![rot; p.n as usize - 1];
    k.push(dtheta);
    Ok(k)
}

/// Mean curvature `H = theta' - (n - 1) cos(theta) / r`.
pub fn mean_curvature(p: &Params, st: &ProfileState, dtheta: f64) -> Result<f64> {
    require_positive("r", st.r)?;
    Ok(dtheta - (p.nf() - 1.0) * st.theta.cos() / st.r)
}

/// `<X, nu>` for the point of the hypersurface over `st`.
pub fn support(st: &ProfileState) -> f64 {
    let (sin_t, cos_t) = st.theta.sin_cos();
    -st.x * sin_t + st.r * cos_t
}

/// `H + <X, nu> - lambda`; zero along exact solutions.
pub fn lambda_residual(p: &Params, st: &ProfileState, dtheta: f64) -> Result<f64> {
    Ok(mean_curvature(p, st, dtheta)? + support(st) - p.lambda)
}
