//! The two linearized problems: around the hyperplane (a Kummer equation in
//! `xi = r^2`) and around the round sphere (a Legendre-type equation in
//! `xi = cos(phi)`), with finite-difference checks against the nonlinear flow.

use std::f64::consts::FRAC_PI_2;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dopri::{integrate, Node, Options, Stop};
use crate::error::{Error, Result};
use crate::integrator::IntegratorConfig;
use crate::params::Params;

/// Distance from the singular endpoint (`r = 0` or `phi = 0`) at which the
/// Taylor start is evaluated.
pub const SERIES_OFFSET: f64 = 1e-4;

/// The linear solves are cheap, so they never run looser than this.
const LINEAR_REL_TOL: f64 = 1e-13;
const LINEAR_ABS_TOL: f64 = 1e-15;

/// Spacing in `xi` of the nodes used to extrapolate `xi`-derivatives to `xi = 0`.
const XI_STEP: f64 = 0.05;
const XI_NODES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinSample {
    /// `r` on the plane side, `phi` on the sphere side.
    pub t: f64,
    pub w: f64,
    pub wp: f64,
    /// `dw/dxi`.
    pub w_xi: f64,
    /// `d^2w/dxi^2`.
    pub w_xixi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneLinearization {
    pub params: Params,
    pub r_max: f64,
    pub samples: Vec<LinSample>,
    pub w_at_sqrt_n: f64,
    pub w_at_sqrt_2n: f64,
    /// `dw/dxi(0)` extrapolated from the computed solution.
    pub w_xi_0: f64,
    /// `d^2w/dxi^2(0)` extrapolated from the computed solution.
    pub w_xixi_0: f64,
}

impl PlaneLinearization {
    pub fn positive_at_sqrt_n(&self) -> bool {
        self.w_at_sqrt_n > 0.0
    }

    pub fn negative_at_sqrt_2n(&self) -> bool {
        self.w_at_sqrt_2n < 0.0
    }

    /// `dw/dxi < 0` and `d^2w/dxi^2 < 0` on every sample.
    pub fn strictly_concave_decreasing(&self) -> bool {
        self.samples.iter().all(|s| s.w_xi < 0.0 && s.w_xixi < 0.0)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_samples_csv(path, "r", &self.samples)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereLinearization {
    pub params: Params,
    pub a: f64,
    pub samples: Vec<LinSample>,
    /// `w(pi/2)`.
    pub w_end: f64,
    /// `dw/dphi(pi/2)`.
    pub wp_end: f64,
    /// `dw/dxi` and its next two derivatives at `xi = 1`.
    pub xi_one: (f64, f64, f64),
    /// `dw/dxi`, `d^2w/dxi^2`, `d^3w/dxi^3` at `xi = 0`.
    pub xi_zero: (f64, f64, f64),
}

impl SphereLinearization {
    pub fn endpoint_signs_negative(&self) -> bool {
        self.w_end < 0.0 && self.wp_end < 0.0
    }

    /// `d^2w/dxi^2(0) > 0` and `d^3w/dxi^3(0) < 0`.
    pub fn xi_zero_chain(&self) -> bool {
        self.xi_zero.1 > 0.0 && self.xi_zero.2 < 0.0
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_samples_csv(path, "phi", &self.samples)
    }
}

fn write_samples_csv(path: &Path, var: &str, samples: &[LinSample]) -> Result<()> {
    let mut out = String::with_capacity(64 * (samples.len() + 1));
    out.push_str(var);
    out.push_str(",w,wp\n");
    for s in samples {
        out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", s.t, s.w, s.wp));
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

fn linear_options<const N: usize>(cfg: &IntegratorConfig, abs: [f64; N]) -> Options<N> {
    Options {
        rel_tol: cfg.rel_tol.min(LINEAR_REL_TOL),
        abs_tol: abs,
        max_step: cfg.max_step,
        initial_step: SERIES_OFFSET,
        max_steps: 1_000_000,
        event_tol: cfg.event_tol,
    }
}

/// Integrates through each of `stops` in turn so that every stop is a node.
fn integrate_through<F, const N: usize>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    stops: &[f64],
    opts: &Options<N>,
) -> Result<Vec<Node<N>>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let mut nodes: Vec<Node<N>> = Vec::new();
    let (mut t, mut y) = (t0, y0);
    for &stop in stops {
        if stop <= t {
            continue;
        }
        let sol = integrate(&mut f, t, y, stop, opts, &[]);
        if sol.stop != Stop::End {
            return Err(Error::Integration(format!(
                "linear solve stopped with {:?} at t = {}",
                sol.stop,
                sol.last().t
            )));
        }
        let skip = usize::from(!nodes.is_empty());
        nodes.extend(sol.nodes.iter().skip(skip));
        t = stop;
        y = sol.last().y;
    }
    Ok(nodes)
}

fn node_at<const N: usize>(nodes: &[Node<N>], t: f64) -> &Node<N> {
    nodes.iter().find(|nd| nd.t == t).expect("stop is a node")
}

/// Coefficients `a_k` of the plane-side solution `w = sum a_k xi^k`,
/// `a_0 = 1`, `a_{k+1} = (2k - 1) a_k / (2 (k + 1) (2k + n))`.
pub fn plane_series_coefficients(n: u32, terms: usize) -> Vec<f64> {
    let nf = n as f64;
    let mut a = vec![1.0];
    for k in 0..terms.saturating_sub(1) {
        let kf = k as f64;
        let next = a[k] * (2.0 * kf - 1.0) / (2.0 * (kf + 1.0) * (2.0 * kf + nf));
        a.push(next);
    }
    a
}

/// Coefficients `b_k` of the sphere-side solution `w = sum b_k (xi - 1)^k`,
/// `b_0 = 1`, `b_{k+1} = (A - k (n + k - 1)) b_k / ((k + 1) (2k + n))`.
pub fn sphere_series_coefficients(p: &Params, terms: usize) -> Vec<f64> {
    let (nf, a) = (p.nf(), p.a_coefficient());
    let mut b = vec![1.0];
    for k in 0..terms.saturating_sub(1) {
        let kf = k as f64;
        let next = b[k] * (a - kf * (nf + kf - 1.0)) / ((kf + 1.0) * (2.0 * kf + nf));
        b.push(next);
    }
    b
}

fn poly(c: &[f64], x: f64) -> (f64, f64) {
    let mut v = 0.0;
    let mut d = 0.0;
    for &ck in c.iter().rev() {
        d = d * x + v;
        v = v * x + ck;
    }
    (v, d)
}

/// Value at 0 of the polynomial through `(x_i, y_i)` (Neville).
fn extrapolate_to_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let mut p = ys.to_vec();
    let m = xs.len();
    for k in 1..m {
        for i in 0..m - k {
            p[i] = (xs[i + k] * p[i] - xs[i] * p[i + 1]) / (xs[i + k] - xs[i]);
        }
    }
    p[0]
}

fn plane_rhs(nf: f64) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] {
    move |r, y| [y[1], (r - (nf - 1.0) / r) * y[1] - y[0]]
}

/// `w'' = (r - (n-1)/r) w' - w`, `w(0) = 1`, `w'(0) = 0`, on `[0, r_max]`.
pub fn solve_plane_linearization(
    p: &Params,
    r_max: f64,
    cfg: &IntegratorConfig,
) -> Result<PlaneLinearization> {
    p.validate()?;
    cfg.validate()?;
    let nf = p.nf();
    let (r_n, r_2n) = (nf.sqrt(), (2.0 * nf).sqrt());
    if !(r_max >= r_2n && r_max.is_finite()) {
        return Err(Error::Domain(format!("r_max = {r_max} is below sqrt(2n) = {r_2n}")));
    }

    // Taylor start through xi^3 from the initial derivatives in xi.
    let a = plane_series_coefficients(p.n, 4);
    let r0 = SERIES_OFFSET;
    let (w0, dw0) = poly(&a, r0 * r0);
    let y0 = [w0, 2.0 * r0 * dw0];

    let xi_nodes: Vec<f64> = (1..=XI_NODES).map(|j| (j as f64 * XI_STEP).sqrt()).collect();
    let mut stops = xi_nodes.clone();
    stops.extend([r_n, r_2n, r_max]);
    stops.sort_by(f64::total_cmp);
    stops.dedup();

    let rhs = plane_rhs(nf);
    let opts = linear_options(cfg, [cfg.abs_tol.min(LINEAR_ABS_TOL); 2]);
    let nodes = integrate_through(&rhs, r0, y0, &stops, &opts)?;

    let mut samples = Vec::with_capacity(nodes.len() + 1);
    samples.push(LinSample {
        t: 0.0,
        w: 1.0,
        wp: 0.0,
        w_xi: a[1],
        w_xixi: 2.0 * a[2],
    });
    samples.extend(nodes.iter().map(|nd| {
        let (r, w, wp) = (nd.t, nd.y[0], nd.y[1]);
        // w'' - w'/r with w'' taken from the equation.
        let bracket = (r - nf / r) * wp - w;
        LinSample {
            t: r,
            w,
            wp,
            w_xi: wp / (2.0 * r),
            w_xixi: bracket / (4.0 * r * r),
        }
    }));

    let xs: Vec<f64> = xi_nodes.iter().map(|r| r * r).collect();
    let pick = |f: fn(&LinSample) -> f64| -> Vec<f64> {
        xi_nodes
            .iter()
            .map(|&r| f(samples.iter().find(|s| s.t == r).expect("stop is a node")))
            .collect()
    };
    let w_xi_0 = extrapolate_to_zero(&xs, &pick(|s| s.w_xi));
    let w_xixi_0 = extrapolate_to_zero(&xs, &pick(|s| s.w_xixi));

    Ok(PlaneLinearization {
        params: *p,
        r_max,
        w_at_sqrt_n: node_at(&nodes, r_n).y[0],
        w_at_sqrt_2n: node_at(&nodes, r_2n).y[0],
        samples,
        w_xi_0,
        w_xixi_0,
    })
}

/// `(dw/dxi, d^2w/dxi^2, d^3w/dxi^3)` at `xi = 1`, read off the Legendre-type
/// equation `(1 - xi^2) w'' - n xi w' + A w = 0` with `w(1) = 1`.
pub fn endpoint_derivatives(p: &Params) -> (f64, f64, f64) {
    let (n, a) = (p.nf(), p.a_coefficient());
    (
        a / n,
        -(n - a) * a / (n * (n + 2.0)),
        (2.0 * n + 2.0 - a) * (n - a) * a / (n * (n + 2.0) * (n + 4.0)),
    )
}

fn sphere_rhs(nf: f64, a: f64) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] {
    move |phi, y| [y[1], -(nf - 1.0) * y[1] / phi.tan() - a * y[0]]
}

/// `w'' = -(n-1) cot(phi) w' - A w`, `w(0) = 1`, `w'(0) = 0`, on `[0, pi/2]`.
pub fn solve_sphere_linearization(p: &Params, cfg: &IntegratorConfig) -> Result<SphereLinearization> {
    p.validate()?;
    cfg.validate()?;
    let (nf, a) = (p.nf(), p.a_coefficient());
    let (d1, d2, d3) = endpoint_derivatives(p);
    // Taylor start in u = xi - 1 through u^3.
    let b = [1.0, d1, d2 / 2.0, d3 / 6.0];
    let phi0 = SERIES_OFFSET;
    let u0 = -2.0 * (0.5 * phi0).sin().powi(2);
    let (w0, dw_du) = poly(&b, u0);
    let y0 = [w0, -phi0.sin() * dw_du];

    let rhs = sphere_rhs(nf, a);
    let opts = linear_options(cfg, [cfg.abs_tol.min(LINEAR_ABS_TOL); 2]);
    let nodes = integrate_through(&rhs, phi0, y0, &[FRAC_PI_2], &opts)?;

    let mut samples = Vec::with_capacity(nodes.len() + 1);
    samples.push(LinSample { t: 0.0, w: 1.0, wp: 0.0, w_xi: d1, w_xixi: d2 });
    samples.extend(nodes.iter().map(|nd| {
        let (phi, w, wp) = (nd.t, nd.y[0], nd.y[1]);
        let (s, c) = phi.sin_cos();
        let wpp = rhs(phi, &nd.y)[1];
        LinSample {
            t: phi,
            w,
            wp,
            w_xi: -wp / s,
            w_xixi: (wpp * s - wp * c) / (s * s * s),
        }
    }));

    let end = nodes.last().expect("nonempty").y;
    let w_xi_0 = -end[1];
    let xi_zero = (w_xi_0, -a * end[0], (nf - a) * w_xi_0);
    Ok(SphereLinearization {
        params: *p,
        a,
        samples,
        w_end: end[0],
        wp_end: end[1],
        xi_one: (d1, d2, d3),
        xi_zero,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Plane,
    Sphere,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdCheck {
    pub side: Side,
    pub epsilon: f64,
    /// `max |(v(+eps) - v(-eps)) / (2 eps) - w|` over the shared grid.
    pub max_deviation: f64,
    pub grid_points: usize,
}

/// Central difference of the nonlinear solution with respect to its
/// initial offset, compared against the linearized solution. The three
/// solutions are integrated as one system so they share every node.
pub fn finite_difference_check(
    p: &Params,
    epsilon: f64,
    side: Side,
    cfg: &IntegratorConfig,
) -> Result<FdCheck> {
    p.validate()?;
    cfg.validate()?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!("epsilon must lie in (0, 1), got {epsilon:e}")));
    }
    let abs = cfg.abs_tol.min(LINEAR_ABS_TOL);
    let opts = linear_options(cfg, [abs * epsilon, abs * epsilon, abs * epsilon, abs * epsilon, abs, abs]);
    let nodes = match side {
        Side::Plane => fd_plane(p, epsilon, &opts)?,
        Side::Sphere => fd_sphere(p, epsilon, &opts)?,
    };
    let max_deviation = nodes
        .iter()
        .map(|nd| ((nd.y[0] - nd.y[2]) / (2.0 * epsilon) - nd.y[4]).abs())
        .fold(0.0, f64::max);
    if !max_deviation.is_finite() {
        return Err(Error::Integration("nonlinear comparison solve diverged".into()));
    }
    Ok(FdCheck {
        side,
        epsilon,
        max_deviation,
        // The singular endpoint itself agrees exactly.
        grid_points: nodes.len() + 1,
    })
}

/// `u = f + lambda` for the graph `x = f(r)` near the hyperplane `f = -lambda`.
fn fd_plane(p: &Params, eps: f64, opts: &Options<6>) -> Result<Vec<Node<6>>> {
    let (nf, lam) = (p.nf(), p.lambda);
    let r_end = (2.0 * nf).sqrt();
    let lin = plane_rhs(nf);
    let nonlinear = move |r: f64, u: f64, up: f64| {
        let q = 1.0 + up * up;
        q * ((r - (nf - 1.0) / r) * up - u - lam * up * up / (q.sqrt() + 1.0))
    };
    let rhs = move |r: f64, y: &[f64; 6]| {
        let l = lin(r, &[y[4], y[5]]);
        [y[1], nonlinear(r, y[0], y[1]), y[3], nonlinear(r, y[2], y[3]), l[0], l[1]]
    };
    let a = plane_series_coefficients(p.n, 4);
    let r0 = SERIES_OFFSET;
    let (w0, dw0) = poly(&a, r0 * r0);
    let wp0 = 2.0 * r0 * dw0;
    let y0 = [eps * w0, eps * wp0, -eps * w0, -eps * wp0, w0, wp0];
    integrate_through(rhs, r0, y0, &[r_end], opts)
}

/// `v = rho - R` for the polar graph near the round sphere `rho = R`.
fn fd_sphere(p: &Params, eps: f64, opts: &Options<6>) -> Result<Vec<Node<6>>> {
    let (nf, lam, big_r, a) = (p.nf(), p.lambda, p.sphere_radius(), p.a_coefficient());
    let lin = sphere_rhs(nf, a);
    let nonlinear = move |phi: f64, v: f64, vp: f64| {
        let rho = big_r + v;
        let q = rho * rho + vp * vp;
        let grow = v * (2.0 * big_r + v);
        let bracket = -grow - lam * (grow + vp * vp) / (q.sqrt() + big_r);
        (vp * vp + q * (bracket - (nf - 1.0) * (vp / rho) / phi.tan())) / rho
    };
    let rhs = move |phi: f64, y: &[f64; 6]| {
        let l = lin(phi, &[y[4], y[5]]);
        [y[1], nonlinear(phi, y[0], y[1]), y[3], nonlinear(phi, y[2], y[3]), l[0], l[1]]
    };
    let (d1, d2, d3) = endpoint_derivatives(p);
    let b = [1.0, d1, d2 / 2.0, d3 / 6.0];
    let phi0 = SERIES_OFFSET;
    let u0 = -2.0 * (0.5 * phi0).sin().powi(2);
    let (w0, dw_du) = poly(&b, u0);
    let wp0 = -phi0.sin() * dw_du;
    let y0 = [eps * w0, eps * wp0, -eps * w0, -eps * wp0, w0, wp0];
    integrate_through(rhs, phi0, y0, &[FRAC_PI_2], opts)
}
