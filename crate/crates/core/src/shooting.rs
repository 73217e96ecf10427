//! The shooting map `x0 -> B_{x0}`, its root search, closed-profile assembly
//! by reflection, and the quantitative near-plane bounds.
//!
//! Shots are parametrized by the offset `epsilon = x0 + lambda` from the
//! hyperplane solution; `x0`-based wrappers are provided.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{shoot_from_axis, EventKind, EventSet, IntegratorConfig, Trajectory};
use crate::params::Params;

/// `|x*|` at or below this classifies a turning point as lying on the r-axis.
pub const ON_AXIS_TOL: f64 = 1e-9;

/// Default `|F|` tolerance of [`find_root`].
pub const DEFAULT_ROOT_TOL: f64 = 1e-10;

pub const DEFAULT_GRID_COUNT: usize = 128;
pub const DEFAULT_LOG_COUNT: usize = 64;
/// Smallest offset on the logarithmic part of the default scan grid.
pub const MIN_LOG_OFFSET: f64 = 1e-300;

const MAX_BISECTIONS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrant {
    First,
    Second,
    OnAxis,
}

impl Quadrant {
    pub fn classify(x_star: f64) -> Self {
        if x_star.abs() <= ON_AXIS_TOL {
            Quadrant::OnAxis
        } else if x_star > 0.0 {
            Quadrant::First
        } else {
            Quadrant::Second
        }
    }
}

/// One evaluation of the shooting map. `x_star`, `r_star`, `s_star` describe
/// the terminal state; they are the turning point `B` only when
/// `terminal == TurningPoint`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotOutcome {
    pub x0: f64,
    pub epsilon: f64,
    pub x_star: f64,
    pub r_star: f64,
    pub s_star: f64,
    pub quadrant: Option<Quadrant>,
    pub terminal: EventKind,
}

impl ShotOutcome {
    pub fn reached_turning_point(&self) -> bool {
        self.terminal == EventKind::TurningPoint
    }

    fn from_trajectory(p: &Params, epsilon: f64, traj: &Trajectory) -> Self {
        let end = traj.terminal.state;
        let ok = traj.terminal.kind == EventKind::TurningPoint;
        ShotOutcome {
            x0: epsilon - p.lambda,
            epsilon,
            x_star: end.x,
            r_star: end.r,
            s_star: end.s,
            quadrant: ok.then(|| Quadrant::classify(end.x)),
            terminal: traj.terminal.kind,
        }
    }
}

fn check_offset(p: &Params, epsilon: f64) -> Result<()> {
    if !(epsilon.is_finite() && epsilon - p.lambda > 0.0) {
        return Err(Error::Domain(format!(
            "shots start on the positive x-axis: x0 = {} (offset {epsilon:e})",
            epsilon - p.lambda
        )));
    }
    Ok(())
}

/// Full trajectory of the shot with offset `epsilon`, up to its terminal event.
pub fn shot_trajectory(p: &Params, epsilon: f64, cfg: &IntegratorConfig) -> Result<Trajectory> {
    check_offset(p, epsilon)?;
    shoot_from_axis(p, epsilon, cfg, EventSet::ALL)
}

/// Evaluates the shot without treating a missing turning point as an error.
pub fn shot_outcome(p: &Params, epsilon: f64, cfg: &IntegratorConfig) -> Result<ShotOutcome> {
    let traj = shot_trajectory(p, epsilon, cfg)?;
    Ok(ShotOutcome::from_trajectory(p, epsilon, &traj))
}

/// Shoots from `(x0, 0)` perpendicular to the axis up to the first turning point.
pub fn shoot(p: &Params, x0: f64, cfg: &IntegratorConfig) -> Result<ShotOutcome> {
    shoot_offset(p, x0 + p.lambda, cfg)
}

pub fn shoot_offset(p: &Params, epsilon: f64, cfg: &IntegratorConfig) -> Result<ShotOutcome> {
    let out = shot_outcome(p, epsilon, cfg)?;
    if !out.reached_turning_point() {
        return Err(Error::NonTerminatingShot {
            x0: out.x0,
            epsilon,
            terminal: out.terminal,
        });
    }
    Ok(out)
}

/// A consecutive pair of successful grid shots across which `F = x*` changes
/// sign (or touches zero).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lo: ShotOutcome,
    pub hi: ShotOutcome,
}

impl Bracket {
    pub fn offsets(&self) -> (f64, f64) {
        (self.lo.epsilon, self.hi.epsilon)
    }

    pub fn contains_x(&self, x: f64) -> bool {
        self.lo.x0 <= x && x <= self.hi.x0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub params: Params,
    /// One outcome per grid point, in ascending offset order.
    pub outcomes: Vec<ShotOutcome>,
    pub brackets: Vec<Bracket>,
    pub outside_theorem_range: bool,
}

impl ScanResult {
    pub fn failures(&self) -> impl Iterator<Item = &ShotOutcome> {
        self.outcomes.iter().filter(|o| !o.reached_turning_point())
    }
}

/// Offsets of the default scan grid, ascending: `log_count` log-spaced
/// offsets from [`MIN_LOG_OFFSET`] (only when `lambda <= 0`) followed by
/// `grid_count` points evenly spaced in `x0` over
/// `(-lambda (1 + 1e-2), sphere_radius (1 - 1e-2))`.
pub fn default_offsets(p: &Params, grid_count: usize, log_count: usize) -> Vec<f64> {
    let radius = p.sphere_radius();
    let hi = 0.99 * radius + p.lambda;
    let lo = if p.lambda < 0.0 {
        -0.01 * p.lambda
    } else {
        p.lambda + 0.01 * radius
    };
    let mut out = Vec::with_capacity(grid_count + log_count);
    if p.lambda <= 0.0 && log_count > 0 && lo > MIN_LOG_OFFSET {
        let (a, b) = (MIN_LOG_OFFSET.log10(), lo.log10());
        for k in 0..log_count {
            out.push(10f64.powf(a + (b - a) * k as f64 / log_count as f64));
        }
    }
    out.extend(linear_offsets(p, lo - p.lambda, hi - p.lambda, grid_count));
    out
}

fn linear_offsets(p: &Params, x_lo: f64, x_hi: f64, count: usize) -> Vec<f64> {
    let last = (count.max(2) - 1) as f64;
    (0..count.max(2))
        .map(|k| {
            let x = x_lo + (x_hi - x_lo) * k as f64 / last;
            x + p.lambda
        })
        .collect()
}

/// Shoots at every offset, using at most `jobs` threads. The result is
/// independent of `jobs`.
pub fn scan_offsets(
    p: &Params,
    offsets: &[f64],
    cfg: &IntegratorConfig,
    jobs: usize,
    root_tol: f64,
) -> Result<ScanResult> {
    cfg.validate()?;
    let run = || -> Result<Vec<ShotOutcome>> {
        offsets.par_iter().map(|&e| shot_outcome(p, e, cfg)).collect()
    };
    let outcomes = if jobs == 1 {
        offsets.iter().map(|&e| shot_outcome(p, e, cfg)).collect::<Result<Vec<_>>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(run)?
    };
    Ok(assemble_scan(p, outcomes, root_tol))
}

/// Sorts outcomes by offset and extracts sign-change brackets.
pub fn assemble_scan(p: &Params, mut outcomes: Vec<ShotOutcome>, root_tol: f64) -> ScanResult {
    outcomes.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
    let brackets = find_brackets(&outcomes, root_tol);
    ScanResult {
        params: *p,
        outcomes,
        brackets,
        outside_theorem_range: !p.in_theorem_range(),
    }
}

/// Brackets between consecutive successful shots. Failed shots are skipped,
/// so their neighbours become consecutive.
pub fn find_brackets(outcomes: &[ShotOutcome], root_tol: f64) -> Vec<Bracket> {
    let ok: Vec<&ShotOutcome> = outcomes.iter().filter(|o| o.reached_turning_point()).collect();
    let mut out: Vec<Bracket> = Vec::new();
    for w in ok.windows(2) {
        let (a, b) = (w[0], w[1]);
        let sign_change = (a.x_star > 0.0) != (b.x_star > 0.0);
        let touches = a.x_star.abs() <= root_tol || b.x_star.abs() <= root_tol;
        if sign_change || touches {
            // A grid point sitting on a root would otherwise yield two brackets.
            if let Some(prev) = out.last() {
                if prev.hi.epsilon == a.epsilon && a.x_star.abs() <= root_tol {
                    continue;
                }
            }
            out.push(Bracket { lo: *a, hi: *b });
        }
    }
    out
}

/// Scans `grid_count` points evenly spaced in `x0` over `[lo, hi]`.
pub fn scan_roots(
    p: &Params,
    lo: f64,
    hi: f64,
    grid_count: usize,
    cfg: &IntegratorConfig,
) -> Result<ScanResult> {
    if !(lo > -p.lambda && hi > lo && grid_count >= 2) {
        return Err(Error::Domain(format!(
            "scan needs -lambda < lo < hi and at least 2 points (lo={lo}, hi={hi}, count={grid_count})"
        )));
    }
    let offsets = linear_offsets(p, lo, hi, grid_count);
    scan_offsets(p, &offsets, cfg, 0, DEFAULT_ROOT_TOL)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootResult {
    pub x_hat: f64,
    /// `x_hat + lambda`, kept separately because it may be far below the
    /// resolution of `x_hat`.
    pub epsilon_hat: f64,
    pub r_hat: f64,
    pub s_hat: f64,
    /// Final offset bracket.
    pub bracket: (f64, f64),
    pub iterations: usize,
    /// `|x*|` at `x_hat`.
    pub residual: f64,
    pub tolerance: f64,
    pub outside_theorem_range: bool,
    /// Offset brackets after each iteration, starting with the initial one.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub history: Vec<(f64, f64)>,
}

impl RootResult {
    /// True iff `-lambda < x_hat < sphere_radius`, judged on the offset.
    pub fn inside_theorem_interval(&self, p: &Params) -> bool {
        self.epsilon_hat > 0.0 && self.epsilon_hat < p.sphere_radius() + p.lambda
    }
}

/// Treats a single shot as a root (used for the exact sphere and for
/// re-checking stored roots).
pub fn root_at(p: &Params, epsilon: f64, tol: f64, cfg: &IntegratorConfig) -> Result<RootResult> {
    let out = shoot_offset(p, epsilon, cfg)?;
    Ok(root_from(p, &out, (epsilon, epsilon), 0, tol, Vec::new()))
}

fn root_from(
    p: &Params,
    out: &ShotOutcome,
    bracket: (f64, f64),
    iterations: usize,
    tol: f64,
    history: Vec<(f64, f64)>,
) -> RootResult {
    RootResult {
        x_hat: out.x0,
        epsilon_hat: out.epsilon,
        r_hat: out.r_star,
        s_hat: out.s_star,
        bracket,
        iterations,
        residual: out.x_star.abs(),
        tolerance: tol,
        outside_theorem_range: !p.in_theorem_range(),
        history,
    }
}

/// Bisection on `F = x*` over an `x0` bracket.
pub fn find_root(
    p: &Params,
    bracket: (f64, f64),
    tol: f64,
    cfg: &IntegratorConfig,
) -> Result<RootResult> {
    find_root_offset(p, (bracket.0 + p.lambda, bracket.1 + p.lambda), tol, cfg)
}

/// Bisection on `F = x*` over an offset bracket, until `|F| <= tol`.
pub fn find_root_offset(
    p: &Params,
    bracket: (f64, f64),
    tol: f64,
    cfg: &IntegratorConfig,
) -> Result<RootResult> {
    let (mut lo, mut hi) = if bracket.0 <= bracket.1 { bracket } else { (bracket.1, bracket.0) };
    let f_lo = shoot_offset(p, lo, cfg)?;
    if f_lo.x_star.abs() <= tol {
        return Ok(root_from(p, &f_lo, (lo, hi), 0, tol, vec![(lo, hi)]));
    }
    let f_hi = shoot_offset(p, hi, cfg)?;
    if f_hi.x_star.abs() <= tol {
        return Ok(root_from(p, &f_hi, (lo, hi), 0, tol, vec![(lo, hi)]));
    }
    if (f_lo.x_star > 0.0) == (f_hi.x_star > 0.0) {
        return Err(Error::InvalidBracket {
            lo: f_lo.x0,
            hi: f_hi.x0,
            f_lo: f_lo.x_star,
            f_hi: f_hi.x_star,
        });
    }
    let lo_positive = f_lo.x_star > 0.0;
    let mut history = vec![(lo, hi)];

    for it in 1..=MAX_BISECTIONS {
        let mid = if lo > 0.0 && hi > 4.0 * lo {
            (lo.ln() + 0.5 * (hi.ln() - lo.ln())).exp()
        } else {
            lo + 0.5 * (hi - lo)
        };
        if !(mid > lo && mid < hi) {
            let best = if f_lo_abs(p, lo, cfg)? <= f_lo_abs(p, hi, cfg)? { lo } else { hi };
            let residual = f_lo_abs(p, best, cfg)?;
            return Err(Error::RootNotConverged { residual, tol, width: hi - lo });
        }
        let out = match shoot_offset(p, mid, cfg) {
            Ok(o) => o,
            Err(Error::NonTerminatingShot { terminal, .. }) => {
                return Err(Error::BracketLost {
                    at: mid,
                    iterations: it,
                    reason: format!("shot ended with {terminal:?}"),
                })
            }
            Err(e) => return Err(e),
        };
        if out.x_star.abs() <= tol {
            return Ok(root_from(p, &out, (lo, hi), it, tol, history));
        }
        if (out.x_star > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
        history.push((lo, hi));
    }
    Err(Error::RootNotConverged {
        residual: f_lo_abs(p, lo, cfg)?,
        tol,
        width: hi - lo,
    })
}

fn f_lo_abs(p: &Params, e: f64, cfg: &IntegratorConfig) -> Result<f64> {
    Ok(shoot_offset(p, e, cfg)?.x_star.abs())
}

/// One sample of a closed profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub s: f64,
    pub x: f64,
    pub r: f64,
    pub theta: f64,
    pub dtheta: f64,
    /// `-cos(theta)`, carried separately because it keeps full relative
    /// precision near the axis where `theta` rounds to `pi/2`.
    pub neg_cos_theta: f64,
}

/// Closed profile from `(x_hat, 0)` over the r-axis to `(-x_hat, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedProfile {
    pub params: Params,
    pub x_hat: f64,
    pub epsilon_hat: f64,
    pub r_hat: f64,
    pub s_hat: f64,
    /// Distance between the end of the computed half and the start of its mirror.
    pub junction_gap: f64,
    pub points: Vec<ProfilePoint>,
}

impl ClosedProfile {
    pub fn total_length(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.s)
    }
}

/// Re-shoots at the root and closes the curve by reflecting it in the r-axis.
pub fn assemble_closed_profile(
    p: &Params,
    root: &RootResult,
    cfg: &IntegratorConfig,
) -> Result<ClosedProfile> {
    let traj = shot_trajectory(p, root.epsilon_hat, cfg)?;
    if traj.terminal.kind != EventKind::TurningPoint {
        return Err(Error::Assembly(format!(
            "shot at the root ended with {:?}",
            traj.terminal.kind
        )));
    }
    let limit = 10.0 * cfg.rel_tol.max(cfg.abs_tol) + 2.0 * root.tolerance;
    let end = traj.terminal.state;
    let gap = 2.0 * end.x.abs();
    if gap > limit {
        return Err(Error::Assembly(format!(
            "mirror mismatch {gap:e} at the junction exceeds {limit:e}"
        )));
    }
    Ok(close_by_reflection(p, root.epsilon_hat, &traj, gap))
}

/// Samples of a shot as profile points, led by the exact axis point at `s = 0`.
pub fn trajectory_points(p: &Params, epsilon: f64, traj: &Trajectory) -> Vec<ProfilePoint> {
    let mut half = Vec::with_capacity(traj.samples.len() + 1);
    // Axis endpoint: umbilic, every curvature equals theta'(0) = epsilon / n.
    half.push(ProfilePoint {
        s: 0.0,
        x: epsilon - p.lambda,
        r: 0.0,
        theta: FRAC_PI_2,
        dtheta: epsilon / p.nf(),
        neg_cos_theta: 0.0,
    });
    half.extend(traj.samples.iter().map(|smp| ProfilePoint {
        s: smp.state.s,
        x: smp.state.x,
        r: smp.state.r,
        theta: smp.state.theta,
        dtheta: smp.dtheta,
        neg_cos_theta: smp.neg_cos_theta(),
    }));
    half
}

/// Builds the closed curve `[0, 2 s_hat]` from a half-profile ending at `theta = pi`.
pub fn close_by_reflection(p: &Params, epsilon: f64, traj: &Trajectory, gap: f64) -> ClosedProfile {
    let x_hat = epsilon - p.lambda;
    let s_hat = traj.terminal.state.s;
    let half = trajectory_points(p, epsilon, traj);
    let mut points = half.clone();
    // (x, r, theta) -> (-x, r, 2 pi - theta) traversed backwards solves the same system.
    for q in half.iter().rev().skip(1) {
        points.push(ProfilePoint {
            s: 2.0 * s_hat - q.s,
            x: -q.x,
            r: q.r,
            theta: 2.0 * PI - q.theta,
            dtheta: q.dtheta,
            neg_cos_theta: q.neg_cos_theta,
        });
    }
    ClosedProfile {
        params: *p,
        x_hat,
        epsilon_hat: epsilon,
        r_hat: traj.terminal.state.r,
        s_hat,
        junction_gap: gap,
        points,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub params: Params,
    pub epsilon: f64,
    pub r_star: f64,
    pub x_star: f64,
    /// `sqrt(log(1 / (sqrt(pi) epsilon)))`.
    pub lemma31_bound: f64,
    pub lemma31_ok: bool,
    /// First zero `r0` of `h = x + lambda` along the shot, if any.
    pub lemma32_crossing: Option<f64>,
    pub lemma32_ok: bool,
    /// `h(r) > 30 n h'(r) / r` on every sample with `r0 <= r < r*`.
    pub lemma33_ok: bool,
    pub lemma33_applicable: bool,
    /// `-(30n + 4) / lemma31_bound - lambda`.
    pub prop31_x_lower: f64,
    /// `prop31_x_lower <= x* < -lambda`.
    pub prop31_ok: bool,
    pub prop31_applicable: bool,
}

/// Lower end of the lambda range in which the near-plane estimate
/// `h > 30 n h' / r` is claimed.
pub fn lemma33_lambda_min(n: u32) -> f64 {
    let n = n as f64;
    -(25.0 * n - 6.0) / (30.0 * n.sqrt())
}

/// Lower end of the lambda range in which the two-sided `x*` estimate is claimed.
pub fn prop31_lambda_min(n: u32) -> f64 {
    let nf = n as f64;
    let a = (23.0 * nf + 4.0) / (28.0 * nf.sqrt());
    let b = (25.0 * nf - 6.0) / (30.0 * nf.sqrt());
    -a.min(b)
}

/// Shoots from `x0 = -lambda + epsilon` and evaluates the near-plane estimates
/// on the computed trajectory.
pub fn verify_bounds(p: &Params, epsilon: f64, cfg: &IntegratorConfig) -> Result<BoundsReport> {
    let eps_max = 1.0 / PI.sqrt();
    if !(epsilon > 0.0 && epsilon <= eps_max) {
        return Err(Error::Domain(format!(
            "epsilon must lie in (0, 1/sqrt(pi)], got {epsilon:e}"
        )));
    }
    if p.lambda > 0.0 {
        return Err(Error::Domain(format!(
            "near-plane bounds need lambda <= 0, got {}",
            p.lambda
        )));
    }
    let traj = shot_trajectory(p, epsilon, cfg)?;
    if traj.terminal.kind != EventKind::TurningPoint {
        return Err(Error::NonTerminatingShot {
            x0: epsilon - p.lambda,
            epsilon,
            terminal: traj.terminal.kind,
        });
    }
    let end = traj.terminal.state;
    let n = p.nf();

    let log_arg = 1.0 / (PI.sqrt() * epsilon);
    let lemma31_bound = if log_arg <= 1.0 { 0.0 } else { log_arg.ln().sqrt() };
    let lemma31_ok = end.r > lemma31_bound;

    let crossing = first_plane_crossing(&traj);
    let r0 = crossing.map(|(_, r)| r);
    let lemma32_ok = r0.is_some_and(|r| r >= n.sqrt() && r <= (2.0 * n).sqrt());

    let lemma33_ok = match crossing {
        Some((s0, r0)) if r0 >= n.sqrt() => {
            traj.samples.iter().filter(|smp| smp.state.s > s0).all(|smp| {
                let o = smp.offset;
                // Exclude r* itself where h' = -infinity.
                if o.delta.cos() <= 0.0 {
                    return true;
                }
                let slope = -o.delta.tan();
                o.h > 30.0 * n / o.r * slope
            })
        }
        _ => false,
    };
    let lemma33_applicable =
        r0.is_some_and(|r| r >= n.sqrt()) && p.lambda >= lemma33_lambda_min(p.n) && p.lambda < 0.0;

    let prop31_x_lower = if lemma31_bound > 0.0 {
        -(30.0 * n + 4.0) / lemma31_bound - p.lambda
    } else {
        f64::NEG_INFINITY
    };
    let prop31_ok = prop31_x_lower <= end.x && end.x < -p.lambda;
    let prop31_applicable = p.lambda >= prop31_lambda_min(p.n) && p.lambda < 0.0;

    Ok(BoundsReport {
        params: *p,
        epsilon,
        r_star: end.r,
        x_star: end.x,
        lemma31_bound,
        lemma31_ok,
        lemma32_crossing: r0,
        lemma32_ok,
        lemma33_ok,
        lemma33_applicable,
        prop31_x_lower,
        prop31_ok,
        prop31_applicable,
    })
}

/// First `(s, r)` where `h = x + lambda` falls through zero, located by
/// bisection on the dense output.
pub fn first_plane_crossing(traj: &Trajectory) -> Option<(f64, f64)> {
    let idx = traj
        .samples
        .windows(2)
        .position(|w| w[0].offset.h > 0.0 && w[1].offset.h <= 0.0)?;
    let (mut a, mut b) = (traj.samples[idx].state.s, traj.samples[idx + 1].state.s);
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let h = traj.offset_at(m)?.h;
        if h > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    let s = 0.5 * (a + b);
    Some((s, traj.offset_at(s)?.r))
}
