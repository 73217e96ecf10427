//! Dormand-Prince 5(4) embedded pair with the order-4 continuous extension
//! and sign-change event location.
//!
//! Used by the profile integrator and the linearization solvers. States are
//! fixed-size arrays; the right-hand side is a plain closure.

/// Rational coefficients of the Dormand-Prince tableau.
mod tableau {
    pub const C2: f64 = 1.0 / 5.0;
    pub const C3: f64 = 3.0 / 10.0;
    pub const C4: f64 = 4.0 / 5.0;
    pub const C5: f64 = 8.0 / 9.0;

    pub const A21: f64 = 1.0 / 5.0;
    pub const A31: f64 = 3.0 / 40.0;
    pub const A32: f64 = 9.0 / 40.0;
    pub const A41: f64 = 44.0 / 45.0;
    pub const A42: f64 = -56.0 / 15.0;
    pub const A43: f64 = 32.0 / 9.0;
    pub const A51: f64 = 19372.0 / 6561.0;
    pub const A52: f64 = -25360.0 / 2187.0;
    pub const A53: f64 = 64448.0 / 6561.0;
    pub const A54: f64 = -212.0 / 729.0;
    pub const A61: f64 = 9017.0 / 3168.0;
    pub const A62: f64 = -355.0 / 33.0;
    pub const A63: f64 = 46732.0 / 5247.0;
    pub const A64: f64 = 49.0 / 176.0;
    pub const A65: f64 = -5103.0 / 18656.0;
    pub const A71: f64 = 35.0 / 384.0;
    pub const A73: f64 = 500.0 / 1113.0;
    pub const A74: f64 = 125.0 / 192.0;
    pub const A75: f64 = -2187.0 / 6784.0;
    pub const A76: f64 = 11.0 / 84.0;

    pub const E1: f64 = 71.0 / 57600.0;
    pub const E3: f64 = -71.0 / 16695.0;
    pub const E4: f64 = 71.0 / 1920.0;
    pub const E5: f64 = -17253.0 / 339200.0;
    pub const E6: f64 = 22.0 / 525.0;
    pub const E7: f64 = -1.0 / 40.0;

    pub const D1: f64 = -12715105075.0 / 11282082432.0;
    pub const D3: f64 = 87487479700.0 / 32700410799.0;
    pub const D4: f64 = -10690763975.0 / 1880347072.0;
    pub const D5: f64 = 701980252875.0 / 199316789632.0;
    pub const D6: f64 = -1453857185.0 / 822651844.0;
    pub const D7: f64 = 69997945.0 / 29380423.0;
}

use tableau::*;

const MAX_BISECTIONS: usize = 60;
const MAX_POLISH: usize = 8;

#[derive(Debug, Clone)]
pub struct Options<const N: usize> {
    pub rel_tol: f64,
    /// Per-component absolute tolerance.
    pub abs_tol: [f64; N],
    pub max_step: f64,
    /// First trial step; clipped to `max_step`.
    pub initial_step: f64,
    pub max_steps: usize,
    /// Events are located to `|g| <= event_tol` where attainable.
    pub event_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub dy: [f64; N],
}

/// Continuous extension over one accepted step.
#[derive(Debug, Clone, Copy)]
pub struct Segment<const N: usize> {
    pub t0: f64,
    pub h: f64,
    rc: [[f64; N]; 5],
}

impl<const N: usize> Segment<N> {
    pub fn eval(&self, t: f64) -> [f64; N] {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let rc = &self.rc;
        std::array::from_fn(|i| {
            rc[0][i] + th * (rc[1][i] + th1 * (rc[2][i] + th * (rc[3][i] + th1 * rc[4][i])))
        })
    }

    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Rising,
    Falling,
    Either,
}

impl Direction {
    fn crossed(self, before: f64, after: f64) -> bool {
        match self {
            Direction::Rising => before < 0.0 && after >= 0.0,
            Direction::Falling => before > 0.0 && after <= 0.0,
            Direction::Either => (before < 0.0 && after >= 0.0) || (before > 0.0 && after <= 0.0),
        }
    }
}

pub struct Event<'a, const N: usize> {
    pub g: &'a dyn Fn(f64, &[f64; N]) -> f64,
    pub direction: Direction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stop {
    /// Terminal event with this index into the event list fired.
    Event(usize),
    /// Reached `t_end`.
    End,
    /// Step size fell below the floating-point resolution of `t`.
    StepUnderflow,
    MaxSteps,
}

#[derive(Debug, Clone)]
pub struct Solution<const N: usize> {
    /// Accepted step endpoints, starting with the initial value.
    pub nodes: Vec<Node<N>>,
    pub segments: Vec<Segment<N>>,
    pub stop: Stop,
    pub accepted: usize,
    pub rejected: usize,
}

impl<const N: usize> Solution<N> {
    pub fn last(&self) -> &Node<N> {
        self.nodes.last().expect("solution always holds the initial node")
    }

    pub fn t_range(&self) -> (f64, f64) {
        (self.nodes[0].t, self.last().t)
    }

    /// Dense output at `t`; `None` outside the integrated range.
    pub fn eval(&self, t: f64) -> Option<[f64; N]> {
        let (a, b) = self.t_range();
        if !(t >= a && t <= b) {
            return None;
        }
        if t == a {
            return Some(self.nodes[0].y);
        }
        let idx = self.segments.partition_point(|seg| seg.t1() < t);
        let seg = self.segments.get(idx).or(self.segments.last())?;
        Some(seg.eval(t))
    }
}

struct Trial<const N: usize> {
    y: [f64; N],
    k7: [f64; N],
    err: f64,
    seg: Segment<N>,
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        y[i] + h * acc
    })
}

fn attempt<F, const N: usize>(
    f: &mut F,
    opts: &Options<N>,
    t: f64,
    y: &[f64; N],
    k1: &[f64; N],
    h: f64,
) -> Trial<N>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let k2 = f(t + C2 * h, &axpy(y, h, &[(A21, k1)]));
    let k3 = f(t + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]));
    let k4 = f(t + C4 * h, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = f(
        t + C5 * h,
        &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    );
    let k6 = f(
        t + h,
        &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    );
    let y_new = axpy(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = f(t + h, &y_new);

    let mut err = 0.0f64;
    for i in 0..N {
        let e = h
            * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sc = opts.abs_tol[i] + opts.rel_tol * y[i].abs().max(y_new[i].abs());
        let ratio = (e / sc).abs();
        // NaN compares false; force rejection explicitly.
        err = if ratio.is_nan() { f64::INFINITY } else { err.max(ratio) };
    }
    if y_new.iter().any(|v| !v.is_finite()) {
        err = f64::INFINITY;
    }

    let mut rc = [[0.0; N]; 5];
    for i in 0..N {
        let dy = y_new[i] - y[i];
        let bspl = h * k1[i] - dy;
        rc[0][i] = y[i];
        rc[1][i] = dy;
        rc[2][i] = bspl;
        rc[3][i] = dy - h * k7[i] - bspl;
        rc[4][i] = h
            * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
    }

    Trial {
        y: y_new,
        k7,
        err,
        seg: Segment { t0: t, h, rc },
    }
}

/// Integrates `y' = f(t, y)` forward from `t0` to `t_end`, stopping at the
/// first event that fires.
pub fn integrate<F, const N: usize>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &Options<N>,
    events: &[Event<'_, N>],
) -> Solution<N>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let k0 = f(t0, &y0);
    let mut sol = Solution {
        nodes: vec![Node { t: t0, y: y0, dy: k0 }],
        segments: Vec::new(),
        stop: Stop::End,
        accepted: 0,
        rejected: 0,
    };
    let mut t = t0;
    let mut y = y0;
    let mut k1 = k0;
    let mut g_prev: Vec<f64> = events.iter().map(|e| (e.g)(t, &y)).collect();
    let mut h = opts.initial_step.min(opts.max_step).min(t_end - t0);
    let mut last_rejected = false;

    loop {
        if t >= t_end {
            sol.stop = Stop::End;
            return sol;
        }
        if sol.accepted + sol.rejected >= opts.max_steps {
            sol.stop = Stop::MaxSteps;
            return sol;
        }
        if h <= f64::EPSILON * t.abs().max(1e-300) * 4.0 {
            sol.stop = Stop::StepUnderflow;
            return sol;
        }
        let clipped = t + h >= t_end;
        let h_try = if clipped { t_end - t } else { h };
        let trial = attempt(&mut f, opts, t, &y, &k1, h_try);

        if trial.err > 1.0 {
            sol.rejected += 1;
            let fac = if trial.err.is_finite() {
                (0.9 * trial.err.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.1
            };
            h = h_try * fac;
            last_rejected = true;
            continue;
        }

        sol.accepted += 1;
        let t_new = if clipped { t_end } else { t + h_try };

        // Earliest event inside this step, if any.
        let g_new: Vec<f64> = events.iter().map(|e| (e.g)(t_new, &trial.y)).collect();
        let mut hit: Option<(usize, f64)> = None;
        for (idx, ev) in events.iter().enumerate() {
            if ev.direction.crossed(g_prev[idx], g_new[idx]) {
                let te = locate_on_segment(&trial.seg, ev, g_prev[idx], t, t_new, opts.event_tol);
                if hit.is_none_or(|(_, best)| te < best) {
                    hit = Some((idx, te));
                }
            }
        }

        if let Some((idx, te)) = hit {
            let node = polish(&mut f, opts, &events[idx], t, &y, &k1, te, t_new - t, &trial.seg);
            if node.t > t {
                let landing = attempt(&mut f, opts, t, &y, &k1, node.t - t);
                sol.segments.push(landing.seg);
            }
            sol.nodes.push(node);
            sol.stop = Stop::Event(idx);
            return sol;
        }

        sol.segments.push(trial.seg);
        sol.nodes.push(Node { t: t_new, y: trial.y, dy: trial.k7 });
        t = t_new;
        y = trial.y;
        k1 = trial.k7;
        g_prev = g_new;

        let mut fac = if trial.err > 0.0 {
            (0.9 * trial.err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        if last_rejected {
            fac = fac.min(1.0);
        }
        last_rejected = false;
        h = (h_try * fac).min(opts.max_step);
    }
}

/// Bisection on the continuous extension between `a` (where `g = g_a`) and `b`.
fn locate_on_segment<const N: usize>(
    seg: &Segment<N>,
    ev: &Event<'_, N>,
    g_a: f64,
    a: f64,
    b: f64,
    tol: f64,
) -> f64 {
    let (mut lo, mut hi) = (a, b);
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = (ev.g)(mid, &seg.eval(mid));
        if gm.abs() <= tol {
            return mid;
        }
        if (gm < 0.0) == (g_a < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Replaces the interpolated event time by one where a genuine step from the
/// last accepted node lands on `g = 0`, using Newton iterations with the slope
/// of `g` along the continuous extension.
#[allow(clippy::too_many_arguments)]
fn polish<F, const N: usize>(
    f: &mut F,
    opts: &Options<N>,
    ev: &Event<'_, N>,
    t: f64,
    y: &[f64; N],
    k1: &[f64; N],
    te: f64,
    h_full: f64,
    seg: &Segment<N>,
) -> Node<N>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let eta = 1e-6 * h_full;
    let ga = (ev.g)(te - eta, &seg.eval(te - eta));
    let gb = (ev.g)(te + eta, &seg.eval(te + eta));
    let slope = (gb - ga) / (2.0 * eta);

    let land = |f: &mut F, tau: f64| {
        let tr = attempt(f, opts, t, y, k1, tau);
        (tr.y, tr.k7)
    };

    let mut tau = (te - t).clamp(0.0, h_full);
    let (mut ye, mut dye) = land(f, tau);
    let mut best = (tau, ye, dye, (ev.g)(t + tau, &ye).abs());
    if slope.is_finite() && slope != 0.0 {
        for _ in 0..MAX_POLISH {
            let g = (ev.g)(t + tau, &ye);
            if g.abs() <= opts.event_tol {
                break;
            }
            let next = (tau - g / slope).clamp(0.0, h_full);
            if next == tau {
                break;
            }
            tau = next;
            (ye, dye) = land(f, tau);
            let gn = (ev.g)(t + tau, &ye).abs();
            if gn < best.3 {
                best = (tau, ye, dye, gn);
            }
        }
    }
    Node {
        t: t + best.0,
        y: best.1,
        dy: best.2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts<const N: usize>(rel: f64) -> Options<N> {
        Options {
            rel_tol: rel,
            abs_tol: [rel * 1e-2; N],
            max_step: 1.0,
            initial_step: 1e-3,
            max_steps: 1_000_000,
            event_tol: 1e-13,
        }
    }

    #[test]
    fn exponential_decay() {
        let sol = integrate(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], 5.0, &opts(1e-10), &[]);
        assert_eq!(sol.stop, Stop::End);
        assert_eq!(sol.last().t, 5.0);
        assert!((sol.last().y[0] - (-5f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn dense_output_tracks_solution() {
        let sol = integrate(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [0.0, 1.0],
            10.0,
            &opts(1e-10),
            &[],
        );
        for k in 0..=1000 {
            let t = 0.01 * k as f64;
            let y = sol.eval(t).unwrap();
            assert!((y[0] - t.sin()).abs() < 1e-8, "t={t}");
        }
        assert!(sol.eval(10.5).is_none());
        assert!(sol.eval(-0.1).is_none());
    }

    #[test]
    fn locates_rising_event() {
        // y = sin t crosses 1/2 upward at pi/6.
        let g = |_: f64, y: &[f64; 2]| y[0] - 0.5;
        let ev = [Event { g: &g, direction: Direction::Rising }];
        let sol = integrate(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [0.0, 1.0], 10.0, &opts(1e-11), &ev);
        assert_eq!(sol.stop, Stop::Event(0));
        let last = sol.last();
        assert!((last.t - std::f64::consts::FRAC_PI_6).abs() < 1e-10);
        assert!((last.y[0] - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn falling_event_ignores_rising_crossings() {
        let g = |_: f64, y: &[f64; 2]| y[0] - 0.5;
        let ev = [Event { g: &g, direction: Direction::Falling }];
        let sol = integrate(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [0.0, 1.0], 10.0, &opts(1e-11), &ev);
        assert_eq!(sol.stop, Stop::Event(0));
        assert!((sol.last().t - 5.0 * std::f64::consts::FRAC_PI_6).abs() < 1e-10);
    }

    #[test]
    fn step_underflow_reported() {
        // Finite-time blow-up at t = 1.
        let sol = integrate(|_, y: &[f64; 1]| [y[0] * y[0]], 0.0, [1.0], 2.0, &opts(1e-8), &[]);
        assert!(matches!(sol.stop, Stop::StepUnderflow | Stop::MaxSteps));
        assert!(sol.last().t < 1.0 + 1e-6, "{}", sol.last().t);
        assert!(sol.last().y[0] > 1e6);
    }

    #[test]
    fn respects_max_step() {
        let mut o = opts::<1>(1e-6);
        o.max_step = 0.05;
        let sol = integrate(|_, _y: &[f64; 1]| [1.0], 0.0, [0.0], 3.0, &o, &[]);
        for w in sol.nodes.windows(2) {
            assert!(w[1].t - w[0].t <= 0.05 + 1e-15);
            assert!(w[1].t > w[0].t);
        }
    }
}
