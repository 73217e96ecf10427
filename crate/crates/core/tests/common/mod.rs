//! Independent reference computations shared by the test targets.
#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI};

/// Right-hand side of the arc-length system, written out independently.
fn rhs(n: f64, lam: f64, y: [f64; 3]) -> [f64; 3] {
    let (x, r, th) = (y[0], y[1], y[2]);
    [th.cos(), th.sin(), ((n - 1.0) / r - r) * th.cos() + x * th.sin() + lam]
}

fn rk4_step(n: f64, lam: f64, y: [f64; 3], h: f64) -> [f64; 3] {
    let add = |a: [f64; 3], b: [f64; 3], c: f64| [a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2]];
    let k1 = rhs(n, lam, y);
    let k2 = rhs(n, lam, add(y, k1, h / 2.0));
    let k3 = rhs(n, lam, add(y, k2, h / 2.0));
    let k4 = rhs(n, lam, add(y, k3, h));
    [
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        y[2] + h / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
    ]
}

/// Fixed-step classical RK4 shot from `(x0, 0)`; returns `(x*, r*, s*)` at
/// the first `theta = pi`, or `None` if it is not reached by `s_max`.
pub fn rk4_shot(n: u32, lam: f64, x0: f64, h: f64, s_max: f64) -> Option<(f64, f64, f64)> {
    let nf = n as f64;
    let c = (x0 + lam) / nf;
    let s0 = 1e-6;
    let mut y = [x0 - c * s0 * s0 / 2.0, s0, FRAC_PI_2 + c * s0];
    let mut s = s0;
    while s < s_max {
        let next = rk4_step(nf, lam, y, h);
        if next[2] >= PI {
            // Secant on the step length for theta = pi.
            let (mut a, mut b) = (0.0, h);
            let (mut fa, mut fb) = (y[2] - PI, next[2] - PI);
            for _ in 0..30 {
                let t = b - fb * (b - a) / (fb - fa);
                let ft = rk4_step(nf, lam, y, t)[2] - PI;
                a = b;
                fa = fb;
                b = t;
                fb = ft;
                if ft.abs() < 1e-15 {
                    break;
                }
            }
            let end = rk4_step(nf, lam, y, b);
            return Some((end[0], end[1], s + b));
        }
        if next[1] <= 0.0 {
            return None;
        }
        y = next;
        s += h;
    }
    None
}

/// Bisection on the RK4 shooting map to `|x*| <= tol` over an `x0` bracket.
pub fn rk4_root(n: u32, lam: f64, mut lo: f64, mut hi: f64, h: f64, tol: f64) -> f64 {
    let f = |x: f64| rk4_shot(n, lam, x, h, 100.0).expect("oracle shot reaches theta = pi").0;
    let f_lo = f(lo);
    assert!(f_lo * f(hi) < 0.0, "oracle bracket must change sign");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm.abs() <= tol {
            return mid;
        }
        if (fm > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Plane-side linearized solution from its power series in `xi = r^2`
/// (a confluent hypergeometric function); returns `(w, dw/dr)`.
pub fn kummer_w(n: u32, r: f64) -> (f64, f64) {
    let nf = n as f64;
    let xi = r * r;
    // pow = xi^k, prev = xi^(k-1)
    let (mut a, mut w, mut dw_dxi, mut pow, mut prev) = (1.0, 0.0, 0.0, 1.0, 0.0);
    for k in 0..400 {
        let kf = k as f64;
        w += a * pow;
        dw_dxi += kf * a * prev;
        a *= (2.0 * kf - 1.0) / (2.0 * (kf + 1.0) * (2.0 * kf + nf));
        prev = pow;
        pow *= xi;
        if a.abs() * pow < 1e-30 && k > 4 {
            break;
        }
    }
    (w, 2.0 * r * dw_dxi)
}

/// Sphere-side linearized solution from its series about `xi = 1`, summed at
/// `xi = 0`: returns `(w(pi/2), dw/dphi(pi/2))`.
pub fn legendre_w_end(n: u32, a_coef: f64) -> (f64, f64) {
    let nf = n as f64;
    let (mut b, mut w, mut dw) = (1.0, 0.0, 0.0);
    let mut sign = 1.0;
    for k in 0..2000 {
        let kf = k as f64;
        w += b * sign;
        if k > 0 {
            // d/du of b_k u^k at u = -1 is k b_k (-1)^(k-1) = -k b_k sign.
            dw -= kf * b * sign;
        }
        b *= (a_coef - kf * (nf + kf - 1.0)) / ((kf + 1.0) * (2.0 * kf + nf));
        sign = -sign;
        if b.abs() < 1e-300 {
            break;
        }
    }
    // dw/dphi = -sin(phi) dw/dxi = -dw/dxi at phi = pi/2.
    (w, -dw)
}
