//! Curvature, convexity and residual audits of closed profiles, plus the
//! n = 2 revolution mesh and the CSV / JSON / OBJ exporters.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::IntegratorConfig;
use crate::params::Params;
use crate::shooting::{close_by_reflection, shot_trajectory, ClosedProfile, ProfilePoint};

/// Below this minimum curvature, convexity is re-checked on a finer grid.
pub const REFINE_BELOW: f64 = 1e-3;
pub const REFINE_FACTOR: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub s: f64,
    pub x: f64,
    pub r: f64,
    pub theta: f64,
    pub dtheta: f64,
    /// Rotational curvature `-cos(theta) / r` (multiplicity n - 1).
    pub kappa_1: f64,
    /// Profile curvature `theta'`.
    pub kappa_n: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypersurfaceProfile {
    pub params: Params,
    pub x_hat: f64,
    pub epsilon_hat: f64,
    pub r_hat: f64,
    pub s_hat: f64,
    pub junction_gap: f64,
    pub samples: Vec<ProfileSample>,
    pub min_curvature: f64,
    pub max_residual: f64,
}

/// Curvatures and residual at one profile point.
pub fn profile_sample(p: &Params, q: &ProfilePoint) -> ProfileSample {
    let n = p.nf();
    // -x sin(theta) - lambda, grouped so the plane part cancels first.
    let plane = -(q.x * q.theta.sin() + p.lambda);
    let (kappa_1, residual) = if q.r > 0.0 {
        let k1 = q.neg_cos_theta / q.r;
        let h = q.dtheta + (n - 1.0) * k1;
        (k1, h + plane - q.r * q.neg_cos_theta)
    } else {
        // Umbilic axis point: all curvatures equal theta'.
        (q.dtheta, n * q.dtheta + plane)
    };
    ProfileSample {
        s: q.s,
        x: q.x,
        r: q.r,
        theta: q.theta,
        dtheta: q.dtheta,
        kappa_1,
        kappa_n: q.dtheta,
        residual,
    }
}

impl HypersurfaceProfile {
    pub fn from_closed(c: &ClosedProfile) -> Self {
        let samples: Vec<ProfileSample> = c.points.iter().map(|q| profile_sample(&c.params, q)).collect();
        Self::with_samples(c, samples)
    }

    fn with_samples(c: &ClosedProfile, samples: Vec<ProfileSample>) -> Self {
        let min_curvature = samples
            .iter()
            .map(|s| s.kappa_1.min(s.kappa_n))
            .fold(f64::INFINITY, f64::min);
        let max_residual = samples.iter().map(|s| s.residual.abs()).fold(0.0, f64::max);
        HypersurfaceProfile {
            params: c.params,
            x_hat: c.x_hat,
            epsilon_hat: c.epsilon_hat,
            r_hat: c.r_hat,
            s_hat: c.s_hat,
            junction_gap: c.junction_gap,
            samples,
            min_curvature,
            max_residual,
        }
    }

    /// The same curve traversed backwards, so every curvature changes sign.
    pub fn flipped(&self) -> Self {
        let total = self.samples.last().map_or(0.0, |s| s.s);
        let samples: Vec<ProfileSample> = self
            .samples
            .iter()
            .rev()
            .map(|q| ProfileSample {
                s: total - q.s,
                theta: q.theta + PI,
                dtheta: -q.dtheta,
                kappa_1: -q.kappa_1,
                kappa_n: -q.kappa_n,
                ..*q
            })
            .collect();
        let min_curvature = samples
            .iter()
            .map(|s| s.kappa_1.min(s.kappa_n))
            .fold(f64::INFINITY, f64::min);
        HypersurfaceProfile { samples, min_curvature, ..self.clone() }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        self.samples.iter().map(|s| (s.x, s.r)).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_csv())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(200 * (self.samples.len() + 1));
        out.push_str("s,x,r,theta,dtheta,kappa_1,kappa_n,residual\n");
        for q in &self.samples {
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                q.s, q.x, q.r, q.theta, q.dtheta, q.kappa_1, q.kappa_n, q.residual
            );
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub convex: bool,
    pub simple: bool,
    pub min_curvature: f64,
    pub max_residual: f64,
    /// Whether the finer re-integration pass ran.
    pub refined: bool,
}

impl Certificate {
    pub fn accepted(&self, residual_tol: f64) -> bool {
        self.convex && self.simple && self.max_residual <= residual_tol
    }
}

/// Convexity, embeddedness and residual audit. When the minimum curvature is
/// small the profile is re-integrated with a finer step and both grids must
/// pass.
pub fn certify(profile: &HypersurfaceProfile, cfg: &IntegratorConfig) -> Result<Certificate> {
    let mut cert = Certificate {
        convex: profile.min_curvature > 0.0,
        simple: is_simple(&profile.points()),
        min_curvature: profile.min_curvature,
        max_residual: profile.max_residual,
        refined: false,
    };
    if profile.min_curvature < REFINE_BELOW {
        let fine = cfg.refined(REFINE_FACTOR);
        let p = &profile.params;
        let traj = shot_trajectory(p, profile.epsilon_hat, &fine)?;
        let closed = close_by_reflection(p, profile.epsilon_hat, &traj, profile.junction_gap);
        let hp = HypersurfaceProfile::from_closed(&closed);
        cert.refined = true;
        cert.convex &= hp.min_curvature > 0.0;
        cert.min_curvature = cert.min_curvature.min(hp.min_curvature);
    }
    Ok(cert)
}

/// Certificate of the stored samples only.
pub fn certify_samples(profile: &HypersurfaceProfile) -> Certificate {
    Certificate {
        convex: profile.min_curvature > 0.0,
        simple: is_simple(&profile.points()),
        min_curvature: profile.min_curvature,
        max_residual: profile.max_residual,
        refined: false,
    }
}

fn orient(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

fn on_segment(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> bool {
    c.0 >= a.0.min(b.0) && c.0 <= a.0.max(b.0) && c.1 >= a.1.min(b.1) && c.1 <= a.1.max(b.1)
}

/// Closed-segment intersection test.
pub fn segments_intersect(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)) -> bool {
    let (d1, d2) = (orient(c, d, a), orient(c, d, b));
    let (d3, d4) = (orient(a, b, c), orient(a, b, d));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// True iff no two non-adjacent segments of the polyline meet. Sweeps along
/// the longer side of the bounding box.
pub fn is_simple(pts: &[(f64, f64)]) -> bool {
    if pts.len() < 4 {
        return true;
    }
    let (mut lo, mut hi) = ((f64::INFINITY, f64::INFINITY), (f64::NEG_INFINITY, f64::NEG_INFINITY));
    for &(x, y) in pts {
        lo = (lo.0.min(x), lo.1.min(y));
        hi = (hi.0.max(x), hi.1.max(y));
    }
    let key = |p: (f64, f64)| if hi.0 - lo.0 >= hi.1 - lo.1 { p.0 } else { p.1 };
    let nseg = pts.len() - 1;
    let span = |i: usize| {
        let (a, b) = (key(pts[i]), key(pts[i + 1]));
        (a.min(b), a.max(b))
    };
    let mut order: Vec<usize> = (0..nseg).collect();
    order.sort_by(|&i, &j| span(i).0.total_cmp(&span(j).0));
    let mut active: Vec<usize> = Vec::new();
    for &i in &order {
        let (start, _) = span(i);
        active.retain(|&j| span(j).1 >= start);
        for &j in &active {
            if i.abs_diff(j) <= 1 {
                continue;
            }
            if segments_intersect(pts[i], pts[i + 1], pts[j], pts[j + 1]) {
                return false;
            }
        }
        active.push(i);
    }
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub vertices: Vec<[f64; 3]>,
    /// Zero-based vertex indices, counter-clockwise seen from outside.
    pub faces: Vec<[usize; 3]>,
}

/// Revolves an n = 2 profile about the x-axis: `(x, r cos a, r sin a)` on an
/// `azimuthal_resolution`-point ring per interior sample, closed by fans at
/// the two poles.
pub fn revolve_mesh(profile: &HypersurfaceProfile, azimuthal_resolution: usize) -> Result<Mesh> {
    if profile.params.n != 2 {
        return Err(Error::Unsupported(format!(
            "meshes are only produced for n = 2 (surfaces in R^3), got n = {}",
            profile.params.n
        )));
    }
    let res = azimuthal_resolution;
    if res < 3 {
        return Err(Error::Domain(format!("azimuthal resolution must be at least 3, got {res}")));
    }
    let m = profile.samples.len();
    if m < 3 {
        return Err(Error::Domain("profile needs at least one interior sample".into()));
    }
    let rings = m - 2;
    let mut vertices = Vec::with_capacity(rings * res + 2);
    let first = &profile.samples[0];
    vertices.push([first.x, 0.0, 0.0]);
    let angles: Vec<(f64, f64)> = (0..res).map(|j| (2.0 * PI * j as f64 / res as f64).sin_cos()).collect();
    for q in &profile.samples[1..m - 1] {
        for &(sa, ca) in &angles {
            vertices.push([q.x, q.r * ca, q.r * sa]);
        }
    }
    let last = &profile.samples[m - 1];
    vertices.push([last.x, 0.0, 0.0]);
    let pole_end = vertices.len() - 1;

    let v = |i: usize, j: usize| 1 + i * res + (j % res);
    let mut faces = Vec::with_capacity(2 * res * rings);
    for j in 0..res {
        faces.push([0, v(0, j), v(0, j + 1)]);
    }
    for i in 0..rings - 1 {
        for j in 0..res {
            faces.push([v(i, j), v(i + 1, j), v(i, j + 1)]);
            faces.push([v(i, j + 1), v(i + 1, j), v(i + 1, j + 1)]);
        }
    }
    for j in 0..res {
        faces.push([v(rings - 1, j), pole_end, v(rings - 1, j + 1)]);
    }
    let mut mesh = Mesh { vertices, faces };
    // The profile may run either way along the axis; orient outward.
    if mesh.signed_volume() < 0.0 {
        for f in &mut mesh.faces {
            f.swap(1, 2);
        }
    }
    Ok(mesh)
}

impl Mesh {
    pub fn edge_count(&self) -> usize {
        let mut edges = std::collections::HashSet::new();
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                edges.insert((a.min(b), a.max(b)));
            }
        }
        edges.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edge_count() as i64 + self.faces.len() as i64
    }

    /// Every directed edge appears once and its reverse once.
    pub fn is_watertight(&self) -> bool {
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for f in &self.faces {
            for k in 0..3 {
                *directed.entry((f[k], f[(k + 1) % 3])).or_default() += 1;
            }
        }
        directed
            .iter()
            .all(|(&(a, b), &c)| c == 1 && directed.get(&(b, a)) == Some(&1))
    }

    pub fn signed_volume(&self) -> f64 {
        self.faces
            .iter()
            .map(|f| {
                let (a, b, c) = (self.vertices[f[0]], self.vertices[f[1]], self.vertices[f[2]]);
                a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
                    + a[2] * (b[0] * c[1] - b[1] * c[0])
            })
            .sum::<f64>()
            / 6.0
    }

    pub fn to_obj(&self) -> String {
        let mut out = String::with_capacity(64 * (self.vertices.len() + self.faces.len()));
        for v in &self.vertices {
            let _ = writeln!(out, "v {:.16e} {:.16e} {:.16e}", v[0], v[1], v[2]);
        }
        for f in &self.faces {
            let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
        }
        out
    }

    pub fn write_obj(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_obj())
    }
}

/// JSON document holding a profile and, optionally, its certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileDocument {
    pub profile: HypersurfaceProfile,
    pub certificate: Option<Certificate>,
}

impl ProfileDocument {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })?;
        write_file(path, &(text + "\n"))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })
    }
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: u32) -> HypersurfaceProfile {
        // Four samples on a circle of radius 2, poles included.
        let p = Params::new(n, -1.0).unwrap();
        let pts = (0..4)
            .map(|k| {
                let phi = PI * k as f64 / 3.0;
                ProfilePoint {
                    s: 2.0 * phi,
                    x: 2.0 * phi.cos(),
                    r: 2.0 * phi.sin(),
                    theta: phi + PI / 2.0,
                    dtheta: 0.5,
                    neg_cos_theta: phi.sin(),
                }
            })
            .collect();
        let c = ClosedProfile {
            params: p,
            x_hat: 2.0,
            epsilon_hat: 1.0,
            r_hat: 2.0,
            s_hat: PI,
            junction_gap: 0.0,
            points: pts,
        };
        HypersurfaceProfile::from_closed(&c)
    }

    #[test]
    fn toy_mesh_counts() {
        let m = revolve_mesh(&toy(2), 3).unwrap();
        assert_eq!(m.vertices.len(), 2 * 3 + 2);
        assert_eq!(m.faces.len(), 12);
        assert_eq!(m.euler_characteristic(), 2);
        assert!(m.is_watertight());
        assert!(m.signed_volume() > 0.0);
    }

    #[test]
    fn mesh_needs_n2() {
        assert!(matches!(revolve_mesh(&toy(3), 8), Err(Error::Unsupported(_))));
        assert!(revolve_mesh(&toy(2), 2).is_err());
    }

    #[test]
    fn circle_curvatures_and_residual() {
        let hp = toy(2);
        for s in &hp.samples {
            assert!((s.kappa_1 - 0.5).abs() < 1e-15 || s.r == 0.0);
            assert!(s.residual.abs() < 1e-14, "{}", s.residual);
        }
        assert!((hp.min_curvature - 0.5).abs() < 1e-15);
        assert!(hp.flipped().min_curvature < 0.0);
    }

    #[test]
    fn simplicity() {
        let square = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
        assert!(is_simple(&square));
        let bow = [(0.0, 0.0), (1.0, 1.0), (1.0, 0.0), (0.0, 1.0)];
        assert!(!is_simple(&bow));
        let tall = [(0.0, 0.0), (0.1, 5.0), (0.2, 0.0), (-0.1, 2.0)];
        assert!(!is_simple(&tall));
    }
}
