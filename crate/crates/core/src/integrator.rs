//! Adaptive arc-length integration of the profile system with a series start
//! on the axis and located terminal events.
//!
//! Internally the state is carried in plane-offset variables
//! `(h, r, delta) = (x + lambda, r, theta - pi/2)`, so shots whose initial
//! offset from the hyperplane is far below `f64` resolution of `x0` still
//! integrate with full relative accuracy.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::dopri::{self, Direction, Event, Stop};
use crate::error::{Error, Result};
use crate::ode_core::{rhs_plane_offset_unchecked, PlaneOffset, ProfileState};
use crate::params::Params;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    /// Arc length at which the series start on the axis is evaluated.
    pub series_start_step: f64,
    pub max_arclength: f64,
    pub event_tol: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 0.05,
            series_start_step: 1e-6,
            max_arclength: 100.0,
            event_tol: 1e-12,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("max_step", self.max_step),
            ("series_start_step", self.series_start_step),
            ("max_arclength", self.max_arclength),
            ("event_tol", self.event_tol),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.series_start_step > self.max_step {
            return Err(Error::Config(format!(
                "series_start_step {} exceeds max_step {}",
                self.series_start_step, self.max_step
            )));
        }
        Ok(())
    }

    /// Same configuration with `max_step` divided by `factor`.
    pub fn refined(&self, factor: f64) -> Self {
        IntegratorConfig {
            max_step: self.max_step / factor,
            series_start_step: self.series_start_step.min(self.max_step / factor),
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// `theta = pi`: the tangent points along `-x`, where `x = f(r)` has infinite slope.
    TurningPoint,
    /// `r = 0`.
    AxisReturn,
    MaxLength,
    StepFailure,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::TurningPoint => "turning_point",
            EventKind::AxisReturn => "axis_return",
            EventKind::MaxLength => "max_length",
            EventKind::StepFailure => "step_failure",
        }
    }
}

/// Which terminal events an integration watches for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventSet {
    pub turning_point: bool,
    pub axis_return: bool,
}

impl EventSet {
    pub const ALL: EventSet = EventSet {
        turning_point: true,
        axis_return: true,
    };
    pub const NONE: EventSet = EventSet {
        turning_point: false,
        axis_return: false,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventHit {
    pub kind: EventKind,
    pub state: ProfileState,
    pub offset: PlaneOffset,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub state: ProfileState,
    pub offset: PlaneOffset,
    pub dtheta: f64,
}

impl Sample {
    /// `-cos(theta)`, evaluated as `sin(delta)` so it keeps its sign and
    /// relative precision when `theta` is within an ulp of `pi/2`.
    pub fn neg_cos_theta(&self) -> f64 {
        self.offset.delta.sin()
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: Params,
    pub samples: Vec<Sample>,
    pub terminal: EventHit,
    pub accepted: usize,
    pub rejected: usize,
    segments: Vec<dopri::Segment<3>>,
}

impl Trajectory {
    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory holds its start sample")
    }

    /// Dense output in offset variables at arc length `s`.
    pub fn offset_at(&self, s: f64) -> Option<PlaneOffset> {
        let (a, b) = (self.first().state.s, self.last().state.s);
        if !(s >= a && s <= b) {
            return None;
        }
        let idx = self.segments.partition_point(|seg| seg.t1() < s);
        let seg = self.segments.get(idx).or(self.segments.last())?;
        let y = seg.eval(s);
        Some(PlaneOffset { h: y[0], r: y[1], delta: y[2] })
    }
}

/// Series-expanded state at `s = series_start_step` for the curve leaving the
/// axis perpendicularly at `x0`.
pub fn start_on_axis(p: &Params, x0: f64, cfg: &IntegratorConfig) -> ProfileState {
    let (s0, off) = start_on_axis_offset(p, x0 + p.lambda, cfg);
    off.to_profile(p, s0)
}

/// Offset form of [`start_on_axis`], parametrized by `epsilon = x0 + lambda`.
///
/// Near the axis `delta' + (n-1) delta / s = epsilon`, so
/// `delta = epsilon s / n`, `h = epsilon (1 - s^2 / (2n))`, `r = s`, with
/// truncation error `O(s^3)`.
pub fn start_on_axis_offset(p: &Params, epsilon: f64, cfg: &IntegratorConfig) -> (f64, PlaneOffset) {
    let s0 = cfg.series_start_step;
    let n = p.nf();
    (
        s0,
        PlaneOffset {
            h: epsilon * (1.0 - s0 * s0 / (2.0 * n)),
            r: s0,
            delta: epsilon * s0 / n,
        },
    )
}

/// Integrates from an arbitrary state with `r > 0`.
pub fn integrate_until(
    p: &Params,
    start: &ProfileState,
    cfg: &IntegratorConfig,
    events: EventSet,
) -> Result<Trajectory> {
    if start.r.is_nan() || start.r <= 0.0 {
        return Err(Error::Domain(format!(
            "integration start needs r > 0, got {}; use start_on_axis",
            start.r
        )));
    }
    integrate_offset(p, start.s, PlaneOffset::from_profile(p, start), 1.0, cfg, events)
}

/// Integrates the offset system from `start` at arc length `s0`.
///
/// `scale` multiplies the absolute tolerance of the `h` and `delta`
/// components; shots from the axis pass `min(1, |epsilon|)` so that errors
/// are controlled relative to the size of the perturbation.
pub fn integrate_offset(
    p: &Params,
    s0: f64,
    start: PlaneOffset,
    scale: f64,
    cfg: &IntegratorConfig,
    events: EventSet,
) -> Result<Trajectory> {
    cfg.validate()?;
    if start.r.is_nan() || start.r <= 0.0 {
        return Err(Error::Domain(format!("integration start needs r > 0, got {}", start.r)));
    }
    let scale = if scale > 0.0 && scale.is_finite() { scale.min(1.0) } else { 1.0 };
    let opts = dopri::Options {
        rel_tol: cfg.rel_tol,
        abs_tol: [cfg.abs_tol * scale, cfg.abs_tol, cfg.abs_tol * scale],
        max_step: cfg.max_step,
        initial_step: (0.5 * start.r).min(cfg.max_step),
        max_steps: 2_000_000,
        event_tol: cfg.event_tol,
    };

    let turning = |_: f64, y: &[f64; 3]| y[2] - FRAC_PI_2;
    let axis = |_: f64, y: &[f64; 3]| y[1];
    let mut evs: Vec<Event<'_, 3>> = Vec::new();
    let mut kinds = Vec::new();
    if events.turning_point {
        evs.push(Event { g: &turning, direction: Direction::Rising });
        kinds.push(EventKind::TurningPoint);
    }
    if events.axis_return {
        evs.push(Event { g: &axis, direction: Direction::Falling });
        kinds.push(EventKind::AxisReturn);
    }

    let params = *p;
    let rhs = move |_: f64, y: &[f64; 3]| {
        let (dh, dr, dd) = rhs_plane_offset_unchecked(
            &params,
            &PlaneOffset { h: y[0], r: y[1], delta: y[2] },
        );
        [dh, dr, dd]
    };
    let sol = dopri::integrate(
        rhs,
        s0,
        [start.h, start.r, start.delta],
        cfg.max_arclength,
        &opts,
        &evs,
    );

    let samples: Vec<Sample> = sol
        .nodes
        .iter()
        .map(|node| {
            let offset = PlaneOffset { h: node.y[0], r: node.y[1], delta: node.y[2] };
            Sample {
                state: offset.to_profile(p, node.t),
                offset,
                dtheta: node.dy[2],
            }
        })
        .collect();
    let kind = match sol.stop {
        Stop::Event(i) => kinds[i],
        Stop::End => EventKind::MaxLength,
        Stop::StepUnderflow | Stop::MaxSteps => EventKind::StepFailure,
    };
    let last = *samples.last().expect("initial node present");
    Ok(Trajectory {
        params: *p,
        terminal: EventHit { kind, state: last.state, offset: last.offset },
        samples,
        accepted: sol.accepted,
        rejected: sol.rejected,
        segments: sol.segments,
    })
}

/// Integrates the shot leaving the axis at `x0 = -lambda + epsilon`.
pub fn shoot_from_axis(
    p: &Params,
    epsilon: f64,
    cfg: &IntegratorConfig,
    events: EventSet,
) -> Result<Trajectory> {
    let (s0, start) = start_on_axis_offset(p, epsilon, cfg);
    integrate_offset(p, s0, start, epsilon.abs().min(1.0), cfg, events)
}
