//! Reference trajectory generation by a virtual vessel, plus runtime
//! diagnostics for the standing assumption on the reference (bounded
//! inputs/velocities and a heading that keeps moving).

use crate::control::velocity_limsup_bound;
use crate::error::VesselError;
use crate::model::{normalized_derivative, ControlInput, ScaledParams, VesselState};
use crate::sim::rk4_step;

/// A scalar input channel: constant, or sampled with step/linear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub enum Signal {
    Constant(f64),
    Samples {
        times: Vec<f64>,
        values: Vec<f64>,
        interp: Interp,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interp {
    Step,
    Linear,
}

impl Signal {
    pub fn constant(v: f64) -> Self {
        Signal::Constant(v)
    }

    pub fn validate(&self) -> Result<(), VesselError> {
        match self {
            Signal::Constant(v) => {
                if !v.is_finite() {
                    return Err(VesselError::format("constant signal must be finite"));
                }
            }
            Signal::Samples { times, values, .. } => {
                if times.is_empty() || times.len() != values.len() {
                    return Err(VesselError::format(
                        "sampled signal needs equally many times and values (at least one)",
                    ));
                }
                if times
                    .windows(2)
                    .any(|w| w[1] <= w[0] || w[1].partial_cmp(&w[0]).is_none())
                {
                    return Err(VesselError::format(
                        "sampled signal times must be strictly increasing",
                    ));
                }
                if times.iter().chain(values.iter()).any(|v| !v.is_finite()) {
                    return Err(VesselError::format("sampled signal must be finite"));
                }
            }
        }
        Ok(())
    }

    /// Value at scaled time `s`; sampled signals clamp outside their span.
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            Signal::Constant(v) => *v,
            Signal::Samples {
                times,
                values,
                interp,
            } => {
                if s <= times[0] {
                    return values[0];
                }
                if s >= *times.last().unwrap() {
                    return *values.last().unwrap();
                }
                let idx = times.partition_point(|&t| t <= s) - 1;
                match interp {
                    Interp::Step => values[idx],
                    Interp::Linear => {
                        let t0 = times[idx];
                        let t1 = times[idx + 1];
                        let frac = (s - t0) / (t1 - t0);
                        values[idx] + frac * (values[idx + 1] - values[idx])
                    }
                }
            }
        }
    }

    /// Maximum magnitude over `[0, horizon]`. For both interpolation modes
    /// the extrema sit on sample knots or the interval ends.
    pub fn max_abs(&self, horizon: f64) -> f64 {
        match self {
            Signal::Constant(v) => v.abs(),
            Signal::Samples { times, .. } => {
                let mut m: f64 = self.eval(0.0).abs().max(self.eval(horizon).abs());
                for &t in times.iter().filter(|&&t| t >= 0.0 && t <= horizon) {
                    m = m.max(self.eval(t).abs());
                }
                m
            }
        }
    }
}

/// Reference surge force and yaw moment (normalized units, scaled time).
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceInput {
    pub tau1: Signal,
    pub tau2: Signal,
}

impl ReferenceInput {
    pub fn constant(tau1: f64, tau2: f64) -> Self {
        Self {
            tau1: Signal::constant(tau1),
            tau2: Signal::constant(tau2),
        }
    }

    pub fn validate(&self) -> Result<(), VesselError> {
        self.tau1.validate()?;
        self.tau2.validate()
    }

    pub fn eval(&self, s: f64) -> ControlInput {
        ControlInput {
            tau1: self.tau1.eval(s),
            tau2: self.tau2.eval(s),
        }
    }

    pub fn max_abs(&self, horizon: f64) -> (f64, f64) {
        (self.tau1.max_abs(horizon), self.tau2.max_abs(horizon))
    }

    /// Verifies the input half of the standing assumption against the
    /// actuator ceilings.
    pub fn check_bounds(
        &self,
        tau1_max: f64,
        tau2_max: f64,
        horizon: f64,
    ) -> Result<(), VesselError> {
        let (m1, m2) = self.max_abs(horizon);
        if m1 > tau1_max {
            return Err(VesselError::assumption(format!(
                "reference surge input magnitude {m1:.6} exceeds ceiling {tau1_max:.6}"
            )));
        }
        if m2 > tau2_max {
            return Err(VesselError::assumption(format!(
                "reference yaw input magnitude {m2:.6} exceeds ceiling {tau2_max:.6}"
            )));
        }
        Ok(())
    }
}

/// Fixed-step trajectory of the virtual vessel on the grid `s_k = k·step`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTrajectory {
    pub step: f64,
    pub states: Vec<VesselState>,
    pub inputs: Vec<ControlInput>,
}

impl ReferenceTrajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn time(&self, index: usize) -> f64 {
        index as f64 * self.step
    }

    pub fn span(&self) -> f64 {
        self.time(self.len().saturating_sub(1))
    }

    pub fn last(&self) -> &VesselState {
        self.states.last().expect("non-empty trajectory")
    }
}

/// Integrates the virtual vessel under `input` from `init` over
/// `[0, horizon]`. Inputs are checked against `ceilings` before any
/// integration; dynamics are identical to the tracked model.
pub fn generate_reference(
    input: &ReferenceInput,
    init: &VesselState,
    sp: &ScaledParams,
    horizon: f64,
    step: f64,
    ceilings: (f64, f64),
) -> Result<ReferenceTrajectory, VesselError> {
    if step <= 0.0 || horizon <= 0.0 || step.is_nan() || horizon.is_nan() {
        return Err(VesselError::domain(format!(
            "horizon and step must be positive, got horizon={horizon}, step={step}"
        )));
    }
    input.validate()?;
    input.check_bounds(ceilings.0, ceilings.1, horizon)?;

    let n = (horizon / step).round() as usize;
    let mut states = Vec::with_capacity(n + 1);
    let mut inputs = Vec::with_capacity(n + 1);
    let mut state = *init;
    for k in 0..=n {
        let s = k as f64 * step;
        let tau = input.eval(s);
        states.push(state);
        inputs.push(tau);
        if k < n {
            let next = rk4_step(
                |x| normalized_derivative(&VesselState::from_array(x), &tau, sp).as_array(),
                &state.as_array(),
                step,
            )
            .ok_or(VesselError::Divergence { time: s })?;
            state = VesselState::from_array(&next);
        }
    }
    Ok(ReferenceTrajectory {
        step,
        states,
        inputs,
    })
}

/// One bound check of the assumption report.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub name: &'static str,
    pub value: f64,
    pub bound: f64,
    pub ok: bool,
}

/// Diagnostic for the standing assumption on the reference.
///
/// The heading check is a heuristic witness: non-convergence of the
/// reference heading is not decidable from a finite trace, so the report
/// flags `likely_violated` when the trailing total variation of `psi_re`
/// falls below `threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct Assumption1Report {
    pub bounds: Vec<BoundCheck>,
    pub window: f64,
    pub trailing_variation: f64,
    pub threshold: f64,
    pub likely_violated: bool,
}

impl Assumption1Report {
    pub fn bounds_ok(&self) -> bool {
        self.bounds.iter().all(|b| b.ok)
    }
}

/// Default minimum trailing heading variation per unit of window time.
pub const DEFAULT_MIN_VARIATION_RATE: f64 = 1e-4;

/// Evaluates the assumption diagnostics over the trailing `window` of the
/// trajectory. `ceilings` are the actuator ceilings; velocity bounds are
/// derived from the measured input magnitudes.
pub fn check_assumption1(
    traj: &ReferenceTrajectory,
    window: f64,
    ceilings: (f64, f64),
    sp: &ScaledParams,
    min_variation_rate: f64,
) -> Result<Assumption1Report, VesselError> {
    if window <= 0.0 || window.is_nan() {
        return Err(VesselError::domain(format!(
            "window must be positive, got {window}"
        )));
    }
    if traj.len() < 2 || window > traj.span() {
        return Err(VesselError::domain(format!(
            "window {window} longer than trajectory span {}",
            traj.span()
        )));
    }

    let max_u = traj.states.iter().fold(0.0f64, |m, s| m.max(s.u.abs()));
    let max_v = traj.states.iter().fold(0.0f64, |m, s| m.max(s.v.abs()));
    let max_tau1 = traj.inputs.iter().fold(0.0f64, |m, i| m.max(i.tau1.abs()));
    let max_tau2 = traj.inputs.iter().fold(0.0f64, |m, i| m.max(i.tau2.abs()));

    let m_rate = (sp.a1 / 2.0).min(sp.b1);
    let ic_speed = traj.states[0].u.hypot(traj.states[0].v);
    // Velocities never leave max(initial speed, forced ball radius).
    let vel_bound = velocity_limsup_bound(max_tau1, sp.a1, m_rate).max(ic_speed) * (1.0 + 1e-9);

    let bounds = vec![
        BoundCheck {
            name: "max |u_re| <= velocity bound",
            value: max_u,
            bound: vel_bound,
            ok: max_u <= vel_bound,
        },
        BoundCheck {
            name: "max |v_re| <= velocity bound",
            value: max_v,
            bound: vel_bound,
            ok: max_v <= vel_bound,
        },
        BoundCheck {
            name: "max |tau1_re| <= tau1_max",
            value: max_tau1,
            bound: ceilings.0,
            ok: max_tau1 <= ceilings.0,
        },
        BoundCheck {
            name: "max |tau2_re| <= tau2_max",
            value: max_tau2,
            bound: ceilings.1,
            ok: max_tau2 <= ceilings.1,
        },
    ];

    let start = traj.len() - 1 - (window / traj.step).round() as usize;
    let trailing_variation: f64 = traj.states[start..]
        .windows(2)
        .map(|w| (w[1].psi - w[0].psi).abs())
        .sum();
    let threshold = min_variation_rate * window;

    Ok(Assumption1Report {
        bounds,
        window,
        trailing_variation,
        threshold,
        likely_violated: trailing_variation < threshold,
    })
}
