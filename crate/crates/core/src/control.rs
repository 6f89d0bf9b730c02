//! Saturated tracking controller: error coordinates, gain synthesis with
//! the full inequality ledger, the actuator-budget condition, and the
//! state- and output-feedback laws.
//!
//! Both feedback laws produce the bounded corrections `(w1, w2)`; the
//! actual inputs are assembled as
//!
//! ```text
//! tau1 = tau1_re + w1
//! tau2 = tau2_re + w2 - beta (u v - u_re v_re)
//! ```
//!
//! so that `|w1| <= U1 + rho` and `|w2| <= U2` hold for every argument.

use nalgebra::Vector2;

use crate::error::VesselError;
use crate::model::{rotation, ControlInput, ScaledParams, VesselState};

/// Standard saturation `x / max(1, |x|)`: identity on `[-1, 1]`, sign outside.
pub fn saturate(x: f64) -> f64 {
    x / x.abs().max(1.0)
}

/// Antiderivative of [`saturate`]: `x²/2` on `[-1, 1]`, `|x| - 1/2` outside.
pub fn saturation_potential(x: f64) -> f64 {
    if x.abs() <= 1.0 {
        0.5 * x * x
    } else {
        x.abs() - 0.5
    }
}

/// Tracking errors expressed in the reference-attached frame.
///
/// `(e_x, e_y)` is the position error rotated by `-psi_re`; velocity and
/// yaw errors are plain differences. `e_psi` stays unwrapped.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorState {
    pub e_x: f64,
    pub e_y: f64,
    pub e_u: f64,
    pub e_v: f64,
    pub e_psi: f64,
    pub e_r: f64,
}

impl ErrorState {
    /// Composite variable `W = (e_x, e_y) + (e_u, e_v)/mu`.
    pub fn w(&self, mu: f64) -> (f64, f64) {
        (self.e_x + self.e_u / mu, self.e_y + self.e_v / mu)
    }

    pub fn position_norm(&self) -> f64 {
        self.e_x.hypot(self.e_y)
    }

    pub fn velocity_norm(&self) -> f64 {
        self.e_u.hypot(self.e_v)
    }

    pub fn norm(&self) -> f64 {
        (self.e_x * self.e_x
            + self.e_y * self.e_y
            + self.e_u * self.e_u
            + self.e_v * self.e_v
            + self.e_psi * self.e_psi
            + self.e_r * self.e_r)
            .sqrt()
    }
}

/// Error coordinates of a (vessel, reference) pair.
pub fn error_transform(vessel: &VesselState, reference: &VesselState) -> ErrorState {
    let delta = Vector2::new(vessel.x - reference.x, vessel.y - reference.y);
    let pos = rotation(reference.psi).transpose() * delta;
    ErrorState {
        e_x: pos.x,
        e_y: pos.y,
        e_u: vessel.u - reference.u,
        e_v: vessel.v - reference.v,
        e_psi: vessel.psi - reference.psi,
        e_r: vessel.r - reference.r,
    }
}

/// Level-set bound on the trailing supremum of `||(u, v)||` under inputs
/// bounded by `tau1_max`: the radius where
/// `d/ds[(u²+v²)/2] <= -m_rate (u²+v²) + tau1²/(2 a1)` stops being negative.
pub fn velocity_limsup_bound(tau1_max: f64, a1: f64, m_rate: f64) -> f64 {
    tau1_max / (2.0 * a1 * m_rate).sqrt()
}

/// Trailing bound on `|r|` under inputs bounded by the ceilings.
pub fn yaw_rate_limsup_bound(tau2_max: f64, beta: f64, tau1_max: f64, a1: f64, m_rate: f64) -> f64 {
    tau2_max + beta.abs() * tau1_max * tau1_max / (2.0 * a1 * m_rate)
}

/// Full gain set of the controller, with the derived constants filled in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerGains {
    /// Surge-correction saturation amplitude.
    pub u1: f64,
    /// Yaw-correction saturation amplitude.
    pub u2: f64,
    /// Position-correction amplitude; equals the model-scaling constant.
    pub rho: f64,
    /// Coupling constant `b1/c - a1`.
    pub xi: f64,
    /// Coupling constant `b1/(c rho)`.
    pub mu: f64,
    /// Slope of the position-correction argument.
    pub m: f64,
    pub k1: f64,
    pub k2: f64,
    /// Lyapunov weight `(k1 - k2 + 1)/U2²`.
    pub alpha: f64,
    pub tau1_max: f64,
    pub tau2_max: f64,
    /// `min(a1/2, b1)`, the contraction rate of the velocity subsystem.
    pub m_rate: f64,
    /// Coupling bound `u_max + v_max` used by the velocity-error estimate.
    pub c0: f64,
}

impl ControllerGains {
    /// Saturation argument `z = (k1 e_psi + (k2 - 1) e_r)/U2` of the yaw law.
    pub fn saturation_argument(&self, e_psi: f64, e_r: f64) -> f64 {
        (self.k1 * e_psi + (self.k2 - 1.0) * e_r) / self.u2
    }

    /// Lyapunov function `V = (alpha/2) e_r² + S(z)` of the yaw subsystem.
    pub fn yaw_lyapunov(&self, e_psi: f64, e_r: f64) -> f64 {
        0.5 * self.alpha * e_r * e_r + saturation_potential(self.saturation_argument(e_psi, e_r))
    }

    /// Eigenvalues of the linear-region yaw matrix `[[0, 1], [-k1, -k2]]`;
    /// returns `(slow, fast)` real parts.
    pub fn linear_yaw_rates(&self) -> (f64, f64) {
        let disc = self.k2 * self.k2 - 4.0 * self.k1;
        if disc >= 0.0 {
            let s = disc.sqrt();
            ((-self.k2 + s) / 2.0, (-self.k2 - s) / 2.0)
        } else {
            (-self.k2 / 2.0, -self.k2 / 2.0)
        }
    }
}

/// Optional user-supplied values; anything left `None` gets the default.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GainOverrides {
    pub u1: Option<f64>,
    pub u2: Option<f64>,
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    pub m: Option<f64>,
    pub tau1_max: Option<f64>,
    pub tau2_max: Option<f64>,
}

/// Demand information used to size the actuator ceilings.
///
/// Ceilings are set to the provable demand: the reference feedforward plus
/// the intrinsic bound of each correction, plus the Munk-compensation
/// budget evaluated on velocity caps that account for initial transients
/// and (in output-feedback mode) for the observation-error amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SynthesisContext {
    pub tau1_re_max: f64,
    pub tau2_re_max: f64,
    /// `||(u0, v0)||` of the vessel in normalized units.
    pub vessel_ic_speed: f64,
    /// `||(u0, v0)||` of the reference in normalized units.
    pub reference_ic_speed: f64,
    /// Worst-case velocity observation error fed to the Munk compensation.
    pub observation_error_cap: f64,
}

/// One row of the synthesis ledger: `lhs` compared against `rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    /// Hard checks abort synthesis on failure; soft ones only warn.
    pub hard: bool,
}

/// Gains plus the evaluated constraint ledger.
#[derive(Debug, Clone, PartialEq)]
pub struct GainSynthesis {
    pub gains: ControllerGains,
    pub checks: Vec<ConstraintCheck>,
    pub warnings: Vec<String>,
}

/// Velocity caps implied by the ceilings, the initial speeds and the
/// observation-error allowance; used for ceiling and `c0` sizing.
fn velocity_caps(sp: &ScaledParams, ctx: &SynthesisContext, tau1_max: f64) -> (f64, f64) {
    let m_rate = (sp.a1 / 2.0).min(sp.b1);
    let vessel = velocity_limsup_bound(tau1_max, sp.a1, m_rate).max(ctx.vessel_ic_speed);
    let reference =
        velocity_limsup_bound(ctx.tau1_re_max, sp.a1, m_rate).max(ctx.reference_ic_speed);
    (vessel, reference)
}

/// Fills the derived constants, applies defaults for anything not
/// overridden (`k1 = k2 = 10`, `U2 = 0.1`, `U1 = a1/2`, `M = 0.1`) and
/// evaluates the complete inequality ledger.
///
/// A failing hard inequality aborts with a `ConstraintViolation` listing
/// every failed row. The surge-amplitude inequality
/// `U1 > |a1 - b1/c| rho / min(a1, b1/c)` is deliberately soft: gain sets
/// that fail only this row are returned with a warning.
pub fn synthesize_gains(
    sp: &ScaledParams,
    overrides: &GainOverrides,
    ctx: &SynthesisContext,
) -> Result<GainSynthesis, VesselError> {
    let u1 = overrides.u1.unwrap_or(sp.a1 / 2.0);
    let u2 = overrides.u2.unwrap_or(0.1);
    let k1 = overrides.k1.unwrap_or(10.0);
    let k2 = overrides.k2.unwrap_or(10.0);
    let m = overrides.m.unwrap_or(0.1);
    let rho = sp.rho;
    let m_rate = (sp.a1 / 2.0).min(sp.b1);
    let alpha = (k1 - k2 + 1.0) / (u2 * u2);

    let tau1_max = overrides.tau1_max.unwrap_or(ctx.tau1_re_max + u1 + rho);
    let (vessel_cap, reference_cap) = velocity_caps(sp, ctx, tau1_max);
    let f_cap = ctx.observation_error_cap;
    let munk_budget = sp.beta.abs()
        * (0.5 * (vessel_cap * vessel_cap + reference_cap * reference_cap)
            + f_cap * (2.0 * vessel_cap + f_cap));
    let tau2_max = overrides
        .tau2_max
        .unwrap_or(ctx.tau2_re_max + u2 + munk_budget);

    let b1_over_c = sp.b1 / sp.c;
    let u1_floor = (sp.a1 - b1_over_c).abs() * rho / sp.a1.min(b1_over_c);
    let checks = vec![
        ConstraintCheck {
            name: "a1 > U1 + rho",
            lhs: sp.a1,
            rhs: u1 + rho,
            pass: sp.a1 > u1 + rho,
            hard: true,
        },
        ConstraintCheck {
            name: "U1 > |a1 - b1/c| rho / min(a1, b1/c)",
            lhs: u1,
            rhs: u1_floor,
            pass: u1 > u1_floor,
            hard: false,
        },
        ConstraintCheck {
            name: "U2 > 0",
            lhs: u2,
            rhs: 0.0,
            pass: u2 > 0.0,
            hard: true,
        },
        ConstraintCheck {
            name: "M > 0",
            lhs: m,
            rhs: 0.0,
            pass: m > 0.0,
            hard: true,
        },
        ConstraintCheck {
            name: "k1 > k2 - 1",
            lhs: k1,
            rhs: k2 - 1.0,
            pass: k1 > k2 - 1.0,
            hard: true,
        },
        ConstraintCheck {
            name: "k2 - 1 > 0",
            lhs: k2 - 1.0,
            rhs: 0.0,
            pass: k2 - 1.0 > 0.0,
            hard: true,
        },
        ConstraintCheck {
            name: "mu > 0",
            lhs: sp.mu,
            rhs: 0.0,
            pass: sp.mu > 0.0,
            hard: true,
        },
        ConstraintCheck {
            name: "alpha > 0",
            lhs: alpha,
            rhs: 0.0,
            pass: alpha > 0.0,
            hard: true,
        },
        ConstraintCheck {
            name: "tau1_max > 0",
            lhs: tau1_max,
            rhs: 0.0,
            pass: tau1_max > 0.0,
            hard: true,
        },
        ConstraintCheck {
            name: "tau2_max > 0",
            lhs: tau2_max,
            rhs: 0.0,
            pass: tau2_max > 0.0,
            hard: true,
        },
    ];

    let hard_failures: Vec<String> = checks
        .iter()
        .filter(|c| c.hard && !c.pass)
        .map(|c| format!("{} (lhs={:.6}, rhs={:.6})", c.name, c.lhs, c.rhs))
        .collect();
    if !hard_failures.is_empty() {
        return Err(VesselError::ConstraintViolation {
            failures: hard_failures,
        });
    }

    let warnings: Vec<String> = checks
        .iter()
        .filter(|c| !c.hard && !c.pass)
        .map(|c| {
            format!(
                "soft constraint failed: {} (lhs={:.6}, rhs={:.6}); proceeding",
                c.name, c.lhs, c.rhs
            )
        })
        .collect();

    let gains = ControllerGains {
        u1,
        u2,
        rho,
        xi: sp.xi,
        mu: sp.mu,
        m,
        k1,
        k2,
        alpha,
        tau1_max,
        tau2_max,
        m_rate,
        c0: 2.0 * vessel_cap.max(reference_cap),
    };
    Ok(GainSynthesis {
        gains,
        checks,
        warnings,
    })
}

/// Evaluation of the actuator-budget condition
/// `beta tau1_max² / (a1 m_rate) < tau2_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct C1Report {
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
    /// Scaling constant above which the condition holds, evaluated from
    /// the physical ceilings; zero when `beta <= 0`.
    pub rho_floor: f64,
}

pub fn check_c1(gains: &ControllerGains, sp: &ScaledParams) -> C1Report {
    let lhs = sp.beta * gains.tau1_max * gains.tau1_max / (sp.a1 * gains.m_rate);
    let rhs = gains.tau2_max;
    let tau1_phys = gains.tau1_max * sp.rho * sp.d * sp.d;
    let tau2_phys = gains.tau2_max * sp.d * sp.d;
    let rho_floor =
        (tau1_phys / sp.d) * (sp.beta.max(0.0) / (sp.a1 * gains.m_rate * tau2_phys)).sqrt();
    C1Report {
        lhs,
        rhs,
        satisfied: lhs < rhs,
        rho_floor,
    }
}

/// Shared form of both feedback laws; the output-feedback variant passes
/// estimated surge and yaw-rate errors while pose errors stay measured.
fn feedback_terms(
    e_x: f64,
    e_psi: f64,
    e_u_fb: f64,
    e_r_fb: f64,
    g: &ControllerGains,
) -> (f64, f64) {
    let w1 = -g.u1 * saturate(g.xi * e_u_fb / g.u1) - g.rho * saturate(g.m * (e_x + e_u_fb / g.mu));
    let w2 = -g.u2 * saturate((g.k1 * e_psi + (g.k2 - 1.0) * e_r_fb) / g.u2);
    (w1, w2)
}

/// State-feedback corrections `(w1, w2)`; `|w1| <= U1 + rho`, `|w2| <= U2`.
pub fn state_feedback(e: &ErrorState, g: &ControllerGains) -> (f64, f64) {
    feedback_terms(e.e_x, e.e_psi, e.e_u, e.e_r, g)
}

/// Output-feedback corrections: identical formulas with `(e_u, e_r)`
/// replaced by their estimates. With exact estimates this reduces to
/// [`state_feedback`] bit for bit.
pub fn output_feedback(
    e_measured: &ErrorState,
    e_u_hat: f64,
    e_r_hat: f64,
    g: &ControllerGains,
) -> (f64, f64) {
    feedback_terms(e_measured.e_x, e_measured.e_psi, e_u_hat, e_r_hat, g)
}

/// Relative slack allowed when checking assembled inputs against their
/// ceilings; covers floating-point rounding of the assembly sums only.
pub const BUDGET_EPS: f64 = 1e-12;

/// Combines feedforward, corrections and the Munk compensation into the
/// actual inputs. `u_fb`, `v_fb` are the measured or estimated body
/// velocities used by the compensation term.
#[allow(clippy::too_many_arguments)]
pub fn assemble_inputs(
    w1: f64,
    w2: f64,
    u_fb: f64,
    v_fb: f64,
    reference: &VesselState,
    reference_input: &ControlInput,
    g: &ControllerGains,
    sp: &ScaledParams,
    s: f64,
) -> Result<ControlInput, VesselError> {
    let tau1 = reference_input.tau1 + w1;
    let tau2 = reference_input.tau2 + w2 - sp.beta * (u_fb * v_fb - reference.u * reference.v);
    for (channel, value, ceiling) in [("tau1", tau1, g.tau1_max), ("tau2", tau2, g.tau2_max)] {
        if value.abs() > ceiling + BUDGET_EPS * ceiling.max(1.0) {
            return Err(VesselError::SaturationBudget {
                time: s,
                channel,
                value: value.abs(),
                ceiling,
            });
        }
    }
    Ok(ControlInput { tau1, tau2 })
}
