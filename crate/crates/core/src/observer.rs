//! Velocity estimation for output feedback: exact kinematic inversion of
//! pose rates, a second-order high-gain differentiator to produce those
//! pose rates from measurements, and a synthetic-error harness that
//! injects exponentially decaying, integrable observation errors.

use nalgebra::Vector2;

use crate::error::VesselError;
use crate::model::{rotation, ScaledParams, VesselState};

/// Estimated body velocities at a scaled-time stamp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityEstimate {
    pub u: f64,
    pub v: f64,
    pub r: f64,
    pub s: f64,
}

/// Velocity observation errors `f = true - estimate`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObservationError {
    pub f_u: f64,
    pub f_v: f64,
    pub f_r: f64,
}

impl ObservationError {
    pub fn norm(&self) -> f64 {
        (self.f_u * self.f_u + self.f_v * self.f_v + self.f_r * self.f_r).sqrt()
    }
}

/// Inverse kinematics: `(u, v) = D_rho^{-1} R_{-psi} (x', y')`, `r = psi'`.
pub fn velocity_from_pose_rates(
    x_dot: f64,
    y_dot: f64,
    psi_dot: f64,
    psi_measured: f64,
    sp: &ScaledParams,
    s: f64,
) -> VelocityEstimate {
    let body = rotation(-psi_measured) * Vector2::new(x_dot, y_dot);
    VelocityEstimate {
        u: body.x / sp.rho,
        v: body.y / (sp.c * sp.rho),
        r: psi_dot,
        s,
    }
}

/// Second-order high-gain differentiator for one uniformly sampled channel.
///
/// Internal model `z1' = z2 + 2L (y - z1)`, `z2' = L² (y - z1)` with both
/// poles at `-L`, integrated one sample at a time with the measurement
/// held over the step. The rate estimate starts at the first measured
/// finite difference.
#[derive(Debug, Clone)]
pub struct Differentiator {
    gain: f64,
    step: f64,
    z1: f64,
    z2: f64,
    samples_seen: usize,
    last_y: f64,
}

impl Differentiator {
    pub fn new(gain: f64, step: f64) -> Result<Self, VesselError> {
        if gain <= 0.0 || !gain.is_finite() {
            return Err(VesselError::domain(format!(
                "differentiator gain must be positive, got {gain}"
            )));
        }
        if step <= 0.0 || !step.is_finite() {
            return Err(VesselError::domain(format!(
                "sampling step must be positive, got {step}"
            )));
        }
        Ok(Self {
            gain,
            step,
            z1: 0.0,
            z2: 0.0,
            samples_seen: 0,
            last_y: 0.0,
        })
    }

    /// Feeds the next sample and returns the current rate estimate.
    pub fn push(&mut self, y: f64) -> f64 {
        match self.samples_seen {
            0 => {
                self.z1 = y;
                self.z2 = 0.0;
            }
            1 => {
                self.z2 = (y - self.last_y) / self.step;
                self.z1 = y;
            }
            _ => {
                let l = self.gain;
                let f = |z: &[f64; 2]| [z[1] + 2.0 * l * (y - z[0]), l * l * (y - z[0])];
                let k1 = f(&[self.z1, self.z2]);
                let h = self.step;
                let k2 = f(&[self.z1 + 0.5 * h * k1[0], self.z2 + 0.5 * h * k1[1]]);
                let k3 = f(&[self.z1 + 0.5 * h * k2[0], self.z2 + 0.5 * h * k2[1]]);
                let k4 = f(&[self.z1 + h * k3[0], self.z2 + h * k3[1]]);
                self.z1 += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
                self.z2 += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
            }
        }
        self.samples_seen += 1;
        self.last_y = y;
        self.z2
    }

    pub fn rate(&self) -> f64 {
        self.z2
    }
}

/// Relative spacing tolerance accepted as "uniform" sampling.
const UNIFORMITY_TOL: f64 = 1e-9;

/// Differentiates a uniformly sampled series; rejects ragged or
/// non-uniform grids.
pub fn differentiate_series(
    times: &[f64],
    values: &[f64],
    gain: f64,
) -> Result<Vec<f64>, VesselError> {
    if times.len() != values.len() || times.len() < 2 {
        return Err(VesselError::format(
            "series needs equally many times and values (at least two)",
        ));
    }
    let step = times[1] - times[0];
    if step <= 0.0 || step.is_nan() {
        return Err(VesselError::format("series times must be increasing"));
    }
    for w in times.windows(2) {
        if ((w[1] - w[0]) - step).abs() > UNIFORMITY_TOL * step.abs().max(1.0) {
            return Err(VesselError::format(format!(
                "non-uniform sampling: expected step {step}, got {}",
                w[1] - w[0]
            )));
        }
    }
    let mut diff = Differentiator::new(gain, step)?;
    Ok(values.iter().map(|&y| diff.push(y)).collect())
}

/// How the harness distributes its error magnitude over the channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorShape {
    /// Equal split: each channel gets `F0 exp(-lambda s)/sqrt(3)`.
    Uniform,
    SurgeOnly,
    SwayOnly,
    YawOnly,
    /// Error rotates between surge and sway at `omega` rad per unit time.
    Rotating {
        omega: f64,
    },
}

/// Injects observation errors with `||f(s)|| = F0 exp(-lambda s)` exactly,
/// so the integrability hypothesis of the output-feedback theorem holds by
/// construction with `∫||f|| = F0/lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticErrorHarness {
    pub f0: f64,
    pub lambda: f64,
    pub shape: ErrorShape,
}

impl SyntheticErrorHarness {
    pub fn new(f0: f64, lambda: f64, shape: ErrorShape) -> Result<Self, VesselError> {
        if lambda <= 0.0 || !lambda.is_finite() {
            return Err(VesselError::domain(format!(
                "harness decay rate must be positive, got {lambda}"
            )));
        }
        if f0 < 0.0 || !f0.is_finite() {
            return Err(VesselError::domain(format!(
                "harness amplitude must be non-negative, got {f0}"
            )));
        }
        Ok(Self { f0, lambda, shape })
    }

    pub fn error_at(&self, s: f64) -> ObservationError {
        let mag = self.f0 * (-self.lambda * s).exp();
        match self.shape {
            ErrorShape::Uniform => {
                let each = mag / 3f64.sqrt();
                ObservationError {
                    f_u: each,
                    f_v: each,
                    f_r: each,
                }
            }
            ErrorShape::SurgeOnly => ObservationError {
                f_u: mag,
                ..Default::default()
            },
            ErrorShape::SwayOnly => ObservationError {
                f_v: mag,
                ..Default::default()
            },
            ErrorShape::YawOnly => ObservationError {
                f_r: mag,
                ..Default::default()
            },
            ErrorShape::Rotating { omega } => ObservationError {
                f_u: mag * (omega * s).cos(),
                f_v: mag * (omega * s).sin(),
                f_r: 0.0,
            },
        }
    }

    /// Estimate = truth minus injected error.
    pub fn estimate(&self, truth: &VesselState, s: f64) -> (VelocityEstimate, ObservationError) {
        let f = self.error_at(s);
        (
            VelocityEstimate {
                u: truth.u - f.f_u,
                v: truth.v - f.f_v,
                r: truth.r - f.f_r,
                s,
            },
            f,
        )
    }

    /// Closed-form `∫_0^∞ ||f(s)|| ds = F0/lambda`.
    pub fn error_integral(&self) -> f64 {
        self.f0 / self.lambda
    }
}
