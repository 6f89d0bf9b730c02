//! 3-DOF vessel dynamics (surge, sway, yaw) and the exact change of
//! variables between the physical model and the normalized control model.
//!
//! Physical model, body velocities `(u, v, r)` and earth-fixed pose
//! `(x, y, psi)`:
//!
//! ```text
//! x'   = u cos(psi) - v sin(psi)
//! y'   = u sin(psi) + v cos(psi)
//! u'   = (1/c) v r - a u + tau1
//! v'   = -c u r - b v
//! psi' = r
//! r'   = kappa u v - d r + tau2
//! ```
//!
//! The control model is obtained by the time scale `s = d t` and the
//! velocity scaling `(u/(d rho), v/(d c rho), r/d)`; the pose is left
//! untouched. All controller constants live in scaled time.

use nalgebra::{Matrix2, Vector2};

use crate::error::VesselError;

/// Number of state components of either model.
pub const STATE_DIM: usize = 6;

/// Inertia and hydrodynamic damping of the physical vessel.
///
/// Units: `m1, m2` kg, `m3` kg·m², `d1, d2` kg/s, `d3` kg·m²/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl PhysicalParams {
    /// The 32 m monohull used by the bundled scenarios.
    pub fn monohull_32m() -> Self {
        Self {
            m1: 120e3,
            m2: 172.9e3,
            m3: 636e5,
            d1: 215e2,
            d2: 97e3,
            d3: 802e4,
        }
    }

    pub fn validate(&self) -> Result<(), VesselError> {
        let fields = [
            ("m1", self.m1),
            ("m2", self.m2),
            ("m3", self.m3),
            ("d1", self.d1),
            ("d2", self.d2),
            ("d3", self.d3),
        ];
        for (name, value) in fields {
            if value <= 0.0 || !value.is_finite() {
                return Err(VesselError::domain(format!(
                    "{name} must be strictly positive and finite, got {value}"
                )));
            }
        }
        Ok(())
    }
}

/// Rate constants of the physical model.
///
/// `kappa` carries the sign of `m1 - m2`; it is negative whenever sway
/// added mass exceeds surge added mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimitiveConstants {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub kappa: f64,
}

impl PrimitiveConstants {
    /// Replaces `kappa`, e.g. to force an externally listed value.
    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }
}

/// `a = d1/m1`, `b = d2/m2`, `c = m1/m2`, `d = d3/m3`, `kappa = (m1-m2)/m3`.
pub fn derive_primitive_constants(p: &PhysicalParams) -> Result<PrimitiveConstants, VesselError> {
    p.validate()?;
    Ok(PrimitiveConstants {
        a: p.d1 / p.m1,
        b: p.d2 / p.m2,
        c: p.m1 / p.m2,
        d: p.d3 / p.m3,
        kappa: (p.m1 - p.m2) / p.m3,
    })
}

/// Constants of the normalized model and the tied controller couplings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledParams {
    /// Normalized surge damping `a/d`.
    pub a1: f64,
    /// Normalized sway damping `b/d`.
    pub b1: f64,
    /// Mass ratio `m1/m2`.
    pub c: f64,
    /// Yaw damping rate; also the time-scale factor `s = d t`.
    pub d: f64,
    /// Signed added-mass coupling of the physical model.
    pub kappa: f64,
    /// Velocity-scaling constant of the change of variables.
    pub rho: f64,
    /// Coefficient of the `u v` product in the scaled yaw equation.
    ///
    /// Equals `kappa * c * rho^2`: under `s = d t`, `u -> u/(d rho)`,
    /// `v -> v/(d c rho)`, `r -> r/d`, the physical Munk term
    /// `kappa u v` transforms to exactly `(kappa c rho^2) u v`, which is
    /// what keeps the two models trajectory-equivalent.
    pub beta: f64,
    /// Coupling constant, `b1/(c rho)`; satisfies `a1 + xi = mu rho`.
    pub mu: f64,
    /// Coupling constant, `b1/c - a1`.
    pub xi: f64,
}

/// Scales the primitive constants into the control model for a given `rho > 0`.
pub fn scale_params(k: &PrimitiveConstants, rho: f64) -> Result<ScaledParams, VesselError> {
    if rho <= 0.0 || !rho.is_finite() {
        return Err(VesselError::domain(format!(
            "rho must be strictly positive and finite, got {rho}"
        )));
    }
    let a1 = k.a / k.d;
    let b1 = k.b / k.d;
    Ok(ScaledParams {
        a1,
        b1,
        c: k.c,
        d: k.d,
        kappa: k.kappa,
        rho,
        beta: k.kappa * k.c * rho * rho,
        mu: b1 / (k.c * rho),
        xi: b1 / k.c - a1,
    })
}

impl ScaledParams {
    /// `D_rho = diag(rho, c rho)`.
    pub fn d_rho(&self) -> Matrix2<f64> {
        Matrix2::new(self.rho, 0.0, 0.0, self.c * self.rho)
    }

    /// Damping matrix `diag(a1, b1)` of the scaled velocity subsystem.
    pub fn damping(&self) -> Matrix2<f64> {
        Matrix2::new(self.a1, 0.0, 0.0, self.b1)
    }

    /// Scaled time from physical time, `s = d t`.
    pub fn scaled_time(&self, t: f64) -> f64 {
        self.d * t
    }

    /// Physical time from scaled time, `t = s / d`.
    pub fn physical_time(&self, s: f64) -> f64 {
        s / self.d
    }
}

/// Rotation-coupling matrix of the scaled velocity subsystem,
/// `D_rho^{-1} A_c D_rho` with `A_c = [[0, -1/c], [c, 0]]`.
pub fn rotation_generator() -> Matrix2<f64> {
    Matrix2::new(0.0, -1.0, 1.0, 0.0)
}

/// Planar rotation by `angle`.
pub fn rotation(angle: f64) -> Matrix2<f64> {
    let (sin, cos) = angle.sin_cos();
    Matrix2::new(cos, -sin, sin, cos)
}

/// Pose and body velocities in one frame convention.
///
/// `psi` is kept unwrapped: headings accumulate and are never reduced
/// modulo 2π, so that persistent turning is visible in the signal.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VesselState {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    pub u: f64,
    pub v: f64,
    pub r: f64,
}

impl VesselState {
    pub fn new(x: f64, y: f64, psi: f64, u: f64, v: f64, r: f64) -> Self {
        Self { x, y, psi, u, v, r }
    }

    pub fn as_array(&self) -> [f64; STATE_DIM] {
        [self.x, self.y, self.psi, self.u, self.v, self.r]
    }

    pub fn from_array(a: &[f64; STATE_DIM]) -> Self {
        Self {
            x: a[0],
            y: a[1],
            psi: a[2],
            u: a[3],
            v: a[4],
            r: a[5],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }

    /// Largest absolute component, used by the divergence guard.
    pub fn max_abs(&self) -> f64 {
        self.as_array().iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Mass-normalized physical inputs: surge force over `m1`, yaw moment over `m3`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhysicalInput {
    pub tau1: f64,
    pub tau2: f64,
}

/// Inputs of the scaled model: `tau1 = tau1_phys/(rho d^2)`, `tau2 = tau2_phys/d^2`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlInput {
    pub tau1: f64,
    pub tau2: f64,
}

impl PhysicalInput {
    pub fn to_scaled(&self, sp: &ScaledParams) -> ControlInput {
        ControlInput {
            tau1: self.tau1 / (sp.rho * sp.d * sp.d),
            tau2: self.tau2 / (sp.d * sp.d),
        }
    }
}

impl ControlInput {
    pub fn to_physical(&self, sp: &ScaledParams) -> PhysicalInput {
        PhysicalInput {
            tau1: self.tau1 * sp.rho * sp.d * sp.d,
            tau2: self.tau2 * sp.d * sp.d,
        }
    }
}

/// Time derivative of the physical model at `s`, inputs held constant.
pub fn physical_derivative(
    s: &VesselState,
    input: &PhysicalInput,
    k: &PrimitiveConstants,
) -> VesselState {
    let rot = rotation(s.psi);
    let pos_dot = rot * Vector2::new(s.u, s.v);
    VesselState {
        x: pos_dot.x,
        y: pos_dot.y,
        psi: s.r,
        u: s.v * s.r / k.c - k.a * s.u + input.tau1,
        v: -k.c * s.u * s.r - k.b * s.v,
        r: k.kappa * s.u * s.v - k.d * s.r + input.tau2,
    }
}

/// Scaled-time derivative of the normalized model at `s`, inputs held constant.
pub fn normalized_derivative(
    s: &VesselState,
    input: &ControlInput,
    sp: &ScaledParams,
) -> VesselState {
    let pos_dot = rotation(s.psi) * sp.d_rho() * Vector2::new(s.u, s.v);
    // -D (u,v) - r A1 (u,v) + tau1 e1 with A1 = [[0,-1],[1,0]].
    VesselState {
        x: pos_dot.x,
        y: pos_dot.y,
        psi: s.r,
        u: -sp.a1 * s.u + s.r * s.v + input.tau1,
        v: -sp.b1 * s.v - s.r * s.u,
        r: sp.beta * s.u * s.v - s.r + input.tau2,
    }
}

/// Physical state to normalized state: velocities scaled, pose unchanged.
pub fn normalize_state(s: &VesselState, sp: &ScaledParams) -> VesselState {
    VesselState {
        x: s.x,
        y: s.y,
        psi: s.psi,
        u: s.u / (sp.d * sp.rho),
        v: s.v / (sp.d * sp.c * sp.rho),
        r: s.r / sp.d,
    }
}

/// Exact inverse of [`normalize_state`].
pub fn denormalize_state(s: &VesselState, sp: &ScaledParams) -> VesselState {
    VesselState {
        x: s.x,
        y: s.y,
        psi: s.psi,
        u: s.u * sp.d * sp.rho,
        v: s.v * sp.d * sp.c * sp.rho,
        r: s.r * sp.d,
    }
}
