//! Scenario files: a versioned TOML schema mapping one-to-one onto
//! [`vessel_core::sim::Scenario`]. Unknown keys are rejected; missing
//! required keys surface with their section path.

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use vessel_core::control::GainOverrides;
use vessel_core::model::{PhysicalParams, VesselState};
use vessel_core::observer::ErrorShape;
use vessel_core::reference::{Interp, ReferenceInput, Signal};
use vessel_core::sim::{FeedbackMode, InitialState, Scenario, StateUnits};

pub const SCHEMA: &str = "vessel-scenario-v1";

/// Names resolvable without a file; embedded copies of `scenarios/`.
pub const BUNDLED: [(&str, &str); 2] = [
    (
        "paper-monohull",
        include_str!("../../../scenarios/paper-monohull.toml"),
    ),
    (
        "monohull-fast",
        include_str!("../../../scenarios/monohull-fast.toml"),
    ),
];

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema: String,
    pub name: String,
    pub vessel: VesselSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "GainsSection::is_empty")]
    pub gains: GainsSection,
    pub reference: ReferenceSection,
    pub initial: InitialSection,
    pub sim: SimSection,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct VesselSection {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_override: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GainsSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau1_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau2_max: Option<f64>,
}

impl GainsSection {
    fn is_empty(&self) -> bool {
        *self == GainsSection::default()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    pub tau1: SignalFile,
    pub tau2: SignalFile,
}

/// A constant, or a sampled series with optional interpolation
/// (`"step"` or `"linear"`, default linear).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum SignalFile {
    Constant(f64),
    Samples {
        times: Vec<f64>,
        values: Vec<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        interp: Option<String>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub vessel: StateFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<StateFile>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    /// `"physical"` (meters, m/s; default) or `"normalized"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub units: Option<String>,
    #[serde(default)]
    pub x: f64,
    #[serde(default)]
    pub y: f64,
    #[serde(default)]
    pub psi: f64,
    #[serde(default)]
    pub u: f64,
    #[serde(default)]
    pub v: f64,
    #[serde(default)]
    pub r: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub horizon: f64,
    pub step: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record_stride: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<ModeFile>,
}

/// Feedback mode; `kind` is `"state"`, `"output-differentiator"` or
/// `"output-harness"`, with the fields the kind requires.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModeFile {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gain: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
}

fn signal_to_core(sig: &SignalFile, path: &str) -> Result<Signal> {
    match sig {
        SignalFile::Constant(v) => Ok(Signal::Constant(*v)),
        SignalFile::Samples {
            times,
            values,
            interp,
        } => {
            let interp = match interp.as_deref() {
                None | Some("linear") => Interp::Linear,
                Some("step") => Interp::Step,
                Some(other) => bail!("{path}.interp: unknown interpolation {other:?}"),
            };
            let s = Signal::Samples {
                times: times.clone(),
                values: values.clone(),
                interp,
            };
            s.validate().with_context(|| format!("in {path}"))?;
            Ok(s)
        }
    }
}

fn signal_to_file(sig: &Signal) -> SignalFile {
    match sig {
        Signal::Constant(v) => SignalFile::Constant(*v),
        Signal::Samples {
            times,
            values,
            interp,
        } => SignalFile::Samples {
            times: times.clone(),
            values: values.clone(),
            interp: Some(
                match interp {
                    Interp::Linear => "linear",
                    Interp::Step => "step",
                }
                .into(),
            ),
        },
    }
}

fn state_to_core(st: &StateFile, path: &str) -> Result<InitialState> {
    let units = match st.units.as_deref() {
        None | Some("physical") => StateUnits::Physical,
        Some("normalized") => StateUnits::Normalized,
        Some(other) => {
            bail!("{path}.units: expected \"physical\" or \"normalized\", got {other:?}")
        }
    };
    Ok(InitialState {
        units,
        state: VesselState::new(st.x, st.y, st.psi, st.u, st.v, st.r),
    })
}

fn state_to_file(st: &InitialState) -> StateFile {
    StateFile {
        units: Some(
            match st.units {
                StateUnits::Physical => "physical",
                StateUnits::Normalized => "normalized",
            }
            .into(),
        ),
        x: st.state.x,
        y: st.state.y,
        psi: st.state.psi,
        u: st.state.u,
        v: st.state.v,
        r: st.state.r,
    }
}

fn shape_to_core(shape: Option<&str>, omega: Option<f64>) -> Result<ErrorShape> {
    Ok(match shape {
        None | Some("uniform") => ErrorShape::Uniform,
        Some("surge-only") => ErrorShape::SurgeOnly,
        Some("sway-only") => ErrorShape::SwayOnly,
        Some("yaw-only") => ErrorShape::YawOnly,
        Some("rotating") => ErrorShape::Rotating {
            omega: omega.ok_or_else(|| anyhow!("sim.mode.omega required for rotating shape"))?,
        },
        Some(other) => bail!("sim.mode.shape: unknown shape {other:?}"),
    })
}

fn mode_to_core(mode: Option<&ModeFile>) -> Result<FeedbackMode> {
    let Some(mode) = mode else {
        return Ok(FeedbackMode::State);
    };
    match mode.kind.as_str() {
        "state" => Ok(FeedbackMode::State),
        "output-differentiator" => Ok(FeedbackMode::OutputDifferentiator {
            gain: mode.gain.unwrap_or(50.0),
        }),
        "output-harness" => Ok(FeedbackMode::OutputHarness {
            f0: mode
                .f0
                .ok_or_else(|| anyhow!("sim.mode.f0 required for output-harness"))?,
            lambda: mode
                .lambda
                .ok_or_else(|| anyhow!("sim.mode.lambda required for output-harness"))?,
            shape: shape_to_core(mode.shape.as_deref(), mode.omega)?,
        }),
        other => bail!(
            "sim.mode.kind: expected \"state\", \"output-differentiator\" or \
             \"output-harness\", got {other:?}"
        ),
    }
}

fn mode_to_file(mode: &FeedbackMode) -> Option<ModeFile> {
    match mode {
        FeedbackMode::State => None,
        FeedbackMode::OutputDifferentiator { gain } => Some(ModeFile {
            kind: "output-differentiator".into(),
            gain: Some(*gain),
            f0: None,
            lambda: None,
            shape: None,
            omega: None,
        }),
        FeedbackMode::OutputHarness { f0, lambda, shape } => {
            let (name, omega) = match shape {
                ErrorShape::Uniform => ("uniform", None),
                ErrorShape::SurgeOnly => ("surge-only", None),
                ErrorShape::SwayOnly => ("sway-only", None),
                ErrorShape::YawOnly => ("yaw-only", None),
                ErrorShape::Rotating { omega } => ("rotating", Some(*omega)),
            };
            Some(ModeFile {
                kind: "output-harness".into(),
                gain: None,
                f0: Some(*f0),
                lambda: Some(*lambda),
                shape: Some(name.into()),
                omega,
            })
        }
    }
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text).context("failed to parse scenario file")?;
        if file.schema != SCHEMA {
            bail!(
                "schema mismatch: expected {SCHEMA:?}, got {:?}",
                file.schema
            );
        }
        Ok(file)
    }

    pub fn to_scenario(&self) -> Result<Scenario> {
        Ok(Scenario {
            name: self.name.clone(),
            physical: PhysicalParams {
                m1: self.vessel.m1,
                m2: self.vessel.m2,
                m3: self.vessel.m3,
                d1: self.vessel.d1,
                d2: self.vessel.d2,
                d3: self.vessel.d3,
            },
            kappa_override: self.vessel.kappa_override,
            rho: self.rho,
            gains: GainOverrides {
                u1: self.gains.u1,
                u2: self.gains.u2,
                k1: self.gains.k1,
                k2: self.gains.k2,
                m: self.gains.m,
                tau1_max: self.gains.tau1_max,
                tau2_max: self.gains.tau2_max,
            },
            reference_input: ReferenceInput {
                tau1: signal_to_core(&self.reference.tau1, "reference.tau1")?,
                tau2: signal_to_core(&self.reference.tau2, "reference.tau2")?,
            },
            vessel_initial: state_to_core(&self.initial.vessel, "initial.vessel")?,
            reference_initial: match &self.initial.reference {
                Some(st) => state_to_core(st, "initial.reference")?,
                None => InitialState::physical(VesselState::default()),
            },
            horizon: self.sim.horizon,
            step: self.sim.step,
            mode: mode_to_core(self.sim.mode.as_ref())?,
            seed: self.sim.seed.unwrap_or(0),
            record_stride: self.sim.record_stride.unwrap_or(1),
        })
    }

    pub fn from_scenario(sc: &Scenario) -> Self {
        ScenarioFile {
            schema: SCHEMA.into(),
            name: sc.name.clone(),
            vessel: VesselSection {
                m1: sc.physical.m1,
                m2: sc.physical.m2,
                m3: sc.physical.m3,
                d1: sc.physical.d1,
                d2: sc.physical.d2,
                d3: sc.physical.d3,
                kappa_override: sc.kappa_override,
            },
            rho: sc.rho,
            gains: GainsSection {
                u1: sc.gains.u1,
                u2: sc.gains.u2,
                k1: sc.gains.k1,
                k2: sc.gains.k2,
                m: sc.gains.m,
                tau1_max: sc.gains.tau1_max,
                tau2_max: sc.gains.tau2_max,
            },
            reference: ReferenceSection {
                tau1: signal_to_file(&sc.reference_input.tau1),
                tau2: signal_to_file(&sc.reference_input.tau2),
            },
            initial: InitialSection {
                vessel: state_to_file(&sc.vessel_initial),
                reference: Some(state_to_file(&sc.reference_initial)),
            },
            sim: SimSection {
                horizon: sc.horizon,
                step: sc.step,
                record_stride: Some(sc.record_stride),
                seed: Some(sc.seed),
                mode: mode_to_file(&sc.mode),
            },
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }
}

/// Loads a scenario by bundled name or path.
pub fn load_scenario(spec: &str) -> Result<Scenario> {
    for (name, text) in BUNDLED {
        if spec == name {
            return ScenarioFile::parse(text)
                .and_then(|f| f.to_scenario())
                .with_context(|| format!("bundled scenario {name}"));
        }
    }
    let text = std::fs::read_to_string(spec)
        .with_context(|| format!("cannot read scenario file {spec:?}"))?;
    ScenarioFile::parse(&text)
        .and_then(|f| f.to_scenario())
        .with_context(|| format!("in scenario file {spec:?}"))
}
