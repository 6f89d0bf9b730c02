//! Sweep specification files and the summary CSV.

use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use vessel_core::sim::{
    Axis, AxisParam, GridSpec, IcBox, SweepOutcome, Thresholds, VelocityRegion,
};

pub const SWEEP_SCHEMA: &str = "vessel-sweep-v1";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub schema: String,
    pub kind: String,
    // ic-box fields
    pub count: Option<usize>,
    pub x: Option<[f64; 2]>,
    pub y: Option<[f64; 2]>,
    pub psi: Option<[f64; 2]>,
    pub velocities: Option<VelocitiesFile>,
    // grid fields
    #[serde(default)]
    pub axis: Vec<AxisFile>,
    pub thresholds: Option<ThresholdsFile>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum VelocitiesFile {
    Named(String),
    Ranges {
        u: [f64; 2],
        v: [f64; 2],
        r: [f64; 2],
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisFile {
    pub param: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdsFile {
    pub position: Option<f64>,
    pub yaw: Option<f64>,
    pub velocity: Option<f64>,
}

fn axis_param(name: &str) -> Result<AxisParam> {
    Ok(match name {
        "u1" => AxisParam::GainU1,
        "u2" => AxisParam::GainU2,
        "k1" => AxisParam::GainK1,
        "k2" => AxisParam::GainK2,
        "m" => AxisParam::GainM,
        "rho" => AxisParam::Rho,
        "f0" => AxisParam::HarnessF0,
        "lambda" => AxisParam::HarnessLambda,
        "x0" => AxisParam::InitX,
        "y0" => AxisParam::InitY,
        "psi0" => AxisParam::InitPsi,
        "u0" => AxisParam::InitU,
        "v0" => AxisParam::InitV,
        "r0" => AxisParam::InitR,
        other => bail!("unknown axis parameter {other:?}"),
    })
}

impl SweepFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: SweepFile = toml::from_str(text).context("failed to parse sweep file")?;
        if file.schema != SWEEP_SCHEMA {
            bail!(
                "schema mismatch: expected {SWEEP_SCHEMA:?}, got {:?}",
                file.schema
            );
        }
        Ok(file)
    }

    pub fn to_grid(&self) -> Result<GridSpec> {
        match self.kind.as_str() {
            "ic-box" => {
                let velocities = match &self.velocities {
                    None => VelocityRegion::LimsupBall,
                    Some(VelocitiesFile::Named(name)) if name == "limsup-ball" => {
                        VelocityRegion::LimsupBall
                    }
                    Some(VelocitiesFile::Named(other)) => {
                        bail!("velocities: expected \"limsup-ball\" or ranges, got {other:?}")
                    }
                    Some(VelocitiesFile::Ranges { u, v, r }) => VelocityRegion::Ranges {
                        u: *u,
                        v: *v,
                        r: *r,
                    },
                };
                Ok(GridSpec::IcBox(IcBox {
                    count: self.count.context("ic-box sweep requires count")?,
                    x: self.x.context("ic-box sweep requires x range")?,
                    y: self.y.context("ic-box sweep requires y range")?,
                    psi: self.psi.context("ic-box sweep requires psi range")?,
                    velocities,
                }))
            }
            "grid" => {
                if self.axis.is_empty() {
                    bail!("grid sweep requires at least one [[axis]]");
                }
                let axes = self
                    .axis
                    .iter()
                    .map(|a| {
                        Ok(Axis {
                            param: axis_param(&a.param)?,
                            values: a.values.clone(),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(GridSpec::Axes(axes))
            }
            other => bail!("kind: expected \"ic-box\" or \"grid\", got {other:?}"),
        }
    }

    pub fn thresholds(&self) -> Thresholds {
        let defaults = Thresholds::default();
        match &self.thresholds {
            None => defaults,
            Some(t) => Thresholds {
                position: t.position.unwrap_or(defaults.position),
                yaw: t.yaw.unwrap_or(defaults.yaw),
                velocity: t.velocity.unwrap_or(defaults.velocity),
            },
        }
    }
}

/// Writes the summary CSV: `run_id, terminal_error_norm, sat_exit_time, status`.
pub fn write_summary(path: &Path, outcomes: &[SweepOutcome]) -> Result<()> {
    let mut out = std::io::BufWriter::new(
        std::fs::File::create(path).with_context(|| format!("cannot create {path:?}"))?,
    );
    writeln!(out, "run_id,terminal_error_norm,sat_exit_time,status")?;
    for o in outcomes {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{}",
            o.id,
            o.terminal_error_norm,
            o.sat_exit_time,
            o.status.as_str()
        )?;
    }
    Ok(())
}
