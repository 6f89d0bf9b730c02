//! Per-run time series with the fixed CSV schema, plus the event log of
//! streaming diagnostics computed at full integrator rate.

use std::io::{Read, Write};
use std::path::Path;

use crate::control::ControllerGains;
use crate::error::VesselError;
use crate::model::{ControlInput, ScaledParams, VesselState};
use crate::reference::ReferenceTrajectory;

/// Number of recorded columns.
pub const N_COLS: usize = 35;

/// Column order of the run CSV; stable across releases.
pub const CSV_HEADER: [&str; N_COLS] = [
    "s", "t", "x", "y", "psi", "u", "v", "r", "x_re", "y_re", "psi_re", "u_re", "v_re", "r_re",
    "e_x", "e_y", "e_u", "e_v", "e_psi", "e_r", "tau1", "tau2", "w1", "w2", "V", "Vuv", "G", "z",
    "W1", "W2", "Wt1", "Wt2", "f_u", "f_v", "f_r",
];

/// Column indices, in header order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(usize)]
pub enum Col {
    S = 0,
    T,
    X,
    Y,
    Psi,
    U,
    V,
    R,
    XRe,
    YRe,
    PsiRe,
    URe,
    VRe,
    RRe,
    EX,
    EY,
    EU,
    EV,
    EPsi,
    ER,
    Tau1,
    Tau2,
    W1Col,
    W2Col,
    Lyap,
    Vuv,
    G,
    Z,
    W1,
    W2,
    Wt1,
    Wt2,
    FU,
    FV,
    FR,
}

/// Events and full-rate aggregates collected during a run.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    /// First scaled time after which the yaw saturation argument stayed in
    /// `[-1, 1]` for the rest of the run; `None` if it never exited.
    pub saturation_exit: Option<f64>,
    /// Constraint warnings carried over from gain synthesis.
    pub warnings: Vec<String>,
    /// Samples where the centered-difference derivative of the yaw
    /// Lyapunov function exceeded its dissipation identity plus slack.
    pub vdot_violations: usize,
    pub vdot_samples: usize,
    pub max_abs_tau1: f64,
    pub max_abs_tau2: f64,
    pub max_abs_w1: f64,
    pub max_abs_w2: f64,
    /// Trapezoidal `∫ W1 σ(M W1) ds` over the run.
    pub w1_sigma_integral: f64,
    /// Trapezoidal `∫ ||f|| ds` of the observation errors over the run.
    pub observation_error_integral: f64,
}

impl Default for EventLog {
    fn default() -> Self {
        Self {
            saturation_exit: None,
            warnings: Vec::new(),
            vdot_violations: 0,
            vdot_samples: 0,
            max_abs_tau1: 0.0,
            max_abs_tau2: 0.0,
            max_abs_w1: 0.0,
            max_abs_w2: 0.0,
            w1_sigma_integral: 0.0,
            observation_error_integral: 0.0,
        }
    }
}

/// Terminal error norms of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminalErrors {
    pub position: f64,
    pub velocity: f64,
    pub yaw: f64,
    pub norm: f64,
}

/// Recorded closed-loop run: rows on the (possibly strided) grid plus the
/// full-rate event log and the parameters that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    /// Integrator step in scaled time.
    pub step: f64,
    /// Recording stride: rows sit `stride * step` apart.
    pub stride: usize,
    pub rows: Vec<[f64; N_COLS]>,
    pub events: EventLog,
    pub gains: ControllerGains,
    pub scaled: ScaledParams,
}

impl RunRecord {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn value(&self, row: usize, col: Col) -> f64 {
        self.rows[row][col as usize]
    }

    pub fn col(&self, col: Col) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(move |r| r[col as usize])
    }

    pub fn last_row(&self) -> &[f64; N_COLS] {
        self.rows.last().expect("non-empty record")
    }

    pub fn terminal_errors(&self) -> TerminalErrors {
        let r = self.last_row();
        let sq = |c: Col| r[c as usize] * r[c as usize];
        TerminalErrors {
            position: r[Col::EX as usize].hypot(r[Col::EY as usize]),
            velocity: r[Col::EU as usize].hypot(r[Col::EV as usize]),
            yaw: r[Col::EPsi as usize].abs(),
            norm: (sq(Col::EX)
                + sq(Col::EY)
                + sq(Col::EU)
                + sq(Col::EV)
                + sq(Col::EPsi)
                + sq(Col::ER))
            .sqrt(),
        }
    }

    /// Row index of the first recorded sample at or after scaled time `s`.
    pub fn row_at(&self, s: f64) -> usize {
        let spacing = self.step * self.stride as f64;
        ((s / spacing).ceil() as usize).min(self.len() - 1)
    }

    /// Writes the run as CSV with 17 significant digits per value.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), VesselError> {
        write_rows(out, &self.rows)
    }

    pub fn write_csv_path(&self, path: &Path) -> Result<(), VesselError> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

fn write_rows<W: Write>(out: W, rows: &[[f64; N_COLS]]) -> Result<(), VesselError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)
        .map_err(|e| VesselError::Csv(e.to_string()))?;
    let mut field = String::with_capacity(26);
    let mut record = csv::StringRecord::with_capacity(N_COLS * 26, N_COLS);
    for row in rows {
        record.clear();
        for v in row {
            field.clear();
            use std::fmt::Write as _;
            let _ = write!(field, "{v:.16e}");
            record.push_field(&field);
        }
        w.write_record(&record)
            .map_err(|e| VesselError::Csv(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads rows written by [`RunRecord::write_csv`]; the header must match
/// the schema exactly.
pub fn read_csv_rows<R: Read>(input: R) -> Result<Vec<[f64; N_COLS]>, VesselError> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader
        .headers()
        .map_err(|e| VesselError::Csv(e.to_string()))?;
    if header.len() != N_COLS || header.iter().zip(CSV_HEADER).any(|(a, b)| a != b) {
        return Err(VesselError::Csv(format!(
            "unexpected header: {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| VesselError::Csv(e.to_string()))?;
        let mut row = [0.0; N_COLS];
        for (j, fieldvalue) in rec.iter().enumerate() {
            row[j] = fieldvalue.trim().parse().map_err(|_| {
                VesselError::Csv(format!(
                    "row {}, column {}: bad float {fieldvalue:?}",
                    i + 2,
                    j
                ))
            })?;
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Exports a reference trajectory in the run schema: the virtual vessel
/// fills both the vessel and reference columns, errors and corrections are
/// zero, and controller-dependent diagnostics are left at zero.
pub fn write_reference_csv<W: Write>(
    traj: &ReferenceTrajectory,
    sp: &ScaledParams,
    out: W,
) -> Result<(), VesselError> {
    let mut rows = Vec::with_capacity(traj.len());
    for (k, (state, input)) in traj.states.iter().zip(&traj.inputs).enumerate() {
        let s = traj.time(k);
        let mut row = [0.0; N_COLS];
        row[Col::S as usize] = s;
        row[Col::T as usize] = sp.physical_time(s);
        for (offset, value) in [state.x, state.y, state.psi, state.u, state.v, state.r]
            .into_iter()
            .enumerate()
        {
            row[Col::X as usize + offset] = value;
            row[Col::XRe as usize + offset] = value;
        }
        row[Col::Tau1 as usize] = input.tau1;
        row[Col::Tau2 as usize] = input.tau2;
        row[Col::Vuv as usize] = 0.5 * (state.u * state.u + state.v * state.v);
        rows.push(row);
    }
    write_rows(out, &rows)
}

/// Reads a reference trajectory back from the run schema.
pub fn read_reference_csv<R: Read>(input: R) -> Result<ReferenceTrajectory, VesselError> {
    let rows = read_csv_rows(input)?;
    if rows.len() < 2 {
        return Err(VesselError::Csv(
            "reference trajectory needs at least two samples".into(),
        ));
    }
    let step = rows[1][Col::S as usize] - rows[0][Col::S as usize];
    if step <= 0.0 || step.is_nan() {
        return Err(VesselError::Csv("non-increasing time grid".into()));
    }
    let states = rows
        .iter()
        .map(|r| {
            VesselState::new(
                r[Col::XRe as usize],
                r[Col::YRe as usize],
                r[Col::PsiRe as usize],
                r[Col::URe as usize],
                r[Col::VRe as usize],
                r[Col::RRe as usize],
            )
        })
        .collect();
    let inputs = rows
        .iter()
        .map(|r| ControlInput {
            tau1: r[Col::Tau1 as usize],
            tau2: r[Col::Tau2 as usize],
        })
        .collect();
    Ok(ReferenceTrajectory {
        step,
        states,
        inputs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{derive_primitive_constants, scale_params, PhysicalParams};
    use crate::reference::{generate_reference, ReferenceInput};

    fn paper_scaled() -> ScaledParams {
        let k = derive_primitive_constants(&PhysicalParams::monohull_32m()).unwrap();
        scale_params(&k, (k.a / k.d) / 4.0).unwrap()
    }

    #[test]
    fn header_matches_schema() {
        assert_eq!(CSV_HEADER.len(), N_COLS);
        assert_eq!(CSV_HEADER[0], "s");
        assert_eq!(CSV_HEADER[Col::Wt2 as usize], "Wt2");
        assert_eq!(CSV_HEADER[N_COLS - 1], "f_r");
    }

    #[test]
    fn reference_csv_round_trip_is_exact() {
        let sp = paper_scaled();
        let traj = generate_reference(
            &ReferenceInput::constant(10.0, 0.05),
            &VesselState::default(),
            &sp,
            2.0,
            1e-2,
            (11.1, 0.2),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_reference_csv(&traj, &sp, &mut buf).unwrap();
        let back = read_reference_csv(buf.as_slice()).unwrap();
        // 17 significant digits round-trip f64 exactly.
        assert_eq!(back.step, traj.step);
        assert_eq!(back.states, traj.states);
        assert_eq!(back.inputs, traj.inputs);
    }

    #[test]
    fn wrong_header_is_rejected() {
        let data = "a,b,c\n1,2,3\n";
        assert!(matches!(
            read_csv_rows(data.as_bytes()),
            Err(VesselError::Csv(_))
        ));
    }

    #[test]
    fn run_rows_round_trip_bitwise() {
        let mut sc = crate::sim::Scenario::monohull_fast();
        sc.horizon = 3.0;
        sc.record_stride = 50;
        let record = crate::sim::run(&sc).unwrap();
        let mut buf = Vec::new();
        record.write_csv(&mut buf).unwrap();
        let rows = read_csv_rows(buf.as_slice()).unwrap();
        assert_eq!(rows.len(), record.len());
        for (a, b) in rows.iter().zip(&record.rows) {
            for (x, y) in a.iter().zip(b.iter()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }
}
