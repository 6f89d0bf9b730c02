//! Static SVG figures from a recorded run; no display server required.

use std::path::Path;

use anyhow::{Context, Result};
use plotters::prelude::*;

use vessel_core::record::{Col, RunRecord};

const FIG_SIZE: (u32, u32) = (760, 520);
const MAX_POINTS: usize = 2000;

fn series(record: &RunRecord, x: Col, y: Col) -> Vec<(f64, f64)> {
    let stride = (record.len() / MAX_POINTS).max(1);
    let mut pts: Vec<(f64, f64)> = record
        .rows
        .iter()
        .step_by(stride)
        .map(|r| (r[x as usize], r[y as usize]))
        .collect();
    let last = record.last_row();
    if pts.last() != Some(&(last[x as usize], last[y as usize])) {
        pts.push((last[x as usize], last[y as usize]));
    }
    pts
}

fn bounds(series: &[&[(f64, f64)]]) -> ((f64, f64), (f64, f64)) {
    let mut x = (f64::INFINITY, f64::NEG_INFINITY);
    let mut y = (f64::INFINITY, f64::NEG_INFINITY);
    for s in series {
        for &(px, py) in *s {
            x = (x.0.min(px), x.1.max(px));
            y = (y.0.min(py), y.1.max(py));
        }
    }
    let pad = |(lo, hi): (f64, f64)| {
        let span = (hi - lo).abs().max(1e-9);
        (lo - 0.05 * span, hi + 0.05 * span)
    };
    (pad(x), pad(y))
}

type NamedSeries<'a> = (&'a str, Vec<(f64, f64)>, RGBColor);

fn line_chart(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    named: &[NamedSeries],
) -> Result<()> {
    let root = SVGBackend::new(path, FIG_SIZE).into_drawing_area();
    root.fill(&WHITE)?;
    let refs: Vec<&[(f64, f64)]> = named.iter().map(|(_, s, _)| s.as_slice()).collect();
    let ((x0, x1), (y0, y1)) = bounds(&refs);
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(42)
        .y_label_area_size(64)
        .build_cartesian_2d(x0..x1, y0..y1)?;
    chart
        .configure_mesh()
        .x_desc(x_label)
        .y_desc(y_label)
        .label_style(("sans-serif", 14))
        .draw()?;
    for (name, points, color) in named {
        chart
            .draw_series(LineSeries::new(points.iter().copied(), color))?
            .label(*name)
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color));
    }
    chart
        .configure_series_labels()
        .border_style(BLACK)
        .background_style(WHITE.mix(0.85))
        .draw()?;
    root.present()?;
    Ok(())
}

/// Emits the six standard figures into `dir` and returns their paths.
pub fn emit_figures(record: &RunRecord, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {dir:?}"))?;
    let time_label = "s [scaled time; t = s/d]";
    let figures: Vec<(&str, &str, &str, &str, Vec<NamedSeries>)> = vec![
        (
            "plan.svg",
            "Reference trajectory and the vessel",
            "x [m]",
            "y [m]",
            vec![
                ("reference", series(record, Col::XRe, Col::YRe), BLUE),
                ("vessel", series(record, Col::X, Col::Y), RED),
            ],
        ),
        (
            "errors_xy.svg",
            "Position errors",
            time_label,
            "error [m] (normalized = physical)",
            vec![
                ("e_x", series(record, Col::S, Col::EX), BLUE),
                ("e_y", series(record, Col::S, Col::EY), RED),
            ],
        ),
        (
            "errors_uv.svg",
            "Velocity errors",
            time_label,
            "error [normalized]",
            vec![
                ("e_u", series(record, Col::S, Col::EU), BLUE),
                ("e_v", series(record, Col::S, Col::EV), RED),
            ],
        ),
        (
            "errors_psir.svg",
            "Heading and yaw-rate errors",
            time_label,
            "error [rad, rad/unit]",
            vec![
                ("e_psi", series(record, Col::S, Col::EPsi), BLUE),
                ("e_r", series(record, Col::S, Col::ER), RED),
            ],
        ),
        (
            "tau1.svg",
            "Surge input",
            time_label,
            "tau1 [normalized]",
            vec![("tau1", series(record, Col::S, Col::Tau1), BLUE)],
        ),
        (
            "tau2.svg",
            "Yaw input",
            time_label,
            "tau2 [normalized]",
            vec![("tau2", series(record, Col::S, Col::Tau2), BLUE)],
        ),
    ];
    let mut paths = Vec::new();
    for (file, title, xl, yl, named) in figures {
        let path = dir.join(file);
        line_chart(&path, title, xl, yl, &named)
            .with_context(|| format!("while drawing {file}"))?;
        paths.push(path);
    }
    Ok(paths)
}
