//! SVG figures from a trace: top-down trajectories and per-plan weight mass.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::Context;
use m3p2i::orchestrator::TraceRecord;
use plotters::prelude::*;

const PALETTE: [RGBColor; 6] = [BLUE, RED, GREEN, MAGENTA, CYAN, BLACK];

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.05).max(0.05);
    (lo - pad, hi + pad)
}

fn trajectory(records: &[TraceRecord], path: &Path) -> anyhow::Result<()> {
    let root = SVGBackend::new(path, (720, 720)).into_drawing_area();
    root.fill(&WHITE)?;
    let xs = records.iter().flat_map(|r| [r.robot[0], r.object[0], r.goal[0]]);
    let ys = records.iter().flat_map(|r| [r.robot[1], r.object[1], r.goal[1]]);
    let (x0, x1) = span(xs);
    let (y0, y1) = span(ys);
    let mut chart = ChartBuilder::on(&root)
        .margin(20)
        .x_label_area_size(30)
        .y_label_area_size(40)
        .build_cartesian_2d(x0..x1, y0..y1)?;
    chart.configure_mesh().disable_mesh().x_desc("x [m]").y_desc("y [m]").draw()?;
    chart.draw_series(LineSeries::new(records.iter().map(|r| (r.robot[0], r.robot[1])), &BLUE))?;
    chart.draw_series(LineSeries::new(records.iter().map(|r| (r.object[0], r.object[1])), &RED))?;
    if let Some(last) = records.last() {
        chart.draw_series(std::iter::once(Circle::new((last.goal[0], last.goal[1]), 6, GREEN.filled())))?;
    }
    for r in records.iter().filter(|r| !r.disturbances.is_empty()) {
        chart.draw_series(std::iter::once(Cross::new((r.object[0], r.object[1]), 6, BLACK)))?;
    }
    root.present()?;
    Ok(())
}

fn weight_mass(records: &[TraceRecord], path: &Path) -> anyhow::Result<()> {
    let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in records {
        if let Some(d) = &r.diagnostics {
            for p in &d.plans {
                series.entry(p.label.clone()).or_default().push((r.time, p.weight_mass));
            }
        }
    }
    let t_end = records.last().map(|r| r.time).unwrap_or(1.0).max(1e-3);
    let root = SVGBackend::new(path, (960, 400)).into_drawing_area();
    root.fill(&WHITE)?;
    let mut chart = ChartBuilder::on(&root)
        .margin(20)
        .x_label_area_size(30)
        .y_label_area_size(40)
        .build_cartesian_2d(0.0..t_end, 0.0..1.0)?;
    chart
        .configure_mesh()
        .disable_mesh()
        .x_desc("time [s]")
        .y_desc("weight mass")
        .draw()?;
    for (i, (_, points)) in series.into_iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        chart.draw_series(LineSeries::new(points, &color))?;
    }
    root.present()?;
    Ok(())
}

/// Writes `trajectory.svg` and `weight_mass.svg` into `out`.
pub fn render(records: &[TraceRecord], out: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    trajectory(records, &out.join("trajectory.svg"))?;
    weight_mass(records, &out.join("weight_mass.svg"))?;
    Ok(())
}
