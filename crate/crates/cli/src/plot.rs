//! Optional SVG charts. Purely presentational; nothing reads them back.

use std::path::Path;

use anyhow::anyhow;
use plotters::prelude::*;

const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
];

/// At most `n` evenly spaced points of a series.
pub fn thin(points: Vec<(f64, f64)>, n: usize) -> Vec<(f64, f64)> {
    if points.len() <= n || n < 2 {
        return points;
    }
    let step = (points.len() - 1) as f64 / (n - 1) as f64;
    (0..n).map(|i| points[((i as f64 * step).round() as usize).min(points.len() - 1)]).collect()
}

fn bounds<'a>(series: impl Iterator<Item = &'a (f64, f64)>) -> ((f64, f64), (f64, f64)) {
    let mut x = (f64::INFINITY, f64::NEG_INFINITY);
    let mut y = (f64::INFINITY, f64::NEG_INFINITY);
    for &(a, b) in series {
        if a.is_finite() && b.is_finite() {
            x = (x.0.min(a), x.1.max(a));
            y = (y.0.min(b), y.1.max(b));
        }
    }
    let pad = |(lo, hi): (f64, f64)| {
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi - lo < 1e-12 {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo, hi + 0.02 * (hi - lo))
        }
    };
    (pad(x), pad(y))
}

fn err(e: impl std::fmt::Display) -> anyhow::Error {
    anyhow!("svg: {e}")
}

/// Line chart of labelled series.
pub fn lines(path: &Path, caption: &str, series: &[(String, Vec<(f64, f64)>)]) -> anyhow::Result<()> {
    let root = SVGBackend::new(path, (900, 540)).into_drawing_area();
    root.fill(&WHITE).map_err(err)?;
    let ((x0, x1), (y0, y1)) = bounds(series.iter().flat_map(|s| s.1.iter()));
    let mut chart = ChartBuilder::on(&root)
        .caption(caption, ("sans-serif", 20))
        .margin(10)
        .x_label_area_size(35)
        .y_label_area_size(60)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(err)?;
    chart.configure_mesh().x_desc("t").draw().map_err(err)?;
    for (i, (name, pts)) in series.iter().enumerate() {
        let c = PALETTE[i % PALETTE.len()];
        chart
            .draw_series(LineSeries::new(pts.iter().copied(), c.stroke_width(2)))
            .map_err(err)?
            .label(name.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], c.stroke_width(2)));
    }
    chart.configure_series_labels().background_style(WHITE.mix(0.8)).border_style(BLACK).draw().map_err(err)?;
    root.present().map_err(err)?;
    Ok(())
}

/// Left: `|y(t)|` of every sample with the threshold; right: `T_emp` against `|x₀|`.
pub fn sweep(
    path: &Path,
    fan: &[Vec<(f64, f64)>],
    epsilon: f64,
    scatter: &[(f64, f64)],
    t_analytic: Option<f64>,
) -> anyhow::Result<()> {
    let root = SVGBackend::new(path, (1200, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(err)?;
    let (left, right) = root.split_horizontally(600);

    let ((x0, x1), (_, y1)) = bounds(fan.iter().flatten());
    let mut chart = ChartBuilder::on(&left)
        .caption("|y(t)| per sample", ("sans-serif", 18))
        .margin(10)
        .x_label_area_size(35)
        .y_label_area_size(60)
        .build_cartesian_2d(x0..x1, 0.0..y1.max(epsilon * 1.1))
        .map_err(err)?;
    chart.configure_mesh().x_desc("t").draw().map_err(err)?;
    for (i, pts) in fan.iter().enumerate() {
        let c = PALETTE[i % PALETTE.len()].mix(0.5);
        chart.draw_series(LineSeries::new(pts.iter().copied(), c)).map_err(err)?;
    }
    chart.draw_series(LineSeries::new([(x0, epsilon), (x1, epsilon)], BLACK.stroke_width(1))).map_err(err)?;

    let ((s0, s1), (_, t1)) = bounds(scatter.iter());
    let top = t_analytic.map_or(t1, |t| t1.max(t.min(10.0 * t1.max(1e-9))));
    let mut chart = ChartBuilder::on(&right)
        .caption("T_emp vs |x0|", ("sans-serif", 18))
        .margin(10)
        .x_label_area_size(35)
        .y_label_area_size(60)
        .build_cartesian_2d(s0..s1, 0.0..top * 1.05)
        .map_err(err)?;
    chart.configure_mesh().x_desc("|x0|").y_desc("T_emp").draw().map_err(err)?;
    chart
        .draw_series(scatter.iter().map(|&p| Circle::new(p, 3, PALETTE[0].filled())))
        .map_err(err)?;
    if let Some(t) = t_analytic.filter(|t| *t <= top) {
        chart.draw_series(LineSeries::new([(s0, t), (s1, t)], PALETTE[3].stroke_width(2))).map_err(err)?;
    }
    root.present().map_err(err)?;
    Ok(())
}
