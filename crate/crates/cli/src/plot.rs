use crate::config::usage;
use crate::output::{read_schema, read_table};
use anyhow::{anyhow, Result};
use plotters::prelude::*;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Points,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
}

impl Series {
    pub fn new(name: &str, points: Vec<(f64, f64)>, style: Style) -> Self {
        Series { name: name.into(), points, style }
    }
}

pub struct Figure<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub series: Vec<Series>,
}

const PALETTE: [RGBColor; 4] = [RGBColor(31, 119, 180), RGBColor(214, 39, 40), RGBColor(44, 160, 44), RGBColor(148, 103, 189)];

fn range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo > hi {
        return None;
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 * lo.abs().max(1.0) };
    Some((lo - pad, hi + pad))
}

/// Renders `fig` to an SVG file. Returns a warning when there is nothing to
/// draw; the file then holds empty unit axes.
pub fn render(fig: &Figure, path: &Path) -> Result<Option<String>> {
    let all = || fig.series.iter().flat_map(|s| s.points.iter());
    let xr = range(all().map(|p| p.0));
    let yr = range(all().map(|p| p.1));
    let warning = match (xr, yr) {
        (Some(_), Some(_)) => None,
        _ => Some(format!("{}: no data points, drawing empty axes", path.display())),
    };
    let (x0, x1) = xr.unwrap_or((0.0, 1.0));
    let (y0, y1) = yr.unwrap_or((0.0, 1.0));
    let err = |e: DrawingAreaErrorKind<_>| anyhow!("plotting {} failed: {e}", path.display());
    let root = SVGBackend::new(path, (720, 480)).into_drawing_area();
    root.fill(&WHITE).map_err(err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(fig.title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(err)?;
    chart.configure_mesh().x_desc(fig.x_label).y_desc(fig.y_label).draw().map_err(err)?;
    let mut labelled = false;
    for (i, s) in fig.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts = s.points.iter().copied().filter(|p| p.0.is_finite() && p.1.is_finite());
        let anno = match s.style {
            Style::Line => chart.draw_series(LineSeries::new(pts, color.stroke_width(2))).map_err(err)?,
            Style::Points => chart.draw_series(pts.map(|p| Circle::new(p, 4, color.filled()))).map_err(err)?,
        };
        if !s.name.is_empty() {
            labelled = true;
            anno.label(s.name.clone())
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
        }
    }
    if labelled {
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(err)?;
    }
    root.present().map_err(err)?;
    Ok(warning)
}

fn column(header: &[String], name: &str, path: &Path) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| usage(format!("{}: schema mismatch, missing column {name:?}", path.display())))
}

/// Parses a numeric cell; an empty cell (a censored value) is NaN.
fn num(cell: &str) -> Result<f64> {
    if cell.is_empty() {
        return Ok(f64::NAN);
    }
    cell.parse().map_err(|_| usage(format!("not a number: {cell:?}")))
}

fn xy(header: &[String], rows: &[Vec<String>], x: &str, y: &str, path: &Path) -> Result<Vec<(f64, f64)>> {
    let (i, j) = (column(header, x, path)?, column(header, y, path)?);
    rows.iter().map(|r| Ok((num(&r[i])?, num(&r[j])?))).collect()
}

/// Figure for a result file written by this tool.
pub fn figure_for(path: &Path) -> Result<(Figure<'static>, Option<String>)> {
    let Some(schema) = read_schema(path)? else {
        let empty = Figure { title: "empty result", x_label: "", y_label: "", series: Vec::new() };
        return Ok((empty, Some(format!("{}: empty result file", path.display()))));
    };
    let (header, rows) = read_table(path)?;
    let fig = match schema.as_str() {
        "equilibrium/v1" => Figure {
            title: "Time-averaged profile",
            x_label: "level j",
            y_label: "u_j",
            series: vec![
                Series::new("simulated", xy(&header, &rows, "level", "mean", path)?, Style::Points),
                Series::new("pi(j)", xy(&header, &rows, "level", "pi", path)?, Style::Line),
                Series::new("linearized", xy(&header, &rows, "level", "tilde-u", path)?, Style::Line),
            ],
        },
        "coalescence/v1" => Figure {
            title: "Adjacent-pair coalescence time",
            x_label: "d",
            y_label: "steps",
            series: vec![
                Series::new("median", xy(&header, &rows, "d", "median", path)?, Style::Line),
                Series::new("90% quantile", xy(&header, &rows, "d", "q90", path)?, Style::Line),
            ],
        },
        "relaxation/v1" => Figure {
            title: "Q_k relaxation",
            x_label: "step",
            y_label: "mean Q_k",
            series: vec![Series::new("mean Q_k", xy(&header, &rows, "t", "mean-qk", path)?, Style::Line)],
        },
        other => return Err(usage(format!("{}: no figure for schema {other}", path.display()))),
    };
    Ok((fig, None))
}

/// Renders `input` next to itself under `out`, replacing the extension.
pub fn plot_file(input: &Path, out: &Path) -> Result<(PathBuf, Vec<String>)> {
    let (fig, warn) = figure_for(input)?;
    let stem = input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "figure".into());
    let target = out.join(format!("{stem}.svg"));
    let w = render(&fig, &target)?;
    Ok((target, warn.into_iter().chain(w).collect()))
}
