use std::fs;
use std::path::{Path, PathBuf};

use plotters::prelude::*;

use super::aggregate::{group_by_remap, load_runs};
use super::stats::{ci95_halfwidth, mean};
use crate::error::{Error, Result};

/// One point of a mean validation curve.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub remap: String,
    pub samples_seen: usize,
    pub mean: f64,
    /// `None` when fewer than two runs contribute.
    pub ci95_halfwidth: Option<f64>,
    pub n_runs: usize,
}

#[derive(Clone, Debug)]
pub struct PlotOutput {
    pub points: Vec<CurvePoint>,
    pub csv_path: PathBuf,
    pub svg_path: PathBuf,
}

/// Mean validation-accuracy curve per remap kind with a 95% band, written
/// as `curves.csv` and `curves.svg` under `out_dir`.
pub fn plot(files: &[PathBuf], out_dir: &Path) -> Result<PlotOutput> {
    let runs = load_runs(files)?;
    let dataset = runs[0].dataset.clone();

    let mut points = Vec::new();
    for (remap, group) in group_by_remap(&runs) {
        let epochs = group.iter().map(|r| r.records.len()).min().unwrap_or(0);
        for e in 0..epochs {
            let values: Vec<f64> = group.iter().map(|r| r.records[e].val_accuracy).collect();
            points.push(CurvePoint {
                remap: remap.clone(),
                samples_seen: group[0].records[e].samples_seen,
                mean: mean(&values),
                ci95_halfwidth: (values.len() >= 2).then(|| ci95_halfwidth(&values)),
                n_runs: values.len(),
            });
        }
    }

    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let csv_path = out_dir.join("curves.csv");
    let mut w = csv::Writer::from_path(&csv_path)?;
    w.write_record(["remap", "samples_seen", "mean", "ci95_halfwidth", "n_runs"])?;
    for p in &points {
        w.write_record([
            p.remap.clone(),
            p.samples_seen.to_string(),
            p.mean.to_string(),
            p.ci95_halfwidth.map_or_else(String::new, |c| c.to_string()),
            p.n_runs.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&csv_path, e))?;

    let svg_path = out_dir.join("curves.svg");
    draw(&points, &dataset, &svg_path).map_err(|e| Error::Report(format!("plot: {e}")))?;
    Ok(PlotOutput {
        points,
        csv_path,
        svg_path,
    })
}

fn draw(points: &[CurvePoint], dataset: &str, path: &Path) -> std::result::Result<(), Box<dyn std::error::Error>> {
    let x_max = points.iter().map(|p| p.samples_seen).max().unwrap_or(1) as f64;
    let root = SVGBackend::new(path, (900, 540)).into_drawing_area();
    root.fill(&WHITE)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(format!("Validation accuracy ({dataset})"), ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(50)
        .build_cartesian_2d(0f64..x_max, 0f64..1f64)?;
    chart
        .configure_mesh()
        .x_desc("samples processed")
        .y_desc("validation accuracy")
        .draw()?;

    let mut remaps: Vec<&str> = Vec::new();
    for p in points {
        if !remaps.contains(&p.remap.as_str()) {
            remaps.push(&p.remap);
        }
    }
    for (i, remap) in remaps.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        let curve: Vec<&CurvePoint> = points.iter().filter(|p| p.remap == *remap).collect();
        if curve.iter().all(|p| p.ci95_halfwidth.is_some()) {
            let upper = curve
                .iter()
                .map(|p| (p.samples_seen as f64, (p.mean + p.ci95_halfwidth.unwrap_or(0.0)).min(1.0)));
            let lower = curve
                .iter()
                .rev()
                .map(|p| (p.samples_seen as f64, (p.mean - p.ci95_halfwidth.unwrap_or(0.0)).max(0.0)));
            let band: Vec<(f64, f64)> = upper.chain(lower).collect();
            chart.draw_series(std::iter::once(Polygon::new(band, color.mix(0.15).filled())))?;
        }
        chart
            .draw_series(LineSeries::new(
                curve.iter().map(|p| (p.samples_seen as f64, p.mean)),
                color.stroke_width(2),
            ))?
            .label(remap.to_string())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .position(SeriesLabelPosition::LowerRight)
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()?;
    root.present()?;
    Ok(())
}
