use std::collections::BTreeMap;
use std::path::PathBuf;

use super::stats::{ci95_halfwidth, mean};
use crate::error::{Error, Result};
use crate::remap::RemapKind;
use crate::training::{read_metrics, MetricsRecord};

/// Metric name of the last-epoch held-out accuracy.
pub const FINAL_METRIC: &str = "final_val_accuracy";

/// All records of one run, as read from its metrics CSV.
#[derive(Clone, Debug)]
pub struct RunCurve {
    pub run_id: String,
    /// Leading component of `run_id` (`<dataset>-<remap>-s<seed>`).
    pub dataset: String,
    pub remap: String,
    pub records: Vec<MetricsRecord>,
}

impl RunCurve {
    pub fn samples_per_epoch(&self) -> usize {
        let first = &self.records[0];
        first.samples_seen / first.epoch.max(1)
    }

    pub fn accuracy_at_epoch(&self, epoch: usize) -> Option<f64> {
        self.records
            .iter()
            .find(|r| r.epoch == epoch)
            .map(|r| r.val_accuracy)
    }
}

/// Reads one run per file and checks they all come from the same dataset
/// with the same epoch size.
pub fn load_runs(files: &[PathBuf]) -> Result<Vec<RunCurve>> {
    if files.is_empty() {
        return Err(Error::Report("no metrics files given".into()));
    }
    let mut runs = Vec::with_capacity(files.len());
    for path in files {
        let records = read_metrics(path)?;
        let first = records
            .first()
            .ok_or_else(|| Error::Report(format!("{} has no rows", path.display())))?;
        if records.iter().any(|r| r.run_id != first.run_id) {
            return Err(Error::Report(format!(
                "{} mixes several run ids",
                path.display()
            )));
        }
        let dataset = first
            .run_id
            .split('-')
            .next()
            .unwrap_or_default()
            .to_string();
        runs.push(RunCurve {
            run_id: first.run_id.clone(),
            dataset,
            remap: first.remap.clone(),
            records,
        });
    }
    let (ds, spe) = (&runs[0].dataset, runs[0].samples_per_epoch());
    if let Some(other) = runs.iter().find(|r| &r.dataset != ds || r.samples_per_epoch() != spe) {
        return Err(Error::Report(format!(
            "runs from different datasets: {} ({} samples/epoch) vs {} ({} samples/epoch)",
            runs[0].run_id,
            spe,
            other.run_id,
            other.samples_per_epoch()
        )));
    }
    Ok(runs)
}

/// Canonical remap order first, unknown names alphabetically after.
pub(crate) fn remap_sort_key(name: &str) -> (usize, String) {
    let pos = name
        .parse::<RemapKind>()
        .ok()
        .and_then(|k| RemapKind::ALL.iter().position(|&x| x == k))
        .unwrap_or(usize::MAX);
    (pos, name.to_string())
}

/// Groups runs by remap name in canonical order.
pub(crate) fn group_by_remap(runs: &[RunCurve]) -> Vec<(String, Vec<&RunCurve>)> {
    let mut groups: BTreeMap<(usize, String), Vec<&RunCurve>> = BTreeMap::new();
    for run in runs {
        groups.entry(remap_sort_key(&run.remap)).or_default().push(run);
    }
    groups.into_iter().map(|((_, name), v)| (name, v)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRow {
    pub remap: String,
    pub metric: String,
    pub mean: f64,
    pub ci95_halfwidth: f64,
    pub n_runs: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregateTable {
    pub rows: Vec<AggregateRow>,
}

impl AggregateTable {
    pub fn get(&self, remap: &str, metric: &str) -> Option<&AggregateRow> {
        self.rows
            .iter()
            .find(|r| r.remap == remap && r.metric == metric)
    }

    fn remaps(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.remap.as_str()) {
                out.push(&r.remap);
            }
        }
        out
    }

    fn metrics(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.metric.as_str()) {
                out.push(&r.metric);
            }
        }
        out
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["remap", "metric", "mean", "ci95_halfwidth", "n_runs"])?;
        for r in &self.rows {
            w.write_record([
                r.remap.clone(),
                r.metric.clone(),
                r.mean.to_string(),
                r.ci95_halfwidth.to_string(),
                r.n_runs.to_string(),
            ])?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Report(format!("csv buffer: {}", e.error())))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Metrics down, remap kinds across, cells `mean ± ci`.
    pub fn to_text(&self) -> String {
        let remaps = self.remaps();
        let metrics = self.metrics();
        let mut grid: Vec<Vec<String>> = Vec::with_capacity(metrics.len() + 1);
        let mut header = vec!["metric".to_string()];
        header.extend(remaps.iter().map(|s| s.to_string()));
        grid.push(header);
        for m in &metrics {
            let mut line = vec![m.to_string()];
            for r in &remaps {
                line.push(match self.get(r, m) {
                    Some(row) => format!("{:.3} ± {:.3}", row.mean, row.ci95_halfwidth),
                    None => "-".into(),
                });
            }
            grid.push(line);
        }
        let widths: Vec<usize> = (0..grid[0].len())
            .map(|c| grid.iter().map(|row| row[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for (i, row) in grid.iter().enumerate() {
            let cells: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (cell, &w))| {
                    let pad = w - cell.chars().count();
                    if c == 0 {
                        format!("{cell}{}", " ".repeat(pad))
                    } else {
                        format!("{}{cell}", " ".repeat(pad))
                    }
                })
                .collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
            if i == 0 {
                let total = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
                out.push_str(&"-".repeat(total));
                out.push('\n');
            }
        }
        out
    }
}

/// Mean and 95% CI of validation accuracy per remap kind at each requested
/// sample count, plus the final-epoch accuracy.
///
/// Each sample count must be an exact multiple of the epoch size and land
/// on an epoch every run has reached. Each remap kind needs at least two runs.
pub fn aggregate(files: &[PathBuf], at_samples: &[usize]) -> Result<AggregateTable> {
    let runs = load_runs(files)?;
    let spe = runs[0].samples_per_epoch();
    let shortest = runs.iter().map(|r| r.records.len()).min().unwrap_or(0);
    let mut checkpoints = Vec::with_capacity(at_samples.len());
    for &s in at_samples {
        if spe == 0 || s % spe != 0 {
            return Err(Error::Report(format!(
                "checkpoint at {s} samples is not a multiple of the epoch size {spe}"
            )));
        }
        let epoch = s / spe;
        if epoch == 0 || epoch > shortest {
            return Err(Error::Report(format!(
                "checkpoint at {s} samples is epoch {epoch}, runs cover epochs 1..={shortest}"
            )));
        }
        checkpoints.push((format!("val_accuracy@{s}"), epoch));
    }

    let mut rows = Vec::new();
    for (remap, group) in group_by_remap(&runs) {
        if group.len() < 2 {
            return Err(Error::Report(format!(
                "remap `{remap}` has {} run(s); a confidence interval needs at least 2",
                group.len()
            )));
        }
        for (metric, epoch) in &checkpoints {
            let values: Vec<f64> = group
                .iter()
                .map(|r| r.accuracy_at_epoch(*epoch))
                .collect::<Option<_>>()
                .ok_or_else(|| Error::Report(format!("a `{remap}` run lacks epoch {epoch}")))?;
            rows.push(row(&remap, metric, &values));
        }
        let finals: Vec<f64> = group
            .iter()
            .map(|r| r.records.last().map_or(0.0, |x| x.val_accuracy))
            .collect();
        rows.push(row(&remap, FINAL_METRIC, &finals));
    }
    Ok(AggregateTable { rows })
}

fn row(remap: &str, metric: &str, values: &[f64]) -> AggregateRow {
    AggregateRow {
        remap: remap.to_string(),
        metric: metric.to_string(),
        mean: mean(values),
        ci95_halfwidth: ci95_halfwidth(values),
        n_runs: values.len(),
    }
}

/// Sample counts tabulated for each dataset: epochs 1, 2, 4 of Iris and
/// 4, 7, 13 of Wine.
pub fn table_checkpoints(dataset: crate::data::DatasetKind) -> Vec<usize> {
    match dataset {
        crate::data::DatasetKind::Iris => vec![120, 240, 480],
        crate::data::DatasetKind::Wine => vec![568, 994, 1846],
    }
}
