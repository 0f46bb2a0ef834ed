//! CSV and SVG emission for harness reports. The CSV tables are the
//! artifacts of record and are byte-identical for identical configs (wall
//! clock and version live only in the JSON reports).

use std::path::Path;

use quadenv::error::Result;

use crate::harness::{ConstantsReport, HistReport, SweepReport};
use crate::svg::{bar_chart, line_chart, Series};

pub fn write_sweep_csv(path: &Path, report: &SweepReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "method",
        "noise",
        "mean_snr",
        "mean_err_x0",
        "mean_err_xs",
        "support_rate",
        "mean_cardinality",
        "trials_completed",
        "trials_failed",
    ])?;
    for cell in &report.cells {
        w.write_record([
            cell.method.clone(),
            cell.noise.to_string(),
            cell.mean_snr.to_string(),
            cell.mean_err_x0.to_string(),
            cell.mean_err_xs.to_string(),
            cell.support_rate.to_string(),
            cell.mean_cardinality.to_string(),
            cell.trials_completed.to_string(),
            cell.trials_failed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep_svg(path: &Path, report: &SweepReport) -> Result<()> {
    let methods: Vec<&str> = {
        let mut m: Vec<&str> = report.cells.iter().map(|c| c.method.as_str()).collect();
        m.dedup();
        m
    };
    let series_for = |metric: &dyn Fn(&crate::harness::SweepCell) -> f64| -> Vec<Series> {
        methods
            .iter()
            .map(|name| Series {
                label: name.to_string(),
                points: report
                    .cells
                    .iter()
                    .filter(|c| c.method == *name)
                    .map(|c| (c.noise, metric(c)))
                    .collect(),
            })
            .collect()
    };
    let err_x0 = line_chart(
        "mean ||x' - x0|| vs noise",
        "||eps||",
        "mean ||x' - x0||",
        &series_for(&|c| c.mean_err_x0),
    );
    std::fs::write(path, err_x0)?;
    let xs_path = path.with_file_name(format!(
        "{}-oracle.svg",
        path.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep")
    ));
    let err_xs = line_chart(
        "mean ||x' - x_S|| vs noise",
        "||eps||",
        "mean ||x' - x_S||",
        &series_for(&|c| c.mean_err_xs),
    );
    std::fs::write(xs_path, err_xs)?;
    Ok(())
}

pub fn write_hist_csv(path: &Path, report: &HistReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["cardinality", "count"])?;
    for (card, &count) in report.bins.iter().enumerate() {
        w.write_record([card.to_string(), count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_hist_svg(path: &Path, report: &HistReport) -> Result<()> {
    let bins: Vec<(usize, usize)> = report.bins.iter().copied().enumerate().collect();
    let svg = bar_chart(
        &format!("final cardinality over {} trials", report.config.trials),
        "cardinality",
        "trials",
        &bins,
    );
    std::fs::write(path, svg)?;
    Ok(())
}

pub fn write_constants_csv(path: &Path, report: &ConstantsReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["matrix", "k", "beta_k", "inv_beta_k", "delta_k", "subsets_scanned"])?;
    for row in &report.rows {
        w.write_record([
            row.matrix_index.to_string(),
            row.k.to_string(),
            row.beta.to_string(),
            row.inv_beta.to_string(),
            row.delta.map(|d| d.to_string()).unwrap_or_default(),
            row.subsets_scanned.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_crt_csv(path: &Path, report: &ConstantsReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["matrix", "K", "delta_3k", "delta_4k", "lhs", "holds"])?;
    for row in &report.crt {
        w.write_record([
            row.matrix_index.to_string(),
            row.k.to_string(),
            row.delta_3k.to_string(),
            row.delta_4k.to_string(),
            row.lhs.to_string(),
            row.holds.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_constants_svg(path: &Path, report: &ConstantsReport) -> Result<()> {
    let matrices: Vec<usize> = {
        let mut m: Vec<usize> = report.rows.iter().map(|r| r.matrix_index).collect();
        m.dedup();
        m
    };
    let series: Vec<Series> = matrices
        .iter()
        .map(|idx| Series {
            label: format!("matrix {idx}"),
            points: report
                .rows
                .iter()
                .filter(|r| r.matrix_index == *idx && r.beta > 0.0)
                .map(|r| (r.k as f64, 1.0 / r.beta))
                .collect(),
        })
        .collect();
    let svg = line_chart("1/beta_k", "k", "1/beta_k", &series);
    std::fs::write(path, svg)?;
    Ok(())
}
