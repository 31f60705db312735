//! Dataset statistics and plot-ready scatter output.

use std::collections::HashSet;
use std::io::Write;

use crate::error::{Error, Result};
use crate::graph::MetricPoint;
use crate::grid::MetricGrid;

/// Correlation, covariance and ranges of (clustering, dlog) over a dataset.
/// Covariance uses the population divisor `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct StatsReport {
    pub count: usize,
    pub corr: f64,
    pub cov: f64,
    /// Set when either metric is constant; `corr` is then reported as 0.
    pub constant_column: bool,
    pub clustering_min: f64,
    pub clustering_max: f64,
    pub dlog_min: f64,
    pub dlog_max: f64,
    /// Metric-grid cells holding at least one point.
    pub occupied_cells: usize,
}

pub fn compute_stats(points: &[MetricPoint], grid: &MetricGrid) -> Result<StatsReport> {
    if points.len() < 2 {
        return Err(Error::InvalidConfig(format!("statistics need at least 2 points, got {}", points.len())));
    }
    let n = points.len() as f64;
    let mean_c = points.iter().map(|p| p.clustering).sum::<f64>() / n;
    let mean_d = points.iter().map(|p| p.dlog).sum::<f64>() / n;
    let (mut scc, mut sdd, mut scd) = (0.0, 0.0, 0.0);
    for p in points {
        let (dc, dd) = (p.clustering - mean_c, p.dlog - mean_d);
        scc += dc * dc;
        sdd += dd * dd;
        scd += dc * dd;
    }
    let constant_column = scc == 0.0 || sdd == 0.0;
    let corr = if constant_column {
        0.0
    } else {
        (scd / (scc * sdd).sqrt()).clamp(-1.0, 1.0)
    };
    let fold = |f: fn(&MetricPoint) -> f64| {
        points
            .iter()
            .map(f)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
    };
    let (clustering_min, clustering_max) = fold(|p| p.clustering);
    let (dlog_min, dlog_max) = fold(|p| p.dlog);
    let occupied_cells = points.iter().map(|p| grid.locate(p)).collect::<HashSet<_>>().len();
    Ok(StatsReport {
        count: points.len(),
        corr,
        cov: scd / n,
        constant_column,
        clustering_min,
        clustering_max,
        dlog_min,
        dlog_max,
        occupied_cells,
    })
}

impl StatsReport {
    pub const CSV_HEADER: &'static str =
        "dataset,count,corr,cov,constant_column,c_min,c_max,dlog_min,dlog_max,occupied_cells";

    pub fn csv_row(&self, label: &str) -> String {
        format!(
            "{label},{},{},{},{},{},{},{},{},{}",
            self.count,
            self.corr,
            self.cov,
            self.constant_column,
            self.clustering_min,
            self.clustering_max,
            self.dlog_min,
            self.dlog_max,
            self.occupied_cells
        )
    }
}

/// Writes `dataset,clustering,dlog` rows, one per point, datasets in order.
pub fn emit_scatter_csv<W: Write>(datasets: &[(&str, &[MetricPoint])], w: W) -> csv::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["dataset", "clustering", "dlog"])?;
    for (label, points) in datasets {
        for p in points.iter() {
            wr.serialize((label, p.clustering, p.dlog))?;
        }
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mp(clustering: f64, dlog: f64) -> MetricPoint {
        MetricPoint { clustering, dlog }
    }

    #[test]
    fn two_point_stats() {
        let s = compute_stats(&[mp(0.0, 0.0), mp(1.0, 1.0)], &MetricGrid::default()).unwrap();
        assert!((s.corr - 1.0).abs() < 1e-15);
        assert!((s.cov - 0.25).abs() < 1e-15);
        assert!(!s.constant_column);
    }

    #[test]
    fn constant_column_flagged() {
        let s = compute_stats(&[mp(0.3, -2.0); 5], &MetricGrid::default()).unwrap();
        assert!(s.constant_column);
        assert_eq!(s.corr, 0.0);
        assert_eq!(s.occupied_cells, 1);
        assert_eq!((s.clustering_min, s.clustering_max), (0.3, 0.3));
    }

    #[test]
    fn too_few_points() {
        assert!(compute_stats(&[mp(0.1, -1.0)], &MetricGrid::default()).is_err());
    }

    #[test]
    fn anticorrelated_points() {
        let pts: Vec<MetricPoint> = (0..10).map(|i| mp(i as f64 / 10.0, -(i as f64) / 3.0)).collect();
        let s = compute_stats(&pts, &MetricGrid::default()).unwrap();
        assert!((s.corr + 1.0).abs() < 1e-12);
        assert!(s.cov < 0.0);
    }

    #[test]
    fn scatter_rows() {
        let mut buf = Vec::new();
        emit_scatter_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "dataset,clustering,dlog\n");

        let a = [mp(0.1, -1.0), mp(0.2, -2.0), mp(0.3, -3.0)];
        let b = [mp(0.5, -0.5), mp(0.6, -1.5), mp(0.7, -2.5)];
        let mut buf = Vec::new();
        emit_scatter_csv(&[("result", &a), ("validation", &b)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 7);
        assert_eq!(text.lines().nth(1).unwrap(), "result,0.1,-1.0");
    }
}
