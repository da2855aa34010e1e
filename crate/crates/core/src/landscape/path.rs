use serde::Serialize;

use super::AccuracyOracle;
use crate::arch_space::Architecture;
use crate::error::{Error, Result};
use crate::geometry::build_path_tree;

/// Accuracy profile along all shortest paths between two architectures.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarrierReport {
    pub source: Architecture,
    pub target: Architecture,
    pub dataset: String,
    pub distance: usize,
    /// Unique architectures per level, endpoints included.
    pub level_sizes: Vec<usize>,
    /// Mean accuracy of the unique architectures at each level.
    pub level_mean_acc: Vec<f64>,
    /// Minimum over intermediate architectures; absent for adjacent endpoints.
    pub path_min_acc: Option<f64>,
    pub barrier: f64,
}

impl BarrierReport {
    /// `radius,mean_acc,unique_count` rows.
    pub fn level_csv(&self) -> String {
        let mut out = String::from("radius,mean_acc,unique_count\n");
        for (r, (mean, n)) in self.level_mean_acc.iter().zip(&self.level_sizes).enumerate() {
            out.push_str(&format!("{r},{mean},{n}\n"));
        }
        out
    }
}

/// Endpoint mean minus the intermediate minimum.
pub fn barrier_value(source_acc: f64, target_acc: f64, intermediate_min: f64) -> f64 {
    0.5 * (source_acc + target_acc) - intermediate_min
}

pub fn accuracy_path<O: AccuracyOracle + ?Sized>(
    oracle: &O,
    a: &Architecture,
    b: &Architecture,
    dataset: &str,
) -> Result<BarrierReport> {
    if a == b {
        return Err(Error::InvalidConfig("accuracy path endpoints are identical".into()));
    }
    let tree = build_path_tree(a, b)?;
    let d = tree.distance();
    let mut level_mean_acc = Vec::with_capacity(d + 1);
    let mut path_min: Option<f64> = None;
    for (r, level) in tree.levels.iter().enumerate() {
        let accs = level.iter().map(|x| oracle.accuracy(x, dataset)).collect::<Result<Vec<f64>>>()?;
        level_mean_acc.push(accs.iter().sum::<f64>() / accs.len() as f64);
        if r > 0 && r < d {
            let lo = accs.iter().copied().fold(f64::INFINITY, f64::min);
            path_min = Some(path_min.map_or(lo, |m| m.min(lo)));
        }
    }
    let barrier = match path_min {
        Some(m) => barrier_value(level_mean_acc[0], level_mean_acc[d], m),
        None => 0.0,
    };
    Ok(BarrierReport {
        source: a.clone(),
        target: b.clone(),
        dataset: dataset.to_string(),
        distance: d,
        level_sizes: tree.levels.iter().map(Vec::len).collect(),
        level_mean_acc,
        path_min_acc: path_min,
        barrier,
    })
}
