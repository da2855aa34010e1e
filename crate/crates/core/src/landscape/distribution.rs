use std::collections::{BTreeMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::AccuracyOracle;
use crate::arch_space::Architecture;
use crate::error::{Error, Result};
use crate::geometry::neighbors_at_radius;

/// Name of the tier holding random-pair differences.
pub const RANDOM_TIER: &str = "random";

/// Reference architectures for a neighborhood sample.
#[derive(Debug, Clone, PartialEq)]
pub enum RefSelector {
    Archs(Vec<Architecture>),
    /// Every architecture with `lo <= acc <= hi`.
    Band { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinSpec {
    pub count: usize,
    /// Defaults to `[min, max]` of the union of all samples.
    pub range: Option<(f64, f64)>,
}

impl Default for BinSpec {
    fn default() -> Self {
        Self { count: 50, range: None }
    }
}

/// Unit-area density histogram.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
    pub sample_size: usize,
}

impl Histogram {
    fn build(sample: &[f64], lo: f64, hi: f64, count: usize) -> Self {
        let width = (hi - lo) / count as f64;
        let edges: Vec<f64> = (0..=count).map(|i| lo + width * i as f64).collect();
        let mut counts = vec![0usize; count];
        let mut used = 0usize;
        for &x in sample {
            if !(lo..=hi).contains(&x) {
                continue;
            }
            let idx = (((x - lo) / width) as usize).min(count - 1);
            counts[idx] += 1;
            used += 1;
        }
        let density = counts
            .iter()
            .map(|&c| if used == 0 { 0.0 } else { c as f64 / (used as f64 * width) })
            .collect();
        Self { edges, density, sample_size: used }
    }

    /// Sum of density times bin width.
    pub fn area(&self) -> f64 {
        self.density.iter().zip(self.edges.windows(2)).map(|(d, e)| d * (e[1] - e[0])).sum()
    }
}

/// Neighbor and whole-space accuracy samples with their histograms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeighborhoodHistogram {
    pub reference_count: usize,
    pub radius: usize,
    pub neighbor_sample: Vec<f64>,
    pub space_sample: Vec<f64>,
    pub neighbors: Histogram,
    pub space: Histogram,
}

impl NeighborhoodHistogram {
    /// `bin_left,bin_right,density,source` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_left,bin_right,density,source\n");
        for (label, h) in [("neighbors", &self.neighbors), ("space", &self.space)] {
            for (d, e) in h.density.iter().zip(h.edges.windows(2)) {
                out.push_str(&format!("{},{},{},{}\n", e[0], e[1], d, label));
            }
        }
        out
    }
}

/// Architectures whose accuracy lies in `[lo, hi]`, sorted.
pub fn refs_in_band<O: AccuracyOracle + ?Sized>(oracle: &O, dataset: &str, lo: f64, hi: f64) -> Result<Vec<Architecture>> {
    Ok(oracle
        .entries(dataset)?
        .into_iter()
        .filter(|(_, acc)| (lo..=hi).contains(acc))
        .map(|(a, _)| a)
        .collect())
}

fn neighbor_accuracies<O: AccuracyOracle + ?Sized>(
    oracle: &O,
    refs: &[Architecture],
    r: usize,
    dataset: &str,
) -> Result<Vec<Vec<(f64, f64)>>> {
    refs.par_iter()
        .map(|a| {
            let base = oracle.accuracy(a, dataset)?;
            neighbors_at_radius(a, r)?
                .iter()
                .map(|n| Ok((base, oracle.accuracy(n, dataset)?)))
                .collect()
        })
        .collect()
}

/// Radius-`r` neighbor accuracies of every reference (with multiplicity)
/// against the accuracies of the whole space.
pub fn neighborhood_histogram<O: AccuracyOracle + ?Sized>(
    oracle: &O,
    refs: &RefSelector,
    r: usize,
    dataset: &str,
    bins: &BinSpec,
) -> Result<NeighborhoodHistogram> {
    if bins.count == 0 {
        return Err(Error::InvalidConfig("bin count must be positive".into()));
    }
    let refs = match refs {
        RefSelector::Archs(a) => a.clone(),
        RefSelector::Band { lo, hi } => refs_in_band(oracle, dataset, *lo, *hi)?,
    };
    if refs.is_empty() {
        return Err(Error::EmptySample);
    }
    let neighbor_sample: Vec<f64> = neighbor_accuracies(oracle, &refs, r, dataset)?
        .into_iter()
        .flatten()
        .map(|(_, n)| n)
        .collect();
    let space_sample: Vec<f64> = oracle.entries(dataset)?.into_iter().map(|(_, acc)| acc).collect();
    let (mut lo, mut hi) = bins.range.unwrap_or_else(|| {
        neighbor_sample
            .iter()
            .chain(&space_sample)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)))
    });
    if !(lo < hi) {
        lo -= 0.5;
        hi += 0.5;
    }
    Ok(NeighborhoodHistogram {
        reference_count: refs.len(),
        radius: r,
        neighbors: Histogram::build(&neighbor_sample, lo, hi, bins.count),
        space: Histogram::build(&space_sample, lo, hi, bins.count),
        neighbor_sample,
        space_sample,
    })
}

/// Absolute accuracy differences between each tier's references and their
/// radius-`r` neighbors, plus a tier of seeded random distinct pairs.
pub fn diff_distributions<O: AccuracyOracle + ?Sized>(
    oracle: &O,
    tiers: &BTreeMap<String, Vec<Architecture>>,
    r: usize,
    n_random_pairs: usize,
    seed: u64,
    dataset: &str,
) -> Result<BTreeMap<String, Vec<f64>>> {
    if n_random_pairs == 0 {
        return Err(Error::InvalidConfig("need at least one random pair".into()));
    }
    if tiers.contains_key(RANDOM_TIER) {
        return Err(Error::InvalidConfig(format!("tier name `{RANDOM_TIER}` is reserved")));
    }
    let mut out = BTreeMap::new();
    for (name, refs) in tiers {
        let diffs = neighbor_accuracies(oracle, refs, r, dataset)?
            .into_iter()
            .flatten()
            .map(|(a, b)| (a - b).abs())
            .collect();
        out.insert(name.clone(), diffs);
    }

    let entries = oracle.entries(dataset)?;
    let n = entries.len();
    let total_pairs = n.saturating_mul(n.saturating_sub(1)) / 2;
    if n_random_pairs > total_pairs {
        return Err(Error::InvalidConfig(format!(
            "{n_random_pairs} random pairs requested but only {total_pairs} exist"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::with_capacity(n_random_pairs);
    let mut random = Vec::with_capacity(n_random_pairs);
    while random.len() < n_random_pairs {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i == j || !seen.insert((i.min(j), i.max(j))) {
            continue;
        }
        random.push((entries[i].1 - entries[j].1).abs());
    }
    out.insert(RANDOM_TIER.to_string(), random);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch_space::parse_nb201_string;
    use crate::landscape::SyntheticLandscape;

    fn nb(s: &str) -> Architecture {
        Architecture::Nb201(parse_nb201_string(s).unwrap())
    }

    fn planted() -> SyntheticLandscape {
        SyntheticLandscape::planted(nb("0|1|3|2|4|0"), 95.0, 5.0, 0.0, 0).unwrap()
    }

    #[test]
    fn single_reference_radius_one() {
        let h = neighborhood_histogram(&planted(), &RefSelector::Archs(vec![nb("0|1|3|2|4|0")]), 1, "c", &BinSpec::default())
            .unwrap();
        assert_eq!(h.neighbor_sample.len(), 24);
        assert_eq!(h.space_sample.len(), 15_625);
        assert!((h.neighbors.area() - 1.0).abs() < 1e-9);
        assert!((h.space.area() - 1.0).abs() < 1e-9);
        assert_eq!(h.to_csv().lines().count(), 1 + 2 * 50);
    }

    #[test]
    fn one_bin_over_full_range() {
        let bins = BinSpec { count: 1, range: Some((0.0, 100.0)) };
        let h = neighborhood_histogram(&planted(), &RefSelector::Archs(vec![nb("0|0|0|0|0|0")]), 1, "c", &bins).unwrap();
        assert_eq!(h.neighbors.density, vec![0.01]);
        assert_eq!(h.space.density, vec![0.01]);
    }

    #[test]
    fn empty_band_is_an_error() {
        let r = neighborhood_histogram(&planted(), &RefSelector::Band { lo: 99.0, hi: 100.0 }, 1, "c", &BinSpec::default());
        assert!(matches!(r, Err(Error::EmptySample)));
        let band = refs_in_band(&planted(), "c", 90.0, 100.0).unwrap();
        assert_eq!(band.len(), 25);
    }

    #[test]
    fn linear_decay_diffs() {
        let mut tiers = BTreeMap::new();
        tiers.insert("top".to_string(), vec![nb("0|1|3|2|4|0")]);
        // every radius-1 neighbor of a distance-6 reference sits at distance 5 or 6
        tiers.insert("far".to_string(), vec![nb("1|0|0|0|0|1")]);
        let out = diff_distributions(&planted(), &tiers, 1, 100, 5, "c").unwrap();
        assert!(out["top"].iter().all(|&d| d == 5.0));
        assert_eq!(out["far"].iter().filter(|&&d| d == 5.0).count(), 6);
        assert_eq!(out["far"].iter().filter(|&&d| d == 0.0).count(), 18);
        assert_eq!(out[RANDOM_TIER].len(), 100);
        let again = diff_distributions(&planted(), &tiers, 1, 100, 5, "c").unwrap();
        assert_eq!(out, again);
    }

    #[test]
    fn constant_oracle_diffs_are_zero() {
        let flat = SyntheticLandscape::planted(nb("0|0|0|0|0|0"), 50.0, 0.0, 0.0, 0).unwrap();
        let mut tiers = BTreeMap::new();
        tiers.insert("a".to_string(), vec![nb("0|1|2|3|4|0"), nb("4|4|4|4|4|4")]);
        let out = diff_distributions(&flat, &tiers, 2, 50, 1, "c").unwrap();
        assert!(out.values().flatten().all(|&d| d == 0.0));
        assert_eq!(out["a"].len(), 480);
    }

    #[test]
    fn random_tier_validation() {
        let tiers = BTreeMap::new();
        assert!(diff_distributions(&planted(), &tiers, 1, 0, 1, "c").is_err());
        let mut bad = BTreeMap::new();
        bad.insert(RANDOM_TIER.to_string(), vec![]);
        assert!(diff_distributions(&planted(), &bad, 1, 1, 1, "c").is_err());
    }
}
