//! Atomic modifications, distances, neighbor trees and shortest-path trees.
//!
//! Distance counts minimal valid state transitions, not matrix Hamming
//! distance: a DARTS connection adjustment rewrites two matrix entries but is
//! one move. For DARTS path trees the directed moves are all atomic moves that
//! lower the distance to the target by exactly one.

use std::collections::{BTreeSet, HashMap, HashSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::arch_space::{Architecture, CellId, DartsArch, DartsCell, Nb201Arch};
use crate::error::{Error, Result};

/// Node cap applied to tree and neighborhood enumeration unless overridden.
pub const DEFAULT_NODE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum AtomicMove {
    Nb201Set {
        position: usize,
        new_code: usize,
    },
    DartsOpChange {
        cell: CellId,
        row: usize,
        column: usize,
        new_op: usize,
    },
    DartsConnAdjust {
        cell: CellId,
        row: usize,
        removed_column: usize,
        added_column: usize,
        added_op: usize,
    },
}

/// An element of an architecture a move may touch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Locus {
    Position(usize),
    Entry { cell: CellId, row: usize, column: usize },
}

impl AtomicMove {
    /// Loci written by this move.
    pub fn loci(&self) -> Vec<Locus> {
        match *self {
            Self::Nb201Set { position, .. } => vec![Locus::Position(position)],
            Self::DartsOpChange { cell, row, column, .. } => vec![Locus::Entry { cell, row, column }],
            Self::DartsConnAdjust { cell, row, removed_column, added_column, .. } => vec![
                Locus::Entry { cell, row, column: removed_column },
                Locus::Entry { cell, row, column: added_column },
            ],
        }
    }

    /// The move that undoes `self` when applied to `apply(before, self)`.
    pub fn inverse(&self, before: &Architecture) -> Result<AtomicMove> {
        check_legal(before, self)?;
        Ok(match (*self, before) {
            (Self::Nb201Set { position, .. }, Architecture::Nb201(a)) => {
                Self::Nb201Set { position, new_code: a.codes()[position] }
            }
            (Self::DartsOpChange { cell, row, column, .. }, Architecture::Darts(a)) => {
                Self::DartsOpChange { cell, row, column, new_op: a.cell(cell).get(row, column) }
            }
            (Self::DartsConnAdjust { cell, row, removed_column, added_column, .. }, Architecture::Darts(a)) => {
                Self::DartsConnAdjust {
                    cell,
                    row,
                    removed_column: added_column,
                    added_column: removed_column,
                    added_op: a.cell(cell).get(row, removed_column),
                }
            }
            _ => unreachable!("legality check rejects space mismatches"),
        })
    }
}

fn cell_moves(id: CellId, cell: &DartsCell, out: &mut Vec<AtomicMove>) {
    let k = cell.num_ops();
    for row in 0..cell.rows() {
        let preds = cell.predecessors(row);
        for &column in &preds {
            let current = cell.get(row, column);
            for new_op in (1..k).filter(|&op| op != current) {
                out.push(AtomicMove::DartsOpChange { cell: id, row, column, new_op });
            }
            for added_column in (0..row + 2).filter(|c| !preds.contains(c)) {
                for added_op in 1..k {
                    out.push(AtomicMove::DartsConnAdjust {
                        cell: id,
                        row,
                        removed_column: column,
                        added_column,
                        added_op,
                    });
                }
            }
        }
    }
}

/// Every legal atomic move from `a`, in deterministic order.
pub fn atomic_moves(a: &Architecture) -> Vec<AtomicMove> {
    let mut out = Vec::new();
    match a {
        Architecture::Nb201(arch) => {
            for (position, &current) in arch.codes().iter().enumerate() {
                for new_code in (0..arch.num_ops()).filter(|&c| c != current) {
                    out.push(AtomicMove::Nb201Set { position, new_code });
                }
            }
        }
        Architecture::Darts(arch) => {
            for id in CellId::ALL {
                cell_moves(id, arch.cell(id), &mut out);
            }
        }
    }
    out
}

fn illegal(msg: impl Into<String>) -> Error {
    Error::IllegalMove(msg.into())
}

fn check_legal(a: &Architecture, m: &AtomicMove) -> Result<()> {
    match (a, *m) {
        (Architecture::Nb201(arch), AtomicMove::Nb201Set { position, new_code }) => {
            let current = *arch
                .codes()
                .get(position)
                .ok_or_else(|| illegal(format!("position {position} out of range")))?;
            if new_code >= arch.num_ops() {
                return Err(illegal(format!("code {new_code} out of range")));
            }
            if new_code == current {
                return Err(illegal(format!("position {position} already holds {new_code}")));
            }
            Ok(())
        }
        (Architecture::Darts(arch), AtomicMove::DartsOpChange { cell, row, column, new_op }) => {
            let c = arch.cell(cell);
            if row >= c.rows() || column > row + 1 {
                return Err(illegal(format!("entry ({row}, {column}) is not a legal predecessor slot")));
            }
            let current = c.get(row, column);
            if current == 0 {
                return Err(illegal(format!("no edge at ({row}, {column})")));
            }
            if new_op == 0 || new_op >= c.num_ops() || new_op == current {
                return Err(illegal(format!("op {new_op} is not a new non-zero operation")));
            }
            Ok(())
        }
        (
            Architecture::Darts(arch),
            AtomicMove::DartsConnAdjust { cell, row, removed_column, added_column, added_op },
        ) => {
            let c = arch.cell(cell);
            if row >= c.rows() {
                return Err(illegal(format!("row {row} out of range")));
            }
            if removed_column > c.rows() || c.get(row, removed_column) == 0 {
                return Err(illegal(format!("no edge to remove at ({row}, {removed_column})")));
            }
            if added_column > row + 1 {
                return Err(illegal(format!("column {added_column} comes after node {row}")));
            }
            if c.get(row, added_column) != 0 {
                return Err(illegal(format!("column {added_column} already feeds row {row}")));
            }
            if added_op == 0 || added_op >= c.num_ops() {
                return Err(illegal(format!("op {added_op} is not a non-zero operation")));
            }
            Ok(())
        }
        _ => Err(Error::SpaceMismatch),
    }
}

/// Applies a legal move; the result is always a valid architecture.
pub fn apply(a: &Architecture, m: &AtomicMove) -> Result<Architecture> {
    check_legal(a, m)?;
    Ok(match (a, *m) {
        (Architecture::Nb201(arch), AtomicMove::Nb201Set { position, new_code }) => {
            Architecture::Nb201(arch.with_code(position, new_code))
        }
        (Architecture::Darts(arch), AtomicMove::DartsOpChange { cell, row, column, new_op }) => {
            let updated = arch.cell(cell).with_entries(row, &[(column, new_op)]);
            Architecture::Darts(arch.with_cell(cell, updated))
        }
        (
            Architecture::Darts(arch),
            AtomicMove::DartsConnAdjust { cell, row, removed_column, added_column, added_op },
        ) => {
            let updated = arch
                .cell(cell)
                .with_entries(row, &[(removed_column, 0), (added_column, added_op)]);
            Architecture::Darts(arch.with_cell(cell, updated))
        }
        _ => unreachable!("checked above"),
    })
}

fn nb201_distance(a: &Nb201Arch, b: &Nb201Arch) -> usize {
    a.codes().iter().zip(b.codes()).filter(|(x, y)| x != y).count()
}

fn cell_distance(a: &DartsCell, b: &DartsCell) -> usize {
    (0..a.rows())
        .map(|row| {
            a.predecessors(row)
                .into_iter()
                .filter(|&c| {
                    let other = b.get(row, c);
                    other == 0 || other != a.get(row, c)
                })
                .count()
        })
        .sum()
}

fn darts_distance(a: &DartsArch, b: &DartsArch) -> usize {
    CellId::ALL.iter().map(|&id| cell_distance(a.cell(id), b.cell(id))).sum()
}

/// Minimal number of atomic moves between two architectures of one space.
pub fn distance(a: &Architecture, b: &Architecture) -> Result<usize> {
    if a.space() != b.space() {
        return Err(Error::SpaceMismatch);
    }
    Ok(match (a, b) {
        (Architecture::Nb201(x), Architecture::Nb201(y)) => nb201_distance(x, y),
        (Architecture::Darts(x), Architecture::Darts(y)) => darts_distance(x, y),
        _ => unreachable!("space equality implies same variant"),
    })
}

fn check_radius(a: &Architecture, r: usize) -> Result<()> {
    if r == 0 {
        return Err(Error::RadiusZero);
    }
    let max = a.space().max_distance();
    if r > max {
        return Err(Error::RadiusTooLarge { radius: r, max });
    }
    Ok(())
}

/// All architectures at distance exactly `r` from `a`, sorted.
pub fn neighbors_at_radius(a: &Architecture, r: usize) -> Result<Vec<Architecture>> {
    neighbors_at_radius_capped(a, r, DEFAULT_NODE_CAP)
}

/// Every code sequence differing from `a` in exactly `r` positions.
fn nb201_sphere(a: &Nb201Arch, r: usize, cap: usize) -> Result<Vec<Architecture>> {
    let (len, k) = (a.len(), a.num_ops());
    let size = (0..r).fold(1u128, |acc, i| acc * (len - i) as u128 / (i + 1) as u128) * ((k - 1) as u128).pow(r as u32);
    if size > cap as u128 {
        return Err(Error::ExplosionGuard { cap });
    }
    let mut out = Vec::with_capacity(size as usize);
    let mut positions: Vec<usize> = (0..r).collect();
    loop {
        // odometer over the k - 1 alternative codes at each chosen position
        let mut offsets = vec![1usize; r];
        loop {
            let mut codes = a.codes().to_vec();
            for (&p, &o) in positions.iter().zip(&offsets) {
                codes[p] = (codes[p] + o) % k;
            }
            out.push(Architecture::Nb201(Nb201Arch::new(codes, k).expect("codes stay below num_ops")));
            let Some(i) = (0..r).rev().find(|&i| offsets[i] < k - 1) else { break };
            offsets[i] += 1;
            offsets[i + 1..].iter_mut().for_each(|o| *o = 1);
        }
        let Some(i) = (0..r).rev().find(|&i| positions[i] < len - r + i) else { break };
        positions[i] += 1;
        for j in i + 1..r {
            positions[j] = positions[j - 1] + 1;
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Direct enumeration for NB201 (distance is Hamming); breadth-first layers
/// over the move graph for DARTS. `cap` bounds the number of architectures
/// held at once.
pub fn neighbors_at_radius_capped(a: &Architecture, r: usize, cap: usize) -> Result<Vec<Architecture>> {
    check_radius(a, r)?;
    if let Architecture::Nb201(arch) = a {
        return nb201_sphere(arch, r, cap);
    }
    let mut visited: HashSet<Architecture> = HashSet::from([a.clone()]);
    let mut frontier = vec![a.clone()];
    for _ in 0..r {
        let candidates: Vec<Architecture> = frontier
            .par_iter()
            .flat_map_iter(|x| atomic_moves(x).into_iter().map(move |m| apply(x, &m).expect("generated move is legal")))
            .collect();
        let mut next = BTreeSet::new();
        for c in candidates {
            if !visited.contains(&c) {
                next.insert(c);
            }
        }
        visited.extend(next.iter().cloned());
        if visited.len() > cap {
            return Err(Error::ExplosionGuard { cap });
        }
        frontier = next.into_iter().collect();
    }
    Ok(frontier)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNode {
    pub arch: Architecture,
    pub history: Vec<AtomicMove>,
}

impl TreeNode {
    pub fn modified_loci(&self) -> BTreeSet<Locus> {
        self.history.iter().flat_map(AtomicMove::loci).collect()
    }
}

/// Level-structured enumeration of non-reverting move sequences from a root.
///
/// A move may not touch a locus already written by an earlier move on the
/// same root path. Loci are NB201 positions or individual DARTS matrix
/// entries, so level `r` holds exactly the architectures at distance `r`.
#[derive(Debug, Clone)]
pub struct NeighborTree {
    pub root: Architecture,
    pub levels: Vec<Vec<TreeNode>>,
}

impl NeighborTree {
    pub fn raw_counts(&self) -> Vec<u128> {
        self.levels.iter().map(|l| l.len() as u128).collect()
    }

    /// Unique architectures at level `r`, sorted.
    pub fn unique_level(&self, r: usize) -> Vec<Architecture> {
        let set: BTreeSet<&Architecture> = self.levels[r].iter().map(|n| &n.arch).collect();
        set.into_iter().cloned().collect()
    }

    pub fn to_document(&self) -> TreeDocument {
        TreeDocument {
            root: self.root.to_string(),
            target: None,
            levels: (0..self.levels.len())
                .map(|r| self.unique_level(r).iter().map(ToString::to_string).collect())
                .collect(),
            raw_counts: self.raw_counts(),
        }
    }
}

pub fn build_neighbor_tree(a: &Architecture, max_r: usize) -> Result<NeighborTree> {
    build_neighbor_tree_capped(a, max_r, DEFAULT_NODE_CAP)
}

pub fn build_neighbor_tree_capped(a: &Architecture, max_r: usize, cap: usize) -> Result<NeighborTree> {
    if max_r > a.space().max_distance() {
        return Err(Error::RadiusTooLarge { radius: max_r, max: a.space().max_distance() });
    }
    let mut levels = vec![vec![TreeNode { arch: a.clone(), history: Vec::new() }]];
    let mut total = 1usize;
    for _ in 0..max_r {
        let frontier = levels.last().expect("at least the root level");
        let admissible: usize = frontier
            .par_iter()
            .map(|node| {
                let touched = node.modified_loci();
                atomic_moves(&node.arch)
                    .iter()
                    .filter(|m| m.loci().iter().all(|l| !touched.contains(l)))
                    .count()
            })
            .sum();
        if total + admissible > cap {
            return Err(Error::ExplosionGuard { cap });
        }
        let next: Vec<TreeNode> = frontier
            .par_iter()
            .flat_map_iter(|node| {
                let touched = node.modified_loci();
                atomic_moves(&node.arch)
                    .into_iter()
                    .filter(move |m| m.loci().iter().all(|l| !touched.contains(l)))
                    .map(move |m| {
                        let mut history = node.history.clone();
                        history.push(m);
                        TreeNode { arch: apply(&node.arch, &m).expect("generated move is legal"), history }
                    })
            })
            .collect();
        total += next.len();
        levels.push(next);
    }
    Ok(NeighborTree { root: a.clone(), levels })
}

/// All shortest move sequences between two architectures, duplicates
/// collapsed per level.
#[derive(Debug, Clone)]
pub struct PathTree {
    pub source: Architecture,
    pub target: Architecture,
    /// Unique architectures per level, sorted; level 0 is the source.
    pub levels: Vec<Vec<Architecture>>,
    /// Number of distinct shortest move sequences reaching each level.
    pub raw_counts: Vec<u128>,
}

impl PathTree {
    pub fn distance(&self) -> usize {
        self.levels.len() - 1
    }

    /// Unique architectures strictly between the endpoints.
    pub fn intermediates(&self) -> impl Iterator<Item = &Architecture> {
        let d = self.distance();
        self.levels[1..d].iter().flatten()
    }

    pub fn to_document(&self) -> TreeDocument {
        TreeDocument {
            root: self.source.to_string(),
            target: Some(self.target.to_string()),
            levels: self
                .levels
                .iter()
                .map(|l| l.iter().map(ToString::to_string).collect())
                .collect(),
            raw_counts: self.raw_counts.clone(),
        }
    }
}

/// Moves from `x` that bring it one step closer to `target`.
pub fn directed_moves(x: &Architecture, target: &Architecture) -> Result<Vec<AtomicMove>> {
    match (x, target) {
        (Architecture::Nb201(a), Architecture::Nb201(b)) => {
            if a.space_matches(b) {
                Ok(a.codes()
                    .iter()
                    .zip(b.codes())
                    .enumerate()
                    .filter(|(_, (p, q))| p != q)
                    .map(|(position, (_, &new_code))| AtomicMove::Nb201Set { position, new_code })
                    .collect())
            } else {
                Err(Error::SpaceMismatch)
            }
        }
        _ => {
            let d = distance(x, target)?;
            let mut out = Vec::new();
            for m in atomic_moves(x) {
                let y = apply(x, &m)?;
                if distance(&y, target)? + 1 == d {
                    out.push(m);
                }
            }
            Ok(out)
        }
    }
}

impl Nb201Arch {
    fn space_matches(&self, other: &Nb201Arch) -> bool {
        self.len() == other.len() && self.num_ops() == other.num_ops()
    }
}

pub fn build_path_tree(a: &Architecture, b: &Architecture) -> Result<PathTree> {
    build_path_tree_capped(a, b, DEFAULT_NODE_CAP)
}

pub fn build_path_tree_capped(a: &Architecture, b: &Architecture, cap: usize) -> Result<PathTree> {
    let d = distance(a, b)?;
    if d == 0 {
        return Err(Error::InvalidConfig("path tree endpoints are identical".into()));
    }
    let mut levels = vec![vec![a.clone()]];
    let mut counts: Vec<u128> = vec![1];
    let mut raw_counts = vec![1u128];
    let mut total = 1usize;
    for _ in 0..d {
        let frontier = levels.last().expect("non-empty");
        let expanded: Vec<Vec<Architecture>> = frontier
            .par_iter()
            .map(|x| {
                directed_moves(x, b)?
                    .iter()
                    .map(|m| apply(x, m))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let mut next: HashMap<Architecture, u128> = HashMap::new();
        for (children, &paths) in expanded.into_iter().zip(&counts) {
            for child in children {
                *next.entry(child).or_insert(0) += paths;
            }
        }
        let mut entries: Vec<(Architecture, u128)> = next.into_iter().collect();
        entries.sort_by(|x, y| x.0.cmp(&y.0));
        total += entries.len();
        if total > cap {
            return Err(Error::ExplosionGuard { cap });
        }
        raw_counts.push(entries.iter().map(|e| e.1).sum());
        counts = entries.iter().map(|e| e.1).collect();
        levels.push(entries.into_iter().map(|e| e.0).collect());
    }
    Ok(PathTree { source: a.clone(), target: b.clone(), levels, raw_counts })
}

/// JSON form shared by neighbor and path trees.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeDocument {
    pub root: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    pub levels: Vec<Vec<String>>,
    pub raw_counts: Vec<u128>,
}
