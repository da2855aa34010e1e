//! Architecture encodings for cell-based search spaces.
//!
//! Two families are supported:
//!
//! * NB201-style cells: a fixed-length sequence of operation codes, one per
//!   edge of a complete DAG, listed with the destination node in the outer
//!   loop and the source node in the inner loop.
//! * DARTS-style cells: an `M x (M + 1)` matrix whose row `i` holds the
//!   operations feeding intermediate node `i`. Columns 0 and 1 are the two
//!   cell inputs, column `j >= 2` is intermediate node `j - 2`, and zero means
//!   "no edge". Every row has exactly two predecessors.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Ordered list of candidate operation labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperationSet {
    names: Vec<String>,
    zero_index: Option<usize>,
}

impl OperationSet {
    pub fn new<S: Into<String>>(names: Vec<S>, zero_index: Option<usize>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::InvalidOperationSet("no operations".into()));
        }
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::InvalidOperationSet(format!("empty label at {i}")));
            }
            if names[..i].contains(name) {
                return Err(Error::InvalidOperationSet(format!("duplicate label `{name}`")));
            }
        }
        if let Some(z) = zero_index {
            if z >= names.len() {
                return Err(Error::InvalidOperationSet(format!(
                    "zero index {z} out of range for {} operations",
                    names.len()
                )));
            }
        }
        Ok(Self { names, zero_index })
    }

    /// The five NAS-Bench-201 operations.
    pub fn nb201() -> Self {
        Self::new(
            vec!["none", "skip_connect", "nor_conv_1x1", "nor_conv_3x3", "avg_pool_3x3"],
            Some(0),
        )
        .expect("preset is valid")
    }

    /// The eight DARTS operations, `none` at index 0.
    pub fn darts() -> Self {
        Self::new(
            vec![
                "none",
                "max_pool_3x3",
                "avg_pool_3x3",
                "skip_connect",
                "sep_conv_3x3",
                "sep_conv_5x5",
                "dil_conv_3x3",
                "dil_conv_5x5",
            ],
            Some(0),
        )
        .expect("preset is valid")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn zero_index(&self) -> Option<usize> {
        self.zero_index
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == label)
            .ok_or_else(|| Error::UnknownOperation(label.to_string()))
    }

    pub fn label(&self, index: usize) -> Option<&str> {
        self.names.get(index).map(String::as_str)
    }
}

/// Number of edges of a complete DAG on `n_nodes` nodes.
pub fn nb201_len(n_nodes: usize) -> usize {
    n_nodes * n_nodes.saturating_sub(1) / 2
}

/// Edge `(src, dst)` for each position of an NB201 code sequence.
pub fn nb201_edge_order(n_nodes: usize) -> Vec<(usize, usize)> {
    let mut order = Vec::with_capacity(nb201_len(n_nodes));
    for dst in 1..n_nodes {
        for src in 0..dst {
            order.push((src, dst));
        }
    }
    order
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Nb201Arch {
    codes: Vec<usize>,
    num_ops: usize,
}

impl Nb201Arch {
    pub fn new(codes: Vec<usize>, num_ops: usize) -> Result<Self> {
        if codes.is_empty() {
            return Err(Error::InvalidArchitecture("empty code sequence".into()));
        }
        if let Some(&code) = codes.iter().find(|&&c| c >= num_ops) {
            return Err(Error::CodeOutOfRange { code, num_ops });
        }
        Ok(Self { codes, num_ops })
    }

    /// Parses the canonical pipe-joined form, e.g. `0|1|3|2|4|0`.
    pub fn parse(s: &str, len: usize, num_ops: usize) -> Result<Self> {
        let tokens: Vec<&str> = s.trim().split('|').collect();
        if tokens.len() != len {
            return Err(Error::Parse(format!(
                "expected {len} codes, found {} in `{s}`",
                tokens.len()
            )));
        }
        let codes = tokens
            .iter()
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Parse(format!("non-integer code `{t}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(codes, num_ops)
    }

    pub fn codes(&self) -> &[usize] {
        &self.codes
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn num_ops(&self) -> usize {
        self.num_ops
    }

    pub(crate) fn with_code(&self, position: usize, code: usize) -> Self {
        let mut codes = self.codes.clone();
        codes[position] = code;
        Self { codes, num_ops: self.num_ops }
    }

    /// Number of DAG nodes implied by the sequence length, if it is triangular.
    pub fn n_nodes(&self) -> Option<usize> {
        (1..=self.codes.len() + 1).find(|&n| nb201_len(n) == self.codes.len())
    }

    /// Edge map keyed by `(src, dst)`, labelled from `ops`.
    pub fn to_edges(&self, ops: &OperationSet) -> Result<BTreeMap<(usize, usize), String>> {
        let n = self
            .n_nodes()
            .ok_or_else(|| Error::InvalidArchitecture("length is not a complete DAG".into()))?;
        nb201_edge_order(n)
            .into_iter()
            .zip(&self.codes)
            .map(|(edge, &c)| {
                let label = ops.label(c).ok_or(Error::CodeOutOfRange { code: c, num_ops: ops.len() })?;
                Ok((edge, label.to_string()))
            })
            .collect()
    }

    /// Native benchmark genotype, e.g. `|nor_conv_3x3~0|+|skip_connect~0|none~1|+|...|`.
    pub fn to_genotype(&self, ops: &OperationSet) -> Result<String> {
        let edges = self.to_edges(ops)?;
        let n = self.n_nodes().unwrap_or(0);
        let mut groups = Vec::new();
        for dst in 1..n {
            let tokens: Vec<String> = (0..dst).map(|src| format!("{}~{src}", edges[&(src, dst)])).collect();
            groups.push(format!("|{}|", tokens.join("|")));
        }
        Ok(groups.join("+"))
    }
}

impl fmt::Display for Nb201Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.codes.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Encodes a DAG given as `(src, dst) -> op label` into an NB201 code sequence.
///
/// Missing edges take the operation set's zero operation.
pub fn encode_dag_nb201(
    edges: &BTreeMap<(usize, usize), String>,
    ops: &OperationSet,
    n_nodes: usize,
) -> Result<Nb201Arch> {
    for &(src, dst) in edges.keys() {
        if !(src < dst && dst < n_nodes) {
            return Err(Error::InvalidNode { src, dst, nodes: n_nodes });
        }
    }
    let mut codes = Vec::with_capacity(nb201_len(n_nodes));
    for edge in nb201_edge_order(n_nodes) {
        let code = match edges.get(&edge) {
            Some(label) => ops.index_of(label)?,
            None => ops.zero_index().ok_or_else(|| {
                Error::InvalidArchitecture(format!(
                    "edge {edge:?} missing and operation set has no zero operation"
                ))
            })?,
        };
        codes.push(code);
    }
    Nb201Arch::new(codes, ops.len())
}

/// Parses the standard six-edge, five-operation canonical string.
pub fn parse_nb201_string(s: &str) -> Result<Nb201Arch> {
    Nb201Arch::parse(s, 6, 5)
}

/// Converts a native benchmark genotype (`op~src` tokens, nodes separated by `+`).
pub fn parse_nb201_genotype(s: &str, ops: &OperationSet) -> Result<Nb201Arch> {
    let mut edges = BTreeMap::new();
    let groups: Vec<&str> = s.trim().split('+').collect();
    let n_nodes = groups.len() + 1;
    for (g, group) in groups.iter().enumerate() {
        let dst = g + 1;
        for token in group.split('|').map(str::trim).filter(|t| !t.is_empty()) {
            let (label, src) = token
                .split_once('~')
                .ok_or_else(|| Error::Parse(format!("genotype token `{token}` lacks `~`")))?;
            let src: usize = src
                .parse()
                .map_err(|_| Error::Parse(format!("bad source index in `{token}`")))?;
            if edges.insert((src, dst), label.to_string()).is_some() {
                return Err(Error::Parse(format!("edge ({src}, {dst}) listed twice")));
            }
        }
    }
    encode_dag_nb201(&edges, ops, n_nodes)
}

/// One row-level constraint violation in a DARTS cell matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellViolation {
    pub row: usize,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    PredecessorCount(usize),
    PredecessorAfterNode { column: usize },
    OpOutOfRange { column: usize, op: usize },
}

impl fmt::Display for CellViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ViolationKind::PredecessorCount(n) => write!(f, "row {}: predecessor count {n}", self.row),
            ViolationKind::PredecessorAfterNode { column } => {
                write!(f, "row {}: predecessor after node (column {column})", self.row)
            }
            ViolationKind::OpOutOfRange { column, op } => {
                write!(f, "row {}: op {op} out of range (column {column})", self.row)
            }
        }
    }
}

/// Checks every row constraint of an `M x (M + 1)` DARTS cell matrix.
///
/// The matrix shape is a precondition; rows of the wrong width are reported as
/// having their out-of-bounds entries after the node.
pub fn validate_darts_cell(matrix: &[Vec<usize>], num_ops: usize) -> Vec<CellViolation> {
    let mut report = Vec::new();
    for (row, entries) in matrix.iter().enumerate() {
        let mut count = 0;
        for (column, &op) in entries.iter().enumerate() {
            if op == 0 {
                continue;
            }
            count += 1;
            if op >= num_ops {
                report.push(CellViolation { row, kind: ViolationKind::OpOutOfRange { column, op } });
            }
            if column > row + 1 {
                report.push(CellViolation { row, kind: ViolationKind::PredecessorAfterNode { column } });
            }
        }
        if count != 2 {
            report.push(CellViolation { row, kind: ViolationKind::PredecessorCount(count) });
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DartsCell {
    matrix: Vec<Vec<usize>>,
    num_ops: usize,
}

impl DartsCell {
    pub fn new(matrix: Vec<Vec<usize>>, num_ops: usize) -> Result<Self> {
        let m = matrix.len();
        if m == 0 {
            return Err(Error::InvalidArchitecture("cell has no rows".into()));
        }
        if let Some(bad) = matrix.iter().find(|r| r.len() != m + 1) {
            return Err(Error::InvalidArchitecture(format!(
                "cell rows must have {} columns, found {}",
                m + 1,
                bad.len()
            )));
        }
        let report = validate_darts_cell(&matrix, num_ops);
        if !report.is_empty() {
            let msgs: Vec<String> = report.iter().map(ToString::to_string).collect();
            return Err(Error::InvalidArchitecture(msgs.join("; ")));
        }
        Ok(Self { matrix, num_ops })
    }

    /// Parses `M * (M + 1)` row-major digits.
    pub fn parse(s: &str, num_ops: usize) -> Result<Self> {
        let digits = s
            .trim()
            .chars()
            .map(|c| {
                c.to_digit(10)
                    .map(|d| d as usize)
                    .ok_or_else(|| Error::Parse(format!("non-digit `{c}` in cell string")))
            })
            .collect::<Result<Vec<_>>>()?;
        let m = (1..=digits.len())
            .find(|m| m * (m + 1) == digits.len())
            .ok_or_else(|| Error::Parse(format!("cell string of length {} is not M*(M+1)", digits.len())))?;
        Self::new(digits.chunks(m + 1).map(<[usize]>::to_vec).collect(), num_ops)
    }

    pub fn matrix(&self) -> &[Vec<usize>] {
        &self.matrix
    }

    pub fn rows(&self) -> usize {
        self.matrix.len()
    }

    pub fn num_ops(&self) -> usize {
        self.num_ops
    }

    pub fn get(&self, row: usize, column: usize) -> usize {
        self.matrix[row][column]
    }

    /// Columns with a non-zero entry in `row`, ascending.
    pub fn predecessors(&self, row: usize) -> Vec<usize> {
        self.matrix[row]
            .iter()
            .enumerate()
            .filter(|(_, &op)| op != 0)
            .map(|(c, _)| c)
            .collect()
    }

    pub(crate) fn with_entries(&self, row: usize, writes: &[(usize, usize)]) -> Self {
        let mut matrix = self.matrix.clone();
        for &(column, op) in writes {
            matrix[row][column] = op;
        }
        Self { matrix, num_ops: self.num_ops }
    }

    /// Uniformly random valid cell.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, rows: usize, num_ops: usize) -> Self {
        let matrix = (0..rows)
            .map(|i| {
                let mut row = vec![0; rows + 1];
                for c in sample(rng, i + 2, 2) {
                    row[c] = rng.random_range(1..num_ops);
                }
                row
            })
            .collect();
        Self { matrix, num_ops }
    }
}

impl fmt::Display for DartsCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.matrix {
            for op in row {
                write!(f, "{op}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CellId {
    Normal,
    Reduction,
}

impl CellId {
    pub const ALL: [CellId; 2] = [CellId::Normal, CellId::Reduction];
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DartsArch {
    pub normal: DartsCell,
    pub reduction: DartsCell,
}

impl DartsArch {
    pub fn new(normal: DartsCell, reduction: DartsCell) -> Result<Self> {
        if normal.rows() != reduction.rows() || normal.num_ops != reduction.num_ops {
            return Err(Error::InvalidArchitecture("normal and reduction cells differ in shape".into()));
        }
        Ok(Self { normal, reduction })
    }

    /// Parses `normal;reduction`.
    pub fn parse(s: &str, num_ops: usize) -> Result<Self> {
        let (n, r) = s
            .split_once(';')
            .ok_or_else(|| Error::Parse(format!("DARTS string `{s}` lacks `;`")))?;
        Self::new(DartsCell::parse(n, num_ops)?, DartsCell::parse(r, num_ops)?)
    }

    pub fn cell(&self, id: CellId) -> &DartsCell {
        match id {
            CellId::Normal => &self.normal,
            CellId::Reduction => &self.reduction,
        }
    }

    pub(crate) fn with_cell(&self, id: CellId, cell: DartsCell) -> Self {
        let mut out = self.clone();
        match id {
            CellId::Normal => out.normal = cell,
            CellId::Reduction => out.reduction = cell,
        }
        out
    }
}

impl fmt::Display for DartsArch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{};{}", self.normal, self.reduction)
    }
}

/// Any architecture from a supported space.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Architecture {
    Nb201(Nb201Arch),
    Darts(DartsArch),
}

impl Architecture {
    pub fn parse(s: &str, space: &SpaceSpec) -> Result<Self> {
        match *space {
            SpaceSpec::Nb201 { len, num_ops } => Ok(Self::Nb201(Nb201Arch::parse(s, len, num_ops)?)),
            SpaceSpec::Darts { nodes, num_ops } => {
                let arch = DartsArch::parse(s, num_ops)?;
                if arch.normal.rows() != nodes {
                    return Err(Error::Parse(format!(
                        "expected {nodes} intermediate nodes, found {}",
                        arch.normal.rows()
                    )));
                }
                Ok(Self::Darts(arch))
            }
        }
    }

    pub fn space(&self) -> SpaceSpec {
        match self {
            Self::Nb201(a) => SpaceSpec::Nb201 { len: a.len(), num_ops: a.num_ops },
            Self::Darts(a) => SpaceSpec::Darts { nodes: a.normal.rows(), num_ops: a.normal.num_ops },
        }
    }

    pub fn as_nb201(&self) -> Option<&Nb201Arch> {
        match self {
            Self::Nb201(a) => Some(a),
            Self::Darts(_) => None,
        }
    }

    pub fn as_darts(&self) -> Option<&DartsArch> {
        match self {
            Self::Darts(a) => Some(a),
            Self::Nb201(_) => None,
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Nb201(a) => a.fmt(f),
            Self::Darts(a) => a.fmt(f),
        }
    }
}

impl Serialize for Architecture {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl From<Nb201Arch> for Architecture {
    fn from(a: Nb201Arch) -> Self {
        Self::Nb201(a)
    }
}

impl From<DartsArch> for Architecture {
    fn from(a: DartsArch) -> Self {
        Self::Darts(a)
    }
}

/// Largest space [`SpaceSpec::enumerate`] will materialize.
pub const MAX_ENUMERATION: u128 = 1_000_000;

/// Search-space descriptor. `num_ops` always counts the zero operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceSpec {
    Nb201 { len: usize, num_ops: usize },
    Darts { nodes: usize, num_ops: usize },
}

impl SpaceSpec {
    pub const fn nb201() -> Self {
        Self::Nb201 { len: 6, num_ops: 5 }
    }

    pub const fn darts() -> Self {
        Self::Darts { nodes: 4, num_ops: 8 }
    }

    /// Exact number of architectures (no isomorphism deduplication).
    pub fn count(&self) -> u128 {
        match *self {
            Self::Nb201 { len, num_ops } => (num_ops as u128).pow(len as u32),
            Self::Darts { nodes, num_ops } => darts_cell_count(nodes, num_ops - 1).pow(2),
        }
    }

    /// Largest possible distance between two architectures of this space.
    pub fn max_distance(&self) -> usize {
        match *self {
            Self::Nb201 { len, .. } => len,
            // two predecessor slots per row, two cells
            Self::Darts { nodes, .. } => 4 * nodes,
        }
    }

    /// All architectures in canonical (lexicographic code) order.
    pub fn enumerate(&self) -> Result<Vec<Architecture>> {
        let total = self.count();
        let Self::Nb201 { len, num_ops } = *self else {
            return Err(Error::SpaceTooLarge(total));
        };
        if total > MAX_ENUMERATION {
            return Err(Error::SpaceTooLarge(total));
        }
        let mut out = Vec::with_capacity(total as usize);
        let mut codes = vec![0usize; len];
        loop {
            out.push(Architecture::Nb201(Nb201Arch { codes: codes.clone(), num_ops }));
            let mut pos = len;
            loop {
                if pos == 0 {
                    return Ok(out);
                }
                pos -= 1;
                codes[pos] += 1;
                if codes[pos] < num_ops {
                    break;
                }
                codes[pos] = 0;
            }
        }
    }

    /// Uniformly random architecture.
    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Architecture {
        match *self {
            Self::Nb201 { len, num_ops } => Architecture::Nb201(Nb201Arch {
                codes: (0..len).map(|_| rng.random_range(0..num_ops)).collect(),
                num_ops,
            }),
            Self::Darts { nodes, num_ops } => Architecture::Darts(DartsArch {
                normal: DartsCell::random(rng, nodes, num_ops),
                reduction: DartsCell::random(rng, nodes, num_ops),
            }),
        }
    }
}

/// Valid configurations of one DARTS cell: row `i` picks two of its `i + 2`
/// legal predecessors and a non-zero op for each.
pub fn darts_cell_count(nodes: usize, nonzero_ops: usize) -> u128 {
    let ops2 = (nonzero_ops as u128).pow(2);
    (0..nodes as u128)
        .map(|i| {
            let choices = i + 2;
            choices * (choices - 1) / 2 * ops2
        })
        .product()
}
