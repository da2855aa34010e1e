//! A four-node mixed-operation supernet on a synthetic regression task.
//!
//! Node 0 is the input; node `j` sums a softmax-weighted mixture of five
//! candidate operations applied to every earlier node. The readout is a
//! linear functional of node 3 and the loss is mean squared error.

use ndarray::{Array1, Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use super::search::derive_seed;
use super::{softmax_backward, AlphaParams, ArchObjective, GradCounter};
use crate::error::{Error, Result};

/// Candidate operations, in code order.
pub const SUPERNET_OPS: [&str; 5] = ["zero", "skip", "linear_1", "linear_2", "half_scale"];

const NODES: usize = 4;
const EDGES: usize = 6;
const OPS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupernetConfig {
    pub dim: usize,
    pub n_train: usize,
    pub n_val: usize,
    /// Discrete architecture (one code per edge) that generates the targets.
    pub teacher: Vec<usize>,
    /// Standard deviation of the initial student weights.
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for SupernetConfig {
    fn default() -> Self {
        Self { dim: 8, n_train: 256, n_val: 256, teacher: vec![2, 1, 3, 0, 2, 1], init_scale: 0.1, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupernetGrads {
    pub loss: f64,
    pub alpha_grad: Vec<f64>,
    /// Flattened like [`ToySupernet::weights_flat`].
    pub w_grad: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ToySupernet {
    dim: usize,
    x_train: Array2<f64>,
    y_train: Array1<f64>,
    x_val: Array2<f64>,
    y_val: Array1<f64>,
    /// `[linear_1, linear_2]` weight matrices per edge.
    linear: Vec<[Array2<f64>; 2]>,
    readout: Array1<f64>,
}

fn edge_index(src: usize, dst: usize) -> usize {
    dst * (dst - 1) / 2 + src
}

fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, std: f64) -> Array2<f64> {
    let d = Normal::new(0.0, std).expect("finite std");
    Array2::from_shape_fn((rows, cols), |_| d.sample(rng))
}

fn normal_vector(rng: &mut ChaCha8Rng, n: usize, std: f64) -> Array1<f64> {
    let d = Normal::new(0.0, std).expect("finite std");
    Array1::from_shape_fn(n, |_| d.sample(rng))
}

/// Forward pass of a discrete cell.
fn discrete_forward(codes: &[usize], linear: &[[Array2<f64>; 2]], readout: &Array1<f64>, x: &Array2<f64>) -> Array1<f64> {
    let mut nodes = vec![x.clone()];
    for dst in 1..NODES {
        let mut acc = Array2::zeros(x.raw_dim());
        for (src, node) in nodes.iter().enumerate() {
            let e = edge_index(src, dst);
            match codes[e] {
                0 => {}
                1 => acc += node,
                2 => acc += &node.dot(&linear[e][0].t()),
                3 => acc += &node.dot(&linear[e][1].t()),
                _ => acc.scaled_add(0.5, node),
            }
        }
        nodes.push(acc);
    }
    nodes[NODES - 1].dot(readout)
}

impl ToySupernet {
    pub fn new(cfg: &SupernetConfig) -> Result<Self> {
        if cfg.teacher.len() != EDGES || cfg.teacher.iter().any(|&c| c >= OPS) {
            return Err(Error::InvalidConfig(format!("teacher must be {EDGES} codes below {OPS}")));
        }
        if cfg.dim == 0 || cfg.n_train == 0 || cfg.n_val == 0 {
            return Err(Error::InvalidConfig("supernet needs a non-empty dataset".into()));
        }
        let d = cfg.dim;
        let scale = 1.0 / (d as f64).sqrt();
        let mut data_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 1));
        let mut teacher_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 2));
        let mut student_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 3));

        let x_train = normal_matrix(&mut data_rng, cfg.n_train, d, 1.0);
        let x_val = normal_matrix(&mut data_rng, cfg.n_val, d, 1.0);
        let teacher_linear: Vec<[Array2<f64>; 2]> = (0..EDGES)
            .map(|_| [normal_matrix(&mut teacher_rng, d, d, scale), normal_matrix(&mut teacher_rng, d, d, scale)])
            .collect();
        let teacher_readout = normal_vector(&mut teacher_rng, d, scale);
        let y_train = discrete_forward(&cfg.teacher, &teacher_linear, &teacher_readout, &x_train);
        let y_val = discrete_forward(&cfg.teacher, &teacher_linear, &teacher_readout, &x_val);

        let linear = (0..EDGES)
            .map(|_| {
                [
                    normal_matrix(&mut student_rng, d, d, cfg.init_scale),
                    normal_matrix(&mut student_rng, d, d, cfg.init_scale),
                ]
            })
            .collect();
        let readout = normal_vector(&mut student_rng, d, cfg.init_scale);
        Ok(Self { dim: d, x_train, y_train, x_val, y_val, linear, readout })
    }

    /// Replaces the regression data; rows of `x` are samples.
    pub fn with_data(mut self, split: Split, x: Array2<f64>, y: Array1<f64>) -> Result<Self> {
        if x.ncols() != self.dim || x.nrows() != y.len() || y.is_empty() {
            return Err(Error::ShapeMismatch { expected: self.dim, got: x.ncols() });
        }
        match split {
            Split::Train => (self.x_train, self.y_train) = (x, y),
            Split::Val => (self.x_val, self.y_val) = (x, y),
        }
        Ok(self)
    }

    pub fn slots(&self) -> usize {
        EDGES
    }

    pub fn ops(&self) -> usize {
        OPS
    }

    pub fn n_weights(&self) -> usize {
        EDGES * 2 * self.dim * self.dim + self.dim
    }

    pub fn weights_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_weights());
        for pair in &self.linear {
            for w in pair {
                out.extend(w.iter().copied());
            }
        }
        out.extend(self.readout.iter().copied());
        out
    }

    pub fn set_weights_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_weights() {
            return Err(Error::ShapeMismatch { expected: self.n_weights(), got: flat.len() });
        }
        let mut it = flat.iter().copied();
        for pair in &mut self.linear {
            for w in pair.iter_mut() {
                w.iter_mut().for_each(|v| *v = it.next().expect("length checked"));
            }
        }
        self.readout.iter_mut().for_each(|v| *v = it.next().expect("length checked"));
        Ok(())
    }

    fn data(&self, split: Split) -> (&Array2<f64>, &Array1<f64>) {
        match split {
            Split::Train => (&self.x_train, &self.y_train),
            Split::Val => (&self.x_val, &self.y_val),
        }
    }

    pub fn loss(&self, alpha: &AlphaParams, split: Split) -> Result<f64> {
        self.grads(alpha, split).map(|g| g.loss)
    }

    /// Loss and exact gradients by reverse-mode differentiation.
    pub fn grads(&self, alpha: &AlphaParams, split: Split) -> Result<SupernetGrads> {
        if alpha.slots() != EDGES || alpha.ops() != OPS {
            return Err(Error::ShapeMismatch { expected: EDGES * OPS, got: alpha.as_slice().len() });
        }
        let p = alpha.probabilities()?;
        let (x, y) = self.data(split);
        let n = x.nrows();

        let mut nodes: Vec<Array2<f64>> = vec![x.clone()];
        let mut lin_out: Vec<[Array2<f64>; 2]> = Vec::with_capacity(EDGES);
        let mut cache: Vec<Option<[Array2<f64>; 2]>> = vec![None; EDGES];
        for dst in 1..NODES {
            let mut acc = Array2::zeros((n, self.dim));
            for src in 0..dst {
                let e = edge_index(src, dst);
                let pe = &p[e * OPS..(e + 1) * OPS];
                let h = &nodes[src];
                let l1 = h.dot(&self.linear[e][0].t());
                let l2 = h.dot(&self.linear[e][1].t());
                acc.scaled_add(pe[1] + 0.5 * pe[4], h);
                acc.scaled_add(pe[2], &l1);
                acc.scaled_add(pe[3], &l2);
                cache[e] = Some([l1, l2]);
            }
            nodes.push(acc);
        }
        lin_out.extend(cache.into_iter().map(|c| c.expect("every edge visited")));

        let out = &nodes[NODES - 1];
        let resid = out.dot(&self.readout) - y;
        let loss = resid.mapv(|r| r * r).sum() / n as f64;
        let gy = resid * (2.0 / n as f64);

        let grad_readout = out.t().dot(&gy);
        let mut node_grads: Vec<Array2<f64>> = vec![Array2::zeros((n, self.dim)); NODES];
        node_grads[NODES - 1] = gy.insert_axis(Axis(1)) * &self.readout;

        let mut grad_p = vec![0.0; EDGES * OPS];
        let mut grad_linear: Vec<[Array2<f64>; 2]> =
            (0..EDGES).map(|_| [Array2::zeros((self.dim, self.dim)), Array2::zeros((self.dim, self.dim))]).collect();
        for dst in (1..NODES).rev() {
            let g = node_grads[dst].clone();
            for src in 0..dst {
                let e = edge_index(src, dst);
                let pe = &p[e * OPS..(e + 1) * OPS];
                let h = &nodes[src];
                let gh = (&g * h).sum();
                grad_p[e * OPS + 1] += gh;
                grad_p[e * OPS + 2] += (&g * &lin_out[e][0]).sum();
                grad_p[e * OPS + 3] += (&g * &lin_out[e][1]).sum();
                grad_p[e * OPS + 4] += 0.5 * gh;
                let gt_h = g.t().dot(h);
                grad_linear[e][0].scaled_add(pe[2], &gt_h);
                grad_linear[e][1].scaled_add(pe[3], &gt_h);
                if src > 0 {
                    let back = &mut node_grads[src];
                    back.scaled_add(pe[1] + 0.5 * pe[4], &g);
                    back.scaled_add(pe[2], &g.dot(&self.linear[e][0]));
                    back.scaled_add(pe[3], &g.dot(&self.linear[e][1]));
                }
            }
        }

        let mut alpha_grad = Vec::with_capacity(EDGES * OPS);
        for e in 0..EDGES {
            alpha_grad.extend(softmax_backward(&p[e * OPS..(e + 1) * OPS], &grad_p[e * OPS..(e + 1) * OPS]));
        }
        let mut w_grad = Vec::with_capacity(self.n_weights());
        for pair in &grad_linear {
            for w in pair {
                w_grad.extend(w.iter().copied());
            }
        }
        w_grad.extend(grad_readout.iter().copied());
        Ok(SupernetGrads { loss, alpha_grad, w_grad })
    }

    /// One gradient-descent step on the training loss.
    pub fn train_step(&mut self, alpha: &AlphaParams, eta_w: f64, counter: &mut GradCounter) -> Result<f64> {
        let g = self.grads(alpha, Split::Train)?;
        counter.w_grad_evals += 1;
        let w: Vec<f64> = self.weights_flat().iter().zip(&g.w_grad).map(|(w, dw)| w - eta_w * dw).collect();
        self.set_weights_flat(&w)?;
        Ok(g.loss)
    }
}

/// Loss and both gradients on `split`, counted as one evaluation of each.
pub fn supernet_grads(
    net: &ToySupernet,
    alpha: &AlphaParams,
    split: Split,
    counter: &mut GradCounter,
) -> Result<SupernetGrads> {
    let g = net.grads(alpha, split)?;
    counter.alpha_grad_evals += 1;
    counter.w_grad_evals += 1;
    Ok(g)
}

impl ArchObjective for ToySupernet {
    /// Validation loss and its gradient with respect to the logits.
    fn loss_and_grad(&self, alpha: &AlphaParams) -> Result<(f64, Vec<f64>)> {
        let g = self.grads(alpha, Split::Val)?;
        Ok((g.loss, g.alpha_grad))
    }
}
