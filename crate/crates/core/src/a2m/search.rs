//! Alternating weight/architecture search loops and seeded sweeps.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{a2m_grad, discretize, AlphaParams, A2MConfig, ArchObjective, GradCounter, RelaxedLandscapeLoss, ToySupernet};
use crate::arch_space::Architecture;
use crate::error::{Error, Result};
use crate::geometry::neighbors_at_radius;
use crate::landscape::{accuracy_path, AccuracyOracle};

/// Radius at which the final architecture's barrier partner is chosen.
const BARRIER_RADIUS: usize = 3;

/// Independent 64-bit sub-seed for `stream` derived from a job seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.next_u64()
}

/// Objective an architecture search runs against.
#[derive(Debug, Clone)]
pub enum Testbed {
    /// Exact softmax relaxation of a tabulated landscape; has no weights.
    Relaxation(Box<RelaxedLandscapeLoss>),
    /// Mixed-operation supernet; weights train on the training split.
    Supernet(Box<ToySupernet>),
}

impl Testbed {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Relaxation(_) => "relaxation",
            Self::Supernet(_) => "supernet",
        }
    }

    pub fn slots(&self) -> usize {
        match self {
            Self::Relaxation(r) => r.slots(),
            Self::Supernet(s) => s.slots(),
        }
    }

    pub fn ops(&self) -> usize {
        match self {
            Self::Relaxation(r) => r.ops(),
            Self::Supernet(s) => s.ops(),
        }
    }

    /// One descent step on the training weights; a no-op for the relaxation.
    pub fn weight_step(&mut self, alpha: &AlphaParams, eta_w: f64, counter: &mut GradCounter) -> Result<()> {
        match self {
            Self::Relaxation(_) => Ok(()),
            Self::Supernet(s) => s.train_step(alpha, eta_w, counter).map(|_| ()),
        }
    }
}

impl ArchObjective for Testbed {
    fn loss_and_grad(&self, alpha: &AlphaParams) -> Result<(f64, Vec<f64>)> {
        match self {
            Self::Relaxation(r) => r.loss_and_grad(alpha),
            Self::Supernet(s) => s.loss_and_grad(alpha),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchState {
    pub testbed: Testbed,
    pub alpha: AlphaParams,
    /// Running totals over all completed steps.
    pub totals: GradCounter,
    pub step: usize,
}

impl SearchState {
    pub fn new(testbed: Testbed, alpha: AlphaParams) -> Result<Self> {
        if alpha.slots() != testbed.slots() || alpha.ops() != testbed.ops() {
            return Err(Error::ShapeMismatch { expected: testbed.slots() * testbed.ops(), got: alpha.as_slice().len() });
        }
        Ok(Self { testbed, alpha, totals: GradCounter::default(), step: 0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    /// Validation loss at the logits the step started from.
    pub loss: f64,
    pub alpha_grad_evals: usize,
    pub w_grad_evals: usize,
}

fn descend(state: &mut SearchState, loss: f64, grad: &[f64], eta: f64, counter: GradCounter) -> Result<StepRecord> {
    let logits = state.alpha.as_slice().iter().zip(grad).map(|(a, g)| a - eta * g).collect();
    state.alpha = state.alpha.with_logits(logits)?;
    state.step += 1;
    state.totals.add(counter);
    Ok(StepRecord {
        step: state.step,
        loss,
        alpha_grad_evals: counter.alpha_grad_evals,
        w_grad_evals: counter.w_grad_evals,
    })
}

/// Weight step on the training loss, then a plain gradient step on α.
pub fn darts_first_order_step(state: &mut SearchState, cfg: &A2MConfig) -> Result<StepRecord> {
    cfg.validate()?;
    let mut counter = GradCounter::default();
    state.testbed.weight_step(&state.alpha, cfg.eta_w, &mut counter)?;
    let (loss, grad) = state.testbed.loss_and_grad(&state.alpha)?;
    counter.alpha_grad_evals += 1;
    if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("base gradient".into()));
    }
    descend(state, loss, &grad, cfg.eta_alpha, counter)
}

/// Same weight step, with α following the flatness-biased gradient.
pub fn a2m_step(state: &mut SearchState, cfg: &A2MConfig) -> Result<StepRecord> {
    cfg.validate()?;
    let mut counter = GradCounter::default();
    state.testbed.weight_step(&state.alpha, cfg.eta_w, &mut counter)?;
    let g = a2m_grad(&state.testbed, &state.alpha, cfg, &mut counter)?;
    descend(state, g.loss, &g.grad, cfg.eta_alpha, counter)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Darts,
    A2m,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchOptions {
    pub optimizer: Optimizer,
    pub a2m: A2MConfig,
    pub steps: usize,
    pub seed: u64,
    /// Standard deviation of the initial logits.
    pub init_scale: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { optimizer: Optimizer::A2m, a2m: A2MConfig::default(), steps: 100, seed: 0, init_scale: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchOutcome {
    pub config: SearchOptions,
    pub testbed: &'static str,
    pub seed: u64,
    pub trajectory: Vec<StepRecord>,
    pub final_arch: Architecture,
    /// Present when the testbed has tabulated accuracies.
    pub final_acc: Option<f64>,
    pub barrier_partner: Option<Architecture>,
    pub final_barrier: Option<f64>,
    pub totals: GradCounter,
}

impl SearchOutcome {
    /// `step,loss` rows. Costs are left out so that optimizers with equal
    /// iterates produce equal files.
    pub fn trajectory_csv(&self) -> String {
        let mut out = String::from("step,loss\n");
        for r in &self.trajectory {
            out.push_str(&format!("{},{}\n", r.step, r.loss));
        }
        out
    }
}

/// The radius-3 neighbor with accuracy nearest to `a`'s; ties go to the
/// first in sorted order.
fn barrier_partner<O: AccuracyOracle + ?Sized>(oracle: &O, a: &Architecture, dataset: &str) -> Result<Architecture> {
    let radius = BARRIER_RADIUS.min(a.space().max_distance());
    let acc = oracle.accuracy(a, dataset)?;
    let mut best: Option<(f64, Architecture)> = None;
    for n in neighbors_at_radius(a, radius)? {
        let gap = (oracle.accuracy(&n, dataset)? - acc).abs();
        if best.as_ref().is_none_or(|(g, _)| gap < *g) {
            best = Some((gap, n));
        }
    }
    best.map(|(_, n)| n).ok_or(Error::EmptySample)
}

pub fn run_search(testbed: Testbed, opts: &SearchOptions) -> Result<SearchOutcome> {
    if opts.steps == 0 {
        return Err(Error::InvalidConfig("steps must be at least 1".into()));
    }
    if !(opts.init_scale >= 0.0 && opts.init_scale.is_finite()) {
        return Err(Error::InvalidConfig("init scale must be finite and >= 0".into()));
    }
    opts.a2m.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, 0));
    let alpha = AlphaParams::random(testbed.slots(), testbed.ops(), opts.init_scale, &mut rng);
    let name = testbed.name();
    let mut state = SearchState::new(testbed, alpha)?;
    let mut trajectory = Vec::with_capacity(opts.steps);
    for _ in 0..opts.steps {
        let record = match opts.optimizer {
            Optimizer::Darts => darts_first_order_step(&mut state, &opts.a2m)?,
            Optimizer::A2m => a2m_step(&mut state, &opts.a2m)?,
        };
        trajectory.push(record);
    }
    let final_arch = discretize(&state.alpha);
    let (final_acc, barrier_partner, final_barrier) = match &state.testbed {
        Testbed::Relaxation(rl) => {
            let acc = rl.accuracy(&final_arch, rl.dataset())?;
            let partner = barrier_partner(rl.as_ref(), &final_arch, rl.dataset())?;
            let report = accuracy_path(rl.as_ref(), &final_arch, &partner, rl.dataset())?;
            (Some(acc), Some(partner), Some(report.barrier))
        }
        Testbed::Supernet(_) => (None, None, None),
    };
    Ok(SearchOutcome {
        config: *opts,
        testbed: name,
        seed: opts.seed,
        trajectory,
        final_arch,
        final_acc,
        barrier_partner,
        final_barrier,
        totals: state.totals,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub rho: f64,
    pub seed: u64,
    pub final_arch: Architecture,
    pub final_acc: Option<f64>,
    pub barrier: Option<f64>,
}

/// Runs every `(rho, seed)` cell with the flatness-biased optimizer. Cells
/// run in parallel; rows come back in `rhos`-major, `seeds`-minor order.
pub fn sweep(testbed: &Testbed, base: &SearchOptions, rhos: &[f64], seeds: &[u64]) -> Result<Vec<SweepRow>> {
    if rhos.is_empty() || seeds.is_empty() {
        return Err(Error::InvalidConfig("sweep needs at least one rho and one seed".into()));
    }
    let cells: Vec<(f64, u64)> = rhos.iter().flat_map(|&r| seeds.iter().map(move |&s| (r, s))).collect();
    cells
        .par_iter()
        .map(|&(rho, seed)| {
            let opts = SearchOptions {
                optimizer: Optimizer::A2m,
                a2m: A2MConfig { rho_alpha: rho, ..base.a2m },
                seed,
                ..*base
            };
            let out = run_search(testbed.clone(), &opts)?;
            Ok(SweepRow { rho, seed, final_arch: out.final_arch, final_acc: out.final_acc, barrier: out.final_barrier })
        })
        .collect()
}

/// `rho,seed,final_arch,final_acc,barrier`; missing values are empty fields.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out = String::from("rho,seed,final_arch,final_acc,barrier\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{},{}\n", r.rho, r.seed, r.final_arch, opt(r.final_acc), opt(r.barrier)));
    }
    out
}
