//! Flatness-biased architecture gradients.
//!
//! The update evaluates the validation gradient at a USAM-shifted point and
//! adds a central-difference curvature correction centred at the unshifted
//! logits:
//!
//! ```text
//! g0 = ∇L(α)
//! α~ = α + ρ g0
//! g1 = ∇L(α~)
//! α± = α ± ε g1
//! g  = g1 + ρ (∇L(α+) − ∇L(α−)) / (2ε)
//! ```
//!
//! Only the first-order variant (weight learning rate ξ = 0) is implemented.

mod relaxation;
mod search;
mod supernet;

pub use relaxation::{RelaxedLandscapeLoss, MAX_RELAXATION_SPACE};
pub use search::{
    a2m_step, darts_first_order_step, derive_seed, run_search, sweep, sweep_csv, Optimizer, SearchOptions,
    SearchOutcome, SearchState, StepRecord, SweepRow, Testbed,
};
pub use supernet::{supernet_grads, Split, SupernetConfig, SupernetGrads, ToySupernet, SUPERNET_OPS};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::arch_space::{Architecture, Nb201Arch};
use crate::error::{Error, Result};

/// Architecture logits, one vector of `ops` entries per decision slot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaParams {
    slots: usize,
    ops: usize,
    logits: Vec<f64>,
}

impl AlphaParams {
    pub fn new(slots: usize, ops: usize, logits: Vec<f64>) -> Result<Self> {
        if logits.len() != slots * ops {
            return Err(Error::ShapeMismatch { expected: slots * ops, got: logits.len() });
        }
        if let Some(x) = logits.iter().find(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("logit {x}")));
        }
        Ok(Self { slots, ops, logits })
    }

    pub fn zeros(slots: usize, ops: usize) -> Self {
        Self { slots, ops, logits: vec![0.0; slots * ops] }
    }

    /// Independent `N(0, scale²)` logits.
    pub fn random<R: Rng + ?Sized>(slots: usize, ops: usize, scale: f64, rng: &mut R) -> Self {
        let normal = Normal::new(0.0, scale).expect("finite non-negative scale");
        Self { slots, ops, logits: (0..slots * ops).map(|_| normal.sample(rng)).collect() }
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn ops(&self) -> usize {
        self.ops
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.logits
    }

    pub fn slot(&self, i: usize) -> &[f64] {
        &self.logits[i * self.ops..(i + 1) * self.ops]
    }

    /// Same shape, new logits.
    pub fn with_logits(&self, logits: Vec<f64>) -> Result<Self> {
        Self::new(self.slots, self.ops, logits)
    }

    /// Per-slot softmax probabilities, flattened like the logits.
    pub fn probabilities(&self) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.logits.len());
        for i in 0..self.slots {
            out.extend(softmax_mix(self.slot(i))?);
        }
        Ok(out)
    }
}

/// Numerically stable softmax.
pub fn softmax_mix(logits: &[f64]) -> Result<Vec<f64>> {
    if let Some(x) = logits.iter().find(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("logit {x}")));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// Back-propagates `dL/dp` through a softmax given its output `p`.
pub(crate) fn softmax_backward(p: &[f64], grad_p: &[f64]) -> Vec<f64> {
    let dot: f64 = p.iter().zip(grad_p).map(|(a, b)| a * b).sum();
    p.iter().zip(grad_p).map(|(pi, gi)| pi * (gi - dot)).collect()
}

/// Gradient-evaluation counts for the current optimizer step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct GradCounter {
    pub alpha_grad_evals: usize,
    pub w_grad_evals: usize,
}

impl GradCounter {
    pub fn reset(&mut self) {
        *self = Self::default();
    }

    pub fn add(&mut self, other: GradCounter) {
        self.alpha_grad_evals += other.alpha_grad_evals;
        self.w_grad_evals += other.w_grad_evals;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct A2MConfig {
    pub rho_alpha: f64,
    pub epsilon: f64,
    /// Weight learning rate of the unrolled inner step; must be zero.
    pub xi: f64,
    pub eta_alpha: f64,
    pub eta_w: f64,
}

impl Default for A2MConfig {
    fn default() -> Self {
        Self { rho_alpha: 0.0, epsilon: 1e-2, xi: 0.0, eta_alpha: 0.05, eta_w: 0.05 }
    }
}

impl A2MConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.rho_alpha >= 0.0 && self.rho_alpha.is_finite()) {
            return bad("rho_alpha must be finite and >= 0");
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon must be finite and > 0");
        }
        if self.xi != 0.0 {
            return bad("only the first-order update (xi = 0) is supported");
        }
        if !(self.eta_alpha.is_finite() && self.eta_w.is_finite()) {
            return bad("learning rates must be finite");
        }
        Ok(())
    }
}

/// A loss over architecture logits with an exact gradient.
pub trait ArchObjective {
    fn loss_and_grad(&self, alpha: &AlphaParams) -> Result<(f64, Vec<f64>)>;
}

impl<F> ArchObjective for F
where
    F: Fn(&AlphaParams) -> Result<(f64, Vec<f64>)>,
{
    fn loss_and_grad(&self, alpha: &AlphaParams) -> Result<(f64, Vec<f64>)> {
        self(alpha)
    }
}

/// Unnormalized ascent point `α + ρ g`.
pub fn usam_point(alpha: &AlphaParams, grad: &[f64], rho: f64) -> Result<AlphaParams> {
    if grad.len() != alpha.logits.len() {
        return Err(Error::ShapeMismatch { expected: alpha.logits.len(), got: grad.len() });
    }
    alpha.with_logits(alpha.logits.iter().zip(grad).map(|(a, g)| a + rho * g).collect())
}

fn stage_eval<O: ArchObjective + ?Sized>(
    objective: &O,
    alpha: &AlphaParams,
    stage: &str,
    counter: &mut GradCounter,
) -> Result<(f64, Vec<f64>)> {
    let (loss, grad) = objective.loss_and_grad(alpha)?;
    counter.alpha_grad_evals += 1;
    if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite(format!("{stage} gradient")));
    }
    Ok((loss, grad))
}

fn perturbed(alpha: &AlphaParams, dir: &[f64], step: f64, stage: &str) -> Result<AlphaParams> {
    usam_point(alpha, dir, step).map_err(|e| match e {
        Error::NonFinite(_) => Error::NonFinite(format!("{stage} point")),
        other => other,
    })
}

/// Result of one flatness-biased gradient evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct A2mGradient {
    /// Loss at the unperturbed logits.
    pub loss: f64,
    pub grad: Vec<f64>,
}

/// Evaluates the flatness-biased gradient with exactly four gradient calls.
pub fn a2m_grad<O: ArchObjective + ?Sized>(
    objective: &O,
    alpha: &AlphaParams,
    cfg: &A2MConfig,
    counter: &mut GradCounter,
) -> Result<A2mGradient> {
    cfg.validate()?;
    let (loss, g0) = stage_eval(objective, alpha, "base", counter)?;
    let shifted = perturbed(alpha, &g0, cfg.rho_alpha, "shifted")?;
    let (_, g1) = stage_eval(objective, &shifted, "shifted", counter)?;
    let plus = perturbed(alpha, &g1, cfg.epsilon, "plus")?;
    let minus = perturbed(alpha, &g1, -cfg.epsilon, "minus")?;
    let (_, g_plus) = stage_eval(objective, &plus, "plus", counter)?;
    let (_, g_minus) = stage_eval(objective, &minus, "minus", counter)?;
    let scale = cfg.rho_alpha / (2.0 * cfg.epsilon);
    let grad: Vec<f64> = g1
        .iter()
        .zip(g_plus.iter().zip(&g_minus))
        .map(|(g, (p, m))| g + scale * (p - m))
        .collect();
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("combined gradient".into()));
    }
    Ok(A2mGradient { loss, grad })
}

/// Per-slot argmax; ties go to the lowest operation index.
pub fn discretize(alpha: &AlphaParams) -> Architecture {
    let codes = (0..alpha.slots)
        .map(|i| {
            alpha
                .slot(i)
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (k, &z)| if z > best.1 { (k, z) } else { best })
                .0
        })
        .collect();
    Architecture::Nb201(Nb201Arch::new(codes, alpha.ops).expect("argmax is below ops"))
}
