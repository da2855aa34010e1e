use super::{softmax_backward, AlphaParams, ArchObjective};
use crate::arch_space::{Architecture, SpaceSpec};
use crate::error::{Error, Result};
use crate::landscape::AccuracyOracle;

/// Largest space whose expected loss is summed exhaustively.
pub const MAX_RELAXATION_SPACE: u128 = 1_000_000;

/// Expected negative accuracy under a product of per-slot softmaxes:
/// `L(α) = −Σ_a ∏_s softmax(α_s)[a_s] · acc(a) / 100`.
#[derive(Debug, Clone)]
pub struct RelaxedLandscapeLoss {
    len: usize,
    num_ops: usize,
    dataset: String,
    /// Accuracies in percent, indexed in enumeration order.
    accs: Vec<f64>,
    archs: Vec<Architecture>,
}

impl RelaxedLandscapeLoss {
    pub fn new<O: AccuracyOracle + ?Sized>(oracle: &O, dataset: &str) -> Result<Self> {
        let space = oracle.space();
        let SpaceSpec::Nb201 { len, num_ops } = space else {
            return Err(Error::SpaceTooLarge(space.count()));
        };
        if space.count() > MAX_RELAXATION_SPACE {
            return Err(Error::SpaceTooLarge(space.count()));
        }
        let archs = space.enumerate()?;
        let accs = archs
            .iter()
            .map(|a| oracle.accuracy(a, dataset))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { len, num_ops, dataset: dataset.to_string(), accs, archs })
    }

    pub fn dataset(&self) -> &str {
        &self.dataset
    }

    pub fn slots(&self) -> usize {
        self.len
    }

    pub fn ops(&self) -> usize {
        self.num_ops
    }

    /// `(−max_acc/100, −min_acc/100)`.
    pub fn loss_bounds(&self) -> (f64, f64) {
        let max = self.accs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.accs.iter().copied().fold(f64::INFINITY, f64::min);
        (-max / 100.0, -min / 100.0)
    }

    fn index_of(&self, arch: &Architecture) -> Result<usize> {
        let a = arch.as_nb201().filter(|a| a.len() == self.len && a.num_ops() == self.num_ops);
        let a = a.ok_or(Error::SpaceMismatch)?;
        Ok(a.codes().iter().fold(0, |idx, &c| idx * self.num_ops + c))
    }

    fn check_shape(&self, alpha: &AlphaParams) -> Result<()> {
        if alpha.slots() != self.len || alpha.ops() != self.num_ops {
            return Err(Error::ShapeMismatch { expected: self.len * self.num_ops, got: alpha.as_slice().len() });
        }
        Ok(())
    }

    pub fn loss(&self, alpha: &AlphaParams) -> Result<f64> {
        self.check_shape(alpha)?;
        let p = alpha.probabilities()?;
        let k = self.num_ops;
        let mut loss = 0.0;
        for (arch, &acc) in self.archs.iter().zip(&self.accs) {
            let codes = arch.as_nb201().expect("relaxation spaces are NB201").codes();
            let w: f64 = codes.iter().enumerate().map(|(s, &c)| p[s * k + c]).product();
            loss -= w * acc / 100.0;
        }
        Ok(loss)
    }
}

impl ArchObjective for RelaxedLandscapeLoss {
    fn loss_and_grad(&self, alpha: &AlphaParams) -> Result<(f64, Vec<f64>)> {
        self.check_shape(alpha)?;
        let p = alpha.probabilities()?;
        let (l, k) = (self.len, self.num_ops);
        let mut loss = 0.0;
        let mut grad_p = vec![0.0; l * k];
        let mut prefix = vec![1.0; l + 1];
        let mut suffix = vec![1.0; l + 1];
        for (arch, &acc) in self.archs.iter().zip(&self.accs) {
            let codes = arch.as_nb201().expect("relaxation spaces are NB201").codes();
            let value = acc / 100.0;
            for s in 0..l {
                prefix[s + 1] = prefix[s] * p[s * k + codes[s]];
            }
            for s in (0..l).rev() {
                suffix[s] = suffix[s + 1] * p[s * k + codes[s]];
            }
            loss -= prefix[l] * value;
            for s in 0..l {
                grad_p[s * k + codes[s]] -= value * prefix[s] * suffix[s + 1];
            }
        }
        let mut grad = Vec::with_capacity(l * k);
        for s in 0..l {
            grad.extend(softmax_backward(&p[s * k..(s + 1) * k], &grad_p[s * k..(s + 1) * k]));
        }
        Ok((loss, grad))
    }
}

impl AccuracyOracle for RelaxedLandscapeLoss {
    fn space(&self) -> SpaceSpec {
        SpaceSpec::Nb201 { len: self.len, num_ops: self.num_ops }
    }

    fn accuracy(&self, arch: &Architecture, dataset: &str) -> Result<f64> {
        if dataset != self.dataset {
            return Err(Error::UnknownDataset(dataset.to_string()));
        }
        Ok(self.accs[self.index_of(arch)?])
    }

    fn entries(&self, dataset: &str) -> Result<Vec<(Architecture, f64)>> {
        if dataset != self.dataset {
            return Err(Error::UnknownDataset(dataset.to_string()));
        }
        Ok(self.archs.iter().cloned().zip(self.accs.iter().copied()).collect())
    }
}
