use rand::Rng;

use crate::distributions::SampleBatch;
use crate::error::{check_dim, invalid, Result};
use crate::mutators::{Move, MutationProposal, Neighborhood};
use crate::vector::SparseVector;

/// `(1/s) sum_i (w.x^i - f.x^i)^2`.
pub fn empirical_loss(w: &SparseVector, f: &SparseVector, batch: &SampleBatch) -> Result<f64> {
    check_dim(f.dim(), w.dim())?;
    check_dim(batch.dim(), w.dim())?;
    if batch.count() == 0 {
        return invalid("empty batch");
    }
    let diff = w.sub(f)?;
    let residual = predictions(&diff, batch);
    Ok(mean_sq(&residual))
}

fn predictions(w: &SparseVector, batch: &SampleBatch) -> Vec<f64> {
    let mut out = vec![0.0; batch.count()];
    for (j, c) in w.iter() {
        for (o, x) in out.iter_mut().zip(batch.column(j)) {
            *o += c * x;
        }
    }
    out
}

fn mean_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64
}

/// Empirical losses of an origin and of single-move neighbors on one batch.
///
/// The origin's residuals are computed once; each kernel move then costs one
/// pass over the batch instead of a full re-evaluation.
#[derive(Debug, Clone)]
pub struct LossEvaluator<'a> {
    batch: &'a SampleBatch,
    target: &'a SparseVector,
    origin_pred: Vec<f64>,
    target_pred: Vec<f64>,
    residual: Vec<f64>,
    origin_loss: f64,
}

impl<'a> LossEvaluator<'a> {
    pub fn new(
        batch: &'a SampleBatch,
        target: &'a SparseVector,
        origin: &SparseVector,
    ) -> Result<Self> {
        check_dim(batch.dim(), target.dim())?;
        check_dim(batch.dim(), origin.dim())?;
        if batch.count() == 0 {
            return invalid("empty batch");
        }
        let origin_pred = predictions(origin, batch);
        let target_pred = predictions(target, batch);
        let residual: Vec<f64> = origin_pred
            .iter()
            .zip(&target_pred)
            .map(|(a, b)| a - b)
            .collect();
        let origin_loss = mean_sq(&residual);
        Ok(Self {
            batch,
            target,
            origin_pred,
            target_pred,
            residual,
            origin_loss,
        })
    }

    pub fn origin_loss(&self) -> f64 {
        self.origin_loss
    }

    pub fn proposal_loss(&self, proposal: &MutationProposal) -> f64 {
        let s = self.batch.count() as f64;
        match proposal.kind {
            Move::Identical => self.origin_loss,
            Move::Scaling { gamma } => {
                self.origin_pred
                    .iter()
                    .zip(&self.target_pred)
                    .map(|(a, b)| {
                        let r = gamma * a - b;
                        r * r
                    })
                    .sum::<f64>()
                    / s
            }
            Move::Adjusting { index, old, new } => self.shifted(index, new - old),
            Move::Adding { index, value } => self.shifted(index, value),
            Move::Swapping {
                removed,
                removed_value,
                added,
                value,
            } => {
                let xr = self.batch.column(removed);
                let xa = self.batch.column(added);
                self.residual
                    .iter()
                    .zip(xr.iter().zip(xa))
                    .map(|(r, (a, b))| {
                        let v = r - removed_value * a + value * b;
                        v * v
                    })
                    .sum::<f64>()
                    / s
            }
            Move::Explicit => {
                empirical_loss(&proposal.result, self.target, self.batch).unwrap_or(f64::INFINITY)
            }
        }
    }

    fn shifted(&self, index: usize, delta: f64) -> f64 {
        let col = self.batch.column(index);
        self.residual
            .iter()
            .zip(col)
            .map(|(r, x)| {
                let v = r + delta * x;
                v * v
            })
            .sum::<f64>()
            / self.batch.count() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionEvent {
    Beneficial,
    Neutral,
    Best,
    /// No acceptable member: evolution halts with BOT.
    Failure,
}

impl SelectionEvent {
    pub fn as_str(&self) -> &'static str {
        match self {
            SelectionEvent::Beneficial => "beneficial",
            SelectionEvent::Neutral => "neutral",
            SelectionEvent::Best => "best",
            SelectionEvent::Failure => "failure",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionOutcome {
    /// `None` is BOT.
    pub survivor: Option<SparseVector>,
    pub survivor_index: Option<usize>,
    pub event: SelectionEvent,
    pub origin_loss: f64,
    /// Aligned with the neighborhood members.
    pub empirical_losses: Vec<f64>,
}

/// Indices eligible under beneficial/neutral selection and which tier they
/// come from. `Bene = {L <= L0 - t}`, `Neut = {|L - L0| < t}`.
pub fn bn_eligible(origin_loss: f64, losses: &[f64], t: f64) -> (Vec<usize>, SelectionEvent) {
    let bene: Vec<usize> = (0..losses.len())
        .filter(|&i| losses[i] <= origin_loss - t)
        .collect();
    if !bene.is_empty() {
        return (bene, SelectionEvent::Beneficial);
    }
    let neut: Vec<usize> = (0..losses.len())
        .filter(|&i| (losses[i] - origin_loss).abs() < t)
        .collect();
    if !neut.is_empty() {
        return (neut, SelectionEvent::Neutral);
    }
    (Vec::new(), SelectionEvent::Failure)
}

/// Indices eligible under optimization-based selection:
/// `Best = {L <= min L + t}`, empty when `min L > L0 + t`.
pub fn opt_eligible(origin_loss: f64, losses: &[f64], t: f64) -> (Vec<usize>, SelectionEvent) {
    let best = losses.iter().cloned().fold(f64::INFINITY, f64::min);
    if losses.is_empty() || best > origin_loss + t {
        return (Vec::new(), SelectionEvent::Failure);
    }
    let set = (0..losses.len())
        .filter(|&i| losses[i] <= best + t)
        .collect();
    (set, SelectionEvent::Best)
}

fn pick<R: Rng + ?Sized>(eligible: &[usize], rng: &mut R) -> Option<usize> {
    if eligible.is_empty() {
        None
    } else {
        Some(eligible[rng.random_range(0..eligible.len())])
    }
}

/// Uniform choice from `Bene`, else from `Neut`, else BOT.
pub fn bn_choose<R: Rng + ?Sized>(
    origin_loss: f64,
    losses: &[f64],
    t: f64,
    rng: &mut R,
) -> (Option<usize>, SelectionEvent) {
    let (set, event) = bn_eligible(origin_loss, losses, t);
    (pick(&set, rng), event)
}

/// Uniform choice from `Best`, or BOT.
pub fn opt_choose<R: Rng + ?Sized>(
    origin_loss: f64,
    losses: &[f64],
    t: f64,
    rng: &mut R,
) -> (Option<usize>, SelectionEvent) {
    let (set, event) = opt_eligible(origin_loss, losses, t);
    (pick(&set, rng), event)
}

fn select_with<R, F>(
    target: &SparseVector,
    neigh: &Neighborhood,
    batch: &SampleBatch,
    t: f64,
    rng: &mut R,
    choose: F,
) -> Result<SelectionOutcome>
where
    R: Rng + ?Sized,
    F: Fn(f64, &[f64], f64, &mut R) -> (Option<usize>, SelectionEvent),
{
    if !(t > 0.0) {
        return invalid("tolerance t must be positive");
    }
    let eval = LossEvaluator::new(batch, target, &neigh.origin)?;
    let losses: Vec<f64> = neigh
        .proposals
        .iter()
        .map(|p| eval.proposal_loss(p))
        .collect();
    let (index, event) = choose(eval.origin_loss(), &losses, t, rng);
    Ok(SelectionOutcome {
        survivor: index.map(|i| neigh.proposals[i].result.clone()),
        survivor_index: index,
        event,
        origin_loss: eval.origin_loss(),
        empirical_losses: losses,
    })
}

/// Beneficial/neutral selection over `neigh` on one batch.
pub fn bn_select<R: Rng + ?Sized>(
    target: &SparseVector,
    neigh: &Neighborhood,
    batch: &SampleBatch,
    t: f64,
    rng: &mut R,
) -> Result<SelectionOutcome> {
    select_with(target, neigh, batch, t, rng, bn_choose)
}

/// Optimization-based selection over `neigh` on one batch.
pub fn opt_select<R: Rng + ?Sized>(
    target: &SparseVector,
    neigh: &Neighborhood,
    batch: &SampleBatch,
    t: f64,
    rng: &mut R,
) -> Result<SelectionOutcome> {
    select_with(target, neigh, batch, t, rng, opt_choose)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{make_smooth, sample, BaseSpec};
    use crate::mutators::{bn_neighborhood, Caps};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empirical_loss_basics() {
        let batch = SampleBatch::from_rows(&[vec![1.0, 0.0, 0.0]], 0).unwrap();
        let f = SparseVector::basis(3, 0).unwrap();
        assert_eq!(empirical_loss(&f, &f, &batch).unwrap(), 0.0);
        assert_eq!(
            empirical_loss(&SparseVector::zeros(3), &f, &batch).unwrap(),
            1.0
        );
        assert!(empirical_loss(&SparseVector::zeros(4), &f, &batch).is_err());
    }

    #[test]
    fn evaluator_matches_direct_losses() {
        let h = make_smooth(BaseSpec::low_rank(30, 3, 0.5, 1).unwrap(), 0.5, 30).unwrap();
        let batch = sample(&h, 400, 2).unwrap();
        let f = SparseVector::from_pairs(30, [(2, 0.8), (9, -0.6), (17, 1.0)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut w = SparseVector::from_pairs(30, [(2, 0.3), (5, 1.1)]).unwrap();
        for cap in [2usize, 6] {
            let caps = Caps {
                sparsity: cap,
                bound: 3.0,
            };
            let nb = bn_neighborhood(&w, caps, 30, 300, &mut rng).unwrap();
            let eval = LossEvaluator::new(&batch, &f, &w).unwrap();
            assert_eq!(eval.origin_loss(), empirical_loss(&w, &f, &batch).unwrap());
            for p in &nb.proposals {
                let fast = eval.proposal_loss(p);
                let slow = empirical_loss(&p.result, &f, &batch).unwrap();
                assert!((fast - slow).abs() <= 1e-12 * (1.0 + slow), "{:?}", p.kind);
            }
            w = SparseVector::from_pairs(30, [(2, 0.3), (5, 1.1), (20, -0.4)]).unwrap();
        }
    }

    #[test]
    fn bn_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = 0.1;
        let (i, e) = bn_choose(1.0, &[1.0, 1.0, 1.0], t, &mut rng);
        assert_eq!(e, SelectionEvent::Neutral);
        assert!(i.is_some());
        let (i, e) = bn_choose(1.0, &[1.2, 0.8, 1.2], t, &mut rng);
        assert_eq!((i, e), (Some(1), SelectionEvent::Beneficial));
        let (i, e) = bn_choose(1.0, &[1.2, 1.2], t, &mut rng);
        assert_eq!((i, e), (None, SelectionEvent::Failure));
    }

    #[test]
    fn opt_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = 0.1;
        let (set, e) = opt_eligible(1.0, &[1.0, 1.0, 1.0], t);
        assert_eq!((set.len(), e), (3, SelectionEvent::Best));
        let (i, e) = opt_choose(1.0, &[0.9, 0.5, 0.75], t, &mut rng);
        assert_eq!((i, e), (Some(1), SelectionEvent::Best));
        let (i, e) = opt_choose(1.0, &[1.2, 1.3], t, &mut rng);
        assert_eq!((i, e), (None, SelectionEvent::Failure));
    }

    #[test]
    fn survivor_of_identical_neighborhood_is_origin() {
        let origin = SparseVector::from_pairs(3, [(0, 0.5)]).unwrap();
        let f = SparseVector::basis(3, 0).unwrap();
        let nb = Neighborhood::from_members(origin.clone(), vec![origin.clone(); 4]);
        let batch = SampleBatch::from_rows(&[vec![1.0, 0.5, 0.0], vec![0.2, 0.1, 1.0]], 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = bn_select(&f, &nb, &batch, 1e-3, &mut rng).unwrap();
        assert_eq!(out.event, SelectionEvent::Neutral);
        assert_eq!(out.survivor.unwrap(), origin);
        let out = opt_select(&f, &nb, &batch, 1e-3, &mut rng).unwrap();
        assert_eq!(out.event, SelectionEvent::Best);
        assert!(bn_select(&f, &nb, &batch, 0.0, &mut rng).is_err());
    }
}
