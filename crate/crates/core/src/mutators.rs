//! Randomized mutation kernels.
//!
//! [`bn_mutate_one`] is the four-move kernel used with beneficial/neutral
//! selection (scaling, adjusting, and swapping or adding, one third each).
//! [`opt_neighborhood`] is the gated kernel used with optimization-based
//! selection: one coin decides whether the whole neighborhood adds a variable
//! or only rescales/adjusts existing ones.

use rand::Rng;

use crate::error::{check_dim, invalid, Result};
use crate::vector::SparseVector;

/// Representation class limits: at most `sparsity` nonzeros, all in `[-bound, bound]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Caps {
    pub sparsity: usize,
    pub bound: f64,
}

impl Caps {
    pub fn admits(&self, w: &SparseVector) -> bool {
        w.sparsity() <= self.sparsity && w.max_abs() <= self.bound
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Move {
    Identical,
    Scaling {
        gamma: f64,
    },
    Adjusting {
        index: usize,
        old: f64,
        new: f64,
    },
    Swapping {
        removed: usize,
        removed_value: f64,
        added: usize,
        value: f64,
    },
    Adding {
        index: usize,
        value: f64,
    },
    /// A member supplied directly rather than drawn by a kernel.
    Explicit,
}

impl Move {
    pub fn is_adding(&self) -> bool {
        matches!(self, Move::Adding { .. } | Move::Swapping { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MutationProposal {
    pub result: SparseVector,
    pub kind: Move,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeighborhoodKind {
    Mixed,
    Adding,
    NonAdding,
}

/// The multiset `Neigh(w)` with the move that produced each member.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighborhood {
    pub origin: SparseVector,
    pub proposals: Vec<MutationProposal>,
    pub kind: NeighborhoodKind,
}

impl Neighborhood {
    /// Wraps explicit members. Their moves are unknown, so they are evaluated
    /// from scratch during selection.
    pub fn from_members(origin: SparseVector, members: Vec<SparseVector>) -> Self {
        let proposals = members
            .into_iter()
            .map(|result| {
                let kind = if result == origin {
                    Move::Identical
                } else {
                    Move::Explicit
                };
                MutationProposal { result, kind }
            })
            .collect();
        Self {
            origin,
            proposals,
            kind: NeighborhoodKind::Mixed,
        }
    }

    pub fn len(&self) -> usize {
        self.proposals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.proposals.is_empty()
    }

    pub fn members(&self) -> impl Iterator<Item = &SparseVector> {
        self.proposals.iter().map(|p| &p.result)
    }
}

fn check_class(w: &SparseVector, caps: Caps, n: usize) -> Result<()> {
    check_dim(n, w.dim())?;
    if !(caps.bound > 0.0) {
        return invalid("coefficient bound must be positive");
    }
    if !caps.admits(w) {
        return invalid(format!(
            "representation outside class: sparsity {} (cap {}), max |w_i| {} (bound {})",
            w.sparsity(),
            caps.sparsity,
            w.max_abs(),
            caps.bound
        ));
    }
    Ok(())
}

/// Uniform index outside the support, or `None` when the support is all of `[n]`.
fn index_outside<R: Rng + ?Sized>(w: &SparseVector, rng: &mut R) -> Option<usize> {
    let n = w.dim();
    let used = w.sparsity();
    if used >= n {
        return None;
    }
    if 2 * used <= n {
        loop {
            let i = rng.random_range(0..n);
            if !w.contains(i) {
                return Some(i);
            }
        }
    }
    let free: Vec<usize> = (0..n).filter(|i| !w.contains(*i)).collect();
    Some(free[rng.random_range(0..free.len())])
}

fn index_inside<R: Rng + ?Sized>(w: &SparseVector, rng: &mut R) -> Option<usize> {
    if w.is_zero() {
        return None;
    }
    let pick = rng.random_range(0..w.sparsity());
    w.iter().nth(pick).map(|(i, _)| i)
}

fn coefficient<R: Rng + ?Sized>(bound: f64, rng: &mut R) -> f64 {
    rng.random_range(-bound..=bound)
}

fn scaling<R: Rng + ?Sized>(w: &SparseVector, rng: &mut R) -> MutationProposal {
    if w.is_zero() {
        return identical(w);
    }
    let gamma: f64 = rng.random_range(-1.0..=1.0);
    MutationProposal {
        result: w.scaled(gamma),
        kind: Move::Scaling { gamma },
    }
}

fn adjusting<R: Rng + ?Sized>(
    w: &SparseVector,
    bound: f64,
    rng: &mut R,
) -> Result<MutationProposal> {
    let Some(index) = index_inside(w, rng) else {
        return Ok(identical(w));
    };
    let old = w.get(index);
    let new = coefficient(bound, rng);
    let mut result = w.clone();
    result.set(index, new)?;
    Ok(MutationProposal {
        result,
        kind: Move::Adjusting { index, old, new },
    })
}

fn adding<R: Rng + ?Sized>(w: &SparseVector, bound: f64, rng: &mut R) -> Result<MutationProposal> {
    let Some(index) = index_outside(w, rng) else {
        return Ok(identical(w));
    };
    let value = coefficient(bound, rng);
    let mut result = w.clone();
    result.set(index, value)?;
    Ok(MutationProposal {
        result,
        kind: Move::Adding { index, value },
    })
}

fn swapping<R: Rng + ?Sized>(
    w: &SparseVector,
    bound: f64,
    rng: &mut R,
) -> Result<MutationProposal> {
    let Some(removed) = index_inside(w, rng) else {
        return Ok(identical(w));
    };
    let Some(added) = index_outside(w, rng) else {
        return Ok(identical(w));
    };
    let removed_value = w.get(removed);
    let value = coefficient(bound, rng);
    let mut result = w.clone();
    result.set(removed, 0.0)?;
    result.set(added, value)?;
    Ok(MutationProposal {
        result,
        kind: Move::Swapping {
            removed,
            removed_value,
            added,
            value,
        },
    })
}

fn identical(w: &SparseVector) -> MutationProposal {
    MutationProposal {
        result: w.clone(),
        kind: Move::Identical,
    }
}

fn assert_closed(p: &MutationProposal, caps: Caps) {
    assert!(
        caps.admits(&p.result),
        "mutation left the representation class: {:?}",
        p.kind
    );
}

/// One draw of the four-move kernel.
///
/// With an empty support the scaling and adjusting moves return `w`
/// unchanged, so the kernel is total.
pub fn bn_mutate_one<R: Rng + ?Sized>(
    w: &SparseVector,
    caps: Caps,
    n: usize,
    rng: &mut R,
) -> Result<MutationProposal> {
    check_class(w, caps, n)?;
    let proposal = bn_draw(w, caps, rng)?;
    assert_closed(&proposal, caps);
    Ok(proposal)
}

fn bn_draw<R: Rng + ?Sized>(w: &SparseVector, caps: Caps, rng: &mut R) -> Result<MutationProposal> {
    match rng.random_range(0..3u32) {
        0 => Ok(scaling(w, rng)),
        1 => adjusting(w, caps.bound, rng),
        _ => {
            if w.sparsity() >= caps.sparsity {
                swapping(w, caps.bound, rng)
            } else {
                adding(w, caps.bound, rng)
            }
        }
    }
}

/// `m` independent draws of [`bn_mutate_one`].
pub fn bn_neighborhood<R: Rng + ?Sized>(
    w: &SparseVector,
    caps: Caps,
    n: usize,
    m: usize,
    rng: &mut R,
) -> Result<Neighborhood> {
    if m < 1 {
        return invalid("neighborhood size must be at least 1");
    }
    check_class(w, caps, n)?;
    let mut proposals = Vec::with_capacity(m);
    for _ in 0..m {
        let p = bn_draw(w, caps, rng)?;
        assert_closed(&p, caps);
        proposals.push(p);
    }
    Ok(Neighborhood {
        origin: w.clone(),
        proposals,
        kind: NeighborhoodKind::Mixed,
    })
}

/// The gated kernel. With probability `lambda` every member adds a variable
/// (or equals `w` when the support is already at `k`); otherwise each member
/// is independently identical (1/2), a scaling (1/4) or an adjusting (1/4).
pub fn opt_neighborhood<R: Rng + ?Sized>(
    w: &SparseVector,
    k: usize,
    bound: f64,
    n: usize,
    m: usize,
    lambda: f64,
    rng: &mut R,
) -> Result<Neighborhood> {
    if !(0.0..=1.0).contains(&lambda) {
        return invalid(format!("lambda must lie in [0, 1], got {lambda}"));
    }
    if m < 1 {
        return invalid("neighborhood size must be at least 1");
    }
    let caps = Caps { sparsity: k, bound };
    check_class(w, caps, n)?;
    let gate = rng.random_bool(lambda);
    let mut proposals = Vec::with_capacity(m);
    for _ in 0..m {
        let p = if gate {
            if w.sparsity() < k {
                adding(w, bound, rng)?
            } else {
                identical(w)
            }
        } else {
            match rng.random_range(0..4u32) {
                0 | 1 => identical(w),
                2 => scaling(w, rng),
                _ => adjusting(w, bound, rng)?,
            }
        };
        assert_closed(&p, caps);
        proposals.push(p);
    }
    Ok(Neighborhood {
        origin: w.clone(),
        proposals,
        kind: if gate {
            NeighborhoodKind::Adding
        } else {
            NeighborhoodKind::NonAdding
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn caps(k: usize) -> Caps {
        Caps {
            sparsity: k,
            bound: 2.0,
        }
    }

    #[test]
    fn full_support_always_swaps_in_third_branch() {
        let w = SparseVector::from_pairs(10, [(0, 1.0), (4, -0.5), (7, 0.25)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut swaps = 0;
        for _ in 0..3000 {
            let p = bn_mutate_one(&w, caps(3), 10, &mut rng).unwrap();
            match p.kind {
                Move::Adding { .. } => panic!("adding at full support"),
                Move::Swapping { .. } => {
                    swaps += 1;
                    assert_eq!(p.result.sparsity(), 3);
                }
                _ => {}
            }
        }
        assert!(swaps > 800);
    }

    #[test]
    fn unit_gamma_is_identity() {
        let w = SparseVector::from_pairs(4, [(1, 1.5)]).unwrap();
        assert_eq!(w.scaled(1.0), w);
    }

    #[test]
    fn zero_origin_is_total() {
        let w = SparseVector::zeros(5);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..300 {
            let p = bn_mutate_one(&w, caps(2), 5, &mut rng).unwrap();
            match p.kind {
                Move::Identical => assert!(p.result.is_zero()),
                Move::Adding { .. } => assert_eq!(p.result.sparsity(), 1),
                other => panic!("unexpected move {other:?} from zero"),
            }
        }
    }

    #[test]
    fn rejects_out_of_class_origin() {
        let w = SparseVector::from_pairs(5, [(0, 3.0)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(bn_mutate_one(&w, caps(2), 5, &mut rng).is_err());
        assert!(bn_neighborhood(&SparseVector::zeros(5), caps(2), 5, 0, &mut rng).is_err());
        assert!(opt_neighborhood(&SparseVector::zeros(5), 2, 2.0, 5, 3, 1.5, &mut rng).is_err());
    }

    #[test]
    fn neighborhood_is_reproducible() {
        let w = SparseVector::from_pairs(20, [(3, 0.5)]).unwrap();
        let a = bn_neighborhood(&w, caps(4), 20, 30, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = bn_neighborhood(&w, caps(4), 20, 30, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
        let one = bn_neighborhood(&w, caps(4), 20, 1, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(one.len(), 1);
    }

    #[test]
    fn opt_gate_behaviour() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let w = SparseVector::from_pairs(10, [(0, 1.0), (1, 1.0)]).unwrap();
        for _ in 0..50 {
            let nb = opt_neighborhood(&w, 2, 2.0, 10, 8, 0.0, &mut rng).unwrap();
            assert_eq!(nb.kind, NeighborhoodKind::NonAdding);
            for p in &nb.proposals {
                assert!(p.result.support().iter().all(|i| w.contains(*i)));
            }
        }
        let nb = opt_neighborhood(&w, 2, 2.0, 10, 8, 1.0, &mut rng).unwrap();
        assert_eq!(nb.kind, NeighborhoodKind::Adding);
        assert!(nb.members().all(|m| *m == w));
        let nb = opt_neighborhood(&w, 3, 2.0, 10, 8, 1.0, &mut rng).unwrap();
        assert!(nb.members().all(|m| m.sparsity() == 3));
    }
}
