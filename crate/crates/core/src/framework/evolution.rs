use std::collections::BTreeSet;
use std::io::Write;

use rand::Rng;

use super::selection::{bn_select, opt_select, SelectionEvent};
use crate::distributions::{sample, DistributionHandle};
use crate::error::{check_dim, invalid, Error, Result};
use crate::model::expected_loss;
use crate::mutators::{bn_neighborhood, opt_neighborhood, Caps};
use crate::rng::{stream, Purpose};
use crate::vector::SparseVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Four-move kernel with beneficial/neutral selection.
    Bn,
    /// Gated kernel with optimization-based selection; starts from zero.
    Opt,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Bn => "bn",
            Algorithm::Opt => "opt",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionSettings {
    pub algorithm: Algorithm,
    pub m: usize,
    pub s: usize,
    pub t: f64,
    pub max_generations: usize,
    /// Sparsity cap and coefficient box. For [`Algorithm::Opt`] the sparsity
    /// cap plays the role of `k`.
    pub caps: Caps,
    /// Adding-gate probability, required for [`Algorithm::Opt`].
    pub lambda: Option<f64>,
    pub epsilon: f64,
}

#[derive(Debug, Clone)]
pub struct EvolutionConfig<'a> {
    pub target: &'a SparseVector,
    pub distribution: &'a DistributionHandle,
    pub settings: EvolutionSettings,
    pub initial: SparseVector,
    pub master_seed: u64,
    pub trial: u64,
}

impl EvolutionConfig<'_> {
    pub fn validate(&self) -> Result<()> {
        let st = &self.settings;
        let n = self.distribution.dim();
        check_dim(n, self.target.dim())?;
        check_dim(n, self.initial.dim())?;
        if st.m < 1 || st.s < 1 {
            return invalid("m and s must be at least 1");
        }
        if !(st.t > 0.0) {
            return invalid("tolerance t must be positive");
        }
        if !(st.epsilon > 0.0) {
            return invalid("epsilon must be positive");
        }
        if !(st.caps.bound > 0.0) || st.caps.sparsity < 1 {
            return invalid("caps must be positive");
        }
        if !st.caps.admits(&self.initial) {
            return invalid("initial representation lies outside the class");
        }
        if st.algorithm == Algorithm::Opt {
            if !self.initial.is_zero() {
                return Err(Error::Precondition(
                    "optimization-based selection starts from the zero representation".into(),
                ));
            }
            match st.lambda {
                Some(l) if (0.0..=1.0).contains(&l) => {}
                _ => return invalid("optimization-based selection needs lambda in [0, 1]"),
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Success,
    BudgetExhausted,
    Bot,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Success => "success",
            RunStatus::BudgetExhausted => "budget-exhausted",
            RunStatus::Bot => "bot",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub generation: usize,
    pub loss_exact: f64,
    /// Survivor's empirical loss; absent for generation 0.
    pub loss_empirical: Option<f64>,
    pub support: Vec<usize>,
    pub sparsity: usize,
    pub support_precision: f64,
    pub support_recall: f64,
    /// `None` for generation 0.
    pub event: Option<SelectionEvent>,
}

impl GenerationRecord {
    pub fn event_str(&self) -> &'static str {
        self.event.map_or("initial", |e| e.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionTrace {
    pub trial: u64,
    pub master_seed: u64,
    pub records: Vec<GenerationRecord>,
    pub status: RunStatus,
    pub final_representation: SparseVector,
}

impl EvolutionTrace {
    pub fn last(&self) -> &GenerationRecord {
        self.records.last().expect("trace has generation 0")
    }

    /// Index of the last completed generation.
    pub fn generations(&self) -> usize {
        self.last().generation
    }
}

/// Precision and recall of `NZ(w)` against `NZ(f)`; an empty set scores 1.
pub fn support_precision_recall(w: &SparseVector, f: &SparseVector) -> (f64, f64) {
    let sw: BTreeSet<usize> = w.support().into_iter().collect();
    let sf: BTreeSet<usize> = f.support().into_iter().collect();
    let hit = sw.intersection(&sf).count() as f64;
    let precision = if sw.is_empty() {
        1.0
    } else {
        hit / sw.len() as f64
    };
    let recall = if sf.is_empty() {
        1.0
    } else {
        hit / sf.len() as f64
    };
    (precision, recall)
}

fn record(
    generation: usize,
    w: &SparseVector,
    f: &SparseVector,
    loss_exact: f64,
    loss_empirical: Option<f64>,
    event: Option<SelectionEvent>,
) -> GenerationRecord {
    let (support_precision, support_recall) = support_precision_recall(w, f);
    GenerationRecord {
        generation,
        loss_exact,
        loss_empirical,
        support: w.support(),
        sparsity: w.sparsity(),
        support_precision,
        support_recall,
        event,
    }
}

/// Runs one seeded evolution.
///
/// Every generation draws a fresh sample, builds a neighborhood and applies the
/// configured selection rule. The exact loss is recorded for instrumentation
/// only. A BOT outcome appends a `failure` record that keeps the parent.
pub fn run_evolution(config: &EvolutionConfig<'_>) -> Result<EvolutionTrace> {
    config.validate()?;
    let st = &config.settings;
    let f = config.target;
    let cov = config.distribution.covariance();
    let n = config.distribution.dim();
    let mut sample_rng = stream(config.master_seed, config.trial, Purpose::Sample);
    let mut mutation_rng = stream(config.master_seed, config.trial, Purpose::Mutation);
    let mut selection_rng = stream(config.master_seed, config.trial, Purpose::Selection);

    let mut w = config.initial.clone();
    let mut loss = expected_loss(f, &w, cov)?;
    let mut records = vec![record(0, &w, f, loss, None, None)];
    let mut status = RunStatus::BudgetExhausted;
    if loss <= st.epsilon {
        status = RunStatus::Success;
    } else {
        for generation in 1..=st.max_generations {
            let batch = sample(config.distribution, st.s, sample_rng.random())?;
            let outcome = match st.algorithm {
                Algorithm::Bn => {
                    let neigh = bn_neighborhood(&w, st.caps, n, st.m, &mut mutation_rng)?;
                    bn_select(f, &neigh, &batch, st.t, &mut selection_rng)?
                }
                Algorithm::Opt => {
                    let lambda = st.lambda.expect("validated");
                    let neigh = opt_neighborhood(
                        &w,
                        st.caps.sparsity,
                        st.caps.bound,
                        n,
                        st.m,
                        lambda,
                        &mut mutation_rng,
                    )?;
                    opt_select(f, &neigh, &batch, st.t, &mut selection_rng)?
                }
            };
            match (outcome.survivor, outcome.survivor_index) {
                (Some(next), Some(idx)) => {
                    w = next;
                    loss = expected_loss(f, &w, cov)?;
                    let emp = outcome.empirical_losses[idx];
                    records.push(record(
                        generation,
                        &w,
                        f,
                        loss,
                        Some(emp),
                        Some(outcome.event),
                    ));
                    if loss <= st.epsilon {
                        status = RunStatus::Success;
                        break;
                    }
                }
                _ => {
                    records.push(record(
                        generation,
                        &w,
                        f,
                        loss,
                        Some(outcome.origin_loss),
                        Some(SelectionEvent::Failure),
                    ));
                    status = RunStatus::Bot;
                    break;
                }
            }
        }
    }
    Ok(EvolutionTrace {
        trial: config.trial,
        master_seed: config.master_seed,
        records,
        status,
        final_representation: w,
    })
}

pub const TRACE_HEADER: &str =
    "trial,generation,loss_exact,loss_empirical,sparsity,support_precision,support_recall,event";

/// Writes the header and one row per generation, traces in the given order.
pub fn write_traces_csv<W: Write>(traces: &[EvolutionTrace], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for tr in traces {
        for r in &tr.records {
            let emp = r
                .loss_empirical
                .map(|v| format!("{v:.16e}"))
                .unwrap_or_default();
            writeln!(
                out,
                "{},{},{:.16e},{},{},{:.16e},{:.16e},{}",
                tr.trial,
                r.generation,
                r.loss_exact,
                emp,
                r.sparsity,
                r.support_precision,
                r.support_recall,
                r.event_str()
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{make_smooth, BaseSpec};

    fn settings(algorithm: Algorithm) -> EvolutionSettings {
        EvolutionSettings {
            algorithm,
            m: 60,
            s: 400,
            t: 1e-4,
            max_generations: 400,
            caps: Caps {
                sparsity: 4,
                bound: 2.0,
            },
            lambda: Some(0.05),
            epsilon: 0.02,
        }
    }

    #[test]
    fn zero_target_succeeds_immediately() {
        let h = make_smooth(BaseSpec::PointMass, 0.5, 10).unwrap();
        let f = SparseVector::zeros(10);
        let cfg = EvolutionConfig {
            target: &f,
            distribution: &h,
            settings: settings(Algorithm::Bn),
            initial: SparseVector::zeros(10),
            master_seed: 1,
            trial: 0,
        };
        let tr = run_evolution(&cfg).unwrap();
        assert_eq!(tr.status, RunStatus::Success);
        assert_eq!(tr.generations(), 0);
        assert_eq!(tr.records[0].event_str(), "initial");
    }

    #[test]
    fn seeded_runs_repeat_and_converge() {
        let h = make_smooth(BaseSpec::PointMass, 0.5, 20).unwrap();
        let f = SparseVector::from_pairs(20, [(3, 1.0), (11, -0.7)]).unwrap();
        for alg in [Algorithm::Bn, Algorithm::Opt] {
            let cfg = EvolutionConfig {
                target: &f,
                distribution: &h,
                settings: settings(alg),
                initial: SparseVector::zeros(20),
                master_seed: 9,
                trial: 2,
            };
            let a = run_evolution(&cfg).unwrap();
            let b = run_evolution(&cfg).unwrap();
            assert_eq!(a, b);
            let gens: Vec<usize> = a.records.iter().map(|r| r.generation).collect();
            assert_eq!(gens, (0..a.records.len()).collect::<Vec<_>>());
            assert_eq!(
                a.status == RunStatus::Success,
                a.last().loss_exact <= 0.02,
                "{alg:?}"
            );
        }
    }

    #[test]
    fn opt_requires_zero_start_and_lambda() {
        let h = make_smooth(BaseSpec::PointMass, 0.5, 5).unwrap();
        let f = SparseVector::basis(5, 0).unwrap();
        let mut cfg = EvolutionConfig {
            target: &f,
            distribution: &h,
            settings: settings(Algorithm::Opt),
            initial: SparseVector::basis(5, 1).unwrap(),
            master_seed: 0,
            trial: 0,
        };
        assert!(matches!(run_evolution(&cfg), Err(Error::Precondition(_))));
        cfg.initial = SparseVector::zeros(5);
        cfg.settings.lambda = None;
        assert!(run_evolution(&cfg).is_err());
    }

    #[test]
    fn precision_recall_edges() {
        let f = SparseVector::from_pairs(6, [(0, 1.0), (2, 1.0)]).unwrap();
        let w = SparseVector::from_pairs(6, [(0, 1.0), (4, 1.0)]).unwrap();
        assert_eq!(support_precision_recall(&w, &f), (0.5, 0.5));
        assert_eq!(
            support_precision_recall(&SparseVector::zeros(6), &f),
            (1.0, 0.0)
        );
    }

    #[test]
    fn csv_layout() {
        let h = make_smooth(BaseSpec::PointMass, 0.5, 4).unwrap();
        let f = SparseVector::zeros(4);
        let cfg = EvolutionConfig {
            target: &f,
            distribution: &h,
            settings: settings(Algorithm::Bn),
            initial: SparseVector::zeros(4),
            master_seed: 0,
            trial: 3,
        };
        let tr = run_evolution(&cfg).unwrap();
        let mut buf = Vec::new();
        write_traces_csv(&[tr], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            format!(
                "{TRACE_HEADER}\n3,0,0.0000000000000000e0,,0,1.0000000000000000e0,1.0000000000000000e0,initial\n"
            )
        );
    }
}
