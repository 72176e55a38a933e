//! The five subcommands as library functions. Each returns its results so the
//! binary can choose an exit code and tests can inspect them directly.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use evolvolin_core::distributions::sample;
use evolvolin_core::framework::{
    run_evolution, write_traces_csv, EvolutionConfig, EvolutionTrace, RunStatus,
};
use evolvolin_core::oracles::{
    claim_instance, lemma1_instance, omp_reference, ClaimId, InstanceOutcome, Verdict,
};
use evolvolin_core::rng::{stream, Purpose};
use evolvolin_core::{SparseVector, TargetFunction};
use rand::Rng;
use rayon::prelude::*;

use crate::config::{Resolved, RunConfig};
use crate::output::{loss_plot_svg, num, support_string, write_file};

/// Runs `op` on a pool of `jobs` threads; `0` means one per core.
pub fn with_pool<T: Send>(jobs: usize, op: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("building worker pool")?;
    Ok(pool.install(op))
}

/// One evolution trial with its target.
#[derive(Debug, Clone)]
pub struct Trial {
    pub target: TargetFunction,
    pub trace: EvolutionTrace,
}

impl Trial {
    pub fn succeeded(&self) -> bool {
        self.trace.status == RunStatus::Success
    }
}

/// Runs `cfg.run.trials` seeded trials at dimension `n`, in trial order.
pub fn run_trials(cfg: &RunConfig, n: usize, jobs: usize) -> Result<(Resolved, Vec<Trial>)> {
    let resolved = cfg.resolve(n)?;
    let trials = with_pool(jobs, || {
        (0..cfg.run.trials as u64)
            .into_par_iter()
            .map(|trial| {
                let target = cfg.target(&resolved.params, trial)?;
                let config = EvolutionConfig {
                    target: target.vector(),
                    distribution: &resolved.handle,
                    settings: resolved.settings.clone(),
                    initial: SparseVector::zeros(n),
                    master_seed: cfg.run.master_seed,
                    trial,
                };
                let trace = run_evolution(&config)?;
                Ok(Trial { target, trace })
            })
            .collect::<Result<Vec<_>>>()
    })??;
    Ok((resolved, trials))
}

pub const SUMMARY_HEADER: &str = "trial,status,generations,final_loss,sparsity,support_precision,support_recall,final_support,target_support";

/// `run`: per-trial traces `trace_NNNN.csv`, `summary.csv`, and optionally a
/// loss plot and one exported sample batch.
pub fn cmd_run(
    cfg: &RunConfig,
    out_dir: &Path,
    jobs: usize,
    plot: Option<&Path>,
    export_sample: Option<(&Path, usize)>,
) -> Result<Vec<Trial>> {
    let n = cfg.problem.n;
    let (resolved, trials) = run_trials(cfg, n, jobs)?;
    let echo = cfg.echo();
    for t in &trials {
        let path = out_dir.join(format!("trace_{:04}.csv", t.trace.trial));
        write_file(&path, &echo, |w| {
            write_traces_csv(std::slice::from_ref(&t.trace), w)
        })?;
    }
    write_file(&out_dir.join("summary.csv"), &echo, |w| {
        writeln!(w, "{SUMMARY_HEADER}")?;
        for t in &trials {
            let last = t.trace.last();
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                t.trace.trial,
                t.trace.status.as_str(),
                t.trace.generations(),
                num(last.loss_exact),
                last.sparsity,
                num(last.support_precision),
                num(last.support_recall),
                support_string(&last.support),
                support_string(&t.target.vector().support()),
            )?;
        }
        Ok(())
    })?;
    if let Some(path) = plot {
        let traces: Vec<EvolutionTrace> = trials.iter().map(|t| t.trace.clone()).collect();
        let svg = loss_plot_svg(&traces, cfg.problem.epsilon);
        std::fs::write(path, svg).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some((path, count)) = export_sample {
        // The same seed the first generation of trial 0 uses.
        let seed: u64 = stream(cfg.run.master_seed, 0, Purpose::Sample).random();
        let batch = sample(&resolved.handle, count, seed)?;
        write_file(path, &echo, |w| batch.write_csv(w))?;
    }
    Ok(trials)
}

/// One row of `sweep-n` output.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub trials: usize,
    pub successes: usize,
    pub median_generations: Option<f64>,
    pub m: usize,
    pub s: usize,
    /// Generations summed over all trials, successful or not.
    pub total_generations: usize,
    pub seconds: f64,
}

impl SweepRow {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }

    /// Sample-loss evaluations per generation, `m * s`.
    pub fn work_per_generation(&self) -> usize {
        self.m * self.s
    }

    pub fn seconds_per_generation(&self) -> f64 {
        self.seconds / self.total_generations.max(1) as f64
    }
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    })
}

pub const SWEEP_HEADER: &str =
    "n,trials,successes,success_rate,median_generations,m,s,work_per_generation";

/// `sweep-n`: trials at each `n` of `n_list`. Wall-clock time goes only to the
/// optional `timing` file so that `out` is reproducible byte for byte.
pub fn cmd_sweep(
    cfg: &RunConfig,
    n_list: &[usize],
    out: &Path,
    timing: Option<&Path>,
    jobs: usize,
) -> Result<Vec<SweepRow>> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(crate::config::ConfigError::Invalid(
            "the dimension list must be non-empty and strictly increasing".into(),
        )
        .into());
    }
    let mut rows = Vec::new();
    for &n in n_list {
        let start = Instant::now();
        let (resolved, trials) = run_trials(cfg, n, jobs)?;
        let total_generations = trials.iter().map(|t| t.trace.generations()).sum();
        let mut gens: Vec<f64> = trials
            .iter()
            .filter(|t| t.succeeded())
            .map(|t| t.trace.generations() as f64)
            .collect();
        rows.push(SweepRow {
            n,
            trials: trials.len(),
            successes: gens.len(),
            median_generations: median(&mut gens),
            m: resolved.settings.m,
            s: resolved.settings.s,
            total_generations,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    let echo = cfg.echo();
    write_file(out, &echo, |w| {
        writeln!(w, "{SWEEP_HEADER}")?;
        for r in &rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.n,
                r.trials,
                r.successes,
                num(r.success_rate()),
                r.median_generations.map(num).unwrap_or_default(),
                r.m,
                r.s,
                r.work_per_generation()
            )?;
        }
        Ok(())
    })?;
    if let Some(path) = timing {
        write_file(path, &echo, |w| {
            writeln!(w, "n,total_generations,seconds,seconds_per_generation")?;
            for r in &rows {
                writeln!(
                    w,
                    "{},{},{},{}",
                    r.n,
                    r.total_generations,
                    num(r.seconds),
                    num(r.seconds_per_generation())
                )?;
            }
            Ok(())
        })?;
    }
    Ok(rows)
}

/// One row of `omp-compare` output.
#[derive(Debug, Clone, PartialEq)]
pub struct OmpRow {
    pub trial: u64,
    pub status: RunStatus,
    pub evolved_support: Vec<usize>,
    pub omp_support: Vec<usize>,
    pub target_support: Vec<usize>,
}

impl OmpRow {
    pub fn matches(&self) -> bool {
        self.evolved_support == self.omp_support
    }

    /// Jaccard index of the evolved and OMP supports; 1 when both are empty.
    pub fn jaccard(&self) -> f64 {
        let inter = self
            .evolved_support
            .iter()
            .filter(|i| self.omp_support.contains(i))
            .count();
        let union = self.evolved_support.len() + self.omp_support.len() - inter;
        if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        }
    }
}

pub const OMP_HEADER: &str =
    "trial,status,evolved_support,omp_support,target_support,match,jaccard";

/// `omp-compare`: final evolved support against `k`-step population OMP.
pub fn cmd_omp_compare(cfg: &RunConfig, out: &Path, jobs: usize) -> Result<Vec<OmpRow>> {
    let (resolved, trials) = run_trials(cfg, cfg.problem.n, jobs)?;
    let cov = resolved.handle.covariance();
    let rows = trials
        .iter()
        .map(|t| {
            let omp = omp_reference(t.target.vector(), cov, cfg.problem.k)?;
            Ok(OmpRow {
                trial: t.trace.trial,
                status: t.trace.status,
                evolved_support: t.trace.final_representation.support(),
                omp_support: omp.support(),
                target_support: t.target.vector().support(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    write_file(out, &cfg.echo(), |w| {
        writeln!(w, "{OMP_HEADER}")?;
        for r in &rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.trial,
                r.status.as_str(),
                support_string(&r.evolved_support),
                support_string(&r.omp_support),
                support_string(&r.target_support),
                r.matches(),
                num(r.jaccard())
            )?;
        }
        Ok(())
    })?;
    Ok(rows)
}

/// Settings of a `verify-claims` run.
#[derive(Debug, Clone, PartialEq)]
pub struct ClaimSuiteSettings {
    pub claims: Vec<ClaimId>,
    pub instances: usize,
    pub lemma_instances: usize,
    pub master_seed: u64,
    /// Multiplier on every required decrease; 1 is the faithful check.
    pub factor: f64,
    pub jobs: usize,
}

/// Per-claim tallies of a `verify-claims` run.
#[derive(Debug, Clone, PartialEq)]
pub struct ClaimTally {
    pub claim: ClaimId,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
    pub starved: usize,
    /// Smallest `achieved - required` over passing and failing instances.
    pub min_margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClaimsSummary {
    pub tallies: Vec<ClaimTally>,
    pub lemma_instances: usize,
    pub lemma_failures: usize,
}

impl ClaimsSummary {
    pub fn any_failed(&self) -> bool {
        self.lemma_failures > 0 || self.tallies.iter().any(|t| t.failed > 0)
    }

    pub fn any_starved(&self) -> bool {
        self.tallies.iter().any(|t| t.starved > 0)
    }

    /// 0 all verified, 1 some instance failed, 3 some instance was starved.
    pub fn exit_code(&self) -> i32 {
        if self.any_failed() {
            1
        } else if self.any_starved() {
            3
        } else {
            0
        }
    }
}

pub const CLAIMS_HEADER: &str = "claim,instance,verdict,required_decrease,achieved_decrease,best_decrease,margin,probability_floor,failed_checks,description";

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
        Verdict::Skipped => "skipped",
    }
}

/// `verify-claims`: seeded instance suites for each claim plus the
/// coordinate-bound lemma, one CSV row per instance.
pub fn cmd_verify_claims<W: Write>(
    settings: &ClaimSuiteSettings,
    mut out: W,
) -> Result<ClaimsSummary> {
    let st = settings;
    let results = with_pool(st.jobs, || {
        st.claims
            .iter()
            .map(|&claim| {
                (0..st.instances as u64)
                    .into_par_iter()
                    .map(|i| Ok((i, claim_instance(claim, st.master_seed, i, st.factor)?)))
                    .collect::<Result<Vec<_>>>()
                    .map(|v| (claim, v))
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let lemma = with_pool(st.jobs, || {
        (0..st.lemma_instances as u64)
            .into_par_iter()
            .map(|i| lemma1_instance(st.master_seed, i))
            .collect::<evolvolin_core::Result<Vec<_>>>()
    })??;

    writeln!(
        out,
        "# master_seed = {}\n# instances = {}\n# lemma_instances = {}\n# factor = {}",
        st.master_seed, st.instances, st.lemma_instances, st.factor
    )?;
    writeln!(out, "{CLAIMS_HEADER}")?;
    let mut tallies = Vec::new();
    for (claim, outcomes) in &results {
        let mut t = ClaimTally {
            claim: *claim,
            passed: 0,
            failed: 0,
            skipped: 0,
            starved: 0,
            min_margin: f64::INFINITY,
        };
        for (i, outcome) in outcomes {
            match outcome {
                InstanceOutcome::Report(r) => {
                    let v = r.verdict();
                    match v {
                        Verdict::Pass => t.passed += 1,
                        Verdict::Fail => t.failed += 1,
                        Verdict::Skipped => t.skipped += 1,
                    }
                    if v != Verdict::Skipped {
                        t.min_margin = t.min_margin.min(r.margin());
                    }
                    writeln!(
                        out,
                        "{},{},{},{},{},{},{},{},{},{}",
                        claim,
                        i,
                        verdict_str(v),
                        num(r.required_decrease),
                        num(r.achieved_decrease),
                        num(r.best_decrease),
                        num(r.margin()),
                        num(r.probability_floor),
                        r.failed_checks().join(" "),
                        r.instance.replace(',', ";"),
                    )?;
                }
                InstanceOutcome::Starved { attempts } => {
                    t.starved += 1;
                    writeln!(out, "{claim},{i},starved,,,,,,,attempts={attempts}")?;
                }
            }
        }
        tallies.push(t);
    }
    let mut lemma_failures = 0;
    for (i, r) in lemma.iter().enumerate() {
        let ok = r.max_bound_holds && r.min_bound_holds;
        lemma_failures += usize::from(!ok);
        writeln!(
            out,
            "lemma1,{i},{},,,,{},,{},",
            if ok { "pass" } else { "fail" },
            num(r.max_slack.min(r.min_slack)),
            match (r.max_bound_holds, r.min_bound_holds) {
                (true, true) => "",
                (false, true) => "max_bound",
                (true, false) => "min_bound",
                (false, false) => "max_bound min_bound",
            }
        )?;
    }
    out.flush()?;
    Ok(ClaimsSummary {
        tallies,
        lemma_instances: lemma.len(),
        lemma_failures,
    })
}

/// `theory-params`: the theoretical constants at the configured dimension.
pub fn theory_table(cfg: &RunConfig) -> Result<String> {
    use evolvolin_core::framework::{
        theory_params_bn, theory_params_opt, FEASIBLE_SAMPLE_EVALUATIONS,
    };

    let r = cfg.resolve(cfg.problem.n).or_else(|_| {
        // Theory mode refuses infeasible runs; the table is still wanted.
        let mut relaxed = cfg.clone();
        relaxed.algorithm.params_mode = crate::config::ParamsMode::Practical;
        relaxed.algorithm.m.get_or_insert(1);
        relaxed.algorithm.s.get_or_insert(1);
        relaxed.algorithm.t.get_or_insert(1.0);
        relaxed.algorithm.max_generations.get_or_insert(1);
        relaxed.algorithm.sparsity_cap.get_or_insert(1);
        relaxed.algorithm.coef_bound.get_or_insert(1.0);
        relaxed.resolve(cfg.problem.n)
    })?;
    let th = match cfg.algorithm.name {
        crate::config::AlgorithmName::Bn => theory_params_bn(&r.params)?,
        crate::config::AlgorithmName::Opt => theory_params_opt(&r.params)?,
    };
    let mut rows: Vec<(&str, String)> = vec![
        ("algorithm", r.settings.algorithm.as_str().into()),
        ("n", r.params.n.to_string()),
        ("k", r.params.k.to_string()),
        ("delta", num(r.params.delta)),
        ("g_bound", num(r.params.g_bound)),
        ("epsilon", num(r.params.epsilon)),
        ("K", num(th.cap_k)),
        ("B", num(th.cap_b)),
        ("W", num(th.cap_w)),
        ("p", num(th.p)),
        ("alpha", num(th.alpha)),
        ("g", num(th.g)),
        ("m", num(th.m)),
        ("s", num(th.s)),
        ("t", num(th.t)),
        ("tau", num(th.tau)),
    ];
    if let Some(l) = th.lambda {
        rows.push(("lambda", num(l)));
    }
    rows.push(("sample_evaluations", num(th.sample_evaluations())));
    rows.push(("feasible", th.is_feasible().to_string()));
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut table = String::new();
    for (k, v) in rows {
        table.push_str(&format!("{k:<width$}  {v}\n"));
    }
    table.push_str(&format!(
        "# feasible means g*s <= {FEASIBLE_SAMPLE_EVALUATIONS:.0e} sample evaluations\n"
    ));
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(&mut []), None);
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), Some(2.5));
    }

    #[test]
    fn jaccard_index() {
        let row = OmpRow {
            trial: 0,
            status: RunStatus::Success,
            evolved_support: vec![0, 1, 2],
            omp_support: vec![1, 2, 3],
            target_support: vec![1, 2],
        };
        assert!(!row.matches());
        assert_eq!(row.jaccard(), 0.5);
    }
}
