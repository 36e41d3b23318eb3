//! Monte Carlo experiment harness.
//!
//! Every experiment is exactly reproducible from (config, base seed):
//! trial i uses seed splitmix64(base ^ ((i+1) * 0x9E3779B97F4A7C15)), trials
//! run on a bounded worker pool (HAMCOND_THREADS, default: logical CPUs) and
//! results are merged by trial index, so parallelism never changes output.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::engine::{find_hamilton, max_bipartite_matching, phase0_partition, FindPolicy};
use crate::graph::{BipartiteGraph, Digraph, EdgeSequence};
use crate::oracle;
use crate::params::{Parameters, Profile};
use crate::sampler::{sample_simple_digraph, Diagnostics, DigraphSampler, SamplerError};
use crate::treap::NIL;

/// Which probability a sweep estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Estimator {
    /// find_hamilton succeeds
    EngineHamiltonicity,
    /// exact oracle says Hamiltonian (small n only)
    ExactHamiltonicity,
    /// E1's bipartite image has a perfect matching
    MatchingExistence,
    /// detect_obstruction count (tabulated, not a probability)
    ObstructionCount,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub n: usize,
    /// c in m = ceil((n/2)(log n + 2 log log n + c))
    pub c_values: Vec<f64>,
    pub trials: usize,
    pub base_seed: u64,
    pub profile: Profile,
    pub estimator: Estimator,
    /// consult the exact oracle when the engine gives up and n is small
    pub exact_fallback: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.trials == 0 {
            return Err("trials must be >= 1".into());
        }
        for &c in &self.c_values {
            let m = Parameters::edge_count_for(self.n, c);
            if m <= self.n || m > self.n * (self.n - 1) {
                return Err(format!("m(n={}, c={}) = {} out of range", self.n, c, m));
            }
        }
        Ok(())
    }
}

/// One trial's outcome; aggregates recompute exactly from these records.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TrialOutcome {
    Success,
    CertifiedNegative,
    GaveUp,
    SamplerError(String),
    OracleError(String),
    /// for obstruction sweeps: the observed count
    Count(usize),
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub index: usize,
    pub seed: u64,
    pub outcome: TrialOutcome,
    pub runtime_ms: f64,
    /// phase trace JSON for engine runs, null otherwise
    pub trace: Option<serde_json::Value>,
}

/// Aggregate for one (n, c) grid point.
#[derive(Debug, Clone, Serialize)]
pub struct PointSummary {
    pub n: usize,
    pub c: f64,
    pub m: usize,
    pub trials: usize,
    /// trials excluded from the denominator (sampler/oracle errors)
    pub errors: usize,
    pub successes: usize,
    pub p_hat: f64,
    pub lo95: f64,
    pub hi95: f64,
    /// the limit e^{-e^{-c}/8}
    pub prediction: f64,
    /// histogram of obstruction counts (index = count), empty otherwise
    pub histogram: Vec<usize>,
    pub mean: Option<f64>,
    pub variance: Option<f64>,
    pub dispersion: Option<f64>,
    /// chi-square p-value of the histogram against Poisson(e^{-c}/8)
    pub poisson_fit_p: Option<f64>,
    /// the run is invalid if errors exceed 1% of trials
    pub valid: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub points: Vec<PointSummary>,
    pub trials: Vec<Vec<TrialRecord>>,
}

/// The limiting probability of Hamiltonicity at threshold density c.
pub fn predicted_limit(c: f64) -> f64 {
    (-(-c).exp() / 8.0).exp()
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Documented trial-seed splitting rule.
pub fn trial_seed(base: u64, index: usize) -> u64 {
    splitmix64(base ^ ((index as u64 + 1).wrapping_mul(0x9E3779B97F4A7C15)))
}

/// Wilson 95% score interval.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959963984540054f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = (z / denom) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

fn worker_count() -> usize {
    std::env::var("HAMCOND_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&t| t >= 1)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|p| p.get()).unwrap_or(1))
}

/// Run `trials` independent jobs on a bounded pool; output order is by
/// trial index regardless of scheduling.
pub fn run_pool<T, F>(trials: usize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let threads = worker_count().min(trials.max(1));
    if threads <= 1 {
        return (0..trials).map(&job).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<T>>> = (0..trials).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= trials {
                    break;
                }
                let out = job(i);
                *slots[i].lock().unwrap() = Some(out);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().unwrap().expect("every trial filled"))
        .collect()
}

fn summarize_binary(
    config: &ExperimentConfig,
    c: f64,
    m: usize,
    records: &[TrialRecord],
) -> PointSummary {
    let errors = records
        .iter()
        .filter(|r| {
            matches!(r.outcome, TrialOutcome::SamplerError(_) | TrialOutcome::OracleError(_))
        })
        .count();
    let successes = records.iter().filter(|r| r.outcome == TrialOutcome::Success).count();
    let denom = records.len() - errors;
    let p_hat = if denom > 0 { successes as f64 / denom as f64 } else { 0.0 };
    let (lo95, hi95) = wilson_interval(successes, denom.max(1));
    PointSummary {
        n: config.n,
        c,
        m,
        trials: records.len(),
        errors,
        successes,
        p_hat,
        lo95,
        hi95,
        prediction: predicted_limit(c),
        histogram: Vec::new(),
        mean: None,
        variance: None,
        dispersion: None,
        poisson_fit_p: None,
        valid: (errors as f64) < 0.01 * records.len().max(100) as f64,
    }
}

/// Clones a shared prewarmed sampler per trial when available (the
/// conditional-sum tables are expensive to rebuild at large n), otherwise
/// reports the construction error that the prototype hit.
fn sample_from_proto<R: Rng + ?Sized>(
    proto: &Result<DigraphSampler, SamplerError>,
    rng: &mut R,
) -> Result<(Digraph, Diagnostics), SamplerError> {
    match proto {
        Ok(s) => s.clone().sample(rng),
        Err(e) => Err(e.clone()),
    }
}

fn sweep<F>(config: &ExperimentConfig, trial: F) -> ExperimentResult
where
    F: Fn(usize, &Result<DigraphSampler, SamplerError>, usize, u64) -> TrialRecord + Sync,
{
    let mut points = Vec::new();
    let mut all_trials = Vec::new();
    for &c in &config.c_values {
        let m = Parameters::edge_count_for(config.n, c);
        let params = Parameters::new(config.n, m, config.profile);
        let proto = DigraphSampler::new(config.n, m, &params).map(|mut s| {
            s.prewarm();
            s
        });
        let records =
            run_pool(config.trials, |i| trial(m, &proto, i, trial_seed(config.base_seed, i)));
        points.push(summarize_binary(config, c, m, &records));
        all_trials.push(records);
    }
    ExperimentResult { config: config.clone(), points, trials: all_trials }
}

/// Engine (optionally oracle-backed) Hamiltonicity frequency vs the limit.
pub fn run_threshold(config: &ExperimentConfig) -> Result<ExperimentResult, String> {
    config.validate()?;
    let use_exact = config.estimator == Estimator::ExactHamiltonicity;
    Ok(sweep(config, |m, proto, _i, seed| {
        let t = Instant::now();
        let params = Parameters::new(config.n, m, config.profile);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (outcome, trace) = match sample_from_proto(proto, &mut rng) {
            Err(e) => (TrialOutcome::SamplerError(e.to_string()), None),
            Ok((d, _)) => {
                if use_exact {
                    match oracle::exact_hamiltonicity(&d) {
                        Ok(true) => (TrialOutcome::Success, None),
                        Ok(false) => (TrialOutcome::CertifiedNegative, None),
                        Err(e) => (TrialOutcome::OracleError(e.to_string()), None),
                    }
                } else {
                    // bounded oracle budget: a non-Hamiltonian instance
                    // without an obstruction can exhaust the search, and a
                    // sweep must not stall on a handful of hard trials
                    let policy = FindPolicy {
                        exact_fallback: config.exact_fallback,
                        oracle_budget: 2_000_000,
                        ..FindPolicy::default()
                    };
                    let res = find_hamilton(&d, &params, &mut rng, &policy);
                    let trace = serde_json::to_value(&res.trace).ok();
                    let outcome = if res.found {
                        TrialOutcome::Success
                    } else if res.certified_non_hamiltonian {
                        TrialOutcome::CertifiedNegative
                    } else {
                        TrialOutcome::GaveUp
                    };
                    (outcome, trace)
                }
            }
        };
        TrialRecord {
            index: _i,
            seed,
            outcome,
            runtime_ms: t.elapsed().as_secs_f64() * 1e3,
            trace,
        }
    }))
}

/// Perfect-matching frequency of E1's bipartite image vs the same limit.
pub fn run_matching_threshold(config: &ExperimentConfig) -> Result<ExperimentResult, String> {
    config.validate()?;
    Ok(sweep(config, |m, proto, i, seed| {
        let t = Instant::now();
        let params = Parameters::new(config.n, m, config.profile);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let outcome = match sample_from_proto(proto, &mut rng) {
            Err(e) => TrialOutcome::SamplerError(e.to_string()),
            Ok((d, _)) => {
                let mut slots = Vec::with_capacity(2 * d.edges.len());
                for &(u, v) in &d.edges {
                    slots.push(u);
                    slots.push(v);
                }
                let seq = EdgeSequence::new(config.n, slots);
                match phase0_partition(&seq, &params, &mut rng) {
                    Err(e) => TrialOutcome::SamplerError(e.to_string()),
                    Ok(part) => {
                        let g = BipartiteGraph::from_edges(
                            config.n,
                            part.e1.iter().map(|&j| seq.edge(j)),
                        );
                        let matched = max_bipartite_matching(&g)
                            .iter()
                            .filter(|&&b| b != NIL)
                            .count();
                        if matched == config.n {
                            TrialOutcome::Success
                        } else {
                            TrialOutcome::CertifiedNegative
                        }
                    }
                }
            }
        };
        TrialRecord { index: i, seed, outcome, runtime_ms: t.elapsed().as_secs_f64() * 1e3, trace: None }
    }))
}

/// Tabulate detect_obstruction counts and fit Poisson(e^{-c}/8).
pub fn run_obstruction_law(config: &ExperimentConfig) -> Result<ExperimentResult, String> {
    config.validate()?;
    let mut result = sweep(config, |_m, proto, i, seed| {
        let t = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let outcome = match sample_from_proto(proto, &mut rng) {
            Err(e) => TrialOutcome::SamplerError(e.to_string()),
            Ok((d, _)) => TrialOutcome::Count(oracle::detect_obstruction(&d)),
        };
        TrialRecord { index: i, seed, outcome, runtime_ms: t.elapsed().as_secs_f64() * 1e3, trace: None }
    });
    for (point, records) in result.points.iter_mut().zip(&result.trials) {
        let counts: Vec<usize> = records
            .iter()
            .filter_map(|r| match r.outcome {
                TrialOutcome::Count(k) => Some(k),
                _ => None,
            })
            .collect();
        if counts.is_empty() {
            continue;
        }
        let max = *counts.iter().max().unwrap();
        let mut hist = vec![0usize; max + 1];
        for &k in &counts {
            hist[k] += 1;
        }
        let nf = counts.len() as f64;
        let mean = counts.iter().sum::<usize>() as f64 / nf;
        let var = counts.iter().map(|&k| (k as f64 - mean).powi(2)).sum::<f64>() / nf;
        point.successes = hist[0];
        point.p_hat = hist[0] as f64 / nf;
        let (lo, hi) = wilson_interval(hist[0], counts.len());
        point.lo95 = lo;
        point.hi95 = hi;
        point.mean = Some(mean);
        point.variance = Some(var);
        point.dispersion = Some(if mean > 0.0 { var / mean } else { f64::NAN });
        point.poisson_fit_p = poisson_chi2_p(&hist, (-point.c).exp() / 8.0);
        point.histogram = hist;
    }
    Ok(result)
}

/// Chi-square goodness of fit of a count histogram against Poisson(lambda),
/// pooling the tail so expected cell counts stay >= 5.
fn poisson_chi2_p(hist: &[usize], lambda: f64) -> Option<f64> {
    let n: usize = hist.iter().sum();
    if n == 0 || lambda <= 0.0 {
        return None;
    }
    let nf = n as f64;
    // expected Poisson masses per count
    let mut cells: Vec<(f64, f64)> = Vec::new(); // (observed, expected)
    let mut pk = (-lambda).exp();
    let mut tail_obs = 0.0;
    let mut tail_exp = nf;
    for (k, &obs) in hist.iter().enumerate() {
        let exp_k = nf * pk;
        if exp_k >= 5.0 {
            cells.push((obs as f64, exp_k));
            tail_exp -= exp_k;
        } else {
            tail_obs += obs as f64;
        }
        pk *= lambda / (k as f64 + 1.0);
    }
    cells.push((tail_obs, tail_exp.max(1e-12)));
    if cells.len() < 2 {
        return None;
    }
    let stat: f64 = cells.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    let dof = (cells.len() - 1) as f64;
    let chi = ChiSquared::new(dof).ok()?;
    Some(1.0 - chi.cdf(stat))
}

/// Uniformity report for small (n, m) with enumerable support.
#[derive(Debug, Clone, Serialize)]
pub struct UniformityReport {
    pub n: usize,
    pub m: usize,
    pub samples: usize,
    pub support: usize,
    pub chi2: f64,
    pub dof: usize,
    pub p_value: f64,
    pub counts: Vec<usize>,
}

/// Sample repeatedly and chi-square the observed frequencies against the
/// uniform law over the enumerated support.
pub fn run_uniformity(
    n: usize,
    m: usize,
    samples: usize,
    seed: u64,
) -> Result<UniformityReport, String> {
    let digraphs: Vec<Digraph> =
        oracle::enumerate_digraphs(n, m).map_err(|e| e.to_string())?.collect();
    let support = digraphs.len();
    if support == 0 {
        return Err("empty support".into());
    }
    let mut index = std::collections::HashMap::new();
    for (i, d) in digraphs.iter().enumerate() {
        let mut key: Vec<(u32, u32)> = d.edges.clone();
        key.sort_unstable();
        index.insert(key, i);
    }
    let params = Parameters::new(n, m, Profile::Desk);
    let per_trial: Vec<usize> = run_pool(samples, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, i));
        let (d, _) = sample_simple_digraph(n, m, &mut rng, &params)
            .expect("sampling feasible at enumerable sizes");
        let mut key = d.edges.clone();
        key.sort_unstable();
        *index.get(&key).expect("sampled digraph must be in the enumerated support")
    });
    let mut counts = vec![0usize; support];
    for cls in per_trial {
        counts[cls] += 1;
    }
    let expected = samples as f64 / support as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let dof = support - 1;
    let p_value = if dof == 0 {
        1.0
    } else {
        1.0 - ChiSquared::new(dof as f64).unwrap().cdf(chi2)
    };
    Ok(UniformityReport { n, m, samples, support, chi2, dof, p_value, counts })
}

/// Equivalence of "no obstruction" and exact Hamiltonicity on small n.
#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    pub budget_errors: usize,
    pub disagreements: usize,
    pub disagreement_fraction: f64,
    /// obstruction > 0 but exact says Hamiltonian — must stay zero
    pub soundness_violations: usize,
    /// per disagreeing trial: (seed, obstruction count, hamiltonian)
    pub disagreeing: Vec<(u64, usize, bool)>,
}

pub fn run_equivalence(
    n: usize,
    m: usize,
    trials: usize,
    seed: u64,
) -> Result<EquivalenceReport, String> {
    let params = Parameters::new(n, m, Profile::Desk);
    #[derive(Clone)]
    enum Out {
        Verdict { obstructions: usize, hamiltonian: bool, seed: u64 },
        Budget,
    }
    let outs = run_pool(trials, |i| {
        let s = trial_seed(seed, i);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let (d, _) = sample_simple_digraph(n, m, &mut rng, &params)
            .expect("sampling feasible at small n");
        let obstructions = oracle::detect_obstruction(&d);
        match oracle::exact_hamiltonicity(&d) {
            Ok(h) => Out::Verdict { obstructions, hamiltonian: h, seed: s },
            Err(_) => Out::Budget,
        }
    });
    let mut budget_errors = 0;
    let mut disagreements = 0;
    let mut soundness_violations = 0;
    let mut disagreeing = Vec::new();
    let mut decided = 0usize;
    for out in outs {
        match out {
            Out::Budget => budget_errors += 1,
            Out::Verdict { obstructions, hamiltonian, seed } => {
                decided += 1;
                if (obstructions == 0) != hamiltonian {
                    disagreements += 1;
                    disagreeing.push((seed, obstructions, hamiltonian));
                }
                if obstructions > 0 && hamiltonian {
                    soundness_violations += 1;
                }
            }
        }
    }
    Ok(EquivalenceReport {
        n,
        m,
        trials,
        budget_errors,
        disagreements,
        disagreement_fraction: if decided > 0 {
            disagreements as f64 / decided as f64
        } else {
            0.0
        },
        soundness_violations,
        disagreeing,
    })
}

/// CSV table: one row per (n, c) point.
pub fn write_csv<W: std::io::Write>(result: &ExperimentResult, w: W) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record([
        "n", "c", "m", "trials", "errors", "p_hat", "lo95", "hi95", "prediction", "mean",
        "dispersion",
    ])?;
    for p in &result.points {
        wtr.write_record([
            p.n.to_string(),
            format!("{}", p.c),
            p.m.to_string(),
            p.trials.to_string(),
            p.errors.to_string(),
            format!("{:.6}", p.p_hat),
            format!("{:.6}", p.lo95),
            format!("{:.6}", p.hi95),
            format!("{:.6}", p.prediction),
            p.mean.map(|v| format!("{:.6}", v)).unwrap_or_default(),
            p.dispersion.map(|v| format!("{:.6}", v)).unwrap_or_default(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// gnuplot script plotting the empirical curve with Wilson error bars
/// against the predicted limit.
pub fn gnuplot_script(csv_path: &str, out_png: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set key left top\n\
         set xlabel 'c'\n\
         set ylabel 'probability'\n\
         set yrange [0:1]\n\
         set terminal pngcairo size 900,600\n\
         set output '{out}'\n\
         plot '{csv}' skip 1 using 2:6:7:8 with yerrorbars title 'empirical (95% Wilson)', \\\n\
              exp(-exp(-x)/8) with lines title 'limit exp(-exp(-c)/8)'\n",
        out = out_png,
        csv = csv_path
    )
}
