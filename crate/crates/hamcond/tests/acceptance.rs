//! Acceptance gate: one test per release criterion. Each test prints a
//! single "criterion N: PASS/FAIL" line (visible in the output of failing
//! tests; passing tests are summarized by the harness) and then asserts,
//! so the suite stays red until every criterion holds.

use std::time::Instant;

use hamcond::experiments::{
    run_obstruction_law, run_threshold, run_uniformity, trial_seed, Estimator, ExperimentConfig,
};
use hamcond::graph::{verify_hamilton_cycle, EdgeSequence};
use hamcond::oracle::{
    count_asymptotic, detect_obstruction, enumerate_digraphs, exact_hamiltonicity,
    exact_hamiltonicity_budgeted,
};
use hamcond::params::{Parameters, Profile};
use hamcond::sampler::{l_switch, local_clt_probability, p_switch, solve_z, DigraphSampler};
use hamcond::engine::{find_hamilton, FindPolicy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(criterion: u32, pass: bool, detail: &str) -> bool {
    println!("criterion {}: {} — {}", criterion, if pass { "PASS" } else { "FAIL" }, detail);
    pass
}

/// Sampled digraphs at enumerable sizes are uniform over the simple,
/// min-degree-one support: chi-square p > 1e-3 on >= 10^4 samples per class.
#[test]
fn criterion_1_sampler_uniformity() {
    let t = Instant::now();
    let cases = [(3usize, 4usize, 9usize), (3, 5, 6), (2, 2, 1)];
    let mut details = Vec::new();
    let mut pass = true;
    for (i, &(n, m, want_support)) in cases.iter().enumerate() {
        let rep = run_uniformity(n, m, 10_000, 0xACCE_0001 + i as u64).expect("enumerable case");
        let ok = rep.support == want_support && rep.p_value > 1e-3;
        pass &= ok;
        details.push(format!(
            "(n={}, m={}): support {} (want {}), chi2 p={:.4}",
            n, m, rep.support, want_support, rep.p_value
        ));
    }
    let elapsed = t.elapsed().as_secs_f64();
    pass &= elapsed < 60.0;
    let detail = format!("{}; {:.1}s", details.join("; "), elapsed);
    assert!(report(1, pass, &detail), "{}", detail);
}

fn degree_pair(seq: &EdgeSequence) -> (Vec<u32>, Vec<u32>) {
    (seq.out_degrees(), seq.in_degrees())
}

fn total_degrees(seq: &EdgeSequence) -> Vec<u32> {
    let (out, inn) = degree_pair(seq);
    out.iter().zip(&inn).map(|(a, b)| a + b).collect()
}

/// 10^4 fuzzed P-switches preserve (d+, d-) exactly; 10^4 fuzzed L-switches
/// preserve total degrees and never drop a positive d+ or d- to zero.
#[test]
fn criterion_2_switch_invariants() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0002);
    let (n, m) = (8u32, 12usize);
    let mut p_side_violations = 0usize;
    let mut p_total_violations = 0usize;
    for _ in 0..10_000 {
        let mut slots: Vec<u32> = (0..2 * m).map(|_| rng.gen_range(0..n)).collect();
        // plant a parallel non-loop pair at positions 0 and 1
        let x = rng.gen_range(0..n);
        let y = (x + 1 + rng.gen_range(0..n - 1)) % n;
        slots[0] = x;
        slots[1] = y;
        slots[2] = x;
        slots[3] = y;
        let seq = EdgeSequence::new(n as usize, slots);
        let out = p_switch(&seq, 0, 1).expect("planted parallel pair");
        if degree_pair(&out) != degree_pair(&seq) {
            p_side_violations += 1;
        }
        if total_degrees(&out) != total_degrees(&seq) {
            p_total_violations += 1;
        }
    }
    let mut l_violations = 0usize;
    for _ in 0..10_000 {
        let mut slots: Vec<u32> = (0..2 * m).map(|_| rng.gen_range(0..n)).collect();
        let x = rng.gen_range(0..n);
        slots[0] = x;
        slots[1] = x; // loop at position 0
        let a = rng.gen_range(0..n);
        let b = (a + 1 + rng.gen_range(0..n - 1)) % n;
        slots[2] = a;
        slots[3] = b; // non-loop at position 1
        let seq = EdgeSequence::new(n as usize, slots);
        let out = l_switch(&seq, 0, 1).expect("planted loop and non-loop");
        if total_degrees(&out) != total_degrees(&seq) {
            l_violations += 1;
        }
        let (bo, bi) = degree_pair(&seq);
        let (ao, ai) = degree_pair(&out);
        for v in 0..n as usize {
            if (bo[v] > 0 && ao[v] == 0) || (bi[v] > 0 && ai[v] == 0) {
                l_violations += 1;
            }
        }
    }
    let elapsed = t.elapsed().as_secs_f64();
    let pass = p_side_violations == 0
        && p_total_violations == 0
        && l_violations == 0
        && elapsed < 10.0;
    let detail = format!(
        "P-switch per-side degree violations {}/10000 (total-degree violations {}), \
         L-switch violations {}; {:.1}s",
        p_side_violations, p_total_violations, l_violations, elapsed
    );
    assert!(report(2, pass, &detail), "{}", detail);
}

/// Exact DP value of P(sum of n truncated Poissons = m) at (100, 300)
/// matches the local-CLT estimate 1/(sigma sqrt(2 pi n)) within 5%.
#[test]
fn criterion_3_local_clt() {
    let t = Instant::now();
    let (n, m) = (100usize, 300usize);
    let model = solve_z(m as f64 / n as f64, 1e-12).unwrap();
    let exact = local_clt_probability(n, m, &model);
    let estimate =
        1.0 / (model.sigma2.sqrt() * (2.0 * std::f64::consts::PI * n as f64).sqrt());
    let rel = (exact / estimate - 1.0).abs();
    let elapsed = t.elapsed().as_secs_f64();
    let pass = rel <= 0.05 && elapsed < 5.0;
    let detail = format!(
        "P(sum=m) exact {:.6e} vs 1/(sigma sqrt(2 pi n)) {:.6e}, rel err {:.4}; {:.1}s",
        exact, estimate, rel, elapsed
    );
    assert!(report(3, pass, &detail), "{}", detail);
}

/// Counting: |Omega_1|(100,300) within 5% of its local-CLT asymptotic, the
/// exact digraph count 9 at (3,4), and |log(exact/asymptotic)| for the
/// simple-digraph counts non-increasing as n doubles 50 -> 400 at m = 3n.
#[test]
fn criterion_4_counting() {
    let t = Instant::now();
    let rep = count_asymptotic(100, 300, false).unwrap();
    let omega1_rel = ((rep.omega1_exact_log - rep.omega1_asymptotic_log).exp() - 1.0).abs();
    let small_count = enumerate_digraphs(3, 4).unwrap().count();
    let mut diffs = Vec::new();
    for &n in &[50usize, 100, 200, 400] {
        let r = count_asymptotic(n, 3 * n, true).unwrap();
        diffs.push((r.exact_log.unwrap() - r.asymptotic_log).abs());
    }
    let trend_ok = diffs.windows(2).all(|w| w[1] <= w[0] + 1e-9);
    let elapsed = t.elapsed().as_secs_f64();
    let pass = omega1_rel <= 0.05 && small_count == 9 && trend_ok && elapsed < 120.0;
    let detail = format!(
        "|Omega_1| rel err {:.4}; count(3,4) = {} (want 9); |log ratio| at n=50..400: \
         {:?} (non-increasing: {}); {:.1}s",
        omega1_rel, small_count, diffs, trend_ok, elapsed
    );
    assert!(report(4, pass, &detail), "{}", detail);
}

/// Obstruction law at n = 10^5, c = 0, 2000 trials: mean in [0.105, 0.145],
/// zero-class frequency within 0.03 of e^{-1/8}, dispersion in [0.8, 1.2].
#[test]
fn criterion_5_obstruction_law() {
    let t = Instant::now();
    let config = ExperimentConfig {
        n: 100_000,
        c_values: vec![0.0],
        trials: 2000,
        base_seed: 0xACCE_0005,
        profile: Profile::Desk,
        estimator: Estimator::ObstructionCount,
        exact_fallback: false,
    };
    let result = run_obstruction_law(&config).unwrap();
    let point = &result.points[0];
    let mean = point.mean.unwrap_or(f64::NAN);
    let zero = point.p_hat;
    let dispersion = point.dispersion.unwrap_or(f64::NAN);
    let target_zero = (-0.125f64).exp();
    let elapsed = t.elapsed().as_secs_f64();
    let mean_ok = (0.105..=0.145).contains(&mean);
    let zero_ok = (zero - target_zero).abs() <= 0.03;
    let disp_ok = (0.8..=1.2).contains(&dispersion);
    let pass = mean_ok && zero_ok && disp_ok && elapsed < 1800.0;
    let detail = format!(
        "mean {:.4} (want [0.105, 0.145]: {}), zero-class {:.4} vs {:.4} (within 0.03: {}), \
         dispersion {:.3} (want [0.8, 1.2]: {}); {:.0}s",
        mean, mean_ok, zero, target_zero, zero_ok, dispersion, disp_ok, elapsed
    );
    assert!(report(5, pass, &detail), "{}", detail);
}

/// Threshold curve at n = 10^3: engine success within 0.08 of
/// e^{-e^{-c}/8} at c in {0, 1, 2} and monotone over c in {-2..2};
/// at n = 100 with exact fallback, within 0.10.
#[test]
fn criterion_6_threshold_curve() {
    let t = Instant::now();
    let config = ExperimentConfig {
        n: 1000,
        c_values: vec![-2.0, -1.0, 0.0, 1.0, 2.0],
        trials: 500,
        base_seed: 0xACCE_0006,
        profile: Profile::Desk,
        estimator: Estimator::EngineHamiltonicity,
        exact_fallback: false,
    };
    let result = run_threshold(&config).unwrap();
    let p: Vec<f64> = result.points.iter().map(|pt| pt.p_hat).collect();
    let monotone = p.windows(2).all(|w| w[1] >= w[0] - 1e-9);
    let mut curve_ok = true;
    let mut curve_detail = Vec::new();
    for pt in result.points.iter().filter(|pt| pt.c >= 0.0) {
        let err = (pt.p_hat - pt.prediction).abs();
        curve_ok &= err <= 0.08;
        curve_detail.push(format!("c={}: {:.3} vs {:.3}", pt.c, pt.p_hat, pt.prediction));
    }
    let small = ExperimentConfig {
        n: 100,
        c_values: vec![0.0, 1.0, 2.0],
        trials: 500,
        base_seed: 0xACCE_0106,
        profile: Profile::Desk,
        estimator: Estimator::EngineHamiltonicity,
        exact_fallback: true,
    };
    let small_result = run_threshold(&small).unwrap();
    let mut small_ok = true;
    let mut small_detail = Vec::new();
    for pt in &small_result.points {
        let err = (pt.p_hat - pt.prediction).abs();
        small_ok &= err <= 0.10;
        small_detail.push(format!("c={}: {:.3} vs {:.3}", pt.c, pt.p_hat, pt.prediction));
    }
    let elapsed = t.elapsed().as_secs_f64();
    let pass = monotone && curve_ok && small_ok && elapsed < 3600.0;
    let detail = format!(
        "n=1000 curve {:?} monotone {}, c>=0 within 0.08: {} [{}]; \
         n=100 exact-fallback within 0.10: {} [{}]; {:.0}s",
        p,
        monotone,
        curve_ok,
        curve_detail.join(", "),
        small_ok,
        small_detail.join(", "),
        elapsed
    );
    assert!(report(6, pass, &detail), "{}", detail);
}

/// Certificate soundness: an obstruction always certifies non-Hamiltonicity,
/// over every enumerable instance at (3,4), (4,6), (5,8) and 500 sampled
/// instances at n = 100.
#[test]
fn criterion_7_certificate_soundness() {
    let t = Instant::now();
    let mut violations = 0usize;
    let mut checked = 0usize;
    for &(n, m) in &[(3usize, 4usize), (4, 6), (5, 8)] {
        for d in enumerate_digraphs(n, m).unwrap() {
            checked += 1;
            if detect_obstruction(&d) > 0 && exact_hamiltonicity(&d).unwrap() {
                violations += 1;
            }
        }
    }
    // sampled n = 100 instances: whenever an obstruction is present, the
    // exact search must never find a Hamilton cycle. A violation would be a
    // found cycle, which the search reaches quickly, so a bounded budget
    // keeps the check sound; exhaustion without a cycle is "unresolved".
    let n = 100;
    let m = Parameters::edge_count_for(n, 0.0);
    let params = Parameters::new(n, m, Profile::Desk);
    let mut sampled_violations = 0usize;
    let mut with_obstruction = 0usize;
    let mut unresolved = 0usize;
    for i in 0..500 {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(0xACCE_0007, i));
        let (d, _) = DigraphSampler::new(n, m, &params).unwrap().sample(&mut rng).unwrap();
        if detect_obstruction(&d) == 0 {
            continue;
        }
        with_obstruction += 1;
        match exact_hamiltonicity_budgeted(&d, 10_000_000) {
            Ok(true) => sampled_violations += 1,
            Ok(false) => {}
            Err(_) => unresolved += 1,
        }
    }
    let elapsed = t.elapsed().as_secs_f64();
    let pass =
        violations == 0 && sampled_violations == 0 && with_obstruction > 0 && elapsed < 300.0;
    let detail = format!(
        "{} enumerated instances, {} violations; n=100: {} of 500 samples had an \
         obstruction, {} violations, {} unresolved; {:.0}s",
        checked, violations, with_obstruction, sampled_violations, unresolved, elapsed
    );
    assert!(report(7, pass, &detail), "{}", detail);
}

/// Engine validity: every cycle returned by find_hamilton verifies.
#[test]
fn criterion_8_engine_validity() {
    let mut bad = 0usize;
    let mut found = 0usize;
    for (n, c, trials, fallback) in
        [(1000usize, 2.0f64, 100usize, false), (400, 0.0, 100, false), (100, 1.0, 100, true)]
    {
        let m = Parameters::edge_count_for(n, c);
        let params = Parameters::new(n, m, Profile::Desk);
        let policy = FindPolicy {
            exact_fallback: fallback,
            oracle_budget: 2_000_000,
            ..FindPolicy::default()
        };
        for i in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(0xACCE_0008, i));
            let (d, _) = DigraphSampler::new(n, m, &params).unwrap().sample(&mut rng).unwrap();
            let res = find_hamilton(&d, &params, &mut rng, &policy);
            if let Some(cycle) = &res.cycle {
                found += 1;
                if !verify_hamilton_cycle(&d, cycle) {
                    bad += 1;
                }
            }
        }
    }
    let pass = bad == 0 && found > 0;
    let detail = format!("{} returned cycles, {} failed verification", found, bad);
    assert!(report(8, pass, &detail), "{}", detail);
}

fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

/// Performance: sample + find_hamilton at n = 10^5, threshold density,
/// completes in <= 60 s per trial within 1 GB peak memory.
#[test]
fn criterion_9_performance() {
    let n = 100_000usize;
    let m = Parameters::edge_count_for(n, 0.0);
    let params = Parameters::new(n, m, Profile::Desk);
    let mut worst = 0.0f64;
    for i in 0..3u64 {
        let t = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0009 + i);
        let (d, _) = DigraphSampler::new(n, m, &params).unwrap().sample(&mut rng).unwrap();
        let _ = find_hamilton(&d, &params, &mut rng, &FindPolicy::default());
        worst = worst.max(t.elapsed().as_secs_f64());
    }
    let rss = peak_rss_bytes();
    let rss_ok = rss.map(|b| b <= 1 << 30).unwrap_or(true);
    let pass = worst <= 60.0 && rss_ok;
    let detail = format!(
        "worst of 3 trials {:.1}s (limit 60s); peak RSS {} (limit 1 GiB)",
        worst,
        rss.map(|b| format!("{:.0} MiB", b as f64 / (1 << 20) as f64))
            .unwrap_or_else(|| "unavailable".into())
    );
    assert!(report(9, pass, &detail), "{}", detail);
}
