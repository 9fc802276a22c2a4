use std::process::ExitCode;
use std::time::Instant;

use peerbias::assignment::{hungarian_max, solve_tpms, total_score, SimilarityMatrix};
use peerbias::design::{
    bind_tuples, exact_match, greedy_match, run_procedure1, simulate_decisions, tomkins_setup, AssignmentAlgorithm,
};
use peerbias::glm::{fit_logistic, logistic_log_likelihood, logistic_score, DesignMatrix, MAX_ITER, SCORE_TOL};
use peerbias::harness::{run_scenario, ScenarioConfig, ScenarioResult, TestKind};
use peerbias::hypothesis::{
    counting_threshold, multiprop_linear_test, multiprop_logistic_test, or_keep_null, permutation_two_sample,
    PermutationPlan,
};
use peerbias::models::{gen_extended_logistic_counterexample, gen_multiprop_linear, gen_multiprop_logistic, logistic, random_properties};
use peerbias::types::{PropertyVector, TupleSet};
use peerbias::{Result, RngStream};
use rand::Rng;

const ITERATIONS: usize = 5000;

type Check = fn() -> Result<Verdict>;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn scenario(id: &str, grid: Option<Vec<f64>>, edit: impl FnOnce(&mut ScenarioConfig)) -> Result<ScenarioResult> {
    let mut cfg = ScenarioConfig::registered(id)?;
    cfg.iterations = ITERATIONS;
    if let Some(g) = grid {
        cfg.grid = g;
    }
    edit(&mut cfg);
    run_scenario(&cfg)
}

fn rate(r: &ScenarioResult, test: TestKind, x: f64) -> f64 {
    r.rate(test, x).unwrap_or(f64::NAN)
}

fn rates(r: &ScenarioResult, test: TestKind, grid: &[f64]) -> Vec<f64> {
    grid.iter().map(|&x| rate(r, test, x)).collect()
}

fn nondecreasing(v: &[f64], slack: f64) -> bool {
    v.windows(2).all(|p| p[1] >= p[0] - slack)
}

fn fmt(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", parts.join(", "))
}

fn null_calibration() -> Result<Verdict> {
    let t = Instant::now();
    let r = scenario("null-calibration", None, |_| {})?;
    let d = rate(&r, TestKind::Disagreement, 0.5);
    let c = rate(&r, TestKind::Counting, 0.5);
    let secs = t.elapsed().as_secs_f64();
    Ok(Verdict::new(
        d <= 0.06 && c <= 0.06,
        format!("disagreement {d:.4}, counting {c:.4} (limit 0.06), {secs:.1}s"),
    ))
}

fn measurement_error() -> Result<Verdict> {
    let r = scenario("fig2a", None, |_| {})?;
    let grid = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5];
    let base = rates(&r, TestKind::Baseline, &grid);
    let dis = rates(&r, TestKind::Disagreement, &grid);
    let pass = base[5] >= 0.15 && nondecreasing(&base, 0.02) && dis.iter().all(|&d| (0.03..=0.07).contains(&d));
    Ok(Verdict::new(pass, format!("baseline {}, disagreement {}", fmt(&base), fmt(&dis))))
}

fn mismatch_and_calibration() -> Result<Verdict> {
    let cubic = scenario("fig2b", Some(vec![0.5]), |_| {})?;
    let calib = scenario("fig2c", Some(vec![40.0]), |_| {})?;
    let (b1, d1) = (rate(&cubic, TestKind::Baseline, 0.5), rate(&cubic, TestKind::Disagreement, 0.5));
    let (b2, d2) = (rate(&calib, TestKind::Baseline, 40.0), rate(&calib, TestKind::Disagreement, 40.0));
    Ok(Verdict::new(
        b1 >= 0.15 && d1 <= 0.06 && b2 >= 0.15 && d2 <= 0.06,
        format!("cubic baseline {b1:.4} disagreement {d1:.4}; calibration baseline {b2:.4} disagreement {d2:.4}"),
    ))
}

fn setup_effects() -> Result<Verdict> {
    let bids = scenario("fig3a", None, |_| {})?;
    let adv = scenario("fig3b", None, |_| {})?;
    let both = |r: &ScenarioResult, x: f64| (rate(r, TestKind::Baseline, x), rate(r, TestKind::Disagreement, x));
    let (nb_b, nb_d) = both(&bids, 0.0);
    let (bl_b, bl_d) = both(&bids, 1.0);
    let (tk_b, tk_d) = both(&adv, 0.0);
    let (p1_b, p1_d) = both(&adv, 1.0);
    let pass = nb_b > 0.10
        && nb_d > 0.10
        && bl_b <= 0.06
        && bl_d <= 0.06
        && tk_b > 0.10
        && tk_d > 0.10
        && p1_b <= 0.06
        && p1_d <= 0.06;
    Ok(Verdict::new(
        pass,
        format!(
            "non-blind {nb_b:.4}/{nb_d:.4}, blind {bl_b:.4}/{bl_d:.4}, tomkins {tk_b:.4}/{tk_d:.4}, procedure1 {p1_b:.4}/{p1_d:.4} (baseline/disagreement)"
        ),
    ))
}

fn power_ordering() -> Result<Verdict> {
    let noisy = scenario("fig4a", Some(vec![1000.0]), |_| {})?;
    let exact = scenario("fig4b", None, |_| {})?;
    let grid = [200.0, 400.0, 600.0, 800.0, 1000.0];
    let gap = rate(&noisy, TestKind::Disagreement, 1000.0) - rate(&noisy, TestKind::Baseline, 1000.0);
    let base = rates(&exact, TestKind::Baseline, &grid);
    let dis = rates(&exact, TestKind::Disagreement, &grid);
    let cnt = rates(&exact, TestKind::Counting, &grid);
    let ordered = base[4] >= dis[4] && dis[4] >= cnt[4];
    let monotone = [&base, &dis, &cnt].iter().all(|v| nondecreasing(v, 0.03));
    Ok(Verdict::new(
        gap >= 0.1 && ordered && monotone,
        format!(
            "noisy gap {gap:.4}; exact baseline {}, disagreement {}, counting {}",
            fmt(&base),
            fmt(&dis),
            fmt(&cnt)
        ),
    ))
}

fn duality() -> Result<Verdict> {
    let linear = scenario("fig5a", None, |_| {})?;
    let logistic = scenario("fig5b", None, |_| {})?;
    let c1 = rate(&linear, TestKind::Counting, 1.0);
    let d1 = rate(&linear, TestKind::Disagreement, 1.0);
    let c2 = rate(&linear, TestKind::Counting, 2.0);
    let d2 = rate(&linear, TestKind::Disagreement, 2.0);
    let same = linear
        .rows
        .iter()
        .zip(&logistic.rows)
        .all(|(a, b)| a.test == b.test && a.sweep_value == b.sweep_value && a.rejection_rate == b.rejection_rate);
    let pass = c1 <= 0.06 && d1 >= 0.5 && d2 <= 0.06 && c2 >= 0.5 && same;
    Ok(Verdict::new(
        pass,
        format!(
            "instance 1 counting {c1:.4} disagreement {d1:.4}; instance 2 counting {c2:.4} disagreement {d2:.4}; readings agree: {same}"
        ),
    ))
}

fn proposition_b() -> Result<Verdict> {
    let r = scenario("proposition-b", None, |_| {})?;
    let grid = [1.0, 2.0, 3.0];
    let d = rates(&r, TestKind::Disagreement, &grid);
    let c = rates(&r, TestKind::Counting, &grid);
    let pass = d.iter().chain(&c).all(|&x| x <= 0.06);
    Ok(Verdict::new(pass, format!("disagreement {}, counting {} over mu {:?}", fmt(&d), fmt(&c), grid)))
}

fn exact_values() -> Result<Verdict> {
    let thr = counting_threshold(20, 20, 0.05);
    let p = permutation_two_sample(&[1.0, 1.0], &[0.0, 0.0], 0.05, &PermutationPlan::exact(RngStream::new(0)))?
        .outcome
        .p_value
        .unwrap_or(f64::NAN);
    let w = PropertyVector::new(vec![1, -1])?;
    let (null, _) = gen_extended_logistic_counterexample(&w, 2)?;
    let cells = [
        null.pi_db.entry(0, 0),
        null.pi_db.entry(0, 1),
        null.pi_sb.entry(0, 0),
        null.pi_sb.entry(0, 1),
    ];
    let expected = [logistic(-1.0), 0.5, 0.5, logistic(1.0)];
    let matrices = cells.iter().zip(&expected).all(|(a, b)| (a - b).abs() <= 1e-6)
        && (cells[0] - 0.2689414).abs() <= 1e-6
        && (cells[3] - 0.7310586).abs() <= 1e-6;
    Ok(Verdict::new(
        (thr - 0.8589388166934752).abs() <= 1e-6 && p == 1.0 / 3.0 && matrices,
        format!("threshold {thr:.9}, p {p}, counterexample cells {}", fmt(&cells)),
    ))
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    permutations(k - 1)
        .into_iter()
        .flat_map(|p| {
            (0..k).map(move |pos| {
                let mut q = p.clone();
                q.insert(pos, k - 1);
                q
            })
        })
        .collect()
}

/// Best injection of the smaller side into the larger one.
fn brute_force_max(rows: usize, cols: usize, weights: &[f64]) -> f64 {
    let (small, large) = (rows.min(cols), rows.max(cols));
    let at = |a: usize, b: usize| if rows <= cols { weights[a * cols + b] } else { weights[b * cols + a] };
    let mut best = f64::NEG_INFINITY;
    for perm in permutations(large) {
        best = best.max((0..small).map(|a| at(a, perm[a])).sum());
    }
    best
}

fn oracles() -> Result<Verdict> {
    let mut r = RngStream::new(9).rng();
    let mut tpms_ok = 0;
    for t in 0..200 {
        let data: Vec<f64> = (0..36).map(|_| r.random::<f64>()).collect();
        let s = SimilarityMatrix::new(6, 6, data.clone())?;
        let ids: Vec<usize> = (0..6).collect();
        let a = solve_tpms(&s, 1, 1, &ids, &ids, &RngStream::new(t))?;
        if (total_score(&s, a.pairs()) - brute_force_max(6, 6, &data)).abs() <= 1e-9 {
            tpms_ok += 1;
        }
    }
    let mut hung_ok = 0;
    for t in 0..200 {
        let rows = r.random_range(1..=6);
        let cols = r.random_range(1..=6);
        let data: Vec<f64> = (0..rows * cols).map(|_| r.random_range(-1.0..1.0)).collect();
        let m = hungarian_max(rows, cols, &data, &RngStream::new(t))?;
        let got: f64 = m.iter().map(|&(a, b)| data[a * cols + b]).sum();
        if m.len() == rows.min(cols) && (got - brute_force_max(rows, cols, &data)).abs() <= 1e-9 {
            hung_ok += 1;
        }
    }
    let mut exact_ok = 0;
    for t in 0..100 {
        let mu = r.random_range(1..=3);
        let lambda = r.random_range(mu..=4);
        let n: usize = r.random_range(4..=40);
        let half = (n * lambda).div_ceil(mu) + r.random_range(0..4);
        let plan = tomkins_setup(n, 2 * half, lambda, mu, AssignmentAlgorithm::Random, AssignmentAlgorithm::Random, &RngStream::new(t))?;
        let slots = exact_match(&plan.a_sb, &plan.a_db, &RngStream::new(1000 + t))?;
        let papers: std::collections::BTreeSet<_> = slots.iter().map(|s| s.paper).collect();
        if slots.len() == n && papers.len() == n {
            exact_ok += 1;
        }
    }
    let mut greedy_ok = 0;
    for t in 0..100 {
        let mu = r.random_range(1..=3);
        let lambda = r.random_range(1..=3);
        let n: usize = r.random_range(8..=60);
        let half = (n * lambda).div_ceil(mu) + r.random_range(0..4);
        let w = PropertyVector::new((0..n).map(|_| if r.random::<f64>() < 0.4 { 1 } else { -1 }).collect())?;
        let plan = tomkins_setup(n, 2 * half, lambda, mu, AssignmentAlgorithm::Random, AssignmentAlgorithm::Random, &RngStream::new(t))?;
        let slots = greedy_match(&plan.a_sb, &plan.a_db, &w, &RngStream::new(2000 + t));
        let j = w.satisfying(0).len();
        let bound = j.min(n - j) / (4 * mu);
        let plus = slots.iter().filter(|s| w.get(s.paper) == 1).count();
        if plus >= bound && slots.len() - plus >= bound {
            greedy_ok += 1;
        }
    }
    Ok(Verdict::new(
        tpms_ok == 200 && hung_ok == 200 && exact_ok == 100 && greedy_ok == 100,
        format!("tpms {tpms_ok}/200, hungarian {hung_ok}/200, exact_match {exact_ok}/100, greedy bound {greedy_ok}/100"),
    ))
}

fn gradient_check() -> Result<(bool, f64)> {
    let mut r = RngStream::new(21).rng();
    let n = 300;
    let x1: Vec<f64> = (0..n).map(|_| r.random_range(-2.0..2.0)).collect();
    let x2: Vec<f64> = (0..n).map(|_| if r.random::<bool>() { 1.0 } else { -1.0 }).collect();
    let y: Vec<u8> = (0..n).map(|i| u8::from(r.random::<f64>() < logistic(0.3 + x1[i] - 0.5 * x2[i]))).collect();
    let design = DesignMatrix::from_columns(&[vec![1.0; n], x1, x2])?;
    let fit = fit_logistic(&design, &y, SCORE_TOL, MAX_ITER)?;
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for shift in [0.0, 0.1, -0.25, 0.5] {
        let beta: Vec<f64> = fit.coefficients.iter().enumerate().map(|(k, b)| b + shift * (k as f64 + 1.0)).collect();
        let grad = logistic_score(&design, &y, &beta)?;
        for k in 0..beta.len() {
            let h = 1e-5;
            let mut up = beta.clone();
            let mut down = beta.clone();
            up[k] += h;
            down[k] -= h;
            let fd = (logistic_log_likelihood(&design, &y, &up)? - logistic_log_likelihood(&design, &y, &down)?) / (2.0 * h);
            let err = (grad[k] - fd).abs() / fd.abs().max(1.0);
            worst = worst.max(err);
            ok &= err <= 1e-5;
        }
    }
    Ok((ok, worst))
}

fn numerics() -> Result<Verdict> {
    let (grad_ok, worst) = gradient_check()?;
    let r = scenario("fig1c", Some(vec![1000.0]), |c| {
        c.params.insert("beta2".into(), 0.0);
        c.tests = vec![TestKind::Baseline];
    })?;
    let b = rate(&r, TestKind::Baseline, 1000.0);
    Ok(Verdict::new(
        grad_ok && (b - 0.05).abs() <= 0.01,
        format!("gradient worst relative error {worst:.2e}; exact-model baseline {b:.4} (target 0.05 +/- 0.01)"),
    ))
}

#[derive(Clone, Copy)]
enum Reading {
    Linear,
    Logistic,
}

fn multiprop_rate(n: usize, iterations: usize, coefs: [f64; 2], reading: Reading, seed: u64) -> Result<f64> {
    let root = RngStream::new(seed);
    let mut rejections = 0usize;
    for it in 0..iterations {
        let s = root.derive(it as u64);
        let mut r = s.derive_str("world").rng();
        let w = random_properties(n, 2, &mut r)?;
        let m = 2 * n;
        let inst = match reading {
            Reading::Linear => {
                let q = (0..n).map(|_| r.random_range(0.3..0.7)).collect();
                gen_multiprop_linear(q, w, m, 0.05, &coefs)?
            }
            Reading::Logistic => {
                let q = (0..n).map(|_| r.random_range(-2.0..2.0)).collect();
                gen_multiprop_logistic(q, w, m, 0.0, 0.5, 1.0, &coefs)?
            }
        };
        let plan = run_procedure1(n, m, 1, 1, &inst.w, AssignmentAlgorithm::Random, &s.derive_str("setup"))?;
        let decisions = simulate_decisions(plan.a_full.pairs(), &plan.allocation, &inst.pi_sb, &inst.pi_db, &s.derive_str("decisions"))?;
        let tuples: TupleSet = bind_tuples(&plan.slots, &decisions, &inst.w, false)?;
        let outcome = match reading {
            Reading::Linear => or_keep_null(multiprop_linear_test(&tuples, 0, 0.05)),
            Reading::Logistic => or_keep_null(multiprop_logistic_test(&tuples, 0, 0.05)),
        };
        rejections += usize::from(outcome.reject);
    }
    Ok(rejections as f64 / iterations as f64)
}

fn multi_property() -> Result<Verdict> {
    let lin_null = multiprop_rate(1000, ITERATIONS, [0.0, 0.1], Reading::Linear, 11)?;
    let log_null = multiprop_rate(1000, ITERATIONS, [0.0, 0.5], Reading::Logistic, 12)?;
    let power = multiprop_rate(4000, 1000, [0.1, 0.0], Reading::Linear, 13)?;
    let log_power = multiprop_rate(4000, 1000, [0.1, 0.0], Reading::Logistic, 14)?;
    Ok(Verdict::new(
        lin_null <= 0.06 && log_null <= 0.06 && power >= 0.8,
        format!(
            "linear null {lin_null:.4}, logistic null {log_null:.4}, linear power at n=4000 {power:.4} (logistic reading, informational: {log_power:.4})"
        ),
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 11] = [
        ("null calibration", null_calibration),
        ("measurement error", measurement_error),
        ("cubic mismatch and calibration", mismatch_and_calibration),
        ("setup effects", setup_effects),
        ("power ordering", power_ordering),
        ("duality", duality),
        ("proposition B", proposition_b),
        ("exact unit values", exact_values),
        ("oracle equivalence", oracles),
        ("numerics", numerics),
        ("multi-property", multi_property),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let verdict = check().unwrap_or_else(|e| Verdict::new(false, format!("error: {e}")));
        failed += usize::from(!verdict.pass);
        println!(
            "criterion {:>2} {}: {} ({}; {:.1}s)",
            k + 1,
            if verdict.pass { "PASS" } else { "FAIL" },
            name,
            verdict.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
