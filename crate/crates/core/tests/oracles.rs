use peerbias::assignment::{solve_tpms, total_score, SimilarityMatrix};
use peerbias::glm::{fit_linear, fit_logistic, normal_two_sided_p, DesignMatrix, MAX_ITER, SCORE_TOL};
use peerbias::hypothesis::{counting_threshold, permutation_two_sample, PermutationMethod, PermutationPlan};
use peerbias::models::{
    dual_second_logistic, dual_second_shifts, gen_relative_dual_instances, inter_reviewer_correlation, logistic, logit,
};
use peerbias::RngStream;
use rand::Rng;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// Enumerates every split of the pooled sample.
fn enumerated_p(u: &[f64], v: &[f64]) -> f64 {
    let pooled: Vec<f64> = u.iter().chain(v).copied().collect();
    let n = pooled.len();
    let total: f64 = pooled.iter().sum();
    let stat = |sum_u: f64| (sum_u / u.len() as f64 - (total - sum_u) / v.len() as f64).abs();
    let obs = stat(u.iter().sum());
    let (mut hits, mut all) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != u.len() {
            continue;
        }
        let s: f64 = (0..n).filter(|&k| mask >> k & 1 == 1).map(|k| pooled[k]).sum();
        all += 1;
        hits += u64::from(stat(s) >= obs - 1e-12);
    }
    hits as f64 / all as f64
}

#[test]
fn hypergeometric_route_matches_enumeration() {
    let mut r = RngStream::new(4).rng();
    for _ in 0..150 {
        let nu = r.random_range(1..=8);
        let nv = r.random_range(1..=8);
        let u: Vec<f64> = (0..nu).map(|_| f64::from(u8::from(r.random::<f64>() < 0.6))).collect();
        let v: Vec<f64> = (0..nv).map(|_| f64::from(u8::from(r.random::<f64>() < 0.4))).collect();
        let out = permutation_two_sample(&u, &v, 0.05, &PermutationPlan::exact(RngStream::new(0))).unwrap();
        let p = out.outcome.p_value.unwrap();
        assert!(close(p, enumerated_p(&u, &v), 1e-12), "{u:?} {v:?}");
    }
}

#[test]
fn enumeration_route_matches_brute_force() {
    let mut r = RngStream::new(8).rng();
    for _ in 0..100 {
        let nu = r.random_range(1..=6);
        let nv = r.random_range(1..=6);
        let u: Vec<f64> = (0..nu).map(|_| f64::from(r.random_range(0..4u8))).collect();
        let v: Vec<f64> = (0..nv).map(|_| f64::from(r.random_range(0..4u8))).collect();
        let out = permutation_two_sample(&u, &v, 0.05, &PermutationPlan::exact(RngStream::new(0))).unwrap();
        if out.method == PermutationMethod::Enumeration {
            assert!(close(out.outcome.p_value.unwrap(), enumerated_p(&u, &v), 1e-12));
        }
    }
}

#[test]
fn permutation_exact_small_values() {
    let plan = PermutationPlan::exact(RngStream::new(0));
    let p = permutation_two_sample(&[1.0, 1.0], &[0.0, 0.0], 0.05, &plan).unwrap().outcome.p_value.unwrap();
    assert_eq!(p, 1.0 / 3.0);
    let ones = [1.0; 10];
    let zeros = [0.0; 10];
    let p = permutation_two_sample(&ones, &zeros, 0.05, &plan).unwrap().outcome.p_value.unwrap();
    assert!(close(p, 2.0 / 184_756.0, 1e-15));
}

#[test]
fn counting_threshold_values() {
    assert!(close(counting_threshold(20, 20, 0.05), 0.8589388166934752, 1e-12));
    let direct = (2.0 * (1.0 / 50.0 + 1.0 / 80.0) * (2.0f64 / 0.01).ln()).sqrt();
    assert!(close(counting_threshold(50, 80, 0.01), direct, 1e-14));
}

#[test]
fn wald_boundary() {
    assert!(close(normal_two_sided_p(1.959963984540054), 0.05, 1e-10));
    assert!(close(normal_two_sided_p(0.0), 1.0, 1e-15));
}

#[test]
fn intercept_only_logistic_is_logit_of_mean() {
    let y: Vec<u8> = (0..37).map(|k| u8::from(k % 3 == 0)).collect();
    let mean = y.iter().map(|&v| f64::from(v)).sum::<f64>() / y.len() as f64;
    let design = DesignMatrix::from_columns(&[vec![1.0; y.len()]]).unwrap();
    let fit = fit_logistic(&design, &y, SCORE_TOL, MAX_ITER).unwrap();
    assert!(close(fit.coefficients[0], logit(mean), 1e-9));
    let se = 1.0 / (y.len() as f64 * mean * (1.0 - mean)).sqrt();
    assert!(close(fit.std_errors[0], se, 1e-8));
}

#[test]
fn binary_covariate_logistic_matches_group_logits() {
    let x: Vec<f64> = (0..60).map(|k| if k < 25 { 1.0 } else { 0.0 }).collect();
    let y: Vec<u8> = (0..60).map(|k| u8::from(if k < 25 { k % 5 != 0 } else { k % 4 == 0 })).collect();
    let rate = |on: bool| {
        let ys: Vec<f64> = x.iter().zip(&y).filter(|(&xi, _)| (xi == 1.0) == on).map(|(_, &v)| f64::from(v)).collect();
        ys.iter().sum::<f64>() / ys.len() as f64
    };
    let design = DesignMatrix::from_columns(&[vec![1.0; 60], x.clone()]).unwrap();
    let fit = fit_logistic(&design, &y, SCORE_TOL, MAX_ITER).unwrap();
    assert!(close(fit.coefficients[0], logit(rate(false)), 1e-9));
    assert!(close(fit.coefficients[1], logit(rate(true)) - logit(rate(false)), 1e-9));
}

#[test]
fn simple_regression_closed_form() {
    let mut r = RngStream::new(2).rng();
    let x: Vec<f64> = (0..80).map(|_| r.random_range(-1.0..1.0)).collect();
    let y: Vec<f64> = x.iter().map(|&v| 0.4 - 1.3 * v + r.random_range(-0.2..0.2)).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(&y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let se_slope = (rss / (n - 2.0) / sxx).sqrt();
    let fit = fit_linear(&DesignMatrix::from_columns(&[vec![1.0; x.len()], x]).unwrap(), &y).unwrap();
    assert!(close(fit.coefficients[0], intercept, 1e-10));
    assert!(close(fit.coefficients[1], slope, 1e-10));
    assert!(close(fit.std_errors[1], se_slope, 1e-10));
}

/// Every way to give each paper `lambda` distinct reviewers within load `mu`.
fn best_assignment(s: &[f64], m: usize, n: usize, lambda: usize, mu: usize) -> f64 {
    let subsets: Vec<u32> = (0u32..1 << m).filter(|x| x.count_ones() as usize == lambda).collect();
    let mut best = f64::NEG_INFINITY;
    let mut choice = vec![0usize; n];
    loop {
        let mut load = vec![0usize; m];
        for &c in &choice {
            for (i, l) in load.iter_mut().enumerate() {
                *l += (subsets[c] >> i & 1) as usize;
            }
        }
        if load.iter().all(|&l| l <= mu) {
            let subsets = &subsets;
            let total: f64 = choice
                .iter()
                .enumerate()
                .flat_map(|(j, &c)| (0..m).filter(move |&i| subsets[c] >> i & 1 == 1).map(move |i| (i, j)))
                .map(|(i, j)| s[i * n + j])
                .sum();
            best = best.max(total);
        }
        let mut k = 0;
        while k < n {
            choice[k] += 1;
            if choice[k] < subsets.len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
        if k == n {
            return best;
        }
    }
}

#[test]
fn tpms_matches_brute_force_with_larger_loads() {
    let mut r = RngStream::new(6).rng();
    for t in 0..60 {
        let (m, n, lambda, mu) = [(4, 3, 2, 2), (5, 3, 2, 2), (5, 4, 2, 2), (4, 4, 3, 3), (6, 3, 3, 2)][t % 5];
        let data: Vec<f64> = (0..m * n).map(|_| r.random::<f64>()).collect();
        let s = SimilarityMatrix::new(m, n, data.clone()).unwrap();
        let a = solve_tpms(&s, lambda, mu, &(0..m).collect::<Vec<_>>(), &(0..n).collect::<Vec<_>>(), &RngStream::new(t as u64)).unwrap();
        assert!(a.reviewers_by_paper().iter().all(|r| r.len() == lambda));
        assert!(close(total_score(&s, a.pairs()), best_assignment(&data, m, n, lambda, mu), 1e-9));
    }
}

#[test]
fn inter_reviewer_correlation_value() {
    let var = 16.0 / 12.0;
    assert!(close(inter_reviewer_correlation(var, 0.7), var / (var + 0.49), 1e-15));
    assert!(close(inter_reviewer_correlation(var, 0.7), 0.7312614259597806, 1e-12));
}

#[test]
fn dual_instances_read_both_ways() {
    let (nu1, nu2) = dual_second_shifts();
    assert!(close(nu1, 0.2427399633155044, 1e-12));
    assert!(close(nu2, 0.34902102696384263, 1e-12));
    let (b0, b1, nt) = dual_second_logistic();
    let (first, second) = gen_relative_dual_instances(40, 80, &RngStream::new(1)).unwrap();
    for j in 0..40 {
        let q = second.logistic.q_star.as_ref().unwrap()[j];
        assert!(close(second.logistic.pi_db.entry(0, j), logistic(b0 + b1 * q), 1e-12));
        assert!(close(second.logistic.pi_sb.entry(0, j), logistic(b0 + nt + b1 * q), 1e-12));
        let diff = first.linear.pi_sb.entry(0, j) - first.linear.pi_db.entry(0, j);
        assert!(close(diff, 0.175, 1e-12));
    }
    assert_eq!(first.linear.pi_sb, first.logistic.pi_sb);
    assert_eq!(second.linear.pi_db, second.logistic.pi_db);
}
