//! Bias tests on decision tuples: the Disagreement permutation test, the
//! Counting test with its Hoeffding threshold, the logistic-regression Wald
//! baseline, and the multi-property regression transforms.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::glm::{self, DesignMatrix, MAX_ITER, SCORE_TOL};
use crate::rng::RngStream;
use crate::types::{
    validate_tuple_set, Decisions, PaperId, PropertyVector, ReviewerId, TestOutcome, TupleSet,
};

pub const DEFAULT_ENUMERATION_CAP: u64 = 100_000;
pub const DEFAULT_PERMUTATIONS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PermutationMode {
    /// Exact when cheap, Monte Carlo otherwise.
    Auto,
    /// Exact p-value; fails when neither enumeration nor the two-valued
    /// closed form applies.
    Exact,
    MonteCarlo,
}

/// How a permutation p-value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PermutationMethod {
    /// Every split of the pooled sample visited.
    Enumeration,
    /// Pooled sample takes at most two values: the split statistic is a
    /// function of a hypergeometric count, summed exactly.
    Hypergeometric,
    /// Random splits with the observed labelling counted (add-one).
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PermutationPlan {
    pub mode: PermutationMode,
    pub num_permutations: usize,
    pub enumeration_cap: u64,
    pub rng: RngStream,
}

impl PermutationPlan {
    pub fn new(rng: RngStream) -> Self {
        Self {
            mode: PermutationMode::Auto,
            num_permutations: DEFAULT_PERMUTATIONS,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            rng,
        }
    }

    pub fn exact(rng: RngStream) -> Self {
        Self {
            mode: PermutationMode::Exact,
            ..Self::new(rng)
        }
    }

    pub fn monte_carlo(num_permutations: usize, rng: RngStream) -> Self {
        Self {
            mode: PermutationMode::MonteCarlo,
            num_permutations,
            ..Self::new(rng)
        }
    }

    pub fn with_enumeration_cap(mut self, cap: u64) -> Self {
        self.enumeration_cap = cap;
        self
    }
}

/// Permutation outcome plus the method that produced the p-value.
#[derive(Debug, Clone, PartialEq)]
pub struct PermutationOutcome {
    pub outcome: TestOutcome,
    pub method: PermutationMethod,
}

/// `C(n, k)` if it does not exceed `cap`.
fn binomial_within(n: usize, k: usize, cap: u64) -> Option<u64> {
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) as u128 / (i + 1) as u128;
        if c > u128::from(cap) {
            return None;
        }
    }
    Some(c as u64)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// `|candidate| ≥ |observed|` with a relative allowance for rounding, so
/// that ties are never lost to floating-point noise.
fn at_least_as_extreme(candidate: f64, observed: f64) -> bool {
    candidate.abs() >= observed.abs() - 1e-12 * observed.abs().max(1.0)
}

fn distinct_values(pooled: &[f64]) -> Option<(f64, f64)> {
    let lo = pooled.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = pooled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    pooled
        .iter()
        .all(|&x| x == lo || x == hi)
        .then_some((lo, hi))
}

fn hypergeometric_p(n_u: usize, n_v: usize, lo: f64, hi: f64, high_in_u: usize, high_total: usize, tau: f64) -> f64 {
    if hi == lo {
        return 1.0;
    }
    let n = (n_u + n_v) as u64;
    let ln_total = ln_binomial(n, n_u as u64);
    let kmin = high_total.saturating_sub(n_v);
    let kmax = high_total.min(n_u);
    let split_tau = |k: usize| (hi - lo) * (k as f64 / n_u as f64 - (high_total - k) as f64 / n_v as f64);
    debug_assert!((split_tau(high_in_u) - tau).abs() < 1e-9);
    let p: f64 = (kmin..=kmax)
        .filter(|&k| at_least_as_extreme(split_tau(k), tau))
        .map(|k| {
            (ln_binomial(high_total as u64, k as u64)
                + ln_binomial(n - high_total as u64, (n_u - k) as u64)
                - ln_total)
                .exp()
        })
        .sum();
    p.min(1.0)
}

fn enumeration_p(pooled: &[f64], n_u: usize, tau: f64, count: u64) -> f64 {
    let n = pooled.len();
    let n_v = n - n_u;
    let total: f64 = pooled.iter().sum();
    let mut idx: Vec<usize> = (0..n_u).collect();
    let mut extreme = 0u64;
    loop {
        let su: f64 = idx.iter().map(|&i| pooled[i]).sum();
        let t = su / n_u as f64 - (total - su) / n_v as f64;
        if at_least_as_extreme(t, tau) {
            extreme += 1;
        }
        // next combination in lexicographic order
        let Some(pos) = (0..n_u).rev().find(|&i| idx[i] != i + n - n_u) else {
            break;
        };
        idx[pos] += 1;
        for j in pos + 1..n_u {
            idx[j] = idx[j - 1] + 1;
        }
    }
    extreme as f64 / count as f64
}

fn monte_carlo_p(pooled: &[f64], n_u: usize, tau: f64, plan: &PermutationPlan) -> f64 {
    let n_v = pooled.len() - n_u;
    let total: f64 = pooled.iter().sum();
    let mut work = pooled.to_vec();
    let mut r = plan.rng.rng();
    let mut extreme = 0usize;
    for _ in 0..plan.num_permutations {
        let (head, _) = work.partial_shuffle(&mut r, n_u);
        let su: f64 = head.iter().sum();
        let t = su / n_u as f64 - (total - su) / n_v as f64;
        if at_least_as_extreme(t, tau) {
            extreme += 1;
        }
    }
    (1 + extreme) as f64 / (1 + plan.num_permutations) as f64
}

/// Two-sided permutation test of `mean(U) − mean(V)`. Ties count toward the
/// p-value.
pub fn permutation_two_sample(u: &[f64], v: &[f64], alpha: f64, plan: &PermutationPlan) -> Result<PermutationOutcome> {
    if u.is_empty() || v.is_empty() {
        return Err(Error::EmptyInput("permutation test needs two nonempty samples"));
    }
    let tau = mean(u) - mean(v);
    let pooled: Vec<f64> = u.iter().chain(v).copied().collect();
    let (n_u, n_v) = (u.len(), v.len());
    let combos = binomial_within(pooled.len(), n_u, plan.enumeration_cap);
    let binary = distinct_values(&pooled);
    let (p, method) = match (plan.mode, combos, binary) {
        (PermutationMode::MonteCarlo, _, _) => (monte_carlo_p(&pooled, n_u, tau, plan), PermutationMethod::MonteCarlo),
        (_, Some(count), _) => (enumeration_p(&pooled, n_u, tau, count), PermutationMethod::Enumeration),
        (_, None, Some((lo, hi))) => {
            let high_in_u = u.iter().filter(|&&x| x == hi).count();
            let high_total = pooled.iter().filter(|&&x| x == hi).count();
            (
                hypergeometric_p(n_u, n_v, lo, hi, high_in_u, high_total, tau),
                PermutationMethod::Hypergeometric,
            )
        }
        (PermutationMode::Auto, None, None) => (monte_carlo_p(&pooled, n_u, tau, plan), PermutationMethod::MonteCarlo),
        (PermutationMode::Exact, None, None) => {
            return Err(Error::InvalidParameter(format!(
                "exact permutation test needs C({}, {n_u}) ≤ {} splits",
                pooled.len(),
                plan.enumeration_cap
            )))
        }
    };
    Ok(PermutationOutcome {
        outcome: TestOutcome {
            reject: p <= alpha,
            statistic: tau,
            p_value: Some(p),
            threshold: None,
            effect_size: tau,
            n_u,
            n_v,
            degenerate: false,
        },
        method,
    })
}

/// SB decisions of disagreeing tuples, split by the sign of the property.
pub fn disagreement_arrays(t: &TupleSet) -> (Vec<f64>, Vec<f64>) {
    let (mut u, mut v) = (Vec::new(), Vec::new());
    for tup in t.iter().filter(|tup| tup.disagrees()) {
        let y = f64::from(tup.sb_decision);
        if tup.w() == 1 {
            u.push(y);
        } else {
            v.push(y);
        }
    }
    (u, v)
}

/// Disagreement test: permutation test on SB decisions of the tuples whose
/// SB and DB decisions differ, `w = +1` against `w = −1`. Keeps the null
/// when either side is empty.
pub fn disagreement_test(t: &TupleSet, alpha: f64, plan: &PermutationPlan) -> Result<TestOutcome> {
    validate_tuple_set(t, None).into_result()?;
    let (u, v) = disagreement_arrays(t);
    if u.is_empty() || v.is_empty() {
        return Ok(TestOutcome::keep_null(u.len(), v.len()));
    }
    Ok(permutation_two_sample(&u, &v, alpha, plan)?.outcome)
}

/// Rejection threshold of the Counting test.
pub fn counting_threshold(n_u: usize, n_v: usize, alpha: f64) -> f64 {
    (2.0 * (1.0 / n_u as f64 + 1.0 / n_v as f64) * (2.0 / alpha).ln()).sqrt()
}

/// Counting test: difference between the `w = +1` and `w = −1` means of
/// `Y − X`, compared with a Hoeffding threshold.
pub fn counting_test(t: &TupleSet, alpha: f64) -> Result<TestOutcome> {
    validate_tuple_set(t, None).into_result()?;
    let (mut u, mut v) = (Vec::new(), Vec::new());
    for tup in t.iter() {
        let d = f64::from(tup.sb_decision) - f64::from(tup.db_decision);
        if tup.w() == 1 {
            u.push(d);
        } else {
            v.push(d);
        }
    }
    if u.is_empty() || v.is_empty() {
        return Ok(TestOutcome::keep_null(u.len(), v.len()));
    }
    let gamma = mean(&u) - mean(&v);
    let threshold = counting_threshold(u.len(), v.len(), alpha);
    Ok(TestOutcome {
        reject: gamma.abs() > threshold,
        statistic: gamma,
        p_value: None,
        threshold: Some(threshold),
        effect_size: gamma,
        n_u: u.len(),
        n_v: v.len(),
        degenerate: false,
    })
}

/// Logistic-regression baseline: regress every SB decision on
/// `(1, q̃_j, w_j)`, optionally with a reviewer factor, and Wald-test the `w`
/// coefficient. Failed fits keep the null and are flagged degenerate.
///
/// With reviewer effects, reviewers whose decisions are all equal carry no
/// information about the shared coefficients (their own intercept diverges),
/// so their rows are dropped before fitting.
pub fn tomkins_wald_test(
    sb_decisions: &Decisions,
    q_tilde: &[f64],
    w: &PropertyVector,
    alpha: f64,
    reviewer_fixed_effects: bool,
) -> Result<TestOutcome> {
    if q_tilde.len() != w.num_papers() {
        return Err(Error::DimensionMismatch(format!(
            "{} scores for {} papers",
            q_tilde.len(),
            w.num_papers()
        )));
    }
    let mut rows: Vec<(ReviewerId, PaperId, u8)> = sb_decisions.iter().map(|((i, j), y)| (i, j, y)).collect();
    if let Some(&(_, j, _)) = rows.iter().find(|&&(_, j, _)| j >= q_tilde.len()) {
        return Err(Error::DimensionMismatch(format!("decision for unknown paper {j}")));
    }
    if reviewer_fixed_effects {
        let mut seen: std::collections::BTreeMap<ReviewerId, (usize, usize)> = Default::default();
        for &(i, _, y) in &rows {
            let e = seen.entry(i).or_default();
            e.0 += 1;
            e.1 += usize::from(y);
        }
        rows.retain(|(i, _, _)| {
            let (n, ones) = seen[i];
            ones > 0 && ones < n
        });
    }
    let n_u = rows.iter().filter(|r| w.get(r.1) == 1).count();
    let n_v = rows.len() - n_u;
    let design = DesignMatrix::from_columns(&[
        vec![1.0; rows.len()],
        rows.iter().map(|r| q_tilde[r.1]).collect(),
        rows.iter().map(|r| f64::from(w.get(r.1))).collect(),
    ])?;
    let design = if reviewer_fixed_effects {
        design.with_factor(&rows.iter().map(|r| r.0).collect::<Vec<_>>())?
    } else {
        design
    };
    let y: Vec<u8> = rows.iter().map(|r| r.2).collect();
    let outcome = glm::fit_logistic(&design, &y, SCORE_TOL, MAX_ITER).and_then(|fit| glm::wald_test(&fit, 2, alpha));
    Ok(match outcome {
        Ok(o) => TestOutcome { n_u, n_v, ..o },
        Err(_) => TestOutcome::keep_null(n_u, n_v),
    })
}

fn property_design(t: &TupleSet, rows: &[usize]) -> Result<DesignMatrix> {
    let k = t.num_properties();
    let mut cols = vec![vec![1.0; rows.len()]];
    for l in 0..k {
        cols.push(rows.iter().map(|&r| f64::from(t.tuples[r].properties[l])).collect());
    }
    DesignMatrix::from_columns(&cols)
}

fn check_target(t: &TupleSet, target: usize) -> Result<()> {
    let len = t.num_properties();
    if target >= len {
        return Err(Error::IndexOutOfRange { index: target, len });
    }
    if t.iter().any(|tup| tup.properties.len() != len) {
        return Err(Error::DimensionMismatch("tuples carry different property counts".into()));
    }
    Ok(())
}

fn side_counts(t: &TupleSet, rows: &[usize], target: usize) -> (usize, usize) {
    let n_u = rows.iter().filter(|&&r| t.tuples[r].properties[target] == 1).count();
    (n_u, rows.len() - n_u)
}

/// Least squares of `Y − X` on `(1, w⁽¹⁾, …, w⁽ᵏ⁾)`; Wald test of property
/// `target` (zero-based).
pub fn multiprop_linear_test(t: &TupleSet, target: usize, alpha: f64) -> Result<TestOutcome> {
    validate_tuple_set(t, None).into_result()?;
    check_target(t, target)?;
    let rows: Vec<usize> = (0..t.len()).collect();
    let y: Vec<f64> = t
        .iter()
        .map(|tup| f64::from(tup.sb_decision) - f64::from(tup.db_decision))
        .collect();
    let fit = glm::fit_linear(&property_design(t, &rows)?, &y)?;
    let (n_u, n_v) = side_counts(t, &rows, target);
    if fit.std_errors[target + 1] == 0.0 {
        // Y − X constant: no variation to attribute to any property.
        return Ok(TestOutcome::keep_null(n_u, n_v));
    }
    Ok(TestOutcome {
        n_u,
        n_v,
        ..glm::wald_test(&fit, target + 1, alpha)?
    })
}

/// Logistic regression of `Y` on `(1, w⁽¹⁾, …, w⁽ᵏ⁾)` over disagreeing tuples;
/// Wald test of property `target`.
pub fn multiprop_logistic_test(t: &TupleSet, target: usize, alpha: f64) -> Result<TestOutcome> {
    validate_tuple_set(t, None).into_result()?;
    check_target(t, target)?;
    let rows: Vec<usize> = (0..t.len()).filter(|&r| t.tuples[r].disagrees()).collect();
    let (n_u, n_v) = side_counts(t, &rows, target);
    if rows.is_empty() {
        return Ok(TestOutcome::keep_null(n_u, n_v));
    }
    let y: Vec<u8> = rows.iter().map(|&r| t.tuples[r].sb_decision).collect();
    let fit = glm::fit_logistic(&property_design(t, &rows)?, &y, SCORE_TOL, MAX_ITER)?;
    Ok(TestOutcome {
        n_u,
        n_v,
        ..glm::wald_test(&fit, target + 1, alpha)?
    })
}

/// Run a test, turning any failure into a degenerate keep-null outcome.
pub fn or_keep_null(result: Result<TestOutcome>) -> TestOutcome {
    result.unwrap_or_else(|_| TestOutcome::keep_null(0, 0))
}
