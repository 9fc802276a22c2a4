//! Generators for the simulated reviewing worlds.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::assignment::{BidMatrix, SimilarityMatrix};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::types::{AcceptanceMatrix, Condition, MatrixKind, PaperId, PropertyVector, ReviewerId};

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Distribution of true paper scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ScoreDistribution {
    Uniform { lo: f64, hi: f64 },
    Constant(f64),
}

impl ScoreDistribution {
    pub fn uniform(lo: f64, hi: f64) -> Self {
        ScoreDistribution::Uniform { lo, hi }
    }

    pub fn sample<R: Rng>(&self, n: usize, r: &mut R) -> Vec<f64> {
        match *self {
            ScoreDistribution::Uniform { lo, hi } => (0..n).map(|_| lo + (hi - lo) * r.random::<f64>()).collect(),
            ScoreDistribution::Constant(c) => vec![c; n],
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            ScoreDistribution::Uniform { lo, hi } => (hi - lo).powi(2) / 12.0,
            ScoreDistribution::Constant(_) => 0.0,
        }
    }

    pub fn center(&self) -> f64 {
        match *self {
            ScoreDistribution::Uniform { lo, hi } => 0.5 * (lo + hi),
            ScoreDistribution::Constant(c) => c,
        }
    }
}

/// Whether SB reviewers are biased with respect to the property.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroundTruth {
    Null,
    BiasFor,
    BiasAgainst,
}

impl GroundTruth {
    pub fn from_sign(x: f64) -> Self {
        if x > 0.0 {
            GroundTruth::BiasFor
        } else if x < 0.0 {
            GroundTruth::BiasAgainst
        } else {
            GroundTruth::Null
        }
    }
}

/// How DB reviewers report a score for the baseline test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DbScoreModel {
    /// The true score is known.
    Exact,
    /// Each DB review reports `q* + N(0, σ)`; the paper's score is the mean.
    Noisy { sigma: f64 },
    /// Each DB review reports its own acceptance probability; the paper's score is the mean.
    AcceptanceProbability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub name: String,
    pub params: BTreeMap<String, f64>,
}

impl Metadata {
    fn new(name: &str, params: &[(&str, f64)]) -> Self {
        Self {
            name: name.to_string(),
            params: params.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub pi_sb: AcceptanceMatrix,
    pub pi_db: AcceptanceMatrix,
    pub w: PropertyVector,
    pub q_star: Option<Vec<f64>>,
    pub db_score_model: DbScoreModel,
    pub ground_truth: GroundTruth,
    pub metadata: Metadata,
}

impl Instance {
    pub fn num_papers(&self) -> usize {
        self.w.num_papers()
    }

    pub fn num_reviewers(&self) -> usize {
        self.pi_db.rows()
    }

    /// Per-paper scores reported by the DB reviewers of each paper.
    pub fn reported_scores(&self, db_reviewers: &[Vec<ReviewerId>], rng: &RngStream) -> Result<Vec<f64>> {
        let n = self.num_papers();
        if db_reviewers.len() != n {
            return Err(Error::DimensionMismatch(format!("{} reviewer lists for {n} papers", db_reviewers.len())));
        }
        let q = || {
            self.q_star
                .as_ref()
                .ok_or_else(|| Error::InvalidParameter("instance has no true scores".into()))
        };
        match self.db_score_model {
            DbScoreModel::Exact => Ok(q()?.clone()),
            DbScoreModel::Noisy { sigma } => {
                let q = q()?;
                let noise = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
                let mut r = rng.rng();
                db_reviewers
                    .iter()
                    .enumerate()
                    .map(|(j, rs)| {
                        if rs.is_empty() {
                            return Err(Error::EmptyInput("DB reviewers of a paper"));
                        }
                        let total: f64 = rs.iter().map(|_| q[j] + noise.sample(&mut r)).sum();
                        Ok(total / rs.len() as f64)
                    })
                    .collect()
            }
            DbScoreModel::AcceptanceProbability => db_reviewers
                .iter()
                .enumerate()
                .map(|(j, rs)| {
                    if rs.is_empty() {
                        return Err(Error::EmptyInput("DB reviewers of a paper"));
                    }
                    Ok(rs.iter().map(|&i| self.pi_db.entry(i, j)).sum::<f64>() / rs.len() as f64)
                })
                .collect(),
        }
    }
}

/// Correlation between two DB reviewers' scores of the same paper when each
/// reports `q* + N(0, σ)`.
pub fn inter_reviewer_correlation(q_variance: f64, sigma: f64) -> f64 {
    q_variance / (q_variance + sigma * sigma)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..0.5).contains(&gamma) {
        return Err(Error::InvalidParameter(format!("γ = {gamma} outside [0, 0.5)")));
    }
    Ok(())
}

/// Papers with `q* < 0` satisfy the property with probability `0.5 − γ`,
/// the rest with probability `0.5 + γ`.
pub fn sample_correlated_w<R: Rng>(q_star: &[f64], gamma: f64, r: &mut R) -> Result<PropertyVector> {
    sample_correlated_w_around(q_star, 0.0, gamma, r)
}

/// As [`sample_correlated_w`], splitting the scores at `center` instead of 0.
pub fn sample_correlated_w_around<R: Rng>(q_star: &[f64], center: f64, gamma: f64, r: &mut R) -> Result<PropertyVector> {
    check_gamma(gamma)?;
    let values = q_star
        .iter()
        .map(|&q| {
            let p = if q < center { 0.5 - gamma } else { 0.5 + gamma };
            if r.random::<f64>() < p {
                1
            } else {
                -1
            }
        })
        .collect();
    PropertyVector::new(values)
}

/// `γ` giving correlation `φ` between `q*` and `w` when `q*` is uniform and
/// symmetric about the split point: `corr = γ√3`.
pub fn gamma_for_target_correlation(phi: f64) -> Result<f64> {
    let gamma = phi / 3f64.sqrt();
    check_gamma(gamma).map_err(|_| Error::InvalidParameter(format!("correlation {phi} is not attainable")))?;
    Ok(gamma)
}

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// Numerical counterpart of [`gamma_for_target_correlation`] for any score
/// distribution: bisection on the Monte Carlo correlation at `n = 10⁵`
/// with common random numbers.
pub fn gamma_for_correlation_mc(dist: ScoreDistribution, center: f64, phi: f64, rng: &RngStream) -> Result<f64> {
    const N: usize = 100_000;
    let mut r = rng.rng();
    let q = dist.sample(N, &mut r);
    let u: Vec<f64> = (0..N).map(|_| r.random()).collect();
    let corr = |gamma: f64| {
        let w: Vec<f64> = q
            .iter()
            .zip(&u)
            .map(|(&qj, &uj)| {
                let p = if qj < center { 0.5 - gamma } else { 0.5 + gamma };
                if uj < p {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        pearson(&q, &w)
    };
    let (mut lo, mut hi) = (0.0, 0.5 - 1e-9);
    if !(corr(lo) - 0.05..=corr(hi)).contains(&phi) {
        return Err(Error::InvalidParameter(format!("correlation {phi} is not attainable")));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if corr(mid) < phi {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn per_paper_pair(m: usize, sb: Vec<f64>, db: Vec<f64>) -> Result<(AcceptanceMatrix, AcceptanceMatrix)> {
    Ok((
        AcceptanceMatrix::per_paper(Condition::Sb, m, sb)?,
        AcceptanceMatrix::per_paper(Condition::Db, m, db)?,
    ))
}

/// Logistic world: `logit π^db = β₀ + β₁q*`, `logit π^sb = β₀ + β₁q* + β₂w`.
pub fn gen_logistic_world(
    n: usize,
    m: usize,
    beta: [f64; 3],
    q_dist: ScoreDistribution,
    gamma: f64,
    noise_sigma: f64,
    rng: &RngStream,
) -> Result<Instance> {
    let mut r = rng.rng();
    let q = q_dist.sample(n, &mut r);
    let w = sample_correlated_w(&q, gamma, &mut r)?;
    let db: Vec<f64> = q.iter().map(|&x| logistic(beta[0] + beta[1] * x)).collect();
    let sb: Vec<f64> = (0..n)
        .map(|j| logistic(beta[0] + beta[1] * q[j] + beta[2] * f64::from(w.get(j))))
        .collect();
    let (pi_sb, pi_db) = per_paper_pair(m, sb, db)?;
    Ok(Instance {
        pi_sb,
        pi_db,
        w,
        q_star: Some(q),
        db_score_model: if noise_sigma > 0.0 {
            DbScoreModel::Noisy { sigma: noise_sigma }
        } else {
            DbScoreModel::Exact
        },
        ground_truth: GroundTruth::from_sign(beta[2]),
        metadata: Metadata::new(
            "logistic",
            &[("beta0", beta[0]), ("beta1", beta[1]), ("beta2", beta[2]), ("gamma", gamma), ("sigma", noise_sigma)],
        ),
    })
}

/// Both conditions follow `logit π = β₀ + β₁(q*)³`; scores are known exactly.
pub fn gen_cubic_mismatch(
    n: usize,
    m: usize,
    beta0: f64,
    beta1: f64,
    q_dist: ScoreDistribution,
    gamma: f64,
    rng: &RngStream,
) -> Result<Instance> {
    let mut r = rng.rng();
    let q = q_dist.sample(n, &mut r);
    let w = sample_correlated_w(&q, gamma, &mut r)?;
    let p: Vec<f64> = q.iter().map(|&x| logistic(beta0 + beta1 * x.powi(3))).collect();
    let (pi_sb, pi_db) = per_paper_pair(m, p.clone(), p)?;
    Ok(Instance {
        pi_sb,
        pi_db,
        w,
        q_star: Some(q),
        db_score_model: DbScoreModel::Exact,
        ground_truth: GroundTruth::Null,
        metadata: Metadata::new("cubic", &[("beta0", beta0), ("beta1", beta1), ("gamma", gamma)]),
    })
}

/// Clarity-dependent leniency: `π_ij = logistic(β₀ + β₁ζ_j) + ℓ_i·1[ζ_j < 0.5]`
/// in both conditions, `ℓ_i = ±leniency`, `q* = ζ ~ U[−1, 1]` and
/// `w_j = +1` iff `q*_j > 0.5`.
pub fn gen_calibration_world(n: usize, m: usize, beta0: f64, beta1: f64, leniency: f64, rng: &RngStream) -> Result<Instance> {
    let mut r = rng.rng();
    let zeta = ScoreDistribution::uniform(-1.0, 1.0).sample(n, &mut r);
    let lenient: Vec<f64> = (0..m)
        .map(|_| if r.random::<bool>() { leniency } else { -leniency })
        .collect();
    let w = PropertyVector::new(zeta.iter().map(|&z| if z > 0.5 { 1 } else { -1 }).collect())?;
    let kind = MatrixKind::Leniency {
        base: zeta.iter().map(|&z| logistic(beta0 + beta1 * z)).collect(),
        leniency: lenient,
        affected: zeta.iter().map(|&z| z < 0.5).collect(),
    };
    let pi_db = AcceptanceMatrix::new(m, n, Condition::Db, kind)?;
    Ok(Instance {
        pi_sb: pi_db.with_condition(Condition::Sb),
        pi_db,
        w,
        q_star: Some(zeta),
        db_score_model: DbScoreModel::Exact,
        ground_truth: GroundTruth::Null,
        metadata: Metadata::new("calibration", &[("beta0", beta0), ("beta1", beta1), ("leniency", leniency)]),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiddingWorld {
    pub instance: Instance,
    pub sb_bids: BidMatrix,
    pub db_bids: BidMatrix,
    /// `true` for lenient type-A reviewers.
    pub type_a: Vec<bool>,
}

/// Type-A reviewers (probability `type_a_prob`) accept with `q* + 0.1` and,
/// when SB bidding is not blind, bid `+1` on property papers and `−1` on the
/// rest; everyone else accepts with `q*` and bids 0. `q* ~ U[0, 0.9]`.
pub fn gen_bidding_world(n: usize, m: usize, type_a_prob: f64, j_prob: f64, blind: bool, rng: &RngStream) -> Result<BiddingWorld> {
    let mut r = rng.rng();
    let type_a: Vec<bool> = (0..m).map(|_| r.random::<f64>() < type_a_prob).collect();
    let w = PropertyVector::new((0..n).map(|_| if r.random::<f64>() < j_prob { 1 } else { -1 }).collect())?;
    let q = ScoreDistribution::uniform(0.0, 0.9).sample(n, &mut r);
    let kind = MatrixKind::Typed {
        per_type: vec![q.clone(), q.iter().map(|x| x + 0.1).collect()],
        reviewer_type: type_a.iter().map(|&a| usize::from(a)).collect(),
    };
    let pi_db = AcceptanceMatrix::new(m, n, Condition::Db, kind)?;
    let db_bids = BidMatrix::new(m, n, vec![0; m * n])?;
    let sb_bids = if blind {
        db_bids.clone()
    } else {
        BidMatrix::from_fn(m, n, |i, j| if type_a[i] { w.get(j) } else { 0 })?
    };
    Ok(BiddingWorld {
        instance: Instance {
            pi_sb: pi_db.with_condition(Condition::Sb),
            pi_db,
            w,
            q_star: Some(q),
            db_score_model: DbScoreModel::Exact,
            ground_truth: GroundTruth::Null,
            metadata: Metadata::new("bidding", &[("type_a_prob", type_a_prob), ("j_prob", j_prob), ("blind", f64::from(u8::from(blind)))]),
        },
        sb_bids,
        db_bids,
        type_a,
    })
}

/// The adversarial similarity `S_ij = (m+1−i)(n+1−j)` (one-based).
pub fn adversarial_similarity(n: usize, m: usize) -> Result<SimilarityMatrix> {
    SimilarityMatrix::from_fn(m, n, |i, j| ((m - i) * (n - j)) as f64)
}

/// One-based threshold `z_i = (m+1−i)(n − ⌊(i−1)/2⌋)` for zero-based `i`.
pub fn adversarial_threshold(n: usize, m: usize, i: ReviewerId) -> f64 {
    ((m - i) * n.saturating_sub(i / 2)) as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdversarialWorld {
    pub instance: Instance,
    pub similarity: SimilarityMatrix,
}

/// Reviewers accept with 0.9 when their similarity to the paper reaches
/// their threshold and with `q*_j` otherwise; DB reviewers report their
/// acceptance probability as the score. `q* ~ U[0, 0.9]` and `w` has
/// correlation `phi` with `q*`.
pub fn gen_adversarial_similarity(n: usize, m: usize, phi: f64, rng: &RngStream) -> Result<AdversarialWorld> {
    let mut r = rng.rng();
    let dist = ScoreDistribution::uniform(0.0, 0.9);
    let q = dist.sample(n, &mut r);
    let w = sample_correlated_w_around(&q, dist.center(), gamma_for_target_correlation(phi)?, &mut r)?;
    let kind = MatrixKind::SimilarityThreshold {
        high: 0.9,
        fallback: q.clone(),
    };
    let pi_db = AcceptanceMatrix::new(m, n, Condition::Db, kind)?;
    Ok(AdversarialWorld {
        instance: Instance {
            pi_sb: pi_db.with_condition(Condition::Sb),
            pi_db,
            w,
            q_star: Some(q),
            db_score_model: DbScoreModel::AcceptanceProbability,
            ground_truth: GroundTruth::Null,
            metadata: Metadata::new("adversarial", &[("phi", phi)]),
        },
        similarity: adversarial_similarity(n, m)?,
    })
}

/// Generalized linear world: `π^db = q`, `π^sb = q + ν + margin·w`.
pub fn gen_generalized_linear(q: Vec<f64>, w: PropertyVector, m: usize, nu: f64, margin: f64) -> Result<Instance> {
    if q.len() != w.num_papers() {
        return Err(Error::DimensionMismatch(format!("{} scores for {} papers", q.len(), w.num_papers())));
    }
    let sb = q
        .iter()
        .enumerate()
        .map(|(j, &x)| x + nu + margin * f64::from(w.get(j)))
        .collect();
    let (pi_sb, pi_db) = per_paper_pair(m, sb, q.clone())?;
    Ok(Instance {
        pi_sb,
        pi_db,
        w,
        q_star: Some(q),
        db_score_model: DbScoreModel::Exact,
        ground_truth: GroundTruth::from_sign(margin),
        metadata: Metadata::new("generalized-linear", &[("nu", nu), ("margin", margin)]),
    })
}

/// Generalized logistic world: `logit π^db = β₀ + β₁q`,
/// `logit π^sb = β₀ + ν̃ + β₁q + margin·w`.
pub fn gen_generalized_logistic(
    q: Vec<f64>,
    w: PropertyVector,
    m: usize,
    beta0: f64,
    beta1: f64,
    nu_tilde: f64,
    margin: f64,
) -> Result<Instance> {
    if q.len() != w.num_papers() {
        return Err(Error::DimensionMismatch(format!("{} scores for {} papers", q.len(), w.num_papers())));
    }
    if beta1 <= 0.0 {
        return Err(Error::InvalidParameter("β₁ must be positive".into()));
    }
    let db = q.iter().map(|&x| logistic(beta0 + beta1 * x)).collect();
    let sb = q
        .iter()
        .enumerate()
        .map(|(j, &x)| logistic(beta0 + nu_tilde + beta1 * x + margin * f64::from(w.get(j))))
        .collect();
    let (pi_sb, pi_db) = per_paper_pair(m, sb, db)?;
    Ok(Instance {
        pi_sb,
        pi_db,
        w,
        q_star: Some(q),
        db_score_model: DbScoreModel::Exact,
        ground_truth: GroundTruth::from_sign(margin),
        metadata: Metadata::new(
            "generalized-logistic",
            &[("beta0", beta0), ("beta1", beta1), ("nu_tilde", nu_tilde), ("margin", margin)],
        ),
    })
}

/// One pair of matrices read under both relative-bias models.
#[derive(Debug, Clone, PartialEq)]
pub struct DualInstance {
    pub linear: Instance,
    pub logistic: Instance,
}

/// Logistic-reading parameters of the first dual instance.
pub fn dual_first_logistic() -> (f64, f64, f64) {
    let l = (7.0f64 / 3.0).ln();
    (-2.5 * l, 5.0 * l, 1.0)
}

/// Logistic-reading parameters of the second dual instance.
pub fn dual_second_logistic() -> (f64, f64, f64) {
    let l = (39.0f64 / 7.0).ln();
    ((1.0f64 / 3.0).ln() - 0.625 * l, 2.5 * l, 1.5)
}

/// The shifts `(ν₁, ν₂)` added to `q = 0.65` and `q = 0.25` in the second
/// dual instance so that it is a logistic null.
pub fn dual_second_shifts() -> (f64, f64) {
    let (b0, b1, nt) = dual_second_logistic();
    (
        logistic(b0 + nt + 0.65 * b1) - 0.65,
        logistic(b0 + nt + 0.25 * b1) - 0.25,
    )
}

fn relabel(mut inst: Instance, name: &str, truth: GroundTruth, params: &[(&str, f64)]) -> Instance {
    inst.ground_truth = truth;
    inst.metadata = Metadata::new(name, params);
    inst
}

/// Two instances whose matrices are simultaneously a linear null and a
/// logistic alternative (first) or a linear alternative and a logistic null
/// (second). Papers satisfy the property with probability 0.5.
pub fn gen_relative_dual_instances(n: usize, m: usize, rng: &RngStream) -> Result<(DualInstance, DualInstance)> {
    let mut r = rng.rng();
    let w = PropertyVector::new((0..n).map(|_| if r.random::<bool>() { 1 } else { -1 }).collect())?;
    let scores = |hi: f64, lo: f64| (0..n).map(|j| if w.get(j) == 1 { hi } else { lo }).collect::<Vec<f64>>();

    let first = gen_generalized_linear(scores(0.7, 0.5), w.clone(), m, 0.175, 0.0)?;
    let (b0, b1, nt) = dual_first_logistic();
    let first = DualInstance {
        logistic: relabel(
            first.clone(),
            "dual-first-logistic",
            GroundTruth::BiasFor,
            &[("beta0", b0), ("beta1", b1), ("nu_tilde", nt)],
        ),
        linear: relabel(first, "dual-first-linear", GroundTruth::Null, &[("nu", 0.175)]),
    };

    let (b0, b1, nt) = dual_second_logistic();
    let (nu1, nu2) = dual_second_shifts();
    let q = scores(0.65, 0.25);
    let sb = (0..n)
        .map(|j| q[j] + if w.get(j) == 1 { nu1 } else { nu2 })
        .collect();
    let (pi_sb, pi_db) = per_paper_pair(m, sb, q.clone())?;
    let second = Instance {
        pi_sb,
        pi_db,
        w,
        q_star: Some(q),
        db_score_model: DbScoreModel::Exact,
        ground_truth: GroundTruth::Null,
        metadata: Metadata::new("dual-second", &[]),
    };
    let second = DualInstance {
        logistic: relabel(
            second.clone(),
            "dual-second-logistic",
            GroundTruth::Null,
            &[("beta0", b0), ("beta1", b1), ("nu_tilde", nt)],
        ),
        linear: relabel(second, "dual-second-linear", GroundTruth::BiasAgainst, &[("nu1", nu1), ("nu2", nu2)]),
    };
    Ok((first, second))
}

/// Matrices that satisfy a logistic null with shift 1 and, read under a
/// different monotone model, an alternative with a fixed margin:
/// `q = −1` on property papers and 0 elsewhere, `π^db = logistic(q)`,
/// `π^sb = logistic(q + 1)`.
pub fn gen_extended_logistic_counterexample(w: &PropertyVector, m: usize) -> Result<(Instance, Instance)> {
    let q: Vec<f64> = (0..w.num_papers()).map(|j| if w.get(j) == 1 { -1.0 } else { 0.0 }).collect();
    let db = q.iter().map(|&x| logistic(x)).collect();
    let sb = q.iter().map(|&x| logistic(x + 1.0)).collect();
    let (pi_sb, pi_db) = per_paper_pair(m, sb, db)?;
    let null = Instance {
        pi_sb,
        pi_db,
        w: w.clone(),
        q_star: Some(q),
        db_score_model: DbScoreModel::Exact,
        ground_truth: GroundTruth::Null,
        metadata: Metadata::new("counterexample-null", &[("shift", 1.0)]),
    };
    let alt = relabel(null.clone(), "counterexample-alternative", GroundTruth::BiasFor, &[]);
    Ok((null, alt))
}

fn check_properties(q: &[f64], w: &PropertyVector, coefs: &[f64]) -> Result<()> {
    if q.len() != w.num_papers() || coefs.len() != w.num_properties() {
        return Err(Error::DimensionMismatch(format!(
            "{} scores, {} papers, {} coefficients for {} properties",
            q.len(),
            w.num_papers(),
            coefs.len(),
            w.num_properties()
        )));
    }
    Ok(())
}

fn property_shift(w: &PropertyVector, coefs: &[f64], j: PaperId) -> f64 {
    w.row(j).iter().zip(coefs).map(|(&x, c)| c * f64::from(x)).sum()
}

/// k-property generalized linear world:
/// `π^db = q`, `π^sb = q + c₀ + Σ c_ℓ w^(ℓ)`.
pub fn gen_multiprop_linear(q: Vec<f64>, w: PropertyVector, m: usize, c0: f64, coefs: &[f64]) -> Result<Instance> {
    check_properties(&q, &w, coefs)?;
    let sb = (0..q.len()).map(|j| q[j] + c0 + property_shift(&w, coefs, j)).collect();
    let (pi_sb, pi_db) = per_paper_pair(m, sb, q.clone())?;
    let params: Vec<(String, f64)> = coefs.iter().enumerate().map(|(l, &c)| (format!("c{}", l + 1), c)).collect();
    let mut metadata = Metadata::new("multiprop-linear", &[("c0", c0)]);
    metadata.params.extend(params);
    Ok(Instance {
        pi_sb,
        pi_db,
        w,
        q_star: Some(q),
        db_score_model: DbScoreModel::Exact,
        ground_truth: GroundTruth::from_sign(coefs[0]),
        metadata,
    })
}

/// k-property generalized logistic world:
/// `logit π^db = b_db + β₁q`, `logit π^sb = b_sb + β₁q + Σ c_ℓ w^(ℓ)`.
pub fn gen_multiprop_logistic(
    q: Vec<f64>,
    w: PropertyVector,
    m: usize,
    b_db: f64,
    b_sb: f64,
    beta1: f64,
    coefs: &[f64],
) -> Result<Instance> {
    check_properties(&q, &w, coefs)?;
    let db = q.iter().map(|&x| logistic(b_db + beta1 * x)).collect();
    let sb = (0..q.len())
        .map(|j| logistic(b_sb + beta1 * q[j] + property_shift(&w, coefs, j)))
        .collect();
    let (pi_sb, pi_db) = per_paper_pair(m, sb, db)?;
    let mut metadata = Metadata::new("multiprop-logistic", &[("b_db", b_db), ("b_sb", b_sb), ("beta1", beta1)]);
    metadata
        .params
        .extend(coefs.iter().enumerate().map(|(l, &c)| (format!("c{}", l + 1), c)));
    Ok(Instance {
        pi_sb,
        pi_db,
        w,
        q_star: Some(q),
        db_score_model: DbScoreModel::Exact,
        ground_truth: GroundTruth::from_sign(coefs[0]),
        metadata,
    })
}

/// Independent uniform ±1 property columns.
pub fn random_properties<R: Rng>(n: usize, k: usize, r: &mut R) -> Result<PropertyVector> {
    PropertyVector::from_rows(n, k, (0..n * k).map(|_| if r.random::<bool>() { 1 } else { -1 }).collect())
}
