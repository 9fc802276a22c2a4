//! Domain types shared by every module: property indicators, acceptance
//! matrices, assignments, condition allocations, decision tuples and test
//! outcomes, plus Bernoulli decision sampling and tuple-set validation.
//!
//! Reviewer and paper ids are dense zero-based integers. Decisions are `0/1`
//! (`u8`), property indicators are `±1` (`i8`); the two encodings never mix.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

pub type ReviewerId = usize;
pub type PaperId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Condition {
    /// Single blind: the reviewer sees author identities.
    Sb,
    /// Double blind.
    Db,
}

impl Condition {
    pub fn other(self) -> Self {
        match self {
            Condition::Sb => Condition::Db,
            Condition::Db => Condition::Sb,
        }
    }
}

/// `±1` property indicators for `n` papers and `k` properties (row-major).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyVector {
    n: usize,
    k: usize,
    values: Vec<i8>,
}

impl PropertyVector {
    /// Single-property vector.
    pub fn new(values: Vec<i8>) -> Result<Self> {
        let n = values.len();
        Self::from_rows(n, 1, values)
    }

    /// `n × k` matrix given row-major.
    pub fn from_rows(n: usize, k: usize, values: Vec<i8>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if values.len() != n * k {
            return Err(Error::DimensionMismatch(format!(
                "property matrix has {} entries, expected {n}×{k}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|&&v| v != 1 && v != -1) {
            return Err(Error::InvalidParameter(format!(
                "property indicator must be ±1, got {bad}"
            )));
        }
        Ok(Self { n, k, values })
    }

    pub fn from_columns(columns: &[Vec<i8>]) -> Result<Self> {
        let k = columns.len();
        let n = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::DimensionMismatch("ragged property columns".into()));
        }
        let mut values = Vec::with_capacity(n * k);
        for j in 0..n {
            values.extend(columns.iter().map(|c| c[j]));
        }
        Self::from_rows(n, k, values)
    }

    pub fn num_papers(&self) -> usize {
        self.n
    }

    pub fn num_properties(&self) -> usize {
        self.k
    }

    /// Indicator of the first property for paper `j`.
    pub fn get(&self, j: PaperId) -> i8 {
        self.values[j * self.k]
    }

    pub fn get_property(&self, j: PaperId, property: usize) -> i8 {
        self.values[j * self.k + property]
    }

    pub fn row(&self, j: PaperId) -> &[i8] {
        &self.values[j * self.k..(j + 1) * self.k]
    }

    /// Papers satisfying property `property` (the set J).
    pub fn satisfying(&self, property: usize) -> Vec<PaperId> {
        (0..self.n)
            .filter(|&j| self.get_property(j, property) == 1)
            .collect()
    }

    /// Papers not satisfying property `property` (the complement of J).
    pub fn complement(&self, property: usize) -> Vec<PaperId> {
        (0..self.n)
            .filter(|&j| self.get_property(j, property) == -1)
            .collect()
    }
}

/// How the entries of an [`AcceptanceMatrix`] are stored. Most simulated
/// worlds have far more structure than a dense `m × n` table, so the common
/// shapes are kept symbolic and evaluated on demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MatrixKind {
    /// Every reviewer has the same acceptance probability for paper `j`.
    PerPaper(Vec<f64>),
    /// Row-major `m × n` table.
    Dense(Vec<f64>),
    /// `base[j] + leniency[i]` for papers with `affected[j]`, else `base[j]`.
    Leniency {
        base: Vec<f64>,
        leniency: Vec<f64>,
        affected: Vec<bool>,
    },
    /// Reviewer `i` of type `t = reviewer_type[i]` accepts paper `j` with
    /// probability `per_type[t][j]`.
    Typed {
        per_type: Vec<Vec<f64>>,
        reviewer_type: Vec<usize>,
    },
    /// Threshold rule on the similarity `(m+1-i)(n+1-j)` against
    /// `z_i = (m+1-i)(n - floor((i-1)/2))` with one-based indices: accept with
    /// `high` when the similarity reaches the threshold, else with `fallback[j]`.
    SimilarityThreshold { high: f64, fallback: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceMatrix {
    rows: usize,
    cols: usize,
    condition: Condition,
    kind: MatrixKind,
}

impl AcceptanceMatrix {
    pub fn new(rows: usize, cols: usize, condition: Condition, kind: MatrixKind) -> Result<Self> {
        let shape_ok = match &kind {
            MatrixKind::PerPaper(p) => p.len() == cols,
            MatrixKind::Dense(d) => d.len() == rows * cols,
            MatrixKind::Leniency {
                base,
                leniency,
                affected,
            } => base.len() == cols && affected.len() == cols && leniency.len() == rows,
            MatrixKind::Typed {
                per_type,
                reviewer_type,
            } => {
                reviewer_type.len() == rows
                    && per_type.iter().all(|p| p.len() == cols)
                    && reviewer_type.iter().all(|&t| t < per_type.len())
            }
            MatrixKind::SimilarityThreshold { fallback, .. } => fallback.len() == cols,
        };
        if !shape_ok {
            return Err(Error::DimensionMismatch(format!(
                "acceptance matrix storage does not match {rows}×{cols}"
            )));
        }
        let m = Self {
            rows,
            cols,
            condition,
            kind,
        };
        m.check_probabilities()?;
        Ok(m)
    }

    pub fn per_paper(condition: Condition, rows: usize, probs: Vec<f64>) -> Result<Self> {
        let cols = probs.len();
        Self::new(rows, cols, condition, MatrixKind::PerPaper(probs))
    }

    fn check_probabilities(&self) -> Result<()> {
        let bad = |v: f64| !(0.0..=1.0).contains(&v) || v.is_nan();
        let offending = match &self.kind {
            MatrixKind::PerPaper(p) => p.iter().copied().find(|&v| bad(v)),
            MatrixKind::Dense(d) => d.iter().copied().find(|&v| bad(v)),
            MatrixKind::Leniency {
                base,
                leniency,
                affected,
            } => {
                let (lo, hi) = leniency
                    .iter()
                    .fold((0.0f64, 0.0f64), |(lo, hi), &l| (lo.min(l), hi.max(l)));
                base.iter().zip(affected).find_map(|(&b, &a)| {
                    let cands = if a { [b + lo, b + hi] } else { [b, b] };
                    cands.into_iter().find(|&v| bad(v))
                })
            }
            MatrixKind::Typed { per_type, .. } => {
                per_type.iter().flatten().copied().find(|&v| bad(v))
            }
            MatrixKind::SimilarityThreshold { high, fallback } => std::iter::once(*high)
                .chain(fallback.iter().copied())
                .find(|&v| bad(v)),
        };
        match offending {
            Some(v) => Err(Error::InvalidParameter(format!(
                "acceptance probability {v} outside [0, 1]"
            ))),
            None => Ok(()),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn condition(&self) -> Condition {
        self.condition
    }

    pub fn kind(&self) -> &MatrixKind {
        &self.kind
    }

    pub fn entry(&self, i: ReviewerId, j: PaperId) -> f64 {
        match &self.kind {
            MatrixKind::PerPaper(p) => p[j],
            MatrixKind::Dense(d) => d[i * self.cols + j],
            MatrixKind::Leniency {
                base,
                leniency,
                affected,
            } => {
                if affected[j] {
                    base[j] + leniency[i]
                } else {
                    base[j]
                }
            }
            MatrixKind::Typed {
                per_type,
                reviewer_type,
            } => per_type[reviewer_type[i]][j],
            MatrixKind::SimilarityThreshold { high, fallback } => {
                let (m, n) = (self.rows as u64, self.cols as u64);
                let (i1, j1) = (i as u64 + 1, j as u64 + 1);
                let sim = (m + 1 - i1) * (n + 1 - j1);
                let z = (m + 1 - i1) * (n.saturating_sub((i1 - 1) / 2));
                if sim >= z {
                    *high
                } else {
                    fallback[j]
                }
            }
        }
    }

    /// Materialise the full `m × n` table (row-major). Intended for small
    /// matrices and tests.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.rows * self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.push(self.entry(i, j));
            }
        }
        out
    }

    /// Same entries, different condition tag.
    pub fn with_condition(&self, condition: Condition) -> Self {
        Self {
            condition,
            ..self.clone()
        }
    }
}

/// Reviewer ↔ paper pairs under `(λ, μ)` loads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    num_reviewers: usize,
    num_papers: usize,
    lambda: usize,
    mu: usize,
    pairs: Vec<(ReviewerId, PaperId)>,
}

impl Assignment {
    /// Validates ids, uniqueness of pairs, and the per-reviewer load `μ`.
    pub fn new(
        num_reviewers: usize,
        num_papers: usize,
        lambda: usize,
        mu: usize,
        pairs: Vec<(ReviewerId, PaperId)>,
    ) -> Result<Self> {
        let mut seen = HashSet::with_capacity(pairs.len());
        let mut load = vec![0usize; num_reviewers];
        for &(i, j) in &pairs {
            if i >= num_reviewers || j >= num_papers {
                return Err(Error::DimensionMismatch(format!(
                    "pair ({i}, {j}) outside {num_reviewers}×{num_papers} roster"
                )));
            }
            if !seen.insert((i, j)) {
                return Err(Error::InvalidParameter(format!("duplicate pair ({i}, {j})")));
            }
            load[i] += 1;
            if load[i] > mu {
                return Err(Error::InvalidParameter(format!(
                    "reviewer {i} exceeds load μ = {mu}"
                )));
            }
        }
        Ok(Self {
            num_reviewers,
            num_papers,
            lambda,
            mu,
            pairs,
        })
    }

    pub fn num_reviewers(&self) -> usize {
        self.num_reviewers
    }

    pub fn num_papers(&self) -> usize {
        self.num_papers
    }

    pub fn lambda(&self) -> usize {
        self.lambda
    }

    pub fn mu(&self) -> usize {
        self.mu
    }

    pub fn pairs(&self) -> &[(ReviewerId, PaperId)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, i: ReviewerId, j: PaperId) -> bool {
        self.pairs.contains(&(i, j))
    }

    /// Papers of each reviewer.
    pub fn papers_by_reviewer(&self) -> Vec<Vec<PaperId>> {
        let mut out = vec![Vec::new(); self.num_reviewers];
        for &(i, j) in &self.pairs {
            out[i].push(j);
        }
        out
    }

    /// Reviewers of each paper.
    pub fn reviewers_by_paper(&self) -> Vec<Vec<ReviewerId>> {
        let mut out = vec![Vec::new(); self.num_papers];
        for &(i, j) in &self.pairs {
            out[j].push(i);
        }
        out
    }

    /// Pairs whose reviewer is in `condition` under `allocation`.
    pub fn restrict(&self, allocation: &ConditionAllocation, condition: Condition) -> Assignment {
        Assignment {
            pairs: self
                .pairs
                .iter()
                .copied()
                .filter(|&(i, _)| allocation.get(i) == condition)
                .collect(),
            ..self.clone()
        }
    }

    /// Union of two assignments over the same roster.
    pub fn merge(&self, other: &Assignment) -> Result<Assignment> {
        let mut pairs = self.pairs.clone();
        pairs.extend_from_slice(&other.pairs);
        Assignment::new(
            self.num_reviewers,
            self.num_papers,
            self.lambda.max(other.lambda),
            self.mu.max(other.mu),
            pairs,
        )
    }

    /// Every paper has exactly `λ` SB and `λ` DB reviewers.
    pub fn is_complete(&self, allocation: &ConditionAllocation) -> bool {
        let mut sb = vec![0usize; self.num_papers];
        let mut db = vec![0usize; self.num_papers];
        for &(i, j) in &self.pairs {
            match allocation.get(i) {
                Condition::Sb => sb[j] += 1,
                Condition::Db => db[j] += 1,
            }
        }
        sb.iter().chain(&db).all(|&c| c == self.lambda)
    }
}

/// SB/DB label of each reviewer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionAllocation {
    labels: Vec<Condition>,
}

impl ConditionAllocation {
    pub fn new(labels: Vec<Condition>) -> Self {
        Self { labels }
    }

    pub fn get(&self, i: ReviewerId) -> Condition {
        self.labels[i]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[Condition] {
        &self.labels
    }

    pub fn reviewers(&self, condition: Condition) -> Vec<ReviewerId> {
        (0..self.labels.len())
            .filter(|&i| self.labels[i] == condition)
            .collect()
    }

    pub fn count(&self, condition: Condition) -> usize {
        self.labels.iter().filter(|&&c| c == condition).count()
    }

    pub fn is_balanced(&self) -> bool {
        !self.labels.len().is_multiple_of(2) || self.count(Condition::Sb) == self.count(Condition::Db)
    }
}

/// One (paper, SB decision, DB decision, property) record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionTuple {
    pub paper: PaperId,
    pub sb_decision: u8,
    pub db_decision: u8,
    /// `±1` indicators, one per property; the first is the default property.
    pub properties: Vec<i8>,
    pub sb_reviewer: ReviewerId,
    pub db_reviewer: ReviewerId,
}

impl DecisionTuple {
    pub fn w(&self) -> i8 {
        self.properties[0]
    }

    pub fn disagrees(&self) -> bool {
        self.sb_decision != self.db_decision
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TupleSet {
    pub tuples: Vec<DecisionTuple>,
    /// Opt-in: tuples built from the full assignment, where one reviewer may
    /// contribute to several tuples. Validation then only checks per-tuple
    /// invariants, and the tests lose their calibration guarantee.
    #[serde(default)]
    pub reuses_reviewers: bool,
}

impl TupleSet {
    pub fn new(tuples: Vec<DecisionTuple>) -> Self {
        Self {
            tuples,
            reuses_reviewers: false,
        }
    }

    /// Tuple set in which reviewers may appear more than once.
    pub fn with_reviewer_reuse(tuples: Vec<DecisionTuple>) -> Self {
        Self {
            tuples,
            reuses_reviewers: true,
        }
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, DecisionTuple> {
        self.tuples.iter()
    }

    pub fn num_properties(&self) -> usize {
        self.tuples.first().map_or(1, |t| t.properties.len())
    }
}

/// Decision of reviewer `i` on paper `j`, for assigned pairs only.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Decisions {
    map: BTreeMap<(ReviewerId, PaperId), u8>,
}

impl Decisions {
    pub fn get(&self, i: ReviewerId, j: PaperId) -> Option<u8> {
        self.map.get(&(i, j)).copied()
    }

    pub fn insert(&mut self, i: ReviewerId, j: PaperId, decision: u8) {
        self.map.insert((i, j), decision);
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((ReviewerId, PaperId), u8)> + '_ {
        self.map.iter().map(|(&k, &v)| (k, v))
    }
}

impl FromIterator<((ReviewerId, PaperId), u8)> for Decisions {
    fn from_iter<T: IntoIterator<Item = ((ReviewerId, PaperId), u8)>>(iter: T) -> Self {
        Self {
            map: iter.into_iter().collect(),
        }
    }
}

/// Result of one hypothesis test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub reject: bool,
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub threshold: Option<f64>,
    pub effect_size: f64,
    pub n_u: usize,
    pub n_v: usize,
    /// The test could not be carried out (empty arrays, failed fit) and kept
    /// the null by convention.
    pub degenerate: bool,
}

impl TestOutcome {
    /// Keep-null outcome for inputs on which the test is undefined.
    pub fn keep_null(n_u: usize, n_v: usize) -> Self {
        Self {
            reject: false,
            statistic: 0.0,
            p_value: None,
            threshold: None,
            effect_size: 0.0,
            n_u,
            n_v,
            degenerate: true,
        }
    }
}

/// Independent Bernoulli draws for every assigned pair, in assignment order.
pub fn sample_decisions(
    pi: &AcceptanceMatrix,
    assignment: &Assignment,
    rng: &RngStream,
) -> Result<Decisions> {
    if assignment.num_reviewers() != pi.rows() || assignment.num_papers() != pi.cols() {
        return Err(Error::DimensionMismatch(format!(
            "assignment roster {}×{} vs matrix {}×{}",
            assignment.num_reviewers(),
            assignment.num_papers(),
            pi.rows(),
            pi.cols()
        )));
    }
    let mut r = rng.rng();
    Ok(assignment
        .pairs()
        .iter()
        .map(|&(i, j)| {
            let u: f64 = r.random();
            ((i, j), u8::from(u < pi.entry(i, j)))
        })
        .collect())
}

/// Outcome of [`validate_tuple_set`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Validation {
    Ok,
    Violation {
        /// Reviewers appearing in more than one tuple, or on both sides of a
        /// tuple, or allocated to the wrong condition.
        reviewers: Vec<ReviewerId>,
    },
}

impl Validation {
    pub fn is_ok(&self) -> bool {
        matches!(self, Validation::Ok)
    }

    pub fn into_result(self) -> Result<()> {
        match self {
            Validation::Ok => Ok(()),
            Validation::Violation { reviewers } => Err(Error::InvalidTupleSet { reviewers }),
        }
    }
}

/// Checks that every reviewer contributes at most one decision, that the two
/// reviewers of each tuple differ, and (when an allocation is supplied) that
/// each reviewer sits in the condition of the decision they contributed.
pub fn validate_tuple_set(tuples: &TupleSet, allocation: Option<&ConditionAllocation>) -> Validation {
    let mut seen = HashSet::new();
    let mut offenders = BTreeSet::new();
    for t in tuples.iter() {
        if t.sb_reviewer == t.db_reviewer {
            offenders.insert(t.sb_reviewer);
        }
        for (r, cond) in [(t.sb_reviewer, Condition::Sb), (t.db_reviewer, Condition::Db)] {
            if !seen.insert(r) && t.sb_reviewer != t.db_reviewer && !tuples.reuses_reviewers {
                offenders.insert(r);
            }
            if let Some(alloc) = allocation {
                if r >= alloc.len() || alloc.get(r) != cond {
                    offenders.insert(r);
                }
            }
        }
    }
    if offenders.is_empty() {
        Validation::Ok
    } else {
        Validation::Violation {
            reviewers: offenders.into_iter().collect(),
        }
    }
}
