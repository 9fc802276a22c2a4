//! Reviewer–paper assignment under load constraints.
//!
//! Every paper `j` must receive exactly `demand[j]` reviewers and every
//! reviewer `i` at most `capacity[i]` papers, with no pair repeated and no
//! forbidden pair used. [`solve_max_assignment`] maximises the total score
//! exactly. It dispatches to one of three exact methods:
//!
//! * score matrices with few distinct rows and columns are compressed to
//!   classes, solved as a small transportation problem and expanded with
//!   random pairings inside each class;
//! * balanced problems whose score matrix is Monge in index order are solved
//!   by the northwest-corner rule;
//! * everything else goes through successive-shortest-path min-cost flow.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::types::{Assignment, PaperId, ReviewerId};

const SCORE_TOL: f64 = 1e-9;
/// Largest class grid handled by the compressed transportation route.
const MAX_CLASS_CELLS: usize = 4096;
pub const DEFAULT_REJECTION_CAP: usize = 10_000;

/// Read access to an `m × n` score table.
pub trait Scores {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn score(&self, i: ReviewerId, j: PaperId) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "similarity matrix has {} entries, expected {rows}×{cols}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("similarities must be finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let data = (0..rows)
            .flat_map(|i| (0..cols).map(move |j| (i, j)))
            .map(|(i, j)| f(i, j))
            .collect();
        Self::new(rows, cols, data)
    }
}

impl Scores for SimilarityMatrix {
    fn rows(&self) -> usize {
        self.rows
    }
    fn cols(&self) -> usize {
        self.cols
    }
    fn score(&self, i: ReviewerId, j: PaperId) -> f64 {
        self.data[i * self.cols + j]
    }
}

/// Bids in `{−1, 0, +1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BidMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i8>,
}

impl BidMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<i8>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "bid matrix has {} entries, expected {rows}×{cols}",
                data.len()
            )));
        }
        if let Some(b) = data.iter().find(|b| !(-1..=1).contains(*b)) {
            return Err(Error::InvalidParameter(format!("bid {b} not in {{-1, 0, 1}}")));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> i8) -> Result<Self> {
        let data = (0..rows)
            .flat_map(|i| (0..cols).map(move |j| (i, j)))
            .map(|(i, j)| f(i, j))
            .collect();
        Self::new(rows, cols, data)
    }

    pub fn bid(&self, i: ReviewerId, j: PaperId) -> i8 {
        self.data[i * self.cols + j]
    }
}

impl Scores for BidMatrix {
    fn rows(&self) -> usize {
        self.rows
    }
    fn cols(&self) -> usize {
        self.cols
    }
    fn score(&self, i: ReviewerId, j: PaperId) -> f64 {
        f64::from(self.bid(i, j))
    }
}

/// Who may be assigned, how much, and which pairs are ruled out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadSpec {
    pub reviewers: Vec<ReviewerId>,
    pub papers: Vec<PaperId>,
    /// Required reviewers per paper, aligned with `papers`.
    pub demand: Vec<usize>,
    /// Maximum papers per reviewer, aligned with `reviewers`.
    pub capacity: Vec<usize>,
    pub forbidden: BTreeSet<(ReviewerId, PaperId)>,
}

impl LoadSpec {
    pub fn uniform(reviewers: Vec<ReviewerId>, papers: Vec<PaperId>, lambda: usize, mu: usize) -> Self {
        Self {
            demand: vec![lambda; papers.len()],
            capacity: vec![mu; reviewers.len()],
            reviewers,
            papers,
            forbidden: BTreeSet::new(),
        }
    }

    pub fn with_forbidden(mut self, forbidden: BTreeSet<(ReviewerId, PaperId)>) -> Self {
        self.forbidden = forbidden;
        self
    }

    fn check(&self) -> Result<()> {
        if self.demand.len() != self.papers.len() || self.capacity.len() != self.reviewers.len() {
            return Err(Error::DimensionMismatch("load vectors do not match eligible sets".into()));
        }
        let need: usize = self.demand.iter().sum();
        let have: usize = self.capacity.iter().sum();
        if have < need {
            return Err(Error::Infeasible(format!(
                "reviewer capacity {have} below paper demand {need}"
            )));
        }
        let usable = self.capacity.iter().filter(|&&c| c > 0).count();
        if let Some(&d) = self.demand.iter().find(|&&d| d > usable) {
            return Err(Error::Infeasible(format!(
                "a paper needs {d} distinct reviewers but only {usable} are available"
            )));
        }
        Ok(())
    }

    fn total_demand(&self) -> usize {
        self.demand.iter().sum()
    }

    /// Every pair carries at most one unit even before the pair constraint is
    /// imposed, so slot-level solutions never repeat a pair.
    fn unit_pairs(&self) -> bool {
        self.capacity.iter().all(|&c| c <= 1) || self.demand.iter().all(|&d| d <= 1)
    }
}

/// Maximum-total-score assignment satisfying `spec`. Returns sorted pairs.
pub fn solve_max_assignment<S: Scores>(scores: &S, spec: &LoadSpec, rng: &RngStream) -> Result<Vec<(ReviewerId, PaperId)>> {
    spec.check()?;
    if let Some(&i) = spec.reviewers.iter().find(|&&i| i >= scores.rows()) {
        return Err(Error::DimensionMismatch(format!("reviewer {i} outside score matrix")));
    }
    if let Some(&j) = spec.papers.iter().find(|&&j| j >= scores.cols()) {
        return Err(Error::DimensionMismatch(format!("paper {j} outside score matrix")));
    }
    let mut pairs = if spec.forbidden.is_empty() && spec.unit_pairs() {
        if let Some(p) = solve_by_classes(scores, spec, rng)? {
            p
        } else if let Some(p) = solve_monge(scores, spec) {
            p
        } else {
            solve_flow(scores, spec)?
        }
    } else {
        solve_flow(scores, spec)?
    };
    pairs.sort_unstable();
    Ok(pairs)
}

/// Total score of a set of pairs.
pub fn total_score<S: Scores>(scores: &S, pairs: &[(ReviewerId, PaperId)]) -> f64 {
    pairs.iter().map(|&(i, j)| scores.score(i, j)).sum()
}

/// TPMS-style assignment: each eligible paper gets exactly `lambda` eligible
/// reviewers, each reviewer at most `mu` papers, total similarity maximal.
pub fn solve_tpms(
    s: &SimilarityMatrix,
    lambda: usize,
    mu: usize,
    reviewers: &[ReviewerId],
    papers: &[PaperId],
    rng: &RngStream,
) -> Result<Assignment> {
    let spec = LoadSpec::uniform(reviewers.to_vec(), papers.to_vec(), lambda, mu);
    let pairs = solve_max_assignment(s, &spec, rng)?;
    Assignment::new(s.rows, s.cols, lambda, mu, pairs)
}

/// Assignment maximising the total bid; same contract as [`solve_tpms`].
pub fn solve_bid_assignment(
    b: &BidMatrix,
    lambda: usize,
    mu: usize,
    reviewers: &[ReviewerId],
    papers: &[PaperId],
    rng: &RngStream,
) -> Result<Assignment> {
    let spec = LoadSpec::uniform(reviewers.to_vec(), papers.to_vec(), lambda, mu);
    let pairs = solve_max_assignment(b, &spec, rng)?;
    Assignment::new(b.rows, b.cols, lambda, mu, pairs)
}

/// Group items into classes of identical keys. `key(k, t)` is the `t`-th of
/// `len` key entries of item `k`. Gives up once more than `limit` classes
/// appear.
fn classes(count: usize, len: usize, key: impl Fn(usize, usize) -> u64, limit: usize) -> Option<(Vec<usize>, usize)> {
    let mut by_print: HashMap<u64, Vec<usize>> = HashMap::new();
    let mut reps: Vec<usize> = Vec::new();
    let mut labels = Vec::with_capacity(count);
    for k in 0..count {
        let print = (0..len).fold(0xcbf2_9ce4_8422_2325u64, |h, t| (h ^ key(k, t)).wrapping_mul(0x0100_0000_01b3));
        let bucket = by_print.entry(print).or_default();
        let found = bucket
            .iter()
            .copied()
            .find(|&c| (0..len).all(|t| key(reps[c], t) == key(k, t)));
        let class = match found {
            Some(c) => c,
            None => {
                if reps.len() == limit {
                    return None;
                }
                reps.push(k);
                bucket.push(reps.len() - 1);
                reps.len() - 1
            }
        };
        labels.push(class);
    }
    Some((labels, reps.len()))
}

fn solve_by_classes<S: Scores>(scores: &S, spec: &LoadSpec, rng: &RngStream) -> Result<Option<Vec<(ReviewerId, PaperId)>>> {
    let (rows, cols) = (&spec.reviewers, &spec.papers);
    if rows.is_empty() || cols.is_empty() {
        return Ok(Some(Vec::new()));
    }
    let limit = MAX_CLASS_CELLS.isqrt();
    let row_key = |k: usize, t: usize| match cols.get(t) {
        Some(&j) => scores.score(rows[k], j).to_bits(),
        None => spec.capacity[k] as u64,
    };
    let Some((row_class, nr)) = classes(rows.len(), cols.len() + 1, row_key, limit) else {
        return Ok(None);
    };
    let col_key = |k: usize, t: usize| match rows.get(t) {
        Some(&i) => scores.score(i, cols[k]).to_bits(),
        None => spec.demand[k] as u64,
    };
    let Some((col_class, nc)) = classes(cols.len(), rows.len() + 1, col_key, MAX_CLASS_CELLS / nr) else {
        return Ok(None);
    };
    let mut row_rep = vec![0; nr];
    let mut row_supply = vec![0usize; nr];
    for (r, (&c, &cap)) in row_class.iter().zip(&spec.capacity).enumerate() {
        row_rep[c] = rows[r];
        row_supply[c] += cap;
    }
    let mut col_rep = vec![0; nc];
    let mut col_need = vec![0usize; nc];
    for (q, (&c, &d)) in col_class.iter().zip(&spec.demand).enumerate() {
        col_rep[c] = cols[q];
        col_need[c] += d;
    }
    let score = |a: usize, b: usize| scores.score(row_rep[a], col_rep[b]);
    let flows = transport(nr, nc, &row_supply, &col_need, &score, |_, _| usize::MAX)?;

    // Expand: shuffled slot lists per class, consumed in class-pair order.
    let mut r = rng.rng();
    let mut row_slots: Vec<Vec<ReviewerId>> = vec![Vec::new(); nr];
    for (k, (&c, &cap)) in row_class.iter().zip(&spec.capacity).enumerate() {
        row_slots[c].extend(std::iter::repeat_n(rows[k], cap));
    }
    let mut col_slots: Vec<Vec<PaperId>> = vec![Vec::new(); nc];
    for (k, (&c, &d)) in col_class.iter().zip(&spec.demand).enumerate() {
        col_slots[c].extend(std::iter::repeat_n(cols[k], d));
    }
    row_slots.iter_mut().for_each(|s| s.shuffle(&mut r));
    col_slots.iter_mut().for_each(|s| s.shuffle(&mut r));
    let mut pairs = Vec::with_capacity(spec.total_demand());
    for a in 0..nr {
        for b in 0..nc {
            for _ in 0..flows[a * nc + b] {
                let i = row_slots[a].pop().expect("class supply respected");
                let j = col_slots[b].pop().expect("class demand respected");
                pairs.push((i, j));
            }
        }
    }
    Ok(Some(pairs))
}

fn solve_monge<S: Scores>(scores: &S, spec: &LoadSpec) -> Option<Vec<(ReviewerId, PaperId)>> {
    let rows: Vec<(ReviewerId, usize)> = spec
        .reviewers
        .iter()
        .zip(&spec.capacity)
        .filter(|(_, &c)| c > 0)
        .map(|(&i, &c)| (i, c))
        .collect();
    let cols: Vec<(PaperId, usize)> = spec
        .papers
        .iter()
        .zip(&spec.demand)
        .filter(|(_, &d)| d > 0)
        .map(|(&j, &d)| (j, d))
        .collect();
    let supply: usize = rows.iter().map(|r| r.1).sum();
    if supply != spec.total_demand()
        || !rows.windows(2).all(|w| w[0].0 < w[1].0)
        || !cols.windows(2).all(|w| w[0].0 < w[1].0)
    {
        return None;
    }
    for w in rows.windows(2) {
        let (i, k) = (w[0].0, w[1].0);
        for v in cols.windows(2) {
            let (j, l) = (v[0].0, v[1].0);
            let lhs = scores.score(i, j) + scores.score(k, l);
            let rhs = scores.score(i, l) + scores.score(k, j);
            if lhs < rhs - SCORE_TOL * (1.0 + lhs.abs().max(rhs.abs())) {
                return None;
            }
        }
    }
    let mut pairs = Vec::with_capacity(supply);
    let (mut a, mut b) = (0, 0);
    let mut cap: Vec<usize> = rows.iter().map(|r| r.1).collect();
    let mut need: Vec<usize> = cols.iter().map(|c| c.1).collect();
    while a < rows.len() && b < cols.len() {
        // unit_pairs() guarantees the corner flow is a single unit
        pairs.push((rows[a].0, cols[b].0));
        cap[a] -= 1;
        need[b] -= 1;
        if cap[a] == 0 {
            a += 1;
        }
        if need[b] == 0 {
            b += 1;
        }
    }
    Some(pairs)
}

fn solve_flow<S: Scores>(scores: &S, spec: &LoadSpec) -> Result<Vec<(ReviewerId, PaperId)>> {
    let (rows, cols) = (&spec.reviewers, &spec.papers);
    let score = |a: usize, b: usize| scores.score(rows[a], cols[b]);
    let allowed = |a: usize, b: usize| usize::from(!spec.forbidden.contains(&(rows[a], cols[b])));
    let flows = transport(rows.len(), cols.len(), &spec.capacity, &spec.demand, &score, allowed)?;
    let mut pairs = Vec::with_capacity(spec.total_demand());
    for a in 0..rows.len() {
        for b in 0..cols.len() {
            if flows[a * cols.len() + b] > 0 {
                pairs.push((rows[a], cols[b]));
            }
        }
    }
    Ok(pairs)
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

struct Edge {
    to: usize,
    cap: usize,
    cost: f64,
}

/// Maximum-score transportation: source → rows (`supply`) → cols (`need`,
/// saturated exactly) with per-cell capacity `cell_cap`. Successive shortest
/// paths with Dijkstra on reduced costs. Returns row-major cell flows.
fn transport(
    nr: usize,
    nc: usize,
    supply: &[usize],
    need: &[usize],
    score: &dyn Fn(usize, usize) -> f64,
    cell_cap: impl Fn(usize, usize) -> usize,
) -> Result<Vec<usize>> {
    let max_score = (0..nr)
        .flat_map(|a| (0..nc).map(move |b| (a, b)))
        .map(|(a, b)| score(a, b))
        .fold(f64::NEG_INFINITY, f64::max);
    let (src, sink) = (nr + nc, nr + nc + 1);
    let nodes = nr + nc + 2;
    let mut edges: Vec<Edge> = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    let mut add = |u: usize, v: usize, cap: usize, cost: f64, edges: &mut Vec<Edge>| {
        adj[u].push(edges.len());
        edges.push(Edge { to: v, cap, cost });
        adj[v].push(edges.len());
        edges.push(Edge { to: u, cap: 0, cost: -cost });
    };
    for (a, &s) in supply.iter().enumerate() {
        add(src, a, s, 0.0, &mut edges);
    }
    let mut cell_edge = vec![usize::MAX; nr * nc];
    for a in 0..nr {
        for b in 0..nc {
            let cap = cell_cap(a, b).min(supply[a]).min(need[b]);
            if cap > 0 {
                cell_edge[a * nc + b] = edges.len();
                add(a, nr + b, cap, max_score - score(a, b), &mut edges);
            }
        }
    }
    for (b, &d) in need.iter().enumerate() {
        add(nr + b, sink, d, 0.0, &mut edges);
    }
    let required: usize = need.iter().sum();
    let mut potential = vec![0.0; nodes];
    let mut sent = 0;
    let mut dist = vec![f64::INFINITY; nodes];
    let mut prev = vec![usize::MAX; nodes];
    while sent < required {
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        prev.iter_mut().for_each(|p| *p = usize::MAX);
        dist[src] = 0.0;
        let mut heap = BinaryHeap::from([HeapItem(0.0, src)]);
        while let Some(HeapItem(d, u)) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &e in &adj[u] {
                let edge = &edges[e];
                if edge.cap == 0 {
                    continue;
                }
                let reduced = (edge.cost + potential[u] - potential[edge.to]).max(0.0);
                let nd = d + reduced;
                if nd < dist[edge.to] {
                    dist[edge.to] = nd;
                    prev[edge.to] = e;
                    heap.push(HeapItem(nd, edge.to));
                }
            }
        }
        if !dist[sink].is_finite() {
            return Err(Error::Infeasible(format!(
                "only {sent} of {required} reviewer slots can be filled"
            )));
        }
        for (p, d) in potential.iter_mut().zip(&dist) {
            if d.is_finite() {
                *p += d;
            }
        }
        let mut push = required - sent;
        let mut v = sink;
        while v != src {
            let e = prev[v];
            push = push.min(edges[e].cap);
            v = edges[e ^ 1].to;
        }
        let mut v = sink;
        while v != src {
            let e = prev[v];
            edges[e].cap -= push;
            edges[e ^ 1].cap += push;
            v = edges[e ^ 1].to;
        }
        sent += push;
    }
    Ok(cell_edge
        .iter()
        .map(|&e| if e == usize::MAX { 0 } else { edges[e ^ 1].cap })
        .collect())
}

/// Maximum-weight one-to-one matching of size `min(rows, cols)` on a
/// row-major weight table. Ties between optimal matchings are broken by a
/// random infinitesimal perturbation drawn from `rng`. Returns `(row, col)`
/// pairs sorted by row.
pub fn hungarian_max(rows: usize, cols: usize, weights: &[f64], rng: &RngStream) -> Result<Vec<(usize, usize)>> {
    if weights.len() != rows * cols {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for a {rows}×{cols} matrix",
            weights.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::InvalidParameter("weights must be finite".into()));
    }
    if rows == 0 || cols == 0 {
        return Ok(Vec::new());
    }
    let scale = weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    let eta = 1e-10 * (1.0 + scale) / (rows + cols) as f64;
    let mut r = rng.rng();
    let perturbed: Vec<f64> = weights.iter().map(|w| w + eta * r.random::<f64>()).collect();
    // The solver below needs rows ≤ cols.
    let transpose = rows > cols;
    let (n, m) = if transpose { (cols, rows) } else { (rows, cols) };
    let cost = |i: usize, j: usize| {
        -if transpose {
            perturbed[j * cols + i]
        } else {
            perturbed[i * cols + j]
        }
    };
    // Shortest augmenting path with potentials (1-based, column 0 virtual).
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out: Vec<(usize, usize)> = (1..=m)
        .filter(|&j| p[j] != 0)
        .map(|j| if transpose { (j - 1, p[j] - 1) } else { (p[j] - 1, j - 1) })
        .collect();
    out.sort_unstable();
    Ok(out)
}

/// Random feasible assignment by slot replication: paper slots are matched
/// to a uniformly random injection of reviewer slots, and the draw is
/// repeated whenever a pair repeats or a forbidden pair appears.
pub fn sample_random_b_matching(spec: &LoadSpec, rng: &RngStream, rejection_cap: usize) -> Result<Vec<(ReviewerId, PaperId)>> {
    spec.check()?;
    let mut r = rng.rng();
    let mut reviewer_slots: Vec<ReviewerId> = spec
        .reviewers
        .iter()
        .zip(&spec.capacity)
        .flat_map(|(&i, &c)| std::iter::repeat_n(i, c))
        .collect();
    let paper_slots: Vec<PaperId> = spec
        .papers
        .iter()
        .zip(&spec.demand)
        .flat_map(|(&j, &d)| std::iter::repeat_n(j, d))
        .collect();
    let k = paper_slots.len();
    let mut seen = std::collections::HashSet::with_capacity(k);
    for _ in 0..=rejection_cap {
        let (chosen, _) = reviewer_slots.partial_shuffle(&mut r, k);
        seen.clear();
        let ok = chosen
            .iter()
            .zip(&paper_slots)
            .all(|(&i, &j)| !spec.forbidden.contains(&(i, j)) && seen.insert((i, j)));
        if ok {
            let mut pairs: Vec<_> = chosen.iter().copied().zip(paper_slots.iter().copied()).collect();
            pairs.sort_unstable();
            return Ok(pairs);
        }
    }
    Err(Error::RejectionCapExceeded(rejection_cap))
}

/// Random assignment of `m` reviewers to `n` papers, `lambda` reviewers per
/// paper and at most `mu` papers per reviewer.
pub fn sample_random_assignment(n: usize, m: usize, lambda: usize, mu: usize, rng: &RngStream) -> Result<Assignment> {
    let spec = LoadSpec::uniform((0..m).collect(), (0..n).collect(), lambda, mu);
    let pairs = sample_random_b_matching(&spec, rng, DEFAULT_REJECTION_CAP)?;
    Assignment::new(m, n, lambda, mu, pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sim(rows: usize, cols: usize, data: &[f64]) -> SimilarityMatrix {
        SimilarityMatrix::new(rows, cols, data.to_vec()).unwrap()
    }

    #[test]
    fn tpms_two_by_two() {
        let s = sim(2, 2, &[1.0, 2.0, 3.0, 5.0]);
        let a = solve_tpms(&s, 1, 1, &[0, 1], &[0, 1], &RngStream::new(0)).unwrap();
        assert_eq!(a.pairs(), &[(0, 0), (1, 1)]);
        assert_eq!(total_score(&s, a.pairs()), 6.0);
    }

    #[test]
    fn tpms_adversarial_block_is_diagonal() {
        let (m, n) = (8, 5);
        let s = SimilarityMatrix::from_fn(m, n, |i, j| ((m - i) * (n - j)) as f64).unwrap();
        let reviewers = [1, 3, 4, 6, 7];
        let a = solve_tpms(&s, 1, 1, &reviewers, &[0, 1, 2, 3, 4], &RngStream::new(1)).unwrap();
        let expected: Vec<_> = reviewers.iter().copied().zip(0..5).collect();
        assert_eq!(a.pairs(), expected.as_slice());
    }

    #[test]
    fn constant_scores_any_feasible() {
        let s = SimilarityMatrix::from_fn(6, 4, |_, _| 2.5).unwrap();
        let a = solve_tpms(&s, 3, 2, &(0..6).collect::<Vec<_>>(), &[0, 1, 2, 3], &RngStream::new(2)).unwrap();
        assert_eq!(a.len(), 12);
        assert_eq!(total_score(&s, a.pairs()), 30.0);
        assert!(a.reviewers_by_paper().iter().all(|r| r.len() == 3));
    }

    #[test]
    fn infeasible_loads() {
        let s = SimilarityMatrix::from_fn(2, 3, |_, _| 1.0).unwrap();
        assert!(matches!(
            solve_tpms(&s, 1, 1, &[0, 1], &[0, 1, 2], &RngStream::new(0)),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(sample_random_assignment(3, 2, 1, 1, &RngStream::new(0)), Err(Error::Infeasible(_))));
        // enough slots but a paper needs more distinct reviewers than exist
        assert!(matches!(
            solve_tpms(&s, 3, 5, &[0, 1], &[0], &RngStream::new(0)),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn bids_type_a_takes_j_papers() {
        // reviewers 0-2 bid +1 on papers 0-1 and −1 on 2-3; others bid 0
        let b = BidMatrix::from_fn(6, 4, |i, j| if i < 3 { if j < 2 { 1 } else { -1 } } else { 0 }).unwrap();
        let a = solve_bid_assignment(&b, 1, 1, &(0..6).collect::<Vec<_>>(), &[0, 1, 2, 3], &RngStream::new(4)).unwrap();
        for (i, j) in a.pairs() {
            if *j < 2 {
                assert!(*i < 3);
            } else {
                assert!(*i >= 3);
            }
        }
    }

    #[test]
    fn negative_bidder_unused() {
        let b = BidMatrix::from_fn(5, 3, |i, _| if i == 2 { -1 } else { 0 }).unwrap();
        let a = solve_bid_assignment(&b, 1, 1, &(0..5).collect::<Vec<_>>(), &[0, 1, 2], &RngStream::new(4)).unwrap();
        assert!(a.pairs().iter().all(|&(i, _)| i != 2));
        assert_eq!(total_score(&b, a.pairs()), 0.0);
    }

    #[test]
    fn forbidden_pairs_respected() {
        let s = sim(2, 2, &[5.0, 0.0, 0.0, 5.0]);
        let spec = LoadSpec::uniform(vec![0, 1], vec![0, 1], 1, 1).with_forbidden(BTreeSet::from([(0, 0)]));
        let pairs = solve_max_assignment(&s, &spec, &RngStream::new(0)).unwrap();
        assert_eq!(pairs, vec![(0, 1), (1, 0)]);
        let random = sample_random_b_matching(&spec, &RngStream::new(0), 100).unwrap();
        assert_eq!(random, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn hungarian_three_by_three() {
        let w = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let m = hungarian_max(3, 3, &w, &RngStream::new(0)).unwrap();
        assert_eq!(m, vec![(0, 0), (1, 2), (2, 1)]);
        assert_eq!(m.iter().map(|&(i, j)| w[i * 3 + j]).sum::<f64>(), 11.0);
    }

    #[test]
    fn hungarian_rectangular() {
        let w = [1.0, 9.0, 8.0, 2.0, 7.0, 3.0];
        let tall = hungarian_max(3, 2, &w, &RngStream::new(0)).unwrap();
        assert_eq!(tall, vec![(0, 1), (1, 0)]);
        let wide = hungarian_max(2, 3, &w, &RngStream::new(0)).unwrap();
        assert_eq!(wide, vec![(0, 2), (1, 1)]);
    }

    #[test]
    fn random_assignment_loads() {
        let a = sample_random_assignment(10, 20, 2, 1, &RngStream::new(9)).unwrap();
        assert!(a.reviewers_by_paper().iter().all(|r| r.len() == 2));
        assert!(a.papers_by_reviewer().iter().all(|p| p.len() == 1));
        let b = sample_random_assignment(10, 10, 2, 2, &RngStream::new(9)).unwrap();
        assert!(b.reviewers_by_paper().iter().all(|r| r.len() == 2 && r[0] != r[1]));
    }

    #[test]
    fn class_and_flow_routes_agree() {
        // two reviewer types and two paper types with λ = 2, μ = 1
        let b = BidMatrix::from_fn(10, 4, |i, j| match (i % 3 == 0, j % 2 == 0) {
            (true, true) => 1,
            (true, false) => -1,
            _ => 0,
        })
        .unwrap();
        let spec = LoadSpec::uniform((0..10).collect(), (0..4).collect(), 2, 1);
        let fast = solve_max_assignment(&b, &spec, &RngStream::new(3)).unwrap();
        let slow = solve_flow(&b, &spec).unwrap();
        assert_eq!(total_score(&b, &fast), total_score(&b, &slow));
    }
}
