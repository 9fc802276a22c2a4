//! Experiment designs.
//!
//! [`run_procedure1`] plans a joint experiment: it pins a sub-assignment A* in
//! which every selected paper has two reviewers and every reviewer one paper,
//! splits each pinned pair between the two conditions by a coin flip, and then
//! completes the full assignment around it. The Tomkins-style setup instead
//! splits reviewers at random and assigns each condition independently; tuples
//! are then recovered by [`exact_match`], [`greedy_match`] or
//! [`match_dispatch`].

use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use crate::assignment::{sample_random_b_matching, solve_max_assignment, BidMatrix, LoadSpec, SimilarityMatrix, DEFAULT_REJECTION_CAP};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::types::{
    AcceptanceMatrix, Assignment, Condition, ConditionAllocation, DecisionTuple, Decisions, PaperId, PropertyVector,
    ReviewerId, TupleSet,
};

/// How reviewers are assigned to papers inside a design.
#[derive(Debug, Clone, Copy)]
pub enum AssignmentAlgorithm<'a> {
    /// Random feasible assignment (slot replication with rejection).
    Random,
    /// Maximum total similarity.
    Similarity(&'a SimilarityMatrix),
    /// Maximum total bid.
    Bids(&'a BidMatrix),
}

impl AssignmentAlgorithm<'_> {
    pub fn solve(&self, spec: &LoadSpec, rng: &RngStream) -> Result<Vec<(ReviewerId, PaperId)>> {
        match self {
            AssignmentAlgorithm::Random => sample_random_b_matching(spec, rng, DEFAULT_REJECTION_CAP),
            AssignmentAlgorithm::Similarity(s) => solve_max_assignment(*s, spec, rng),
            AssignmentAlgorithm::Bids(b) => solve_max_assignment(*b, spec, rng),
        }
    }
}

/// A paper with its designated SB and DB reviewers; decisions are attached
/// later by [`bind_tuples`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct TupleSlot {
    pub paper: PaperId,
    pub sb_reviewer: ReviewerId,
    pub db_reviewer: ReviewerId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentPlan {
    /// Two reviewers per selected paper, one paper per reviewer.
    pub a_star: Assignment,
    pub allocation: ConditionAllocation,
    /// Completed assignment containing `a_star`; `λ` SB and `λ` DB reviewers per paper.
    pub a_full: Assignment,
    /// One slot per paper of `a_star`.
    pub slots: Vec<TupleSlot>,
}

/// Which branch of the pinning step ran.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PinningCase {
    /// More than `2n` reviewers: `2n` of them are drawn at random.
    ExcessReviewers,
    /// Fewer than `2n` reviewers: `m/2` papers are drawn, balanced across the property.
    ExcessPapers,
    Balanced,
}

pub fn pinning_case(n: usize, m: usize) -> PinningCase {
    match m.cmp(&(2 * n)) {
        std::cmp::Ordering::Greater => PinningCase::ExcessReviewers,
        std::cmp::Ordering::Less => PinningCase::ExcessPapers,
        std::cmp::Ordering::Equal => PinningCase::Balanced,
    }
}

/// `count` papers split as evenly as possible between `w = +1` and `w = −1`.
/// The odd paper goes to a side chosen by a coin flip; a side that runs short
/// is topped up from the other. Papers within a side are drawn uniformly.
pub fn select_balanced_papers<R: Rng>(w: &PropertyVector, count: usize, r: &mut R) -> Vec<PaperId> {
    let mut pos = w.satisfying(0);
    let mut neg = w.complement(0);
    pos.shuffle(r);
    neg.shuffle(r);
    let (lo, hi) = (count / 2, count - count / 2);
    let (mut want_pos, mut want_neg) = if r.random::<bool>() { (hi, lo) } else { (lo, hi) };
    if want_pos > pos.len() {
        want_neg += want_pos - pos.len();
        want_pos = pos.len();
    }
    if want_neg > neg.len() {
        want_pos = (want_pos + want_neg - neg.len()).min(pos.len());
        want_neg = neg.len();
    }
    let mut out: Vec<PaperId> = pos[..want_pos].iter().chain(&neg[..want_neg]).copied().collect();
    out.sort_unstable();
    out
}

/// Joint experiment design with pinned SB/DB reviewer pairs.
pub fn run_procedure1(
    n: usize,
    m: usize,
    lambda: usize,
    mu: usize,
    w: &PropertyVector,
    algorithm: AssignmentAlgorithm<'_>,
    rng: &RngStream,
) -> Result<ExperimentPlan> {
    if m % 2 == 1 {
        return Err(Error::InvalidParameter(format!("number of reviewers must be even, got {m}")));
    }
    if w.num_papers() != n {
        return Err(Error::DimensionMismatch(format!("{} property entries for {n} papers", w.num_papers())));
    }
    if lambda == 0 || mu == 0 {
        return Err(Error::InvalidParameter("loads must be positive".into()));
    }
    if (m / 2) * mu < n * lambda {
        return Err(Error::Infeasible(format!(
            "{} reviewers per condition with load {mu} cannot give {n} papers {lambda} reviewers each",
            m / 2
        )));
    }
    let mut r = rng.derive_str("selection").rng();

    // Pin A*: two reviewers per selected paper, one paper per reviewer.
    let (star_reviewers, star_papers): (Vec<ReviewerId>, Vec<PaperId>) = match pinning_case(n, m) {
        PinningCase::ExcessReviewers => {
            let mut chosen: Vec<ReviewerId> = rand::seq::index::sample(&mut r, m, 2 * n).into_vec();
            chosen.sort_unstable();
            (chosen, (0..n).collect())
        }
        PinningCase::ExcessPapers => ((0..m).collect(), select_balanced_papers(w, m / 2, &mut r)),
        PinningCase::Balanced => ((0..m).collect(), (0..n).collect()),
    };
    let star_spec = LoadSpec::uniform(star_reviewers.clone(), star_papers.clone(), 2, 1);
    let star_pairs = algorithm.solve(&star_spec, &rng.derive_str("pin"))?;
    let a_star = Assignment::new(m, n, 2, 1, star_pairs.clone())?;

    // Split each pinned pair by a coin flip, then the leftover reviewers in half.
    let mut labels = vec![Condition::Sb; m];
    let mut per_paper: Vec<Vec<ReviewerId>> = vec![Vec::new(); n];
    for &(i, j) in &star_pairs {
        per_paper[j].push(i);
    }
    let mut slots = Vec::with_capacity(star_papers.len());
    let mut split = rng.derive_str("allocation").rng();
    for &j in &star_papers {
        let (a, b) = (per_paper[j][0], per_paper[j][1]);
        let (sb, db) = if split.random::<bool>() { (a, b) } else { (b, a) };
        labels[sb] = Condition::Sb;
        labels[db] = Condition::Db;
        slots.push(TupleSlot {
            paper: j,
            sb_reviewer: sb,
            db_reviewer: db,
        });
    }
    let pinned: BTreeSet<ReviewerId> = star_pairs.iter().map(|p| p.0).collect();
    let mut leftover: Vec<ReviewerId> = (0..m).filter(|i| !pinned.contains(i)).collect();
    leftover.shuffle(&mut split);
    let half = leftover.len() / 2;
    for (k, &i) in leftover.iter().enumerate() {
        labels[i] = if k < half {
            Condition::Sb
        } else if k < 2 * half || split.random::<bool>() {
            Condition::Db
        } else {
            Condition::Sb
        };
    }
    let allocation = ConditionAllocation::new(labels);

    // Complete each condition around the pinned pairs.
    let is_star_paper = {
        let mut v = vec![false; n];
        star_papers.iter().for_each(|&j| v[j] = true);
        v
    };
    let mut full = star_pairs.clone();
    for (cond, label) in [(Condition::Sb, "complete-sb"), (Condition::Db, "complete-db")] {
        let reviewers = allocation.reviewers(cond);
        let capacity = reviewers
            .iter()
            .map(|i| if pinned.contains(i) { mu - 1 } else { mu })
            .collect();
        let papers: Vec<PaperId> = (0..n).collect();
        let demand = papers
            .iter()
            .map(|&j| if is_star_paper[j] { lambda - 1 } else { lambda })
            .collect();
        let forbidden = slots
            .iter()
            .map(|s| match cond {
                Condition::Sb => (s.sb_reviewer, s.paper),
                Condition::Db => (s.db_reviewer, s.paper),
            })
            .collect();
        let spec = LoadSpec {
            reviewers,
            papers,
            demand,
            capacity,
            forbidden,
        };
        if spec.demand.iter().any(|&d| d > 0) {
            full.extend(algorithm.solve(&spec, &rng.derive_str(label))?);
        }
    }
    full.sort_unstable();
    let a_full = Assignment::new(m, n, lambda, mu, full)?;
    debug_assert!(a_full.is_complete(&allocation));
    Ok(ExperimentPlan {
        a_star,
        allocation,
        a_full,
        slots,
    })
}

/// Independent per-condition assignments after a random reviewer split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TomkinsPlan {
    pub allocation: ConditionAllocation,
    pub a_sb: Assignment,
    pub a_db: Assignment,
}

impl TomkinsPlan {
    pub fn assignment(&self, condition: Condition) -> &Assignment {
        match condition {
            Condition::Sb => &self.a_sb,
            Condition::Db => &self.a_db,
        }
    }
}

/// Random equal split of reviewers into conditions (odd reviewer by coin
/// flip), then each condition assigns every paper `λ` reviewers.
pub fn tomkins_setup(
    n: usize,
    m: usize,
    lambda: usize,
    mu: usize,
    sb_algorithm: AssignmentAlgorithm<'_>,
    db_algorithm: AssignmentAlgorithm<'_>,
    rng: &RngStream,
) -> Result<TomkinsPlan> {
    let mut r = rng.derive_str("split").rng();
    let mut order: Vec<ReviewerId> = (0..m).collect();
    order.shuffle(&mut r);
    let mut labels = vec![Condition::Db; m];
    let sb_count = m / 2 + usize::from(m % 2 == 1 && r.random::<bool>());
    for &i in &order[..sb_count] {
        labels[i] = Condition::Sb;
    }
    let allocation = ConditionAllocation::new(labels);
    let mut out = Vec::with_capacity(2);
    for (cond, algo, label) in [
        (Condition::Sb, sb_algorithm, "assign-sb"),
        (Condition::Db, db_algorithm, "assign-db"),
    ] {
        let spec = LoadSpec::uniform(allocation.reviewers(cond), (0..n).collect(), lambda, mu);
        let pairs = algo.solve(&spec, &rng.derive_str(label))?;
        out.push(Assignment::new(m, n, lambda, mu, pairs)?);
    }
    let a_db = out.pop().expect("two conditions");
    let a_sb = out.pop().expect("two conditions");
    Ok(TomkinsPlan { allocation, a_sb, a_db })
}

/// Randomised maximum bipartite matching (augmenting paths over shuffled
/// orders). `adj[j]` lists the reviewers adjacent to paper `j`.
fn max_matching<R: Rng>(adj: &[Vec<ReviewerId>], num_reviewers: usize, r: &mut R) -> Vec<Option<ReviewerId>> {
    let mut adj: Vec<Vec<ReviewerId>> = adj.to_vec();
    adj.iter_mut().for_each(|a| a.shuffle(r));
    let mut order: Vec<PaperId> = (0..adj.len()).collect();
    order.shuffle(r);
    let mut paper_of: Vec<Option<PaperId>> = vec![None; num_reviewers];
    let mut reviewer_of: Vec<Option<ReviewerId>> = vec![None; adj.len()];
    let mut visited = vec![usize::MAX; num_reviewers];
    for (round, &j) in order.iter().enumerate() {
        // iterative DFS over alternating paths
        let mut stack: Vec<(PaperId, usize)> = vec![(j, 0)];
        let mut path: Vec<(PaperId, ReviewerId)> = Vec::new();
        let mut found = false;
        while let Some((p, k)) = stack.last_mut() {
            let p = *p;
            if *k == adj[p].len() {
                stack.pop();
                path.pop();
                continue;
            }
            let i = adj[p][*k];
            *k += 1;
            if visited[i] == round {
                continue;
            }
            visited[i] = round;
            path.push((p, i));
            match paper_of[i] {
                None => {
                    found = true;
                    break;
                }
                Some(next) => stack.push((next, 0)),
            }
        }
        if found {
            for &(p, i) in &path {
                paper_of[i] = Some(p);
                reviewer_of[p] = Some(i);
            }
        }
    }
    reviewer_of
}

/// One tuple per paper from maximum matchings SB↔papers and DB↔papers.
/// Requires `λ ≥ μ`, under which every paper is matched on both sides.
pub fn exact_match(a_sb: &Assignment, a_db: &Assignment, rng: &RngStream) -> Result<Vec<TupleSlot>> {
    if a_sb.lambda() < a_sb.mu() {
        return Err(Error::InvalidParameter(format!(
            "exact matching needs λ ≥ μ (got λ = {}, μ = {}); use greedy matching",
            a_sb.lambda(),
            a_sb.mu()
        )));
    }
    let mut r = rng.rng();
    let sb = max_matching(&a_sb.reviewers_by_paper(), a_sb.num_reviewers(), &mut r);
    let db = max_matching(&a_db.reviewers_by_paper(), a_db.num_reviewers(), &mut r);
    Ok(sb
        .iter()
        .zip(&db)
        .enumerate()
        .filter_map(|(j, (s, d))| {
            Some(TupleSlot {
                paper: j,
                sb_reviewer: (*s)?,
                db_reviewer: (*d)?,
            })
        })
        .collect())
}

/// Alternately draws a uniformly random (SB reviewer, paper, DB reviewer)
/// triple with a `w = +1` paper and one with a `w = −1` paper, removing the
/// reviewers used, until neither kind remains.
pub fn greedy_match(a_sb: &Assignment, a_db: &Assignment, w: &PropertyVector, rng: &RngStream) -> Vec<TupleSlot> {
    let n = a_sb.num_papers();
    let mut sb_of = a_sb.reviewers_by_paper();
    let mut db_of = a_db.reviewers_by_paper();
    let sb_papers = a_sb.papers_by_reviewer();
    let db_papers = a_db.papers_by_reviewer();
    let mut r = rng.rng();
    let mut slots = Vec::new();
    let remove = |lists: &mut [Vec<ReviewerId>], papers: &[PaperId], i: ReviewerId| {
        for &j in papers {
            lists[j].retain(|&x| x != i);
        }
    };
    loop {
        let mut any = false;
        for side in [1i8, -1] {
            let weights: Vec<usize> = (0..n)
                .map(|j| if w.get(j) == side { sb_of[j].len() * db_of[j].len() } else { 0 })
                .collect();
            let total: usize = weights.iter().sum();
            if total == 0 {
                continue;
            }
            let mut pick = r.random_range(0..total);
            let j = weights
                .iter()
                .position(|&wt| {
                    if pick < wt {
                        true
                    } else {
                        pick -= wt;
                        false
                    }
                })
                .expect("pick below total weight");
            let i1 = *sb_of[j].choose(&mut r).expect("nonempty");
            let i2 = *db_of[j].choose(&mut r).expect("nonempty");
            remove(&mut sb_of, &sb_papers[i1], i1);
            remove(&mut db_of, &db_papers[i2], i2);
            slots.push(TupleSlot {
                paper: j,
                sb_reviewer: i1,
                db_reviewer: i2,
            });
            any = true;
        }
        if !any {
            return slots;
        }
    }
}

/// Exact matching when `λ ≥ μ`, greedy otherwise, followed by a greedy pass
/// over the reviewers the first pass left unused.
pub fn match_dispatch(a_sb: &Assignment, a_db: &Assignment, w: &PropertyVector, rng: &RngStream) -> Result<Vec<TupleSlot>> {
    let mut slots = if a_sb.lambda() >= a_sb.mu() {
        exact_match(a_sb, a_db, &rng.derive_str("exact"))?
    } else {
        greedy_match(a_sb, a_db, w, &rng.derive_str("greedy"))
    };
    let used_sb: BTreeSet<ReviewerId> = slots.iter().map(|s| s.sb_reviewer).collect();
    let used_db: BTreeSet<ReviewerId> = slots.iter().map(|s| s.db_reviewer).collect();
    let rest = |a: &Assignment, used: &BTreeSet<ReviewerId>| {
        let pairs = a.pairs().iter().copied().filter(|(i, _)| !used.contains(i)).collect();
        Assignment::new(a.num_reviewers(), a.num_papers(), a.lambda(), a.mu(), pairs)
    };
    slots.extend(greedy_match(&rest(a_sb, &used_sb)?, &rest(a_db, &used_db)?, w, &rng.derive_str("leftover")));
    Ok(slots)
}

/// Every SB and DB review of each paper paired in order; reviewers recur
/// across tuples. Opt-in only: the tests lose their calibration guarantee on
/// such sets.
pub fn full_assignment_slots(a_sb: &Assignment, a_db: &Assignment) -> Vec<TupleSlot> {
    let sb = a_sb.reviewers_by_paper();
    let db = a_db.reviewers_by_paper();
    sb.iter()
        .zip(&db)
        .enumerate()
        .flat_map(|(j, (s, d))| {
            s.iter().zip(d).map(move |(&sb_reviewer, &db_reviewer)| TupleSlot {
                paper: j,
                sb_reviewer,
                db_reviewer,
            })
        })
        .collect()
}

/// Bernoulli decisions for every pair, SB reviewers drawing from `pi_sb`
/// and DB reviewers from `pi_db`.
pub fn simulate_decisions(
    pairs: &[(ReviewerId, PaperId)],
    allocation: &ConditionAllocation,
    pi_sb: &AcceptanceMatrix,
    pi_db: &AcceptanceMatrix,
    rng: &RngStream,
) -> Result<Decisions> {
    for pi in [pi_sb, pi_db] {
        if pi.rows() != allocation.len() {
            return Err(Error::DimensionMismatch(format!(
                "acceptance matrix has {} rows for {} reviewers",
                pi.rows(),
                allocation.len()
            )));
        }
    }
    let mut r = rng.rng();
    let mut out = Decisions::default();
    for &(i, j) in pairs {
        let pi = match allocation.get(i) {
            Condition::Sb => pi_sb,
            Condition::Db => pi_db,
        };
        if j >= pi.cols() {
            return Err(Error::DimensionMismatch(format!("paper {j} outside acceptance matrix")));
        }
        out.insert(i, j, u8::from(r.random::<f64>() < pi.entry(i, j)));
    }
    Ok(out)
}

/// Attach decisions and properties to tuple slots.
pub fn bind_tuples(slots: &[TupleSlot], decisions: &Decisions, w: &PropertyVector, reuses_reviewers: bool) -> Result<TupleSet> {
    let tuples = slots
        .iter()
        .map(|s| {
            let lookup = |i: ReviewerId| {
                decisions
                    .get(i, s.paper)
                    .ok_or_else(|| Error::InvalidParameter(format!("no decision for reviewer {i} on paper {}", s.paper)))
            };
            Ok(DecisionTuple {
                paper: s.paper,
                sb_decision: lookup(s.sb_reviewer)?,
                db_decision: lookup(s.db_reviewer)?,
                properties: w.row(s.paper).to_vec(),
                sb_reviewer: s.sb_reviewer,
                db_reviewer: s.db_reviewer,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TupleSet {
        tuples,
        reuses_reviewers,
    })
}

/// Pairs a slot list touches.
pub fn slot_pairs(slots: &[TupleSlot]) -> Vec<(ReviewerId, PaperId)> {
    slots
        .iter()
        .flat_map(|s| [(s.sb_reviewer, s.paper), (s.db_reviewer, s.paper)])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::validate_tuple_set;

    fn alternating(n: usize) -> PropertyVector {
        PropertyVector::new((0..n).map(|j| if j % 2 == 0 { 1 } else { -1 }).collect()).unwrap()
    }

    fn slots_to_set(slots: &[TupleSlot], w: &PropertyVector) -> TupleSet {
        TupleSet::new(
            slots
                .iter()
                .map(|s| DecisionTuple {
                    paper: s.paper,
                    sb_decision: 0,
                    db_decision: 0,
                    properties: w.row(s.paper).to_vec(),
                    sb_reviewer: s.sb_reviewer,
                    db_reviewer: s.db_reviewer,
                })
                .collect(),
        )
    }

    #[test]
    fn balanced_case_unit_loads() {
        let n = 12;
        let w = alternating(n);
        let plan = run_procedure1(n, 2 * n, 1, 1, &w, AssignmentAlgorithm::Random, &RngStream::new(1)).unwrap();
        assert_eq!(plan.a_star.pairs(), plan.a_full.pairs());
        assert_eq!(plan.slots.len(), n);
        let reviewers: BTreeSet<_> = plan.slots.iter().flat_map(|s| [s.sb_reviewer, s.db_reviewer]).collect();
        assert_eq!(reviewers.len(), 2 * n);
        assert!(validate_tuple_set(&slots_to_set(&plan.slots, &w), Some(&plan.allocation)).is_ok());
    }

    #[test]
    fn excess_papers_balance() {
        let w = PropertyVector::new(vec![1, 1, 1, 1, -1, -1, -1, -1, -1, -1]).unwrap();
        let mut counts = BTreeSet::new();
        for seed in 0..50 {
            let plan = run_procedure1(10, 10, 1, 2, &w, AssignmentAlgorithm::Random, &RngStream::new(seed)).unwrap();
            assert_eq!(plan.slots.len(), 5);
            counts.insert(plan.slots.iter().filter(|s| w.get(s.paper) == 1).count());
            assert!(plan.a_full.is_complete(&plan.allocation));
        }
        assert_eq!(counts, BTreeSet::from([2, 3]));
    }

    #[test]
    fn balanced_selection_caps_short_side() {
        let w = PropertyVector::new(vec![1, -1, -1, -1, -1, -1, -1, -1]).unwrap();
        let mut r = RngStream::new(2).rng();
        let chosen = select_balanced_papers(&w, 4, &mut r);
        assert_eq!(chosen.len(), 4);
        assert!(chosen.contains(&0));
    }

    #[test]
    fn excess_reviewers_completion() {
        let n = 6;
        let w = alternating(n);
        let plan = run_procedure1(n, 6 * n, 2, 3, &w, AssignmentAlgorithm::Random, &RngStream::new(5)).unwrap();
        assert_eq!(plan.a_star.len(), 2 * n);
        assert!(plan.a_full.is_complete(&plan.allocation));
        assert!(plan.a_star.pairs().iter().all(|&(i, j)| plan.a_full.contains(i, j)));
        assert_eq!(plan.allocation.count(Condition::Sb), 3 * n);
    }

    #[test]
    fn odd_reviewer_count_rejected() {
        let w = alternating(4);
        assert!(run_procedure1(4, 9, 1, 1, &w, AssignmentAlgorithm::Random, &RngStream::new(0)).is_err());
    }

    #[test]
    fn procedure1_with_similarity_pins_sorted_pairs() {
        let (n, m) = (5, 10);
        let s = SimilarityMatrix::from_fn(m, n, |i, j| ((m - i) * (n - j)) as f64).unwrap();
        let plan = run_procedure1(n, m, 1, 1, &alternating(n), AssignmentAlgorithm::Similarity(&s), &RngStream::new(0)).unwrap();
        for slot in &plan.slots {
            let mut pair = [slot.sb_reviewer, slot.db_reviewer];
            pair.sort_unstable();
            assert_eq!(pair, [2 * slot.paper, 2 * slot.paper + 1]);
        }
    }

    #[test]
    fn exact_match_covers_all_papers() {
        let n = 3;
        let w = alternating(n);
        for seed in 0..20 {
            let plan = tomkins_setup(n, 12, 2, 1, AssignmentAlgorithm::Random, AssignmentAlgorithm::Random, &RngStream::new(seed)).unwrap();
            let slots = exact_match(&plan.a_sb, &plan.a_db, &RngStream::new(seed)).unwrap();
            assert_eq!(slots.len(), n);
            assert!(validate_tuple_set(&slots_to_set(&slots, &w), Some(&plan.allocation)).is_ok());
        }
    }

    #[test]
    fn exact_match_rejects_small_lambda() {
        let plan = tomkins_setup(16, 32, 1, 2, AssignmentAlgorithm::Random, AssignmentAlgorithm::Random, &RngStream::new(1)).unwrap();
        assert!(exact_match(&plan.a_sb, &plan.a_db, &RngStream::new(1)).is_err());
    }

    #[test]
    fn greedy_bound_and_validity() {
        let n = 16;
        let w = alternating(n);
        for seed in 0..20 {
            let plan = tomkins_setup(n, 32, 1, 2, AssignmentAlgorithm::Random, AssignmentAlgorithm::Random, &RngStream::new(seed)).unwrap();
            let slots = greedy_match(&plan.a_sb, &plan.a_db, &w, &RngStream::new(seed));
            let pos = slots.iter().filter(|s| w.get(s.paper) == 1).count();
            assert!(pos >= 1 && slots.len() - pos >= 1);
            assert!(validate_tuple_set(&slots_to_set(&slots, &w), Some(&plan.allocation)).is_ok());
            // first tuple w = +1, second w = −1 while both sides last
            assert_eq!(w.get(slots[0].paper), 1);
            assert_eq!(w.get(slots[1].paper), -1);
        }
    }

    #[test]
    fn greedy_with_empty_side() {
        let w = PropertyVector::new(vec![-1; 8]).unwrap();
        let plan = tomkins_setup(8, 16, 1, 1, AssignmentAlgorithm::Random, AssignmentAlgorithm::Random, &RngStream::new(3)).unwrap();
        let slots = greedy_match(&plan.a_sb, &plan.a_db, &w, &RngStream::new(3));
        assert_eq!(slots.len(), 8);
        assert!(slots.iter().all(|s| w.get(s.paper) == -1));
    }

    #[test]
    fn dispatch_adds_leftover_tuples() {
        let n = 10;
        let w = alternating(n);
        let plan = tomkins_setup(n, 4 * n, 2, 1, AssignmentAlgorithm::Random, AssignmentAlgorithm::Random, &RngStream::new(8)).unwrap();
        let exact = exact_match(&plan.a_sb, &plan.a_db, &RngStream::new(8)).unwrap();
        let all = match_dispatch(&plan.a_sb, &plan.a_db, &w, &RngStream::new(8)).unwrap();
        assert_eq!(exact.len(), n);
        assert_eq!(all.len(), 2 * n);
        assert!(validate_tuple_set(&slots_to_set(&all, &w), Some(&plan.allocation)).is_ok());
    }

    #[test]
    fn binding_and_full_assignment() {
        let n = 4;
        let w = alternating(n);
        let plan = tomkins_setup(n, 8, 2, 2, AssignmentAlgorithm::Random, AssignmentAlgorithm::Random, &RngStream::new(0)).unwrap();
        let slots = full_assignment_slots(&plan.a_sb, &plan.a_db);
        assert_eq!(slots.len(), 2 * n);
        let pi = AcceptanceMatrix::per_paper(Condition::Sb, 8, vec![1.0; n]).unwrap();
        let all_pairs: Vec<_> = plan.a_sb.pairs().iter().chain(plan.a_db.pairs()).copied().collect();
        let d = simulate_decisions(&all_pairs, &plan.allocation, &pi, &pi.with_condition(Condition::Db), &RngStream::new(0)).unwrap();
        let t = bind_tuples(&slots, &d, &w, true).unwrap();
        assert!(t.iter().all(|x| x.sb_decision == 1 && x.db_decision == 1));
        assert!(validate_tuple_set(&t, None).is_ok());
        assert!(bind_tuples(&slots, &Decisions::default(), &w, true).is_err());
    }
}
