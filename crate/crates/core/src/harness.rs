//! Scenario registry and Monte Carlo driver.
//!
//! Every iteration draws from its own stream derived from
//! `(seed, scenario, sweep index, iteration)`, so results do not depend on
//! the number of worker threads. Outcomes are reduced in index order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{
    bind_tuples, match_dispatch, run_procedure1, simulate_decisions, tomkins_setup, AssignmentAlgorithm, TupleSlot,
};
use crate::error::{Error, Result};
use crate::hypothesis::{counting_test, disagreement_test, tomkins_wald_test, PermutationPlan};
use crate::models::{
    gamma_for_target_correlation, gen_adversarial_similarity, gen_bidding_world, gen_calibration_world, gen_cubic_mismatch,
    gen_logistic_world, gen_relative_dual_instances, inter_reviewer_correlation, Instance, ScoreDistribution,
};
use crate::rng::RngStream;
use crate::types::{Condition, ConditionAllocation, Decisions, PaperId, ReviewerId, TestOutcome, TupleSet};

pub const DEFAULT_ITERATIONS: usize = 5000;
pub const CSV_HEADER: &str = "scenario,sweep_name,sweep_value,test,rejection_rate,mean_effect,degenerate,iters,seed";
pub const THREADS_ENV: &str = "PEERBIAS_THREADS";

pub const SCENARIO_IDS: [&str; 14] = [
    "fig1a",
    "fig1b",
    "fig1c",
    "fig2a",
    "fig2b",
    "fig2c",
    "fig3a",
    "fig3b",
    "fig4a",
    "fig4b",
    "fig5a",
    "fig5b",
    "null-calibration",
    "proposition-b",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestKind {
    Disagreement,
    Counting,
    Baseline,
}

impl TestKind {
    pub fn name(self) -> &'static str {
        match self {
            TestKind::Disagreement => "disagreement",
            TestKind::Counting => "counting",
            TestKind::Baseline => "baseline",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "disagreement" => Ok(TestKind::Disagreement),
            "counting" => Ok(TestKind::Counting),
            "baseline" => Ok(TestKind::Baseline),
            other => Err(Error::Config(format!("unknown test `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: String,
    pub sweep_name: String,
    pub grid: Vec<f64>,
    pub iterations: usize,
    pub seed: u64,
    pub alpha: f64,
    pub tests: Vec<TestKind>,
    /// Generator and design parameters; the sweep variable overrides its entry.
    pub params: BTreeMap<String, f64>,
}

fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
}

const N_GRID: [f64; 5] = [200.0, 400.0, 600.0, 800.0, 1000.0];
const PHI_GRID: [f64; 6] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5];
const MU_GRID: [f64; 7] = [1.0, 5.0, 10.0, 15.0, 20.0, 40.0, 60.0];

impl ScenarioConfig {
    /// Registered configuration for `id`.
    pub fn registered(id: &str) -> Result<Self> {
        use TestKind::*;
        let power = |phi: f64, beta2: f64, half: f64, sigma: f64, tests: Vec<TestKind>| {
            (
                "n",
                N_GRID.to_vec(),
                tests,
                params(&[
                    ("phi", phi),
                    ("beta0", 1.0),
                    ("beta1", 2.0),
                    ("beta2", beta2),
                    ("q_lo", -half),
                    ("q_hi", half),
                    ("sigma", sigma),
                    ("lambda", 2.0),
                    ("mu", 1.0),
                ]),
            )
        };
        let measurement = |sigma: f64| {
            params(&[
                ("n", 500.0),
                ("beta0", 1.0),
                ("beta1", 2.0),
                ("beta2", 0.0),
                ("q_lo", -2.0),
                ("q_hi", 2.0),
                ("sigma", sigma),
                ("lambda", 2.0),
                ("mu", 2.0),
            ])
        };
        let (sweep, grid, tests, p): (&str, Vec<f64>, Vec<TestKind>, BTreeMap<String, f64>) = match id {
            "fig1a" => power(0.4, 0.0, 1.0, 0.7, vec![Baseline, Disagreement]),
            "fig1b" => power(0.6, -0.35, 0.5, 0.7, vec![Baseline, Disagreement]),
            "fig1c" => power(0.0, 0.35, 1.0, 0.0, vec![Baseline, Disagreement]),
            "fig4a" => power(0.6, -0.35, 0.5, 0.7, vec![Baseline, Disagreement, Counting]),
            "fig4b" => power(0.0, 0.35, 1.0, 0.0, vec![Baseline, Disagreement, Counting]),
            "fig2a" => ("phi", PHI_GRID.to_vec(), vec![Baseline, Disagreement], measurement(0.7)),
            "fig2b" => ("phi", PHI_GRID.to_vec(), vec![Baseline, Disagreement], measurement(0.0)),
            "fig2c" => (
                "mu",
                MU_GRID.to_vec(),
                vec![Baseline, Disagreement],
                params(&[("n", 1000.0), ("lambda", 1.0), ("beta0", 0.0), ("beta1", 0.25), ("leniency", 0.4), ("fixed_effects", 1.0)]),
            ),
            "fig3a" => (
                "blind",
                vec![0.0, 1.0],
                vec![Baseline, Disagreement],
                params(&[("n", 1000.0), ("lambda", 1.0), ("mu", 1.0), ("type_a_prob", 0.3), ("j_prob", 0.3)]),
            ),
            "fig3b" => (
                "procedure",
                vec![0.0, 1.0],
                vec![Baseline, Disagreement],
                params(&[("n", 500.0), ("lambda", 1.0), ("mu", 1.0), ("phi", 0.45)]),
            ),
            "fig5a" | "fig5b" => (
                "instance",
                vec![1.0, 2.0],
                vec![Counting, Disagreement],
                params(&[("n", 1000.0), ("lambda", 2.0), ("mu", 1.0)]),
            ),
            "null-calibration" => (
                "phi",
                vec![0.5],
                vec![Disagreement, Counting],
                params(&[("n", 500.0), ("lambda", 2.0), ("mu", 2.0), ("beta0", 1.0), ("beta1", 2.0), ("q_lo", -2.0), ("q_hi", 2.0)]),
            ),
            "proposition-b" => (
                "mu",
                vec![1.0, 2.0, 3.0],
                vec![Disagreement, Counting],
                params(&[("n", 500.0), ("lambda", 2.0), ("phi", 0.5), ("beta0", 1.0), ("beta1", 2.0), ("q_lo", -2.0), ("q_hi", 2.0)]),
            ),
            other => return Err(Error::UnknownScenario(other.to_string())),
        };
        Ok(Self {
            scenario: id.to_string(),
            sweep_name: sweep.to_string(),
            grid,
            iterations: DEFAULT_ITERATIONS,
            seed: 0,
            alpha: 0.05,
            tests,
            params: p,
        })
    }

    /// Continuous-integration preset: 1000 iterations and half as many papers.
    pub fn ci_profile(mut self) -> Self {
        self.iterations = 1000;
        if self.sweep_name == "n" {
            self.grid.iter_mut().for_each(|v| *v = (*v / 2.0).round());
        }
        if let Some(n) = self.params.get_mut("n") {
            *n = (*n / 2.0).round();
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !SCENARIO_IDS.contains(&self.scenario.as_str()) {
            return Err(Error::UnknownScenario(self.scenario.clone()));
        }
        if self.grid.is_empty() {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha = {} outside (0, 1)", self.alpha)));
        }
        if self.tests.is_empty() {
            return Err(Error::Config("no tests selected".into()));
        }
        if let Some((k, v)) = self.params.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Config(format!("parameter {k} = {v} is not finite")));
        }
        if self.grid.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("sweep grid has a non-finite value".into()));
        }
        Ok(())
    }

    /// Override a field by dotted key: `iterations`, `seed`, `alpha`,
    /// `tests`, `sweep.name`, `sweep.grid`, `params.<name>`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("invalid value `{value}` for {what}"));
        let list = |v: &str| -> Result<Vec<f64>> {
            v.split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.trim().parse::<f64>().map_err(|_| bad(key)))
                .collect()
        };
        match key {
            "iterations" | "iters" => self.iterations = value.trim().parse().map_err(|_| bad(key))?,
            "seed" => self.seed = value.trim().parse().map_err(|_| bad(key))?,
            "alpha" => self.alpha = value.trim().parse().map_err(|_| bad(key))?,
            "tests" => {
                self.tests = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(TestKind::parse)
                    .collect::<Result<_>>()?
            }
            "sweep.name" | "sweep_name" => self.sweep_name = value.trim().to_string(),
            "sweep.grid" | "grid" => self.grid = list(value)?,
            "scenario" => {
                if value.trim() != self.scenario {
                    return Err(Error::Config("the scenario cannot be changed by an override".into()));
                }
            }
            _ => {
                let name = key
                    .strip_prefix("params.")
                    .ok_or_else(|| Error::Config(format!("unknown key `{key}`")))?;
                let v: f64 = value.trim().parse().map_err(|_| bad(key))?;
                self.params.insert(name.to_string(), v);
            }
        }
        Ok(())
    }

    /// Apply a JSON object of overrides. Nested objects are flattened into
    /// dotted keys and arrays into comma lists.
    pub fn apply_json(&mut self, json: &serde_json::Value) -> Result<()> {
        let mut flat = Vec::new();
        flatten_json("", json, &mut flat)?;
        for (k, v) in flat {
            self.set(&k, &v)?;
        }
        Ok(())
    }

    fn param(&self, key: &str, point: f64) -> Result<f64> {
        if self.sweep_name == key {
            return Ok(point);
        }
        self.params
            .get(key)
            .copied()
            .ok_or_else(|| Error::Config(format!("scenario {} needs parameter `{key}`", self.scenario)))
    }

    fn param_or(&self, key: &str, point: f64, default: f64) -> f64 {
        self.param(key, point).unwrap_or(default)
    }

    fn count(&self, key: &str, point: f64) -> Result<usize> {
        let v = self.param(key, point)?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(Error::Config(format!("parameter `{key}` = {v} must be a non-negative integer")));
        }
        Ok(v as usize)
    }

    /// Reviewer count: `params.m` when set, else `2⌈λn/μ⌉`.
    fn reviewers(&self, n: usize, lambda: usize, mu: usize, point: f64) -> Result<usize> {
        if let Ok(m) = self.count("m", point) {
            if m > 0 {
                return Ok(m);
            }
        }
        if mu == 0 {
            return Err(Error::Config("mu must be positive".into()));
        }
        Ok(2 * (lambda * n).div_ceil(mu))
    }

    /// Iteration streams are keyed by this label; the two readings of the
    /// dual instances share it so both see the same draws.
    fn stream_key(&self) -> &str {
        match self.scenario.as_str() {
            "fig5a" | "fig5b" => "fig5",
            s => s,
        }
    }

    /// Human-readable summary of the configuration.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario: {}", self.scenario);
        let _ = writeln!(out, "{}", scenario_summary(&self.scenario));
        let _ = writeln!(out, "sweep: {} over {:?}", self.sweep_name, self.grid);
        let tests: Vec<_> = self.tests.iter().map(|t| t.name()).collect();
        let _ = writeln!(out, "tests: {}", tests.join(", "));
        let _ = writeln!(out, "iterations: {}  seed: {}  alpha: {}", self.iterations, self.seed, self.alpha);
        for (k, v) in &self.params {
            let _ = writeln!(out, "  {k} = {v}");
        }
        if let (Some(&sigma), Some(&lo), Some(&hi)) = (self.params.get("sigma"), self.params.get("q_lo"), self.params.get("q_hi")) {
            if sigma > 0.0 {
                let var = ScoreDistribution::uniform(lo, hi).variance();
                let _ = writeln!(
                    out,
                    "DB inter-reviewer score correlation: {:.4}",
                    inter_reviewer_correlation(var, sigma)
                );
            }
        }
        out
    }
}

fn flatten_json(prefix: &str, v: &serde_json::Value, out: &mut Vec<(String, String)>) -> Result<()> {
    use serde_json::Value;
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                flatten_json(&key(k), v, out)?;
            }
        }
        Value::Array(items) => {
            let parts: Vec<String> = items
                .iter()
                .map(|x| match x {
                    Value::String(s) => Ok(s.clone()),
                    Value::Number(n) => Ok(n.to_string()),
                    _ => Err(Error::Config(format!("unsupported list entry under `{prefix}`"))),
                })
                .collect::<Result<_>>()?;
            out.push((prefix.to_string(), parts.join(",")));
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Number(n) => out.push((prefix.to_string(), n.to_string())),
        Value::Bool(b) => out.push((prefix.to_string(), if *b { "1".into() } else { "0".into() })),
        Value::Null => return Err(Error::Config(format!("null value for `{prefix}`"))),
    }
    Ok(())
}

pub fn scenario_summary(id: &str) -> &'static str {
    match id {
        "fig1a" => "Logistic world without bias, noisy DB scores, correlation 0.4; sweep over papers.",
        "fig1b" => "Logistic world with bias against property papers, noisy DB scores, correlation 0.6; sweep over papers.",
        "fig1c" => "Logistic world with bias in favour of property papers, exact scores, no correlation; sweep over papers.",
        "fig2a" => "Measurement error: noisy DB scores, no bias; sweep over the correlation between scores and property.",
        "fig2b" => "Model mismatch: cubic scores in the true model, exact scores, no bias; sweep over correlation.",
        "fig2c" => "Reviewer calibration: clarity-dependent leniency, no bias; sweep over reviewer load.",
        "fig3a" => "Bidding: lenient reviewers bid on property papers when SB bidding is not blind (0) or blind (1).",
        "fig3b" => "Adversarial similarity with similarity-maximising assignment: independent conditions (0) or pinned pairs (1).",
        "fig4a" => "As fig1b with the Counting test added.",
        "fig4b" => "As fig1c with the Counting test added.",
        "fig5a" => "Dual relative-bias instances read under the generalized linear model.",
        "fig5b" => "Dual relative-bias instances read under the generalized logistic model (same draws as fig5a).",
        "null-calibration" => "No bias, pinned-pair design with random assignment.",
        "proposition-b" => "No bias, independent conditions with random assignment and tuple matching; sweep over reviewer load.",
        _ => "unknown scenario",
    }
}

/// One aggregated cell of the result grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario: String,
    pub sweep_name: String,
    pub sweep_value: f64,
    pub test: String,
    pub rejection_rate: f64,
    pub mean_effect: f64,
    pub degenerate: usize,
    pub iters: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub rows: Vec<ResultRow>,
}

impl ScenarioResult {
    pub fn rate(&self, test: TestKind, sweep_value: f64) -> Option<f64> {
        self.row(test, sweep_value).map(|r| r.rejection_rate)
    }

    pub fn row(&self, test: TestKind, sweep_value: f64) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.test == test.name() && (r.sweep_value - sweep_value).abs() < 1e-9)
    }
}

/// Data a single iteration hands to the tests.
struct Trial {
    tuples: TupleSet,
    sb_decisions: Decisions,
    q_tilde: Vec<f64>,
    w: crate::types::PropertyVector,
    fixed_effects: bool,
}

fn condition_decisions(decisions: &Decisions, allocation: &ConditionAllocation, condition: Condition) -> Decisions {
    decisions
        .iter()
        .filter(|((i, _), _)| allocation.get(*i) == condition)
        .collect()
}

fn by_paper(n: usize, pairs: impl Iterator<Item = (ReviewerId, PaperId)>) -> Vec<Vec<ReviewerId>> {
    let mut out = vec![Vec::new(); n];
    pairs.for_each(|(i, j)| out[j].push(i));
    out
}

/// Sample decisions for a Tomkins-style plan and collect the trial data.
fn tomkins_trial(
    inst: &Instance,
    lambda: usize,
    mu: usize,
    sb_algo: AssignmentAlgorithm<'_>,
    db_algo: AssignmentAlgorithm<'_>,
    fixed_effects: bool,
    rng: &RngStream,
) -> Result<Trial> {
    let (n, m) = (inst.num_papers(), inst.num_reviewers());
    let plan = tomkins_setup(n, m, lambda, mu, sb_algo, db_algo, &rng.derive_str("setup"))?;
    let pairs: Vec<_> = plan.a_sb.pairs().iter().chain(plan.a_db.pairs()).copied().collect();
    let decisions = simulate_decisions(&pairs, &plan.allocation, &inst.pi_sb, &inst.pi_db, &rng.derive_str("decisions"))?;
    let slots = match_dispatch(&plan.a_sb, &plan.a_db, &inst.w, &rng.derive_str("match"))?;
    finish_trial(inst, &slots, &decisions, &plan.allocation, &plan.a_db.reviewers_by_paper(), fixed_effects, rng)
}

fn procedure1_trial(
    inst: &Instance,
    lambda: usize,
    mu: usize,
    algo: AssignmentAlgorithm<'_>,
    fixed_effects: bool,
    rng: &RngStream,
) -> Result<Trial> {
    let (n, m) = (inst.num_papers(), inst.num_reviewers());
    let plan = run_procedure1(n, m, lambda, mu, &inst.w, algo, &rng.derive_str("setup"))?;
    let decisions = simulate_decisions(plan.a_full.pairs(), &plan.allocation, &inst.pi_sb, &inst.pi_db, &rng.derive_str("decisions"))?;
    let db = by_paper(
        n,
        plan.a_full
            .pairs()
            .iter()
            .copied()
            .filter(|&(i, _)| plan.allocation.get(i) == Condition::Db),
    );
    finish_trial(inst, &plan.slots, &decisions, &plan.allocation, &db, fixed_effects, rng)
}

fn finish_trial(
    inst: &Instance,
    slots: &[TupleSlot],
    decisions: &Decisions,
    allocation: &ConditionAllocation,
    db_reviewers: &[Vec<ReviewerId>],
    fixed_effects: bool,
    rng: &RngStream,
) -> Result<Trial> {
    Ok(Trial {
        tuples: bind_tuples(slots, decisions, &inst.w, false)?,
        sb_decisions: condition_decisions(decisions, allocation, Condition::Sb),
        q_tilde: inst.reported_scores(db_reviewers, &rng.derive_str("scores"))?,
        w: inst.w.clone(),
        fixed_effects,
    })
}

fn build_trial(cfg: &ScenarioConfig, point: f64, rng: &RngStream) -> Result<Trial> {
    let world = rng.derive_str("world");
    let n = cfg.count("n", point)?;
    let lambda = cfg.count("lambda", point)?;
    let random = AssignmentAlgorithm::Random;
    let logistic_world = |mu: usize, beta2: f64, sigma: f64| -> Result<Instance> {
        let m = cfg.reviewers(n, lambda, mu, point)?;
        let dist = ScoreDistribution::uniform(cfg.param("q_lo", point)?, cfg.param("q_hi", point)?);
        let gamma = gamma_for_target_correlation(cfg.param("phi", point)?)?;
        gen_logistic_world(
            n,
            m,
            [cfg.param("beta0", point)?, cfg.param("beta1", point)?, beta2],
            dist,
            gamma,
            sigma,
            &world,
        )
    };
    match cfg.scenario.as_str() {
        "fig1a" | "fig1b" | "fig1c" | "fig4a" | "fig4b" | "fig2a" => {
            let mu = cfg.count("mu", point)?;
            let inst = logistic_world(mu, cfg.param("beta2", point)?, cfg.param("sigma", point)?)?;
            tomkins_trial(&inst, lambda, mu, random, random, false, rng)
        }
        "fig2b" => {
            let mu = cfg.count("mu", point)?;
            let m = cfg.reviewers(n, lambda, mu, point)?;
            let dist = ScoreDistribution::uniform(cfg.param("q_lo", point)?, cfg.param("q_hi", point)?);
            let gamma = gamma_for_target_correlation(cfg.param("phi", point)?)?;
            let inst = gen_cubic_mismatch(n, m, cfg.param("beta0", point)?, cfg.param("beta1", point)?, dist, gamma, &world)?;
            tomkins_trial(&inst, lambda, mu, random, random, false, rng)
        }
        "fig2c" => {
            let mu = cfg.count("mu", point)?;
            let m = cfg.reviewers(n, lambda, mu, point)?;
            let inst = gen_calibration_world(
                n,
                m,
                cfg.param("beta0", point)?,
                cfg.param("beta1", point)?,
                cfg.param("leniency", point)?,
                &world,
            )?;
            let fixed = cfg.param_or("fixed_effects", point, 0.0) != 0.0 && mu > 1;
            tomkins_trial(&inst, lambda, mu, random, random, fixed, rng)
        }
        "fig3a" => {
            let mu = cfg.count("mu", point)?;
            let m = cfg.reviewers(n, lambda, mu, point)?;
            let blind = cfg.param("blind", point)? != 0.0;
            let w = gen_bidding_world(n, m, cfg.param("type_a_prob", point)?, cfg.param("j_prob", point)?, blind, &world)?;
            tomkins_trial(
                &w.instance,
                lambda,
                mu,
                AssignmentAlgorithm::Bids(&w.sb_bids),
                AssignmentAlgorithm::Bids(&w.db_bids),
                false,
                rng,
            )
        }
        "fig3b" => {
            let mu = cfg.count("mu", point)?;
            let m = cfg.reviewers(n, lambda, mu, point)?;
            let w = gen_adversarial_similarity(n, m, cfg.param("phi", point)?, &world)?;
            let algo = AssignmentAlgorithm::Similarity(&w.similarity);
            if cfg.param("procedure", point)? == 0.0 {
                tomkins_trial(&w.instance, lambda, mu, algo, algo, false, rng)
            } else {
                procedure1_trial(&w.instance, lambda, mu, algo, false, rng)
            }
        }
        "fig5a" | "fig5b" => {
            let mu = cfg.count("mu", point)?;
            let m = cfg.reviewers(n, lambda, mu, point)?;
            let (first, second) = gen_relative_dual_instances(n, m, &world)?;
            let pick = match cfg.param("instance", point)? as i64 {
                1 => first,
                2 => second,
                other => return Err(Error::Config(format!("instance must be 1 or 2, got {other}"))),
            };
            let inst = if cfg.scenario == "fig5a" { pick.linear } else { pick.logistic };
            tomkins_trial(&inst, lambda, mu, random, random, false, rng)
        }
        "null-calibration" => {
            let mu = cfg.count("mu", point)?;
            let inst = logistic_world(mu, 0.0, 0.0)?;
            procedure1_trial(&inst, lambda, mu, random, false, rng)
        }
        "proposition-b" => {
            let mu = cfg.count("mu", point)?;
            let inst = logistic_world(mu, 0.0, 0.0)?;
            tomkins_trial(&inst, lambda, mu, random, random, false, rng)
        }
        other => Err(Error::UnknownScenario(other.to_string())),
    }
}

fn run_tests(cfg: &ScenarioConfig, trial: &Trial, rng: &RngStream) -> Result<Vec<TestOutcome>> {
    cfg.tests
        .iter()
        .map(|t| match t {
            TestKind::Disagreement => disagreement_test(&trial.tuples, cfg.alpha, &PermutationPlan::new(rng.derive_str("permutation"))),
            TestKind::Counting => counting_test(&trial.tuples, cfg.alpha),
            TestKind::Baseline => tomkins_wald_test(&trial.sb_decisions, &trial.q_tilde, &trial.w, cfg.alpha, trial.fixed_effects),
        })
        .collect()
}

/// One iteration at one sweep point: outcomes in `cfg.tests` order.
pub fn run_iteration(cfg: &ScenarioConfig, point_index: usize, iteration: usize) -> Result<Vec<TestOutcome>> {
    let point = *cfg
        .grid
        .get(point_index)
        .ok_or(Error::IndexOutOfRange {
            index: point_index,
            len: cfg.grid.len(),
        })?;
    let rng = RngStream::new(cfg.seed)
        .derive_str(cfg.stream_key())
        .derive(point_index as u64)
        .derive(iteration as u64);
    let trial = build_trial(cfg, point, &rng)?;
    run_tests(cfg, &trial, &rng.derive_str("tests"))
}

/// Worker count from `PEERBIAS_THREADS` (0 or unset: automatic).
pub fn configured_threads() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a non-negative integer, got `{v}`"))),
        _ => Ok(0),
    }
}

/// Run every sweep point and iteration, aggregating rejection rates.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    run_scenario_with_threads(cfg, configured_threads()?)
}

pub fn run_scenario_with_threads(cfg: &ScenarioConfig, threads: usize) -> Result<ScenarioResult> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let mut rows = Vec::with_capacity(cfg.grid.len() * cfg.tests.len());
    for (k, &point) in cfg.grid.iter().enumerate() {
        let outcomes: Vec<Vec<TestOutcome>> = pool.install(|| {
            (0..cfg.iterations)
                .into_par_iter()
                .map(|it| run_iteration(cfg, k, it))
                .collect::<Result<_>>()
        })?;
        for (t, test) in cfg.tests.iter().enumerate() {
            let column = outcomes.iter().map(|o| &o[t]);
            let rejects = column.clone().filter(|o| o.reject).count();
            let degenerate = column.clone().filter(|o| o.degenerate).count();
            let effect: f64 = column.map(|o| o.effect_size).sum();
            rows.push(ResultRow {
                scenario: cfg.scenario.clone(),
                sweep_name: cfg.sweep_name.clone(),
                sweep_value: point,
                test: test.name().to_string(),
                rejection_rate: rejects as f64 / cfg.iterations as f64,
                mean_effect: effect / cfg.iterations as f64,
                degenerate,
                iters: cfg.iterations,
                seed: cfg.seed,
            });
        }
    }
    Ok(ScenarioResult { rows })
}

/// Six significant digits, shortest form.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let s = format!("{x:.5e}");
    let v: f64 = s.parse().expect("formatted float parses");
    let exp = v.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let t = format!("{v:.decimals$}");
        if t.contains('.') {
            t.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            t
        }
    } else {
        s
    }
}

pub fn write_csv_to<W: Write>(result: &ScenarioResult, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for r in &result.rows {
        w.write_record([
            r.scenario.clone(),
            r.sweep_name.clone(),
            format_sig6(r.sweep_value),
            r.test.clone(),
            format_sig6(r.rejection_rate),
            format_sig6(r.mean_effect),
            r.degenerate.to_string(),
            r.iters.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(result: &ScenarioResult, path: &Path) -> Result<()> {
    write_csv_to(result, std::fs::File::create(path)?)
}

pub fn read_csv_from<R: Read>(input: R) -> Result<ScenarioResult> {
    let mut rdr = csv::Reader::from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::Config(format!("unexpected CSV header `{}`", header.join(","))));
    }
    let rows = rdr.deserialize().collect::<std::result::Result<Vec<ResultRow>, _>>()?;
    Ok(ScenarioResult { rows })
}

pub fn read_csv(path: &Path) -> Result<ScenarioResult> {
    read_csv_from(std::fs::File::open(path)?)
}
