//! Time-consistency checkers.
//!
//! Every checker quantifies a consistency statement over a set of payoff
//! instances (named inputs plus seeded random draws) and returns a
//! [`Verdict`]: either everything held within the comparison tolerance,
//! or a concrete, shrunk witness of the violation. Inequalities pass with
//! an `epsilon` margin; a reported violation always re-evaluates to a gap
//! strictly beyond `epsilon`.
//!
//! The generic check verifies `phi_t(X) >= mu_{t,s}(phi_s(X), X)` (the
//! recursive form) and cross-checks the threshold form — quantified over
//! preference levels `m` — on sampled levels including the tight one.
//! Weak and semi-weak checkers evaluate every condition of the respective
//! equivalence and insist the verdicts agree instance by instance;
//! disagreement is an implementation bug surfaced as `EquivalenceBroken`,
//! never a silent majority vote.

use std::sync::Arc;


use crate::cond_ops;
use crate::error::{Error, Result};
use crate::extreal::ExtReal;
use crate::lm_measures::LmMeasure;
use crate::prob_space::{FilteredSpace, Payoff, PayoffKind, RandomVariable};
use crate::sampling::Sampler;
use crate::update_rules::{self, Direction, UpdateRule};

/// Which time pairs a check ranges over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Scope {
    OneStep,
    Full,
}

impl std::str::FromStr for Scope {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "one-step" => Ok(Scope::OneStep),
            "full" => Ok(Scope::Full),
            other => Err(format!("unknown scope {other:?} (one-step|full)")),
        }
    }
}

/// Tolerances, seed and sample counts shared by the checkers.
#[derive(Clone, Debug, serde::Serialize)]
pub struct CheckConfig {
    /// Margin for inequality comparisons.
    pub epsilon: f64,
    /// Seed for the instance and level streams.
    pub seed: u64,
    /// Random instances added to the named inputs.
    pub extra_random: usize,
    /// Random preference levels per comparison in threshold forms.
    pub level_samples: usize,
    /// Infinity rate for random payoff entries. Payoff domains are
    /// finite-valued, so this defaults to zero.
    pub payoff_infinity_rate: f64,
    /// Infinity rate for random preference levels.
    pub level_infinity_rate: f64,
    /// Tolerance for monotone bisection searches.
    pub bisect_tol: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            epsilon: 1e-9,
            seed: 0x7c1ab,
            extra_random: 48,
            level_samples: 3,
            payoff_infinity_rate: 0.0,
            level_infinity_rate: 0.2,
            bisect_tol: 1e-8,
        }
    }
}

impl CheckConfig {
    pub fn with_seed(seed: u64) -> Self {
        CheckConfig {
            seed,
            ..CheckConfig::default()
        }
    }
}

/// Serializable payoff snapshot carried inside witnesses.
#[derive(Clone, Debug, serde::Serialize)]
pub enum PayoffDump {
    Variable(Vec<ExtReal>),
    Process(Vec<Vec<ExtReal>>),
}

impl From<&Payoff> for PayoffDump {
    fn from(p: &Payoff) -> Self {
        match p {
            Payoff::Variable(x) => PayoffDump::Variable(x.values().to_vec()),
            Payoff::Process(v) => PayoffDump::Process(
                v.rows().iter().map(|r| r.values().to_vec()).collect(),
            ),
        }
    }
}

/// A reproducible violation: the instance, the times, the violating
/// outcome and its atom, both sides of the inequality and the gap.
#[derive(Clone, Debug, serde::Serialize)]
pub struct Witness {
    pub form: String,
    pub t: usize,
    pub s: usize,
    pub outcome: usize,
    pub atom: Vec<usize>,
    pub lhs: ExtReal,
    pub rhs: ExtReal,
    pub gap: f64,
    pub payoff: PayoffDump,
    pub level: Option<Vec<ExtReal>>,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct Verdict {
    pub holds: bool,
    pub checked: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub witness: Option<Witness>,
}

impl Verdict {
    fn passing(checked: usize, cfg: &CheckConfig) -> Self {
        Verdict {
            holds: true,
            checked,
            seed: cfg.seed,
            epsilon: cfg.epsilon,
            witness: None,
        }
    }

    fn violated(checked: usize, cfg: &CheckConfig, witness: Witness) -> Self {
        Verdict {
            holds: false,
            checked,
            seed: cfg.seed,
            epsilon: cfg.epsilon,
            witness: Some(witness),
        }
    }
}

/// Positive when `required` fails beyond tolerance: for `Accept` the
/// requirement is `lhs >= rhs`, for `Reject` it is `lhs <= rhs`.
pub fn violation_gap(direction: Direction, lhs: ExtReal, rhs: ExtReal) -> f64 {
    match direction {
        Direction::Accept => lhs.shortfall(rhs),
        Direction::Reject => rhs.shortfall(lhs),
    }
}

fn worst_outcome(
    direction: Direction,
    lhs: &RandomVariable,
    rhs: &RandomVariable,
) -> (usize, f64) {
    let mut worst = (0usize, f64::NEG_INFINITY);
    for w in 0..lhs.space().outcome_count() {
        let gap = violation_gap(direction, lhs.value(w), rhs.value(w));
        if gap > worst.1 {
            worst = (w, gap);
        }
    }
    worst
}

fn gather_instances(
    kind: PayoffKind,
    space: &Arc<FilteredSpace>,
    inputs: &[Payoff],
    cfg: &CheckConfig,
) -> Result<Vec<Payoff>> {
    let mut instances = Vec::with_capacity(inputs.len() + cfg.extra_random);
    for x in inputs {
        if x.kind() != kind {
            return Err(Error::KindMismatch {
                expected: kind.label(),
                got: x.kind().label(),
            });
        }
        if **x.space() != **space {
            return Err(Error::SpaceMismatch);
        }
        instances.push(x.clone());
    }
    let mut sampler = Sampler::new(cfg.seed);
    for _ in 0..cfg.extra_random {
        instances.push(sampler.payoff(space, kind, cfg.payoff_infinity_rate));
    }
    Ok(instances)
}

fn time_pairs(space: &FilteredSpace, scope: Scope) -> Vec<(usize, usize)> {
    let horizon = space.horizon();
    let mut pairs = Vec::new();
    for t in 0..horizon {
        match scope {
            Scope::OneStep => pairs.push((t, t + 1)),
            Scope::Full => {
                for s in t + 1..=horizon {
                    pairs.push((t, s));
                }
            }
        }
    }
    pairs
}

/// Shrinks a violating payoff by zeroing per-atom blocks and rounding
/// values while the violation (as judged by `still_violated`) persists.
fn shrink_payoff(payoff: &Payoff, still_violated: &dyn Fn(&Payoff) -> bool) -> Payoff {
    let mut current = payoff.clone();
    for round_pass in [false, true] {
        let candidates: Vec<Payoff> = match &current {
            Payoff::Variable(x) => {
                let space = x.space().clone();
                (0..space.outcome_count())
                    .filter_map(|w| {
                        let mut values = x.values().to_vec();
                        values[w] = if round_pass {
                            round_value(values[w])?
                        } else {
                            ExtReal::ZERO
                        };
                        RandomVariable::new(Arc::clone(&space), values)
                            .ok()
                            .map(Payoff::Variable)
                    })
                    .collect()
            }
            Payoff::Process(v) => {
                let space = v.space().clone();
                let mut cands = Vec::new();
                for t in 0..=space.horizon() {
                    for atom in space.atoms(t).expect("valid time") {
                        let row = v.row(t);
                        let old = row.value(atom[0]);
                        let new = if round_pass {
                            match round_value(old) {
                                Some(nv) => nv,
                                None => continue,
                            }
                        } else {
                            ExtReal::ZERO
                        };
                        if new == old {
                            continue;
                        }
                        let mut values = row.values().to_vec();
                        for &w in atom {
                            values[w] = new;
                        }
                        if let Ok(new_row) = RandomVariable::new(Arc::clone(&space), values) {
                            let mut rows = v.rows().to_vec();
                            rows[t] = new_row;
                            if let Ok(p) =
                                crate::prob_space::AdaptedProcess::new(Arc::clone(&space), rows)
                            {
                                cands.push(Payoff::Process(p));
                            }
                        }
                    }
                }
                cands
            }
        };
        for cand in candidates {
            if cand != current && still_violated(&cand) {
                current = cand;
            }
        }
    }
    current
}

fn round_value(v: ExtReal) -> Option<ExtReal> {
    let x = v.as_f64()?;
    let rounded = x.round();
    if rounded == x {
        None
    } else {
        Some(ExtReal::finite(rounded))
    }
}

fn build_witness(
    form: &str,
    direction: Direction,
    t: usize,
    s: usize,
    payoff: &Payoff,
    level: Option<&RandomVariable>,
    lhs: &RandomVariable,
    rhs: &RandomVariable,
) -> Witness {
    let (outcome, gap) = worst_outcome(direction, lhs, rhs);
    let space = lhs.space();
    let atom_id = space.atom_of(t, outcome).expect("t in range");
    Witness {
        form: form.to_string(),
        t,
        s,
        outcome,
        atom: space.atoms(t).expect("t in range")[atom_id].clone(),
        lhs: lhs.value(outcome),
        rhs: rhs.value(outcome),
        gap,
        payoff: payoff.into(),
        level: level.map(|m| m.values().to_vec()),
    }
}

/// Candidate preference levels for the threshold form at time `s`: the
/// tight level itself, slack-shifted copies, and unconstrained random
/// levels kept only when they satisfy the premise.
fn level_candidates(
    sampler: &mut Sampler,
    direction: Direction,
    level: &RandomVariable,
    s: usize,
    cfg: &CheckConfig,
) -> Vec<RandomVariable> {
    let space = level.space().clone();
    let mut out = vec![level.clone()];
    for _ in 0..cfg.level_samples {
        let slack = sampler.nonneg_measurable(&space, s, cfg.level_infinity_rate);
        let shifted = match direction {
            Direction::Accept => level.sub(&slack),
            Direction::Reject => level.add(&slack),
        };
        if let Ok(m) = shifted {
            out.push(m);
        }
        let free = sampler.measurable(&space, s, cfg.level_infinity_rate);
        let premise_holds = match direction {
            Direction::Accept => free.le(level).unwrap_or(false),
            Direction::Reject => level.le(&free).unwrap_or(false),
        };
        if premise_holds {
            out.push(free);
        }
    }
    out
}

/// Generic mu-consistency check in its recursive form, with the
/// threshold form cross-checked on sampled levels.
pub fn check_mu_tc(
    phi: &LmMeasure,
    mu: &UpdateRule,
    direction: Direction,
    scope: Scope,
    space: &Arc<FilteredSpace>,
    inputs: &[Payoff],
    cfg: &CheckConfig,
) -> Result<Verdict> {
    if mu.needs_process() && phi.kind() != PayoffKind::Processes {
        return Err(Error::KindMismatch {
            expected: "processes",
            got: phi.kind().label(),
        });
    }
    let instances = gather_instances(phi.kind(), space, inputs, cfg)?;
    let pairs = time_pairs(space, scope);
    let mut sampler = Sampler::new(cfg.seed ^ 0x9e3779b97f4a7c15);
    let mut checked = 0usize;

    for x in &instances {
        for &(t, s) in &pairs {
            let lhs = phi.evaluate(t, x)?;
            let level = phi.evaluate(s, x)?;
            let rhs = mu.evaluate(t, s, &level, x)?;
            checked += 1;
            let (_, recursive_gap) = worst_outcome(direction, &lhs, &rhs);
            if recursive_gap > cfg.epsilon {
                let witness = minimize_mu_witness(phi, mu, direction, t, s, x, cfg);
                return Ok(Verdict::violated(checked, cfg, witness));
            }

            for m in level_candidates(&mut sampler, direction, &level, s, cfg) {
                let rhs_m = mu.evaluate(t, s, &m, x)?;
                checked += 1;
                let (_, gap) = worst_outcome(direction, &lhs, &rhs_m);
                if gap > cfg.epsilon {
                    if recursive_gap <= 0.0 {
                        return Err(Error::EquivalenceBroken(format!(
                            "threshold form violated (gap {gap:.3e}) while the recursive \
                             form held strictly at t={t}, s={s}; the rule is not monotone"
                        )));
                    }
                    let witness =
                        build_witness("threshold", direction, t, s, x, Some(&m), &lhs, &rhs_m);
                    return Ok(Verdict::violated(checked, cfg, witness));
                }
            }
        }
    }
    Ok(Verdict::passing(checked, cfg))
}

fn minimize_mu_witness(
    phi: &LmMeasure,
    mu: &UpdateRule,
    direction: Direction,
    t: usize,
    s: usize,
    payoff: &Payoff,
    cfg: &CheckConfig,
) -> Witness {
    let eval = |p: &Payoff| -> Result<(RandomVariable, RandomVariable)> {
        let lhs = phi.evaluate(t, p)?;
        let level = phi.evaluate(s, p)?;
        let rhs = mu.evaluate(t, s, &level, p)?;
        Ok((lhs, rhs))
    };
    let still_violated = |p: &Payoff| -> bool {
        eval(p)
            .map(|(lhs, rhs)| worst_outcome(direction, &lhs, &rhs).1 > cfg.epsilon)
            .unwrap_or(false)
    };
    let shrunk = shrink_payoff(payoff, &still_violated);
    let (lhs, rhs) = eval(&shrunk).expect("shrunk payoff still evaluates");
    build_witness("recursive", direction, t, s, &shrunk, None, &lhs, &rhs)
}

/// Per-condition outcomes of the weak-consistency equivalence on one
/// instance and time pair.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ConditionRecord {
    pub instance: usize,
    pub t: usize,
    pub s: usize,
    /// threshold form quantified at the later time
    pub level_form: bool,
    /// recursive form against the adapted extremum
    pub recursive_form: bool,
    /// threshold form quantified at the earlier time
    pub early_level_form: bool,
    /// zero-level form for measures with cash additivity; `None` when not
    /// applicable on this instance
    pub zero_form: Option<bool>,
}

impl ConditionRecord {
    pub fn agrees(&self) -> bool {
        let base = self.recursive_form;
        self.level_form == base
            && self.early_level_form == base
            && self.zero_form.map_or(true, |z| z == base)
    }
}

fn adapted_extremum(
    direction: Direction,
    m: &RandomVariable,
    t: usize,
) -> Result<RandomVariable> {
    match direction {
        Direction::Accept => cond_ops::cond_essinf(m, t),
        Direction::Reject => cond_ops::cond_esssup(m, t),
    }
}

/// Weak consistency for measures on terminal cash-flows: evaluates the
/// equivalent conditions (threshold at `s`, recursive, threshold at `t`,
/// and the zero-level form for cash-additive measures), asserts they
/// agree per instance, and reports the recursive form as the verdict.
pub fn check_weak_tc(
    phi: &LmMeasure,
    direction: Direction,
    space: &Arc<FilteredSpace>,
    inputs: &[Payoff],
    cfg: &CheckConfig,
) -> Result<Verdict> {
    check_weak_tc_detailed(phi, direction, space, inputs, cfg).map(|(v, _)| v)
}

pub fn check_weak_tc_detailed(
    phi: &LmMeasure,
    direction: Direction,
    space: &Arc<FilteredSpace>,
    inputs: &[Payoff],
    cfg: &CheckConfig,
) -> Result<(Verdict, Vec<ConditionRecord>)> {
    if phi.kind() != PayoffKind::Variables {
        return Err(Error::KindMismatch {
            expected: "variables",
            got: phi.kind().label(),
        });
    }
    let instances = gather_instances(phi.kind(), space, inputs, cfg)?;
    let pairs = time_pairs(space, Scope::Full);
    let mut sampler = Sampler::new(cfg.seed ^ 0x51_7e_a5);
    let mut checked = 0usize;
    let mut records = Vec::new();
    let mut first_witness: Option<Witness> = None;

    for (i, x) in instances.iter().enumerate() {
        for &(t, s) in &pairs {
            let lhs = phi.evaluate(t, x)?;
            let level = phi.evaluate(s, x)?;
            let gate = adapted_extremum(direction, &level, t)?;
            checked += 1;

            // recursive form
            let (_, recursive_gap) = worst_outcome(direction, &lhs, &gate);
            let recursive_form = recursive_gap <= cfg.epsilon;
            if !recursive_form && first_witness.is_none() {
                let witness = minimize_weak_witness(phi, direction, t, s, x, cfg);
                first_witness = Some(witness);
            }

            // threshold form at s
            let mut level_form = true;
            for m in level_candidates(&mut sampler, direction, &level, s, cfg) {
                let rhs = adapted_extremum(direction, &m, t)?;
                checked += 1;
                if worst_outcome(direction, &lhs, &rhs).1 > cfg.epsilon {
                    level_form = false;
                    break;
                }
            }

            // threshold form at t: tight candidate is the gate itself
            let mut early_level_form = true;
            for m_t in level_candidates(&mut sampler, direction, &gate, t, cfg) {
                // premise: the level at s dominates the early threshold
                let premise = match direction {
                    Direction::Accept => m_t.le(&level)?,
                    Direction::Reject => level.le(&m_t)?,
                };
                if !premise {
                    continue;
                }
                checked += 1;
                if worst_outcome(direction, &lhs, &m_t).1 > cfg.epsilon {
                    early_level_form = false;
                    break;
                }
            }

            // zero-level form via the shifted instance, for cash-additive
            // measures with a finite gate
            let zero_form = if phi.flags().monetary_utility
                && gate.values().iter().all(|v| v.is_finite())
            {
                let shifted = Payoff::Variable(x.as_variable().expect("variables kind").sub(&gate)?);
                let prem = phi.evaluate(s, &shifted)?;
                let zero = RandomVariable::zero(space);
                let premise_ok = match direction {
                    Direction::Accept => {
                        worst_outcome(Direction::Accept, &prem, &zero).1 <= cfg.epsilon
                    }
                    Direction::Reject => {
                        worst_outcome(Direction::Reject, &prem, &zero).1 <= cfg.epsilon
                    }
                };
                if premise_ok {
                    checked += 1;
                    let concl = phi.evaluate(t, &shifted)?;
                    Some(worst_outcome(direction, &concl, &zero).1 <= cfg.epsilon)
                } else {
                    None
                }
            } else {
                None
            };

            let record = ConditionRecord {
                instance: i,
                t,
                s,
                level_form,
                recursive_form,
                early_level_form,
                zero_form,
            };
            if !record.agrees() {
                return Err(Error::EquivalenceBroken(format!(
                    "weak-consistency conditions disagree on instance {i} at t={t}, s={s}: \
                     level={level_form}, recursive={recursive_form}, \
                     early={early_level_form}, zero={zero_form:?}"
                )));
            }
            records.push(record);
        }
    }

    let verdict = match first_witness {
        None => Verdict::passing(checked, cfg),
        Some(w) => Verdict::violated(checked, cfg, w),
    };
    Ok((verdict, records))
}

fn minimize_weak_witness(
    phi: &LmMeasure,
    direction: Direction,
    t: usize,
    s: usize,
    payoff: &Payoff,
    cfg: &CheckConfig,
) -> Witness {
    let eval = |p: &Payoff| -> Result<(RandomVariable, RandomVariable)> {
        let lhs = phi.evaluate(t, p)?;
        let gate = adapted_extremum(direction, &phi.evaluate(s, p)?, t)?;
        Ok((lhs, gate))
    };
    let still_violated = |p: &Payoff| -> bool {
        eval(p)
            .map(|(lhs, rhs)| worst_outcome(direction, &lhs, &rhs).1 > cfg.epsilon)
            .unwrap_or(false)
    };
    let shrunk = shrink_payoff(payoff, &still_violated);
    let (lhs, rhs) = eval(&shrunk).expect("shrunk payoff still evaluates");
    build_witness("weak-recursive", direction, t, s, &shrunk, None, &lhs, &rhs)
}

/// Semi-weak consistency for process measures: the analogous equivalence
/// with the sign-gated one-step rule; conditions must agree per instance.
pub fn check_semiweak_tc(
    phi: &LmMeasure,
    direction: Direction,
    space: &Arc<FilteredSpace>,
    inputs: &[Payoff],
    cfg: &CheckConfig,
) -> Result<Verdict> {
    check_semiweak_tc_detailed(phi, direction, space, inputs, cfg).map(|(v, _)| v)
}

pub fn check_semiweak_tc_detailed(
    phi: &LmMeasure,
    direction: Direction,
    space: &Arc<FilteredSpace>,
    inputs: &[Payoff],
    cfg: &CheckConfig,
) -> Result<(Verdict, Vec<ConditionRecord>)> {
    if phi.kind() != PayoffKind::Processes {
        return Err(Error::KindMismatch {
            expected: "processes",
            got: phi.kind().label(),
        });
    }
    let rule = update_rules::semiweak_rule(direction);
    let instances = gather_instances(phi.kind(), space, inputs, cfg)?;
    let mut sampler = Sampler::new(cfg.seed ^ 0x5e3177);
    let mut checked = 0usize;
    let mut records = Vec::new();
    let mut first_witness: Option<Witness> = None;

    for (i, x) in instances.iter().enumerate() {
        let v = x.as_process().expect("processes kind");
        for t in 0..space.horizon() {
            let s = t + 1;
            let lhs = phi.evaluate(t, x)?;
            let level = phi.evaluate(s, x)?;
            let rhs = rule.evaluate(t, s, &level, x)?;
            checked += 1;

            let (_, recursive_gap) = worst_outcome(direction, &lhs, &rhs);
            let recursive_form = recursive_gap <= cfg.epsilon;
            if !recursive_form && first_witness.is_none() {
                first_witness = Some(minimize_semiweak_witness(phi, direction, t, x, cfg));
            }

            // threshold form at t+1 through the gated rule
            let mut level_form = true;
            for m in level_candidates(&mut sampler, direction, &level, s, cfg) {
                let rhs_m = rule.evaluate(t, s, &m, x)?;
                checked += 1;
                if worst_outcome(direction, &lhs, &rhs_m).1 > cfg.epsilon {
                    level_form = false;
                    break;
                }
            }

            // sign-constrained early-threshold form: mask the future by
            // the live-sign indicator so the dividend condition holds,
            // then compare on the live atoms only.
            let live = match direction {
                Direction::Accept => {
                    RandomVariable::indicator(space, |w| v.row(t).value(w) >= ExtReal::ZERO)
                }
                Direction::Reject => {
                    RandomVariable::indicator(space, |w| v.row(t).value(w) <= ExtReal::ZERO)
                }
            };
            let masked = x.mult_t(&live, t)?;
            let masked_level = phi.evaluate(s, &masked)?;
            let masked_gate = adapted_extremum(direction, &masked_level, t)?;
            let masked_lhs = phi.evaluate(t, &masked)?;
            let mut early_level_form = true;
            for m_t in level_candidates(&mut sampler, direction, &masked_gate, t, cfg) {
                let premise = match direction {
                    Direction::Accept => m_t.le(&masked_level)?,
                    Direction::Reject => masked_level.le(&m_t)?,
                };
                if !premise {
                    continue;
                }
                checked += 1;
                let violated = (0..space.outcome_count())
                    .filter(|&w| live.value(w) == ExtReal::ONE)
                    .any(|w| {
                        violation_gap(direction, masked_lhs.value(w), m_t.value(w)) > cfg.epsilon
                    });
                if violated {
                    early_level_form = false;
                    break;
                }
            }

            let record = ConditionRecord {
                instance: i,
                t,
                s,
                level_form,
                recursive_form,
                early_level_form,
                zero_form: None,
            };
            if !record.agrees() {
                return Err(Error::EquivalenceBroken(format!(
                    "semi-weak conditions disagree on instance {i} at t={t}: \
                     level={level_form}, recursive={recursive_form}, early={early_level_form}"
                )));
            }
            records.push(record);
        }
    }

    let verdict = match first_witness {
        None => Verdict::passing(checked, cfg),
        Some(w) => Verdict::violated(checked, cfg, w),
    };
    Ok((verdict, records))
}

fn minimize_semiweak_witness(
    phi: &LmMeasure,
    direction: Direction,
    t: usize,
    payoff: &Payoff,
    cfg: &CheckConfig,
) -> Witness {
    let rule = update_rules::semiweak_rule(direction);
    let eval = |p: &Payoff| -> Result<(RandomVariable, RandomVariable)> {
        let lhs = phi.evaluate(t, p)?;
        let level = phi.evaluate(t + 1, p)?;
        let rhs = rule.evaluate(t, t + 1, &level, p)?;
        Ok((lhs, rhs))
    };
    let still_violated = |p: &Payoff| -> bool {
        eval(p)
            .map(|(lhs, rhs)| worst_outcome(direction, &lhs, &rhs).1 > cfg.epsilon)
            .unwrap_or(false)
    };
    let shrunk = shrink_payoff(payoff, &still_violated);
    let (lhs, rhs) = eval(&shrunk).expect("shrunk payoff still evaluates");
    build_witness(
        "semiweak-recursive",
        direction,
        t,
        t + 1,
        &shrunk,
        None,
        &lhs,
        &rhs,
    )
}

/// Benchmark-family consistency: for every instance, generator and
/// feasible real shift, a dominance of scores at `s` must persist at `t`.
/// Shifts are probed on a coarse grid plus the bisection-refined critical
/// shift where the premise flips.
pub fn check_benchmark_tc(
    phi: &LmMeasure,
    generators: &[RandomVariable],
    direction: Direction,
    space: &Arc<FilteredSpace>,
    inputs: &[Payoff],
    cfg: &CheckConfig,
) -> Result<Verdict> {
    if generators.is_empty() {
        return Err(Error::EmptyBenchmark);
    }
    if phi.kind() != PayoffKind::Variables {
        return Err(Error::KindMismatch {
            expected: "variables",
            got: phi.kind().label(),
        });
    }
    let mut gens = generators.to_vec();
    let zero = RandomVariable::zero(space);
    if !gens.iter().any(|g| *g == zero) {
        gens.push(zero);
    }

    let instances = gather_instances(phi.kind(), space, inputs, cfg)?;
    let pairs = time_pairs(space, Scope::Full);
    let mut checked = 0usize;
    const GRID: [f64; 9] = [-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0];
    const RANGE: f64 = 1e6;

    for x in &instances {
        let xv = x.as_variable().expect("variables kind");
        for &(t, s) in &pairs {
            let lhs_t = phi.evaluate(t, x)?;
            let lhs_s = phi.evaluate(s, x)?;
            for gen in &gens {
                let premise = |r: f64| -> Result<bool> {
                    let bench = phi.evaluate(s, &Payoff::Variable(gen.add_scalar(ExtReal::finite(r))))?;
                    Ok(match direction {
                        Direction::Accept => bench.le(&lhs_s)?,
                        Direction::Reject => lhs_s.le(&bench)?,
                    })
                };
                // The premise is monotone in r (down-set for accept,
                // up-set for reject); locate the boundary by bisection.
                let mut candidates: Vec<f64> = Vec::new();
                for r in GRID {
                    if premise(r)? {
                        candidates.push(r);
                    }
                }
                let critical = match direction {
                    Direction::Accept => {
                        monotone_boundary(&premise, RANGE, cfg.bisect_tol, true)?
                    }
                    Direction::Reject => {
                        monotone_boundary(&premise, RANGE, cfg.bisect_tol, false)?
                    }
                };
                if let Some(r) = critical {
                    candidates.push(r);
                }
                for r in candidates {
                    checked += 1;
                    let bench = gen.add_scalar(ExtReal::finite(r));
                    let bench_t = phi.evaluate(t, &Payoff::Variable(bench.clone()))?;
                    let (outcome, gap) = worst_outcome(direction, &lhs_t, &bench_t);
                    if gap > cfg.epsilon {
                        let atom_id = space.atom_of(t, outcome)?;
                        return Ok(Verdict::violated(
                            checked,
                            cfg,
                            Witness {
                                form: "benchmark".into(),
                                t,
                                s,
                                outcome,
                                atom: space.atoms(t)?[atom_id].clone(),
                                lhs: lhs_t.value(outcome),
                                rhs: bench_t.value(outcome),
                                gap,
                                payoff: PayoffDump::Variable(xv.values().to_vec()),
                                level: Some(bench.values().to_vec()),
                            },
                        ));
                    }
                }
            }
        }
    }
    Ok(Verdict::passing(checked, cfg))
}

/// Largest (accept) or smallest (reject) shift on which `premise` holds,
/// found by exponential bracketing plus bisection; `None` when the
/// premise never holds within the probe range.
fn monotone_boundary(
    premise: &dyn Fn(f64) -> Result<bool>,
    range: f64,
    tol: f64,
    downset: bool,
) -> Result<Option<f64>> {
    // Normalize to the down-set orientation by mirroring.
    let probe = |r: f64| -> Result<bool> {
        if downset {
            premise(r)
        } else {
            premise(-r)
        }
    };
    let (mut lo, mut hi);
    if probe(0.0)? {
        let mut r = 1.0;
        while r < range && probe(r)? {
            r *= 2.0;
        }
        if r >= range {
            return Ok(Some(if downset { range } else { -range }));
        }
        lo = if r == 1.0 { 0.0 } else { r / 2.0 };
        hi = r;
    } else {
        let mut r = -1.0;
        while r > -range && !probe(r)? {
            r *= 2.0;
        }
        if r <= -range {
            return Ok(None);
        }
        lo = r;
        hi = if r == -1.0 { 0.0 } else { r / 2.0 };
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if probe(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(if downset { lo } else { -lo }))
}

/// Checks the implication "mu-consistent for a projective rule implies
/// weakly consistent", in both directions. The rule must classify as
/// projective; the verdict fails only on instance sets where the premise
/// holds and the weak conclusion does not.
pub fn check_projective_implies_weak(
    phi: &LmMeasure,
    mu: &UpdateRule,
    space: &Arc<FilteredSpace>,
    inputs: &[Payoff],
    cfg: &CheckConfig,
) -> Result<Verdict> {
    let report = update_rules::classify(mu, space, cfg.extra_random.max(32), cfg.seed)?;
    if !report.projective.holds {
        return Err(Error::NotProjective(
            report
                .projective
                .witness
                .clone()
                .unwrap_or_else(|| format!("{} did not certify as projective", mu.name())),
        ));
    }
    let mut checked = 0usize;
    for direction in [Direction::Accept, Direction::Reject] {
        let premise = check_mu_tc(phi, mu, direction, Scope::Full, space, inputs, cfg)?;
        checked += premise.checked;
        if premise.holds {
            let weak = check_weak_tc(phi, direction, space, inputs, cfg)?;
            checked += weak.checked;
            if !weak.holds {
                return Ok(Verdict {
                    holds: false,
                    checked,
                    seed: cfg.seed,
                    epsilon: cfg.epsilon,
                    witness: weak.witness,
                });
            }
        }
    }
    Ok(Verdict::passing(checked, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, quad_space, terminal, var};
    use crate::lm_measures::{
        cond_esssup_measure, cond_expectation_measure, dglr_measure, draroc_measure,
        monotone_transform_measure, terminal_variables_measure,
    };
    use crate::update_rules::{
        discounted_rule, essinf_rule, expectation_rule, monotone_transform_rule, semiweak_rule,
        MonotoneTransform,
    };

    fn cfg() -> CheckConfig {
        CheckConfig {
            extra_random: 32,
            ..CheckConfig::with_seed(2024)
        }
    }

    #[test]
    fn expectation_measure_is_expectation_rule_consistent() {
        let space = quad_space();
        let verdict = check_mu_tc(
            &cond_expectation_measure(),
            &expectation_rule(),
            Direction::Accept,
            Scope::Full,
            &space,
            &[],
            &cfg(),
        )
        .unwrap();
        assert!(verdict.holds, "{:?}", verdict.witness);
    }

    #[test]
    fn dglr_is_semiweak_accept_consistent_one_step() {
        let space = quad_space();
        let verdict = check_mu_tc(
            &dglr_measure(),
            &semiweak_rule(Direction::Accept),
            Direction::Accept,
            Scope::OneStep,
            &space,
            &[Payoff::Process(terminal(&space, &[2.0, -1.0, 4.0, -3.0]))],
            &cfg(),
        )
        .unwrap();
        assert!(verdict.holds, "{:?}", verdict.witness);
    }

    // On finite trees the pooled return-on-capital never exceeds the best
    // branch: the mean is the exact branch average and the worst-case
    // scenario sets nest, so the rejection inequality holds everywhere.
    #[test]
    fn draroc_semiweak_reject_holds_on_seeded_instances() {
        let mut sampler = crate::sampling::Sampler::new(13);
        for round in 0..8 {
            let space = sampler.space(10, 3);
            let verdict = check_semiweak_tc(
                &draroc_measure(0.5).unwrap(),
                Direction::Reject,
                &space,
                &[],
                &CheckConfig {
                    extra_random: 120,
                    ..CheckConfig::with_seed(5 + round)
                },
            )
            .unwrap();
            assert!(verdict.holds, "round {round}: {:?}", verdict.witness);
        }
    }

    // The acceptance direction does fail off even trees: a branch whose
    // conditional tail dilutes a small-probability loss scores +inf (no
    // capital at risk), while the pooled tail concentrates the loss and
    // stays finite.
    #[test]
    fn draroc_semiweak_accept_fails_on_uneven_tree() {
        let space = fixtures::uneven_tri_space();
        let v = terminal(&space, &[0.1, 5.0, -7.0]);
        let raroc = draroc_measure(0.5).unwrap();

        let later = raroc.evaluate(1, &Payoff::Process(v.clone())).unwrap();
        assert_eq!(later, RandomVariable::constant(&space, crate::extreal::PosInf));
        let now = raroc.evaluate(0, &Payoff::Process(v.clone())).unwrap();
        assert!(now.value(0).approx_eq(ExtReal::finite(2.195 / 0.61), 1e-9));

        let verdict = check_semiweak_tc(
            &raroc,
            Direction::Accept,
            &space,
            &[Payoff::Process(v)],
            &CheckConfig {
                extra_random: 0,
                ..CheckConfig::with_seed(5)
            },
        )
        .unwrap();
        assert!(!verdict.holds);
        let w = verdict.witness.expect("witness present");
        assert_eq!(w.rhs, crate::extreal::PosInf);
        assert_eq!((w.t, w.s), (0, 1));
    }

    #[test]
    fn dglr_semiweak_holds_both_directions() {
        let space = quad_space();
        for direction in [Direction::Accept, Direction::Reject] {
            let (verdict, records) = check_semiweak_tc_detailed(
                &dglr_measure(),
                direction,
                &space,
                &[],
                &cfg(),
            )
            .unwrap();
            assert!(verdict.holds, "{direction}: {:?}", verdict.witness);
            assert!(records.iter().all(|r| r.agrees()));
        }
    }

    #[test]
    fn weak_check_examples() {
        let space = quad_space();
        let verdict = check_weak_tc(
            &cond_expectation_measure(),
            Direction::Accept,
            &space,
            &[],
            &cfg(),
        )
        .unwrap();
        assert!(verdict.holds, "{:?}", verdict.witness);

        // the adapted-supremum measure is weakly acceptance consistent
        let verdict = check_weak_tc(
            &cond_esssup_measure(),
            Direction::Accept,
            &space,
            &[],
            &cfg(),
        )
        .unwrap();
        assert!(verdict.holds, "{:?}", verdict.witness);

        // the penalized-root measure fails, witnessed by the zero payoff
        let verdict = check_weak_tc(
            &fixtures::penalized_root_expectation(),
            Direction::Accept,
            &space,
            &[Payoff::Variable(RandomVariable::zero(&space))],
            &cfg(),
        )
        .unwrap();
        assert!(!verdict.holds);
        let w = verdict.witness.unwrap();
        assert_eq!(w.t, 0);
        // shrinking drives the payoff to all zeros
        match &w.payoff {
            PayoffDump::Variable(values) => {
                assert!(values.iter().all(|v| *v == ExtReal::ZERO), "{values:?}");
            }
            other => panic!("unexpected payoff dump {other:?}"),
        }
    }

    // The sign-gated rule never exceeds the ungated one, so weak process
    // consistency implies the semi-weak verdict on any measure where the
    // premise holds.
    #[test]
    fn weak_process_consistency_implies_semiweak() {
        let space = quad_space();
        let configs = cfg();
        let measures = [
            crate::lm_measures::cvar_measure(0.5).unwrap(),
            crate::lm_measures::raroc_family(0.5).unwrap().member(1.0).unwrap(),
        ];
        let mut premises_held = 0;
        for phi in &measures {
            for direction in [Direction::Accept, Direction::Reject] {
                let weak = check_mu_tc(
                    phi,
                    &crate::update_rules::process_weak_rule(direction),
                    direction,
                    Scope::OneStep,
                    &space,
                    &[],
                    &configs,
                )
                .unwrap();
                if weak.holds {
                    premises_held += 1;
                    let semi =
                        check_semiweak_tc(phi, direction, &space, &[], &configs).unwrap();
                    assert!(semi.holds, "{} {direction}: {:?}", phi.name(), semi.witness);
                }
            }
        }
        assert!(premises_held > 0, "no weakly consistent premise found");
    }

    #[test]
    fn benchmark_check_agrees_with_rule_check() {
        let space = quad_space();
        let configs = CheckConfig {
            extra_random: 12,
            level_samples: 2,
            ..CheckConfig::with_seed(91)
        };
        let gens = vec![RandomVariable::zero(&space)];

        for phi in [cond_expectation_measure(), fixtures::root_minimum_measure()] {
            let direct = check_benchmark_tc(
                &phi,
                &gens,
                Direction::Accept,
                &space,
                &[],
                &configs,
            )
            .unwrap();
            let rule = crate::update_rules::benchmark_rule(&gens, &phi).unwrap();
            let via_rule = check_mu_tc(
                &phi,
                &rule,
                Direction::Accept,
                Scope::Full,
                &space,
                &[],
                &configs,
            )
            .unwrap();
            assert_eq!(direct.holds, via_rule.holds, "measure {}", phi.name());
        }
    }

    #[test]
    fn adversarial_measure_fails_benchmark_check() {
        let space = quad_space();
        let verdict = check_benchmark_tc(
            &fixtures::root_minimum_measure(),
            &[RandomVariable::zero(&space)],
            Direction::Accept,
            &space,
            &[Payoff::Variable(var(&space, &[0.0, 2.0, 2.0, 2.0]))],
            &cfg(),
        )
        .unwrap();
        assert!(!verdict.holds);
        assert!(verdict.witness.is_some());
    }

    #[test]
    fn projective_implication_examples() {
        let space = quad_space();
        let verdict = check_projective_implies_weak(
            &cond_expectation_measure(),
            &expectation_rule(),
            &space,
            &[],
            &cfg(),
        )
        .unwrap();
        assert!(verdict.holds);

        let glr_vars = terminal_variables_measure(&dglr_measure()).unwrap();
        let verdict = check_projective_implies_weak(
            &glr_vars,
            &essinf_rule(),
            &space,
            &[],
            &cfg(),
        )
        .unwrap();
        assert!(verdict.holds, "{:?}", verdict.witness);

        assert!(matches!(
            check_projective_implies_weak(
                &cond_expectation_measure(),
                &discounted_rule(0.5).unwrap(),
                &space,
                &[],
                &cfg(),
            ),
            Err(Error::NotProjective(_))
        ));
    }

    #[test]
    fn monotone_transforms_preserve_verdicts() {
        let space = quad_space();
        let configs = CheckConfig {
            extra_random: 16,
            ..CheckConfig::with_seed(404)
        };
        for g in [
            MonotoneTransform::affine(2.0, 1.0).unwrap(),
            MonotoneTransform::cubic(),
            MonotoneTransform::bounded_atan(),
        ] {
            for phi in [cond_expectation_measure(), fixtures::root_minimum_measure()] {
                let base = check_mu_tc(
                    &phi,
                    &essinf_rule(),
                    Direction::Accept,
                    Scope::Full,
                    &space,
                    &[],
                    &configs,
                )
                .unwrap();
                let transformed_phi = monotone_transform_measure(&g, &phi);
                let transformed_mu = monotone_transform_rule(&g, &essinf_rule()).unwrap();
                let moved = check_mu_tc(
                    &transformed_phi,
                    &transformed_mu,
                    Direction::Accept,
                    Scope::Full,
                    &space,
                    &[],
                    &configs,
                )
                .unwrap();
                assert_eq!(
                    base.holds,
                    moved.holds,
                    "transform {} on {}",
                    g.name(),
                    phi.name()
                );
            }
        }
    }

    #[test]
    fn witnesses_reevaluate_beyond_epsilon() {
        let space = quad_space();
        let configs = cfg();
        let verdict = check_weak_tc(
            &fixtures::root_minimum_measure(),
            Direction::Accept,
            &space,
            &[],
            &configs,
        )
        .unwrap();
        assert!(!verdict.holds);
        let w = verdict.witness.unwrap();
        let payoff = match &w.payoff {
            PayoffDump::Variable(values) => Payoff::Variable(
                RandomVariable::new(Arc::clone(&space), values.clone()).unwrap(),
            ),
            PayoffDump::Process(rows) => Payoff::Process(
                crate::prob_space::AdaptedProcess::from_values(&space, rows.clone()).unwrap(),
            ),
        };
        let phi = fixtures::root_minimum_measure();
        let lhs = phi.evaluate(w.t, &payoff).unwrap();
        let gate = adapted_extremum(Direction::Accept, &phi.evaluate(w.s, &payoff).unwrap(), w.t)
            .unwrap();
        let gap = violation_gap(Direction::Accept, lhs.value(w.outcome), gate.value(w.outcome));
        assert!(gap > configs.epsilon, "gap {gap}");
    }
}
