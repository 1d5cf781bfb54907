//! Scenario-set optimization oracles and the converter constructions
//! between risk families and acceptability indices.
//!
//! Worst-case conditional expectations over the scenario polytopes are
//! computed by exhaustive per-atom vertex enumeration — atoms are small
//! at desk scale, so no external solver is needed, and linearity makes
//! the vertex minimum exact. This is the independent route against which
//! the closed-form computations (`cond_essinf`, the sorted-tail value at
//! risk, the mixture family) are cross-checked.
//!
//! The converters realize the two dual constructions:
//! `index_from_risk_family` inverts a non-increasing family `x -> phi^x`
//! per atom by bisection on `sup { x : phi^x >= 0 }`, and
//! `risk_family_from_index` solves `inf { c : alpha_t(V - c·1_t) <= x }`.

use std::sync::Arc;

use rand::Rng;

use crate::consistency::{
    check_mu_tc, check_semiweak_tc, CheckConfig, Scope, Verdict,
};
use crate::error::{Error, Result};
use crate::extreal::{ExtReal, NegInf, PosInf};
use crate::lm_measures::{LmMeasure, MeasureFlags, RiskFamily};
use crate::prob_space::{FilteredSpace, Payoff, PayoffKind, RandomVariable};
use crate::sampling::Sampler;
use crate::update_rules::{process_weak_rule, Direction};

/// Default cap for index searches over `x ∈ R_+`.
pub const DEFAULT_X_MAX: f64 = 1e6;
/// Default bracket for cash-level searches.
pub const DEFAULT_C_BRACKET: (f64, f64) = (-1e6, 1e6);

/// Families of admissible densities with unit conditional mean.
#[derive(Clone, Copy, Debug)]
pub enum ScenarioSet {
    /// All nonnegative densities with `E[Z | F_t] = 1`.
    FullDensities,
    /// Densities capped at `1/alpha`: the tail value-at-risk scenarios.
    CvarTail { alpha: f64 },
    /// Mixtures `1/(1+x) + (x/(1+x)) Z` with `Z` a tail scenario.
    RarocMixture { alpha: f64, x: f64 },
}

impl ScenarioSet {
    fn check(&self) -> Result<()> {
        match *self {
            ScenarioSet::FullDensities => Ok(()),
            ScenarioSet::CvarTail { alpha } => {
                if alpha > 0.0 && alpha <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::BadAlpha {
                        alpha,
                        range: "(0,1]",
                    })
                }
            }
            ScenarioSet::RarocMixture { alpha, x } => {
                if !(alpha > 0.0 && alpha < 1.0) {
                    Err(Error::BadAlpha {
                        alpha,
                        range: "(0,1)",
                    })
                } else if !(x >= 0.0) || !x.is_finite() {
                    Err(Error::BadX { x })
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// Extreme points of the per-atom density polytope, for one atom with
/// conditional weights `q`.
fn atom_vertices(set: &ScenarioSet, q: &[f64]) -> Vec<Vec<f64>> {
    match *set {
        // The polytope {z >= 0, q·z = 1} is a simplex: point masses.
        ScenarioSet::FullDensities => (0..q.len())
            .map(|i| {
                let mut z = vec![0.0; q.len()];
                z[i] = 1.0 / q[i];
                z
            })
            .collect(),
        // {0 <= z <= 1/alpha, q·z = 1}: at a vertex all but at most one
        // coordinate sit on a bound, the leftover coordinate balances
        // the budget.
        ScenarioSet::CvarTail { alpha } => {
            let cap = 1.0 / alpha;
            let n = q.len();
            let mut vertices: Vec<Vec<f64>> = Vec::new();
            let mut push_unique = |z: Vec<f64>| {
                let is_new = vertices
                    .iter()
                    .all(|v| v.iter().zip(&z).any(|(a, b)| (a - b).abs() > 1e-9));
                if is_new {
                    vertices.push(z);
                }
            };
            for mask in 0..(1u32 << n) {
                let loaded: f64 = (0..n)
                    .filter(|&i| mask & (1 << i) != 0)
                    .map(|i| q[i] * cap)
                    .sum();
                let make = |extra: Option<(usize, f64)>| -> Vec<f64> {
                    let mut z = vec![0.0; n];
                    for (i, slot) in z.iter_mut().enumerate() {
                        if mask & (1 << i) != 0 {
                            *slot = cap;
                        }
                    }
                    if let Some((j, val)) = extra {
                        z[j] = val;
                    }
                    z
                };
                if (loaded - 1.0).abs() <= 1e-12 {
                    push_unique(make(None));
                } else if loaded < 1.0 {
                    for j in 0..n {
                        if mask & (1 << j) != 0 {
                            continue;
                        }
                        let val = (1.0 - loaded) / q[j];
                        if val > 0.0 && val <= cap + 1e-12 {
                            push_unique(make(Some((j, val.min(cap)))));
                        }
                    }
                }
            }
            vertices
        }
        ScenarioSet::RarocMixture { alpha, x } => {
            let base = ScenarioSet::CvarTail { alpha };
            let w_tail = x / (1.0 + x);
            let w_one = 1.0 / (1.0 + x);
            atom_vertices(&base, q)
                .into_iter()
                .map(|z| z.into_iter().map(|zi| w_one + w_tail * zi).collect())
                .collect()
        }
    }
}

/// Global extreme densities: the product of per-atom vertices across the
/// atoms of `F_t`, returned as full random variables.
pub fn scenario_vertices(
    space: &Arc<FilteredSpace>,
    t: usize,
    set: &ScenarioSet,
) -> Result<Vec<RandomVariable>> {
    set.check()?;
    let atoms = space.atoms(t)?.to_vec();
    let per_atom: Vec<(Vec<usize>, Vec<Vec<f64>>)> = atoms
        .into_iter()
        .map(|atom| {
            let mass = space.atom_prob(&atom);
            let q: Vec<f64> = atom.iter().map(|&w| space.prob(w) / mass).collect();
            let verts = atom_vertices(set, &q);
            (atom, verts)
        })
        .collect();

    let mut result: Vec<Vec<ExtReal>> = vec![vec![ExtReal::ZERO; space.outcome_count()]];
    for (atom, verts) in &per_atom {
        let mut expanded = Vec::with_capacity(result.len() * verts.len());
        for base in &result {
            for vert in verts {
                let mut values = base.clone();
                for (&w, &z) in atom.iter().zip(vert) {
                    values[w] = ExtReal::finite(z);
                }
                expanded.push(values);
            }
        }
        result = expanded;
    }
    result
        .into_iter()
        .map(|values| RandomVariable::new(Arc::clone(space), values))
        .collect()
}

/// `essinf_Z E[Z m | F_t]` over the scenario set, by per-atom vertex
/// enumeration. Expectations of `Z m` use the generalized conditional
/// expectation, so infinite entries follow the same conventions as the
/// closed-form route.
pub fn scenario_essinf(
    space: &Arc<FilteredSpace>,
    t: usize,
    set: &ScenarioSet,
    m: &RandomVariable,
) -> Result<RandomVariable> {
    set.check()?;
    let mut out = vec![ExtReal::ZERO; space.outcome_count()];
    for atom in space.atoms(t)? {
        let mass = space.atom_prob(atom);
        let q: Vec<f64> = atom.iter().map(|&w| space.prob(w) / mass).collect();
        let mut best = PosInf;
        for vert in atom_vertices(set, &q) {
            // E[Zm | atom] = E[(Zm)^+] - E[(Zm)^-] under the conventions
            let mut pos = 0.0;
            let mut pos_inf = false;
            let mut neg = 0.0;
            let mut neg_inf = false;
            for ((&w, &z), &qi) in atom.iter().zip(&vert).zip(&q) {
                let zm = ExtReal::finite(z) * m.value(w);
                match zm {
                    PosInf => pos_inf = true,
                    NegInf => neg_inf = true,
                    ExtReal::Finite(v) => {
                        if v >= 0.0 {
                            pos += qi * v;
                        } else {
                            neg += qi * (-v);
                        }
                    }
                }
            }
            let e_pos = if pos_inf { PosInf } else { ExtReal::finite(pos) };
            let e_neg = if neg_inf { PosInf } else { ExtReal::finite(neg) };
            best = best.min(e_pos - e_neg);
        }
        for &w in atom {
            out[w] = best;
        }
    }
    RandomVariable::new(Arc::clone(space), out)
}

/// Worst-case conditional expectation over all unit-mean densities; by
/// the dual representation this equals the conditional essential infimum.
pub fn dual_essinf(m: &RandomVariable, t: usize) -> Result<RandomVariable> {
    scenario_essinf(m.space(), t, &ScenarioSet::FullDensities, m)
}

/// The robust form of weak acceptance consistency:
/// `phi_t(X) >= essinf_Z E[Z phi_s(X) | F_t]`, with the right-hand side
/// computed by the dual (vertex) route.
pub fn robust_weak_check(
    phi: &LmMeasure,
    space: &Arc<FilteredSpace>,
    inputs: &[Payoff],
    cfg: &CheckConfig,
) -> Result<Verdict> {
    if phi.kind() != PayoffKind::Variables {
        return Err(Error::KindMismatch {
            expected: "variables",
            got: phi.kind().label(),
        });
    }
    let mut instances = inputs.to_vec();
    let mut sampler = Sampler::new(cfg.seed);
    for _ in 0..cfg.extra_random {
        instances.push(sampler.payoff(space, PayoffKind::Variables, cfg.payoff_infinity_rate));
    }
    let mut checked = 0usize;
    for x in &instances {
        for t in 0..space.horizon() {
            for s in t + 1..=space.horizon() {
                let lhs = phi.evaluate(t, x)?;
                let rhs = scenario_essinf(
                    space,
                    t,
                    &ScenarioSet::FullDensities,
                    &phi.evaluate(s, x)?,
                )?;
                checked += 1;
                for w in 0..space.outcome_count() {
                    if !lhs.value(w).ge_within(rhs.value(w), cfg.epsilon) {
                        return Ok(Verdict {
                            holds: false,
                            checked,
                            seed: cfg.seed,
                            epsilon: cfg.epsilon,
                            witness: Some(crate::consistency::Witness {
                                form: "robust-weak".into(),
                                t,
                                s,
                                outcome: w,
                                atom: space.atoms(t)?[space.atom_of(t, w)?].clone(),
                                lhs: lhs.value(w),
                                rhs: rhs.value(w),
                                gap: lhs.value(w).shortfall(rhs.value(w)),
                                payoff: x.into(),
                                level: None,
                            }),
                        });
                    }
                }
            }
        }
    }
    Ok(Verdict {
        holds: true,
        checked,
        seed: cfg.seed,
        epsilon: cfg.epsilon,
        witness: None,
    })
}

fn grid_for_family(x_max: f64) -> Vec<f64> {
    let mut xs = vec![0.0, 0.25, 0.5, 1.0];
    let mut x = 2.0;
    while x < x_max {
        xs.push(x);
        x *= 4.0;
    }
    xs.push(x_max);
    xs
}

/// Acceptability level of `V` at `(t, atom)` induced by a non-increasing
/// risk family: per atom, `sup { x in [0, x_max] : phi^x_t(V) >= 0 }` by
/// bisection; 0 when even `phi^0 < 0`, `+inf` when the whole cap stays
/// acceptable. Verifies the non-increase on a grid first.
pub fn index_from_risk_family(
    family: &RiskFamily,
    t: usize,
    v: &Payoff,
    x_max: f64,
    tol: f64,
) -> Result<RandomVariable> {
    let space = v.space().clone();
    space.check_time(t)?;

    let xs = grid_for_family(x_max);
    let mut prev: Option<(f64, RandomVariable)> = None;
    for &x in &xs {
        let cur = family.evaluate(x, t, v)?;
        if let Some((px, prev_val)) = &prev {
            for w in 0..space.outcome_count() {
                if !cur.value(w).le_within(prev_val.value(w), 1e-9) {
                    return Err(Error::NotDecreasingFamily(format!(
                        "{}: phi^{x} > phi^{px} at outcome {w} ({} > {})",
                        family.name(),
                        cur.value(w),
                        prev_val.value(w)
                    )));
                }
            }
        }
        prev = Some((x, cur));
    }

    let at = |x: f64| -> Result<RandomVariable> { family.evaluate(x, t, v) };
    let phi0 = at(0.0)?;
    let phi_cap = at(x_max)?;
    let atoms = space.atoms(t)?.to_vec();
    let mut out = vec![ExtReal::ZERO; space.outcome_count()];
    for atom in atoms {
        let rep = atom[0];
        let value = if phi0.value(rep) < ExtReal::ZERO {
            // empty feasible set on the nonnegative axis
            ExtReal::ZERO
        } else if phi_cap.value(rep) >= ExtReal::ZERO {
            PosInf
        } else {
            let mut lo = 0.0;
            let mut hi = x_max;
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                if at(mid)?.value(rep) >= ExtReal::ZERO {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            ExtReal::finite(lo)
        };
        for &w in &atom {
            out[w] = value;
        }
    }
    RandomVariable::new(space, out)
}

/// Wraps the index construction as a standalone process measure.
pub fn index_measure_from_family(family: &RiskFamily, x_max: f64, tol: f64) -> LmMeasure {
    let family = family.clone();
    LmMeasure::from_fn(
        format!("index({})", family.name()),
        PayoffKind::Processes,
        MeasureFlags {
            monetary_utility: false,
            translation_invariant: true,
            independent_of_past: true,
        },
        move |t, payoff| index_from_risk_family(&family, t, payoff, x_max, tol),
    )
}

fn probe_index_flags(index: &LmMeasure, space: &Arc<FilteredSpace>, seed: u64) -> Result<()> {
    let mut sampler = Sampler::new(seed ^ 0xf1a6);
    for _ in 0..12 {
        let v = sampler.process(space, 0.0);
        let t = sampler.rng().gen_range(0..space.horizon());
        let base = index.evaluate(t, &Payoff::Process(v.clone()))?;

        // translation invariance: a cash amount paid at t or at t+1 must
        // score the same when seen from t
        let m = sampler.finite_measurable(space, t);
        let at_t = index.evaluate(t, &Payoff::Process(v.add_at(t, &m)?))?;
        let at_next = index.evaluate(t, &Payoff::Process(v.add_at(t + 1, &m)?))?;
        for w in 0..space.outcome_count() {
            if !at_t.value(w).approx_eq(at_next.value(w), 1e-6) {
                return Err(Error::NotTranslationInvariant(format!(
                    "{}: paying {} at t={t} scores {} but at t+1 scores {}",
                    index.name(),
                    m.value(w),
                    at_t.value(w),
                    at_next.value(w)
                )));
            }
        }

        // independence of the past: zeroing rows before t changes nothing
        let masked = v.mult_t(&RandomVariable::zero(space), t)?;
        let mut rows = masked.rows().to_vec();
        for (u, row) in v.rows().iter().enumerate() {
            if u >= t {
                rows[u] = row.clone();
            }
        }
        let scrubbed = crate::prob_space::AdaptedProcess::new(Arc::clone(space), rows)?;
        let no_past = index.evaluate(t, &Payoff::Process(scrubbed))?;
        for w in 0..space.outcome_count() {
            if !base.value(w).approx_eq(no_past.value(w), 1e-6) {
                return Err(Error::NotIndependentOfPast(format!(
                    "{}: zeroing the strict past changes the score at outcome {w} \
                     ({} vs {})",
                    index.name(),
                    base.value(w),
                    no_past.value(w)
                )));
            }
        }
    }
    Ok(())
}

/// Cash level that brings the index down to `x`: per atom,
/// `inf { c in [c_lo, c_hi] : alpha_t(V - c·1_t) <= x }` by bisection.
/// Returns `-inf` (`+inf`) when the whole bracket is feasible
/// (infeasible). The index must be translation invariant and independent
/// of the past; both are probed on random instances first.
pub fn risk_family_from_index(
    index: &LmMeasure,
    x: f64,
    t: usize,
    v: &Payoff,
    c_bracket: (f64, f64),
    tol: f64,
) -> Result<RandomVariable> {
    if index.kind() != PayoffKind::Processes {
        return Err(Error::KindMismatch {
            expected: "processes",
            got: index.kind().label(),
        });
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::BadX { x });
    }
    let space = v.space().clone();
    space.check_time(t)?;
    let process = v.as_process().ok_or(Error::KindMismatch {
        expected: "processes",
        got: v.kind().label(),
    })?;
    probe_index_flags(index, &space, 0xc0ffee)?;

    let (c_lo, c_hi) = c_bracket;
    if !(c_lo < c_hi) {
        return Err(Error::BracketExhausted(format!(
            "empty bracket [{c_lo}, {c_hi}]"
        )));
    }
    let level = ExtReal::finite(x);
    let feasible = |c: f64| -> Result<RandomVariable> {
        let shifted = process.add_at(t, &RandomVariable::constant(&space, ExtReal::finite(-c)))?;
        index.evaluate(t, &Payoff::Process(shifted))
    };

    let at_lo = feasible(c_lo)?;
    let at_hi = feasible(c_hi)?;
    let atoms = space.atoms(t)?.to_vec();
    let mut out = vec![ExtReal::ZERO; space.outcome_count()];
    for atom in atoms {
        let rep = atom[0];
        let lo_ok = at_lo.value(rep) <= level;
        let hi_ok = at_hi.value(rep) <= level;
        let value = match (lo_ok, hi_ok) {
            (true, true) => NegInf,
            (false, false) => PosInf,
            (false, true) => {
                let mut lo = c_lo;
                let mut hi = c_hi;
                while hi - lo > tol {
                    let mid = 0.5 * (lo + hi);
                    if feasible(mid)?.value(rep) <= level {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                ExtReal::finite(hi)
            }
            (true, false) => {
                return Err(Error::BracketExhausted(format!(
                    "index increases in the cash level on atom {atom:?}: feasible at \
                     {c_lo} but not at {c_hi}"
                )));
            }
        };
        for &w in &atom {
            out[w] = value;
        }
    }
    RandomVariable::new(space, out)
}

/// Wraps the cash-level construction as a risk family indexed by `x`.
pub fn risk_family_from_index_measures(
    index: &LmMeasure,
    c_bracket: (f64, f64),
    tol: f64,
) -> RiskFamily {
    let index = index.clone();
    RiskFamily::from_fn(
        format!("family({})", index.name()),
        PayoffKind::Processes,
        move |x, t, payoff| risk_family_from_index(&index, x, t, payoff, c_bracket, tol),
    )
}

/// Input to the consistency-transfer check.
pub enum ConverterInput<'a> {
    /// A non-increasing family; the constructed index is checked for
    /// semi-weak consistency.
    Family { family: &'a RiskFamily, xs: &'a [f64] },
    /// An index; the constructed family members at `xs` are checked for
    /// weak process consistency.
    Index { index: &'a LmMeasure, xs: &'a [f64] },
}

/// Verifies the hypotheses of the corresponding converter construction on
/// the instance set (emitting `HypothesisFailed` when they do not hold),
/// then asserts its conclusion through the consistency checkers.
pub fn converter_consistency_transfer(
    input: ConverterInput<'_>,
    direction: Direction,
    space: &Arc<FilteredSpace>,
    inputs: &[Payoff],
    cfg: &CheckConfig,
) -> Result<Verdict> {
    match input {
        ConverterInput::Family { family, xs } => {
            for &x in xs {
                let member = family.member(x)?;
                let verdict = check_mu_tc(
                    &member,
                    &process_weak_rule(direction),
                    direction,
                    Scope::OneStep,
                    space,
                    inputs,
                    cfg,
                )?;
                if !verdict.holds {
                    return Err(Error::HypothesisFailed {
                        hypothesis: format!("weak {} consistency of phi^{x}", direction),
                        detail: format!("{:?}", verdict.witness),
                    });
                }
            }
            let index = index_measure_from_family(family, DEFAULT_X_MAX, cfg.bisect_tol);
            check_semiweak_tc(&index, direction, space, inputs, cfg)
        }
        ConverterInput::Index { index, xs } => {
            let semi = check_semiweak_tc(index, direction, space, inputs, cfg)?;
            if !semi.holds {
                return Err(Error::HypothesisFailed {
                    hypothesis: format!("semi-weak {} consistency of the index", direction),
                    detail: format!("{:?}", semi.witness),
                });
            }
            let family = risk_family_from_index_measures(index, DEFAULT_C_BRACKET, cfg.bisect_tol);
            let mut checked = semi.checked;
            for &x in xs {
                let member = family.member(x)?;
                let verdict = check_mu_tc(
                    &member,
                    &process_weak_rule(direction),
                    direction,
                    Scope::OneStep,
                    space,
                    inputs,
                    cfg,
                )?;
                checked += verdict.checked;
                if !verdict.holds {
                    return Ok(Verdict {
                        holds: false,
                        checked,
                        seed: cfg.seed,
                        epsilon: cfg.epsilon,
                        witness: verdict.witness,
                    });
                }
            }
            Ok(Verdict {
                holds: true,
                checked,
                seed: cfg.seed,
                epsilon: cfg.epsilon,
                witness: None,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cond_ops;
    use crate::consistency::check_weak_tc;
    use crate::fixtures::{quad_space, terminal, var};
    use crate::lm_measures::{dglr_measure, draroc, raroc_family};

    #[test]
    fn full_density_vertices_are_point_masses() {
        let space = quad_space();
        let verts = scenario_vertices(&space, 1, &ScenarioSet::FullDensities).unwrap();
        // two choices per atom
        assert_eq!(verts.len(), 4);
        for z in &verts {
            // restricted to the first atom the vertex is (2,0) or (0,2)
            let pair = (z.value(0), z.value(1));
            assert!(
                pair == (ExtReal::finite(2.0), ExtReal::ZERO)
                    || pair == (ExtReal::ZERO, ExtReal::finite(2.0))
            );
        }
    }

    #[test]
    fn cvar_vertices_examples() {
        let space = quad_space();
        let verts = scenario_vertices(&space, 0, &ScenarioSet::CvarTail { alpha: 1.0 }).unwrap();
        assert_eq!(verts.len(), 1);
        assert_eq!(verts[0], RandomVariable::constant(&space, ExtReal::ONE));

        let verts = scenario_vertices(&space, 0, &ScenarioSet::CvarTail { alpha: 0.5 }).unwrap();
        // permutations of (2,2,0,0)
        assert_eq!(verts.len(), 6);
        for z in &verts {
            let mut sorted: Vec<f64> = z.values().iter().map(|v| v.as_f64().unwrap()).collect();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert_eq!(sorted, vec![0.0, 0.0, 2.0, 2.0]);
        }
    }

    #[test]
    fn vertices_satisfy_their_bounds_and_unit_mean() {
        let mut sampler = Sampler::new(3);
        for _ in 0..10 {
            let space = sampler.space(8, 3);
            let t = sampler.rng().gen_range(0..=space.horizon());
            for set in [
                ScenarioSet::FullDensities,
                ScenarioSet::CvarTail { alpha: 0.4 },
                ScenarioSet::RarocMixture { alpha: 0.4, x: 1.5 },
            ] {
                for z in scenario_vertices(&space, t, &set).unwrap() {
                    let mean = cond_ops::cond_expect(&z, t).unwrap();
                    for w in 0..space.outcome_count() {
                        let zi = z.value(w).as_f64().unwrap();
                        assert!(zi >= -1e-12);
                        if let ScenarioSet::CvarTail { alpha } = set {
                            assert!(zi <= 1.0 / alpha + 1e-9);
                        }
                        assert!(
                            mean.value(w).approx_eq(ExtReal::ONE, 1e-9),
                            "unit mean violated: {}",
                            mean.value(w)
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn dual_essinf_examples() {
        let space = quad_space();
        let m = var(&space, &[1.0, 3.0, 2.0, 5.0]);
        let dual = dual_essinf(&m, 1).unwrap();
        let direct = cond_ops::cond_essinf(&m, 1).unwrap();
        for w in 0..4 {
            assert!(dual.value(w).approx_eq(direct.value(w), 1e-12));
        }

        let c = var(&space, &[4.5; 4]);
        assert!(dual_essinf(&c, 0)
            .unwrap()
            .value(0)
            .approx_eq(ExtReal::finite(4.5), 1e-12));

        let with_inf = RandomVariable::new(
            std::sync::Arc::clone(&space),
            vec![
                NegInf,
                ExtReal::finite(3.0),
                ExtReal::finite(2.0),
                ExtReal::finite(5.0),
            ],
        )
        .unwrap();
        assert_eq!(
            dual_essinf(&with_inf, 0).unwrap(),
            RandomVariable::constant(&space, NegInf)
        );
    }

    #[test]
    fn robust_check_agrees_with_weak_check() {
        let space = quad_space();
        let cfg = CheckConfig {
            extra_random: 24,
            ..CheckConfig::with_seed(8)
        };
        for phi in [
            crate::lm_measures::cond_expectation_measure(),
            crate::fixtures::root_minimum_measure(),
        ] {
            let robust = robust_weak_check(&phi, &space, &[], &cfg).unwrap();
            let weak = check_weak_tc(&phi, Direction::Accept, &space, &[], &cfg).unwrap();
            assert_eq!(robust.holds, weak.holds, "measure {}", phi.name());
        }
    }

    #[test]
    fn index_from_raroc_family_equals_raroc() {
        let space = quad_space();
        let v = Payoff::Process(terminal(&space, &[-1.0, -2.0, 3.0, 4.0]));
        let family = raroc_family(0.5).unwrap();
        let index = index_from_risk_family(&family, 0, &v, DEFAULT_X_MAX, 1e-8).unwrap();
        assert!(index
            .value(0)
            .approx_eq(ExtReal::finite(2.0 / 3.0), 1e-6));
        let direct = draroc(0, v.as_process().unwrap(), 0.5).unwrap();
        assert!(index.value(0).approx_eq(direct.value(0), 1e-6));
    }

    #[test]
    fn index_conventions_on_degenerate_families() {
        let space = quad_space();
        let v = Payoff::Process(terminal(&space, &[1.0, 1.0, 1.0, 1.0]));
        let negative = RiskFamily::from_fn("always-negative", PayoffKind::Processes, {
            let space = std::sync::Arc::clone(&space);
            move |_x, _t, _v| Ok(RandomVariable::constant(&space, ExtReal::finite(-1.0)))
        });
        assert_eq!(
            index_from_risk_family(&negative, 0, &v, DEFAULT_X_MAX, 1e-8).unwrap(),
            RandomVariable::zero(&space)
        );

        let positive = RiskFamily::from_fn("always-positive", PayoffKind::Processes, {
            let space = std::sync::Arc::clone(&space);
            move |_x, _t, _v| Ok(RandomVariable::constant(&space, ExtReal::ONE))
        });
        assert_eq!(
            index_from_risk_family(&positive, 0, &v, DEFAULT_X_MAX, 1e-8).unwrap(),
            RandomVariable::constant(&space, PosInf)
        );

        let increasing = RiskFamily::from_fn("increasing", PayoffKind::Processes, {
            let space = std::sync::Arc::clone(&space);
            move |x, _t, _v| Ok(RandomVariable::constant(&space, ExtReal::finite(x)))
        });
        assert!(matches!(
            index_from_risk_family(&increasing, 0, &v, DEFAULT_X_MAX, 1e-8),
            Err(Error::NotDecreasingFamily(_))
        ));
    }

    #[test]
    fn cash_level_for_gain_loss_ratio() {
        let space = quad_space();
        let v = Payoff::Process(terminal(&space, &[2.0, -1.0, 4.0, -3.0]));
        let c = risk_family_from_index(
            &dglr_measure(),
            1.0,
            0,
            &v,
            DEFAULT_C_BRACKET,
            1e-8,
        )
        .unwrap();
        assert!(
            c.value(0).approx_eq(ExtReal::finite(-1.0 / 3.0), 1e-6),
            "got {}",
            c.value(0)
        );

        // a huge acceptability threshold is met far down the bracket
        let huge = risk_family_from_index(
            &dglr_measure(),
            1e9,
            0,
            &v,
            DEFAULT_C_BRACKET,
            1e-8,
        )
        .unwrap();
        assert!(huge.value(0) <= ExtReal::finite(-1.0 / 3.0));
    }

    #[test]
    fn converter_transfer_round_trip() {
        let space = quad_space();
        let cfg = CheckConfig {
            extra_random: 10,
            level_samples: 2,
            ..CheckConfig::with_seed(21)
        };
        let family = raroc_family(0.5).unwrap();
        let verdict = converter_consistency_transfer(
            ConverterInput::Family {
                family: &family,
                xs: &[0.0, 0.5, 1.0],
            },
            Direction::Accept,
            &space,
            &[],
            &cfg,
        )
        .unwrap();
        assert!(verdict.holds, "{:?}", verdict.witness);

        let verdict = converter_consistency_transfer(
            ConverterInput::Index {
                index: &dglr_measure(),
                xs: &[0.5, 1.0, 2.0],
            },
            Direction::Accept,
            &space,
            &[],
            &cfg,
        )
        .unwrap();
        assert!(verdict.holds, "{:?}", verdict.witness);
    }

    // On the uneven tree the mixture member fails weak acceptance (the
    // branch tail dilutes the rare loss, the pooled tail concentrates
    // it), so the acceptance transfer must refuse to assert rather than
    // report a conclusion.
    #[test]
    fn converter_guards_failing_hypotheses() {
        let space = crate::fixtures::uneven_tri_space();
        let cfg = CheckConfig {
            extra_random: 4,
            ..CheckConfig::with_seed(77)
        };
        let bad_instance = Payoff::Process(terminal(&space, &[0.0, 1.0, -7.0]));

        // pin the hypothesis failure itself first
        let member = raroc_family(0.5).unwrap().member(1.0).unwrap();
        let direct = check_mu_tc(
            &member,
            &process_weak_rule(Direction::Accept),
            Direction::Accept,
            crate::consistency::Scope::OneStep,
            &space,
            &[bad_instance.clone()],
            &cfg,
        )
        .unwrap();
        assert!(!direct.holds);

        let family = raroc_family(0.5).unwrap();
        let err = converter_consistency_transfer(
            ConverterInput::Family {
                family: &family,
                xs: &[0.5, 1.0],
            },
            Direction::Accept,
            &space,
            &[bad_instance],
            &cfg,
        )
        .unwrap_err();
        assert!(matches!(err, Error::HypothesisFailed { .. }), "{err}");
    }
}
