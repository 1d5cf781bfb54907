//! Update rules: local monotone maps `mu_{t,s}(m, X)` translating time-`s`
//! preference levels into time-`t` levels.
//!
//! Concrete rules:
//!
//! * conditional essential infimum / supremum (projective),
//! * conditional expectation (projective),
//! * sign-split discounting `alpha^{s-t}` / `alpha^{t-s}` of the
//!   conditional expectation,
//! * one-step process rules `Essinf_t m + V_t` and the sign-gated
//!   semi-weak variants,
//! * the rule induced by a benchmark family: per atom, the best value
//!   `phi_t(Y + r)` over generators `Y` and real shifts `r` whose
//!   time-`s` score stays below the level `m` on that atom.
//!
//! Rules carry declared class flags (X-invariant, sX-invariant,
//! projective); [`classify`] verifies the flags by seeded property tests
//! instead of trusting them.

use std::sync::Arc;

use rand::Rng;

use crate::cond_ops;
use crate::error::{Error, Result};
use crate::extreal::{ExtReal, NegInf, PosInf};
use crate::lm_measures::LmMeasure;
use crate::prob_space::{FilteredSpace, Payoff, PayoffKind, RandomVariable};
use crate::sampling::Sampler;

/// Default tolerance for monotone shift searches.
pub const SHIFT_TOL: f64 = 1e-8;
const SHIFT_RANGE: f64 = 1e12;
const MAX_BISECT_ITERS: usize = 200;

/// Declared membership in the rule taxonomy.
#[derive(Clone, Copy, Debug, Default, serde::Serialize)]
pub struct DeclaredClasses {
    pub x_invariant: bool,
    pub sx_invariant: bool,
    pub projective: bool,
}

struct RuleCtx<'a> {
    t: usize,
    s: usize,
    m: &'a RandomVariable,
    x: &'a Payoff,
}

type RuleFn = dyn for<'a> Fn(&RuleCtx<'a>) -> Result<RandomVariable> + Send + Sync;

#[derive(Clone)]
pub struct UpdateRule {
    name: String,
    declared: DeclaredClasses,
    one_step_only: bool,
    needs_process: bool,
    eval: Arc<RuleFn>,
}

impl UpdateRule {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn declared(&self) -> DeclaredClasses {
        self.declared
    }

    pub fn one_step_only(&self) -> bool {
        self.one_step_only
    }

    pub fn needs_process(&self) -> bool {
        self.needs_process
    }

    /// Evaluates `mu_{t,s}(m, x)`. Validates the time pair, the
    /// measurability of the level `m` at `s`, and the payoff kind.
    pub fn evaluate(
        &self,
        t: usize,
        s: usize,
        m: &RandomVariable,
        x: &Payoff,
    ) -> Result<RandomVariable> {
        if s <= t {
            return Err(Error::TimeOrder { t, s });
        }
        m.space().check_time(s)?;
        if self.one_step_only && s != t + 1 {
            return Err(Error::NotOneStep { t, s });
        }
        if self.needs_process && x.kind() != PayoffKind::Processes {
            return Err(Error::KindMismatch {
                expected: "processes",
                got: x.kind().label(),
            });
        }
        m.require_measurable(s, "preference level")?;
        (self.eval)(&RuleCtx { t, s, m, x })
    }
}

impl std::fmt::Debug for UpdateRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("UpdateRule")
            .field("name", &self.name)
            .field("declared", &self.declared)
            .finish()
    }
}

/// `mu_t(m) = Essinf_t m`.
pub fn essinf_rule() -> UpdateRule {
    UpdateRule {
        name: "essinf".into(),
        declared: DeclaredClasses {
            x_invariant: true,
            sx_invariant: true,
            projective: true,
        },
        one_step_only: false,
        needs_process: false,
        eval: Arc::new(|ctx| cond_ops::cond_essinf(ctx.m, ctx.t)),
    }
}

/// `mu_t(m) = Esssup_t m`.
pub fn esssup_rule() -> UpdateRule {
    UpdateRule {
        name: "esssup".into(),
        declared: DeclaredClasses {
            x_invariant: true,
            sx_invariant: true,
            projective: true,
        },
        one_step_only: false,
        needs_process: false,
        eval: Arc::new(|ctx| cond_ops::cond_esssup(ctx.m, ctx.t)),
    }
}

/// `mu_t(m) = E[m | F_t]`.
pub fn expectation_rule() -> UpdateRule {
    UpdateRule {
        name: "expectation".into(),
        declared: DeclaredClasses {
            x_invariant: true,
            sx_invariant: true,
            projective: true,
        },
        one_step_only: false,
        needs_process: false,
        eval: Arc::new(|ctx| cond_ops::cond_expect(ctx.m, ctx.t)),
    }
}

/// Discounting rule: `alpha^{s-t} E[m|F_t]` where the conditional
/// expectation is nonnegative, `alpha^{t-s} E[m|F_t]` where it is
/// negative. X-invariant but genuinely s-dependent, hence not projective.
pub fn discounted_rule(alpha: f64) -> Result<UpdateRule> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::BadAlpha {
            alpha,
            range: "(0,1)",
        });
    }
    Ok(UpdateRule {
        name: format!("discounted:{alpha}"),
        declared: DeclaredClasses {
            x_invariant: true,
            sx_invariant: false,
            projective: false,
        },
        one_step_only: false,
        needs_process: false,
        eval: Arc::new(move |ctx| {
            let gap = (ctx.s - ctx.t) as i32;
            let shrink = ExtReal::finite(alpha.powi(gap));
            let grow = ExtReal::finite(alpha.powi(-gap));
            Ok(cond_ops::cond_expect(ctx.m, ctx.t)?.map(|e| {
                if e >= ExtReal::ZERO {
                    e * shrink
                } else {
                    e * grow
                }
            }))
        }),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Direction {
    Accept,
    Reject,
}

impl Direction {
    pub fn label(self) -> &'static str {
        match self {
            Direction::Accept => "accept",
            Direction::Reject => "reject",
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "accept" => Ok(Direction::Accept),
            "reject" => Ok(Direction::Reject),
            other => Err(format!("unknown direction {other:?} (accept|reject)")),
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// One-step process rule `Essinf_t m + V_t` (accept) or
/// `Esssup_t m + V_t` (reject): the worst (best) adapted level plus the
/// dividend paid today.
pub fn process_weak_rule(direction: Direction) -> UpdateRule {
    UpdateRule {
        name: format!("weak-process:{direction}"),
        declared: DeclaredClasses::default(),
        one_step_only: true,
        needs_process: true,
        eval: Arc::new(move |ctx| {
            let v = ctx.x.as_process().expect("kind validated");
            let adapted = match direction {
                Direction::Accept => cond_ops::cond_essinf(ctx.m, ctx.t)?,
                Direction::Reject => cond_ops::cond_esssup(ctx.m, ctx.t)?,
            };
            adapted.add(v.row(ctx.t))
        }),
    }
}

/// One-step semi-weak rule: the essinf/esssup level gated by the sign of
/// the current dividend, with the off-sign branch pinned at `-inf`
/// (accept) or `+inf` (reject).
pub fn semiweak_rule(direction: Direction) -> UpdateRule {
    UpdateRule {
        name: format!("semiweak:{direction}"),
        declared: DeclaredClasses::default(),
        one_step_only: true,
        needs_process: true,
        eval: Arc::new(move |ctx| {
            let v = ctx.x.as_process().expect("kind validated");
            let today = v.row(ctx.t);
            match direction {
                Direction::Accept => {
                    let level = cond_ops::cond_essinf(ctx.m, ctx.t)?;
                    level.zip_with(today, |lvl, div| {
                        if div >= ExtReal::ZERO {
                            lvl
                        } else {
                            NegInf
                        }
                    })
                }
                Direction::Reject => {
                    let level = cond_ops::cond_esssup(ctx.m, ctx.t)?;
                    level.zip_with(today, |lvl, div| {
                        if div <= ExtReal::ZERO {
                            lvl
                        } else {
                            PosInf
                        }
                    })
                }
            }
        }),
    }
}

/// The update rule induced by a benchmark family: the generators plus all
/// real shifts, pasted freely across `F_t` atoms. Per atom the value is
/// the supremum of `phi_t(Y + r)` over feasible pairs, where feasibility
/// means `phi_s(Y + r) <= m` on the whole atom; `-inf` when nothing is
/// feasible.
///
/// Feasibility is a down-set in `r` (monotonicity of `phi_s`), so the
/// supremum is bracketed exponentially and then bisected; a feasible set
/// unbounded above is evaluated at the `+inf` shift, the monotone limit.
pub fn benchmark_rule(generators: &[RandomVariable], phi: &LmMeasure) -> Result<UpdateRule> {
    if generators.is_empty() {
        return Err(Error::EmptyBenchmark);
    }
    if phi.kind() != PayoffKind::Variables {
        return Err(Error::KindMismatch {
            expected: "variables",
            got: phi.kind().label(),
        });
    }
    let space = generators[0].space().clone();
    let mut gens = generators.to_vec();
    if !gens.iter().any(|g| *g == RandomVariable::zero(&space)) {
        gens.push(RandomVariable::zero(&space));
    }
    let phi = phi.clone();
    Ok(UpdateRule {
        name: format!("benchmark({} generators):{}", gens.len(), phi.name()),
        declared: DeclaredClasses {
            x_invariant: true,
            sx_invariant: false,
            projective: false,
        },
        one_step_only: false,
        needs_process: false,
        eval: Arc::new(move |ctx| {
            let space = ctx.m.space().clone();
            let mut out = vec![NegInf; space.outcome_count()];
            for atom in space.atoms(ctx.t)? {
                let mut best = NegInf;
                for gen in &gens {
                    let value = best_shifted_value(gen, &phi, ctx.t, ctx.s, ctx.m, atom)?;
                    best = best.max(value);
                }
                for &w in atom {
                    out[w] = best;
                }
            }
            RandomVariable::new(space, out)
        }),
    })
}

/// Supremum of `phi_t(Y + r)` on `atom` over shifts `r` keeping
/// `phi_s(Y + r) <= m` there.
fn best_shifted_value(
    gen: &RandomVariable,
    phi: &LmMeasure,
    t: usize,
    s: usize,
    m: &RandomVariable,
    atom: &[usize],
) -> Result<ExtReal> {
    let feasible = |r: ExtReal| -> Result<bool> {
        let score = phi.evaluate(s, &Payoff::Variable(gen.add_scalar(r)))?;
        Ok(atom.iter().all(|&w| score.value(w) <= m.value(w)))
    };
    let value_at = |r: ExtReal| -> Result<ExtReal> {
        let scored = phi.evaluate(t, &Payoff::Variable(gen.add_scalar(r)))?;
        Ok(scored.value(atom[0]))
    };

    // Invariant for the bisection: `lo` tested feasible, `hi` tested
    // infeasible.
    let (mut lo, mut hi);
    if feasible(ExtReal::ZERO)? {
        let mut r = 1.0;
        while r < SHIFT_RANGE && feasible(ExtReal::finite(r))? {
            r *= 2.0;
        }
        if r >= SHIFT_RANGE {
            // feasible at every probed shift: take the monotone limit
            return value_at(PosInf);
        }
        lo = if r == 1.0 { 0.0 } else { r / 2.0 };
        hi = r;
    } else {
        let mut r = -1.0;
        while r > -SHIFT_RANGE && !feasible(ExtReal::finite(r))? {
            r *= 2.0;
        }
        if r <= -SHIFT_RANGE {
            return Ok(NegInf);
        }
        lo = r;
        hi = if r == -1.0 { 0.0 } else { r / 2.0 };
    }
    let mut iters = 0;
    while hi - lo > SHIFT_TOL && iters < MAX_BISECT_ITERS {
        let mid = 0.5 * (lo + hi);
        if feasible(ExtReal::finite(mid))? {
            lo = mid;
        } else {
            hi = mid;
        }
        iters += 1;
    }
    value_at(ExtReal::finite(lo))
}

/// Backward nested composition of a one-step rule across `t..s`.
pub fn compose_nested(
    rule: &UpdateRule,
    t: usize,
    s: usize,
    m: &RandomVariable,
    x: &Payoff,
) -> Result<RandomVariable> {
    if s <= t {
        return Err(Error::TimeOrder { t, s });
    }
    m.space().check_time(s)?;
    let mut level = m.clone();
    for u in (t..s).rev() {
        level = rule.evaluate(u, u + 1, &level, x)?;
    }
    Ok(level)
}

/// A strictly increasing scalar map with a computable inverse, used to
/// transport rules and measures through monotone reparametrizations.
#[derive(Clone)]
pub struct MonotoneTransform {
    name: String,
    forward: Arc<dyn Fn(ExtReal) -> ExtReal + Send + Sync>,
    inverse: Arc<dyn Fn(ExtReal) -> ExtReal + Send + Sync>,
    /// Whether the map is onto the whole extended line. Bounded maps
    /// (like arctan) clamp out-of-range inputs in the inverse.
    surjective: bool,
}

impl MonotoneTransform {
    pub fn identity() -> Self {
        MonotoneTransform {
            name: "id".into(),
            forward: Arc::new(|v| v),
            inverse: Arc::new(|v| v),
            surjective: true,
        }
    }

    /// `g(x) = a x + b` with `a > 0`.
    pub fn affine(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(Error::NonInvertibleTransform(format!(
                "affine slope must be finite positive, got a={a}, b={b}"
            )));
        }
        Ok(MonotoneTransform {
            name: format!("affine({a},{b})"),
            forward: Arc::new(move |v| v * ExtReal::finite(a) + ExtReal::finite(b)),
            inverse: Arc::new(move |v| (v - ExtReal::finite(b)) * ExtReal::finite(1.0 / a)),
            surjective: true,
        })
    }

    /// `g(x) = x^3`, an unbounded odd bijection.
    pub fn cubic() -> Self {
        MonotoneTransform {
            name: "cubic".into(),
            forward: Arc::new(|v| match v {
                ExtReal::Finite(x) => ExtReal::finite(x * x * x),
                inf => inf,
            }),
            inverse: Arc::new(|v| match v {
                ExtReal::Finite(x) => ExtReal::finite(x.signum() * x.abs().cbrt()),
                inf => inf,
            }),
            surjective: true,
        }
    }

    /// `g(x) = arctan(x)` extended by continuity; bounded, with the
    /// inverse clamping values beyond `±pi/2` to the infinities.
    pub fn bounded_atan() -> Self {
        let half_pi = std::f64::consts::FRAC_PI_2;
        MonotoneTransform {
            name: "atan".into(),
            forward: Arc::new(|v| match v {
                ExtReal::Finite(x) => ExtReal::finite(x.atan()),
                PosInf => ExtReal::finite(std::f64::consts::FRAC_PI_2),
                NegInf => ExtReal::finite(-std::f64::consts::FRAC_PI_2),
            }),
            inverse: Arc::new(move |v| match v {
                ExtReal::Finite(y) if y >= half_pi => PosInf,
                ExtReal::Finite(y) if y <= -half_pi => NegInf,
                ExtReal::Finite(y) => ExtReal::finite(y.tan()),
                inf => inf,
            }),
            surjective: false,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn surjective(&self) -> bool {
        self.surjective
    }

    pub fn apply(&self, v: ExtReal) -> ExtReal {
        (self.forward)(v)
    }

    pub fn invert(&self, v: ExtReal) -> ExtReal {
        (self.inverse)(v)
    }

    pub fn apply_rv(&self, x: &RandomVariable) -> RandomVariable {
        x.map(|v| self.apply(v))
    }

    /// Probes strict monotonicity and the round trip `g(g^{-1}(g(x))) =
    /// g(x)` on a grid including the infinities.
    pub fn validate(&self) -> Result<()> {
        let probes: Vec<ExtReal> = (-40..=40)
            .map(|k| ExtReal::finite(f64::from(k) / 4.0))
            .chain([NegInf, PosInf])
            .collect();
        let mut prev: Option<(ExtReal, ExtReal)> = None;
        for &p in &probes {
            let image = self.apply(p);
            if let Some((q, q_image)) = prev {
                if q < p && q_image >= image && image.is_finite() && q_image.is_finite() {
                    return Err(Error::NonInvertibleTransform(format!(
                        "{} not strictly increasing between {q} and {p}",
                        self.name
                    )));
                }
            }
            let round = self.apply(self.invert(image));
            if !round.approx_eq(image, 1e-7) {
                return Err(Error::NonInvertibleTransform(format!(
                    "{} round trip failed at {p}: g(g^-1({image})) = {round}",
                    self.name
                )));
            }
            prev = Some((p, image));
        }
        Ok(())
    }
}

/// `mu~_{t,s}(m, X) = g(mu_{t,s}(g^{-1}(m), X))`: transports a rule
/// through a strictly increasing reparametrization of preference levels.
pub fn monotone_transform_rule(g: &MonotoneTransform, rule: &UpdateRule) -> Result<UpdateRule> {
    g.validate()?;
    let inner = rule.clone();
    let g = g.clone();
    let declared = DeclaredClasses {
        x_invariant: rule.declared.x_invariant,
        sx_invariant: rule.declared.sx_invariant,
        // projectivity survives only when g reaches every level
        projective: rule.declared.projective && g.surjective,
    };
    Ok(UpdateRule {
        name: format!("{}∘{}", g.name(), rule.name()),
        declared,
        one_step_only: rule.one_step_only,
        needs_process: rule.needs_process,
        eval: Arc::new(move |ctx| {
            let pulled = ctx.m.map(|v| g.invert(v));
            Ok(inner.evaluate(ctx.t, ctx.s, &pulled, ctx.x)?.map(|v| g.apply(v)))
        }),
    })
}

/// Outcome of one verified property.
#[derive(Clone, Debug, serde::Serialize)]
pub struct PropertyCheck {
    pub holds: bool,
    pub checked: usize,
    pub witness: Option<String>,
}

impl PropertyCheck {
    pub fn passing() -> Self {
        PropertyCheck {
            holds: true,
            checked: 0,
            witness: None,
        }
    }

    pub fn fail(&mut self, witness: String) {
        if self.holds {
            self.holds = false;
            self.witness = Some(witness);
        }
    }
}

/// Property-test verdicts for one rule, plus contradictions against its
/// declared flags.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ClassReport {
    pub rule: String,
    pub local: PropertyCheck,
    pub monotone: PropertyCheck,
    pub x_invariant: PropertyCheck,
    pub sx_invariant: PropertyCheck,
    pub projective: PropertyCheck,
    pub declared: DeclaredClasses,
    pub contradictions: Vec<String>,
    pub seed: u64,
    pub samples: usize,
}

impl ClassReport {
    pub fn declared_consistent(&self) -> bool {
        self.contradictions.is_empty()
    }
}

/// Verifies locality, monotonicity and the class flags of a rule over
/// seeded random `(t, s, m, X)` draws on `space`. A declared flag
/// contradicted by a counterexample is reported with its witness.
pub fn classify(
    rule: &UpdateRule,
    space: &Arc<FilteredSpace>,
    samples: usize,
    seed: u64,
) -> Result<ClassReport> {
    let eps = 1e-9;
    let mut sampler = Sampler::new(seed);
    let mut local = PropertyCheck::passing();
    let mut monotone = PropertyCheck::passing();
    let mut x_invariant = PropertyCheck::passing();
    let mut sx_invariant = PropertyCheck::passing();
    let mut projective = PropertyCheck::passing();

    let horizon = space.horizon();
    let kind = if rule.needs_process {
        PayoffKind::Processes
    } else {
        PayoffKind::Variables
    };

    for _ in 0..samples {
        let t = sampler.rng().gen_range(0..horizon);
        let s = if rule.one_step_only {
            t + 1
        } else {
            sampler.rng().gen_range(t + 1..=horizon)
        };
        let m = sampler.measurable(space, s, 0.15);
        let x = sampler.payoff(space, kind, 0.05);
        let base = rule.evaluate(t, s, &m, &x)?;

        if local.holds {
            let atom_count = space.atom_count(t)?;
            for ids in crate::lm_measures::atom_union_ids(&mut sampler, atom_count) {
                let ind = RandomVariable::indicator_of_atom_union(space, t, &ids)?;
                let masked_m = m.mul(&ind)?;
                let masked = rule.evaluate(t, s, &masked_m, &x)?;
                let lhs = base.mul(&ind)?;
                let rhs = masked.mul(&ind)?;
                local.checked += 1;
                for w in 0..space.outcome_count() {
                    if !lhs.value(w).approx_eq(rhs.value(w), eps) {
                        local.fail(format!(
                            "t={t}, s={s}, atoms {ids:?}, outcome {w}: 1_A·mu(m)={} vs \
                             1_A·mu(1_A·m)={} for m={m}",
                            lhs.value(w),
                            rhs.value(w)
                        ));
                        break;
                    }
                }
                if !local.holds {
                    break;
                }
            }
        }

        if monotone.holds {
            let slack = sampler.nonneg_measurable(space, s, 0.1);
            let lower = m.sub(&slack)?;
            let low_val = rule.evaluate(t, s, &lower, &x)?;
            monotone.checked += 1;
            for w in 0..space.outcome_count() {
                if !low_val.value(w).le_within(base.value(w), eps) {
                    monotone.fail(format!(
                        "t={t}, s={s}, outcome {w}: mu(m')={} > mu(m)={} although m' <= m",
                        low_val.value(w),
                        base.value(w)
                    ));
                    break;
                }
            }
        }

        if x_invariant.holds {
            let at_zero = rule.evaluate(t, s, &m, &x.zero_like())?;
            x_invariant.checked += 1;
            for w in 0..space.outcome_count() {
                if !base.value(w).approx_eq(at_zero.value(w), eps) {
                    x_invariant.fail(format!(
                        "t={t}, s={s}, outcome {w}: mu(m,X)={} vs mu(m,0)={}",
                        base.value(w),
                        at_zero.value(w)
                    ));
                    break;
                }
            }
        }

        if sx_invariant.holds && !rule.one_step_only {
            // one m measurable at every compared s: use the finest time
            let m_all = sampler.measurable(space, horizon, 0.15);
            let mut reference: Option<(usize, RandomVariable)> = None;
            'outer: for s2 in t + 1..=horizon {
                if !m_all.is_measurable(s2)? {
                    continue;
                }
                for x2 in [x.clone(), x.zero_like()] {
                    let val = rule.evaluate(t, s2, &m_all, &x2)?;
                    match &reference {
                        None => reference = Some((s2, val)),
                        Some((s_ref, ref_val)) => {
                            sx_invariant.checked += 1;
                            for w in 0..space.outcome_count() {
                                if !val.value(w).approx_eq(ref_val.value(w), eps) {
                                    sx_invariant.fail(format!(
                                        "t={t}: mu_{{t,{s2}}} differs from mu_{{t,{s_ref}}} \
                                         at outcome {w} ({} vs {}) for m={m_all}",
                                        val.value(w),
                                        ref_val.value(w)
                                    ));
                                    break 'outer;
                                }
                            }
                        }
                    }
                }
            }
        }

        if projective.holds {
            let m_t = sampler.measurable(space, t, 0.15);
            let val = rule.evaluate(t, s, &m_t, &x)?;
            projective.checked += 1;
            for w in 0..space.outcome_count() {
                if !val.value(w).approx_eq(m_t.value(w), eps) {
                    projective.fail(format!(
                        "t={t}, s={s}, outcome {w}: mu_t(m_t)={} but m_t={}",
                        val.value(w),
                        m_t.value(w)
                    ));
                    break;
                }
            }
        }
    }

    // a one-step rule admits the family {mu_t} only when X drops out
    if rule.one_step_only && !x_invariant.holds {
        sx_invariant.fail(format!(
            "one-step rule depends on X: {}",
            x_invariant.witness.clone().unwrap_or_default()
        ));
    }
    // projectivity presumes sX-invariance
    if projective.holds && !sx_invariant.holds {
        projective.fail(format!(
            "not sX-invariant: {}",
            sx_invariant.witness.clone().unwrap_or_default()
        ));
    }

    let mut contradictions = Vec::new();
    let declared = rule.declared;
    for (name, flag, check) in [
        ("X-invariant", declared.x_invariant, &x_invariant),
        ("sX-invariant", declared.sx_invariant, &sx_invariant),
        ("projective", declared.projective, &projective),
    ] {
        if flag && !check.holds {
            contradictions.push(format!(
                "declared {name} but found counterexample: {}",
                check.witness.clone().unwrap_or_default()
            ));
        }
    }

    Ok(ClassReport {
        rule: rule.name().to_string(),
        local,
        monotone,
        x_invariant,
        sx_invariant,
        projective,
        declared,
        contradictions,
        seed,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{quad_space, var};
    use crate::lm_measures::cond_expectation_measure;
    use crate::prob_space::AdaptedProcess;
    use std::sync::Arc;

    fn quad_process(rows: Vec<Vec<f64>>) -> (Arc<FilteredSpace>, Payoff) {
        let space = quad_space();
        let process = AdaptedProcess::from_values(
            &space,
            rows.into_iter()
                .map(|r| r.into_iter().map(ExtReal::finite).collect())
                .collect(),
        )
        .unwrap();
        (space, Payoff::Process(process))
    }

    #[test]
    fn essinf_rule_examples() {
        let space = quad_space();
        let m = var(&space, &[1.0, 3.0, 2.0, 5.0]);
        let x = Payoff::Variable(RandomVariable::zero(&space));
        let rule = essinf_rule();
        assert_eq!(
            rule.evaluate(0, 2, &m, &x).unwrap(),
            var(&space, &[1.0; 4])
        );
        // projectivity on a measurable level
        let m_t = var(&space, &[2.0, 2.0, 4.0, 4.0]);
        assert_eq!(rule.evaluate(1, 2, &m_t, &x).unwrap(), m_t);

        let m_inf = RandomVariable::new(
            Arc::clone(&space),
            vec![
                NegInf,
                ExtReal::finite(3.0),
                ExtReal::finite(2.0),
                ExtReal::finite(5.0),
            ],
        )
        .unwrap();
        let out = rule.evaluate(1, 2, &m_inf, &x).unwrap();
        assert_eq!(
            out.values(),
            &[NegInf, NegInf, ExtReal::finite(2.0), ExtReal::finite(2.0)]
        );
    }

    #[test]
    fn expectation_rule_examples() {
        let space = quad_space();
        let x = Payoff::Variable(RandomVariable::zero(&space));
        let m = var(&space, &[1.0, 3.0, 2.0, 5.0]);
        let rule = expectation_rule();
        assert_eq!(
            rule.evaluate(1, 2, &m, &x).unwrap(),
            var(&space, &[2.0, 2.0, 3.5, 3.5])
        );
        let m_t = var(&space, &[4.0, 4.0, 1.0, 1.0]);
        assert_eq!(rule.evaluate(1, 2, &m_t, &x).unwrap(), m_t);
        let m_inf = RandomVariable::new(
            Arc::clone(&space),
            vec![PosInf, ExtReal::finite(2.0), NegInf, PosInf],
        )
        .unwrap();
        assert_eq!(
            rule.evaluate(1, 2, &m_inf, &x).unwrap().values(),
            &[PosInf, PosInf, NegInf, NegInf]
        );
    }

    #[test]
    fn discounted_rule_examples() {
        let space = quad_space();
        let x = Payoff::Variable(RandomVariable::zero(&space));
        let rule = discounted_rule(0.5).unwrap();
        let m = var(&space, &[1.0, 3.0, 2.0, 5.0]);
        let out = rule.evaluate(0, 2, &m, &x).unwrap();
        assert!(out.value(0).approx_eq(ExtReal::finite(0.6875), 1e-12));

        let neg = var(&space, &[-4.0; 4]);
        let out = rule.evaluate(0, 2, &neg, &x).unwrap();
        assert!(out.value(0).approx_eq(ExtReal::finite(-16.0), 1e-12));

        let zero = RandomVariable::zero(&space);
        assert_eq!(rule.evaluate(0, 2, &zero, &x).unwrap(), zero);

        assert!(matches!(
            discounted_rule(1.0),
            Err(Error::BadAlpha { .. })
        ));
    }

    #[test]
    fn process_weak_rule_examples() {
        let (space, x) = quad_process(vec![
            vec![0.0; 4],
            vec![1.0, 1.0, 0.0, 0.0],
            vec![0.0; 4],
        ]);
        let m = var(&space, &[1.0, 3.0, 2.0, 5.0]);
        let rule = process_weak_rule(Direction::Accept);
        assert_eq!(
            rule.evaluate(1, 2, &m, &x).unwrap(),
            var(&space, &[2.0; 4])
        );
        // V = 0 reduces to the essinf rule
        let zero = x.zero_like();
        assert_eq!(
            rule.evaluate(1, 2, &m, &zero).unwrap(),
            essinf_rule().evaluate(1, 2, &m, &zero).unwrap()
        );
        let m_t = var(&space, &[2.0, 2.0, 4.0, 4.0]);
        assert_eq!(rule.evaluate(1, 2, &m_t, &zero).unwrap(), m_t);
        assert!(matches!(
            rule.evaluate(0, 2, &m, &x),
            Err(Error::NotOneStep { .. })
        ));
    }

    #[test]
    fn semiweak_rule_examples() {
        let (space, x) = quad_process(vec![
            vec![0.0; 4],
            vec![1.0, 1.0, -1.0, -1.0],
            vec![0.0; 4],
        ]);
        let m = var(&space, &[1.0, 3.0, 2.0, 5.0]);
        let accept = semiweak_rule(Direction::Accept);
        assert_eq!(
            accept.evaluate(1, 2, &m, &x).unwrap().values(),
            &[ExtReal::ONE, ExtReal::ONE, NegInf, NegInf]
        );

        let (_, nonneg) = quad_process(vec![
            vec![0.0; 4],
            vec![1.0, 1.0, 0.0, 0.0],
            vec![0.0; 4],
        ]);
        assert_eq!(
            accept.evaluate(1, 2, &m, &nonneg).unwrap(),
            cond_ops::cond_essinf(&m, 1).unwrap()
        );

        let reject = semiweak_rule(Direction::Reject);
        assert_eq!(
            reject.evaluate(1, 2, &m, &x).unwrap().values(),
            &[PosInf, PosInf, ExtReal::finite(5.0), ExtReal::finite(5.0)]
        );
    }

    #[test]
    fn benchmark_rule_with_constants_recovers_essinf() {
        let space = quad_space();
        let gens = vec![RandomVariable::zero(&space)];
        let phi = cond_expectation_measure();
        let rule = benchmark_rule(&gens, &phi).unwrap();
        let x = Payoff::Variable(RandomVariable::zero(&space));

        let m = var(&space, &[1.0, 3.0, 2.0, 5.0]);
        let out = rule.evaluate(1, 2, &m, &x).unwrap();
        let expect = cond_ops::cond_essinf(&m, 1).unwrap();
        for w in 0..4 {
            assert!(
                out.value(w).approx_eq(expect.value(w), 1e-6),
                "w={w}: {} vs {}",
                out.value(w),
                expect.value(w)
            );
        }

        let hopeless = RandomVariable::constant(&space, NegInf);
        assert_eq!(
            rule.evaluate(1, 2, &hopeless, &x).unwrap(),
            RandomVariable::constant(&space, NegInf)
        );

        // monotone in the level
        let m_low = var(&space, &[0.0, 3.0, 2.0, 5.0]);
        let lo = rule.evaluate(1, 2, &m_low, &x).unwrap();
        for w in 0..4 {
            assert!(lo.value(w) <= out.value(w) + ExtReal::finite(1e-9));
        }
        assert!(lo.value(0).approx_eq(ExtReal::ZERO, 1e-6));

        assert!(matches!(
            benchmark_rule(&[], &phi),
            Err(Error::EmptyBenchmark)
        ));
    }

    // Independent oracle: dense grid search over shifts, refined once.
    #[test]
    fn benchmark_rule_matches_grid_search() {
        let space = quad_space();
        let gens = vec![var(&space, &[0.0; 4]), var(&space, &[-1.0, 2.0, 0.5, -0.5])];
        let phi = cond_expectation_measure();
        let rule = benchmark_rule(&gens, &phi).unwrap();
        let x = Payoff::Variable(RandomVariable::zero(&space));
        let m = var(&space, &[1.5, 3.0, -2.0, 5.0]);
        let got = rule.evaluate(1, 2, &m, &x).unwrap();

        for (a, atom) in space.atoms(1).unwrap().iter().enumerate() {
            let mut best = NegInf;
            for gen in &gens {
                let mut r = -50.0;
                while r <= 50.0 {
                    let shifted = gen.add_scalar(ExtReal::finite(r));
                    let at_s = cond_ops::cond_expect(&shifted, 2).unwrap();
                    if atom.iter().all(|&w| at_s.value(w) <= m.value(w)) {
                        let at_t = cond_ops::cond_expect(&shifted, 1).unwrap();
                        best = best.max(at_t.value(atom[0]));
                    }
                    r += 0.0005;
                }
            }
            assert!(
                got.value(atom[0]).approx_eq(best, 1e-3),
                "atom {a}: rule {} vs grid {best}",
                got.value(atom[0])
            );
        }
    }

    #[test]
    fn compose_nested_examples() {
        let space = quad_space();
        let x = Payoff::Variable(RandomVariable::zero(&space));
        let m = var(&space, &[1.0, 3.0, 2.0, 5.0]);

        let nested = compose_nested(&expectation_rule(), 0, 2, &m, &x).unwrap();
        assert!(nested.value(0).approx_eq(ExtReal::finite(2.75), 1e-12));

        let single = compose_nested(&expectation_rule(), 1, 2, &m, &x).unwrap();
        assert_eq!(single, expectation_rule().evaluate(1, 2, &m, &x).unwrap());

        let min = compose_nested(&essinf_rule(), 0, 2, &m, &x).unwrap();
        assert_eq!(min, var(&space, &[1.0; 4]));

        assert!(matches!(
            compose_nested(&essinf_rule(), 2, 2, &m, &x),
            Err(Error::TimeOrder { .. })
        ));
    }

    #[test]
    fn transform_rule_examples() {
        let space = quad_space();
        let x = Payoff::Variable(RandomVariable::zero(&space));

        let id = monotone_transform_rule(&MonotoneTransform::identity(), &essinf_rule()).unwrap();
        let m = var(&space, &[1.0, 3.0, 2.0, 5.0]);
        assert_eq!(
            id.evaluate(1, 2, &m, &x).unwrap(),
            essinf_rule().evaluate(1, 2, &m, &x).unwrap()
        );

        let doubling = monotone_transform_rule(
            &MonotoneTransform::affine(2.0, 0.0).unwrap(),
            &essinf_rule(),
        )
        .unwrap();
        let m2 = var(&space, &[2.0, 6.0, 4.0, 10.0]);
        assert_eq!(
            doubling.evaluate(1, 2, &m2, &x).unwrap(),
            var(&space, &[2.0, 2.0, 4.0, 4.0])
        );

        let bent =
            monotone_transform_rule(&MonotoneTransform::bounded_atan(), &expectation_rule())
                .unwrap();
        let report = classify(&bent, &space, 40, 99).unwrap();
        assert!(report.local.holds, "{:?}", report.local);
        assert!(report.monotone.holds, "{:?}", report.monotone);
        assert!(report.declared_consistent(), "{:?}", report.contradictions);
    }

    #[test]
    fn classify_verdicts() {
        let space = quad_space();

        let report = classify(&essinf_rule(), &space, 60, 7).unwrap();
        assert!(report.local.holds);
        assert!(report.monotone.holds);
        assert!(report.x_invariant.holds);
        assert!(report.sx_invariant.holds);
        assert!(report.projective.holds);
        assert!(report.declared_consistent());

        let report = classify(&discounted_rule(0.5).unwrap(), &space, 60, 7).unwrap();
        assert!(report.local.holds);
        assert!(report.monotone.holds);
        assert!(report.x_invariant.holds);
        assert!(!report.projective.holds, "{:?}", report.projective);
        assert!(report.declared_consistent());

        let report = classify(&semiweak_rule(Direction::Accept), &space, 60, 7).unwrap();
        assert!(!report.x_invariant.holds);
        assert!(report.x_invariant.witness.is_some());
        assert!(report.local.holds);
        assert!(report.monotone.holds);
        assert!(report.declared_consistent());
    }

    #[test]
    fn every_builtin_rule_is_local_and_monotone() {
        let mut sampler = Sampler::new(33);
        for _ in 0..6 {
            let space = sampler.space(12, 3);
            for rule in [
                essinf_rule(),
                esssup_rule(),
                expectation_rule(),
                discounted_rule(0.25).unwrap(),
                process_weak_rule(Direction::Accept),
                process_weak_rule(Direction::Reject),
                semiweak_rule(Direction::Accept),
                semiweak_rule(Direction::Reject),
            ] {
                let report = classify(&rule, &space, 20, 71).unwrap();
                assert!(report.local.holds, "{}: {:?}", rule.name(), report.local);
                assert!(
                    report.monotone.holds,
                    "{}: {:?}",
                    rule.name(),
                    report.monotone
                );
                assert!(
                    report.declared_consistent(),
                    "{}: {:?}",
                    rule.name(),
                    report.contradictions
                );
            }
        }
    }
}
