//! Local monotone measures of risk and performance.
//!
//! An [`LmMeasure`] is a family of maps `phi_t` sending payoffs to
//! `F_t`-measurable extended-real variables, contractually local and
//! monotone. Concrete instances:
//!
//! * conditional expectation (the baseline monetary utility measure),
//! * the dynamic Gain Loss Ratio (expected tail gain over expected tail
//!   losses),
//! * tail conditional value at risk and the dynamic RAROC built on it,
//! * the RAROC risk family `phi^x`, a mixture sliding from the plain
//!   expectation (x = 0) toward the tail value at risk (x -> inf).
//!
//! Measure axioms are never assumed by the checkers: `check_lm_axioms`
//! verifies locality and monotonicity by enumeration and randomized
//! domination.

use std::sync::Arc;

use rand::Rng;

use crate::cond_ops;
use crate::error::{Error, Result};
use crate::extreal::{ExtReal, NegInf, PosInf};
use crate::prob_space::{AdaptedProcess, FilteredSpace, Payoff, PayoffKind, RandomVariable};
use crate::sampling::Sampler;
use crate::update_rules::{MonotoneTransform, PropertyCheck};

/// Declared structural flags. Converters re-verify the ones they rely on
/// rather than trusting the declaration.
#[derive(Clone, Copy, Debug, Default, serde::Serialize)]
pub struct MeasureFlags {
    pub monetary_utility: bool,
    pub translation_invariant: bool,
    pub independent_of_past: bool,
}

type MeasureFn = dyn Fn(usize, &Payoff) -> Result<RandomVariable> + Send + Sync;

#[derive(Clone)]
pub struct LmMeasure {
    name: String,
    kind: PayoffKind,
    flags: MeasureFlags,
    eval: Arc<MeasureFn>,
}

impl LmMeasure {
    pub fn from_fn(
        name: impl Into<String>,
        kind: PayoffKind,
        flags: MeasureFlags,
        eval: impl Fn(usize, &Payoff) -> Result<RandomVariable> + Send + Sync + 'static,
    ) -> Self {
        LmMeasure {
            name: name.into(),
            kind,
            flags,
            eval: Arc::new(eval),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> PayoffKind {
        self.kind
    }

    pub fn flags(&self) -> MeasureFlags {
        self.flags
    }

    pub fn evaluate(&self, t: usize, payoff: &Payoff) -> Result<RandomVariable> {
        if payoff.kind() != self.kind {
            return Err(Error::KindMismatch {
                expected: self.kind.label(),
                got: payoff.kind().label(),
            });
        }
        payoff.space().check_time(t)?;
        (self.eval)(t, payoff)
    }
}

impl std::fmt::Debug for LmMeasure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LmMeasure")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .finish()
    }
}

/// `phi_t(X) = E[X | F_t]` on terminal cash-flows.
pub fn cond_expectation_measure() -> LmMeasure {
    LmMeasure::from_fn(
        "cexp",
        PayoffKind::Variables,
        MeasureFlags {
            monetary_utility: true,
            translation_invariant: false,
            independent_of_past: false,
        },
        |t, payoff| cond_ops::cond_expect(payoff.as_variable().expect("kind checked"), t),
    )
}

/// `phi_t(X) = Essinf_t X` on terminal cash-flows.
pub fn cond_essinf_measure() -> LmMeasure {
    LmMeasure::from_fn(
        "essinf-measure",
        PayoffKind::Variables,
        MeasureFlags {
            monetary_utility: true,
            ..MeasureFlags::default()
        },
        |t, payoff| cond_ops::cond_essinf(payoff.as_variable().expect("kind checked"), t),
    )
}

/// `phi_t(X) = Esssup_t X` on terminal cash-flows.
pub fn cond_esssup_measure() -> LmMeasure {
    LmMeasure::from_fn(
        "esssup-measure",
        PayoffKind::Variables,
        MeasureFlags {
            monetary_utility: true,
            ..MeasureFlags::default()
        },
        |t, payoff| cond_ops::cond_esssup(payoff.as_variable().expect("kind checked"), t),
    )
}

/// Views a process measure as a variables measure through terminal-only
/// embedding `X -> (0, …, 0, X)`. Evaluation fails when `X` is not
/// measurable at the horizon.
pub fn terminal_variables_measure(measure: &LmMeasure) -> Result<LmMeasure> {
    if measure.kind() != PayoffKind::Processes {
        return Err(Error::KindMismatch {
            expected: "processes",
            got: measure.kind().label(),
        });
    }
    let inner = measure.clone();
    Ok(LmMeasure::from_fn(
        format!("{}@terminal", measure.name()),
        PayoffKind::Variables,
        measure.flags(),
        move |t, payoff| {
            let x = payoff.as_variable().expect("kind checked");
            let process = AdaptedProcess::terminal(x.space(), x.clone())?;
            inner.evaluate(t, &Payoff::Process(process))
        },
    ))
}

fn require_process(payoff: &Payoff) -> &AdaptedProcess {
    payoff.as_process().expect("kind checked by evaluate")
}

/// Ratio with the conventions forced by monotonicity: positive gain over
/// zero losses is `+inf`; a nonpositive gain scores zero.
fn gain_loss_ratio(num: ExtReal, den: ExtReal) -> ExtReal {
    if num <= ExtReal::ZERO {
        return ExtReal::ZERO;
    }
    match (num, den) {
        (_, ExtReal::Finite(d)) if d == 0.0 => PosInf,
        (PosInf, _) => PosInf,
        (ExtReal::Finite(n), ExtReal::Finite(d)) => ExtReal::finite(n / d),
        // den = +inf with a positive finite numerator
        (_, PosInf) => ExtReal::ZERO,
        _ => unreachable!("den is a nonnegative expectation"),
    }
}

/// Dynamic Gain Loss Ratio at time `t`:
/// `E[sum_{i=t}^T V_i | F_t] / E[(sum_{i=t}^T V_i)^- | F_t]` when the
/// numerator is positive, else 0.
pub fn dglr(t: usize, v: &AdaptedProcess) -> Result<RandomVariable> {
    let sum = v.tail_sum(t)?;
    let num = cond_ops::cond_expect(&sum, t)?;
    let den = cond_ops::cond_expect(&sum.neg_part(), t)?;
    num.zip_with(&den, gain_loss_ratio)
}

pub fn dglr_measure() -> LmMeasure {
    LmMeasure::from_fn(
        "dglr",
        PayoffKind::Processes,
        MeasureFlags {
            monetary_utility: false,
            translation_invariant: true,
            independent_of_past: true,
        },
        |t, payoff| dglr(t, require_process(payoff)),
    )
}

fn check_alpha_half_open(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::BadAlpha {
            alpha,
            range: "(0,1]",
        })
    }
}

/// Tail conditional value at risk of the remaining dividends: the
/// worst-case conditional expectation over densities bounded by
/// `1/alpha`. Computed per atom by loading maximal mass on the worst
/// outcomes (the sorted-tail method).
pub fn cvar_rho(t: usize, v: &AdaptedProcess, alpha: f64) -> Result<RandomVariable> {
    check_alpha_half_open(alpha)?;
    let sum = v.tail_sum(t)?;
    let space = v.space().clone();
    let mut out = vec![ExtReal::ZERO; space.outcome_count()];
    for atom in space.atoms(t)? {
        let mass = space.atom_prob(atom);
        let mut pairs: Vec<(ExtReal, f64)> = atom
            .iter()
            .map(|&w| (sum.value(w), space.prob(w) / mass))
            .collect();
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        let mut remaining = alpha;
        let mut acc = ExtReal::ZERO;
        for (value, q) in pairs {
            if remaining <= 0.0 {
                break;
            }
            let take = q.min(remaining);
            acc = acc + value * ExtReal::finite(take / alpha);
            remaining -= take;
        }
        for &w in atom {
            out[w] = acc;
        }
    }
    RandomVariable::new(space, out)
}

pub fn cvar_measure(alpha: f64) -> Result<LmMeasure> {
    check_alpha_half_open(alpha)?;
    Ok(LmMeasure::from_fn(
        format!("cvar:{alpha}"),
        PayoffKind::Processes,
        MeasureFlags {
            monetary_utility: true,
            translation_invariant: true,
            independent_of_past: true,
        },
        move |t, payoff| cvar_rho(t, require_process(payoff), alpha),
    ))
}

fn check_alpha_open(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::BadAlpha {
            alpha,
            range: "(0,1)",
        })
    }
}

/// Dynamic RAROC at level `alpha`: expected remaining gain over the
/// capital `-rho` it puts at risk; `+inf` when the gain is positive but
/// nothing is at risk, 0 when the expected gain is nonpositive.
pub fn draroc(t: usize, v: &AdaptedProcess, alpha: f64) -> Result<RandomVariable> {
    check_alpha_open(alpha)?;
    let sum = v.tail_sum(t)?;
    let num = cond_ops::cond_expect(&sum, t)?;
    let rho = cvar_rho(t, v, alpha)?;
    num.zip_with(&rho, |n, r| {
        if n <= ExtReal::ZERO {
            ExtReal::ZERO
        } else if r >= ExtReal::ZERO {
            PosInf
        } else {
            match (n, r) {
                (PosInf, ExtReal::Finite(_)) => PosInf,
                (ExtReal::Finite(nf), ExtReal::Finite(rf)) => ExtReal::finite(nf / (-rf)),
                (ExtReal::Finite(_), NegInf) => ExtReal::ZERO,
                _ => unreachable!("n = +inf forces a finite rho"),
            }
        }
    })
}

pub fn draroc_measure(alpha: f64) -> Result<LmMeasure> {
    check_alpha_open(alpha)?;
    Ok(LmMeasure::from_fn(
        format!("draroc:{alpha}"),
        PayoffKind::Processes,
        MeasureFlags {
            monetary_utility: false,
            translation_invariant: true,
            independent_of_past: true,
        },
        move |t, payoff| draroc(t, require_process(payoff), alpha),
    ))
}

/// The RAROC risk family member `phi^x`: the worst-case expectation over
/// the mixture scenario set, which collapses to the closed form
/// `(1/(1+x)) E[sum | F_t] + (x/(1+x)) rho^alpha_t`.
pub fn raroc_risk_family(x: f64, t: usize, v: &AdaptedProcess, alpha: f64) -> Result<RandomVariable> {
    check_alpha_open(alpha)?;
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::BadX { x });
    }
    let sum = v.tail_sum(t)?;
    let num = cond_ops::cond_expect(&sum, t)?;
    let rho = cvar_rho(t, v, alpha)?;
    let w_mean = ExtReal::finite(1.0 / (1.0 + x));
    let w_tail = ExtReal::finite(x / (1.0 + x));
    num.zip_with(&rho, |n, r| n * w_mean + r * w_tail)
}

/// A parametric family `x -> phi^x` of process measures.
#[derive(Clone)]
pub struct RiskFamily {
    name: String,
    kind: PayoffKind,
    eval: Arc<dyn Fn(f64, usize, &Payoff) -> Result<RandomVariable> + Send + Sync>,
}

impl RiskFamily {
    pub fn from_fn(
        name: impl Into<String>,
        kind: PayoffKind,
        eval: impl Fn(f64, usize, &Payoff) -> Result<RandomVariable> + Send + Sync + 'static,
    ) -> Self {
        RiskFamily {
            name: name.into(),
            kind,
            eval: Arc::new(eval),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> PayoffKind {
        self.kind
    }

    pub fn evaluate(&self, x: f64, t: usize, payoff: &Payoff) -> Result<RandomVariable> {
        if !(x >= 0.0) || !x.is_finite() {
            return Err(Error::BadX { x });
        }
        (self.eval)(x, t, payoff)
    }

    /// The member at a fixed `x`, as a standalone measure.
    pub fn member(&self, x: f64) -> Result<LmMeasure> {
        if !(x >= 0.0) || !x.is_finite() {
            return Err(Error::BadX { x });
        }
        let family = self.clone();
        Ok(LmMeasure::from_fn(
            format!("{}[x={x}]", self.name),
            self.kind,
            MeasureFlags {
                monetary_utility: true,
                translation_invariant: true,
                independent_of_past: true,
            },
            move |t, payoff| family.evaluate(x, t, payoff),
        ))
    }
}

pub fn raroc_family(alpha: f64) -> Result<RiskFamily> {
    check_alpha_open(alpha)?;
    Ok(RiskFamily::from_fn(
        format!("raroc-family:{alpha}"),
        PayoffKind::Processes,
        move |x, t, payoff| {
            raroc_risk_family(x, t, payoff.as_process().ok_or(Error::KindMismatch {
                expected: "processes",
                got: payoff.kind().label(),
            })?, alpha)
        },
    ))
}

/// Post-composition with a strictly increasing map; stays local and
/// monotone, while cash additivity is generally lost.
pub fn monotone_transform_measure(g: &MonotoneTransform, measure: &LmMeasure) -> LmMeasure {
    let inner = measure.clone();
    let g = g.clone();
    let flags = MeasureFlags {
        monetary_utility: false,
        translation_invariant: measure.flags().translation_invariant,
        independent_of_past: measure.flags().independent_of_past,
    };
    LmMeasure::from_fn(
        format!("{}∘{}", g.name(), measure.name()),
        measure.kind(),
        flags,
        move |t, payoff| Ok(inner.evaluate(t, payoff)?.map(|v| g.apply(v))),
    )
}

/// Locality and monotonicity verdicts for a measure.
#[derive(Clone, Debug, serde::Serialize)]
pub struct AxiomReport {
    pub locality: PropertyCheck,
    pub monotonicity: PropertyCheck,
    pub seed: u64,
}

impl AxiomReport {
    pub fn all_hold(&self) -> bool {
        self.locality.holds && self.monotonicity.holds
    }
}

/// Verifies the two measure axioms on seeded random payoffs: locality by
/// enumerating atom-unions (capped at 10 atoms per time), monotonicity on
/// randomized dominated pairs.
pub fn check_lm_axioms(
    measure: &LmMeasure,
    space: &Arc<FilteredSpace>,
    samples: usize,
    seed: u64,
) -> Result<AxiomReport> {
    let eps = 1e-9;
    let mut sampler = Sampler::new(seed);
    let mut locality = PropertyCheck::passing();
    let mut monotonicity = PropertyCheck::passing();

    for _ in 0..samples {
        let t = sampler.rng().gen_range(0..=space.horizon());
        let payoff = sampler.payoff(space, measure.kind(), 0.0);
        let phi = measure.evaluate(t, &payoff)?;

        if locality.holds {
            let atom_count = space.atom_count(t)?;
            for ids in atom_union_ids(&mut sampler, atom_count) {
                let ind = RandomVariable::indicator_of_atom_union(space, t, &ids)?;
                let masked = payoff.mult_t(&ind, t)?;
                let phi_masked = measure.evaluate(t, &masked)?;
                let lhs = phi.mul(&ind)?;
                let rhs = phi_masked.mul(&ind)?;
                for w in 0..space.outcome_count() {
                    if !lhs.value(w).approx_eq(rhs.value(w), eps) {
                        locality.fail(format!(
                            "locality broken at t={t}, atoms {ids:?}, outcome {w}: \
                             1_A·phi(X)={} vs 1_A·phi(1_A·X)={}",
                            lhs.value(w),
                            rhs.value(w)
                        ));
                        break;
                    }
                }
                locality.checked += 1;
                if !locality.holds {
                    break;
                }
            }
        }

        if monotonicity.holds {
            let lower = sampler.dominated_payoff(&payoff);
            let phi_lower = measure.evaluate(t, &lower)?;
            monotonicity.checked += 1;
            for w in 0..space.outcome_count() {
                if !phi_lower.value(w).le_within(phi.value(w), eps) {
                    monotonicity.fail(format!(
                        "monotonicity broken at t={t}, outcome {w}: phi(Y)={} > phi(X)={} \
                         with Y <= X",
                        phi_lower.value(w),
                        phi.value(w)
                    ));
                    break;
                }
            }
        }
    }

    Ok(AxiomReport {
        locality,
        monotonicity,
        seed,
    })
}

/// All nonempty atom-unions when there are few atoms, otherwise a seeded
/// sample of unions (always including the full space).
pub(crate) fn atom_union_ids(sampler: &mut Sampler, atom_count: usize) -> Vec<Vec<usize>> {
    const EXHAUSTIVE_LIMIT: usize = 10;
    if atom_count <= EXHAUSTIVE_LIMIT {
        (1..(1usize << atom_count))
            .map(|mask| {
                (0..atom_count)
                    .filter(|&a| mask & (1 << a) != 0)
                    .collect::<Vec<_>>()
            })
            .collect()
    } else {
        let mut unions = vec![(0..atom_count).collect::<Vec<_>>()];
        for _ in 0..64 {
            let ids: Vec<usize> =
                (0..atom_count).filter(|_| sampler.rng().gen::<bool>()).collect();
            if !ids.is_empty() {
                unions.push(ids);
            }
        }
        unions
    }
}
