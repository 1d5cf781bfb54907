//! Small hand-built spaces and measures used by tests, the CLI demo and
//! the benchmark suite.

use std::sync::Arc;

use crate::cond_ops;
use crate::extreal::ExtReal;
use crate::lm_measures::{LmMeasure, MeasureFlags};
use crate::prob_space::{AdaptedProcess, FilteredSpace, PayoffKind, RandomVariable};

/// Four equally likely outcomes, horizon 2, split 2+2 at time 1 and fully
/// at time 2. The canonical desk-scale fixture.
pub fn quad_space() -> Arc<FilteredSpace> {
    FilteredSpace::build(
        vec!["w1".into(), "w2".into(), "w3".into(), "w4".into()],
        vec![0.25, 0.25, 0.25, 0.25],
        vec![
            vec![vec![0, 1, 2, 3]],
            vec![vec![0, 1], vec![2, 3]],
            vec![vec![0], vec![1], vec![2], vec![3]],
        ],
    )
    .expect("fixture space is valid")
}

/// Three outcomes with deliberately uneven weights and a lone-outcome
/// branch. Tail-scenario evaluations misalign across the two times on
/// this tree: a small-probability loss diluted inside its branch
/// concentrates in the unconditional tail, which makes it the minimal
/// stage for worst-case-scenario consistency counterexamples.
pub fn uneven_tri_space() -> Arc<FilteredSpace> {
    FilteredSpace::build(
        vec!["w1".into(), "w2".into(), "w3".into()],
        vec![0.45, 0.5, 0.05],
        vec![
            vec![vec![0, 1, 2]],
            vec![vec![0], vec![1, 2]],
            vec![vec![0], vec![1], vec![2]],
        ],
    )
    .expect("fixture space is valid")
}

pub fn var(space: &Arc<FilteredSpace>, values: &[f64]) -> RandomVariable {
    RandomVariable::new(
        Arc::clone(space),
        values.iter().map(|&v| ExtReal::finite(v)).collect(),
    )
    .expect("fixture variable is valid")
}

/// Terminal-only process carrying the given payoff at the horizon.
pub fn terminal(space: &Arc<FilteredSpace>, values: &[f64]) -> AdaptedProcess {
    AdaptedProcess::terminal(space, var(space, values)).expect("fixture process is valid")
}

/// A local monotone measure that is deliberately not time consistent:
/// plain conditional expectation after time 0, but the pointwise minimum
/// at the root. Violates every consistency notion that compares time 0
/// with later times.
pub fn root_minimum_measure() -> LmMeasure {
    LmMeasure::from_fn(
        "root-minimum",
        PayoffKind::Variables,
        MeasureFlags::default(),
        |t, payoff| {
            let x = payoff.as_variable().expect("kind checked by caller");
            if t == 0 {
                Ok(RandomVariable::constant(x.space(), x.min_value()))
            } else {
                cond_ops::cond_expect(x, t)
            }
        },
    )
}

/// Conditional expectation with a constant penalty at the root; breaks
/// weak acceptance consistency with the tight threshold `m = 0`.
pub fn penalized_root_expectation() -> LmMeasure {
    LmMeasure::from_fn(
        "penalized-root-expectation",
        PayoffKind::Variables,
        MeasureFlags::default(),
        |t, payoff| {
            let x = payoff.as_variable().expect("kind checked by caller");
            let e = cond_ops::cond_expect(x, t)?;
            if t == 0 {
                Ok(e.add_scalar(ExtReal::finite(-1.0)))
            } else {
                Ok(e)
            }
        },
    )
}

/// Monotonicity violation on purpose: the negated conditional expectation.
pub fn antitone_measure() -> LmMeasure {
    LmMeasure::from_fn(
        "negated-expectation",
        PayoffKind::Variables,
        MeasureFlags::default(),
        |t, payoff| {
            let x = payoff.as_variable().expect("kind checked by caller");
            Ok(cond_ops::cond_expect(x, t)?.neg())
        },
    )
}
