//! Seeded random generation of spaces, variables, processes and
//! local-monotone measures for the property checkers.
//!
//! Values are drawn from a mixed distribution over finite uniforms on
//! [-10, 10], exact zero, and the two infinities; the infinity rate is a
//! knob because payoff domains are finite-valued while preference levels
//! are extended-real.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cond_ops;
use crate::extreal::{ExtReal, NegInf, PosInf};
use crate::lm_measures::{LmMeasure, MeasureFlags};
use crate::prob_space::{AdaptedProcess, FilteredSpace, Payoff, PayoffKind, RandomVariable};
use crate::update_rules::MonotoneTransform;

pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// One scalar from the mixed distribution.
    pub fn value(&mut self, infinity_rate: f64) -> ExtReal {
        let u: f64 = self.rng.gen();
        if u < infinity_rate / 2.0 {
            PosInf
        } else if u < infinity_rate {
            NegInf
        } else if u < infinity_rate + 0.1 {
            ExtReal::ZERO
        } else {
            ExtReal::finite(self.rng.gen_range(-10.0..10.0))
        }
    }

    fn finite_value(&mut self) -> f64 {
        if self.rng.gen::<f64>() < 0.1 {
            0.0
        } else {
            self.rng.gen_range(-10.0..10.0)
        }
    }

    /// A random filtered space: 2..=max_outcomes outcomes, horizon
    /// 1..=max_horizon, partitions refined step by step.
    pub fn space(&mut self, max_outcomes: usize, max_horizon: usize) -> Arc<FilteredSpace> {
        self.space_with(max_outcomes, max_horizon, false)
    }

    /// Like [`Sampler::space`] but forcing the final partition to be the
    /// discrete one, so every variable is terminal-measurable.
    pub fn space_discrete_terminal(
        &mut self,
        max_outcomes: usize,
        max_horizon: usize,
    ) -> Arc<FilteredSpace> {
        self.space_with(max_outcomes, max_horizon, true)
    }

    fn space_with(
        &mut self,
        max_outcomes: usize,
        max_horizon: usize,
        discrete_terminal: bool,
    ) -> Arc<FilteredSpace> {
        let n = self.rng.gen_range(2..=max_outcomes.max(2));
        let horizon = self.rng.gen_range(1..=max_horizon.max(1));
        let raw: Vec<f64> = (0..n).map(|_| self.rng.gen_range(0.1..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let probs: Vec<f64> = raw.iter().map(|p| p / total).collect();

        let mut partitions = vec![vec![(0..n).collect::<Vec<usize>>()]];
        for t in 1..=horizon {
            let prev = partitions.last().unwrap().clone();
            let mut next = Vec::new();
            for atom in prev {
                if atom.len() == 1 {
                    next.push(atom);
                    continue;
                }
                let force_discrete = discrete_terminal && t == horizon;
                let pieces = if force_discrete {
                    atom.len()
                } else {
                    self.rng.gen_range(1..=atom.len())
                };
                next.extend(split_atom(&mut self.rng, &atom, pieces));
            }
            partitions.push(next);
        }
        let outcomes = (0..n).map(|i| format!("w{}", i + 1)).collect();
        FilteredSpace::build(outcomes, probs, partitions).expect("sampled space is valid")
    }

    pub fn variable(&mut self, space: &Arc<FilteredSpace>, infinity_rate: f64) -> RandomVariable {
        let values = (0..space.outcome_count())
            .map(|_| self.value(infinity_rate))
            .collect();
        RandomVariable::new(Arc::clone(space), values).expect("length matches")
    }

    /// A random `F_t`-measurable variable (constant per atom).
    pub fn measurable(
        &mut self,
        space: &Arc<FilteredSpace>,
        t: usize,
        infinity_rate: f64,
    ) -> RandomVariable {
        let atoms = space.atoms(t).expect("t in range").to_vec();
        let mut values = vec![ExtReal::ZERO; space.outcome_count()];
        for atom in atoms {
            let v = self.value(infinity_rate);
            for w in atom {
                values[w] = v;
            }
        }
        RandomVariable::new(Arc::clone(space), values).expect("length matches")
    }

    /// A nonnegative `F_t`-measurable variable, used as slack.
    pub fn nonneg_measurable(
        &mut self,
        space: &Arc<FilteredSpace>,
        t: usize,
        infinity_rate: f64,
    ) -> RandomVariable {
        self.measurable(space, t, infinity_rate)
            .map(|v| v.pos_part())
    }

    /// A finite `F_t`-measurable scaling factor.
    pub fn finite_measurable(&mut self, space: &Arc<FilteredSpace>, t: usize) -> RandomVariable {
        let atoms = space.atoms(t).expect("t in range").to_vec();
        let mut values = vec![ExtReal::ZERO; space.outcome_count()];
        for atom in atoms {
            let v = ExtReal::finite(self.finite_value());
            for w in atom {
                values[w] = v;
            }
        }
        RandomVariable::new(Arc::clone(space), values).expect("length matches")
    }

    pub fn process(&mut self, space: &Arc<FilteredSpace>, infinity_rate: f64) -> AdaptedProcess {
        let rows = (0..=space.horizon())
            .map(|t| self.measurable(space, t, infinity_rate))
            .collect();
        AdaptedProcess::new(Arc::clone(space), rows).expect("rows are adapted")
    }

    pub fn payoff(
        &mut self,
        space: &Arc<FilteredSpace>,
        kind: PayoffKind,
        infinity_rate: f64,
    ) -> Payoff {
        match kind {
            PayoffKind::Variables => Payoff::Variable(self.variable(space, infinity_rate)),
            PayoffKind::Processes => Payoff::Process(self.process(space, infinity_rate)),
        }
    }

    /// A payoff dominated by `x` (same kind, same space).
    pub fn dominated_payoff(&mut self, x: &Payoff) -> Payoff {
        match x {
            Payoff::Variable(v) => {
                let slack = self.variable(v.space(), 0.0).pos_part();
                Payoff::Variable(v.sub(&slack).expect("same space"))
            }
            Payoff::Process(p) => {
                let space = p.space().clone();
                let rows = p
                    .rows()
                    .iter()
                    .enumerate()
                    .map(|(t, row)| {
                        let slack = self.nonneg_measurable(&space, t, 0.0);
                        row.sub(&slack).expect("same space")
                    })
                    .collect();
                Payoff::Process(AdaptedProcess::new(space, rows).expect("rows stay adapted"))
            }
        }
    }

    /// A random strictly monotone transform with a computable inverse.
    pub fn transform(&mut self) -> MonotoneTransform {
        match self.rng.gen_range(0..4u8) {
            0 => MonotoneTransform::identity(),
            1 => {
                let a = self.rng.gen_range(0.5..3.0);
                let b = self.rng.gen_range(-2.0..2.0);
                MonotoneTransform::affine(a, b).expect("positive slope")
            }
            2 => MonotoneTransform::cubic(),
            _ => MonotoneTransform::bounded_atan(),
        }
    }

    /// A random local monotone measure built from conditional building
    /// blocks: a convex mix of per-atom minimum, maximum and mean of the
    /// payoff (tail sum for processes), post-composed with a random
    /// strictly increasing map.
    pub fn local_monotone_measure(&mut self, kind: PayoffKind) -> LmMeasure {
        let w_min: f64 = self.rng.gen_range(0.0..1.0);
        let w_max: f64 = self.rng.gen_range(0.0..1.0 - w_min.min(0.99));
        let transform = self.transform();
        let label = format!(
            "random-mix(min={w_min:.3},max={w_max:.3},g={})",
            transform.name()
        );
        LmMeasure::from_fn(label, kind, MeasureFlags::default(), move |t, payoff| {
            let base = match payoff {
                Payoff::Variable(x) => x.clone(),
                Payoff::Process(v) => v.tail_sum(t)?,
            };
            let lo = cond_ops::cond_essinf(&base, t)?;
            let hi = cond_ops::cond_esssup(&base, t)?;
            let mid = cond_ops::cond_expect(&base, t)?;
            let w_mid = 1.0 - w_min - w_max;
            let mix = lo
                .map(|v| v * ExtReal::finite(w_min))
                .add(&hi.map(|v| v * ExtReal::finite(w_max)))?
                .add(&mid.map(|v| v * ExtReal::finite(w_mid)))?;
            Ok(mix.map(|v| transform.apply(v)))
        })
    }
}

fn split_atom(rng: &mut ChaCha8Rng, atom: &[usize], pieces: usize) -> Vec<Vec<usize>> {
    let mut members = atom.to_vec();
    // Fisher-Yates with the seeded stream keeps splits deterministic.
    for i in (1..members.len()).rev() {
        let j = rng.gen_range(0..=i);
        members.swap(i, j);
    }
    let mut parts: Vec<Vec<usize>> = vec![Vec::new(); pieces];
    for (i, w) in members.into_iter().enumerate() {
        parts[i % pieces].push(w);
    }
    parts.retain(|p| !p.is_empty());
    parts
}
