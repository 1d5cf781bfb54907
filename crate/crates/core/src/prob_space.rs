//! Finite filtered probability spaces, random variables and adapted
//! processes.
//!
//! A [`FilteredSpace`] is a finite outcome set with strictly positive
//! weights and a refining sequence of partitions `F_0 ⊆ … ⊆ F_T`, where
//! `F_0` is the trivial partition. Every probability-zero subtlety
//! disappears on such spaces: "almost surely" means "everywhere", so all
//! conditional operators downstream are exact pointwise computations.
//!
//! Atoms are kept in canonical order (sorted members, atoms ordered by
//! least member) so every report and iteration is deterministic.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::extreal::ExtReal;

/// Tolerance for the probability-sum check at construction.
pub const PROB_TOL: f64 = 1e-9;

#[derive(Debug, PartialEq)]
pub struct FilteredSpace {
    outcomes: Vec<String>,
    probs: Vec<f64>,
    /// `partitions[t]` lists the atoms of `F_t` as sorted outcome-index sets.
    partitions: Vec<Vec<Vec<usize>>>,
    /// `atom_index[t][omega]` is the id of the atom of `F_t` containing `omega`.
    atom_index: Vec<Vec<usize>>,
}

impl FilteredSpace {
    /// Validates and builds a filtered space. The partition list must have
    /// length `T+1 >= 2`, start with the trivial partition and refine at
    /// every step; weights must be strictly positive and sum to one.
    pub fn build(
        outcomes: Vec<String>,
        probs: Vec<f64>,
        partitions: Vec<Vec<Vec<usize>>>,
    ) -> Result<Arc<Self>> {
        let n = outcomes.len();
        if n == 0 {
            return Err(Error::BadProbabilities("no outcomes".into()));
        }
        if probs.len() != n {
            return Err(Error::BadProbabilities(format!(
                "{} weights for {} outcomes",
                probs.len(),
                n
            )));
        }
        for (i, &p) in probs.iter().enumerate() {
            if !(p > 0.0) || !p.is_finite() {
                return Err(Error::BadProbabilities(format!(
                    "weight {p} at index {i} is not strictly positive"
                )));
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::BadProbabilities(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        if partitions.len() < 2 {
            return Err(Error::BadPartition {
                time: 0,
                reason: "need at least two partitions (horizon T >= 1)".into(),
            });
        }

        let mut canonical = Vec::with_capacity(partitions.len());
        for (t, atoms) in partitions.into_iter().enumerate() {
            canonical.push(canonicalize_partition(t, atoms, n)?);
        }
        if canonical[0].len() != 1 {
            return Err(Error::NontrivialRoot);
        }

        let mut atom_index = Vec::with_capacity(canonical.len());
        for atoms in &canonical {
            let mut idx = vec![0usize; n];
            for (a, atom) in atoms.iter().enumerate() {
                for &w in atom {
                    idx[w] = a;
                }
            }
            atom_index.push(idx);
        }
        // Refinement: every atom at t+1 must sit inside a single atom at t.
        for t in 1..canonical.len() {
            for atom in &canonical[t] {
                let parent = atom_index[t - 1][atom[0]];
                if atom.iter().any(|&w| atom_index[t - 1][w] != parent) {
                    return Err(Error::NonRefiningFiltration { time: t });
                }
            }
        }

        Ok(Arc::new(FilteredSpace {
            outcomes,
            probs,
            partitions: canonical,
            atom_index,
        }))
    }

    pub fn horizon(&self) -> usize {
        self.partitions.len() - 1
    }

    pub fn outcome_count(&self) -> usize {
        self.outcomes.len()
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn prob(&self, omega: usize) -> f64 {
        self.probs[omega]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn check_time(&self, t: usize) -> Result<()> {
        if t > self.horizon() {
            Err(Error::TimeOutOfRange {
                time: t,
                horizon: self.horizon(),
            })
        } else {
            Ok(())
        }
    }

    /// Atoms of `F_t` in canonical order.
    pub fn atoms(&self, t: usize) -> Result<&[Vec<usize>]> {
        self.check_time(t)?;
        Ok(&self.partitions[t])
    }

    pub fn atom_count(&self, t: usize) -> Result<usize> {
        Ok(self.atoms(t)?.len())
    }

    /// Id of the atom of `F_t` containing `omega`.
    pub fn atom_of(&self, t: usize, omega: usize) -> Result<usize> {
        self.check_time(t)?;
        Ok(self.atom_index[t][omega])
    }

    pub fn atom_prob(&self, atom: &[usize]) -> f64 {
        atom.iter().map(|&w| self.probs[w]).sum()
    }

    pub fn times(&self) -> impl Iterator<Item = usize> {
        0..=self.horizon()
    }
}

fn canonicalize_partition(
    t: usize,
    atoms: Vec<Vec<usize>>,
    n: usize,
) -> Result<Vec<Vec<usize>>> {
    let mut seen = vec![false; n];
    let mut atoms: Vec<Vec<usize>> = atoms
        .into_iter()
        .map(|mut atom| {
            atom.sort_unstable();
            atom
        })
        .collect();
    for atom in &atoms {
        if atom.is_empty() {
            return Err(Error::BadPartition {
                time: t,
                reason: "empty atom".into(),
            });
        }
        for &w in atom {
            if w >= n {
                return Err(Error::BadPartition {
                    time: t,
                    reason: format!("outcome index {w} out of range (n={n})"),
                });
            }
            if seen[w] {
                return Err(Error::BadPartition {
                    time: t,
                    reason: format!("outcome {w} appears in two atoms"),
                });
            }
            seen[w] = true;
        }
    }
    if let Some(missing) = seen.iter().position(|&s| !s) {
        return Err(Error::BadPartition {
            time: t,
            reason: format!("outcome {missing} missing from partition"),
        });
    }
    atoms.sort_by_key(|atom| atom[0]);
    Ok(atoms)
}

/// An extended-real-valued map on outcomes, tied to its space.
#[derive(Clone, Debug)]
pub struct RandomVariable {
    space: Arc<FilteredSpace>,
    values: Vec<ExtReal>,
}

impl PartialEq for RandomVariable {
    fn eq(&self, other: &Self) -> bool {
        self.same_space(other) && self.values == other.values
    }
}

impl RandomVariable {
    pub fn new(space: Arc<FilteredSpace>, values: Vec<ExtReal>) -> Result<Self> {
        if values.len() != space.outcome_count() {
            return Err(Error::ValueCountMismatch {
                name: "random variable".into(),
                expected: space.outcome_count(),
                got: values.len(),
            });
        }
        Ok(RandomVariable { space, values })
    }

    pub fn constant(space: &Arc<FilteredSpace>, v: ExtReal) -> Self {
        RandomVariable {
            space: Arc::clone(space),
            values: vec![v; space.outcome_count()],
        }
    }

    pub fn zero(space: &Arc<FilteredSpace>) -> Self {
        Self::constant(space, ExtReal::ZERO)
    }

    /// Indicator of an outcome predicate (values in {0, 1}).
    pub fn indicator(space: &Arc<FilteredSpace>, member: impl Fn(usize) -> bool) -> Self {
        let values = (0..space.outcome_count())
            .map(|w| if member(w) { ExtReal::ONE } else { ExtReal::ZERO })
            .collect();
        RandomVariable {
            space: Arc::clone(space),
            values,
        }
    }

    /// Indicator of a union of `F_t` atoms given by atom ids.
    pub fn indicator_of_atom_union(
        space: &Arc<FilteredSpace>,
        t: usize,
        atom_ids: &[usize],
    ) -> Result<Self> {
        space.check_time(t)?;
        let ids: Vec<usize> = atom_ids.to_vec();
        Ok(Self::indicator(space, |w| {
            ids.contains(&space.atom_index[t][w])
        }))
    }

    pub fn space(&self) -> &Arc<FilteredSpace> {
        &self.space
    }

    pub fn values(&self) -> &[ExtReal] {
        &self.values
    }

    pub fn value(&self, omega: usize) -> ExtReal {
        self.values[omega]
    }

    pub fn same_space(&self, other: &RandomVariable) -> bool {
        Arc::ptr_eq(&self.space, &other.space) || self.space == other.space
    }

    fn check_same_space(&self, other: &RandomVariable) -> Result<()> {
        if self.same_space(other) {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }

    /// True iff the variable is constant on every atom of `F_t`.
    pub fn is_measurable(&self, t: usize) -> Result<bool> {
        for atom in self.space.atoms(t)? {
            let v0 = self.values[atom[0]];
            if atom.iter().any(|&w| self.values[w] != v0) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn require_measurable(&self, t: usize, name: &str) -> Result<()> {
        if self.is_measurable(t)? {
            Ok(())
        } else {
            Err(Error::NotMeasurable {
                time: t,
                name: name.into(),
            })
        }
    }

    pub fn map(&self, f: impl Fn(ExtReal) -> ExtReal) -> Self {
        RandomVariable {
            space: Arc::clone(&self.space),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(
        &self,
        other: &RandomVariable,
        f: impl Fn(ExtReal, ExtReal) -> ExtReal,
    ) -> Result<Self> {
        self.check_same_space(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(RandomVariable {
            space: Arc::clone(&self.space),
            values,
        })
    }

    pub fn add(&self, other: &RandomVariable) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &RandomVariable) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &RandomVariable) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn neg(&self) -> Self {
        self.map(|v| -v)
    }

    pub fn add_scalar(&self, c: ExtReal) -> Self {
        self.map(|v| v + c)
    }

    pub fn pos_part(&self) -> Self {
        self.map(|v| v.pos_part())
    }

    pub fn neg_part(&self) -> Self {
        self.map(|v| v.neg_part())
    }

    /// Pointwise domination `self <= other` (exact).
    pub fn le(&self, other: &RandomVariable) -> Result<bool> {
        self.check_same_space(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .all(|(&a, &b)| a <= b))
    }

    pub fn min_value(&self) -> ExtReal {
        self.values.iter().copied().min().expect("nonempty space")
    }

    pub fn max_value(&self) -> ExtReal {
        self.values.iter().copied().max().expect("nonempty space")
    }
}

impl fmt::Display for RandomVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "]")
    }
}

/// A time-indexed family `V_0..V_T` with `V_t` measurable w.r.t. `F_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdaptedProcess {
    space: Arc<FilteredSpace>,
    rows: Vec<RandomVariable>,
}

impl AdaptedProcess {
    pub fn new(space: Arc<FilteredSpace>, rows: Vec<RandomVariable>) -> Result<Self> {
        let expected = space.horizon() + 1;
        if rows.len() != expected {
            return Err(Error::ValueCountMismatch {
                name: "process rows".into(),
                expected,
                got: rows.len(),
            });
        }
        for (t, row) in rows.iter().enumerate() {
            if !(Arc::ptr_eq(&row.space, &space) || *row.space == *space) {
                return Err(Error::SpaceMismatch);
            }
            row.require_measurable(t, &format!("process row {t}"))?;
        }
        Ok(AdaptedProcess { space, rows })
    }

    pub fn from_values(space: &Arc<FilteredSpace>, rows: Vec<Vec<ExtReal>>) -> Result<Self> {
        let rvs = rows
            .into_iter()
            .map(|values| RandomVariable::new(Arc::clone(space), values))
            .collect::<Result<Vec<_>>>()?;
        Self::new(Arc::clone(space), rvs)
    }

    pub fn zero(space: &Arc<FilteredSpace>) -> Self {
        let rows = (0..=space.horizon())
            .map(|_| RandomVariable::zero(space))
            .collect();
        AdaptedProcess {
            space: Arc::clone(space),
            rows,
        }
    }

    /// Terminal-only process `(0, …, 0, x)`.
    pub fn terminal(space: &Arc<FilteredSpace>, x: RandomVariable) -> Result<Self> {
        let mut rows: Vec<RandomVariable> = (0..space.horizon())
            .map(|_| RandomVariable::zero(space))
            .collect();
        rows.push(x);
        Self::new(Arc::clone(space), rows)
    }

    pub fn space(&self) -> &Arc<FilteredSpace> {
        &self.space
    }

    pub fn rows(&self) -> &[RandomVariable] {
        &self.rows
    }

    pub fn row(&self, t: usize) -> &RandomVariable {
        &self.rows[t]
    }

    /// `Σ_{i=t}^T V_i`, the payoff still to come from time `t` on.
    pub fn tail_sum(&self, t: usize) -> Result<RandomVariable> {
        self.space.check_time(t)?;
        let mut acc = RandomVariable::zero(&self.space);
        for row in &self.rows[t..] {
            acc = acc.add(row)?;
        }
        Ok(acc)
    }

    /// The `·_t` product: rows before `t` unchanged, rows from `t` on
    /// multiplied pointwise by the `F_t`-measurable factor `m`. Note
    /// `0 ·_t V` keeps the strict past, so it is not the zero process.
    pub fn mult_t(&self, m: &RandomVariable, t: usize) -> Result<Self> {
        self.space.check_time(t)?;
        m.require_measurable(t, "multiplier")?;
        let mut rows = Vec::with_capacity(self.rows.len());
        for (u, row) in self.rows.iter().enumerate() {
            if u < t {
                rows.push(row.clone());
            } else {
                rows.push(row.mul(m)?);
            }
        }
        Ok(AdaptedProcess {
            space: Arc::clone(&self.space),
            rows,
        })
    }

    /// Adds `delta` (measurable at `t`) to row `t` only.
    pub fn add_at(&self, t: usize, delta: &RandomVariable) -> Result<Self> {
        self.space.check_time(t)?;
        delta.require_measurable(t, "row delta")?;
        let mut rows = self.rows.clone();
        rows[t] = rows[t].add(delta)?;
        Ok(AdaptedProcess {
            space: Arc::clone(&self.space),
            rows,
        })
    }

    pub fn add(&self, other: &AdaptedProcess) -> Result<Self> {
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| a.add(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(AdaptedProcess {
            space: Arc::clone(&self.space),
            rows,
        })
    }

    /// Pointwise domination on every row.
    pub fn le(&self, other: &AdaptedProcess) -> Result<bool> {
        for (a, b) in self.rows.iter().zip(&other.rows) {
            if !a.le(b)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum PayoffKind {
    Variables,
    Processes,
}

impl PayoffKind {
    pub fn label(self) -> &'static str {
        match self {
            PayoffKind::Variables => "variables",
            PayoffKind::Processes => "processes",
        }
    }
}

impl fmt::Display for PayoffKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// An element of the measured domain: a terminal cash-flow or a dividend
/// process.
#[derive(Clone, Debug, PartialEq)]
pub enum Payoff {
    Variable(RandomVariable),
    Process(AdaptedProcess),
}

impl Payoff {
    pub fn kind(&self) -> PayoffKind {
        match self {
            Payoff::Variable(_) => PayoffKind::Variables,
            Payoff::Process(_) => PayoffKind::Processes,
        }
    }

    pub fn space(&self) -> &Arc<FilteredSpace> {
        match self {
            Payoff::Variable(x) => x.space(),
            Payoff::Process(v) => v.space(),
        }
    }

    pub fn zero_like(&self) -> Payoff {
        match self {
            Payoff::Variable(x) => Payoff::Variable(RandomVariable::zero(x.space())),
            Payoff::Process(v) => Payoff::Process(AdaptedProcess::zero(v.space())),
        }
    }

    /// The `·_t` action: plain pointwise product for variables, row-wise
    /// from `t` for processes.
    pub fn mult_t(&self, m: &RandomVariable, t: usize) -> Result<Payoff> {
        match self {
            Payoff::Variable(x) => {
                m.require_measurable(t, "multiplier")?;
                Ok(Payoff::Variable(x.mul(m)?))
            }
            Payoff::Process(v) => Ok(Payoff::Process(v.mult_t(m, t)?)),
        }
    }

    pub fn as_variable(&self) -> Option<&RandomVariable> {
        match self {
            Payoff::Variable(x) => Some(x),
            Payoff::Process(_) => None,
        }
    }

    pub fn as_process(&self) -> Option<&AdaptedProcess> {
        match self {
            Payoff::Process(v) => Some(v),
            Payoff::Variable(_) => None,
        }
    }

    /// Pointwise domination of matching kinds.
    pub fn le(&self, other: &Payoff) -> Result<bool> {
        match (self, other) {
            (Payoff::Variable(a), Payoff::Variable(b)) => a.le(b),
            (Payoff::Process(a), Payoff::Process(b)) => a.le(b),
            _ => Err(Error::KindMismatch {
                expected: self.kind().label(),
                got: other.kind().label(),
            }),
        }
    }
}
