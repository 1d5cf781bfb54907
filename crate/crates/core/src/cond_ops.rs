//! Generalized conditional operators on extended-real variables.
//!
//! Conditional expectation splits the argument into positive and negative
//! parts, averages each over the conditioning atom, and recombines with
//! the `inf - inf = -inf` convention, so it is well defined (though no
//! longer linear) for every extended-real variable. The conditional
//! essential infimum / supremum reduce to per-atom extrema on finite
//! spaces, which is exactly what the truncation-limit definition yields.
//!
//! `cond_upper_quantile` and `worst_case_density` provide the
//! tail-selection machinery behind worst-case scenario evaluations: the
//! density `Z` concentrates all conditional mass on the outcomes at or
//! below the upper `alpha`-quantile.

use crate::error::{Error, Result};
use crate::extreal::{ExtReal, NegInf, PosInf};
use crate::prob_space::RandomVariable;

/// Generalized conditional expectation `E[X | F_t]`.
pub fn cond_expect(x: &RandomVariable, t: usize) -> Result<RandomVariable> {
    let space = x.space().clone();
    let mut out = vec![ExtReal::ZERO; space.outcome_count()];
    for atom in space.atoms(t)? {
        let mass = space.atom_prob(atom);
        let mut pos_sum = 0.0;
        let mut pos_inf = false;
        let mut neg_sum = 0.0;
        let mut neg_inf = false;
        for &w in atom {
            let p = space.prob(w);
            match x.value(w) {
                PosInf => pos_inf = true,
                NegInf => neg_inf = true,
                ExtReal::Finite(v) => {
                    if v >= 0.0 {
                        pos_sum += p * v;
                    } else {
                        neg_sum += p * (-v);
                    }
                }
            }
        }
        let e_pos = if pos_inf {
            PosInf
        } else {
            ExtReal::finite(pos_sum / mass)
        };
        let e_neg = if neg_inf {
            PosInf
        } else {
            ExtReal::finite(neg_sum / mass)
        };
        let value = e_pos - e_neg;
        for &w in atom {
            out[w] = value;
        }
    }
    RandomVariable::new(space, out)
}

/// Conditional essential infimum `Essinf_t X`: the per-atom minimum.
pub fn cond_essinf(x: &RandomVariable, t: usize) -> Result<RandomVariable> {
    let space = x.space().clone();
    let mut out = vec![ExtReal::ZERO; space.outcome_count()];
    for atom in space.atoms(t)? {
        let value = atom
            .iter()
            .map(|&w| x.value(w))
            .min()
            .expect("atoms are nonempty");
        for &w in atom {
            out[w] = value;
        }
    }
    RandomVariable::new(space, out)
}

/// Conditional essential supremum, defined as `-Essinf_t(-X)`.
pub fn cond_esssup(x: &RandomVariable, t: usize) -> Result<RandomVariable> {
    Ok(cond_essinf(&x.neg(), t)?.neg())
}

/// Pointwise infimum of a nonempty family on a common space. The result
/// is `F_t`-measurable whenever every member is.
pub fn family_essinf(xs: &[RandomVariable], t: usize) -> Result<RandomVariable> {
    let first = xs.first().ok_or(Error::EmptyFamily)?;
    first.space().check_time(t)?;
    let mut acc = first.clone();
    for x in &xs[1..] {
        acc = acc.zip_with(x, ExtReal::min)?;
    }
    Ok(acc)
}

/// Pointwise supremum of a nonempty family.
pub fn family_esssup(xs: &[RandomVariable], t: usize) -> Result<RandomVariable> {
    let first = xs.first().ok_or(Error::EmptyFamily)?;
    first.space().check_time(t)?;
    let mut acc = first.clone();
    for x in &xs[1..] {
        acc = acc.zip_with(x, ExtReal::max)?;
    }
    Ok(acc)
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

/// Conditional upper `alpha`-quantile of `m`: per atom, the supremum of
/// finite thresholds `y` with `P(m <= y | atom) <= alpha`.
///
/// The feasible thresholds form a down-set whose supremum sits on the
/// sorted support of `m`: it is the first support point where the
/// conditional CDF exceeds `alpha` (`+inf` if it never does, `-inf` if
/// the mass at `-inf` alone already exceeds `alpha`).
pub fn cond_upper_quantile(m: &RandomVariable, t: usize, alpha: f64) -> Result<RandomVariable> {
    check_alpha_open(alpha)?;
    let space = m.space().clone();
    let mut out = vec![ExtReal::ZERO; space.outcome_count()];
    for atom in space.atoms(t)? {
        let mass = space.atom_prob(atom);
        let mut pairs: Vec<(ExtReal, f64)> = atom
            .iter()
            .map(|&w| (m.value(w), space.prob(w) / mass))
            .collect();
        pairs.sort_by(|a, b| a.0.cmp(&b.0));

        let mut cum = 0.0;
        let mut q = None;
        for (value, p) in pairs {
            match value {
                NegInf => {
                    cum += p;
                    if cum > alpha {
                        q = Some(NegInf);
                        break;
                    }
                }
                ExtReal::Finite(_) => {
                    cum += p;
                    if cum > alpha {
                        q = Some(value);
                        break;
                    }
                }
                PosInf => break,
            }
        }
        let value = q.unwrap_or(PosInf);
        for &w in atom {
            out[w] = value;
        }
    }
    RandomVariable::new(space, out)
}

/// The tail-selecting density `Z_alpha = 1{m <= q} / E[1{m <= q} | F_t]`,
/// a member of the unit-conditional-mean scenario family. Atoms whose
/// indicator mass vanishes take `Z = 0` (the `0 * inf = 0` path).
pub fn worst_case_density(m: &RandomVariable, t: usize, alpha: f64) -> Result<RandomVariable> {
    check_alpha_open(alpha)?;
    let q = cond_upper_quantile(m, t, alpha)?;
    let space = m.space().clone();
    let mut out = vec![ExtReal::ZERO; space.outcome_count()];
    for atom in space.atoms(t)? {
        let mass = space.atom_prob(atom);
        let selected: f64 = atom
            .iter()
            .filter(|&&w| m.value(w) <= q.value(w))
            .map(|&w| space.prob(w))
            .sum();
        let cond_mass = selected / mass;
        for &w in atom {
            out[w] = if cond_mass > 0.0 && m.value(w) <= q.value(w) {
                ExtReal::finite(1.0 / cond_mass)
            } else {
                ExtReal::ZERO
            };
        }
    }
    RandomVariable::new(space, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{quad_space, var};
    use crate::prob_space::RandomVariable;
    use std::sync::Arc;

    // Truncation-limit form of the conditional expectation, evaluated at
    // the finite truncation level that already saturates all finite
    // values. Independent of the production path above.
    fn cond_expect_truncation_oracle(x: &RandomVariable, t: usize) -> RandomVariable {
        let space = x.space().clone();
        let n_level = x
            .values()
            .iter()
            .filter_map(|v| v.as_f64())
            .fold(1.0f64, |acc, v| acc.max(v.abs()))
            + 1.0;
        let mut out = vec![ExtReal::ZERO; space.outcome_count()];
        for atom in space.atoms(t).unwrap() {
            let mass = space.atom_prob(atom);
            let clipped_mean = |part: &dyn Fn(ExtReal) -> ExtReal, level: f64| -> f64 {
                atom.iter()
                    .map(|&w| {
                        let v = part(x.value(w)).min(ExtReal::finite(level));
                        space.prob(w) * v.as_f64().expect("clipped value is finite")
                    })
                    .sum::<f64>()
                    / mass
            };
            // limit over n of the clipped means: it stabilizes once n
            // passes every finite value, except on infinite mass.
            let pos_at = |lvl: f64| clipped_mean(&|v: ExtReal| v.pos_part(), lvl);
            let neg_at = |lvl: f64| clipped_mean(&|v: ExtReal| v.neg_part(), lvl);
            let lim = |f: &dyn Fn(f64) -> f64| -> ExtReal {
                let a = f(n_level);
                let b = f(n_level * 2.0);
                if (a - b).abs() > 1e-12 {
                    // still growing: the limit is +inf
                    ExtReal::PosInf
                } else {
                    ExtReal::finite(a)
                }
            };
            let value = lim(&pos_at) - lim(&neg_at);
            for &w in atom {
                out[w] = value;
            }
        }
        RandomVariable::new(space, out).unwrap()
    }

    fn naive_atom_min(x: &RandomVariable, t: usize) -> RandomVariable {
        let space = x.space().clone();
        let mut out = vec![ExtReal::ZERO; space.outcome_count()];
        for atom in space.atoms(t).unwrap() {
            let mut m = ExtReal::PosInf;
            for &w in atom {
                if x.value(w) < m {
                    m = x.value(w);
                }
            }
            for &w in atom {
                out[w] = m;
            }
        }
        RandomVariable::new(space, out).unwrap()
    }

    #[test]
    fn expectation_atom_averages() {
        let space = quad_space();
        let x = var(&space, &[4.0, 2.0, -2.0, 6.0]);
        let e = cond_expect(&x, 1).unwrap();
        assert_eq!(e, var(&space, &[3.0, 3.0, 2.0, 2.0]));
        assert_eq!(e, cond_expect_truncation_oracle(&x, 1));
    }

    #[test]
    fn expectation_resolves_opposite_infinities_downward() {
        let space = quad_space();
        let x = RandomVariable::new(
            Arc::clone(&space),
            vec![PosInf, ExtReal::finite(2.0), NegInf, PosInf],
        )
        .unwrap();
        let e = cond_expect(&x, 1).unwrap();
        assert_eq!(e.values(), &[PosInf, PosInf, NegInf, NegInf]);
        assert_eq!(e, cond_expect_truncation_oracle(&x, 1));
    }

    #[test]
    fn expectation_of_negation_can_differ_strictly() {
        let space = quad_space();
        let x = RandomVariable::new(
            Arc::clone(&space),
            vec![PosInf, ExtReal::finite(2.0), NegInf, PosInf],
        )
        .unwrap();
        let lhs = cond_expect(&x.neg(), 1).unwrap();
        let rhs = cond_expect(&x, 1).unwrap().neg();
        // strict on the atom {w3, w4}
        assert_eq!(lhs.value(2), NegInf);
        assert_eq!(rhs.value(2), PosInf);
        assert!(lhs.le(&rhs).unwrap());
    }

    #[test]
    fn essinf_examples() {
        let space = quad_space();
        let x = var(&space, &[1.0, 3.0, 2.0, 5.0]);
        assert_eq!(cond_essinf(&x, 1).unwrap(), var(&space, &[1.0, 1.0, 2.0, 2.0]));
        assert_eq!(cond_essinf(&x, 1).unwrap(), naive_atom_min(&x, 1));

        let y = RandomVariable::new(
            Arc::clone(&space),
            vec![
                NegInf,
                ExtReal::finite(3.0),
                ExtReal::finite(2.0),
                ExtReal::finite(5.0),
            ],
        )
        .unwrap();
        assert_eq!(
            cond_essinf(&y, 0).unwrap(),
            RandomVariable::constant(&space, NegInf)
        );

        // already measurable at t: identity
        let z = var(&space, &[2.0, 2.0, 7.0, 7.0]);
        assert_eq!(cond_essinf(&z, 1).unwrap(), z);
    }

    #[test]
    fn esssup_is_mirrored_essinf() {
        let space = quad_space();
        let x = var(&space, &[1.0, 3.0, 2.0, 5.0]);
        assert_eq!(cond_esssup(&x, 1).unwrap(), var(&space, &[3.0, 3.0, 5.0, 5.0]));
    }

    #[test]
    fn family_essinf_examples() {
        let space = quad_space();
        let a = var(&space, &[1.0, 2.0, 3.0, 4.0]);
        let b = var(&space, &[2.0, 1.0, 4.0, 3.0]);
        assert_eq!(
            family_essinf(&[a.clone(), b], 2).unwrap(),
            var(&space, &[1.0, 1.0, 3.0, 3.0])
        );
        assert_eq!(family_essinf(&[a.clone()], 0).unwrap(), a);

        let c = RandomVariable::new(
            Arc::clone(&space),
            vec![PosInf, ExtReal::ZERO, ExtReal::ZERO, ExtReal::ZERO],
        )
        .unwrap();
        let d = RandomVariable::new(
            Arc::clone(&space),
            vec![ExtReal::ZERO, PosInf, ExtReal::ZERO, ExtReal::ZERO],
        )
        .unwrap();
        assert_eq!(
            family_essinf(&[c, d], 2).unwrap(),
            RandomVariable::zero(&space)
        );
        assert!(matches!(family_essinf(&[], 0), Err(Error::EmptyFamily)));
    }

    // Brute-force oracle: scan candidate thresholds drawn from the
    // support (and probes between support points) and keep the largest
    // feasible region's supremum.
    fn quantile_scan_oracle(m: &RandomVariable, t: usize, alpha: f64) -> RandomVariable {
        let space = m.space().clone();
        let mut out = vec![ExtReal::ZERO; space.outcome_count()];
        for atom in space.atoms(t).unwrap() {
            let mass = space.atom_prob(atom);
            let cdf = |y: f64| -> f64 {
                atom.iter()
                    .filter(|&&w| m.value(w) <= ExtReal::finite(y))
                    .map(|&w| space.prob(w))
                    .sum::<f64>()
                    / mass
            };
            let mut support: Vec<f64> = atom
                .iter()
                .filter_map(|&w| m.value(w).as_f64())
                .collect();
            support.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let lo_probe = support.first().copied().unwrap_or(0.0) - 1.0;
            let mut q = if cdf(lo_probe) <= alpha {
                Some(ExtReal::PosInf) // provisional: every threshold so far feasible
            } else {
                None
            };
            if q.is_some() {
                for &v in &support {
                    if cdf(v) > alpha {
                        q = Some(ExtReal::finite(v));
                        break;
                    }
                }
            }
            let value = q.unwrap_or(NegInf);
            for &w in atom {
                out[w] = value;
            }
        }
        RandomVariable::new(space, out).unwrap()
    }

    #[test]
    fn upper_quantile_examples() {
        let space = quad_space();
        let m = var(&space, &[1.0, 2.0, 3.0, 4.0]);

        let q0 = cond_upper_quantile(&m, 0, 0.5).unwrap();
        assert_eq!(q0, var(&space, &[3.0; 4]));
        assert_eq!(q0, quantile_scan_oracle(&m, 0, 0.5));

        let q1 = cond_upper_quantile(&m, 1, 0.5).unwrap();
        assert_eq!(q1, var(&space, &[2.0, 2.0, 4.0, 4.0]));
        assert_eq!(q1, quantile_scan_oracle(&m, 1, 0.5));

        let c = var(&space, &[7.0; 4]);
        assert_eq!(cond_upper_quantile(&c, 0, 0.25).unwrap(), c);

        assert!(matches!(
            cond_upper_quantile(&m, 0, 1.0),
            Err(Error::BadAlpha { .. })
        ));
    }

    #[test]
    fn upper_quantile_monotone_in_alpha_and_m() {
        let space = quad_space();
        let m = var(&space, &[1.0, 2.0, 3.0, 4.0]);
        let m_up = var(&space, &[1.5, 2.0, 3.5, 4.0]);
        let mut prev = RandomVariable::constant(&space, NegInf);
        for k in 1..20 {
            let alpha = f64::from(k) / 20.0;
            let q = cond_upper_quantile(&m, 1, alpha).unwrap();
            assert!(prev.le(&q).unwrap(), "alpha={alpha}");
            prev = q.clone();
            assert!(q.le(&cond_upper_quantile(&m_up, 1, alpha).unwrap()).unwrap());
        }
    }

    #[test]
    fn upper_quantile_infinite_edges() {
        let space = quad_space();
        let m = RandomVariable::new(
            Arc::clone(&space),
            vec![NegInf, NegInf, PosInf, PosInf],
        )
        .unwrap();
        // atom {w1,w2}: mass at -inf is 1 > alpha -> no feasible threshold
        // atom {w3,w4}: all thresholds feasible
        let q = cond_upper_quantile(&m, 1, 0.5).unwrap();
        assert_eq!(q.values(), &[NegInf, NegInf, PosInf, PosInf]);
        assert_eq!(q, quantile_scan_oracle(&m, 1, 0.5));
    }

    #[test]
    fn worst_case_density_examples() {
        let space = quad_space();
        let m = var(&space, &[1.0, 2.0, 3.0, 4.0]);
        let z = worst_case_density(&m, 0, 0.5).unwrap();
        let expect = 4.0 / 3.0;
        for w in 0..3 {
            assert!(z.value(w).approx_eq(ExtReal::finite(expect), 1e-12));
        }
        assert_eq!(z.value(3), ExtReal::ZERO);

        // membership in the unit-conditional-mean family
        let e = cond_expect(&z, 0).unwrap();
        assert!(e.value(0).approx_eq(ExtReal::ONE, 1e-12));

        let c = var(&space, &[5.0; 4]);
        assert_eq!(
            worst_case_density(&c, 0, 0.5).unwrap(),
            RandomVariable::constant(&space, ExtReal::ONE)
        );
    }

    #[test]
    fn worst_case_density_tail_probability_bound() {
        let space = quad_space();
        let m = var(&space, &[1.0, 2.0, 3.0, 4.0]);
        let alpha = 0.5;
        let z = worst_case_density(&m, 0, alpha).unwrap();
        let zm = z.mul(&m).unwrap();
        let e = cond_expect(&zm, 0).unwrap();
        assert!(e.value(0).approx_eq(ExtReal::finite(2.0), 1e-12));
        let tail_prob: f64 = (0..4)
            .filter(|&w| m.value(w) >= e.value(w))
            .map(|w| space.prob(w))
            .sum();
        assert!(tail_prob >= 1.0 - alpha - 1e-12);
        assert!((tail_prob - 0.75).abs() < 1e-12);
    }
}
