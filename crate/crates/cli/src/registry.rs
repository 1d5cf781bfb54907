//! Name resolution for measures, rules and benchmark generator sets.

use anyhow::{anyhow, bail};

use tclab_core::lm_measures::{
    self, LmMeasure, RiskFamily,
};
use tclab_core::update_rules::{self, Direction, UpdateRule};
use tclab_core::RandomVariable;

use crate::tree::Session;

/// `cexp | dglr | draroc:<alpha> | raroc-family:<alpha>:<x> | cvar:<alpha>`
pub fn measure(id: &str) -> anyhow::Result<LmMeasure> {
    let parts: Vec<&str> = id.split(':').collect();
    match parts.as_slice() {
        ["cexp"] => Ok(lm_measures::cond_expectation_measure()),
        ["dglr"] => Ok(lm_measures::dglr_measure()),
        ["draroc", alpha] => Ok(lm_measures::draroc_measure(parse_f64(alpha)?)?),
        ["cvar", alpha] => Ok(lm_measures::cvar_measure(parse_f64(alpha)?)?),
        ["raroc-family", alpha, x] => {
            let family = lm_measures::raroc_family(parse_f64(alpha)?)?;
            Ok(family.member(parse_f64(x)?)?)
        }
        _ => bail!(
            "unknown measure id {id:?} (expected cexp, dglr, draroc:<alpha>, \
             cvar:<alpha> or raroc-family:<alpha>:<x>)"
        ),
    }
}

/// `raroc:<alpha>` — the only built-in parametric family.
pub fn family(id: &str) -> anyhow::Result<RiskFamily> {
    let parts: Vec<&str> = id.split(':').collect();
    match parts.as_slice() {
        ["raroc", alpha] => Ok(lm_measures::raroc_family(parse_f64(alpha)?)?),
        _ => bail!("unknown family id {id:?} (expected raroc:<alpha>)"),
    }
}

/// `essinf | esssup | expectation | discounted:<alpha> |
/// weak-process:<dir> | semiweak:<dir> | benchmark:<set>:<measure>`
pub fn rule(id: &str, session: &Session) -> anyhow::Result<UpdateRule> {
    let parts: Vec<&str> = id.split(':').collect();
    match parts.as_slice() {
        ["essinf"] => Ok(update_rules::essinf_rule()),
        ["esssup"] => Ok(update_rules::esssup_rule()),
        ["expectation"] => Ok(update_rules::expectation_rule()),
        ["discounted", alpha] => Ok(update_rules::discounted_rule(parse_f64(alpha)?)?),
        ["weak-process", dir] => Ok(update_rules::process_weak_rule(direction(dir)?)),
        ["semiweak", dir] => Ok(update_rules::semiweak_rule(direction(dir)?)),
        ["benchmark", set, measure_id] => {
            let generators = generator_set(set, session)?;
            let phi = measure(measure_id)?;
            Ok(update_rules::benchmark_rule(&generators, &phi)?)
        }
        _ => bail!(
            "unknown rule id {id:?} (expected essinf, esssup, expectation, \
             discounted:<alpha>, weak-process:<dir>, semiweak:<dir> or \
             benchmark:<set>:<measure>)"
        ),
    }
}

pub fn direction(s: &str) -> anyhow::Result<Direction> {
    s.parse::<Direction>().map_err(|e| anyhow!(e))
}

/// `zero` is the constants-only set; otherwise a `+`-separated list of
/// named variables (the zero generator is always included).
pub fn generator_set(set: &str, session: &Session) -> anyhow::Result<Vec<RandomVariable>> {
    if set == "zero" {
        return Ok(vec![RandomVariable::zero(&session.space)]);
    }
    let mut generators = vec![RandomVariable::zero(&session.space)];
    for name in set.split('+') {
        generators.push(session.variable(name)?.clone());
    }
    Ok(generators)
}

fn parse_f64(s: &str) -> anyhow::Result<f64> {
    s.parse::<f64>()
        .map_err(|e| anyhow!("bad numeric parameter {s:?}: {e}"))
}
