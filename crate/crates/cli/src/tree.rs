//! Scenario-tree ingestion: the single JSON document format of the CLI.
//!
//! ```json
//! {
//!   "outcomes": ["w1", "w2"],
//!   "probs": [0.5, 0.5],
//!   "partitions": [[[0, 1]], [[0], [1]]],
//!   "variables": {"m1": [1, "inf"]},
//!   "processes": {"V1": [[0, 0], [1, -1]]}
//! }
//! ```
//!
//! Outcome indices are 0-based; extended-real entries are numbers or the
//! strings `"inf"` / `"-inf"`. Every process row `t` must be measurable
//! with respect to the partition at time `t`.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use anyhow::{anyhow, Context};
use serde::Deserialize;

use tclab_core::{AdaptedProcess, ExtReal, FilteredSpace, RandomVariable};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeDocument {
    pub outcomes: Vec<String>,
    pub probs: Vec<f64>,
    pub partitions: Vec<Vec<Vec<usize>>>,
    #[serde(default)]
    pub variables: BTreeMap<String, Vec<ExtReal>>,
    #[serde(default)]
    pub processes: BTreeMap<String, Vec<Vec<ExtReal>>>,
}

pub struct Session {
    pub space: Arc<FilteredSpace>,
    pub variables: BTreeMap<String, RandomVariable>,
    pub processes: BTreeMap<String, AdaptedProcess>,
}

impl Session {
    pub fn variable(&self, name: &str) -> anyhow::Result<&RandomVariable> {
        self.variables
            .get(name)
            .ok_or_else(|| anyhow!("variable {name:?} not found in the tree document"))
    }

    pub fn process(&self, name: &str) -> anyhow::Result<&AdaptedProcess> {
        self.processes
            .get(name)
            .ok_or_else(|| anyhow!("process {name:?} not found in the tree document"))
    }
}

pub fn parse_tree(path: &Path) -> anyhow::Result<Session> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading tree document {}", path.display()))?;
    parse_tree_str(&text)
}

pub fn parse_tree_str(text: &str) -> anyhow::Result<Session> {
    let doc: TreeDocument =
        serde_json::from_str(text).map_err(|e| anyhow!("schema error: {e}"))?;
    build_session(doc)
}

pub fn build_session(doc: TreeDocument) -> anyhow::Result<Session> {
    let space = FilteredSpace::build(doc.outcomes, doc.probs, doc.partitions)
        .map_err(|e| anyhow!("schema error: {e}"))?;

    let mut variables = BTreeMap::new();
    for (name, values) in doc.variables {
        let rv = RandomVariable::new(Arc::clone(&space), values)
            .map_err(|e| anyhow!("schema error in variables.{name}: {e}"))?;
        variables.insert(name, rv);
    }

    let mut processes = BTreeMap::new();
    for (name, rows) in doc.processes {
        let process = AdaptedProcess::from_values(&space, rows).map_err(|e| {
            anyhow!("adaptedness error in processes.{name}: {e}")
        })?;
        processes.insert(name, process);
    }

    Ok(Session {
        space,
        variables,
        processes,
    })
}
