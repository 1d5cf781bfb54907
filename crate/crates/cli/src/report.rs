//! Machine-readable reports: every verdict embeds the seed, tolerances
//! and instance counts needed to replay it.

use serde::Serialize;

#[derive(Serialize)]
pub struct Report<T: Serialize> {
    pub command: String,
    pub seed: u64,
    pub epsilon: f64,
    pub tol: f64,
    pub samples: usize,
    pub result: T,
}

pub fn emit<T: Serialize>(report: &Report<T>, format: &str) -> anyhow::Result<()> {
    match format {
        "json" => println!("{}", serde_json::to_string(report)?),
        "text" => {
            println!("command: {}", report.command);
            println!(
                "seed: {}  epsilon: {}  tol: {}  samples: {}",
                report.seed, report.epsilon, report.tol, report.samples
            );
            println!("{}", serde_json::to_string_pretty(&report.result)?);
        }
        other => anyhow::bail!("unknown output format {other:?} (json|text)"),
    }
    Ok(())
}
