use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bn::{parse_network, BnError, Network};

/// Row drift above this is reported.
const DRIFT_REPORT: f64 = 1e-9;
/// Parent configurations less probable than this are reported as unreachable.
const UNREACHABLE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Finding {
    RowSumDrift { variable: String, drift: f64 },
    ClampedEntries { variable: String, count: usize },
    UnreachableConfiguration { variable: String, configuration: String, probability: f64 },
    Disconnected { variable: String },
    Cycle { variable: String },
    Invalid { message: String },
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::RowSumDrift { variable, drift } => write!(f, "{variable}: row sum drift {drift:.3e}"),
            Finding::ClampedEntries { variable, count } => write!(f, "{variable}: {count} entries clamped"),
            Finding::UnreachableConfiguration { variable, configuration, probability } => {
                write!(f, "{variable}: parent configuration {configuration} has probability {probability:.3e}")
            }
            Finding::Disconnected { variable } => write!(f, "{variable}: no edges"),
            Finding::Cycle { variable } => write!(f, "{variable}: on a cycle"),
            Finding::Invalid { message } => write!(f, "invalid network: {message}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn for_variable<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Finding> + 'a {
        self.findings.iter().filter(move |f| match f {
            Finding::RowSumDrift { variable, .. }
            | Finding::ClampedEntries { variable, .. }
            | Finding::UnreachableConfiguration { variable, .. }
            | Finding::Disconnected { variable }
            | Finding::Cycle { variable } => variable == name,
            Finding::Invalid { .. } => false,
        })
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.findings.is_empty() {
            return writeln!(f, "no findings");
        }
        for finding in &self.findings {
            writeln!(f, "{finding}")?;
        }
        Ok(())
    }
}

/// Checks a loaded network. Load-time repairs (row renormalization and
/// clamping) are reported from the network's load notes.
pub fn validate_network(net: &Network) -> ValidationReport {
    let mut findings = Vec::new();
    for (id, var) in net.variables().iter().enumerate() {
        let notes = net.load_notes(id);
        if notes.max_row_drift > DRIFT_REPORT {
            findings.push(Finding::RowSumDrift { variable: var.name.clone(), drift: notes.max_row_drift });
        }
        if notes.clamped_entries > 0 {
            findings.push(Finding::ClampedEntries { variable: var.name.clone(), count: notes.clamped_entries });
        }
        let parents = net.parents(id);
        let configs: usize = parents.iter().map(|&p| net.variable(p).cardinality()).product();
        if !parents.is_empty() {
            let mut states = vec![0usize; parents.len()];
            for _ in 0..configs {
                let evidence: Vec<_> = parents.iter().copied().zip(states.iter().copied()).collect();
                let probability = net.log_evidence_probability_ids(&evidence).exp();
                if probability < UNREACHABLE {
                    let configuration = parents
                        .iter()
                        .zip(&states)
                        .map(|(&p, &s)| format!("{}={}", net.variable(p).name, net.variable(p).states[s]))
                        .collect::<Vec<_>>()
                        .join(",");
                    findings.push(Finding::UnreachableConfiguration {
                        variable: var.name.clone(),
                        configuration,
                        probability,
                    });
                }
                for k in (0..states.len()).rev() {
                    states[k] += 1;
                    if states[k] < net.variable(parents[k]).cardinality() {
                        break;
                    }
                    states[k] = 0;
                }
            }
        }
        if net.len() > 1 && parents.is_empty() && net.children(id).is_empty() {
            findings.push(Finding::Disconnected { variable: var.name.clone() });
        }
    }
    ValidationReport { findings }
}

/// Parses, builds and checks a network document. Documents that cannot be
/// built produce a single cycle or invalid finding instead of an error.
pub fn validate_document(document: &str, clamp_floor: f64) -> ValidationReport {
    let built = parse_network(document).and_then(|b| b.clamp_floor(clamp_floor).build());
    match built {
        Ok(net) => validate_network(&net),
        Err(BnError::Validation { variable, message }) if message.contains("cycle") => {
            ValidationReport { findings: vec![Finding::Cycle { variable }] }
        }
        Err(e) => ValidationReport { findings: vec![Finding::Invalid { message: e.to_string() }] },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bn::load_network;

    const GOOD: &str = "oius-network 1\n[variables]\nA = 0 1\nB = 0 1\n[edges]\nA -> B\n[cpts]\ncpt A\n0.3 0.7\ncpt B | A\n0.9 0.1\n0.4 0.6\n";

    #[test]
    fn clean_two_node_network() {
        let report = validate_network(&load_network(GOOD).unwrap());
        assert!(report.is_clean(), "{report}");
    }

    #[test]
    fn row_drift_is_reported() {
        let doc = GOOD.replace("0.4 0.6", "0.4 0.599999");
        let report = validate_network(&load_network(&doc).unwrap());
        assert_eq!(report.findings.len(), 1);
        assert!(matches!(&report.findings[0], Finding::RowSumDrift { variable, .. } if variable == "B"));
    }

    #[test]
    fn clamped_entries_are_counted() {
        let doc = GOOD.replace("0.9 0.1", "1.0 0.0");
        let report = validate_network(&load_network(&doc).unwrap());
        assert_eq!(report.for_variable("B").count(), 1);
        assert!(matches!(report.findings[0], Finding::ClampedEntries { count: 1, .. }));
    }

    #[test]
    fn unreachable_configuration_without_clamping() {
        let doc = GOOD.replace("0.3 0.7", "1.0 0.0");
        let report = validate_document(&doc, 0.0);
        assert!(report
            .findings
            .iter()
            .any(|f| matches!(f, Finding::UnreachableConfiguration { configuration, .. } if configuration == "A=1")));
    }

    #[test]
    fn document_level_findings() {
        let cyc = "oius-network 1\n[variables]\nA = 0 1\nB = 0 1\n[edges]\nA -> B\nB -> A\n[cpts]\ncpt A | B\n.5 .5\n.5 .5\ncpt B | A\n.5 .5\n.5 .5\n";
        assert!(matches!(validate_document(cyc, 1e-4).findings[..], [Finding::Cycle { .. }]));
        assert!(matches!(validate_document("nonsense", 1e-4).findings[..], [Finding::Invalid { .. }]));
        let lonely = "oius-network 1\n[variables]\nA = 0 1\nB = 0 1\n[cpts]\ncpt A\n.5 .5\ncpt B\n.5 .5\n";
        assert_eq!(validate_document(lonely, 1e-4).findings.len(), 2);
    }
}
