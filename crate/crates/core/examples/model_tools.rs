//! Equal-frequency discretization of a continuous attribute, and network
//! validation of a shipped model and of a flawed document.
//!
//! cargo run --example model_tools

use oius::model_tools::{equal_frequency_discretize, models, validate_document, validate_network, write_schemes};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ages = [58.0, 61.0, 63.0, 64.0, 66.0, 67.0, 70.0, 71.0, 71.0, 74.0, 77.0, 79.0, 81.0, 83.0, 86.0, 91.0];
    let scheme = equal_frequency_discretize("age", &ages, 4)?;
    print!("{}", write_schemes(std::slice::from_ref(&scheme)));
    for a in [60.0, 72.5, 95.0] {
        println!("age {a} -> interval {} ({})", scheme.encode(a), scheme.label_of(a));
    }

    let report = validate_network(&models::falls_extended());
    println!("falls-extended: {} findings", report.findings.len());

    let flawed = "oius-network 1\n[variables]\nA = 0 1\nB = 0 1\nC = 0 1\n[edges]\nA -> B\n[cpts]\n\
                  cpt A\n0.5 0.5005\ncpt B | A\n1.0 0.0\n0.3 0.7\ncpt C\n0.5 0.5\n";
    for finding in validate_document(flawed, 1e-4).findings {
        println!("  {finding}");
    }
    Ok(())
}
