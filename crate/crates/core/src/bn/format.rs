//! Text format for networks.
//!
//! ```text
//! oius-network 1
//! name two-node example
//!
//! [variables]
//! A = no yes ; free-text description
//! B = no yes
//!
//! [edges]
//! A -> B
//!
//! [cpts]
//! cpt A
//!   0.700000 0.300000
//! cpt B | A
//!   0.900000 0.100000   # A=no
//!   0.500000 0.500000   # A=yes
//! ```
//!
//! `#` starts a comment anywhere on a line. CPT rows follow the parent list
//! order with the last parent varying fastest.

use std::fmt::Write as _;

use super::error::BnError;
use super::network::{Cpt, Network, NetworkBuilder, Variable, DEFAULT_CLAMP_FLOOR};

pub const FORMAT_HEADER: &str = "oius-network";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Preamble,
    Variables,
    Edges,
    Cpts,
}

/// Parses a network document and builds it with the default clamp floor.
pub fn load_network(document: &str) -> Result<Network, BnError> {
    load_network_with_floor(document, DEFAULT_CLAMP_FLOOR)
}

pub fn load_network_with_floor(document: &str, clamp_floor: f64) -> Result<Network, BnError> {
    parse_network(document)?.clamp_floor(clamp_floor).build()
}

/// Parses a document into an unbuilt [`NetworkBuilder`].
pub fn parse_network(document: &str) -> Result<NetworkBuilder, BnError> {
    let err = |line: usize, message: String| BnError::Parse { line, message };
    let mut builder = NetworkBuilder::new();
    let mut section = Section::Preamble;
    let mut saw_header = false;
    let mut current: Option<Cpt> = None;

    for (i, raw) in document.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if !saw_header {
            let mut parts = line.split_whitespace();
            if parts.next() != Some(FORMAT_HEADER) {
                return Err(err(lineno, format!("expected `{FORMAT_HEADER} <version>` header")));
            }
            let version: u32 = parts
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| err(lineno, "missing or malformed format version".into()))?;
            if version != FORMAT_VERSION {
                return Err(err(lineno, format!("unsupported format version {version}")));
            }
            saw_header = true;
            continue;
        }
        if line.starts_with('[') {
            section = match line {
                "[variables]" => Section::Variables,
                "[edges]" => Section::Edges,
                "[cpts]" => Section::Cpts,
                other => return Err(err(lineno, format!("unknown section {other}"))),
            };
            continue;
        }
        match section {
            Section::Preamble => {
                let rest = line
                    .strip_prefix("name")
                    .filter(|r| r.starts_with(char::is_whitespace))
                    .ok_or_else(|| err(lineno, format!("unexpected line before sections: {line}")))?;
                builder.set_name(rest.trim().to_string());
            }
            Section::Variables => {
                let (decl, description) = match raw.split('#').next().unwrap_or("").split_once(';') {
                    Some((d, desc)) => (d.trim().to_string(), Some(desc.trim().to_string())),
                    None => (line.to_string(), None),
                };
                let (name, states) = decl
                    .split_once('=')
                    .ok_or_else(|| err(lineno, "variable lines look like `name = s1 s2 ...`".into()))?;
                let name = name.trim();
                if name.is_empty() || name.contains(char::is_whitespace) {
                    return Err(err(lineno, format!("bad variable name `{name}`")));
                }
                let states: Vec<String> = states.split_whitespace().map(str::to_string).collect();
                builder.push_variable(Variable {
                    name: name.to_string(),
                    states,
                    description: description.filter(|d| !d.is_empty()),
                });
            }
            Section::Edges => {
                let (p, c) = line
                    .split_once("->")
                    .ok_or_else(|| err(lineno, "edge lines look like `parent -> child`".into()))?;
                let (p, c) = (p.trim(), c.trim());
                if p.is_empty() || c.is_empty() || p.contains(char::is_whitespace) || c.contains(char::is_whitespace) {
                    return Err(err(lineno, format!("malformed edge `{line}`")));
                }
                builder.push_edge(p.to_string(), c.to_string());
            }
            Section::Cpts => {
                if let Some(head) = line.strip_prefix("cpt ") {
                    if let Some(done) = current.take() {
                        builder.push_cpt(done);
                    }
                    let (owner, parents) = match head.split_once('|') {
                        Some((o, ps)) => (o.trim(), ps.split_whitespace().map(str::to_string).collect()),
                        None => (head.trim(), Vec::new()),
                    };
                    if owner.is_empty() || owner.contains(char::is_whitespace) {
                        return Err(err(lineno, format!("bad CPT owner `{owner}`")));
                    }
                    current = Some(Cpt { owner: owner.to_string(), parents, rows: Vec::new() });
                } else {
                    let cpt = current
                        .as_mut()
                        .ok_or_else(|| err(lineno, "probability row outside a `cpt` block".into()))?;
                    let row = line
                        .split_whitespace()
                        .map(|t| t.parse::<f64>().map_err(|_| err(lineno, format!("`{t}` is not a probability"))))
                        .collect::<Result<Vec<f64>, _>>()?;
                    cpt.rows.push(row);
                }
            }
        }
    }
    if !saw_header {
        return Err(err(0, "empty document".into()));
    }
    if let Some(done) = current.take() {
        builder.push_cpt(done);
    }
    Ok(builder)
}

/// Serializes a network. Probabilities are written with ten decimals.
pub fn write_network(net: &Network) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{FORMAT_HEADER} {FORMAT_VERSION}");
    if let Some(name) = net.name() {
        let _ = writeln!(out, "name {name}");
    }
    out.push_str("\n[variables]\n");
    for var in net.variables() {
        let _ = write!(out, "{} = {}", var.name, var.states.join(" "));
        if let Some(d) = &var.description {
            let _ = write!(out, " ; {}", d.replace('#', ""));
        }
        out.push('\n');
    }
    out.push_str("\n[edges]\n");
    for (p, c) in net.edges() {
        let _ = writeln!(out, "{p} -> {c}");
    }
    out.push_str("\n[cpts]\n");
    for (id, cpt) in net.cpts().iter().enumerate() {
        if cpt.parents.is_empty() {
            let _ = writeln!(out, "cpt {}", cpt.owner);
        } else {
            let _ = writeln!(out, "cpt {} | {}", cpt.owner, cpt.parents.join(" "));
        }
        let parent_ids = net.parents(id);
        for (r, row) in cpt.rows.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|p| format!("{p:.10}")).collect();
            let _ = write!(out, "  {}", cells.join(" "));
            if !parent_ids.is_empty() {
                let _ = write!(out, "   # {}", describe_config(net, parent_ids, r));
            }
            out.push('\n');
        }
    }
    out
}

fn describe_config(net: &Network, parents: &[usize], mut row: usize) -> String {
    let mut parts = vec![String::new(); parents.len()];
    for (k, &p) in parents.iter().enumerate().rev() {
        let var = net.variable(p);
        parts[k] = format!("{}={}", var.name, var.states[row % var.cardinality()]);
        row /= var.cardinality();
    }
    parts.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_NODE: &str = "\
oius-network 1
name tiny
# leading comment

[variables]
A = no yes ; a cause
B = no yes

[edges]
A -> B

[cpts]
cpt A
  0.7 0.3
cpt B | A
  0.9 0.1   # A=no
  0.5 0.5   # A=yes
";

    #[test]
    fn parses_two_node_document() {
        let net = load_network(TWO_NODE).unwrap();
        assert_eq!(net.len(), 2);
        assert_eq!(net.edges().len(), 1);
        assert_eq!(net.name(), Some("tiny"));
        assert_eq!(net.variable(0).description.as_deref(), Some("a cause"));
    }

    #[test]
    fn write_then_load_is_identity() {
        let net = load_network(TWO_NODE).unwrap();
        let again = load_network(&write_network(&net)).unwrap();
        assert_eq!(net.variables(), again.variables());
        for (a, b) in net.cpts().iter().zip(again.cpts()) {
            assert_eq!(a.parents, b.parents);
            for (ra, rb) in a.rows.iter().zip(&b.rows) {
                for (x, y) in ra.iter().zip(rb) {
                    assert!((x - y).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn cycle_is_reported() {
        let doc = "oius-network 1\n[variables]\nA = 0 1\nB = 0 1\n[edges]\nA -> B\nB -> A\n[cpts]\ncpt A | B\n.5 .5\n.5 .5\ncpt B | A\n.5 .5\n.5 .5\n";
        let e = load_network(doc).unwrap_err();
        assert!(e.to_string().contains("cycle"));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let doc = "oius-network 1\n[variables]\nA = 0 1\n[cpts]\ncpt A\n0.5 x\n";
        match load_network(doc) {
            Err(BnError::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("{other:?}"),
        }
        assert!(matches!(load_network("hello 1\n"), Err(BnError::Parse { line: 1, .. })));
        assert!(matches!(load_network("oius-network 9\n"), Err(BnError::Parse { .. })));
    }
}
