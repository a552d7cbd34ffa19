//! AND-OR trees over possibly obsolete observations.
//!
//! The root is an AND node with one AND child per dependency group. A group
//! node has an AND child holding the observations that are certainly
//! obsolete and an OR child holding those of which at least one is. Empty
//! sets produce no child.
//!
//! Text form (used by the service and the golden files):
//!
//! ```text
//! (AND
//!   (AND
//!     (OR
//!       (leaf dementia 0 1000)
//!       (leaf strokeTIA 0 1000)))
//!   (AND
//!     (AND
//!       (leaf livesAlone 1 1000))))
//! ```

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::observation::Observation;
use super::DetectionError;

/// Group `S_i` split into its AND-set and OR-set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DependencyGroup<L = Observation> {
    pub and_set: Vec<L>,
    pub or_set: Vec<L>,
}

impl<L> DependencyGroup<L> {
    pub fn is_empty(&self) -> bool {
        self.and_set.is_empty() && self.or_set.is_empty()
    }

    pub fn leaves(&self) -> impl Iterator<Item = &L> {
        self.and_set.iter().chain(&self.or_set)
    }
}

/// AND root over dependency groups. See the module docs for the shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AndOrTree<L = Observation> {
    pub groups: Vec<DependencyGroup<L>>,
}

impl<L> AndOrTree<L> {
    pub fn leaves(&self) -> impl Iterator<Item = &L> {
        self.groups.iter().flat_map(|g| g.leaves())
    }

    /// Root, group nodes, AND/OR nodes and leaves.
    pub fn node_count(&self) -> usize {
        1 + self
            .groups
            .iter()
            .map(|g| {
                let side = |s: &[L]| if s.is_empty() { 0 } else { 1 + s.len() };
                1 + side(&g.and_set) + side(&g.or_set)
            })
            .sum::<usize>()
    }

    /// Same tree with every leaf mapped through `f`.
    pub fn map_leaves<M, F: FnMut(&L) -> M>(&self, mut f: F) -> AndOrTree<M> {
        AndOrTree {
            groups: self
                .groups
                .iter()
                .map(|g| DependencyGroup {
                    and_set: g.and_set.iter().map(&mut f).collect(),
                    or_set: g.or_set.iter().map(&mut f).collect(),
                })
                .collect(),
        }
    }
}

/// Composes the tree from decomposed groups, keeping their order.
pub fn build_tree<L: Clone>(groups: &[DependencyGroup<L>]) -> Result<AndOrTree<L>, DetectionError> {
    if groups.is_empty() {
        return Err(DetectionError::EmptyGroups);
    }
    if groups.iter().any(DependencyGroup::is_empty) {
        return Err(DetectionError::EmptyGroups);
    }
    Ok(AndOrTree { groups: groups.to_vec() })
}

/// Leaf payloads that can be written to and read from the text form.
pub trait LeafText: Sized {
    /// Tokens after `leaf`, space separated.
    fn to_tokens(&self) -> Vec<String>;
    fn from_tokens(tokens: &[&str]) -> Result<Self, String>;
}

impl LeafText for Observation {
    fn to_tokens(&self) -> Vec<String> {
        vec![self.variable.clone(), self.state.clone(), self.timestamp.to_string()]
    }

    fn from_tokens(tokens: &[&str]) -> Result<Self, String> {
        match tokens {
            [v, s, t] => Ok(Observation::new(*v, *s, t.parse().map_err(|_| format!("bad timestamp `{t}`"))?)),
            _ => Err(format!("expected `variable state timestamp`, got {tokens:?}")),
        }
    }
}

impl<L: LeafText> AndOrTree<L> {
    pub fn to_text(&self) -> String {
        let mut out = String::from("(AND");
        for g in &self.groups {
            out.push_str("\n  (AND");
            for (kind, set) in [("AND", &g.and_set), ("OR", &g.or_set)] {
                if set.is_empty() {
                    continue;
                }
                let _ = write!(out, "\n    ({kind}");
                for leaf in set {
                    let _ = write!(out, "\n      (leaf {})", leaf.to_tokens().join(" "));
                }
                out.push(')');
            }
            out.push(')');
        }
        out.push_str(")\n");
        out
    }

    pub fn from_text(text: &str) -> Result<Self, DetectionError> {
        let tokens = tokenize(text);
        let mut pos = 0;
        let tree = parse_root::<L>(&tokens, &mut pos).map_err(DetectionError::TreeFormat)?;
        if pos != tokens.len() {
            return Err(DetectionError::TreeFormat("trailing input after tree".into()));
        }
        Ok(tree)
    }
}

fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        match ch {
            '(' | ')' => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                out.push(ch.to_string());
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn expect(tokens: &[String], pos: &mut usize, want: &str) -> Result<(), String> {
    match tokens.get(*pos) {
        Some(t) if t == want => {
            *pos += 1;
            Ok(())
        }
        Some(t) => Err(format!("expected `{want}`, found `{t}`")),
        None => Err(format!("expected `{want}`, found end of input")),
    }
}

fn parse_root<L: LeafText>(tokens: &[String], pos: &mut usize) -> Result<AndOrTree<L>, String> {
    expect(tokens, pos, "(")?;
    expect(tokens, pos, "AND")?;
    let mut groups = Vec::new();
    while tokens.get(*pos).map(String::as_str) == Some("(") {
        groups.push(parse_group(tokens, pos)?);
    }
    expect(tokens, pos, ")")?;
    if groups.is_empty() {
        return Err("tree has no groups".into());
    }
    Ok(AndOrTree { groups })
}

fn parse_group<L: LeafText>(tokens: &[String], pos: &mut usize) -> Result<DependencyGroup<L>, String> {
    expect(tokens, pos, "(")?;
    expect(tokens, pos, "AND")?;
    let mut group = DependencyGroup { and_set: Vec::new(), or_set: Vec::new() };
    while tokens.get(*pos).map(String::as_str) == Some("(") {
        expect(tokens, pos, "(")?;
        let kind = tokens.get(*pos).cloned().ok_or("unexpected end of input")?;
        *pos += 1;
        let mut leaves = Vec::new();
        while tokens.get(*pos).map(String::as_str) == Some("(") {
            expect(tokens, pos, "(")?;
            expect(tokens, pos, "leaf")?;
            let start = *pos;
            while tokens.get(*pos).is_some_and(|t| t != ")" && t != "(") {
                *pos += 1;
            }
            let body: Vec<&str> = tokens[start..*pos].iter().map(String::as_str).collect();
            leaves.push(L::from_tokens(&body)?);
            expect(tokens, pos, ")")?;
        }
        expect(tokens, pos, ")")?;
        match kind.as_str() {
            "AND" if group.and_set.is_empty() => group.and_set = leaves,
            "OR" if group.or_set.is_empty() => group.or_set = leaves,
            other => return Err(format!("unexpected or repeated `{other}` child in a group")),
        }
    }
    expect(tokens, pos, ")")?;
    if group.is_empty() {
        return Err("group without leaves".into());
    }
    Ok(group)
}
