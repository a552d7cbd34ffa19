use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::detection::{AndOrTree, Observation};

use super::EvalError;

/// `variable=state`, or a bare variable when the state is not given.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    pub variable: String,
    pub state: Option<String>,
}

impl Literal {
    pub fn new<V: Into<String>, S: Into<String>>(variable: V, state: S) -> Self {
        Self { variable: variable.into(), state: Some(state.into()) }
    }

    pub fn bare<V: Into<String>>(variable: V) -> Self {
        Self { variable: variable.into(), state: None }
    }

    /// Same variable, and same state when both sides give one.
    pub fn matches(&self, other: &Literal) -> bool {
        self.variable == other.variable
            && match (&self.state, &other.state) {
                (Some(a), Some(b)) => a == b,
                _ => true,
            }
    }
}

impl From<&Observation> for Literal {
    fn from(o: &Observation) -> Self {
        Literal::new(o.variable.clone(), o.state.clone())
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.state {
            Some(s) => write!(f, "{}={s}", self.variable),
            None => f.write_str(&self.variable),
        }
    }
}

/// `(a_1 ∧ ... ∧ a_i) ∧ (b_1 ∨ ... ∨ b_j)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormulaGroup {
    pub conjunction: Vec<Literal>,
    pub disjunction: Vec<Literal>,
}

/// A conjunction of groups.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Formula {
    pub groups: Vec<FormulaGroup>,
}

/// One group per dependency-group node: AND leaves become the conjunction,
/// OR leaves the disjunction.
pub fn tree_to_formula<L>(tree: &AndOrTree<L>) -> Formula
where
    for<'a> &'a L: Into<Literal>,
{
    Formula {
        groups: tree
            .groups
            .iter()
            .map(|g| FormulaGroup {
                conjunction: g.and_set.iter().map(Into::into).collect(),
                disjunction: g.or_set.iter().map(Into::into).collect(),
            })
            .collect(),
    }
}

impl From<&crate::recommender::RecommendationLeaf> for Literal {
    fn from(l: &crate::recommender::RecommendationLeaf) -> Self {
        Literal::new(l.variable.clone(), l.old_state.clone())
    }
}

impl fmt::Display for FormulaGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |lits: &[Literal], sep: &str| lits.iter().map(ToString::to_string).collect::<Vec<_>>().join(sep);
        let conj = join(&self.conjunction, " & ");
        let disj = join(&self.disjunction, " | ");
        match (self.conjunction.is_empty(), self.disjunction.len()) {
            (false, 0) => write!(f, "{{{conj}}}"),
            (true, 1) => write!(f, "{{; {disj}}}"),
            (true, _) => write!(f, "{{{disj}}}"),
            (false, _) => write!(f, "{{{conj} ; {disj}}}"),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.groups.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(" & "))
    }
}

fn parse_literals(text: &str, sep: char) -> Result<Vec<Literal>, EvalError> {
    text.split(sep)
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            let bad = || EvalError::Formula(format!("bad literal `{t}`"));
            let (v, s) = match t.split_once('=') {
                Some((v, s)) => (v.trim(), Some(s.trim())),
                None => (t, None),
            };
            if v.is_empty() || v.contains(char::is_whitespace) || s.is_some_and(|s| s.is_empty()) {
                return Err(bad());
            }
            Ok(Literal { variable: v.to_string(), state: s.map(str::to_string) })
        })
        .collect()
}

impl FromStr for FormulaGroup {
    type Err = EvalError;

    /// `{a=0 & b=1}`, `{a=0 | b=1}`, `{; a=0}` or `{a=0 ; b=1 | c=2}`.
    fn from_str(s: &str) -> Result<Self, EvalError> {
        let inner = s
            .trim()
            .strip_prefix('{')
            .and_then(|r| r.strip_suffix('}'))
            .ok_or_else(|| EvalError::Formula(format!("group `{s}` must be wrapped in braces")))?;
        let group = if let Some((conj, disj)) = inner.split_once(';') {
            if conj.contains('|') || disj.contains('&') {
                return Err(EvalError::Formula(format!("`{s}`: conjunction goes before `;`, disjunction after")));
            }
            FormulaGroup { conjunction: parse_literals(conj, '&')?, disjunction: parse_literals(disj, '|')? }
        } else if inner.contains('|') {
            if inner.contains('&') {
                return Err(EvalError::Formula(format!("`{s}`: separate `&` and `|` parts with `;`")));
            }
            FormulaGroup { conjunction: vec![], disjunction: parse_literals(inner, '|')? }
        } else {
            FormulaGroup { conjunction: parse_literals(inner, '&')?, disjunction: vec![] }
        };
        if group.conjunction.is_empty() && group.disjunction.is_empty() {
            return Err(EvalError::Formula("empty group".into()));
        }
        Ok(group)
    }
}

impl FromStr for Formula {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, EvalError> {
        let mut groups = Vec::new();
        let mut rest = s.trim();
        while !rest.is_empty() {
            let end = rest
                .find('}')
                .ok_or_else(|| EvalError::Formula(format!("unterminated group in `{s}`")))?;
            groups.push(rest[..=end].parse()?);
            rest = rest[end + 1..].trim_start();
            if let Some(r) = rest.strip_prefix('&') {
                rest = r.trim_start();
                if rest.is_empty() {
                    return Err(EvalError::Formula("trailing `&`".into()));
                }
            } else if !rest.is_empty() {
                return Err(EvalError::Formula(format!("expected `&` between groups, found `{rest}`")));
            }
        }
        if groups.is_empty() {
            return Err(EvalError::Formula("empty formula".into()));
        }
        Ok(Formula { groups })
    }
}

/// Literal differences for one aligned (or unaligned) pair of groups.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupDiff {
    pub candidate: Option<usize>,
    pub reference: Option<usize>,
    pub extra_conjunction: Vec<Literal>,
    pub missing_conjunction: Vec<Literal>,
    pub extra_disjunction: Vec<Literal>,
    pub missing_disjunction: Vec<Literal>,
}

impl GroupDiff {
    pub fn is_exact(&self) -> bool {
        self.candidate.is_some()
            && self.reference.is_some()
            && self.extra_conjunction.is_empty()
            && self.missing_conjunction.is_empty()
            && self.extra_disjunction.is_empty()
            && self.missing_disjunction.is_empty()
    }
}

/// Result of the two-level comparison.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchReport {
    pub candidate_groups: usize,
    pub reference_groups: usize,
    /// One entry per aligned pair, then unaligned candidate groups, then
    /// unaligned reference groups.
    pub groups: Vec<GroupDiff>,
    /// Some alignment step had more than one best pair.
    pub ties: bool,
}

impl MatchReport {
    /// Level one: same number of groups.
    pub fn same_group_count(&self) -> bool {
        self.candidate_groups == self.reference_groups
    }

    /// Both levels agree.
    pub fn is_match(&self) -> bool {
        self.same_group_count() && self.groups.iter().all(GroupDiff::is_exact)
    }
}

impl fmt::Display for MatchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "groups: candidate {} reference {}{}",
            self.candidate_groups,
            self.reference_groups,
            if self.is_match() { " (match)" } else { "" }
        )?;
        let list = |l: &[Literal]| l.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ");
        for d in self.groups.iter().filter(|d| !d.is_exact()) {
            let name = |i: Option<usize>| i.map_or("-".to_string(), |i| (i + 1).to_string());
            write!(f, "candidate group {} / reference group {}:", name(d.candidate), name(d.reference))?;
            for (what, lits) in [
                ("extra conjunction", &d.extra_conjunction),
                ("missing conjunction", &d.missing_conjunction),
                ("extra disjunction", &d.extra_disjunction),
                ("missing disjunction", &d.missing_disjunction),
            ] {
                if !lits.is_empty() {
                    write!(f, " {what} [{}]", list(lits))?;
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn distinct(a: &[Literal]) -> Vec<&Literal> {
    let mut out: Vec<&Literal> = a.iter().collect();
    out.sort();
    out.dedup();
    out
}

fn matched(a: &[Literal], b: &[Literal]) -> usize {
    distinct(a).into_iter().filter(|x| b.iter().any(|y| x.matches(y))).count()
}

fn unmatched(a: &[Literal], b: &[Literal]) -> Vec<Literal> {
    distinct(a).into_iter().filter(|x| !b.iter().any(|y| x.matches(y))).cloned().collect()
}

/// Symmetric overlap: distinct literals on either side with a partner in the
/// same role on the other.
fn overlap(a: &FormulaGroup, b: &FormulaGroup) -> usize {
    matched(&a.conjunction, &b.conjunction)
        + matched(&b.conjunction, &a.conjunction)
        + matched(&a.disjunction, &b.disjunction)
        + matched(&b.disjunction, &a.disjunction)
}

fn diff(c: Option<(usize, &FormulaGroup)>, r: Option<(usize, &FormulaGroup)>) -> GroupDiff {
    let empty = FormulaGroup::default();
    let (ci, cg) = c.map_or((None, &empty), |(i, g)| (Some(i), g));
    let (ri, rg) = r.map_or((None, &empty), |(i, g)| (Some(i), g));
    GroupDiff {
        candidate: ci,
        reference: ri,
        extra_conjunction: unmatched(&cg.conjunction, &rg.conjunction),
        missing_conjunction: unmatched(&rg.conjunction, &cg.conjunction),
        extra_disjunction: unmatched(&cg.disjunction, &rg.disjunction),
        missing_disjunction: unmatched(&rg.disjunction, &cg.disjunction),
    }
}

/// Two-level comparison: group counts, then the literals of each aligned
/// group's conjunction and disjunction. Groups are aligned greedily by
/// largest literal overlap (literals counted per role), lowest indices first
/// on ties. Group order does not matter.
pub fn compare_formulas(candidate: &Formula, reference: &Formula) -> MatchReport {
    let (nc, nr) = (candidate.groups.len(), reference.groups.len());
    let mut c_free = vec![true; nc];
    let mut r_free = vec![true; nr];
    let mut pairs = Vec::new();
    let mut ties = false;
    loop {
        let mut best: Option<(usize, usize, usize)> = None;
        let mut best_count = 0;
        for i in (0..nc).filter(|&i| c_free[i]) {
            for j in (0..nr).filter(|&j| r_free[j]) {
                let o = overlap(&candidate.groups[i], &reference.groups[j]);
                if o == 0 {
                    continue;
                }
                match best {
                    Some((_, _, b)) if o < b => {}
                    Some((_, _, b)) if o == b => best_count += 1,
                    _ => {
                        best = Some((i, j, o));
                        best_count = 1;
                    }
                }
            }
        }
        let Some((i, j, _)) = best else { break };
        ties |= best_count > 1;
        c_free[i] = false;
        r_free[j] = false;
        pairs.push((i, j));
    }
    pairs.sort_unstable();
    let mut groups: Vec<GroupDiff> = pairs
        .iter()
        .map(|&(i, j)| diff(Some((i, &candidate.groups[i])), Some((j, &reference.groups[j]))))
        .collect();
    groups.extend((0..nc).filter(|&i| c_free[i]).map(|i| diff(Some((i, &candidate.groups[i])), None)));
    groups.extend((0..nr).filter(|&j| r_free[j]).map(|j| diff(None, Some((j, &reference.groups[j])))));
    MatchReport { candidate_groups: nc, reference_groups: nr, groups, ties }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::{build_tree, DependencyGroup};

    fn f(s: &str) -> Formula {
        s.parse().unwrap()
    }

    #[test]
    fn text_round_trip() {
        for s in ["{a=0 & b=1} & {c=0 | d=1}", "{a=0 ; c=0 | d=1}", "{; x=1}", "{heartDisease} & {drugsNb & psychotropicDrugs}"] {
            assert_eq!(f(s).to_string(), s);
        }
        assert_eq!(f("{a}").groups[0].conjunction, vec![Literal::bare("a")]);
    }

    #[test]
    fn malformed_formulas() {
        for s in ["", "{}", "{a & b | c}", "{a} {b}", "{a} &", "a", "{a ; b & c}", "{=1}", "{a=}"] {
            assert!(s.parse::<Formula>().is_err(), "{s}");
        }
    }

    #[test]
    fn identical_and_permuted_formulas_match() {
        let a = f("{x | y | z} & {u} & {v & w}");
        let b = f("{v & w} & {z | x | y} & {u}");
        assert!(compare_formulas(&a, &a).is_match());
        assert!(compare_formulas(&a, &b).is_match());
        assert!(compare_formulas(&b, &a).is_match());
    }

    #[test]
    fn extra_literal_is_reported() {
        let oids = f("{heartDisease} & {drugsNb & psychotropicDrugs}");
        let expert = f("{heartDisease} & {drugsNb}");
        let report = compare_formulas(&oids, &expert);
        assert!(report.same_group_count());
        assert!(!report.is_match());
        let bad: Vec<&GroupDiff> = report.groups.iter().filter(|d| !d.is_exact()).collect();
        assert_eq!(bad.len(), 1);
        assert_eq!(bad[0].candidate, Some(1));
        assert_eq!(bad[0].extra_conjunction, vec![Literal::bare("psychotropicDrugs")]);
        assert!(bad[0].missing_conjunction.is_empty());
    }

    #[test]
    fn states_must_agree_when_both_given() {
        assert!(!compare_formulas(&f("{a=0}"), &f("{a=1}")).is_match());
        assert!(compare_formulas(&f("{a=0}"), &f("{a}")).is_match());
        assert!(!compare_formulas(&f("{a & b}"), &f("{a | b}")).is_match());
    }

    #[test]
    fn unaligned_groups_are_listed() {
        let report = compare_formulas(&f("{a} & {b}"), &f("{a}"));
        assert!(!report.same_group_count());
        assert_eq!(report.groups.len(), 2);
        assert_eq!(report.groups[1].candidate, Some(1));
        assert_eq!(report.groups[1].reference, None);
    }

    #[test]
    fn formula_from_tree() {
        let o = |v: &str| Observation::new(v, "0", 1);
        let groups = vec![
            DependencyGroup { and_set: vec![o("a")], or_set: vec![] },
            DependencyGroup { and_set: vec![], or_set: vec![o("b"), o("c")] },
        ];
        let tree = build_tree(&groups).unwrap();
        let direct = Formula {
            groups: groups
                .iter()
                .map(|g| FormulaGroup {
                    conjunction: g.and_set.iter().map(Literal::from).collect(),
                    disjunction: g.or_set.iter().map(Literal::from).collect(),
                })
                .collect(),
        };
        assert_eq!(tree_to_formula(&tree), direct);
        assert_eq!(direct.to_string(), "{a=0} & {b=0 | c=0}");
    }
}
