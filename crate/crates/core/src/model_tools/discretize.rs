use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::ModelToolsError;

/// Ordered intervals for one continuous variable.
///
/// A value `x` falls in interval `i` where `i` is the number of boundaries
/// that are `<= x`. The first and last intervals are open-ended.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalScheme {
    pub variable: String,
    pub boundaries: Vec<f64>,
    pub labels: Vec<String>,
}

impl IntervalScheme {
    pub fn interval_count(&self) -> usize {
        self.boundaries.len() + 1
    }

    /// Interval index of `x`.
    pub fn encode(&self, x: f64) -> usize {
        self.boundaries.partition_point(|&b| b <= x)
    }

    pub fn label_of(&self, x: f64) -> &str {
        &self.labels[self.encode(x)]
    }

    pub fn validate(&self) -> Result<(), ModelToolsError> {
        let bad = |message: &str| ModelToolsError::InvalidScheme {
            variable: self.variable.clone(),
            message: message.to_string(),
        };
        if self.boundaries.iter().any(|b| !b.is_finite()) {
            return Err(bad("boundaries must be finite"));
        }
        if self.boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad("boundaries must be strictly ascending"));
        }
        if self.labels.len() != self.interval_count() {
            return Err(bad("need one label per interval"));
        }
        let mut seen = std::collections::BTreeSet::new();
        if !self.labels.iter().all(|l| seen.insert(l)) {
            return Err(bad("labels must be unique"));
        }
        if self.labels.iter().any(|l| l.is_empty() || l.contains(char::is_whitespace)) {
            return Err(bad("labels must be non-empty and contain no whitespace"));
        }
        Ok(())
    }
}

/// Equal-frequency discretization.
///
/// Cuts are placed only between distinct values (at midpoints), so equal
/// values always share an interval. Among all such placements, the one
/// minimizing the squared deviation of interval counts from `n / bins` is
/// chosen. Labels are the data range of each interval, e.g. `4..6`.
pub fn equal_frequency_discretize(
    variable: &str,
    values: &[f64],
    bins: usize,
) -> Result<IntervalScheme, ModelToolsError> {
    if bins < 2 {
        return Err(ModelToolsError::TooFewBins(bins));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(ModelToolsError::NonFinite);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct: Vec<f64> = Vec::new();
    let mut counts: Vec<u64> = Vec::new();
    for v in sorted {
        if distinct.last() == Some(&v) {
            *counts.last_mut().unwrap() += 1;
        } else {
            distinct.push(v);
            counts.push(1);
        }
    }
    let m = distinct.len();
    if m < bins {
        return Err(ModelToolsError::TooFewDistinct { distinct: m, bins });
    }

    let starts = optimal_starts(&counts, bins);
    let boundaries: Vec<f64> = starts[1..].iter().map(|&i| (distinct[i - 1] + distinct[i]) / 2.0).collect();
    let mut ends: Vec<usize> = starts[1..].to_vec();
    ends.push(m);
    let labels = starts
        .iter()
        .zip(&ends)
        .map(|(&s, &e)| {
            let (lo, hi) = (distinct[s], distinct[e - 1]);
            if s + 1 == e {
                format!("{lo}")
            } else {
                format!("{lo}..{hi}")
            }
        })
        .collect();
    Ok(IntervalScheme { variable: variable.to_string(), boundaries, labels })
}

/// Index of the first distinct value in each bin. Bin costs are kept in
/// integers as `(bins * count - n)^2` so ties compare exactly.
fn optimal_starts(counts: &[u64], bins: usize) -> Vec<usize> {
    let m = counts.len();
    let n: u64 = counts.iter().sum();
    let mut prefix = vec![0u64; m + 1];
    for (i, c) in counts.iter().enumerate() {
        prefix[i + 1] = prefix[i] + c;
    }
    let cost = |i: usize, j: usize| {
        let d = (bins as u64 * (prefix[j] - prefix[i])) as i128 - n as i128;
        (d * d) as u128
    };
    // best[k][j]: first j distinct values split into k bins.
    let mut best = vec![vec![u128::MAX; m + 1]; bins + 1];
    let mut from = vec![vec![0usize; m + 1]; bins + 1];
    best[0][0] = 0;
    for k in 1..=bins {
        for j in k..=m {
            for i in (k - 1)..j {
                if best[k - 1][i] == u128::MAX {
                    continue;
                }
                let c = best[k - 1][i] + cost(i, j);
                if c < best[k][j] {
                    best[k][j] = c;
                    from[k][j] = i;
                }
            }
        }
    }
    let mut starts = vec![0; bins];
    let mut j = m;
    for k in (1..=bins).rev() {
        let i = from[k][j];
        starts[k - 1] = i;
        j = i;
    }
    starts
}

/// Sidecar text for a list of schemes.
///
/// ```text
/// oius-intervals 1
/// scheme height
/// cuts 150.5 155.5
/// labels 140..150 151..155 156..190
/// ```
pub fn write_schemes(schemes: &[IntervalScheme]) -> String {
    let mut out = String::from("oius-intervals 1\n");
    for s in schemes {
        let cuts: Vec<String> = s.boundaries.iter().map(f64::to_string).collect();
        let _ = writeln!(out, "scheme {}\ncuts {}\nlabels {}", s.variable, cuts.join(" "), s.labels.join(" "));
    }
    out
}

pub fn parse_schemes(text: &str) -> Result<Vec<IntervalScheme>, ModelToolsError> {
    let err = |line: usize, message: String| ModelToolsError::Parse { line, message };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, "oius-intervals 1")) => {}
        Some((n, other)) => return Err(err(n, format!("expected `oius-intervals 1`, found `{other}`"))),
        None => return Err(err(0, "empty document".into())),
    }
    let mut out: Vec<IntervalScheme> = Vec::new();
    let mut pending: Option<(IntervalScheme, bool, bool)> = None;
    let finish = |p: Option<(IntervalScheme, bool, bool)>, line: usize, out: &mut Vec<IntervalScheme>| {
        if let Some((s, has_cuts, has_labels)) = p {
            if !(has_cuts && has_labels) {
                return Err(err(line, format!("scheme `{}` needs `cuts` and `labels` lines", s.variable)));
            }
            s.validate()?;
            out.push(s);
        }
        Ok(())
    };
    let mut last = 0;
    for (n, line) in lines {
        last = n;
        let (key, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        match key {
            "scheme" => {
                finish(pending.take(), n, &mut out)?;
                if rest.is_empty() || rest.contains(char::is_whitespace) {
                    return Err(err(n, format!("bad scheme name `{rest}`")));
                }
                let s = IntervalScheme { variable: rest.to_string(), boundaries: vec![], labels: vec![] };
                pending = Some((s, false, false));
            }
            "cuts" | "labels" => {
                let (s, has_cuts, has_labels) =
                    pending.as_mut().ok_or_else(|| err(n, format!("`{key}` outside a scheme")))?;
                if key == "cuts" {
                    s.boundaries = rest
                        .split_whitespace()
                        .map(|t| t.parse().map_err(|_| err(n, format!("`{t}` is not a number"))))
                        .collect::<Result<_, _>>()?;
                    *has_cuts = true;
                } else {
                    s.labels = rest.split_whitespace().map(str::to_string).collect();
                    *has_labels = true;
                }
            }
            other => return Err(err(n, format!("unknown key `{other}`"))),
        }
    }
    finish(pending, last, &mut out)?;
    Ok(out)
}
