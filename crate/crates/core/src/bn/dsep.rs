//! d-separation via the reachable-trail search (Bayes ball).

use super::error::BnError;
use super::network::{Network, VarId};

impl Network {
    /// Nodes with an active trail from `source` given the observed mask.
    /// Observed nodes are never reported as reachable; `source` is.
    pub fn d_connected_from(&self, source: VarId, observed: &[bool]) -> Vec<bool> {
        let seeds: Vec<VarId> = (0..self.len()).filter(|&v| observed[v]).collect();
        // A collider is open when it or one of its descendants is observed,
        // i.e. when it is an ancestor of the observed set.
        let opens_collider = self.ancestors_mask(&seeds);

        let n = self.len();
        let mut reachable = vec![false; n];
        // visited[v][0]: arrived from a child (moving up); [1]: from a parent.
        let mut visited = vec![[false; 2]; n];
        let mut stack = vec![(source, 0usize)];
        while let Some((v, dir)) = stack.pop() {
            if visited[v][dir] {
                continue;
            }
            visited[v][dir] = true;
            if !observed[v] {
                reachable[v] = true;
            }
            if dir == 0 {
                if !observed[v] {
                    stack.extend(self.parents(v).iter().map(|&p| (p, 0)));
                    stack.extend(self.children(v).iter().map(|&c| (c, 1)));
                }
            } else {
                if !observed[v] {
                    stack.extend(self.children(v).iter().map(|&c| (c, 1)));
                }
                if opens_collider[v] {
                    stack.extend(self.parents(v).iter().map(|&p| (p, 0)));
                }
            }
        }
        reachable
    }

    pub fn d_separated_ids(&self, a: VarId, b: VarId, given: &[VarId]) -> bool {
        let mut observed = vec![false; self.len()];
        for &z in given {
            observed[z] = true;
        }
        !self.d_connected_from(a, &observed)[b]
    }

    /// True iff every trail between `a` and `b` is blocked by `given`.
    pub fn d_separated<S: AsRef<str>>(&self, a: &str, b: &str, given: &[S]) -> Result<bool, BnError> {
        let ia = self.var_id(a)?;
        let ib = self.var_id(b)?;
        if ia == ib {
            return Err(BnError::SameVariable(a.to_string()));
        }
        let mut z = Vec::with_capacity(given.len());
        for g in given {
            let id = self.var_id(g.as_ref())?;
            if id == ia || id == ib {
                return Err(BnError::TargetObserved(g.as_ref().to_string()));
            }
            z.push(id);
        }
        Ok(self.d_separated_ids(ia, ib, &z))
    }
}

#[cfg(test)]
mod tests {
    use crate::bn::{Cpt, Network, NetworkBuilder, Variable};

    fn uniform(edges: &[(&str, &str)], names: &[&str]) -> Network {
        let mut b = NetworkBuilder::new();
        for n in names {
            b = b.variable(Variable::new(*n, &["0", "1"]));
        }
        for (p, c) in edges {
            b = b.edge(*p, *c);
        }
        for n in names {
            let parents: Vec<&str> = edges.iter().filter(|(_, c)| c == n).map(|(p, _)| *p).collect();
            b = b.cpt(Cpt::new(*n, &parents, vec![vec![0.5, 0.5]; 1 << parents.len()]));
        }
        b.build().unwrap()
    }

    #[test]
    fn chain_blocked_by_middle() {
        let net = uniform(&[("A", "B"), ("B", "C")], &["A", "B", "C"]);
        assert!(net.d_separated("A", "C", &["B"]).unwrap());
        assert!(!net.d_separated("A", "C", &[] as &[&str]).unwrap());
    }

    #[test]
    fn collider_opens_when_observed() {
        let net = uniform(&[("A", "C"), ("B", "C")], &["A", "B", "C"]);
        assert!(net.d_separated("A", "B", &[] as &[&str]).unwrap());
        assert!(!net.d_separated("A", "B", &["C"]).unwrap());
    }

    #[test]
    fn collider_opens_through_observed_descendant() {
        let net = uniform(&[("A", "C"), ("B", "C"), ("C", "D")], &["A", "B", "C", "D"]);
        assert!(!net.d_separated("A", "B", &["D"]).unwrap());
    }

    #[test]
    fn rejects_bad_arguments() {
        let net = uniform(&[("A", "B")], &["A", "B"]);
        assert!(net.d_separated("A", "A", &[] as &[&str]).is_err());
        assert!(net.d_separated("A", "Z", &[] as &[&str]).is_err());
        assert!(net.d_separated("A", "B", &["A"]).is_err());
    }
}
