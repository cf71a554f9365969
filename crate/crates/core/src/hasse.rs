//! Covering relations of finite tally sets and their DOT rendering.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::order::{leq, SafetyParams};
use crate::tally::Tally;

/// Nodes and covering edges `(lower, upper)` of a finite poset, as indices
/// into `nodes`. Edges run from the less safe tally to the safer one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HasseEdges {
    pub nodes: Vec<Tally>,
    pub edges: Vec<(usize, usize)>,
}

impl HasseEdges {
    /// Indices reachable from `from` along edges, excluding `from` itself.
    fn above(&self, from: usize) -> Vec<bool> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for &(a, b) in &self.edges {
            adj[a].push(b);
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = adj[from].clone();
        while let Some(v) = stack.pop() {
            if !seen[v] {
                seen[v] = true;
                stack.extend(&adj[v]);
            }
        }
        seen
    }
}

/// Transitive reduction of `≼_r` restricted to `set`.
pub fn transitive_reduction(set: &[Tally], params: SafetyParams) -> Result<HasseEdges> {
    let len = set.len();
    let mut below = vec![vec![false; len]; len];
    for i in 0..len {
        for j in 0..len {
            if i != j {
                if set[i] == set[j] {
                    return Err(Error::InvalidParameter(format!("duplicate tally {}", set[i])));
                }
                below[i][j] = leq(&set[i], &set[j], params)?;
            }
        }
    }
    let mut edges = Vec::new();
    for i in 0..len {
        for j in 0..len {
            if below[i][j] && !(0..len).any(|k| below[i][k] && below[k][j]) {
                edges.push((i, j));
            }
        }
    }
    Ok(HasseEdges { nodes: set.to_vec(), edges })
}

/// Renders a Hasse diagram as a DOT digraph.
///
/// Each node carries its tally as label and its recommendation as `class`
/// and as a color index. Nodes maximal within their recommendation class get
/// `peripheries=2`.
pub fn hasse_dot(hasse: &HasseEdges, labels: &HashMap<Tally, u32>) -> Result<String> {
    let recs = hasse
        .nodes
        .iter()
        .map(|q| {
            labels
                .get(q)
                .copied()
                .ok_or_else(|| Error::InvalidParameter(format!("no recommendation label for {q}")))
        })
        .collect::<Result<Vec<u32>>>()?;

    let mut out = String::from("digraph {\n");
    if !hasse.nodes.is_empty() {
        out.push_str("  rankdir=BT;\n  node [shape=box, colorscheme=set19];\n");
    }
    for (i, q) in hasse.nodes.iter().enumerate() {
        let fiber_max = !hasse.above(i).iter().enumerate().any(|(j, &up)| up && recs[j] == recs[i]);
        let _ = write!(out, "  n{i} [label=\"{q}\", class=\"rec{r}\", color={c}", r = recs[i], c = recs[i] + 1);
        if fiber_max {
            out.push_str(", peripheries=2");
        }
        out.push_str("];\n");
    }
    for &(a, b) in &hasse.edges {
        let _ = writeln!(out, "  n{a} -> n{b};");
    }
    out.push_str("}\n");
    Ok(out)
}
