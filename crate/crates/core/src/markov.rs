//! Continuous-time Markov chains: closed classes and stationary laws.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Sparse rate graph; `edges[i]` maps target `j` to the rate `i → j`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RateGraph {
    edges: Vec<BTreeMap<usize, f64>>,
}

impl RateGraph {
    pub fn new(n: usize) -> Self {
        Self { edges: vec![BTreeMap::new(); n] }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Accumulates a rate `from → to`. Zero rates and self loops are ignored.
    pub fn add(&mut self, from: usize, to: usize, rate: f64) -> Result<()> {
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!("rate {from}->{to} is {rate}")));
        }
        if from != to && rate > 0.0 {
            *self.edges[from].entry(to).or_insert(0.0) += rate;
        }
        Ok(())
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.edges[from].get(&to).copied().unwrap_or(0.0)
    }

    pub fn out_rate(&self, i: usize) -> f64 {
        self.edges[i].values().sum()
    }

    /// `dp_j/dt = Σ_i p_i·r_ij − p_j·Σ_k r_jk`.
    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (i, row) in self.edges.iter().enumerate() {
            for (&j, &r) in row {
                out[j] += p[i] * r;
                out[i] -= p[i] * r;
            }
        }
        out
    }

    /// Strongly connected components (Kosaraju, iterative).
    fn components(&self) -> Vec<usize> {
        let n = self.len();
        let mut order = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut stack: Vec<(usize, Vec<usize>)> = vec![(s, self.edges[s].keys().copied().collect())];
            while let Some((v, pending)) = stack.last_mut() {
                if let Some(w) = pending.pop() {
                    if !seen[w] {
                        seen[w] = true;
                        let next = self.edges[w].keys().copied().collect();
                        stack.push((w, next));
                    }
                } else {
                    order.push(*v);
                    stack.pop();
                }
            }
        }
        let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, row) in self.edges.iter().enumerate() {
            for &j in row.keys() {
                reverse[j].push(i);
            }
        }
        let mut comp = vec![usize::MAX; n];
        let mut next_id = 0;
        for &s in order.iter().rev() {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next_id;
            let mut stack = vec![s];
            while let Some(v) = stack.pop() {
                for &u in &reverse[v] {
                    if comp[u] == usize::MAX {
                        comp[u] = next_id;
                        stack.push(u);
                    }
                }
            }
            next_id += 1;
        }
        comp
    }

    /// Closed communicating classes, each sorted ascending, ordered by smallest member.
    pub fn closed_classes(&self) -> Vec<Vec<usize>> {
        let comp = self.components();
        let count = comp.iter().copied().max().map_or(0, |m| m + 1);
        let mut leaks = vec![false; count];
        for (i, row) in self.edges.iter().enumerate() {
            if row.keys().any(|&j| comp[j] != comp[i]) {
                leaks[comp[i]] = true;
            }
        }
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); count];
        for (i, &c) in comp.iter().enumerate() {
            members[c].push(i);
        }
        let mut classes: Vec<Vec<usize>> =
            members.into_iter().zip(leaks).filter(|(_, l)| !l).map(|(m, _)| m).collect();
        classes.sort_by_key(|c| c[0]);
        classes
    }

    /// Stationary distribution supported on a single closed class; zero elsewhere.
    pub fn stationary(&self) -> Result<Vec<f64>> {
        let classes = self.closed_classes();
        if classes.len() != 1 {
            return Err(Error::DegenerateStationary { dimension: classes.len() });
        }
        let class = &classes[0];
        let local = gth(self, class);
        let mut p = vec![0.0; self.len()];
        for (&g, &v) in class.iter().zip(&local) {
            p[g] = v;
        }
        Ok(p)
    }
}

/// Grassmann–Taksar–Heyman elimination restricted to `members`.
///
/// Subtraction free, so every stationary probability keeps full relative
/// accuracy. Fill-in is tracked sparsely; banded chains stay cheap.
fn gth(graph: &RateGraph, members: &[usize]) -> Vec<f64> {
    let n = members.len();
    let mut pos = BTreeMap::new();
    for (k, &g) in members.iter().enumerate() {
        pos.insert(g, k);
    }
    let mut out: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    let mut inc: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    for (k, &g) in members.iter().enumerate() {
        for (j, &r) in &graph.edges[g] {
            if let Some(&l) = pos.get(j) {
                out[k].insert(l, r);
                inc[l].insert(k, r);
            }
        }
    }

    let mut sums = vec![0.0; n];
    let mut saved_in: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for k in (1..n).rev() {
        let outs: Vec<(usize, f64)> = out[k].iter().map(|(&j, &r)| (j, r)).collect();
        let ins: Vec<(usize, f64)> = inc[k].iter().map(|(&i, &r)| (i, r)).collect();
        let s: f64 = outs.iter().map(|x| x.1).sum();
        sums[k] = s;
        for &(i, _) in &ins {
            out[i].remove(&k);
        }
        for &(j, _) in &outs {
            inc[j].remove(&k);
        }
        if s > 0.0 {
            for &(i, rik) in &ins {
                for &(j, rkj) in &outs {
                    if i != j {
                        let add = rik * rkj / s;
                        *out[i].entry(j).or_insert(0.0) += add;
                        *inc[j].entry(i).or_insert(0.0) += add;
                    }
                }
            }
        }
        saved_in[k] = ins;
    }

    let mut p = vec![0.0; n];
    p[0] = 1.0;
    for k in 1..n {
        let acc: f64 = saved_in[k].iter().map(|&(i, r)| p[i] * r).sum();
        p[k] = if sums[k] > 0.0 { acc / sums[k] } else { 0.0 };
    }
    let total: f64 = p.iter().sum();
    p.iter().map(|x| x / total).collect()
}
