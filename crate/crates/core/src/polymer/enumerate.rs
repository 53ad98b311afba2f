//! Enumeration of small polymers.
//!
//! Connected node sets of bounded size are grown with the ESU scheme, which
//! visits each connected set exactly once. For each node set whose induced
//! subgraph has minimum degree two, the spanning edge subsets with every
//! node of degree at least two are enumerated and kept when connected.

use super::{decompose, Polymer};
use crate::loops::GeneralizedLoop;
use crate::tanner::expander::max_small_size;
use crate::tanner::TannerGraph;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolymerCaps {
    pub max_polymers: usize,
    /// Refuse node sets with more induced edges than this.
    pub max_induced_edges: usize,
    /// Bound on disjoint polymer sets and on Mayer tuples visited.
    pub max_terms: u128,
}

impl Default for PolymerCaps {
    fn default() -> Self {
        Self {
            max_polymers: 5_000_000,
            max_induced_edges: 40,
            max_terms: 2_000_000_000,
        }
    }
}

fn node_neighbors(g: &TannerGraph) -> Vec<Vec<usize>> {
    let n = g.num_vars();
    (0..g.num_nodes())
        .map(|u| {
            if u < n {
                g.var_neighbors(u).map(|a| n + a).collect()
            } else {
                g.check_neighbors(u - n).collect()
            }
        })
        .collect()
}

struct Esu<'a, F> {
    g: &'a TannerGraph,
    adj: Vec<Vec<usize>>,
    mark: Vec<u32>,
    limit: usize,
    max_edges: usize,
    visit: F,
    error: Option<Error>,
}

impl<F: FnMut(Polymer)> Esu<'_, F> {
    fn toggle(&mut self, w: usize, add: bool) {
        let step = |m: &mut u32| if add { *m += 1 } else { *m -= 1 };
        step(&mut self.mark[w]);
        for k in 0..self.adj[w].len() {
            let x = self.adj[w][k];
            step(&mut self.mark[x]);
        }
    }

    fn grow(&mut self, sub: &mut Vec<usize>, ext: &[usize], root: usize) {
        if self.error.is_some() {
            return;
        }
        self.emit(sub);
        if sub.len() == self.limit {
            return;
        }
        let mut ext = ext.to_vec();
        while let Some(w) = ext.pop() {
            let mut next = ext.clone();
            next.extend(
                self.adj[w]
                    .iter()
                    .copied()
                    .filter(|&u| u > root && self.mark[u] == 0),
            );
            self.toggle(w, true);
            sub.push(w);
            self.grow(sub, &next, root);
            sub.pop();
            self.toggle(w, false);
        }
    }

    fn emit(&mut self, sub: &[usize]) {
        let n = self.g.num_vars();
        if sub.len() < 4 {
            return;
        }
        let inside = |u: usize| sub.contains(&u);
        let mut local_edges = Vec::new();
        for (k, &u) in sub.iter().enumerate() {
            let deg = self.adj[u].iter().filter(|&&x| inside(x)).count();
            if deg < 2 {
                return;
            }
            if u < n {
                for &e in self.g.var_edges(u) {
                    let c = n + self.g.edge(e).1;
                    if let Some(j) = sub.iter().position(|&x| x == c) {
                        local_edges.push((e, k, j));
                    }
                }
            }
        }
        if local_edges.len() > self.max_edges {
            self.error = Some(Error::CapExceeded {
                what: "induced edges of a polymer node set",
                needed: local_edges.len() as u128,
                cap: self.max_edges as u128,
            });
            return;
        }
        let mut rem = vec![0usize; sub.len()];
        for &(_, a, b) in &local_edges {
            rem[a] += 1;
            rem[b] += 1;
        }
        let mut chosen = vec![0usize; sub.len()];
        let mut picked = Vec::with_capacity(local_edges.len());
        self.spanning(&local_edges, 0, &mut rem, &mut chosen, &mut picked);
    }

    fn spanning(
        &mut self,
        edges: &[(usize, usize, usize)],
        k: usize,
        rem: &mut [usize],
        chosen: &mut [usize],
        picked: &mut Vec<usize>,
    ) {
        if k == edges.len() {
            if connected(edges, picked, chosen.len()) {
                let ids: Vec<usize> = picked.iter().map(|&j| edges[j].0).collect();
                let lp = GeneralizedLoop::from_edges(self.g, &ids).expect("degrees checked");
                let mut parts = decompose(self.g, &lp);
                (self.visit)(parts.pop().expect("connected"));
            }
            return;
        }
        let (_, a, b) = edges[k];
        rem[a] -= 1;
        rem[b] -= 1;
        chosen[a] += 1;
        chosen[b] += 1;
        picked.push(k);
        self.spanning(edges, k + 1, rem, chosen, picked);
        picked.pop();
        chosen[a] -= 1;
        chosen[b] -= 1;
        if chosen[a] + rem[a] >= 2 && chosen[b] + rem[b] >= 2 {
            self.spanning(edges, k + 1, rem, chosen, picked);
        }
        rem[a] += 1;
        rem[b] += 1;
    }
}

fn connected(edges: &[(usize, usize, usize)], picked: &[usize], nodes: usize) -> bool {
    let mut parent: Vec<usize> = (0..nodes).collect();
    let mut parts = nodes;
    for &j in picked {
        let (_, a, b) = edges[j];
        let (x, y) = (super::find(&mut parent, a), super::find(&mut parent, b));
        if x != y {
            parent[x] = y;
            parts -= 1;
        }
    }
    parts == 1
}

/// Calls `visit` once for every polymer with fewer than `λn` nodes.
pub fn for_each_small_polymer(
    g: &TannerGraph,
    lambda: f64,
    caps: &PolymerCaps,
    visit: impl FnMut(Polymer),
) -> Result<()> {
    if !(lambda > 0.0) {
        return Err(Error::invalid(format!("lambda={lambda} must be positive")));
    }
    let limit = max_small_size(lambda, g.num_vars()).min(g.num_nodes());
    let mut esu = Esu {
        g,
        adj: node_neighbors(g),
        mark: vec![0; g.num_nodes()],
        limit,
        max_edges: caps.max_induced_edges,
        visit,
        error: None,
    };
    if limit < 4 {
        return Ok(());
    }
    for v in 0..g.num_nodes() {
        let ext: Vec<usize> = esu.adj[v].iter().copied().filter(|&u| u > v).collect();
        esu.toggle(v, true);
        esu.grow(&mut vec![v], &ext, v);
        esu.toggle(v, false);
        if let Some(e) = esu.error.take() {
            return Err(e);
        }
    }
    Ok(())
}

/// All polymers with fewer than `λn` nodes, sorted.
pub fn enumerate_small_polymers(
    g: &TannerGraph,
    lambda: f64,
    caps: &PolymerCaps,
) -> Result<Vec<Polymer>> {
    let mut out = Vec::new();
    let mut overflow = false;
    for_each_small_polymer(g, lambda, caps, |p| {
        if out.len() < caps.max_polymers {
            out.push(p);
        } else {
            overflow = true;
        }
    })?;
    if overflow {
        return Err(Error::CapExceeded {
            what: "small polymer count",
            needed: caps.max_polymers as u128 + 1,
            cap: caps.max_polymers as u128,
        });
    }
    out.sort();
    Ok(out)
}
