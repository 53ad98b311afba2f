//! Tanner graphs of regular LDPC codes.
//!
//! A [`TannerGraph`] is an immutable simple bipartite graph between `n`
//! variable nodes and `m` check nodes. Edges are stored once, sorted by
//! `(variable, check)`, and every message or loop in the crate is indexed by
//! these edge ids. The theorem pipeline requires `(l, r)`-biregular graphs;
//! general bipartite graphs are accepted so that trees and single checks can
//! serve as small controls.

mod alist;
pub(crate) mod expander;
mod gf2;

pub use alist::{load_alist, save_alist};
pub use expander::{
    expansion_exponent, is_expander, kappa_interval, solve_lambda0, ExpansionCheck, Lambda0,
    DEFAULT_SUBSET_CAP,
};
pub use gf2::BinaryMatrix;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Maximum number of whole-matching draws before [`generate_regular`] gives up.
pub const DEFAULT_REJECTION_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TannerGraph {
    n: usize,
    m: usize,
    edges: Vec<(usize, usize)>,
    var_edges: Vec<Vec<usize>>,
    check_edges: Vec<Vec<usize>>,
}

impl TannerGraph {
    /// Builds a graph from `(variable, check)` pairs in any order.
    ///
    /// Fails on out-of-range endpoints and on parallel edges.
    pub fn from_edges(n: usize, m: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut sorted = edges.to_vec();
        sorted.sort_unstable();
        for &(i, a) in &sorted {
            if i >= n || a >= m {
                return Err(Error::invalid(format!(
                    "edge ({i}, {a}) out of range for n={n}, m={m}"
                )));
            }
        }
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::invalid(format!("parallel edge {:?}", w[0])));
        }
        let mut var_edges = vec![Vec::new(); n];
        let mut check_edges = vec![Vec::new(); m];
        for (e, &(i, a)) in sorted.iter().enumerate() {
            var_edges[i].push(e);
            check_edges[a].push(e);
        }
        Ok(Self {
            n,
            m,
            edges: sorted,
            var_edges,
            check_edges,
        })
    }

    /// Builds a graph and additionally requires it to be `(l, r)`-biregular.
    pub fn regular_from_edges(
        n: usize,
        m: usize,
        l: usize,
        r: usize,
        edges: &[(usize, usize)],
    ) -> Result<Self> {
        let g = Self::from_edges(n, m, edges)?;
        match g.regular_degrees() {
            Some((gl, gr)) if gl == l && gr == r => Ok(g),
            _ => Err(Error::invalid(format!("graph is not ({l},{r})-biregular"))),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn num_checks(&self) -> usize {
        self.m
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Total node count `n + m`. Node ids are `0..n` for variables and
    /// `n..n+m` for checks.
    pub fn num_nodes(&self) -> usize {
        self.n + self.m
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    /// Edge ids incident to variable `i`, ordered by check index.
    pub fn var_edges(&self, i: usize) -> &[usize] {
        &self.var_edges[i]
    }

    /// Edge ids incident to check `a`, ordered by variable index.
    pub fn check_edges(&self, a: usize) -> &[usize] {
        &self.check_edges[a]
    }

    /// Sorted check neighbours of variable `i`.
    pub fn var_neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.var_edges[i].iter().map(move |&e| self.edges[e].1)
    }

    /// Sorted variable neighbours of check `a`.
    pub fn check_neighbors(&self, a: usize) -> impl Iterator<Item = usize> + '_ {
        self.check_edges[a].iter().map(move |&e| self.edges[e].0)
    }

    pub fn var_degree(&self, i: usize) -> usize {
        self.var_edges[i].len()
    }

    pub fn check_degree(&self, a: usize) -> usize {
        self.check_edges[a].len()
    }

    pub fn max_var_degree(&self) -> usize {
        self.var_edges.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn max_check_degree(&self) -> usize {
        self.check_edges.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// `Some((l, r))` when every variable has degree `l` and every check degree `r`.
    pub fn regular_degrees(&self) -> Option<(usize, usize)> {
        let l = self.var_edges.first()?.len();
        let r = self.check_edges.first()?.len();
        let var_ok = self.var_edges.iter().all(|v| v.len() == l);
        let check_ok = self.check_edges.iter().all(|c| c.len() == r);
        (var_ok && check_ok).then_some((l, r))
    }

    /// Like [`regular_degrees`](Self::regular_degrees) but as an error for pipelines
    /// that need biregularity.
    pub fn require_regular(&self) -> Result<(usize, usize)> {
        self.regular_degrees()
            .ok_or_else(|| Error::invalid("operation requires an (l,r)-biregular graph"))
    }

    /// Returns the same graph with variables renamed by `var_perm[i]` and
    /// checks by `check_perm[a]`.
    pub fn relabeled(&self, var_perm: &[usize], check_perm: &[usize]) -> Result<Self> {
        if var_perm.len() != self.n || check_perm.len() != self.m {
            return Err(Error::invalid("permutation length mismatch"));
        }
        let edges: Vec<_> = self
            .edges
            .iter()
            .map(|&(i, a)| (var_perm[i], check_perm[a]))
            .collect();
        Self::from_edges(self.n, self.m, &edges)
    }

    /// Edge id of `(i, a)`, if present.
    pub fn edge_id(&self, i: usize, a: usize) -> Option<usize> {
        self.var_edges
            .get(i)?
            .iter()
            .copied()
            .find(|&e| self.edges[e].1 == a)
    }

    /// The `m × n` parity-check matrix: entry `(a, i)` is one iff `(i, a)` is an edge.
    pub fn parity_check_matrix(&self) -> BinaryMatrix {
        let mut h = BinaryMatrix::zeros(self.m, self.n);
        for &(i, a) in &self.edges {
            h.set(a, i, true);
        }
        h
    }
}

/// Draws a uniformly random simple `(l, r)`-biregular graph on `n` variables.
///
/// A configuration-model matching of the `n·l` half-edges is drawn and rejected
/// as a whole whenever it produces a parallel edge.
pub fn generate_regular(n: usize, l: usize, r: usize, seed: u64) -> Result<TannerGraph> {
    generate_regular_with_budget(n, l, r, seed, DEFAULT_REJECTION_BUDGET)
}

pub fn generate_regular_with_budget(
    n: usize,
    l: usize,
    r: usize,
    seed: u64,
    budget: usize,
) -> Result<TannerGraph> {
    if l < 2 {
        return Err(Error::Infeasible(format!(
            "variable degree l={l} must be >= 2"
        )));
    }
    if r == 0 || !(n * l).is_multiple_of(r) {
        return Err(Error::Infeasible(format!(
            "n*l = {} is not divisible by r = {r}",
            n * l
        )));
    }
    if r > n {
        return Err(Error::Infeasible(format!("r={r} exceeds n={n}")));
    }
    let m = n * l / r;
    if l > m {
        return Err(Error::Infeasible(format!("l={l} exceeds m={m}")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stubs: Vec<usize> = (0..m).flat_map(|a| std::iter::repeat_n(a, r)).collect();
    let mut edges = Vec::with_capacity(n * l);
    'attempt: for _ in 0..budget {
        stubs.shuffle(&mut rng);
        edges.clear();
        for (i, chunk) in stubs.chunks(l).enumerate() {
            for (k, &a) in chunk.iter().enumerate() {
                if chunk[..k].contains(&a) {
                    continue 'attempt;
                }
                edges.push((i, a));
            }
        }
        return TannerGraph::from_edges(n, m, &edges);
    }
    Err(Error::RejectionBudget(budget))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn triple_check() -> TannerGraph {
        let edges: Vec<_> = (0..6).flat_map(|i| (0..3).map(move |a| (i, a))).collect();
        TannerGraph::from_edges(6, 3, &edges).unwrap()
    }

    #[test]
    fn generate_counts() {
        let g = generate_regular(6, 3, 6, 1).unwrap();
        assert_eq!((g.num_checks(), g.num_edges()), (3, 18));
        assert_eq!(g, triple_check());
        let g = generate_regular(8, 3, 4, 7).unwrap();
        assert_eq!((g.num_checks(), g.num_edges()), (6, 24));
        assert_eq!(g.regular_degrees(), Some((3, 4)));
    }

    #[test]
    fn generate_infeasible() {
        assert!(matches!(
            generate_regular(5, 3, 4, 0),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(
            generate_regular(4, 3, 6, 0),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(
            generate_regular(6, 1, 3, 0),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn generate_budget_exhausted() {
        assert!(matches!(
            generate_regular_with_budget(12, 3, 6, 3, 0),
            Err(Error::RejectionBudget(0))
        ));
    }

    #[test]
    fn same_seed_same_graph() {
        let a = generate_regular(24, 3, 6, 99).unwrap();
        let b = generate_regular(24, 3, 6, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn neighbor_lists_sorted_and_consistent() {
        let g = generate_regular(20, 3, 4, 5).unwrap();
        for i in 0..g.num_vars() {
            let nb: Vec<_> = g.var_neighbors(i).collect();
            assert!(nb.windows(2).all(|w| w[0] < w[1]));
            for a in nb {
                assert!(g.check_neighbors(a).any(|j| j == i));
            }
        }
        for a in 0..g.num_checks() {
            let nb: Vec<_> = g.check_neighbors(a).collect();
            assert!(nb.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn parallel_edges_rejected() {
        assert!(TannerGraph::from_edges(2, 1, &[(0, 0), (0, 0)]).is_err());
        assert!(TannerGraph::from_edges(2, 1, &[(2, 0)]).is_err());
    }

    #[test]
    fn parity_matrix_of_triple_check() {
        let h = triple_check().parity_check_matrix();
        for a in 0..3 {
            assert_eq!(h.row_weight(a), 6);
        }
        assert_eq!(h.rank(), 1);
    }

    #[test]
    fn parity_matrix_row_and_column_sums() {
        let g = generate_regular(12, 3, 4, 11).unwrap();
        let h = g.parity_check_matrix();
        for a in 0..g.num_checks() {
            assert_eq!(h.row_weight(a), 4);
        }
        for i in 0..g.num_vars() {
            assert_eq!((0..h.rows()).filter(|&a| h.get(a, i)).count(), 3);
        }
        assert!(h.rank() <= g.num_checks().min(g.num_vars()));
    }
}
