//! Polymers (connected generalized loops), their types and activity bounds,
//! and the polymer representation of the loop series.

mod enumerate;
mod expansion;

pub use enumerate::{enumerate_small_polymers, for_each_small_polymer, PolymerCaps};
pub(crate) use expansion::polymer_partition_by_sets;
pub use expansion::{
    brydges_criterion, cluster_coefficients, connected_graph_count, large_polymer_remainder,
    log_series_coefficients, mayer_truncated, small_polymer_partition, type_census, BrydgesQ,
    Mayer, PolymerPartition, Remainder, TypeCensus, UrsellTable, MAX_MAYER_ORDER,
};

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::loops::{GeneralizedLoop, LoopActivities};
use crate::tanner::TannerGraph;
use crate::{Error, Result};

/// A nonempty generalized loop that is connected as an edge subgraph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Polymer {
    lp: GeneralizedLoop,
    nodes: Vec<usize>,
}

impl Polymer {
    pub fn new(g: &TannerGraph, lp: GeneralizedLoop) -> Result<Self> {
        if lp.is_empty() {
            return Err(Error::invalid("the empty loop is not a polymer"));
        }
        let mut parts = decompose(g, &lp);
        if parts.len() != 1 {
            return Err(Error::invalid(format!(
                "loop has {} connected components",
                parts.len()
            )));
        }
        Ok(parts.pop().expect("one component"))
    }

    pub fn as_loop(&self) -> &GeneralizedLoop {
        &self.lp
    }

    pub fn edges(&self) -> &[usize] {
        self.lp.edges()
    }

    /// Node ids (`i` for variables, `n + a` for checks), sorted.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    /// `|γ|`, the number of nodes.
    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    /// True when the two polymers share a node.
    pub fn overlaps(&self, other: &Polymer) -> bool {
        let (mut x, mut y) = (self.nodes.iter().peekable(), other.nodes.iter().peekable());
        while let (Some(&&a), Some(&&b)) = (x.peek(), y.peek()) {
            match a.cmp(&b) {
                std::cmp::Ordering::Equal => return true,
                std::cmp::Ordering::Less => {
                    x.next();
                }
                std::cmp::Ordering::Greater => {
                    y.next();
                }
            }
        }
        false
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Splits a loop into its connected components, ordered by smallest node.
pub fn decompose(g: &TannerGraph, lp: &GeneralizedLoop) -> Vec<Polymer> {
    let n = g.num_vars();
    let mut parent: Vec<usize> = (0..g.num_nodes()).collect();
    for &e in lp.edges() {
        let (i, a) = g.edge(e);
        let (x, y) = (find(&mut parent, i), find(&mut parent, n + a));
        if x != y {
            parent[x.max(y)] = x.min(y);
        }
    }
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for &e in lp.edges() {
        let root = find(&mut parent, g.edge(e).0);
        match groups.iter_mut().find(|(r, _)| *r == root) {
            Some((_, edges)) => edges.push(e),
            None => groups.push((root, vec![e])),
        }
    }
    groups.sort_by_key(|(r, _)| *r);
    groups
        .into_iter()
        .map(|(_, edges)| {
            let lp = GeneralizedLoop::from_edges(g, &edges).expect("component of a loop is a loop");
            let nodes = lp.nodes(g);
            Polymer { lp, nodes }
        })
        .collect()
}

/// Induced-degree census `n_s` (variables, `s = 2..=l`) and `m_t`
/// (checks, `t = 2..=r`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PolymerType {
    n: Vec<usize>,
    m: Vec<usize>,
}

impl PolymerType {
    pub fn new(n: Vec<usize>, m: Vec<usize>) -> Self {
        Self { n, m }
    }

    pub fn of_loop(lp: &GeneralizedLoop, l: usize, r: usize) -> Result<Self> {
        let mut n = vec![0; l.saturating_sub(1)];
        let mut m = vec![0; r.saturating_sub(1)];
        for &(_, d) in lp.var_degrees() {
            *n.get_mut(d.wrapping_sub(2))
                .ok_or_else(|| Error::invalid(format!("variable degree {d} exceeds l={l}")))? += 1;
        }
        for &(_, d) in lp.check_degrees() {
            *m.get_mut(d.wrapping_sub(2))
                .ok_or_else(|| Error::invalid(format!("check degree {d} exceeds r={r}")))? += 1;
        }
        Ok(Self { n, m })
    }

    pub fn l(&self) -> usize {
        self.n.len() + 1
    }

    pub fn r(&self) -> usize {
        self.m.len() + 1
    }

    /// Number of variables with induced degree `s`.
    pub fn n_s(&self, s: usize) -> usize {
        s.checked_sub(2)
            .and_then(|k| self.n.get(k))
            .copied()
            .unwrap_or(0)
    }

    /// Number of checks with induced degree `t`.
    pub fn m_t(&self, t: usize) -> usize {
        t.checked_sub(2)
            .and_then(|k| self.m.get(k))
            .copied()
            .unwrap_or(0)
    }

    pub fn variables(&self) -> usize {
        self.n.iter().sum()
    }

    pub fn checks(&self) -> usize {
        self.m.iter().sum()
    }

    pub fn size(&self) -> usize {
        self.variables() + self.checks()
    }

    /// `(Σ s n_s, Σ t m_t)`; both count the edges.
    pub fn edge_counts(&self) -> (usize, usize) {
        let v = self.n.iter().enumerate().map(|(k, c)| (k + 2) * c).sum();
        let c = self.m.iter().enumerate().map(|(k, c)| (k + 2) * c).sum();
        (v, c)
    }

    pub fn handshake_holds(&self) -> bool {
        let (v, c) = self.edge_counts();
        v == c
    }

    /// `Σ_{t<r} (r − t) m_t`.
    pub fn check_deficit(&self) -> usize {
        let r = self.r();
        (2..r).map(|t| (r - t) * self.m_t(t)).sum()
    }

    /// `"n2,...,nl|m2,...,mr"`.
    pub fn key(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for PolymerType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[usize]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(f, "{}|{}", join(&self.n), join(&self.m))
    }
}

pub fn polymer_type(g: &TannerGraph, lp: &GeneralizedLoop) -> Result<PolymerType> {
    let (l, r) = g.require_regular()?;
    PolymerType::of_loop(lp, l, r)
}

/// Constants of the activity bound: `α_t` for `t = 2..r−1`, `α_r`, and
/// `β_s` for `s = 2..=l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub alpha: Vec<f64>,
    pub alpha_r: f64,
    pub beta: Vec<f64>,
}

impl BoundConstants {
    pub fn uniform(l: usize, r: usize, alpha: f64, alpha_r: f64, beta: f64) -> Self {
        Self {
            alpha: vec![alpha; r.saturating_sub(2)],
            alpha_r,
            beta: vec![beta; l.saturating_sub(1)],
        }
    }

    /// `α_t = β_s = 1.1`, `α_r = 0.9`.
    pub fn defaults(l: usize, r: usize) -> Self {
        Self::uniform(l, r, 1.1, 0.9, 1.1)
    }

    pub fn validate(&self, l: usize, r: usize) -> Result<()> {
        if self.alpha.len() != r.saturating_sub(2) || self.beta.len() != l.saturating_sub(1) {
            return Err(Error::invalid("bound constant vectors do not match (l, r)"));
        }
        if self.alpha.iter().chain(&self.beta).any(|&x| !(x > 1.0)) {
            return Err(Error::invalid("alpha_t and beta_s must exceed 1"));
        }
        if !(self.alpha_r > 0.0 && self.alpha_r < 1.0) {
            return Err(Error::invalid("alpha_r must lie in (0,1)"));
        }
        Ok(())
    }
}

/// `K̄(n, m)` at field magnitude `h`.
pub fn activity_bound(ty: &PolymerType, h: f64, consts: &BoundConstants) -> Result<f64> {
    let (l, r) = (ty.l(), ty.r());
    consts.validate(l, r)?;
    if !(h >= 0.0) {
        return Err(Error::invalid(format!("h={h} must be nonnegative")));
    }
    let full = 1.0 - consts.alpha_r * r as f64 * h * h;
    if full <= 0.0 {
        return Err(Error::invalid(format!(
            "alpha_r r h^2 = {} >= 1: bound invalid at h={h}",
            1.0 - full
        )));
    }
    let mut bound = full.powi(ty.m_t(r) as i32);
    for t in 2..r {
        bound *= (consts.alpha[t - 2] * h.powi((r - t) as i32)).powi(ty.m_t(t) as i32);
    }
    for s in 2..=l {
        let beta = consts.beta[s - 2];
        let sf = s as f64;
        let factor = if s % 2 == 0 {
            1.0 + beta / 2.0 * sf * (sf - 1.0) * h * h
        } else {
            beta * (sf - 1.0) * h
        };
        bound *= factor.powi(ty.n_s(s) as i32);
    }
    Ok(bound)
}

/// `c = r − (2 + r) / (3 − l(1 − κ))`, defined when both the denominator and
/// `c` are positive.
pub fn exponent_c(l: usize, r: usize, kappa: f64) -> Result<f64> {
    let (lf, rf) = (l as f64, r as f64);
    let denom = 3.0 - lf * (1.0 - kappa);
    let lower = 1.0 - 2.0 * (rf - 1.0) / (lf * rf);
    if !(kappa > 0.0 && kappa < 1.0) || denom <= 0.0 || kappa <= lower + 1e-12 {
        return Err(Error::invalid(format!(
            "kappa={kappa} outside the admissible interval ({lower}, {})",
            1.0 - 1.0 / lf
        )));
    }
    let c = rf - (2.0 + rf) / denom;
    if c <= 0.0 {
        return Err(Error::invalid(format!(
            "c={c} is not positive at kappa={kappa}"
        )));
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolymerBoundCheck {
    pub size: usize,
    pub activity: f64,
    /// `h^{c|γ|/2}`.
    pub activity_rhs: f64,
    pub activity_holds: bool,
    /// `Σ_{t<r} (r − t) m_t`.
    pub degree_lhs: f64,
    /// `c |γ|`.
    pub degree_rhs: f64,
    pub degree_holds: bool,
    /// Checks adjacent in the full graph to the polymer's variables.
    pub boundary: usize,
    /// `κ l Σ n_s`.
    pub expansion_rhs: f64,
    pub expansion_holds: bool,
    /// `Σ_{t<r} m_t + Σ_s (l − s) n_s`, the boundary estimate without full checks.
    pub boundary_estimate: usize,
    pub boundary_estimate_holds: bool,
    /// `Σ_{t≤r} m_t + Σ_s (l − s) n_s`, an upper bound on `boundary`.
    pub boundary_upper: usize,
}

/// Evaluates the small-polymer activity bound, the degree inequality and the
/// intermediate boundary estimates for one polymer. Violations are results.
pub fn check_polymer_bound(
    g: &TannerGraph,
    polymer: &Polymer,
    activities: &LoopActivities,
    h: f64,
    c: f64,
    kappa: f64,
) -> Result<PolymerBoundCheck> {
    let (l, r) = g.require_regular()?;
    let ty = PolymerType::of_loop(polymer.as_loop(), l, r)?;
    let size = polymer.size();
    let activity = activities.weight(g, polymer.as_loop())?.abs();
    let activity_rhs = h.powf(c * size as f64 / 2.0);
    let degree_lhs = ty.check_deficit() as f64;
    let degree_rhs = c * size as f64;
    let vars: Vec<usize> = polymer
        .as_loop()
        .var_degrees()
        .iter()
        .map(|&(i, _)| i)
        .collect();
    let boundary = vars
        .iter()
        .flat_map(|&i| g.var_neighbors(i))
        .collect::<HashSet<_>>()
        .len();
    let expansion_rhs = kappa * l as f64 * ty.variables() as f64;
    let outside: usize = (2..=l).map(|s| (l - s) * ty.n_s(s)).sum();
    let partial: usize = (2..r).map(|t| ty.m_t(t)).sum();
    let boundary_estimate = partial + outside;
    Ok(PolymerBoundCheck {
        size,
        activity,
        activity_rhs,
        activity_holds: activity <= activity_rhs,
        degree_lhs,
        degree_rhs,
        degree_holds: degree_lhs >= degree_rhs - 1e-12,
        boundary,
        expansion_rhs,
        expansion_holds: boundary as f64 >= expansion_rhs - 1e-9,
        boundary_estimate,
        boundary_estimate_holds: boundary_estimate as f64 >= expansion_rhs - 1e-9,
        boundary_upper: boundary_estimate + ty.m_t(r),
    })
}
