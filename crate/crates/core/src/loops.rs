//! Generalized loops and the loop series.
//!
//! A generalized loop is a set of edges in which every touched node has
//! induced degree at least two; it need not be connected, and the empty set
//! is a loop. At a BP fixed point the partition function factors as
//!
//! ```text
//! Z = exp(n · f_Bethe) · Σ_g K(g),    K(g) = Π_{i∈g} K_i · Π_{a∈g} K_a,
//! ```
//!
//! with `K(∅) = 1`. The local activities are normalized central moments of
//! the BP beliefs: with `m_i` the magnetization of variable `i` and `b_a` the
//! check belief, `K_a = E_{b_a}[Π_{i∈∂a∩g} (σ_i − m_i)]` and
//! `K_i = E_{b_i}[(σ_i − m_i)^{d}] / (1 − m_i²)^{d}` for induced degree `d`.

use serde::{Deserialize, Serialize};

use crate::bethe::bethe_free_energy;
use crate::bp::{fixed_point_residual, MessageSet};
use crate::exact::{log_partition, ExactCaps};
use crate::tanner::TannerGraph;
use crate::{Error, Result};

/// Edge subsets of graphs with at most 128 edges.
pub type EdgeMask = u128;
pub const MAX_MASK_EDGES: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Enumeration {
    /// Filter all `2^|E|` edge subsets.
    BruteForce,
    /// Check-by-check depth-first search with dangling-edge pruning.
    Dfs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoopCaps {
    pub brute_force_max_edges: usize,
    /// Refuse to materialize more loops than this in [`enumerate_generalized_loops`].
    pub max_loops: usize,
}

impl Default for LoopCaps {
    fn default() -> Self {
        Self {
            brute_force_max_edges: 26,
            max_loops: 20_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GeneralizedLoop {
    edges: Vec<usize>,
    var_degrees: Vec<(usize, usize)>,
    check_degrees: Vec<(usize, usize)>,
}

impl GeneralizedLoop {
    pub fn empty() -> Self {
        Self {
            edges: Vec::new(),
            var_degrees: Vec::new(),
            check_degrees: Vec::new(),
        }
    }

    /// Validates that `edges` has no dangling edge and builds the loop.
    pub fn from_edges(g: &TannerGraph, edges: &[usize]) -> Result<Self> {
        let mut edges = edges.to_vec();
        edges.sort_unstable();
        edges.dedup();
        if let Some(&e) = edges.iter().find(|&&e| e >= g.num_edges()) {
            return Err(Error::invalid(format!("edge id {e} out of range")));
        }
        let mut vdeg = vec![0usize; g.num_vars()];
        let mut cdeg = vec![0usize; g.num_checks()];
        for &e in &edges {
            let (i, a) = g.edge(e);
            vdeg[i] += 1;
            cdeg[a] += 1;
        }
        if vdeg.iter().chain(&cdeg).any(|&d| d == 1) {
            return Err(Error::invalid("edge set has a dangling edge"));
        }
        let collect = |deg: Vec<usize>| {
            deg.into_iter()
                .enumerate()
                .filter(|&(_, d)| d > 0)
                .collect::<Vec<_>>()
        };
        Ok(Self {
            edges,
            var_degrees: collect(vdeg),
            check_degrees: collect(cdeg),
        })
    }

    pub fn from_mask(g: &TannerGraph, mask: EdgeMask) -> Result<Self> {
        Self::from_edges(g, &mask_edges(mask))
    }

    pub fn edges(&self) -> &[usize] {
        &self.edges
    }

    /// `(variable, induced degree)` for every touched variable, sorted.
    pub fn var_degrees(&self) -> &[(usize, usize)] {
        &self.var_degrees
    }

    /// `(check, induced degree)` for every touched check, sorted.
    pub fn check_degrees(&self) -> &[(usize, usize)] {
        &self.check_degrees
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// `|g|`: the number of touched nodes, variables plus checks.
    pub fn size(&self) -> usize {
        self.var_degrees.len() + self.check_degrees.len()
    }

    /// Touched node ids (`i` for variables, `n + a` for checks), sorted.
    pub fn nodes(&self, g: &TannerGraph) -> Vec<usize> {
        self.var_degrees
            .iter()
            .map(|&(i, _)| i)
            .chain(self.check_degrees.iter().map(|&(a, _)| g.num_vars() + a))
            .collect()
    }

    pub fn mask(&self) -> Result<EdgeMask> {
        if self.edges.last().is_some_and(|&e| e >= MAX_MASK_EDGES) {
            return Err(Error::invalid("loop does not fit an edge mask"));
        }
        Ok(self.edges.iter().fold(0, |m, &e| m | (1 << e)))
    }
}

pub fn mask_edges(mask: EdgeMask) -> Vec<usize> {
    let mut out = Vec::with_capacity(mask.count_ones() as usize);
    let mut bits = mask;
    while bits != 0 {
        out.push(bits.trailing_zeros() as usize);
        bits &= bits - 1;
    }
    out
}

/// True when every node touched by `edges` has induced degree at least two.
pub fn is_generalized_loop(g: &TannerGraph, edges: &[usize]) -> bool {
    GeneralizedLoop::from_edges(g, edges).is_ok()
}

fn require_mask_edges(g: &TannerGraph) -> Result<()> {
    if g.num_edges() > MAX_MASK_EDGES {
        return Err(Error::CapExceeded {
            what: "loop enumeration edge count",
            needed: g.num_edges() as u128,
            cap: MAX_MASK_EDGES as u128,
        });
    }
    Ok(())
}

/// Calls `visit` once per generalized loop (including the empty one).
pub fn for_each_loop(
    g: &TannerGraph,
    mode: Enumeration,
    caps: &LoopCaps,
    mut visit: impl FnMut(EdgeMask),
) -> Result<()> {
    require_mask_edges(g)?;
    match mode {
        Enumeration::BruteForce => {
            let e = g.num_edges();
            if e > caps.brute_force_max_edges {
                return Err(Error::CapExceeded {
                    what: "brute-force loop enumeration",
                    needed: 1u128 << e,
                    cap: 1u128 << caps.brute_force_max_edges,
                });
            }
            let ends: Vec<(usize, usize)> = g
                .edges()
                .iter()
                .map(|&(i, a)| (i, g.num_vars() + a))
                .collect();
            let mut deg = vec![0u8; g.num_nodes()];
            for mask in 0u128..(1u128 << e) {
                deg.iter_mut().for_each(|d| *d = 0);
                let mut bits = mask;
                while bits != 0 {
                    let k = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    deg[ends[k].0] += 1;
                    deg[ends[k].1] += 1;
                }
                if deg.iter().all(|&d| d != 1) {
                    visit(mask);
                }
            }
            Ok(())
        }
        Enumeration::Dfs => {
            let cands = check_candidates(g, |_, _| Ok(1.0))?;
            dfs_loops(g, &cands, |_, _| 1.0, |mask, _| visit(mask));
            Ok(())
        }
    }
}

/// Materializes every generalized loop, sorted by edge set.
pub fn enumerate_generalized_loops(
    g: &TannerGraph,
    mode: Enumeration,
    caps: &LoopCaps,
) -> Result<Vec<GeneralizedLoop>> {
    let mut masks = Vec::new();
    let mut overflow = false;
    for_each_loop(g, mode, caps, |m| {
        if masks.len() < caps.max_loops {
            masks.push(m);
        } else {
            overflow = true;
        }
    })?;
    if overflow {
        return Err(Error::CapExceeded {
            what: "materialized loop count",
            needed: caps.max_loops as u128 + 1,
            cap: caps.max_loops as u128,
        });
    }
    let mut loops = masks
        .into_iter()
        .map(|m| GeneralizedLoop::from_mask(g, m))
        .collect::<Result<Vec<_>>>()?;
    loops.sort();
    Ok(loops)
}

struct Candidate {
    mask: EdgeMask,
    weight: f64,
}

/// Per check, every admissible local edge selection (size 0 or at least 2)
/// with its weight.
fn check_candidates(
    g: &TannerGraph,
    weight: impl Fn(usize, u64) -> Result<f64>,
) -> Result<Vec<Vec<Candidate>>> {
    (0..g.num_checks())
        .map(|a| {
            let edges = g.check_edges(a);
            if edges.len() > 30 {
                return Err(Error::invalid(
                    "check degree too large for subset enumeration",
                ));
            }
            let mut out = Vec::new();
            for sel in 0u64..(1u64 << edges.len()) {
                if sel.count_ones() == 1 {
                    continue;
                }
                let mask = edges
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| (sel >> k) & 1 == 1)
                    .fold(0u128, |m, (_, &e)| m | (1 << e));
                out.push(Candidate {
                    mask,
                    weight: weight(a, sel)?,
                });
            }
            Ok(out)
        })
        .collect()
}

/// Depth-first search over checks. Variables are finalized after their last
/// check; a finalized variable with induced degree one prunes the branch.
fn dfs_loops(
    g: &TannerGraph,
    cands: &[Vec<Candidate>],
    vertex_weight: impl Fn(usize, usize) -> f64,
    mut leaf: impl FnMut(EdgeMask, f64),
) {
    let mut finishing = vec![Vec::new(); g.num_checks()];
    for i in 0..g.num_vars() {
        if let Some(last) = g.var_neighbors(i).last() {
            finishing[last].push(i);
        }
    }
    let mut deg = vec![0usize; g.num_vars()];
    struct Ctx<'a, F, L> {
        g: &'a TannerGraph,
        cands: &'a [Vec<Candidate>],
        finishing: Vec<Vec<usize>>,
        vertex_weight: F,
        leaf: &'a mut L,
    }
    fn rec<F: Fn(usize, usize) -> f64, L: FnMut(EdgeMask, f64)>(
        ctx: &mut Ctx<'_, F, L>,
        a: usize,
        mask: EdgeMask,
        weight: f64,
        deg: &mut [usize],
    ) {
        if a == ctx.g.num_checks() {
            (ctx.leaf)(mask, weight);
            return;
        }
        let edges = ctx.g.check_edges(a);
        for c in &ctx.cands[a] {
            for &e in edges {
                if (c.mask >> e) & 1 == 1 {
                    deg[ctx.g.edge(e).0] += 1;
                }
            }
            let mut w = weight * c.weight;
            let mut ok = true;
            for &i in &ctx.finishing[a] {
                match deg[i] {
                    0 => {}
                    1 => {
                        ok = false;
                        break;
                    }
                    d => w *= (ctx.vertex_weight)(i, d),
                }
            }
            if ok {
                rec(ctx, a + 1, mask | c.mask, w, deg);
            }
            for &e in edges {
                if (c.mask >> e) & 1 == 1 {
                    deg[ctx.g.edge(e).0] -= 1;
                }
            }
        }
    }
    let mut ctx = Ctx {
        g,
        cands,
        finishing,
        vertex_weight,
        leaf: &mut leaf,
    };
    rec(&mut ctx, 0, 0, 1.0, &mut deg);
}

/// `K_i` for a variable of induced degree `d` and magnetization `m`:
/// `[(1−m)^{d−1} + (−1)^d (1+m)^{d−1}] / [2 (1−m²)^{d−1}]`.
pub fn vertex_activity(d: usize, m: f64) -> Result<f64> {
    if d < 2 {
        return Err(Error::invalid(format!("induced degree {d} < 2")));
    }
    if !(m.abs() < 1.0) {
        return Err(Error::Singular(format!(
            "vertex magnetization |m|={} >= 1",
            m.abs()
        )));
    }
    let k = (d - 1) as i32;
    let sign = if d.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(((1.0 - m).powi(k) + sign * (1.0 + m).powi(k)) / (2.0 * (1.0 - m * m).powi(k)))
}

/// `K_a` from the tanh of the incoming messages (in check-edge order), the
/// selected positions `sel` (bit `k` = k-th edge of the check) and the
/// magnetizations of the check's variables (same order).
pub fn check_activity_from_tanh(tanh: &[f64], sel: u64, beliefs: &[f64]) -> Result<f64> {
    let d = sel.count_ones() as usize;
    if d == 0 {
        return Ok(1.0);
    }
    if d == 1 {
        return Err(Error::invalid(
            "check selection of size one is a dangling edge",
        ));
    }
    let total: f64 = tanh.iter().product();
    if total <= -1.0 {
        return Err(Error::Singular("1 + Π tanh η vanishes".into()));
    }
    let mut value = 1.0;
    for (k, &t) in tanh.iter().enumerate() {
        if (sel >> k) & 1 == 1 {
            let cavity: f64 = tanh
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .map(|(_, &x)| x)
                .product();
            let denom = 1.0 - cavity * cavity;
            let m = beliefs[k];
            if denom <= 0.0 || m.abs() >= 1.0 {
                return Err(Error::Singular("saturated cavity product or belief".into()));
            }
            value *= ((1.0 - t * t) / denom).sqrt() * (1.0 - m * m).sqrt();
        } else {
            value *= t;
        }
    }
    let sign = if d.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(value * (1.0 + sign * total.powi(d as i32 - 1)) / (1.0 + total))
}

/// `K_a` for check `a` with the loop's edges at `a` given as edge ids.
pub fn check_activity(
    g: &TannerGraph,
    a: usize,
    selected_edges: &[usize],
    msgs: &MessageSet,
    beliefs: &[f64],
) -> Result<f64> {
    let edges = g.check_edges(a);
    let tanh: Vec<f64> = edges.iter().map(|&e| msgs.eta[e].tanh()).collect();
    let mut sel = 0u64;
    for &e in selected_edges {
        let k = edges
            .iter()
            .position(|&x| x == e)
            .ok_or_else(|| Error::invalid(format!("edge {e} is not incident to check {a}")))?;
        sel |= 1 << k;
    }
    let bel: Vec<f64> = g.check_neighbors(a).map(|i| beliefs[i]).collect();
    check_activity_from_tanh(&tanh, sel, &bel)
}

/// Variable magnetizations `m_i = tanh(h_i + Σ_{a∈∂i} η̂_{a→i})`.
pub fn beliefs(g: &TannerGraph, fields: &[f64], msgs: &MessageSet) -> Vec<f64> {
    (0..g.num_vars())
        .map(|i| {
            let s: f64 = g.var_edges(i).iter().map(|&e| msgs.eta_hat[e]).sum();
            (fields[i] + s).tanh()
        })
        .collect()
}

/// Precomputed local data for evaluating many loop activities on one message set.
#[derive(Debug, Clone)]
pub struct LoopActivities {
    beliefs: Vec<f64>,
    check_tanh: Vec<Vec<f64>>,
    check_beliefs: Vec<Vec<f64>>,
}

impl LoopActivities {
    pub fn new(g: &TannerGraph, fields: &[f64], msgs: &MessageSet) -> Result<Self> {
        msgs.check_shape(g)?;
        if fields.len() != g.num_vars() {
            return Err(Error::invalid("field vector length differs from n"));
        }
        let beliefs = beliefs(g, fields, msgs);
        let check_tanh = (0..g.num_checks())
            .map(|a| {
                g.check_edges(a)
                    .iter()
                    .map(|&e| msgs.eta[e].tanh())
                    .collect()
            })
            .collect();
        let check_beliefs = (0..g.num_checks())
            .map(|a| g.check_neighbors(a).map(|i| beliefs[i]).collect())
            .collect();
        Ok(Self {
            beliefs,
            check_tanh,
            check_beliefs,
        })
    }

    pub fn beliefs(&self) -> &[f64] {
        &self.beliefs
    }

    pub fn vertex(&self, i: usize, d: usize) -> Result<f64> {
        vertex_activity(d, self.beliefs[i])
    }

    /// `K_a` for local selection bits `sel` over `g.check_edges(a)`.
    pub fn check(&self, a: usize, sel: u64) -> Result<f64> {
        check_activity_from_tanh(&self.check_tanh[a], sel, &self.check_beliefs[a])
    }

    /// `K(g)`; the empty loop has weight one.
    pub fn weight(&self, g: &TannerGraph, lp: &GeneralizedLoop) -> Result<f64> {
        let mut w = 1.0;
        for &(i, d) in lp.var_degrees() {
            w *= self.vertex(i, d)?;
        }
        for &(a, _) in lp.check_degrees() {
            let edges = g.check_edges(a);
            let sel = edges
                .iter()
                .enumerate()
                .filter(|(_, e)| lp.edges().binary_search(e).is_ok())
                .fold(0u64, |s, (k, _)| s | (1 << k));
            w *= self.check(a, sel)?;
        }
        Ok(w)
    }
}

/// `K(g)` for one loop.
pub fn loop_weight(
    g: &TannerGraph,
    lp: &GeneralizedLoop,
    fields: &[f64],
    msgs: &MessageSet,
) -> Result<f64> {
    LoopActivities::new(g, fields, msgs)?.weight(g, lp)
}

/// Compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `Σ_g K(g)` over all generalized loops, the empty loop included.
pub fn loop_series_sum(g: &TannerGraph, fields: &[f64], msgs: &MessageSet) -> Result<f64> {
    require_mask_edges(g)?;
    let act = LoopActivities::new(g, fields, msgs)?;
    let cands = check_candidates(g, |a, sel| act.check(a, sel))?;
    let mut vertex = vec![Vec::new(); g.num_vars()];
    for (i, table) in vertex.iter_mut().enumerate() {
        *table = (0..=g.var_degree(i))
            .map(|d| if d < 2 { Ok(1.0) } else { act.vertex(i, d) })
            .collect::<Result<Vec<f64>>>()?;
    }
    let mut total = NeumaierSum::default();
    dfs_loops(g, &cands, |i, d| vertex[i][d], |_, w| total.add(w));
    Ok(total.value())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopIdentity {
    /// `(1/n) ln Z`.
    pub free_energy: f64,
    pub f_bethe: f64,
    /// `Σ_g K(g)`.
    pub loop_sum: f64,
    /// `|(1/n) ln Z − f_Bethe − (1/n) ln Σ_g K(g)|`.
    pub residual: f64,
    /// Sup-norm BP equation violation of the supplied messages.
    pub bp_residual: f64,
}

/// Evaluates both sides of the loop-series identity for one message set.
///
/// A nonpositive loop sum is returned as [`Error::Inconsistent`] carrying the
/// BP residual; it can only occur away from fixed points.
pub fn verify_loop_identity(
    g: &TannerGraph,
    fields: &[f64],
    msgs: &MessageSet,
    exact_caps: &ExactCaps,
) -> Result<LoopIdentity> {
    let n = g.num_vars() as f64;
    let bp_residual = fixed_point_residual(g, fields, msgs)?;
    let free_energy = log_partition(g, fields, exact_caps)? / n;
    let f_bethe = bethe_free_energy(g, fields, msgs)?;
    let loop_sum = loop_series_sum(g, fields, msgs)?;
    if loop_sum <= 0.0 {
        return Err(Error::Inconsistent(format!(
            "sign anomaly: loop sum {loop_sum:e} <= 0 (BP residual {bp_residual:e})"
        )));
    }
    let residual = (free_energy - f_bethe - loop_sum.ln() / n).abs();
    Ok(LoopIdentity {
        free_energy,
        f_bethe,
        loop_sum,
        residual,
        bp_residual,
    })
}
