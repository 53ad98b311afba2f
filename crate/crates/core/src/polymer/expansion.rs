//! Small-polymer partition function, large-polymer remainder, Mayer
//! expansion, the Brydges functional and the type census.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{
    activity_bound, decompose, enumerate_small_polymers, BoundConstants, Polymer, PolymerCaps,
    PolymerType,
};
use crate::bp::MessageSet;
use crate::loops::{
    for_each_loop, loop_series_sum, Enumeration, GeneralizedLoop, LoopActivities, LoopCaps,
    NeumaierSum,
};
use crate::tanner::TannerGraph;
use crate::{Error, Result};

/// Largest Mayer order with a precomputed Ursell table.
pub const MAX_MAYER_ORDER: usize = 5;

const CONSISTENCY_TOL: f64 = 1e-10;

/// Small polymers with their activities and node bitsets.
struct PolymerSystem {
    polymers: Vec<Polymer>,
    weights: Vec<f64>,
    masks: Vec<Vec<u64>>,
}

impl PolymerSystem {
    fn new(g: &TannerGraph, act: &LoopActivities, lambda: f64, caps: &PolymerCaps) -> Result<Self> {
        let polymers = enumerate_small_polymers(g, lambda, caps)?;
        let weights = polymers
            .iter()
            .map(|p| act.weight(g, p.as_loop()))
            .collect::<Result<Vec<_>>>()?;
        let words = g.num_nodes().div_ceil(64);
        let masks = polymers
            .iter()
            .map(|p| {
                let mut m = vec![0u64; words];
                for &u in p.nodes() {
                    m[u / 64] |= 1 << (u % 64);
                }
                m
            })
            .collect();
        Ok(Self {
            polymers,
            weights,
            masks,
        })
    }

    /// `z_k`: sum over unordered sets of `k` pairwise vertex-disjoint
    /// polymers of the product of activities.
    ///
    /// Nodes are scanned in increasing order; each node is either left
    /// uncovered or covered by a polymer whose smallest node it is. The sum
    /// over the remaining nodes depends only on which of them are already
    /// covered, so partial results are memoized on that set.
    fn disjoint_set_sums(&self, nodes: usize, cap: u128) -> Result<Vec<f64>> {
        if nodes > 128 {
            return Err(Error::CapExceeded {
                what: "node count for disjoint polymer sets",
                needed: nodes as u128,
                cap: 128,
            });
        }
        let mut by_min: Vec<Vec<usize>> = vec![Vec::new(); nodes];
        for (k, p) in self.polymers.iter().enumerate() {
            by_min[p.nodes()[0]].push(k);
        }
        let masks: Vec<u128> = self
            .masks
            .iter()
            .map(|m| {
                m.iter()
                    .enumerate()
                    .fold(0u128, |acc, (w, &x)| acc | ((x as u128) << (64 * w)))
            })
            .collect();
        let depth = nodes / 2 + 1;
        struct Walk<'a> {
            by_min: &'a [Vec<usize>],
            masks: &'a [u128],
            weights: &'a [f64],
            memo: HashMap<(usize, u128), Vec<f64>>,
            depth: usize,
            cap: u128,
        }
        fn rec(w: &mut Walk<'_>, v: usize, used: u128) -> Result<Vec<f64>> {
            if v == w.by_min.len() {
                let mut out = vec![0.0; w.depth];
                out[0] = 1.0;
                return Ok(out);
            }
            let used = used & !(1u128 << v).wrapping_sub(1);
            if (used >> v) & 1 == 1 {
                return rec(w, v + 1, used);
            }
            if let Some(hit) = w.memo.get(&(v, used)) {
                return Ok(hit.clone());
            }
            if w.memo.len() as u128 >= w.cap {
                return Err(Error::CapExceeded {
                    what: "disjoint polymer set states",
                    needed: w.cap + 1,
                    cap: w.cap,
                });
            }
            let mut sums: Vec<NeumaierSum> = vec![NeumaierSum::default(); w.depth];
            for (k, x) in rec(w, v + 1, used)?.into_iter().enumerate() {
                sums[k].add(x);
            }
            for idx in 0..w.by_min[v].len() {
                let p = w.by_min[v][idx];
                if w.masks[p] & used != 0 {
                    continue;
                }
                let weight = w.weights[p];
                let tail = rec(w, v + 1, used | w.masks[p])?;
                for (k, x) in tail.into_iter().enumerate().take(w.depth - 1) {
                    sums[k + 1].add(weight * x);
                }
            }
            let out: Vec<f64> = sums.iter().map(NeumaierSum::value).collect();
            w.memo.insert((v, used), out.clone());
            Ok(out)
        }
        let mut walk = Walk {
            by_min: &by_min,
            masks: &masks,
            weights: &self.weights,
            memo: HashMap::new(),
            depth,
            cap,
        };
        rec(&mut walk, 0, 0)
    }
}

/// Sums over all generalized loops split by whether every component is small.
struct LoopSplit {
    small: f64,
    large: f64,
    large_bound: Option<f64>,
}

fn split_loops(
    g: &TannerGraph,
    act: &LoopActivities,
    lambda: f64,
    bound: Option<(f64, &BoundConstants)>,
    loop_caps: &LoopCaps,
) -> Result<LoopSplit> {
    let limit = lambda * g.num_vars() as f64;
    let lr = match bound {
        Some(_) => Some(g.require_regular()?),
        None => None,
    };
    let mut small = NeumaierSum::default();
    let mut large = NeumaierSum::default();
    let mut large_bound = NeumaierSum::default();
    let mut failure = None;
    for_each_loop(g, Enumeration::Dfs, loop_caps, |mask| {
        if failure.is_some() {
            return;
        }
        let mut step = || -> Result<()> {
            let lp = GeneralizedLoop::from_mask(g, mask)?;
            let w = act.weight(g, &lp)?;
            let is_large = decompose(g, &lp).iter().any(|p| p.size() as f64 >= limit);
            if is_large {
                large.add(w);
                if let (Some((h, consts)), Some((l, r))) = (bound, lr) {
                    large_bound.add(activity_bound(
                        &PolymerType::of_loop(&lp, l, r)?,
                        h,
                        consts,
                    )?);
                }
            } else {
                small.add(w);
            }
            Ok(())
        };
        if let Err(e) = step() {
            failure = Some(e);
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(LoopSplit {
        small: small.value(),
        large: large.value(),
        large_bound: bound.map(|_| large_bound.value()),
    })
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolymerPartition {
    /// Loop sum restricted to loops whose components all have fewer than `λn` nodes.
    pub by_loops: f64,
    /// Sum over sets of pairwise vertex-disjoint small polymers.
    pub by_polymer_sets: f64,
    pub relative_gap: f64,
    pub polymers: usize,
}

impl PolymerPartition {
    pub fn value(&self) -> f64 {
        self.by_polymer_sets
    }
}

/// `Z_p` computed from the loop expansion and from disjoint polymer sets.
/// Disagreement beyond `1e-10` relative is an [`Error::Inconsistent`].
pub fn small_polymer_partition(
    g: &TannerGraph,
    fields: &[f64],
    msgs: &MessageSet,
    lambda: f64,
    loop_caps: &LoopCaps,
    caps: &PolymerCaps,
) -> Result<PolymerPartition> {
    let act = LoopActivities::new(g, fields, msgs)?;
    let sys = PolymerSystem::new(g, &act, lambda, caps)?;
    let by_polymer_sets = sys
        .disjoint_set_sums(g.num_nodes(), caps.max_terms)?
        .iter()
        .sum();
    let by_loops = split_loops(g, &act, lambda, None, loop_caps)?.small;
    let gap = relative_gap(by_loops, by_polymer_sets);
    if gap > CONSISTENCY_TOL {
        return Err(Error::Inconsistent(format!(
            "Z_p by loops {by_loops:e} differs from Z_p by polymer sets {by_polymer_sets:e}"
        )));
    }
    Ok(PolymerPartition {
        by_loops,
        by_polymer_sets,
        relative_gap: gap,
        polymers: sys.polymers.len(),
    })
}

/// `Z_p` from disjoint polymer sets only, with the number of small polymers;
/// usable when the full loop enumeration is out of reach.
pub(crate) fn polymer_partition_by_sets(
    g: &TannerGraph,
    act: &LoopActivities,
    lambda: f64,
    caps: &PolymerCaps,
) -> Result<(f64, usize)> {
    let sys = PolymerSystem::new(g, act, lambda, caps)?;
    let z = sys
        .disjoint_set_sums(g.num_nodes(), caps.max_terms)?
        .iter()
        .sum();
    Ok((z, sys.polymers.len()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Remainder {
    pub loop_sum: f64,
    pub z_p: f64,
    /// `Σ_g K(g) − Z_p`.
    pub by_difference: f64,
    /// Direct sum over loops with a component of at least `λn` nodes.
    pub direct: f64,
    /// `Σ K̄(type(g))` over the same loops, when a bound was requested.
    pub bound: Option<f64>,
}

/// The large-polymer remainder `R`, computed as a difference and directly.
pub fn large_polymer_remainder(
    g: &TannerGraph,
    fields: &[f64],
    msgs: &MessageSet,
    lambda: f64,
    bound: Option<(f64, &BoundConstants)>,
    loop_caps: &LoopCaps,
    caps: &PolymerCaps,
) -> Result<Remainder> {
    let act = LoopActivities::new(g, fields, msgs)?;
    let loop_sum = loop_series_sum(g, fields, msgs)?;
    let (z_p, _) = polymer_partition_by_sets(g, &act, lambda, caps)?;
    let split = split_loops(g, &act, lambda, bound, loop_caps)?;
    let by_difference = loop_sum - z_p;
    if (by_difference - split.large).abs() > CONSISTENCY_TOL * loop_sum.abs().max(1.0) {
        return Err(Error::Inconsistent(format!(
            "remainder by difference {by_difference:e} differs from direct sum {:e}",
            split.large
        )));
    }
    Ok(Remainder {
        loop_sum,
        z_p,
        by_difference,
        direct: split.large,
        bound: split.large_bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrydgesQ {
    /// `sup_z Σ_{γ∋z} e^{|γ|} ζ0 |K(γ)|`.
    pub q: f64,
    /// The same functional at `ζ0 = 1`.
    pub q_unit: f64,
    pub zeta0: f64,
    /// Node attaining the supremum, if any polymer exists.
    pub argmax: Option<usize>,
    pub polymers: usize,
}

pub fn brydges_criterion(
    g: &TannerGraph,
    fields: &[f64],
    msgs: &MessageSet,
    lambda: f64,
    zeta0: f64,
    caps: &PolymerCaps,
) -> Result<BrydgesQ> {
    if !(zeta0 > 0.0) {
        return Err(Error::invalid(format!("zeta0={zeta0} must be positive")));
    }
    let act = LoopActivities::new(g, fields, msgs)?;
    let sys = PolymerSystem::new(g, &act, lambda, caps)?;
    let mut per_node = vec![NeumaierSum::default(); g.num_nodes()];
    for (p, w) in sys.polymers.iter().zip(&sys.weights) {
        let term = (p.size() as f64).exp() * w.abs();
        for &z in p.nodes() {
            per_node[z].add(term);
        }
    }
    let mut best: Option<(usize, f64)> = None;
    for (z, s) in per_node.iter().enumerate() {
        let v = s.value();
        if v > 0.0 && best.is_none_or(|(_, b)| v > b) {
            best = Some((z, v));
        }
    }
    let q_unit = best.map_or(0.0, |(_, v)| v);
    Ok(BrydgesQ {
        q: zeta0 * q_unit,
        q_unit,
        zeta0,
        argmax: best.map(|(z, _)| z),
        polymers: sys.polymers.len(),
    })
}

/// Ursell function `φ(H) = Σ_{G ⊆ H connected spanning} (−1)^{|E(G)|}` for
/// every graph `H` on `order` labelled vertices, indexed by edge bitmask over
/// the pairs `(j, k)`, `j < k`, in lexicographic order.
#[derive(Debug, Clone)]
pub struct UrsellTable {
    order: usize,
    pairs: Vec<(usize, usize)>,
    values: Vec<i64>,
}

fn spans_connected(order: usize, pairs: &[(usize, usize)], mask: u32) -> bool {
    if order <= 1 {
        return true;
    }
    let mut reach = 1u32;
    loop {
        let mut next = reach;
        for (k, &(a, b)) in pairs.iter().enumerate() {
            if (mask >> k) & 1 == 1 && ((reach >> a) & 1 == 1 || (reach >> b) & 1 == 1) {
                next |= (1 << a) | (1 << b);
            }
        }
        if next == reach {
            return reach.count_ones() as usize == order;
        }
        reach = next;
    }
}

impl UrsellTable {
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 || order > MAX_MAYER_ORDER {
            return Err(Error::invalid(format!(
                "Mayer order {order} outside 1..={MAX_MAYER_ORDER}"
            )));
        }
        let pairs: Vec<(usize, usize)> = (0..order)
            .flat_map(|a| (a + 1..order).map(move |b| (a, b)))
            .collect();
        let full = 1u32 << pairs.len();
        let connected: Vec<bool> = (0..full)
            .map(|m| spans_connected(order, &pairs, m))
            .collect();
        let values = (0..full)
            .map(|h| {
                // iterate the submasks of h
                let mut total = 0i64;
                let mut sub = h;
                loop {
                    if connected[sub as usize] {
                        total += if sub.count_ones() % 2 == 0 { 1 } else { -1 };
                    }
                    if sub == 0 {
                        break;
                    }
                    sub = (sub - 1) & h;
                }
                total
            })
            .collect();
        Ok(Self {
            order,
            pairs,
            values,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn value(&self, overlap_mask: u32) -> i64 {
        self.values[overlap_mask as usize]
    }

    /// Number of connected labelled graphs on `order` vertices.
    pub fn connected_graphs(&self) -> usize {
        (0..self.values.len() as u32)
            .filter(|&m| spans_connected(self.order, &self.pairs, m))
            .count()
    }
}

/// `|𝒢_M|`, the number of connected labelled graphs on `m` vertices.
pub fn connected_graph_count(m: usize) -> Result<usize> {
    Ok(UrsellTable::new(m)?.connected_graphs())
}

/// Order-`M` Mayer coefficients for `M = 1..=m_max`:
/// `(1/M!) Σ_{γ_1..γ_M} Π K(γ_k) φ(overlap graph)`.
pub fn cluster_coefficients(
    polymers: &[Polymer],
    weights: &[f64],
    m_max: usize,
    cap: u128,
) -> Result<Vec<f64>> {
    if polymers.len() != weights.len() {
        return Err(Error::invalid("polymer and weight lists differ in length"));
    }
    let p = polymers.len();
    let overlap: Vec<Vec<bool>> = (0..p)
        .map(|a| (0..p).map(|b| polymers[a].overlaps(&polymers[b])).collect())
        .collect();
    let mut out = Vec::with_capacity(m_max);
    for order in 1..=m_max {
        let work = (p as u128).checked_pow(order as u32).unwrap_or(u128::MAX);
        if work > cap {
            return Err(Error::CapExceeded {
                what: "Mayer tuples",
                needed: work,
                cap,
            });
        }
        let table = UrsellTable::new(order)?;
        let pair_index =
            |a: usize, b: usize| table.pairs.iter().position(|&q| q == (a, b)).unwrap();
        let index: Vec<Vec<usize>> = (0..order)
            .map(|k| (0..k).map(|j| pair_index(j, k)).collect())
            .collect();
        struct Walk<'a> {
            table: &'a UrsellTable,
            index: &'a [Vec<usize>],
            overlap: &'a [Vec<bool>],
            weights: &'a [f64],
            tuple: Vec<usize>,
            sum: NeumaierSum,
        }
        fn rec(w: &mut Walk<'_>, depth: usize, prod: f64, mask: u32) {
            let order = w.table.order;
            if depth == order {
                let phi = w.table.value(mask);
                if phi != 0 {
                    w.sum.add(prod * phi as f64);
                }
                return;
            }
            for j in 0..w.weights.len() {
                let mut m = mask;
                for (k, &prev) in w.tuple.iter().enumerate() {
                    if w.overlap[prev][j] {
                        m |= 1 << w.index[depth][k];
                    }
                }
                w.tuple.push(j);
                rec(w, depth + 1, prod * w.weights[j], m);
                w.tuple.pop();
            }
        }
        let mut walk = Walk {
            table: &table,
            index: &index,
            overlap: &overlap,
            weights,
            tuple: Vec::with_capacity(order),
            sum: NeumaierSum::default(),
        };
        rec(&mut walk, 0, 1.0, 0);
        let factorial: f64 = (1..=order).map(|k| k as f64).product();
        out.push(walk.sum.value() / factorial);
    }
    Ok(out)
}

/// Coefficients `c_1..c_M` of `ln(1 + Σ_{k≥1} z_k ζ^k)`; `z[0]` must be 1.
pub fn log_series_coefficients(z: &[f64], m_max: usize) -> Vec<f64> {
    let zk = |k: usize| z.get(k).copied().unwrap_or(0.0);
    let mut c = vec![0.0; m_max + 1];
    for k in 1..=m_max {
        let mut v = zk(k);
        for j in 1..k {
            v -= j as f64 * c[j] * zk(k - j) / k as f64;
        }
        c[k] = v;
    }
    c.remove(0);
    c
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mayer {
    /// `S_1..S_M`, per variable node.
    pub partial_sums: Vec<f64>,
    /// `(1/n) ln Z_p`.
    pub target: f64,
    /// `|S_M − target|`.
    pub errors: Vec<f64>,
    pub polymers: usize,
}

/// Truncated Mayer expansion of `(1/n) ln Z_p`.
pub fn mayer_truncated(
    g: &TannerGraph,
    fields: &[f64],
    msgs: &MessageSet,
    lambda: f64,
    m_max: usize,
    caps: &PolymerCaps,
) -> Result<Mayer> {
    if m_max == 0 || m_max > MAX_MAYER_ORDER {
        return Err(Error::invalid(format!(
            "Mayer order {m_max} outside 1..={MAX_MAYER_ORDER}"
        )));
    }
    let act = LoopActivities::new(g, fields, msgs)?;
    let sys = PolymerSystem::new(g, &act, lambda, caps)?;
    let n = g.num_vars() as f64;
    let z = sys.disjoint_set_sums(g.num_nodes(), caps.max_terms)?;
    let excess: f64 = z.iter().skip(1).sum();
    if excess <= -1.0 {
        return Err(Error::Inconsistent(format!(
            "Z_p = {:e} is not positive",
            1.0 + excess
        )));
    }
    let target = excess.ln_1p() / n;
    let coeffs = cluster_coefficients(&sys.polymers, &sys.weights, m_max, caps.max_terms)?;
    let mut running = 0.0;
    let partial_sums: Vec<f64> = coeffs
        .iter()
        .map(|c| {
            running += c;
            running / n
        })
        .collect();
    let errors = partial_sums.iter().map(|s| (s - target).abs()).collect();
    Ok(Mayer {
        partial_sums,
        target,
        errors,
        polymers: sys.polymers.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TypeCensus {
    /// Nonempty generalized loops per type.
    pub counts: BTreeMap<PolymerType, u64>,
    pub total_loops: u64,
    /// Types in the large-loop domain `Δ(λ)` with their counts.
    pub delta: BTreeMap<PolymerType, u64>,
    /// `Σ_{Δ} K̄ · count`, when a field magnitude was supplied.
    pub markov_rhs: Option<f64>,
}

impl TypeCensus {
    /// Counts keyed by `"n2,...,nl|m2,...,mr"`.
    pub fn keyed_counts(&self) -> BTreeMap<String, u64> {
        self.counts.iter().map(|(k, v)| (k.key(), *v)).collect()
    }

    pub fn keyed_delta(&self) -> BTreeMap<String, u64> {
        self.delta.iter().map(|(k, v)| (k.key(), *v)).collect()
    }
}

/// True for types with `λn ≤ |γ|`, the edge handshake, fewer than `n`
/// variables and fewer than `nl/r` checks.
pub fn in_large_domain(ty: &PolymerType, n: usize, m: usize, lambda: f64) -> bool {
    lambda * n as f64 <= ty.size() as f64
        && ty.handshake_holds()
        && ty.variables() < n
        && ty.checks() < m
}

/// Exact census of generalized loops by type.
pub fn type_census(
    g: &TannerGraph,
    lambda: f64,
    bound: Option<(f64, &BoundConstants)>,
    loop_caps: &LoopCaps,
) -> Result<TypeCensus> {
    let (l, r) = g.require_regular()?;
    let mut counts: BTreeMap<PolymerType, u64> = BTreeMap::new();
    let mut failure = None;
    for_each_loop(g, Enumeration::Dfs, loop_caps, |mask| {
        if mask == 0 || failure.is_some() {
            return;
        }
        match GeneralizedLoop::from_mask(g, mask).and_then(|lp| PolymerType::of_loop(&lp, l, r)) {
            Ok(ty) => *counts.entry(ty).or_default() += 1,
            Err(e) => failure = Some(e),
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let total_loops = counts.values().sum();
    let delta: BTreeMap<PolymerType, u64> = counts
        .iter()
        .filter(|(ty, _)| in_large_domain(ty, g.num_vars(), g.num_checks(), lambda))
        .map(|(k, v)| (k.clone(), *v))
        .collect();
    let markov_rhs = match bound {
        Some((h, consts)) => {
            let mut s = NeumaierSum::default();
            for (ty, &c) in &delta {
                s.add(activity_bound(ty, h, consts)? * c as f64);
            }
            Some(s.value())
        }
        None => None,
    };
    Ok(TypeCensus {
        counts,
        total_loops,
        delta,
        markov_rhs,
    })
}
