//! Independent oracles and invariant checks shared by the integration tests.

#![allow(dead_code)]

use bethe_loops::bethe::bethe_free_energy;
use bethe_loops::bp::{bp_solve, bp_update, BpOptions, MessageSet};
use bethe_loops::channel::{enumerate_outputs, half_llr};
use bethe_loops::exact::{log_partition, ExactCaps};
use bethe_loops::loops::loop_series_sum;
use bethe_loops::loops::{enumerate_generalized_loops, Enumeration, LoopCaps};
use bethe_loops::polymer::polymer_type;
use bethe_loops::TannerGraph;
use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<(), String>;

fn check_masks(g: &TannerGraph) -> Vec<u64> {
    (0..g.num_checks())
        .map(|a| g.check_neighbors(a).fold(0u64, |m, i| m | 1 << i))
        .collect()
}

/// `ln Σ_x exp(Σ_i (-1)^{x_i} h_i)` over all `2^n` words satisfying every check.
pub fn brute_log_partition(g: &TannerGraph, fields: &[f64]) -> f64 {
    let n = g.num_vars();
    assert!(n <= 24, "brute force limited to n <= 24");
    let masks = check_masks(g);
    let mut terms = Vec::new();
    for x in 0u64..1 << n {
        if masks.iter().all(|m| (x & m).count_ones() % 2 == 0) {
            terms.push(
                (0..n)
                    .map(|i| {
                        if x >> i & 1 == 1 {
                            -fields[i]
                        } else {
                            fields[i]
                        }
                    })
                    .sum::<f64>(),
            );
        }
    }
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
}

pub fn brute_codeword_count(g: &TannerGraph) -> u64 {
    let masks = check_masks(g);
    (0u64..1 << g.num_vars())
        .filter(|x| masks.iter().all(|m| (x & m).count_ones() % 2 == 0))
        .count() as u64
}

/// A random graph with variable degrees in `1..=3` and every check of degree at least two.
pub fn irregular_graph(seed: u64) -> TannerGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let n = rng.random_range(4..=8);
        let m = rng.random_range(2..=4);
        let mut edges = Vec::new();
        for i in 0..n {
            let d = rng.random_range(1..=3.min(m));
            let mut checks: Vec<usize> = (0..m).collect();
            checks.shuffle(&mut rng);
            edges.extend(checks[..d].iter().map(|&a| (i, a)));
        }
        let g = TannerGraph::from_edges(n, m, &edges).unwrap();
        if (0..m).all(|a| g.check_degree(a) >= 2) {
            return g;
        }
    }
}

/// Fields of magnitude `h` with signs drawn from a BSC realization.
pub fn signed_fields(n: usize, h: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = 1.0 / (1.0 + (2.0 * h).exp());
    (0..n)
        .map(|_| if rng.random_bool(p) { -h } else { h })
        .collect()
}

pub fn handshake(g: &TannerGraph) -> Check {
    let vars: usize = (0..g.num_vars()).map(|i| g.var_degree(i)).sum();
    let checks: usize = (0..g.num_checks()).map(|a| g.check_degree(a)).sum();
    if vars != checks || vars != g.num_edges() {
        return Err(format!("degree sums {vars} / {checks} / {}", g.num_edges()));
    }
    if let Some((l, _)) = g.regular_degrees() {
        if vars != g.num_vars() * l {
            return Err(format!("|E| = {vars} != n l"));
        }
    }
    Ok(())
}

/// Every generalized loop has equal variable- and check-side edge counts.
pub fn loop_type_handshake(g: &TannerGraph) -> Check {
    for lp in enumerate_generalized_loops(g, Enumeration::Dfs, &LoopCaps::default())
        .map_err(|e| e.to_string())?
    {
        let v: usize = lp.var_degrees().iter().map(|&(_, d)| d).sum();
        let c: usize = lp.check_degrees().iter().map(|&(_, d)| d).sum();
        if v != c || v != lp.edges().len() {
            return Err(format!("loop degree sums {v} / {c} / {}", lp.edges().len()));
        }
        if lp.size() != lp.var_degrees().len() + lp.check_degrees().len() {
            return Err("loop size differs from its node count".into());
        }
        if let Some((l, r)) = g.regular_degrees() {
            let ty = polymer_type(g, &lp).map_err(|e| e.to_string())?;
            if ty.edge_counts() != (v, c) || !ty.handshake_holds() || ty.size() != lp.size() {
                return Err(format!(
                    "type {ty} of a loop with {v} edges in a ({l},{r}) graph"
                ));
            }
        }
    }
    Ok(())
}

/// Relabeling nodes permutes messages and leaves every scalar unchanged.
pub fn permutation_equivariance(g: &TannerGraph, fields: &[f64], seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vp: Vec<usize> = (0..g.num_vars()).collect();
    let mut cp: Vec<usize> = (0..g.num_checks()).collect();
    vp.shuffle(&mut rng);
    cp.shuffle(&mut rng);
    let h = g.relabeled(&vp, &cp).map_err(|e| e.to_string())?;
    let mut fh = vec![0.0; fields.len()];
    for (i, &f) in fields.iter().enumerate() {
        fh[vp[i]] = f;
    }
    let opts = BpOptions::default();
    let a = bp_solve(g, fields, &opts).map_err(|e| e.to_string())?;
    let b = bp_solve(&h, &fh, &opts).map_err(|e| e.to_string())?;
    for (e, &(i, c)) in g.edges().iter().enumerate() {
        let k = h
            .edge_id(vp[i], cp[c])
            .ok_or("edge lost under relabeling")?;
        let d = (a.messages.eta[e] - b.messages.eta[k]).abs()
            + (a.messages.eta_hat[e] - b.messages.eta_hat[k]).abs();
        if d > 1e-10 {
            return Err(format!("edge ({i},{c}) messages differ by {d:e}"));
        }
    }
    let caps = ExactCaps::default();
    let mut pairs = vec![(
        log_partition(g, fields, &caps).map_err(|e| e.to_string())?,
        log_partition(&h, &fh, &caps).map_err(|e| e.to_string())?,
    )];
    if !(a.clamped || b.clamped) {
        pairs.push((
            bethe_free_energy(g, fields, &a.messages).map_err(|e| e.to_string())?,
            bethe_free_energy(&h, &fh, &b.messages).map_err(|e| e.to_string())?,
        ));
        if g.num_edges() <= 24 {
            pairs.push((
                loop_series_sum(g, fields, &a.messages).map_err(|e| e.to_string())?,
                loop_series_sum(&h, &fh, &b.messages).map_err(|e| e.to_string())?,
            ));
        }
    }
    for (x, y) in pairs {
        if (x - y).abs() > 1e-9 * x.abs().max(1.0) {
            return Err(format!("scalar changed under relabeling: {x} vs {y}"));
        }
    }
    if g.parity_check_matrix().rank() != h.parity_check_matrix().rank() {
        return Err("rank changed under relabeling".into());
    }
    Ok(())
}

/// With every check of even degree, negating all fields negates the messages.
pub fn sign_covariance(g: &TannerGraph, fields: &[f64]) -> Check {
    let neg: Vec<f64> = fields.iter().map(|h| -h).collect();
    let opts = BpOptions::default();
    let a = bp_solve(g, fields, &opts).map_err(|e| e.to_string())?;
    let b = bp_solve(g, &neg, &opts).map_err(|e| e.to_string())?;
    let d = a.messages.negated().sup_distance(&b.messages);
    if d > 1e-12 {
        return Err(format!("negated fields moved messages by {d:e}"));
    }
    Ok(())
}

/// A converged solution is re-checked with one undamped update. Solutions that
/// hit the clamp approximate the trivial fixed point and have no finite check.
pub fn fixed_point_recheck(g: &TannerGraph, fields: &[f64]) -> Check {
    let opts = BpOptions::default();
    let sol = bp_solve(g, fields, &opts).map_err(|e| e.to_string())?;
    if !sol.converged || sol.clamped {
        return Ok(());
    }
    let next = bp_update(g, fields, &sol.messages, 0.0, 0.0).map_err(|e| e.to_string())?;
    let d = independent_sup(&next.messages, &sol.messages);
    // one damped sweep moved less than tol, so the undamped map moves at most 2 tol / (1 - damping) + rounding
    if d > 4.0 * opts.tol / (1.0 - opts.damping) {
        return Err(format!("converged messages violate the BP map by {d:e}"));
    }
    Ok(())
}

fn independent_sup(a: &MessageSet, b: &MessageSet) -> f64 {
    a.eta
        .iter()
        .zip(&b.eta)
        .chain(a.eta_hat.iter().zip(&b.eta_hat))
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Output probabilities sum to one and agree with the binomial law per weight.
pub fn output_normalization(n: usize, p: f64) -> Check {
    half_llr(p).map_err(|e| e.to_string())?;
    let mut total = 0.0;
    let mut by_weight = vec![0.0; n + 1];
    for (y, prob) in enumerate_outputs(n, p, 22).map_err(|e| e.to_string())? {
        total += prob;
        by_weight[y.flips()] += prob;
    }
    if (total - 1.0).abs() > 1e-12 {
        return Err(format!("total probability {total}"));
    }
    let mut binom = 1.0;
    for (w, &mass) in by_weight.iter().enumerate() {
        let expected = binom * p.powi(w as i32) * (1.0 - p).powi((n - w) as i32);
        if (mass - expected).abs() > 1e-12 {
            return Err(format!("weight {w}: {mass} vs {expected}"));
        }
        binom = binom * (n - w) as f64 / (w + 1) as f64;
    }
    Ok(())
}
