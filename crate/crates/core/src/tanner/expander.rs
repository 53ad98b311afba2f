//! Vertex expansion of Tanner graphs and the threshold `λ0` below which random
//! regular graphs are expanders with high probability.

use super::TannerGraph;
use crate::{Error, Result};

/// Default cap on the number of variable subsets [`is_expander`] may visit.
pub const DEFAULT_SUBSET_CAP: u128 = 10_000_000;

const SCAN_POINTS: usize = 1_000_000;
const SCAN_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionCheck {
    pub holds: bool,
    /// A smallest violating variable subset, when `holds` is false.
    pub witness: Option<Vec<usize>>,
    pub subsets_checked: u128,
}

/// Largest subset size `s` with `s < λ n`.
pub(crate) fn max_small_size(lambda: f64, n: usize) -> usize {
    let limit = lambda * n as f64;
    ((limit - 1e-9).ceil().max(0.0) as usize).saturating_sub(1)
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, j| acc * (n - j) as u128 / (j + 1) as u128)
}

/// Number of subsets [`is_expander`] would visit for these parameters.
pub fn expander_work(n: usize, lambda: f64) -> u128 {
    (1..=max_small_size(lambda, n).min(n))
        .map(|s| binomial(n, s))
        .sum()
}

/// Exhaustively checks whether every variable subset `V` with `|V| < λn`
/// touches at least `κ l |V|` checks.
///
/// Sizes are visited in increasing order, so a returned witness is minimal.
/// Refuses with [`Error::CapExceeded`] instead of sampling when the subset
/// space is larger than `cap`.
pub fn is_expander(g: &TannerGraph, lambda: f64, kappa: f64, cap: u128) -> Result<ExpansionCheck> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("lambda={lambda} must be positive")));
    }
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::invalid(format!("kappa={kappa} outside (0,1)")));
    }
    let (l, _) = g.require_regular()?;
    let n = g.num_vars();
    let work = expander_work(n, lambda);
    if work > cap {
        return Err(Error::CapExceeded {
            what: "expander subset enumeration",
            needed: work,
            cap,
        });
    }

    let words = g.num_checks().div_ceil(64);
    let masks: Vec<Vec<u64>> = (0..n)
        .map(|i| {
            let mut w = vec![0u64; words];
            for a in g.var_neighbors(i) {
                w[a / 64] |= 1 << (a % 64);
            }
            w
        })
        .collect();

    let mut checked = 0u128;
    for size in 1..=max_small_size(lambda, n).min(n) {
        let need = kappa * l as f64 * size as f64 - 1e-9;
        let mut chosen = Vec::with_capacity(size);
        let mut stack = vec![vec![0u64; words]; size + 1];
        if let Some(w) = search(&masks, size, need, 0, &mut chosen, &mut stack, &mut checked) {
            return Ok(ExpansionCheck {
                holds: false,
                witness: Some(w),
                subsets_checked: checked,
            });
        }
    }
    Ok(ExpansionCheck {
        holds: true,
        witness: None,
        subsets_checked: checked,
    })
}

fn search(
    masks: &[Vec<u64>],
    size: usize,
    need: f64,
    start: usize,
    chosen: &mut Vec<usize>,
    stack: &mut [Vec<u64>],
    checked: &mut u128,
) -> Option<Vec<usize>> {
    let depth = chosen.len();
    if depth == size {
        *checked += 1;
        let boundary: u32 = stack[depth].iter().map(|w| w.count_ones()).sum();
        return ((boundary as f64) < need).then(|| chosen.clone());
    }
    for i in start..=masks.len() - (size - depth) {
        let (lo, hi) = stack.split_at_mut(depth + 1);
        for ((dst, src), m) in hi[0].iter_mut().zip(&lo[depth]).zip(&masks[i]) {
            *dst = src | m;
        }
        chosen.push(i);
        let found = search(masks, size, need, i + 1, chosen, stack, checked);
        chosen.pop();
        if found.is_some() {
            return found;
        }
    }
    None
}

/// Admissible open interval for the expansion constant `κ`.
pub fn kappa_interval(l: usize, r: usize) -> (f64, f64) {
    let (l, r) = (l as f64, r as f64);
    (1.0 - 2.0 * (r - 1.0) / (l * r), 1.0 - 1.0 / l)
}

fn binary_entropy(x: f64, log: &impl Fn(f64) -> f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * log(x) - (1.0 - x) * log(1.0 - x)
}

/// First-moment exponent for variable sets of relative size `λ` whose
/// neighbourhood fits in `κ l λ n` checks, divided by `-l`:
///
/// `(l-1)/l · h2(λ) − (1/r) · h2(λκr) − λκr · h2(1/(κr))`
///
/// with `h2` in nats. Its first positive zero is `λ0`.
pub fn expansion_exponent(lambda: f64, l: usize, r: usize, kappa: f64) -> f64 {
    exponent_with(lambda, l, r, kappa, &f64::ln)
}

fn exponent_with(lambda: f64, l: usize, r: usize, kappa: f64, log: &impl Fn(f64) -> f64) -> f64 {
    let (lf, rf) = (l as f64, r as f64);
    let kr = kappa * rf;
    (lf - 1.0) / lf * binary_entropy(lambda, log)
        - binary_entropy(lambda * kr, log) / rf
        - lambda * kr * binary_entropy(1.0 / kr, log)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lambda0 {
    pub lambda0: f64,
    pub residual: f64,
    /// Set when `κ` lies outside [`kappa_interval`].
    pub warning: Option<String>,
}

/// Smallest positive root of [`expansion_exponent`] in `λ`, located by a
/// uniform sign-change scan over `(ε, 1/(κr) − ε)` followed by bisection.
pub fn solve_lambda0(l: usize, r: usize, kappa: f64) -> Result<Lambda0> {
    solve_with(l, r, kappa, &f64::ln)
}

fn solve_with(l: usize, r: usize, kappa: f64, log: &impl Fn(f64) -> f64) -> Result<Lambda0> {
    if l < 2 || r < 2 {
        return Err(Error::invalid(format!(
            "degrees (l={l}, r={r}) must be >= 2"
        )));
    }
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::invalid(format!("kappa={kappa} outside (0,1)")));
    }
    let upper = 1.0 / (kappa * r as f64);
    if upper <= 2.0 * SCAN_EPS || upper > 1.0 {
        return Err(Error::invalid(format!(
            "kappa*r = {} leaves no admissible lambda range",
            kappa * r as f64
        )));
    }
    let (lo_k, hi_k) = kappa_interval(l, r);
    let warning = (kappa <= lo_k || kappa >= hi_k)
        .then(|| format!("kappa={kappa} outside admissible interval ({lo_k}, {hi_k})"));

    let f = |x: f64| exponent_with(x, l, r, kappa, log);
    let (start, end) = (SCAN_EPS, upper - SCAN_EPS);
    let step = (end - start) / SCAN_POINTS as f64;
    let mut prev_x = start;
    let mut prev_f = f(start);
    let mut bracket = None;
    for k in 1..=SCAN_POINTS {
        let x = start + step * k as f64;
        let fx = f(x);
        if fx == 0.0 {
            bracket = Some((x, x));
            break;
        }
        if prev_f.signum() != fx.signum() && prev_f != 0.0 {
            bracket = Some((prev_x, x));
            break;
        }
        prev_x = x;
        prev_f = fx;
    }
    let Some((mut lo, mut hi)) = bracket else {
        return Err(Error::NoRoot(format!(
            "no sign change of the expansion exponent for (l={l}, r={r}, kappa={kappa})"
        )));
    };
    let f_lo_sign = f(lo).signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid).signum() == f_lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = if f(lo).abs() <= f(hi).abs() { lo } else { hi };
    Ok(Lambda0 {
        lambda0: root,
        residual: f(root).abs(),
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::super::tests::triple_check;
    use super::*;
    use crate::tanner::generate_regular;

    #[test]
    fn triple_check_expansion() {
        let g = triple_check();
        let c = is_expander(&g, 0.4, 0.5, DEFAULT_SUBSET_CAP).unwrap();
        assert!(c.holds);
        // sizes 1 and 2 only
        assert_eq!(c.subsets_checked, 6 + 15);
        let c = is_expander(&g, 0.6, 0.5, DEFAULT_SUBSET_CAP).unwrap();
        assert!(!c.holds);
        assert_eq!(c.witness.unwrap().len(), 3);
    }

    #[test]
    fn vacuous_when_lambda_n_at_most_one() {
        let g = generate_regular(12, 3, 6, 2).unwrap();
        let c = is_expander(&g, 1.0 / 12.0, 0.9, DEFAULT_SUBSET_CAP).unwrap();
        assert!(c.holds);
        assert_eq!(c.subsets_checked, 0);
    }

    #[test]
    fn refuses_over_cap() {
        let g = generate_regular(40, 3, 6, 2).unwrap();
        assert!(matches!(
            is_expander(&g, 0.5, 0.5, 1000),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn witness_really_violates() {
        let g = generate_regular(16, 3, 4, 3).unwrap();
        let c = is_expander(&g, 0.5, 0.6, DEFAULT_SUBSET_CAP).unwrap();
        if let Some(w) = c.witness {
            let mut checks: Vec<usize> = w.iter().flat_map(|&i| g.var_neighbors(i)).collect();
            checks.sort_unstable();
            checks.dedup();
            assert!((checks.len() as f64) < 0.6 * 3.0 * w.len() as f64);
        }
    }

    #[test]
    fn monotone_in_lambda_and_kappa() {
        for seed in 0..5 {
            let g = generate_regular(14, 3, 6, seed).unwrap();
            for &(lam, kap) in &[(0.5, 0.6), (0.4, 0.5), (0.3, 0.7)] {
                if is_expander(&g, lam, kap, DEFAULT_SUBSET_CAP).unwrap().holds {
                    for &(dl, dk) in &[(0.1, 0.0), (0.0, 0.1), (0.1, 0.1)] {
                        let c = is_expander(&g, lam - dl, kap - dk, DEFAULT_SUBSET_CAP).unwrap();
                        assert!(c.holds);
                    }
                }
            }
        }
    }

    #[test]
    fn lambda0_for_3_6() {
        let sol = solve_lambda0(3, 6, 0.5).unwrap();
        assert!(sol.lambda0 >= 5e-4, "{}", sol.lambda0);
        assert!(sol.residual < 1e-10);
        assert!(sol.warning.is_none());
        // positive just below the root, negative just above
        assert!(expansion_exponent(sol.lambda0 * 0.99, 3, 6, 0.5) > 0.0);
        assert!(expansion_exponent(sol.lambda0 * 1.01, 3, 6, 0.5) < 0.0);
    }

    #[test]
    fn lambda0_warns_outside_interval() {
        let sol = solve_lambda0(3, 6, 0.4).unwrap();
        assert!(sol.warning.is_some());
        assert!(matches!(solve_lambda0(3, 6, 0.9), Err(Error::NoRoot(_))));
        let (lo, hi) = kappa_interval(3, 6);
        assert!((lo - 4.0 / 9.0).abs() < 1e-15 && (hi - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn lambda0_base_invariant() {
        let nat = solve_with(3, 6, 0.5, &f64::ln).unwrap();
        let bits = solve_with(3, 6, 0.5, &f64::log2).unwrap();
        assert!((nat.lambda0 - bits.lambda0).abs() < 1e-15);
        let nat = solve_with(3, 4, 0.55, &f64::ln).unwrap();
        let dec = solve_with(3, 4, 0.55, &f64::log10).unwrap();
        assert!((nat.lambda0 - dec.lambda0).abs() < 1e-15);
    }

    #[test]
    fn lambda0_invalid_domain() {
        assert!(solve_lambda0(3, 6, 0.1).is_err());
        assert!(solve_lambda0(3, 6, 1.0).is_err());
    }
}
