//! Exhaustive ground truth: the partition function over codewords and the
//! conditional entropy `H(X|Y)/n`, both by exact enumeration.

use std::f64::consts::LN_2;

use crate::channel::{enumerate_outputs, half_llr};
use crate::tanner::{BinaryMatrix, TannerGraph};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactCaps {
    /// Largest kernel dimension `n - rank(H)` that may be enumerated.
    pub max_kernel_dim: usize,
    /// Largest `n` for which all `2^n` channel outputs may be enumerated.
    pub max_outputs_n: usize,
    /// Largest `log2` of (outputs × codewords) for the entropy routines.
    pub max_joint_log2: usize,
}

impl Default for ExactCaps {
    fn default() -> Self {
        Self {
            max_kernel_dim: 26,
            max_outputs_n: 22,
            max_joint_log2: 34,
        }
    }
}

/// A GF(2) basis of the code `{x : H x = 0}`, vectors packed in 64-bit words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodewordBasis {
    n: usize,
    vectors: Vec<Vec<u64>>,
}

impl CodewordBasis {
    pub fn from_matrix(h: &BinaryMatrix) -> Self {
        Self {
            n: h.cols(),
            vectors: h.nullspace(),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Kernel dimension `k`; the code has `2^k` words.
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Vec<u64>] {
        &self.vectors
    }

    fn words(&self) -> usize {
        self.n.div_ceil(64)
    }

    fn require_dim(&self, cap: usize) -> Result<()> {
        if self.dim() > cap {
            return Err(Error::CapExceeded {
                what: "codeword enumeration",
                needed: 1u128 << self.dim().min(127),
                cap: 1u128 << cap.min(127),
            });
        }
        Ok(())
    }

    /// Visits every codeword once in Gray-code order. The callback receives
    /// the codeword and the index of the basis vector just added, `None` for
    /// the initial all-zero word.
    pub fn gray_walk(&self, mut visit: impl FnMut(&[u64], Option<usize>)) {
        let mut x = vec![0u64; self.words()];
        visit(&x, None);
        for step in 1u64..(1u64 << self.dim()) {
            let j = step.trailing_zeros() as usize;
            for (w, b) in x.iter_mut().zip(&self.vectors[j]) {
                *w ^= b;
            }
            visit(&x, Some(j));
        }
    }
}

pub fn codeword_basis(g: &TannerGraph) -> CodewordBasis {
    CodewordBasis::from_matrix(&g.parity_check_matrix())
}

/// Numerically stable `ln Σ exp(x_k)`.
pub fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = LogSumExp::default();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Streaming log-sum-exp accumulator.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    shift: f64,
    sum: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self {
            shift: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }
}

impl LogSumExp {
    pub fn add(&mut self, v: f64) {
        if v > self.shift {
            self.sum = self.sum * (self.shift - v).exp() + 1.0;
            self.shift = v;
        } else {
            self.sum += (v - self.shift).exp();
        }
    }

    pub fn value(&self) -> f64 {
        self.shift + self.sum.ln()
    }
}

fn pack_signs(fields: &[f64]) -> Vec<u64> {
    let mut y = vec![0u64; fields.len().div_ceil(64)];
    for (i, &h) in fields.iter().enumerate() {
        if h.is_sign_negative() && h != 0.0 {
            y[i / 64] |= 1 << (i % 64);
        }
    }
    y
}

/// Histogram of Hamming distances from `y` over all codewords.
fn distance_histogram(basis: &CodewordBasis, y: &[u64]) -> Vec<u64> {
    let mut hist = vec![0u64; basis.len() + 1];
    basis.gray_walk(|x, _| {
        let d: u32 = x.iter().zip(y).map(|(a, b)| (a ^ b).count_ones()).sum();
        hist[d as usize] += 1;
    });
    hist
}

/// `ln Z` for `Z = Σ_{x∈code} exp(Σ_i (-1)^{x_i} h_i)`.
pub fn log_partition(g: &TannerGraph, fields: &[f64], caps: &ExactCaps) -> Result<f64> {
    if fields.len() != g.num_vars() {
        return Err(Error::invalid("field vector length differs from n"));
    }
    let basis = codeword_basis(g);
    basis.require_dim(caps.max_kernel_dim)?;
    Ok(log_partition_with_basis(&basis, fields))
}

/// [`log_partition`] for a precomputed basis.
///
/// When all `|h_i|` coincide the sum collapses onto the distance histogram
/// from the sign pattern of the fields; otherwise the exponent is updated
/// incrementally along the Gray walk.
pub fn log_partition_with_basis(basis: &CodewordBasis, fields: &[f64]) -> f64 {
    let n = basis.len();
    let mag = fields.first().map_or(0.0, |h| h.abs());
    if fields.iter().all(|h| h.abs() == mag) {
        let hist = distance_histogram(basis, &pack_signs(fields));
        return log_sum_exp(
            hist.iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(w, &c)| (c as f64).ln() + mag * (n as f64 - 2.0 * w as f64)),
        );
    }

    let mut acc = LogSumExp::default();
    let mut exponent: f64 = fields.iter().sum();
    basis.gray_walk(|x, flipped| {
        if let Some(j) = flipped {
            for (w, &word) in basis.vectors[j].iter().enumerate() {
                let mut bits = word;
                while bits != 0 {
                    let b = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    let i = w * 64 + b;
                    let now_set = (x[w] >> b) & 1 == 1;
                    exponent += if now_set {
                        -2.0 * fields[i]
                    } else {
                        2.0 * fields[i]
                    };
                }
            }
        }
        acc.add(exponent);
    });
    acc.value()
}

fn require_joint(n: usize, k: usize, caps: &ExactCaps) -> Result<()> {
    if n > caps.max_outputs_n || n + k > caps.max_joint_log2 || n >= 64 {
        return Err(Error::CapExceeded {
            what: "output × codeword enumeration",
            needed: 1u128 << (n + k).min(127),
            cap: 1u128 << caps.max_joint_log2.min(127),
        });
    }
    Ok(())
}

/// `H(X|Y)/n` through the free-energy identity
/// `(1/n) E_h[ln Z] − ((1−2p)/2) ln((1−p)/p)`, with the expectation taken
/// exactly over all channel outputs of the all-zero codeword.
pub fn conditional_entropy_exact(g: &TannerGraph, p: f64, caps: &ExactCaps) -> Result<f64> {
    let h = half_llr(p)?;
    let n = g.num_vars();
    let basis = codeword_basis(g);
    basis.require_dim(caps.max_kernel_dim)?;
    require_joint(n, basis.dim(), caps)?;
    let mut mean_log_z = 0.0;
    for (real, prob) in enumerate_outputs(n, p, caps.max_outputs_n)? {
        mean_log_z += prob * log_partition_with_basis(&basis, &real.fields());
    }
    Ok(mean_log_z / n as f64 - (1.0 - 2.0 * p) * h)
}

/// `H(X|Y)/n` from the joint law of a uniform codeword `X` and its BSC
/// output `Y`: `−Σ_{x,y} P(x,y) ln P(x|y)`.
pub fn conditional_entropy_direct(g: &TannerGraph, p: f64, caps: &ExactCaps) -> Result<f64> {
    half_llr(p)?;
    let n = g.num_vars();
    let basis = codeword_basis(g);
    basis.require_dim(caps.max_kernel_dim)?;
    let k = basis.dim();
    require_joint(n, k, caps)?;

    // every codeword, built from its coefficient vector
    let codewords: Vec<u64> = (0u64..1 << k)
        .map(|c| {
            basis
                .vectors()
                .iter()
                .enumerate()
                .filter(|(j, _)| (c >> j) & 1 == 1)
                .fold(0u64, |acc, (_, v)| acc ^ v[0])
        })
        .collect();
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    let prior = -(k as f64) * LN_2;
    let mut joint = vec![0.0; codewords.len()];
    let mut entropy = 0.0;
    for y in 0u64..1 << n {
        for (slot, &x) in joint.iter_mut().zip(&codewords) {
            let d = (x ^ y).count_ones() as f64;
            *slot = prior + d * lp + (n as f64 - d) * lq;
        }
        let log_py = log_sum_exp(joint.iter().copied());
        entropy -= joint
            .iter()
            .map(|&lj| lj.exp() * (lj - log_py))
            .sum::<f64>();
    }
    Ok(entropy / n as f64)
}
