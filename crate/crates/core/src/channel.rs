//! Binary symmetric channel under the all-zero codeword convention.
//!
//! A realization is the received word `y`; the field seen by variable `i` is
//! `h_i = (-1)^{y_i} h` with `h = ½ ln((1-p)/p)`.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default bound on `n` for [`enumerate_outputs`].
pub const DEFAULT_OUTPUT_CAP: usize = 22;

/// Half-log-likelihood magnitude `½ ln((1-p)/p)` in nats.
pub fn half_llr(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!(
            "flip probability p={p} must lie strictly inside (0,1); the log-likelihood is infinite"
        )));
    }
    Ok(0.5 * ((1.0 - p) / p).ln())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    pub p: f64,
    pub h: f64,
    /// Received bits; under the all-zero convention these are the flips.
    pub y: Vec<bool>,
}

impl ChannelRealization {
    pub fn new(p: f64, y: Vec<bool>) -> Result<Self> {
        Ok(Self {
            p,
            h: half_llr(p)?,
            y,
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn flips(&self) -> usize {
        self.y.iter().filter(|&&b| b).count()
    }

    /// Per-variable fields `h_i = (-1)^{y_i} h`.
    pub fn fields(&self) -> Vec<f64> {
        self.y
            .iter()
            .map(|&b| if b { -self.h } else { self.h })
            .collect()
    }

    /// The realization with every received bit flipped.
    pub fn complement(&self) -> Self {
        Self {
            p: self.p,
            h: self.h,
            y: self.y.iter().map(|b| !b).collect(),
        }
    }
}

/// Draws `y_i ~ Bernoulli(p)` independently; deterministic in `seed`.
pub fn sample_bsc(n: usize, p: f64, seed: u64) -> Result<ChannelRealization> {
    half_llr(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y = (0..n).map(|_| rng.random_bool(p)).collect();
    ChannelRealization::new(p, y)
}

/// Iterator over all `2^n` channel outputs with their probabilities
/// `p^w (1-p)^(n-w)`. Output `k` has `y_i = bit i of k`.
#[derive(Debug, Clone)]
pub struct OutputEnumeration {
    n: usize,
    p: f64,
    next: u64,
    end: u64,
}

impl Iterator for OutputEnumeration {
    type Item = (ChannelRealization, f64);

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.end {
            return None;
        }
        let k = self.next;
        self.next += 1;
        let y: Vec<bool> = (0..self.n).map(|i| (k >> i) & 1 == 1).collect();
        let prob = output_probability(self.n, k.count_ones() as usize, self.p);
        let real = ChannelRealization::new(self.p, y).expect("p validated at construction");
        Some((real, prob))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.end - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for OutputEnumeration {}

/// Probability of a specific output word with `w` flips out of `n`.
pub fn output_probability(n: usize, w: usize, p: f64) -> f64 {
    p.powi(w as i32) * (1.0 - p).powi((n - w) as i32)
}

pub fn enumerate_outputs(n: usize, p: f64, cap: usize) -> Result<OutputEnumeration> {
    half_llr(p)?;
    if n > cap || n >= 64 {
        return Err(Error::CapExceeded {
            what: "channel output enumeration",
            needed: 1u128 << n.min(127),
            cap: 1u128 << cap.min(127),
        });
    }
    Ok(OutputEnumeration {
        n,
        p,
        next: 0,
        end: 1u64 << n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_llr_values() {
        assert_eq!(half_llr(0.5).unwrap(), 0.0);
        assert!((half_llr(0.1).unwrap() - 0.5 * 9f64.ln()).abs() < 1e-15);
        assert!((half_llr(0.1).unwrap() - 1.0986123).abs() < 1e-7);
        assert!(half_llr(0.0).is_err());
        assert!(half_llr(1.0).is_err());
        assert!(half_llr(f64::NAN).is_err());
    }

    #[test]
    fn half_llr_antisymmetric_and_decreasing() {
        let mut prev = f64::INFINITY;
        for k in 1..100 {
            let p = k as f64 / 100.0;
            let h = half_llr(p).unwrap();
            assert!(h < prev);
            assert!((h + half_llr(1.0 - p).unwrap()).abs() < 1e-12);
            prev = h;
        }
    }

    #[test]
    fn tiny_p_gives_no_flips() {
        let c = sample_bsc(20, 1e-9, 17).unwrap();
        assert_eq!(c.flips(), 0);
        assert!(c.fields().iter().all(|&h| h > 0.0));
    }

    #[test]
    fn flip_fraction_at_half() {
        let n = 100_000;
        let c = sample_bsc(n, 0.5, 4).unwrap();
        let frac = c.flips() as f64 / n as f64;
        assert!(
            (frac - 0.5).abs() <= 3.0 * (0.25 / n as f64).sqrt(),
            "{frac}"
        );
    }

    #[test]
    fn sampling_deterministic() {
        assert_eq!(
            sample_bsc(50, 0.3, 8).unwrap(),
            sample_bsc(50, 0.3, 8).unwrap()
        );
        assert_ne!(
            sample_bsc(50, 0.3, 8).unwrap(),
            sample_bsc(50, 0.3, 9).unwrap()
        );
    }

    #[test]
    fn field_signs_follow_bits() {
        let c = sample_bsc(30, 0.3, 1).unwrap();
        for (h, &y) in c.fields().iter().zip(&c.y) {
            assert_eq!(*h < 0.0, y);
            assert!((h.abs() - c.h).abs() == 0.0);
        }
        let flipped = c.complement().fields();
        for (a, b) in c.fields().iter().zip(&flipped) {
            assert_eq!(*a, -*b);
        }
    }

    #[test]
    fn enumeration_small_cases() {
        let p = 0.3;
        let out: Vec<_> = enumerate_outputs(1, p, DEFAULT_OUTPUT_CAP)
            .unwrap()
            .collect();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].0.y, vec![false]);
        assert!((out[0].1 - 0.7).abs() < 1e-15);
        assert!((out[1].1 - 0.3).abs() < 1e-15);
        let total: f64 = enumerate_outputs(2, 0.17, DEFAULT_OUTPUT_CAP)
            .unwrap()
            .map(|(_, q)| q)
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn enumeration_cardinality_and_normalization() {
        let it = enumerate_outputs(20, 0.41, DEFAULT_OUTPUT_CAP).unwrap();
        assert_eq!(it.len(), 1 << 20);
        let mut count = 0usize;
        let mut total = crate::loops::NeumaierSum::default();
        for (_, q) in it {
            count += 1;
            total.add(q);
        }
        let total = total.value();
        assert_eq!(count, 1_048_576);
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn enumeration_cap() {
        assert!(matches!(
            enumerate_outputs(23, 0.4, DEFAULT_OUTPUT_CAP),
            Err(Error::CapExceeded { .. })
        ));
        assert!(enumerate_outputs(3, 0.0, DEFAULT_OUTPUT_CAP).is_err());
    }
}
