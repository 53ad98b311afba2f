//! Dense GF(2) matrices packed into 64-bit words.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMatrix {
    rows: usize,
    cols: usize,
    words: usize,
    data: Vec<u64>,
}

impl BinaryMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words = cols.div_ceil(64);
        Self {
            rows,
            cols,
            words,
            data: vec![0; rows * words],
        }
    }

    pub fn identity(size: usize) -> Self {
        let mut m = Self::zeros(size, size);
        for k in 0..size {
            m.set(k, k, true);
        }
        m
    }

    /// Builds a matrix from 0/1 rows.
    pub fn from_rows(rows: &[Vec<u8>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), cols, "ragged rows");
            for (c, &v) in row.iter().enumerate() {
                m.set(r, c, v != 0);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        (self.row(r)[c / 64] >> (c % 64)) & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        let w = &mut self.data[r * self.words + c / 64];
        if v {
            *w |= 1 << (c % 64);
        } else {
            *w &= !(1 << (c % 64));
        }
    }

    /// Packed words of row `r`; bit `c % 64` of word `c / 64` is column `c`.
    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.words..(r + 1) * self.words]
    }

    pub fn row_weight(&self, r: usize) -> usize {
        self.row(r).iter().map(|w| w.count_ones() as usize).sum()
    }

    /// `H·v` over GF(2) for a packed column vector `v`.
    pub fn mul_vec(&self, v: &[u64]) -> Vec<bool> {
        (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v)
                    .map(|(a, b)| (a & b).count_ones())
                    .sum::<u32>()
                    % 2
                    == 1
            })
            .collect()
    }

    /// Reduced row echelon form; returns the pivot column of each nonzero row.
    fn reduce(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..self.cols {
            if row == self.rows {
                break;
            }
            let (w, bit) = (col / 64, 1u64 << (col % 64));
            let Some(p) = (row..self.rows).find(|&r| self.data[r * self.words + w] & bit != 0)
            else {
                continue;
            };
            if p != row {
                for k in 0..self.words {
                    self.data.swap(p * self.words + k, row * self.words + k);
                }
            }
            for r in 0..self.rows {
                if r != row && self.data[r * self.words + w] & bit != 0 {
                    for k in 0..self.words {
                        let src = self.data[row * self.words + k];
                        self.data[r * self.words + k] ^= src;
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        pivots
    }

    /// Rank over GF(2) by Gaussian elimination.
    pub fn rank(&self) -> usize {
        self.clone().reduce().len()
    }

    /// A basis of the right kernel `{v : H·v = 0}`, each vector packed like a row.
    pub fn nullspace(&self) -> Vec<Vec<u64>> {
        let mut m = self.clone();
        let pivots = m.reduce();
        let mut is_pivot = vec![false; self.cols];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let mut basis = Vec::new();
        for free in (0..self.cols).filter(|&c| !is_pivot[c]) {
            let mut v = vec![0u64; self.words];
            v[free / 64] |= 1 << (free % 64);
            for (r, &p) in pivots.iter().enumerate() {
                if m.get(r, free) {
                    v[p / 64] |= 1 << (p % 64);
                }
            }
            basis.push(v);
        }
        basis
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_examples() {
        assert_eq!(BinaryMatrix::identity(3).rank(), 3);
        let same = BinaryMatrix::from_rows(&[vec![1, 0, 1], vec![1, 0, 1], vec![1, 0, 1]]);
        assert_eq!(same.rank(), 1);
        assert_eq!(BinaryMatrix::zeros(4, 5).rank(), 0);
    }

    #[test]
    fn rank_wide_matrix_across_words() {
        let mut m = BinaryMatrix::zeros(3, 130);
        m.set(0, 0, true);
        m.set(0, 129, true);
        m.set(1, 129, true);
        m.set(2, 0, true);
        assert_eq!(m.rank(), 2);
        let ker = m.nullspace();
        assert_eq!(ker.len(), 128);
        for v in &ker {
            assert!(m.mul_vec(v).iter().all(|&b| !b));
        }
    }

    #[test]
    fn nullspace_annihilated() {
        let m = BinaryMatrix::from_rows(&[
            vec![1, 1, 0, 1, 0, 0],
            vec![0, 1, 1, 0, 1, 0],
            vec![1, 0, 1, 0, 0, 1],
            vec![1, 1, 0, 1, 0, 0],
        ]);
        let ker = m.nullspace();
        assert_eq!(ker.len(), 6 - m.rank());
        for v in &ker {
            assert!(m.mul_vec(v).iter().all(|&b| !b));
        }
    }
}
