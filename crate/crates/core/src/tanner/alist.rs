//! The alist text format (1-based indices).
//!
//! ```text
//! n m
//! l r            maximum column / row degrees
//! d_1 ... d_n    column (variable) degrees
//! e_1 ... e_m    row (check) degrees
//! n lines        check indices of each variable
//! m lines        variable indices of each check
//! ```

use std::fmt::Write as _;

use super::TannerGraph;
use crate::{Error, Result};

pub fn save_alist(g: &TannerGraph) -> String {
    let join = |it: &mut dyn Iterator<Item = usize>| {
        it.map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
    };
    let (n, m) = (g.num_vars(), g.num_checks());
    let mut out = String::new();
    let _ = writeln!(out, "{n} {m}");
    let _ = writeln!(out, "{} {}", g.max_var_degree(), g.max_check_degree());
    let _ = writeln!(out, "{}", join(&mut (0..n).map(|i| g.var_degree(i))));
    let _ = writeln!(out, "{}", join(&mut (0..m).map(|a| g.check_degree(a))));
    for i in 0..n {
        let _ = writeln!(out, "{}", join(&mut g.var_neighbors(i).map(|a| a + 1)));
    }
    for a in 0..m {
        let _ = writeln!(out, "{}", join(&mut g.check_neighbors(a).map(|i| i + 1)));
    }
    out
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Alist {
        line,
        msg: msg.into(),
    }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    /// Next line as a list of integers, with its 1-based line number.
    fn next_ints(&mut self, what: &str) -> Result<(usize, Vec<usize>)> {
        let (idx, text) = self
            .inner
            .next()
            .ok_or_else(|| err(0, format!("unexpected end of input, expected {what}")))?;
        let line = idx + 1;
        let vals = text
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| err(line, format!("invalid integer {t:?} in {what}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((line, vals))
    }
}

fn expect_len(line: usize, vals: &[usize], len: usize, what: &str) -> Result<()> {
    if vals.len() != len {
        return Err(err(
            line,
            format!("{what}: expected {len} entries, found {}", vals.len()),
        ));
    }
    Ok(())
}

pub fn load_alist(text: &str) -> Result<TannerGraph> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let (ln, hdr) = lines.next_ints("header")?;
    expect_len(ln, &hdr, 2, "header")?;
    let (n, m) = (hdr[0], hdr[1]);
    let (ln, maxes) = lines.next_ints("max degrees")?;
    expect_len(ln, &maxes, 2, "max degrees")?;
    let (ln_col, col_deg) = lines.next_ints("column degrees")?;
    expect_len(ln_col, &col_deg, n, "column degrees")?;
    let (ln_row, row_deg) = lines.next_ints("row degrees")?;
    expect_len(ln_row, &row_deg, m, "row degrees")?;
    if col_deg.iter().copied().max().unwrap_or(0) != maxes[0] {
        return Err(err(
            ln_col,
            format!("column degrees disagree with l={}", maxes[0]),
        ));
    }
    if row_deg.iter().copied().max().unwrap_or(0) != maxes[1] {
        return Err(err(
            ln_row,
            format!("row degrees disagree with r={}", maxes[1]),
        ));
    }

    let mut from_vars = Vec::new();
    for (i, &d) in col_deg.iter().enumerate() {
        let (ln, vals) = lines.next_ints("variable adjacency")?;
        expect_len(ln, &vals, d, "variable adjacency")?;
        for a in vals {
            if a == 0 || a > m {
                return Err(err(ln, format!("check index {a} outside 1..={m}")));
            }
            from_vars.push((i, a - 1));
        }
    }
    let mut from_checks = Vec::new();
    for (a, &d) in row_deg.iter().enumerate() {
        let (ln, vals) = lines.next_ints("check adjacency")?;
        expect_len(ln, &vals, d, "check adjacency")?;
        for i in vals {
            if i == 0 || i > n {
                return Err(err(ln, format!("variable index {i} outside 1..={n}")));
            }
            from_checks.push((i - 1, a));
        }
    }
    let last = text.lines().count();
    let mut a = from_vars.clone();
    let mut b = from_checks;
    a.sort_unstable();
    b.sort_unstable();
    if a != b {
        return Err(err(last, "variable and check adjacency lists disagree"));
    }
    TannerGraph::from_edges(n, m, &from_vars).map_err(|e| err(last, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tanner::generate_regular;

    #[test]
    fn round_trip() {
        for seed in 0..4 {
            let g = generate_regular(12, 3, 4, seed).unwrap();
            let text = save_alist(&g);
            assert_eq!(load_alist(&text).unwrap(), g);
        }
    }

    #[test]
    fn header_layout() {
        let g = generate_regular(6, 3, 6, 1).unwrap();
        let text = save_alist(&g);
        let mut it = text.lines();
        assert_eq!(it.next(), Some("6 3"));
        assert_eq!(it.next(), Some("3 6"));
        assert_eq!(it.next(), Some("3 3 3 3 3 3"));
        assert_eq!(it.next(), Some("6 6 6"));
        assert_eq!(it.next(), Some("1 2 3"));
    }

    #[test]
    fn column_degree_mismatch() {
        let g = generate_regular(6, 3, 6, 1).unwrap();
        let text = save_alist(&g).replacen("3 3 3 3 3 3", "2 2 2 2 2 2", 1);
        assert!(matches!(
            load_alist(&text),
            Err(Error::Alist { line: 3, .. })
        ));
    }

    #[test]
    fn zero_based_index_rejected() {
        let text = "2 1\n1 2\n1 1\n2\n1\n1\n1 2\n";
        assert!(load_alist(text).is_ok());
        let text = "2 1\n1 2\n1 1\n2\n0\n1\n1 2\n";
        assert!(matches!(
            load_alist(text),
            Err(Error::Alist { line: 5, .. })
        ));
    }

    #[test]
    fn malformed_header_and_inconsistency() {
        assert!(load_alist("2\n").is_err());
        assert!(load_alist("a b\n").is_err());
        assert!(load_alist("").is_err());
        // check list names a different variable than the variable lists
        let text = "2 1\n1 2\n1 1\n2\n1\n1\n1 1\n";
        assert!(load_alist(text).is_err());
    }
}
