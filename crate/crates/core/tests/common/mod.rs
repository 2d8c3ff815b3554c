#![allow(dead_code)]

use std::collections::BTreeMap;

use hfz2::{BraidWord, Computation, Config, DimTable};

/// Braids with at most 3 strands and 4 letters, used for Markov checks.
/// Three-strand words stop at 3 letters so every conjugate stays at 5 crossings.
pub const MARKOV_CORPUS: &[&str] = &[
    "1;",
    "2;",
    "3;",
    "2;1",
    "2;-1",
    "2;1,1",
    "2;-1,-1",
    "2;1,1,1",
    "2;-1,-1,-1",
    "2;1,1,-1",
    "2;1,1,1,1",
    "2;-1,-1,-1,-1",
    "2;1,1,1,-1",
    "3;1",
    "3;-2",
    "3;1,2",
    "3;2,1",
    "3;1,-2",
    "3;-1,-2",
    "3;1,1,2",
    "3;1,2,1",
    "3;1,-2,1",
    "3;1,1,-2",
    "3;-1,-1,2",
];

/// Braids for the spectral sequence, oracle and structural checks.
pub const CORPUS: &[&str] = &[
    "1;",
    "2;",
    "3;",
    "2;-1",
    "2;1,1",
    "2;1,1,1",
    "3;1,-2",
    "3;1,-2,1,-2",
];

pub fn word(s: &str) -> BraidWord {
    s.parse().expect("valid braid")
}

pub fn computation(s: &str) -> Computation {
    Computation::new(&word(s), &Config::default()).expect("assembles")
}

pub fn homfly(s: &str, t_max: i32) -> DimTable {
    computation(s).homfly_tables(t_max).expect("homfly").0
}

/// Build an entry map from (grading..., dim) tuples.
pub fn entries(rows: &[&[i32]]) -> BTreeMap<Vec<i32>, u64> {
    rows.iter()
        .map(|r| (r[..r.len() - 1].to_vec(), r[r.len() - 1] as u64))
        .collect()
}

pub fn binomial(n: i64, k: i64) -> u64 {
    if k < 0 || n < k {
        return 0;
    }
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// The m-unlink table through x-degree `2 * t_max`.
pub fn unlink_table(m: i32, t_max: i32) -> BTreeMap<Vec<i32>, u64> {
    let mut out = BTreeMap::new();
    for t in 0..=t_max {
        for l in 0..=m.min(t) {
            let d = binomial(m.into(), l.into()) * binomial((t - l + m - 1).into(), (m - 1).into());
            out.insert(vec![m - 2 * l, -m, 2 * t], d);
        }
    }
    out
}

/// Σ (−1)^h q^q dim.
pub fn euler_characteristic(kh: &DimTable) -> BTreeMap<i32, i64> {
    let mut out = BTreeMap::new();
    for (k, &d) in &kh.entries {
        let sign = if k[0].rem_euclid(2) == 0 { 1 } else { -1 };
        *out.entry(k[1]).or_insert(0) += sign * d as i64;
    }
    out.retain(|_, c| *c != 0);
    out
}
