//! Independent invariants for cross-checking: the HOMFLYPT series by skein
//! recursion and the Jones polynomial by a Kauffman state sum.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Mutex, OnceLock};

use thiserror::Error;

use crate::analysis::LaurentSeries;
use crate::braid::BraidWord;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("skein recursion exceeded {0} evaluations")]
    Budget(usize),
    #[error("{crossings} crossings exceed the state-sum bound {bound}")]
    TooManyCrossings { crossings: usize, bound: usize },
    #[error("truncation must be nonnegative")]
    Truncation,
}

/// Laurent polynomial in (a, x) with integer coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct Laurent2(BTreeMap<(i32, i32), i64>);

impl Laurent2 {
    fn monomial(c: i64, a: i32, x: i32) -> Self {
        let mut m = BTreeMap::new();
        if c != 0 {
            m.insert((a, x), c);
        }
        Laurent2(m)
    }

    fn add(&self, other: &Self) -> Self {
        let mut out = self.0.clone();
        for (k, c) in &other.0 {
            let e = out.entry(*k).or_insert(0);
            *e += c;
            if *e == 0 {
                out.remove(k);
            }
        }
        Laurent2(out)
    }

    fn mul(&self, other: &Self) -> Self {
        let mut out = Laurent2::default();
        for (&(a1, x1), c1) in &self.0 {
            for (&(a2, x2), c2) in &other.0 {
                out = out.add(&Laurent2::monomial(c1 * c2, a1 + a2, x1 + x2));
            }
        }
        out
    }

    fn pow(&self, n: u32) -> Self {
        (0..n).fold(Laurent2::monomial(1, 0, 0), |acc, _| acc.mul(self))
    }
}

/// N / (1 − x²)^k.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Fraction {
    num: Laurent2,
    k: u32,
}

impl Fraction {
    fn one_minus_x2() -> Laurent2 {
        Laurent2::monomial(1, 0, 0).add(&Laurent2::monomial(-1, 0, 2))
    }

    fn raise(&self, k: u32) -> Laurent2 {
        self.num.mul(&Self::one_minus_x2().pow(k - self.k))
    }

    fn add(&self, other: &Self) -> Self {
        let k = self.k.max(other.k);
        Fraction {
            num: self.raise(k).add(&other.raise(k)),
            k,
        }
    }

    fn scale(&self, c: &Laurent2) -> Self {
        Fraction {
            num: self.num.mul(c),
            k: self.k,
        }
    }

    fn series(&self, truncation: i32) -> LaurentSeries {
        let mut out = LaurentSeries::zero(truncation);
        let k = self.k as i64;
        for (&(a, x), &c) in &self.num.0 {
            let mut n = 0i64;
            while x + 2 * n as i32 <= truncation {
                // coefficient of x^{2n} in (1 − x²)^{−k}
                let coeff = if k == 0 {
                    i64::from(n == 0)
                } else {
                    binomial(n + k - 1, k - 1)
                };
                out.add_term(a, x + 2 * n as i32, c * coeff);
                n += 1;
            }
        }
        out
    }
}

fn binomial(n: i64, k: i64) -> i64 {
    if k < 0 || n < k {
        return 0;
    }
    (0..k).fold(1i64, |acc, i| acc * (n - i) / (i + 1))
}

const SKEIN_BUDGET: usize = 200_000;

fn memo() -> &'static Mutex<HashMap<String, Fraction>> {
    static MEMO: OnceLock<Mutex<HashMap<String, Fraction>>> = OnceLock::new();
    MEMO.get_or_init(|| Mutex::new(HashMap::new()))
}

/// F̂ of the closure of `word`, truncated at x^`truncation`.
pub fn homfly_series(word: &BraidWord, truncation: i32) -> Result<LaurentSeries, OracleError> {
    if truncation < 0 {
        return Err(OracleError::Truncation);
    }
    let mut budget = SKEIN_BUDGET;
    Ok(skein(word, &mut budget)?.series(truncation))
}

fn skein(word: &BraidWord, budget: &mut usize) -> Result<Fraction, OracleError> {
    let word = word.free_reduce();
    let key = word.to_string();
    if let Some(f) = memo().lock().expect("skein memo poisoned").get(&key) {
        return Ok(f.clone());
    }
    if *budget == 0 {
        return Err(OracleError::Budget(SKEIN_BUDGET));
    }
    *budget -= 1;
    let value = match first_bad_crossing(&word) {
        None => unlink_value(&word),
        Some(t) => {
            let g = word.letters()[t];
            let mut switched = word.letters().to_vec();
            switched[t] = -g;
            let mut smoothed = word.letters().to_vec();
            smoothed.remove(t);
            let f_switch = skein(&BraidWord::new(word.strands(), switched).expect("same strands"), budget)?;
            let f_smooth = skein(&BraidWord::new(word.strands(), smoothed).expect("same strands"), budget)?;
            let m = Laurent2::monomial;
            if g > 0 {
                // F₊ = x⁻²a⁴F₋ + (x⁻² − 1)a²F₀
                f_switch
                    .scale(&m(1, 4, -2))
                    .add(&f_smooth.scale(&m(1, 2, -2).add(&m(-1, 2, 0))))
            } else {
                // F₋ = x²a⁻⁴F₊ − (1 − x²)a⁻²F₀
                f_switch
                    .scale(&m(1, -4, 2))
                    .add(&f_smooth.scale(&m(-1, -2, 0).add(&m(1, -2, 2))))
            }
        }
    };
    memo()
        .lock()
        .expect("skein memo poisoned")
        .insert(key, value.clone());
    Ok(value)
}

/// (−1)^{(sl+m)/2} a^{sl+m} F_U^m for a closure isotopic to the m-unlink.
fn unlink_value(word: &BraidWord) -> Fraction {
    let stats = word.closure_stats();
    let m = stats.components as i32;
    let e = stats.self_linking + m;
    let sign = if (e / 2).rem_euclid(2) == 0 { 1 } else { -1 };
    let fu = Laurent2::monomial(1, 0, 0).add(&Laurent2::monomial(1, -2, 2));
    Fraction {
        num: fu.pow(m as u32).mul(&Laurent2::monomial(sign, e, 0)),
        k: m as u32,
    }
}

/// Index of the first crossing reached first along its under-strand, walking
/// the components in order from the top of their leftmost strands.
fn first_bad_crossing(word: &BraidWord) -> Option<usize> {
    let n = word.len();
    let b = word.strands();
    let mut visited = vec![false; n];
    let mut started = vec![false; b];
    for start in 0..b {
        if started[start] {
            continue;
        }
        let mut p = start;
        loop {
            started[p] = true;
            for (t, &g) in word.letters().iter().enumerate() {
                let k = g.unsigned_abs() as usize;
                let left = p + 1 == k;
                if !left && p != k {
                    continue;
                }
                if !visited[t] {
                    visited[t] = true;
                    // σ_k: the strand entering on the left passes over.
                    let over = left == (g > 0);
                    if !over {
                        return Some(t);
                    }
                }
                p = if left { k } else { k - 1 };
            }
            if p == start {
                break;
            }
        }
    }
    None
}

/// Laurent polynomial in q.
pub type QPoly = BTreeMap<i32, i64>;

pub const STATE_SUM_BOUND: usize = 20;

/// (number of 1-smoothings, circle count) of every Kauffman state, with
/// 1-smoothing horizontal at positive and vertical at negative crossings.
fn states(word: &BraidWord) -> Vec<(usize, usize)> {
    let n = word.len();
    let b = word.strands();
    let node = |level: usize, p: usize| (level % n.max(1)) * b + p;
    let mut out = Vec::with_capacity(1 << n);
    for mask in 0u32..(1u32 << n) {
        let mut parent: Vec<usize> = (0..n.max(1) * b).collect();
        fn find(parent: &mut [usize], mut a: usize) -> usize {
            while parent[a] != a {
                parent[a] = parent[parent[a]];
                a = parent[a];
            }
            a
        }
        let mut union = |a: usize, c: usize| {
            let (ra, rc) = (find(&mut parent, a), find(&mut parent, c));
            if ra != rc {
                parent[ra] = rc;
            }
        };
        for (t, &g) in word.letters().iter().enumerate() {
            let k = g.unsigned_abs() as usize;
            let one = mask >> t & 1 == 1;
            let horizontal = one == (g > 0);
            for p in 0..b {
                if p + 1 == k || p == k {
                    continue;
                }
                union(node(t, p), node(t + 1, p));
            }
            if horizontal {
                union(node(t, k - 1), node(t, k));
                union(node(t + 1, k - 1), node(t + 1, k));
            } else {
                union(node(t, k - 1), node(t + 1, k - 1));
                union(node(t, k), node(t + 1, k));
            }
        }
        let circles = (0..n.max(1) * b).filter(|&a| find(&mut parent, a) == a).count();
        out.push((mask.count_ones() as usize, circles));
    }
    out
}

fn crossing_counts(word: &BraidWord) -> (i32, i32) {
    let pos = word.letters().iter().filter(|&&g| g > 0).count() as i32;
    (pos, word.len() as i32 - pos)
}

/// Unreduced Jones polynomial, normalized so the unknot gives q + q⁻¹; the
/// closure of a positive braid has positive q-powers.
pub fn jones_kauffman(word: &BraidWord) -> Result<QPoly, OracleError> {
    if word.len() > STATE_SUM_BOUND {
        return Err(OracleError::TooManyCrossings {
            crossings: word.len(),
            bound: STATE_SUM_BOUND,
        });
    }
    let (np, nm) = crossing_counts(word);
    let mut out = QPoly::new();
    for (ones, circles) in states(word) {
        let sign = if (ones as i32 - nm).rem_euclid(2) == 0 { 1 } else { -1 };
        let shift = ones as i32 + np - 2 * nm;
        // (q + q⁻¹)^r
        for k in 0..=circles {
            let coeff = binomial(circles as i64, k as i64);
            let q = shift + circles as i32 - 2 * k as i32;
            *out.entry(q).or_insert(0) += sign * coeff;
        }
    }
    out.retain(|_, c| *c != 0);
    Ok(out)
}

/// Bound on |q| over the Khovanov chain complex of the closure.
pub fn khovanov_q_bound(word: &BraidWord) -> i32 {
    let (np, nm) = crossing_counts(word);
    if word.len() > STATE_SUM_BOUND {
        // Crude bound without enumerating states.
        return word.len() as i32 * 3 + word.strands() as i32 + word.len() as i32;
    }
    states(word)
        .into_iter()
        .map(|(ones, circles)| (ones as i32 + np - 2 * nm).abs() + circles as i32)
        .max()
        .unwrap_or(0)
}
