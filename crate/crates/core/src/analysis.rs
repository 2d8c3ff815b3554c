//! Post-processing of dimension tables: Hilbert polynomials, the unlink
//! pattern, Euler series and the Hilbert skein identity.

use std::collections::BTreeMap;

use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::braid::BraidWord;
use crate::pipeline::{DimTable, TableKind};

pub type Q = Ratio<i64>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("no polynomial of degree < {m_bound} fits; mismatch at T = {t}")]
    FitFailed { m_bound: usize, t: i32 },
    #[error("fit of row (i, j) = ({i}, {j}) failed: {source}")]
    RowFit {
        i: i32,
        j: i32,
        source: Box<AnalysisError>,
    },
    #[error("Hilbert degree gives {fitted} components, the braid has {actual}")]
    ComponentMismatch { fitted: usize, actual: usize },
    #[error("component count must be positive")]
    BadComponentCount,
    #[error("odd vertical degree {0} in hat table")]
    OddVertical(i32),
    #[error("expected a {expected} table, got {got}")]
    WrongKind { expected: &'static str, got: &'static str },
}

/// Polynomial in T with rational coefficients, constant term first.
/// Serialized as coefficient strings such as "1/2".
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(into = "Vec<String>", try_from = "Vec<String>")]
pub struct TPoly(pub Vec<Q>);

impl From<TPoly> for Vec<String> {
    fn from(p: TPoly) -> Self {
        p.0.iter().map(|c| c.to_string()).collect()
    }
}

impl TryFrom<Vec<String>> for TPoly {
    type Error = String;
    fn try_from(v: Vec<String>) -> Result<Self, String> {
        let coeffs = v
            .iter()
            .map(|s| s.parse::<Q>().map_err(|e| format!("{s:?}: {e}")))
            .collect::<Result<_, _>>()?;
        Ok(TPoly::normalized(coeffs))
    }
}

impl TPoly {
    fn normalized(mut v: Vec<Q>) -> Self {
        while v.last().is_some_and(|c| c.is_zero()) {
            v.pop();
        }
        TPoly(v)
    }

    pub fn constant(c: i64) -> Self {
        Self::normalized(vec![Q::from_integer(c)])
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// None for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn eval(&self, t: i32) -> Q {
        let t = Q::from_integer(i64::from(t));
        self.0.iter().rev().fold(Q::zero(), |acc, c| acc * t + c)
    }

    pub fn add(&self, other: &TPoly) -> TPoly {
        let n = self.0.len().max(other.0.len());
        let get = |p: &TPoly, k: usize| p.0.get(k).copied().unwrap_or_else(Q::zero);
        Self::normalized((0..n).map(|k| get(self, k) + get(other, k)).collect())
    }

    pub fn scale(&self, c: Q) -> TPoly {
        Self::normalized(self.0.iter().map(|x| x * c).collect())
    }

    fn mul(&self, other: &TPoly) -> TPoly {
        if self.is_zero() || other.is_zero() {
            return TPoly::default();
        }
        let mut out = vec![Q::zero(); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::normalized(out)
    }

    /// p(T + 1).
    pub fn shift(&self) -> TPoly {
        let lin = TPoly(vec![Q::one(), Q::one()]);
        self.0.iter().rev().fold(TPoly::default(), |acc, c| {
            acc.mul(&lin).add(&TPoly::normalized(vec![*c]))
        })
    }
}

impl std::fmt::Display for TPoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.0.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "{c}")?,
                1 => write!(f, "{c}*T")?,
                _ => write!(f, "{c}*T^{k}")?,
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HilbertFit {
    pub polynomial: TPoly,
    pub stable_from: i32,
    pub verified_through: i32,
}

/// Fit a polynomial of degree < `m_bound` to the last `m_bound` samples and
/// verify it on the three samples before them. `dims` must cover a
/// contiguous range of T.
pub fn hilbert_fit(dims: &BTreeMap<i32, u64>, m_bound: usize) -> Result<HilbertFit, AnalysisError> {
    let samples: Vec<(i32, u64)> = dims.iter().map(|(&t, &d)| (t, d)).collect();
    let needed = m_bound + 3;
    if samples.len() < needed || m_bound == 0 {
        return Err(AnalysisError::InsufficientSamples {
            needed,
            got: samples.len(),
        });
    }
    let tail = &samples[samples.len() - m_bound..];
    let poly = lagrange(tail);
    let mut stable_from = tail[0].0;
    for (k, &(t, d)) in samples[..samples.len() - m_bound].iter().enumerate().rev() {
        let matches = poly.eval(t) == Q::from_integer(d as i64);
        let within_check = samples.len() - m_bound - k <= 3;
        if !matches {
            if within_check {
                return Err(AnalysisError::FitFailed { m_bound, t });
            }
            break;
        }
        stable_from = t;
    }
    Ok(HilbertFit {
        polynomial: poly,
        stable_from,
        verified_through: samples[samples.len() - 1].0,
    })
}

fn lagrange(points: &[(i32, u64)]) -> TPoly {
    let mut out = TPoly::default();
    for (k, &(tk, dk)) in points.iter().enumerate() {
        let mut basis = TPoly(vec![Q::one()]);
        let mut denom = Q::one();
        for (l, &(tl, _)) in points.iter().enumerate() {
            if l != k {
                basis = basis.mul(&TPoly(vec![Q::from_integer(-i64::from(tl)), Q::one()]));
                denom *= Q::from_integer(i64::from(tk - tl));
            }
        }
        out = out.add(&basis.scale(Q::from_integer(dk as i64) / denom));
    }
    out
}

/// Dimension sequences T ↦ dim of each nonzero (i, j) row, over the full
/// T range of the table.
pub fn rows(table: &DimTable) -> BTreeMap<(i32, i32), BTreeMap<i32, u64>> {
    let t_lo = table.entries.keys().map(|k| k[2].div_euclid(2)).min().unwrap_or(0).min(0);
    let t_hi = table.cutoff.div_euclid(2);
    let mut out: BTreeMap<(i32, i32), BTreeMap<i32, u64>> = BTreeMap::new();
    for k in table.entries.keys() {
        out.entry((k[0], k[1]))
            .or_insert_with(|| (t_lo..=t_hi).map(|t| (t, 0)).collect());
    }
    for (k, &d) in &table.entries {
        if k[2] % 2 == 0 && k[2] <= table.cutoff {
            out.get_mut(&(k[0], k[1])).expect("row exists").insert(k[2] / 2, d);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HilbertReport {
    pub rows: BTreeMap<String, HilbertFit>,
    pub polynomial: TPoly,
    pub components: usize,
}

/// P_B as the sum of the row fits; the inferred component count is
/// deg P_B + 1 and must match the braid's permutation cycles.
pub fn hilbert_p_b(table: &DimTable, word: &BraidWord) -> Result<HilbertReport, AnalysisError> {
    let m_bound = word.strands();
    let mut fits = BTreeMap::new();
    let mut total = TPoly::default();
    for ((i, j), dims) in rows(table) {
        let fit = hilbert_fit(&dims, m_bound).map_err(|e| AnalysisError::RowFit {
            i,
            j,
            source: Box::new(e),
        })?;
        total = total.add(&fit.polynomial);
        fits.insert(format!("{i},{j}"), fit);
    }
    let components = total.degree().map_or(0, |d| d + 1);
    let actual = word.components();
    if components != actual {
        return Err(AnalysisError::ComponentMismatch {
            fitted: components,
            actual,
        });
    }
    Ok(HilbertReport {
        rows: fits,
        polynomial: total,
        components,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    UnlinkConsistent,
    NotUnlink,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub i: i32,
    pub j: i32,
    pub x: i32,
    pub expected: u64,
    pub found: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub verdict: Verdict,
    pub m: usize,
    pub witness: Option<Witness>,
    pub cutoff: i32,
    pub note: Option<String>,
}

fn binom(n: i64, k: i64) -> u64 {
    if k < 0 || n < k {
        return 0;
    }
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// Dimension of the m-unlink table at (i, j, x).
pub fn unlink_dim(m: usize, i: i32, j: i32, x: i32) -> u64 {
    let m = m as i32;
    if j != -m || x % 2 != 0 || (m - i) % 2 != 0 {
        return 0;
    }
    let l = (m - i) / 2;
    let t = x / 2;
    if l < 0 || l > m || t < l {
        return 0;
    }
    binom(i64::from(m), i64::from(l)) * binom(i64::from(t - l + m - 1), i64::from(m - 1))
}

/// Compare a homfly table with the m-unlink pattern through x-degree `cutoff`.
pub fn detect_unlink(table: &DimTable, m: usize, cutoff: i32) -> Result<DetectionReport, AnalysisError> {
    if m == 0 {
        return Err(AnalysisError::BadComponentCount);
    }
    if table.kind != TableKind::Homfly {
        return Err(AnalysisError::WrongKind {
            expected: "homfly",
            got: table.kind.name(),
        });
    }
    let cutoff = cutoff.min(table.cutoff);
    let mut keys: Vec<(i32, i32, i32)> = table
        .entries
        .keys()
        .filter(|k| k[2] <= cutoff)
        .map(|k| (k[2], k[0], k[1]))
        .collect();
    let mm = m as i32;
    for x in (0..=cutoff).step_by(2) {
        for l in 0..=mm {
            keys.push((x, mm - 2 * l, -mm));
        }
    }
    keys.sort_unstable();
    keys.dedup();
    for (x, i, j) in keys {
        let found = table.get(&[i, j, x]);
        let expected = unlink_dim(m, i, j, x);
        if found != expected {
            return Ok(DetectionReport {
                verdict: Verdict::NotUnlink,
                m,
                witness: Some(Witness { i, j, x, expected, found }),
                cutoff,
                note: None,
            });
        }
    }
    let stable = rows(&table.truncated(cutoff))
        .values()
        .all(|dims| hilbert_fit(dims, m).is_ok());
    let (verdict, note) = if stable {
        (Verdict::UnlinkConsistent, Some(format!("consistent up to x-degree {cutoff}")))
    } else {
        (Verdict::Inconclusive, Some("pattern matches but row fits do not stabilize".into()))
    };
    Ok(DetectionReport {
        verdict,
        m,
        witness: None,
        cutoff,
        note,
    })
}

/// Truncated series in a and x with integer coefficients; x powers are at
/// most the truncation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LaurentSeries {
    pub truncation: i32,
    pub coeffs: BTreeMap<(i32, i32), i64>,
}

impl LaurentSeries {
    pub fn zero(truncation: i32) -> Self {
        LaurentSeries {
            truncation,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn add_term(&mut self, a: i32, x: i32, c: i64) {
        if x > self.truncation || c == 0 {
            return;
        }
        let e = self.coeffs.entry((a, x)).or_insert(0);
        *e += c;
        if *e == 0 {
            self.coeffs.remove(&(a, x));
        }
    }

    pub fn coeff(&self, a: i32, x: i32) -> i64 {
        self.coeffs.get(&(a, x)).copied().unwrap_or(0)
    }

    /// c · a^shift · self.
    pub fn scale(&self, c: i64, a_shift: i32) -> Self {
        let mut out = Self::zero(self.truncation);
        for (&(a, x), &v) in &self.coeffs {
            out.add_term(a + a_shift, x, c * v);
        }
        out
    }

    /// Product, valid when both factors have no negative x powers.
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.truncation.min(other.truncation));
        for (&(a1, x1), c1) in &self.coeffs {
            for (&(a2, x2), c2) in &other.coeffs {
                out.add_term(a1 + a2, x1 + x2, c1 * c2);
            }
        }
        out
    }

    pub fn truncate(&self, truncation: i32) -> Self {
        let mut out = Self::zero(truncation);
        for (&(a, x), &c) in &self.coeffs {
            out.add_term(a, x, c);
        }
        out
    }
}

impl std::fmt::Display for LaurentSeries {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .map(|(&(a, x), c)| format!("{c}*a^{a}*x^{x}"))
            .collect();
        if terms.is_empty() {
            write!(f, "0")?;
        } else {
            write!(f, "{}", terms.join(" + "))?;
        }
        write!(f, " + O(x^{})", self.truncation + 1)
    }
}

/// Σ (−1)^{j/2} a^i x^{2T} dim over the hat table.
pub fn euler_series(hat: &DimTable, cutoff: i32) -> Result<LaurentSeries, AnalysisError> {
    if hat.kind != TableKind::HatHomfly {
        return Err(AnalysisError::WrongKind {
            expected: "hat_homfly",
            got: hat.kind.name(),
        });
    }
    let mut out = LaurentSeries::zero(cutoff);
    for (k, &d) in &hat.entries {
        let (i, j, x) = (k[0], k[1], k[2]);
        if j % 2 != 0 {
            return Err(AnalysisError::OddVertical(j));
        }
        let sign = if (j / 2).rem_euclid(2) == 0 { 1 } else { -1 };
        out.add_term(i, x, sign * d as i64);
    }
    Ok(out)
}

/// Q̂_B(a, T) = Σ (−1)^{j/2} a^i P̂_{B,i,j}(T), keyed by the power of a.
pub fn qhat(hat: &DimTable, m_bound: usize) -> Result<BTreeMap<i32, TPoly>, AnalysisError> {
    let mut out: BTreeMap<i32, TPoly> = BTreeMap::new();
    for ((i, j), dims) in rows(hat) {
        if j % 2 != 0 {
            return Err(AnalysisError::OddVertical(j));
        }
        let fit = hilbert_fit(&dims, m_bound).map_err(|e| AnalysisError::RowFit {
            i,
            j,
            source: Box::new(e),
        })?;
        let sign = if (j / 2).rem_euclid(2) == 0 { 1 } else { -1 };
        let e = out.entry(i).or_default();
        *e = e.add(&fit.polynomial.scale(Q::from_integer(sign)));
    }
    out.retain(|_, p| !p.is_zero());
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkeinResidual {
    /// Residual keyed by the power of a; empty means the identity holds.
    pub residual: BTreeMap<i32, TPoly>,
}

impl SkeinResidual {
    pub fn holds(&self) -> bool {
        self.residual.is_empty()
    }
}

/// a⁻²Q̂₊(a,T) − a²Q̂₋(a,T+1) − Q̂₀(a,T+1) + Q̂₀(a,T) from the three Q̂.
pub fn qhat_skein_check(
    plus: &BTreeMap<i32, TPoly>,
    minus: &BTreeMap<i32, TPoly>,
    zero: &BTreeMap<i32, TPoly>,
) -> SkeinResidual {
    let mut res: BTreeMap<i32, TPoly> = BTreeMap::new();
    let mut acc = |a: i32, p: TPoly, c: i64| {
        let e = res.entry(a).or_default();
        *e = e.add(&p.scale(Q::from_integer(c)));
    };
    for (&a, p) in plus {
        acc(a - 2, p.clone(), 1);
    }
    for (&a, p) in minus {
        acc(a + 2, p.shift(), -1);
    }
    for (&a, p) in zero {
        acc(a, p.shift(), -1);
        acc(a, p.clone(), 1);
    }
    res.retain(|_, p| !p.is_zero());
    SkeinResidual { residual: res }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(f: impl Fn(i32) -> u64, lo: i32, hi: i32) -> BTreeMap<i32, u64> {
        (lo..=hi).map(|t| (t, f(t))).collect()
    }

    #[test]
    fn fits_constant_and_linear() {
        let fit = hilbert_fit(&seq(|_| 1, 0, 6), 1).unwrap();
        assert_eq!(fit.polynomial, TPoly::constant(1));
        assert_eq!(fit.stable_from, 0);
        let fit = hilbert_fit(&seq(|t| (t + 1) as u64, 0, 6), 2).unwrap();
        assert_eq!(fit.polynomial, TPoly(vec![Q::one(), Q::one()]));
        assert_eq!(fit.polynomial.degree(), Some(1));
    }

    #[test]
    fn fit_reports_late_stabilization() {
        let fit = hilbert_fit(&seq(|t| if t < 2 { 0 } else { 1 }, 0, 8), 1).unwrap();
        assert_eq!(fit.stable_from, 2);
        assert!(hilbert_fit(&seq(|t| if t < 6 { 0 } else { 1 }, 0, 8), 1).is_err());
        assert!(matches!(
            hilbert_fit(&seq(|_| 1, 0, 2), 1),
            Err(AnalysisError::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn unlink_dims_match_monomial_counts() {
        for m in 1..=3usize {
            for t in 0..6 {
                let total: u64 = (0..=m as i32)
                    .map(|l| unlink_dim(m, m as i32 - 2 * l, -(m as i32), 2 * t))
                    .sum();
                // Σ_l C(m,l) C(T−l+m−1, m−1) = dims of Λ(m) ⊗ Z₂[x₁..x_m] in degree 2T
                let expected: u64 = (0..=m.min(t as usize))
                    .map(|l| {
                        binom(m as i64, l as i64)
                            * crate::polyring::monomial_count(m, (t as usize - l) as i64) as u64
                    })
                    .sum();
                assert_eq!(total, expected);
            }
        }
    }

    #[test]
    fn tpoly_serde_round_trip() {
        let p = TPoly(vec![Q::new(1, 2), Q::from_integer(-3)]);
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(text, r#"["1/2","-3"]"#);
        assert_eq!(serde_json::from_str::<TPoly>(&text).unwrap(), p);
        assert_eq!(p.to_string(), "-3*T + 1/2");
    }

    #[test]
    fn shift_and_residual() {
        let p = TPoly(vec![Q::one(), Q::from_integer(2)]);
        assert_eq!(p.shift(), TPoly(vec![Q::from_integer(3), Q::from_integer(2)]));
        let unknot: BTreeMap<i32, TPoly> = [(0, TPoly::constant(1)), (-2, TPoly::constant(1))].into();
        let r = qhat_skein_check(&unknot, &unknot, &unknot);
        assert!(!r.holds());
    }

    proptest! {
        #[test]
        fn lagrange_recovers_polynomials(c0 in 0i64..20, c1 in 0i64..20, c2 in 0i64..5) {
            let f = |t: i32| (c0 + c1 * i64::from(t) + c2 * i64::from(t) * i64::from(t)) as u64;
            let fit = hilbert_fit(&seq(f, 0, 8), 3).unwrap();
            for t in 0..=8 {
                prop_assert_eq!(fit.polynomial.eval(t), Q::from_integer(f(t) as i64));
            }
            prop_assert_eq!(fit.stable_from, 0);
        }
    }
}
