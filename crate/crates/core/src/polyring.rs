//! Graded polynomial rings over the two-element field.
//!
//! Every variable has x-degree 2, so a monomial of total exponent degree `d`
//! sits in x-degree `2d`.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf2kernel::{BitVec, F2Matrix};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("x-degree {0} is odd")]
    OddDegree(i32),
    #[error("x-degree {0} is negative")]
    NegativeDegree(i32),
    #[error("polynomial is not homogeneous")]
    NotHomogeneous,
    #[error("variable count mismatch: {0} vs {1}")]
    VarCount(usize, usize),
}

/// Exponent vector of a monomial.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Monomial(pub Vec<u8>);

impl Monomial {
    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    pub fn var(nvars: usize, k: usize) -> Self {
        let mut e = vec![0; nvars];
        e[k] = 1;
        Monomial(e)
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn divides(&self, other: &Monomial) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }
}

// Graded lexicographic: higher degree first, then lexicographically larger
// exponent vectors first.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .degree()
            .cmp(&self.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, &e) in self.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            write!(f, "x{}", k + 1)?;
            if e > 1 {
                write!(f, "^{}", e)?;
            }
        }
        if first {
            write!(f, "1")?;
        }
        Ok(())
    }
}

/// Polynomial with coefficients in Z/2: a set of monomials.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Poly {
    nvars: usize,
    terms: BTreeSet<Monomial>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly {
            nvars,
            terms: BTreeSet::new(),
        }
    }

    pub fn one(nvars: usize) -> Self {
        Self::monomial(Monomial::one(nvars))
    }

    pub fn var(nvars: usize, k: usize) -> Self {
        Self::monomial(Monomial::var(nvars, k))
    }

    pub fn monomial(m: Monomial) -> Self {
        let nvars = m.nvars();
        let mut terms = BTreeSet::new();
        terms.insert(m);
        Poly { nvars, terms }
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = Monomial>) -> Self {
        let mut p = Poly::zero(nvars);
        for m in terms {
            p.toggle(m);
        }
        p
    }

    /// Sum of the given variables.
    pub fn linear(nvars: usize, vars: &[usize]) -> Self {
        Self::from_terms(nvars, vars.iter().map(|&k| Monomial::var(nvars, k)))
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = &Monomial> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms.iter().next().unwrap().degree() == 0
    }

    pub fn toggle(&mut self, m: Monomial) {
        if !self.terms.remove(&m) {
            self.terms.insert(m);
        }
    }

    /// Total degree of the leading term, `None` for zero.
    pub fn degree(&self) -> Option<u32> {
        self.terms.iter().next().map(|m| m.degree())
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut it = self.terms.iter().map(|m| m.degree());
        match it.next() {
            None => true,
            Some(d) => it.all(|e| e == d),
        }
    }

    /// x-degree (twice the exponent degree) of a homogeneous polynomial.
    pub fn xdeg(&self) -> Result<Option<i32>, PolyError> {
        if !self.is_homogeneous() {
            return Err(PolyError::NotHomogeneous);
        }
        Ok(self.degree().map(|d| 2 * d as i32))
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let terms = self
            .terms
            .symmetric_difference(&other.terms)
            .cloned()
            .collect();
        Poly {
            nvars: self.nvars,
            terms,
        }
    }

    pub fn add_assign(&mut self, other: &Poly) {
        for m in &other.terms {
            self.toggle(m.clone());
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for a in &self.terms {
            for b in &other.terms {
                out.toggle(a.mul(b));
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut out = Poly::one(self.nvars);
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    /// Ring homomorphism sending variable `k` to `images[k]`.
    pub fn substitute(&self, images: &[Poly]) -> Poly {
        let nvars = images.first().map(|p| p.nvars).unwrap_or(0);
        let mut out = Poly::zero(nvars);
        for m in &self.terms {
            let mut t = Poly::one(nvars);
            for (k, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    t = t.mul(&images[k].pow(e as u32));
                }
            }
            out.add_assign(&t);
        }
        out
    }

    /// Exact quotient by a linear form `b` containing variable `v`.
    /// Returns `None` if `b` does not divide `self`.
    pub fn div_linear(&self, b: &Poly, v: usize) -> Option<Poly> {
        let xv = Monomial::var(self.nvars, v);
        let mut rem = self.clone();
        let mut q = Poly::zero(self.nvars);
        loop {
            let lead = rem.terms.iter().find(|m| m.0[v] > 0).cloned();
            let Some(m) = lead else { break };
            let mut t = m.clone();
            t.0[v] -= 1;
            debug_assert!(xv.mul(&t) == m);
            let tp = Poly::monomial(t);
            rem.add_assign(&tp.mul(b));
            q.add_assign(&tp);
        }
        if rem.is_zero() {
            Some(q)
        } else {
            None
        }
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.terms.iter().map(|m| m.to_string()).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Sparse matrix with polynomial entries; `columns[src]` lists `(target, entry)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolyMatrix {
    pub sources: usize,
    pub targets: usize,
    pub columns: Vec<Vec<(usize, Poly)>>,
}

impl PolyMatrix {
    pub fn zeros(targets: usize, sources: usize) -> Self {
        PolyMatrix {
            sources,
            targets,
            columns: vec![Vec::new(); sources],
        }
    }

    /// Add `p` to the entry at (target, source).
    pub fn add_entry(&mut self, target: usize, source: usize, p: &Poly) {
        if p.is_zero() {
            return;
        }
        let col = &mut self.columns[source];
        if let Some(k) = col.iter().position(|(t, _)| *t == target) {
            col[k].1.add_assign(p);
            if col[k].1.is_zero() {
                col.swap_remove(k);
            }
        } else {
            col.push((target, p.clone()));
        }
    }

    pub fn get(&self, target: usize, source: usize) -> Option<&Poly> {
        self.columns[source]
            .iter()
            .find(|(t, _)| *t == target)
            .map(|(_, p)| p)
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &Poly)> {
        self.columns
            .iter()
            .enumerate()
            .flat_map(|(s, col)| col.iter().map(move |(t, p)| (*t, s, p)))
    }

    pub fn is_zero(&self) -> bool {
        self.columns.iter().all(|c| c.is_empty())
    }

    pub fn add(&self, other: &PolyMatrix) -> PolyMatrix {
        let mut out = self.clone();
        for (t, s, p) in other.entries() {
            out.add_entry(t, s, p);
        }
        out
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &PolyMatrix) -> PolyMatrix {
        assert_eq!(other.targets, self.sources);
        let mut out = PolyMatrix::zeros(self.targets, other.sources);
        for (mid, s, p) in other.entries() {
            for (t, q) in &self.columns[mid] {
                out.add_entry(*t, s, &q.mul(p));
            }
        }
        out
    }

    pub fn scale(&self, f: &Poly) -> PolyMatrix {
        let mut out = PolyMatrix::zeros(self.targets, self.sources);
        for (t, s, p) in self.entries() {
            out.add_entry(t, s, &p.mul(f));
        }
        out
    }

    pub fn identity(n: usize, nvars: usize) -> PolyMatrix {
        let mut out = PolyMatrix::zeros(n, n);
        for k in 0..n {
            out.add_entry(k, k, &Poly::one(nvars));
        }
        out
    }

    pub fn substitute(&self, images: &[Poly]) -> PolyMatrix {
        let mut out = PolyMatrix::zeros(self.targets, self.sources);
        for (t, s, p) in self.entries() {
            out.add_entry(t, s, &p.substitute(images));
        }
        out
    }
}

/// Number of monomials of exponent degree `d` in `n` variables.
pub fn monomial_count(n: usize, d: i64) -> usize {
    if d < 0 {
        return 0;
    }
    if n == 0 {
        return usize::from(d == 0);
    }
    binomial(d as u64 + n as u64 - 1, n as u64 - 1) as usize
}

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u64 = 1;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// Monomials of x-degree `xdeg` in graded lexicographic order.
pub fn monomial_basis(nvars: usize, xdeg: i32) -> Result<Vec<Monomial>, PolyError> {
    if xdeg % 2 != 0 {
        return Err(PolyError::OddDegree(xdeg));
    }
    if xdeg < 0 {
        return Err(PolyError::NegativeDegree(xdeg));
    }
    Ok(monomials_of_degree(nvars, (xdeg / 2) as u32))
}

pub(crate) fn monomials_of_degree(nvars: usize, d: u32) -> Vec<Monomial> {
    let mut out = Vec::with_capacity(monomial_count(nvars, d as i64));
    let mut cur = vec![0u8; nvars];
    fill(&mut out, &mut cur, 0, d);
    out
}

fn fill(out: &mut Vec<Monomial>, cur: &mut Vec<u8>, k: usize, rem: u32) {
    let n = cur.len();
    if n == 0 {
        if rem == 0 {
            out.push(Monomial(Vec::new()));
        }
        return;
    }
    if k == n - 1 {
        cur[k] = rem as u8;
        out.push(Monomial(cur.clone()));
        cur[k] = 0;
        return;
    }
    for e in (0..=rem).rev() {
        cur[k] = e as u8;
        fill(out, cur, k + 1, rem - e);
    }
    cur[k] = 0;
}

/// Position of `m` inside `monomials_of_degree(nvars, deg m)`.
pub fn monomial_rank(m: &Monomial) -> usize {
    let n = m.0.len();
    let mut rem = m.degree() as i64;
    let mut rank = 0;
    for k in 0..n.saturating_sub(1) {
        let e = m.0[k] as i64;
        rank += monomial_count(n - k, rem - e - 1);
        rem -= e;
    }
    rank
}

/// Matrix of multiplication by `f` from x-degree `source_xdeg` to
/// `source_xdeg + xdeg(f)`; rows index the target basis.
pub fn mult_matrix(f: &Poly, nvars: usize, source_xdeg: i32) -> Result<F2Matrix, PolyError> {
    if f.nvars() != nvars {
        return Err(PolyError::VarCount(f.nvars(), nvars));
    }
    let fdeg = f.xdeg()?.unwrap_or(0);
    let source = monomial_basis(nvars, source_xdeg)?;
    let target_dim = monomial_count(nvars, ((source_xdeg + fdeg) / 2) as i64);
    let mut cols = Vec::with_capacity(source.len());
    for m in &source {
        let mut col = BitVec::zeros(target_dim);
        for t in f.terms() {
            col.toggle(monomial_rank(&m.mul(t)));
        }
        cols.push(col);
    }
    Ok(F2Matrix::from_columns(target_dim, cols))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(n: usize, k: usize) -> Poly {
        Poly::var(n, k)
    }

    #[test]
    fn basis_examples() {
        let b = monomial_basis(2, 4).unwrap();
        assert_eq!(b, vec![Monomial(vec![2, 0]), Monomial(vec![1, 1]), Monomial(vec![0, 2])]);
        assert_eq!(monomial_basis(5, 0).unwrap().len(), 1);
        assert_eq!(monomial_basis(0, 0).unwrap().len(), 1);
        assert_eq!(monomial_basis(0, 2).unwrap().len(), 0);
        let b = monomial_basis(3, 2).unwrap();
        assert_eq!(b, vec![Monomial::var(3, 0), Monomial::var(3, 1), Monomial::var(3, 2)]);
        assert_eq!(monomial_basis(2, 3), Err(PolyError::OddDegree(3)));
    }

    #[test]
    fn rank_matches_enumeration() {
        for n in 0..5 {
            for d in 0..6 {
                let b = monomials_of_degree(n, d);
                assert_eq!(b.len(), monomial_count(n, d as i64));
                for (k, m) in b.iter().enumerate() {
                    assert_eq!(monomial_rank(m), k);
                }
                let mut sorted = b.clone();
                sorted.sort();
                assert_eq!(sorted, b);
            }
        }
    }

    #[test]
    fn mult_matrix_examples() {
        let m = mult_matrix(&x(1, 0), 1, 0).unwrap();
        assert_eq!((m.rows(), m.cols()), (1, 1));
        assert!(m.get(0, 0));

        let f = Poly::linear(2, &[0, 1]);
        let m = mult_matrix(&f, 2, 0).unwrap();
        assert_eq!((m.rows(), m.cols()), (2, 1));
        assert!(m.get(0, 0) && m.get(1, 0));

        let (s, i) = (x(2, 0), x(2, 1));
        let arc = s.mul(&s).add(&s.mul(&i)).add(&i.mul(&i));
        let m = mult_matrix(&arc, 2, 0).unwrap();
        assert_eq!(m.rows(), 3);
        assert!((0..3).all(|r| m.get(r, 0)));

        let inhom = x(2, 0).add(&Poly::one(2));
        assert_eq!(mult_matrix(&inhom, 2, 0).unwrap_err(), PolyError::NotHomogeneous);
    }

    #[test]
    fn div_linear_roundtrip() {
        let n = 3;
        let b = Poly::linear(n, &[0, 2]);
        let q = x(n, 1).mul(&x(n, 1)).add(&x(n, 0).mul(&x(n, 2)));
        let p = q.mul(&b);
        assert_eq!(p.div_linear(&b, 0), Some(q.clone()));
        assert_eq!(p.div_linear(&b, 2), Some(q));
        assert_eq!(x(n, 1).div_linear(&b, 0), None);
    }

    #[test]
    fn substitute_is_homomorphism() {
        let n = 3;
        let f = x(n, 0).mul(&x(n, 1)).add(&x(n, 2).pow(2));
        let images = vec![x(n, 1), Poly::linear(n, &[0, 2]), x(n, 2)];
        let g = f.substitute(&images);
        let expect = x(n, 1).mul(&Poly::linear(n, &[0, 2])).add(&x(n, 2).pow(2));
        assert_eq!(g, expect);
    }
}
