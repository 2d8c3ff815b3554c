//! Dense bitset linear algebra over the two-element field.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinAlgError {
    #[error("vector is not a cycle of the subquotient")]
    NotACycle,
    #[error("carried map does not preserve boundaries")]
    BoundaryNotPreserved,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        BitVec {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn unit(len: usize, k: usize) -> Self {
        let mut v = Self::zeros(len);
        v.set(k, true);
        v
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (k, &b) in bits.iter().enumerate() {
            if b {
                v.set(k, true);
            }
        }
        v
    }

    pub fn from_ones(len: usize, ones: impl IntoIterator<Item = usize>) -> Self {
        let mut v = Self::zeros(len);
        for k in ones {
            v.toggle(k);
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, k: usize) -> bool {
        self.words[k >> 6] >> (k & 63) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, k: usize, b: bool) {
        let w = &mut self.words[k >> 6];
        if b {
            *w |= 1 << (k & 63);
        } else {
            *w &= !(1 << (k & 63));
        }
    }

    #[inline]
    pub fn toggle(&mut self, k: usize) {
        self.words[k >> 6] ^= 1 << (k & 63);
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    #[inline]
    pub fn xor_assign(&mut self, other: &BitVec) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    #[inline]
    fn xor_from(&mut self, other: &BitVec, word: usize) {
        for (a, b) in self.words[word..].iter_mut().zip(&other.words[word..]) {
            *a ^= b;
        }
    }

    /// Lowest set bit at position `>= from`.
    #[inline]
    pub fn next_one(&self, from: usize) -> Option<usize> {
        if from >= self.len {
            return None;
        }
        let mut w = from >> 6;
        let mut cur = self.words[w] & (!0u64 << (from & 63));
        loop {
            if cur != 0 {
                return Some((w << 6) + cur.trailing_zeros() as usize);
            }
            w += 1;
            if w >= self.words.len() {
                return None;
            }
            cur = self.words[w];
        }
    }

    pub fn first_one(&self) -> Option<usize> {
        self.next_one(0)
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &word)| {
            let mut bits = word;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let t = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some((w << 6) + t)
            })
        })
    }

    pub fn dot(&self, other: &BitVec) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones())
            & 1
            == 1
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = (0..self.len).map(|k| if self.get(k) { '1' } else { '0' }).collect();
        write!(f, "[{}]", s)
    }
}

/// Matrix stored as row bitsets.
#[derive(Clone, PartialEq, Eq)]
pub struct F2Matrix {
    rows: usize,
    cols: usize,
    data: Vec<BitVec>,
}

impl F2Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        F2Matrix {
            rows,
            cols,
            data: (0..rows).map(|_| BitVec::zeros(cols)).collect(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for k in 0..n {
            m.set(k, k, true);
        }
        m
    }

    pub fn from_rows(cols: usize, data: Vec<BitVec>) -> Self {
        debug_assert!(data.iter().all(|r| r.len() == cols));
        F2Matrix {
            rows: data.len(),
            cols,
            data,
        }
    }

    pub fn from_columns(rows: usize, columns: Vec<BitVec>) -> Self {
        let cols = columns.len();
        let mut m = Self::zeros(rows, cols);
        for (c, col) in columns.iter().enumerate() {
            for r in col.ones() {
                m.set(r, c, true);
            }
        }
        m
    }

    pub fn from_dense(rows: &[&[u8]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let data = rows
            .iter()
            .map(|r| BitVec::from_bits(&r.iter().map(|&b| b != 0).collect::<Vec<_>>()))
            .collect();
        Self::from_rows(cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &BitVec {
        &self.data[r]
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.data[r].get(c)
    }

    pub fn set(&mut self, r: usize, c: usize, b: bool) {
        self.data[r].set(c, b)
    }

    pub fn toggle(&mut self, r: usize, c: usize) {
        self.data[r].toggle(c)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|r| r.is_zero())
    }

    pub fn transpose(&self) -> F2Matrix {
        let mut t = Self::zeros(self.cols, self.rows);
        for (r, row) in self.data.iter().enumerate() {
            for c in row.ones() {
                t.set(c, r, true);
            }
        }
        t
    }

    pub fn columns(&self) -> Vec<BitVec> {
        self.transpose().data
    }

    pub fn apply(&self, v: &BitVec) -> BitVec {
        let mut out = BitVec::zeros(self.rows);
        for (r, row) in self.data.iter().enumerate() {
            if row.dot(v) {
                out.set(r, true);
            }
        }
        out
    }

    /// Matrix product `self * other`.
    pub fn mul(&self, other: &F2Matrix) -> F2Matrix {
        assert_eq!(self.cols, other.rows, "shape mismatch in product");
        let mut out = Self::zeros(self.rows, other.cols);
        for (r, row) in self.data.iter().enumerate() {
            let acc = &mut out.data[r];
            for k in row.ones() {
                acc.xor_assign(&other.data[k]);
            }
        }
        out
    }

    pub fn add(&self, other: &F2Matrix) -> F2Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            a.xor_assign(b);
        }
        out
    }

    pub fn rank(&self) -> usize {
        let mut e = Echelon::new(self.cols, 0);
        for row in &self.data {
            e.insert(row.clone(), BitVec::zeros(0));
        }
        e.len()
    }
}

impl fmt::Debug for F2Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "F2Matrix {}x{}", self.rows, self.cols)?;
        for r in &self.data {
            writeln!(f, "  {:?}", r)?;
        }
        Ok(())
    }
}

/// Semi-echelon basis: stored vectors have pairwise distinct lowest set bits.
/// Each vector carries a tag recording how it was combined.
#[derive(Clone, Debug)]
pub struct Echelon {
    width: usize,
    tag_width: usize,
    vecs: Vec<BitVec>,
    tags: Vec<BitVec>,
    pivot: Vec<u32>,
}

const NONE: u32 = u32::MAX;

impl Echelon {
    pub fn new(width: usize, tag_width: usize) -> Self {
        Echelon {
            width,
            tag_width,
            vecs: Vec::new(),
            tags: Vec::new(),
            pivot: vec![NONE; width],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.vecs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vecs.is_empty()
    }

    pub fn vectors(&self) -> &[BitVec] {
        &self.vecs
    }

    pub fn into_vectors(self) -> Vec<BitVec> {
        self.vecs
    }

    /// Reduce `v` in place, accumulating the tags of the vectors used.
    pub fn reduce(&self, v: &mut BitVec, tag: &mut BitVec) {
        let mut pos = 0;
        while let Some(p) = v.next_one(pos) {
            let r = self.pivot[p];
            if r != NONE {
                let r = r as usize;
                v.xor_from(&self.vecs[r], p >> 6);
                if self.tag_width > 0 {
                    tag.xor_assign(&self.tags[r]);
                }
            }
            pos = p + 1;
        }
    }

    pub fn contains(&self, v: &BitVec) -> bool {
        let mut v = v.clone();
        let mut t = BitVec::zeros(self.tag_width);
        self.reduce(&mut v, &mut t);
        v.is_zero()
    }

    /// Insert `v`; if it is dependent, return the reduced tag
    /// (the combination that vanishes).
    pub fn insert(&mut self, mut v: BitVec, mut tag: BitVec) -> Option<BitVec> {
        self.reduce(&mut v, &mut tag);
        match v.first_one() {
            None => Some(tag),
            Some(p) => {
                self.pivot[p] = self.vecs.len() as u32;
                self.vecs.push(v);
                self.tags.push(tag);
                None
            }
        }
    }

    /// Push a vector known to be reduced against the current basis.
    fn push_reduced(&mut self, v: BitVec, tag: BitVec) {
        let p = v.first_one().expect("nonzero vector");
        debug_assert_eq!(self.pivot[p], NONE);
        self.pivot[p] = self.vecs.len() as u32;
        self.vecs.push(v);
        self.tags.push(tag);
    }
}

/// Column-reduce `columns` (images of source basis vectors).
/// Returns an echelon basis of the image and a basis of the kernel.
pub fn image_and_kernel(target_dim: usize, columns: Vec<BitVec>) -> (Echelon, Vec<BitVec>) {
    let n = columns.len();
    let mut e = Echelon::new(target_dim, n);
    let mut kernel = Vec::new();
    for (k, col) in columns.into_iter().enumerate() {
        if let Some(tag) = e.insert(col, BitVec::unit(n, k)) {
            kernel.push(tag);
        }
    }
    (e, kernel)
}

/// Rank, kernel basis and image basis of a matrix (columns = source).
pub fn rank_ker_im(m: &F2Matrix) -> (usize, Vec<BitVec>, Vec<BitVec>) {
    let (e, kernel) = image_and_kernel(m.rows(), m.columns());
    (e.len(), kernel, e.into_vectors())
}

/// Cycles modulo boundaries inside an ambient space of dimension `ambient`.
#[derive(Clone, Debug)]
pub struct Subquotient {
    ambient: usize,
    reps: Vec<BitVec>,
    reducer: Echelon,
}

impl Subquotient {
    /// `boundaries` must be an echelon basis of a subspace of the span of `cycles`.
    pub fn new(ambient: usize, cycles: Vec<BitVec>, boundaries: Echelon) -> Self {
        let n = cycles.len();
        let mut reducer = Echelon::new(ambient, n);
        for v in boundaries.vecs {
            reducer.push_reduced(v, BitVec::zeros(n));
        }
        let mut accepted = Vec::new();
        for (k, z) in cycles.iter().enumerate() {
            if reducer.insert(z.clone(), BitVec::unit(n, k)).is_none() {
                accepted.push(k);
            }
        }
        // Re-index tags so that they count accepted representatives only.
        let mut index = vec![usize::MAX; n];
        for (a, &k) in accepted.iter().enumerate() {
            index[k] = a;
        }
        let m = accepted.len();
        for t in reducer.tags.iter_mut() {
            let mut nt = BitVec::zeros(m);
            for k in t.ones() {
                debug_assert!(index[k] != usize::MAX);
                nt.set(index[k], true);
            }
            *t = nt;
        }
        reducer.tag_width = m;
        let reps = accepted.into_iter().map(|k| cycles[k].clone()).collect();
        Subquotient {
            ambient,
            reps,
            reducer,
        }
    }

    /// The whole space modulo nothing.
    pub fn full(ambient: usize) -> Self {
        let cycles = (0..ambient).map(|k| BitVec::unit(ambient, k)).collect();
        Self::new(ambient, cycles, Echelon::new(ambient, 0))
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.reps.len()
    }

    pub fn reps(&self) -> &[BitVec] {
        &self.reps
    }

    pub fn rep(&self, k: usize) -> &BitVec {
        &self.reps[k]
    }

    /// Coordinates of the class of the cycle `z`.
    pub fn coords(&self, z: &BitVec) -> Result<BitVec, LinAlgError> {
        if z.len() != self.ambient {
            return Err(LinAlgError::Dimension {
                expected: self.ambient,
                got: z.len(),
            });
        }
        let mut v = z.clone();
        let mut t = BitVec::zeros(self.dim());
        self.reducer.reduce(&mut v, &mut t);
        if v.is_zero() {
            Ok(t)
        } else {
            Err(LinAlgError::NotACycle)
        }
    }

    /// Drop the boundary data; `coords` becomes unusable, `reps` stay.
    pub fn forget_boundaries(&mut self) {
        self.reducer = Echelon::new(0, 0);
    }

    /// Chain-level lift of a class given by coordinates.
    pub fn lift(&self, coords: &BitVec) -> BitVec {
        let mut out = BitVec::zeros(self.ambient);
        for k in coords.ones() {
            out.xor_assign(&self.reps[k]);
        }
        out
    }
}

/// Homology of `C_prev --d_in--> C --d_out--> C_next` at the middle term.
pub fn homology_at(d_in: &F2Matrix, d_out: &F2Matrix) -> Subquotient {
    let n = d_out.cols();
    let (_, cycles, _) = rank_ker_im(d_out);
    let (boundaries, _) = image_and_kernel(n, d_in.columns());
    Subquotient::new(n, cycles, boundaries)
}

/// Induced matrix of a chain map between two subquotients.
pub fn induced_matrix(
    source: &Subquotient,
    target: &Subquotient,
    map: impl Fn(&BitVec) -> BitVec,
) -> Result<F2Matrix, LinAlgError> {
    let mut cols = Vec::with_capacity(source.dim());
    for z in source.reps() {
        cols.push(target.coords(&map(z))?);
    }
    Ok(F2Matrix::from_columns(target.dim(), cols))
}

/// Verify that the chain map sends every boundary of `source` to a boundary of `target`.
pub fn check_boundaries(
    boundaries: &[BitVec],
    target: &Subquotient,
    map: impl Fn(&BitVec) -> BitVec,
) -> Result<(), LinAlgError> {
    for b in boundaries {
        if !target.coords(&map(b))?.is_zero() {
            return Err(LinAlgError::BoundaryNotPreserved);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rank_ker_im_examples() {
        let z = F2Matrix::zeros(3, 3);
        let (r, k, i) = rank_ker_im(&z);
        assert_eq!((r, k.len(), i.len()), (0, 3, 0));

        let id = F2Matrix::identity(4);
        let (r, k, _) = rank_ker_im(&id);
        assert_eq!((r, k.len()), (4, 0));

        let m = F2Matrix::from_dense(&[&[1, 1], &[1, 1]]);
        let (r, k, _) = rank_ker_im(&m);
        assert_eq!(r, 1);
        assert_eq!(k, vec![BitVec::from_bits(&[true, true])]);
    }

    #[test]
    fn koszul_x_squared_slice() {
        // Z2[x] --x^2--> Z2[x] in target degree 2T: the target position has
        // homology only when 2T < 4.
        for t in 0..6 {
            let source_dim = usize::from(t >= 2);
            let d_in = if source_dim == 1 {
                F2Matrix::identity(1)
            } else {
                F2Matrix::zeros(1, 0)
            };
            let d_out = F2Matrix::zeros(0, 1);
            let h = homology_at(&d_in, &d_out);
            assert_eq!(h.dim(), usize::from(t < 2), "T = {t}");
        }
    }

    #[test]
    fn zero_differential_keeps_everything() {
        let h = homology_at(&F2Matrix::zeros(3, 0), &F2Matrix::zeros(0, 3));
        assert_eq!(h.dim(), 3);
        let a = F2Matrix::from_dense(&[&[1, 1, 0], &[0, 1, 0], &[0, 0, 1]]);
        let m = induced_matrix(&h, &h, |v| a.apply(v)).unwrap();
        assert_eq!(m, a);
    }

    #[test]
    fn coords_reject_non_cycles() {
        let d_out = F2Matrix::from_dense(&[&[1, 0]]);
        let h = homology_at(&F2Matrix::zeros(2, 0), &d_out);
        assert_eq!(h.dim(), 1);
        assert_eq!(h.coords(&BitVec::unit(2, 0)), Err(LinAlgError::NotACycle));
        assert_eq!(h.coords(&BitVec::unit(2, 1)).unwrap(), BitVec::unit(1, 0));
    }

    fn arb_matrix(max: usize) -> impl Strategy<Value = F2Matrix> {
        (1..max, 1..max).prop_flat_map(|(r, c)| {
            proptest::collection::vec(proptest::bool::ANY, r * c).prop_map(move |bits| {
                let rows = bits.chunks(c).map(BitVec::from_bits).collect();
                F2Matrix::from_rows(c, rows)
            })
        })
    }

    proptest! {
        #[test]
        fn rank_equals_transpose_rank(m in arb_matrix(40)) {
            prop_assert_eq!(m.rank(), m.transpose().rank());
        }

        #[test]
        fn rank_nullity(m in arb_matrix(40)) {
            let (r, k, im) = rank_ker_im(&m);
            prop_assert_eq!(r + k.len(), m.cols());
            prop_assert_eq!(im.len(), r);
            for v in &k {
                prop_assert!(m.apply(v).is_zero());
            }
        }

        #[test]
        fn homology_of_composable_pair(a in arb_matrix(12), seed in 0u64..1000) {
            // Build d_in with image inside ker(a) from random kernel combinations.
            let (_, ker, _) = rank_ker_im(&a);
            let mut cols = Vec::new();
            let mut s = seed;
            for _ in 0..4 {
                let mut v = BitVec::zeros(a.cols());
                for z in &ker {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    if s >> 63 == 1 { v.xor_assign(z); }
                }
                cols.push(v);
            }
            let d_in = F2Matrix::from_columns(a.cols(), cols);
            prop_assert!(a.mul(&d_in).is_zero());
            let h = homology_at(&d_in, &a);
            prop_assert_eq!(h.dim(), ker.len() - d_in.rank());
        }
    }
}
