use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use thiserror::Error;

use super::linalg::{image_and_kernel, BitVec, Echelon, F2Matrix, LinAlgError, Subquotient};
use crate::mfbuild::{Expanded, Generator, Koszul, Normalization};
use crate::polyring::{monomial_rank, monomials_of_degree, Monomial, PolyMatrix};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SliceError {
    #[error("slice at x-degree {xdeg} has dimension {dim}, above the limit {limit}")]
    TooLarge { xdeg: i32, dim: usize, limit: usize },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    LinAlg(#[from] LinAlgError),
}

/// Monomial bases per exponent degree, shared between slices.
pub struct MonomialCache {
    nvars: usize,
    tables: Mutex<Vec<Option<Arc<Vec<Monomial>>>>>,
}

impl MonomialCache {
    pub fn new(nvars: usize) -> Self {
        MonomialCache {
            nvars,
            tables: Mutex::new(Vec::new()),
        }
    }

    pub fn get(&self, d: u32) -> Arc<Vec<Monomial>> {
        let mut t = self.tables.lock().expect("monomial cache poisoned");
        if t.len() <= d as usize {
            t.resize(d as usize + 1, None);
        }
        t[d as usize]
            .get_or_insert_with(|| Arc::new(monomials_of_degree(self.nvars, d)))
            .clone()
    }
}

/// Generators of one (vertex, h, key) sharing a d₊-chain.
#[derive(Clone, Debug)]
pub struct Cell {
    pub key: u32,
    pub start: usize,
    pub dim: usize,
}

#[derive(Clone, Debug)]
pub struct Group {
    pub vertex: usize,
    pub h: i32,
    pub v: i32,
    pub start: usize,
    pub dim: usize,
    pub cells: Vec<Cell>,
}

/// Basis of Ĉ(B) in one x-degree: (generator, monomial) pairs laid out
/// contiguously by (vertex, h, key).
pub struct DegreeSlice {
    pub xdeg: i32,
    pub dim: usize,
    pub groups: Vec<Group>,
    group_index: HashMap<(usize, i32), usize>,
    offset: Vec<usize>,
    mdeg: Vec<u32>,
    /// (offset, generator) for generators with nonzero span, sorted.
    order: Vec<(usize, usize)>,
    tables: HashMap<u32, Arc<Vec<Monomial>>>,
}

const ABSENT: usize = usize::MAX;

pub fn instantiate_slice(
    cx: &Expanded,
    xdeg: i32,
    cache: &MonomialCache,
    limit: usize,
) -> Result<DegreeSlice, SliceError> {
    instantiate_slice_capped(cx, xdeg, cache, limit, i32::MAX)
}

/// Slice restricted to generators of horizontal degree at most `h_max`.
/// d₊-homology of the top two horizontal degrees is then not meaningful.
pub fn instantiate_slice_capped(
    cx: &Expanded,
    xdeg: i32,
    cache: &MonomialCache,
    limit: usize,
    h_max: i32,
) -> Result<DegreeSlice, SliceError> {
    let n = cx.nvars;
    let mut ids: Vec<usize> = (0..cx.gens.len()).collect();
    ids.sort_by_key(|&g| {
        let gen = &cx.gens[g];
        (gen.vertex, gen.h, cx.key[g], g)
    });
    let mut offset = vec![ABSENT; cx.gens.len()];
    let mut mdeg = vec![0; cx.gens.len()];
    let mut order = Vec::new();
    let mut groups: Vec<Group> = Vec::new();
    let mut group_index = HashMap::new();
    let mut tables = HashMap::new();
    let mut dim = 0usize;
    for g in ids {
        let gen = &cx.gens[g];
        let e = xdeg - gen.x;
        if e < 0 || e % 2 != 0 || gen.h > h_max {
            continue;
        }
        let d = (e / 2) as u32;
        let count = crate::polyring::monomial_count(n, d as i64);
        if count == 0 {
            continue;
        }
        if dim + count > limit {
            return Err(SliceError::TooLarge {
                xdeg,
                dim: dim + count,
                limit,
            });
        }
        tables.entry(d).or_insert_with(|| cache.get(d));
        offset[g] = dim;
        mdeg[g] = d;
        order.push((dim, g));
        let new_group = groups
            .last()
            .is_none_or(|gr| (gr.vertex, gr.h) != (gen.vertex, gen.h));
        if new_group {
            group_index.insert((gen.vertex, gen.h), groups.len());
            groups.push(Group {
                vertex: gen.vertex,
                h: gen.h,
                v: gen.v,
                start: dim,
                dim: 0,
                cells: Vec::new(),
            });
        }
        let gr = groups.last_mut().expect("group exists");
        if gr.cells.last().is_none_or(|c| c.key != cx.key[g]) {
            gr.cells.push(Cell {
                key: cx.key[g],
                start: dim,
                dim: 0,
            });
        }
        gr.cells.last_mut().expect("cell exists").dim += count;
        gr.dim += count;
        dim += count;
    }
    Ok(DegreeSlice {
        xdeg,
        dim,
        groups,
        group_index,
        offset,
        mdeg,
        order,
        tables,
    })
}

impl DegreeSlice {
    pub fn group(&self, vertex: usize, h: i32) -> Option<usize> {
        self.group_index.get(&(vertex, h)).copied()
    }

    /// (generator, monomial) of basis element `k`.
    pub fn decode(&self, k: usize) -> (usize, &Monomial) {
        let pos = self.order.partition_point(|&(o, _)| o <= k) - 1;
        let (o, g) = self.order[pos];
        (g, &self.tables[&self.mdeg[g]][k - o])
    }

    pub fn locate(&self, g: usize, m: &Monomial) -> Option<usize> {
        let o = self.offset[g];
        (o != ABSENT).then(|| o + monomial_rank(m))
    }

    /// Dimensions per (h, v), unnormalized.
    pub fn dims(&self) -> BTreeMap<(i32, i32), usize> {
        let mut out = BTreeMap::new();
        for g in &self.groups {
            *out.entry((g.h, g.v)).or_insert(0) += g.dim;
        }
        out
    }

    /// Dimensions per normalized (i, j).
    pub fn dims_by_grading(&self, norm: Normalization) -> BTreeMap<(i32, i32), usize> {
        self.dims()
            .into_iter()
            .map(|((h, v), d)| ((h + norm.h_shift, v + norm.v_shift), d))
            .collect()
    }

    /// Indices toggled by applying `map` to the basis vectors `ones` of this
    /// slice, expressed in `target`. Sorted, with even multiplicities cancelled.
    pub fn apply_sparse(
        &self,
        map: &PolyMatrix,
        ones: impl Iterator<Item = usize>,
        target: &DegreeSlice,
    ) -> Result<Vec<usize>, SliceError> {
        let mut hits = Vec::new();
        for k in ones {
            let (g, m) = self.decode(k);
            for (t, p) in &map.columns[g] {
                for term in p.terms() {
                    let prod = m.mul(term);
                    match target.locate(*t, &prod) {
                        Some(idx) => hits.push(idx),
                        None => {
                            return Err(SliceError::Invariant(format!(
                                "map leaves the target slice at x-degree {}",
                                target.xdeg
                            )))
                        }
                    }
                }
            }
        }
        hits.sort_unstable();
        let mut out: Vec<usize> = Vec::with_capacity(hits.len());
        for idx in hits {
            if out.last() == Some(&idx) {
                out.pop();
            } else {
                out.push(idx);
            }
        }
        Ok(out)
    }

    /// Full matrix of `map` from this slice into `target`.
    pub fn matrix(&self, map: &PolyMatrix, target: &DegreeSlice) -> Result<F2Matrix, SliceError> {
        let mut cols = Vec::with_capacity(self.dim);
        for k in 0..self.dim {
            let ones = self.apply_sparse(map, std::iter::once(k), target)?;
            cols.push(BitVec::from_ones(target.dim, ones));
        }
        Ok(F2Matrix::from_columns(target.dim, cols))
    }
}

/// H(Ĉ, d₊) of one cell.
#[derive(Clone, Debug)]
pub struct CellHomology {
    pub start: usize,
    pub dim: usize,
    pub homology: Subquotient,
}

/// H(Ĉ, d₊) of one (vertex, h) group; its basis is the concatenation of
/// the cells' bases.
#[derive(Clone, Debug)]
pub struct GroupHomology {
    pub vertex: usize,
    pub h: i32,
    pub v: i32,
    pub cells: Vec<CellHomology>,
}

impl GroupHomology {
    pub fn dim(&self) -> usize {
        self.cells.iter().map(|c| c.homology.dim()).sum()
    }

    /// Chain-level representative (absolute slice indices) of a class.
    pub fn lift(&self, coords: &BitVec) -> Vec<usize> {
        let mut out = Vec::new();
        let mut base = 0;
        for c in &self.cells {
            let k = c.homology.dim();
            let local = BitVec::from_ones(k, coords.ones().filter(|&i| i >= base && i < base + k).map(|i| i - base));
            if !local.is_zero() {
                out.extend(c.homology.lift(&local).ones().map(|i| i + c.start));
            }
            base += k;
        }
        out
    }

    /// Coordinates of a cycle given by sorted absolute indices inside this group.
    pub fn coords(&self, ones: &[usize]) -> Result<BitVec, LinAlgError> {
        let mut out = BitVec::zeros(self.dim());
        let mut base = 0;
        for c in &self.cells {
            let lo = ones.partition_point(|&i| i < c.start);
            let hi = ones.partition_point(|&i| i < c.start + c.dim);
            if lo < hi {
                let v = BitVec::from_ones(c.dim, ones[lo..hi].iter().map(|&i| i - c.start));
                for k in c.homology.coords(&v)?.ones() {
                    out.set(base + k, true);
                }
            }
            base += c.homology.dim();
        }
        Ok(out)
    }

    pub fn forget_boundaries(&mut self) {
        for c in &mut self.cells {
            c.homology.forget_boundaries();
        }
    }
}

/// H(Ĉ, d₊) in one x-degree.
pub struct DplusHomology {
    pub slice: DegreeSlice,
    pub groups: Vec<GroupHomology>,
}

/// (h, group, cell) along one d₊-chain.
type ChainLink = (i32, usize, usize);

/// ((group, cell), homology) for one cell of a chain.
type CellResult = ((usize, usize), CellHomology);

pub fn dplus_homology(cx: &Expanded, slice: DegreeSlice) -> Result<DplusHomology, SliceError> {
    // Chains of cells sharing (vertex, key), ordered by h.
    let mut chains: BTreeMap<(usize, u32), Vec<ChainLink>> = BTreeMap::new();
    for (gi, g) in slice.groups.iter().enumerate() {
        for (ci, c) in g.cells.iter().enumerate() {
            chains.entry((g.vertex, c.key)).or_default().push((g.h, gi, ci));
        }
    }
    let chains: Vec<Vec<(i32, usize, usize)>> = chains.into_values().collect();
    let results: Vec<Vec<((usize, usize), CellHomology)>> = chains
        .par_iter()
        .map(|chain| chain_homology(cx, &slice, chain))
        .collect::<Result<_, _>>()?;
    let mut groups: Vec<GroupHomology> = slice
        .groups
        .iter()
        .map(|g| GroupHomology {
            vertex: g.vertex,
            h: g.h,
            v: g.v,
            cells: Vec::with_capacity(g.cells.len()),
        })
        .collect();
    let mut flat: Vec<((usize, usize), CellHomology)> = results.into_iter().flatten().collect();
    flat.sort_by_key(|(k, _)| *k);
    for ((gi, _), ch) in flat {
        groups[gi].cells.push(ch);
    }
    Ok(DplusHomology { slice, groups })
}

fn chain_homology(
    cx: &Expanded,
    slice: &DegreeSlice,
    chain: &[ChainLink],
) -> Result<Vec<CellResult>, SliceError> {
    let mut sorted = chain.to_vec();
    sorted.sort();
    let cell = |k: usize| &slice.groups[sorted[k].1].cells[sorted[k].2];
    let mut out = Vec::with_capacity(sorted.len());
    let mut incoming: Option<Echelon> = None;
    for k in 0..sorted.len() {
        let c = cell(k);
        let next = (k + 1 < sorted.len() && sorted[k + 1].0 == sorted[k].0 + 2).then(|| cell(k + 1));
        let (image, kernel) = match next {
            Some(nc) => {
                let mut cols = Vec::with_capacity(c.dim);
                for i in 0..c.dim {
                    let ones = slice.apply_sparse(&cx.d_plus, std::iter::once(c.start + i), slice)?;
                    if ones.iter().any(|&j| j < nc.start || j >= nc.start + nc.dim) {
                        return Err(SliceError::Invariant("d+ leaves its chain".into()));
                    }
                    cols.push(BitVec::from_ones(nc.dim, ones.into_iter().map(|j| j - nc.start)));
                }
                let (img, ker) = image_and_kernel(nc.dim, cols);
                (Some(img), ker)
            }
            None => ((None), (0..c.dim).map(|i| BitVec::unit(c.dim, i)).collect()),
        };
        let boundaries = match incoming.take() {
            Some(e) if e.width() == c.dim => e,
            _ => Echelon::new(c.dim, 0),
        };
        out.push((
            (sorted[k].1, sorted[k].2),
            CellHomology {
                start: c.start,
                dim: c.dim,
                homology: Subquotient::new(c.dim, kernel, boundaries),
            },
        ));
        incoming = image;
    }
    Ok(out)
}

impl DplusHomology {
    pub fn xdeg(&self) -> i32 {
        self.slice.xdeg
    }

    pub fn group(&self, vertex: usize, h: i32) -> Option<&GroupHomology> {
        self.slice.group(vertex, h).map(|i| &self.groups[i])
    }

    /// Induced matrices of `map` from group `src` of this slice into the
    /// groups of `target`, keyed by target group index.
    pub fn induced(
        &self,
        map: &PolyMatrix,
        src: usize,
        target: &DplusHomology,
    ) -> Result<BTreeMap<usize, F2Matrix>, SliceError> {
        let g = &self.groups[src];
        let n = g.dim();
        let mut cols: BTreeMap<usize, Vec<BitVec>> = BTreeMap::new();
        for k in 0..n {
            let chain = g.lift(&BitVec::unit(n, k));
            let image = self.slice.apply_sparse(map, chain.into_iter(), &target.slice)?;
            let mut by_group: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for idx in image {
                let gi = target.slice.groups.partition_point(|gr| gr.start <= idx) - 1;
                by_group.entry(gi).or_default().push(idx);
            }
            for (gi, ones) in by_group {
                let tg = &target.groups[gi];
                let c = tg.coords(&ones)?;
                let entry = cols
                    .entry(gi)
                    .or_insert_with(|| vec![BitVec::zeros(tg.dim()); n]);
                entry[k] = c;
            }
        }
        Ok(cols
            .into_iter()
            .map(|(gi, cs)| (gi, F2Matrix::from_columns(target.groups[gi].dim(), cs)))
            .collect())
    }

    pub fn forget_boundaries(&mut self) {
        for g in &mut self.groups {
            g.forget_boundaries();
        }
    }
}

/// Check d₊² = d_v² = d₋² = 0 and pairwise commutation on every basis
/// element of the slice at `xdeg` (d₋ into `xdeg + 6` and `xdeg + 12`).
pub fn check_slice_identities(cx: &Expanded, xdeg: i32, cache: &MonomialCache) -> Result<(), SliceError> {
    let s = instantiate_slice(cx, xdeg, cache, usize::MAX)?;
    let s6 = instantiate_slice(cx, xdeg + 6, cache, usize::MAX)?;
    let s12 = instantiate_slice(cx, xdeg + 12, cache, usize::MAX)?;
    let fail = |what: &str| SliceError::Invariant(format!("{what} at x-degree {xdeg}"));
    let xor = |a: Vec<usize>, b: Vec<usize>| -> Vec<usize> {
        let mut v: Vec<usize> = a.into_iter().chain(b).collect();
        v.sort_unstable();
        let mut out: Vec<usize> = Vec::new();
        for i in v {
            if out.last() == Some(&i) {
                out.pop();
            } else {
                out.push(i);
            }
        }
        out
    };
    for k in 0..s.dim {
        let one = || std::iter::once(k);
        let p = s.apply_sparse(&cx.d_plus, one(), &s)?;
        let v = s.apply_sparse(&cx.d_v, one(), &s)?;
        let m = s.apply_sparse(&cx.d_minus, one(), &s6)?;
        if !s.apply_sparse(&cx.d_plus, p.iter().copied(), &s)?.is_empty() {
            return Err(fail("d+ squared"));
        }
        if !s.apply_sparse(&cx.d_v, v.iter().copied(), &s)?.is_empty() {
            return Err(fail("dv squared"));
        }
        if !s6.apply_sparse(&cx.d_minus, m.iter().copied(), &s12)?.is_empty() {
            return Err(fail("d- squared"));
        }
        let pv = s.apply_sparse(&cx.d_v, p.iter().copied(), &s)?;
        let vp = s.apply_sparse(&cx.d_plus, v.iter().copied(), &s)?;
        if !xor(pv, vp).is_empty() {
            return Err(fail("d+ dv commutation"));
        }
        let pm = s.apply_sparse(&cx.d_minus, p.iter().copied(), &s6)?;
        let mp = s6.apply_sparse(&cx.d_plus, m.iter().copied(), &s6)?;
        if !xor(pm, mp).is_empty() {
            return Err(fail("d+ d- commutation"));
        }
        let vm = s.apply_sparse(&cx.d_minus, v.iter().copied(), &s6)?;
        let mv = s6.apply_sparse(&cx.d_v, m.iter().copied(), &s6)?;
        if !xor(vm, mv).is_empty() {
            return Err(fail("dv d- commutation"));
        }
    }
    Ok(())
}

/// Generator-level form of a single Koszul complex.
pub fn expand_koszul(k: &Koszul) -> Expanded {
    let zero_mask = k
        .factors
        .iter()
        .enumerate()
        .filter(|(_, f)| f.b.is_zero())
        .fold(0u32, |acc, (i, _)| acc | 1 << i);
    let gens = (0..k.rank() as u32)
        .map(|s| Generator {
            vertex: 0,
            state: s,
            h: k.h_of(s),
            v: 0,
            x: k.x_of(s),
        })
        .collect();
    Expanded {
        nvars: k.nvars,
        gens,
        key: (0..k.rank() as u32).map(|s| s & zero_mask).collect(),
        d_plus: k.d_plus(),
        d_minus: k.d_minus(),
        d_v: PolyMatrix::zeros(k.rank(), k.rank()),
    }
}

/// Whether the d₊-chain map `f` of x-degree `dx` induces zero on
/// H(k, d₊) in all x-degrees up to `max_xdeg`.
pub fn induces_zero(k: &Koszul, f: &PolyMatrix, dx: i32, max_xdeg: i32) -> bool {
    let cx = expand_koszul(k);
    let cache = MonomialCache::new(k.nvars);
    let lo = cx.gens.iter().map(|g| g.x).min().unwrap_or(0);
    let lo = lo - lo.rem_euclid(2);
    let mut slices = BTreeMap::new();
    let get = |d: i32| -> DplusHomology {
        let s = instantiate_slice(&cx, d, &cache, usize::MAX).expect("no limit");
        dplus_homology(&cx, s).expect("consistent complex")
    };
    for d in (lo..=max_xdeg + dx).step_by(2) {
        slices.insert(d, get(d));
    }
    for d in (lo..=max_xdeg).step_by(2) {
        let (src, tgt) = (&slices[&d], &slices[&(d + dx)]);
        for gi in 0..src.groups.len() {
            match src.induced(f, gi, tgt) {
                Ok(ms) if ms.values().all(|m| m.is_zero()) => {}
                _ => return false,
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::braid::{build_marked_diagram, BraidWord};
    use crate::mfbuild::assemble;

    fn expanded(w: &str) -> (Expanded, Normalization) {
        let w: BraidWord = w.parse().unwrap();
        let s = assemble(&build_marked_diagram(&w), &w.closure_stats()).unwrap();
        (s.expand(), s.normalization)
    }

    #[test]
    fn unknot_slices() {
        let (cx, norm) = expanded("1;");
        let cache = MonomialCache::new(cx.nvars);
        let s0 = instantiate_slice(&cx, 0, &cache, usize::MAX).unwrap();
        assert_eq!(s0.dims_by_grading(norm), BTreeMap::from([((1, -1), 1)]));
        let s2 = instantiate_slice(&cx, 2, &cache, usize::MAX).unwrap();
        assert_eq!(
            s2.dims_by_grading(norm),
            BTreeMap::from([((1, -1), 1), ((-1, -1), 1)])
        );
        let neg = instantiate_slice(&cx, -4, &cache, usize::MAX).unwrap();
        assert_eq!(neg.dim, 0);
    }

    #[test]
    fn resource_limit() {
        let (cx, _) = expanded("2;1,1,1");
        let cache = MonomialCache::new(cx.nvars);
        assert!(matches!(
            instantiate_slice(&cx, 12, &cache, 10),
            Err(SliceError::TooLarge { .. })
        ));
    }

    #[test]
    fn slice_identities_hold() {
        let (cx, _) = expanded("2;1,1,1");
        let cache = MonomialCache::new(cx.nvars);
        for d in [-2, 0, 2] {
            check_slice_identities(&cx, d, &cache).unwrap();
        }
        let (cx, _) = expanded("2;1,-1");
        let cache = MonomialCache::new(cx.nvars);
        let s = instantiate_slice(&cx, 2, &cache, usize::MAX).unwrap();
        let p = s.matrix(&cx.d_plus, &s).unwrap();
        let v = s.matrix(&cx.d_v, &s).unwrap();
        assert!(p.mul(&p).is_zero() && v.mul(&v).is_zero());
        assert!(p.mul(&v).add(&v.mul(&p)).is_zero());
    }
}
