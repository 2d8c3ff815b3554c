//! Slice scheduling, E₁/E₂ pages, Khovanov total complexes and the
//! homotopy identity check.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::braid::{build_marked_diagram_with, BraidError, BraidWord, Marking};
use crate::gf2kernel::{
    dplus_homology, homology_at, instantiate_slice_capped, DplusHomology, F2Matrix, LinAlgError,
    MonomialCache, SliceError, Subquotient,
};
use crate::mfbuild::{assemble_with, homotopy_h, Expanded, MfError, TripleComplexSpec};
use crate::oracle;
use crate::polyring::PolyMatrix;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Braid(#[from] BraidError),
    #[error(transparent)]
    Mf(#[from] MfError),
    #[error("resource limit: {0}")]
    Resource(SliceError),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("cutoff {cutoff} too small: {reason}")]
    Cutoff { cutoff: i32, reason: String },
    #[error("cache: {0}")]
    Cache(String),
}

impl From<SliceError> for PipelineError {
    fn from(e: SliceError) -> Self {
        match e {
            SliceError::TooLarge { .. } => PipelineError::Resource(e),
            other => PipelineError::Invariant(other.to_string()),
        }
    }
}

impl From<LinAlgError> for PipelineError {
    fn from(e: LinAlgError) -> Self {
        PipelineError::Invariant(e.to_string())
    }
}

pub type Result<T, E = PipelineError> = std::result::Result<T, E>;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Config {
    pub variant: usize,
    pub marking: Marking,
    pub max_slice_dim: usize,
    pub cache_dir: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            variant: 0,
            marking: Marking::PerArc,
            max_slice_dim: 2_000_000,
            cache_dir: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableKind {
    HatHomfly,
    Homfly,
    E2,
    Khovanov,
}

impl TableKind {
    pub fn name(self) -> &'static str {
        match self {
            TableKind::HatHomfly => "hat_homfly",
            TableKind::Homfly => "homfly",
            TableKind::E2 => "e2",
            TableKind::Khovanov => "khovanov",
        }
    }

    /// Names of the grading coordinates.
    pub fn axes(self) -> &'static [&'static str] {
        match self {
            TableKind::Khovanov => &["h", "q"],
            _ => &["i", "j", "x"],
        }
    }
}

/// Graded dimensions; absent keys have dimension 0.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimTable {
    pub kind: TableKind,
    pub entries: BTreeMap<Vec<i32>, u64>,
    /// Largest x-degree (or |q|) covered.
    pub cutoff: i32,
}

impl DimTable {
    pub fn new(kind: TableKind, cutoff: i32) -> Self {
        DimTable {
            kind,
            entries: BTreeMap::new(),
            cutoff,
        }
    }

    pub fn get(&self, key: &[i32]) -> u64 {
        self.entries.get(key).copied().unwrap_or(0)
    }

    pub fn add(&mut self, key: Vec<i32>, dim: u64) {
        if dim > 0 {
            *self.entries.entry(key).or_insert(0) += dim;
        }
    }

    pub fn total(&self) -> u64 {
        self.entries.values().sum()
    }

    /// Entries with x-degree at most `x` (for i, j, x keyed tables).
    pub fn truncated(&self, x: i32) -> DimTable {
        DimTable {
            kind: self.kind,
            entries: self
                .entries
                .iter()
                .filter(|(k, _)| k[2] <= x)
                .map(|(k, d)| (k.clone(), *d))
                .collect(),
            cutoff: x,
        }
    }

    /// Rows as (axis → value) maps plus "dim", in key order.
    pub fn rows(&self) -> Vec<BTreeMap<&'static str, i64>> {
        self.entries
            .iter()
            .map(|(k, d)| {
                let mut row: BTreeMap<&'static str, i64> = self
                    .kind
                    .axes()
                    .iter()
                    .zip(k)
                    .map(|(a, v)| (*a, i64::from(*v)))
                    .collect();
                row.insert("dim", *d as i64);
                row
            })
            .collect()
    }
}

/// Dimensions of H(H(Ĉ, d₊), d_v) and induced data, per x-degree.
#[derive(Clone, Debug, Default)]
pub struct DplusData {
    /// (x, h, vertex) → (vertical degree, dim H(Ĉ, d₊)).
    pub groups: BTreeMap<(i32, i32, usize), (i32, usize)>,
    /// d_v from (x, h, vertex) to (x, h, target vertex).
    pub d_v: BTreeMap<(i32, i32, usize), Vec<(usize, F2Matrix)>>,
    /// d₋ from (x, h, vertex) to (x + 6, h − 2, vertex).
    pub d_minus: BTreeMap<(i32, i32, usize), F2Matrix>,
    /// Requested x-degree 2 actions, from (x, h, vertex) to (x + 2, h, vertex).
    pub actions: Vec<BTreeMap<(i32, i32, usize), F2Matrix>>,
    /// Homotopy from (x, h, vertex) to (x − 2, h + 2, vertex).
    pub homotopy: BTreeMap<(i32, i32, usize), F2Matrix>,
}

#[derive(Default)]
struct Requests<'a> {
    /// Only keep horizontal degrees with x + 3h ≤ this bound.
    q_cap: Option<i32>,
    d_minus: bool,
    actions: Vec<&'a PolyMatrix>,
    homotopy: Option<&'a PolyMatrix>,
}

#[derive(Clone, Debug, Default)]
struct Layout {
    blocks: Vec<(usize, usize, usize)>,
    dim: usize,
}

impl Layout {
    fn find(&self, vertex: usize) -> Option<(usize, usize)> {
        self.blocks
            .iter()
            .find(|b| b.0 == vertex)
            .map(|&(_, o, d)| (o, d))
    }
}

/// Place per-vertex blocks into one matrix between two layouts.
fn assemble_blocks<'a>(
    src: &Layout,
    tgt: &Layout,
    blocks: impl Iterator<Item = (usize, usize, &'a F2Matrix)>,
) -> F2Matrix {
    let mut m = F2Matrix::zeros(tgt.dim, src.dim);
    for (sv, tv, b) in blocks {
        let (Some((so, _)), Some((to, _))) = (src.find(sv), tgt.find(tv)) else {
            continue;
        };
        for r in 0..b.rows() {
            for c in b.row(r).ones() {
                m.toggle(to + r, so + c);
            }
        }
    }
    m
}

/// The E₁ page H(B) with chain-level data over H(Ĉ, d₊).
pub struct E1Page {
    layouts: BTreeMap<(i32, i32, i32), Layout>,
    spaces: BTreeMap<(i32, i32, i32), Subquotient>,
    data: DplusData,
}

impl E1Page {
    pub fn dim(&self, x: i32, h: i32, v: i32) -> usize {
        self.spaces.get(&(x, h, v)).map_or(0, |s| s.dim())
    }

    /// Keys (x, h, v) with nonzero E₁.
    pub fn support(&self) -> impl Iterator<Item = ((i32, i32, i32), usize)> + '_ {
        self.spaces
            .iter()
            .filter(|(_, s)| s.dim() > 0)
            .map(|(k, s)| (*k, s.dim()))
    }

    pub fn data(&self) -> &DplusData {
        &self.data
    }

    fn layout(&self, key: (i32, i32, i32)) -> Layout {
        self.layouts.get(&key).cloned().unwrap_or_default()
    }


    /// Induced matrix on E₁ of a vertex-preserving map given by blocks
    /// keyed (x, h, vertex), shifting (x, h) by (dx, dh).
    pub fn induced_blockwise(
        &self,
        blocks: &BTreeMap<(i32, i32, usize), F2Matrix>,
        (x, h, v): (i32, i32, i32),
        (dx, dh): (i32, i32),
    ) -> Result<F2Matrix> {
        let src = self.layout((x, h, v));
        let tgt_key = (x + dx, h + dh, v);
        let tgt = self.layout(tgt_key);
        let chain = assemble_blocks(
            &src,
            &tgt,
            src.blocks
                .iter()
                .filter_map(|&(vx, _, _)| blocks.get(&(x, h, vx)).map(|m| (vx, vx, m))),
        );
        let empty = Subquotient::full(0);
        let s = self.spaces.get(&(x, h, v)).unwrap_or(&empty);
        let t = self.spaces.get(&tgt_key).unwrap_or(&empty);
        let mut cols = Vec::with_capacity(s.dim());
        for z in s.reps() {
            cols.push(t.coords(&chain.apply(z))?);
        }
        Ok(F2Matrix::from_columns(t.dim(), cols))
    }

    /// d₁ = induced d₋ from (x, h, v) to (x + 6, h − 2, v).
    pub fn d1(&self, key: (i32, i32, i32)) -> Result<F2Matrix> {
        self.induced_blockwise(&self.data.d_minus, key, (6, -2))
    }
}

/// A braid closure with its assembled (and row-reduced) complex.
pub struct Computation {
    pub word: BraidWord,
    pub config: Config,
    pub spec: TripleComplexSpec,
    expanded: Expanded,
    cache: MonomialCache,
    homotopy: Option<PolyMatrix>,
}

impl Computation {
    pub fn new(word: &BraidWord, config: &Config) -> Result<Self> {
        let diagram = build_marked_diagram_with(word, config.marking);
        let spec = assemble_with(&diagram, &word.closure_stats(), config.variant)?;
        Ok(Self::from_spec(word, config, spec.eliminate_linear_rows(), None))
    }

    /// Computation on the complex with an extra marked point on `component`,
    /// carrying the homotopy of the new arc.
    pub fn with_homotopy(word: &BraidWord, component: usize, config: &Config) -> Result<Self> {
        let diagram = build_marked_diagram_with(word, config.marking);
        let h = homotopy_h(&diagram, &word.closure_stats(), component, config.variant)?.reduced();
        let map = h.map.matrix.clone();
        Ok(Self::from_spec(word, config, h.spec, Some(map)))
    }

    fn from_spec(
        word: &BraidWord,
        config: &Config,
        spec: TripleComplexSpec,
        homotopy: Option<PolyMatrix>,
    ) -> Self {
        let expanded = spec.expand();
        let cache = MonomialCache::new(spec.nvars);
        Computation {
            word: word.clone(),
            config: config.clone(),
            spec,
            expanded,
            cache,
            homotopy,
        }
    }

    pub fn expanded(&self) -> &Expanded {
        &self.expanded
    }

    /// Smallest x-degree carrying generators.
    pub fn x_min(&self) -> i32 {
        self.expanded.gens.iter().map(|g| g.x).min().unwrap_or(0)
    }

    fn x_degrees(&self, hi: i32) -> impl Iterator<Item = i32> {
        (self.x_min()..=hi).step_by(2)
    }

    /// Range of normalized horizontal degrees.
    pub fn i_range(&self) -> (i32, i32) {
        let hs = self.spec.normalization.h_shift;
        let hs_iter = || self.expanded.gens.iter().map(|g| g.h + hs);
        (hs_iter().min().unwrap_or(0), hs_iter().max().unwrap_or(0))
    }

    /// Multiplication by the diagram variable `k` as a map of x-degree 2.
    pub fn variable_action(&self, k: usize) -> PolyMatrix {
        let n = self.expanded.len();
        PolyMatrix::identity(n, self.spec.nvars).scale(self.spec.variable(k))
    }

    fn dplus_slice(&self, x: i32, h_max: i32) -> Result<DplusHomology> {
        let slice =
            instantiate_slice_capped(&self.expanded, x, &self.cache, self.config.max_slice_dim, h_max)?;
        Ok(dplus_homology(&self.expanded, slice)?)
    }

    /// Record groups with h ≤ `valid` and d_v between them.
    fn record_dv(&self, dh: &DplusHomology, valid: i32, data: &mut DplusData) -> Result<()> {
        let x = dh.xdeg();
        for (gi, g) in dh.groups.iter().enumerate() {
            if g.h > valid {
                continue;
            }
            data.groups.insert((x, g.h, g.vertex), (g.v, g.dim()));
            let maps = dh.induced(&self.expanded.d_v, gi, dh)?;
            let entries: Vec<(usize, F2Matrix)> = maps
                .into_iter()
                .map(|(ti, m)| (dh.groups[ti].vertex, m))
                .collect();
            if !entries.is_empty() {
                data.d_v.insert((x, g.h, g.vertex), entries);
            }
        }
        Ok(())
    }

    /// Block-diagonal induced maps from `src` into `tgt`, between groups
    /// of horizontal degree at most `src_valid` and `tgt_valid`.
    fn record_blocks(
        map: &PolyMatrix,
        src: &DplusHomology,
        tgt: &DplusHomology,
        src_valid: i32,
        tgt_valid: i32,
        into: &mut BTreeMap<(i32, i32, usize), F2Matrix>,
    ) -> Result<()> {
        for (gi, g) in src.groups.iter().enumerate() {
            if g.h > src_valid {
                continue;
            }
            for (ti, m) in src.induced(map, gi, tgt)? {
                let tg = &tgt.groups[ti];
                if tg.h > tgt_valid {
                    continue;
                }
                if tg.vertex != g.vertex {
                    return Err(PipelineError::Invariant(format!(
                        "map changes cube vertex at x-degree {}",
                        src.xdeg()
                    )));
                }
                into.insert((src.xdeg(), g.h, g.vertex), m);
            }
        }
        Ok(())
    }

    /// Stream slices `x_min ..= x_hi`, keeping a window of d₊-homologies.
    fn dplus_data(&self, x_hi: i32, req: &Requests) -> Result<DplusData> {
        let mut data = DplusData {
            actions: vec![BTreeMap::new(); req.actions.len()],
            ..Default::default()
        };
        let mut window: BTreeMap<i32, DplusHomology> = BTreeMap::new();
        let hs = self.spec.normalization.h_shift;
        let h_min = self.expanded.gens.iter().map(|g| g.h).min().unwrap_or(0);
        let valid_h = |x: i32| req.q_cap.map_or(i32::MAX, |q| (q - x).div_euclid(3) - hs);
        for x in self.x_degrees(x_hi) {
            let valid = valid_h(x);
            if valid < h_min {
                break;
            }
            let dh = self.dplus_slice(x, valid.saturating_add(2))?;
            self.record_dv(&dh, valid, &mut data)?;
            if req.d_minus {
                if let Some(src) = window.get(&(x - 6)) {
                    let m = &self.expanded.d_minus;
                    Self::record_blocks(m, src, &dh, valid_h(x - 6), valid, &mut data.d_minus)?;
                }
            }
            if let Some(src) = window.get(&(x - 2)) {
                let vs = valid_h(x - 2);
                for (a, map) in req.actions.iter().enumerate() {
                    Self::record_blocks(map, src, &dh, vs, valid, &mut data.actions[a])?;
                }
                if let Some(hm) = req.homotopy {
                    Self::record_blocks(hm, &dh, src, valid, vs, &mut data.homotopy)?;
                }
            }
            if let Some(prev) = window.get_mut(&(x - 2)) {
                prev.forget_boundaries();
            }
            window.insert(x, dh);
            window.retain(|&k, _| k >= x - 4);
        }
        Ok(data)
    }

    fn e1_page(&self, data: DplusData) -> Result<E1Page> {
        let mut layouts: BTreeMap<(i32, i32, i32), Layout> = BTreeMap::new();
        for (&(x, h, vertex), &(v, dim)) in &data.groups {
            let l = layouts.entry((x, h, v)).or_default();
            l.blocks.push((vertex, l.dim, dim));
            l.dim += dim;
        }
        let spaces = layouts
            .par_iter()
            .map(|(&(x, h, v), l)| {
                let empty = Layout::default();
                let prev = layouts.get(&(x, h, v - 2)).unwrap_or(&empty);
                let next = layouts.get(&(x, h, v + 2)).unwrap_or(&empty);
                let d_in = dv_matrix(&data, x, h, prev, l);
                let d_out = dv_matrix(&data, x, h, l, next);
                if !d_out.mul(&d_in).is_zero() {
                    return Err(PipelineError::Invariant(format!(
                        "induced d_v does not square to zero at x-degree {x}"
                    )));
                }
                Ok(((x, h, v), homology_at(&d_in, &d_out)))
            })
            .collect::<Result<BTreeMap<_, _>>>()?;
        Ok(E1Page {
            layouts,
            spaces,
            data,
        })
    }

    /// Dimensions of H(B) in one x-degree keyed (h, v), unnormalized.
    pub fn e1_slice_dims(&self, x: i32) -> Result<BTreeMap<(i32, i32), usize>> {
        let path = self.cache_path(x);
        if let Some(p) = &path {
            if let Ok(text) = fs::read_to_string(p) {
                let entry: CacheEntry =
                    serde_json::from_str(&text).map_err(|e| PipelineError::Cache(e.to_string()))?;
                if entry.version == CACHE_VERSION && entry.xdeg == x {
                    return Ok(entry.dims.into_iter().map(|(h, v, d)| ((h, v), d)).collect());
                }
            }
        }
        let dh = self.dplus_slice(x, i32::MAX)?;
        let mut data = DplusData::default();
        self.record_dv(&dh, i32::MAX, &mut data)?;
        drop(dh);
        let page = self.e1_page(data)?;
        let dims: BTreeMap<(i32, i32), usize> = page
            .support()
            .map(|((_, h, v), d)| ((h, v), d))
            .collect();
        if let Some(p) = path {
            let entry = CacheEntry {
                version: CACHE_VERSION,
                xdeg: x,
                dims: dims.iter().map(|(&(h, v), &d)| (h, v, d)).collect(),
            };
            write_atomic(&p, &serde_json::to_string(&entry).expect("cache entry serializes"))?;
        }
        Ok(dims)
    }

    fn cache_path(&self, x: i32) -> Option<PathBuf> {
        let dir = self.config.cache_dir.as_ref()?;
        Some(dir.join(format!("{}-{x}.json", self.spec.hash_hex())))
    }

    /// HOMFLYPT tables (normalized, hat) for x-degrees up to `2 * t_max`.
    pub fn homfly_tables(&self, t_max: i32) -> Result<(DimTable, DimTable)> {
        if t_max < 0 {
            return Err(PipelineError::Cutoff {
                cutoff: t_max,
                reason: "cutoff must be nonnegative".into(),
            });
        }
        let xs: Vec<i32> = self.x_degrees(2 * t_max).collect();
        let slices = xs
            .par_iter()
            .map(|&x| self.e1_slice_dims(x).map(|d| (x, d)))
            .collect::<Result<Vec<_>>>()?;
        let norm = self.spec.normalization;
        let mut homfly = DimTable::new(TableKind::Homfly, 2 * t_max);
        let mut hat = DimTable::new(TableKind::HatHomfly, 2 * t_max);
        for (x, dims) in slices {
            for ((h, v), d) in dims {
                hat.add(vec![h, v, x], d as u64);
                homfly.add(vec![h + norm.h_shift, v + norm.v_shift, x], d as u64);
            }
        }
        Ok((homfly, hat))
    }

    /// E₁ page with d₋ data covering x-degrees up to `x_hi`.
    pub fn e1_with_d_minus(&self, x_hi: i32) -> Result<E1Page> {
        let data = self.dplus_data(
            x_hi,
            &Requests {
                d_minus: true,
                ..Default::default()
            },
        )?;
        self.e1_page(data)
    }

    /// E₂ = H(H(B), d₋), normalized, for x-degrees up to `2 * t_max`.
    pub fn e2_table(&self, t_max: i32) -> Result<DimTable> {
        let page = self.e1_with_d_minus(2 * t_max + 6)?;
        e2_from_page(&page, self.spec.normalization, 2 * t_max)
    }

    /// Khovanov homology keyed (h, q) over |q| ≤ `q_max` (defaults to the
    /// state-sum support bound).
    pub fn khovanov_table(&self, q_max: Option<i32>) -> Result<DimTable> {
        let bound = oracle::khovanov_q_bound(&self.word);
        let q_max = q_max.unwrap_or(bound);
        let reach = bound.max(q_max) + 2;
        let (i_min, _) = self.i_range();
        let x_hi = reach - 3 * i_min;
        let data = self.dplus_data(
            x_hi,
            &Requests {
                q_cap: Some(reach),
                d_minus: true,
                ..Default::default()
            },
        )?;
        let table = khovanov_from_data(&data, self.spec.normalization, -reach, reach)?;
        if let Some((k, _)) = table.entries.iter().find(|(k, _)| k[1].abs() > q_max) {
            return Err(PipelineError::Cutoff {
                cutoff: q_max,
                reason: format!("nonzero Khovanov group at q = {} beyond the cutoff", k[1]),
            });
        }
        Ok(DimTable { cutoff: q_max, ..table })
    }

    /// Check d₋h + hd₋ = x² on E₁ for x-degrees up to `2 * t_max`, where x is
    /// the marked variable next to the homotopy arc.
    pub fn homotopy_report(&self, component: usize, t_max: i32) -> Result<HomotopyReport> {
        let hmap = self.homotopy.as_ref().ok_or_else(|| {
            PipelineError::Invariant("computation carries no homotopy".into())
        })?;
        let var = self.spec.component_variable(component).ok_or_else(|| {
            PipelineError::Invariant(format!("component {component} has no variable"))
        })?;
        let action = self.variable_action(var);
        let x_top = 2 * t_max;
        let data = self.dplus_data(
            x_top + 6,
            &Requests {
                q_cap: None,
                d_minus: true,
                actions: vec![&action],
                homotopy: Some(hmap),
            },
        )?;
        let page = self.e1_page(data)?;
        let keys: Vec<(i32, i32, i32)> = page.layouts.keys().copied().filter(|k| k.0 <= x_top).collect();
        let mut checked = 0;
        let mut nontrivial = 0;
        for (x, h, v) in keys {
            let hmat = page.induced_blockwise(&page.data.homotopy, (x, h, v), (-2, 2))?;
            let d_after = page.d1((x - 2, h + 2, v))?;
            let d_first = page.d1((x, h, v))?;
            let h_after = page.induced_blockwise(&page.data.homotopy, (x + 6, h - 2, v), (-2, 2))?;
            let a1 = page.induced_blockwise(&page.data.actions[0], (x, h, v), (2, 0))?;
            let a2 = page.induced_blockwise(&page.data.actions[0], (x + 2, h, v), (2, 0))?;
            let lhs = d_after.mul(&hmat).add(&h_after.mul(&d_first));
            let rhs = a2.mul(&a1);
            checked += 1;
            nontrivial += usize::from(!rhs.is_zero());
            if lhs != rhs {
                return Ok(HomotopyReport {
                    component,
                    holds: false,
                    slices_checked: checked,
                    nontrivial_slices: nontrivial,
                    first_failure: Some((x, h, v)),
                    x_squared_zero_on_e2: false,
                });
            }
        }
        let x_squared_zero_on_e2 = x_squared_vanishes_on_e2(&page, x_top)?;
        Ok(HomotopyReport {
            component,
            holds: true,
            slices_checked: checked,
            nontrivial_slices: nontrivial,
            first_failure: None,
            x_squared_zero_on_e2,
        })
    }

    /// Whether the actions of diagram variables `a` and `b` agree on H(B)
    /// for x-degrees up to `2 * t_max`.
    pub fn actions_agree(&self, a: usize, b: usize, t_max: i32) -> Result<bool> {
        let (ma, mb) = (self.variable_action(a), self.variable_action(b));
        let data = self.dplus_data(
            2 * t_max + 2,
            &Requests {
                actions: vec![&ma, &mb],
                ..Default::default()
            },
        )?;
        let page = self.e1_page(data)?;
        let keys: Vec<_> = page.layouts.keys().copied().filter(|k| k.0 <= 2 * t_max).collect();
        for key in keys {
            let fa = page.induced_blockwise(&page.data.actions[0], key, (2, 0))?;
            let fb = page.induced_blockwise(&page.data.actions[1], key, (2, 0))?;
            if fa != fb {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn dv_matrix(data: &DplusData, x: i32, h: i32, src: &Layout, tgt: &Layout) -> F2Matrix {
    let blocks = src.blocks.iter().flat_map(|&(sv, _, _)| {
        data.d_v
            .get(&(x, h, sv))
            .into_iter()
            .flatten()
            .map(move |(tv, m)| (sv, *tv, m))
    });
    assemble_blocks(src, tgt, blocks)
}

/// x² from (x, h, v) into (x + 4, h, v) induced on E₂ vanishes, checked for
/// every x-degree whose E₂ neighbours lie in the page.
fn x_squared_vanishes_on_e2(page: &E1Page, x_top: i32) -> Result<bool> {
    let keys: Vec<_> = page.layouts.keys().copied().filter(|k| k.0 + 4 <= x_top).collect();
    for (x, h, v) in keys {
        let e2_src = e2_space(page, (x, h, v))?;
        if e2_src.dim() == 0 {
            continue;
        }
        let e2_tgt = e2_space(page, (x + 4, h, v))?;
        let a1 = page.induced_blockwise(&page.data.actions[0], (x, h, v), (2, 0))?;
        let a2 = page.induced_blockwise(&page.data.actions[0], (x + 2, h, v), (2, 0))?;
        let sq = a2.mul(&a1);
        for z in e2_src.reps() {
            if !e2_tgt.coords(&sq.apply(z))?.is_zero() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn e2_space(page: &E1Page, (x, h, v): (i32, i32, i32)) -> Result<Subquotient> {
    let d_in = page.d1((x - 6, h + 2, v))?;
    let d_out = page.d1((x, h, v))?;
    if !d_out.mul(&d_in).is_zero() {
        return Err(PipelineError::Invariant(format!(
            "d1 does not square to zero at x-degree {x}"
        )));
    }
    Ok(homology_at(&d_in, &d_out))
}

fn e2_from_page(
    page: &E1Page,
    norm: crate::mfbuild::Normalization,
    x_top: i32,
) -> Result<DimTable> {
    let mut table = DimTable::new(TableKind::E2, x_top);
    let keys: Vec<_> = page
        .support()
        .map(|(k, _)| k)
        .filter(|k| k.0 <= x_top)
        .collect();
    let dims = keys
        .par_iter()
        .map(|&k| e2_space(page, k).map(|s| (k, s.dim())))
        .collect::<Result<Vec<_>>>()?;
    for ((x, h, v), d) in dims {
        table.add(vec![h + norm.h_shift, v + norm.v_shift, x], d as u64);
    }
    Ok(table)
}

/// (x, h, vertex, dim) of one block of a total complex.
type TotalCell = (i32, i32, usize, usize);

/// Homology of (H(C, d₊), d_v + d₋) per quantum degree q = x + 3i over
/// `q_lo ..= q_hi`.
fn khovanov_from_data(
    data: &DplusData,
    norm: crate::mfbuild::Normalization,
    q_lo: i32,
    q_hi: i32,
) -> Result<DimTable> {
    // (q, k) → layout over (x, h, vertex) groups.
    let mut complexes: BTreeMap<i32, BTreeMap<i32, Vec<TotalCell>>> = BTreeMap::new();
    for (&(x, h, vertex), &(v, dim)) in &data.groups {
        if dim == 0 {
            continue;
        }
        let i = h + norm.h_shift;
        let j = v + norm.v_shift;
        let q = x + 3 * i;
        if q < q_lo || q > q_hi {
            continue;
        }
        complexes.entry(q).or_default().entry(j - i).or_default().push((x, h, vertex, dim));
    }
    let per_q = complexes
        .par_iter()
        .map(|(&q, by_k)| total_homology(data, by_k).map(|dims| (q, dims)))
        .collect::<Result<Vec<_>>>()?;
    let mut table = DimTable::new(TableKind::Khovanov, q_hi.max(-q_lo));
    for (q, dims) in per_q {
        for (k, d) in dims {
            if d == 0 {
                continue;
            }
            if k % 2 != 0 {
                return Err(PipelineError::Invariant(format!(
                    "odd homological degree {k} at q = {q}"
                )));
            }
            table.add(vec![-k / 2, q], d as u64);
        }
    }
    Ok(table)
}

fn total_homology(
    data: &DplusData,
    by_k: &BTreeMap<i32, Vec<(i32, i32, usize, usize)>>,
) -> Result<BTreeMap<i32, usize>> {
    type Key = (i32, i32, usize);
    let offsets = |k: i32| -> (BTreeMap<Key, (usize, usize)>, usize) {
        let mut map = BTreeMap::new();
        let mut total = 0;
        for &(x, h, vx, d) in by_k.get(&k).into_iter().flatten() {
            map.insert((x, h, vx), (total, d));
            total += d;
        }
        (map, total)
    };
    let differential = |k: i32| -> F2Matrix {
        let (src, n) = offsets(k);
        let (tgt, m) = offsets(k + 2);
        let mut mat = F2Matrix::zeros(m, n);
        let mut place = |b: &F2Matrix, to: usize, so: usize| {
            for r in 0..b.rows() {
                for c in b.row(r).ones() {
                    mat.toggle(to + r, so + c);
                }
            }
        };
        for (&(x, h, vx), &(so, _)) in &src {
            for (tv, b) in data.d_v.get(&(x, h, vx)).into_iter().flatten() {
                if let Some(&(to, _)) = tgt.get(&(x, h, *tv)) {
                    place(b, to, so);
                }
            }
            if let Some(b) = data.d_minus.get(&(x, h, vx)) {
                if let Some(&(to, _)) = tgt.get(&(x + 6, h - 2, vx)) {
                    place(b, to, so);
                }
            }
        }
        mat
    };
    let ks: BTreeSet<i32> = by_k.keys().copied().collect();
    let mut out = BTreeMap::new();
    let mut ranks: BTreeMap<i32, usize> = BTreeMap::new();
    let mut mats: BTreeMap<i32, F2Matrix> = BTreeMap::new();
    for &k in &ks {
        let d = differential(k);
        ranks.insert(k, d.rank());
        mats.insert(k, d);
    }
    for &k in &ks {
        if let (Some(a), Some(b)) = (mats.get(&(k - 2)), mats.get(&k)) {
            if !b.mul(a).is_zero() {
                return Err(PipelineError::Invariant("total differential does not square to zero".into()));
            }
        }
        let dim = offsets(k).1;
        let r_out = ranks[&k];
        let r_in = ranks.get(&(k - 2)).copied().unwrap_or(0);
        out.insert(k, dim - r_out - r_in);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomotopyReport {
    pub component: usize,
    pub holds: bool,
    pub slices_checked: usize,
    /// Checked spaces on which x² acts nonzero.
    pub nontrivial_slices: usize,
    /// Unnormalized (x, h, v) of the first failing E₁ space.
    pub first_failure: Option<(i32, i32, i32)>,
    pub x_squared_zero_on_e2: bool,
}

const CACHE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CacheEntry {
    version: u32,
    xdeg: i32,
    dims: Vec<(i32, i32, usize)>,
}

fn write_atomic(path: &std::path::Path, text: &str) -> Result<()> {
    let err = |e: std::io::Error| PipelineError::Cache(format!("{}: {e}", path.display()));
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(err)?;
    }
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    fs::write(&tmp, text).map_err(err)?;
    fs::rename(&tmp, path).map_err(err)
}

pub fn homfly_table(word: &BraidWord, cutoff: i32) -> Result<(DimTable, DimTable)> {
    Computation::new(word, &Config::default())?.homfly_tables(cutoff)
}

pub fn e2_table(word: &BraidWord, cutoff: i32) -> Result<DimTable> {
    Computation::new(word, &Config::default())?.e2_table(cutoff)
}

pub fn khovanov_table(word: &BraidWord, cutoff: Option<i32>) -> Result<DimTable> {
    Computation::new(word, &Config::default())?.khovanov_table(cutoff)
}

pub fn verify_homotopy_identity(word: &BraidWord, component: usize, cutoff: i32) -> Result<HomotopyReport> {
    Computation::with_homotopy(word, component, &Config::default())?.homotopy_report(component, cutoff)
}

/// Sum E₂ dims over the fibres of (h, q) = ((i − j)/2, x + 3i).
pub fn regrade_e2(e2: &DimTable) -> DimTable {
    let mut out = DimTable::new(TableKind::Khovanov, e2.cutoff);
    for (k, &d) in &e2.entries {
        let (i, j, x) = (k[0], k[1], k[2]);
        out.add(vec![(i - j).div_euclid(2), x + 3 * i], d);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn word(s: &str) -> BraidWord {
        s.parse().unwrap()
    }

    #[test]
    fn unknot_homfly() {
        let (t, hat) = homfly_table(&word("1;"), 6).unwrap();
        for x in (0..=12).step_by(2) {
            assert_eq!(t.get(&[1, -1, x]), 1);
            assert_eq!(t.get(&[-1, -1, x]), u64::from(x >= 2));
        }
        assert_eq!(t.total(), 13);
        assert_eq!(hat.get(&[0, 0, 0]), 1);
    }

    #[test]
    fn unknot_e2_and_khovanov() {
        let e2 = e2_table(&word("1;"), 6).unwrap();
        let expected: BTreeMap<Vec<i32>, u64> = [(vec![-1, -1, 2], 1), (vec![-1, -1, 4], 1)].into();
        assert_eq!(e2.entries, expected);
        let kh = khovanov_table(&word("1;"), None).unwrap();
        let expected: BTreeMap<Vec<i32>, u64> = [(vec![0, -1], 1), (vec![0, 1], 1)].into();
        assert_eq!(kh.entries, expected);
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let config = Config {
            cache_dir: Some(dir.path().to_path_buf()),
            ..Config::default()
        };
        let c = Computation::new(&word("2;1"), &config).unwrap();
        let first = c.homfly_tables(4).unwrap();
        assert!(fs::read_dir(dir.path()).unwrap().count() > 0);
        let second = c.homfly_tables(4).unwrap();
        assert_eq!(first, second);
        assert_eq!(first.0, homfly_table(&word("2;1"), 4).unwrap().0);
    }
}
