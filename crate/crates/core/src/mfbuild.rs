//! Koszul matrix factorizations of diagram pieces, χ-morphisms, crossing
//! complexes and the assembled triple complex of a closed braid.

use std::collections::HashMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::braid::{ClosureStats, MarkedDiagram, Piece, Sign};
use crate::gf2kernel::{image_and_kernel, BitVec};
use crate::polyring::{monomials_of_degree, Monomial, Poly, PolyMatrix};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MfError {
    #[error("piece has no matrix factorization without a resolution")]
    UnknownPiece,
    #[error("no χ-morphism of x-degree 1 exists for any tried presentation")]
    NoChiMorphism,
    #[error("inconsistent variable gluing in diagram")]
    InconsistentGluing,
    #[error("component {0} does not exist")]
    NoSuchComponent(usize),
    #[error("no eligible arc piece on component {0}")]
    NoEligibleArc(usize),
    #[error("factor entry {0} is not homogeneous of its declared degree")]
    Degree(String),
    #[error("χ variant {0} is not available")]
    NoSuchVariant(usize),
}

/// K(a, b): generator θ at horizontal −2 and x-degree `deg_b`, generator 1 at 0.
/// d₊θ = b, d₋1 = aθ.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KoszulFactor {
    pub a: Poly,
    pub b: Poly,
    pub deg_a: i32,
    pub deg_b: i32,
}

impl KoszulFactor {
    pub fn new(a: Poly, b: Poly, deg_a: i32, deg_b: i32) -> Result<Self, MfError> {
        let ok = |p: &Poly, d: i32| matches!(p.xdeg(), Ok(None)) || p.xdeg() == Ok(Some(d));
        if !ok(&a, deg_a) {
            return Err(MfError::Degree(format!("a = {a}")));
        }
        if !ok(&b, deg_b) || deg_a + deg_b != 6 {
            return Err(MfError::Degree(format!("b = {b}")));
        }
        Ok(KoszulFactor { a, b, deg_a, deg_b })
    }

    pub fn potential(&self) -> Poly {
        self.a.mul(&self.b)
    }

    fn map(&self, images: &[Poly]) -> KoszulFactor {
        KoszulFactor {
            a: self.a.substitute(images),
            b: self.b.substitute(images),
            deg_a: self.deg_a,
            deg_b: self.deg_b,
        }
    }
}

/// Tensor product of Koszul factors with an overall x-shift.
/// Generators are bit masks; bit k set means θ of row k is present.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Koszul {
    pub nvars: usize,
    pub factors: Vec<KoszulFactor>,
    pub x_shift: i32,
}

impl Koszul {
    pub fn rank(&self) -> usize {
        1 << self.factors.len()
    }

    pub fn h_of(&self, state: u32) -> i32 {
        -2 * state.count_ones() as i32
    }

    pub fn x_of(&self, state: u32) -> i32 {
        self.x_shift + state_xdeg(&self.factors, state)
    }

    pub fn potential(&self) -> Poly {
        self.factors
            .iter()
            .fold(Poly::zero(self.nvars), |acc, f| acc.add(&f.potential()))
    }

    pub fn d_plus(&self) -> PolyMatrix {
        koszul_d_plus(&self.factors, self.rank())
    }

    pub fn d_minus(&self) -> PolyMatrix {
        koszul_d_minus(&self.factors, self.rank())
    }
}

fn state_xdeg(factors: &[KoszulFactor], state: u32) -> i32 {
    factors
        .iter()
        .enumerate()
        .filter(|(k, _)| state >> k & 1 == 1)
        .map(|(_, f)| f.deg_b)
        .sum()
}

fn koszul_d_plus(factors: &[KoszulFactor], rank: usize) -> PolyMatrix {
    let mut m = PolyMatrix::zeros(rank, rank);
    for s in 0..rank as u32 {
        for (k, f) in factors.iter().enumerate() {
            if s >> k & 1 == 1 {
                m.add_entry((s ^ 1 << k) as usize, s as usize, &f.b);
            }
        }
    }
    m
}

fn koszul_d_minus(factors: &[KoszulFactor], rank: usize) -> PolyMatrix {
    let mut m = PolyMatrix::zeros(rank, rank);
    for s in 0..rank as u32 {
        for (k, f) in factors.iter().enumerate() {
            if s >> k & 1 == 0 {
                m.add_entry((s | 1 << k) as usize, s as usize, &f.a);
            }
        }
    }
    m
}

fn x(n: usize, k: usize) -> Poly {
    Poly::var(n, k)
}

/// Arc factor (x_s² + x_s x_i + x_i², x_s + x_i).
pub fn arc_factor(nvars: usize, input: usize, output: usize) -> KoszulFactor {
    let (i, s) = (x(nvars, input), x(nvars, output));
    let a = s.mul(&s).add(&s.mul(&i)).add(&i.mul(&i));
    let b = s.add(&i);
    KoszulFactor::new(a, b, 4, 2).expect("arc factor is homogeneous")
}

/// The two rows of the singular resolution Γ₁ (without its x-shift −1).
pub fn gamma1_factors(nvars: usize, [i, j, s, t]: [usize; 4]) -> Vec<KoszulFactor> {
    let (xi, xj, xs, xt) = (x(nvars, i), x(nvars, j), x(nvars, s), x(nvars, t));
    let sq = |p: &Poly| p.mul(p);
    let a1 = sq(&xs)
        .add(&sq(&xt))
        .add(&sq(&xi))
        .add(&sq(&xj))
        .add(&xt.mul(&xs.add(&xi).add(&xj)));
    let l = xs.add(&xt).add(&xi).add(&xj);
    let q = xs.add(&xi).mul(&xs.add(&xj));
    vec![
        KoszulFactor::new(a1, l, 4, 2).expect("homogeneous"),
        KoszulFactor::new(xi.add(&xj), q, 2, 4).expect("homogeneous"),
    ]
}

/// Γ₀ as two arc factors i → s and j → t.
pub fn gamma0_factors(nvars: usize, [i, j, s, t]: [usize; 4]) -> Vec<KoszulFactor> {
    vec![arc_factor(nvars, i, s), arc_factor(nvars, j, t)]
}

/// Γ₀ presented with b-column (L, x_t + x_j) and a-column shifted by the
/// syzygy μ: rows (α_s, L) and (α_s + α_t, x_t + x_j), where
/// α_s = A_s + μ(x_t + x_j), α_t = A_t + μ(x_s + x_i).
pub fn gamma0_adapted(nvars: usize, vars: [usize; 4], mu: &Poly) -> Vec<KoszulFactor> {
    let [i, j, s, t] = vars;
    let arcs = gamma0_factors(nvars, vars);
    let bs = x(nvars, s).add(&x(nvars, i));
    let bt = x(nvars, t).add(&x(nvars, j));
    let alpha_s = arcs[0].a.add(&mu.mul(&bt));
    let alpha_t = arcs[1].a.add(&mu.mul(&bs));
    let l = bs.add(&bt);
    vec![
        KoszulFactor::new(alpha_s.clone(), l, 4, 2).expect("homogeneous"),
        KoszulFactor::new(alpha_s.add(&alpha_t), bt, 4, 2).expect("homogeneous"),
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Resolution {
    Zero,
    One,
}

/// Factorization of a piece. Crossings need a resolution.
pub fn piece_mf(
    piece: &Piece,
    nvars: usize,
    resolution: Option<Resolution>,
) -> Result<Koszul, MfError> {
    match (piece, resolution) {
        (Piece::Arc { input, output }, _) => Ok(Koszul {
            nvars,
            factors: vec![arc_factor(nvars, *input, *output)],
            x_shift: 0,
        }),
        (Piece::Crossing { inputs, outputs, .. }, Some(r)) => {
            let vars = [inputs[0], inputs[1], outputs[0], outputs[1]];
            Ok(match r {
                Resolution::Zero => Koszul {
                    nvars,
                    factors: gamma0_factors(nvars, vars),
                    x_shift: 0,
                },
                Resolution::One => Koszul {
                    nvars,
                    factors: gamma1_factors(nvars, vars),
                    x_shift: -1,
                },
            })
        }
        (Piece::Crossing { .. }, None) => Err(MfError::UnknownPiece),
    }
}

/// Homogeneous degree offsets of a morphism.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MorphismData {
    pub matrix: PolyMatrix,
    pub delta_h: i32,
    pub delta_v: i32,
    pub delta_x: i32,
}

/// Basis of the space of maps `src → tgt` of x-degree `xdeg`, horizontal
/// degree 0, commuting with d₊ and d₋.
pub fn solve_morphisms(src: &Koszul, tgt: &Koszul, xdeg: i32) -> Vec<PolyMatrix> {
    let n = src.nvars;
    let mut unknowns: Vec<(usize, usize, Monomial)> = Vec::new();
    for s in 0..src.rank() as u32 {
        for t in 0..tgt.rank() as u32 {
            if s.count_ones() != t.count_ones() {
                continue;
            }
            let e = src.x_of(s) + xdeg - tgt.x_of(t);
            if e < 0 || e % 2 != 0 {
                continue;
            }
            for m in monomials_of_degree(n, (e / 2) as u32) {
                unknowns.push((t as usize, s as usize, m));
            }
        }
    }
    let (sp, sm, tp, tm) = (src.d_plus(), src.d_minus(), tgt.d_plus(), tgt.d_minus());
    let mut keys: HashMap<(u8, usize, usize, Monomial), usize> = HashMap::new();
    let mut columns: Vec<Vec<usize>> = Vec::new();
    for (t, s, m) in &unknowns {
        let mut f = PolyMatrix::zeros(tgt.rank(), src.rank());
        f.add_entry(*t, *s, &Poly::monomial(m.clone()));
        let plus = tp.compose(&f).add(&f.compose(&sp));
        let minus = tm.compose(&f).add(&f.compose(&sm));
        let mut col = Vec::new();
        for (which, e) in [(0u8, plus), (1u8, minus)] {
            for (t2, s2, p) in e.entries() {
                for mono in p.terms() {
                    let next = keys.len();
                    col.push(*keys.entry((which, t2, s2, mono.clone())).or_insert(next));
                }
            }
        }
        columns.push(col);
    }
    let rows = keys.len();
    let cols = columns
        .into_iter()
        .map(|c| BitVec::from_ones(rows, c))
        .collect();
    let (_, kernel) = image_and_kernel(rows, cols);
    kernel
        .into_iter()
        .map(|v| {
            let mut f = PolyMatrix::zeros(tgt.rank(), src.rank());
            for k in v.ones() {
                let (t, s, m) = &unknowns[k];
                f.add_entry(*t, *s, &Poly::monomial(m.clone()));
            }
            f
        })
        .collect()
}

/// Universal χ-maps over the local ring Z₂[x_i, x_j, x_s, x_t]
/// (variables 0..4 in that order).
#[derive(Clone, Debug)]
pub struct ChiPair {
    pub mu: Poly,
    pub gamma0: Koszul,
    pub gamma1: Koszul,
    pub chi0: PolyMatrix,
    pub chi1: PolyMatrix,
}

const LOCAL: [usize; 4] = [0, 1, 2, 3];

impl ChiPair {
    fn for_mu(mu: Poly) -> Option<ChiPair> {
        let gamma0 = Koszul {
            nvars: 4,
            factors: gamma0_adapted(4, LOCAL, &mu),
            x_shift: 0,
        };
        let gamma1 = Koszul {
            nvars: 4,
            factors: gamma1_factors(4, LOCAL),
            x_shift: -1,
        };
        let chi0s = solve_morphisms(&gamma0, &gamma1, 1);
        let chi1s = solve_morphisms(&gamma1, &gamma0, 1);
        for chi0 in nonzero_combinations(&chi0s) {
            for chi1 in nonzero_combinations(&chi1s) {
                let pair = ChiPair {
                    mu: mu.clone(),
                    gamma0: gamma0.clone(),
                    gamma1: gamma1.clone(),
                    chi0: chi0.clone(),
                    chi1,
                };
                if pair.compositions_ok(8) {
                    return Some(pair);
                }
            }
        }
        None
    }

    /// Both compositions act as multiplication by x_s + x_j on
    /// H(·, d₊) in every x-degree up to `max_xdeg`.
    pub fn compositions_ok(&self, max_xdeg: i32) -> bool {
        let sj = Poly::linear(4, &[2, 1]);
        let f0 = self.chi1.compose(&self.chi0).add(&PolyMatrix::identity(4, 4).scale(&sj));
        let f1 = self.chi0.compose(&self.chi1).add(&PolyMatrix::identity(4, 4).scale(&sj));
        crate::gf2kernel::induces_zero(&self.gamma0, &f0, 2, max_xdeg)
            && crate::gf2kernel::induces_zero(&self.gamma1, &f1, 2, max_xdeg)
    }
}

fn nonzero_combinations(basis: &[PolyMatrix]) -> Vec<PolyMatrix> {
    let n = basis.len().min(4);
    (1u32..1 << n)
        .map(|mask| {
            (0..n)
                .filter(|k| mask >> k & 1 == 1)
                .fold(PolyMatrix::zeros(basis[0].targets, basis[0].sources), |acc, k| {
                    acc.add(&basis[k])
                })
        })
        .collect()
}

/// All χ presentations found by the solver, in search order.
pub fn chi_variants() -> &'static [ChiPair] {
    static VARIANTS: OnceLock<Vec<ChiPair>> = OnceLock::new();
    VARIANTS.get_or_init(|| {
        (1u32..16)
            .filter_map(|mask| {
                let vars: Vec<usize> = (0..4).filter(|k| mask >> k & 1 == 1).collect();
                ChiPair::for_mu(Poly::linear(4, &vars))
            })
            .collect()
    })
}

fn local_images(nvars: usize, vars: [usize; 4]) -> Vec<Poly> {
    vars.iter().map(|&v| x(nvars, v)).collect()
}

/// χ⁰ : Γ₀ → Γ₁ and χ¹ : Γ₁ → Γ₀ for a crossing with variables
/// (x_i, x_j, x_s, x_t), in the adapted Γ₀ presentation of `variant`.
pub fn chi_pair(
    nvars: usize,
    vars: [usize; 4],
    variant: usize,
) -> Result<(MorphismData, MorphismData), MfError> {
    let pair = chi_variants()
        .get(variant)
        .ok_or(MfError::NoSuchVariant(variant))?;
    let images = local_images(nvars, vars);
    let md = |m: &PolyMatrix| MorphismData {
        matrix: m.substitute(&images),
        delta_h: 0,
        delta_v: 0,
        delta_x: 1,
    };
    Ok((md(&pair.chi0), md(&pair.chi1)))
}

/// One resolution of a crossing inside its crossing complex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalVertex {
    pub resolution: Resolution,
    pub vertical: i32,
    pub h_shift: i32,
    pub x_shift: i32,
    pub koszul: Koszul,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrossingComplex {
    pub sign: Sign,
    /// Source of the edge first.
    pub vertices: [LocalVertex; 2],
    pub edge: MorphismData,
}

pub fn crossing_complex(
    sign: Sign,
    nvars: usize,
    vars: [usize; 4],
    variant: usize,
) -> Result<CrossingComplex, MfError> {
    let pair = chi_variants()
        .get(variant)
        .ok_or(MfError::NoSuchVariant(variant))?;
    let images = local_images(nvars, vars);
    let g0 = Koszul {
        nvars,
        factors: pair.gamma0.factors.iter().map(|f| f.map(&images)).collect(),
        x_shift: 0,
    };
    let g1 = Koszul {
        nvars,
        factors: pair.gamma1.factors.iter().map(|f| f.map(&images)).collect(),
        x_shift: -1,
    };
    let (chi0, chi1) = chi_pair(nvars, vars, variant)?;
    let vertex = |resolution, vertical, h_shift, x_shift, koszul| LocalVertex {
        resolution,
        vertical,
        h_shift,
        x_shift,
        koszul,
    };
    Ok(match sign {
        Sign::Positive => CrossingComplex {
            sign,
            vertices: [
                vertex(Resolution::One, -2, 2, -1, g1),
                vertex(Resolution::Zero, 0, 2, -2, g0),
            ],
            edge: MorphismData { delta_v: 2, ..chi1 },
        },
        Sign::Negative => CrossingComplex {
            sign,
            vertices: [
                vertex(Resolution::Zero, 0, -2, 2, g0),
                vertex(Resolution::One, 2, -2, 1, g1),
            ],
            edge: MorphismData { delta_v: 2, ..chi0 },
        },
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CubeVertex {
    /// Per crossing: 0 for the edge source resolution, 1 for the target.
    pub choice: Vec<u8>,
    pub vertical: i32,
    pub factors: Vec<KoszulFactor>,
    pub h_shift: i32,
    pub x_shift: i32,
}

/// Vertical map between cube vertices, acting on `rows` by `local`
/// (indexed by local bit masks) and as the identity on all other rows.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerticalEdge {
    pub source: usize,
    pub target: usize,
    pub rows: Vec<usize>,
    pub local: PolyMatrix,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Normalization {
    pub v_shift: i32,
    pub h_shift: i32,
}

/// Symbolic description of Ĉ(B) with its three differentials.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripleComplexSpec {
    pub nvars: usize,
    pub rows: usize,
    pub vertices: Vec<CubeVertex>,
    pub edges: Vec<VerticalEdge>,
    pub normalization: Normalization,
    /// Image of every diagram variable in the spec's polynomial ring.
    pub variable_images: Vec<Poly>,
    pub component_of_variable: Vec<usize>,
    /// Rows that must survive row elimination.
    pub protected_rows: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Generator {
    pub vertex: usize,
    pub state: u32,
    pub h: i32,
    pub v: i32,
    pub x: i32,
}

/// Generator-level form of a spec.
#[derive(Clone, Debug)]
pub struct Expanded {
    pub nvars: usize,
    pub gens: Vec<Generator>,
    /// Bits of rows with b = 0 in the generator's vertex; preserved by d₊.
    pub key: Vec<u32>,
    pub d_plus: PolyMatrix,
    pub d_minus: PolyMatrix,
    pub d_v: PolyMatrix,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IdentityFailure {
    DPlusSquared,
    DMinusSquared,
    DvSquared,
    PlusMinus,
    PlusV,
    MinusV,
    Degrees(String),
}

pub fn assemble(diagram: &MarkedDiagram, stats: &ClosureStats) -> Result<TripleComplexSpec, MfError> {
    assemble_with(diagram, stats, 0)
}

pub fn assemble_with(
    diagram: &MarkedDiagram,
    stats: &ClosureStats,
    variant: usize,
) -> Result<TripleComplexSpec, MfError> {
    if !diagram.check_gluing() {
        return Err(MfError::InconsistentGluing);
    }
    let n = diagram.nvars;
    let mut crossings = Vec::new();
    let mut arc_factors = Vec::new();
    for p in &diagram.pieces {
        match p {
            Piece::Crossing {
                sign,
                inputs,
                outputs,
            } => {
                let vars = [inputs[0], inputs[1], outputs[0], outputs[1]];
                crossings.push(crossing_complex(*sign, n, vars, variant)?);
            }
            Piece::Arc { .. } => arc_factors.extend(piece_mf(p, n, None)?.factors),
        }
    }
    let c = crossings.len();
    let rows = 2 * c + arc_factors.len();
    let mut vertices = Vec::with_capacity(1 << c);
    for idx in 0..1usize << c {
        let choice: Vec<u8> = (0..c).map(|k| (idx >> k & 1) as u8).collect();
        let mut v = CubeVertex {
            choice: choice.clone(),
            vertical: 0,
            factors: Vec::with_capacity(rows),
            h_shift: 0,
            x_shift: 0,
        };
        for (k, cc) in crossings.iter().enumerate() {
            let lv = &cc.vertices[choice[k] as usize];
            v.vertical += lv.vertical;
            v.h_shift += lv.h_shift;
            v.x_shift += lv.x_shift + lv.koszul.x_shift;
            v.factors.extend(lv.koszul.factors.iter().cloned());
        }
        v.factors.extend(arc_factors.iter().cloned());
        vertices.push(v);
    }
    let mut edges = Vec::new();
    for idx in 0..1usize << c {
        for (k, cc) in crossings.iter().enumerate() {
            if idx >> k & 1 == 0 {
                edges.push(VerticalEdge {
                    source: idx,
                    target: idx | 1 << k,
                    rows: vec![2 * k, 2 * k + 1],
                    local: cc.edge.matrix.clone(),
                });
            }
        }
    }
    Ok(TripleComplexSpec {
        nvars: n,
        rows,
        vertices,
        edges,
        normalization: Normalization {
            v_shift: stats.self_linking,
            h_shift: -stats.self_linking,
        },
        variable_images: (0..n).map(|k| x(n, k)).collect(),
        component_of_variable: diagram.component_of_variable.clone(),
        protected_rows: Vec::new(),
    })
}

fn extract(state: u32, rows: &[usize]) -> u32 {
    rows.iter()
        .enumerate()
        .fold(0, |acc, (k, &r)| acc | (state >> r & 1) << k)
}

fn deposit(state: u32, rows: &[usize], local: u32) -> u32 {
    rows.iter().enumerate().fold(state, |acc, (k, &r)| {
        (acc & !(1 << r)) | (local >> k & 1) << r
    })
}

/// Remove bit `r` from a mask, shifting higher bits down.
fn drop_bit(state: u32, r: usize) -> u32 {
    let low = state & ((1 << r) - 1);
    let high = state >> (r + 1);
    low | high << r
}

impl TripleComplexSpec {
    pub fn states(&self) -> usize {
        1 << self.rows
    }

    pub fn generator(&self, vertex: usize, state: u32) -> Generator {
        let v = &self.vertices[vertex];
        Generator {
            vertex,
            state,
            h: v.h_shift - 2 * state.count_ones() as i32,
            v: v.vertical,
            x: v.x_shift + state_xdeg(&v.factors, state),
        }
    }

    pub fn gen_id(&self, vertex: usize, state: u32) -> usize {
        (vertex << self.rows) | state as usize
    }

    pub fn expand(&self) -> Expanded {
        let per = self.states();
        let total = per * self.vertices.len();
        let mut gens = Vec::with_capacity(total);
        let mut key = Vec::with_capacity(total);
        let mut d_plus = PolyMatrix::zeros(total, total);
        let mut d_minus = PolyMatrix::zeros(total, total);
        for (vi, v) in self.vertices.iter().enumerate() {
            let zero_mask = v
                .factors
                .iter()
                .enumerate()
                .filter(|(_, f)| f.b.is_zero())
                .fold(0u32, |acc, (k, _)| acc | 1 << k);
            let off = vi * per;
            for (t, s, p) in koszul_d_plus(&v.factors, per).entries() {
                d_plus.add_entry(off + t, off + s, p);
            }
            for (t, s, p) in koszul_d_minus(&v.factors, per).entries() {
                d_minus.add_entry(off + t, off + s, p);
            }
            for s in 0..per as u32 {
                gens.push(self.generator(vi, s));
                key.push(s & zero_mask);
            }
        }
        let mut d_v = PolyMatrix::zeros(total, total);
        for e in &self.edges {
            for s in 0..per as u32 {
                let ls = extract(s, &e.rows) as usize;
                for (lt, p) in &e.local.columns[ls] {
                    let t = deposit(s, &e.rows, *lt as u32);
                    d_v.add_entry(self.gen_id(e.target, t), self.gen_id(e.source, s), p);
                }
            }
        }
        Expanded {
            nvars: self.nvars,
            gens,
            key,
            d_plus,
            d_minus,
            d_v,
        }
    }

    /// Σ a·b per cube vertex.
    pub fn potentials(&self) -> Vec<Poly> {
        self.vertices
            .iter()
            .map(|v| {
                v.factors
                    .iter()
                    .fold(Poly::zero(self.nvars), |acc, f| acc.add(&f.potential()))
            })
            .collect()
    }

    pub fn serialize_json(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }

    pub fn hash_hex(&self) -> String {
        hex::encode(Sha256::digest(self.serialize_json().as_bytes()))
    }

    /// Polynomial acting as the diagram variable `k`.
    pub fn variable(&self, k: usize) -> &Poly {
        &self.variable_images[k]
    }

    pub fn components(&self) -> usize {
        self.component_of_variable
            .iter()
            .max()
            .map_or(0, |c| c + 1)
    }

    /// Some diagram variable on `component`.
    pub fn component_variable(&self, component: usize) -> Option<usize> {
        self.component_of_variable.iter().position(|&c| c == component)
    }

    fn row_eliminable(&self, r: usize) -> Option<(usize, Vec<Poly>)> {
        if self.protected_rows.contains(&r) {
            return None;
        }
        let b = &self.vertices[0].factors[r].b;
        if b.degree() != Some(1) || self.vertices.iter().any(|v| &v.factors[r].b != b) {
            return None;
        }
        let e = (0..self.nvars)
            .rev()
            .find(|&k| b.terms().any(|m| m.0[k] == 1))?;
        let n = self.nvars;
        let mut images: Vec<Poly> = (0..n).map(|k| x(n, k)).collect();
        images[e] = b.add(&x(n, e));
        for edge in &self.edges {
            if let Some(pos) = edge.rows.iter().position(|&q| q == r) {
                for (t, s, p) in edge.local.entries() {
                    if s >> pos & 1 == 1 && t >> pos & 1 == 0 && !p.substitute(&images).is_zero() {
                        return None;
                    }
                }
            }
        }
        Some((e, images))
    }

    fn eliminate_row(&self, r: usize, e: usize, images: &[Poly]) -> TripleComplexSpec {
        let n = self.nvars;
        // x_e ↦ ℓ, then renumber variables after e down by one.
        let renumber: Vec<Poly> = (0..n)
            .map(|k| match k.cmp(&e) {
                std::cmp::Ordering::Less => x(n - 1, k),
                std::cmp::Ordering::Equal => Poly::zero(n - 1),
                std::cmp::Ordering::Greater => x(n - 1, k - 1),
            })
            .collect();
        let full: Vec<Poly> = images.iter().map(|p| p.substitute(&renumber)).collect();
        let vertices = self
            .vertices
            .iter()
            .map(|v| CubeVertex {
                choice: v.choice.clone(),
                vertical: v.vertical,
                h_shift: v.h_shift,
                x_shift: v.x_shift,
                factors: v
                    .factors
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k != r)
                    .map(|(_, f)| f.map(&full))
                    .collect(),
            })
            .collect();
        let shift_row = |q: usize| if q > r { q - 1 } else { q };
        let edges = self
            .edges
            .iter()
            .map(|edge| match edge.rows.iter().position(|&q| q == r) {
                None => VerticalEdge {
                    source: edge.source,
                    target: edge.target,
                    rows: edge.rows.iter().map(|&q| shift_row(q)).collect(),
                    local: edge.local.substitute(&full),
                },
                Some(pos) => {
                    let k = edge.rows.len() - 1;
                    let mut local = PolyMatrix::zeros(1 << k, 1 << k);
                    for (t, s, p) in edge.local.entries() {
                        if s >> pos & 1 == 0 && t >> pos & 1 == 0 {
                            let (t2, s2) = (drop_bit(t as u32, pos), drop_bit(s as u32, pos));
                            local.add_entry(t2 as usize, s2 as usize, &p.substitute(&full));
                        }
                    }
                    VerticalEdge {
                        source: edge.source,
                        target: edge.target,
                        rows: edge
                            .rows
                            .iter()
                            .filter(|&&q| q != r)
                            .map(|&q| shift_row(q))
                            .collect(),
                        local,
                    }
                }
            })
            .collect();
        TripleComplexSpec {
            nvars: n - 1,
            rows: self.rows - 1,
            vertices,
            edges,
            normalization: self.normalization,
            variable_images: self.variable_images.iter().map(|p| p.substitute(&full)).collect(),
            component_of_variable: self.component_of_variable.clone(),
            protected_rows: self.protected_rows.iter().map(|&q| shift_row(q)).collect(),
        }
    }

    /// Repeatedly cancel rows whose b is a common nonzero linear form,
    /// passing to the quotient by that form. H(·, d₊) and the induced
    /// d₋, d_v are unchanged.
    pub fn eliminate_linear_rows(&self) -> TripleComplexSpec {
        let mut spec = self.clone();
        loop {
            let found = (0..spec.rows).find_map(|r| spec.row_eliminable(r).map(|(e, im)| (r, e, im)));
            match found {
                Some((r, e, images)) => spec = spec.eliminate_row(r, e, &images),
                None => return spec,
            }
        }
    }

    /// Map sending θ of `row` to 1, identity elsewhere.
    pub fn contraction(&self, row: usize) -> PolyMatrix {
        let per = self.states();
        let total = per * self.vertices.len();
        let one = Poly::one(self.nvars);
        let mut m = PolyMatrix::zeros(total, total);
        for vi in 0..self.vertices.len() {
            for s in 0..per as u32 {
                if s >> row & 1 == 1 {
                    m.add_entry(self.gen_id(vi, s ^ 1 << row), self.gen_id(vi, s), &one);
                }
            }
        }
        m
    }
}

impl Expanded {
    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    /// Symbolic check of squares, commutation and degree bookkeeping.
    pub fn check_identities(&self) -> Result<(), IdentityFailure> {
        let z = |m: PolyMatrix, f: IdentityFailure| if m.is_zero() { Ok(()) } else { Err(f) };
        z(self.d_plus.compose(&self.d_plus), IdentityFailure::DPlusSquared)?;
        z(self.d_minus.compose(&self.d_minus), IdentityFailure::DMinusSquared)?;
        z(self.d_v.compose(&self.d_v), IdentityFailure::DvSquared)?;
        let anti = |a: &PolyMatrix, b: &PolyMatrix| a.compose(b).add(&b.compose(a));
        z(anti(&self.d_plus, &self.d_minus), IdentityFailure::PlusMinus)?;
        z(anti(&self.d_plus, &self.d_v), IdentityFailure::PlusV)?;
        z(anti(&self.d_minus, &self.d_v), IdentityFailure::MinusV)?;
        self.check_degrees(&self.d_plus, (2, 0, 0), "d+")?;
        self.check_degrees(&self.d_minus, (-2, 0, 6), "d-")?;
        self.check_degrees(&self.d_v, (0, 2, 0), "dv")
    }

    /// Every entry is homogeneous of the degree forced by its generators.
    pub fn check_degrees(
        &self,
        m: &PolyMatrix,
        (dh, dv, dx): (i32, i32, i32),
        name: &str,
    ) -> Result<(), IdentityFailure> {
        for (t, s, p) in m.entries() {
            let (gs, gt) = (&self.gens[s], &self.gens[t]);
            let want = gs.x + dx - gt.x;
            if gt.h - gs.h != dh || gt.v - gs.v != dv || p.xdeg() != Ok(Some(want)) {
                return Err(IdentityFailure::Degrees(format!(
                    "{name}: {gs:?} -> {gt:?} entry {p}"
                )));
            }
        }
        Ok(())
    }
}

/// A spec with an extra marked point on `component` together with the
/// homotopy h of the auxiliary arc row.
#[derive(Clone, Debug)]
pub struct Homotopy {
    pub spec: TripleComplexSpec,
    pub row: usize,
    pub component: usize,
    pub map: MorphismData,
}

/// Insert a marked point y next to some marked point x of `component`,
/// assemble, and return h: θ_A ↦ 1 on the new arc A = (x → y).
pub fn homotopy_h(
    diagram: &MarkedDiagram,
    stats: &ClosureStats,
    component: usize,
    variant: usize,
) -> Result<Homotopy, MfError> {
    if component >= diagram.components() {
        return Err(MfError::NoSuchComponent(component));
    }
    let v = diagram
        .component_of_variable
        .iter()
        .position(|&c| c == component)
        .ok_or(MfError::NoEligibleArc(component))?;
    let y = diagram.nvars;
    let mut pieces = diagram.pieces.clone();
    let mut replaced = false;
    for p in pieces.iter_mut() {
        match p {
            Piece::Arc { input, .. } if *input == v && !replaced => {
                *input = y;
                replaced = true;
            }
            Piece::Crossing { inputs, .. } if !replaced => {
                if let Some(slot) = inputs.iter_mut().find(|q| **q == v) {
                    *slot = y;
                    replaced = true;
                }
            }
            _ => {}
        }
    }
    if !replaced {
        return Err(MfError::NoEligibleArc(component));
    }
    let arc_index_among_arcs = pieces.iter().filter(|p| matches!(p, Piece::Arc { .. })).count();
    pieces.push(Piece::Arc { input: v, output: y });
    let mut comp = diagram.component_of_variable.clone();
    comp.push(component);
    let marked = MarkedDiagram {
        pieces,
        nvars: y + 1,
        component_of_variable: comp,
    };
    let mut spec = assemble_with(&marked, stats, variant)?;
    let row = 2 * marked.crossings().count() + arc_index_among_arcs;
    spec.protected_rows.push(row);
    let map = MorphismData {
        matrix: spec.contraction(row),
        delta_h: 2,
        delta_v: 0,
        delta_x: -2,
    };
    Ok(Homotopy {
        spec,
        row,
        component,
        map,
    })
}

impl Homotopy {
    /// Row elimination keeping the homotopy row.
    pub fn reduced(&self) -> Homotopy {
        let spec = self.spec.eliminate_linear_rows();
        let row = spec.protected_rows[0];
        let map = MorphismData {
            matrix: spec.contraction(row),
            ..self.map.clone()
        };
        Homotopy {
            spec,
            row,
            component: self.component,
            map,
        }
    }

    /// d₋h + hd₋ as a polynomial matrix; equals multiplication by the arc's
    /// potential factor x² + xy + y².
    pub fn anticommutator(&self) -> PolyMatrix {
        let e = self.spec.expand();
        let h = &self.map.matrix;
        e.d_minus.compose(h).add(&h.compose(&e.d_minus))
    }
}
