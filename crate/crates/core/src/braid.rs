//! Braid words, their closures and marked diagrams.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BraidError {
    #[error("malformed braid word {0:?}; expected \"b;g1,g2,...\"")]
    Malformed(String),
    #[error("strand count must be at least 1")]
    NoStrands,
    #[error("letter {letter} out of range for {strands} strands")]
    LetterOutOfRange { letter: i32, strands: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn of(letter: i32) -> Sign {
        if letter > 0 {
            Sign::Positive
        } else {
            Sign::Negative
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BraidWord {
    strands: usize,
    letters: Vec<i32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosureStats {
    pub components: usize,
    pub writhe: i32,
    pub strands: usize,
    pub self_linking: i32,
}

impl BraidWord {
    pub fn new(strands: usize, letters: Vec<i32>) -> Result<Self, BraidError> {
        if strands == 0 {
            return Err(BraidError::NoStrands);
        }
        for &g in &letters {
            if g == 0 || g.unsigned_abs() as usize >= strands {
                return Err(BraidError::LetterOutOfRange { letter: g, strands });
            }
        }
        Ok(BraidWord { strands, letters })
    }

    /// The trivial braid on `m` strands, whose closure is the m-component unlink.
    pub fn unlink(m: usize) -> Self {
        BraidWord::new(m, Vec::new()).expect("m >= 1")
    }

    pub fn parse(text: &str) -> Result<Self, BraidError> {
        let malformed = || BraidError::Malformed(text.to_string());
        let (b, rest) = text.trim().split_once(';').ok_or_else(malformed)?;
        let strands: i64 = b.trim().parse().map_err(|_| malformed())?;
        if strands < 1 {
            return Err(BraidError::NoStrands);
        }
        let letters = rest
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<i32>().map_err(|_| malformed()))
            .collect::<Result<Vec<_>, _>>()?;
        BraidWord::new(strands as usize, letters)
    }

    pub fn strands(&self) -> usize {
        self.strands
    }

    pub fn letters(&self) -> &[i32] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn writhe(&self) -> i32 {
        self.letters.iter().map(|g| g.signum()).sum()
    }

    /// `perm[p]` is the final position of the strand starting at position `p`.
    pub fn permutation(&self) -> Vec<usize> {
        let mut at: Vec<usize> = (0..self.strands).collect(); // at[pos] = starting strand
        for &g in &self.letters {
            let k = g.unsigned_abs() as usize;
            at.swap(k - 1, k);
        }
        let mut perm = vec![0; self.strands];
        for (pos, &strand) in at.iter().enumerate() {
            perm[strand] = pos;
        }
        perm
    }

    pub fn components(&self) -> usize {
        let perm = self.permutation();
        let mut seen = vec![false; self.strands];
        let mut count = 0;
        for s in 0..self.strands {
            if !seen[s] {
                count += 1;
                let mut p = s;
                while !seen[p] {
                    seen[p] = true;
                    p = perm[p];
                }
            }
        }
        count
    }

    pub fn closure_stats(&self) -> ClosureStats {
        let writhe = self.writhe();
        ClosureStats {
            components: self.components(),
            writhe,
            strands: self.strands,
            self_linking: writhe - self.strands as i32,
        }
    }

    /// Cancel adjacent inverse pairs.
    pub fn free_reduce(&self) -> BraidWord {
        let mut out: Vec<i32> = Vec::with_capacity(self.letters.len());
        for &g in &self.letters {
            if out.last() == Some(&-g) {
                out.pop();
            } else {
                out.push(g);
            }
        }
        BraidWord {
            strands: self.strands,
            letters: out,
        }
    }

    /// `g⁻¹ · w · g`, freely reduced.
    pub fn conjugate(&self, g: i32) -> Result<BraidWord, BraidError> {
        let mut letters = vec![-g];
        letters.extend_from_slice(&self.letters);
        letters.push(g);
        Ok(BraidWord::new(self.strands, letters)?.free_reduce())
    }

    /// Add a strand and the letter `±b` at the end.
    pub fn stabilize(&self, sign: Sign) -> BraidWord {
        let b = self.strands as i32;
        let mut letters = self.letters.clone();
        letters.push(if sign == Sign::Positive { b } else { -b });
        BraidWord {
            strands: self.strands + 1,
            letters,
        }
    }

    pub fn mirror(&self) -> BraidWord {
        BraidWord {
            strands: self.strands,
            letters: self.letters.iter().map(|g| -g).collect(),
        }
    }

    /// All single-letter conjugates followed by one positive and one negative stabilization.
    pub fn markov_variants(&self) -> Vec<BraidWord> {
        let mut out = Vec::new();
        for k in 1..self.strands as i32 {
            for g in [k, -k] {
                out.push(self.conjugate(g).expect("letter in range"));
            }
        }
        out.push(self.stabilize(Sign::Positive));
        out.push(self.stabilize(Sign::Negative));
        out
    }
}

impl FromStr for BraidWord {
    type Err = BraidError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BraidWord::parse(s)
    }
}

impl fmt::Display for BraidWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let letters: Vec<String> = self.letters.iter().map(|g| g.to_string()).collect();
        write!(f, "{};{}", self.strands, letters.join(","))
    }
}

impl fmt::Debug for BraidWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self)
    }
}

/// A piece of the cut-open diagram. Variables are indices of marked points.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Piece {
    /// Oriented arc from `input` to `output`.
    Arc { input: usize, output: usize },
    /// Crossing with incoming `[x_i, x_j]` (bottom left, bottom right) and
    /// outgoing `[x_s, x_t]` (top left, top right). The strand from `x_i` exits at `x_t`.
    Crossing {
        sign: Sign,
        inputs: [usize; 2],
        outputs: [usize; 2],
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Marking {
    /// One marked point on every edge between crossings.
    #[default]
    PerArc,
    /// A marked point at every crossing endpoint; edges become arc pieces.
    Endpoints,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkedDiagram {
    pub pieces: Vec<Piece>,
    pub nvars: usize,
    pub component_of_variable: Vec<usize>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

pub fn build_marked_diagram(word: &BraidWord) -> MarkedDiagram {
    build_marked_diagram_with(word, Marking::PerArc)
}

pub fn build_marked_diagram_with(word: &BraidWord, marking: Marking) -> MarkedDiagram {
    let raw = match marking {
        Marking::PerArc => per_arc(word),
        Marking::Endpoints => endpoints(word),
    };
    raw.normalize()
}

struct RawDiagram {
    pieces: Vec<Piece>,
    nvars: usize,
    merge: Vec<(usize, usize)>,
}

impl RawDiagram {
    fn normalize(self) -> MarkedDiagram {
        let mut uf = UnionFind::new(self.nvars);
        for &(a, b) in &self.merge {
            uf.union(a, b);
        }
        let mut rename = vec![usize::MAX; self.nvars];
        let mut next = 0;
        let mut name = |v: usize, uf: &mut UnionFind| {
            let r = uf.find(v);
            if rename[r] == usize::MAX {
                rename[r] = next;
                next += 1;
            }
            rename[r]
        };
        let pieces: Vec<Piece> = self
            .pieces
            .iter()
            .map(|p| match *p {
                Piece::Arc { input, output } => Piece::Arc {
                    input: name(input, &mut uf),
                    output: name(output, &mut uf),
                },
                Piece::Crossing {
                    sign,
                    inputs,
                    outputs,
                } => Piece::Crossing {
                    sign,
                    inputs: [name(inputs[0], &mut uf), name(inputs[1], &mut uf)],
                    outputs: [name(outputs[0], &mut uf), name(outputs[1], &mut uf)],
                },
            })
            .collect();
        let nvars = next;
        let mut comp = UnionFind::new(nvars);
        for p in &pieces {
            match *p {
                Piece::Arc { input, output } => comp.union(input, output),
                Piece::Crossing {
                    inputs, outputs, ..
                } => {
                    comp.union(inputs[0], outputs[1]);
                    comp.union(inputs[1], outputs[0]);
                }
            }
        }
        let mut label = vec![usize::MAX; nvars];
        let mut count = 0;
        let component_of_variable = (0..nvars)
            .map(|v| {
                let r = comp.find(v);
                if label[r] == usize::MAX {
                    label[r] = count;
                    count += 1;
                }
                label[r]
            })
            .collect();
        MarkedDiagram {
            pieces,
            nvars,
            component_of_variable,
        }
    }
}

fn touched_positions(word: &BraidWord) -> Vec<bool> {
    let mut touched = vec![false; word.strands()];
    for &g in word.letters() {
        let k = g.unsigned_abs() as usize;
        touched[k - 1] = true;
        touched[k] = true;
    }
    touched
}

fn per_arc(word: &BraidWord) -> RawDiagram {
    let b = word.strands();
    let initial: Vec<usize> = (0..b).collect();
    let mut current = initial.clone();
    let mut nvars = b;
    let mut pieces = Vec::new();
    for &g in word.letters() {
        let k = g.unsigned_abs() as usize;
        let (i, j) = (current[k - 1], current[k]);
        let (s, t) = (nvars, nvars + 1);
        nvars += 2;
        pieces.push(Piece::Crossing {
            sign: Sign::of(g),
            inputs: [i, j],
            outputs: [s, t],
        });
        current[k - 1] = s;
        current[k] = t;
    }
    let touched = touched_positions(word);
    let mut merge = Vec::new();
    for p in 0..b {
        if touched[p] {
            merge.push((current[p], initial[p]));
        } else {
            pieces.push(Piece::Arc {
                input: initial[p],
                output: initial[p],
            });
        }
    }
    RawDiagram {
        pieces,
        nvars,
        merge,
    }
}

fn endpoints(word: &BraidWord) -> RawDiagram {
    let b = word.strands();
    let mut pending: Vec<Option<usize>> = vec![None; b];
    let mut first_in: Vec<Option<usize>> = vec![None; b];
    let mut nvars = 0;
    let mut crossings = Vec::new();
    let mut arcs = Vec::new();
    for &g in word.letters() {
        let k = g.unsigned_abs() as usize;
        let vars = [nvars, nvars + 1, nvars + 2, nvars + 3];
        nvars += 4;
        for (p, input) in [(k - 1, vars[0]), (k, vars[1])] {
            match pending[p] {
                Some(o) => arcs.push(Piece::Arc { input: o, output: input }),
                None => first_in[p] = Some(input),
            }
        }
        pending[k - 1] = Some(vars[2]);
        pending[k] = Some(vars[3]);
        crossings.push(Piece::Crossing {
            sign: Sign::of(g),
            inputs: [vars[0], vars[1]],
            outputs: [vars[2], vars[3]],
        });
    }
    for p in 0..b {
        match (pending[p], first_in[p]) {
            (Some(o), Some(f)) => arcs.push(Piece::Arc { input: o, output: f }),
            _ => {
                arcs.push(Piece::Arc {
                    input: nvars,
                    output: nvars,
                });
                nvars += 1;
            }
        }
    }
    crossings.extend(arcs);
    RawDiagram {
        pieces: crossings,
        nvars,
        merge: Vec::new(),
    }
}

impl MarkedDiagram {
    pub fn crossings(&self) -> impl Iterator<Item = &Piece> {
        self.pieces
            .iter()
            .filter(|p| matches!(p, Piece::Crossing { .. }))
    }

    pub fn arcs(&self) -> impl Iterator<Item = &Piece> {
        self.pieces.iter().filter(|p| matches!(p, Piece::Arc { .. }))
    }

    pub fn components(&self) -> usize {
        self.component_of_variable
            .iter()
            .max()
            .map_or(0, |&c| c + 1)
    }

    /// Each variable must occur exactly once as an input and once as an output.
    pub fn check_gluing(&self) -> bool {
        let mut ins = vec![0usize; self.nvars];
        let mut outs = vec![0usize; self.nvars];
        for p in &self.pieces {
            match *p {
                Piece::Arc { input, output } => {
                    ins[input] += 1;
                    outs[output] += 1;
                }
                Piece::Crossing {
                    inputs, outputs, ..
                } => {
                    for v in inputs {
                        ins[v] += 1;
                    }
                    for v in outputs {
                        outs[v] += 1;
                    }
                }
            }
        }
        ins.iter().all(|&c| c == 1) && outs.iter().all(|&c| c == 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(s: &str) -> BraidWord {
        s.parse().unwrap()
    }

    #[test]
    fn parse_examples() {
        let t = w("2;1,1,1");
        assert_eq!((t.strands(), t.letters(), t.writhe()), (2, &[1, 1, 1][..], 3));
        let u = w("1;");
        assert_eq!((u.strands(), u.len()), (1, 0));
        let x = w("3;1,-2");
        assert_eq!((x.strands(), x.letters(), x.writhe()), (3, &[1, -2][..], 0));
        assert_eq!(w(" 3 ; 1 , -2 "), x);
        assert_eq!(x.to_string(), "3;1,-2");
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(BraidWord::parse("2,1"), Err(BraidError::Malformed(_))));
        assert!(matches!(BraidWord::parse("2;1,a"), Err(BraidError::Malformed(_))));
        assert_eq!(BraidWord::parse("0;"), Err(BraidError::NoStrands));
        assert_eq!(
            BraidWord::parse("2;2"),
            Err(BraidError::LetterOutOfRange { letter: 2, strands: 2 })
        );
        assert!(BraidWord::parse("2;0").is_err());
    }

    #[test]
    fn stats_examples() {
        let s = w("2;1,1,1").closure_stats();
        assert_eq!((s.components, s.writhe, s.strands, s.self_linking), (1, 3, 2, 1));
        let s = BraidWord::unlink(4).closure_stats();
        assert_eq!((s.components, s.writhe, s.self_linking), (4, 0, -4));
        let s = w("2;1,1").closure_stats();
        assert_eq!((s.components, s.writhe, s.self_linking), (2, 2, 0));
    }

    #[test]
    fn markov_examples() {
        let t = w("2;1,1,1");
        assert_eq!(t.conjugate(1).unwrap(), t);
        assert_eq!(t.conjugate(-1).unwrap(), t);
        assert_eq!(t.stabilize(Sign::Positive), w("3;1,1,1,2"));
        assert_eq!(w("1;").stabilize(Sign::Negative), w("2;-1"));
        assert_eq!(t.markov_variants().len(), 4);
    }

    #[test]
    fn per_arc_marking() {
        let d = build_marked_diagram(&w("1;"));
        assert_eq!(d.pieces, vec![Piece::Arc { input: 0, output: 0 }]);

        let d = build_marked_diagram(&w("2;1"));
        assert_eq!(d.nvars, 2);
        assert_eq!(d.crossings().count(), 1);
        assert_eq!(d.arcs().count(), 0);
        assert_eq!(d.components(), 1);
        assert!(d.check_gluing());

        let d = build_marked_diagram(&w("3;1"));
        assert_eq!(d.arcs().count(), 1);
        assert_eq!(d.components(), 2);
    }

    #[test]
    fn endpoint_marking_counts_arcs() {
        let d = build_marked_diagram_with(&w("2;1"), Marking::Endpoints);
        assert_eq!((d.crossings().count(), d.arcs().count()), (1, 2));
        let d = build_marked_diagram_with(&w("2;1,1"), Marking::Endpoints);
        assert_eq!((d.crossings().count(), d.arcs().count()), (2, 4));
        assert_eq!(d.components(), 2);
        assert!(d.check_gluing());
        let d = build_marked_diagram_with(&w("1;"), Marking::Endpoints);
        assert_eq!(d.pieces, vec![Piece::Arc { input: 0, output: 0 }]);
    }

    fn arb_word() -> impl Strategy<Value = BraidWord> {
        (1usize..5).prop_flat_map(|b| {
            let letter = if b == 1 {
                Just(0).boxed()
            } else {
                (1..b as i32).prop_flat_map(|k| prop_oneof![Just(k), Just(-k)]).boxed()
            };
            proptest::collection::vec(letter, 0..8).prop_map(move |mut ls| {
                ls.retain(|&g| g != 0);
                BraidWord::new(b, ls).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn cycle_count_is_markov_invariant(word in arb_word()) {
            let m = word.components();
            for v in word.markov_variants() {
                prop_assert_eq!(v.components(), m);
            }
        }

        #[test]
        fn diagrams_glue(word in arb_word()) {
            for marking in [Marking::PerArc, Marking::Endpoints] {
                let d = build_marked_diagram_with(&word, marking);
                prop_assert!(d.check_gluing());
                prop_assert_eq!(d.crossings().count(), word.len());
                prop_assert_eq!(d.components(), word.components());
            }
        }
    }
}
