//! Presented algebras over a product-of-Z idempotent ring: normal forms, verification
//! against a realization, quadratic parts, quadratic duals and induced differentials.

use crate::zlinalg::{kernel_basis, solve, to_i64, ZMatrix};
use itertools::Itertools;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;
use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

pub type Word = Vec<usize>;
/// Integer combination of words.
pub type Poly = Vec<(i64, Word)>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gen {
    pub name: String,
    pub left: usize,
    pub right: usize,
    /// Intrinsic degree doubled.
    pub intr2: i32,
    pub hom: i32,
}

#[derive(Clone, Debug, Default)]
pub struct Presentation {
    pub idempotents: Vec<String>,
    pub gens: Vec<Gen>,
    pub relations: Vec<Poly>,
    /// Differential on generators, if any.
    pub differential: Option<Vec<Poly>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LinQuadError {
    #[error("relation {0} is not homogeneous or idempotent-compatible")]
    Inhomogeneous(usize),
    #[error("generator {0} has intrinsic degree 0; weights must be positive")]
    ZeroWeight(String),
    #[error("word {0:?} is not composable")]
    NotComposable(Word),
    #[error("relation {0} is not linear-quadratic")]
    NotLinearQuadratic(usize),
    #[error("relation {0} is purely linear")]
    PurelyLinear(usize),
    #[error("phi is not well defined on the quadratic part (piece {0})")]
    PhiNotWellDefined(String),
    #[error("no integer solution for the dual differential of {0}")]
    DualDifferential(String),
    #[error("non-unit pivot (torsion) in the piece of weight {weight} starting at {start}")]
    Torsion { start: usize, weight: u32 },
    #[error("normal forms did not terminate below weight {0}")]
    ResourceLimit(u32),
    #[error("coefficient overflow")]
    Overflow,
    #[error("parse error: {0}")]
    Parse(String),
}

impl Presentation {
    pub fn word_left(&self, w: &[usize]) -> usize {
        self.gens[w[0]].left
    }

    pub fn word_right(&self, w: &[usize]) -> usize {
        self.gens[*w.last().unwrap()].right
    }

    pub fn composable(&self, w: &[usize]) -> bool {
        w.windows(2).all(|p| self.gens[p[0]].right == self.gens[p[1]].left)
    }

    pub fn word_bideg(&self, w: &[usize]) -> (i32, i32) {
        w.iter().fold((0, 0), |(a, b), &g| (a + self.gens[g].intr2, b + self.gens[g].hom))
    }

    pub fn word_hom(&self, w: &[usize]) -> i32 {
        w.iter().map(|&g| self.gens[g].hom).sum()
    }

    pub fn gen_index(&self, name: &str) -> Option<usize> {
        self.gens.iter().position(|g| g.name == name)
    }

    /// Checks every relation term is composable with common endpoints and bidegree.
    pub fn check(&self) -> Result<(), LinQuadError> {
        for (i, r) in self.relations.iter().enumerate() {
            if r.is_empty() {
                continue;
            }
            let key = |w: &Word| (self.word_left(w), self.word_right(w), self.word_bideg(w));
            if r.iter().any(|(_, w)| w.is_empty() || !self.composable(w)) {
                return Err(LinQuadError::Inhomogeneous(i));
            }
            let k0 = key(&r[0].1);
            if r.iter().any(|(_, w)| key(w) != k0) {
                return Err(LinQuadError::Inhomogeneous(i));
            }
        }
        Ok(())
    }

    pub fn format_word(&self, w: &[usize]) -> String {
        w.iter().map(|&g| self.gens[g].name.as_str()).join(".")
    }

    pub fn format_poly(&self, p: &Poly) -> String {
        p.iter().map(|(c, w)| format!("{:+} {}", c, self.format_word(w))).join("; ")
    }

    /// Line-oriented text form.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for e in &self.idempotents {
            writeln!(s, "idem {}", e).unwrap();
        }
        for g in &self.gens {
            writeln!(s, "gen {} {} {} {} {}", g.name, self.idempotents[g.left], self.idempotents[g.right], g.intr2, g.hom)
                .unwrap();
        }
        for r in &self.relations {
            writeln!(s, "rel {}", self.format_poly(r)).unwrap();
        }
        if let Some(d) = &self.differential {
            for (g, p) in d.iter().enumerate() {
                if !p.is_empty() {
                    writeln!(s, "d {} -> {}", self.gens[g].name, self.format_poly(p)).unwrap();
                }
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, LinQuadError> {
        let mut p = Presentation::default();
        let mut diff: Vec<(usize, Poly)> = Vec::new();
        let perr = |l: &str| LinQuadError::Parse(l.to_string());
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (kw, rest) = line.split_once(' ').ok_or_else(|| perr(line))?;
            match kw {
                "idem" => p.idempotents.push(rest.trim().to_string()),
                "gen" => {
                    let f: Vec<&str> = rest.split_whitespace().collect();
                    if f.len() != 5 {
                        return Err(perr(line));
                    }
                    let idem = |s: &str| p.idempotents.iter().position(|e| e == s).ok_or_else(|| perr(line));
                    let (left, right) = (idem(f[1])?, idem(f[2])?);
                    let intr2 = f[3].parse().map_err(|_| perr(line))?;
                    let hom = f[4].parse().map_err(|_| perr(line))?;
                    p.gens.push(Gen { name: f[0].to_string(), left, right, intr2, hom });
                }
                "rel" => {
                    let poly = p.parse_poly(rest)?;
                    p.relations.push(poly);
                }
                "d" => {
                    let (g, body) = rest.split_once("->").ok_or_else(|| perr(line))?;
                    let gi = p.gen_index(g.trim()).ok_or_else(|| perr(line))?;
                    diff.push((gi, p.parse_poly(body)?));
                }
                _ => return Err(perr(line)),
            }
        }
        if !diff.is_empty() {
            let mut d = vec![Vec::new(); p.gens.len()];
            for (g, poly) in diff {
                d[g] = poly;
            }
            p.differential = Some(d);
        }
        Ok(p)
    }

    fn parse_poly(&self, s: &str) -> Result<Poly, LinQuadError> {
        let mut out = Vec::new();
        for term in s.split(';').map(str::trim).filter(|t| !t.is_empty()) {
            let (c, w) = term.split_once(' ').ok_or_else(|| LinQuadError::Parse(term.to_string()))?;
            let c: i64 = c.parse().map_err(|_| LinQuadError::Parse(term.to_string()))?;
            let w: Option<Word> = w.trim().split('.').map(|n| self.gen_index(n)).collect();
            out.push((c, w.ok_or_else(|| LinQuadError::Parse(term.to_string()))?));
        }
        Ok(out)
    }
}

/// Basis element id in a normal form basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bid {
    pub weight: u32,
    pub start: u32,
    pub idx: u32,
}

/// Algebra element in normal form coordinates.
pub type Elem = BTreeMap<Bid, i64>;

pub fn elem_add(e: &mut Elem, b: Bid, c: i64) {
    if c == 0 {
        return;
    }
    let v = e.entry(b).or_insert(0);
    *v = v.checked_add(c).expect("coefficient overflow");
    if *v == 0 {
        e.remove(&b);
    }
}

pub fn elem_axpy(e: &mut Elem, k: i64, x: &Elem) {
    for (&b, &c) in x {
        elem_add(e, b, k.checked_mul(c).expect("coefficient overflow"));
    }
}

#[derive(Clone, Debug, Default)]
struct Piece {
    basis: Vec<Word>,
    ends: Vec<usize>,
    /// (lower basis idx, generator) -> column
    fmap: HashMap<(usize, usize), usize>,
    /// per column: reduction to basis indices
    reduce: Vec<Vec<(usize, i64)>>,
}

#[derive(Clone, Debug)]
pub struct BuildOptions {
    pub max_weight: u32,
    /// Generator preference for normal forms: words with smaller keys are kept.
    pub gen_rank: Option<Vec<usize>>,
    /// Allow stopping at `max_weight` without proving the higher pieces vanish.
    pub allow_truncation: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { max_weight: 64, gen_rank: None, allow_truncation: false }
    }
}

/// Quotient T(V)/J with a Z-basis of normal-form words per (start idempotent, weight).
#[derive(Clone, Debug)]
pub struct NormalForms {
    pub pres: Presentation,
    weights: Vec<u32>,
    pieces: Vec<Vec<Piece>>,
    /// True when all pieces above the computed range are known to vanish.
    pub complete: bool,
}

struct Eliminator {
    ncols: usize,
    rows: Vec<Vec<i64>>,
    pivot_col: Vec<usize>,
    row_of_col: Vec<Option<usize>>,
    pending: Vec<Vec<i64>>,
}

impl Eliminator {
    fn new(ncols: usize) -> Self {
        Eliminator { ncols, rows: Vec::new(), pivot_col: Vec::new(), row_of_col: vec![None; ncols], pending: Vec::new() }
    }

    fn reduce(&self, row: &mut [i64]) -> Result<(), LinQuadError> {
        for (r, &c) in self.pivot_col.iter().enumerate() {
            let e = row[c];
            if e != 0 {
                let p = &self.rows[r];
                for j in 0..self.ncols {
                    if p[j] != 0 {
                        row[j] = row[j].checked_sub(e.checked_mul(p[j]).ok_or(LinQuadError::Overflow)?).ok_or(LinQuadError::Overflow)?;
                    }
                }
            }
        }
        Ok(())
    }

    fn add_pivot(&mut self, mut row: Vec<i64>, c: usize) -> Result<(), LinQuadError> {
        if row[c] == -1 {
            row.iter_mut().for_each(|x| *x = -*x);
        }
        for r in 0..self.rows.len() {
            let e = self.rows[r][c];
            if e != 0 {
                for j in 0..self.ncols {
                    if row[j] != 0 {
                        let v = self.rows[r][j].checked_sub(e.checked_mul(row[j]).ok_or(LinQuadError::Overflow)?);
                        self.rows[r][j] = v.ok_or(LinQuadError::Overflow)?;
                    }
                }
            }
        }
        self.row_of_col[c] = Some(self.rows.len());
        self.rows.push(row);
        self.pivot_col.push(c);
        Ok(())
    }

    /// Insert a row; pivots on the last unit entry.
    fn insert(&mut self, mut row: Vec<i64>) -> Result<bool, LinQuadError> {
        self.reduce(&mut row)?;
        match (0..self.ncols).rev().find(|&j| row[j].abs() == 1) {
            Some(c) => {
                self.add_pivot(row, c)?;
                Ok(true)
            }
            None => {
                if row.iter().any(|&x| x != 0) {
                    self.pending.push(row);
                }
                Ok(false)
            }
        }
    }

    /// Process pending rows; combine by gcd when no unit entry appears directly.
    fn finish(&mut self) -> Result<bool, LinQuadError> {
        loop {
            let pending = std::mem::take(&mut self.pending);
            let mut progress = false;
            for row in pending {
                progress |= self.insert(row)?;
            }
            if self.pending.is_empty() {
                return Ok(true);
            }
            if progress {
                continue;
            }
            // gcd combination on some column
            let mut found = false;
            for c in (0..self.ncols).rev() {
                let idx: Vec<usize> = (0..self.pending.len()).filter(|&i| self.pending[i][c] != 0).collect();
                if idx.len() < 2 {
                    continue;
                }
                let mut acc = self.pending[idx[0]].clone();
                for &i in &idx[1..] {
                    let other = &self.pending[i];
                    let eg = BigInt::from(acc[c]).extended_gcd(&BigInt::from(other[c]));
                    let (s, t) = (to_i64(&eg.x), to_i64(&eg.y));
                    acc = (0..self.ncols)
                        .map(|j| s * acc[j] + t * other[j])
                        .collect();
                    if acc[c].abs() == 1 {
                        break;
                    }
                }
                if acc[c].abs() == 1 {
                    self.pending.push(acc);
                    found = true;
                    break;
                }
            }
            if !found {
                return Ok(false);
            }
        }
    }
}

impl NormalForms {
    pub fn build(pres: Presentation, opts: &BuildOptions) -> Result<Self, LinQuadError> {
        pres.check()?;
        let raw: Vec<u32> = pres
            .gens
            .iter()
            .map(|g| if g.intr2 == 0 { Err(LinQuadError::ZeroWeight(g.name.clone())) } else { Ok(g.intr2.unsigned_abs()) })
            .collect::<Result<_, _>>()?;
        let gcd = raw.iter().fold(0u32, |a, &b| a.gcd(&b)).max(1);
        let weights: Vec<u32> = raw.iter().map(|w| w / gcd).collect();
        let maxw = weights.iter().copied().max().unwrap_or(1);
        let rank: Vec<usize> = opts.gen_rank.clone().unwrap_or_else(|| (0..pres.gens.len()).collect());
        let nidem = pres.idempotents.len();
        let rel_weight: Vec<u32> =
            pres.relations.iter().map(|r| r.first().map_or(0, |(_, w)| w.iter().map(|&g| weights[g]).sum())).collect();
        let mut nf = NormalForms { pres, weights, pieces: Vec::new(), complete: false };
        let mut zero_run = 0u32;
        for d in 0..=opts.max_weight {
            let mut layer = Vec::with_capacity(nidem);
            for s in 0..nidem {
                layer.push(if d == 0 {
                    Piece { basis: vec![vec![]], ends: vec![s], ..Default::default() }
                } else {
                    nf.build_piece(d, s, &rank, &rel_weight)?
                });
            }
            let empty = layer.iter().all(|p| p.basis.is_empty());
            nf.pieces.push(layer);
            if d > 0 && empty {
                zero_run += 1;
                if zero_run >= maxw {
                    nf.complete = true;
                    return Ok(nf);
                }
            } else {
                zero_run = 0;
            }
        }
        if opts.allow_truncation {
            Ok(nf)
        } else {
            Err(LinQuadError::ResourceLimit(opts.max_weight))
        }
    }

    fn build_piece(&self, d: u32, s: usize, rank: &[usize], rel_weight: &[u32]) -> Result<Piece, LinQuadError> {
        let gens = &self.pres.gens;
        // columns
        let mut cols: Vec<(usize, usize, Word)> = Vec::new();
        for (g, gen) in gens.iter().enumerate() {
            let w = self.weights[g];
            if w > d {
                continue;
            }
            let lower = &self.pieces[(d - w) as usize][s];
            for (qi, q) in lower.basis.iter().enumerate() {
                if lower.ends[qi] == gen.left {
                    let mut word = q.clone();
                    word.push(g);
                    cols.push((qi, g, word));
                }
            }
        }
        cols.sort_by(|a, b| {
            let ka: Vec<usize> = a.2.iter().map(|&g| rank[g]).collect();
            let kb: Vec<usize> = b.2.iter().map(|&g| rank[g]).collect();
            ka.cmp(&kb).then_with(|| a.2.cmp(&b.2))
        });
        let ncols = cols.len();
        let fmap: HashMap<(usize, usize), usize> = cols.iter().enumerate().map(|(c, x)| ((x.0, x.1), c)).collect();
        let mut elim = Eliminator::new(ncols);
        for (ri, rel) in self.pres.relations.iter().enumerate() {
            let wr = rel_weight[ri];
            if rel.is_empty() || wr > d {
                continue;
            }
            let l = self.pres.word_left(&rel[0].1);
            let lower = &self.pieces[(d - wr) as usize][s];
            for qi in 0..lower.basis.len() {
                if lower.ends[qi] != l {
                    continue;
                }
                let mut row = vec![0i64; ncols];
                for (coef, word) in rel {
                    let mut v: Elem = Elem::new();
                    v.insert(Bid { weight: d - wr, start: s as u32, idx: qi as u32 }, 1);
                    for &g in &word[..word.len() - 1] {
                        v = self.mul_gen_elem(&v, g);
                    }
                    let last = *word.last().unwrap();
                    for (b, c) in v {
                        if self.end(b) == gens[last].left {
                            let col = fmap[&(b.idx as usize, last)];
                            row[col] = row[col]
                                .checked_add(coef.checked_mul(c).ok_or(LinQuadError::Overflow)?)
                                .ok_or(LinQuadError::Overflow)?;
                        }
                    }
                }
                if row.iter().any(|&x| x != 0) {
                    elim.insert(row)?;
                }
            }
        }
        if !elim.finish()? {
            return Err(LinQuadError::Torsion { start: s, weight: d });
        }
        let mut basis_of_col = vec![usize::MAX; ncols];
        let mut basis = Vec::new();
        let mut ends = Vec::new();
        for c in 0..ncols {
            if elim.row_of_col[c].is_none() {
                basis_of_col[c] = basis.len();
                ends.push(gens[cols[c].1].right);
                basis.push(cols[c].2.clone());
            }
        }
        let reduce: Vec<Vec<(usize, i64)>> = (0..ncols)
            .map(|c| match elim.row_of_col[c] {
                None => vec![(basis_of_col[c], 1)],
                Some(r) => {
                    let row = &elim.rows[r];
                    (0..ncols).filter(|&j| j != c && row[j] != 0).map(|j| (basis_of_col[j], -row[j])).collect()
                }
            })
            .collect();
        Ok(Piece { basis, ends, fmap, reduce })
    }

    pub fn num_idempotents(&self) -> usize {
        self.pres.idempotents.len()
    }

    pub fn max_weight(&self) -> u32 {
        self.pieces.len() as u32 - 1
    }

    pub fn gen_weight(&self, g: usize) -> u32 {
        self.weights[g]
    }

    fn piece(&self, b: Bid) -> &Piece {
        &self.pieces[b.weight as usize][b.start as usize]
    }

    pub fn word(&self, b: Bid) -> &Word {
        &self.piece(b).basis[b.idx as usize]
    }

    pub fn end(&self, b: Bid) -> usize {
        self.piece(b).ends[b.idx as usize]
    }

    pub fn bideg(&self, b: Bid) -> (i32, i32) {
        self.pres.word_bideg(self.word(b))
    }

    pub fn hom(&self, b: Bid) -> i32 {
        self.pres.word_hom(self.word(b))
    }

    pub fn idem(&self, s: usize) -> Bid {
        Bid { weight: 0, start: s as u32, idx: 0 }
    }

    pub fn idem_elem(&self, s: usize) -> Elem {
        Elem::from([(self.idem(s), 1)])
    }

    /// All basis elements, ordered by (weight, start, index).
    pub fn basis(&self) -> Vec<Bid> {
        let mut out = Vec::new();
        for (w, layer) in self.pieces.iter().enumerate() {
            for (s, p) in layer.iter().enumerate() {
                for i in 0..p.basis.len() {
                    out.push(Bid { weight: w as u32, start: s as u32, idx: i as u32 });
                }
            }
        }
        out
    }

    pub fn rank(&self) -> usize {
        self.pieces.iter().flatten().map(|p| p.basis.len()).sum()
    }

    /// Ranks keyed by (start, end, intr2, hom).
    pub fn ranks(&self) -> BTreeMap<(usize, usize, i32, i32), usize> {
        let mut m = BTreeMap::new();
        for b in self.basis() {
            let (i, h) = self.bideg(b);
            *m.entry((b.start as usize, self.end(b), i, h)).or_insert(0) += 1;
        }
        m
    }

    /// b * g in normal form.
    pub fn mul_gen(&self, b: Bid, g: usize) -> Vec<(Bid, i64)> {
        if self.end(b) != self.pres.gens[g].left {
            return vec![];
        }
        let w = b.weight + self.weights[g];
        if w as usize >= self.pieces.len() {
            assert!(self.complete, "product beyond the computed range of a truncated algebra");
            return vec![];
        }
        let p = &self.pieces[w as usize][b.start as usize];
        let col = p.fmap[&(b.idx as usize, g)];
        p.reduce[col].iter().map(|&(i, c)| (Bid { weight: w, start: b.start, idx: i as u32 }, c)).collect()
    }

    pub fn mul_gen_elem(&self, x: &Elem, g: usize) -> Elem {
        let mut out = Elem::new();
        for (&b, &c) in x {
            for (b2, c2) in self.mul_gen(b, g) {
                elem_add(&mut out, b2, c.checked_mul(c2).expect("coefficient overflow"));
            }
        }
        out
    }

    pub fn reduce_word(&self, start: usize, word: &[usize]) -> Elem {
        let mut v = self.idem_elem(start);
        for &g in word {
            v = self.mul_gen_elem(&v, g);
            if v.is_empty() {
                break;
            }
        }
        v
    }

    /// Reduce a combination of nonempty words.
    pub fn reduce_poly(&self, p: &Poly) -> Elem {
        let mut out = Elem::new();
        for (c, w) in p {
            let e = self.reduce_word(self.pres.word_left(w), w);
            elem_axpy(&mut out, *c, &e);
        }
        out
    }

    pub fn mul(&self, x: &Elem, y: &Elem) -> Elem {
        let mut out = Elem::new();
        for (&by, &cy) in y {
            let word = self.word(by).clone();
            let mut left = Elem::new();
            for (&bx, &cx) in x {
                if self.end(bx) == by.start as usize {
                    elem_add(&mut left, bx, cx);
                }
            }
            for &g in &word {
                left = self.mul_gen_elem(&left, g);
            }
            elem_axpy(&mut out, cy, &left);
        }
        out
    }

    /// Differential of a word by the Leibniz rule mu1(xy) = (-1)^{|y|} mu1(x) y + x mu1(y).
    pub fn mu1_word(&self, start: usize, word: &[usize]) -> Elem {
        let Some(d) = &self.pres.differential else { return Elem::new() };
        let mut out = Elem::new();
        for i in 0..word.len() {
            let dg = &d[word[i]];
            if dg.is_empty() {
                continue;
            }
            let sign = if self.pres.word_hom(&word[i + 1..]).rem_euclid(2) == 0 { 1 } else { -1 };
            let prefix = self.reduce_word(start, &word[..i]);
            for (c, w) in dg {
                let mut v = prefix.clone();
                for &g in w.iter().chain(&word[i + 1..]) {
                    v = self.mul_gen_elem(&v, g);
                }
                elem_axpy(&mut out, sign * c, &v);
            }
        }
        out
    }

    pub fn mu1(&self, x: &Elem) -> Elem {
        let mut out = Elem::new();
        for (&b, &c) in x {
            let w = self.word(b).clone();
            elem_axpy(&mut out, c, &self.mu1_word(b.start as usize, &w));
        }
        out
    }

    /// mu1 squares to zero on every basis element and kills every relation.
    pub fn check_differential(&self) -> Result<(), String> {
        if self.pres.differential.is_none() {
            return Ok(());
        }
        for (i, r) in self.pres.relations.iter().enumerate() {
            let mut acc = Elem::new();
            for (c, w) in r {
                elem_axpy(&mut acc, *c, &self.mu1_word(self.pres.word_left(w), w));
            }
            if !acc.is_empty() {
                return Err(format!("mu1 does not descend: relation {} ({})", i, self.pres.format_poly(r)));
            }
        }
        for b in self.basis() {
            let d1 = self.mu1(&Elem::from([(b, 1)]));
            if !self.mu1(&d1).is_empty() {
                return Err(format!("mu1^2 != 0 on {}", self.pres.format_word(self.word(b))));
            }
        }
        Ok(())
    }

    pub fn format_elem(&self, e: &Elem) -> String {
        if e.is_empty() {
            return "0".into();
        }
        e.iter()
            .map(|(&b, &c)| {
                let w = self.word(b);
                let name = if w.is_empty() { format!("e[{}]", self.pres.idempotents[b.start as usize]) } else { self.pres.format_word(w) };
                format!("{:+} {}", c, name)
            })
            .join(" ")
    }
}

/// A target algebra realizing the generators, used to certify a presentation.
pub trait Realization {
    /// (start, end, intr2, hom) of each target basis element.
    fn basis_keys(&self) -> Vec<(usize, usize, i32, i32)>;
    /// Image of a composable word starting at `start`, in target basis coordinates.
    fn eval(&self, start: usize, word: &[usize]) -> Vec<(usize, i64)>;
}

#[derive(Clone, Debug, Default)]
pub struct VerifyReport {
    pub failing_relations: Vec<usize>,
    pub rank_mismatches: Vec<((usize, usize, i32, i32), usize, usize)>,
    pub non_unimodular: Vec<(usize, usize, i32, i32)>,
    pub pieces_checked: usize,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failing_relations.is_empty() && self.rank_mismatches.is_empty() && self.non_unimodular.is_empty()
    }
}

/// Checks relations vanish in the target, ranks agree per piece, and the induced map is unimodular.
pub fn verify_presentation(nf: &NormalForms, target: &dyn Realization) -> VerifyReport {
    let mut rep = VerifyReport::default();
    for (i, r) in nf.pres.relations.iter().enumerate() {
        let mut acc: BTreeMap<usize, i64> = BTreeMap::new();
        for (c, w) in r {
            for (t, v) in target.eval(nf.pres.word_left(w), w) {
                *acc.entry(t).or_insert(0) += c * v;
            }
        }
        if acc.values().any(|&v| v != 0) {
            rep.failing_relations.push(i);
        }
    }
    let keys = target.basis_keys();
    let mut target_groups: BTreeMap<(usize, usize, i32, i32), Vec<usize>> = BTreeMap::new();
    for (i, k) in keys.iter().enumerate() {
        target_groups.entry(*k).or_default().push(i);
    }
    let mut ours: BTreeMap<(usize, usize, i32, i32), Vec<Bid>> = BTreeMap::new();
    for b in nf.basis() {
        let (i, h) = nf.bideg(b);
        ours.entry((b.start as usize, nf.end(b), i, h)).or_default().push(b);
    }
    let all_keys: Vec<_> = target_groups.keys().chain(ours.keys()).copied().sorted().dedup().collect();
    for k in all_keys {
        rep.pieces_checked += 1;
        let t = target_groups.get(&k).map_or(&[][..], |v| v.as_slice());
        let o = ours.get(&k).map_or(&[][..], |v| v.as_slice());
        if t.len() != o.len() {
            rep.rank_mismatches.push((k, o.len(), t.len()));
            continue;
        }
        let pos: HashMap<usize, usize> = t.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        let mut m = ZMatrix::zeros(o.len(), t.len());
        for (r, &b) in o.iter().enumerate() {
            for (x, v) in target.eval(b.start as usize, nf.word(b)) {
                match pos.get(&x) {
                    Some(&c) => m.add_at(r, c, v),
                    None => {
                        if v != 0 {
                            rep.non_unimodular.push(k);
                        }
                    }
                }
            }
        }
        if !crate::zlinalg::is_unimodular(&m) {
            rep.non_unimodular.push(k);
        }
    }
    rep.non_unimodular.dedup();
    rep
}

/// Quadratic parts of the relations and the linear map phi.
#[derive(Clone, Debug)]
pub struct QuadraticPart {
    /// Quadratic projections of the relations (one per relation).
    pub quad: Vec<Poly>,
    /// Linear part of each relation, as it appears there.
    pub phi: Vec<Poly>,
}

type QKey = (usize, usize, i32, i32);

pub fn quadratic_part(p: &Presentation) -> Result<QuadraticPart, LinQuadError> {
    let mut quad = Vec::new();
    let mut phi = Vec::new();
    for (i, r) in p.relations.iter().enumerate() {
        if r.iter().any(|(_, w)| w.is_empty() || w.len() > 2) {
            return Err(LinQuadError::NotLinearQuadratic(i));
        }
        let q: Poly = r.iter().filter(|(_, w)| w.len() == 2).cloned().collect();
        let l: Poly = r.iter().filter(|(_, w)| w.len() == 1).cloned().collect();
        if q.is_empty() {
            return Err(LinQuadError::PurelyLinear(i));
        }
        quad.push(q);
        phi.push(l);
    }
    let qp = QuadraticPart { quad, phi };
    check_phi(p, &qp)?;
    Ok(qp)
}

fn quad_key(p: &Presentation, w: &[usize]) -> QKey {
    let (i, h) = p.word_bideg(w);
    (p.word_left(w), p.word_right(w), i, h)
}

/// Quadratic monomials grouped by (left, right, bidegree).
fn quadratic_monomials(p: &Presentation) -> BTreeMap<QKey, Vec<Word>> {
    let mut m: BTreeMap<QKey, Vec<Word>> = BTreeMap::new();
    for (a, ga) in p.gens.iter().enumerate() {
        for (b, gb) in p.gens.iter().enumerate() {
            if ga.right == gb.left {
                let w = vec![a, b];
                m.entry(quad_key(p, &w)).or_default().push(w);
            }
        }
    }
    m
}

fn quad_matrix(q: &QuadraticPart, rows: &[usize], monos: &[Word]) -> ZMatrix {
    let pos: HashMap<&Word, usize> = monos.iter().enumerate().map(|(i, w)| (w, i)).collect();
    let mut m = ZMatrix::zeros(rows.len(), monos.len());
    for (r, &k) in rows.iter().enumerate() {
        for (c, w) in &q.quad[k] {
            m.add_at(r, pos[w], *c);
        }
    }
    m
}

fn rows_by_key(p: &Presentation, q: &QuadraticPart) -> BTreeMap<QKey, Vec<usize>> {
    let mut m: BTreeMap<QKey, Vec<usize>> = BTreeMap::new();
    for (k, poly) in q.quad.iter().enumerate() {
        m.entry(quad_key(p, &poly[0].1)).or_default().push(k);
    }
    m
}

/// phi is well defined: every integer dependency among quadratic parts kills the linear parts.
fn check_phi(p: &Presentation, q: &QuadraticPart) -> Result<(), LinQuadError> {
    let monos = quadratic_monomials(p);
    for (key, rows) in rows_by_key(p, q) {
        let m = quad_matrix(q, &rows, &monos[&key]);
        // dependencies: kernel of the transpose
        let mut t = ZMatrix::zeros(m.cols, m.rows);
        for i in 0..m.rows {
            for j in 0..m.cols {
                t.set(j, i, m.get(i, j).clone());
            }
        }
        for dep in kernel_basis(&t) {
            let mut acc: BTreeMap<usize, BigInt> = BTreeMap::new();
            for (r, coef) in rows.iter().zip(&dep) {
                for (c, w) in &q.phi[*r] {
                    *acc.entry(w[0]).or_insert_with(BigInt::zero) += coef * BigInt::from(*c);
                }
            }
            if acc.values().any(|v| !v.is_zero()) {
                return Err(LinQuadError::PhiNotWellDefined(format!("{:?}", key)));
            }
        }
    }
    Ok(())
}

/// Annihilator I^perp per quadratic piece, as integer combinations of quadratic monomials.
pub fn annihilator(p: &Presentation, q: &QuadraticPart) -> Vec<Poly> {
    let monos = quadratic_monomials(p);
    let rows = rows_by_key(p, q);
    let mut out = Vec::new();
    for (key, ms) in &monos {
        let rs = rows.get(key).cloned().unwrap_or_default();
        if rs.is_empty() {
            out.extend(ms.iter().map(|w| vec![(1, w.clone())]));
            continue;
        }
        let m = quad_matrix(q, &rs, ms);
        for v in kernel_basis(&m) {
            let poly: Poly =
                ms.iter().zip(&v).filter(|(_, c)| !c.is_zero()).map(|(w, c)| (to_i64(c), w.clone())).collect();
            out.push(normalize_sign(poly));
        }
    }
    out
}

fn normalize_sign(mut p: Poly) -> Poly {
    p.sort_by(|a, b| a.1.cmp(&b.1));
    if p.first().map_or(false, |t| t.0 < 0) {
        p.iter_mut().for_each(|t| t.0 = -t.0);
    }
    p
}

/// Dual differential: mu1(v*) solves <y, r_k> = v*(phi(r_k)) for every quadratic part r_k.
pub fn dual_differential(p: &Presentation, q: &QuadraticPart) -> Result<Vec<Poly>, LinQuadError> {
    let monos = quadratic_monomials(p);
    let rows = rows_by_key(p, q);
    let mut out = vec![Vec::new(); p.gens.len()];
    for (key, rs) in &rows {
        let ms = &monos[key];
        let m = quad_matrix(q, rs, ms);
        let mut involved: Vec<usize> = rs.iter().flat_map(|&r| q.phi[r].iter().map(|(_, w)| w[0])).collect();
        involved.sort_unstable();
        involved.dedup();
        for v in involved {
            let b: Vec<BigInt> = rs
                .iter()
                .map(|&r| BigInt::from(q.phi[r].iter().filter(|(_, w)| w[0] == v).map(|t| t.0).sum::<i64>()))
                .collect();
            let y = solve(&m, &b).ok_or_else(|| LinQuadError::DualDifferential(p.gens[v].name.clone()))?;
            out[v] = ms.iter().zip(&y).filter(|(_, c)| !c.is_zero()).map(|(w, c)| (to_i64(c), w.clone())).collect();
        }
    }
    Ok(out)
}

/// Quadratic dual presentation: dual generators with bidegree (-intr, hom + 1), relations I^perp,
/// differential from phi.
pub fn quadratic_dual(p: &Presentation) -> Result<Presentation, LinQuadError> {
    let q = quadratic_part(p)?;
    let gens = p
        .gens
        .iter()
        .map(|g| Gen { name: format!("{}*", g.name), left: g.left, right: g.right, intr2: -g.intr2, hom: g.hom + 1 })
        .collect();
    let relations = annihilator(p, &q);
    let d = dual_differential(p, &q)?;
    let differential = if d.iter().all(|x| x.is_empty()) { None } else { Some(d) };
    Ok(Presentation { idempotents: p.idempotents.clone(), gens, relations, differential })
}

/// Pairing check: every annihilator element is orthogonal to every quadratic part.
pub fn pairing_vanishes(q: &QuadraticPart, perp: &[Poly]) -> bool {
    perp.iter().all(|s| {
        q.quad.iter().all(|r| {
            let sum: i64 = s.iter().map(|(a, w)| r.iter().filter(|(_, v)| v == w).map(|(b, _)| a * b).sum::<i64>()).sum();
            sum == 0
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h1() -> Presentation {
        Presentation {
            idempotents: vec!["a".into()],
            gens: vec![Gen { name: "x".into(), left: 0, right: 0, intr2: 4, hom: 0 }],
            relations: vec![vec![(1, vec![0, 0])]],
            differential: None,
        }
    }

    #[test]
    fn dual_numbers() {
        let nf = NormalForms::build(h1(), &BuildOptions::default()).unwrap();
        assert_eq!(nf.rank(), 2);
        let r: Vec<usize> = nf.ranks().values().copied().collect();
        assert_eq!(r, vec![1, 1]);
    }

    #[test]
    fn dual_of_h1_is_free() {
        let d = quadratic_dual(&h1()).unwrap();
        assert!(d.relations.is_empty());
        assert!(d.differential.is_none());
        let opts = BuildOptions { max_weight: 5, allow_truncation: true, ..Default::default() };
        let nf = NormalForms::build(d, &opts).unwrap();
        assert_eq!(nf.rank(), 6);
        assert!(!nf.complete);
    }

    #[test]
    fn text_roundtrip() {
        let p = h1();
        let q = Presentation::from_text(&p.to_text()).unwrap();
        assert_eq!(q.gens, p.gens);
        assert_eq!(q.relations, p.relations);
    }

    #[test]
    fn free_algebra_on_path() {
        // a --x--> b, no relations: basis e_a, e_b, x
        let p = Presentation {
            idempotents: vec!["a".into(), "b".into()],
            gens: vec![Gen { name: "x".into(), left: 0, right: 1, intr2: 1, hom: 0 }],
            relations: vec![],
            differential: None,
        };
        let nf = NormalForms::build(p, &BuildOptions::default()).unwrap();
        assert_eq!(nf.rank(), 3);
    }

    #[test]
    fn torsion_detected() {
        let p = Presentation {
            idempotents: vec!["a".into()],
            gens: vec![Gen { name: "x".into(), left: 0, right: 0, intr2: 1, hom: 0 }],
            relations: vec![vec![(2, vec![0])]],
            differential: None,
        };
        assert!(matches!(NormalForms::build(p, &BuildOptions::default()), Err(LinQuadError::Torsion { .. })));
    }
}
