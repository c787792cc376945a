//! Khovanov's arc algebra H^n with its TQFT multiplication.

use crate::linquad::{Gen, Poly, Presentation, Realization};
use crate::planar::{bridges, dual_bridge, enumerate_matchings, Matching, PlanarError};
use itertools::Itertools;
use std::collections::{BTreeMap, HashMap};

pub const MAX_N: usize = 5;

/// Basis element (W(a)b, sigma); bit k of `minus` marks circle k (ordered by smallest point) as minus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Diag {
    pub a: usize,
    pub b: usize,
    pub minus: u32,
}

/// Element of H^n: basis index to coefficient, no zero entries.
pub type ArcElement = BTreeMap<usize, i64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GenKind {
    /// Surgery along a bridge with the given endpoints.
    Gamma(usize, usize),
    /// Minus on the circle through the arc with the given endpoints.
    Alpha(usize, usize),
}

/// Multiplicative generator h_gamma or h_alpha.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HGen {
    pub left: usize,
    pub right: usize,
    pub kind: GenKind,
    pub elem: usize,
}

impl HGen {
    pub fn degree(&self) -> i32 {
        match self.kind {
            GenKind::Gamma(..) => 1,
            GenKind::Alpha(..) => 2,
        }
    }

    pub fn name(&self) -> String {
        match self.kind {
            GenKind::Gamma(p, q) => format!("hG{}_{}_{}", self.left, p, q),
            GenKind::Alpha(p, q) => format!("hA{}_{}_{}", self.left, p, q),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ArcError {
    #[error(transparent)]
    Planar(#[from] PlanarError),
    #[error("n = {0} exceeds the supported bound {1}")]
    TooLarge(usize, usize),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("coefficient overflow")]
    Overflow,
}

/// H^n with basis, generators and cached generator products.
pub struct ArcAlgebra {
    pub n: usize,
    pub matchings: Vec<Matching>,
    index: HashMap<Matching, usize>,
    circles: Vec<Vec<Vec<Vec<usize>>>>,
    circle_of: Vec<Vec<Vec<usize>>>,
    offsets: Vec<Vec<usize>>,
    pub basis: Vec<Diag>,
    pub gens: Vec<HGen>,
    /// `gen_left[g][h]`: product gens[g] * basis[h].
    gen_left: Vec<HashMap<usize, Vec<(usize, i64)>>>,
    /// `gen_right[g][h]`: product basis[h] * gens[g].
    gen_right: Vec<HashMap<usize, Vec<(usize, i64)>>>,
}

fn circles_of(a: &Matching, b: &Matching) -> Vec<Vec<usize>> {
    let two_n = 2 * a.n();
    let mut seen = vec![false; two_n + 1];
    let mut out = Vec::new();
    for start in 1..=two_n {
        if seen[start] {
            continue;
        }
        let mut circ = Vec::new();
        let mut p = start;
        loop {
            seen[p] = true;
            circ.push(p);
            let next = a.partner(p);
            seen[next] = true;
            circ.push(next);
            p = b.partner(next);
            if p == start {
                break;
            }
        }
        circ.sort_unstable();
        circ.dedup();
        out.push(circ);
    }
    out
}

impl ArcAlgebra {
    pub fn new(n: usize) -> Result<Self, ArcError> {
        if n > MAX_N {
            return Err(ArcError::TooLarge(n, MAX_N));
        }
        let matchings = enumerate_matchings(n)?;
        let index: HashMap<Matching, usize> = matchings.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        let k = matchings.len();
        let mut circles = vec![vec![Vec::new(); k]; k];
        let mut circle_of = vec![vec![Vec::new(); k]; k];
        let mut offsets = vec![vec![0; k]; k];
        let mut basis = Vec::new();
        for a in 0..k {
            for b in 0..k {
                let cs = circles_of(&matchings[a], &matchings[b]);
                let mut co = vec![usize::MAX; 2 * n + 1];
                for (ci, c) in cs.iter().enumerate() {
                    for &p in c {
                        co[p] = ci;
                    }
                }
                offsets[a][b] = basis.len();
                for minus in 0..(1u32 << cs.len()) {
                    basis.push(Diag { a, b, minus });
                }
                circles[a][b] = cs;
                circle_of[a][b] = co;
            }
        }
        let mut alg = ArcAlgebra {
            n,
            matchings,
            index,
            circles,
            circle_of,
            offsets,
            basis,
            gens: Vec::new(),
            gen_left: Vec::new(),
            gen_right: Vec::new(),
        };
        let mut gens = Vec::new();
        for a in 0..k {
            let ma = alg.matchings[a].clone();
            for g in bridges(&ma) {
                let b = alg.index[&crate::planar::surger(&ma, g)?];
                gens.push(HGen { left: a, right: b, kind: GenKind::Gamma(g.0, g.1), elem: alg.offsets[a][b] });
            }
            for &(p, q) in ma.arcs() {
                let c = alg.circle_of[a][a][p];
                gens.push(HGen { left: a, right: a, kind: GenKind::Alpha(p, q), elem: alg.offsets[a][a] + (1 << c) });
            }
        }
        gens.sort_by_key(|g| (g.left, g.right, g.kind));
        let mut gen_left = Vec::new();
        let mut gen_right = Vec::new();
        for g in &gens {
            let mut l = HashMap::new();
            let mut r = HashMap::new();
            for (h, d) in alg.basis.iter().enumerate() {
                if d.a == g.right {
                    l.insert(h, alg.multiply(g.elem, h)?);
                }
                if d.b == g.left {
                    r.insert(h, alg.multiply(h, g.elem)?);
                }
            }
            gen_left.push(l);
            gen_right.push(r);
        }
        alg.gens = gens;
        alg.gen_left = gen_left;
        alg.gen_right = gen_right;
        Ok(alg)
    }

    pub fn num_idempotents(&self) -> usize {
        self.matchings.len()
    }

    pub fn matching_index(&self, m: &Matching) -> Option<usize> {
        self.index.get(m).copied()
    }

    /// Circles of W(a)b as sorted point lists, ordered by smallest point.
    pub fn circles(&self, a: usize, b: usize) -> &[Vec<usize>] {
        &self.circles[a][b]
    }

    /// Index of the circle of W(a)b through point p.
    pub fn circle_of(&self, a: usize, b: usize, p: usize) -> usize {
        self.circle_of[a][b][p]
    }

    pub fn index_of(&self, d: Diag) -> usize {
        self.offsets[d.a][d.b] + d.minus as usize
    }

    pub fn idempotent(&self, a: usize) -> usize {
        self.offsets[a][a]
    }

    pub fn rank_piece(&self, a: usize, b: usize) -> usize {
        1 << self.circles[a][b].len()
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn degree(&self, h: usize) -> i32 {
        let d = self.basis[h];
        let c = self.circles[d.a][d.b].len() as i32;
        let m = d.minus.count_ones() as i32;
        self.n as i32 - (c - m) + m
    }

    pub fn multiply(&self, x: usize, y: usize) -> Result<Vec<(usize, i64)>, ArcError> {
        let order: Vec<usize> = (0..self.n).collect();
        self.multiply_with_order(x, y, &order)
    }

    /// Product of basis elements, performing surgeries on the middle arcs in the given order.
    pub fn multiply_with_order(&self, x: usize, y: usize, order: &[usize]) -> Result<Vec<(usize, i64)>, ArcError> {
        let (dx, dy) = (self.basis[x], self.basis[y]);
        if dx.b != dy.a {
            return Ok(vec![]);
        }
        let n = self.n;
        let two_n = 2 * n;
        let (a, b, d) = (dx.a, dx.b, dy.b);
        let (ma, mb, md) = (&self.matchings[a], &self.matchings[b], &self.matchings[d]);
        let v0 = |p: usize| p - 1;
        let v1 = |p: usize| two_n + p - 1;
        // edges: (u, v, alive)
        let mut edges: Vec<(usize, usize)> = Vec::new();
        let mut b0_edge = vec![0; n];
        let mut b1_edge = vec![0; n];
        for &(p, q) in ma.arcs() {
            edges.push((v0(p), v0(q)));
        }
        for (i, &(p, q)) in mb.arcs().iter().enumerate() {
            b0_edge[i] = edges.len();
            edges.push((v0(p), v0(q)));
            b1_edge[i] = edges.len();
            edges.push((v1(p), v1(q)));
        }
        for &(p, q) in md.arcs() {
            edges.push((v1(p), v1(q)));
        }
        let mut alive = vec![true; edges.len()];
        let nc0 = self.circles[a][b].len();
        let mut comp: Vec<usize> = (0..2 * two_n)
            .map(|v| if v < two_n { self.circle_of[a][b][v + 1] } else { nc0 + self.circle_of[b][d][v - two_n + 1] })
            .collect();
        let ncomp0 = nc0 + self.circles[b][d].len();
        let init: Vec<bool> = (0..ncomp0)
            .map(|c| if c < nc0 { dx.minus >> c & 1 == 1 } else { dy.minus >> (c - nc0) & 1 == 1 })
            .collect();
        let mut terms: Vec<(Vec<bool>, i64)> = vec![(init, 1)];
        for &i in order {
            let (p, q) = mb.arcs()[i];
            alive[b0_edge[i]] = false;
            alive[b1_edge[i]] = false;
            edges.push((v0(p), v1(p)));
            alive.push(true);
            edges.push((v0(q), v1(q)));
            alive.push(true);
            let (new_comp, new_count) = components(2 * two_n, &edges, &alive);
            let x_old = comp[v0(p)];
            let y_old = comp[v1(p)];
            let old_count = terms[0].0.len();
            let mut rep = vec![usize::MAX; old_count];
            for v in 0..2 * two_n {
                if rep[comp[v]] == usize::MAX {
                    rep[comp[v]] = v;
                }
            }
            let mut next = Vec::new();
            if x_old != y_old {
                let merged = new_comp[v0(p)];
                for (signs, c) in &terms {
                    if signs[x_old] && signs[y_old] {
                        continue;
                    }
                    let mut s = vec![false; new_count];
                    for (o, &r) in rep.iter().enumerate() {
                        if o != x_old && o != y_old {
                            s[new_comp[r]] = signs[o];
                        }
                    }
                    s[merged] = signs[x_old] || signs[y_old];
                    next.push((s, *c));
                }
            } else {
                let (n1, n2) = (new_comp[v0(p)], new_comp[v0(q)]);
                debug_assert_ne!(n1, n2);
                for (signs, c) in &terms {
                    let mut s = vec![false; new_count];
                    for (o, &r) in rep.iter().enumerate() {
                        if o != x_old {
                            s[new_comp[r]] = signs[o];
                        }
                    }
                    if signs[x_old] {
                        s[n1] = true;
                        s[n2] = true;
                        next.push((s, *c));
                    } else {
                        let mut s2 = s.clone();
                        s[n1] = true;
                        s2[n2] = true;
                        next.push((s, *c));
                        next.push((s2, *c));
                    }
                }
            }
            comp = new_comp;
            terms = next;
            if terms.is_empty() {
                return Ok(vec![]);
            }
        }
        let mut out: BTreeMap<usize, i64> = BTreeMap::new();
        for (signs, c) in terms {
            let mut minus = 0u32;
            for p in 1..=two_n {
                if signs[comp[v0(p)]] {
                    minus |= 1 << self.circle_of[a][d][p];
                }
            }
            let idx = self.offsets[a][d] + minus as usize;
            let e = out.entry(idx).or_insert(0);
            *e = e.checked_add(c).ok_or(ArcError::Overflow)?;
        }
        Ok(out.into_iter().filter(|e| e.1 != 0).collect())
    }

    /// gens[g] * basis[h] (cached).
    pub fn gen_times(&self, g: usize, h: usize) -> &[(usize, i64)] {
        self.gen_left[g].get(&h).map_or(&[], |v| v.as_slice())
    }

    /// basis[h] * gens[g] (cached).
    pub fn times_gen(&self, h: usize, g: usize) -> &[(usize, i64)] {
        self.gen_right[g].get(&h).map_or(&[], |v| v.as_slice())
    }

    /// Structure constant c~~_{h' h; h''} for h' = gens[g].
    pub fn structure_constant(&self, g: usize, h: usize, h2: usize) -> i64 {
        self.gen_times(g, h).iter().find(|e| e.0 == h2).map_or(0, |e| e.1)
    }

    pub fn mul_elements(&self, x: &ArcElement, y: &ArcElement) -> Result<ArcElement, ArcError> {
        let mut out = ArcElement::new();
        for (&i, &ci) in x {
            for (&j, &cj) in y {
                for (k, c) in self.multiply(i, j)? {
                    let t = ci.checked_mul(cj).and_then(|v| v.checked_mul(c)).ok_or(ArcError::Overflow)?;
                    let e = out.entry(k).or_insert(0);
                    *e = e.checked_add(t).ok_or(ArcError::Overflow)?;
                }
            }
        }
        out.retain(|_, v| *v != 0);
        Ok(out)
    }

    pub fn format_diag(&self, h: usize) -> String {
        let d = self.basis[h];
        let signs = (0..self.circles[d.a][d.b].len())
            .map(|c| format!("c{}:{}", c, if d.minus >> c & 1 == 1 { '-' } else { '+' }))
            .join(",");
        format!("W({}){} signs:{{{}}}", self.matchings[d.a], self.matchings[d.b], signs)
    }

    pub fn parse_diag(&self, s: &str) -> Result<usize, ArcError> {
        let err = || ArcError::Parse(format!("bad diagram {:?}", s));
        let rest = s.trim().strip_prefix("W(").ok_or_else(err)?;
        let cut = rest.find("])").ok_or_else(err)?;
        let (left, rest) = (&rest[..cut + 1], &rest[cut + 2..]);
        let (right, signs) = rest.split_once("signs:").ok_or_else(err)?;
        let a = self.matching_index(&Matching::parse(left)?).ok_or_else(err)?;
        let b = self.matching_index(&Matching::parse(right.trim())?).ok_or_else(err)?;
        let body = signs.trim().trim_start_matches('{').trim_end_matches('}');
        let mut minus = 0u32;
        let nc = self.circles[a][b].len();
        let mut seen = 0;
        for item in body.split(',').filter(|x| !x.is_empty()) {
            let (c, sign) = item.split_once(':').ok_or_else(err)?;
            let c: usize = c.trim().trim_start_matches('c').parse().map_err(|_| err())?;
            if c >= nc {
                return Err(err());
            }
            seen += 1;
            match sign.trim() {
                "+" => {}
                "-" => minus |= 1 << c,
                _ => return Err(err()),
            }
        }
        if seen != nc {
            return Err(err());
        }
        Ok(self.offsets[a][b] + minus as usize)
    }
}

impl ArcAlgebra {
    /// Product of a word in the generators, as an element of H^n.
    pub fn eval_word(&self, start: usize, word: &[usize]) -> ArcElement {
        let mut v = ArcElement::from([(self.idempotent(start), 1)]);
        for &g in word {
            let mut next = ArcElement::new();
            for (&h, &c) in &v {
                for &(h2, c2) in self.times_gen(h, g) {
                    *next.entry(h2).or_insert(0) += c * c2;
                }
            }
            next.retain(|_, x| *x != 0);
            v = next;
        }
        v
    }

    /// Index of the generator h_gamma for gamma-surgery from `a` to `b`, if any.
    pub fn gamma_gen(&self, a: usize, b: usize) -> Option<usize> {
        self.gens.iter().position(|g| g.left == a && g.right == b && matches!(g.kind, GenKind::Gamma(..)))
    }

    /// Index of h_alpha for the arc of matching `a` through point p.
    pub fn alpha_gen(&self, a: usize, p: usize) -> usize {
        let m = &self.matchings[a];
        let arc = (p.min(m.partner(p)), p.max(m.partner(p)));
        self.gens.iter().position(|g| g.left == a && g.kind == GenKind::Alpha(arc.0, arc.1)).unwrap()
    }

    /// Generators h_gamma, h_alpha with the four relation families.
    pub fn presentation(&self) -> Presentation {
        let idempotents = self.matchings.iter().map(|m| m.to_string()).collect();
        let gens: Vec<Gen> = self
            .gens
            .iter()
            .map(|g| Gen { name: g.name(), left: g.left, right: g.right, intr2: 2 * g.degree(), hom: 0 })
            .collect();
        let is_gamma = |g: usize| matches!(self.gens[g].kind, GenKind::Gamma(..));
        let ng = self.gens.len();
        let mut relations: Vec<Poly> = Vec::new();
        let eq = |w1: &[usize], w2: &[usize]| {
            let s = self.gens[w1[0]].left;
            self.eval_word(s, w1) == self.eval_word(s, w2)
        };
        // bridge pairs
        let mut groups: BTreeMap<(usize, usize), Vec<Vec<usize>>> = BTreeMap::new();
        for g1 in (0..ng).filter(|&g| is_gamma(g)) {
            for g2 in (0..ng).filter(|&g| is_gamma(g) && self.gens[g].left == self.gens[g1].right) {
                let (a, c) = (self.gens[g1].left, self.gens[g2].right);
                if a != c {
                    groups.entry((a, c)).or_default().push(vec![g1, g2]);
                }
            }
        }
        for ws in groups.values() {
            let mut classes: Vec<Vec<usize>> = Vec::new();
            for w in ws {
                match classes.iter_mut().find(|cl| eq(cl, w)) {
                    Some(cl) => relations.push(vec![(1, cl.clone()), (-1, w.clone())]),
                    None => classes.push(w.clone()),
                }
            }
        }
        // bridge and circle
        for g in (0..ng).filter(|&g| is_gamma(g)) {
            let (a, b) = (self.gens[g].left, self.gens[g].right);
            for al in (0..ng).filter(|&x| !is_gamma(x) && self.gens[x].left == a) {
                for al2 in (0..ng).filter(|&x| !is_gamma(x) && self.gens[x].left == b) {
                    if eq(&[g, al2], &[al, g]) {
                        relations.push(vec![(1, vec![g, al2]), (-1, vec![al, g])]);
                    }
                }
            }
        }
        // two circles
        for a in 0..self.num_idempotents() {
            let als: Vec<usize> = (0..ng).filter(|&x| !is_gamma(x) && self.gens[x].left == a).collect();
            for (i, &x) in als.iter().enumerate() {
                relations.push(vec![(1, vec![x, x])]);
                for &y in &als[i + 1..] {
                    relations.push(vec![(1, vec![x, y]), (-1, vec![y, x])]);
                }
            }
        }
        // gamma gamma-dagger
        for g in (0..ng).filter(|&g| is_gamma(g)) {
            let (a, b) = (self.gens[g].left, self.gens[g].right);
            let GenKind::Gamma(p, q) = self.gens[g].kind else { unreachable!() };
            let dag = self.gamma_gen(b, a).expect("dual bridge");
            debug_assert_eq!(
                self.gens[dag].kind,
                {
                    let d = dual_bridge(&self.matchings[a], (p, q)).unwrap();
                    GenKind::Gamma(d.0, d.1)
                }
            );
            relations.push(vec![(1, vec![g, dag]), (-1, vec![self.alpha_gen(a, p)]), (-1, vec![self.alpha_gen(a, q)])]);
        }
        Presentation { idempotents, gens, relations, differential: None }
    }

    /// Normal-form preference: bridge generators before circle generators.
    pub fn gen_rank(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.gens.len()).collect();
        order.sort_by_key(|&g| (!matches!(self.gens[g].kind, GenKind::Gamma(..)), g));
        let mut rank = vec![0; order.len()];
        for (r, g) in order.into_iter().enumerate() {
            rank[g] = r;
        }
        rank
    }
}

impl Realization for ArcAlgebra {
    fn basis_keys(&self) -> Vec<(usize, usize, i32, i32)> {
        (0..self.rank()).map(|h| (self.basis[h].a, self.basis[h].b, 2 * self.degree(h), 0)).collect()
    }

    fn eval(&self, start: usize, word: &[usize]) -> Vec<(usize, i64)> {
        self.eval_word(start, word).into_iter().collect()
    }
}

fn components(nv: usize, edges: &[(usize, usize)], alive: &[bool]) -> (Vec<usize>, usize) {
    let mut parent: Vec<usize> = (0..nv).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    for (e, &(u, v)) in edges.iter().enumerate() {
        if alive[e] {
            let (a, b) = (find(&mut parent, u), find(&mut parent, v));
            parent[a] = b;
        }
    }
    let mut label = vec![usize::MAX; nv];
    let mut out = vec![0; nv];
    let mut count = 0;
    for v in 0..nv {
        let r = find(&mut parent, v);
        if label[r] == usize::MAX {
            label[r] = count;
            count += 1;
        }
        out[v] = label[r];
    }
    (out, count)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks() {
        assert_eq!(ArcAlgebra::new(1).unwrap().rank(), 2);
        assert_eq!(ArcAlgebra::new(2).unwrap().rank(), 12);
    }

    #[test]
    fn h1_is_dual_numbers() {
        let h = ArcAlgebra::new(1).unwrap();
        let x = h.index_of(Diag { a: 0, b: 0, minus: 1 });
        assert!(h.multiply(x, x).unwrap().is_empty());
        assert_eq!(h.multiply(0, x).unwrap(), vec![(x, 1)]);
        assert_eq!(h.gens.len(), 1);
        assert_eq!(h.degree(x), 2);
    }

    #[test]
    fn gamma_gamma_dagger() {
        let h = ArcAlgebra::new(2).unwrap();
        let gs: Vec<&HGen> = h.gens.iter().filter(|g| matches!(g.kind, GenKind::Gamma(..))).collect();
        assert_eq!(gs.len(), 2);
        let prod = h.multiply(gs[0].elem, gs[1].elem).unwrap();
        let a = gs[0].left;
        let alphas: Vec<(usize, i64)> =
            h.gens.iter().filter(|g| g.left == a && g.right == a).map(|g| (g.elem, 1)).sorted().collect();
        assert_eq!(prod, alphas);
    }

    #[test]
    fn presentation_verifies() {
        use crate::linquad::{verify_presentation, BuildOptions, NormalForms};
        for n in 1..=3 {
            let h = ArcAlgebra::new(n).unwrap();
            let opts = BuildOptions { gen_rank: Some(h.gen_rank()), ..Default::default() };
            let nf = NormalForms::build(h.presentation(), &opts).unwrap();
            let rep = verify_presentation(&nf, &h);
            assert!(rep.passed(), "n={} {:?}", n, rep);
            assert_eq!(nf.rank(), h.rank());
        }
    }

    #[test]
    fn parse_roundtrip() {
        let h = ArcAlgebra::new(2).unwrap();
        for i in 0..h.rank() {
            assert_eq!(h.parse_diag(&h.format_diag(i)).unwrap(), i);
        }
    }
}
