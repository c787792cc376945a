//! Roberts' algebras rebuilt from H^n: B_R(H^n), its monomial graph, quadratic dual,
//! mirroring, the product algebra and its gamma quotient, and rank-one DD structures.

use crate::arcalg::{ArcAlgebra, ArcError, Diag, GenKind};
use crate::linquad::{
    annihilator, quadratic_part, BuildOptions, Elem, Gen, LinQuadError, NormalForms, Poly, Presentation,
    Realization, Word,
};
use crate::zlinalg::{solve, ZMatrix};
use num_bigint::BigInt;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RobertsError {
    #[error(transparent)]
    Arc(#[from] ArcError),
    #[error(transparent)]
    LinQuad(#[from] LinQuadError),
    #[error("n = {0} needs the opt-in flag (supported: n <= 2, n = 3 opt-in)")]
    TooLarge(usize),
    #[error("structural error: {0}")]
    Structure(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BKind {
    Gamma,
    Circle,
}

/// Generator b_{gamma;h1,h2} or b_{C;h1,h2} of B_R(H^n).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BGen {
    pub kind: BKind,
    pub from: usize,
    pub to: usize,
}

/// Shape of a connected component of the monomial graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Shape {
    /// Component whose vertices all lie in I.
    Isolated,
    Segment,
    Triangle,
    Tetrahedron,
}

#[derive(Clone, Debug)]
pub struct MonomialGraph {
    pub vertices: Vec<Word>,
    pub in_ideal: Vec<bool>,
    pub edges: Vec<(usize, usize)>,
    pub components: Vec<Vec<usize>>,
    pub shapes: Vec<Shape>,
}

/// Relation family labels for B_R(H^n).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    BridgePair,
    BridgeCircle,
    CirclePair,
    BridgeDagger,
}

pub struct BR {
    pub h: ArcAlgebra,
    pub gens: Vec<BGen>,
    pub pres: Presentation,
    pub families: Vec<Family>,
    pub nf: NormalForms,
    reach: Vec<BTreeSet<usize>>,
}

pub fn mirror(h: &ArcAlgebra, x: usize) -> usize {
    let d = h.basis[x];
    h.index_of(Diag { a: d.b, b: d.a, minus: d.minus })
}

fn check_n(n: usize, allow_n3: bool) -> Result<(), RobertsError> {
    if n == 0 || n > 3 || (n == 3 && !allow_n3) {
        return Err(RobertsError::TooLarge(n));
    }
    Ok(())
}

impl BR {
    pub fn new(n: usize, allow_n3: bool) -> Result<Self, RobertsError> {
        check_n(n, allow_n3)?;
        let h = ArcAlgebra::new(n)?;
        let mut gens = Vec::new();
        let mut seen = BTreeSet::new();
        for kind in [BKind::Gamma, BKind::Circle] {
            for h1 in 0..h.rank() {
                let b = h.basis[h1].b;
                for (gi, g) in h.gens.iter().enumerate() {
                    let matches_kind = matches!((kind, g.kind), (BKind::Gamma, GenKind::Gamma(..)) | (BKind::Circle, GenKind::Alpha(..)));
                    if g.left != b || !matches_kind {
                        continue;
                    }
                    for &(h2, c) in h.times_gen(h1, gi) {
                        if c != 0 && seen.insert((kind, h1, h2)) {
                            gens.push(BGen { kind, from: h1, to: h2 });
                        }
                    }
                }
            }
        }
        gens.sort_by_key(|g| (g.kind, g.from, g.to));
        let idempotents: Vec<String> = (0..h.rank()).map(|i| format!("h{}", i)).collect();
        let pgens: Vec<Gen> = gens
            .iter()
            .map(|g| Gen {
                name: format!("{}{}_{}", if g.kind == BKind::Gamma { "bG" } else { "bC" }, g.from, g.to),
                left: g.from,
                right: g.to,
                intr2: if g.kind == BKind::Gamma { -1 } else { -2 },
                hom: 0,
            })
            .collect();
        let (relations, families) = br_relations(&gens);
        let pres = Presentation { idempotents, gens: pgens, relations, differential: None };
        let nf = NormalForms::build(pres.clone(), &BuildOptions::default())?;
        let mut reach = vec![BTreeSet::new(); h.rank()];
        for s in 0..h.rank() {
            let mut q = VecDeque::from([s]);
            reach[s].insert(s);
            while let Some(x) = q.pop_front() {
                for g in gens.iter().filter(|g| g.from == x) {
                    if reach[s].insert(g.to) {
                        q.push_back(g.to);
                    }
                }
            }
        }
        Ok(BR { h, gens, pres, families, nf, reach })
    }

    pub fn n(&self) -> usize {
        self.h.n
    }

    pub fn num_idempotents(&self) -> usize {
        self.h.rank()
    }

    pub fn gen_between(&self, kind: BKind, from: usize, to: usize) -> Option<usize> {
        self.gens.iter().position(|g| g.kind == kind && g.from == from && g.to == to)
    }

    /// Quadratic monomial graph of the relation ideal.
    pub fn monomial_graph(&self) -> Result<MonomialGraph, RobertsError> {
        monomial_graph(&self.pres)
    }

    /// I-perp generators from the component rules of the monomial graph.
    pub fn graph_annihilator(&self, g: &MonomialGraph) -> Vec<Poly> {
        let mut out = Vec::new();
        let vset: BTreeSet<&Word> = g.vertices.iter().collect();
        for (a, ga) in self.pres.gens.iter().enumerate() {
            for (b, gb) in self.pres.gens.iter().enumerate() {
                if ga.right == gb.left && !vset.contains(&vec![a, b]) {
                    out.push(vec![(1, vec![a, b])]);
                }
            }
        }
        for (comp, shape) in g.components.iter().zip(&g.shapes) {
            if *shape != Shape::Isolated {
                out.push(comp.iter().map(|&v| (1, g.vertices[v].clone())).collect());
            }
        }
        out
    }

    /// Quadratic dual B_R(H^n)^! from the graph rules with differential -sum b*_gamma b*_gamma-dagger.
    pub fn dual_presentation(&self) -> Result<Presentation, RobertsError> {
        let g = self.monomial_graph()?;
        let relations = self.graph_annihilator(&g);
        let q = quadratic_part(&self.pres)?;
        let generic = annihilator(&self.pres, &q);
        if !same_lattice(&self.pres, &relations, &generic) {
            return Err(RobertsError::Structure("graph rules disagree with the integer annihilator".into()));
        }
        let gens: Vec<Gen> = self
            .pres
            .gens
            .iter()
            .map(|x| Gen { name: format!("{}*", x.name), left: x.left, right: x.right, intr2: -x.intr2, hom: 1 })
            .collect();
        let mut diff = vec![Vec::new(); gens.len()];
        for (r, rel) in self.pres.relations.iter().enumerate() {
            if self.families[r] == Family::BridgeDagger {
                let path = rel.iter().find(|(_, w)| w.len() == 2).unwrap().1.clone();
                let c = rel.iter().find(|(_, w)| w.len() == 1).unwrap().1[0];
                diff[c].push((-1, path));
            }
        }
        let generic_d = crate::linquad::dual_differential(&self.pres, &q)?;
        let dual = Presentation { idempotents: self.pres.idempotents.clone(), gens, relations, differential: Some(diff) };
        let nf = NormalForms::build(dual.clone(), &BuildOptions::default())?;
        for (g, d) in generic_d.iter().enumerate() {
            let mut diffp = d.clone();
            for (c, w) in &dual.differential.as_ref().unwrap()[g] {
                diffp.push((-c, w.clone()));
            }
            if !nf.reduce_poly(&diffp).is_empty() {
                return Err(RobertsError::Structure(format!("dual differential mismatch on {}", dual.gens[g].name)));
            }
        }
        Ok(dual)
    }
}

impl Realization for BR {
    fn basis_keys(&self) -> Vec<(usize, usize, i32, i32)> {
        let mut out = Vec::new();
        for s in 0..self.h.rank() {
            for &t in &self.reach[s] {
                out.push((s, t, -(self.h.degree(t) - self.h.degree(s)), 0));
            }
        }
        out
    }

    fn eval(&self, start: usize, word: &[usize]) -> Vec<(usize, i64)> {
        let end = word.last().map_or(start, |&g| self.gens[g].to);
        let mut idx = 0;
        for s in 0..start {
            idx += self.reach[s].len();
        }
        idx += self.reach[start].iter().position(|&t| t == end).expect("word leaves the reachable set");
        vec![(idx, 1)]
    }
}

/// Spanning relations for every group of 2-paths with common endpoints, labelled by family.
fn br_relations(gens: &[BGen]) -> (Vec<Poly>, Vec<Family>) {
    let mut groups: BTreeMap<(usize, usize), Vec<Word>> = BTreeMap::new();
    for (i, a) in gens.iter().enumerate() {
        for (j, b) in gens.iter().enumerate() {
            if a.to == b.from {
                groups.entry((a.from, b.to)).or_default().push(vec![i, j]);
            }
        }
    }
    let mut rels = Vec::new();
    let mut fams = Vec::new();
    for ((h1, h3), paths) in groups {
        let linear = gens.iter().position(|g| g.kind == BKind::Circle && g.from == h1 && g.to == h3);
        let kinds = |w: &Word| (gens[w[0]].kind, gens[w[1]].kind);
        if let Some(c) = linear {
            for p in &paths {
                assert_eq!(kinds(p), (BKind::Gamma, BKind::Gamma));
                rels.push(vec![(1, p.clone()), (-1, vec![c])]);
                fams.push(Family::BridgeDagger);
            }
            continue;
        }
        let fam = match kinds(&paths[0]) {
            (BKind::Gamma, BKind::Gamma) => Family::BridgePair,
            (BKind::Circle, BKind::Circle) => Family::CirclePair,
            _ => Family::BridgeCircle,
        };
        let (first, second): (Vec<&Word>, Vec<&Word>) = paths.iter().partition(|w| gens[w[0]].kind == BKind::Gamma || fam != Family::BridgeCircle);
        let (first, second) = if fam == Family::BridgeCircle && !first.is_empty() && !second.is_empty() {
            (first, second)
        } else {
            (paths.iter().take(1).collect(), paths.iter().skip(1).collect())
        };
        // bipartite spanning tree between the two sides
        for w in &second {
            rels.push(vec![(1, first[0].clone()), (-1, (*w).clone())]);
            fams.push(fam);
        }
        if fam == Family::BridgeCircle && !second.is_empty() {
            for w in first.iter().skip(1) {
                rels.push(vec![(1, (*w).clone()), (-1, second[0].clone())]);
                fams.push(fam);
            }
        }
    }
    (rels, fams)
}

/// v lies in the integer span of `rows` (both over the same monomial list).
fn in_lattice(rows: &[Vec<i64>], v: &[i64]) -> bool {
    if v.iter().all(|&x| x == 0) {
        return true;
    }
    if rows.is_empty() {
        return false;
    }
    let mut m = ZMatrix::zeros(v.len(), rows.len());
    for (j, r) in rows.iter().enumerate() {
        for (i, &x) in r.iter().enumerate() {
            m.add_at(i, j, x);
        }
    }
    let b: Vec<BigInt> = v.iter().map(|&x| BigInt::from(x)).collect();
    solve(&m, &b).is_some()
}

type Key = (usize, usize, i32, i32);

fn piece_key(p: &Presentation, w: &Word) -> Key {
    let (i, h) = p.word_bideg(w);
    (p.word_left(w), p.word_right(w), i, h)
}

fn vectorize(polys: &[Poly], monos: &[Word]) -> Vec<Vec<i64>> {
    let pos: HashMap<&Word, usize> = monos.iter().enumerate().map(|(i, w)| (w, i)).collect();
    polys
        .iter()
        .map(|p| {
            let mut v = vec![0; monos.len()];
            for (c, w) in p {
                v[pos[w]] += c;
            }
            v
        })
        .collect()
}

fn group_polys(p: &Presentation, polys: &[Poly]) -> BTreeMap<Key, Vec<Poly>> {
    let mut m: BTreeMap<Key, Vec<Poly>> = BTreeMap::new();
    for poly in polys.iter().filter(|x| !x.is_empty()) {
        m.entry(piece_key(p, &poly[0].1)).or_default().push(poly.clone());
    }
    m
}

fn same_lattice(p: &Presentation, a: &[Poly], b: &[Poly]) -> bool {
    let ga = group_polys(p, a);
    let gb = group_polys(p, b);
    let keys: BTreeSet<&Key> = ga.keys().chain(gb.keys()).collect();
    for k in keys {
        let pa = ga.get(k).cloned().unwrap_or_default();
        let pb = gb.get(k).cloned().unwrap_or_default();
        let monos: Vec<Word> =
            pa.iter().chain(&pb).flat_map(|x| x.iter().map(|t| t.1.clone())).collect::<BTreeSet<_>>().into_iter().collect();
        let (va, vb) = (vectorize(&pa, &monos), vectorize(&pb, &monos));
        if !va.iter().all(|v| in_lattice(&vb, v)) || !vb.iter().all(|v| in_lattice(&va, v)) {
            return false;
        }
    }
    true
}

/// Graph on quadratic monomials of I with edges v - v' in I, classified by component.
pub fn monomial_graph(p: &Presentation) -> Result<MonomialGraph, RobertsError> {
    let q = quadratic_part(p)?;
    let groups = group_polys(p, &q.quad);
    let mut vertices = Vec::new();
    let mut in_ideal = Vec::new();
    let mut edges = Vec::new();
    let mut components = Vec::new();
    let mut shapes = Vec::new();
    for polys in groups.values() {
        let monos: Vec<Word> =
            polys.iter().flat_map(|x| x.iter().map(|t| t.1.clone())).collect::<BTreeSet<_>>().into_iter().collect();
        let rows = vectorize(polys, &monos);
        let base = vertices.len();
        let k = monos.len();
        let unit = |i: usize, j: Option<usize>| {
            let mut v = vec![0i64; k];
            v[i] = 1;
            if let Some(j) = j {
                v[j] = -1;
            }
            v
        };
        let killed: Vec<bool> = (0..k).map(|i| in_lattice(&rows, &unit(i, None))).collect();
        let mut adj = vec![vec![false; k]; k];
        for i in 0..k {
            for j in i + 1..k {
                // differences of two monomials already in I carry no information
                if killed[i] && killed[j] {
                    continue;
                }
                if in_lattice(&rows, &unit(i, Some(j))) {
                    adj[i][j] = true;
                    adj[j][i] = true;
                    edges.push((base + i, base + j));
                }
            }
        }
        let mut seen = vec![false; k];
        for i in 0..k {
            if seen[i] {
                continue;
            }
            let comp: Vec<usize> = (0..k).filter(|&j| j == i || adj[i][j]).collect();
            for &j in &comp {
                seen[j] = true;
                for &l in &comp {
                    if j != l && !adj[j][l] {
                        return Err(RobertsError::Structure(format!("component of {:?} is not complete", monos[i])));
                    }
                }
            }
            let shape = match (killed[i], comp.len()) {
                (true, 1) => Shape::Isolated,
                (false, 2) => Shape::Segment,
                (false, 3) => Shape::Triangle,
                (false, 4) => Shape::Tetrahedron,
                _ => {
                    return Err(RobertsError::Structure(format!(
                        "unclassifiable component of size {} (in I: {}) at {}",
                        comp.len(),
                        killed[i],
                        p.format_word(&monos[i])
                    )))
                }
            };
            components.push(comp.iter().map(|&j| base + j).collect());
            shapes.push(shape);
        }
        for (i, w) in monos.into_iter().enumerate() {
            vertices.push(w);
            in_ideal.push(killed[i]);
        }
    }
    Ok(MonomialGraph { vertices, in_ideal, edges, components, shapes })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PKind {
    BGamma,
    BCircle,
    DGamma,
    DCircle,
}

impl PKind {
    pub fn is_d(self) -> bool {
        matches!(self, PKind::DGamma | PKind::DCircle)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PGen {
    pub kind: PKind,
    pub from: usize,
    pub to: usize,
    /// Index of the B_R generator this one is built from.
    pub base: usize,
}

/// B ⊙ m(B)^!, optionally with the gamma quotient relations.
pub struct ProductAlgebra {
    pub br: BR,
    pub gens: Vec<PGen>,
    pub nf: NormalForms,
    pub gamma: bool,
    /// Mirrored dual words a, b, c, d per tetrahedron.
    pub tetrahedra: Vec<[Word; 4]>,
    /// Number of B generators; D generator of B generator g has index `nb + g`.
    pub nb: usize,
}

impl ProductAlgebra {
    pub fn new(br: BR, gamma: bool) -> Result<Self, RobertsError> {
        let h = &br.h;
        let nb = br.gens.len();
        let mut gens: Vec<PGen> = br
            .gens
            .iter()
            .enumerate()
            .map(|(i, g)| PGen {
                kind: if g.kind == BKind::Gamma { PKind::BGamma } else { PKind::BCircle },
                from: g.from,
                to: g.to,
                base: i,
            })
            .collect();
        for (i, g) in br.gens.iter().enumerate() {
            gens.push(PGen {
                kind: if g.kind == BKind::Gamma { PKind::DGamma } else { PKind::DCircle },
                from: mirror(h, g.from),
                to: mirror(h, g.to),
                base: i,
            });
        }
        let d_of = |w: &Word| -> Word { w.iter().map(|&g| nb + g).collect() };
        let mut pgens: Vec<Gen> = br.pres.gens.clone();
        for (i, g) in br.pres.gens.iter().enumerate() {
            pgens.push(Gen {
                name: format!("D{}", &g.name[1..]).replace(&format!("{}_{}", br.gens[i].from, br.gens[i].to), &format!("{}_{}", gens[nb + i].from, gens[nb + i].to)),
                left: gens[nb + i].from,
                right: gens[nb + i].to,
                intr2: -g.intr2,
                hom: 1,
            });
        }
        let dual = br.dual_presentation()?;
        let mut relations: Vec<Poly> = br.pres.relations.clone();
        for r in &dual.relations {
            relations.push(r.iter().map(|(c, w)| (*c, d_of(w))).collect());
        }
        relations.extend(j_extra(h, &gens));
        let graph = br.monomial_graph()?;
        let mut tetrahedra = Vec::new();
        for (comp, shape) in graph.components.iter().zip(&graph.shapes) {
            if *shape != Shape::Tetrahedron {
                continue;
            }
            let mut ws: Vec<Word> = comp.iter().map(|&v| d_of(&graph.vertices[v])).collect();
            ws.sort();
            // a, b share the target of the first generator
            let t0 = gens[ws[0][0]].to;
            let same: Vec<Word> = ws.iter().filter(|w| gens[w[0]].to == t0).cloned().collect();
            let other: Vec<Word> = ws.iter().filter(|w| gens[w[0]].to != t0).cloned().collect();
            let first_target = |w: &Word| h.basis[br.gens[gens[w[0]].base].to].b;
            let (ab, cd): (Vec<Word>, Vec<Word>) = if same.len() == 2 {
                (same, other)
            } else {
                let m0 = first_target(&ws[0]);
                ws.iter().cloned().partition(|w| first_target(w) == m0)
            };
            if ab.len() != 2 || cd.len() != 2 {
                return Err(RobertsError::Structure("tetrahedron does not split into two pairs".into()));
            }
            tetrahedra.push([ab[0].clone(), ab[1].clone(), cd[0].clone(), cd[1].clone()]);
        }
        if gamma {
            for [a, b, c, d] in &tetrahedra {
                relations.push(vec![(1, a.clone()), (1, c.clone())]);
                relations.push(vec![(1, a.clone()), (1, d.clone())]);
                relations.push(vec![(1, b.clone()), (1, c.clone())]);
            }
        }
        let mut diff: Vec<Poly> = vec![Vec::new(); 2 * nb];
        for (g, d) in dual.differential.as_ref().unwrap().iter().enumerate() {
            diff[nb + g] = d.iter().map(|(c, w)| (*c, d_of(w))).collect();
        }
        let pres = Presentation { idempotents: br.pres.idempotents.clone(), gens: pgens, relations, differential: Some(diff) };
        let mut rank: Vec<usize> = (0..2 * nb).collect();
        for (g, r) in rank.iter_mut().enumerate() {
            *r = if g >= nb { g - nb } else { g + nb };
        }
        let nf = NormalForms::build(pres, &BuildOptions { gen_rank: Some(rank), ..Default::default() })?;
        Ok(ProductAlgebra { br, gens, nf, gamma, tetrahedra, nb })
    }

    pub fn h(&self) -> &ArcAlgebra {
        &self.br.h
    }

    pub fn d_gen(&self, b: usize) -> usize {
        self.nb + b
    }

    /// P generator corresponding to H^n generator g from idempotent h1 to h2 in B_R terms.
    pub fn b_gen_between(&self, kind: BKind, from: usize, to: usize) -> Option<usize> {
        self.br.gen_between(kind, from, to)
    }

    /// D generator from h1 to h2.
    pub fn d_gen_between(&self, kind: BKind, from: usize, to: usize) -> Option<usize> {
        let h = &self.br.h;
        self.br.gen_between(kind, mirror(h, from), mirror(h, to)).map(|g| self.nb + g)
    }
}

fn circle_flipped(h: &ArcAlgebra, x: usize, y: usize) -> Option<Vec<usize>> {
    let (dx, dy) = (h.basis[x], h.basis[y]);
    if dx.a != dy.a || dx.b != dy.b {
        return None;
    }
    let diff = dx.minus ^ dy.minus;
    if diff.count_ones() != 1 {
        return None;
    }
    let c = diff.trailing_zeros() as usize;
    Some(h.circles(dx.a, dx.b)[c].clone())
}

/// Mixed commutation relations between B generators and mirrored dual generators.
fn j_extra(h: &ArcAlgebra, gens: &[PGen]) -> Vec<Poly> {
    let mut groups: BTreeMap<(usize, usize), (Vec<Word>, Vec<Word>)> = BTreeMap::new();
    for (i, a) in gens.iter().enumerate() {
        for (j, b) in gens.iter().enumerate() {
            if a.to != b.from || a.kind.is_d() == b.kind.is_d() {
                continue;
            }
            let e = groups.entry((a.from, b.to)).or_default();
            if a.kind.is_d() {
                e.1.push(vec![i, j]);
            } else {
                e.0.push(vec![i, j]);
            }
        }
    }
    let mut rels = Vec::new();
    let b_of = |w: &Word| if gens[w[0]].kind.is_d() { w[1] } else { w[0] };
    let d_of = |w: &Word| if gens[w[0]].kind.is_d() { w[0] } else { w[1] };
    for (_, (bfirst, dfirst)) in groups {
        let sample = bfirst.first().or(dfirst.first()).unwrap();
        let bk = gens[b_of(sample)].kind;
        let dk = gens[d_of(sample)].kind;
        match (bk, dk) {
            (PKind::BGamma, PKind::DCircle) => {
                let mut r: Poly = bfirst.iter().map(|w| (1, w.clone())).collect();
                r.extend(dfirst.iter().map(|w| (-1, w.clone())));
                rels.push(r);
            }
            (PKind::BCircle, PKind::DCircle) => {
                let key = |w: &Word| {
                    let g = &gens[b_of(w)];
                    circle_flipped(h, g.from, g.to).unwrap()
                };
                for w in &bfirst {
                    for v in dfirst.iter().filter(|v| key(v) == key(w)) {
                        rels.push(vec![(1, w.clone()), (-1, v.clone())]);
                    }
                }
            }
            _ => {
                if let (Some(b0), Some(d0)) = (bfirst.first(), dfirst.first()) {
                    for w in &dfirst {
                        rels.push(vec![(1, b0.clone()), (-1, w.clone())]);
                    }
                    for w in bfirst.iter().skip(1) {
                        rels.push(vec![(1, w.clone()), (-1, d0.clone())]);
                    }
                }
            }
        }
    }
    rels
}

/// One term x ⊗ y of a rank-one DD structure; `x` in the left algebra, `y` in the right algebra
/// before taking the opposite.
#[derive(Clone, Debug)]
pub struct DDTerm {
    pub x: Elem,
    pub y: Elem,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DDKind {
    BBdual,
    BdualB,
    Product,
}

/// delta(e) for each idempotent e of the rank-one DD structure.
pub struct DDStructure<'a> {
    pub left: &'a NormalForms,
    pub right: &'a NormalForms,
    /// Map from left idempotents to right idempotents.
    pub idem_map: Vec<usize>,
    pub delta: Vec<Vec<(usize, usize)>>,
}

impl<'a> DDStructure<'a> {
    /// delta(e) = sum over generators g at e of g ⊗ g', with `pair` giving g' in the right algebra.
    pub fn from_pairs(left: &'a NormalForms, right: &'a NormalForms, idem_map: Vec<usize>, pairs: &[(usize, usize)]) -> Self {
        let mut delta = vec![Vec::new(); left.num_idempotents()];
        for &(x, y) in pairs {
            delta[left.pres.gens[x].left].push((x, y));
        }
        DDStructure { left, right, idem_map, delta }
    }

    /// Sum of the three terms of the DD structure relation on idempotent e.
    pub fn relation(&self, e: usize) -> BTreeMap<(crate::linquad::Bid, crate::linquad::Bid), i64> {
        let (l, r) = (self.left, self.right);
        let mut acc: BTreeMap<(crate::linquad::Bid, crate::linquad::Bid), i64> = BTreeMap::new();
        let mut add = |x: &Elem, y: &Elem, s: i64| {
            for (&bx, &cx) in x {
                for (&by, &cy) in y {
                    let v = acc.entry((bx, by)).or_insert(0);
                    *v += s * cx * cy;
                }
            }
        };
        for &(xg, yg) in &self.delta[e] {
            let x = l.reduce_word(e, &[xg]);
            let y = r.reduce_word(self.idem_map[e], &[yg]);
            let yh = r.pres.gens[yg].hom;
            let s = if yh.rem_euclid(2) == 0 { 1 } else { -1 };
            add(&l.mu1(&x), &y, s);
            add(&x, &r.mu1(&y), 1);
            let mid = l.pres.gens[xg].right;
            for &(xg2, yg2) in &self.delta[mid] {
                let xx = l.reduce_word(e, &[xg, xg2]);
                let yy = r.reduce_word(self.idem_map[e], &[yg, yg2]);
                let s = if (l.pres.gens[xg2].hom * yh).rem_euclid(2) == 0 { 1 } else { -1 };
                add(&xx, &yy, s);
            }
        }
        acc.retain(|_, v| *v != 0);
        acc
    }

    pub fn check(&self) -> Result<(), String> {
        for e in 0..self.delta.len() {
            let rel = self.relation(e);
            if let Some(((bx, by), c)) = rel.iter().next() {
                return Err(format!(
                    "DD relation fails at idempotent {}: {} ({}) ⊗ ({})",
                    self.left.pres.idempotents[e],
                    c,
                    self.left.pres.format_word(self.left.word(*bx)),
                    self.right.pres.format_word(self.right.word(*by))
                ));
            }
        }
        Ok(())
    }
}

/// The pairs (x, y) defining delta for the three rank-one DD structures.
pub fn dd_pairs(kind: DDKind, p: &ProductAlgebra) -> Vec<(usize, usize)> {
    let nb = p.nb;
    match kind {
        DDKind::BBdual | DDKind::BdualB => (0..nb).map(|g| (g, g)).collect(),
        DDKind::Product => (0..nb).flat_map(|g| [(g, nb + g), (nb + g, g)]).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linquad::verify_presentation;

    #[test]
    fn br_n1() {
        let br = BR::new(1, false).unwrap();
        assert_eq!(br.gens.len(), 1);
        assert_eq!(br.gens[0].kind, BKind::Circle);
        assert!(verify_presentation(&br.nf, &br).passed());
    }

    #[test]
    fn br_n2_verifies() {
        let br = BR::new(2, false).unwrap();
        let rep = verify_presentation(&br.nf, &br);
        assert!(rep.passed(), "{:?}", rep);
        let g = br.monomial_graph().unwrap();
        assert!(g.shapes.contains(&Shape::Isolated));
        br.dual_presentation().unwrap();
    }
}

#[cfg(test)]
mod product_tests {
    use super::*;

    fn check_all(n: usize, allow: bool) {
        let br = BR::new(n, allow).unwrap();
        let g = br.monomial_graph().unwrap();
        let mut counts = BTreeMap::new();
        for s in &g.shapes {
            *counts.entry(*s).or_insert(0) += 1;
        }
        eprintln!("n={} gens={} rels={} shapes={:?} rank={:?}", n, br.gens.len(), br.pres.relations.len(), counts, br.nf.rank());
        let dual = br.dual_presentation().unwrap();
        let dnf = NormalForms::build(dual, &BuildOptions::default()).unwrap();
        dnf.check_differential().unwrap();
        for gamma in [false, true] {
            let p = ProductAlgebra::new(BR::new(n, allow).unwrap(), gamma).unwrap();
            eprintln!("gamma={} tetra={} rank={:?}", gamma, p.tetrahedra.len(), p.nf.rank());
            p.nf.check_differential().unwrap();
            let m: Vec<usize> = (0..p.h().rank()).map(|x| mirror(p.h(), x)).collect();
            let dd = DDStructure::from_pairs(&p.nf, &p.nf, m, &dd_pairs(DDKind::Product, &p));
            dd.check().unwrap();
        }
        let id: Vec<usize> = (0..br.h.rank()).collect();
        let pairs: Vec<(usize, usize)> = (0..br.gens.len()).map(|g| (g, g)).collect();
        DDStructure::from_pairs(&br.nf, &dnf, id.clone(), &pairs).check().unwrap();
        DDStructure::from_pairs(&dnf, &br.nf, id, &pairs).check().unwrap();
    }

    #[test]
    fn product_n2() {
        check_all(2, false);
    }

    #[test]
    #[ignore]
    fn product_n3() {
        check_all(3, true);
    }
}
