//! Tangle words, cubes of resolutions, [T]^Kh and the direct Khovanov complex.

use crate::arcalg::{ArcAlgebra, ArcError};
use crate::hncomplex::{CGen, ProjComplex, Side};
use crate::planar::{Matching, PlanarError};
use crate::zlinalg::{Bideg, Complex};
use rand::Rng;
use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TangleError {
    #[error("parse error at line {0}: {1}")]
    Parse(usize, String),
    #[error("event {0}: {1}")]
    Event(usize, String),
    #[error("orientation conflict: {0}")]
    Orientation(String),
    #[error("boundary mismatch: {0}")]
    Boundary(String),
    #[error("inapplicable move: {0}")]
    Move(String),
    #[error(transparent)]
    Arc(#[from] ArcError),
    #[error(transparent)]
    Planar(#[from] PlanarError),
}

/// `x+ i`: the strand at position i passes over the strand at i+1; `x- i`: it passes under.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    Pos,
    Neg,
}

/// Elementary piece acting on the running strand list (0-based positions).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Event {
    Cap(usize),
    Cup(usize),
    Cross(usize, Kind),
}

/// Tangle diagram in the half-plane `side` (Left: x <= 0, Right: x >= 0) with `points` endpoints;
/// `incoming[p]` is true when the strand at boundary point p+1 enters the half-plane.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TangleWord {
    pub side: Side,
    pub points: usize,
    pub incoming: Vec<bool>,
    pub events: Vec<Event>,
}

/// Closed diagram: `left` in x <= 0 (T2) and `right` in x >= 0 (T1), glued along the boundary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Link {
    pub left: TangleWord,
    pub right: TangleWord,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Smoothing {
    /// s1-t1, s2-t2
    Identity,
    /// s1-s2, t1-t2
    CapCup,
}

/// Crossing with incoming segments `ins` and outgoing segments `outs` at positions (i, i+1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrossingData {
    pub ins: [usize; 2],
    pub outs: [usize; 2],
    pub sign: i32,
    pub zero: Smoothing,
}

impl CrossingData {
    fn smoothing(&self, bit: bool) -> Smoothing {
        match (self.zero, bit) {
            (s, false) => s,
            (Smoothing::Identity, true) => Smoothing::CapCup,
            (Smoothing::CapCup, true) => Smoothing::Identity,
        }
    }

    fn joins(&self, bit: bool) -> [(usize, usize); 2] {
        let ([s1, s2], [t1, t2]) = (self.ins, self.outs);
        match self.smoothing(bit) {
            Smoothing::Identity => [(s1, t1), (s2, t2)],
            Smoothing::CapCup => [(s1, s2), (t1, t2)],
        }
    }
}

/// Planar data of a word: segments, fixed joins from caps and cups, crossings in event order.
#[derive(Clone, Debug)]
pub struct Trace {
    pub num_segments: usize,
    pub joins: Vec<(usize, usize)>,
    pub crossings: Vec<CrossingData>,
    pub forward: Vec<bool>,
}

fn line_err(k: usize, s: &str) -> TangleError {
    TangleError::Parse(k + 1, s.to_string())
}

fn parse_block(lines: &[(usize, &str)]) -> Result<TangleWord, TangleError> {
    let (k0, head) = lines[0];
    let f: Vec<&str> = head.split_whitespace().collect();
    if f.len() != 3 || f[0] != "tangle" {
        return Err(line_err(k0, "expected `tangle left|right <points>`"));
    }
    let side = match f[1] {
        "left" => Side::Left,
        "right" => Side::Right,
        _ => return Err(line_err(k0, "side must be left or right")),
    };
    let points: usize = f[2].parse().map_err(|_| line_err(k0, "bad point count"))?;
    if points % 2 != 0 {
        return Err(line_err(k0, "odd point count"));
    }
    let mut incoming: Vec<Option<bool>> = vec![None; points];
    let mut events = Vec::new();
    for &(k, line) in &lines[1..] {
        let f: Vec<&str> = line.split_whitespace().collect();
        let pos = |s: &str| -> Result<usize, TangleError> {
            let v: usize = s.parse().map_err(|_| line_err(k, "bad position"))?;
            if v == 0 {
                return Err(line_err(k, "positions start at 1"));
            }
            Ok(v - 1)
        };
        match (f.first().copied(), f.len()) {
            (Some("orient"), 3) => {
                let p = pos(f[1])?;
                if p >= points {
                    return Err(line_err(k, "boundary point out of range"));
                }
                incoming[p] = Some(match f[2] {
                    "in" => true,
                    "out" => false,
                    _ => return Err(line_err(k, "orientation must be in or out")),
                });
            }
            (Some("x+"), 2) => events.push(Event::Cross(pos(f[1])?, Kind::Pos)),
            (Some("x-"), 2) => events.push(Event::Cross(pos(f[1])?, Kind::Neg)),
            (Some("cap"), 2) => events.push(Event::Cap(pos(f[1])?)),
            (Some("cup"), 2) => events.push(Event::Cup(pos(f[1])?)),
            _ => return Err(line_err(k, "unknown line")),
        }
    }
    let incoming = incoming
        .into_iter()
        .enumerate()
        .map(|(p, o)| o.ok_or_else(|| line_err(k0, &format!("missing orientation of point {}", p + 1))))
        .collect::<Result<Vec<_>, _>>()?;
    let t = TangleWord { side, points, incoming, events };
    t.trace()?;
    Ok(t)
}

fn content_lines(text: &str) -> Vec<(usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(k, l)| (k, l.split('#').next().unwrap().trim()))
        .filter(|(_, l)| !l.is_empty())
        .flat_map(|(k, l)| l.split(';').map(move |s| (k, s.trim())).filter(|(_, s)| !s.is_empty()))
        .collect()
}

pub fn parse_tangle(text: &str) -> Result<TangleWord, TangleError> {
    let lines = content_lines(text);
    if lines.is_empty() {
        return Err(TangleError::Parse(0, "empty input".into()));
    }
    if lines.iter().skip(1).any(|(_, l)| l.starts_with("tangle")) {
        return Err(TangleError::Parse(0, "more than one block".into()));
    }
    parse_block(&lines)
}

/// A link file: a `tangle left` block followed by a `tangle right` block.
pub fn parse_link(text: &str) -> Result<Link, TangleError> {
    let lines = content_lines(text);
    let starts: Vec<usize> = lines.iter().enumerate().filter(|(_, (_, l))| l.starts_with("tangle")).map(|(k, _)| k).collect();
    if starts.len() != 2 || starts[0] != 0 {
        return Err(TangleError::Parse(0, "expected a left block followed by a right block".into()));
    }
    let left = parse_block(&lines[..starts[1]])?;
    let right = parse_block(&lines[starts[1]..])?;
    if left.side != Side::Left || right.side != Side::Right {
        return Err(TangleError::Parse(0, "expected a left block followed by a right block".into()));
    }
    let link = Link { left, right };
    link.check()?;
    Ok(link)
}

impl TangleWord {
    pub fn n(&self) -> usize {
        self.points / 2
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("tangle {} {}\n", if self.side == Side::Left { "left" } else { "right" }, self.points);
        for (p, &i) in self.incoming.iter().enumerate() {
            s += &format!("orient {} {}\n", p + 1, if i { "in" } else { "out" });
        }
        for e in &self.events {
            s += &match e {
                Event::Cap(i) => format!("cap {}\n", i + 1),
                Event::Cup(i) => format!("cup {}\n", i + 1),
                Event::Cross(i, Kind::Pos) => format!("x+ {}\n", i + 1),
                Event::Cross(i, Kind::Neg) => format!("x- {}\n", i + 1),
            };
        }
        s
    }

    /// Segment bookkeeping, orientation propagation and crossing signs.
    pub fn trace(&self) -> Result<Trace, TangleError> {
        let mut strands: Vec<usize> = (0..self.points).collect();
        let mut next = self.points;
        // ends: (segment, upper end?) pairs joined
        let mut ends: Vec<((usize, bool), (usize, bool))> = Vec::new();
        let mut raw: Vec<([usize; 2], [usize; 2], Kind)> = Vec::new();
        let mut joins = Vec::new();
        for (k, e) in self.events.iter().enumerate() {
            match *e {
                Event::Cap(i) => {
                    if i + 1 >= strands.len() {
                        return Err(TangleError::Event(k, format!("cap {} needs strands {} and {}", i + 1, i + 1, i + 2)));
                    }
                    let (a, b) = (strands[i], strands[i + 1]);
                    strands.drain(i..i + 2);
                    ends.push(((a, true), (b, true)));
                    joins.push((a, b));
                }
                Event::Cup(i) => {
                    if i > strands.len() {
                        return Err(TangleError::Event(k, format!("cup {} beyond {} strands", i + 1, strands.len())));
                    }
                    let (a, b) = (next, next + 1);
                    next += 2;
                    strands.splice(i..i, [a, b]);
                    ends.push(((a, false), (b, false)));
                    joins.push((a, b));
                }
                Event::Cross(i, kind) => {
                    if i + 1 >= strands.len() {
                        return Err(TangleError::Event(k, format!("crossing at {} needs two strands", i + 1)));
                    }
                    let ins = [strands[i], strands[i + 1]];
                    let outs = [next, next + 1];
                    next += 2;
                    strands[i] = outs[0];
                    strands[i + 1] = outs[1];
                    ends.push(((ins[0], true), (outs[1], false)));
                    ends.push(((ins[1], true), (outs[0], false)));
                    raw.push((ins, outs, kind));
                }
            }
        }
        if !strands.is_empty() {
            return Err(TangleError::Event(self.events.len(), format!("{} strands left open", strands.len())));
        }
        let mut fixed: Vec<Option<bool>> = vec![None; next];
        for p in 0..self.points {
            fixed[p] = Some(self.incoming[p]);
        }
        let forward = propagate(next, &ends, &fixed).map_err(TangleError::Orientation)?;
        let crossings = raw
            .into_iter()
            .map(|(ins, outs, kind)| {
                let same = forward[ins[0]] == forward[ins[1]];
                let k = if kind == Kind::Pos { 1 } else { -1 };
                let s = if same { 1 } else { -1 };
                let sign = if self.side == Side::Left { k * s } else { -k * s };
                let oriented = if same { Smoothing::Identity } else { Smoothing::CapCup };
                let zero = if sign > 0 {
                    oriented
                } else if oriented == Smoothing::Identity {
                    Smoothing::CapCup
                } else {
                    Smoothing::Identity
                };
                CrossingData { ins, outs, sign, zero }
            })
            .collect();
        Ok(Trace { num_segments: next, joins, crossings, forward })
    }

    pub fn crossing_count(&self) -> usize {
        self.events.iter().filter(|e| matches!(e, Event::Cross(..))).count()
    }

    /// (n_+, n_-).
    pub fn crossing_signs(&self) -> Result<(usize, usize), TangleError> {
        let t = self.trace()?;
        let p = t.crossings.iter().filter(|c| c.sign > 0).count();
        Ok((p, t.crossings.len() - p))
    }

    /// Strand count just before event `k`.
    pub fn strands_before(&self, k: usize) -> usize {
        let mut s = self.points;
        for e in &self.events[..k] {
            match e {
                Event::Cap(_) => s -= 2,
                Event::Cup(_) => s += 2,
                Event::Cross(..) => {}
            }
        }
        s
    }
}

/// Direction of travel per segment (true = away from the boundary) from the join relation.
fn propagate(nseg: usize, ends: &[((usize, bool), (usize, bool))], fixed: &[Option<bool>]) -> Result<Vec<bool>, String> {
    let mut adj: Vec<Vec<(usize, bool)>> = vec![Vec::new(); nseg];
    for &((a, ua), (b, ub)) in ends {
        // upper-lower joins keep the direction, upper-upper and lower-lower reverse it
        let flip = ua == ub;
        adj[a].push((b, flip));
        adj[b].push((a, flip));
    }
    let mut dir: Vec<Option<bool>> = vec![None; nseg];
    let order: Vec<usize> = (0..nseg).filter(|&s| fixed[s].is_some()).chain(0..nseg).collect();
    for s0 in order {
        if dir[s0].is_some() {
            continue;
        }
        dir[s0] = Some(fixed[s0].unwrap_or(true));
        let mut stack = vec![s0];
        while let Some(s) = stack.pop() {
            let d = dir[s].unwrap();
            for &(t, flip) in &adj[s] {
                let want = d ^ flip;
                match dir[t] {
                    None => {
                        if let Some(f) = fixed[t] {
                            if f != want {
                                return Err(format!("boundary segment {} disagrees with its strand", t + 1));
                            }
                        }
                        dir[t] = Some(want);
                        stack.push(t);
                    }
                    Some(x) if x != want => return Err(format!("segment {} oriented both ways", t + 1)),
                    _ => {}
                }
            }
        }
    }
    Ok(dir.into_iter().map(Option::unwrap).collect())
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu((0..n).collect())
    }
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let z = self.0[y];
            self.0[y] = r;
            y = z;
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

/// Flat picture of a resolution: components keyed by smallest segment.
#[derive(Clone, Debug)]
pub struct Resolved {
    /// Component id (its smallest segment) of each segment.
    pub comp: Vec<usize>,
    /// Free circles (component ids) in increasing order.
    pub free: Vec<usize>,
    /// Boundary arcs as 1-based point pairs, if any boundary.
    pub arcs: Vec<(usize, usize)>,
}

impl Resolved {
    pub fn free_index(&self, comp: usize) -> Option<usize> {
        self.free.iter().position(|&c| c == comp)
    }

    pub fn is_arc(&self, comp: usize, points: usize) -> bool {
        comp < points
    }
}

fn resolve_segments(nseg: usize, points: usize, joins: &[(usize, usize)]) -> Resolved {
    let mut dsu = Dsu::new(nseg);
    for &(a, b) in joins {
        dsu.union(a, b);
    }
    let comp: Vec<usize> = (0..nseg).map(|s| dsu.find(s)).collect();
    let mut free: Vec<usize> = comp.iter().copied().filter(|&c| c >= points).collect();
    free.sort();
    free.dedup();
    let mut arcs = Vec::new();
    for p in 0..points {
        for q in p + 1..points {
            if comp[p] == comp[q] {
                arcs.push((p + 1, q + 1));
            }
        }
    }
    Resolved { comp, free, arcs }
}

impl Trace {
    fn resolution_joins(&self, rho: u64) -> Vec<(usize, usize)> {
        let mut j = self.joins.clone();
        for (c, x) in self.crossings.iter().enumerate() {
            j.extend(x.joins(rho >> c & 1 == 1));
        }
        j
    }
}

/// Flat resolution of a word under rho (bit c = resolution of crossing c in event order).
pub fn resolve(t: &TangleWord, rho: u64) -> Result<(Matching, Resolved), TangleError> {
    let tr = t.trace()?;
    let r = resolve_segments(tr.num_segments, t.points, &tr.resolution_joins(rho));
    let m = Matching::new(t.n(), &r.arcs)?;
    Ok((m, r))
}

/// One change of resolution at a crossing, as a linear map on labelled generators.
enum Change {
    /// Labels of the target's free circles and a pure coefficient per term.
    Pure(Vec<(u64, i64)>),
    /// Target labels with an H^n weight (basis index) per term.
    Weighted(Vec<(u64, usize, i64)>),
}

/// Cube data shared by [T]^Kh and the direct complex.
struct Cube {
    points: usize,
    res: Vec<Resolved>,
    matchings: Vec<Option<usize>>,
    trace: Trace,
}

impl Cube {
    fn build(nseg: usize, points: usize, trace: Trace, alg: Option<&ArcAlgebra>) -> Result<Cube, TangleError> {
        let nc = trace.crossings.len();
        let mut res = Vec::new();
        let mut matchings = Vec::new();
        for rho in 0..1u64 << nc {
            let r = resolve_segments(nseg, points, &trace.resolution_joins(rho));
            matchings.push(match alg {
                Some(alg) => Some(alg.matching_index(&Matching::new(points / 2, &r.arcs)?).expect("matching")),
                None => None,
            });
            res.push(r);
        }
        Ok(Cube { points, res, matchings, trace })
    }

    /// Map on labelled generators for the change rho -> rho + e_c; `alpha(p)` gives the h_alpha
    /// weight for the arc through boundary point p, `gamma` the h_gamma weight of an arc surgery.
    fn change(&self, rho: u64, c: usize, labels: u64, alpha: &dyn Fn(usize) -> usize, gamma: Option<usize>) -> Change {
        let (src, tgt) = (&self.res[rho as usize], &self.res[(rho | 1 << c) as usize]);
        let x = &self.trace.crossings[c];
        let [(e1, _), (e2, _)] = x.joins(false ^ (rho >> c & 1 == 1));
        let [(f1, _), (f2, _)] = x.joins(true ^ (rho >> c & 1 == 1));
        let (a, b) = (src.comp[e1], src.comp[e2]);
        let (a2, b2) = (tgt.comp[f1], tgt.comp[f2]);
        let label = |r: &Resolved, l: u64, comp: usize| r.free_index(comp).map(|k| l >> k & 1 == 1);
        // carry over untouched free circles
        let mut base = 0u64;
        for (k, &fc) in src.free.iter().enumerate() {
            if fc == a || fc == b {
                continue;
            }
            let t = tgt.free_index(tgt.comp[fc]).expect("untouched circle");
            if labels >> k & 1 == 1 {
                base |= 1 << t;
            }
        }
        let set = |l: u64, comp: usize, minus: bool| match tgt.free_index(comp) {
            Some(k) if minus => l | 1 << k,
            _ => l,
        };
        let is_arc = |comp: usize| comp < self.points;
        if a != b {
            let m = a2;
            match (label(src, labels, a), label(src, labels, b)) {
                (Some(la), Some(lb)) => {
                    if la && lb {
                        Change::Pure(vec![])
                    } else {
                        Change::Pure(vec![(set(base, m, la || lb), 1)])
                    }
                }
                (Some(l), None) | (None, Some(l)) => {
                    if l {
                        let arc_comp = if is_arc(a) { a } else { b };
                        Change::Weighted(vec![(base, alpha(arc_comp), 1)])
                    } else {
                        Change::Pure(vec![(base, 1)])
                    }
                }
                (None, None) => Change::Weighted(vec![(base, gamma.expect("arc surgery weight"), 1)]),
            }
        } else {
            match label(src, labels, a) {
                Some(l) => {
                    if l {
                        Change::Pure(vec![(set(set(base, a2, true), b2, true), 1)])
                    } else {
                        Change::Pure(vec![(set(base, a2, true), 1), (set(base, b2, true), 1)])
                    }
                }
                None => {
                    let free = if is_arc(a2) { b2 } else { a2 };
                    Change::Pure(vec![(set(base, free, true), 1)]).merge(Change::Weighted(vec![(base, alpha(a), 1)]))
                }
            }
        }
    }
}

impl Change {
    fn merge(self, other: Change) -> Change {
        // arc split: pure term (new circle minus) and weighted term (new circle plus)
        match (self, other) {
            (Change::Pure(p), Change::Weighted(w)) => Change::Weighted(
                p.into_iter().map(|(l, c)| (l, usize::MAX, c)).chain(w).collect(),
            ),
            _ => unreachable!(),
        }
    }
}

fn sign_before(rho: u64, c: usize, order_pos: &dyn Fn(usize) -> usize, nc: usize) -> i64 {
    let k = (0..nc).filter(|&d| rho >> d & 1 == 1 && order_pos(d) < order_pos(c)).count();
    if k % 2 == 0 {
        1
    } else {
        -1
    }
}

/// [T]^Kh with the generator data (rho, free-circle labels) of each generator.
#[derive(Clone, Debug)]
pub struct KhComplex {
    pub complex: ProjComplex,
    pub gens: Vec<(u64, u64)>,
    pub res: Vec<Resolved>,
    pub n_plus: usize,
    pub n_minus: usize,
}

impl KhComplex {
    pub fn index_of(&self, rho: u64, labels: u64) -> Option<usize> {
        self.gens.iter().position(|&g| g == (rho, labels))
    }
}

/// [T]^Kh as a complex of projective H^n-modules: right modules for left tangles and left
/// modules for right tangles. Intrinsic grading -(#plus - #minus + r + n_+ - 2n_-) plus
/// 0 (right modules) or -n (left modules); homological grading r - n_-.
pub fn khovanov_complex(alg: &ArcAlgebra, t: &TangleWord) -> Result<KhComplex, TangleError> {
    if alg.n != t.n() {
        return Err(TangleError::Boundary(format!("algebra n = {} but tangle has {} points", alg.n, t.points)));
    }
    let trace = t.trace()?;
    let nc = trace.crossings.len();
    let n_plus = trace.crossings.iter().filter(|c| c.sign > 0).count();
    let n_minus = nc - n_plus;
    let cube = Cube::build(trace.num_segments, t.points, trace, Some(alg))?;
    let side = t.side.flip();
    let shift = if side == Side::Right { 0 } else { -(t.n() as i32) };
    let mut m = ProjComplex::new(t.n(), side);
    let mut gens = Vec::new();
    let mut index = HashMap::new();
    for rho in 0..1u64 << nc {
        let r = rho.count_ones() as i32;
        let nf = cube.res[rho as usize].free.len();
        for labels in 0..1u64 << nf {
            let minus = labels.count_ones() as i32;
            let q = -((nf as i32 - 2 * minus) + r + n_plus as i32 - 2 * n_minus as i32) + shift;
            let g = CGen { idem: cube.matchings[rho as usize].unwrap(), q, h: r - n_minus as i32 };
            index.insert((rho, labels), m.add_gen(g));
            gens.push((rho, labels));
        }
    }
    for (i, &(rho, labels)) in gens.iter().enumerate() {
        let a = cube.matchings[rho as usize].unwrap();
        for c in 0..nc {
            if rho >> c & 1 == 1 {
                continue;
            }
            let rho2 = rho | 1 << c;
            let a2 = cube.matchings[rho2 as usize].unwrap();
            let s = sign_before(rho, c, &|d| d, nc);
            let alpha = |comp: usize| alg.gens[alg.alpha_gen(a, comp + 1)].elem;
            let gamma = if a != a2 {
                let g = if side == Side::Right { alg.gamma_gen(a2, a) } else { alg.gamma_gen(a, a2) };
                Some(alg.gens[g.expect("surgery generator")].elem)
            } else {
                None
            };
            match cube.change(rho, c, labels, &alpha, gamma) {
                Change::Pure(v) => {
                    for (l, coef) in v {
                        m.add_term(i, index[&(rho2, l)], None, s * coef);
                    }
                }
                Change::Weighted(v) => {
                    for (l, w, coef) in v {
                        let wt = if w == usize::MAX { None } else { Some(w) };
                        m.add_term(i, index[&(rho2, l)], wt, s * coef);
                    }
                }
            }
        }
    }
    Ok(KhComplex { complex: m, gens, res: cube.res, n_plus, n_minus })
}

/// Direct Khovanov complex of a closed diagram, with generator data (rho, circle labels).
#[derive(Clone, Debug)]
pub struct DirectCKh {
    pub complex: Complex,
    pub gens: Vec<(u64, u64)>,
    pub res: Vec<Resolved>,
    /// Right-block segment count; left-block segment s is global segment `offset + s`.
    pub offset: usize,
    pub n_plus: usize,
    pub n_minus: usize,
    pub right_crossings: usize,
}

impl DirectCKh {
    pub fn index_of(&self, rho: u64, labels: u64) -> Option<usize> {
        self.gens.iter().position(|&g| g == (rho, labels))
    }
}

impl Link {
    pub fn check(&self) -> Result<(), TangleError> {
        if self.left.points != self.right.points {
            return Err(TangleError::Boundary("point counts differ".into()));
        }
        for p in 0..self.left.points {
            if self.left.incoming[p] == self.right.incoming[p] {
                return Err(TangleError::Boundary(format!("point {} enters (or leaves) both halves", p + 1)));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.left.n()
    }

    pub fn to_text(&self) -> String {
        format!("{}{}", self.left.to_text(), self.right.to_text())
    }
}

/// Global trace: right-block crossings first, then left-block crossings.
fn link_trace(l: &Link) -> Result<(Trace, usize), TangleError> {
    l.check()?;
    let (t1, t2) = (l.right.trace()?, l.left.trace()?);
    let off = t1.num_segments;
    let mut joins = t1.joins.clone();
    joins.extend(t2.joins.iter().map(|&(a, b)| (a + off, b + off)));
    for p in 0..l.left.points {
        joins.push((p, p + off));
    }
    let mut crossings = t1.crossings.clone();
    crossings.extend(t2.crossings.iter().map(|c| CrossingData {
        ins: [c.ins[0] + off, c.ins[1] + off],
        outs: [c.outs[0] + off, c.outs[1] + off],
        ..c.clone()
    }));
    let mut forward = t1.forward.clone();
    forward.extend(t2.forward.iter());
    Ok((Trace { num_segments: off + t2.num_segments, joins, crossings, forward }, off))
}

/// CKh(L) with crossings ordered as right block then left block.
pub fn direct_ckh(l: &Link) -> Result<DirectCKh, TangleError> {
    let nc = l.left.crossing_count() + l.right.crossing_count();
    let order: Vec<usize> = (0..nc).collect();
    direct_ckh_with_order(l, &order)
}

/// CKh(L) with the sign convention taken from the crossing order `order` (a permutation of the
/// default crossing indices); generators are indexed by the default order.
pub fn direct_ckh_with_order(l: &Link, order: &[usize]) -> Result<DirectCKh, TangleError> {
    let (trace, offset) = link_trace(l)?;
    let nc = trace.crossings.len();
    let mut pos = vec![0; nc];
    for (k, &c) in order.iter().enumerate() {
        pos[c] = k;
    }
    let n_plus = trace.crossings.iter().filter(|c| c.sign > 0).count();
    let n_minus = nc - n_plus;
    let nseg = trace.num_segments;
    let cube = Cube::build(nseg, 0, trace, None)?;
    let mut gens = Vec::new();
    let mut degs = Vec::new();
    let mut index = HashMap::new();
    for rho in 0..1u64 << nc {
        let r = rho.count_ones() as i32;
        let nf = cube.res[rho as usize].free.len();
        for labels in 0..1u64 << nf {
            let minus = labels.count_ones() as i32;
            degs.push(Bideg { h: r - n_minus as i32, q: (nf as i32 - 2 * minus) + r + n_plus as i32 - 2 * n_minus as i32 });
            index.insert((rho, labels), gens.len());
            gens.push((rho, labels));
        }
    }
    let mut c = Complex::new(degs);
    let none = |_: usize| -> usize { unreachable!() };
    for (i, &(rho, labels)) in gens.iter().enumerate() {
        for x in 0..nc {
            if rho >> x & 1 == 1 {
                continue;
            }
            let s = sign_before(rho, x, &|d| pos[d], nc);
            match cube.change(rho, x, labels, &none, None) {
                Change::Pure(v) => {
                    for (lab, coef) in v {
                        c.add(i, index[&(rho | 1 << x, lab)], s * coef);
                    }
                }
                Change::Weighted(_) => unreachable!("closed diagram has no arcs"),
            }
        }
    }
    Ok(DirectCKh { complex: c, gens, res: cube.res, offset, n_plus, n_minus, right_crossings: l.right.crossing_count() })
}

/// Sign (-1)^{f(rho)} relating the cube signs of two crossing orders: the parity of pairs of
/// 1-resolved crossings whose relative order differs.
pub fn reorder_sign(rho: u64, order: &[usize]) -> i64 {
    let nc = order.len();
    let mut pos = vec![0; nc];
    for (k, &c) in order.iter().enumerate() {
        pos[c] = k;
    }
    let ones: Vec<usize> = (0..nc).filter(|&c| rho >> c & 1 == 1).collect();
    let mut inv = 0;
    for (x, &a) in ones.iter().enumerate() {
        for &b in &ones[x + 1..] {
            if pos[a] > pos[b] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Canonical signed identification of x_i·h·x'_j (tensor basis of [T2] ⊗ [T1]) with direct
/// CKh generators: resolution (T1's, then T2's), labels from x_i, x'_j and the circles of h,
/// and sign (-1)^{n_-(T1) r(T2)}.
pub fn identification(
    alg: &ArcAlgebra,
    l: &Link,
    m: &KhComplex,
    n: &KhComplex,
    direct: &DirectCKh,
    basis: &[(usize, usize, usize)],
) -> Vec<(usize, i64)> {
    let c1 = l.right.crossing_count();
    let points = l.left.points;
    let off = direct.offset;
    basis
        .iter()
        .map(|&(i, h, j)| {
            let (rho2, lab2) = m.gens[i];
            let (rho1, lab1) = n.gens[j];
            let rho = rho1 | rho2 << c1;
            let r = &direct.res[rho as usize];
            let d = alg.basis[h];
            let mut labels = 0u64;
            for (k, &comp) in r.free.iter().enumerate() {
                // a representative segment of this global circle
                let seg = r.comp.iter().position(|&c| c == comp).unwrap();
                let minus = if seg < points {
                    d.minus >> alg.circle_of(d.a, d.b, seg + 1) & 1 == 1
                } else if seg < off {
                    let res1 = &n.res[rho1 as usize];
                    lab1 >> res1.free_index(res1.comp[seg]).unwrap() & 1 == 1
                } else {
                    let res2 = &m.res[rho2 as usize];
                    lab2 >> res2.free_index(res2.comp[seg - off]).unwrap() & 1 == 1
                };
                if minus {
                    labels |= 1 << k;
                }
            }
            let eps = if (n.n_minus as u32 * rho2.count_ones()) % 2 == 0 { 1 } else { -1 };
            (direct.index_of(rho, labels).expect("identified generator"), eps)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Move {
    /// Kink `cup i+1; x± i; cap i+1` on the strand at position i.
    R1(Kind),
    /// Remove a kink starting at the site.
    R1Inv,
    /// `x+ i; x- i`.
    R2,
    /// Remove an `x+ i; x- i` or `x- i; x+ i` pair.
    R2Inv,
    /// `x i; x i+1; x i` -> `x i+1; x i; x i+1` (all crossings of one kind).
    R3,
}

/// Applies a move at event index `k`, strand position `i` (0-based).
pub fn reidemeister(t: &TangleWord, mv: Move, k: usize, i: usize) -> Result<TangleWord, TangleError> {
    if k > t.events.len() {
        return Err(TangleError::Move(format!("event index {} out of range", k)));
    }
    let strands = t.strands_before(k);
    let mut ev = t.events.clone();
    let bad = |s: &str| Err(TangleError::Move(s.to_string()));
    match mv {
        Move::R1(kind) => {
            if i >= strands {
                return bad("no strand at the site");
            }
            ev.splice(k..k, [Event::Cup(i + 1), Event::Cross(i, kind), Event::Cap(i + 1)]);
        }
        Move::R1Inv => {
            if ev.len() < k + 3 {
                return bad("no kink at the site");
            }
            match (ev[k], ev[k + 1], ev[k + 2]) {
                (Event::Cup(a), Event::Cross(b, _), Event::Cap(c)) if a == i + 1 && b == i && c == i + 1 => {
                    ev.drain(k..k + 3);
                }
                _ => return bad("no kink at the site"),
            }
        }
        Move::R2 => {
            if i + 1 >= strands {
                return bad("R2 needs two strands");
            }
            ev.splice(k..k, [Event::Cross(i, Kind::Pos), Event::Cross(i, Kind::Neg)]);
        }
        Move::R2Inv => match (ev.get(k), ev.get(k + 1)) {
            (Some(Event::Cross(a, x)), Some(Event::Cross(b, y))) if *a == i && *b == i && x != y => {
                ev.drain(k..k + 2);
            }
            _ => return bad("no R2 pair at the site"),
        },
        Move::R3 => match (ev.get(k), ev.get(k + 1), ev.get(k + 2)) {
            (Some(&Event::Cross(a, x)), Some(&Event::Cross(b, y)), Some(&Event::Cross(c, z)))
                if a == i && b == i + 1 && c == i && x == y && y == z =>
            {
                ev[k] = Event::Cross(i + 1, x);
                ev[k + 1] = Event::Cross(i, x);
                ev[k + 2] = Event::Cross(i + 1, x);
            }
            _ => return bad("no braid triple at the site"),
        },
    }
    let out = TangleWord { events: ev, ..t.clone() };
    out.trace()?;
    Ok(out)
}

/// Word with `cup i+1; x+ i; x+ i+1; x+ i; cap i` inserted at event k: a stimulus carrying an
/// R3 site at event k+1.
pub fn r3_stimulus(t: &TangleWord, k: usize, i: usize) -> Result<TangleWord, TangleError> {
    if i >= t.strands_before(k) {
        return Err(TangleError::Move("no strand at the site".into()));
    }
    let mut ev = t.events.clone();
    ev.splice(
        k..k,
        [Event::Cup(i + 1), Event::Cross(i, Kind::Pos), Event::Cross(i + 1, Kind::Pos), Event::Cross(i, Kind::Pos), Event::Cap(i)],
    );
    let out = TangleWord { events: ev, ..t.clone() };
    out.trace()?;
    Ok(out)
}

/// Random valid word with `points` endpoints and at most `max_cross` crossings.
pub fn random_word(rng: &mut impl Rng, side: Side, points: usize, max_cross: usize) -> TangleWord {
    loop {
        let mut events = Vec::new();
        let mut strands = points;
        let mut crosses = 0;
        let mut budget = 12;
        while strands > 0 {
            let r = rng.gen_range(0..10);
            if strands >= 2 && crosses < max_cross && r < 4 {
                events.push(Event::Cross(rng.gen_range(0..strands - 1), if rng.gen_bool(0.5) { Kind::Pos } else { Kind::Neg }));
                crosses += 1;
            } else if budget > 0 && r < 5 && strands < 6 {
                events.push(Event::Cup(rng.gen_range(0..=strands)));
                strands += 2;
            } else {
                events.push(Event::Cap(rng.gen_range(0..strands - 1)));
                strands -= 2;
            }
            budget -= 1;
        }
        let incoming: Vec<bool> = (0..points).map(|_| rng.gen_bool(0.5)).collect();
        let t = TangleWord { side, points, incoming, events };
        // repair orientations: propagate from point 1 of each arc
        if let Ok(t) = orient_consistently(t) {
            return t;
        }
    }
}

/// Random closed diagram with `2n` boundary points and at most `max_cross` crossings per block.
pub fn random_link(rng: &mut impl Rng, n: usize, max_cross: usize) -> Link {
    random_link_bounded(rng, n, max_cross, usize::MAX)
}

/// As [`random_link`], with at most `max_events` events per block.
pub fn random_link_bounded(rng: &mut impl Rng, n: usize, max_cross: usize, max_events: usize) -> Link {
    loop {
        let left = random_word(rng, Side::Left, 2 * n, max_cross);
        let mut right = random_word(rng, Side::Right, 2 * n, max_cross);
        right.incoming = left.incoming.iter().map(|&i| !i).collect();
        let l = Link { left, right };
        let short = l.left.events.len() <= max_events && l.right.events.len() <= max_events;
        if short && l.right.trace().is_ok() && l.check().is_ok() {
            return l;
        }
    }
}

/// Re-chooses boundary orientations so that every arc is consistently oriented.
pub fn orient_consistently(mut t: TangleWord) -> Result<TangleWord, TangleError> {
    for _ in 0..t.points {
        match t.trace() {
            Ok(_) => return Ok(t),
            Err(TangleError::Orientation(_)) => {
                let (_, r) = resolve_ignoring_orientation(&t)?;
                for &(p, q) in &r {
                    let want = !t.incoming[p - 1];
                    t.incoming[q - 1] = want;
                }
            }
            Err(e) => return Err(e),
        }
    }
    t.trace()?;
    Ok(t)
}

/// Through-strand endpoints of a word (pairs of boundary points joined by a strand).
fn resolve_ignoring_orientation(t: &TangleWord) -> Result<((), Vec<(usize, usize)>), TangleError> {
    let mut strands: Vec<usize> = (0..t.points).collect();
    let mut next = t.points;
    let mut joins = Vec::new();
    for e in &t.events {
        match *e {
            Event::Cap(i) => {
                joins.push((strands[i], strands[i + 1]));
                strands.drain(i..i + 2);
            }
            Event::Cup(i) => {
                joins.push((next, next + 1));
                strands.splice(i..i, [next, next + 1]);
                next += 2;
            }
            Event::Cross(i, _) => {
                joins.push((strands[i], next + 1));
                joins.push((strands[i + 1], next));
                strands[i] = next;
                strands[i + 1] = next + 1;
                next += 2;
            }
        }
    }
    Ok(((), resolve_segments(next, t.points, &joins).arcs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn word(s: &str) -> TangleWord {
        parse_tangle(s).unwrap()
    }

    #[test]
    fn single_cap() {
        let t = word("tangle right 2\norient 1 in\norient 2 out\ncap 1");
        let (m, r) = resolve(&t, 0).unwrap();
        assert_eq!(m.to_string(), "[(1,2)]");
        assert!(r.free.is_empty());
    }

    #[test]
    fn crossing_then_cap_resolutions() {
        let t = word("tangle right 4\norient 1 in\norient 2 out\norient 3 out\norient 4 in\nx+ 1; cap 2; cap 1");
        let (m0, r0) = resolve(&t, 0).unwrap();
        let (m1, r1) = resolve(&t, 1).unwrap();
        assert_ne!(m0, m1);
        assert!(r0.free.is_empty() && r1.free.is_empty());
        let mut ms = vec![m0.to_string(), m1.to_string()];
        ms.sort();
        assert_eq!(ms, vec!["[(1,2),(3,4)]", "[(1,4),(2,3)]"]);
    }

    #[test]
    fn bad_words_rejected() {
        assert!(parse_tangle("tangle right 2\norient 1 in\norient 2 in\ncap 1").is_err());
        assert!(parse_tangle("tangle right 2\norient 1 in\norient 2 out\ncap 2").is_err());
        assert!(parse_tangle("tangle right 2\norient 1 in\norient 2 out\nx+ 1").is_err());
    }

    #[test]
    fn r1_round_trip_and_r2_counts() {
        let t = word("tangle right 2\norient 1 in\norient 2 out\ncap 1");
        let t1 = reidemeister(&t, Move::R1(Kind::Pos), 0, 0).unwrap();
        assert_eq!(reidemeister(&t1, Move::R1Inv, 0, 0).unwrap(), t);
        let t4 = word("tangle right 4\norient 1 in\norient 2 in\norient 3 out\norient 4 out\ncap 2; cap 1");
        let (p, m) = t4.crossing_signs().unwrap();
        let t5 = reidemeister(&t4, Move::R2, 0, 0).unwrap();
        assert_eq!(t5.crossing_signs().unwrap(), (p + 1, m + 1));
    }

    fn corpus(name: &str) -> Link {
        let path = format!("{}/../../corpus/{}.link", env!("CARGO_MANIFEST_DIR"), name);
        parse_link(&std::fs::read_to_string(path).unwrap()).unwrap()
    }

    #[test]
    fn corpus_tensor_matches_direct() {
        use crate::hncomplex::tensor_over_hn;
        use crate::zlinalg::complexes_equal_under_identification;
        for name in ["unknot", "hopf", "trefoil"] {
            let l = corpus(name);
            let alg = ArcAlgebra::new(l.n()).unwrap();
            let direct = direct_ckh(&l).unwrap();
            direct.complex.check().unwrap();
            let m = khovanov_complex(&alg, &l.left).unwrap();
            let n = khovanov_complex(&alg, &l.right).unwrap();
            for k in [&m, &n] {
                k.complex.validate(&alg).unwrap();
                k.complex.check_d_squared(&alg).unwrap();
            }
            let (t, basis) = tensor_over_hn(&alg, &m.complex, &n.complex, true).unwrap();
            let ident = identification(&alg, &l, &m, &n, &direct, &basis);
            eprintln!("{}: ranks {:?} homology {:?}", name, direct.complex.ranks_by_h(), direct.complex.homology());
            assert!(complexes_equal_under_identification(&t, &direct.complex, &ident).unwrap(), "{}", name);
        }
    }
}
