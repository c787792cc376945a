//! Crossingless matchings, noncrossing partitions, bridges and surgery.

use itertools::Itertools;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlanarError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("not a perfect matching of 1..{0}")]
    NotPerfect(usize),
    #[error("arcs {0:?} and {1:?} cross")]
    Crossing((usize, usize), (usize, usize)),
    #[error("blocks {0:?} and {1:?} cross")]
    CrossingPartition(Vec<usize>, Vec<usize>),
    #[error("not a partition of 1..{0}")]
    NotPartition(usize),
    #[error("bridge ({0},{1}) is not drawable on this matching")]
    BadBridge(usize, usize),
    #[error("size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("n = {0} exceeds the supported bound {1}")]
    TooLarge(usize, usize),
}

/// Crossingless matching of points 1..2n (bottom to top).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Matching {
    pairs: Vec<(usize, usize)>,
    partner: Vec<usize>,
}

impl Matching {
    pub fn new(n: usize, arcs: &[(usize, usize)]) -> Result<Self, PlanarError> {
        let mut partner = vec![0; 2 * n + 1];
        if arcs.len() != n {
            return Err(PlanarError::NotPerfect(2 * n));
        }
        for &(p, q) in arcs {
            let (p, q) = (p.min(q), p.max(q));
            if p == q || p == 0 || q > 2 * n || partner[p] != 0 || partner[q] != 0 {
                return Err(PlanarError::NotPerfect(2 * n));
            }
            partner[p] = q;
            partner[q] = p;
        }
        let pairs: Vec<(usize, usize)> =
            (1..=2 * n).filter(|&p| p < partner[p]).map(|p| (p, partner[p])).collect();
        for (a, b) in pairs.iter().tuple_combinations() {
            if a.0 < b.0 && b.0 < a.1 && a.1 < b.1 {
                return Err(PlanarError::Crossing(*a, *b));
            }
        }
        Ok(Matching { pairs, partner })
    }

    pub fn n(&self) -> usize {
        self.pairs.len()
    }

    /// Arcs sorted by their lower endpoint.
    pub fn arcs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn partner(&self, p: usize) -> usize {
        self.partner[p]
    }

    /// Index of the arc through point `p`.
    pub fn arc_of(&self, p: usize) -> usize {
        let lo = p.min(self.partner[p]);
        self.pairs.iter().position(|a| a.0 == lo).unwrap()
    }

    /// Innermost arc enclosing the interval between points `lo < hi`, or None for the outer region.
    fn region_of_gap(&self, lo: usize, hi: usize) -> Option<(usize, usize)> {
        self.pairs
            .iter()
            .filter(|&&(p, q)| p <= lo && q >= hi)
            .min_by_key(|&&(p, q)| q - p)
            .copied()
    }

    pub fn parse(s: &str) -> Result<Self, PlanarError> {
        let arcs = parse_pairs(s)?;
        Matching::new(arcs.len(), &arcs)
    }

    /// Whether the bridge (p, q), p < q, can be drawn: distinct arcs and no arc separates p from q.
    pub fn bridge_drawable(&self, p: usize, q: usize) -> bool {
        let two_n = 2 * self.n();
        if p == 0 || q > two_n || p >= q || self.partner[p] == q {
            return false;
        }
        (p + 1..q).all(|r| {
            let s = self.partner[r];
            s > p && s < q
        })
    }
}

impl fmt::Display for Matching {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.pairs.iter().map(|(p, q)| format!("({},{})", p, q)).join(","))
    }
}

impl fmt::Debug for Matching {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn parse_pairs(s: &str) -> Result<Vec<(usize, usize)>, PlanarError> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let inner = t
        .strip_prefix('[')
        .and_then(|x| x.strip_suffix(']'))
        .ok_or_else(|| PlanarError::Parse(format!("expected [..] in {:?}", s)))?;
    if inner.is_empty() {
        return Ok(vec![]);
    }
    let mut out = Vec::new();
    for chunk in inner.split("),") {
        let c = chunk.trim_start_matches('(').trim_end_matches(')');
        let (a, b) = c.split_once(',').ok_or_else(|| PlanarError::Parse(format!("bad pair {:?}", chunk)))?;
        let a = a.parse().map_err(|_| PlanarError::Parse(format!("bad integer {:?}", a)))?;
        let b = b.parse().map_err(|_| PlanarError::Parse(format!("bad integer {:?}", b)))?;
        out.push((a, b));
    }
    Ok(out)
}

/// Noncrossing partition of 1..n, blocks sorted internally and by minimum.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self, PlanarError> {
        let mut blocks: Vec<Vec<usize>> = blocks
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b
            })
            .collect();
        blocks.sort();
        let all: Vec<usize> = blocks.iter().flatten().copied().sorted().collect();
        if all != (1..=n).collect::<Vec<_>>() || blocks.iter().any(|b| b.is_empty()) {
            return Err(PlanarError::NotPartition(n));
        }
        for (a, b) in blocks.iter().tuple_combinations() {
            if blocks_cross(a, b) {
                return Err(PlanarError::CrossingPartition(a.clone(), b.clone()));
            }
        }
        Ok(Partition { n, blocks })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    fn block_index(&self) -> Vec<usize> {
        let mut idx = vec![0; self.n + 1];
        for (k, b) in self.blocks.iter().enumerate() {
            for &i in b {
                idx[i] = k;
            }
        }
        idx
    }

    /// Refinement order: `self <= other` when every block of self lies in a block of other.
    pub fn refines(&self, other: &Partition) -> bool {
        let idx = other.block_index();
        self.blocks.iter().all(|b| b.iter().all(|&i| idx[i] == idx[b[0]]))
    }

    pub fn parse(s: &str) -> Result<Self, PlanarError> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let inner = t
            .strip_prefix('{')
            .and_then(|x| x.strip_suffix('}'))
            .ok_or_else(|| PlanarError::Parse(format!("expected {{..}} in {:?}", s)))?;
        let mut blocks = Vec::new();
        if !inner.is_empty() {
            for chunk in inner.split("},") {
                let c = chunk.trim_start_matches('{').trim_end_matches('}');
                let b: Result<Vec<usize>, _> = c.split(',').map(|x| x.parse::<usize>()).collect();
                blocks.push(b.map_err(|_| PlanarError::Parse(format!("bad block {:?}", chunk)))?);
            }
        }
        let n = blocks.iter().map(|b| b.len()).sum();
        Partition::new(n, blocks)
    }
}

fn blocks_cross(a: &[usize], b: &[usize]) -> bool {
    a.iter().tuple_combinations().any(|(&a1, &a2)| {
        b.iter().tuple_combinations().any(|(&b1, &b2)| {
            let (x1, x2) = (a1.min(a2), a1.max(a2));
            let (y1, y2) = (b1.min(b2), b1.max(b2));
            (x1 < y1 && y1 < x2 && x2 < y2) || (y1 < x1 && x1 < y2 && y2 < x2)
        })
    })
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.blocks.iter().map(|b| format!("{{{}}}", b.iter().join(","))).join(","))
    }
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

pub const MAX_ENUM_N: usize = 8;

/// All crossingless matchings of 2n points in lexicographic order.
pub fn enumerate_matchings(n: usize) -> Result<Vec<Matching>, PlanarError> {
    if n > MAX_ENUM_N {
        return Err(PlanarError::TooLarge(n, MAX_ENUM_N));
    }
    fn rec(lo: usize, hi: usize) -> Vec<Vec<(usize, usize)>> {
        if lo > hi {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        let mut q = lo + 1;
        while q <= hi {
            for inner in rec(lo + 1, q - 1) {
                for outer in rec(q + 1, hi) {
                    let mut v = vec![(lo, q)];
                    v.extend(inner.iter().copied());
                    v.extend(outer.iter().copied());
                    out.push(v);
                }
            }
            q += 2;
        }
        out
    }
    let mut all: Vec<Matching> = rec(1, 2 * n).iter().map(|arcs| Matching::new(n, arcs).unwrap()).collect();
    all.sort();
    Ok(all)
}

/// All noncrossing partitions of 1..n, sorted.
pub fn enumerate_partitions(n: usize) -> Result<Vec<Partition>, PlanarError> {
    let mut v: Vec<Partition> = enumerate_matchings(n)?.iter().map(matching_to_partition).collect();
    v.sort();
    Ok(v)
}

/// Segments (2i-1, 2i) grouped by the region of the matching they lie in.
pub fn matching_to_partition(m: &Matching) -> Partition {
    let n = m.n();
    let mut groups: BTreeMap<Option<(usize, usize)>, Vec<usize>> = BTreeMap::new();
    for i in 1..=n {
        groups.entry(m.region_of_gap(2 * i - 1, 2 * i)).or_default().push(i);
    }
    Partition::new(n, groups.into_values().collect()).expect("regions give a noncrossing partition")
}

/// Inverse of `matching_to_partition`.
pub fn partition_to_matching(p: &Partition) -> Matching {
    let mut arcs = Vec::new();
    for b in p.blocks() {
        for (&x, &y) in b.iter().tuple_windows() {
            arcs.push((2 * x, 2 * y - 1));
        }
        arcs.push((2 * b[0] - 1, 2 * b[b.len() - 1]));
    }
    Matching::new(p.n(), &arcs).expect("noncrossing blocks give a crossingless matching")
}

/// Kreweras complement: regions of `partition_to_matching(p)` containing the segments
/// (2i, 2i+1) for i < n, with the outer segment labelled n.
pub fn kreweras_dual(p: &Partition) -> Partition {
    let m = partition_to_matching(p);
    let n = p.n();
    let mut groups: BTreeMap<Option<(usize, usize)>, Vec<usize>> = BTreeMap::new();
    for i in 1..n {
        groups.entry(m.region_of_gap(2 * i, 2 * i + 1)).or_default().push(i);
    }
    groups.entry(None).or_default().push(n);
    Partition::new(n, groups.into_values().collect()).expect("white regions form a noncrossing partition")
}

/// Result of surgery on a bridge (p, q).
pub fn surger(a: &Matching, bridge: (usize, usize)) -> Result<Matching, PlanarError> {
    let (p, q) = (bridge.0.min(bridge.1), bridge.0.max(bridge.1));
    if !a.bridge_drawable(p, q) {
        return Err(PlanarError::BadBridge(p, q));
    }
    let (pp, qq) = (a.partner(p), a.partner(q));
    let arcs: Vec<(usize, usize)> = a
        .arcs()
        .iter()
        .copied()
        .filter(|&(x, y)| x != p && y != p && x != q && y != q)
        .chain([(p, q), (pp.min(qq), pp.max(qq))])
        .collect();
    Matching::new(a.n(), &arcs)
}

/// Bridges on `a` up to identification by surgery result; each given by its smallest drawable (p, q).
pub fn bridges(a: &Matching) -> Vec<(usize, usize)> {
    let two_n = 2 * a.n();
    let mut by_result: BTreeMap<Matching, (usize, usize)> = BTreeMap::new();
    for p in 1..=two_n {
        for q in p + 1..=two_n {
            if a.bridge_drawable(p, q) {
                let r = surger(a, (p, q)).unwrap();
                by_result.entry(r).or_insert((p, q));
            }
        }
    }
    by_result.into_values().sorted().collect()
}

/// The bridge on `surger(a, gamma)` whose surgery returns `a`.
pub fn dual_bridge(a: &Matching, gamma: (usize, usize)) -> Result<(usize, usize), PlanarError> {
    let a2 = surger(a, gamma)?;
    Ok(bridges(&a2)
        .into_iter()
        .find(|&g| surger(&a2, g).as_ref() == Ok(a))
        .expect("surgery is reversible"))
}

/// Cover graph of the refinement order on NC_n. Edges (i, j) with `vertices[i] < vertices[j]`.
#[derive(Clone, Debug)]
pub struct HasseGraph {
    pub vertices: Vec<Partition>,
    pub edges: Vec<(usize, usize)>,
}

impl HasseGraph {
    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| if a == v { Some(b) } else if b == v { Some(a) } else { None })
            .collect()
    }

    pub fn index_of(&self, p: &Partition) -> Option<usize> {
        self.vertices.binary_search(p).ok()
    }

    /// BFS distances from `src`.
    pub fn distances(&self, src: usize) -> Vec<usize> {
        let adj = self.adjacency();
        let mut dist = vec![usize::MAX; self.vertices.len()];
        dist[src] = 0;
        let mut queue = VecDeque::from([src]);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }
}

pub fn hasse_graph(n: usize) -> Result<HasseGraph, PlanarError> {
    let vertices = enumerate_partitions(n)?;
    let k = vertices.len();
    let mut below = vec![vec![false; k]; k];
    for i in 0..k {
        for j in 0..k {
            below[i][j] = i != j && vertices[i].refines(&vertices[j]);
        }
    }
    let mut edges = Vec::new();
    for i in 0..k {
        for j in 0..k {
            if below[i][j] && !(0..k).any(|r| below[i][r] && below[r][j]) {
                edges.push((i, j));
            }
        }
    }
    Ok(HasseGraph { vertices, edges })
}

/// Shortest paths between p and q in the Hasse graph, with classes under single-vertex moves.
#[derive(Clone, Debug)]
pub struct GeodesicGraph {
    pub paths: Vec<Vec<usize>>,
    /// `component[i]` is the class of `paths[i]`.
    pub component: Vec<usize>,
    pub num_components: usize,
}

pub fn geodesic_graph(h: &HasseGraph, p: usize, q: usize) -> GeodesicGraph {
    let from_p = h.distances(p);
    let to_q = h.distances(q);
    let total = from_p[q];
    let adj = h.adjacency();
    let mut paths = Vec::new();
    if total != usize::MAX {
        let mut stack = vec![vec![p]];
        while let Some(path) = stack.pop() {
            let v = *path.last().unwrap();
            if v == q {
                paths.push(path);
                continue;
            }
            for &w in adj[v].iter().rev() {
                if from_p[w] == path.len() && to_q[w] == total - path.len() {
                    let mut np = path.clone();
                    np.push(w);
                    stack.push(np);
                }
            }
        }
    }
    paths.sort();
    let mut parent: Vec<usize> = (0..paths.len()).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        let mut y = x;
        while parent[y] != r {
            let next = parent[y];
            parent[y] = r;
            y = next;
        }
        r
    }
    for pos in 1..total {
        let mut seen: HashMap<Vec<usize>, usize> = HashMap::new();
        for (i, path) in paths.iter().enumerate() {
            let mut key = path.clone();
            key[pos] = usize::MAX;
            match seen.get(&key) {
                Some(&j) => {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a] = b;
                }
                None => {
                    seen.insert(key, i);
                }
            }
        }
    }
    let roots: Vec<usize> = (0..paths.len()).map(|i| find(&mut parent, i)).collect();
    let labels: BTreeMap<usize, usize> =
        roots.iter().copied().collect::<BTreeSet<_>>().into_iter().enumerate().map(|(k, r)| (r, k)).collect();
    let component: Vec<usize> = roots.iter().map(|r| labels[r]).collect();
    GeodesicGraph { paths, num_components: labels.len(), component }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(s: &str) -> Matching {
        Matching::parse(s).unwrap()
    }

    fn brute_count(n: usize) -> usize {
        // backtracking over all perfect matchings, filtering crossings
        fn rec(free: &mut Vec<usize>, arcs: &mut Vec<(usize, usize)>, n: usize, count: &mut usize) {
            if free.is_empty() {
                if Matching::new(n, arcs).is_ok() {
                    *count += 1;
                }
                return;
            }
            let p = free.remove(0);
            for k in 0..free.len() {
                let q = free.remove(k);
                arcs.push((p, q));
                rec(free, arcs, n, count);
                arcs.pop();
                free.insert(k, q);
            }
            free.insert(0, p);
        }
        let mut free: Vec<usize> = (1..=2 * n).collect();
        let mut count = 0;
        rec(&mut free, &mut vec![], n, &mut count);
        count
    }

    #[test]
    fn catalan_counts() {
        let counts: Vec<usize> = (1..=4).map(|n| enumerate_matchings(n).unwrap().len()).collect();
        assert_eq!(counts, vec![1, 2, 5, 14]);
        for n in 1..=4 {
            assert_eq!(brute_count(n), counts[n - 1]);
        }
    }

    #[test]
    fn partition_examples() {
        assert_eq!(matching_to_partition(&m("[(1,2),(3,4)]")).to_string(), "{{1},{2}}");
        assert_eq!(matching_to_partition(&m("[(1,4),(2,3)]")).to_string(), "{{1,2}}");
    }

    #[test]
    fn surgery_example() {
        assert_eq!(surger(&m("[(1,2),(3,4)]"), (2, 3)).unwrap(), m("[(1,4),(2,3)]"));
        assert!(surger(&m("[(1,2),(3,4)]"), (1, 2)).is_err());
    }

    #[test]
    fn roundtrip_and_dual() {
        for n in 1..=6 {
            let ms = enumerate_matchings(n).unwrap();
            let ps: BTreeSet<Partition> = ms.iter().map(matching_to_partition).collect();
            assert_eq!(ps.len(), ms.len());
            for a in &ms {
                assert_eq!(&partition_to_matching(&matching_to_partition(a)), a);
            }
            let all: Vec<Partition> = ps.into_iter().collect();
            let duals: BTreeSet<Partition> = all.iter().map(kreweras_dual).collect();
            assert_eq!(duals.len(), all.len());
            if n <= 5 {
                for p in &all {
                    for q in &all {
                        assert_eq!(p.refines(q), kreweras_dual(q).refines(&kreweras_dual(p)));
                    }
                }
            }
        }
    }

    #[test]
    fn hasse_small() {
        let h1 = hasse_graph(1).unwrap();
        assert_eq!((h1.vertices.len(), h1.edges.len()), (1, 0));
        let h2 = hasse_graph(2).unwrap();
        assert_eq!((h2.vertices.len(), h2.edges.len()), (2, 1));
        let h3 = hasse_graph(3).unwrap();
        let fine = h3.index_of(&Partition::parse("{{1},{2},{3}}").unwrap()).unwrap();
        let coarse = h3.index_of(&Partition::parse("{{1,2,3}}").unwrap()).unwrap();
        let g = geodesic_graph(&h3, fine, coarse);
        assert_eq!(g.paths.len(), 3);
        assert_eq!(g.num_components, 1);
    }

    #[test]
    fn bridges_are_reversible() {
        for n in 1..=4 {
            for a in enumerate_matchings(n).unwrap() {
                for g in bridges(&a) {
                    let d = dual_bridge(&a, g).unwrap();
                    assert_eq!(surger(&surger(&a, g).unwrap(), d).unwrap(), a);
                }
            }
        }
    }
}
