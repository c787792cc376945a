//! Exact integer linear algebra: Smith normal form, kernels, solving, homology.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Dense integer matrix, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<BigInt>,
}

impl ZMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ZMatrix { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = BigInt::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "ragged matrix");
            for (j, &v) in r.iter().enumerate() {
                m.data[i * cols + j] = BigInt::from(v);
            }
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.cols + j] = v;
    }

    pub fn add_at(&mut self, i: usize, j: usize, v: i64) {
        self.data[i * self.cols + j] += v;
    }

    pub fn mul(&self, other: &ZMatrix) -> ZMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = ZMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        out.data[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for i in 0..self.rows {
                self.data.swap(i * self.cols + a, i * self.cols + b);
            }
        }
    }

    /// row[dst] += k * row[src]
    fn add_row(&mut self, dst: usize, src: usize, k: &BigInt) {
        if k.is_zero() {
            return;
        }
        for j in 0..self.cols {
            let v = &self.data[src * self.cols + j] * k;
            if !v.is_zero() {
                self.data[dst * self.cols + j] += v;
            }
        }
    }

    /// col[dst] += k * col[src]
    fn add_col(&mut self, dst: usize, src: usize, k: &BigInt) {
        if k.is_zero() {
            return;
        }
        for i in 0..self.rows {
            let v = &self.data[i * self.cols + src] * k;
            if !v.is_zero() {
                self.data[i * self.cols + dst] += v;
            }
        }
    }

    fn negate_row(&mut self, r: usize) {
        for j in 0..self.cols {
            let v = -&self.data[r * self.cols + j];
            self.data[r * self.cols + j] = v;
        }
    }

    /// Replace rows (a, b) by (p a + q b, r a + s b).
    fn combine_rows(&mut self, a: usize, b: usize, p: &BigInt, q: &BigInt, r: &BigInt, s: &BigInt) {
        for j in 0..self.cols {
            let x = self.data[a * self.cols + j].clone();
            let y = self.data[b * self.cols + j].clone();
            self.data[a * self.cols + j] = p * &x + q * &y;
            self.data[b * self.cols + j] = r * x + s * y;
        }
    }

    fn combine_cols(&mut self, a: usize, b: usize, p: &BigInt, q: &BigInt, r: &BigInt, s: &BigInt) {
        for i in 0..self.rows {
            let x = self.data[i * self.cols + a].clone();
            let y = self.data[i * self.cols + b].clone();
            self.data[i * self.cols + a] = p * &x + q * &y;
            self.data[i * self.cols + b] = r * x + s * y;
        }
    }
}

/// Result of a Smith normal form computation: `u * m * v = d`.
#[derive(Clone, Debug)]
pub struct Snf {
    /// Nonzero invariant factors, positive, each dividing the next.
    pub factors: Vec<BigInt>,
    pub u: Option<ZMatrix>,
    pub v: Option<ZMatrix>,
}

impl Snf {
    pub fn rank(&self) -> usize {
        self.factors.len()
    }
}

/// Smith normal form. With `track`, also returns unimodular `u`, `v` with `u m v = diag`.
pub fn smith_normal_form(m: &ZMatrix, track: bool) -> Snf {
    let mut a = m.clone();
    let (rows, cols) = (a.rows, a.cols);
    let mut u = if track { Some(ZMatrix::identity(rows)) } else { None };
    let mut v = if track { Some(ZMatrix::identity(cols)) } else { None };
    let mut t = 0;
    while t < rows.min(cols) {
        // pivot: smallest nonzero absolute value in the remaining block
        let mut best: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                let x = a.get(i, j);
                if !x.is_zero() && best.map_or(true, |(bi, bj)| x.abs() < a.get(bi, bj).abs()) {
                    best = Some((i, j));
                    if x.abs().is_one() {
                        break;
                    }
                }
            }
            if best.map_or(false, |(bi, bj)| a.get(bi, bj).abs().is_one()) {
                break;
            }
        }
        let Some((pi, pj)) = best else { break };
        a.swap_rows(t, pi);
        a.swap_cols(t, pj);
        if let Some(u) = u.as_mut() {
            u.swap_rows(t, pi);
        }
        if let Some(v) = v.as_mut() {
            v.swap_cols(t, pj);
        }
        loop {
            let mut changed = false;
            // clear column t below the pivot
            for i in t + 1..rows {
                if a.get(i, t).is_zero() {
                    continue;
                }
                let p = a.get(t, t).clone();
                let x = a.get(i, t).clone();
                if (&x % &p).is_zero() {
                    let k = -(&x / &p);
                    a.add_row(i, t, &k);
                    if let Some(u) = u.as_mut() {
                        u.add_row(i, t, &k);
                    }
                } else {
                    let eg = p.extended_gcd(&x);
                    let (g, s, r) = (eg.gcd, eg.x, eg.y);
                    let (pa, xa) = (&p / &g, &x / &g);
                    let nxa = -xa;
                    a.combine_rows(t, i, &s, &r, &nxa, &pa);
                    if let Some(u) = u.as_mut() {
                        u.combine_rows(t, i, &s, &r, &nxa, &pa);
                    }
                    changed = true;
                }
            }
            // clear row t right of the pivot
            for j in t + 1..cols {
                if a.get(t, j).is_zero() {
                    continue;
                }
                let p = a.get(t, t).clone();
                let x = a.get(t, j).clone();
                if (&x % &p).is_zero() {
                    let k = -(&x / &p);
                    a.add_col(j, t, &k);
                    if let Some(v) = v.as_mut() {
                        v.add_col(j, t, &k);
                    }
                } else {
                    let eg = p.extended_gcd(&x);
                    let (g, s, r) = (eg.gcd, eg.x, eg.y);
                    let (pa, xa) = (&p / &g, &x / &g);
                    let nxa = -xa;
                    a.combine_cols(t, j, &s, &r, &nxa, &pa);
                    if let Some(v) = v.as_mut() {
                        v.combine_cols(t, j, &s, &r, &nxa, &pa);
                    }
                    changed = true;
                }
            }
            if changed {
                continue;
            }
            // divisibility: pivot must divide the remaining block
            let p = a.get(t, t).clone();
            let mut bad = None;
            'scan: for i in t + 1..rows {
                for j in t + 1..cols {
                    if !(a.get(i, j) % &p).is_zero() {
                        bad = Some(i);
                        break 'scan;
                    }
                }
            }
            match bad {
                Some(i) => {
                    let one = BigInt::one();
                    a.add_row(t, i, &one);
                    if let Some(u) = u.as_mut() {
                        u.add_row(t, i, &one);
                    }
                }
                None => break,
            }
        }
        if a.get(t, t).is_negative() {
            a.negate_row(t);
            if let Some(u) = u.as_mut() {
                u.negate_row(t);
            }
        }
        t += 1;
    }
    let factors = (0..t).map(|i| a.get(i, i).clone()).collect();
    Snf { factors, u, v }
}

pub fn rank(m: &ZMatrix) -> usize {
    smith_normal_form(m, false).rank()
}

/// Z-basis of the kernel `{x : m x = 0}`.
pub fn kernel_basis(m: &ZMatrix) -> Vec<Vec<BigInt>> {
    let snf = smith_normal_form(m, true);
    let r = snf.rank();
    let v = snf.v.unwrap();
    (r..m.cols).map(|j| (0..m.cols).map(|i| v.get(i, j).clone()).collect()).collect()
}

/// Integer solution of `m x = b`, if one exists.
pub fn solve(m: &ZMatrix, b: &[BigInt]) -> Option<Vec<BigInt>> {
    assert_eq!(b.len(), m.rows);
    let snf = smith_normal_form(m, true);
    let r = snf.rank();
    let factors = snf.factors;
    let (u, v) = (snf.u.unwrap(), snf.v.unwrap());
    let mut ub = vec![BigInt::zero(); m.rows];
    for i in 0..m.rows {
        for k in 0..m.rows {
            let c = u.get(i, k);
            if !c.is_zero() && !b[k].is_zero() {
                ub[i] += c * &b[k];
            }
        }
    }
    if ub[r..].iter().any(|x| !x.is_zero()) {
        return None;
    }
    let mut y = vec![BigInt::zero(); m.cols];
    for i in 0..r {
        if !(&ub[i] % &factors[i]).is_zero() {
            return None;
        }
        y[i] = &ub[i] / &factors[i];
    }
    let mut x = vec![BigInt::zero(); m.cols];
    for i in 0..m.cols {
        for k in 0..r {
            let c = v.get(i, k);
            if !c.is_zero() && !y[k].is_zero() {
                x[i] += c * &y[k];
            }
        }
    }
    Some(x)
}

/// True when `m` is square with determinant ±1.
pub fn is_unimodular(m: &ZMatrix) -> bool {
    m.rows == m.cols && {
        let snf = smith_normal_form(m, false);
        snf.rank() == m.rows && snf.factors.iter().all(|f| f.is_one())
    }
}

pub fn to_i64(x: &BigInt) -> i64 {
    x.to_i64().expect("coefficient exceeds i64")
}

/// Bigrading (homological, quantum) of a generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Bideg {
    pub h: i32,
    pub q: i32,
}

/// Free bigraded chain complex over Z; `d[i]` lists the image of generator `i`.
#[derive(Clone, Debug, Default)]
pub struct Complex {
    pub gens: Vec<Bideg>,
    pub d: Vec<Vec<(usize, i64)>>,
}

/// One nonzero homology group.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HomologyGroup {
    pub h: i32,
    pub q: i32,
    pub free: usize,
    pub torsion: Vec<u64>,
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum ComplexError {
    #[error("differential of generator {0} does not raise h by 1 and preserve q (target {1})")]
    Grading(usize, usize),
    #[error("d^2 is nonzero on generator {0}")]
    NotSquareZero(usize),
    #[error("identification is not a bijection")]
    NotBijection,
}

impl Complex {
    pub fn new(gens: Vec<Bideg>) -> Self {
        let d = vec![Vec::new(); gens.len()];
        Complex { gens, d }
    }

    /// Add `c * x_j` to `d(x_i)`.
    pub fn add(&mut self, i: usize, j: usize, c: i64) {
        if c == 0 {
            return;
        }
        if let Some(e) = self.d[i].iter_mut().find(|e| e.0 == j) {
            e.1 = e.1.checked_add(c).expect("coefficient overflow");
        } else {
            self.d[i].push((j, c));
        }
        self.d[i].retain(|e| e.1 != 0);
    }

    pub fn check(&self) -> Result<(), ComplexError> {
        for (i, row) in self.d.iter().enumerate() {
            for &(j, _) in row {
                let (a, b) = (self.gens[i], self.gens[j]);
                if b.h != a.h + 1 || b.q != a.q {
                    return Err(ComplexError::Grading(i, j));
                }
            }
        }
        for i in 0..self.gens.len() {
            let mut acc: BTreeMap<usize, i64> = BTreeMap::new();
            for &(j, c) in &self.d[i] {
                for &(k, e) in &self.d[j] {
                    *acc.entry(k).or_default() += c * e;
                }
            }
            if acc.values().any(|&v| v != 0) {
                return Err(ComplexError::NotSquareZero(i));
            }
        }
        Ok(())
    }

    /// Map from bidegree to the generator indices in that bidegree.
    pub fn by_degree(&self) -> BTreeMap<Bideg, Vec<usize>> {
        let mut m: BTreeMap<Bideg, Vec<usize>> = BTreeMap::new();
        for (i, g) in self.gens.iter().enumerate() {
            m.entry(*g).or_default().push(i);
        }
        m
    }

    /// Matrix of `d` from bidegree `(h, q)` to `(h + 1, q)`.
    fn block(&self, groups: &BTreeMap<Bideg, Vec<usize>>, src: Bideg) -> ZMatrix {
        let tgt = Bideg { h: src.h + 1, q: src.q };
        let empty = Vec::new();
        let s = groups.get(&src).unwrap_or(&empty);
        let t = groups.get(&tgt).unwrap_or(&empty);
        let pos: BTreeMap<usize, usize> = t.iter().enumerate().map(|(k, &g)| (g, k)).collect();
        let mut m = ZMatrix::zeros(t.len(), s.len());
        for (c, &g) in s.iter().enumerate() {
            for &(j, v) in &self.d[g] {
                let r = *pos.get(&j).expect("differential leaves bidegree");
                m.add_at(r, c, v);
            }
        }
        m
    }

    /// Integral homology, one entry per nonzero bidegree, sorted by (h, q).
    pub fn homology(&self) -> Vec<HomologyGroup> {
        let groups = self.by_degree();
        let mut out = Vec::new();
        for (&deg, gens) in &groups {
            let out_snf = smith_normal_form(&self.block(&groups, deg), false);
            let prev = Bideg { h: deg.h - 1, q: deg.q };
            let in_snf = smith_normal_form(&self.block(&groups, prev), false);
            let free = gens.len() - out_snf.rank() - in_snf.rank();
            let torsion: Vec<u64> = in_snf
                .factors
                .iter()
                .filter(|f| !f.is_one())
                .map(|f| f.to_u64().expect("torsion order exceeds u64"))
                .collect();
            if free > 0 || !torsion.is_empty() {
                out.push(HomologyGroup { h: deg.h, q: deg.q, free, torsion });
            }
        }
        out
    }

    /// Generator counts per homological degree.
    pub fn ranks_by_h(&self) -> BTreeMap<i32, usize> {
        let mut m = BTreeMap::new();
        for g in &self.gens {
            *m.entry(g.h).or_insert(0) += 1;
        }
        m
    }

    /// Euler characteristic per q: sum over h of (-1)^h rank.
    pub fn euler(&self) -> BTreeMap<i32, i64> {
        let mut m = BTreeMap::new();
        for g in &self.gens {
            *m.entry(g.q).or_insert(0) += if g.h.rem_euclid(2) == 0 { 1 } else { -1 };
        }
        m.retain(|_, v| *v != 0);
        m
    }
}

/// True iff `x_k -> sign_k * y_{map_k}` (with `map[k] = (index, sign)`) is an isomorphism of
/// bigraded complexes from `c1` to `c2`.
pub fn complexes_equal_under_identification(c1: &Complex, c2: &Complex, map: &[(usize, i64)]) -> Result<bool, ComplexError> {
    if map.len() != c1.gens.len() || c1.gens.len() != c2.gens.len() {
        return Err(ComplexError::NotBijection);
    }
    let mut seen = vec![false; c2.gens.len()];
    for &(j, s) in map {
        if j >= seen.len() || seen[j] || s.abs() != 1 {
            return Err(ComplexError::NotBijection);
        }
        seen[j] = true;
    }
    for (k, &(j, _)) in map.iter().enumerate() {
        if c1.gens[k] != c2.gens[j] {
            return Ok(false);
        }
    }
    for (k, &(j, s)) in map.iter().enumerate() {
        let mut img: BTreeMap<usize, i64> = BTreeMap::new();
        for &(t, c) in &c1.d[k] {
            *img.entry(map[t].0).or_insert(0) += c * map[t].1;
        }
        img.retain(|_, v| *v != 0);
        let mut want: BTreeMap<usize, i64> = BTreeMap::new();
        for &(t, c) in &c2.d[j] {
            *want.entry(t).or_insert(0) += c * s;
        }
        want.retain(|_, v| *v != 0);
        if img != want {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Graded Euler characteristic of a homology list.
pub fn homology_euler(hs: &[HomologyGroup]) -> BTreeMap<i32, i64> {
    let mut m = BTreeMap::new();
    for g in hs {
        *m.entry(g.q).or_insert(0) += if g.h.rem_euclid(2) == 0 { g.free as i64 } else { -(g.free as i64) };
    }
    m.retain(|_, v| *v != 0);
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(m: &[Vec<i64>]) -> Vec<i64> {
        smith_normal_form(&ZMatrix::from_rows(m), false).factors.iter().map(to_i64).collect()
    }

    #[test]
    fn snf_small() {
        assert_eq!(diag(&[vec![2, 4], vec![6, 8]]), vec![2, 4]);
        assert_eq!(diag(&[vec![2, 0], vec![0, 3]]), vec![1, 6]);
        assert_eq!(diag(&[vec![0, 0], vec![0, 0]]), Vec::<i64>::new());
    }

    #[test]
    fn snf_transforms() {
        let m = ZMatrix::from_rows(&[vec![2, 4, 4], vec![-6, 6, 12], vec![10, -4, -16]]);
        let snf = smith_normal_form(&m, true);
        let d = snf.u.as_ref().unwrap().mul(&m).mul(snf.v.as_ref().unwrap());
        assert_eq!(snf.factors.iter().map(to_i64).collect::<Vec<_>>(), vec![2, 6, 12]);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { snf.factors[i].clone() } else { BigInt::zero() };
                assert_eq!(d.get(i, j), &want);
            }
        }
    }

    #[test]
    fn kernel_and_solve() {
        let m = ZMatrix::from_rows(&[vec![1, 2, 3], vec![2, 4, 6]]);
        let k = kernel_basis(&m);
        assert_eq!(k.len(), 2);
        let b = vec![BigInt::from(3), BigInt::from(6)];
        let x = solve(&m, &b).unwrap();
        let s: BigInt = x[0].clone() + &x[1] * 2 + &x[2] * 3;
        assert_eq!(s, BigInt::from(3));
        let m2 = ZMatrix::from_rows(&[vec![2]]);
        assert!(solve(&m2, &[BigInt::from(1)]).is_none());
    }

    #[test]
    fn homology_of_rp2_like() {
        // Z --2--> Z gives torsion Z/2 in degree 1
        let mut c = Complex::new(vec![Bideg { h: 0, q: 0 }, Bideg { h: 1, q: 0 }]);
        c.add(0, 1, 2);
        c.check().unwrap();
        let h = c.homology();
        assert_eq!(h, vec![HomologyGroup { h: 1, q: 0, free: 0, torsion: vec![2] }]);
    }
}
