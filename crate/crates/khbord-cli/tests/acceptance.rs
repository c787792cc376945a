//! Acceptance criteria 1 to 9, one PASS/FAIL line each.

use khbord::arcalg::ArcAlgebra;
use khbord::bordered::{halves, reidemeister_check, tetrahedron_actions, type_a_roberts, Algebras, Method, RMove};
use khbord::planar::enumerate_matchings;
use khbord::tangles::{direct_ckh, parse_link, Link};
use khbord::zlinalg::{smith_normal_form, ZMatrix};
use khbord_cli::{
    cmd_matchings, dd_checks, hn_presentation, move_blocks, roberts_presentation, run_methods, suite_dsq, CORPUS,
};
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::Write;
use std::time::{Duration, Instant};

struct Line {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
}

fn corpus(name: &str) -> Link {
    let text = CORPUS.iter().find(|c| c.0 == name).unwrap().1;
    parse_link(text).unwrap()
}

fn c1() -> (bool, String) {
    let t = Instant::now();
    let counts: Vec<usize> = (1..=5).map(|n| enumerate_matchings(n).unwrap().len()).collect();
    let ok = counts == [1, 2, 5, 14, 42] && t.elapsed() < Duration::from_secs(1);
    (ok, format!("|B^n| = {:?}", counts))
}

fn c2() -> (bool, String) {
    let t = Instant::now();
    let mut ok = true;
    let mut pairs = 0;
    for n in 1..=5 {
        let out = cmd_matchings(n).unwrap();
        ok &= out.pass;
        pairs += out.report["pairs_checked"].as_u64().unwrap();
    }
    ok &= t.elapsed() < Duration::from_secs(120);
    (ok, format!("{} pairs, all geodesic graphs connected: {}", pairs, ok))
}

fn c3() -> (bool, String) {
    let mut ok = true;
    let mut detail = Vec::new();
    for n in 1..=3 {
        let t = Instant::now();
        let (pass, v) = hn_presentation(n).unwrap();
        let h = ArcAlgebra::new(n).unwrap();
        let k = h.num_idempotents();
        let circle_sum: usize = (0..k).flat_map(|a| (0..k).map(move |b| (a, b))).map(|(a, b)| 1usize << h.circles(a, b).len()).sum();
        let rank_ok = v["normal_form_rank"].as_u64() == Some(circle_sum as u64);
        ok &= pass && rank_ok && (n < 3 || t.elapsed() < Duration::from_secs(300));
        detail.push(format!("n={} rank {} = Σ2^#circles {}", n, v["normal_form_rank"], circle_sum));
    }
    (ok, detail.join("; "))
}

fn c4() -> (bool, String) {
    let mut ok = true;
    let mut detail = Vec::new();
    for n in 1..=2 {
        let (pass, v) = roberts_presentation(n, false).unwrap();
        ok &= pass && v["graph_classified"] == true;
        detail.push(format!("n={} gens {} shapes {}", n, v["generators"], v["graph_shapes"]));
    }
    (ok, detail.join("; "))
}

fn c5() -> (bool, String) {
    let t = Instant::now();
    let mut ok = true;
    let mut count = 0;
    for n in 1..=2 {
        let (pass, v) = dd_checks(n, false).unwrap();
        ok &= pass;
        count += v["structures"].as_array().unwrap().len();
    }
    ok &= t.elapsed() < Duration::from_secs(300);
    (ok, format!("{} DD structures checked at n = 1, 2", count))
}

fn c6() -> (bool, String) {
    let mut ok = true;
    let mut detail = Vec::new();
    for name in ["unknot", "hopf", "trefoil"] {
        let l = corpus(name);
        for m in [Method::TensorHn, Method::BoxHn, Method::BoxProduct, Method::BoxGamma] {
            let t = Instant::now();
            let rows = run_methods(&l, &[m], false).unwrap();
            ok &= rows[0].2 && t.elapsed() < Duration::from_secs(120);
        }
        detail.push(format!("{} ({} gens)", name, direct_ckh(&l).unwrap().complex.gens.len()));
    }
    (ok, format!("pipelines (a)-(d) match direct CKh on {}", detail.join(", ")))
}

fn c7() -> (bool, String) {
    let mut ok = true;
    let mut checks = 0;
    let (mut actions, mut f2) = (0, 0);
    for (name, _) in CORPUS {
        let l = corpus(name);
        let algs = Algebras::new(l.n(), true).unwrap();
        for block in move_blocks(&l) {
            for mv in RMove::ALL {
                match reidemeister_check(&l, block, mv, &algs) {
                    Ok(r) => {
                        ok &= r.homology_equal && r.reduced_homology_equal;
                        actions += r.tetra_actions_nonzero;
                        f2 += r.tetra_f2_nonzero;
                    }
                    Err(e) => {
                        eprintln!("{} {:?} {}: {}", name, block, mv.name(), e);
                        ok = false;
                    }
                }
                checks += 1;
            }
        }
    }
    // a + c on a tangle where the tetrahedron words act nonzero
    let algs = Algebras::new(3, true).unwrap();
    let q = algs.product(true).unwrap();
    let (m, _) = halves(&algs.h, &corpus("tetra3")).unwrap();
    let t = tetrahedron_actions(q, &type_a_roberts(q, &m.complex).unwrap());
    ok &= t.failures == 0 && t.nonzero > 0;
    (
        ok,
        format!(
            "{} move checks with (f, g, ψ) and A∞ n = 1, 2, 3; a + c = 0 (nonzero a/c actions: {} in steps, {} on tetra3; nonzero F2 on a/c: {})",
            checks, actions, t.nonzero, f2
        ),
    )
}

fn c8() -> (bool, String) {
    let t = Instant::now();
    let (dsq, v) = suite_dsq(3, 1, true).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut surgery = true;
    let mut pairs = 0;
    for n in 1..=2 {
        let h = ArcAlgebra::new(n).unwrap();
        let orders: Vec<Vec<usize>> = if n == 1 { vec![vec![0]] } else { vec![vec![0, 1], vec![1, 0]] };
        for x in 0..h.rank() {
            for y in 0..h.rank() {
                let base = h.multiply(x, y).unwrap();
                surgery &= orders.iter().all(|o| h.multiply_with_order(x, y, o).unwrap() == base);
                pairs += 1;
            }
        }
    }
    let h3 = ArcAlgebra::new(3).unwrap();
    for _ in 0..1000 {
        let (x, y) = (rng.gen_range(0..h3.rank()), rng.gen_range(0..h3.rank()));
        let mut o = vec![0, 1, 2];
        o.shuffle(&mut rng);
        surgery &= h3.multiply_with_order(x, y, &o).unwrap() == h3.multiply(x, y).unwrap();
    }
    let mut snf = true;
    for _ in 0..1000 {
        let (r, c) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
        let rows: Vec<Vec<i64>> = (0..r).map(|_| (0..c).map(|_| rng.gen_range(-9..=9)).collect()).collect();
        let m = ZMatrix::from_rows(&rows);
        let s = smith_normal_form(&m, true);
        let (u, v) = (s.u.clone().unwrap(), s.v.clone().unwrap());
        let d = u.mul(&m).mul(&v);
        snf &= khbord::zlinalg::is_unimodular(&u) && khbord::zlinalg::is_unimodular(&v);
        snf &= s.factors.iter().all(|f| f.is_positive()) && s.factors.windows(2).all(|w| (&w[1] % &w[0]).is_zero());
        for i in 0..r {
            for j in 0..c {
                let want = if i == j && i < s.rank() { s.factors[i].clone() } else { BigInt::zero() };
                snf &= *d.get(i, j) == want;
            }
        }
    }
    let elapsed = t.elapsed();
    let ok = dsq && surgery && snf && elapsed < Duration::from_secs(600);
    (
        ok,
        format!(
            "d² on {} random complexes and {} boxes, corpus {}; surgery order on {} pairs (n ≤ 2) + 1000 at n = 3; SNF on 1000 matrices; {:.1?}",
            v["random_complexes"], v["random_boxes"], v["corpus"], pairs, elapsed
        ),
    )
}

fn c9() -> (bool, String) {
    let l = corpus("trefoil");
    let direct = direct_ckh(&l).unwrap().complex.homology();
    let z2: Vec<(i32, i32)> = direct.iter().filter(|g| g.torsion == [2]).map(|g| (g.h, g.q)).collect();
    let torsion_count = direct.iter().filter(|g| !g.torsion.is_empty()).count();
    let rows = run_methods(&l, &Method::ALL, false).unwrap();
    let identical = rows.iter().all(|r| r.1 == direct);
    // integral Kh of the right-handed trefoil: (h, q, free rank, torsion)
    let known = [(0, 1, 1, vec![]), (0, 3, 1, vec![]), (2, 5, 1, vec![]), (3, 7, 0, vec![2]), (3, 9, 1, vec![])];
    let table: Vec<(i32, i32, usize, Vec<u64>)> = direct.iter().map(|g| (g.h, g.q, g.free, g.torsion.clone())).collect();
    let ok = z2.len() == 1 && torsion_count == 1 && identical && table == known;
    (ok, format!("Z/2 at (h, q) = {:?}; five tables identical: {}", z2, identical))
}

#[test]
fn acceptance() {
    let criteria: [(&'static str, fn() -> (bool, String)); 9] = [
        ("Catalan counts", c1),
        ("geodesic connectivity", c2),
        ("H^n presentation", c3),
        ("B_R(H^n) presentation", c4),
        ("DD relations", c5),
        ("pairing pipelines", c6),
        ("Reidemeister invariance", c7),
        ("property batteries", c8),
        ("trefoil torsion", c9),
    ];
    let mut lines = Vec::new();
    for (k, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (pass, detail) = f();
        lines.push(Line { id: k + 1, name, pass, detail, elapsed: t.elapsed() });
        let l = lines.last().unwrap();
        // written past the harness capture so the lines always reach the log
        let line = format!("criterion {} {}: {} ({}; {:.2?})\n", l.id, l.name, if l.pass { "PASS" } else { "FAIL" }, l.detail, l.elapsed);
        let _ = std::io::stdout().write_all(line.as_bytes());
    }
    let failed: Vec<usize> = lines.iter().filter(|l| !l.pass).map(|l| l.id).collect();
    assert!(failed.is_empty(), "failing criteria: {:?}", failed);
}
