//! Command implementations for `khb`: each returns a JSON report and a pass flag.

use khbord::arcalg::ArcAlgebra;
use khbord::bordered::{
    agrees_with_direct, box_tensor, box_with_dd, halves, k_product, pairing, reidemeister_check, tetrahedron_actions,
    type_a_roberts, type_d_from_complex, type_d_roberts, verify_elimination, verify_type_a, Algebras, Block,
    BorderedError, HnTypeA, Method, RMove,
};
use khbord::hncomplex::{random_complex, reduce, Side};
use khbord::linquad::{verify_presentation, BuildOptions, NormalForms, VerifyReport};
use khbord::planar::{enumerate_matchings, enumerate_partitions, geodesic_graph, hasse_graph};
use khbord::roberts::{dd_pairs, mirror, DDKind, DDStructure, ProductAlgebra, Shape, BR};
use khbord::tangles::{direct_ckh, parse_link, random_link, random_link_bounded, Link};
use khbord::zlinalg::HomologyGroup;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use std::collections::BTreeMap;

/// Links shipped with the crate, usable by the verification suites.
pub const CORPUS: [(&str, &str); 5] = [
    ("unknot", include_str!("../../../corpus/unknot.link")),
    ("hopf", include_str!("../../../corpus/hopf.link")),
    ("trefoil", include_str!("../../../corpus/trefoil.link")),
    ("hopf3", include_str!("../../../corpus/hopf3.link")),
    ("tetra3", include_str!("../../../corpus/tetra3.link")),
];

/// Largest n for matchings, H^n and the H^n pipelines.
pub const MAX_N: usize = 5;

/// Environment variable that lifts the Roberts/DD cap from n = 2 to n = 3.
pub const ALLOW_N3_VAR: &str = "KHB_ALLOW_N3";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("{0}")]
    Internal(#[from] BorderedError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

/// Result of one command.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub pass: bool,
    pub report: Value,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlgebraMode {
    VerifyPresentation,
    Dual,
    Roberts,
    DdCheck,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Dsq,
    Pairing,
    Reidemeister,
    Ainfty,
    Dd,
}

impl Suite {
    pub fn parse(s: &str) -> Option<Suite> {
        match s {
            "dsq" => Some(Suite::Dsq),
            "pairing" => Some(Suite::Pairing),
            "reidemeister" => Some(Suite::Reidemeister),
            "ainfty" => Some(Suite::Ainfty),
            "dd" => Some(Suite::Dd),
            _ => None,
        }
    }
}

pub fn allow_n3_from_env() -> bool {
    std::env::var(ALLOW_N3_VAR).is_ok_and(|v| !v.is_empty() && v != "0")
}

fn check_n(n: usize, cap: usize) -> Result<(), CliError> {
    if n == 0 || n > cap {
        return Err(CliError::Input(format!("n = {} outside 1..={}", n, cap)));
    }
    Ok(())
}

fn roberts_cap(allow_n3: bool) -> usize {
    if allow_n3 {
        3
    } else {
        2
    }
}

pub fn catalan(n: usize) -> usize {
    (0..n).fold(1, |c, k| c * 2 * (2 * k + 1) / (k + 2))
}

pub fn cmd_matchings(n: usize) -> Result<Outcome, CliError> {
    check_n(n, MAX_N)?;
    let ms = enumerate_matchings(n).map_err(|e| CliError::Input(e.to_string()))?;
    let ps = enumerate_partitions(n).map_err(|e| CliError::Input(e.to_string()))?;
    let h = hasse_graph(n).map_err(|e| CliError::Input(e.to_string()))?;
    let k = h.vertices.len();
    let mut disconnected = Vec::new();
    for p in 0..k {
        for q in 0..k {
            if geodesic_graph(&h, p, q).num_components != 1 {
                disconnected.push((h.vertices[p].to_string(), h.vertices[q].to_string()));
            }
        }
    }
    let pass = ms.len() == catalan(n) && ps.len() == catalan(n) && disconnected.is_empty();
    let report = json!({
        "command": "matchings",
        "n": n,
        "count": ms.len(),
        "catalan": catalan(n),
        "matchings": ms.iter().map(|m| m.to_string()).collect::<Vec<_>>(),
        "partitions": ps.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
        "hasse_edges": h.edges,
        "pairs_checked": k * k,
        "connectivity": if disconnected.is_empty() { "all pairs connected".to_string() } else { format!("{} pairs disconnected", disconnected.len()) },
        "first_failure": disconnected.first(),
        "pass": pass,
    });
    Ok(Outcome { pass, report })
}

fn presentation_report(rep: &VerifyReport) -> Value {
    json!({
        "failing_relations": rep.failing_relations,
        "rank_mismatches": rep.rank_mismatches.len(),
        "non_unimodular": rep.non_unimodular.len(),
        "pieces_checked": rep.pieces_checked,
        "pass": rep.passed(),
    })
}

/// H^n presentation against the multiplication of H^n.
pub fn hn_presentation(n: usize) -> Result<(bool, Value), CliError> {
    let h = ArcAlgebra::new(n).map_err(BorderedError::from)?;
    let pres = h.presentation();
    let opts = BuildOptions { gen_rank: Some(h.gen_rank()), ..Default::default() };
    let nf = NormalForms::build(pres, &opts).map_err(|e| CliError::Input(e.to_string()))?;
    let rep = verify_presentation(&nf, &h);
    let pass = rep.passed() && nf.rank() == h.rank();
    let v = json!({
        "generators": nf.pres.gens.len(),
        "relations": nf.pres.relations.len(),
        "rank": h.rank(),
        "normal_form_rank": nf.rank(),
        "check": presentation_report(&rep),
        "pass": pass,
    });
    Ok((pass, v))
}

fn shape_counts(shapes: &[Shape]) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for s in shapes {
        *out.entry(format!("{:?}", s).to_lowercase()).or_insert(0) += 1;
    }
    out
}

/// B_R(H^n) presentation against the endomorphism realisation, with the monomial graph.
pub fn roberts_presentation(n: usize, allow_n3: bool) -> Result<(bool, Value), CliError> {
    let br = BR::new(n, allow_n3).map_err(BorderedError::from)?;
    let rep = verify_presentation(&br.nf, &br);
    let g = br.monomial_graph().map_err(BorderedError::from)?;
    let classified = g.shapes.len() == g.components.len();
    let mut products = Vec::new();
    let mut pass = rep.passed() && classified;
    for gamma in [false, true] {
        let p = ProductAlgebra::new(BR::new(n, allow_n3).map_err(BorderedError::from)?, gamma).map_err(BorderedError::from)?;
        let diff = p.nf.check_differential();
        pass &= diff.is_ok();
        products.push(json!({
            "gamma": gamma,
            "generators": p.gens.len(),
            "rank": p.nf.rank(),
            "tetrahedra": p.tetrahedra.len(),
            "differential_squares_to_zero": diff.is_ok(),
        }));
    }
    let v = json!({
        "generators": br.gens.len(),
        "relations": br.pres.relations.len(),
        "rank": br.nf.rank(),
        "check": presentation_report(&rep),
        "graph_components": g.components.len(),
        "graph_shapes": shape_counts(&g.shapes),
        "graph_classified": classified,
        "products": products,
        "pass": pass,
    });
    Ok((pass, v))
}

/// Quadratic dual of B_R(H^n) with its induced differential.
pub fn roberts_dual(n: usize, allow_n3: bool) -> Result<(bool, Value), CliError> {
    let br = BR::new(n, allow_n3).map_err(BorderedError::from)?;
    let dual = br.dual_presentation().map_err(BorderedError::from)?;
    let text = dual.to_text();
    let dnf = NormalForms::build(dual, &BuildOptions::default()).map_err(|e| CliError::Input(e.to_string()))?;
    let diff = dnf.check_differential();
    let pass = diff.is_ok();
    let v = json!({
        "generators": dnf.pres.gens.len(),
        "relations": dnf.pres.relations.len(),
        "rank": dnf.rank(),
        "differential_squares_to_zero": diff.is_ok(),
        "first_failure": diff.err(),
        "presentation": text,
        "pass": pass,
    });
    Ok((pass, v))
}

/// The three rank-one DD structures, the product one over P and over the gamma quotient.
pub fn dd_checks(n: usize, allow_n3: bool) -> Result<(bool, Value), CliError> {
    let br = BR::new(n, allow_n3).map_err(BorderedError::from)?;
    let dual = br.dual_presentation().map_err(BorderedError::from)?;
    let dnf = NormalForms::build(dual, &BuildOptions::default()).map_err(|e| CliError::Input(e.to_string()))?;
    let id: Vec<usize> = (0..br.h.rank()).collect();
    let pairs: Vec<(usize, usize)> = (0..br.gens.len()).map(|g| (g, g)).collect();
    let mut results = vec![
        ("B ⊗ B!".to_string(), DDStructure::from_pairs(&br.nf, &dnf, id.clone(), &pairs).check()),
        ("B! ⊗ B".to_string(), DDStructure::from_pairs(&dnf, &br.nf, id, &pairs).check()),
    ];
    for gamma in [false, true] {
        let p = ProductAlgebra::new(BR::new(n, allow_n3).map_err(BorderedError::from)?, gamma).map_err(BorderedError::from)?;
        let m: Vec<usize> = (0..p.h().rank()).map(|x| mirror(p.h(), x)).collect();
        let r = DDStructure::from_pairs(&p.nf, &p.nf, m, &dd_pairs(DDKind::Product, &p)).check();
        results.push((if gamma { "K over BΓ".to_string() } else { "K over P".to_string() }, r));
    }
    let pass = results.iter().all(|(_, r)| r.is_ok());
    let v = json!({
        "structures": results.iter().map(|(name, r)| json!({"structure": name, "pass": r.is_ok(), "witness": r.as_ref().err()})).collect::<Vec<_>>(),
        "pass": pass,
    });
    Ok((pass, v))
}

pub fn cmd_algebra(n: usize, mode: AlgebraMode, allow_n3: bool) -> Result<Outcome, CliError> {
    let (pass, body) = match mode {
        AlgebraMode::VerifyPresentation => {
            check_n(n, MAX_N)?;
            hn_presentation(n)?
        }
        AlgebraMode::Dual => {
            check_n(n, roberts_cap(allow_n3))?;
            roberts_dual(n, allow_n3)?
        }
        AlgebraMode::Roberts => {
            check_n(n, roberts_cap(allow_n3))?;
            roberts_presentation(n, allow_n3)?
        }
        AlgebraMode::DdCheck => {
            check_n(n, roberts_cap(allow_n3))?;
            dd_checks(n, allow_n3)?
        }
    };
    let report = json!({ "command": "algebra", "mode": format!("{:?}", mode), "n": n, "result": body, "pass": pass });
    Ok(Outcome { pass, report })
}

pub fn load_link(text: &str) -> Result<Link, CliError> {
    let l = parse_link(text).map_err(|e| CliError::Input(e.to_string()))?;
    check_n(l.n(), MAX_N)?;
    Ok(l)
}

fn needs_roberts(m: Method) -> bool {
    matches!(m, Method::BoxProduct | Method::BoxGamma)
}

/// One row per pipeline: homology table and generator-by-generator agreement with direct CKh.
pub fn run_methods(l: &Link, methods: &[Method], allow_n3: bool) -> Result<Vec<(Method, Vec<HomologyGroup>, bool, usize)>, CliError> {
    if methods.iter().any(|&m| needs_roberts(m)) && l.n() > roberts_cap(allow_n3) {
        return Err(CliError::Input(format!(
            "Roberts pipelines are capped at n = {} (set {}=1 for n = 3)",
            roberts_cap(allow_n3),
            ALLOW_N3_VAR
        )));
    }
    let algs = Algebras::new(l.n(), allow_n3)?;
    let mut rows = Vec::new();
    for &m in methods {
        let p = pairing(l, m, &algs)?;
        p.complex.check().map_err(BorderedError::from)?;
        rows.push((m, p.complex.homology(), agrees_with_direct(l, &p)?, p.complex.gens.len()));
    }
    Ok(rows)
}

pub fn homology_table(hs: &[HomologyGroup]) -> String {
    let mut s = String::new();
    for g in hs {
        let tors = g.torsion.iter().map(|t| format!("Z/{}", t)).collect::<Vec<_>>().join(" ");
        s += &format!("h={:>3} q={:>3}  Z^{}{}{}\n", g.h, g.q, g.free, if tors.is_empty() { "" } else { " + " }, tors);
    }
    s
}

pub fn cmd_kh(text: &str, method: Method, all_methods: bool, allow_n3: bool) -> Result<Outcome, CliError> {
    let l = load_link(text)?;
    let methods: Vec<Method> = if all_methods { Method::ALL.to_vec() } else { vec![method] };
    let rows = run_methods(&l, &methods, allow_n3)?;
    let identical = rows.windows(2).all(|w| w[0].1 == w[1].1);
    let pass = identical && rows.iter().all(|r| r.2);
    let report = json!({
        "command": "kh",
        "n": l.n(),
        "methods": rows.iter().map(|(m, hs, agree, gens)| json!({
            "method": m.name(),
            "generators": gens,
            "homology": hs,
            "agrees_with_direct": agree,
        })).collect::<Vec<_>>(),
        "identical_tables": identical,
        "pass": pass,
    });
    Ok(Outcome { pass, report })
}

fn corpus_links(max_n: usize) -> Vec<(&'static str, Link)> {
    CORPUS.iter().filter_map(|&(name, text)| parse_link(text).ok().map(|l| (name, l))).filter(|(_, l)| l.n() <= max_n).collect()
}

fn random_side(rng: &mut impl Rng) -> Side {
    if rng.gen_bool(0.5) {
        Side::Left
    } else {
        Side::Right
    }
}

/// Number of random complexes in the d² battery.
pub const DSQ_TRIALS: usize = 1000;

/// d² = 0 on random C_module complexes and corpus halves; ∂⊠² = 0 on random and corpus pairings.
pub fn suite_dsq(n: usize, seed: u64, allow_n3: bool) -> Result<(bool, Value), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = ArcAlgebra::new(n).map_err(BorderedError::from)?;
    let mut failures: Vec<String> = Vec::new();
    let mut box_checked = 0;
    for t in 0..DSQ_TRIALS {
        let side = random_side(&mut rng);
        let size = rng.gen_range(1..=3);
        let m = random_complex(&h, side, &mut rng, size);
        if let Err(e) = m.check_d_squared(&h) {
            failures.push(format!("random complex {}: {}", t, e));
            continue;
        }
        let other = random_complex(&h, side.flip(), &mut rng, size);
        let (mr, nl) = if side == Side::Right { (&m, &other) } else { (&other, &m) };
        let a = HnTypeA::new(&h, mr)?;
        let d = type_d_from_complex(&h, nl)?;
        let (c, _) = box_tensor(&a, &d)?;
        box_checked += 1;
        if let Err(e) = c.check() {
            failures.push(format!("box of random pair {}: {}", t, e));
        }
    }
    let mut corpus_checked = Vec::new();
    let roberts_ok = n <= roberts_cap(allow_n3);
    for (name, l) in corpus_links(n) {
        let algs = Algebras::new(l.n(), allow_n3)?;
        let (m, nn) = halves(&algs.h, &l)?;
        for (half, c) in [("left", &m.complex), ("right", &nn.complex)] {
            if let Err(e) = c.check_d_squared(&algs.h) {
                failures.push(format!("{} {}: {}", name, half, e));
            }
        }
        if let Err(e) = direct_ckh(&l).map_err(BorderedError::from).and_then(|d| Ok(d.complex.check()?)) {
            failures.push(format!("{} direct: {}", name, e));
        }
        for method in Method::ALL {
            if needs_roberts(method) && (!roberts_ok || l.n() > roberts_cap(allow_n3)) {
                continue;
            }
            let p = pairing(&l, method, &algs)?;
            if let Err(e) = p.complex.check() {
                failures.push(format!("{} {}: {}", name, method.name(), e));
            }
        }
        corpus_checked.push(name);
    }
    let pass = failures.is_empty();
    Ok((pass, json!({ "random_complexes": DSQ_TRIALS, "random_boxes": box_checked, "corpus": corpus_checked, "first_failure": failures.first(), "pass": pass })))
}

/// Number of random links in the pairing battery.
pub const PAIRING_TRIALS: usize = 12;

fn methods_for(n: usize, allow_n3: bool) -> Vec<Method> {
    Method::ALL.into_iter().filter(|&m| !needs_roberts(m) || n <= roberts_cap(allow_n3)).collect()
}

/// All available pipelines agree with direct CKh on corpus links and random closed diagrams.
pub fn suite_pairing(n: usize, seed: u64, allow_n3: bool) -> Result<(bool, Value), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut links: Vec<(String, Link)> = corpus_links(n).into_iter().map(|(s, l)| (s.to_string(), l)).collect();
    for t in 0..PAIRING_TRIALS {
        let k = rng.gen_range(1..=n);
        links.push((format!("random {}", t), random_link(&mut rng, k, 2)));
    }
    let mut rows = Vec::new();
    let mut failure = None;
    for (name, l) in &links {
        let methods = methods_for(l.n(), allow_n3);
        let r = run_methods(l, &methods, allow_n3)?;
        let ok = r.iter().all(|x| x.2) && r.windows(2).all(|w| w[0].1 == w[1].1);
        if !ok && failure.is_none() {
            failure = Some(json!({ "link": name, "text": l.to_text() }));
        }
        rows.push(json!({ "link": name, "n": l.n(), "methods": methods.iter().map(|m| m.name()).collect::<Vec<_>>(), "pass": ok }));
    }
    let pass = failure.is_none();
    Ok((pass, json!({ "links": rows, "first_failure": failure, "pass": pass })))
}

/// Blocks on which the moves are applied: both for n ≤ 2, otherwise the block with fewer
/// (but some) crossings.
pub fn move_blocks(l: &Link) -> Vec<Block> {
    if l.n() <= 2 {
        return vec![Block::Left, Block::Right];
    }
    let (a, b) = (l.left.crossing_count(), l.right.crossing_count());
    if b > 0 && (a == 0 || b <= a) {
        vec![Block::Right]
    } else {
        vec![Block::Left]
    }
}

/// Reidemeister moves on corpus links: homology before/after, and every cancellation step's
/// A∞ and Type D data verified over P and the gamma quotient.
pub fn suite_reidemeister(n: usize, seed: u64, allow_n3: bool) -> Result<(bool, Value), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cap = n.min(roberts_cap(allow_n3));
    let mut links: Vec<(String, Link)> = corpus_links(cap).into_iter().map(|(s, l)| (s.to_string(), l)).collect();
    links.push(("random".into(), random_link_bounded(&mut rng, cap.min(2), 2, 6)));
    let mut rows = Vec::new();
    let mut failure = None;
    for (name, l) in &links {
        let algs = Algebras::new(l.n(), allow_n3)?;
        for block in move_blocks(l) {
            for mv in RMove::ALL {
                let (ok, v) = match reidemeister_check(l, block, mv, &algs) {
                    Ok(r) => (r.homology_equal && r.reduced_homology_equal, serde_json::to_value(&r).unwrap_or(Value::Null)),
                    Err(e) => (false, json!({ "error": e.to_string() })),
                };
                if !ok && failure.is_none() {
                    failure = Some(json!({ "link": name, "block": format!("{:?}", block), "move": mv.name(), "detail": v.clone() }));
                }
                rows.push(json!({ "link": name, "result": v, "pass": ok }));
            }
        }
    }
    let pass = failure.is_none();
    Ok((pass, json!({ "checks": rows, "first_failure": failure, "pass": pass })))
}

/// Number of random complexes in the A∞ battery.
pub const AINFTY_TRIALS: usize = 8;

/// Roberts Type A structures of random and corpus complexes, and the A∞ data of every
/// cancellation step, over P and the gamma quotient.
pub fn suite_ainfty(n: usize, seed: u64, allow_n3: bool) -> Result<(bool, Value), CliError> {
    check_n(n, roberts_cap(allow_n3))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let algs = Algebras::new(n, allow_n3)?;
    let mut complexes = Vec::new();
    for (name, l) in corpus_links(n).into_iter().filter(|(_, l)| l.n() == n) {
        complexes.push((name.to_string(), halves(&algs.h, &l)?.0.complex));
    }
    for t in 0..AINFTY_TRIALS {
        complexes.push((format!("random {}", t), random_complex(&algs.h, Side::Right, &mut rng, 2)));
    }
    let mut rows = Vec::new();
    let mut failure: Option<String> = None;
    for (name, m) in &complexes {
        let mut steps_checked = 0;
        let mut tetra = (0, 0);
        let mut res: Result<(), BorderedError> = Ok(());
        for gamma in [false, true] {
            let p = algs.product(gamma)?;
            res = res.and_then(|_| {
                let a = type_a_roberts(p, m)?;
                a.verify()?;
                if gamma {
                    let t = tetrahedron_actions(p, &a);
                    tetra.0 += t.nonzero;
                    if t.failures > 0 {
                        return Err(BorderedError::Mismatch(format!("a + c acts nonzero on {} generators", t.failures)));
                    }
                }
                let (_, steps) = reduce(&algs.h, m, |_, _, _| true)?;
                let mut cur = m.clone();
                for e in &steps {
                    let (_, f2) = verify_elimination(p, &cur, e, false)?;
                    if gamma {
                        tetra.1 += f2;
                    }
                    cur = e.m1.clone();
                    steps_checked += 1;
                }
                Ok(())
            });
        }
        if let Err(e) = &res {
            failure.get_or_insert(format!("{}: {}", name, e));
        }
        rows.push(json!({ "complex": name, "generators": m.len(), "steps_checked": steps_checked, "tetra_actions_nonzero": tetra.0, "tetra_f2_nonzero": tetra.1, "pass": res.is_ok() }));
    }
    let pass = failure.is_none();
    Ok((pass, json!({ "complexes": rows, "first_failure": failure, "pass": pass })))
}

/// DD relations, plus D(N) and Â(M) ⊠ K on random and corpus complexes.
pub fn suite_dd(n: usize, seed: u64, allow_n3: bool) -> Result<(bool, Value), CliError> {
    check_n(n, roberts_cap(allow_n3))?;
    let (mut pass, dd) = dd_checks(n, allow_n3)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let algs = Algebras::new(n, allow_n3)?;
    let h = &algs.h;
    let mut pairs = Vec::new();
    for (name, l) in corpus_links(n).into_iter().filter(|(_, l)| l.n() == n) {
        let (m, nn) = halves(h, &l)?;
        pairs.push((name.to_string(), m.complex, nn.complex));
    }
    for t in 0..AINFTY_TRIALS {
        pairs.push((format!("random {}", t), random_complex(h, Side::Right, &mut rng, 2), random_complex(h, Side::Left, &mut rng, 2)));
    }
    let mut failure: Option<String> = None;
    for (name, m, nn) in &pairs {
        for gamma in [false, true] {
            let p = algs.product(gamma)?;
            let r = (|| -> Result<(), BorderedError> {
                type_d_from_complex(h, nn)?.verify()?;
                verify_type_a(&HnTypeA::new(h, m)?)?;
                let d = type_d_roberts(p, nn)?;
                d.verify()?;
                let a = type_a_roberts(p, m)?;
                box_with_dd(&a, &k_product(p))?.verify()?;
                box_tensor(&a, &d)?.0.check()?;
                Ok(())
            })();
            if let Err(e) = r {
                failure.get_or_insert(format!("{} (gamma = {}): {}", name, gamma, e));
            }
        }
    }
    pass &= failure.is_none();
    Ok((pass, json!({ "dd": dd, "structures_checked": pairs.len(), "first_failure": failure, "pass": pass })))
}

pub fn cmd_verify(suite: Suite, n: usize, seed: u64, allow_n3: bool) -> Result<Outcome, CliError> {
    check_n(n, MAX_N)?;
    let (pass, body) = match suite {
        Suite::Dsq => suite_dsq(n, seed, allow_n3)?,
        Suite::Pairing => suite_pairing(n, seed, allow_n3)?,
        Suite::Reidemeister => suite_reidemeister(n, seed, allow_n3)?,
        Suite::Ainfty => suite_ainfty(n, seed, allow_n3)?,
        Suite::Dd => suite_dd(n, seed, allow_n3)?,
    };
    let report = json!({ "command": "verify", "suite": format!("{:?}", suite).to_lowercase(), "n": n, "seed": seed, "result": body, "pass": pass });
    Ok(Outcome { pass, report })
}
