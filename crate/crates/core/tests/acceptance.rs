//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit status
//! when any criterion fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use num_traits::Zero;
use twistcb::blocks::{
    coinvariant_rank, default_positions, degeneration_rank, fusion_table, nodal_coinvariants, propagation_check,
    sewing_element, sewing_map_check, untwisted_setup, Label, LabelAssignment, Puncture,
};
use twistcb::cover::{CoveringGraph, KummerModel, NodalModel};
use twistcb::cyclo::{q, qi, Q};
use twistcb::liealg::{build_simple, dual_weight, gamma_eigenspaces, CartanType, GammaAction, LieAlgebra, Weight};
use twistcb::looprep::integrable_module;
use twistcb::sugawara::{abelian_check, casimir, sugawara_operator, virasoro_window_check, FockSpace};
use twistcb::torsorlab::torsor_suite;

type Outcome = Result<String, String>;

fn alg(n: usize) -> Arc<LieAlgebra> {
    Arc::new(build_simple(CartanType::A(n)).unwrap())
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn virasoro_identities() -> Outcome {
    let mut checked = 0;
    for n in 1..=2 {
        let g = alg(n);
        let cas = casimir(&g);
        for level in 1..=2u32 {
            for w in g.enumerate_levels(level) {
                let m = integrable_module(g.clone(), &w, level, 3).map_err(|e| e.to_string())?;
                let r = virasoro_window_check(&m, &cas, 2, 2).map_err(|e| e.to_string())?;
                ensure(r.ok(), || format!("A{n} level {level} {w}: {r:?}"))?;
                checked += r.pairs_checked;
            }
        }
    }
    Ok(format!("{checked} (k, l) pairs on 14 modules at depth 3"))
}

fn abelian_oracle() -> Outcome {
    let mut total = 0;
    for (hbar, mu) in [(qi(1), qi(0)), (q(3, 2), q(1, 3)), (q(-2, 5), qi(4))] {
        let f = FockSpace::new(hbar.clone(), mu.clone(), 7);
        match abelian_check(&f, 3).map_err(|e| e.to_string())? {
            Ok(n) => total += n,
            Err(e) => return Err(format!("hbar {hbar}, mu {mu}: {e}")),
        }
    }
    Ok(format!("{total} relation instances for |k|, |l| <= 3"))
}

fn casimir_and_dual_coxeter() -> Outcome {
    for (n, hv) in [(1usize, 2i64), (2, 3)] {
        let g = alg(n);
        let cas = casimir(&g);
        ensure(cas.dual_coxeter == qi(hv), || format!("A{n}: dual Coxeter {}", cas.dual_coxeter))?;
        let m = cas.ad_sum(&g);
        for i in 0..g.dim() {
            for j in 0..g.dim() {
                let want = if i == j { qi(2 * hv) } else { Q::zero() };
                ensure(*m.get(i, j) == want, || format!("A{n}: ad-Casimir entry ({i},{j})"))?;
            }
        }
    }
    let g = alg(1);
    let m = integrable_module(g.clone(), &Weight(vec![1]), 1, 0).map_err(|e| e.to_string())?;
    let t0 = sugawara_operator(&m, &casimir(&g), 0).map_err(|e| e.to_string())?;
    let v = t0.block(0).unwrap().to_dense().get(0, 0).clone();
    ensure(v == q(-1, 4), || format!("T0 on the highest weight vector: {v}"))?;
    Ok("dual Coxeter 2 and 3, T0 = -1/4".into())
}

fn fusion_agreement() -> Outcome {
    let mut triples = 0;
    let mut max_depth = 0;
    for (n, levels) in [(1usize, vec![0u32, 1, 2]), (2, vec![1])] {
        let g = alg(n);
        let (model, rho) = untwisted_setup(&g);
        let xs = default_positions(&model, 3);
        for level in levels {
            let table = fusion_table(&g, level).map_err(|e| e.to_string())?;
            let ws = g.enumerate_levels(level);
            for a in &ws {
                for b in &ws {
                    for c in &ws {
                        let want = table.rank(a, b, c).map_err(|e| e.to_string())?;
                        let pts: Vec<Puncture> = [a, b, c]
                            .iter()
                            .zip(&xs)
                            .map(|(w, x)| Puncture { x: x.clone(), label: Label::new(w, 0) })
                            .collect();
                        let r = coinvariant_rank(g.clone(), level, &model, &rho, &pts, 5).map_err(|e| e.to_string())?;
                        ensure(r.stabilized && r.rank as u64 == want, || {
                            format!("A{n} level {level} ({a},{b},{c}): table {want}, coinvariants {r:?}")
                        })?;
                        triples += 1;
                        max_depth = max_depth.max(r.depth_used);
                    }
                }
            }
        }
    }
    Ok(format!("{triples} ordered triples agree, stabilized by depth {max_depth}"))
}

fn genus_one_factorization() -> Outcome {
    let g = alg(1);
    let table = fusion_table(&g, 1).map_err(|e| e.to_string())?;
    let mut labels = LabelAssignment::default();
    labels.insert("a", Label::new(&Weight(vec![0]), 0));
    labels.insert("b", Label::new(&Weight(vec![0]), 0));
    let one_node = CoveringGraph::from_json(r#"{"p":2,"vertices":[{"genus":0}],"edges":[[0,0]],"legs":[{"vertex":0,"label":"a"}]}"#)
        .map_err(|e| e.to_string())?;
    let r1 = degeneration_rank(&one_node, &labels, &table, None).map_err(|e| e.to_string())?;
    ensure(r1 == table.labels.len() as u64 && r1 == 2, || format!("one node: {r1}"))?;
    let cycle = CoveringGraph::from_json(
        r#"{"p":2,"vertices":[{"genus":0},{"genus":0}],"edges":[[0,1],[1,0]],
            "legs":[{"vertex":0,"label":"a"},{"vertex":1,"label":"b"}]}"#,
    )
    .map_err(|e| e.to_string())?;
    let r2 = degeneration_rank(&cycle, &labels, &table, Some(&[0, 1])).map_err(|e| e.to_string())?;
    let r3 = degeneration_rank(&cycle, &labels, &table, Some(&[1, 0])).map_err(|e| e.to_string())?;
    ensure(r2 == r1 && r3 == r1, || format!("two-node cycle: {r2} and {r3}"))?;
    let nodal = NodalModel { plus: qi(1), minus: qi(-1) };
    let sys = nodal_coinvariants(g, 1, &nodal, &[(Q::zero(), Weight(vec![0]))], 5).map_err(|e| e.to_string())?;
    ensure(sys.result.stabilized && sys.result.rank as u64 == r1, || format!("nodal coinvariants: {:?}", sys.result))?;
    Ok(format!("degeneration {r1}, split orders {r2} and {r3}, nodal coinvariants {}", sys.result.rank))
}

fn propagation_of_vacua() -> Outcome {
    let mut cases = 0;
    let mut run = |g: &Arc<LieAlgebra>, level: u32, model: &KummerModel, rho: &GammaAction, labels: &[Label], depth: usize| -> Result<(), String> {
        for extra in 1..=2 {
            let rep = propagation_check(g.clone(), level, model, rho, labels, extra, depth).map_err(|e| e.to_string())?;
            let names: Vec<String> = labels.iter().map(|l| l.weight().to_string()).collect();
            ensure(rep.ok(), || format!("level {level} {} + {extra}: {rep:?}", names.join(" ")))?;
            cases += 1;
        }
        Ok(())
    };
    for (n, level) in [(1usize, 1u32), (1, 2), (2, 1)] {
        let g = alg(n);
        let (model, rho) = untwisted_setup(&g);
        for w in g.enumerate_levels(level) {
            let d = dual_weight(&g, &w).map_err(|e| e.to_string())?;
            run(&g, level, &model, &rho, &[Label::new(&w, 0), Label::new(&d, 0)], 5)?;
        }
        let w = g.enumerate_levels(level).into_iter().find(|w| !w.is_zero()).unwrap();
        let l = Label::new(&w, 0);
        run(&g, level, &model, &rho, &[l.clone(), l.clone(), l], 5)?;
    }
    let g = alg(2);
    let rho = GammaAction::diagram(&g, &[1, 0], 2).map_err(|e| e.to_string())?;
    let vac = Label::new(&Weight::zero(2), 0);
    let power = KummerModel::power(2, 1).map_err(|e| e.to_string())?;
    run(&g, 2, &power, &rho, std::slice::from_ref(&vac), 4)?;
    let two_branch = KummerModel::new(2, vec![(qi(0), 1), (qi(-1), 1)]).map_err(|e| e.to_string())?;
    run(&g, 2, &two_branch, &rho, &[vac], 4)?;
    Ok(format!("{cases} comparisons, including twisted A2 outer at level 2"))
}

fn sewing_suite() -> Outcome {
    let g = alg(1);
    let mut checks = 0;
    for w in g.enumerate_levels(1) {
        let s = sewing_element(g.clone(), &w, 1, 3).map_err(|e| e.to_string())?;
        ensure(s.eps0_is_dual(), || format!("W = {w}: degree-0 part is not the dual of the trace"))?;
        ensure(s.bidegrees_ok(), || format!("W = {w}: bidegrees"))?;
        match s.annihilation_check(3).map_err(|e| e.to_string())? {
            Ok(n) => checks += n,
            Err(f) => return Err(format!("W = {w}: {f}")),
        }
    }
    let rep = sewing_map_check(g, 1, &Weight(vec![0]), 6).map_err(|e| e.to_string())?;
    ensure(rep.ok(), || format!("{rep:?}"))?;
    Ok(format!("{checks} annihilation checks, sewing map rank {} = nodal rank {}", rep.image_rank, rep.nodal_rank))
}

fn torsor_criteria() -> Outcome {
    let lines = torsor_suite().map_err(|e| e.to_string())?;
    let failed: Vec<String> = lines.iter().filter(|l| !l.pass).map(|l| format!("{}: {}", l.name, l.detail)).collect();
    ensure(failed.is_empty(), || failed.join("; "))?;
    Ok(format!("{} checks over S4, Z/3 with inversion, S3", lines.len()))
}

fn structural_invariants() -> Outcome {
    for n in 1..=3 {
        let g = alg(n);
        g.verify_jacobi().map_err(|e| format!("A{n}: {e}"))?;
        g.verify_invariance().map_err(|e| format!("A{n}: {e}"))?;
    }
    let g = alg(2);
    let rho = GammaAction::diagram(&g, &[1, 0], 2).map_err(|e| e.to_string())?;
    let dims = gamma_eigenspaces(&g, &rho).map_err(|e| e.to_string())?.dims();
    ensure(dims == vec![3, 5], || format!("outer involution eigenspaces {dims:?}"))?;
    let models = [
        KummerModel::power(2, 1),
        KummerModel::new(2, vec![(qi(0), 1), (qi(1), 1)]),
        KummerModel::power(3, 1),
        KummerModel::power(3, 2),
        KummerModel::new(3, vec![(qi(0), 1), (qi(1), 2)]),
        KummerModel::new(3, vec![(qi(0), 1), (qi(1), 1), (qi(2), 1)]),
    ];
    for m in models {
        let m = m.map_err(|e| e.to_string())?;
        for j in 0..m.branch.len() {
            for s in m.eigensheaf_stalks(j).map_err(|e| e.to_string())? {
                ensure(s.i == 0 || s.product_shift == m.p, || format!("{m:?} branch {j}: {s:?}"))?;
            }
        }
        let t = m.tangent_twist_check(4);
        ensure(t.ok(), || format!("{m:?}: {t:?}"))?;
    }
    Ok("Jacobi and invariance for A1-A3, eigenspaces (3, 5), pairing exponents and tangent twist for p = 2, 3".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("Virasoro identities, A1 and A2, levels 1-2, |k|,|l| <= 2, depth 3", virasoro_identities),
        ("abelian oracle, |k|,|l| <= 3", abelian_oracle),
        ("Casimir, dual Coxeter numbers and T0 on the fundamental vector", casimir_and_dual_coxeter),
        ("Kac-Walton table equals coinvariant ranks", fusion_agreement),
        ("genus-one factorization", genus_one_factorization),
        ("propagation of vacua", propagation_of_vacua),
        ("sewing element and sewing map", sewing_suite),
        ("finite torsor suite", torsor_criteria),
        ("structural invariants", structural_invariants),
    ];
    let mut all = true;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let r = f();
        let secs = t.elapsed().as_secs_f64();
        match r {
            Ok(detail) => println!("PASS {} {name}: {detail} [{secs:.1}s]", i + 1),
            Err(e) => {
                all = false;
                println!("FAIL {} {name}: {e} [{secs:.1}s]", i + 1);
            }
        }
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
