//! Randomized invariants over exact arithmetic, linear algebra, covering
//! data, fusion rules and finite groups.

use proptest::prelude::*;

use twistcb::blocks::fusion_table;
use twistcb::cover::{glue, inv_mod, normalize, BranchLeg, CoveringGraph, GraphLeg, GraphVertex, KummerModel};
use twistcb::cyclo::{q, qi, zeta, CycNumber, Q};
use twistcb::liealg::{build_simple, dual_weight, gamma_on_weights, CartanType, GammaAction, Weight};
use twistcb::linalg::{Mat, SparseMat};
use twistcb::torsorlab::FiniteGroup;

const PRIMES: [u32; 4] = [2, 3, 5, 7];

fn rational() -> impl Strategy<Value = Q> {
    (-20i64..=20, 1i64..=9).prop_map(|(n, d)| q(n, d))
}

fn cyc(p: u32) -> impl Strategy<Value = CycNumber> {
    prop::collection::vec(rational(), (p - 1) as usize).prop_map(move |c| CycNumber::from_coeffs(p, c).unwrap())
}

fn cyc_triple() -> impl Strategy<Value = (u32, CycNumber, CycNumber, CycNumber)> {
    prop::sample::select(PRIMES.to_vec()).prop_flat_map(|p| (Just(p), cyc(p), cyc(p), cyc(p)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cyclotomic_field_laws((_p, a, b, c) in cyc_triple()) {
        prop_assert_eq!(&(&a + &b) - &b, a.clone());
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        if !a.is_zero() {
            prop_assert!((&a * &a.inv().unwrap()).is_one());
        }
    }

    #[test]
    fn galois_action_is_a_ring_map((p, a, b, _c) in cyc_triple(), j in 1u32..7) {
        prop_assume!(j % p != 0);
        prop_assert_eq!((&a * &b).galois(j), &a.galois(j) * &b.galois(j));
        prop_assert_eq!((&a + &b).galois(j), &a.galois(j) + &b.galois(j));
        prop_assert_eq!((&a * &b).norm_in(p).unwrap(), a.norm_in(p).unwrap() * b.norm_in(p).unwrap());
    }

    #[test]
    fn roots_of_unity_have_order_p(p in prop::sample::select(PRIMES.to_vec())) {
        let z = zeta(p).unwrap();
        prop_assert!(z.pow(p as i64).is_one());
        prop_assert!(!z.is_one());
    }

    #[test]
    fn rank_is_transpose_invariant(rows in prop::collection::vec(prop::collection::vec(-3i64..=3, 5), 1..6)) {
        let m: Mat<Q> = Mat::from_rows(rows.iter().map(|r| r.iter().map(|&x| qi(x)).collect()).collect());
        prop_assert_eq!(m.rank(), m.transpose().rank());
        prop_assert!(m.rank() <= m.rows.min(m.cols));
        for v in m.nullspace() {
            prop_assert!(m.apply(&v).iter().all(|x| *x == qi(0)));
        }
    }

    #[test]
    fn sparse_composition_matches_dense(
        a in prop::collection::vec(prop::collection::vec(-3i64..=3, 4), 3),
        b in prop::collection::vec(prop::collection::vec(-3i64..=3, 5), 4),
    ) {
        let da: Mat<Q> = Mat::from_rows(a.iter().map(|r| r.iter().map(|&x| qi(x)).collect()).collect());
        let db: Mat<Q> = Mat::from_rows(b.iter().map(|r| r.iter().map(|&x| qi(x)).collect()).collect());
        let sa = SparseMat::from_dense(&da);
        let sb = SparseMat::from_dense(&db);
        prop_assert_eq!(sa.compose(&sb).to_dense(), da.mul(&db));
        prop_assert_eq!(sa.lin_comb(&qi(2), &sa, &qi(-2)).nnz(), 0);
    }

    #[test]
    fn eigensheaf_pairing_exponent(p in prop::sample::select(vec![2u32, 3, 5]), chars in prop::collection::vec(1u32..5, 1..4)) {
        let branch: Vec<(Q, u32)> = chars.iter().enumerate().map(|(k, &n)| (qi(k as i64), 1 + (n - 1) % (p - 1))).collect();
        let m = KummerModel::new(p, branch.clone()).unwrap();
        for j in 0..branch.len() {
            let stalks = m.eigensheaf_stalks(j).unwrap();
            let inv = inv_mod(branch[j].1, p);
            for s in stalks.iter().filter(|s| s.i != 0) {
                prop_assert_eq!(s.product_shift, p);
                prop_assert_eq!(s.shift, s.i * inv % p);
            }
        }
    }

    #[test]
    fn graph_json_and_normalization_roundtrip(
        genera in prop::collection::vec(0u32..2, 1..4),
        edges in prop::collection::vec((0usize..4, 0usize..4), 0..4),
        legs in prop::collection::vec(0usize..4, 0..4),
        branch in prop::collection::vec((0usize..4, 1u32..3), 0..3),
    ) {
        let n = genera.len();
        let g = CoveringGraph {
            id: None,
            p: 3,
            vertices: genera.iter().map(|&genus| GraphVertex { genus }).collect(),
            edges: edges.iter().map(|&(a, b)| [a % n, b % n]).collect(),
            legs: legs.iter().enumerate().map(|(k, &v)| GraphLeg { vertex: v % n, label: format!("l{k}"), at: None }).collect(),
            branch: branch.iter().map(|&(v, c)| BranchLeg { vertex: v % n, char: c, edge: None, at: None }).collect(),
            xi: None,
        };
        prop_assert_eq!(CoveringGraph::from_json(&g.to_json()).unwrap(), g.clone());
        // Stability oracle: 2g − 2 + (special points) > 0 at every vertex.
        let mut special = vec![0i64; n];
        for l in &g.legs { special[l.vertex] += 1; }
        for b in &g.branch { special[b.vertex] += 1; }
        for e in &g.edges { special[e[0]] += 1; special[e[1]] += 1; }
        let stable = g.vertices.iter().zip(&special).all(|(v, s)| 2 * v.genus as i64 - 2 + s > 0);
        let flagged = g.validate().iter().any(|v| v.rule == twistcb::cover::RULE_STABILITY);
        prop_assert_eq!(stable, !flagged);
        for e in 0..g.edges.len() {
            let h = normalize(&g, e).unwrap();
            prop_assert_eq!(h.edges.len() + 1, g.edges.len());
            prop_assert_eq!(h.hurwitz(), g.hurwitz());
            let (plus, minus) = CoveringGraph::node_leg_names(e);
            prop_assert_eq!(glue(&h, &plus, &minus, e).unwrap(), g.clone());
        }
    }
}

#[test]
fn fusion_rules_are_symmetric_and_dual_invariant() {
    for (n, level) in [(1usize, 3u32), (2, 2)] {
        let g = build_simple(CartanType::A(n)).unwrap();
        let t = fusion_table(&g, level).unwrap();
        let ws = g.enumerate_levels(level);
        for a in &ws {
            for b in &ws {
                for c in &ws {
                    let n_abc = t.rank(a, b, c).unwrap();
                    assert_eq!(n_abc, t.rank(b, a, c).unwrap());
                    assert_eq!(n_abc, t.rank(c, b, a).unwrap());
                    let d = |w: &Weight| dual_weight(&g, w).unwrap();
                    assert_eq!(n_abc, t.rank(&d(a), &d(b), &d(c)).unwrap());
                }
                // N_{a b 0} = δ_{b, a*}.
                let z = Weight::zero(n);
                assert_eq!(t.rank(a, b, &z).unwrap(), (*b == dual_weight(&g, a).unwrap()) as u64);
            }
        }
    }
}

#[test]
fn outer_action_on_weights_is_an_involution_preserving_level() {
    let g = build_simple(CartanType::A(2)).unwrap();
    let rho = GammaAction::diagram(&g, &[1, 0], 2).unwrap();
    for w in g.enumerate_levels(3) {
        let v = gamma_on_weights(&g, &rho, &w).unwrap();
        assert_eq!(g.level_of(&v), g.level_of(&w));
        assert_eq!(gamma_on_weights(&g, &rho, &v).unwrap(), w);
    }
}

#[test]
fn finite_group_axioms() {
    for g in [FiniteGroup::symmetric(4).unwrap(), FiniteGroup::cyclic(3).unwrap(), FiniteGroup::symmetric(3).unwrap()] {
        let n = g.order();
        let e = g.identity();
        for a in 0..n {
            assert_eq!(g.mul(a, e), a);
            assert_eq!(g.mul(a, g.inv(a)), e);
            for b in 0..n {
                for c in 0..n {
                    assert_eq!(g.mul(g.mul(a, b), c), g.mul(a, g.mul(b, c)));
                }
            }
        }
    }
}
