//! Library results compared with closed-form values computed independently
//! inside the tests: Weyl dimensions, lattice characters of level-one
//! modules, conformal weights and level-ℓ fusion rules.

use std::sync::Arc;

use num_traits::{One, Zero};
use twistcb::blocks::fusion_table;
use twistcb::cyclo::{q, qi, Q};
use twistcb::liealg::{build_simple, irrep, CartanType, LieAlgebra, Weight};
use twistcb::looprep::integrable_module;
use twistcb::sugawara::{casimir, sugawara_operator};

fn alg(n: usize) -> Arc<LieAlgebra> {
    Arc::new(build_simple(CartanType::A(n)).unwrap())
}

/// Gram matrix of the fundamental weights for the form with (θ|θ) = 2.
fn fundamental_gram(n: usize) -> Vec<Vec<Q>> {
    // For A_n: (ω_i|ω_j) = min(i,j)(n+1−max(i,j))/(n+1), 1-based.
    let m = (n + 1) as i64;
    (1..=n as i64)
        .map(|i| (1..=n as i64).map(|j| q(i.min(j) * (m - i.max(j)), m)).collect())
        .collect()
}

fn pair(g: &[Vec<Q>], a: &[i64], b: &[i64]) -> Q {
    let mut s = Q::zero();
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            s += &g[i][j] * qi(x * y);
        }
    }
    s
}

/// Weyl dimension formula for A_n: Π_{i≤j} (λ_i+⋯+λ_j + j−i+1)/(j−i+1).
fn weyl_dim(lambda: &[i64]) -> i64 {
    let n = lambda.len();
    let mut num = Q::one();
    for i in 0..n {
        for j in i..n {
            let s: i64 = lambda[i..=j].iter().sum();
            num *= q(s + (j - i + 1) as i64, (j - i + 1) as i64);
        }
    }
    assert!(num.is_integer());
    num.to_integer().try_into().unwrap()
}

#[test]
fn irrep_dimensions_match_weyl_formula() {
    for n in 1..=2 {
        let g = alg(n);
        for w in g.enumerate_levels(4) {
            let v = irrep(&g, &w).unwrap();
            assert_eq!(v.dim as i64, weyl_dim(&w.0), "A{n} {w}");
        }
    }
}

/// Partitions of k into parts of `colors` colors: coefficients of φ(q)^{−colors}.
fn colored_partitions(colors: usize, max: usize) -> Vec<i64> {
    let mut c = vec![0i64; max + 1];
    c[0] = 1;
    for _ in 0..colors {
        for part in 1..=max {
            for k in part..=max {
                c[k] += c[k - part];
            }
        }
    }
    c
}

/// Graded dimensions of the level-one module for A_n with label ω_j
/// (ω_0 = 0): Σ_{γ ∈ ω_j + Q} q^{|γ|²/2 − |ω_j|²/2} / φ(q)^n.
fn lattice_character(n: usize, j: usize, depth: usize) -> Vec<i64> {
    let g = fundamental_gram(n);
    let mut shift = vec![0i64; n];
    if j > 0 {
        shift[j - 1] = 1;
    }
    let base = pair(&g, &shift, &shift);
    let p = colored_partitions(n, depth);
    let mut theta = vec![0i64; depth + 1];
    // Root lattice in fundamental coordinates: rows of the Cartan matrix.
    let cartan: Vec<Vec<i64>> = (0..n)
        .map(|i| (0..n).map(|k| if i == k { 2 } else if i.abs_diff(k) == 1 { -1 } else { 0 }).collect())
        .collect();
    let r = 6i64;
    let mut coeffs = vec![-r; n];
    loop {
        let mut v = shift.clone();
        for (i, c) in coeffs.iter().enumerate() {
            for k in 0..n {
                v[k] += c * cartan[i][k];
            }
        }
        let e = (pair(&g, &v, &v) - &base) / qi(2);
        assert!(e.is_integer() && e >= Q::zero());
        let e: i64 = e.to_integer().try_into().unwrap();
        if (e as usize) <= depth {
            theta[e as usize] += 1;
        }
        let mut i = 0;
        while i < n {
            coeffs[i] += 1;
            if coeffs[i] <= r {
                break;
            }
            coeffs[i] = -r;
            i += 1;
        }
        if i == n {
            break;
        }
    }
    (0..=depth).map(|d| (0..=d).map(|k| theta[k] * p[d - k]).sum()).collect()
}

#[test]
fn level_one_a1_matches_lattice_character() {
    let g = alg(1);
    assert_eq!(lattice_character(1, 0, 4), vec![1, 3, 4, 7, 13]);
    for j in 0..=1 {
        let w = Weight(vec![j as i64]);
        let m = integrable_module(g.clone(), &w, 1, 5).unwrap();
        let dims: Vec<i64> = m.dims.iter().map(|&d| d as i64).collect();
        assert_eq!(dims, lattice_character(1, j, 5), "{w}");
    }
}

#[test]
fn level_one_a2_matches_lattice_character() {
    let g = alg(2);
    for j in 0..=2 {
        let mut w = vec![0i64; 2];
        if j > 0 {
            w[j - 1] = 1;
        }
        let w = Weight(w);
        let m = integrable_module(g.clone(), &w, 1, 3).unwrap();
        let dims: Vec<i64> = m.dims.iter().map(|&d| d as i64).collect();
        assert_eq!(dims, lattice_character(2, j, 3), "{w}");
    }
}

#[test]
fn sugawara_zero_mode_is_minus_conformal_weight() {
    for (n, level) in [(1usize, 1u32), (1, 2), (2, 1)] {
        let g = alg(n);
        let gram = fundamental_gram(n);
        let rho = vec![1i64; n];
        let hv = qi(n as i64 + 1);
        let cas = casimir(&g);
        for w in g.enumerate_levels(level) {
            let two_rho_plus: Vec<i64> = w.0.iter().zip(&rho).map(|(a, r)| a + 2 * r).collect();
            let h = pair(&gram, &w.0, &two_rho_plus) / (qi(2) * (qi(level as i64) + &hv));
            let m = integrable_module(g.clone(), &w, level, 2).unwrap();
            let t0 = sugawara_operator(&m, &cas, 0).unwrap();
            for d in 0..=2usize {
                let b = t0.block(d).unwrap().to_dense();
                let expected = -(&h + qi(d as i64));
                for i in 0..b.rows {
                    for j in 0..b.cols {
                        let want = if i == j { expected.clone() } else { Q::zero() };
                        assert_eq!(*b.get(i, j), want, "A{n} level {level} {w} degree {d}");
                    }
                }
            }
        }
    }
}

#[test]
fn t0_on_fundamental_vector() {
    let g = alg(1);
    let m = integrable_module(g.clone(), &Weight(vec![1]), 1, 0).unwrap();
    let t0 = sugawara_operator(&m, &casimir(&g), 0).unwrap();
    assert_eq!(*t0.block(0).unwrap().to_dense().get(0, 0), q(-1, 4));
}

/// Level-ℓ A1 fusion: N_{abc} = 1 iff a+b+c even, triangle inequality,
/// and a+b+c ≤ 2ℓ.
fn a1_fusion(level: i64, a: i64, b: i64, c: i64) -> u64 {
    let ok = (a + b + c) % 2 == 0 && c <= a + b && a <= b + c && b <= a + c && a + b + c <= 2 * level;
    ok as u64
}

#[test]
fn a1_fusion_table_matches_closed_form() {
    let g = alg(1);
    for level in 0..=3u32 {
        let t = fusion_table(&g, level).unwrap();
        for a in 0..=level as i64 {
            for b in 0..=level as i64 {
                for c in 0..=level as i64 {
                    let got = t.rank(&Weight(vec![a]), &Weight(vec![b]), &Weight(vec![c])).unwrap();
                    assert_eq!(got, a1_fusion(level as i64, a, b, c), "level {level} ({a},{b},{c})");
                }
            }
        }
    }
}

#[test]
fn a2_level_one_fusion_is_z3() {
    let g = alg(2);
    let t = fusion_table(&g, 1).unwrap();
    let ws = [vec![0, 0], vec![1, 0], vec![0, 1]];
    // Triality of ω_j is j; blocks exist iff the total triality vanishes.
    for (i, a) in ws.iter().enumerate() {
        for (j, b) in ws.iter().enumerate() {
            for (k, c) in ws.iter().enumerate() {
                let want = ((i + j + k) % 3 == 0) as u64;
                let got = t.rank(&Weight(a.clone()), &Weight(b.clone()), &Weight(c.clone())).unwrap();
                assert_eq!(got, want, "{a:?} {b:?} {c:?}");
            }
        }
    }
}

#[test]
fn ad_casimir_is_twice_dual_coxeter() {
    for (n, hv) in [(1usize, 2i64), (2, 3)] {
        let g = alg(n);
        let cas = casimir(&g);
        assert_eq!(cas.dual_coxeter, qi(hv));
        let m = cas.ad_sum(&g);
        for i in 0..g.dim() {
            for j in 0..g.dim() {
                let want = if i == j { qi(2 * hv) } else { Q::zero() };
                assert_eq!(*m.get(i, j), want);
            }
        }
    }
}
