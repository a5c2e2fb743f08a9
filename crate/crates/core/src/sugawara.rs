//! Casimir tensor, normal ordering and Sugawara operators on truncated
//! graded modules, with exact checks of the Virasoro relations. Also holds
//! the one-dimensional abelian (Heisenberg) engine.
//!
//! Convention: T_k = T(D̂_k) = −Ĉ_k/(ℓ+ȟ) with
//! Ĉ_k = ½ Σ_j Σ_m °° X_j t^{k−m} ⊗ Y_j t^m °°, so that
//! [T_k, X⊗tⁿ] = n X⊗t^{n+k} and
//! [T_k, T_l] = (l−k) T_{k+l} + c₀ (k³−k)/12 δ_{k,−l}, c₀ = ℓ dim𝔤/(ℓ+ȟ).

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cyclo::{q, qi, Q};
use crate::liealg::LieAlgebra;
use crate::linalg::{Field, Mat, SparseMat};
use crate::looprep::{LoopError, ModeAction};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SugError {
    #[error("window too small: mode {k} from degree {d} needs depth {need}, have {have}")]
    Window { k: i64, d: usize, need: i64, have: usize },
    #[error("the supplied vectors do not form a basis of the Lie algebra")]
    DegenerateBasis,
    #[error(transparent)]
    Loop(#[from] LoopError),
}

/// Dual-basis pairs (X_i, Y_i) with (X_i|Y_j) = δ_ij, in coordinates of the
/// standard basis, together with the dual Coxeter number.
#[derive(Clone, Debug)]
pub struct CasimirTensor {
    pub pairs: Vec<(Vec<Q>, Vec<Q>)>,
    pub dual_coxeter: Q,
}

/// Casimir tensor for the standard basis.
pub fn casimir(alg: &LieAlgebra) -> CasimirTensor {
    let basis: Vec<Vec<Q>> = (0..alg.dim()).map(|a| alg.unit(a)).collect();
    casimir_with_basis(alg, &basis).expect("standard basis")
}

/// Casimir tensor for an arbitrary basis {X_i}; the dual basis is solved
/// from the Gram matrix of the normalized form.
pub fn casimir_with_basis(alg: &LieAlgebra, basis: &[Vec<Q>]) -> Result<CasimirTensor, SugError> {
    let n = alg.dim();
    if basis.len() != n {
        return Err(SugError::DegenerateBasis);
    }
    let gram = Mat::from_rows(
        basis.iter().map(|x| basis.iter().map(|y| alg.form_vec(x, y)).collect()).collect(),
    );
    let inv = gram.inverse().ok_or(SugError::DegenerateBasis)?;
    // Y_i = Σ_j (G^{-1})_{ji} X_j gives (X_k|Y_i) = δ_ki.
    let pairs: Vec<(Vec<Q>, Vec<Q>)> = (0..n)
        .map(|i| {
            let mut y = vec![Q::zero(); n];
            for (j, xj) in basis.iter().enumerate() {
                let c = inv.get(j, i);
                if !c.is_zero() {
                    for (t, x) in y.iter_mut().zip(xj) {
                        *t += c * x;
                    }
                }
            }
            (basis[i].clone(), y)
        })
        .collect();
    let mut t = CasimirTensor { pairs, dual_coxeter: Q::zero() };
    let ad = t.ad_sum(alg);
    // Σ ad(X_i)ad(Y_i) = 2ȟ·id.
    let s = ad.get(0, 0).clone();
    assert!(ad.sub(&Mat::identity(n).scale(&s)).is_zero(), "Casimir of the adjoint is scalar");
    t.dual_coxeter = s / qi(2);
    Ok(t)
}

fn ad_matrix(alg: &LieAlgebra, x: &[Q]) -> Mat<Q> {
    let n = alg.dim();
    let cols: Vec<Vec<Q>> = (0..n).map(|b| alg.bracket_vec(x, &alg.unit::<Q>(b))).collect();
    Mat::from_cols(&cols, n)
}

impl CasimirTensor {
    /// Σ_i ad(X_i) ad(Y_i) on 𝔤.
    pub fn ad_sum(&self, alg: &LieAlgebra) -> Mat<Q> {
        let n = alg.dim();
        let mut acc = Mat::zeros(n, n);
        for (x, y) in &self.pairs {
            acc = acc.add(&ad_matrix(alg, x).mul(&ad_matrix(alg, y)));
        }
        acc
    }

    /// Σ_i ρ(X_i)ρ(Y_i) for a representation given by basis matrices.
    pub fn on_rep(&self, mats: &[SparseMat<Q>]) -> SparseMat<Q> {
        let dim = mats.first().map(|m| m.ncols).unwrap_or(0);
        let combine = |x: &[Q]| {
            let mut acc = SparseMat::zeros(dim, dim);
            for (a, c) in x.iter().enumerate() {
                if !c.is_zero() {
                    acc = acc.lin_comb(&Q::one(), &mats[a], c);
                }
            }
            acc
        };
        let mut acc = SparseMat::zeros(dim, dim);
        for (x, y) in &self.pairs {
            acc = acc.lin_comb(&Q::one(), &combine(x).compose(&combine(y)), &Q::one());
        }
        acc
    }
}

/// A loop mode X⊗tⁿ identified by a coordinate vector of X and n.
#[derive(Clone, Debug, PartialEq)]
pub struct Mode {
    pub x: Vec<Q>,
    pub n: i64,
}

/// Normal ordering of X tⁿ ⊗ Y tᵐ: unchanged if n < m, swapped if n > m,
/// symmetrized with coefficient ½ if n = m. Each term (c, left, right)
/// denotes c·left∘right, the right factor acting first.
pub fn normal_order(x: &Mode, y: &Mode) -> Vec<(Q, Mode, Mode)> {
    use std::cmp::Ordering::*;
    match x.n.cmp(&y.n) {
        Less => vec![(Q::one(), x.clone(), y.clone())],
        Greater => vec![(Q::one(), y.clone(), x.clone())],
        Equal => vec![(q(1, 2), x.clone(), y.clone()), (q(1, 2), y.clone(), x.clone())],
    }
}

/// Matrix of T(D̂_k) per source degree d (target degree d − k).
#[derive(Clone, Debug)]
pub struct VirasoroElement {
    pub k: i64,
    pub blocks: BTreeMap<usize, SparseMat<Q>>,
}

impl VirasoroElement {
    pub fn block(&self, d: usize) -> Option<&SparseMat<Q>> {
        self.blocks.get(&d)
    }
}


/// Ĉ_k restricted to source degree d.
fn c_hat_block<M: ModeAction>(m: &M, cas: &CasimirTensor, k: i64, d: usize) -> Result<SparseMat<Q>, SugError> {
    let di = d as i64;
    let target = di - k;
    let rows = m.dim_at_signed(target);
    let cols = m.dim_at(d);
    let mut acc = SparseMat::zeros(rows, cols);
    if target < 0 {
        return Ok(acc);
    }
    // The first-acting factor has exponent s = max(k−m, m); terms with
    // s > d annihilate degree d, so m ranges over [k−d, d].
    for (x, y) in &cas.pairs {
        for mm in (k - di)..=di {
            let left = Mode { x: x.clone(), n: k - mm };
            let right = Mode { x: y.clone(), n: mm };
            for (c, a, b) in normal_order(&left, &right) {
                let mid = di - b.n;
                if mid < 0 {
                    continue;
                }
                let mb = m.mode_vec(&b.x, b.n, d)?;
                let ma = m.mode_vec(&a.x, a.n, mid as usize)?;
                acc = acc.lin_comb(&Q::one(), &ma.compose(&mb), &(c * q(1, 2)));
            }
        }
    }
    Ok(acc)
}

/// T(D̂_k) on every source degree whose target lies in the window.
pub fn sugawara_operator<M: ModeAction>(m: &M, cas: &CasimirTensor, k: i64) -> Result<VirasoroElement, SugError> {
    let denom = qi(m.level() as i64) + &cas.dual_coxeter;
    let s = -(Q::one() / denom);
    let mut blocks = BTreeMap::new();
    for d in 0..=m.depth() {
        let target = d as i64 - k;
        if target > m.depth() as i64 {
            continue;
        }
        blocks.insert(d, c_hat_block(m, cas, k, d)?.scale(&s));
    }
    if blocks.is_empty() {
        return Err(SugError::Window { k, d: 0, need: -k, have: m.depth() });
    }
    Ok(VirasoroElement { k, blocks })
}

/// Central charge c₀ = ℓ dim𝔤/(ℓ+ȟ).
pub fn central_charge(alg: &LieAlgebra, level: u32, cas: &CasimirTensor) -> Q {
    qi(level as i64) * qi(alg.dim() as i64) / (qi(level as i64) + &cas.dual_coxeter)
}

/// Outcome of an exact identity check on a window.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VirasoroReport {
    pub k: i64,
    pub l: i64,
    pub degrees_checked: Vec<usize>,
    pub mode_checks: usize,
    pub failure: Option<String>,
}

impl VirasoroReport {
    pub fn ok(&self) -> bool {
        self.failure.is_none() && (!self.degrees_checked.is_empty() || self.mode_checks > 0)
    }
}

fn first_mismatch(lhs: &SparseMat<Q>, rhs: &SparseMat<Q>) -> Option<(usize, usize, Q, Q)> {
    let diff = lhs.lin_comb(&Q::one(), rhs, &-Q::one());
    let j = diff.cols.iter().position(|c| !c.is_empty())?;
    let i = diff.cols[j][0].0;
    let entry = |m: &SparseMat<Q>| m.cols[j].iter().find(|(r, _)| *r == i).map_or_else(Q::zero, |(_, x)| x.clone());
    Some((i, j, entry(lhs), entry(rhs)))
}

/// Composition T_a ∘ T_b on source degree d, `None` if outside the window.
fn compose_at(ta: &VirasoroElement, tb: &VirasoroElement, d: usize, dims: &dyn Fn(i64) -> usize) -> Option<SparseMat<Q>> {
    let mid = d as i64 - tb.k;
    let tgt = mid - ta.k;
    let b = tb.block(d)?;
    if mid < 0 {
        return Some(SparseMat::zeros(dims(tgt), b.ncols));
    }
    let a = ta.block(mid as usize)?;
    Some(a.compose(b))
}

/// Checks [T_k, T_l] = (l−k)T_{k+l} + c₀(k³−k)/12 δ_{k,−l} and
/// [T_k, X⊗tⁿ] = nX⊗t^{n+k} for all basis X and |n| ≤ n_max, on every
/// degree of the window where all maps are defined.
pub fn virasoro_check<M: ModeAction>(m: &M, cas: &CasimirTensor, k: i64, l: i64, n_max: i64) -> Result<VirasoroReport, SugError> {
    let tk = sugawara_operator(m, cas, k)?;
    let tl = sugawara_operator(m, cas, l)?;
    let tkl = window_operator(m, cas, k + l)?;
    let mut rep = VirasoroReport { k, l, ..Default::default() };
    if let Some(f) = bracket_failure(m, cas, &tk, &tl, &tkl, &mut rep.degrees_checked) {
        rep.failure = Some(f);
        return Ok(rep);
    }
    rep.failure = mode_failures(m, &tk, n_max, &mut rep.mode_checks)?;
    Ok(rep)
}

/// T_k, or an operator without blocks when |k| exceeds the depth: then no
/// degree of the window sees it.
fn window_operator<M: ModeAction>(m: &M, cas: &CasimirTensor, k: i64) -> Result<VirasoroElement, SugError> {
    match sugawara_operator(m, cas, k) {
        Ok(t) => Ok(t),
        Err(SugError::Window { .. }) => Ok(VirasoroElement { k, blocks: BTreeMap::new() }),
        Err(e) => Err(e),
    }
}

fn bracket_failure<M: ModeAction>(
    m: &M,
    cas: &CasimirTensor,
    tk: &VirasoroElement,
    tl: &VirasoroElement,
    tkl: &VirasoroElement,
    degrees: &mut Vec<usize>,
) -> Option<String> {
    let (k, l) = (tk.k, tl.k);
    let c0 = central_charge(m.alg(), m.level(), cas);
    let dims = |d: i64| m.dim_at_signed(d);
    for d in 0..=m.depth() {
        let (Some(kl), Some(lk), Some(sum)) = (compose_at(tk, tl, d, &dims), compose_at(tl, tk, d, &dims), tkl.block(d))
        else {
            continue;
        };
        let mut rhs = sum.scale(&qi(l - k));
        if k == -l {
            let c = &c0 * qi(k * k * k - k) / qi(12);
            rhs = rhs.lin_comb(&Q::one(), &SparseMat::identity(m.dim_at(d)), &c);
        }
        let lhs = kl.lin_comb(&Q::one(), &lk, &-Q::one());
        if let Some((i, j, a, b)) = first_mismatch(&lhs, &rhs) {
            return Some(format!("[T_{k}, T_{l}] at degree {d}, entry ({i},{j}): {a} != {b}"));
        }
        degrees.push(d);
    }
    None
}

fn mode_failures<M: ModeAction>(m: &M, tk: &VirasoroElement, n_max: i64, count: &mut usize) -> Result<Option<String>, SugError> {
    for a in 0..m.alg().dim() {
        for n in -n_max..=n_max {
            if let Some(msg) = mode_commutator_failure(m, tk, a, n)? {
                return Ok(Some(msg));
            }
            *count += 1;
        }
    }
    Ok(None)
}

/// Outcome of checking every pair |k|, |l| ≤ k_max on one window.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WindowReport {
    /// Pairs for which some degree of the window carries both sides.
    pub pairs_checked: usize,
    /// Pairs whose sum lies outside the window.
    pub pairs_outside: usize,
    pub mode_checks: usize,
    pub failure: Option<String>,
}

impl WindowReport {
    pub fn ok(&self) -> bool {
        self.failure.is_none() && self.pairs_checked > 0
    }
}

/// Both Virasoro identities for all |k|, |l| ≤ k_max and |n| ≤ n_max,
/// computing each T_k once.
pub fn virasoro_window_check<M: ModeAction>(m: &M, cas: &CasimirTensor, k_max: i64, n_max: i64) -> Result<WindowReport, SugError> {
    let mut ops = BTreeMap::new();
    for k in -2 * k_max..=2 * k_max {
        ops.insert(k, window_operator(m, cas, k)?);
    }
    let mut rep = WindowReport::default();
    for k in -k_max..=k_max {
        for l in -k_max..=k_max {
            let mut degrees = Vec::new();
            if let Some(f) = bracket_failure(m, cas, &ops[&k], &ops[&l], &ops[&(k + l)], &mut degrees) {
                rep.failure = Some(f);
                return Ok(rep);
            }
            if degrees.is_empty() {
                rep.pairs_outside += 1;
            } else {
                rep.pairs_checked += 1;
            }
        }
        if let Some(f) = mode_failures(m, &ops[&k], n_max, &mut rep.mode_checks)? {
            rep.failure = Some(f);
            return Ok(rep);
        }
    }
    Ok(rep)
}

/// [T_k, X_a tⁿ] − nX_a t^{n+k} on all degrees where defined; returns a
/// description of the first nonzero entry.
fn mode_commutator_failure<M: ModeAction>(m: &M, tk: &VirasoroElement, a: usize, n: i64) -> Result<Option<String>, SugError> {
    let k = tk.k;
    let depth = m.depth() as i64;
    for d in 0..=m.depth() {
        let di = d as i64;
        let tgt = di - n - k;
        if di - n > depth || di - k > depth || tgt > depth {
            continue;
        }
        let (Some(tk_d), mid_ok) = (tk.block(d), di - n < 0 || tk.block((di - n) as usize).is_some()) else {
            continue;
        };
        if !mid_ok {
            continue;
        }
        let rows = m.dim_at_signed(tgt);
        let x_then_t = if di - n < 0 {
            SparseMat::zeros(rows, m.dim_at(d))
        } else {
            tk.block((di - n) as usize).unwrap().compose(&*m.mode(a, n, d)?)
        };
        let t_then_x = if di - k < 0 {
            SparseMat::zeros(rows, m.dim_at(d))
        } else {
            m.mode(a, n, (di - k) as usize)?.compose(tk_d)
        };
        let lhs = x_then_t.lin_comb(&Q::one(), &t_then_x, &-Q::one());
        let rhs = m.mode(a, n + k, d)?.scale(&qi(n));
        if let Some((i, j, x, y)) = first_mismatch(&lhs, &rhs) {
            return Ok(Some(format!(
                "[T_{k}, {} t^{n}] at degree {d}, entry ({i},{j}): {x} != {y}",
                m.alg().basis_name(a)
            )));
        }
    }
    Ok(None)
}

/// Spot check on random words: T_k(X_r⋯X_1 v) equals
/// Σ_i X_r⋯(n_i X_i t^{n_i+k})⋯X_1 v + X_r⋯X_1 T_k v, for v ∈ V_λ and
/// nonpositive modes n_i. Returns the number of words checked.
pub fn fock_compatibility_check<M: ModeAction>(
    m: &M,
    cas: &CasimirTensor,
    k: i64,
    words: usize,
    seed: u64,
) -> Result<Result<usize, String>, SugError> {
    let tk = sugawara_operator(m, cas, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = m.alg().dim();
    let depth = m.depth() as i64;
    let mut done = 0;
    let mut attempts = 0;
    while done < words && attempts < 50 * words.max(1) {
        attempts += 1;
        let len = rng.gen_range(1..=3usize);
        let word: Vec<(usize, i64)> = (0..len).map(|_| (rng.gen_range(0..g), -rng.gen_range(0..=2i64))).collect();
        let total: i64 = word.iter().map(|w| -w.1).sum();
        // Every intermediate state must stay inside the window, including
        // after the k-shift.
        if total > depth || total - k > depth || total - k < 0 || -k > depth {
            continue;
        }
        let j = rng.gen_range(0..m.dim_at(0));
        let mut v = vec![Q::zero(); m.dim_at(0)];
        v[j] = Q::one();
        let apply = |word: &[(usize, i64)], v: &[Q], d0: i64| -> Result<(Vec<Q>, i64), SugError> {
            let mut cur = v.to_vec();
            let mut d = d0;
            for &(a, n) in word {
                if d < 0 {
                    return Ok((Vec::new(), d - n));
                }
                cur = m.mode(a, n, d as usize)?.apply(&cur);
                d -= n;
            }
            Ok((cur, d))
        };
        // Words are listed in application order X_1 first.
        let (w, dw) = apply(&word, &v, 0)?;
        let Some(blk) = tk.block(dw as usize) else { continue };
        let lhs = blk.apply(&w);
        let mut rhs = vec![Q::zero(); m.dim_at_signed(dw - k)];
        for i in 0..word.len() {
            let (head, tail) = word.split_at(i);
            let (a, n) = tail[0];
            let (u, du) = apply(head, &v, 0)?;
            if du - n - k > depth || du - n - k < 0 || du < 0 {
                continue;
            }
            let u = m.mode(a, n + k, du as usize)?.apply(&u);
            let u: Vec<Q> = u.into_iter().map(|x| x * qi(n)).collect();
            let (u, _) = apply(&tail[1..], &u, du - n - k)?;
            for (r, x) in rhs.iter_mut().zip(u) {
                *r += x;
            }
        }
        if -k >= 0 {
            if let Some(b0) = tk.block(0) {
                let tv = b0.apply(&v);
                let (u, _) = apply(&word, &tv, -k)?;
                for (r, x) in rhs.iter_mut().zip(u) {
                    *r += x;
                }
            }
        }
        if lhs != rhs {
            return Ok(Err(format!("word {word:?} on basis vector {j}: mismatch")));
        }
        done += 1;
    }
    Ok(Ok(done))
}

/// Fock module of the Heisenberg algebra [a_n, a_m] = nħδ_{n+m,0}, with
/// a_0 acting by μ, truncated at a depth. Basis per degree: partitions,
/// standing for monomials a_{−k_1}⋯a_{−k_r}|μ⟩.
#[derive(Clone, Debug)]
pub struct FockSpace {
    pub hbar: Q,
    pub mu: Q,
    pub depth: usize,
    pub basis: Vec<Vec<Vec<u32>>>,
    index: Vec<HashMap<Vec<u32>, usize>>,
}

fn partitions(n: u32, max: u32) -> Vec<Vec<u32>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in (1..=n.min(max)).rev() {
        for mut rest in partitions(n - first, first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

impl FockSpace {
    pub fn new(hbar: Q, mu: Q, depth: usize) -> Self {
        let basis: Vec<Vec<Vec<u32>>> = (0..=depth).map(|d| partitions(d as u32, d as u32)).collect();
        let index = basis.iter().map(|b| b.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect()).collect();
        FockSpace { hbar, mu, depth, basis, index }
    }

    pub fn dim_at(&self, d: i64) -> usize {
        if d < 0 || d as usize > self.depth {
            0
        } else {
            self.basis[d as usize].len()
        }
    }

    /// a_n from degree d to degree d − n.
    pub fn mode(&self, n: i64, d: usize) -> Result<SparseMat<Q>, SugError> {
        let tgt = d as i64 - n;
        if tgt > self.depth as i64 {
            return Err(SugError::Window { k: n, d, need: tgt, have: self.depth });
        }
        let rows = self.dim_at(tgt);
        let cols = self.basis[d]
            .iter()
            .map(|part| {
                if tgt < 0 {
                    return Vec::new();
                }
                if n == 0 {
                    return vec![(self.index[d][part], self.mu.clone())];
                }
                if n < 0 {
                    let mut p = part.clone();
                    p.push((-n) as u32);
                    p.sort_unstable_by(|a, b| b.cmp(a));
                    return vec![(self.index[tgt as usize][&p], Q::one())];
                }
                // a_n = nħ ∂/∂a_{−n}.
                let mult = part.iter().filter(|&&x| x as i64 == n).count();
                if mult == 0 {
                    return Vec::new();
                }
                let mut p = part.clone();
                let pos = p.iter().position(|&x| x as i64 == n).unwrap();
                p.remove(pos);
                vec![(self.index[tgt as usize][&p], qi(n) * &self.hbar * qi(mult as i64))]
            })
            .collect();
        Ok(SparseMat { nrows: rows, ncols: self.dim_at(d as i64), cols })
    }

    /// Ĉ_k = ½ Σ_m :a_{k−m} a_m: from degree d.
    pub fn c_hat(&self, k: i64, d: usize) -> Result<SparseMat<Q>, SugError> {
        let di = d as i64;
        let tgt = di - k;
        if tgt > self.depth as i64 {
            return Err(SugError::Window { k, d, need: tgt, have: self.depth });
        }
        let mut acc = SparseMat::zeros(self.dim_at(tgt), self.dim_at(di));
        if tgt < 0 {
            return Ok(acc);
        }
        for mm in (k - di)..=di {
            let x = Mode { x: vec![Q::one()], n: k - mm };
            let y = Mode { x: vec![Q::one()], n: mm };
            for (c, a, b) in normal_order(&x, &y) {
                let mid = di - b.n;
                if mid < 0 {
                    continue;
                }
                let prod = self.mode(a.n, mid as usize)?.compose(&self.mode(b.n, d)?);
                acc = acc.lin_comb(&Q::one(), &prod, &(c * q(1, 2)));
            }
        }
        Ok(acc)
    }
}

/// Checks [Ĉ_k, Ĉ_l] = ħ(k−l)Ĉ_{k+l} + (k³−k)/12 ħ² δ_{k,−l} and
/// [Ĉ_k, a_m] = −mħ a_{k+m} for |k|, |l|, |m| ≤ kmax on the window.
/// Returns the number of (relation, degree) instances verified.
pub fn abelian_check(f: &FockSpace, kmax: i64) -> Result<Result<usize, String>, SugError> {
    let depth = f.depth as i64;
    let mut count = 0;
    for k in -kmax..=kmax {
        for l in -kmax..=kmax {
            for d in 0..=depth {
                if d - k > depth || d - l > depth || d - k - l > depth {
                    continue;
                }
                let du = d as usize;
                let tgt = d - k - l;
                let zero = |r: i64| SparseMat::zeros(f.dim_at(r), f.dim_at(d));
                let kl = if d - l < 0 { zero(tgt) } else { f.c_hat(k, (d - l) as usize)?.compose(&f.c_hat(l, du)?) };
                let lk = if d - k < 0 { zero(tgt) } else { f.c_hat(l, (d - k) as usize)?.compose(&f.c_hat(k, du)?) };
                let lhs = kl.lin_comb(&Q::one(), &lk, &-Q::one());
                let mut rhs = f.c_hat(k + l, du)?.scale(&(&f.hbar * qi(k - l)));
                if k == -l {
                    let c = qi(k * k * k - k) / qi(12) * &f.hbar * &f.hbar;
                    rhs = rhs.lin_comb(&Q::one(), &SparseMat::identity(f.dim_at(d)), &c);
                }
                if first_mismatch(&lhs, &rhs).is_some() {
                    return Ok(Err(format!("[C_{k}, C_{l}] fails at degree {d}")));
                }
                count += 1;
            }
        }
        for mm in -kmax..=kmax {
            for d in 0..=depth {
                if d - k > depth || d - mm > depth || d - k - mm > depth {
                    continue;
                }
                let du = d as usize;
                let tgt = d - k - mm;
                let zero = |r: i64| SparseMat::zeros(f.dim_at(r), f.dim_at(d));
                let ca = if d - mm < 0 { zero(tgt) } else { f.c_hat(k, (d - mm) as usize)?.compose(&f.mode(mm, du)?) };
                let ac = if d - k < 0 { zero(tgt) } else { f.mode(mm, (d - k) as usize)?.compose(&f.c_hat(k, du)?) };
                let lhs = ca.lin_comb(&Q::one(), &ac, &-Q::one());
                let rhs = f.mode(k + mm, du)?.scale(&(-(qi(mm) * &f.hbar)));
                if first_mismatch(&lhs, &rhs).is_some() {
                    return Ok(Err(format!("[C_{k}, a_{mm}] fails at degree {d}")));
                }
                count += 1;
            }
        }
    }
    Ok(Ok(count))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liealg::{build_simple, CartanType, Weight};
    use crate::looprep::integrable_module;
    use std::sync::Arc;

    #[test]
    fn dual_coxeter_numbers() {
        let a1 = build_simple(CartanType::A(1)).unwrap();
        let a2 = build_simple(CartanType::A(2)).unwrap();
        assert_eq!(casimir(&a1).dual_coxeter, qi(2));
        assert_eq!(casimir(&a2).dual_coxeter, qi(3));
    }

    #[test]
    fn normal_order_cases() {
        let x = |n| Mode { x: vec![Q::one()], n };
        let y = |n| Mode { x: vec![Q::zero(), Q::one()], n };
        assert_eq!(normal_order(&x(-1), &y(2)), vec![(Q::one(), x(-1), y(2))]);
        assert_eq!(normal_order(&x(2), &y(-1)), vec![(Q::one(), y(-1), x(2))]);
        assert_eq!(normal_order(&x(0), &y(0)), vec![(q(1, 2), x(0), y(0)), (q(1, 2), y(0), x(0))]);
    }

    #[test]
    fn t0_on_fundamental_highest_weight() {
        let a1 = Arc::new(build_simple(CartanType::A(1)).unwrap());
        let m = integrable_module(a1.clone(), &Weight(vec![1]), 1, 1).unwrap();
        let cas = casimir(&a1);
        let t0 = sugawara_operator(&m, &cas, 0).unwrap();
        let b = t0.block(0).unwrap().to_dense();
        assert_eq!(*b.get(0, 0), q(-1, 4));
        let t1 = sugawara_operator(&m, &cas, 1).unwrap();
        assert_eq!(t1.block(0).unwrap().nrows, 0);
    }

    #[test]
    fn virasoro_a1_level_one() {
        let a1 = Arc::new(build_simple(CartanType::A(1)).unwrap());
        let m = integrable_module(a1.clone(), &Weight(vec![0]), 1, 3).unwrap();
        let cas = casimir(&a1);
        for (k, l) in [(1, -1), (2, -2), (0, 0), (1, 1), (-1, 2)] {
            let r = virasoro_check(&m, &cas, k, l, 1).unwrap();
            assert!(r.ok(), "{r:?}");
        }
        assert_eq!(central_charge(&a1, 1, &cas), qi(1));
    }

    #[test]
    fn abelian_relations() {
        let f = FockSpace::new(q(3, 2), q(1, 3), 5);
        assert_eq!(f.dim_at(5), 7);
        assert!(abelian_check(&f, 2).unwrap().is_ok());
    }
}
