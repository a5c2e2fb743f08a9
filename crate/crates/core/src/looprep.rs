//! Truncated Laurent loop algebras, the central extension, and graded
//! highest-weight modules: the induced (Verma-type) module over V_λ and its
//! maximal integrable quotient H_ℓ(V_λ) up to a chosen depth.
//!
//! Degrees are recorded as nonnegative integers d for the piece of
//! L_0-degree −d. The mode X⊗tⁿ maps degree d to degree d − n.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use num_traits::ToPrimitive;
use thiserror::Error;

use crate::cyclo::{qi, CycNumber, Q};
use crate::liealg::{irrep_with, GammaAction, Irrep, LieAlgebra, LieError, Weight};
use crate::config::Limits;
use crate::linalg::{Echelon, Field, Insert, SparseMat};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LoopError {
    #[error("exponent {exp} outside the window [{lo}, {hi}]")]
    WindowOverflow { exp: i64, lo: i64, hi: i64 },
    #[error("window [{0}, {1}] does not contain the exponent -1")]
    NoResidue(i64, i64),
    #[error("tuple is not invariant under the group action")]
    NotInvariant,
    #[error("tuple has {got} components, expected {expected}")]
    TupleLength { got: usize, expected: usize },
    #[error("weight {label} has level {have} above {level}")]
    LevelViolation { label: Weight, have: i64, level: u32 },
    #[error("degree {0} is beyond the computed depth {1}")]
    Depth(usize, usize),
    #[error(transparent)]
    Lie(#[from] LieError),
}

/// Laurent polynomial with explicit truncation window.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentElement {
    pub coeffs: BTreeMap<i64, CycNumber>,
    pub window: (i64, i64),
}

impl LaurentElement {
    pub fn zero(window: (i64, i64)) -> Self {
        LaurentElement { coeffs: BTreeMap::new(), window }
    }

    pub fn from_terms(window: (i64, i64), terms: &[(i64, CycNumber)]) -> Result<Self, LoopError> {
        let mut e = Self::zero(window);
        for (k, c) in terms {
            e.add_term(*k, c.clone())?;
        }
        Ok(e)
    }

    fn check(&self, exp: i64) -> Result<(), LoopError> {
        let (lo, hi) = self.window;
        if exp < lo || exp > hi {
            return Err(LoopError::WindowOverflow { exp, lo, hi });
        }
        Ok(())
    }

    pub fn add_term(&mut self, exp: i64, c: CycNumber) -> Result<(), LoopError> {
        if c.is_zero() {
            return Ok(());
        }
        self.check(exp)?;
        let e = self.coeffs.entry(exp).or_insert_with(CycNumber::zero);
        *e = &*e + &c;
        if e.is_zero() {
            self.coeffs.remove(&exp);
        }
        Ok(())
    }

    pub fn coeff(&self, exp: i64) -> CycNumber {
        self.coeffs.get(&exp).cloned().unwrap_or_else(CycNumber::zero)
    }

    pub fn mul(&self, other: &Self) -> Result<Self, LoopError> {
        let mut r = Self::zero(self.window);
        for (a, x) in &self.coeffs {
            for (b, y) in &other.coeffs {
                r.add_term(a + b, x * y)?;
            }
        }
        Ok(r)
    }

    /// d/dt, with the result read as the coefficient of dt.
    pub fn derivative(&self) -> Result<Self, LoopError> {
        let mut r = Self::zero(self.window);
        for (a, x) in &self.coeffs {
            r.add_term(a - 1, x * &CycNumber::from_int(*a))?;
        }
        Ok(r)
    }
}

/// Res(Σ α_i t^i dt) = α_{−1} for a differential given by its coefficient.
pub fn residue(omega: &LaurentElement) -> Result<CycNumber, LoopError> {
    let (lo, hi) = omega.window;
    if lo > -1 || hi < -1 {
        return Err(LoopError::NoResidue(lo, hi));
    }
    Ok(omega.coeff(-1))
}

/// Element of 𝔤⊗ℒ ⊕ k·c.
#[derive(Clone, Debug, PartialEq)]
pub struct LoopElement {
    pub terms: BTreeMap<(usize, i64), CycNumber>,
    pub central: CycNumber,
    pub window: (i64, i64),
}

impl LoopElement {
    pub fn zero(window: (i64, i64)) -> Self {
        LoopElement { terms: BTreeMap::new(), central: CycNumber::zero(), window }
    }

    pub fn mode(window: (i64, i64), basis: usize, exp: i64, c: CycNumber) -> Result<Self, LoopError> {
        let mut e = Self::zero(window);
        e.add_term(basis, exp, c)?;
        Ok(e)
    }

    pub fn add_term(&mut self, basis: usize, exp: i64, c: CycNumber) -> Result<(), LoopError> {
        if c.is_zero() {
            return Ok(());
        }
        let (lo, hi) = self.window;
        if exp < lo || exp > hi {
            return Err(LoopError::WindowOverflow { exp, lo, hi });
        }
        let e = self.terms.entry((basis, exp)).or_insert_with(CycNumber::zero);
        *e = &*e + &c;
        if e.is_zero() {
            self.terms.remove(&(basis, exp));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, LoopError> {
        let mut r = self.clone();
        for ((b, e), c) in &other.terms {
            r.add_term(*b, *e, c.clone())?;
        }
        r.central = &r.central + &other.central;
        Ok(r)
    }

    pub fn scale(&self, s: &CycNumber) -> Self {
        let mut r = Self::zero(self.window);
        for ((b, e), c) in &self.terms {
            r.add_term(*b, *e, c * s).expect("same window");
        }
        r.central = &self.central * s;
        r
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.central.is_zero()
    }

    /// Smallest exponent occurring, if any.
    pub fn min_exp(&self) -> Option<i64> {
        self.terms.keys().map(|(_, e)| *e).min()
    }

    /// Applies a linear map of 𝔤 (columns are images of basis elements) to
    /// the Lie algebra factor.
    pub fn map_lie(&self, m: &crate::linalg::Mat<CycNumber>) -> Self {
        let mut r = Self::zero(self.window);
        for ((b, e), c) in &self.terms {
            for a in 0..m.rows {
                let x = m.get(a, *b);
                if !x.is_zero() {
                    r.add_term(a, *e, c * x).expect("same window");
                }
            }
        }
        r.central = self.central.clone();
        r
    }
}

/// [x, y] in the central extension: [Xtⁿ, Ytᵐ] = [X,Y]t^{n+m} + Res(d(Xtⁿ)|Ytᵐ)·c.
pub fn central_bracket(alg: &LieAlgebra, x: &LoopElement, y: &LoopElement) -> Result<LoopElement, LoopError> {
    let mut r = LoopElement::zero(x.window);
    for ((a, n), cx) in &x.terms {
        for ((b, m), cy) in &y.terms {
            let s = cx * cy;
            for (c, k) in alg.bracket(*a, *b) {
                r.add_term(*c, n + m, &s * &CycNumber::from_int(*k))?;
            }
            if n + m == 0 {
                let f = alg.form(*a, *b);
                if f != qi(0) {
                    let res = CycNumber::from_rational(f * qi(*n));
                    r.central = &r.central + &(&s * &res);
                }
            }
        }
    }
    Ok(r)
}

/// pr_i: the i-th component of a Γ-invariant tuple (ρ(γ)^j X f)_j.
pub fn untwist(rho: &GammaAction, i: usize, tuple: &[LoopElement]) -> Result<LoopElement, LoopError> {
    let p = rho.p as usize;
    if tuple.len() != p {
        return Err(LoopError::TupleLength { got: tuple.len(), expected: p });
    }
    for j in 0..p {
        let prev = &tuple[(j + p - 1) % p];
        if prev.map_lie(&rho.mat) != tuple[j] {
            return Err(LoopError::NotInvariant);
        }
    }
    Ok(tuple[i % p].clone())
}

/// Inverse of pr_i: X f ↦ (ρ(γ)^j ρ(γ)^{−i} X f)_j.
pub fn untwist_inverse(rho: &GammaAction, i: usize, elt: &LoopElement) -> Vec<LoopElement> {
    let p = rho.p as usize;
    (0..p)
        .map(|j| {
            let k = ((j + p - i % p) % p) as u32;
            elt.map_lie(&rho.power(k).mat)
        })
        .collect()
}

type ModeKey = (usize, i64, usize);

/// Common interface of graded modules: mode matrices between degree pieces.
pub trait ModeAction {
    fn alg(&self) -> &LieAlgebra;
    fn level(&self) -> u32;
    fn depth(&self) -> usize;
    fn dim_at(&self, d: usize) -> usize;
    /// Matrix of X_a⊗tⁿ from degree d to degree d − n.
    fn mode(&self, a: usize, n: i64, d: usize) -> Result<Arc<SparseMat<Q>>, LoopError>;

    fn dim_at_signed(&self, d: i64) -> usize {
        if d < 0 {
            0
        } else {
            self.dim_at(d as usize)
        }
    }

    /// Matrix of (Σ_a x_a X_a)⊗tⁿ from degree d.
    fn mode_vec(&self, x: &[Q], n: i64, d: usize) -> Result<SparseMat<Q>, LoopError> {
        let rows = self.dim_at_signed(d as i64 - n);
        let mut acc = SparseMat::zeros(rows, self.dim_at(d));
        for (a, c) in x.iter().enumerate() {
            if !c.is_zero() {
                let m = self.mode(a, n, d)?;
                acc = acc.lin_comb(&Q::one(), &m, c);
            }
        }
        Ok(acc)
    }
}

/// Maximal integrable quotient H_ℓ(V_λ), built degree by degree.
#[derive(Debug)]
pub struct GradedModule {
    alg: Arc<LieAlgebra>,
    pub level: u32,
    pub label: Weight,
    pub depth: usize,
    pub dims: Vec<usize>,
    /// Weight (fundamental coordinates) of each basis vector per degree.
    pub weights: Vec<Vec<Vec<i64>>>,
    /// For degree d ≥ 1: basis vector j equals X_a t^{−1} applied to
    /// vector `parent` of degree d − 1, recorded as (a, parent).
    pub parents: Vec<Vec<(usize, usize)>>,
    zero: Vec<Vec<SparseMat<Q>>>,
    lower: Vec<Vec<SparseMat<Q>>>,
    raise: Vec<Vec<SparseMat<Q>>>,
    cache: Mutex<HashMap<ModeKey, Arc<SparseMat<Q>>>>,
}

/// Expresses each basis element as Σ_k c_k [A_k, B_k] with A_k, B_k basis
/// elements, used to build modes of order |n| ≥ 2 from modes ±1.
fn commutator_decomposition(alg: &LieAlgebra, a: usize) -> Vec<(Q, usize, usize)> {
    let r = alg.rank;
    if a < r {
        // H_i = [E_i, F_i].
        return vec![(Q::one(), alg.e(a), alg.f(a))];
    }
    let root = alg.basis_root(a);
    let i = (0..r).find(|&i| alg.pairing(&root, i) != 0).expect("root pairs nontrivially with some coroot");
    let c = alg.pairing(&root, i);
    vec![(crate::cyclo::q(1, c), alg.h(i), a)]
}

impl GradedModule {
    pub fn alg_arc(&self) -> Arc<LieAlgebra> {
        self.alg.clone()
    }

    /// Degree-0 piece as an irreducible representation label.
    pub fn graded_dims(&self) -> &[usize] {
        &self.dims
    }

    /// Vector of degree d obtained by applying a word of modes (rightmost
    /// applied first) to a vector of degree d0.
    pub fn apply_word(&self, word: &[(usize, i64)], v: &[Q], d0: usize) -> Result<(Vec<Q>, i64), LoopError> {
        let mut cur = v.to_vec();
        let mut d = d0 as i64;
        for &(a, n) in word.iter().rev() {
            if d < 0 {
                return Ok((Vec::new(), d - n));
            }
            let m = self.mode(a, n, d as usize)?;
            cur = m.apply(&cur);
            d -= n;
        }
        Ok((cur, d))
    }
}

impl ModeAction for GradedModule {
    fn alg(&self) -> &LieAlgebra {
        &self.alg
    }

    fn level(&self) -> u32 {
        self.level
    }

    fn depth(&self) -> usize {
        self.depth
    }

    fn dim_at(&self, d: usize) -> usize {
        self.dims[d]
    }

    fn mode(&self, a: usize, n: i64, d: usize) -> Result<Arc<SparseMat<Q>>, LoopError> {
        if d > self.depth {
            return Err(LoopError::Depth(d, self.depth));
        }
        let target = d as i64 - n;
        if target < 0 {
            return Ok(Arc::new(SparseMat::zeros(0, self.dims[d])));
        }
        if target as usize > self.depth {
            return Err(LoopError::Depth(target as usize, self.depth));
        }
        match n {
            0 => return Ok(Arc::new(self.zero[d][a].clone())),
            1 => return Ok(Arc::new(self.raise[d][a].clone())),
            -1 => return Ok(Arc::new(self.lower[d][a].clone())),
            _ => {}
        }
        if let Some(m) = self.cache.lock().unwrap().get(&(a, n, d)) {
            return Ok(m.clone());
        }
        // X tⁿ = Σ c [A t^{n∓1}, B t^{±1}]; no central term since |n| ≥ 2.
        let s = if n > 0 { 1 } else { -1 };
        let mut acc = SparseMat::zeros(self.dims[target as usize], self.dims[d]);
        for (c, x, y) in commutator_decomposition(&self.alg, a) {
            let yd = self.mode(y, s, d)?;
            let d1 = d as i64 - s;
            let xy = if d1 < 0 || d1 as usize > self.depth {
                SparseMat::zeros(self.dims[target as usize], self.dims[d])
            } else {
                self.mode(x, n - s, d1 as usize)?.compose(&yd)
            };
            let xd = self.mode(x, n - s, d)?;
            let d2 = d as i64 - (n - s);
            let yx = if d2 < 0 {
                SparseMat::zeros(self.dims[target as usize], self.dims[d])
            } else {
                self.mode(y, s, d2 as usize)?.compose(&xd)
            };
            acc = acc.lin_comb(&Q::one(), &xy.lin_comb(&c, &yx, &(-&c)), &Q::one());
        }
        let acc = Arc::new(acc);
        self.cache.lock().unwrap().insert((a, n, d), acc.clone());
        Ok(acc)
    }
}

/// Builds H_ℓ(V_λ) up to `depth`, choosing new basis vectors among the
/// candidates X_b t^{−1} v in the order given by `order` (all of 𝔤 when
/// `None`).
pub fn integrable_module(
    alg: Arc<LieAlgebra>,
    lambda: &Weight,
    level: u32,
    depth: usize,
) -> Result<GradedModule, LoopError> {
    integrable_module_with_order(alg, lambda, level, depth, None)
}

type ModuleKey = (Vec<Vec<i64>>, Vec<i64>, u32);

/// Process-wide store of built modules, reused for any request of equal
/// or smaller depth.
fn module_store() -> &'static Mutex<HashMap<ModuleKey, Arc<GradedModule>>> {
    static STORE: OnceLock<Mutex<HashMap<ModuleKey, Arc<GradedModule>>>> = OnceLock::new();
    STORE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Like `integrable_module`, but shared across calls in this process.
pub fn shared_integrable_module(
    alg: Arc<LieAlgebra>,
    lambda: &Weight,
    level: u32,
    depth: usize,
) -> Result<Arc<GradedModule>, LoopError> {
    let key = (alg.cartan.clone(), lambda.0.clone(), level);
    if let Some(m) = module_store().lock().unwrap().get(&key) {
        if m.depth >= depth {
            return Ok(m.clone());
        }
    }
    let m = Arc::new(integrable_module(alg, lambda, level, depth)?);
    let mut store = module_store().lock().unwrap();
    let keep = store.get(&key).is_none_or(|old| old.depth < m.depth);
    if keep {
        store.insert(key, m.clone());
    }
    Ok(m)
}

pub fn integrable_module_with_order(
    alg: Arc<LieAlgebra>,
    lambda: &Weight,
    level: u32,
    depth: usize,
    order: Option<&[usize]>,
) -> Result<GradedModule, LoopError> {
    let have = alg.level_of(lambda);
    if have > level as i64 {
        return Err(LoopError::LevelViolation { label: lambda.clone(), have, level });
    }
    let limits = Limits::default();
    let v0 = irrep_with(&alg, lambda, &limits)?;
    build_quotient(alg, v0, level, depth, order)
}

fn build_quotient(
    alg: Arc<LieAlgebra>,
    v0: Irrep,
    level: u32,
    depth: usize,
    order: Option<&[usize]>,
) -> Result<GradedModule, LoopError> {
    let g = alg.dim();
    let ell = qi(level as i64);
    let default_order: Vec<usize> = (0..g).collect();
    let order = order.unwrap_or(&default_order);
    let basis_w: Vec<Vec<i64>> = (0..g).map(|a| alg.root_to_weight(&alg.basis_root(a))).collect();
    let mut dims = vec![v0.dim];
    let mut weights = vec![v0.weights.clone()];
    let mut parents: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
    let mut zero: Vec<Vec<SparseMat<Q>>> = vec![v0.mats.clone()];
    let mut lower: Vec<Vec<SparseMat<Q>>> = Vec::new();
    let mut raise: Vec<Vec<SparseMat<Q>>> = vec![(0..g).map(|_| SparseMat::zeros(0, v0.dim)).collect()];

    for d in 1..=depth {
        let prev = d - 1;
        let np = dims[prev];
        let prev_w = &weights[prev];
        // Coordinates of Φ(c) ∈ ⊕_a L_{d−1}: only entries of matching weight.
        let mut by_weight: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        for (j, w) in prev_w.iter().enumerate() {
            by_weight.entry(w.clone()).or_default().push(j);
        }
        let mut groups: Vec<(Vec<i64>, Vec<(usize, usize)>)> = Vec::new();
        let mut gindex: HashMap<Vec<i64>, usize> = HashMap::new();
        for v in 0..np {
            for &b in order {
                let w: Vec<i64> = prev_w[v].iter().zip(&basis_w[b]).map(|(x, y)| x + y).collect();
                let gi = *gindex.entry(w.clone()).or_insert_with(|| {
                    groups.push((w, Vec::new()));
                    groups.len() - 1
                });
                groups[gi].1.push((b, v));
            }
        }
        // Raising on degree d−1 to degree d−2 and lowering d−2 → d−1.
        let mut new_weights: Vec<Vec<i64>> = Vec::new();
        let mut new_parents: Vec<(usize, usize)> = Vec::new();
        let mut new_raise_cols: Vec<Vec<Vec<(usize, Q)>>> = vec![Vec::new(); g];
        let mut lower_cols: Vec<Vec<Vec<(usize, Q)>>> = vec![vec![Vec::new(); np]; g];
        for (w, cands) in groups {
            // Coordinate layout for this weight: for each a, the vectors of
            // L_{d−1} with weight w + wt(X_a).
            let mut offsets = Vec::with_capacity(g);
            let mut local: Vec<HashMap<usize, usize>> = Vec::with_capacity(g);
            let mut total = 0;
            for a in 0..g {
                let tw: Vec<i64> = w.iter().zip(&basis_w[a]).map(|(x, y)| x + y).collect();
                let idx = by_weight.get(&tw).cloned().unwrap_or_default();
                offsets.push(total);
                total += idx.len();
                local.push(idx.into_iter().enumerate().map(|(k, j)| (j, k)).collect());
            }
            let mut ech = Echelon::new(total, true);
            let mut accepted: Vec<usize> = Vec::new();
            for (b, v) in cands {
                let mut phi = vec![Q::zero(); total];
                for a in 0..g {
                    // X_a t · X_b t^{−1} v = X_b t^{−1}(X_a t v) + [X_a, X_b] v + ℓ (X_a|X_b) v.
                    let mut comp: HashMap<usize, Q> = HashMap::new();
                    if prev >= 1 {
                        for (k, s) in &raise[prev][a].cols[v] {
                            for (j, x) in &lower[prev - 1][b].cols[*k] {
                                comp.entry(*j).or_insert_with(Q::zero).add_mul_assign(s, x);
                            }
                        }
                    }
                    for (c, n) in alg.bracket(a, b) {
                        let nq = qi(*n);
                        for (j, x) in &zero[prev][*c].cols[v] {
                            comp.entry(*j).or_insert_with(Q::zero).add_mul_assign(&nq, x);
                        }
                    }
                    let f = alg.form(a, b);
                    if !f.is_zero() {
                        comp.entry(v).or_insert_with(Q::zero).add_mul_assign(&f, &ell);
                    }
                    for (j, x) in comp {
                        if !x.is_zero() {
                            let k = local[a].get(&j).expect("weight bookkeeping");
                            phi[offsets[a] + k] = x;
                        }
                    }
                }
                match ech.insert(phi.clone()) {
                    Insert::New(_) => {
                        let id = new_weights.len();
                        new_weights.push(w.clone());
                        new_parents.push((b, v));
                        accepted.push(id);
                        for a in 0..g {
                            let col: Vec<(usize, Q)> = local[a]
                                .iter()
                                .filter_map(|(j, k)| {
                                    let x = &phi[offsets[a] + k];
                                    (!x.is_zero()).then(|| (*j, x.clone()))
                                })
                                .collect();
                            let mut col = col;
                            col.sort_by_key(|e| e.0);
                            new_raise_cols[a].push(col);
                        }
                        lower_cols[b][v].push((id, Q::one()));
                    }
                    Insert::Dependent(comb) => {
                        for (k, c) in comb.into_iter().enumerate() {
                            if !c.is_zero() {
                                lower_cols[b][v].push((accepted[k], c));
                            }
                        }
                    }
                }
            }
        }
        let nd = new_weights.len();
        let lower_d: Vec<SparseMat<Q>> =
            lower_cols.into_iter().map(|cols| SparseMat { nrows: nd, ncols: np, cols }).collect();
        let raise_d: Vec<SparseMat<Q>> =
            new_raise_cols.into_iter().map(|cols| SparseMat { nrows: np, ncols: nd, cols }).collect();
        // Zero modes on the new piece: Z·X_b t^{−1} v = X_b t^{−1} Z v + [Z, X_b] t^{−1} v.
        let zero_d: Vec<SparseMat<Q>> = (0..g)
            .map(|z| {
                let cols = new_parents
                    .iter()
                    .map(|&(b, v)| {
                        let mut acc: BTreeMap<usize, Q> = BTreeMap::new();
                        for (k, s) in &zero[prev][z].cols[v] {
                            for (j, x) in &lower_d[b].cols[*k] {
                                acc.entry(*j).or_insert_with(Q::zero).add_mul_assign(s, x);
                            }
                        }
                        for (c, n) in alg.bracket(z, b) {
                            let nq = qi(*n);
                            for (j, x) in &lower_d[*c].cols[v] {
                                acc.entry(*j).or_insert_with(Q::zero).add_mul_assign(&nq, x);
                            }
                        }
                        acc.into_iter().filter(|(_, x)| !x.is_zero()).collect()
                    })
                    .collect();
                SparseMat { nrows: nd, ncols: nd, cols }
            })
            .collect();
        dims.push(nd);
        weights.push(new_weights);
        parents.push(new_parents);
        lower.push(lower_d);
        raise.push(raise_d);
        zero.push(zero_d);
    }
    // Lowering out of the deepest piece is not available.
    Ok(GradedModule {
        alg,
        level,
        label: v0.label.clone(),
        depth,
        dims,
        weights,
        parents,
        zero,
        lower,
        raise,
        cache: Mutex::new(HashMap::new()),
    })
}

/// A PBW generator X_b t^{−k} with k ≥ 1, ordered by (k, b).
pub type Generator = (u32, usize);

/// Sorted PBW word g_1 ≤ … ≤ g_r, read as g_1 ∘ ⋯ ∘ g_r.
pub type Word = Vec<Generator>;

/// Induced module U(ĝ) ⊗_{U(F⁰)} V_λ with c acting by ℓ, truncated at a
/// depth, with a PBW basis and an explicit straightening action.
#[derive(Debug)]
pub struct VermaModule {
    alg: Arc<LieAlgebra>,
    pub level: u32,
    pub label: Weight,
    pub depth: usize,
    pub v0: Irrep,
    /// Per degree: basis elements (word, index of a V_λ basis vector).
    pub basis: Vec<Vec<(Word, usize)>>,
    index: Vec<HashMap<(Word, usize), usize>>,
    cache: Mutex<HashMap<ModeKey, Arc<SparseMat<Q>>>>,
}

fn partitions_into_generators(d: u32, max_gen: Generator, g: usize, out: &mut Vec<Word>, cur: &mut Word) {
    if d == 0 {
        let mut w = cur.clone();
        w.reverse();
        out.push(w);
        return;
    }
    for k in (1..=d.min(max_gen.0)).rev() {
        let top_b = if k == max_gen.0 { max_gen.1 } else { g - 1 };
        for b in (0..=top_b).rev() {
            cur.push((k, b));
            partitions_into_generators(d - k, (k, b), g, out, cur);
            cur.pop();
        }
    }
}

/// Builds the induced module up to `depth`.
pub fn verma(alg: Arc<LieAlgebra>, lambda: &Weight, level: u32, depth: usize) -> Result<VermaModule, LoopError> {
    let limits = Limits::default();
    if depth > limits.max_depth {
        return Err(LoopError::Depth(depth, limits.max_depth));
    }
    let v0 = irrep_with(&alg, lambda, &limits)?;
    let g = alg.dim();
    let mut basis = Vec::new();
    let mut index = Vec::new();
    for d in 0..=depth {
        let mut words = Vec::new();
        partitions_into_generators(d as u32, (d.max(1) as u32, g - 1), g, &mut words, &mut Vec::new());
        words.sort();
        let mut b = Vec::new();
        for w in words {
            for v in 0..v0.dim {
                b.push((w.clone(), v));
            }
        }
        let idx: HashMap<(Word, usize), usize> = b.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
        basis.push(b);
        index.push(idx);
    }
    Ok(VermaModule {
        alg,
        level,
        label: lambda.clone(),
        depth,
        v0,
        basis,
        index,
        cache: Mutex::new(HashMap::new()),
    })
}

type Vect = BTreeMap<(Word, usize), Q>;

fn vect_add(acc: &mut Vect, key: (Word, usize), c: Q) {
    if c.is_zero() {
        return;
    }
    let e = acc.entry(key.clone()).or_insert_with(Q::zero);
    *e += c;
    if e.is_zero() {
        acc.remove(&key);
    }
}

impl VermaModule {
    pub fn dims(&self) -> Vec<usize> {
        self.basis.iter().map(Vec::len).collect()
    }

    fn word_degree(w: &Word) -> u32 {
        w.iter().map(|g| g.0).sum()
    }

    /// X_a tⁿ applied to a basis element, as a combination of basis elements.
    fn act_basis(&self, a: usize, n: i64, word: &[Generator], v: usize) -> Vect {
        let mut out = Vect::new();
        if word.is_empty() {
            if n > 0 {
                return out;
            }
            if n == 0 {
                for (j, c) in &self.v0.mats[a].cols[v] {
                    vect_add(&mut out, (Vec::new(), *j), c.clone());
                }
                return out;
            }
            vect_add(&mut out, (vec![((-n) as u32, a)], v), Q::one());
            return out;
        }
        let g1 = word[0];
        let rest = &word[1..];
        if n < 0 && ((-n) as u32, a) <= g1 {
            let mut w = Vec::with_capacity(word.len() + 1);
            w.push(((-n) as u32, a));
            w.extend_from_slice(word);
            vect_add(&mut out, (w, v), Q::one());
            return out;
        }
        // X tⁿ g_1 (rest) = g_1 (X tⁿ rest) + [X tⁿ, g_1] rest.
        let inner = self.act_basis(a, n, rest, v);
        for ((w, j), c) in inner {
            for (key, c2) in self.act_basis(g1.1, -(g1.0 as i64), &w, j) {
                vect_add(&mut out, key, &c * &c2);
            }
        }
        let m = -(g1.0 as i64);
        for (e, k) in self.alg.bracket(a, g1.1) {
            for (key, c2) in self.act_basis(*e, n + m, rest, v) {
                vect_add(&mut out, key, c2 * qi(*k));
            }
        }
        if n + m == 0 {
            let f = self.alg.form(a, g1.1);
            if !f.is_zero() {
                let s = f * qi(n) * qi(self.level as i64);
                vect_add(&mut out, (rest.to_vec(), v), s);
            }
        }
        out
    }
}

impl ModeAction for VermaModule {
    fn alg(&self) -> &LieAlgebra {
        &self.alg
    }

    fn level(&self) -> u32 {
        self.level
    }

    fn depth(&self) -> usize {
        self.depth
    }

    fn dim_at(&self, d: usize) -> usize {
        self.basis[d].len()
    }

    fn mode(&self, a: usize, n: i64, d: usize) -> Result<Arc<SparseMat<Q>>, LoopError> {
        if d > self.depth {
            return Err(LoopError::Depth(d, self.depth));
        }
        let target = d as i64 - n;
        if target < 0 {
            return Ok(Arc::new(SparseMat::zeros(0, self.dim_at(d))));
        }
        if target as usize > self.depth {
            return Err(LoopError::Depth(target as usize, self.depth));
        }
        if let Some(m) = self.cache.lock().unwrap().get(&(a, n, d)) {
            return Ok(m.clone());
        }
        let t = target as usize;
        let cols = self.basis[d]
            .iter()
            .map(|(w, v)| {
                let mut col: Vec<(usize, Q)> = self
                    .act_basis(a, n, w, *v)
                    .into_iter()
                    .map(|((w2, j), c)| {
                        debug_assert_eq!(Self::word_degree(&w2) as usize, t);
                        (self.index[t][&(w2, j)], c)
                    })
                    .collect();
                col.sort_by_key(|e| e.0);
                col
            })
            .collect();
        let m = Arc::new(SparseMat { nrows: self.dim_at(t), ncols: self.dim_at(d), cols });
        self.cache.lock().unwrap().insert((a, n, d), m.clone());
        Ok(m)
    }
}

/// The anti-involution ω with ω(E_i) = F_i, ω(H) = H, ω([x, y]) = [ω(y), ω(x)],
/// returned as ω(X_a) = s_a · X_{opposite(a)}.
pub fn contravariant_involution(alg: &LieAlgebra) -> Vec<(usize, Q)> {
    let g = alg.dim();
    let r = alg.rank;
    let mut out: Vec<Option<(usize, Q)>> = vec![None; g];
    for i in 0..r {
        out[i] = Some((i, Q::one()));
        out[alg.e(i)] = Some((alg.f(i), Q::one()));
        out[alg.f(i)] = Some((alg.e(i), Q::one()));
    }
    // Positive roots are listed by height, so predecessors are known.
    for root in alg.pos_roots.clone() {
        let a = alg.root_index(&root).unwrap();
        if out[a].is_some() {
            continue;
        }
        let (i, beta) = (0..r)
            .find_map(|i| {
                let mut b = root.clone();
                b[i] -= 1;
                alg.root_index(&b).map(|bi| (i, bi))
            })
            .expect("nonsimple root has a predecessor");
        // [E_i, E_β] = N E_α, so ω(E_α) = (1/N)[ω(E_β), F_i].
        let n = alg.bracket(alg.e(i), beta).iter().find(|(c, _)| *c == a).map(|x| x.1).expect("root string");
        let (ob, sb) = out[beta].clone().unwrap();
        let m = alg.bracket(ob, alg.f(i)).iter().find(|(c, _)| *c == alg.opposite(a)).map(|x| x.1).expect("root string");
        let s = sb * qi(m) / qi(n);
        out[alg.opposite(a)] = Some((a, Q::one() / &s));
        out[a] = Some((alg.opposite(a), s));
    }
    out.into_iter().map(|x| x.unwrap()).collect()
}

/// Contravariant form on V_λ: the symmetric pairing with
/// ⟨Xv, w⟩ = ⟨v, X^†w⟩ and ⟨v_λ, v_λ⟩ = 1.
pub fn contravariant_form_v0(alg: &LieAlgebra, v0: &Irrep) -> crate::linalg::Mat<Q> {
    use crate::linalg::Mat;
    let n = v0.dim;
    // Unknowns B[i][j], equations B(E_k x, y) − B(x, F_k y) = 0 for simple k.
    let mut rows = Vec::new();
    for k in 0..alg.rank {
        let e = v0.mats[alg.e(k)].to_dense();
        let f = v0.mats[alg.f(k)].to_dense();
        for x in 0..n {
            for y in 0..n {
                let mut row = vec![Q::zero(); n * n];
                for i in 0..n {
                    let c = e.get(i, x);
                    if !c.is_zero() {
                        row[i * n + y] = row[i * n + y].add(c);
                    }
                    let c = f.get(i, y);
                    if !c.is_zero() {
                        row[x * n + i] = row[x * n + i].sub(c);
                    }
                }
                rows.push(row);
            }
        }
    }
    let ns = if rows.is_empty() {
        vec![vec![Q::one()]]
    } else {
        Mat::from_rows(rows).nullspace()
    };
    assert_eq!(ns.len(), 1, "contravariant form is unique up to scale");
    let s = ns[0][0].clone();
    let b: Vec<Q> = ns[0].iter().map(|x| x / &s).collect();
    Mat { rows: n, cols: n, data: b }
}

/// Rank of the contravariant (Shapovalov-type) Gram matrix of the induced
/// module in degree d, built from X tⁿ ↦ X^† t^{−n}.
pub fn shapovalov_rank(m: &VermaModule, d: usize) -> Result<usize, LoopError> {
    use crate::linalg::Mat;
    let b0 = contravariant_form_v0(&m.alg, &m.v0);
    let omega = contravariant_involution(&m.alg);
    let n = m.dim_at(d);
    let mut gram = Mat::zeros(n, n);
    for (i, (w, v)) in m.basis[d].iter().enumerate() {
        // ⟨g_1⋯g_r v, y⟩ = ⟨v, g_r^† ⋯ g_1^† y⟩.
        for j in 0..n {
            let mut y = vec![Q::zero(); n];
            y[j] = Q::one();
            let mut deg = d;
            for g in w.iter() {
                let (dag, s) = &omega[g.1];
                let mm = m.mode(*dag, g.0 as i64, deg)?;
                y = mm.apply(&y).into_iter().map(|x| x * s).collect();
                deg -= g.0 as usize;
            }
            debug_assert_eq!(deg, 0);
            let mut s = Q::zero();
            for (k, c) in y.iter().enumerate() {
                if !c.is_zero() {
                    s += c * b0.get(*v, k);
                }
            }
            gram.set(i, j, s);
        }
    }
    Ok(gram.rank())
}

/// Graded dimensions of the quotient of the induced module by the
/// submodule generated by (E_θ t^{−1})^{ℓ−λ(H_θ)+1} v_λ.
pub fn null_vector_quotient_dims(m: &VermaModule) -> Result<Vec<usize>, LoopError> {
    let alg = &m.alg;
    let theta = alg.root_index(alg.highest_root()).expect("highest root");
    let power = (m.level as i64 - alg.level_of(&m.label) + 1) as usize;
    let mut sub: Vec<Echelon<Q>> = (0..=m.depth).map(|d| Echelon::new(m.dim_at(d), false)).collect();
    let mut gens: Vec<Vec<Vec<Q>>> = vec![Vec::new(); m.depth + 1];
    if power <= m.depth {
        let hw = m.v0.weights.iter().position(|w| *w == m.label.0).expect("highest weight vector");
        let mut v = vec![Q::zero(); m.dim_at(0)];
        v[hw] = Q::one();
        for d in 0..power {
            v = m.mode(theta, -1, d)?.apply(&v);
        }
        gens[power].push(v);
    }
    let g = alg.dim();
    for d in 0..=m.depth {
        // Close under zero modes, then push 𝔤 t^{−1} images to degree d + 1.
        let mut queue = std::mem::take(&mut gens[d]);
        let mut basis_vecs = Vec::new();
        while let Some(v) = queue.pop() {
            if let Insert::New(_) = sub[d].insert(v.clone()) {
                for a in 0..g {
                    queue.push(m.mode(a, 0, d)?.apply(&v));
                }
                basis_vecs.push(v);
            }
        }
        if d < m.depth {
            for v in &basis_vecs {
                for a in 0..g {
                    gens[d + 1].push(m.mode(a, -1, d)?.apply(v));
                }
            }
            let carried: Vec<Vec<Q>> = std::mem::take(&mut gens[d + 1]);
            gens[d + 1] = carried;
        }
    }
    Ok((0..=m.depth).map(|d| m.dim_at(d) - sub[d].rank()).collect())
}

/// Checks (E_θ t^{−1})^{ℓ−λ(H_θ)+1} v_λ = 0 in the integrable quotient.
pub fn null_vector_vanishes(m: &GradedModule) -> Result<bool, LoopError> {
    let alg = m.alg();
    let theta = alg.root_index(alg.highest_root()).expect("highest root");
    let power = (m.level as i64 - alg.level_of(&m.label) + 1) as usize;
    if power > m.depth {
        return Err(LoopError::Depth(power, m.depth));
    }
    let hw = m.weights[0].iter().position(|w| *w == m.label.0).expect("highest weight vector");
    let mut v = vec![Q::zero(); m.dims[0]];
    v[hw] = Q::one();
    for d in 0..power {
        v = m.mode(theta, -1, d)?.apply(&v);
    }
    Ok(v.iter().all(Field::is_zero))
}

/// Local nilpotency of the real root modes E_α⊗t^{−1} on the top piece:
/// a weight vector v ∈ V_λ of weight μ is killed by E_{−α}⊗t, so it
/// generates a finite string of length M + 1 with
/// M = ℓ·2/(α|α) − μ(H_α), and (E_α⊗t^{−1})^{M+1} v must vanish.
/// Strings reaching beyond the computed depth are skipped; the count of
/// checked strings is returned alongside the verdict.
pub fn integrability_check(m: &GradedModule) -> Result<(bool, usize), LoopError> {
    let alg = m.alg();
    let mut checked = 0;
    let roots: Vec<Vec<i64>> = alg
        .pos_roots
        .iter()
        .flat_map(|r| [r.clone(), r.iter().map(|x| -x).collect()])
        .collect();
    for root in roots {
        let a = alg.root_index(&root).expect("root");
        let co = alg.coroot_coords(&root);
        let len2 = alg.inner(&root, &root);
        let shift = qi(2 * m.level as i64) / len2;
        let shift = q_to_i64(&shift).expect("integral coroot level");
        for (j, mu) in m.weights[0].iter().enumerate() {
            let pair: i64 = co.iter().zip(mu).map(|(c, x)| c * x).sum();
            let big_m = shift - pair;
            if big_m < 0 {
                return Ok((false, checked));
            }
            let steps = (big_m + 1) as usize;
            if steps > m.depth {
                continue;
            }
            let mut v = vec![Q::zero(); m.dims[0]];
            v[j] = Q::one();
            for d in 0..steps {
                v = m.mode(a, -1, d)?.apply(&v);
            }
            checked += 1;
            if !v.iter().all(Field::is_zero) {
                return Ok((false, checked));
            }
        }
    }
    Ok((true, checked))
}

/// Maximal integrable quotient of an induced module, to the same depth.
pub fn integrable_quotient(v: &VermaModule) -> Result<GradedModule, LoopError> {
    integrable_module(v.alg.clone(), &v.label, v.level, v.depth)
}

/// Converts an integer-valued rational to i64.
pub fn q_to_i64(x: &Q) -> Option<i64> {
    x.is_integer().then(|| x.to_integer().to_i64()).flatten()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liealg::{build_simple, CartanType};

    fn a1() -> Arc<LieAlgebra> {
        Arc::new(build_simple(CartanType::A(1)).unwrap())
    }

    fn win() -> (i64, i64) {
        (-6, 6)
    }

    #[test]
    fn residue_examples() {
        let one = CycNumber::one();
        let w = LaurentElement::from_terms(win(), &[(-1, one.clone())]).unwrap();
        assert!(residue(&w).unwrap().is_one());
        let w = LaurentElement::from_terms(win(), &[(0, one.clone())]).unwrap();
        assert!(residue(&w).unwrap().is_zero());
        let w = LaurentElement::from_terms(win(), &[(-1, CycNumber::from_int(3)), (2, CycNumber::from_int(5))]).unwrap();
        assert_eq!(residue(&w).unwrap(), CycNumber::from_int(3));
        assert_eq!(residue(&LaurentElement::zero((0, 4))), Err(LoopError::NoResidue(0, 4)));
    }

    #[test]
    fn bracket_examples() {
        let g = a1();
        let one = CycNumber::one();
        let e = LoopElement::mode(win(), g.e(0), 1, one.clone()).unwrap();
        let f = LoopElement::mode(win(), g.f(0), -1, one.clone()).unwrap();
        let r = central_bracket(&g, &e, &f).unwrap();
        let mut want = LoopElement::mode(win(), g.h(0), 0, one.clone()).unwrap();
        want.central = one.clone();
        assert_eq!(r, want);
        let e0 = LoopElement::mode(win(), g.e(0), 0, one.clone()).unwrap();
        let f0 = LoopElement::mode(win(), g.f(0), 0, one.clone()).unwrap();
        assert_eq!(central_bracket(&g, &e0, &f0).unwrap(), LoopElement::mode(win(), g.h(0), 0, one.clone()).unwrap());
        let h1 = LoopElement::mode(win(), g.h(0), 1, one.clone()).unwrap();
        let hm1 = LoopElement::mode(win(), g.h(0), -1, one.clone()).unwrap();
        let r = central_bracket(&g, &h1, &hm1).unwrap();
        assert!(r.terms.is_empty());
        assert_eq!(r.central, CycNumber::from_int(2));
    }

    #[test]
    fn window_overflow_reported() {
        let g = a1();
        let one = CycNumber::one();
        let x = LoopElement::mode((-2, 2), g.e(0), 2, one.clone()).unwrap();
        let y = LoopElement::mode((-2, 2), g.h(0), 1, one.clone()).unwrap();
        assert_eq!(central_bracket(&g, &x, &y), Err(LoopError::WindowOverflow { exp: 3, lo: -2, hi: 2 }));
    }

    #[test]
    fn verma_dims_a1_vacuum() {
        let m = verma(a1(), &Weight(vec![0]), 1, 2).unwrap();
        assert_eq!(m.dims(), vec![1, 3, 9]);
        let ranks: Vec<usize> = (0..=2).map(|d| shapovalov_rank(&m, d).unwrap()).collect();
        assert_eq!(ranks, vec![1, 3, 4]);
        assert_eq!(null_vector_quotient_dims(&m).unwrap(), vec![1, 3, 4]);
    }

    #[test]
    fn integrable_level_one_vacuum() {
        let m = integrable_module(a1(), &Weight(vec![0]), 1, 3).unwrap();
        // Graded dimensions of the basic A1 level-one module.
        assert_eq!(m.dims, vec![1, 3, 4, 7]);
        assert!(null_vector_vanishes(&m).unwrap());
        let (ok, n) = integrability_check(&m).unwrap();
        assert!(ok && n > 0);
    }

    #[test]
    fn level_zero_collapses() {
        let m = integrable_module(a1(), &Weight(vec![0]), 0, 3).unwrap();
        assert_eq!(m.dims, vec![1, 0, 0, 0]);
    }

    #[test]
    fn level_violation_rejected() {
        let e = integrable_module(a1(), &Weight(vec![2]), 1, 1).unwrap_err();
        assert!(matches!(e, LoopError::LevelViolation { .. }));
    }

    #[test]
    fn untwist_examples() {
        let g = a1();
        let rho = GammaAction::inner_torus(&g, 2, &[1]).unwrap();
        let x = LoopElement::mode(win(), g.e(0), -1, CycNumber::one()).unwrap();
        let tuple = untwist_inverse(&rho, 0, &x);
        assert_eq!(untwist(&rho, 0, &tuple).unwrap(), x);
        let mut bad = tuple.clone();
        bad[1] = x.clone();
        assert_eq!(untwist(&rho, 0, &bad), Err(LoopError::NotInvariant));
        let triv = GammaAction::trivial(&g, 3).unwrap();
        let diag = vec![x.clone(), x.clone(), x.clone()];
        assert_eq!(untwist(&triv, 2, &diag).unwrap(), x);
    }
}
