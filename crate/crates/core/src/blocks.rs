//! Conformal-block ranks: coinvariants of tensor products of integrable
//! modules under the twisted global algebra, propagation of vacua, fusion
//! tables (Kac–Walton), the degeneration recursion over nodal graphs, and
//! the sewing element ε(W).

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cover::{function_expansion, max_x_power, CoverError, CoveringGraph, KummerModel, NodalModel};
use crate::cyclo::{q, qi, zeta_pow, CycNumber, Q};
use crate::liealg::{dual_weight, irrep, GammaAction, LieAlgebra, LieError, Weight};
use crate::linalg::{Echelon, Field, Mat};
use crate::looprep::{integrable_module, shared_integrable_module, GradedModule, LoopError, ModeAction};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BlockError {
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("no label for leg {0:?}")]
    MissingLabel(String),
    #[error("label {0} is not in P_{1}")]
    Level(Weight, u32),
    #[error("invalid covering graph: {0}")]
    InvalidGraph(String),
    #[error("degenerate pairing in degree {0}")]
    Degenerate(usize),
    #[error(transparent)]
    Loop(#[from] LoopError),
    #[error(transparent)]
    Cover(#[from] CoverError),
    #[error(transparent)]
    Lie(#[from] LieError),
}

/// A representation label with the trivialization (sheet) used to read it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Label {
    pub weight: Vec<i64>,
    #[serde(default)]
    pub triv: u32,
}

impl Label {
    pub fn new(w: &Weight, triv: u32) -> Self {
        Label { weight: w.0.clone(), triv }
    }

    pub fn weight(&self) -> Weight {
        Weight(self.weight.clone())
    }
}

/// Map from leg labels to representation labels.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelAssignment(pub BTreeMap<String, Label>);

impl LabelAssignment {
    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn get(&self, leg: &str) -> Result<&Label, BlockError> {
        self.0.get(leg).ok_or_else(|| BlockError::MissingLabel(leg.to_string()))
    }

    pub fn insert(&mut self, leg: &str, l: Label) {
        self.0.insert(leg.to_string(), l);
    }

    /// Compact text form `leg=[w]@triv;…`.
    pub fn describe(&self) -> String {
        self.0
            .iter()
            .map(|(k, v)| format!("{k}={}@{}", Weight(v.weight.clone()), v.triv))
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// Rank estimate from a depth-truncated computation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RankResult {
    pub rank: usize,
    pub stabilized: bool,
    pub depth_used: usize,
    /// Rank after each depth 0, 1, ….
    pub history: Vec<usize>,
}

/// One output record for rank computations.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankRow {
    pub graph: String,
    pub labels: String,
    pub level: u32,
    pub rank: usize,
    pub stabilized: bool,
    pub depth: usize,
    pub method: String,
}

/// A marked point on the base line with its label.
#[derive(Clone, Debug, PartialEq)]
pub struct Puncture {
    pub x: Q,
    pub label: Label,
}

// ---------------------------------------------------------------------
// Kac–Walton fusion.

fn theta_weight(alg: &LieAlgebra) -> Vec<i64> {
    alg.root_to_weight(alg.highest_root())
}

/// Reflects v (a weight shifted by ρ, fundamental coordinates) into the
/// open fundamental alcove at level K; `None` if v lies on a wall.
fn reflect_to_alcove(alg: &LieAlgebra, mut v: Vec<i64>, k: i64) -> Option<(Vec<i64>, i64)> {
    let theta = theta_weight(alg);
    let r = alg.rank;
    let mut sign = 1;
    loop {
        if v.contains(&0) {
            return None;
        }
        let vt: i64 = alg.comarks.iter().zip(&v).map(|(a, x)| a * x).sum();
        if vt == k {
            return None;
        }
        if let Some(i) = (0..r).find(|&i| v[i] < 0) {
            let c = v[i];
            for (kk, x) in v.iter_mut().enumerate() {
                *x -= c * alg.cartan[kk][i];
            }
            sign = -sign;
        } else if vt > k {
            let c = vt - k;
            for (x, t) in v.iter_mut().zip(&theta) {
                *x -= c * t;
            }
            sign = -sign;
        } else {
            return Some((v, sign));
        }
    }
}

/// All fusion coefficients N_{λμ}^ν at level ℓ, keyed by ν.
pub fn fusion_products(alg: &LieAlgebra, level: u32, lambda: &Weight, mu: &Weight) -> Result<BTreeMap<Weight, i64>, BlockError> {
    let vmu = irrep(alg, mu)?;
    let k = level as i64 + alg.dual_coxeter_from_comarks();
    let mut out: BTreeMap<Weight, i64> = BTreeMap::new();
    for eta in &vmu.weights {
        let v: Vec<i64> = lambda.0.iter().zip(eta).map(|(a, b)| a + b + 1).collect();
        if let Some((w, s)) = reflect_to_alcove(alg, v, k) {
            let nu = Weight(w.iter().map(|x| x - 1).collect());
            *out.entry(nu).or_insert(0) += s;
        }
    }
    out.retain(|_, c| *c != 0);
    Ok(out)
}

/// Three-point genus-zero ranks N(λ, μ, ν) = N_{λμ}^{ν*} at level ℓ.
#[derive(Clone, Debug, PartialEq)]
pub struct FusionTable {
    pub level: u32,
    pub labels: Vec<Weight>,
    pub duals: Vec<usize>,
    entries: HashMap<(usize, usize, usize), u64>,
}

pub fn fusion_table(alg: &LieAlgebra, level: u32) -> Result<FusionTable, BlockError> {
    let labels = alg.enumerate_levels(level);
    let index: HashMap<Weight, usize> = labels.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
    let duals = labels.iter().map(|w| dual_weight(alg, w).map(|d| index[&d])).collect::<Result<Vec<_>, _>>()?;
    let mut entries = HashMap::new();
    for (a, la) in labels.iter().enumerate() {
        for (b, lb) in labels.iter().enumerate() {
            for (nu, c) in fusion_products(alg, level, la, lb)? {
                if c < 0 {
                    return Err(BlockError::Unsupported(format!("negative fusion coefficient at {la} {lb} {nu}")));
                }
                let n = *index.get(&nu).ok_or_else(|| BlockError::Level(nu.clone(), level))?;
                entries.insert((a, b, duals[n]), c as u64);
            }
        }
    }
    Ok(FusionTable { level, labels, duals, entries })
}

impl FusionTable {
    pub fn index(&self, w: &Weight) -> Option<usize> {
        self.labels.iter().position(|x| x == w)
    }

    pub fn dual(&self, w: &Weight) -> Option<Weight> {
        self.index(w).map(|i| self.labels[self.duals[i]].clone())
    }

    pub fn rank_idx(&self, a: usize, b: usize, c: usize) -> u64 {
        self.entries.get(&(a, b, c)).copied().unwrap_or(0)
    }

    pub fn rank(&self, a: &Weight, b: &Weight, c: &Weight) -> Result<u64, BlockError> {
        let f = |w: &Weight| self.index(w).ok_or_else(|| BlockError::Level(w.clone(), self.level));
        Ok(self.rank_idx(f(a)?, f(b)?, f(c)?))
    }

    /// Symmetry under permutations, unit law and duality normalization.
    pub fn check_invariants(&self) -> bool {
        let n = self.labels.len();
        let zero = self.labels.iter().position(|w| w.is_zero()).expect("trivial label");
        for a in 0..n {
            for b in 0..n {
                let unit = self.rank_idx(a, b, zero);
                if unit != u64::from(b == self.duals[a]) {
                    return false;
                }
                for c in 0..n {
                    let x = self.rank_idx(a, b, c);
                    let perms = [(b, a, c), (a, c, b), (c, b, a), (b, c, a), (c, a, b)];
                    if perms.iter().any(|&(i, j, k)| self.rank_idx(i, j, k) != x) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

// ---------------------------------------------------------------------
// Coinvariants.

struct Slot {
    module: Arc<GradedModule>,
    offset: Vec<usize>,
    deg: Vec<usize>,
    loc: Vec<usize>,
    grade: Vec<Vec<i64>>,
}

impl Slot {
    fn new(module: Arc<GradedModule>, functionals: &[Vec<i64>]) -> Self {
        let mut offset = Vec::new();
        let mut deg = Vec::new();
        let mut loc = Vec::new();
        let mut grade = Vec::new();
        for d in 0..=module.depth {
            offset.push(deg.len());
            for (j, w) in module.weights[d].iter().enumerate() {
                deg.push(d);
                loc.push(j);
                grade.push(apply_functionals(functionals, w));
            }
        }
        Slot { module, offset, deg, loc, grade }
    }

    fn global(&self, d: usize, j: usize) -> u32 {
        (self.offset[d] + j) as u32
    }
}

fn apply_functionals(functionals: &[Vec<i64>], w: &[i64]) -> Vec<i64> {
    functionals.iter().map(|h| h.iter().zip(w).map(|(a, b)| a * b).sum()).collect()
}

/// Cartan elements fixed by ρ (coroot coordinates), when ρ preserves the
/// Cartan subalgebra and the fixed vectors are rational.
fn fixed_cartan(alg: &LieAlgebra, rho: &GammaAction) -> Vec<Vec<i64>> {
    let r = alg.rank;
    for c in 0..r {
        for row in r..alg.dim() {
            if !rho.mat.get(row, c).is_zero() {
                return Vec::new();
            }
        }
    }
    let m = Mat::from_rows(
        (0..r)
            .map(|i| (0..r).map(|j| rho.mat.get(i, j) - &CycNumber::from_int(i64::from(i == j))).collect())
            .collect(),
    );
    let mut out = Vec::new();
    for v in m.nullspace() {
        let Some(rat) = v.iter().map(|c| c.to_rational()).collect::<Option<Vec<Q>>>() else { return Vec::new() };
        let den = rat.iter().fold(num_bigint::BigInt::from(1), |acc, x| num_integer::lcm(acc, x.denom().clone()));
        let ints: Option<Vec<i64>> = rat
            .iter()
            .map(|x| num_traits::ToPrimitive::to_i64(&(x * Q::from_integer(den.clone())).to_integer()))
            .collect();
        match ints {
            Some(v) => out.push(v),
            None => return Vec::new(),
        }
    }
    out
}

/// Basis of each 𝔤^{ζ^{−i}} made of vectors homogeneous for the grading
/// by the fixed Cartan elements: (grading, i, vector).
fn homogeneous_eigenbasis(alg: &LieAlgebra, rho: &GammaAction, functionals: &[Vec<i64>]) -> Vec<(Vec<i64>, u32, Vec<CycNumber>)> {
    let p = rho.p;
    let mut classes: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
    for a in 0..alg.dim() {
        let w = alg.root_to_weight(&alg.basis_root(a));
        classes.entry(apply_functionals(functionals, &w)).or_default().push(a);
    }
    let mut out = Vec::new();
    for (g, idx) in classes {
        let n = idx.len();
        let sub = Mat::from_rows(idx.iter().map(|&r| idx.iter().map(|&c| rho.mat.get(r, c).clone()).collect()).collect());
        for i in 0..p {
            let ev = zeta_pow(p, -(i as i64)).expect("prime");
            let shifted = sub.sub(&Mat::identity(n).scale(&ev));
            for v in shifted.nullspace() {
                let mut full = vec![CycNumber::zero(); alg.dim()];
                for (k, &a) in idx.iter().enumerate() {
                    full[a] = v[k].clone();
                }
                out.push((g.clone(), i, full));
            }
        }
    }
    out
}

type Key = Vec<u32>;

/// Depth-truncated coinvariant computation for punctures on a Kummer
/// model, over a coefficient field F containing the needed roots of unity.
pub struct CoinvariantEngine<F: Field> {
    alg: Arc<LieAlgebra>,
    level: u32,
    slots: Vec<Slot>,
    depth: usize,
    /// Relation generators: (grading of X, X, per-slot expansions, pole weight).
    gens: Vec<(Vec<i64>, Vec<F>, Vec<Vec<(i64, F)>>, usize)>,
    /// lift[l][m][a]: regular part at slot m of the lift of X_a t^{−1} at slot l.
    lift: Vec<Vec<Vec<Vec<(i64, Vec<F>)>>>>,
    target: HashMap<Key, usize>,
    pub target_keys: Vec<Key>,
    memo: HashMap<Key, Vec<(usize, F)>>,
    echelon: Echelon<F>,
    d_min: usize,
}

fn to_f<F: Field>(c: &CycNumber) -> F {
    F::from_cyc(c).expect("coefficient lies in the chosen field")
}

impl<F: Field> CoinvariantEngine<F> {
    pub fn new(
        alg: Arc<LieAlgebra>,
        level: u32,
        model: &KummerModel,
        rho: &GammaAction,
        punctures: &[Puncture],
        depth: usize,
    ) -> Result<Self, BlockError> {
        if rho.p != model.p {
            return Err(BlockError::Unsupported(format!("action of order {} on a degree-{} cover", rho.p, model.p)));
        }
        let p = model.p;
        let g = alg.dim();
        let functionals = fixed_cartan(&alg, rho);
        let mut slots = Vec::new();
        let mut d_min = 0;
        for pt in punctures {
            let w = pt.label.weight();
            if alg.level_of(&w) > level as i64 || !w.is_dominant() {
                return Err(BlockError::Level(w, level));
            }
            d_min = d_min.max((level as i64 - alg.level_of(&w) + 1) as usize);
            let m = shared_integrable_module(alg.clone(), &w, level, depth)?;
            slots.push(Slot::new(m, &functionals));
        }
        let xs: Vec<Q> = punctures.iter().map(|p| p.x.clone()).collect();
        let y0: Vec<CycNumber> =
            punctures.iter().map(|pt| model.sheet_value(&pt.x, pt.label.triv)).collect::<Result<_, _>>()?;
        let n = punctures.len();
        let maxe = depth as i64;
        let expand = |i: u32, poles: &[u32]| -> Vec<Vec<(i64, F)>> {
            (0..n)
                .map(|m| {
                    function_expansion(model, &xs, i, 0, poles, m, &y0[m], maxe)
                        .into_iter()
                        .map(|(e, c)| (e, to_f::<F>(&c)))
                        .collect()
                })
                .collect()
        };
        // Relation generators X ⊗ e_i (x − a_j)^{−s}, and X ⊗ e_i when e_i
        // is regular at infinity.
        let eig = homogeneous_eigenbasis(&alg, rho, &functionals);
        let mut gens = Vec::new();
        for i in 0..p {
            let xs_i: Vec<&(Vec<i64>, u32, Vec<CycNumber>)> = eig.iter().filter(|e| e.1 == i).collect();
            if xs_i.is_empty() {
                continue;
            }
            let mut fns: Vec<(Vec<u32>, usize)> = Vec::new();
            if max_x_power(model, i, 0).is_some() {
                fns.push((vec![0; n], 0));
            }
            for j in 0..n {
                for s in 1..=depth as u32 {
                    let mut poles = vec![0; n];
                    poles[j] = s;
                    if max_x_power(model, i, s).is_some() {
                        fns.push((poles, s as usize));
                    }
                }
            }
            for (poles, s) in fns {
                let ex = expand(i, &poles);
                for (gr, _, x) in &xs_i {
                    gens.push((gr.clone(), x.iter().map(to_f::<F>).collect(), ex.clone(), s));
                }
            }
        }
        // Lifts of X_a t^{−1} at each slot: Σ_i P_i(X_a) ⊗ e_i/((x − a_l) e_i(a_l)).
        let pf = to_f::<F>(&CycNumber::from_int(p as i64)).inv();
        let powers: Vec<Mat<CycNumber>> = (0..p).map(|k| rho.power(k).mat).collect();
        let proj: Vec<Vec<Vec<F>>> = (0..p)
            .map(|i| {
                (0..g)
                    .map(|a| {
                        let mut v = vec![CycNumber::zero(); g];
                        for (k, pw) in powers.iter().enumerate() {
                            let z = zeta_pow(p, (i as i64) * k as i64).expect("prime");
                            for (r, slot) in v.iter_mut().enumerate() {
                                let c = pw.get(r, a);
                                if !c.is_zero() {
                                    *slot = &*slot + &(&z * c);
                                }
                            }
                        }
                        v.iter().map(|c| to_f::<F>(c).mul(&pf)).collect()
                    })
                    .collect()
            })
            .collect();
        let mut lift = vec![vec![vec![Vec::new(); g]; n]; n];
        for l in 0..n {
            let mut per_i: Vec<Option<Vec<Vec<(i64, F)>>>> = Vec::new();
            for i in 0..p {
                let used = (0..g).any(|a| proj[i as usize][a].iter().any(|c| !c.is_zero()));
                if !used {
                    per_i.push(None);
                    continue;
                }
                if max_x_power(model, i, 1).is_none() {
                    return Err(BlockError::Unsupported(format!(
                        "eigensheaf {i} has no section with a simple pole at one puncture"
                    )));
                }
                let mut poles = vec![0; n];
                poles[l] = 1;
                let ex = expand(i, &poles);
                let lead = ex[l].iter().find(|(e, _)| *e == -1).map(|(_, c)| c.clone()).expect("simple pole");
                let inv = lead.inv();
                per_i.push(Some(ex.into_iter().map(|v| v.into_iter().map(|(e, c)| (e, c.mul(&inv))).collect()).collect()));
            }
            for m in 0..n {
                for a in 0..g {
                    let mut by_n: BTreeMap<i64, Vec<F>> = BTreeMap::new();
                    for i in 0..p as usize {
                        let Some(ex) = &per_i[i] else { continue };
                        for (e, c) in &ex[m] {
                            if *e < 0 {
                                continue;
                            }
                            let y = by_n.entry(*e).or_insert_with(|| vec![F::zero(); g]);
                            for (t, x) in y.iter_mut().zip(&proj[i][a]) {
                                t.add_mul_assign(c, x);
                            }
                        }
                    }
                    lift[l][m][a] = by_n.into_iter().filter(|(_, y)| y.iter().any(|c| !c.is_zero())).collect();
                }
            }
        }
        // Degree-zero tuples of total grading 0.
        let mut target_keys = Vec::new();
        let zero_grade = vec![0i64; functionals.len()];
        let mut stack: Vec<(Key, Vec<i64>)> = vec![(Vec::new(), zero_grade.clone())];
        while let Some((k, gsum)) = stack.pop() {
            if k.len() == n {
                if gsum == zero_grade {
                    target_keys.push(k);
                }
                continue;
            }
            let s = &slots[k.len()];
            for j in 0..s.module.dims[0] {
                let idx = s.global(0, j);
                let mut k2 = k.clone();
                k2.push(idx);
                let g2: Vec<i64> = gsum.iter().zip(&s.grade[idx as usize]).map(|(a, b)| a + b).collect();
                stack.push((k2, g2));
            }
        }
        target_keys.sort();
        let target: HashMap<Key, usize> = target_keys.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
        let echelon = Echelon::new(target_keys.len(), false);
        Ok(CoinvariantEngine {
            alg,
            level,
            slots,
            depth,
            gens,
            lift,
            target,
            target_keys,
            memo: HashMap::new(),
            echelon,
            d_min,
        })
    }

    fn key_grade(&self, key: &[u32]) -> Vec<i64> {
        let mut g: Vec<i64> = Vec::new();
        for (s, &k) in self.slots.iter().zip(key) {
            let gr = &s.grade[k as usize];
            if g.is_empty() {
                g = gr.clone();
            } else {
                for (a, b) in g.iter_mut().zip(gr) {
                    *a += b;
                }
            }
        }
        g
    }

    /// Adds coef · (Y tⁿ at `slot`) · key into `out`.
    fn act(&self, key: &[u32], slot: usize, y: &[F], n: i64, coef: &F, out: &mut HashMap<Key, F>) -> Result<(), BlockError> {
        let s = &self.slots[slot];
        let k = key[slot] as usize;
        let (d, j) = (s.deg[k], s.loc[k]);
        let tgt = d as i64 - n;
        if tgt < 0 {
            return Ok(());
        }
        let mut col: HashMap<usize, F> = HashMap::new();
        for (b, yb) in y.iter().enumerate() {
            if yb.is_zero() {
                continue;
            }
            let m = s.module.mode(b, n, d)?;
            for (r, c) in &m.cols[j] {
                let e = col.entry(*r).or_insert_with(F::zero);
                e.add_mul_assign(yb, &F::from_q(c));
            }
        }
        for (r, c) in col {
            if c.is_zero() {
                continue;
            }
            let mut k2 = key.to_vec();
            k2[slot] = s.global(tgt as usize, r);
            let e = out.entry(k2).or_insert_with(F::zero);
            e.add_mul_assign(coef, &c);
        }
        Ok(())
    }

    /// Reduction of a tensor basis vector modulo the global algebra to the
    /// degree-zero, grading-zero space.
    pub fn nu(&mut self, key: &Key) -> Result<Vec<(usize, F)>, BlockError> {
        if let Some(v) = self.memo.get(key) {
            return Ok(v.clone());
        }
        let grade = self.key_grade(key);
        if grade.iter().any(|&x| x != 0) {
            return Ok(Vec::new());
        }
        let first = (0..self.slots.len()).find(|&l| self.slots[l].deg[key[l] as usize] > 0);
        let Some(l) = first else {
            let v = self.target.get(key).map(|&i| vec![(i, F::one())]).unwrap_or_default();
            self.memo.insert(key.clone(), v.clone());
            return Ok(v);
        };
        let s = &self.slots[l];
        let k = key[l] as usize;
        let (d, j) = (s.deg[k], s.loc[k]);
        let (a, parent) = s.module.parents[d][j];
        let mut u = key.clone();
        u[l] = s.global(d - 1, parent);
        let mut rest: HashMap<Key, F> = HashMap::new();
        let minus = F::one().neg();
        for m in 0..self.slots.len() {
            for (n, y) in &self.lift[l][m][a] {
                self.act(&u, m, y, *n, &minus, &mut rest)?;
            }
        }
        let mut acc: HashMap<usize, F> = HashMap::new();
        for (k2, c) in rest {
            for (t, x) in self.nu(&k2)? {
                acc.entry(t).or_insert_with(F::zero).add_mul_assign(&c, &x);
            }
        }
        let v: Vec<(usize, F)> = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        self.memo.insert(key.clone(), v.clone());
        Ok(v)
    }

    /// Tensor basis keys with total degree exactly `s`.
    fn keys_of_degree(&self, s: usize) -> Vec<Key> {
        let n = self.slots.len();
        let mut out = Vec::new();
        let mut stack: Vec<(Key, usize)> = vec![(Vec::new(), 0)];
        while let Some((k, used)) = stack.pop() {
            if k.len() == n {
                if used == s {
                    out.push(k);
                }
                continue;
            }
            let slot = &self.slots[k.len()];
            let last = k.len() == n - 1;
            for d in 0..=(s - used).min(self.depth) {
                if last && used + d != s {
                    continue;
                }
                for j in 0..slot.module.dims[d] {
                    let mut k2 = k.clone();
                    k2.push(slot.global(d, j));
                    stack.push((k2, used + d));
                }
            }
        }
        out
    }

    /// Adds all relations Z·w with deg(w) + pole weight(Z) = d.
    fn add_relations(&mut self, d: usize) -> Result<(), BlockError> {
        let dim = self.target_keys.len();
        for s in 0..=d {
            let keys = self.keys_of_degree(s);
            let ws = d - s;
            for key in keys {
                if self.echelon.is_full() {
                    return Ok(());
                }
                let kg = self.key_grade(&key);
                for gi in 0..self.gens.len() {
                    let (gr, x, ex, pw) = &self.gens[gi];
                    if *pw != ws || gr.iter().zip(&kg).any(|(a, b)| a + b != 0) {
                        continue;
                    }
                    let mut out: HashMap<Key, F> = HashMap::new();
                    let (x, ex) = (x.clone(), ex.clone());
                    for (m, series) in ex.iter().enumerate() {
                        for (n, c) in series {
                            self.act(&key, m, &x, *n, c, &mut out)?;
                        }
                    }
                    let mut rel = vec![F::zero(); dim];
                    for (k2, c) in out {
                        for (t, v) in self.nu(&k2)? {
                            rel[t].add_mul_assign(&c, &v);
                        }
                    }
                    if rel.iter().any(|c| !c.is_zero()) {
                        self.echelon.insert(rel);
                        if self.echelon.is_full() {
                            return Ok(());
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Runs depths 0, 1, … up to the engine depth, stopping once two
    /// consecutive depths agree beyond the null-vector degree.
    pub fn run(&mut self) -> Result<RankResult, BlockError> {
        let mut history = Vec::new();
        for d in 0..=self.depth {
            self.add_relations(d)?;
            let rank = self.target_keys.len() - self.echelon.rank();
            history.push(rank);
            let stable = rank == 0 || (d >= 1 && history[d - 1] == rank && d > self.d_min);
            if stable {
                return Ok(RankResult { rank, stabilized: true, depth_used: d, history });
            }
        }
        let rank = *history.last().expect("at least depth 0");
        Ok(RankResult { rank, stabilized: false, depth_used: self.depth, history })
    }

    /// Basis of the dual of the coinvariant space, as functionals on the
    /// degree-zero target space.
    pub fn blocks(&self) -> Vec<Vec<F>> {
        let rows = self.echelon.rows();
        if rows.is_empty() {
            return (0..self.target_keys.len())
                .map(|i| {
                    let mut v = vec![F::zero(); self.target_keys.len()];
                    v[i] = F::one();
                    v
                })
                .collect();
        }
        Mat::from_rows(rows).nullspace()
    }

    /// Global tensor index of the basis vector `j` of degree `d` at `slot`.
    pub fn slot_index(&self, slot: usize, d: usize, j: usize) -> u32 {
        self.slots[slot].global(d, j)
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn alg(&self) -> &LieAlgebra {
        &self.alg
    }
}

/// The split model y² = 1 with trivial action, used for untwisted data.
pub fn untwisted_setup(alg: &LieAlgebra) -> (KummerModel, GammaAction) {
    (KummerModel::unramified(2).expect("prime"), GammaAction::trivial(alg, 2).expect("trivial action"))
}

/// Rank of the coinvariants of ⊗ H_ℓ(V_j) under the twisted global
/// algebra, by truncation at increasing depth up to `max_depth`.
pub fn coinvariant_rank(
    alg: Arc<LieAlgebra>,
    level: u32,
    model: &KummerModel,
    rho: &GammaAction,
    punctures: &[Puncture],
    max_depth: usize,
) -> Result<RankResult, BlockError> {
    if model.p == 2 || rho.is_trivial() {
        CoinvariantEngine::<Q>::new(alg, level, model, rho, punctures, max_depth)?.run()
    } else {
        CoinvariantEngine::<CycNumber>::new(alg, level, model, rho, punctures, max_depth)?.run()
    }
}

/// Puncture positions on the model: points over which y has a rational
/// value, avoiding branch points.
pub fn default_positions(model: &KummerModel, count: usize) -> Vec<Q> {
    let mut out = Vec::new();
    let mut k: i64 = 1;
    while out.len() < count {
        for cand in [qi(k), qi(k).pow(model.p as i32)] {
            if out.len() < count && !out.contains(&cand) && model.base_sheet(&cand).is_ok() {
                out.push(cand);
            }
        }
        k += 1;
        if k > 200 {
            break;
        }
    }
    // Models whose rational points are not at integers: search by height.
    let mut h: i64 = 2;
    while out.len() < count && h <= 400 {
        for d in 2..=h {
            for n in [h, -h].into_iter().chain((1 - h..h).filter(|n| n.abs() < h)) {
                if (n.abs() != h && d != h) || num_integer::gcd(n, d) != 1 {
                    continue;
                }
                let cand = q(n, d);
                if out.len() < count && !out.contains(&cand) && model.base_sheet(&cand).is_ok() {
                    out.push(cand);
                }
            }
        }
        h += 1;
    }
    out.sort();
    out
}

/// Report of a propagation-of-vacua comparison.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PropagationReport {
    pub base: RankResult,
    pub extended: RankResult,
    pub extra_legs: usize,
}

impl PropagationReport {
    pub fn ok(&self) -> bool {
        self.base.stabilized && self.extended.stabilized && self.base.rank == self.extended.rank
    }
}

/// Compares ranks with and without `extra` appended trivial-label legs.
pub fn propagation_check(
    alg: Arc<LieAlgebra>,
    level: u32,
    model: &KummerModel,
    rho: &GammaAction,
    labels: &[Label],
    extra: usize,
    max_depth: usize,
) -> Result<PropagationReport, BlockError> {
    let pos = default_positions(model, labels.len() + extra);
    let mk = |ls: &[Label]| -> Vec<Puncture> {
        ls.iter().zip(&pos).map(|(l, x)| Puncture { x: x.clone(), label: l.clone() }).collect()
    };
    let base = coinvariant_rank(alg.clone(), level, model, rho, &mk(labels), max_depth)?;
    let mut ext = labels.to_vec();
    ext.extend((0..extra).map(|_| Label { weight: vec![0; alg.rank], triv: 0 }));
    let extended = coinvariant_rank(alg, level, model, rho, &mk(&ext), max_depth)?;
    Ok(PropagationReport { base, extended, extra_legs: extra })
}

// ---------------------------------------------------------------------
// Nodal curves.

/// Coinvariants on a nodal rational curve, computed directly: the
/// relations Z·w (Z = X ⊗ f with f(𝔭₊) = f(𝔭₋), poles at the punctures)
/// inside the degree ≤ low + 1 truncation are intersected with the degree
/// ≤ `low` part. The codimension there is the dimension of the image of
/// H_{≤low} in the coinvariants; `low` grows until it stops changing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NodalRank {
    pub rank: usize,
    pub stabilized: bool,
    pub history: Vec<usize>,
    pub low: usize,
}

/// Data of the direct nodal computation needed by the sewing check.
pub struct NodalSystem {
    pub keys: Vec<Key>,
    /// Relations lying in the degree ≤ low part, in `keys` coordinates.
    pub low_relations: Vec<Vec<Q>>,
    pub result: NodalRank,
    pub slots_offsets: Vec<Vec<usize>>,
}

pub fn nodal_coinvariants(
    alg: Arc<LieAlgebra>,
    level: u32,
    nodal: &NodalModel,
    punctures: &[(Q, Weight)],
    max_low: usize,
) -> Result<NodalSystem, BlockError> {
    let max_depth = max_low + 1;
    let n = punctures.len();
    let functionals: Vec<Vec<i64>> = (0..alg.rank).map(|i| (0..alg.rank).map(|j| i64::from(i == j)).collect()).collect();
    let mut slots = Vec::new();
    let mut d_min = 0;
    for (_, w) in punctures {
        if alg.level_of(w) > level as i64 {
            return Err(BlockError::Level(w.clone(), level));
        }
        d_min = d_min.max((level as i64 - alg.level_of(w) + 1) as usize);
        slots.push(Slot::new(shared_integrable_module(alg.clone(), w, level, max_depth)?, &functionals));
    }
    let xs: Vec<Q> = punctures.iter().map(|p| p.0.clone()).collect();
    // Functions Σ c_{j,s} (x − a_j)^{−s} + c_0, with the node condition.
    let fn_basis = |bound: usize| -> Vec<Vec<Q>> {
        // Coordinates: [const, (j=0,s=1..bound), (j=1,…), …].
        let cols = 1 + n * bound;
        let mut row = vec![Q::zero(); cols];
        for (j, a) in xs.iter().enumerate() {
            for s in 1..=bound {
                let f = |x: &Q| -> Q { Q::one() / (x - a).pow(s as i32) };
                row[1 + j * bound + (s - 1)] = f(&nodal.plus) - f(&nodal.minus);
            }
        }
        Mat::from_rows(vec![row]).nullspace()
    };
    // Expansion of (x − a_j)^{−s} at puncture m in t = x − a_m.
    let expand = |j: usize, s: usize, m: usize| -> Vec<(i64, Q)> {
        if j == m {
            return vec![(-(s as i64), Q::one())];
        }
        let d = &xs[m] - &xs[j];
        (0..=max_depth)
            .map(|k| (k as i64, crate::cover::binom_q(&qi(-(s as i64)), k as u32) * Q::one() / d.pow(s as i32 + k as i32)))
            .filter(|(_, c)| !c.is_zero())
            .collect()
    };
    let mut history = Vec::new();
    let mut keys_low: Vec<Key> = Vec::new();
    let mut result_low_rel = Vec::new();
    let mut offsets_out = Vec::new();
    for slot in &slots {
        offsets_out.push(slot.offset.clone());
    }
    for low in 0..=max_low {
        let big_d = low + 1;
        // Coordinates: all weight-zero tuples of degree ≤ D, high degrees first.
        let mut all: Vec<(usize, Key)> = Vec::new();
        let mut sources: Vec<(usize, Key, Vec<i64>)> = Vec::new();
        let mut stack: Vec<(Key, usize, Vec<i64>)> = vec![(Vec::new(), 0, vec![0; alg.rank])];
        while let Some((k, used, g)) = stack.pop() {
            if k.len() == n {
                if g.iter().all(|&x| x == 0) {
                    all.push((used, k.clone()));
                }
                sources.push((used, k, g));
                continue;
            }
            let s = &slots[k.len()];
            for d in 0..=(big_d - used) {
                for j in 0..s.module.dims[d] {
                    let idx = s.global(d, j);
                    let mut k2 = k.clone();
                    k2.push(idx);
                    let g2: Vec<i64> = g.iter().zip(&s.grade[idx as usize]).map(|(a, b)| a + b).collect();
                    stack.push((k2, used + d, g2));
                }
            }
        }
        all.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let index: HashMap<Key, usize> = all.iter().enumerate().map(|(i, (_, k))| (k.clone(), i)).collect();
        let first_low = all.iter().position(|(d, _)| *d <= low).unwrap_or(all.len());
        let mut ech: Echelon<Q> = Echelon::new(all.len(), false);
        for bound in 0..=big_d {
            let basis = fn_basis(bound.max(1));
            for f in basis {
                // Pole order of f.
                let mut pw = 0;
                for j in 0..n {
                    for s in 1..=bound.max(1) {
                        if !f[1 + j * bound.max(1) + (s - 1)].is_zero() {
                            pw = pw.max(s);
                        }
                    }
                }
                if pw != bound {
                    continue;
                }
                let mut series: Vec<BTreeMap<i64, Q>> = vec![BTreeMap::new(); n];
                for m in 0..n {
                    if !f[0].is_zero() {
                        *series[m].entry(0).or_insert_with(Q::zero) += &f[0];
                    }
                    for j in 0..n {
                        for s in 1..=bound.max(1) {
                            let c = &f[1 + j * bound.max(1) + (s - 1)];
                            if c.is_zero() {
                                continue;
                            }
                            for (e, x) in expand(j, s, m) {
                                *series[m].entry(e).or_insert_with(Q::zero) += c * x;
                            }
                        }
                    }
                }
                for (used, key, g) in &sources {
                    if used + pw > big_d {
                        continue;
                    }
                    for a in 0..alg.dim() {
                        let wa = alg.root_to_weight(&alg.basis_root(a));
                        if wa.iter().zip(g).any(|(x, y)| x + y != 0) {
                            continue;
                        }
                        let mut rel = vec![Q::zero(); all.len()];
                        let mut any = false;
                        for (m, ser) in series.iter().enumerate() {
                            let s = &slots[m];
                            let k = key[m] as usize;
                            let (d, j) = (s.deg[k], s.loc[k]);
                            for (e, c) in ser {
                                let tgt = d as i64 - e;
                                if c.is_zero() || tgt < 0 {
                                    continue;
                                }
                                let mm = s.module.mode(a, *e, d)?;
                                for (r, x) in &mm.cols[j] {
                                    let mut k2 = key.clone();
                                    k2[m] = s.global(tgt as usize, *r);
                                    if let Some(&pos) = index.get(&k2) {
                                        rel[pos] += c * x;
                                        any = true;
                                    }
                                }
                            }
                        }
                        if any && rel.iter().any(|x| !x.is_zero()) {
                            ech.insert(rel);
                        }
                    }
                }
            }
        }
        let low_rows: Vec<Vec<Q>> = ech
            .rows()
            .into_iter()
            .zip(ech.pivots())
            .filter(|(_, p)| *p >= first_low)
            .map(|(r, _)| r[first_low..].to_vec())
            .collect();
        let rank = (all.len() - first_low) - low_rows.len();
        history.push(rank);
        keys_low = all[first_low..].iter().map(|(_, k)| k.clone()).collect();
        result_low_rel = low_rows;
        if low >= 1 && history[low - 1] == rank && low > d_min {
            return Ok(NodalSystem {
                keys: keys_low,
                low_relations: result_low_rel,
                result: NodalRank { rank, stabilized: true, history, low },
                slots_offsets: offsets_out,
            });
        }
    }
    let rank = *history.last().unwrap_or(&0);
    Ok(NodalSystem {
        keys: keys_low,
        low_relations: result_low_rel,
        result: NodalRank { rank, stabilized: false, history, low: max_low },
        slots_offsets: offsets_out,
    })
}

// ---------------------------------------------------------------------
// Degeneration recursion.

fn vertex_rank(table: &FusionTable, labels: &[Weight]) -> Result<u64, BlockError> {
    let ls: Vec<Weight> = labels.iter().filter(|w| !w.is_zero()).cloned().collect();
    match ls.len() {
        0 => Ok(1),
        1 => Ok(0),
        2 => Ok(u64::from(table.dual(&ls[0]).as_ref() == Some(&ls[1]))),
        3 => table.rank(&ls[0], &ls[1], &ls[2]),
        _ => {
            // Split off the first two legs through an internal label W.
            let mut total = 0;
            for w in table.labels.clone() {
                let a = table.rank(&ls[0], &ls[1], &w)?;
                if a == 0 {
                    continue;
                }
                let mut rest = vec![table.dual(&w).expect("dual")];
                rest.extend_from_slice(&ls[2..]);
                total += a * vertex_rank(table, &rest)?;
            }
            Ok(total)
        }
    }
}

/// Rank of the conformal blocks on a nodal covering graph by splitting
/// nodes in the given order (edge indices of the input graph; default
/// 0, 1, …) and summing over labels W ∈ P_ℓ inserted as (W, W*).
pub fn degeneration_rank(
    graph: &CoveringGraph,
    labels: &LabelAssignment,
    table: &FusionTable,
    order: Option<&[usize]>,
) -> Result<u64, BlockError> {
    let v = graph.validate();
    if !v.is_empty() {
        return Err(BlockError::InvalidGraph(v.iter().map(|x| format!("{}: {}", x.rule, x.detail)).collect::<Vec<_>>().join("; ")));
    }
    if !graph.branch.is_empty() {
        return Err(BlockError::Unsupported("elementary pieces carrying branch points have no table data".into()));
    }
    let mut leg_labels: Vec<(usize, Weight)> = Vec::new();
    for l in &graph.legs {
        let lab = labels.get(&l.label)?;
        let w = lab.weight();
        if table.index(&w).is_none() {
            return Err(BlockError::Level(w, table.level));
        }
        leg_labels.push((l.vertex, w));
    }
    let edges: Vec<(usize, [usize; 2])> = graph.edges.iter().cloned().enumerate().collect();
    let default: Vec<usize> = (0..edges.len()).collect();
    let order = order.unwrap_or(&default);
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != default {
        return Err(BlockError::InvalidGraph("split order is not a permutation of the nodes".into()));
    }
    for (v, vert) in graph.vertices.iter().enumerate() {
        if vert.genus > 0 {
            return Err(BlockError::Unsupported(format!("vertex {v} has positive genus")));
        }
    }
    let ordered: Vec<[usize; 2]> = order.iter().map(|&e| edges[e].1).collect();
    recurse(table, graph.vertices.len(), &ordered, leg_labels)
}

fn recurse(table: &FusionTable, nv: usize, edges: &[[usize; 2]], legs: Vec<(usize, Weight)>) -> Result<u64, BlockError> {
    if let Some((e, rest)) = edges.split_first() {
        let mut total = 0;
        for w in &table.labels {
            let mut l2 = legs.clone();
            l2.push((e[0], w.clone()));
            l2.push((e[1], table.dual(w).expect("dual")));
            total += recurse(table, nv, rest, l2)?;
        }
        return Ok(total);
    }
    let mut prod = 1;
    for v in 0..nv {
        let ls: Vec<Weight> = legs.iter().filter(|(x, _)| *x == v).map(|(_, w)| w.clone()).collect();
        prod *= vertex_rank(table, &ls)?;
        if prod == 0 {
            break;
        }
    }
    Ok(prod)
}

// ---------------------------------------------------------------------
// Sewing.

/// ε(W) = Σ_d ε_d with ε_d ∈ H_ℓ(W)(−d) ⊗ H_ℓ(W*)(−d), stored as the
/// coefficient matrix (rows: basis of H(W)_d, columns: basis of H(W*)_d).
pub struct SewingElement {
    pub weight: Weight,
    pub dual: Weight,
    pub w: GradedModule,
    pub wstar: GradedModule,
    /// Pairing blocks b_d.
    pub pairing: Vec<Mat<Q>>,
    pub eps: Vec<Mat<Q>>,
}

/// Builds b_W degree by degree from b(X t^{−1}u, v) = −b(u, X t v) and
/// inverts each block.
pub fn sewing_element(alg: Arc<LieAlgebra>, w: &Weight, level: u32, depth: usize) -> Result<SewingElement, BlockError> {
    let ws = dual_weight(&alg, w)?;
    let hw = integrable_module(alg.clone(), w, level, depth)?;
    let hs = integrable_module(alg.clone(), &ws, level, depth)?;
    let (n0, m0) = (hw.dims[0], hs.dims[0]);
    // Invariant pairing on W ⊗ W*: b(Xu, v) + b(u, Xv) = 0.
    let mut rows = Vec::new();
    for i in 0..alg.rank {
        for x in [alg.e(i), alg.f(i)] {
            let a = hw.mode(x, 0, 0)?.to_dense();
            let b = hs.mode(x, 0, 0)?.to_dense();
            for u in 0..n0 {
                for v in 0..m0 {
                    let mut row = vec![Q::zero(); n0 * m0];
                    for k in 0..n0 {
                        let c = a.get(k, u);
                        if !c.is_zero() {
                            row[k * m0 + v] += c;
                        }
                    }
                    for k in 0..m0 {
                        let c = b.get(k, v);
                        if !c.is_zero() {
                            row[u * m0 + k] += c;
                        }
                    }
                    rows.push(row);
                }
            }
        }
    }
    let ns = if rows.is_empty() { vec![vec![Q::one()]] } else { Mat::from_rows(rows).nullspace() };
    if ns.len() != 1 {
        return Err(BlockError::Degenerate(0));
    }
    let b0 = Mat { rows: n0, cols: m0, data: ns[0].clone() };
    let mut pairing = vec![b0];
    for d in 1..=depth {
        let prev = &pairing[d - 1];
        let mut b = Mat::zeros(hw.dims[d], hs.dims[d]);
        for (u, &(a, par)) in hw.parents[d].iter().enumerate() {
            let raise = hs.mode(a, 1, d)?;
            for v in 0..hs.dims[d] {
                let mut s = Q::zero();
                for (k, c) in &raise.cols[v] {
                    s += prev.get(par, *k) * c;
                }
                b.set(u, v, -s);
            }
        }
        pairing.push(b);
    }
    let mut eps = Vec::new();
    for (d, b) in pairing.iter().enumerate() {
        let inv = b.inverse().ok_or(BlockError::Degenerate(d))?;
        eps.push(inv.transpose());
    }
    Ok(SewingElement { weight: w.clone(), dual: ws, w: hw, wstar: hs, pairing, eps })
}

impl SewingElement {
    /// (X t₊^m ⊗ 1) ε_e + (1 ⊗ X t₋^{−m}) ε_{e−m} = 0 for all basis X,
    /// |m| ≤ m_max and all e in the window; returns the number of checks.
    pub fn annihilation_check(&self, m_max: i64) -> Result<Result<usize, String>, BlockError> {
        let depth = self.w.depth as i64;
        let g = self.w.alg().dim();
        let mut count = 0;
        for a in 0..g {
            for m in -m_max..=m_max {
                for e in 0..=depth {
                    let f = e - m;
                    if f > depth {
                        continue;
                    }
                    // Left: rows in H(W)_{e−m}, columns in H(W*)_e.
                    let left = if f < 0 {
                        None
                    } else {
                        Some(self.w.mode(a, m, e as usize)?.to_dense().mul(&self.eps[e as usize]))
                    };
                    let right = if f < 0 {
                        None
                    } else {
                        let mm = self.wstar.mode(a, -m, f as usize)?.to_dense();
                        Some(self.eps[f as usize].mul(&mm.transpose()))
                    };
                    if let (Some(l), Some(r)) = (left, right) {
                        if !l.add(&r).is_zero() {
                            return Ok(Err(format!("X = {}, m = {m}, e = {e}", self.w.alg().basis_name(a))));
                        }
                        count += 1;
                    }
                }
            }
        }
        Ok(Ok(count))
    }

    /// ε₀ is the dual of b⁰: Σ_{i,j} ε₀[i][j] b⁰(w_k, w*_j) = δ_{ik}.
    pub fn eps0_is_dual(&self) -> bool {
        self.eps[0].mul(&self.pairing[0].transpose()) == Mat::identity(self.w.dims[0])
    }

    pub fn bidegrees_ok(&self) -> bool {
        self.eps.iter().enumerate().all(|(d, e)| e.rows == self.w.dims[d] && e.cols == self.wstar.dims[d])
    }
}

/// Result of the sewing-map comparison on the one-node genus-one curve.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SewingMapReport {
    /// Block dimensions on the normalization per inserted label W.
    pub summands: Vec<(Vec<i64>, usize)>,
    pub image_rank: usize,
    pub nodal_rank: usize,
    pub degeneration_rank: u64,
    pub images_are_blocks: bool,
}

impl SewingMapReport {
    pub fn ok(&self) -> bool {
        let total: usize = self.summands.iter().map(|s| s.1).sum();
        self.images_are_blocks
            && self.image_rank == total
            && self.image_rank == self.nodal_rank
            && self.degeneration_rank as usize == total
    }
}

/// At τ = 0, the map φ ↦ (u ↦ φ(u ⊗ ε₀(W))) from blocks on the
/// normalization (labels V, W, W* at a, 𝔭₊, 𝔭₋) to blocks on the nodal
/// curve: images must be nodal blocks and jointly of full rank.
pub fn sewing_map_check(
    alg: Arc<LieAlgebra>,
    level: u32,
    v: &Weight,
    max_low: usize,
) -> Result<SewingMapReport, BlockError> {
    let nodal = NodalModel { plus: qi(1), minus: qi(-1) };
    let a = Q::zero();
    let sys = nodal_coinvariants(alg.clone(), level, &nodal, &[(a.clone(), v.clone())], max_low)?;
    if !sys.result.stabilized {
        return Err(BlockError::Unsupported(format!("nodal rank not stable up to degree {max_low}")));
    }
    let depth = sys.result.low + 3;
    let (model, rho) = untwisted_setup(&alg);
    let table = fusion_table(&alg, level)?;
    let mut images: Vec<Vec<Q>> = Vec::new();
    let mut summands = Vec::new();
    for w in &table.labels {
        let ws = table.dual(w).expect("dual");
        let pts = vec![
            Puncture { x: a.clone(), label: Label::new(v, 0) },
            Puncture { x: nodal.plus.clone(), label: Label::new(w, 0) },
            Puncture { x: nodal.minus.clone(), label: Label::new(&ws, 0) },
        ];
        let mut eng = CoinvariantEngine::<Q>::new(alg.clone(), level, &model, &rho, &pts, depth)?;
        let res = eng.run()?;
        let blocks = eng.blocks();
        summands.push((w.0.clone(), blocks.len()));
        if res.rank != blocks.len() {
            return Err(BlockError::Unsupported("block count disagrees with rank".into()));
        }
        if blocks.is_empty() {
            continue;
        }
        let sew = sewing_element(alg.clone(), w, level, 0)?;
        let e0 = &sew.eps[0];
        // Evaluate each block on u ⊗ ε₀ for u in the low nodal coordinates.
        for phi in &blocks {
            let mut img = vec![Q::zero(); sys.keys.len()];
            for (pos, key) in sys.keys.iter().enumerate() {
                let g = key[0] as usize;
                let d = sys.slots_offsets[0].iter().rposition(|&o| o <= g).expect("offset");
                let j = g - sys.slots_offsets[0][d];
                let u = eng.slot_index(0, d, j);
                let mut s = Q::zero();
                for i in 0..e0.rows {
                    for k in 0..e0.cols {
                        let c = e0.get(i, k);
                        if c.is_zero() {
                            continue;
                        }
                        let kk = vec![u, eng.slot_index(1, 0, i), eng.slot_index(2, 0, k)];
                        for (t, x) in eng.nu(&kk)? {
                            s += c * &x * &phi[t];
                        }
                    }
                }
                img[pos] = s;
            }
            images.push(img);
        }
    }
    let images_are_blocks = images.iter().all(|img| {
        sys.low_relations.iter().all(|r| r.iter().zip(img).fold(Q::zero(), |acc, (a, b)| acc + a * b).is_zero())
    });
    let image_rank = if images.is_empty() { 0 } else { Mat::from_rows(images).rank() };
    let graph = CoveringGraph {
        id: Some("genus1-one-node".into()),
        p: 2,
        vertices: vec![crate::cover::GraphVertex { genus: 0 }],
        edges: vec![[0, 0]],
        legs: vec![crate::cover::GraphLeg { vertex: 0, label: "a".into(), at: None }],
        branch: Vec::new(),
        xi: None,
    };
    let mut labels = LabelAssignment::default();
    labels.insert("a", Label::new(v, 0));
    let degeneration = degeneration_rank(&graph, &labels, &table, None)?;
    Ok(SewingMapReport {
        summands,
        image_rank,
        nodal_rank: sys.result.rank,
        degeneration_rank: degeneration,
        images_are_blocks,
    })
}

/// Dense Mat<Q> helper re-exported for callers inspecting ε blocks.
pub fn eps_entry(eps: &SewingElement, d: usize, i: usize, j: usize) -> Q {
    eps.eps[d].get(i, j).clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liealg::{build_simple, CartanType};

    fn a1() -> Arc<LieAlgebra> {
        Arc::new(build_simple(CartanType::A(1)).unwrap())
    }

    fn pts(ws: &[i64]) -> Vec<Puncture> {
        ws.iter()
            .enumerate()
            .map(|(i, &w)| Puncture { x: qi(i as i64), label: Label { weight: vec![w], triv: 0 } })
            .collect()
    }

    #[test]
    fn kac_walton_a1() {
        let g = a1();
        let t1 = fusion_table(&g, 1).unwrap();
        let w = |x| Weight(vec![x]);
        assert_eq!(t1.rank(&w(1), &w(1), &w(0)).unwrap(), 1);
        assert_eq!(t1.rank(&w(1), &w(1), &w(1)).unwrap(), 0);
        let t2 = fusion_table(&g, 2).unwrap();
        assert_eq!(t2.rank(&w(1), &w(1), &w(2)).unwrap(), 1);
        assert_eq!(t2.rank(&w(2), &w(2), &w(2)).unwrap(), 0);
        assert!(t1.check_invariants() && t2.check_invariants());
    }

    #[test]
    fn brute_coinvariants_a1_level_one() {
        let g = a1();
        let (m, rho) = untwisted_setup(&g);
        let r = coinvariant_rank(g.clone(), 1, &m, &rho, &pts(&[1, 1, 0]), 5).unwrap();
        assert_eq!((r.rank, r.stabilized), (1, true), "{r:?}");
        let r = coinvariant_rank(g.clone(), 1, &m, &rho, &pts(&[1, 1, 1]), 5).unwrap();
        assert_eq!(r.rank, 0);
        let r = coinvariant_rank(g.clone(), 1, &m, &rho, &pts(&[0, 0, 0]), 0).unwrap();
        assert_eq!(r.rank, 1);
    }

    #[test]
    fn degeneration_genus_one() {
        let g = a1();
        let t = fusion_table(&g, 1).unwrap();
        let graph = CoveringGraph::from_json(
            r#"{"p":2,"vertices":[{"genus":0}],"edges":[[0,0]],"legs":[{"vertex":0,"label":"a"}]}"#,
        )
        .unwrap();
        let mut labels = LabelAssignment::default();
        labels.insert("a", Label { weight: vec![0], triv: 0 });
        assert_eq!(degeneration_rank(&graph, &labels, &t, None).unwrap(), 2);
    }

    #[test]
    fn sewing_a1() {
        let s = sewing_element(a1(), &Weight(vec![1]), 1, 3).unwrap();
        assert!(s.eps0_is_dual() && s.bidegrees_ok());
        assert!(s.annihilation_check(3).unwrap().is_ok());
    }

    #[test]
    fn nodal_direct() {
        let sys = nodal_coinvariants(a1(), 1, &NodalModel { plus: qi(1), minus: qi(-1) }, &[(Q::zero(), Weight(vec![0]))], 5).unwrap();
        assert_eq!((sys.result.rank, sys.result.stabilized), (2, true), "{:?}", sys.result);
        let rep = sewing_map_check(a1(), 1, &Weight(vec![0]), 5).unwrap();
        assert!(rep.ok(), "{rep:?}");
    }
}
