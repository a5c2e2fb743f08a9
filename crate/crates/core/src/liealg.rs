//! Simple Lie algebras in a Chevalley basis, their normalized invariant form,
//! finite-dimensional irreducible representations, and automorphisms of
//! prime order together with their eigenspace decompositions.
//!
//! Basis layout for rank r with N positive roots: indices `0..r` are the
//! coroots H_i, `r..r+N` are E_α for positive α in height order, and
//! `r+N..r+2N` are E_{−α} in the same order.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_traits::ToPrimitive;
use thiserror::Error;

use crate::config::Limits;
use crate::cyclo::{q, qi, zeta_pow, CycError, CycNumber, Q};
use crate::linalg::{is_zero_vec, Echelon, Field, Insert, Mat, SparseMat};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LieError {
    #[error("unsupported Cartan type {0}")]
    UnsupportedType(String),
    #[error("rank {0} exceeds the configured bound {1}")]
    RankBound(usize, usize),
    #[error("weight {0:?} is not dominant")]
    NotDominant(Vec<i64>),
    #[error("weight has {got} coordinates, expected {expected}")]
    WeightLength { got: usize, expected: usize },
    #[error("representation of dimension above {0} requested")]
    IrrepTooLarge(usize),
    #[error("structure check failed: {0}")]
    Structure(String),
    #[error("invalid automorphism: {0}")]
    InvalidGamma(String),
    #[error(transparent)]
    Cyc(#[from] CycError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CartanType {
    A(usize),
    B(usize),
    C(usize),
    D(usize),
    E(usize),
    F4,
    G2,
}

impl CartanType {
    pub fn rank(&self) -> usize {
        match *self {
            CartanType::A(n) | CartanType::B(n) | CartanType::C(n) | CartanType::D(n) | CartanType::E(n) => n,
            CartanType::F4 => 4,
            CartanType::G2 => 2,
        }
    }
}

impl fmt::Display for CartanType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            CartanType::A(n) => write!(f, "A{n}"),
            CartanType::B(n) => write!(f, "B{n}"),
            CartanType::C(n) => write!(f, "C{n}"),
            CartanType::D(n) => write!(f, "D{n}"),
            CartanType::E(n) => write!(f, "E{n}"),
            CartanType::F4 => write!(f, "F4"),
            CartanType::G2 => write!(f, "G2"),
        }
    }
}

impl FromStr for CartanType {
    type Err = LieError;
    fn from_str(s: &str) -> Result<Self, LieError> {
        let s = s.trim();
        let bad = || LieError::UnsupportedType(s.to_string());
        let mut chars = s.chars();
        let letter = chars.next().ok_or_else(bad)?.to_ascii_uppercase();
        let n: usize = chars.as_str().parse().map_err(|_| bad())?;
        let t = match (letter, n) {
            ('A', n) if n >= 1 => CartanType::A(n),
            ('B', n) if n >= 2 => CartanType::B(n),
            ('C', n) if n >= 2 => CartanType::C(n),
            ('D', n) if n >= 4 => CartanType::D(n),
            ('E', n) if (6..=8).contains(&n) => CartanType::E(n),
            ('F', 4) => CartanType::F4,
            ('G', 2) => CartanType::G2,
            _ => return Err(bad()),
        };
        Ok(t)
    }
}

/// A weight in fundamental-weight coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Weight(pub Vec<i64>);

impl Weight {
    pub fn zero(rank: usize) -> Self {
        Weight(vec![0; rank])
    }

    pub fn fundamental(rank: usize, i: usize) -> Self {
        let mut v = vec![0; rank];
        v[i] = 1;
        Weight(v)
    }

    pub fn is_dominant(&self) -> bool {
        self.0.iter().all(|&c| c >= 0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(i64::to_string).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

/// Simple roots given by squared lengths and the inner products of linked
/// nodes of the Dynkin diagram.
fn dynkin_data(t: CartanType) -> (Vec<Q>, Vec<(usize, usize, Q)>) {
    let chain = |n: usize, val: &dyn Fn(usize) -> Q| -> Vec<(usize, usize, Q)> {
        (0..n.saturating_sub(1)).map(|i| (i, i + 1, val(i))).collect()
    };
    match t {
        CartanType::A(n) => (vec![qi(2); n], chain(n, &|_| qi(-1))),
        CartanType::B(n) => {
            let mut l = vec![qi(2); n];
            l[n - 1] = qi(1);
            (l, chain(n, &|_| qi(-1)))
        }
        CartanType::C(n) => {
            let mut l = vec![qi(1); n];
            l[n - 1] = qi(2);
            (l, chain(n, &|i| if i + 2 == n { qi(-1) } else { q(-1, 2) }))
        }
        CartanType::D(n) => {
            let mut e = chain(n - 1, &|_| qi(-1));
            e.push((n - 3, n - 1, qi(-1)));
            (vec![qi(2); n], e)
        }
        CartanType::E(n) => {
            // Bourbaki labels 1..n: chain 1-3-4-5-..., node 2 attached to 4.
            let mut e = vec![(0, 2, qi(-1)), (1, 3, qi(-1))];
            for i in 2..n - 1 {
                e.push((i, i + 1, qi(-1)));
            }
            (vec![qi(2); n], e)
        }
        CartanType::F4 => (vec![qi(2), qi(2), qi(1), qi(1)], vec![(0, 1, qi(-1)), (1, 2, qi(-1)), (2, 3, q(-1, 2))]),
        CartanType::G2 => (vec![q(2, 3), qi(2)], vec![(0, 1, qi(-1))]),
    }
}

/// Simple Lie algebra with Chevalley basis, structure constants and the
/// invariant form normalized by (H_θ|H_θ) = 2.
#[derive(Clone, Debug)]
pub struct LieAlgebra {
    pub cartan_type: CartanType,
    pub rank: usize,
    /// `cartan[i][j]` = ⟨α_i^∨, α_j⟩.
    pub cartan: Vec<Vec<i64>>,
    /// Inner products (α_i, α_j) with long roots of squared length 2.
    pub sym: Vec<Vec<Q>>,
    /// Positive roots in simple-root coordinates, ordered by height.
    pub pos_roots: Vec<Vec<i64>>,
    /// Comarks a_i^∨: θ^∨ = Σ a_i^∨ α_i^∨.
    pub comarks: Vec<i64>,
    root_lookup: HashMap<Vec<i64>, usize>,
    brackets: Vec<Vec<Vec<(usize, i64)>>>,
    /// The only nonzero form entry in each row: (partner, value).
    form_partner: Vec<(usize, Q)>,
    form_hh: Vec<Vec<Q>>,
    /// For each non-simple positive root: its extraspecial pair (α, β) as
    /// positive-root indices and N_{α,β}.
    extraspecial: Vec<Option<(usize, usize, i64)>>,
}

impl LieAlgebra {
    pub fn dim(&self) -> usize {
        self.rank + 2 * self.pos_roots.len()
    }

    pub fn n_pos(&self) -> usize {
        self.pos_roots.len()
    }

    /// Basis index of E_α for a nonzero root α in simple-root coordinates.
    pub fn root_index(&self, root: &[i64]) -> Option<usize> {
        if root.iter().any(|&c| c > 0) {
            self.root_lookup.get(root).map(|k| self.rank + k)
        } else {
            let neg: Vec<i64> = root.iter().map(|c| -c).collect();
            self.root_lookup.get(&neg).map(|k| self.rank + self.n_pos() + k)
        }
    }

    /// Root of a basis element in simple-root coordinates (zero for H_i).
    pub fn basis_root(&self, idx: usize) -> Vec<i64> {
        let r = self.rank;
        let n = self.n_pos();
        if idx < r {
            vec![0; r]
        } else if idx < r + n {
            self.pos_roots[idx - r].clone()
        } else {
            self.pos_roots[idx - r - n].iter().map(|c| -c).collect()
        }
    }

    pub fn is_cartan(&self, idx: usize) -> bool {
        idx < self.rank
    }

    /// Basis index of E_{α_i}.
    pub fn e(&self, i: usize) -> usize {
        self.rank + i
    }

    /// Basis index of E_{−α_i}.
    pub fn f(&self, i: usize) -> usize {
        self.rank + self.n_pos() + i
    }

    pub fn h(&self, i: usize) -> usize {
        i
    }

    /// Basis index of E_{−α} for the basis element E_α (and H_i ↦ H_i).
    pub fn opposite(&self, idx: usize) -> usize {
        let r = self.rank;
        let n = self.n_pos();
        if idx < r {
            idx
        } else if idx < r + n {
            idx + n
        } else {
            idx - n
        }
    }

    /// The anti-involution X ↦ X^†: E_α ↦ E_{−α}, H ↦ H.
    pub fn dagger(&self, idx: usize) -> usize {
        self.opposite(idx)
    }

    pub fn highest_root(&self) -> &[i64] {
        self.pos_roots.last().expect("nonempty root system")
    }

    pub fn basis_name(&self, idx: usize) -> String {
        let r = self.rank;
        if idx < r {
            return format!("H{}", idx + 1);
        }
        let root = self.basis_root(idx);
        let s: Vec<String> = root.iter().map(|c| c.abs().to_string()).collect();
        let sign = if idx < r + self.n_pos() { "E" } else { "F" };
        format!("{sign}[{}]", s.join(""))
    }

    /// ⟨root, α_i^∨⟩ for a root in simple-root coordinates.
    pub fn pairing(&self, root: &[i64], i: usize) -> i64 {
        root.iter().enumerate().map(|(j, c)| c * self.cartan[i][j]).sum()
    }

    /// Converts simple-root coordinates into fundamental-weight coordinates.
    pub fn root_to_weight(&self, root: &[i64]) -> Vec<i64> {
        (0..self.rank).map(|i| self.pairing(root, i)).collect()
    }

    pub fn inner(&self, a: &[i64], b: &[i64]) -> Q {
        let mut s = Q::zero();
        for (i, x) in a.iter().enumerate() {
            if *x == 0 {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                if *y != 0 {
                    s += &self.sym[i][j] * qi(x * y);
                }
            }
        }
        s
    }

    /// Coroot of a positive root in the basis α_j^∨.
    pub fn coroot_coords(&self, root: &[i64]) -> Vec<i64> {
        let len = self.inner(root, root);
        root.iter()
            .enumerate()
            .map(|(j, c)| {
                let v = &self.sym[j][j] * qi(*c) / &len;
                assert!(v.is_integer(), "coroot coordinates are integral");
                v.to_integer().to_i64().expect("small coroot coordinate")
            })
            .collect()
    }

    /// λ(H_θ) for a weight in fundamental coordinates.
    pub fn level_of(&self, w: &Weight) -> i64 {
        w.0.iter().zip(&self.comarks).map(|(a, b)| a * b).sum()
    }

    /// ȟ read off from the comarks: 1 + Σ a_i^∨.
    pub fn dual_coxeter_from_comarks(&self) -> i64 {
        1 + self.comarks.iter().sum::<i64>()
    }

    pub fn bracket(&self, a: usize, b: usize) -> &[(usize, i64)] {
        &self.brackets[a][b]
    }

    pub fn bracket_vec<F: Field>(&self, x: &[F], y: &[F]) -> Vec<F> {
        let mut out = vec![F::zero(); self.dim()];
        for (a, xa) in x.iter().enumerate() {
            if xa.is_zero() {
                continue;
            }
            for (b, yb) in y.iter().enumerate() {
                if yb.is_zero() {
                    continue;
                }
                let s = xa.mul(yb);
                for (c, n) in &self.brackets[a][b] {
                    out[*c].add_mul_assign(&s, &F::from_i64(*n));
                }
            }
        }
        out
    }

    /// Normalized invariant form on basis elements.
    pub fn form(&self, a: usize, b: usize) -> Q {
        if a < self.rank && b < self.rank {
            return self.form_hh[a][b].clone();
        }
        let (p, v) = &self.form_partner[a];
        if *p == b {
            v.clone()
        } else {
            Q::zero()
        }
    }

    pub fn form_vec<F: Field>(&self, x: &[F], y: &[F]) -> F {
        let mut s = F::zero();
        for (a, xa) in x.iter().enumerate() {
            if xa.is_zero() {
                continue;
            }
            if a < self.rank {
                for (b, yb) in y.iter().take(self.rank).enumerate() {
                    let f = &self.form_hh[a][b];
                    if !f.is_zero() {
                        s.add_mul_assign(&xa.mul(yb), &F::from_q(f));
                    }
                }
            } else {
                let (p, v) = &self.form_partner[a];
                s.add_mul_assign(&xa.mul(&y[*p]), &F::from_q(v));
            }
        }
        s
    }

    /// Nonzero entries (b, (X_a|X_b)) of row a of the form matrix.
    pub fn form_row(&self, a: usize) -> Vec<(usize, Q)> {
        if a < self.rank {
            (0..self.rank).filter(|&b| !self.form_hh[a][b].is_zero()).map(|b| (b, self.form_hh[a][b].clone())).collect()
        } else {
            vec![self.form_partner[a].clone()]
        }
    }

    pub fn normalized_form(&self) -> Mat<Q> {
        let d = self.dim();
        let mut m = Mat::zeros(d, d);
        for a in 0..d {
            for (b, v) in self.form_row(a) {
                m.set(a, b, v);
            }
        }
        m
    }

    /// H_θ as a vector in the basis.
    pub fn h_theta(&self) -> Vec<Q> {
        let mut v = vec![Q::zero(); self.dim()];
        for (j, c) in self.coroot_coords(self.highest_root()).into_iter().enumerate() {
            v[j] = qi(c);
        }
        v
    }

    /// Unit vector for a basis element.
    pub fn unit<F: Field>(&self, idx: usize) -> Vec<F> {
        let mut v = vec![F::zero(); self.dim()];
        v[idx] = F::one();
        v
    }

    /// Extraspecial pair of a positive non-simple root (by positive-root
    /// index): (α, β, N_{α,β}).
    pub fn extraspecial_pair(&self, k: usize) -> Option<(usize, usize, i64)> {
        self.extraspecial[k]
    }

    /// Dominant weights with λ(H_θ) ≤ ℓ, ordered by level then coordinates.
    pub fn enumerate_levels(&self, level: u32) -> Vec<Weight> {
        let mut out = Vec::new();
        let mut cur = vec![0i64; self.rank];
        fn rec(alg: &LieAlgebra, i: usize, budget: i64, cur: &mut Vec<i64>, out: &mut Vec<Weight>) {
            if i == alg.rank {
                out.push(Weight(cur.clone()));
                return;
            }
            let a = alg.comarks[i];
            let mut c = 0;
            while c * a <= budget {
                cur[i] = c;
                rec(alg, i + 1, budget - c * a, cur, out);
                c += 1;
            }
            cur[i] = 0;
        }
        rec(self, 0, level as i64, &mut cur, &mut out);
        out.sort_by(|a, b| self.level_of(a).cmp(&self.level_of(b)).then_with(|| b.0.cmp(&a.0)));
        out
    }

    /// Exhaustive Jacobi identity and antisymmetry check.
    pub fn verify_jacobi(&self) -> Result<(), LieError> {
        let d = self.dim();
        for a in 0..d {
            for b in 0..d {
                let mut s: Vec<(usize, i64)> = self.brackets[a][b].clone();
                s.extend(self.brackets[b][a].iter().cloned());
                if !sparse_is_zero(s) {
                    return Err(LieError::Structure(format!("antisymmetry fails at ({a},{b})")));
                }
            }
        }
        for a in 0..d {
            for b in a + 1..d {
                for c in b + 1..d {
                    let mut acc = Vec::new();
                    for (x, y, z) in [(a, b, c), (b, c, a), (c, a, b)] {
                        for (w, n) in &self.brackets[y][z] {
                            for (u, m) in &self.brackets[x][*w] {
                                acc.push((*u, n * m));
                            }
                        }
                    }
                    if !sparse_is_zero(acc) {
                        return Err(LieError::Structure(format!("Jacobi fails at ({a},{b},{c})")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Exhaustive check of ([a,b]|c) + (b|[a,c]) = 0 and symmetry.
    pub fn verify_invariance(&self) -> Result<(), LieError> {
        let d = self.dim();
        for a in 0..d {
            for b in 0..d {
                if self.form(a, b) != self.form(b, a) {
                    return Err(LieError::Structure(format!("form not symmetric at ({a},{b})")));
                }
            }
        }
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    let mut s = Q::zero();
                    for (w, n) in &self.brackets[a][b] {
                        s += self.form(*w, c) * qi(*n);
                    }
                    for (w, n) in &self.brackets[a][c] {
                        s += self.form(b, *w) * qi(*n);
                    }
                    if !s.is_zero() {
                        return Err(LieError::Structure(format!("form not invariant at ({a},{b},{c})")));
                    }
                }
            }
        }
        Ok(())
    }
}

fn sparse_is_zero(mut v: Vec<(usize, i64)>) -> bool {
    v.sort_unstable_by_key(|x| x.0);
    let mut i = 0;
    while i < v.len() {
        let mut s = 0;
        let k = v[i].0;
        while i < v.len() && v[i].0 == k {
            s += v[i].1;
            i += 1;
        }
        if s != 0 {
            return false;
        }
    }
    true
}

fn add_roots(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn neg_root(a: &[i64]) -> Vec<i64> {
    a.iter().map(|x| -x).collect()
}

fn is_positive(a: &[i64]) -> bool {
    a.iter().any(|&c| c > 0)
}

/// Structure constants N_{x,y} for arbitrary roots, derived from the table
/// of positive pairs.
struct StructureTable<'a> {
    sym: &'a [Vec<Q>],
    lookup: &'a HashMap<Vec<i64>, usize>,
    pos: &'a [Vec<i64>],
    table: HashMap<(usize, usize), i64>,
}

impl StructureTable<'_> {
    fn norm(&self, r: &[i64]) -> Q {
        let mut s = Q::zero();
        for (i, x) in r.iter().enumerate() {
            for (j, y) in r.iter().enumerate() {
                if *x != 0 && *y != 0 {
                    s += &self.sym[i][j] * qi(x * y);
                }
            }
        }
        s
    }

    fn is_root(&self, r: &[i64]) -> bool {
        if is_positive(r) {
            self.lookup.contains_key(r)
        } else {
            self.lookup.contains_key(&neg_root(r))
        }
    }

    fn scaled(&self, num: &[i64], den: &[i64], n: i64) -> i64 {
        let v = self.norm(num) / self.norm(den) * qi(n);
        assert!(v.is_integer(), "structure constant ratio is integral");
        v.to_integer().to_i64().expect("small structure constant")
    }

    fn n(&self, x: &[i64], y: &[i64]) -> i64 {
        let z = add_roots(x, y);
        if z.iter().all(|&c| c == 0) || !self.is_root(&z) {
            return 0;
        }
        let (px, py) = (is_positive(x), is_positive(y));
        if px && py {
            let (ix, iy) = (self.lookup[x], self.lookup[y]);
            if let Some(v) = self.table.get(&(ix, iy)) {
                return *v;
            }
            if let Some(v) = self.table.get(&(iy, ix)) {
                return -*v;
            }
            panic!("structure constant for {:?}, {:?} requested before it was fixed", self.pos[ix], self.pos[iy]);
        }
        if !px && !py {
            return -self.n(&neg_root(x), &neg_root(y));
        }
        let w = neg_root(&z);
        if is_positive(&z) {
            if px {
                self.scaled(&w, x, self.n(y, &w))
            } else {
                self.scaled(&w, y, self.n(&w, x))
            }
        } else if px {
            self.scaled(&w, y, self.n(&w, x))
        } else {
            self.scaled(&w, x, self.n(y, &w))
        }
    }
}

/// Builds a simple Lie algebra and verifies Jacobi and form invariance.
pub fn build_simple(t: CartanType) -> Result<LieAlgebra, LieError> {
    build_simple_with(t, &Limits::default())
}

pub fn build_simple_with(t: CartanType, limits: &Limits) -> Result<LieAlgebra, LieError> {
    let rank = t.rank();
    let valid = match t {
        CartanType::A(n) => n >= 1,
        CartanType::B(n) | CartanType::C(n) => n >= 2,
        CartanType::D(n) => n >= 4,
        CartanType::E(n) => (6..=8).contains(&n),
        CartanType::F4 | CartanType::G2 => true,
    };
    if !valid {
        return Err(LieError::UnsupportedType(t.to_string()));
    }
    if rank > limits.max_rank {
        return Err(LieError::RankBound(rank, limits.max_rank));
    }
    let alg = construct(t);
    alg.verify_jacobi()?;
    alg.verify_invariance()?;
    Ok(alg)
}

fn construct(t: CartanType) -> LieAlgebra {
    let (lens, edges) = dynkin_data(t);
    let r = lens.len();
    let mut sym = vec![vec![Q::zero(); r]; r];
    for i in 0..r {
        sym[i][i] = lens[i].clone();
    }
    for (i, j, v) in edges {
        sym[i][j] = v.clone();
        sym[j][i] = v;
    }
    let cartan: Vec<Vec<i64>> = (0..r)
        .map(|i| {
            (0..r)
                .map(|j| {
                    let v = qi(2) * &sym[i][j] / &sym[i][i];
                    v.to_integer().to_i64().unwrap()
                })
                .collect()
        })
        .collect();

    // Positive roots by the root-string algorithm.
    let mut roots: Vec<Vec<i64>> = (0..r).map(|i| Weight::fundamental(r, i).0).collect();
    let mut set: std::collections::HashSet<Vec<i64>> = roots.iter().cloned().collect();
    let mut frontier = roots.clone();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for beta in &frontier {
            for i in 0..r {
                let mut qn = 0;
                let mut cur = beta.clone();
                loop {
                    cur[i] -= 1;
                    if set.contains(&cur) {
                        qn += 1;
                    } else {
                        break;
                    }
                }
                let pairing: i64 = beta.iter().enumerate().map(|(j, c)| c * cartan[i][j]).sum();
                let pn = qn - pairing;
                if pn > 0 {
                    let mut up = beta.clone();
                    up[i] += 1;
                    if set.insert(up.clone()) {
                        next.push(up);
                    }
                }
            }
        }
        roots.extend(next.iter().cloned());
        frontier = next;
    }
    roots.sort_by(|a, b| {
        let ha: i64 = a.iter().sum();
        let hb: i64 = b.iter().sum();
        ha.cmp(&hb).then_with(|| b.cmp(a))
    });
    let npos = roots.len();
    let lookup: HashMap<Vec<i64>, usize> = roots.iter().enumerate().map(|(k, x)| (x.clone(), k)).collect();

    // Extraspecial pairs and the positive structure-constant table.
    let mut st = StructureTable { sym: &sym, lookup: &lookup, pos: &roots, table: HashMap::new() };
    let mut extraspecial = vec![None; npos];
    for (k, xi) in roots.iter().enumerate() {
        let mut pairs = Vec::new();
        for (a, alpha) in roots.iter().enumerate().take(k) {
            let beta: Vec<i64> = xi.iter().zip(alpha).map(|(x, y)| x - y).collect();
            if let Some(&b) = lookup.get(&beta) {
                if a < b {
                    pairs.push((a, b));
                }
            }
        }
        let Some(&(a, b)) = pairs.first() else { continue };
        let (alpha, beta) = (&roots[a], &roots[b]);
        let mut rr = 0;
        let mut cur = beta.clone();
        loop {
            cur = cur.iter().zip(alpha).map(|(x, y)| x - y).collect();
            if lookup.contains_key(&cur) {
                rr += 1;
            } else {
                break;
            }
        }
        let nab = rr + 1;
        st.table.insert((a, b), nab);
        extraspecial[k] = Some((a, b, nab));
        let xi_norm = st.norm(xi);
        for &(g, d) in &pairs[1..] {
            let (gamma, delta) = (roots[g].clone(), roots[d].clone());
            let (ng, nd) = (neg_root(&gamma), neg_root(&delta));
            let mut s = Q::zero();
            let bg: Vec<i64> = add_roots(beta, &ng);
            if st.is_root(&bg) {
                s += qi(st.n(beta, &ng) * st.n(alpha, &nd)) / st.norm(&bg);
            }
            let ag: Vec<i64> = add_roots(alpha, &ng);
            if st.is_root(&ag) {
                s += qi(st.n(&ng, alpha) * st.n(beta, &nd)) / st.norm(&ag);
            }
            let v = &xi_norm / qi(nab) * s;
            assert!(v.is_integer(), "structure constant is integral");
            st.table.insert((g, d), v.to_integer().to_i64().unwrap());
        }
    }

    // Bracket table.
    let dim = r + 2 * npos;
    let basis_root = |idx: usize| -> Vec<i64> {
        if idx < r {
            vec![0; r]
        } else if idx < r + npos {
            roots[idx - r].clone()
        } else {
            neg_root(&roots[idx - r - npos])
        }
    };
    let index_of = |root: &[i64]| -> usize {
        if is_positive(root) {
            r + lookup[root]
        } else {
            r + npos + lookup[&neg_root(root)]
        }
    };
    let coroot = |root: &[i64]| -> Vec<i64> {
        let len = st.norm(root);
        root.iter()
            .enumerate()
            .map(|(j, c)| (&sym[j][j] * qi(*c) / &len).to_integer().to_i64().unwrap())
            .collect()
    };
    let mut brackets = vec![vec![Vec::new(); dim]; dim];
    for a in 0..dim {
        for b in 0..dim {
            let (ra, rb) = (basis_root(a), basis_root(b));
            let v: Vec<(usize, i64)> = if a < r && b < r {
                Vec::new()
            } else if a < r {
                let c: i64 = rb.iter().enumerate().map(|(j, x)| x * cartan[a][j]).sum();
                if c == 0 {
                    Vec::new()
                } else {
                    vec![(b, c)]
                }
            } else if b < r {
                let c: i64 = ra.iter().enumerate().map(|(j, x)| x * cartan[b][j]).sum();
                if c == 0 {
                    Vec::new()
                } else {
                    vec![(a, -c)]
                }
            } else {
                let s = add_roots(&ra, &rb);
                if s.iter().all(|&x| x == 0) {
                    let (pos, sign) = if is_positive(&ra) { (ra.clone(), 1) } else { (rb.clone(), -1) };
                    coroot(&pos).into_iter().enumerate().filter(|(_, c)| *c != 0).map(|(j, c)| (j, sign * c)).collect()
                } else if st.is_root(&s) {
                    vec![(index_of(&s), st.n(&ra, &rb))]
                } else {
                    Vec::new()
                }
            };
            brackets[a][b] = v;
        }
    }

    // Killing form on the graded pairs, rescaled so (H_θ|H_θ) = 2.
    let killing = |a: usize, b: usize| -> Q {
        let mut tr = 0i64;
        for c in 0..dim {
            for (w, n) in &brackets[b][c] {
                for (u, m) in &brackets[a][*w] {
                    if *u == c {
                        tr += n * m;
                    }
                }
            }
        }
        qi(tr)
    };
    let theta = roots[npos - 1].clone();
    let theta_co = coroot(&theta);
    let mut kill_hh = vec![vec![Q::zero(); r]; r];
    for i in 0..r {
        for j in 0..r {
            kill_hh[i][j] = killing(i, j);
        }
    }
    let mut k_theta = Q::zero();
    for i in 0..r {
        for j in 0..r {
            k_theta += qi(theta_co[i] * theta_co[j]) * &kill_hh[i][j];
        }
    }
    let scale = qi(2) / k_theta;
    let form_hh: Vec<Vec<Q>> = kill_hh.iter().map(|row| row.iter().map(|x| x * &scale).collect()).collect();
    let mut form_partner = vec![(0usize, Q::zero()); dim];
    for a in r..dim {
        let b = if a < r + npos { a + npos } else { a - npos };
        form_partner[a] = (b, killing(a, b) * &scale);
    }

    let comarks = coroot(&theta);
    LieAlgebra {
        cartan_type: t,
        rank: r,
        cartan,
        sym,
        pos_roots: roots.clone(),
        comarks,
        root_lookup: lookup.clone(),
        brackets,
        form_partner,
        form_hh,
        extraspecial,
    }
}

/// Finite-dimensional irreducible representation with explicit matrices for
/// every Chevalley basis element.
#[derive(Clone, Debug)]
pub struct Irrep {
    pub label: Weight,
    pub dim: usize,
    /// Weight of each basis vector in fundamental coordinates.
    pub weights: Vec<Vec<i64>>,
    /// Lowering depth of each basis vector below the highest weight vector.
    pub depth: Vec<usize>,
    /// `mats[a]` is the action of basis element a.
    pub mats: Vec<SparseMat<Q>>,
}

impl Irrep {
    pub fn act(&self, a: usize, v: &[Q]) -> Vec<Q> {
        self.mats[a].apply(v)
    }
}

/// Builds V_λ by lowering from the highest weight vector.
pub fn irrep(alg: &LieAlgebra, lambda: &Weight) -> Result<Irrep, LieError> {
    irrep_with(alg, lambda, &Limits::default())
}

pub fn irrep_with(alg: &LieAlgebra, lambda: &Weight, limits: &Limits) -> Result<Irrep, LieError> {
    let r = alg.rank;
    if lambda.0.len() != r {
        return Err(LieError::WeightLength { got: lambda.0.len(), expected: r });
    }
    if !lambda.is_dominant() {
        return Err(LieError::NotDominant(lambda.0.clone()));
    }
    let alpha_w: Vec<Vec<i64>> = (0..r).map(|i| (0..r).map(|j| alg.cartan[j][i]).collect()).collect();
    let mut weights: Vec<Vec<i64>> = vec![lambda.0.clone()];
    let mut depth = vec![0usize];
    // Column lists in global indexing.
    let mut fcols: Vec<Vec<Vec<(usize, Q)>>> = vec![Vec::new(); r];
    let mut ecols: Vec<Vec<Vec<(usize, Q)>>> = vec![vec![Vec::new()]; r];
    let mut layer: Vec<usize> = vec![0];
    let mut prev_layer: Vec<usize> = Vec::new();
    let mut k = 0;
    while !layer.is_empty() {
        let start = weights.len();
        let lk = layer.len();
        let local: HashMap<usize, usize> = layer.iter().enumerate().map(|(i, g)| (*g, i)).collect();
        // Candidates grouped by weight.
        let mut groups: Vec<(Vec<i64>, Vec<(usize, usize)>)> = Vec::new();
        let mut gindex: HashMap<Vec<i64>, usize> = HashMap::new();
        for &b in &layer {
            for i in 0..r {
                let w: Vec<i64> = weights[b].iter().zip(&alpha_w[i]).map(|(x, y)| x - y).collect();
                let gi = *gindex.entry(w.clone()).or_insert_with(|| {
                    groups.push((w, Vec::new()));
                    groups.len() - 1
                });
                groups[gi].1.push((i, b));
            }
        }
        for f in fcols.iter_mut() {
            f.resize(start, Vec::new());
        }
        let mut new_layer = Vec::new();
        for (w, cands) in groups {
            let mut ech = Echelon::new(r * lk, true);
            let mut accepted: Vec<usize> = Vec::new();
            for (i, b) in cands {
                // Φ(F_i b) = (E_j F_i b)_j with E_j F_i b = F_i E_j b + δ_ij ⟨wt b, α_i^∨⟩ b.
                let mut phi = vec![Q::zero(); r * lk];
                for j in 0..r {
                    for (c, x) in &ecols[j][b] {
                        for (d, y) in &fcols[i][*c] {
                            phi[j * lk + local[d]] += x * y;
                        }
                    }
                    if i == j {
                        phi[j * lk + local[&b]] += qi(weights[b][i]);
                    }
                }
                match ech.insert(phi.clone()) {
                    Insert::New(_) => {
                        let g = weights.len();
                        if g >= limits.max_irrep_dim {
                            return Err(LieError::IrrepTooLarge(limits.max_irrep_dim));
                        }
                        weights.push(w.clone());
                        depth.push(k + 1);
                        accepted.push(g);
                        new_layer.push(g);
                        for j in 0..r {
                            let col: Vec<(usize, Q)> = (0..lk)
                                .filter(|&t| !phi[j * lk + t].is_zero())
                                .map(|t| (layer[t], phi[j * lk + t].clone()))
                                .collect();
                            ecols[j].push(col);
                        }
                        fcols[i][b].push((g, Q::one()));
                    }
                    Insert::Dependent(comb) => {
                        for (a, c) in comb.into_iter().enumerate() {
                            if !c.is_zero() {
                                fcols[i][b].push((accepted[a], c));
                            }
                        }
                    }
                }
            }
        }
        prev_layer = std::mem::replace(&mut layer, new_layer);
        k += 1;
    }
    let _ = prev_layer;
    let dim = weights.len();
    for f in fcols.iter_mut() {
        f.resize(dim, Vec::new());
    }
    let mk = |cols: &Vec<Vec<(usize, Q)>>| SparseMat { nrows: dim, ncols: dim, cols: cols.clone() };
    let mut mats: Vec<Option<SparseMat<Q>>> = vec![None; alg.dim()];
    for i in 0..r {
        let cols = (0..dim).map(|v| if weights[v][i] == 0 { Vec::new() } else { vec![(v, qi(weights[v][i]))] }).collect();
        mats[alg.h(i)] = Some(SparseMat { nrows: dim, ncols: dim, cols });
        mats[alg.e(i)] = Some(mk(&ecols[i]));
        mats[alg.f(i)] = Some(mk(&fcols[i]));
    }
    for k in 0..alg.n_pos() {
        if let Some((a, b, n)) = alg.extraspecial_pair(k) {
            let (ea, eb) = (alg.rank + a, alg.rank + b);
            let e = mats[ea].as_ref().unwrap().commutator(mats[eb].as_ref().unwrap()).scale(&q(1, n));
            let (fa, fb) = (alg.opposite(ea), alg.opposite(eb));
            let f = mats[fa].as_ref().unwrap().commutator(mats[fb].as_ref().unwrap()).scale(&q(-1, n));
            let idx = alg.rank + k;
            mats[idx] = Some(e);
            mats[alg.opposite(idx)] = Some(f);
        }
    }
    Ok(Irrep { label: lambda.clone(), dim, weights, depth, mats: mats.into_iter().map(Option::unwrap).collect() })
}

/// Checks ρ([a,b]) = [ρ(a), ρ(b)] for all basis pairs.
pub fn verify_irrep(alg: &LieAlgebra, v: &Irrep) -> Result<(), LieError> {
    let d = alg.dim();
    for a in 0..d {
        for b in a + 1..d {
            let lhs = v.mats[a].commutator(&v.mats[b]);
            let mut rhs = SparseMat::zeros(v.dim, v.dim);
            for (c, n) in alg.bracket(a, b) {
                rhs = rhs.lin_comb(&Q::one(), &v.mats[*c], &qi(*n));
            }
            if lhs.to_dense() != rhs.to_dense() {
                return Err(LieError::Structure(format!(
                    "representation {} fails bracket ({}, {})",
                    v.label,
                    alg.basis_name(a),
                    alg.basis_name(b)
                )));
            }
        }
    }
    Ok(())
}

/// Highest weight of the representation X ↦ mats(X), located as the common
/// kernel of the raising operators.
pub fn highest_weight_of<F: Field>(alg: &LieAlgebra, mats: &[Mat<F>]) -> Result<Weight, LieError> {
    let n = mats[0].rows;
    let r = alg.rank;
    let mut rows = Vec::new();
    for i in 0..r {
        let m = &mats[alg.e(i)];
        for row in 0..n {
            rows.push(m.row(row).to_vec());
        }
    }
    let stacked = Mat::from_rows(rows);
    let ns = stacked.nullspace();
    if ns.len() != 1 {
        return Err(LieError::Structure(format!("highest weight space has dimension {}", ns.len())));
    }
    let v = &ns[0];
    let pivot = v.iter().position(|x| !x.is_zero()).expect("nonzero kernel vector");
    let mut coords = Vec::with_capacity(r);
    for i in 0..r {
        let hv = mats[alg.h(i)].apply(v);
        let mu = hv[pivot].mul(&v[pivot].inv());
        let check: Vec<F> = v.iter().map(|x| x.mul(&mu)).collect();
        if check != hv {
            return Err(LieError::Structure("highest weight vector is not an H-eigenvector".into()));
        }
        let c = mu.to_cyc().to_rational().filter(|x| x.is_integer()).ok_or_else(|| {
            LieError::Structure("non-integral highest weight".into())
        })?;
        coords.push(c.to_integer().to_i64().unwrap());
    }
    Ok(Weight(coords))
}

/// Label of the dual representation, found on the matrices −ρ(X)^T.
pub fn dual_weight(alg: &LieAlgebra, lambda: &Weight) -> Result<Weight, LieError> {
    let v = irrep(alg, lambda)?;
    let mats: Vec<Mat<Q>> = v.mats.iter().map(|m| m.transpose().to_dense().scale(&qi(-1))).collect();
    highest_weight_of(alg, &mats)
}

/// Automorphism γ ↦ ρ(γ) of 𝔤 for a generator of Z/p, stored as a matrix
/// whose column j is the image of basis element j.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaAction {
    pub p: u32,
    pub mat: Mat<CycNumber>,
}

impl GammaAction {
    pub fn trivial(alg: &LieAlgebra, p: u32) -> Result<Self, LieError> {
        zeta_pow(p, 0)?;
        Ok(GammaAction { p, mat: Mat::identity(alg.dim()) })
    }

    /// Conjugation by the torus element acting on E_α by ζ^{Σ c_i s_i}.
    pub fn inner_torus(alg: &LieAlgebra, p: u32, s: &[i64]) -> Result<Self, LieError> {
        if s.len() != alg.rank {
            return Err(LieError::InvalidGamma(format!("expected {} exponents", alg.rank)));
        }
        let mut m = Mat::zeros(alg.dim(), alg.dim());
        for a in 0..alg.dim() {
            let e: i64 = alg.basis_root(a).iter().zip(s).map(|(c, x)| c * x).sum();
            m.set(a, a, zeta_pow(p, e)?);
        }
        Ok(GammaAction { p, mat: m })
    }

    /// The automorphism X ↦ f(ρ_V(X)) read back through a faithful
    /// representation V.
    pub fn from_rep_map(
        alg: &LieAlgebra,
        rep: &Irrep,
        p: u32,
        f: impl Fn(&Mat<CycNumber>) -> Mat<CycNumber>,
    ) -> Result<Self, LieError> {
        zeta_pow(p, 0)?;
        let d = alg.dim();
        let dense: Vec<Mat<CycNumber>> = rep.mats.iter().map(|m| m.to_dense().map(CycNumber::from_rational_ref)).collect();
        let cols: Vec<Vec<CycNumber>> = dense.iter().map(|m| m.data.clone()).collect();
        let system = Mat::from_cols(&cols, rep.dim * rep.dim);
        let mut out = Mat::zeros(d, d);
        for (a, m) in dense.iter().enumerate() {
            let img = f(m);
            let x = system
                .solve(&img.data)
                .ok_or_else(|| LieError::InvalidGamma("image leaves the representation of the algebra".into()))?;
            for (b, v) in x.into_iter().enumerate() {
                out.set(b, a, v);
            }
        }
        Ok(GammaAction { p, mat: out })
    }

    /// Conjugation X ↦ g X g^{−1} by an invertible matrix g on V.
    pub fn inner_conjugation(alg: &LieAlgebra, rep: &Irrep, p: u32, g: &Mat<CycNumber>) -> Result<Self, LieError> {
        let ginv = g.inverse().ok_or_else(|| LieError::InvalidGamma("conjugating matrix is singular".into()))?;
        Self::from_rep_map(alg, rep, p, |m| g.mul(m).mul(&ginv))
    }

    /// X ↦ −X^T in the first fundamental representation of A_n.
    pub fn minus_transpose(alg: &LieAlgebra) -> Result<Self, LieError> {
        let rep = irrep(alg, &Weight::fundamental(alg.rank, 0))?;
        Self::from_rep_map(alg, &rep, 2, |m| m.transpose().scale(&CycNumber::from_int(-1)))
    }

    /// Diagram automorphism permuting simple roots, extended to all root
    /// vectors through the extraspecial pairs.
    pub fn diagram(alg: &LieAlgebra, perm: &[usize], p: u32) -> Result<Self, LieError> {
        let r = alg.rank;
        let mut sorted = perm.to_vec();
        sorted.sort_unstable();
        if sorted != (0..r).collect::<Vec<_>>() {
            return Err(LieError::InvalidGamma("not a permutation of the simple roots".into()));
        }
        for i in 0..r {
            for j in 0..r {
                if alg.cartan[perm[i]][perm[j]] != alg.cartan[i][j] {
                    return Err(LieError::InvalidGamma("permutation is not a diagram symmetry".into()));
                }
            }
        }
        let d = alg.dim();
        let mut images: Vec<Option<Vec<Q>>> = vec![None; d];
        for i in 0..r {
            images[alg.h(i)] = Some(alg.unit(alg.h(perm[i])));
            images[alg.e(i)] = Some(alg.unit(alg.e(perm[i])));
            images[alg.f(i)] = Some(alg.unit(alg.f(perm[i])));
        }
        for k in 0..alg.n_pos() {
            if let Some((a, b, n)) = alg.extraspecial_pair(k) {
                let (ea, eb) = (r + a, r + b);
                let e = alg.bracket_vec(images[ea].as_ref().unwrap(), images[eb].as_ref().unwrap());
                let (fa, fb) = (alg.opposite(ea), alg.opposite(eb));
                let f = alg.bracket_vec(images[fa].as_ref().unwrap(), images[fb].as_ref().unwrap());
                images[r + k] = Some(e.iter().map(|x| x / qi(n)).collect());
                images[alg.opposite(r + k)] = Some(f.iter().map(|x| x / qi(-n)).collect());
            }
        }
        let mut m = Mat::zeros(d, d);
        for (a, img) in images.into_iter().enumerate() {
            for (b, v) in img.unwrap().into_iter().enumerate() {
                m.set(b, a, CycNumber::from_rational(v));
            }
        }
        zeta_pow(p, 0)?;
        Ok(GammaAction { p, mat: m })
    }

    /// ρ ∘ σ.
    pub fn compose(&self, other: &GammaAction) -> Result<Self, LieError> {
        if self.p != other.p {
            return Err(LieError::InvalidGamma("composing actions of different order".into()));
        }
        Ok(GammaAction { p: self.p, mat: self.mat.mul(&other.mat) })
    }

    pub fn apply(&self, x: &[CycNumber]) -> Vec<CycNumber> {
        self.mat.apply(x)
    }

    pub fn power(&self, k: u32) -> GammaAction {
        GammaAction { p: self.p, mat: self.mat.pow(k % self.p) }
    }

    pub fn inverse(&self) -> GammaAction {
        self.power(self.p - 1)
    }

    pub fn is_trivial(&self) -> bool {
        self.mat == Mat::identity(self.mat.rows)
    }

    /// Checks that ρ(γ) is a Lie algebra automorphism preserving the form
    /// with ρ(γ)^p = id.
    pub fn validate(&self, alg: &LieAlgebra) -> Result<(), LieError> {
        let d = alg.dim();
        if self.mat.rows != d || self.mat.cols != d {
            return Err(LieError::InvalidGamma("matrix size does not match the algebra".into()));
        }
        if self.mat.pow(self.p) != Mat::identity(d) {
            return Err(LieError::InvalidGamma(format!("order does not divide {}", self.p)));
        }
        let cols: Vec<Vec<CycNumber>> = (0..d).map(|a| self.mat.col(a)).collect();
        for a in 0..d {
            for b in a + 1..d {
                let mut lhs = vec![CycNumber::zero(); d];
                for (c, n) in alg.bracket(a, b) {
                    crate::linalg::axpy(&mut lhs, &CycNumber::from_int(*n), &cols[*c]);
                }
                if lhs != alg.bracket_vec(&cols[a], &cols[b]) {
                    return Err(LieError::InvalidGamma(format!(
                        "not a homomorphism on ({}, {})",
                        alg.basis_name(a),
                        alg.basis_name(b)
                    )));
                }
                let f = alg.form_vec(&cols[a], &cols[b]);
                if f != CycNumber::from_rational(alg.form(a, b)) {
                    return Err(LieError::InvalidGamma("form not preserved".into()));
                }
            }
            if alg.form_vec(&cols[a], &cols[a]) != CycNumber::from_rational(alg.form(a, a)) {
                return Err(LieError::InvalidGamma("form not preserved".into()));
            }
        }
        Ok(())
    }
}

impl CycNumber {
    fn from_rational_ref(q: &Q) -> CycNumber {
        CycNumber::from_rational(q.clone())
    }
}

/// Eigenspace decomposition 𝔤 = ⊕_i 𝔤^{ζ^i}.
#[derive(Clone, Debug)]
pub struct GammaDecomposition {
    pub p: u32,
    /// `spaces[i]` is a basis of the ζ^i-eigenspace.
    pub spaces: Vec<Vec<Vec<CycNumber>>>,
}

impl GammaDecomposition {
    /// Basis of 𝔤^{ζ^{−i}}, the part paired with the i-th eigensheaf.
    pub fn paired(&self, i: usize) -> &[Vec<CycNumber>] {
        let p = self.p as usize;
        &self.spaces[(p - i % p) % p]
    }

    pub fn dims(&self) -> Vec<usize> {
        self.spaces.iter().map(Vec::len).collect()
    }
}

pub fn gamma_eigenspaces(alg: &LieAlgebra, rho: &GammaAction) -> Result<GammaDecomposition, LieError> {
    rho.validate(alg)?;
    let d = alg.dim();
    let mut spaces = Vec::with_capacity(rho.p as usize);
    for i in 0..rho.p {
        let z = zeta_pow(rho.p, i as i64)?;
        let shifted = rho.mat.sub(&Mat::identity(d).scale(&z));
        spaces.push(shifted.nullspace());
    }
    let total: usize = spaces.iter().map(Vec::len).sum();
    if total != d {
        return Err(LieError::InvalidGamma(format!("eigenspaces span {total} of {d} dimensions")));
    }
    Ok(GammaDecomposition { p: rho.p, spaces })
}

/// Label γλ of the twisted representation X ↦ ρ_λ(ρ(γ)^{−1}X).
pub fn gamma_on_weights(alg: &LieAlgebra, rho: &GammaAction, lambda: &Weight) -> Result<Weight, LieError> {
    if rho.is_trivial() {
        return Ok(lambda.clone());
    }
    let v = irrep(alg, lambda)?;
    let dense: Vec<Mat<CycNumber>> = v.mats.iter().map(|m| m.to_dense().map(CycNumber::from_rational_ref)).collect();
    let inv = rho.inverse();
    let d = alg.dim();
    let twisted: Vec<Mat<CycNumber>> = (0..d)
        .map(|a| {
            let mut acc = Mat::zeros(v.dim, v.dim);
            for (b, m) in dense.iter().enumerate() {
                let c = inv.mat.get(b, a);
                if !c.is_zero() {
                    acc = acc.add(&m.scale(c));
                }
            }
            acc
        })
        .collect();
    highest_weight_of(alg, &twisted)
}

/// Checks [𝔤^{ζ^a}, 𝔤^{ζ^b}] ⊆ 𝔤^{ζ^{a+b}} on basis vectors.
pub fn verify_eigen_grading(alg: &LieAlgebra, dec: &GammaDecomposition) -> bool {
    let p = dec.p as usize;
    for a in 0..p {
        for b in 0..p {
            let target = &dec.spaces[(a + b) % p];
            let mut ech = Echelon::new(alg.dim(), false);
            for t in target {
                ech.insert(t.clone());
            }
            for x in &dec.spaces[a] {
                for y in &dec.spaces[b] {
                    let z = alg.bracket_vec(x, y);
                    if !is_zero_vec(&z) && !ech.contains(&z) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Scalar by which Σ ρ(X_i)ρ(Y_i) acts on V_λ, i.e. (λ, λ + 2ρ) in the
/// normalized form.
pub fn casimir_eigenvalue_formula(alg: &LieAlgebra, lambda: &Weight) -> Q {
    // Convert λ to simple-root coordinates through the inverse Cartan matrix.
    let r = alg.rank;
    let a = Mat::from_rows((0..r).map(|i| (0..r).map(|j| qi(alg.cartan[i][j])).collect()).collect());
    let lam = a.solve(&lambda.0.iter().map(|x| qi(*x)).collect::<Vec<_>>()).expect("Cartan matrix invertible");
    let two_rho = a.solve(&vec![qi(2); r]).expect("Cartan matrix invertible");
    let mut s = Q::zero();
    for i in 0..r {
        for j in 0..r {
            s += &lam[i] * (&lam[j] + &two_rho[j]) * &alg.sym[i][j];
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions() {
        for (t, d) in [
            ("A1", 3),
            ("A2", 8),
            ("G2", 14),
            ("B2", 10),
            ("C3", 21),
            ("B3", 21),
            ("D4", 28),
            ("F4", 52),
            ("E6", 78),
        ] {
            let alg = build_simple(t.parse().unwrap()).unwrap();
            assert_eq!(alg.dim(), d, "{t}");
        }
    }

    #[test]
    fn rank_bound_enforced() {
        let limits = Limits { max_rank: 2, ..Limits::default() };
        assert_eq!(build_simple_with(CartanType::A(3), &limits).unwrap_err(), LieError::RankBound(3, 2));
        assert!("D3".parse::<CartanType>().is_err());
        assert!("X2".parse::<CartanType>().is_err());
    }

    #[test]
    fn a1_form_values() {
        let alg = build_simple(CartanType::A(1)).unwrap();
        let ht = alg.h_theta();
        assert_eq!(alg.form_vec(&ht, &ht), qi(2));
        assert_eq!(alg.form(alg.e(0), alg.f(0)), qi(1));
        assert_eq!(alg.form(alg.h(0), alg.e(0)), qi(0));
    }

    #[test]
    fn comarks_and_levels() {
        let a1 = build_simple(CartanType::A(1)).unwrap();
        assert_eq!(a1.enumerate_levels(0), vec![Weight(vec![0])]);
        assert_eq!(a1.enumerate_levels(2).len(), 3);
        let a2 = build_simple(CartanType::A(2)).unwrap();
        assert_eq!(a2.enumerate_levels(1), vec![Weight(vec![0, 0]), Weight(vec![1, 0]), Weight(vec![0, 1])]);
        let g2 = build_simple(CartanType::G2).unwrap();
        assert_eq!(g2.dual_coxeter_from_comarks(), 4);
        let f4 = build_simple(CartanType::F4).unwrap();
        assert_eq!(f4.dual_coxeter_from_comarks(), 9);
    }

    #[test]
    fn small_irreps() {
        let a1 = build_simple(CartanType::A(1)).unwrap();
        let triv = irrep(&a1, &Weight(vec![0])).unwrap();
        assert_eq!(triv.dim, 1);
        assert!(triv.mats.iter().all(SparseMat::is_zero));
        assert_eq!(irrep(&a1, &Weight(vec![1])).unwrap().dim, 2);
        let a2 = build_simple(CartanType::A(2)).unwrap();
        let v = irrep(&a2, &Weight(vec![1, 0])).unwrap();
        assert_eq!(v.dim, 3);
        verify_irrep(&a2, &v).unwrap();
        assert!(irrep(&a2, &Weight(vec![-1, 0])).is_err());
    }

    #[test]
    fn irrep_dimension_bound() {
        let a2 = build_simple(CartanType::A(2)).unwrap();
        let limits = Limits { max_irrep_dim: 5, ..Limits::default() };
        assert_eq!(irrep_with(&a2, &Weight(vec![1, 1]), &limits).unwrap_err(), LieError::IrrepTooLarge(5));
    }

    #[test]
    fn a1_inner_involution() {
        let a1 = build_simple(CartanType::A(1)).unwrap();
        let rho = GammaAction::inner_torus(&a1, 2, &[1]).unwrap();
        let dec = gamma_eigenspaces(&a1, &rho).unwrap();
        assert_eq!(dec.dims(), vec![1, 2]);
        assert_eq!(dec.spaces[0], vec![a1.unit::<CycNumber>(0)]);
        assert_eq!(gamma_on_weights(&a1, &rho, &Weight(vec![1])).unwrap(), Weight(vec![1]));
    }

    #[test]
    fn a2_outer_involution() {
        let a2 = build_simple(CartanType::A(2)).unwrap();
        let rho = GammaAction::minus_transpose(&a2).unwrap();
        let dec = gamma_eigenspaces(&a2, &rho).unwrap();
        assert_eq!(dec.dims(), vec![3, 5]);
        assert!(verify_eigen_grading(&a2, &dec));
        assert_eq!(gamma_on_weights(&a2, &rho, &Weight(vec![1, 0])).unwrap(), Weight(vec![0, 1]));
        let diag = GammaAction::diagram(&a2, &[1, 0], 2).unwrap();
        diag.validate(&a2).unwrap();
        assert_eq!(gamma_eigenspaces(&a2, &diag).unwrap().dims(), vec![3, 5]);
    }

    #[test]
    fn order_three_torus_action() {
        let a2 = build_simple(CartanType::A(2)).unwrap();
        let rho = GammaAction::inner_torus(&a2, 3, &[1, 1]).unwrap();
        let dec = gamma_eigenspaces(&a2, &rho).unwrap();
        assert_eq!(dec.dims().iter().sum::<usize>(), 8);
        assert!(verify_eigen_grading(&a2, &dec));
    }

    #[test]
    fn dual_labels() {
        let a2 = build_simple(CartanType::A(2)).unwrap();
        assert_eq!(dual_weight(&a2, &Weight(vec![1, 0])).unwrap(), Weight(vec![0, 1]));
        let a1 = build_simple(CartanType::A(1)).unwrap();
        assert_eq!(dual_weight(&a1, &Weight(vec![1])).unwrap(), Weight(vec![1]));
    }

    #[test]
    fn bad_gamma_rejected() {
        let a1 = build_simple(CartanType::A(1)).unwrap();
        let mut m = Mat::identity(3);
        m.set(0, 0, CycNumber::from_int(2));
        let bad = GammaAction { p: 2, mat: m };
        assert!(gamma_eigenspaces(&a1, &bad).is_err());
    }
}
