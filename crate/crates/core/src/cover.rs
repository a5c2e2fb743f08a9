//! Cyclic coverings: dual graphs with Hurwitz data, Kummer models
//! y^p = κ Π (x − b)^{m_b} over the affine line, the eigensheaf
//! decomposition, the twisted global algebra, normalization of nodes and
//! the formal smoothing algebra.

use std::collections::{BTreeMap, HashMap, HashSet};

use num_integer::Integer;
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cyclo::{is_prime, qi, zeta_pow, CycNumber, Q};
use crate::liealg::{gamma_eigenspaces, GammaAction, LieAlgebra, LieError};
use crate::linalg::Field;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoverError {
    #[error("{0} is not a prime")]
    NotPrime(u32),
    #[error("character exponent {0} is not in 1..{1}")]
    Character(u32, u32),
    #[error("point {0} is a branch point")]
    BranchPoint(String),
    #[error("point {0} is not a branch point")]
    NotBranch(String),
    #[error("no node with index {0}")]
    NoSuchNode(usize),
    #[error("no leg labelled {0:?}")]
    NoSuchLeg(String),
    #[error("κ·f({0}) has no rational p-th root")]
    NoRationalSheet(String),
    #[error("generator is not fixed by the group action")]
    NotInvariant,
    #[error(transparent)]
    Lie(#[from] LieError),
}

/// Multiset of nontrivial characters, as exponents 1..p−1 of ζ.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HurwitzData(pub Vec<u32>);

impl HurwitzData {
    pub fn degree(&self) -> usize {
        self.0.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphVertex {
    pub genus: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphLeg {
    pub vertex: usize,
    pub label: String,
    /// Optional name of the point, used to detect collisions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchLeg {
    pub vertex: usize,
    pub char: u32,
    /// Set when the branch point is placed on a node (always invalid).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<String>,
}

/// Dual graph of the base of a Γ-covering, Γ = Z/p.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoveringGraph {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub p: u32,
    pub vertices: Vec<GraphVertex>,
    #[serde(default)]
    pub edges: Vec<[usize; 2]>,
    #[serde(default)]
    pub legs: Vec<GraphLeg>,
    #[serde(default)]
    pub branch: Vec<BranchLeg>,
    /// Declared Hurwitz data; when absent it is read off the branch legs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<HurwitzData>,
}

/// A failed validation rule with a human-readable detail.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub rule: &'static str,
    pub detail: String,
}

pub const RULE_PRIME: &str = "invalid prime";
pub const RULE_VERTEX: &str = "vertex out of range";
pub const RULE_CHAR: &str = "character out of range";
pub const RULE_NODE_BRANCH: &str = "node in branch locus";
pub const RULE_LEG_BRANCH: &str = "marked point in branch locus";
pub const RULE_DUP_LABEL: &str = "duplicate leg label";
pub const RULE_HURWITZ: &str = "Hurwitz degree mismatch";
pub const RULE_STABILITY: &str = "unstable component";
pub const RULE_MONODROMY: &str = "monodromy does not close";

/// Inverse of n modulo a prime p.
pub fn inv_mod(n: u32, p: u32) -> u32 {
    let (n, p) = (n as i64, p as i64);
    let e = n.extended_gcd(&p);
    (e.x.rem_euclid(p)) as u32
}

impl CoveringGraph {
    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn hurwitz(&self) -> HurwitzData {
        self.xi.clone().unwrap_or_else(|| HurwitzData(self.branch.iter().map(|b| b.char).collect()))
    }

    /// Number of special points (legs, branch legs, half-edges) per vertex.
    pub fn special_points(&self) -> Vec<usize> {
        let mut n = vec![0; self.vertices.len()];
        let mut bump = |v: usize| {
            if v < n.len() {
                n[v] += 1;
            }
        };
        for l in &self.legs {
            bump(l.vertex);
        }
        for b in &self.branch {
            bump(b.vertex);
        }
        for e in &self.edges {
            bump(e[0]);
            bump(e[1]);
        }
        n
    }

    /// Number of connected components.
    pub fn components(&self) -> usize {
        let n = self.vertices.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            p[x] = r;
            r
        }
        for e in &self.edges {
            if e[0] < n && e[1] < n {
                let a = find(&mut parent, e[0]);
                let b = find(&mut parent, e[1]);
                parent[a] = b;
            }
        }
        (0..n).filter(|&x| find(&mut parent, x) == x).count()
    }

    /// Arithmetic genus h¹(𝒪) of the base: Σ g_v + #edges − #vertices + #components.
    pub fn arithmetic_genus(&self) -> i64 {
        let g: i64 = self.vertices.iter().map(|v| v.genus as i64).sum();
        g + self.edges.len() as i64 - self.vertices.len() as i64 + self.components() as i64
    }

    /// Arithmetic genus of the cover, by Riemann–Hurwitz on each component:
    /// over a vertex carrying branch points the cover is connected with
    /// 2g̃ − 2 = p(2g − 2) + r(p − 1); over an unbranched vertex it is taken
    /// to be p disjoint copies. Each node has p preimages.
    pub fn cover_arithmetic_genus(&self) -> i64 {
        let p = self.p as i64;
        let mut chi_sum = 0i64; // Σ over cover components of (g − 1)
        for (v, vert) in self.vertices.iter().enumerate() {
            let r = self.branch.iter().filter(|b| b.vertex == v).count() as i64;
            let g = vert.genus as i64;
            if r > 0 {
                let two_g_minus_2 = p * (2 * g - 2) + r * (p - 1);
                chi_sum += two_g_minus_2 / 2;
            } else {
                chi_sum += p * (g - 1);
            }
        }
        chi_sum + p * self.edges.len() as i64 + 1
    }

    /// Checks every rule and returns the list of violations (empty when
    /// the graph is valid).
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |rule, detail: String| out.push(Violation { rule, detail });
        if !is_prime(self.p) {
            push(RULE_PRIME, format!("p = {}", self.p));
        }
        let nv = self.vertices.len();
        for (k, e) in self.edges.iter().enumerate() {
            if e[0] >= nv || e[1] >= nv {
                push(RULE_VERTEX, format!("edge {k}"));
            }
        }
        for l in &self.legs {
            if l.vertex >= nv {
                push(RULE_VERTEX, format!("leg {}", l.label));
            }
        }
        for (k, b) in self.branch.iter().enumerate() {
            if b.vertex >= nv {
                push(RULE_VERTEX, format!("branch leg {k}"));
            }
            if b.char == 0 || b.char >= self.p {
                push(RULE_CHAR, format!("branch leg {k} has character {}", b.char));
            }
            if let Some(e) = b.edge {
                push(RULE_NODE_BRANCH, format!("branch leg {k} sits on node {e}"));
            }
        }
        let mut seen = HashSet::new();
        for l in &self.legs {
            if !seen.insert(l.label.as_str()) {
                push(RULE_DUP_LABEL, l.label.clone());
            }
        }
        for l in &self.legs {
            if let Some(at) = &l.at {
                if self.branch.iter().any(|b| b.vertex == l.vertex && b.at.as_ref() == Some(at)) {
                    push(RULE_LEG_BRANCH, format!("leg {} at {at}", l.label));
                }
            }
        }
        if let Some(xi) = &self.xi {
            if xi.degree() != self.branch.len() {
                push(RULE_HURWITZ, format!("deg ξ = {} but {} branch legs", xi.degree(), self.branch.len()));
            }
        }
        for (v, (vert, n)) in self.vertices.iter().zip(self.special_points()).enumerate() {
            if 2 * vert.genus as i64 - 2 + n as i64 <= 0 {
                push(RULE_STABILITY, format!("vertex {v}: genus {}, {n} special points", vert.genus));
            }
        }
        if is_prime(self.p) {
            for v in 0..nv {
                let s: u32 = self
                    .branch
                    .iter()
                    .filter(|b| b.vertex == v && b.char > 0 && b.char < self.p)
                    .map(|b| inv_mod(b.char, self.p))
                    .sum();
                if !s.is_multiple_of(self.p) {
                    push(RULE_MONODROMY, format!("vertex {v}: Σ n⁻¹ = {s} mod {}", self.p));
                }
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Names of the two legs created by normalizing node `e`.
    pub fn node_leg_names(e: usize) -> (String, String) {
        (format!("node{e}+"), format!("node{e}-"))
    }
}

/// Removes node `e`, attaching legs 𝔭₊ (first endpoint) and 𝔭₋ (second).
/// Hurwitz data and vertex genera are unchanged.
pub fn normalize(graph: &CoveringGraph, e: usize) -> Result<CoveringGraph, CoverError> {
    if e >= graph.edges.len() {
        return Err(CoverError::NoSuchNode(e));
    }
    let mut g = graph.clone();
    let [u, v] = g.edges.remove(e);
    let (plus, minus) = CoveringGraph::node_leg_names(e);
    g.legs.push(GraphLeg { vertex: u, label: plus, at: None });
    g.legs.push(GraphLeg { vertex: v, label: minus, at: None });
    Ok(g)
}

/// Glues two legs into a node inserted at position `e`; inverse of
/// `normalize`.
pub fn glue(graph: &CoveringGraph, plus: &str, minus: &str, e: usize) -> Result<CoveringGraph, CoverError> {
    let mut g = graph.clone();
    let ip = g.legs.iter().position(|l| l.label == plus).ok_or_else(|| CoverError::NoSuchLeg(plus.into()))?;
    let u = g.legs.remove(ip).vertex;
    let im = g.legs.iter().position(|l| l.label == minus).ok_or_else(|| CoverError::NoSuchLeg(minus.into()))?;
    let v = g.legs.remove(im).vertex;
    if e > g.edges.len() {
        return Err(CoverError::NoSuchNode(e));
    }
    g.edges.insert(e, [u, v]);
    Ok(g)
}

/// Kummer cover y^p = κ Π_b (x − b)^{m_b} of the affine line, with the
/// generator of Γ acting by y ↦ ζy. A branch point b with character
/// exponent n (the action on the tangent space upstairs) has m_b = n⁻¹ mod p.
/// The point at infinity is branched when Σ m_b ≢ 0 mod p.
#[derive(Clone, Debug, PartialEq)]
pub struct KummerModel {
    pub p: u32,
    pub kappa: Q,
    pub branch: Vec<(Q, u32)>,
}

/// Local description of one eigensheaf at a branch point.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StalkShift {
    pub i: u32,
    /// Exponent s with (ℰ_i)_b = t^s 𝒪[[t^p]], s = i·n⁻¹ mod p.
    pub shift: u32,
    /// Shift of the product ℰ_i·ℰ_{p−i}, in powers of t.
    pub product_shift: u32,
}

/// Outcome of the invariant-derivation check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TangentTwistReport {
    /// Minimal vanishing order in x − b of invariant derivations, per branch point.
    pub branch_orders: Vec<u32>,
    /// Local parameter computation: every invariant s^j d/ds maps to a
    /// derivation divisible by (x − b).
    pub local_ok: bool,
    /// Dimension of invariant polynomial derivations of degree ≤ bound,
    /// compared with the dimension of Π(x−b)·k[x] in the same range.
    pub global_dim: usize,
    pub expected_dim: usize,
    /// At a non-branch point some invariant derivation does not vanish.
    pub etale_nonvanishing: bool,
}

impl TangentTwistReport {
    pub fn ok(&self) -> bool {
        self.local_ok
            && self.branch_orders.iter().all(|&o| o == 1)
            && self.global_dim == self.expected_dim
            && self.etale_nonvanishing
    }
}

/// Generalized binomial coefficient C(α, n).
pub fn binom_q(alpha: &Q, n: u32) -> Q {
    let mut c = Q::one();
    for k in 0..n {
        c = c * (alpha - qi(k as i64)) / qi(k as i64 + 1);
    }
    c
}

/// Exact rational p-th root, if it exists.
pub fn rational_root(x: &Q, p: u32) -> Option<Q> {
    if x.is_zero() {
        return Some(Q::zero());
    }
    let neg = x.is_negative();
    if neg && p.is_multiple_of(2) {
        return None;
    }
    let a = x.abs();
    let n = a.numer().nth_root(p);
    let d = a.denom().nth_root(p);
    let r = Q::new(n, d);
    let mut check = Q::one();
    for _ in 0..p {
        check *= &r;
    }
    (check == a).then(|| if neg { -r } else { r })
}

fn q_pow(x: &Q, e: i64) -> Q {
    let mut r = Q::one();
    for _ in 0..e.unsigned_abs() {
        r *= x;
    }
    if e < 0 {
        Q::one() / r
    } else {
        r
    }
}

impl KummerModel {
    pub fn new(p: u32, branch: Vec<(Q, u32)>) -> Result<Self, CoverError> {
        Self::with_kappa(p, Q::one(), branch)
    }

    pub fn with_kappa(p: u32, kappa: Q, branch: Vec<(Q, u32)>) -> Result<Self, CoverError> {
        if !is_prime(p) {
            return Err(CoverError::NotPrime(p));
        }
        for (_, n) in &branch {
            if *n == 0 || *n >= p {
                return Err(CoverError::Character(*n, p));
            }
        }
        Ok(KummerModel { p, kappa, branch })
    }

    /// The unramified (split) model y^p = 1: no branch points.
    pub fn unramified(p: u32) -> Result<Self, CoverError> {
        Self::new(p, Vec::new())
    }

    /// y^p = x^m: branched at 0 (exponent m) and at infinity.
    pub fn power(p: u32, m: u32) -> Result<Self, CoverError> {
        let n = inv_mod(m, p);
        Self::new(p, vec![(Q::zero(), n)])
    }

    pub fn multiplicity(&self, j: usize) -> u32 {
        inv_mod(self.branch[j].1, self.p)
    }

    /// m_∞ = −Σ m_b mod p (0 when infinity is unbranched).
    pub fn infinity_multiplicity(&self) -> u32 {
        let s: u32 = (0..self.branch.len()).map(|j| self.multiplicity(j)).sum();
        (self.p - s % self.p) % self.p
    }

    pub fn floor_exp(&self, i: u32, j: usize) -> u32 {
        i * self.multiplicity(j) / self.p
    }

    /// Order of growth μ_i of e_i at infinity: e_i ~ x^{μ_i}.
    pub fn order_at_infinity(&self, i: u32) -> Q {
        let sm: u32 = (0..self.branch.len()).map(|j| self.multiplicity(j)).sum();
        let fl: u32 = (0..self.branch.len()).map(|j| self.floor_exp(i, j)).sum();
        Q::new((i * sm).into(), self.p.into()) - qi(fl as i64)
    }

    pub fn is_branch_point(&self, x: &Q) -> bool {
        self.branch.iter().any(|(b, _)| b == x)
    }

    /// κ Π (x − b)^{m_b}.
    pub fn f_value(&self, x: &Q) -> Q {
        let mut r = self.kappa.clone();
        for j in 0..self.branch.len() {
            r *= q_pow(&(x - &self.branch[j].0), self.multiplicity(j) as i64);
        }
        r
    }

    /// A rational value c of y over x (c^p = f(x)), defining sheet 0.
    pub fn base_sheet(&self, x: &Q) -> Result<Q, CoverError> {
        if self.is_branch_point(x) {
            return Err(CoverError::BranchPoint(x.to_string()));
        }
        rational_root(&self.f_value(x), self.p).ok_or_else(|| CoverError::NoRationalSheet(x.to_string()))
    }

    /// y on sheet `sheet` over x: ζ^sheet · c.
    pub fn sheet_value(&self, x: &Q, sheet: u32) -> Result<CycNumber, CoverError> {
        let c = self.base_sheet(x)?;
        Ok(&zeta_pow(self.p, sheet as i64).expect("prime") * &CycNumber::from_rational(c))
    }

    /// Taylor coefficients of e_i(x = a + t) on the sheet with y(a) = y0,
    /// for t⁰…t^order, where e_i = y^i / Π (x − b)^{⌊i m_b/p⌋}.
    pub fn e_expansion(&self, i: u32, a: &Q, y0: &CycNumber, order: usize) -> Vec<CycNumber> {
        // e_i = y0^i Π (a − b)^{−⌊⌋} Π (1 + t/(a − b))^{i m_b/p − ⌊⌋}.
        let mut series = vec![Q::zero(); order + 1];
        series[0] = Q::one();
        let mut lead = Q::one();
        for j in 0..self.branch.len() {
            let ab = a - &self.branch[j].0;
            let fl = self.floor_exp(i, j);
            lead *= q_pow(&ab, -(fl as i64));
            let frac = Q::new(((i * self.multiplicity(j)) as i64).into(), (self.p as i64).into()) - qi(fl as i64);
            let factor: Vec<Q> = (0..=order).map(|n| binom_q(&frac, n as u32) * q_pow(&ab, -(n as i64))).collect();
            let mut next = vec![Q::zero(); order + 1];
            for (u, x) in series.iter().enumerate() {
                if x.is_zero() {
                    continue;
                }
                for (v, y) in factor.iter().enumerate().take(order + 1 - u) {
                    next[u + v] += x * y;
                }
            }
            series = next;
        }
        let yi = y0.pow(i as i64);
        series.into_iter().map(|c| yi.scale(&(c * &lead))).collect()
    }

    /// Eigensheaf stalks at branch point j.
    pub fn eigensheaf_stalks(&self, j: usize) -> Result<Vec<StalkShift>, CoverError> {
        let (_, n) = self.branch.get(j).ok_or_else(|| CoverError::NotBranch(j.to_string()))?;
        let m = inv_mod(*n, self.p);
        let p = self.p;
        Ok((0..p)
            .map(|i| {
                let shift = i * m % p;
                let other = (p - i) % p * m % p;
                // ℰ_i·ℰ_{p−i} = (y^p) / Π (x−b)^{⌊im/p⌋ + ⌊(p−i)m/p⌋}, whose
                // order at b is m − ⌊⌋ − ⌊⌋ in x − b, i.e. p times that in t.
                let prod = if i == 0 {
                    0
                } else {
                    p * (m - self.floor_exp(i, j) - self.floor_exp(p - i, j))
                };
                debug_assert!(i == 0 || shift + other == prod);
                StalkShift { i, shift, product_shift: prod }
            })
            .collect())
    }

    /// Γ-invariant derivations vanish along the branch locus.
    pub fn tangent_twist_check(&self, bound: usize) -> TangentTwistReport {
        let p = self.p as usize;
        let mut orders = Vec::new();
        let mut local_ok = true;
        for &(_, n) in &self.branch {
            // s ↦ ζ^n s; s^j d/ds is invariant iff n(j − 1) ≡ 0, i.e. j ≡ 1.
            let mut min_order = u32::MAX;
            for jj in 0..=(bound * p) {
                let invariant = (n as usize * (jj + p - 1)).is_multiple_of(p);
                if !invariant {
                    continue;
                }
                // x − b = s^p, so s^j d/ds = p s^{j+p−1} d/dx.
                let e = jj + p - 1;
                if !e.is_multiple_of(p) {
                    local_ok = false;
                    continue;
                }
                min_order = min_order.min((e / p) as u32);
            }
            orders.push(min_order);
        }
        // Polynomial derivations A(x) d/dx lifting to the cover: A f'/(p f)
        // must be regular, i.e. A(b) = 0 at every branch point.
        let r = self.branch.len();
        let expected_dim = (bound + 1).saturating_sub(r);
        let mut rows: Vec<Vec<Q>> = Vec::new();
        for (b, _) in &self.branch {
            rows.push((0..=bound).map(|k| q_pow(b, k as i64)).collect());
        }
        let global_dim = if rows.is_empty() {
            bound + 1
        } else {
            crate::linalg::Mat::from_rows(rows).nullspace().len()
        };
        // Away from the branch locus the constant derivation d/dx lifts
        // when there are no branch points; otherwise Π(x − b) d/dx does
        // not vanish at a generic point.
        let probe = (0..).map(|k| qi(k) + crate::cyclo::q(1, 3)).find(|x| !self.is_branch_point(x)).unwrap();
        let mut val = Q::one();
        for (b, _) in &self.branch {
            val *= &probe - b;
        }
        TangentTwistReport {
            branch_orders: orders,
            local_ok,
            global_dim,
            expected_dim,
            etale_nonvanishing: !val.is_zero(),
        }
    }
}

/// A nodal rational curve: the line with points `plus` and `minus`
/// identified. Functions are those of the line with f(plus) = f(minus).
#[derive(Clone, Debug, PartialEq)]
pub struct NodalModel {
    pub plus: Q,
    pub minus: Q,
}

impl NodalModel {
    /// Basis of functions regular away from `a` with pole order ≤ `bound`
    /// at `a`, satisfying the node condition. Each function is returned by
    /// its coefficients on (x − a)^{−j}, j = 0..=bound.
    pub fn function_basis(&self, a: &Q, bound: usize) -> Vec<Vec<Q>> {
        let delta: Vec<Q> = (0..=bound)
            .map(|j| q_pow(&(&self.plus - a), -(j as i64)) - q_pow(&(&self.minus - a), -(j as i64)))
            .collect();
        let rows = vec![delta];
        crate::linalg::Mat::from_rows(rows).nullspace()
    }
}

/// Generator X ⊗ e_i x^e / Π_j (x − a_j)^{k_j} of the twisted global algebra.
#[derive(Clone, Debug, PartialEq)]
pub struct GlobalGenerator {
    pub i: u32,
    pub x: Vec<CycNumber>,
    pub e: u32,
    pub poles: Vec<u32>,
}

/// Spanning set of 𝔥_𝒜 with pole orders bounded at the punctures.
#[derive(Clone, Debug)]
pub struct TwistedGlobalAlgebra {
    pub model: KummerModel,
    pub punctures: Vec<Q>,
    pub rho: GammaAction,
    pub bound: u32,
    pub gens: Vec<GlobalGenerator>,
}

fn pole_vectors(n: usize, bound: u32) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|v| {
                (0..=bound).map(move |k| {
                    let mut w = v.clone();
                    w.push(k);
                    w
                })
            })
            .collect();
    }
    out
}

/// Largest e ≥ 0 with e ≤ |k| − μ_i, if any.
pub fn max_x_power(model: &KummerModel, i: u32, total_pole: u32) -> Option<u32> {
    let slack = qi(total_pole as i64) - model.order_at_infinity(i);
    if slack.is_negative() {
        return None;
    }
    slack.floor().to_integer().to_u32()
}

/// Builds the spanning set X ⊗ e_i x^e/Π(x − a_j)^{k_j} with X in a basis
/// of 𝔤^{ζ^{−i}}, k_j ≤ bound, and e_i x^e/Π(x−a_j)^{k_j} regular at infinity.
pub fn global_algebra(
    alg: &LieAlgebra,
    model: &KummerModel,
    punctures: &[Q],
    rho: &GammaAction,
    bound: u32,
) -> Result<TwistedGlobalAlgebra, CoverError> {
    if rho.p != model.p {
        return Err(CoverError::Character(rho.p, model.p));
    }
    for a in punctures {
        if model.is_branch_point(a) {
            return Err(CoverError::BranchPoint(a.to_string()));
        }
    }
    let dec = gamma_eigenspaces(alg, rho)?;
    let mut gens = Vec::new();
    for i in 0..model.p {
        let space = dec.paired(i as usize);
        for k in pole_vectors(punctures.len(), bound) {
            let tot: u32 = k.iter().sum();
            let Some(emax) = max_x_power(model, i, tot) else { continue };
            for e in 0..=emax {
                for x in space {
                    gens.push(GlobalGenerator { i, x: x.clone(), e, poles: k.clone() });
                }
            }
        }
    }
    let alg_out = TwistedGlobalAlgebra { model: model.clone(), punctures: punctures.to_vec(), rho: rho.clone(), bound, gens };
    for g in &alg_out.gens {
        if !alg_out.is_fixed(g) {
            return Err(CoverError::NotInvariant);
        }
    }
    Ok(alg_out)
}

type Poly = Vec<Q>;

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut r = vec![Q::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            r[i + j] += x * y;
        }
    }
    r
}

fn poly_degree(a: &Poly) -> Option<usize> {
    a.iter().rposition(|x| !x.is_zero())
}

fn linear_power(root: &Q, e: u32) -> Poly {
    let mut r = vec![Q::one()];
    for _ in 0..e {
        r = poly_mul(&r, &vec![-root.clone(), Q::one()]);
    }
    r
}

impl TwistedGlobalAlgebra {
    /// The action γ: (X, x, y) ↦ (ρ(γ)X, x, ζy) fixes the generator.
    pub fn is_fixed(&self, g: &GlobalGenerator) -> bool {
        let z = zeta_pow(self.model.p, g.i as i64).expect("prime");
        let img: Vec<CycNumber> = self.rho.apply(&g.x).into_iter().map(|c| &c * &z).collect();
        img == g.x
    }

    /// Generator count per eigensheaf index i.
    pub fn counts(&self) -> BTreeMap<u32, usize> {
        let mut m = BTreeMap::new();
        for g in &self.gens {
            *m.entry(g.i).or_insert(0) += 1;
        }
        m
    }

    /// Function part of a product of generators: e_i e_{i'} = e_{i''} R(x),
    /// written as e_{i''} N(x)/Π(x − a_j)^{K_j}. Returns (i'', N, K).
    fn product_function(&self, g: &GlobalGenerator, h: &GlobalGenerator) -> (u32, Poly, Vec<u32>) {
        let p = self.model.p;
        let s = g.i + h.i;
        let i2 = s % p;
        let mut num = vec![Q::zero(); (g.e + h.e) as usize + 1];
        num[(g.e + h.e) as usize] = Q::one();
        for j in 0..self.model.branch.len() {
            let b = &self.model.branch[j].0;
            let mut ex = self.model.floor_exp(g.i, j) as i64 + self.model.floor_exp(h.i, j) as i64;
            ex = -ex + self.model.floor_exp(i2, j) as i64;
            if s >= p {
                ex += self.model.multiplicity(j) as i64;
            }
            debug_assert!(ex >= 0);
            num = poly_mul(&num, &linear_power(b, ex as u32));
        }
        if s >= p {
            num = num.into_iter().map(|c| c * &self.model.kappa).collect();
        }
        let k: Vec<u32> = g.poles.iter().zip(&h.poles).map(|(a, b)| a + b).collect();
        (i2, num, k)
    }

    /// Bracket closure within the doubled pole bound: for every pair of
    /// generators, [X, X'] lies in 𝔤^{ζ^{−i''}} and e_{i''}N/ΠK is regular at
    /// infinity, hence lies in the span of generators with bound 2·bound.
    pub fn closure_check(&self, alg: &LieAlgebra) -> bool {
        let dec = match gamma_eigenspaces(alg, &self.rho) {
            Ok(d) => d,
            Err(_) => return false,
        };
        let mut distinct: HashMap<(u32, u32, Vec<u32>), ()> = HashMap::new();
        for g in &self.gens {
            distinct.insert((g.i, g.e, g.poles.clone()), ());
        }
        // Lie part: brackets of eigenvectors land in the product eigenspace.
        for i in 0..self.model.p {
            for j in 0..self.model.p {
                let target = (i + j) % self.model.p;
                for x in dec.paired(i as usize) {
                    for y in dec.paired(j as usize) {
                        let z = alg.bracket_vec(x, y);
                        let img = self.rho.apply(&z);
                        let zt = zeta_pow(self.model.p, target as i64).expect("prime");
                        let scaled: Vec<CycNumber> = img.iter().map(|c| c * &zt).collect();
                        if scaled != z {
                            return false;
                        }
                    }
                }
            }
        }
        // Function part: degree condition at infinity.
        let keys: Vec<_> = distinct.into_keys().collect();
        for a in &keys {
            for b in &keys {
                let ga = GlobalGenerator { i: a.0, x: Vec::new(), e: a.1, poles: a.2.clone() };
                let gb = GlobalGenerator { i: b.0, x: Vec::new(), e: b.1, poles: b.2.clone() };
                let (i2, num, k) = self.product_function(&ga, &gb);
                let Some(deg) = poly_degree(&num) else { continue };
                let tot: u32 = k.iter().sum();
                let growth = qi(deg as i64) - qi(tot as i64) + self.model.order_at_infinity(i2);
                if growth.is_positive() {
                    return false;
                }
                if k.iter().any(|&kk| kk > 2 * self.bound) {
                    return false;
                }
            }
        }
        true
    }

    /// Laurent coefficients at puncture `j`, on sheet `sheet`, of the
    /// function part of a generator, for exponents −k_j..=max_exp.
    pub fn expansion(&self, g: &GlobalGenerator, j: usize, sheet: u32, max_exp: i64) -> Result<Vec<(i64, CycNumber)>, CoverError> {
        let a = &self.punctures[j];
        let y0 = self.model.sheet_value(a, sheet)?;
        Ok(function_expansion(&self.model, &self.punctures, g.i, g.e, &g.poles, j, &y0, max_exp))
    }
}

/// Laurent coefficients in t = x − a_j of e_i x^e / Π_l (x − a_l)^{k_l},
/// with y(a_j) = y0, for exponents −k_j..=max_exp.
pub fn function_expansion(
    model: &KummerModel,
    punctures: &[Q],
    i: u32,
    e: u32,
    poles: &[u32],
    j: usize,
    y0: &CycNumber,
    max_exp: i64,
) -> Vec<(i64, CycNumber)> {
    let a = &punctures[j];
    let lo = -(poles[j] as i64);
    if max_exp < lo {
        return Vec::new();
    }
    let order = (max_exp - lo) as usize;
    // Regular factor: x^e Π_{l≠j}(x − a_l)^{−k_l} as a series in t.
    let mut reg = vec![Q::zero(); order + 1];
    reg[0] = Q::one();
    let mult = |s: &mut Vec<Q>, f: &[Q]| {
        let mut r = vec![Q::zero(); order + 1];
        for (u, x) in s.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (v, y) in f.iter().enumerate().take(order + 1 - u) {
                r[u + v] += x * y;
            }
        }
        *s = r;
    };
    // x = a + t.
    for _ in 0..e {
        let f = vec![a.clone(), Q::one()];
        mult(&mut reg, &f);
    }
    for (l, al) in punctures.iter().enumerate() {
        if l == j || poles[l] == 0 {
            continue;
        }
        // (a − a_l + t)^{−k} = (a − a_l)^{−k} Σ C(−k, n) (t/(a − a_l))^n.
        let d = a - al;
        let k = poles[l] as i64;
        let f: Vec<Q> = (0..=order)
            .map(|n| binom_q(&qi(-k), n as u32) * q_pow(&d, -k - n as i64))
            .collect();
        mult(&mut reg, &f);
    }
    let ei = model.e_expansion(i, a, y0, order);
    let mut out = Vec::new();
    for n in 0..=order {
        let mut c = CycNumber::zero();
        for u in 0..=n {
            if reg[u].is_zero() || ei[n - u].is_zero() {
                continue;
            }
            c = &c + &ei[n - u].scale(&reg[u]);
        }
        if !c.is_zero() {
            out.push((lo + n as i64, c));
        }
    }
    out
}

/// k[t₊, t₋, τ]/(t₊t₋ − τ, τ^{n+1}) with monomial basis t₊^i t₋^j,
/// min(i, j) ≤ n.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmoothingAlgebra {
    pub n: u32,
}

/// Pair of Laurent monomials (t₊^a τ^b, t₋^c τ^d) in ℒ_N[τ]/τ^{n+1}.
pub type PairMonomial = ((i64, u32), (i64, u32));

pub fn smoothing_algebra(n: u32) -> SmoothingAlgebra {
    SmoothingAlgebra { n }
}

impl SmoothingAlgebra {
    /// Basis monomials (i, j) with i + j ≤ max_total.
    pub fn basis(&self, max_total: u32) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for s in 0..=max_total {
            for i in 0..=s {
                let j = s - i;
                if i.min(j) <= self.n {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Product of basis monomials; `None` when it vanishes.
    pub fn mul(&self, a: (u32, u32), b: (u32, u32)) -> Option<(u32, u32)> {
        let m = (a.0 + b.0, a.1 + b.1);
        (m.0.min(m.1) <= self.n).then_some(m)
    }

    /// α(t₊^i t₋^j) = (t₊^{i−j} τ^j, t₋^{j−i} τ^i), zero past τ^n.
    pub fn alpha(&self, m: (u32, u32)) -> Option<PairMonomial> {
        let (i, j) = (m.0 as i64, m.1 as i64);
        if m.0.min(m.1) > self.n {
            return None;
        }
        let plus = if m.1 <= self.n { (i - j, m.1) } else { (0, u32::MAX) };
        let minus = if m.0 <= self.n { (j - i, m.0) } else { (0, u32::MAX) };
        Some((plus, minus))
    }

    fn pair_mul(&self, a: PairMonomial, b: PairMonomial) -> PairMonomial {
        let side = |x: (i64, u32), y: (i64, u32)| {
            if x.1 == u32::MAX || y.1 == u32::MAX || x.1 + y.1 > self.n {
                (0, u32::MAX)
            } else {
                (x.0 + y.0, x.1 + y.1)
            }
        };
        (side(a.0, b.0), side(a.1, b.1))
    }

    /// α is multiplicative on all basis pairs of total degree ≤ max_total.
    pub fn check_ring_map(&self, max_total: u32) -> bool {
        let zero: PairMonomial = ((0, u32::MAX), (0, u32::MAX));
        let basis = self.basis(max_total);
        for &a in &basis {
            for &b in &basis {
                let lhs = self.mul(a, b).and_then(|m| self.alpha(m)).unwrap_or(zero);
                let rhs = match (self.alpha(a), self.alpha(b)) {
                    (Some(x), Some(y)) => self.pair_mul(x, y),
                    _ => zero,
                };
                if lhs != rhs {
                    return false;
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclo::q;
    use crate::liealg::{build_simple, CartanType};

    fn graph(json: &str) -> CoveringGraph {
        CoveringGraph::from_json(json).unwrap()
    }

    #[test]
    fn validate_examples() {
        let ok = graph(r#"{"p":2,"vertices":[{"genus":0}],"edges":[],"legs":[{"vertex":0,"label":"a"}],"branch":[{"vertex":0,"char":1},{"vertex":0,"char":1}]}"#);
        assert!(ok.validate().is_empty(), "{:?}", ok.validate());
        let on_node = graph(r#"{"p":2,"vertices":[{"genus":0}],"edges":[[0,0]],"legs":[{"vertex":0,"label":"a"}],"branch":[{"vertex":0,"char":1,"edge":0},{"vertex":0,"char":1}]}"#);
        assert!(on_node.validate().iter().any(|v| v.rule == RULE_NODE_BRANCH));
        let mut bad_xi = ok.clone();
        bad_xi.xi = Some(HurwitzData(vec![1, 1, 1]));
        assert!(bad_xi.validate().iter().any(|v| v.rule == RULE_HURWITZ));
    }

    #[test]
    fn stalk_shifts() {
        let m = KummerModel::new(2, vec![(Q::zero(), 1), (Q::one(), 1)]).unwrap();
        let s = m.eigensheaf_stalks(0).unwrap();
        assert_eq!((s[1].shift, s[1].product_shift), (1, 2));
        assert_eq!(s[0].shift, 0);
        let m3 = KummerModel::new(3, vec![(Q::zero(), 2), (Q::one(), 2), (qi(2), 2)]).unwrap();
        assert_eq!(m3.eigensheaf_stalks(0).unwrap()[1].shift, 2);
    }

    #[test]
    fn tangent_twist() {
        for p in [2, 3] {
            let m = KummerModel::power(p, 1).unwrap();
            let r = m.tangent_twist_check(4);
            assert!(r.ok(), "{r:?}");
        }
    }

    #[test]
    fn expansion_of_sqrt() {
        // y² = x near x = 4 on the sheet y = 2: y = 2 + t/4 − t²/64 + …
        let m = KummerModel::power(2, 1).unwrap();
        let y0 = m.sheet_value(&qi(4), 0).unwrap();
        let e = m.e_expansion(1, &qi(4), &y0, 2);
        assert_eq!(e, vec![CycNumber::from_int(2), CycNumber::from_rational(q(1, 4)), CycNumber::from_rational(q(-1, 64))]);
        assert_eq!(m.order_at_infinity(1), q(1, 2));
    }

    #[test]
    fn global_algebra_outer_counts() {
        let a2 = build_simple(CartanType::A(2)).unwrap();
        let rho = GammaAction::minus_transpose(&a2).unwrap();
        let m = KummerModel::power(2, 1).unwrap();
        let g = global_algebra(&a2, &m, &[qi(1)], &rho, 1).unwrap();
        // Monomials: i=0 gets (k,e) ∈ {(0,0),(1,0),(1,1)}, i=1 gets (1,0).
        assert_eq!(g.counts(), BTreeMap::from([(0, 9), (1, 5)]));
        assert!(g.closure_check(&a2));
    }

    #[test]
    fn smoothing_examples() {
        let s0 = smoothing_algebra(0);
        assert_eq!(s0.mul((1, 0), (0, 1)), None);
        let s = smoothing_algebra(2);
        assert_eq!(s.alpha((1, 1)), Some(((0, 1), (0, 1))));
        assert_eq!(s.alpha((2, 0)), Some(((2, 0), (-2, 2))));
        assert!(s.check_ring_map(6));
    }

    #[test]
    fn normalize_roundtrip() {
        let g = graph(r#"{"p":2,"vertices":[{"genus":0}],"edges":[[0,0]],"legs":[{"vertex":0,"label":"a"}]}"#);
        assert_eq!(g.arithmetic_genus(), 1);
        let n = normalize(&g, 0).unwrap();
        assert_eq!(n.arithmetic_genus(), 0);
        assert_eq!(n.legs.len(), 3);
        assert_eq!(glue(&n, "node0+", "node0-", 0).unwrap(), g);
        assert_eq!(normalize(&g, 3), Err(CoverError::NoSuchNode(3)));
    }
}
