//! Finite models of (Γ, G)-bundles over Γ-sets: local type, the invariant
//! pushforward to the group of invariant automorphisms, and the
//! contracted-product inverse. Everything is checked by exhaustive search.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::Serialize;
use thiserror::Error;

/// Largest group order accepted by the exhaustive searches.
pub const MAX_GROUP_ORDER: usize = 24;
/// Largest base set accepted by the exhaustive searches.
pub const MAX_BASE_SIZE: usize = 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TorsorError {
    #[error("permutation {0:?} is not a bijection of 0..{1}")]
    NotPermutation(Vec<u8>, usize),
    #[error("group of order {0} exceeds the bound {MAX_GROUP_ORDER}")]
    GroupTooLarge(usize),
    #[error("base set of size {0} exceeds the bound {MAX_BASE_SIZE}")]
    BaseTooLarge(usize),
    #[error("map is not a group automorphism of order dividing {0}")]
    BadAutomorphism(u32),
    #[error("cover is inconsistent: {0}")]
    BadCover(String),
    #[error("bundle is inconsistent: {0}")]
    BadBundle(String),
    #[error("bundles have different local type over base point {0}")]
    LocalTypeMismatch(usize),
}

/// A permutation of 0..n, acting on the left: (ab)(x) = a(b(x)).
pub type Perm = Vec<u8>;

fn compose(a: &[u8], b: &[u8]) -> Perm {
    b.iter().map(|&x| a[x as usize]).collect()
}

/// A finite permutation group with its multiplication table.
#[derive(Clone, Debug)]
pub struct FiniteGroup {
    pub elements: Vec<Perm>,
    table: Vec<Vec<usize>>,
    inverse: Vec<usize>,
    identity: usize,
    index: HashMap<Perm, usize>,
}

impl FiniteGroup {
    /// Closure of the generators inside Sym(degree).
    pub fn generated_by(degree: usize, gens: &[Perm]) -> Result<Self, TorsorError> {
        for g in gens {
            let set: BTreeSet<u8> = g.iter().copied().collect();
            if g.len() != degree || set.len() != degree || set.iter().any(|&x| x as usize >= degree) {
                return Err(TorsorError::NotPermutation(g.clone(), degree));
            }
        }
        let id: Perm = (0..degree as u8).collect();
        let mut elements = vec![id.clone()];
        let mut index: HashMap<Perm, usize> = HashMap::from([(id, 0)]);
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            for g in gens {
                let h = compose(g, &elements[i]);
                if !index.contains_key(&h) {
                    if elements.len() >= MAX_GROUP_ORDER {
                        return Err(TorsorError::GroupTooLarge(elements.len() + 1));
                    }
                    index.insert(h.clone(), elements.len());
                    queue.push_back(elements.len());
                    elements.push(h);
                }
            }
        }
        let n = elements.len();
        let table: Vec<Vec<usize>> =
            (0..n).map(|a| (0..n).map(|b| index[&compose(&elements[a], &elements[b])]).collect()).collect();
        let inverse = (0..n).map(|a| (0..n).find(|&b| table[a][b] == 0).expect("group inverse")).collect();
        Ok(FiniteGroup { elements, table, inverse, identity: 0, index })
    }

    pub fn symmetric(n: usize) -> Result<Self, TorsorError> {
        let mut gens = Vec::new();
        if n >= 2 {
            let mut t: Perm = (0..n as u8).collect();
            t.swap(0, 1);
            gens.push(t);
            gens.push((0..n as u8).map(|x| (x + 1) % n as u8).collect());
        }
        Self::generated_by(n, &gens)
    }

    pub fn cyclic(n: usize) -> Result<Self, TorsorError> {
        Self::generated_by(n, &[(0..n as u8).map(|x| (x + 1) % n as u8).collect()])
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a]
    }

    pub fn element(&self, p: &[u8]) -> Option<usize> {
        self.index.get(p).copied()
    }

    /// The element given in cycle notation, e.g. `[[0,1],[2,3]]`.
    pub fn from_cycles(&self, cycles: &[&[u8]]) -> Option<usize> {
        let n = self.elements[0].len();
        let mut p: Perm = (0..n as u8).collect();
        for c in cycles {
            for k in 0..c.len() {
                *p.get_mut(c[k] as usize)? = c[(k + 1) % c.len()];
            }
        }
        self.element(&p)
    }
}

/// A group automorphism given on element indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Automorphism(pub Vec<usize>);

impl Automorphism {
    pub fn conjugation(g: &FiniteGroup, c: usize) -> Self {
        Automorphism((0..g.order()).map(|x| g.mul(g.mul(c, x), g.inv(c))).collect())
    }

    pub fn inversion(g: &FiniteGroup) -> Self {
        Automorphism((0..g.order()).map(|x| g.inv(x)).collect())
    }

    pub fn apply(&self, x: usize) -> usize {
        self.0[x]
    }

    /// Homomorphism, bijection, and ρ^p = id, all checked on every element.
    pub fn validate(&self, g: &FiniteGroup, p: u32) -> Result<(), TorsorError> {
        let n = g.order();
        let hom = (0..n).all(|a| (0..n).all(|b| self.0[g.mul(a, b)] == g.mul(self.0[a], self.0[b])));
        let bij = self.0.iter().collect::<BTreeSet<_>>().len() == n;
        let order = (0..n).all(|x| (0..p).fold(x, |y, _| self.0[y]) == x);
        if hom && bij && order {
            Ok(())
        } else {
            Err(TorsorError::BadAutomorphism(p))
        }
    }
}

/// A Γ = Z/p set Ỹ over Y = Ỹ/Γ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteCover {
    pub p: u32,
    /// Action of the generator γ on Ỹ.
    pub gamma: Vec<usize>,
    /// Projection Ỹ → Y.
    pub proj: Vec<usize>,
    pub n_base: usize,
}

impl FiniteCover {
    /// One orbit per entry: `true` for a fixed (branch) point, `false`
    /// for a free orbit of size p.
    pub fn new(p: u32, branch: &[bool]) -> Result<Self, TorsorError> {
        if branch.len() > MAX_BASE_SIZE {
            return Err(TorsorError::BaseTooLarge(branch.len()));
        }
        let mut gamma = Vec::new();
        let mut proj = Vec::new();
        for (y, &b) in branch.iter().enumerate() {
            let start = gamma.len();
            let size = if b { 1 } else { p as usize };
            for k in 0..size {
                gamma.push(start + (k + 1) % size);
                proj.push(y);
            }
        }
        let c = FiniteCover { p, gamma, proj, n_base: branch.len() };
        c.validate()?;
        Ok(c)
    }

    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    pub fn fiber(&self, y: usize) -> Vec<usize> {
        (0..self.len()).filter(|&x| self.proj[x] == y).collect()
    }

    pub fn is_branch(&self, y: usize) -> bool {
        self.fiber(y).len() < self.p as usize
    }

    /// γ^p = id, γ preserves fibers, each fiber is one orbit which is free
    /// unless it is a single fixed point.
    pub fn validate(&self) -> Result<(), TorsorError> {
        let n = self.len();
        if self.proj.len() != n || self.gamma.iter().any(|&x| x >= n) {
            return Err(TorsorError::BadCover("maps have inconsistent sizes".into()));
        }
        for x in 0..n {
            if self.proj[self.gamma[x]] != self.proj[x] {
                return Err(TorsorError::BadCover(format!("γ moves {x} out of its fiber")));
            }
            if (0..self.p).fold(x, |y, _| self.gamma[y]) != x {
                return Err(TorsorError::BadCover("γ^p is not the identity".into()));
            }
        }
        for y in 0..self.n_base {
            let f = self.fiber(y);
            let orbit: BTreeSet<usize> = (0..self.p).scan(f[0], |s, _| {
                let v = *s;
                *s = self.gamma[*s];
                Some(v)
            }).collect();
            if orbit.len() != f.len() || (f.len() != 1 && f.len() != self.p as usize) {
                return Err(TorsorError::BadCover(format!("fiber over {y} is not a single orbit")));
            }
        }
        Ok(())
    }
}

/// The finite data: cover, structure group and the action ρ of γ on G.
#[derive(Clone, Debug)]
pub struct Setting {
    pub cover: FiniteCover,
    pub group: FiniteGroup,
    pub rho: Automorphism,
}

impl Setting {
    pub fn new(cover: FiniteCover, group: FiniteGroup, rho: Automorphism) -> Result<Self, TorsorError> {
        cover.validate()?;
        rho.validate(&group, cover.p)?;
        Ok(Setting { cover, group, rho })
    }

    fn point(&self, y: usize, g: usize) -> usize {
        y * self.group.order() + g
    }

    fn split(&self, pt: usize) -> (usize, usize) {
        (pt / self.group.order(), pt % self.group.order())
    }
}

/// A (Γ, G)-bundle on Ỹ × G: right G-action by multiplication and
/// γ(ỹ, g) = (γỹ, φ(ỹ) ρ(g)), stored as an explicit table on points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GammaGBundle {
    pub phi: Vec<usize>,
    pub gamma: Vec<usize>,
    gamma_inv: Vec<usize>,
}

impl GammaGBundle {
    pub fn new(s: &Setting, phi: Vec<usize>) -> Result<Self, TorsorError> {
        if phi.len() != s.cover.len() || phi.iter().any(|&g| g >= s.group.order()) {
            return Err(TorsorError::BadBundle("cocycle has the wrong shape".into()));
        }
        let n = s.group.order();
        let mut gamma = vec![0; s.cover.len() * n];
        for y in 0..s.cover.len() {
            for g in 0..n {
                gamma[s.point(y, g)] = s.point(s.cover.gamma[y], s.group.mul(phi[y], s.rho.apply(g)));
            }
        }
        let mut gamma_inv = vec![usize::MAX; gamma.len()];
        for (i, &j) in gamma.iter().enumerate() {
            if gamma_inv[j] != usize::MAX {
                return Err(TorsorError::BadBundle("γ is not a bijection".into()));
            }
            gamma_inv[j] = i;
        }
        let b = GammaGBundle { phi, gamma, gamma_inv };
        b.validate(s)?;
        Ok(b)
    }

    /// The trivial bundle φ ≡ e.
    pub fn trivial(s: &Setting) -> Self {
        Self::new(s, vec![s.group.identity(); s.cover.len()]).expect("trivial cocycle")
    }

    /// γ(p·g) = γ(p)·ρ(g) and γ^p = id on every point.
    pub fn validate(&self, s: &Setting) -> Result<(), TorsorError> {
        let n = s.group.order();
        for pt in 0..self.gamma.len() {
            let (y, h) = s.split(pt);
            for g in 0..n {
                let lhs = self.gamma[s.point(y, s.group.mul(h, g))];
                let (yy, hh) = s.split(self.gamma[pt]);
                if lhs != s.point(yy, s.group.mul(hh, s.rho.apply(g))) {
                    return Err(TorsorError::BadBundle("γ is not ρ-semilinear".into()));
                }
            }
            if (0..s.cover.p).fold(pt, |q, _| self.gamma[q]) != pt {
                return Err(TorsorError::BadBundle("γ^p is not the identity".into()));
            }
        }
        Ok(())
    }

    /// All bundles on Ỹ × G, one per admissible cocycle.
    pub fn enumerate(s: &Setting) -> Vec<GammaGBundle> {
        let n = s.group.order();
        let m = s.cover.len();
        let mut out = Vec::new();
        for idx in 0..n.pow(m as u32) {
            let phi: Vec<usize> = (0..m).map(|k| (idx / n.pow(k as u32)) % n).collect();
            if let Ok(b) = Self::new(s, phi) {
                out.push(b);
            }
        }
        out
    }
}

/// All tuples in G^k, in mixed-radix order.
fn tuples(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..n.pow(k as u32)).map(move |idx| (0..k).map(|j| (idx / n.pow(j as u32)) % n).collect())
}

/// Does the fiberwise G-map (ỹ, g) ↦ (ỹ, a_ỹ g) commute with γ on every
/// point over y?
fn is_equivariant(s: &Setting, p1: &GammaGBundle, p2: &GammaGBundle, fiber: &[usize], a: &[usize]) -> bool {
    let pos = |x: usize| fiber.iter().position(|&f| f == x).expect("fiber point");
    let f = |pt: usize| {
        let (y, g) = s.split(pt);
        s.point(y, s.group.mul(a[pos(y)], g))
    };
    fiber.iter().all(|&y| (0..s.group.order()).all(|g| f(p1.gamma[s.point(y, g)]) == p2.gamma[f(s.point(y, g))]))
}

/// True iff a Γ-equivariant G-isomorphism P1 → P2 exists over π⁻¹(y).
pub fn local_type_equal(s: &Setting, p1: &GammaGBundle, p2: &GammaGBundle, y: usize) -> bool {
    let fiber = s.cover.fiber(y);
    tuples(s.group.order(), fiber.len()).any(|a| is_equivariant(s, p1, p2, &fiber, &a))
}

/// The induced γ-action on fiberwise G-isomorphisms: γ·f = γ₂ ∘ f ∘ γ₁⁻¹.
fn gamma_on_iso(s: &Setting, p1: &GammaGBundle, p2: &GammaGBundle, fiber: &[usize], a: &[usize]) -> Vec<usize> {
    fiber
        .iter()
        .map(|&y| {
            let (y0, g0) = s.split(p1.gamma_inv[s.point(y, s.group.identity())]);
            let k = fiber.iter().position(|&f| f == y0).expect("fiber point");
            let img = p2.gamma[s.point(y0, s.group.mul(a[k], g0))];
            let (y1, b) = s.split(img);
            debug_assert_eq!(y1, y);
            b
        })
        .collect()
}

/// Fiber over one base point of the invariant pushforward.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PushforwardFiber {
    pub base: usize,
    /// Γ-invariant isomorphisms P_ref → P' over the fiber (as tuples a_ỹ).
    pub isos: Vec<Vec<usize>>,
    /// The fiber of H_P: Γ-invariant automorphisms of P_ref.
    pub group: Vec<Vec<usize>>,
    pub simply_transitive: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Pushforward {
    pub fibers: Vec<PushforwardFiber>,
    pub torsor: bool,
}

/// (π_* Iso(P_ref, P'))^Γ with its right action of H_P = (π_* Aut P_ref)^Γ.
pub fn invariant_pushforward(s: &Setting, p_ref: &GammaGBundle, p: &GammaGBundle) -> Pushforward {
    let mut fibers = Vec::new();
    for y in 0..s.cover.n_base {
        let fiber = s.cover.fiber(y);
        let all: Vec<Vec<usize>> = tuples(s.group.order(), fiber.len()).collect();
        let isos: Vec<Vec<usize>> = all.iter().filter(|a| gamma_on_iso(s, p_ref, p, &fiber, a) == **a).cloned().collect();
        let group: Vec<Vec<usize>> =
            all.iter().filter(|a| gamma_on_iso(s, p_ref, p_ref, &fiber, a) == **a).cloned().collect();
        let simply_transitive = match isos.first() {
            None => false,
            Some(a0) => {
                let orbit: BTreeSet<Vec<usize>> =
                    group.iter().map(|h| a0.iter().zip(h).map(|(&x, &y)| s.group.mul(x, y)).collect()).collect();
                let iso_set: BTreeSet<Vec<usize>> = isos.iter().cloned().collect();
                orbit.len() == group.len() && orbit == iso_set
            }
        };
        fibers.push(PushforwardFiber { base: y, isos, group, simply_transitive });
    }
    let torsor = fibers.iter().all(|f| f.simply_transitive);
    Pushforward { fibers, torsor }
}

/// The contracted product T ×^H P_ref over one base point, as classes of
/// pairs (t, point) under (t, p) ~ (t h, h⁻¹ p).
struct Contracted {
    /// Class id of each pair (t index, point index in the fiber block).
    class: HashMap<(usize, usize), usize>,
    /// One representative pair per class.
    rep: Vec<(usize, usize)>,
    n_classes: usize,
}

fn contracted(s: &Setting, torsor: &[Vec<usize>], group: &[Vec<usize>], fiber: &[usize]) -> Contracted {
    let n = s.group.order();
    let t_index: HashMap<&Vec<usize>, usize> = torsor.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let mut class = HashMap::new();
    let mut rep = Vec::new();
    let mut n_classes = 0;
    for ti in 0..torsor.len() {
        for (k, &y) in fiber.iter().enumerate() {
            for g in 0..n {
                let pt = s.point(y, g);
                if class.contains_key(&(ti, pt)) {
                    continue;
                }
                for h in group {
                    let th: Vec<usize> = torsor[ti].iter().zip(h).map(|(&a, &b)| s.group.mul(a, b)).collect();
                    let hp = s.point(y, s.group.mul(s.group.inv(h[k]), g));
                    class.insert((t_index[&th], hp), n_classes);
                }
                rep.push((ti, pt));
                n_classes += 1;
            }
        }
    }
    Contracted { class, rep, n_classes }
}

/// Pushforward followed by the contracted-product inverse returns P' up
/// to (Γ, G)-isomorphism, and the reverse composition returns the H_P-torsor
/// up to isomorphism. Errors when P' and P_ref differ in local type.
pub fn equivalence_roundtrip(s: &Setting, p_ref: &GammaGBundle, p: &GammaGBundle) -> Result<bool, TorsorError> {
    let push = invariant_pushforward(s, p_ref, p);
    for f in &push.fibers {
        if !f.simply_transitive {
            return Err(TorsorError::LocalTypeMismatch(f.base));
        }
    }
    let n = s.group.order();
    for f in &push.fibers {
        let fiber = s.cover.fiber(f.base);
        let pos = |x: usize| fiber.iter().position(|&v| v == x).expect("fiber point");
        let q = contracted(s, &f.isos, &f.group, &fiber);
        if q.n_classes != fiber.len() * n {
            return Ok(false);
        }
        // Forward: [t, p] ↦ t(p) is a well-defined (Γ, G)-isomorphism Q → P'.
        let mut eval: Vec<Option<usize>> = vec![None; q.n_classes];
        for (&(ti, pt), &c) in &q.class {
            let (y, g) = s.split(pt);
            let img = s.point(y, s.group.mul(f.isos[ti][pos(y)], g));
            match eval[c] {
                Some(v) if v != img => return Ok(false),
                _ => eval[c] = Some(img),
            }
        }
        let images: BTreeSet<usize> = eval.iter().flatten().copied().collect();
        if images.len() != q.n_classes {
            return Ok(false);
        }
        for (&(ti, pt), &c) in &q.class {
            let (y, g) = s.split(pt);
            for h in 0..n {
                let moved = q.class[&(ti, s.point(y, s.group.mul(g, h)))];
                let (yy, gg) = s.split(eval[c].expect("evaluated"));
                if eval[moved] != Some(s.point(yy, s.group.mul(gg, h))) {
                    return Ok(false);
                }
            }
            let gc = q.class[&(ti, p_ref.gamma[pt])];
            if eval[gc] != Some(p.gamma[eval[c].expect("evaluated")]) {
                return Ok(false);
            }
        }
        // Reverse, on the torsors T = Iso(P_ref, P')^Γ and T = H_P itself:
        // t ↦ (p ↦ [t, p]) identifies T with Iso(P_ref, T ×^H P_ref)^Γ.
        for torsor in [&f.isos, &f.group] {
            let q = contracted(s, torsor, &f.group, &fiber);
            let gamma_q = |c: usize| -> usize {
                let (ti, pt) = q.rep[c];
                q.class[&(ti, p_ref.gamma[pt])]
            };
            let gamma_table: Vec<usize> = (0..q.n_classes).map(gamma_q).collect();
            let over: Vec<usize> = {
                let mut v = vec![0; q.n_classes];
                for (&(_, pt), &c) in &q.class {
                    v[c] = s.split(pt).0;
                }
                v
            };
            let act = |c: usize, h: usize| -> usize {
                let (ti, pt) = q.rep[c];
                let (y, g) = s.split(pt);
                q.class[&(ti, s.point(y, s.group.mul(g, h)))]
            };
            // Γ-equivariant G-maps P_ref → Q over the fiber: choose images
            // of (ỹ, e) in Q over ỹ, then check γ-compatibility everywhere.
            let choices: Vec<Vec<usize>> =
                fiber.iter().map(|&y| (0..q.n_classes).filter(|&c| over[c] == y).collect()).collect();
            let mut count = 0;
            let sizes: Vec<usize> = choices.iter().map(Vec::len).collect();
            let total: usize = sizes.iter().product();
            for idx in 0..total {
                let mut r = idx;
                let pick: Vec<usize> = sizes
                    .iter()
                    .zip(&choices)
                    .map(|(&sz, ch)| {
                        let v = ch[r % sz];
                        r /= sz;
                        v
                    })
                    .collect();
                let map = |pt: usize| {
                    let (y, g) = s.split(pt);
                    act(pick[pos(y)], g)
                };
                let ok = fiber
                    .iter()
                    .all(|&y| (0..n).all(|g| map(p_ref.gamma[s.point(y, g)]) == gamma_table[map(s.point(y, g))]));
                if ok {
                    count += 1;
                }
            }
            if count != torsor.len() {
                return Ok(false);
            }
            for ti in 0..torsor.len() {
                let pick: Vec<usize> = fiber.iter().map(|&y| q.class[&(ti, s.point(y, s.group.identity()))]).collect();
                let ok = fiber.iter().all(|&y| {
                    (0..n).all(|g| {
                        let m = |pt: usize| {
                            let (yy, gg) = s.split(pt);
                            act(pick[pos(yy)], gg)
                        };
                        m(p_ref.gamma[s.point(y, g)]) == gamma_table[m(s.point(y, g))]
                    })
                });
                if !ok {
                    return Ok(false);
                }
            }
            let distinct: BTreeSet<Vec<usize>> = (0..torsor.len())
                .map(|ti| fiber.iter().map(|&y| q.class[&(ti, s.point(y, s.group.identity()))]).collect())
                .collect();
            if distinct.len() != torsor.len() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Reflexivity, symmetry and transitivity of local type over every base
/// point on the given bundles.
pub fn local_type_is_equivalence(s: &Setting, bundles: &[GammaGBundle]) -> bool {
    for y in 0..s.cover.n_base {
        let n = bundles.len();
        let rel: Vec<Vec<bool>> =
            (0..n).map(|i| (0..n).map(|j| local_type_equal(s, &bundles[i], &bundles[j], y)).collect()).collect();
        for i in 0..n {
            if !rel[i][i] {
                return false;
            }
            for j in 0..n {
                if rel[i][j] != rel[j][i] {
                    return false;
                }
                for k in 0..n {
                    if rel[i][j] && rel[j][k] && !rel[i][k] {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Γ = Z/2, G = S₄, ρ = conjugation by (12)(34) (0-based (01)(23)) over a
/// cover with one branch point and one free orbit; P_ref trivial and P'
/// the trivial bundle with γ multiplied on the left by (12).
pub fn s4_example() -> Result<(Setting, GammaGBundle, GammaGBundle, usize), TorsorError> {
    let g = FiniteGroup::symmetric(4)?;
    let c = g.from_cycles(&[&[0, 1], &[2, 3]]).expect("double transposition");
    let t = g.from_cycles(&[&[0, 1]]).expect("transposition");
    let s = Setting::new(FiniteCover::new(2, &[true, false])?, g, Automorphism::conjugation(&FiniteGroup::symmetric(4)?, c))?;
    let p_ref = GammaGBundle::trivial(&s);
    let p = GammaGBundle::new(&s, vec![t; s.cover.len()])?;
    Ok((s, p_ref, p, 0))
}

pub fn z3_inversion_setting() -> Result<Setting, TorsorError> {
    let g = FiniteGroup::cyclic(3)?;
    let rho = Automorphism::inversion(&g);
    Setting::new(FiniteCover::new(2, &[true, false, true])?, g, rho)
}

pub fn s3_setting() -> Result<Setting, TorsorError> {
    let g = FiniteGroup::symmetric(3)?;
    let t = g.from_cycles(&[&[0, 1]]).expect("transposition");
    let rho = Automorphism::conjugation(&g, t);
    Setting::new(FiniteCover::new(2, &[true, false])?, g, rho)
}

/// One named pass/fail line of the torsor suite.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SuiteLine {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn family_checks(name: &str, s: &Setting, roundtrip: bool) -> Vec<SuiteLine> {
    let bundles = GammaGBundle::enumerate(s);
    let p_ref = GammaGBundle::trivial(s);
    let mut agree = true;
    let mut same_type = 0;
    let mut rt_ok = true;
    for b in &bundles {
        let push = invariant_pushforward(s, &p_ref, b);
        let pointwise: Vec<bool> = (0..s.cover.n_base).map(|y| local_type_equal(s, &p_ref, b, y)).collect();
        let fib: Vec<bool> = push.fibers.iter().map(|f| f.simply_transitive).collect();
        agree &= fib == pointwise && push.torsor == pointwise.iter().all(|&x| x);
        if push.torsor {
            same_type += 1;
            if roundtrip {
                rt_ok &= equivalence_roundtrip(s, &p_ref, b) == Ok(true);
            }
        } else {
            rt_ok &= matches!(equivalence_roundtrip(s, &p_ref, b), Err(TorsorError::LocalTypeMismatch(_)));
        }
    }
    let sample: Vec<GammaGBundle> = bundles.iter().step_by((bundles.len() / 12).max(1)).cloned().collect();
    let mut out = vec![
        SuiteLine {
            name: format!("{name}: pushforward verdict matches local type"),
            pass: agree,
            detail: format!("{} bundles", bundles.len()),
        },
        SuiteLine {
            name: format!("{name}: local type is an equivalence relation"),
            pass: local_type_is_equivalence(s, &sample),
            detail: format!("{} bundles sampled evenly", sample.len()),
        },
    ];
    if roundtrip {
        out.push(SuiteLine {
            name: format!("{name}: roundtrip is the identity up to isomorphism"),
            pass: rt_ok,
            detail: format!("{same_type} bundles of reference local type"),
        });
    }
    out
}

/// The S₄ obstruction, pushforward ⇔ local type on the enumerated families
/// and the roundtrip on every bundle of the reference local type.
pub fn torsor_suite() -> Result<Vec<SuiteLine>, TorsorError> {
    let mut out = Vec::new();
    let (s, p_ref, p, y) = s4_example()?;
    let obstructed = !local_type_equal(&s, &p_ref, &p, y);
    let push = invariant_pushforward(&s, &p_ref, &p);
    let empty = push.fibers[y].isos.is_empty();
    let free_ok = (0..s.cover.n_base).filter(|&b| !s.cover.is_branch(b)).all(|b| local_type_equal(&s, &p_ref, &p, b));
    out.push(SuiteLine {
        name: "S4: local-type obstruction at the branch point".into(),
        pass: obstructed && empty && !push.torsor && free_ok,
        detail: format!("invariant isomorphisms at branch point: {}", push.fibers[y].isos.len()),
    });
    out.push(SuiteLine {
        name: "S4: reference bundle pushes forward to H_P".into(),
        pass: {
            let own = invariant_pushforward(&s, &p_ref, &p_ref);
            own.torsor && own.fibers.iter().all(|f| f.isos == f.group)
        },
        detail: String::new(),
    });
    let etale = Setting::new(FiniteCover::new(2, &[false, false])?, s.group.clone(), s.rho.clone())?;
    let et_bundles = GammaGBundle::enumerate(&etale);
    let et_ref = GammaGBundle::trivial(&etale);
    out.push(SuiteLine {
        name: "S4: every bundle on an etale cover pushes forward to a torsor".into(),
        pass: et_bundles.iter().step_by(97).all(|b| invariant_pushforward(&etale, &et_ref, b).torsor),
        detail: format!("{} bundles, every 97th checked", et_bundles.len()),
    });
    out.extend(family_checks("S4", &s, true));
    out.extend(family_checks("Z/3 inversion", &z3_inversion_setting()?, true));
    out.extend(family_checks("S3", &s3_setting()?, true));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn groups() {
        assert_eq!(FiniteGroup::symmetric(4).unwrap().order(), 24);
        assert_eq!(FiniteGroup::symmetric(3).unwrap().order(), 6);
        assert_eq!(FiniteGroup::cyclic(3).unwrap().order(), 3);
        assert!(FiniteGroup::symmetric(5).is_err());
    }

    #[test]
    fn s4_obstruction() {
        let (s, p_ref, p, y) = s4_example().unwrap();
        assert!(local_type_equal(&s, &p_ref, &p_ref, y));
        assert!(!local_type_equal(&s, &p_ref, &p, y));
        assert!(local_type_equal(&s, &p_ref, &p, 1));
        assert!(!invariant_pushforward(&s, &p_ref, &p).torsor);
    }

    #[test]
    fn small_roundtrips() {
        for s in [z3_inversion_setting().unwrap(), s3_setting().unwrap()] {
            let p_ref = GammaGBundle::trivial(&s);
            assert_eq!(equivalence_roundtrip(&s, &p_ref, &p_ref), Ok(true));
            for b in GammaGBundle::enumerate(&s) {
                let push = invariant_pushforward(&s, &p_ref, &b);
                if push.torsor {
                    assert_eq!(equivalence_roundtrip(&s, &p_ref, &b), Ok(true));
                }
            }
        }
    }
}
