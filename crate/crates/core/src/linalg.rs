//! Exact linear algebra over Q and Q(ζ_p): dense matrices, sparse column
//! matrices and an incremental echelon basis that remembers how each
//! dependent vector combines the accepted ones.

use std::fmt;

use num_traits::{One, Zero};

use crate::cyclo::{CycNumber, Q};

/// Exact fields used by the engine.
pub trait Field: Clone + PartialEq + fmt::Debug + Send + Sync + 'static {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Multiplicative inverse; callers guarantee `self != 0`.
    fn inv(&self) -> Self;
    fn from_q(q: &Q) -> Self;
    /// Converts a cyclotomic number, failing when it does not lie in `Self`.
    fn from_cyc(c: &CycNumber) -> Option<Self>;
    fn to_cyc(&self) -> CycNumber;

    fn from_i64(n: i64) -> Self {
        Self::from_q(&crate::cyclo::qi(n))
    }

    fn add_mul_assign(&mut self, a: &Self, b: &Self) {
        if a.is_zero() || b.is_zero() {
            return;
        }
        *self = self.add(&a.mul(b));
    }
}

impl Field for Q {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn inv(&self) -> Self {
        self.recip()
    }
    fn from_q(q: &Q) -> Self {
        q.clone()
    }
    fn from_cyc(c: &CycNumber) -> Option<Self> {
        c.to_rational()
    }
    fn to_cyc(&self) -> CycNumber {
        CycNumber::from_rational(self.clone())
    }
    fn add_mul_assign(&mut self, a: &Self, b: &Self) {
        if Zero::is_zero(a) || Zero::is_zero(b) {
            return;
        }
        *self += a * b;
    }
}

impl Field for CycNumber {
    fn zero() -> Self {
        CycNumber::zero()
    }
    fn one() -> Self {
        CycNumber::one()
    }
    fn is_zero(&self) -> bool {
        CycNumber::is_zero(self)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn inv(&self) -> Self {
        CycNumber::inv(self).expect("inverse of nonzero element")
    }
    fn from_q(q: &Q) -> Self {
        CycNumber::from_rational(q.clone())
    }
    fn from_cyc(c: &CycNumber) -> Option<Self> {
        Some(c.clone())
    }
    fn to_cyc(&self) -> CycNumber {
        self.clone()
    }
}

pub fn is_zero_vec<F: Field>(v: &[F]) -> bool {
    v.iter().all(Field::is_zero)
}

/// `acc += s * v` for dense vectors.
pub fn axpy<F: Field>(acc: &mut [F], s: &F, v: &[F]) {
    if s.is_zero() {
        return;
    }
    for (a, b) in acc.iter_mut().zip(v) {
        a.add_mul_assign(s, b);
    }
}

pub fn scale_vec<F: Field>(v: &[F], s: &F) -> Vec<F> {
    v.iter().map(|x| x.mul(s)).collect()
}

/// Dense row-major matrix.
#[derive(Clone, PartialEq, Debug)]
pub struct Mat<F> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<F>,
}

impl<F: Field> Mat<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![F::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = F::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<F>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged matrix rows");
            data.extend(row);
        }
        Mat { rows: r, cols: c, data }
    }

    pub fn from_cols(cols: &[Vec<F>], nrows: usize) -> Self {
        let mut m = Self::zeros(nrows, cols.len());
        for (j, col) in cols.iter().enumerate() {
            for (i, x) in col.iter().enumerate() {
                m.data[i * m.cols + j] = x.clone();
            }
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> &F {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: F) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<F> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j).clone();
            }
        }
        t
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.rows, "dimension mismatch in product");
        let mut r = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let b = o.get(k, j);
                    if !b.is_zero() {
                        r.data[i * o.cols + j].add_mul_assign(a, b);
                    }
                }
            }
        }
        r
    }

    pub fn apply(&self, v: &[F]) -> Vec<F> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = F::zero();
                for (a, b) in self.row(i).iter().zip(v) {
                    acc.add_mul_assign(a, b);
                }
                acc
            })
            .collect()
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&o.data).map(|(a, b)| a.add(b)).collect() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&o.data).map(|(a, b)| a.sub(b)).collect() }
    }

    pub fn scale(&self, s: &F) -> Self {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a.mul(s)).collect() }
    }

    pub fn is_zero(&self) -> bool {
        is_zero_vec(&self.data)
    }

    /// Reduced row echelon form and the pivot columns.
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(pr) = (r..m.rows).find(|&i| !m.get(i, c).is_zero()) else {
                continue;
            };
            if pr != r {
                for j in 0..m.cols {
                    m.data.swap(pr * m.cols + j, r * m.cols + j);
                }
            }
            let inv = m.get(r, c).inv();
            for j in 0..m.cols {
                let v = m.get(r, j).mul(&inv);
                m.set(r, j, v);
            }
            let pivot_row: Vec<F> = m.row(r).to_vec();
            for i in 0..m.rows {
                if i == r {
                    continue;
                }
                let f = m.get(i, c).clone();
                if f.is_zero() {
                    continue;
                }
                for j in 0..m.cols {
                    let v = m.get(i, j).sub(&f.mul(&pivot_row[j]));
                    m.set(i, j, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        let mut e = Echelon::new(self.cols, false);
        for i in 0..self.rows {
            e.insert(self.row(i).to_vec());
        }
        e.rank()
    }

    /// Basis of {x : self·x = 0}.
    pub fn nullspace(&self) -> Vec<Vec<F>> {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![F::zero(); self.cols];
                v[f] = F::one();
                for (i, &pc) in pivots.iter().enumerate() {
                    v[pc] = r.get(i, f).neg();
                }
                v
            })
            .collect()
    }

    /// Some solution of self·x = b, if one exists.
    pub fn solve(&self, b: &[F]) -> Option<Vec<F>> {
        assert_eq!(b.len(), self.rows);
        let mut aug = Self::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug.set(i, j, self.get(i, j).clone());
            }
            aug.set(i, self.cols, b[i].clone());
        }
        let (r, pivots) = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return None;
        }
        let mut x = vec![F::zero(); self.cols];
        for (i, &pc) in pivots.iter().enumerate() {
            x[pc] = r.get(i, self.cols).clone();
        }
        Some(x)
    }

    pub fn inverse(&self) -> Option<Self> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut aug = Self::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, self.get(i, j).clone());
            }
            aug.set(i, n + i, F::one());
        }
        let (r, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return None;
        }
        let mut inv = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                inv.set(i, j, r.get(i, n + j).clone());
            }
        }
        Some(inv)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::identity(self.rows);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn map<G: Field>(&self, f: impl Fn(&F) -> G) -> Mat<G> {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }
}

/// Accumulator for one sparse column; only touched rows hold a value.
struct SparseAcc<F> {
    vals: Vec<Option<F>>,
    touched: Vec<usize>,
}

impl<F: Field> SparseAcc<F> {
    fn new(n: usize) -> Self {
        SparseAcc { vals: vec![None; n], touched: Vec::new() }
    }

    fn add_column(&mut self, m: &SparseMat<F>, j: usize, s: &F) {
        if s.is_zero() {
            return;
        }
        for (i, x) in &m.cols[j] {
            match &mut self.vals[*i] {
                Some(v) => v.add_mul_assign(s, x),
                slot @ None => {
                    *slot = Some(s.mul(x));
                    self.touched.push(*i);
                }
            }
        }
    }

    fn finish(mut self) -> Vec<(usize, F)> {
        self.touched.sort_unstable();
        let mut out = Vec::with_capacity(self.touched.len());
        for i in self.touched {
            if let Some(v) = self.vals[i].take() {
                if !v.is_zero() {
                    out.push((i, v));
                }
            }
        }
        out
    }
}

/// Sparse matrix stored by columns: `cols[j]` lists the nonzero entries
/// of the image of the j-th basis vector.
#[derive(Clone, PartialEq, Debug)]
pub struct SparseMat<F> {
    pub nrows: usize,
    pub ncols: usize,
    pub cols: Vec<Vec<(usize, F)>>,
}

impl<F: Field> SparseMat<F> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseMat { nrows, ncols, cols: vec![Vec::new(); ncols] }
    }

    pub fn identity(n: usize) -> Self {
        SparseMat { nrows: n, ncols: n, cols: (0..n).map(|i| vec![(i, F::one())]).collect() }
    }

    pub fn from_dense_cols(nrows: usize, cols: Vec<Vec<F>>) -> Self {
        let ncols = cols.len();
        let cols = cols
            .into_iter()
            .map(|c| {
                assert_eq!(c.len(), nrows);
                c.into_iter().enumerate().filter(|(_, x)| !x.is_zero()).collect()
            })
            .collect();
        SparseMat { nrows, ncols, cols }
    }

    pub fn from_dense(m: &Mat<F>) -> Self {
        let cols = (0..m.cols).map(|j| m.col(j)).collect();
        Self::from_dense_cols(m.rows, cols)
    }

    pub fn to_dense(&self) -> Mat<F> {
        let mut m = Mat::zeros(self.nrows, self.ncols);
        for (j, col) in self.cols.iter().enumerate() {
            for (i, x) in col {
                m.set(*i, j, x.clone());
            }
        }
        m
    }

    pub fn is_zero(&self) -> bool {
        self.cols.iter().all(Vec::is_empty)
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    pub fn column_dense(&self, j: usize) -> Vec<F> {
        let mut v = vec![F::zero(); self.nrows];
        for (i, x) in &self.cols[j] {
            v[*i] = x.clone();
        }
        v
    }

    /// `acc += s · self · e_j`.
    pub fn add_column_to(&self, j: usize, s: &F, acc: &mut [F]) {
        if s.is_zero() {
            return;
        }
        for (i, x) in &self.cols[j] {
            acc[*i].add_mul_assign(s, x);
        }
    }

    pub fn apply(&self, v: &[F]) -> Vec<F> {
        assert_eq!(v.len(), self.ncols, "dimension mismatch in sparse apply");
        let mut out = vec![F::zero(); self.nrows];
        for (j, s) in v.iter().enumerate() {
            self.add_column_to(j, s, &mut out);
        }
        out
    }

    /// self ∘ other.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows, "dimension mismatch in composition");
        let cols = other
            .cols
            .iter()
            .map(|col| {
                let mut acc = SparseAcc::new(self.nrows);
                for (k, s) in col {
                    acc.add_column(self, *k, s);
                }
                acc.finish()
            })
            .collect();
        SparseMat { nrows: self.nrows, ncols: other.ncols, cols }
    }

    /// a·self + b·other.
    pub fn lin_comb(&self, a: &F, other: &Self, b: &F) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let cols = (0..self.ncols)
            .map(|j| {
                let mut acc = SparseAcc::new(self.nrows);
                acc.add_column(self, j, a);
                acc.add_column(other, j, b);
                acc.finish()
            })
            .collect();
        SparseMat { nrows: self.nrows, ncols: self.ncols, cols }
    }

    pub fn scale(&self, s: &F) -> Self {
        if s.is_zero() {
            return Self::zeros(self.nrows, self.ncols);
        }
        SparseMat {
            nrows: self.nrows,
            ncols: self.ncols,
            cols: self.cols.iter().map(|c| c.iter().map(|(i, x)| (*i, x.mul(s))).collect()).collect(),
        }
    }

    /// [self, other] = self∘other − other∘self for square matrices.
    pub fn commutator(&self, other: &Self) -> Self {
        self.compose(other).lin_comb(&F::one(), &other.compose(self), &F::one().neg())
    }

    pub fn map<G: Field>(&self, f: impl Fn(&F) -> G) -> SparseMat<G> {
        SparseMat {
            nrows: self.nrows,
            ncols: self.ncols,
            cols: self
                .cols
                .iter()
                .map(|c| c.iter().map(|(i, x)| (*i, f(x))).filter(|(_, x)| !x.is_zero()).collect())
                .collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        let mut cols: Vec<Vec<(usize, F)>> = vec![Vec::new(); self.nrows];
        for (j, col) in self.cols.iter().enumerate() {
            for (i, x) in col {
                cols[*i].push((j, x.clone()));
            }
        }
        SparseMat { nrows: self.ncols, ncols: self.nrows, cols }
    }
}

/// Result of inserting a vector into an [`Echelon`].
#[derive(Clone, Debug, PartialEq)]
pub enum Insert<F> {
    /// The vector was independent and became accepted vector number `usize`.
    New(usize),
    /// The vector equals the given combination of accepted vectors (empty
    /// when combinations are not tracked).
    Dependent(Vec<F>),
}

#[derive(Clone, Debug)]
struct EchelonRow<F> {
    pivot: usize,
    row: Vec<F>,
    comb: Vec<(usize, F)>,
}

/// Incrementally built row echelon basis of a subspace of F^dim.
#[derive(Clone, Debug)]
pub struct Echelon<F> {
    dim: usize,
    rows: Vec<EchelonRow<F>>,
    track: bool,
}

impl<F: Field> Echelon<F> {
    pub fn new(dim: usize, track: bool) -> Self {
        Echelon { dim, rows: Vec::new(), track }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn is_full(&self) -> bool {
        self.rows.len() == self.dim
    }

    /// Pivot position (first nonzero coordinate) of each stored row.
    pub fn pivots(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.pivot).collect()
    }

    /// Stored rows, each normalized to 1 at its pivot.
    pub fn rows(&self) -> Vec<Vec<F>> {
        self.rows.iter().map(|r| r.row.clone()).collect()
    }

    /// Reduces `v` against the basis; returns the remainder and the
    /// coefficients (one per stored row) that were subtracted.
    fn reduce_with(&self, v: &mut [F]) -> Vec<F> {
        let mut factors = Vec::with_capacity(self.rows.len());
        for r in &self.rows {
            let f = v[r.pivot].clone();
            if !f.is_zero() {
                let nf = f.neg();
                for (a, b) in v.iter_mut().zip(&r.row) {
                    a.add_mul_assign(&nf, b);
                }
            }
            factors.push(f);
        }
        factors
    }

    pub fn reduce(&self, v: &[F]) -> Vec<F> {
        let mut w = v.to_vec();
        self.reduce_with(&mut w);
        w
    }

    pub fn contains(&self, v: &[F]) -> bool {
        is_zero_vec(&self.reduce(v))
    }

    pub fn insert(&mut self, v: Vec<F>) -> Insert<F> {
        assert_eq!(v.len(), self.dim, "echelon dimension mismatch");
        let mut w = v;
        let factors = self.reduce_with(&mut w);
        let accepted = self.rows.len();
        let mut comb = vec![F::zero(); if self.track { accepted } else { 0 }];
        if self.track {
            for (f, r) in factors.iter().zip(&self.rows) {
                if f.is_zero() {
                    continue;
                }
                for (a, c) in &r.comb {
                    comb[*a].add_mul_assign(f, c);
                }
            }
        }
        match w.iter().position(|x| !x.is_zero()) {
            None => Insert::Dependent(comb),
            Some(p) => {
                let inv = w[p].inv();
                let row: Vec<F> = w.iter().map(|x| x.mul(&inv)).collect();
                let mut rc = Vec::new();
                if self.track {
                    // w = v − Σ f_k row_k, so row = inv·(v − Σ f_k Σ comb_k).
                    let ninv = inv.neg();
                    for (a, c) in comb.into_iter().enumerate() {
                        if !c.is_zero() {
                            rc.push((a, c.mul(&ninv)));
                        }
                    }
                    rc.push((accepted, inv));
                }
                self.rows.push(EchelonRow { pivot: p, row, comb: rc });
                Insert::New(accepted)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclo::{qi, zeta};

    fn qm(rows: &[&[i64]]) -> Mat<Q> {
        Mat::from_rows(rows.iter().map(|r| r.iter().map(|&x| qi(x)).collect()).collect())
    }

    #[test]
    fn rank_and_nullspace() {
        let m = qm(&[&[1, 2, 3], &[2, 4, 6], &[1, 0, 1]]);
        assert_eq!(m.rank(), 2);
        let ns = m.nullspace();
        assert_eq!(ns.len(), 1);
        assert!(is_zero_vec(&m.apply(&ns[0])));
    }

    #[test]
    fn solve_and_inverse() {
        let m = qm(&[&[2, 1], &[1, 1]]);
        let x = m.solve(&[qi(3), qi(2)]).unwrap();
        assert_eq!(x, vec![qi(1), qi(1)]);
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv), Mat::identity(2));
        assert!(qm(&[&[1, 1], &[1, 1]]).inverse().is_none());
        assert!(qm(&[&[1, 1], &[1, 1]]).solve(&[qi(1), qi(0)]).is_none());
    }

    #[test]
    fn echelon_tracks_combinations() {
        let mut e = Echelon::new(3, true);
        let a = vec![qi(1), qi(2), qi(0)];
        let b = vec![qi(0), qi(1), qi(1)];
        assert_eq!(e.insert(a.clone()), Insert::New(0));
        assert_eq!(e.insert(b.clone()), Insert::New(1));
        let c: Vec<Q> = a.iter().zip(&b).map(|(x, y)| x * qi(3) - y * qi(5)).collect();
        match e.insert(c) {
            Insert::Dependent(comb) => assert_eq!(comb, vec![qi(3), qi(-5)]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cyclotomic_nullspace() {
        let z = zeta(3).unwrap();
        let one = CycNumber::one();
        let m = Mat::from_rows(vec![vec![z.clone(), one.clone()], vec![z.pow(2), z.clone()]]);
        assert_eq!(m.rank(), 1);
        let ns = m.nullspace();
        assert!(is_zero_vec(&m.apply(&ns[0])));
    }

    #[test]
    fn sparse_compose_matches_dense() {
        let a = qm(&[&[1, 0, 2], &[0, 3, 0]]);
        let b = qm(&[&[1, 1], &[0, 2], &[4, 0]]);
        let sa = SparseMat::from_dense(&a);
        let sb = SparseMat::from_dense(&b);
        assert_eq!(sa.compose(&sb).to_dense(), a.mul(&b));
        assert_eq!(sa.transpose().to_dense(), a.transpose());
    }
}
