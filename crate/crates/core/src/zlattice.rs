//! Integer matrices, Smith and Hermite normal forms, and subgroup computations
//! inside a finite frame of cyclic coordinates.
//!
//! Frame vectors use `BigInt` so that normal-form intermediates never overflow.
//! Infinite cyclic coordinates carry modulus 0.

use std::collections::BTreeSet;
use std::fmt;
use std::hash::Hash;
use std::ops::{Index, IndexMut};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::group::{BlockGroup, Coeff, Coord, CyclicOrder, Element, Order};

/// Exact integer scalar usable in normal-form computations.
pub trait IntScalar:
    Integer + Signed + Clone + fmt::Debug + fmt::Display + FromPrimitive + ToPrimitive + Hash
{
}

impl<T> IntScalar for T where
    T: Integer + Signed + Clone + fmt::Debug + fmt::Display + FromPrimitive + ToPrimitive + Hash
{
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: IntScalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds from row vectors; `cols` fixes the width when `rows` is empty.
    pub fn from_rows(cols: usize, rows: Vec<Vec<T>>) -> Self {
        let r = rows.len();
        let mut data = Vec::with_capacity(r * cols);
        for row in rows {
            assert_eq!(row.len(), cols, "ragged matrix rows");
            data.extend(row);
        }
        Matrix {
            rows: r,
            cols,
            data,
        }
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        Self::from_rows(
            cols,
            rows.iter()
                .map(|r| {
                    r.iter()
                        .map(|&v| T::from_i64(v).expect("scalar conversion"))
                        .collect()
                })
                .collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let prod = a.clone() * other[(k, j)].clone();
                    out[(i, j)] = out[(i, j)].clone() + prod;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "dimension mismatch");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
            })
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self[(i, j)].is_zero()))
    }

    /// Exact determinant by fraction-free elimination.
    pub fn determinant(&self) -> T {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut sign = T::one();
        let mut prev = T::one();
        for k in 0..n {
            if a[(k, k)].is_zero() {
                match (k + 1..n).find(|&i| !a[(i, k)].is_zero()) {
                    Some(i) => {
                        a.swap_rows(i, k);
                        sign = -sign;
                    }
                    None => return T::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = a[(i, j)].clone() * a[(k, k)].clone()
                        - a[(i, k)].clone() * a[(k, j)].clone();
                    a[(i, j)] = v / prev.clone();
                }
            }
            prev = a[(k, k)].clone();
        }
        if n == 0 {
            T::one()
        } else {
            sign * a[(n - 1, n - 1)].clone()
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for i in 0..self.rows {
                self.data.swap(i * self.cols + a, i * self.cols + b);
            }
        }
    }

    /// row[dst] += c · row[src]
    fn add_row(&mut self, dst: usize, src: usize, c: &T) {
        for j in 0..self.cols {
            let v = self[(src, j)].clone() * c.clone();
            self[(dst, j)] = self[(dst, j)].clone() + v;
        }
    }

    /// col[dst] += c · col[src]
    fn add_col(&mut self, dst: usize, src: usize, c: &T) {
        for i in 0..self.rows {
            let v = self[(i, src)].clone() * c.clone();
            self[(i, dst)] = self[(i, dst)].clone() + v;
        }
    }

    fn negate_row(&mut self, i: usize) {
        for j in 0..self.cols {
            self[(i, j)] = -self[(i, j)].clone();
        }
    }

    fn negate_col(&mut self, j: usize) {
        for i in 0..self.rows {
            self[(i, j)] = -self[(i, j)].clone();
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: fmt::Display> fmt::Display for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.data[i * self.cols + j])?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

pub type IntMatrix = Matrix<BigInt>;
pub type SmallMatrix = Matrix<i64>;

/// `u · a · v = s` with `u`, `v` unimodular; the inverses are tracked alongside.
#[derive(Clone, Debug)]
pub struct Smith<T> {
    pub u: Matrix<T>,
    pub s: Matrix<T>,
    pub v: Matrix<T>,
    pub u_inv: Matrix<T>,
    pub v_inv: Matrix<T>,
}

impl<T: IntScalar> Smith<T> {
    pub fn diagonal(&self) -> Vec<T> {
        (0..self.s.rows.min(self.s.cols))
            .map(|i| self.s[(i, i)].clone())
            .collect()
    }

    pub fn rank(&self) -> usize {
        self.diagonal().iter().take_while(|d| !d.is_zero()).count()
    }
}

struct SmithWork<T> {
    s: Matrix<T>,
    u: Matrix<T>,
    u_inv: Matrix<T>,
    v: Matrix<T>,
    v_inv: Matrix<T>,
}

impl<T: IntScalar> SmithWork<T> {
    fn swap_rows(&mut self, a: usize, b: usize) {
        self.s.swap_rows(a, b);
        self.u.swap_rows(a, b);
        self.u_inv.swap_cols(a, b);
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        self.s.swap_cols(a, b);
        self.v.swap_cols(a, b);
        self.v_inv.swap_rows(a, b);
    }

    fn add_row(&mut self, dst: usize, src: usize, c: &T) {
        self.s.add_row(dst, src, c);
        self.u.add_row(dst, src, c);
        self.u_inv.add_col(src, dst, &-c.clone());
    }

    fn add_col(&mut self, dst: usize, src: usize, c: &T) {
        self.s.add_col(dst, src, c);
        self.v.add_col(dst, src, c);
        self.v_inv.add_row(src, dst, &-c.clone());
    }

    fn negate_row(&mut self, i: usize) {
        self.s.negate_row(i);
        self.u.negate_row(i);
        self.u_inv.negate_col(i);
    }
}

pub fn smith_normal_form<T: IntScalar>(a: &Matrix<T>) -> Smith<T> {
    let (m, n) = (a.rows, a.cols);
    let mut w = SmithWork {
        s: a.clone(),
        u: Matrix::identity(m),
        u_inv: Matrix::identity(m),
        v: Matrix::identity(n),
        v_inv: Matrix::identity(n),
    };
    for t in 0..m.min(n) {
        let mut best: Option<(usize, usize)> = None;
        for i in t..m {
            for j in t..n {
                let x = &w.s[(i, j)];
                if !x.is_zero() && best.is_none_or(|(bi, bj)| x.abs() < w.s[(bi, bj)].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        w.swap_rows(t, pi);
        w.swap_cols(t, pj);
        loop {
            for i in t + 1..m {
                if !w.s[(i, t)].is_zero() {
                    let q = w.s[(i, t)].div_floor(&w.s[(t, t)]);
                    w.add_row(i, t, &-q);
                }
            }
            for j in t + 1..n {
                if !w.s[(t, j)].is_zero() {
                    let q = w.s[(t, j)].div_floor(&w.s[(t, t)]);
                    w.add_col(j, t, &-q);
                }
            }
            let row_left = (t + 1..m).find(|&i| !w.s[(i, t)].is_zero());
            let col_left = (t + 1..n).find(|&j| !w.s[(t, j)].is_zero());
            if row_left.is_some() || col_left.is_some() {
                // a remainder smaller than the pivot survived: it becomes the new pivot
                let mut bi = None;
                let mut bj = None;
                let mut bv: Option<T> = None;
                for i in t + 1..m {
                    let x = w.s[(i, t)].abs();
                    if !x.is_zero() && bv.as_ref().is_none_or(|b| x < *b) {
                        bv = Some(x);
                        bi = Some(i);
                        bj = None;
                    }
                }
                for j in t + 1..n {
                    let x = w.s[(t, j)].abs();
                    if !x.is_zero() && bv.as_ref().is_none_or(|b| x < *b) {
                        bv = Some(x);
                        bj = Some(j);
                        bi = None;
                    }
                }
                if let Some(i) = bi {
                    w.swap_rows(t, i);
                } else if let Some(j) = bj {
                    w.swap_cols(t, j);
                }
                continue;
            }
            let p = w.s[(t, t)].clone();
            let bad = (t + 1..m).find(|&i| (t + 1..n).any(|j| !w.s[(i, j)].is_multiple_of(&p)));
            match bad {
                Some(i) => w.add_row(t, i, &T::one()),
                None => break,
            }
        }
        if w.s[(t, t)].is_negative() {
            w.negate_row(t);
        }
    }
    Smith {
        u: w.u,
        s: w.s,
        v: w.v,
        u_inv: w.u_inv,
        v_inv: w.v_inv,
    }
}

/// Row-style Hermite form: `u · a = h`, `h` in echelon form with positive
/// pivots and entries above each pivot reduced into `[0, pivot)`.
#[derive(Clone, Debug)]
pub struct Hermite<T> {
    pub u: Matrix<T>,
    pub h: Matrix<T>,
    /// (row, column) of each pivot.
    pub pivots: Vec<(usize, usize)>,
}

pub fn hermite_normal_form<T: IntScalar>(a: &Matrix<T>) -> Hermite<T> {
    let (m, n) = (a.rows, a.cols);
    let mut h = a.clone();
    let mut u = Matrix::<T>::identity(m);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n {
        if r == m {
            break;
        }
        loop {
            let best = (r..m)
                .filter(|&i| !h[(i, c)].is_zero())
                .min_by(|&x, &y| h[(x, c)].abs().cmp(&h[(y, c)].abs()));
            let Some(i) = best else { break };
            h.swap_rows(r, i);
            u.swap_rows(r, i);
            let mut clean = true;
            for i in r + 1..m {
                if !h[(i, c)].is_zero() {
                    let q = -h[(i, c)].div_floor(&h[(r, c)]);
                    h.add_row(i, r, &q);
                    u.add_row(i, r, &q);
                    clean &= h[(i, c)].is_zero();
                }
            }
            if clean {
                break;
            }
        }
        if h[(r, c)].is_zero() {
            continue;
        }
        if h[(r, c)].is_negative() {
            h.negate_row(r);
            u.negate_row(r);
        }
        for i in 0..r {
            let q = -h[(i, c)].div_floor(&h[(r, c)]);
            if !q.is_zero() {
                h.add_row(i, r, &q);
                u.add_row(i, r, &q);
            }
        }
        pivots.push((r, c));
        r += 1;
    }
    Hermite { u, h, pivots }
}

/// Generators of the integer kernel `{x : a·x = 0}`.
pub fn kernel<T: IntScalar>(a: &Matrix<T>) -> Vec<Vec<T>> {
    let snf = smith_normal_form(a);
    let r = snf.rank();
    (r..a.cols).map(|j| snf.v.column(j)).collect()
}

/// Generators of `{x ∈ ℤ^nvars : c·x ≡ 0 (mod modulus)}`.
pub fn congruence_kernel(c: &[Vec<BigInt>], modulus: &BigInt, nvars: usize) -> Vec<Vec<BigInt>> {
    if c.is_empty() {
        return (0..nvars)
            .map(|i| (0..nvars).map(|j| BigInt::from((i == j) as u8)).collect())
            .collect();
    }
    let k = c.len();
    let mut m = IntMatrix::zeros(k, nvars + k);
    for (i, row) in c.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            m[(i, j)] = x.clone();
        }
        m[(i, nvars + i)] = modulus.clone();
    }
    kernel(&m)
        .into_iter()
        .map(|v| v[..nvars].to_vec())
        .filter(|v| v.iter().any(|x| !x.is_zero()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("support mismatch: {0}")]
    SupportMismatch(String),
}

/// An ordered set of coordinates with their moduli (0 for ℤ).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    coords: Vec<Coord>,
    moduli: Vec<u64>,
}

impl Frame {
    pub fn new(
        g: &BlockGroup,
        coords: impl IntoIterator<Item = Coord>,
    ) -> Result<Frame, LatticeError> {
        let set: BTreeSet<Coord> = coords.into_iter().collect();
        let mut moduli = Vec::with_capacity(set.len());
        for c in &set {
            let m = match g.coord_order(*c) {
                Ok(CyclicOrder::Finite(n)) => n,
                Ok(CyclicOrder::Infinite) => 0,
                Ok(CyclicOrder::Prufer(_)) => {
                    return Err(LatticeError::SupportMismatch(format!(
                        "Prufer coordinate in block {} must be cleared first",
                        c.block
                    )))
                }
                Err(e) => return Err(LatticeError::SupportMismatch(e.to_string())),
            };
            moduli.push(m);
        }
        Ok(Frame {
            coords: set.into_iter().collect(),
            moduli,
        })
    }

    /// The frame covering the union of supports.
    pub fn spanning<'a>(
        g: &BlockGroup,
        elems: impl IntoIterator<Item = &'a Element>,
    ) -> Result<Frame, LatticeError> {
        Frame::new(
            g,
            elems
                .into_iter()
                .flat_map(|x| x.entries().iter().map(|(c, _)| *c)),
        )
    }

    /// All coordinates of the listed blocks.
    pub fn for_blocks(
        g: &BlockGroup,
        blocks: impl IntoIterator<Item = usize>,
    ) -> Result<Frame, LatticeError> {
        let mut coords = Vec::new();
        for j in blocks {
            let cs = g
                .block_coords(j)
                .map_err(|e| LatticeError::SupportMismatch(e.to_string()))?;
            coords.extend(cs.into_iter().map(|(c, _)| c));
        }
        Frame::new(g, coords)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Coord] {
        &self.coords
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    /// Number of elements of the frame group, `None` if it has a ℤ coordinate.
    pub fn size(&self) -> Option<u128> {
        self.moduli.iter().try_fold(1u128, |acc, &m| {
            if m == 0 {
                None
            } else {
                acc.checked_mul(m as u128)
            }
        })
    }

    pub fn vector(&self, x: &Element) -> Result<Vec<BigInt>, LatticeError> {
        let mut v = vec![BigInt::zero(); self.dim()];
        for (c, a) in x.entries() {
            let i = self.coords.binary_search(c).map_err(|_| {
                LatticeError::SupportMismatch(format!(
                    "coordinate ({}, {}) lies outside the frame",
                    c.block, c.slot
                ))
            })?;
            match a {
                Coeff::Int(a) => v[i] = BigInt::from(*a),
                Coeff::Frac(_) => {
                    return Err(LatticeError::SupportMismatch(
                        "rational coefficient in an integral frame".into(),
                    ))
                }
            }
        }
        Ok(v)
    }

    pub fn vectors(&self, xs: &[Element]) -> Result<Vec<Vec<BigInt>>, LatticeError> {
        xs.iter().map(|x| self.vector(x)).collect()
    }

    /// Reduces a frame vector into canonical range.
    pub fn reduce(&self, v: &mut [BigInt]) {
        for (x, &m) in v.iter_mut().zip(&self.moduli) {
            if m != 0 {
                *x = x.mod_floor(&BigInt::from(m));
            }
        }
    }

    pub fn element(&self, g: &BlockGroup, v: &[BigInt]) -> Element {
        let mut v = v.to_vec();
        self.reduce(&mut v);
        g.element(
            self.coords
                .iter()
                .zip(&v)
                .filter(|(_, x)| !x.is_zero())
                .map(|(c, x)| {
                    (
                        *c,
                        Coeff::Int(x.to_i64().expect("frame coordinate exceeds i64")),
                    )
                }),
        )
        .expect("frame coordinate valid for its group")
    }

    /// `Σ coeffs[i] · vecs[i]`, reduced.
    pub fn combine(&self, coeffs: &[BigInt], vecs: &[Vec<BigInt>]) -> Vec<BigInt> {
        let mut out = vec![BigInt::zero(); self.dim()];
        for (c, v) in coeffs.iter().zip(vecs) {
            if c.is_zero() {
                continue;
            }
            for (o, x) in out.iter_mut().zip(v) {
                *o += c * x;
            }
        }
        self.reduce(&mut out);
        out
    }

    fn is_zero_vec(&self, v: &[BigInt]) -> bool {
        v.iter().zip(&self.moduli).all(|(x, &m)| {
            if m == 0 {
                x.is_zero()
            } else {
                x.is_multiple_of(&BigInt::from(m))
            }
        })
    }

    /// Columns `gens` followed by the modulus columns of finite coordinates.
    fn system(&self, blocks: &[&[Vec<BigInt>]]) -> (IntMatrix, usize) {
        let ngens: usize = blocks.iter().map(|b| b.len()).sum();
        let finite: Vec<usize> = (0..self.dim()).filter(|&i| self.moduli[i] != 0).collect();
        let mut m = IntMatrix::zeros(self.dim(), ngens + finite.len());
        let mut col = 0;
        for b in blocks {
            for v in b.iter() {
                for i in 0..self.dim() {
                    m[(i, col)] = v[i].clone();
                }
                col += 1;
            }
        }
        for (k, &i) in finite.iter().enumerate() {
            m[(i, ngens + k)] = BigInt::from(self.moduli[i]);
        }
        (m, ngens)
    }

    /// Integer coefficients `c` with `Σ c_i gens_i = x`, if any.
    pub fn solve(&self, gens: &[Vec<BigInt>], x: &[BigInt]) -> Option<Vec<BigInt>> {
        if self.dim() == 0 {
            return Some(vec![BigInt::zero(); gens.len()]);
        }
        let (m, ngens) = self.system(&[gens]);
        let snf = smith_normal_form(&m);
        let ux = snf.u.mul_vec(x);
        let diag = snf.diagonal();
        let r = snf.rank();
        let mut z = vec![BigInt::zero(); m.cols()];
        for i in 0..self.dim() {
            if i < r {
                let (q, rem) = ux[i].div_mod_floor(&diag[i]);
                if !rem.is_zero() {
                    return None;
                }
                z[i] = q;
            } else if !ux[i].is_zero() {
                return None;
            }
        }
        let y = snf.v.mul_vec(&z);
        Some(y[..ngens].to_vec())
    }

    /// Coefficients of a generating set of all relations among `gens`.
    pub fn relations(&self, gens: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
        if self.dim() == 0 {
            return (0..gens.len())
                .map(|i| {
                    (0..gens.len())
                        .map(|j| BigInt::from((i == j) as u8))
                        .collect()
                })
                .collect();
        }
        let (m, ngens) = self.system(&[gens]);
        kernel(&m)
            .into_iter()
            .map(|v| v[..ngens].to_vec())
            .filter(|v| v.iter().any(|x| !x.is_zero()))
            .collect()
    }

    /// Generators of `⟨a⟩ ∩ ⟨b⟩` as reduced nonzero vectors.
    pub fn intersect(&self, a: &[Vec<BigInt>], b: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
        if a.is_empty() || b.is_empty() || self.dim() == 0 {
            return Vec::new();
        }
        let neg_b: Vec<Vec<BigInt>> = b.iter().map(|v| v.iter().map(|x| -x).collect()).collect();
        let (m, _) = self.system(&[a, &neg_b]);
        let mut out: BTreeSet<Vec<BigInt>> = BTreeSet::new();
        for k in kernel(&m) {
            let v = self.combine(&k[..a.len()], a);
            if !self.is_zero_vec(&v) {
                out.insert(v);
            }
        }
        out.into_iter().collect()
    }

    /// Cyclic decomposition of `⟨gens⟩`: generators with their orders (trivial factors dropped).
    pub fn cyclic_basis(&self, gens: &[Vec<BigInt>]) -> Vec<(Vec<BigInt>, Option<BigInt>)> {
        let k = gens.len();
        if k == 0 {
            return Vec::new();
        }
        let rels = self.relations(gens);
        let rm = IntMatrix::from_rows(k, rels);
        let snf = smith_normal_form(&rm);
        let diag = snf.diagonal();
        let mut out = Vec::new();
        for i in 0..k {
            let s = diag.get(i).cloned().unwrap_or_else(BigInt::zero);
            if s.is_one() {
                continue;
            }
            let coeffs: Vec<BigInt> = snf.v_inv.row(i).to_vec();
            let v = self.combine(&coeffs, gens);
            out.push((v, if s.is_zero() { None } else { Some(s) }));
        }
        out
    }
}

fn frame_for(
    g: &BlockGroup,
    groups: &[&[Element]],
    extra: &[&Element],
) -> Result<Frame, LatticeError> {
    Frame::spanning(
        g,
        groups
            .iter()
            .flat_map(|s| s.iter())
            .chain(extra.iter().copied()),
    )
}

fn gen_order_reduce(g: &BlockGroup, gen: &Element, c: BigInt) -> i64 {
    let c = match g.order_of(gen) {
        Order::Finite(n) => c.mod_floor(&BigInt::from(n)),
        Order::Infinite => c,
    };
    c.to_i64().expect("witness coefficient exceeds i64")
}

/// Decides `x ∈ ⟨gens⟩`; on success returns coefficients with `Σ c_i gens_i = x`.
pub fn membership(
    g: &BlockGroup,
    gens: &[Element],
    x: &Element,
) -> Result<Option<Vec<i64>>, LatticeError> {
    let frame = frame_for(g, &[gens], &[x])?;
    let vs = frame.vectors(gens)?;
    let target = frame.vector(x)?;
    Ok(frame.solve(&vs, &target).map(|c| {
        c.into_iter()
            .zip(gens)
            .map(|(c, gen)| gen_order_reduce(g, gen, c))
            .collect()
    }))
}

/// Generators of `⟨a⟩ ∩ ⟨b⟩` (empty list for the trivial subgroup).
pub fn intersection(
    g: &BlockGroup,
    a: &[Element],
    b: &[Element],
) -> Result<Vec<Element>, LatticeError> {
    let frame = frame_for(g, &[a, b], &[])?;
    let va = frame.vectors(a)?;
    let vb = frame.vectors(b)?;
    Ok(frame
        .intersect(&va, &vb)
        .iter()
        .map(|v| frame.element(g, v))
        .collect())
}

/// True iff `Σ a_i x_i = 0` forces every `a_i x_i = 0`.
pub fn is_independent(g: &BlockGroup, elems: &[Element]) -> Result<bool, LatticeError> {
    let frame = frame_for(g, &[elems], &[])?;
    let vs = frame.vectors(elems)?;
    for i in 0..vs.len() {
        let others: Vec<Vec<BigInt>> = vs
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, v)| v.clone())
            .collect();
        if !frame.intersect(&vs[i..=i], &others).is_empty() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Independent generators of `⟨gens⟩` with their orders.
pub fn subgroup_basis(
    g: &BlockGroup,
    gens: &[Element],
) -> Result<Vec<(Element, Order)>, LatticeError> {
    let frame = frame_for(g, &[gens], &[])?;
    let vs = frame.vectors(gens)?;
    Ok(frame
        .cyclic_basis(&vs)
        .into_iter()
        .map(|(v, o)| {
            let ord = match o {
                Some(n) => Order::Finite(n.to_u64().expect("order exceeds u64")),
                None => Order::Infinite,
            };
            (frame.element(g, &v), ord)
        })
        .collect())
}

pub fn subgroup_order(g: &BlockGroup, gens: &[Element]) -> Result<Order, LatticeError> {
    Ok(subgroup_basis(g, gens)?
        .into_iter()
        .fold(Order::Finite(1), |acc, (_, o)| match (acc, o) {
            (Order::Finite(a), Order::Finite(b)) => {
                Order::Finite(a.checked_mul(b).expect("subgroup order exceeds u64"))
            }
            _ => Order::Infinite,
        }))
}

/// `⟨b⟩ ⊆ ⟨a⟩`.
pub fn contains_all(g: &BlockGroup, a: &[Element], b: &[Element]) -> Result<bool, LatticeError> {
    let frame = frame_for(g, &[a, b], &[])?;
    let va = frame.vectors(a)?;
    for x in b {
        if frame.solve(&va, &frame.vector(x)?).is_none() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Mutual membership of two generating sets.
pub fn same_subgroup(g: &BlockGroup, a: &[Element], b: &[Element]) -> Result<bool, LatticeError> {
    Ok(contains_all(g, a, b)? && contains_all(g, b, a)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{Block, TailRule};

    fn finite_group(orders: &[u64]) -> BlockGroup {
        BlockGroup::new(
            orders.iter().map(|&n| Block::finite(n, &[])).collect(),
            TailRule::None,
            None,
        )
        .unwrap()
    }

    #[test]
    fn snf_examples() {
        let a = SmallMatrix::from_i64(&[&[4, 2], &[2, 4]]);
        let s = smith_normal_form(&a);
        assert_eq!(s.diagonal(), vec![2, 6]);
        assert_eq!(s.u.mul(&a).mul(&s.v), s.s);
        let d = SmallMatrix::from_i64(&[&[2, 0], &[0, 4]]);
        assert_eq!(smith_normal_form(&d).diagonal(), vec![2, 4]);
        let z = SmallMatrix::zeros(2, 3);
        let s = smith_normal_form(&z);
        assert_eq!(s.u, SmallMatrix::identity(2));
        assert_eq!(s.v, SmallMatrix::identity(3));
        assert!(s.s.is_zero());
    }

    #[test]
    fn snf_inverses() {
        let a = SmallMatrix::from_i64(&[&[3, 5, 7], &[2, 4, 9], &[6, 1, 1]]);
        let s = smith_normal_form(&a);
        assert_eq!(s.u.mul(&s.u_inv), SmallMatrix::identity(3));
        assert_eq!(s.v.mul(&s.v_inv), SmallMatrix::identity(3));
        assert_eq!(s.u.mul(&a).mul(&s.v), s.s);
    }

    #[test]
    fn hnf_example() {
        let a = SmallMatrix::from_i64(&[&[2, 3], &[4, 5]]);
        let h = hermite_normal_form(&a);
        assert_eq!(h.u.mul(&a), h.h);
        assert_eq!(h.h, SmallMatrix::from_i64(&[&[2, 0], &[0, 1]]));
        assert_eq!(h.u.determinant().abs(), 1);
    }

    #[test]
    fn membership_examples() {
        let z8 = finite_group(&[8]);
        assert_eq!(
            membership(&z8, &[z8.e(0, 2)], &z8.e(0, 6)).unwrap(),
            Some(vec![3])
        );
        let k = finite_group(&[2, 2]);
        let gen = k.add(&k.e(0, 1), &k.e(1, 1));
        assert_eq!(membership(&k, &[gen], &k.e(0, 1)).unwrap(), None);
        assert_eq!(membership(&k, &[], &Element::zero()).unwrap(), Some(vec![]));
    }

    #[test]
    fn intersection_examples() {
        let z4 = finite_group(&[4]);
        let r = intersection(&z4, &[z4.e(0, 2)], &[z4.e(0, 1)]).unwrap();
        assert!(same_subgroup(&z4, &r, &[z4.e(0, 2)]).unwrap());
        let k = finite_group(&[2, 2]);
        assert!(intersection(&k, &[k.e(0, 1)], &[k.e(1, 1)])
            .unwrap()
            .is_empty());
        let g = finite_group(&[4, 4]);
        let a = g.add(&g.e(0, 1), &g.e(1, 1));
        let b = g.sub(&g.e(0, 1), &g.e(1, 1));
        let r = intersection(&g, &[a], &[b]).unwrap();
        let expect = g.add(&g.e(0, 2), &g.e(1, 2));
        assert!(same_subgroup(&g, &r, &[expect]).unwrap());
    }

    #[test]
    fn independence_examples() {
        let k = finite_group(&[2, 2]);
        assert!(is_independent(&k, &[k.e(0, 1), k.e(1, 1)]).unwrap());
        let z9 = finite_group(&[9]);
        assert!(!is_independent(&z9, &[z9.e(0, 1), z9.e(0, 3)]).unwrap());
        // 2·(e0 + 2e1) = 2e0 lies in ⟨e0⟩
        let g = finite_group(&[4, 4]);
        let x = g.add(&g.e(0, 1), &g.e(1, 2));
        assert!(!is_independent(&g, &[g.e(0, 1), x]).unwrap());
        let y = g.add(&g.e(0, 1), &g.e(1, 1));
        assert!(is_independent(&g, &[g.e(0, 1), y]).unwrap());
    }

    #[test]
    fn infinite_coordinates() {
        let g = BlockGroup::new(
            vec![
                Block::new(CyclicOrder::Infinite, vec![]),
                Block::finite(6, &[]),
            ],
            TailRule::None,
            None,
        )
        .unwrap();
        let x = g.add(&g.e(0, 2), &g.e(1, 3));
        assert!(membership(&g, std::slice::from_ref(&x), &g.e(0, 4))
            .unwrap()
            .is_some());
        assert!(membership(&g, std::slice::from_ref(&x), &g.e(0, 2))
            .unwrap()
            .is_none());
        assert_eq!(subgroup_order(&g, &[x]).unwrap(), Order::Infinite);
        assert_eq!(subgroup_order(&g, &[g.e(1, 2)]).unwrap(), Order::Finite(3));
    }

    #[test]
    fn prufer_rejected() {
        let g = BlockGroup::new(
            vec![Block::new(CyclicOrder::Prufer(2), vec![])],
            TailRule::None,
            None,
        )
        .unwrap();
        let x = g.prufer(0, 1, 2).unwrap();
        assert!(matches!(
            membership(&g, std::slice::from_ref(&x), &x),
            Err(LatticeError::SupportMismatch(_))
        ));
    }

    #[test]
    fn congruence_kernel_solutions() {
        // x + 2y ≡ 0 mod 4
        let sols = congruence_kernel(
            &[vec![BigInt::from(1), BigInt::from(2)]],
            &BigInt::from(4),
            2,
        );
        for s in &sols {
            assert!((&s[0] + BigInt::from(2) * &s[1]).is_multiple_of(&BigInt::from(4)));
        }
        // (2, 1) is a solution and must be generated
        let frame_mod = |v: &[BigInt]| v.to_vec();
        let g = IntMatrix::from_rows(2, sols.iter().map(|v| frame_mod(v)).collect());
        let h = hermite_normal_form(&g);
        let det: BigInt = h.pivots.iter().map(|&(r, c)| h.h[(r, c)].clone()).product();
        assert_eq!(det, BigInt::from(4));
    }
}
