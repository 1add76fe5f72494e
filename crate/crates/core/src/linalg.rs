//! Exact linear algebra over a small prime field GF(p).
//!
//! Every value here is immutable: operations return fresh matrices. Entries are
//! stored as bytes already reduced modulo `p`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Serialize, Serializer};
use thiserror::Error;

/// Largest modulus accepted by [`Matrix`] and [`FieldElement`].
pub const MAX_MODULUS: u8 = 13;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("modulus {0} is not a prime in 2..={MAX_MODULUS}")]
    BadModulus(u8),
    #[error("operands use different moduli ({0} vs {1})")]
    ModulusMismatch(u8, u8),
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("zero has no multiplicative inverse")]
    InverseOfZero,
    #[error("rows have unequal lengths")]
    RaggedRows,
}

pub type Result<T> = std::result::Result<T, LinalgError>;

fn check_modulus(p: u8) -> Result<()> {
    if (2..=MAX_MODULUS).contains(&p) && (2..p).all(|d| p % d != 0) {
        Ok(())
    } else {
        Err(LinalgError::BadModulus(p))
    }
}

fn reduce(v: i64, p: u8) -> u8 {
    v.rem_euclid(p as i64) as u8
}

/// Multiplicative inverse of a nonzero residue.
pub fn inv_mod(a: u8, p: u8) -> Result<u8> {
    let a = a % p;
    if a == 0 {
        return Err(LinalgError::InverseOfZero);
    }
    // p is tiny; a^(p-2) by repeated multiplication
    let mut acc = 1u16;
    for _ in 0..p - 2 {
        acc = acc * a as u16 % p as u16;
    }
    Ok(acc as u8)
}

/// An element of GF(p).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u8,
    modulus: u8,
}

impl FieldElement {
    pub fn new(value: i64, modulus: u8) -> Result<Self> {
        check_modulus(modulus)?;
        Ok(Self {
            value: reduce(value, modulus),
            modulus,
        })
    }

    pub fn value(self) -> u8 {
        self.value
    }

    pub fn modulus(self) -> u8 {
        self.modulus
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    pub fn inv(self) -> Result<Self> {
        Ok(Self {
            value: inv_mod(self.value, self.modulus)?,
            modulus: self.modulus,
        })
    }

    fn same(self, other: Self) {
        assert_eq!(self.modulus, other.modulus, "field moduli differ");
    }
}

impl Add for FieldElement {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.same(rhs);
        Self {
            value: (self.value + rhs.value) % self.modulus,
            modulus: self.modulus,
        }
    }
}

impl Sub for FieldElement {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for FieldElement {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            value: (self.modulus - self.value) % self.modulus,
            modulus: self.modulus,
        }
    }
}

impl Mul for FieldElement {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.same(rhs);
        Self {
            value: ((self.value as u16 * rhs.value as u16) % self.modulus as u16) as u8,
            modulus: self.modulus,
        }
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// A dense row-major matrix over GF(p).
///
/// The derived ordering compares modulus, then shape, then entries
/// lexicographically; for matrices of one shape this is the lexicographic
/// order on entries used for every deterministic listing in this crate.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Matrix {
    modulus: u8,
    rows: usize,
    cols: usize,
    data: Vec<u8>,
}

/// Build a matrix from integer rows, panicking on malformed input.
///
/// `matrix![3; [0, 1], [2, 0]]`
#[macro_export]
macro_rules! matrix {
    ($p:expr; $([$($x:expr),* $(,)?]),+ $(,)?) => {
        $crate::linalg::Matrix::from_rows($p, vec![$(vec![$(($x) as i64),*]),+])
            .expect("malformed matrix literal")
    };
}

impl Matrix {
    pub fn zeros(modulus: u8, rows: usize, cols: usize) -> Self {
        check_modulus(modulus).expect("invalid modulus");
        Self {
            modulus,
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(modulus: u8, n: usize) -> Self {
        let mut m = Self::zeros(modulus, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    pub fn scalar(modulus: u8, n: usize, c: i64) -> Self {
        Self::identity(modulus, n).scale(c)
    }

    /// Entries are reduced modulo `modulus`; negative values are allowed.
    pub fn from_rows<R: AsRef<[i64]>>(modulus: u8, rows: impl IntoIterator<Item = R>) -> Result<Self> {
        check_modulus(modulus)?;
        let mut data = Vec::new();
        let mut cols = None;
        let mut n = 0;
        for row in rows {
            let row = row.as_ref();
            match cols {
                None => cols = Some(row.len()),
                Some(c) if c != row.len() => return Err(LinalgError::RaggedRows),
                _ => {}
            }
            data.extend(row.iter().map(|&v| reduce(v, modulus)));
            n += 1;
        }
        Ok(Self {
            modulus,
            rows: n,
            cols: cols.unwrap_or(0),
            data,
        })
    }

    /// Rows from already-reduced bytes; `cols` fixes the width when `rows` is empty.
    pub fn from_data(modulus: u8, rows: usize, cols: usize, data: Vec<u8>) -> Result<Self> {
        check_modulus(modulus)?;
        if data.len() != rows * cols {
            return Err(LinalgError::ShapeMismatch {
                left: (rows, cols),
                right: (data.len(), 1),
            });
        }
        let data = data.into_iter().map(|v| v % modulus).collect();
        Ok(Self {
            modulus,
            rows,
            cols,
            data,
        })
    }

    pub fn modulus(&self) -> u8 {
        self.modulus
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.data[i * self.cols + j]
    }

    pub fn entry(&self, i: usize, j: usize) -> FieldElement {
        FieldElement {
            value: self.get(i, j),
            modulus: self.modulus,
        }
    }

    pub fn with_entry(&self, i: usize, j: usize, v: i64) -> Self {
        let mut m = self.clone();
        m.data[i * self.cols + j] = reduce(v, self.modulus);
        m
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[u8]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        self.row_iter().map(<[u8]>::to_vec).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.modulus != other.modulus {
            return Err(LinalgError::ModulusMismatch(self.modulus, other.modulus));
        }
        Ok(())
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j));
            }
        }
        Self {
            modulus: self.modulus,
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    pub fn scale(&self, c: i64) -> Self {
        let c = reduce(c, self.modulus) as u16;
        let p = self.modulus as u16;
        Self {
            data: self.data.iter().map(|&v| (v as u16 * c % p) as u8).collect(),
            ..self.clone()
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        if self.shape() != other.shape() {
            return Err(LinalgError::ShapeMismatch {
                left: self.shape(),
                right: other.shape(),
            });
        }
        let p = self.modulus;
        Ok(Self {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| (a + b) % p)
                .collect(),
            ..self.clone()
        })
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        if self.cols != other.rows {
            return Err(LinalgError::ShapeMismatch {
                left: self.shape(),
                right: other.shape(),
            });
        }
        let p = self.modulus as u32;
        let mut data = vec![0u8; self.rows * other.cols];
        let mut acc = vec![0u32; other.cols];
        for i in 0..self.rows {
            acc.iter_mut().for_each(|a| *a = 0);
            for k in 0..self.cols {
                let a = self.get(i, k) as u32;
                if a == 0 {
                    continue;
                }
                for (j, slot) in acc.iter_mut().enumerate() {
                    *slot += a * other.get(k, j) as u32;
                }
            }
            for (j, a) in acc.iter().enumerate() {
                data[i * other.cols + j] = (a % p) as u8;
            }
        }
        Ok(Self {
            modulus: self.modulus,
            rows: self.rows,
            cols: other.cols,
            data,
        })
    }

    /// `self^n` for square matrices; `n = 0` gives the identity.
    pub fn pow(&self, n: u64) -> Self {
        assert!(self.is_square(), "pow of non-square matrix");
        let mut result = Self::identity(self.modulus, self.rows);
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        result
    }

    /// Copy of the `h x w` block with top-left corner `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, h: usize, w: usize) -> Self {
        assert!(r0 + h <= self.rows && c0 + w <= self.cols, "block out of range");
        let mut data = Vec::with_capacity(h * w);
        for i in r0..r0 + h {
            data.extend_from_slice(&self.row(i)[c0..c0 + w]);
        }
        Self {
            modulus: self.modulus,
            rows: h,
            cols: w,
            data,
        }
    }

    /// Assemble a block matrix. Blocks in a block-row share a height and
    /// blocks in a block-column share a width.
    pub fn from_blocks(blocks: &[Vec<&Matrix>]) -> Result<Self> {
        let first = blocks
            .first()
            .and_then(|r| r.first())
            .ok_or(LinalgError::RaggedRows)?;
        let p = first.modulus;
        let widths: Vec<usize> = blocks[0].iter().map(|b| b.cols).collect();
        let cols: usize = widths.iter().sum();
        let mut data = Vec::new();
        let mut rows = 0;
        for brow in blocks {
            if brow.len() != widths.len() {
                return Err(LinalgError::RaggedRows);
            }
            let h = brow[0].rows;
            for (b, &w) in brow.iter().zip(&widths) {
                first.check_same(b)?;
                if b.rows != h || b.cols != w {
                    return Err(LinalgError::ShapeMismatch {
                        left: (h, w),
                        right: b.shape(),
                    });
                }
            }
            for i in 0..h {
                for b in brow {
                    data.extend_from_slice(b.row(i));
                }
            }
            rows += h;
        }
        Ok(Self {
            modulus: p,
            rows,
            cols,
            data,
        })
    }

    /// Stack `self` on top of `other`.
    pub fn vstack(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        if self.cols != other.cols && self.rows != 0 && other.rows != 0 {
            return Err(LinalgError::ShapeMismatch {
                left: self.shape(),
                right: other.shape(),
            });
        }
        let cols = if self.rows == 0 { other.cols } else { self.cols };
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Self {
            modulus: self.modulus,
            rows: self.rows + other.rows,
            cols,
            data,
        })
    }

    /// Reduced row echelon form together with its pivot columns.
    ///
    /// Zero rows are kept at the bottom, so the shape is unchanged.
    pub fn rref(&self) -> (Matrix, Vec<usize>) {
        let p = self.modulus as u16;
        let mut m = self.clone();
        let cols = m.cols;
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..cols {
            if r == m.rows {
                break;
            }
            let Some(pr) = (r..m.rows).find(|&i| m.data[i * cols + c] != 0) else {
                continue;
            };
            if pr != r {
                for j in 0..cols {
                    m.data.swap(pr * cols + j, r * cols + j);
                }
            }
            let inv = inv_mod(m.data[r * cols + c], m.modulus).expect("pivot is nonzero") as u16;
            for j in c..cols {
                m.data[r * cols + j] = (m.data[r * cols + j] as u16 * inv % p) as u8;
            }
            for i in 0..m.rows {
                let f = m.data[i * cols + c] as u16;
                if i == r || f == 0 {
                    continue;
                }
                for j in c..cols {
                    let sub = f * m.data[r * cols + j] as u16 % p;
                    m.data[i * cols + j] = ((m.data[i * cols + j] as u16 + p - sub) % p) as u8;
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// The nonzero rows of the RREF.
    pub fn row_basis(&self) -> Matrix {
        let (r, piv) = self.rref();
        r.block(0, 0, piv.len(), self.cols)
    }

    pub fn determinant(&self) -> Result<FieldElement> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare(self.rows, self.cols));
        }
        let p = self.modulus as u16;
        let n = self.rows;
        let mut m = self.data.clone();
        let mut det = 1u16;
        for c in 0..n {
            let Some(pr) = (c..n).find(|&i| m[i * n + c] != 0) else {
                return Ok(FieldElement {
                    value: 0,
                    modulus: self.modulus,
                });
            };
            if pr != c {
                for j in 0..n {
                    m.swap(pr * n + j, c * n + j);
                }
                det = (p - det) % p;
            }
            let pivot = m[c * n + c] as u16;
            det = det * pivot % p;
            let inv = inv_mod(pivot as u8, self.modulus)? as u16;
            for i in c + 1..n {
                let f = m[i * n + c] as u16 * inv % p;
                if f == 0 {
                    continue;
                }
                for j in c..n {
                    let sub = f * m[c * n + j] as u16 % p;
                    m[i * n + j] = ((m[i * n + j] as u16 + p - sub) % p) as u8;
                }
            }
        }
        Ok(FieldElement {
            value: det as u8,
            modulus: self.modulus,
        })
    }

    pub fn is_invertible(&self) -> bool {
        self.is_square() && self.rank() == self.rows
    }

    pub fn inverse(&self) -> Result<Matrix> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare(self.rows, self.cols));
        }
        let n = self.rows;
        let aug = Matrix::from_blocks(&[vec![self, &Matrix::identity(self.modulus, n)]])?;
        let (r, piv) = aug.rref();
        if piv.len() < n || piv[n - 1] >= n {
            return Err(LinalgError::SingularMatrix);
        }
        Ok(r.block(0, n, n, n))
    }

    /// Basis (as rows) of `{x : self · xᵀ = 0}`. The result has
    /// `cols - rank` rows and `cols` columns; it may have zero rows.
    pub fn solve_homogeneous(&self) -> Matrix {
        let (r, piv) = self.rref();
        let n = self.cols;
        let p = self.modulus;
        let free: Vec<usize> = (0..n).filter(|c| !piv.contains(c)).collect();
        let mut data = Vec::with_capacity(free.len() * n);
        for &f in &free {
            let mut v = vec![0u8; n];
            v[f] = 1;
            for (i, &pc) in piv.iter().enumerate() {
                v[pc] = (p - r.get(i, f)) % p;
            }
            data.extend(v);
        }
        Matrix {
            modulus: p,
            rows: free.len(),
            cols: n,
            data,
        }
    }

    /// Basis of the kernel of `self - lam·I`, acting on row vectors
    /// (`x · self = lam · x`).
    pub fn eigenspace(&self, lam: FieldElement) -> Result<Matrix> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare(self.rows, self.cols));
        }
        if lam.modulus != self.modulus {
            return Err(LinalgError::ModulusMismatch(self.modulus, lam.modulus));
        }
        let shifted = self - &Matrix::scalar(self.modulus, self.rows, lam.value as i64);
        // x·(A - λI) = 0  ⇔  (A - λI)ᵀ·xᵀ = 0
        Ok(shifted.transpose().solve_homogeneous())
    }

    /// Multiply a row vector by this matrix.
    pub fn apply_row(&self, v: &[u8]) -> Vec<u8> {
        assert_eq!(v.len(), self.rows);
        let p = self.modulus as u32;
        (0..self.cols)
            .map(|j| {
                let s: u32 = v
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| x as u32 * self.get(i, j) as u32)
                    .sum();
                (s % p) as u8
            })
            .collect()
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix(p={}, {:?})", self.modulus, self.to_rows())
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, row) in self.row_iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            let cells: Vec<String> = row
                .iter()
                .map(|&v| if v == 0 { ".".to_string() } else { v.to_string() })
                .collect();
            write!(f, "{}", cells.join(" "))?;
        }
        Ok(())
    }
}

impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        self.checked_add(rhs).expect("matrix add")
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        self.checked_add(&-rhs).expect("matrix sub")
    }
}

impl Neg for &Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        self.scale(-1)
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        self.checked_mul(rhs).expect("matrix mul")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Matrix {
        matrix![3; [0, 1], [2, 0]]
    }

    #[test]
    fn field_arithmetic() {
        let two = FieldElement::new(2, 3).unwrap();
        let one = FieldElement::new(1, 3).unwrap();
        assert_eq!((two + two).value(), 1);
        assert_eq!((one - two).value(), 2);
        assert_eq!((-two).value(), 1);
        assert_eq!(two.inv().unwrap().value(), 2);
        assert_eq!(FieldElement::new(-4, 3).unwrap().value(), 2);
        assert_eq!(
            FieldElement::new(0, 3).unwrap().inv(),
            Err(LinalgError::InverseOfZero)
        );
        assert_eq!(FieldElement::new(1, 4), Err(LinalgError::BadModulus(4)));
        assert_eq!(FieldElement::new(1, 17), Err(LinalgError::BadModulus(17)));
        for p in [2u8, 5, 7, 11, 13] {
            for a in 1..p {
                assert_eq!(a as u16 * inv_mod(a, p).unwrap() as u16 % p as u16, 1);
            }
        }
    }

    #[test]
    fn rank_examples() {
        assert_eq!(Matrix::identity(3, 2).rank(), 2);
        let r = matrix![3; [2, 0], [2, 2]];
        let r_plus_i = &r + &Matrix::identity(3, 2);
        assert_eq!(r_plus_i, matrix![3; [0, 0], [2, 0]]);
        assert_eq!(r_plus_i.rank(), 1);
        assert_eq!(x().rank(), 2);
        assert_eq!(x().determinant().unwrap().value(), 1);
    }

    #[test]
    fn inverse_examples() {
        let id = Matrix::identity(3, 2);
        assert_eq!(id.inverse().unwrap(), id);
        let xi = x().inverse().unwrap();
        assert_eq!(xi, matrix![3; [0, 2], [1, 0]]);
        assert_eq!(&x() * &xi, id);
        assert_eq!(
            matrix![3; [1, 1], [2, 2]].inverse(),
            Err(LinalgError::SingularMatrix)
        );
        assert_eq!(
            matrix![3; [1, 1, 0]].inverse(),
            Err(LinalgError::NotSquare(1, 3))
        );
    }

    #[test]
    fn rref_examples() {
        let (z, piv) = Matrix::zeros(3, 2, 3).rref();
        assert!(z.is_zero());
        assert!(piv.is_empty());
        let (r, piv) = Matrix::scalar(3, 2, 2).rref();
        assert_eq!(r, Matrix::identity(3, 2));
        assert_eq!(piv, vec![0, 1]);
        let (r, _) = x().rref();
        assert_eq!(r, Matrix::identity(3, 2));
    }

    #[test]
    fn kernels() {
        assert_eq!(Matrix::identity(3, 6).solve_homogeneous().rows(), 0);
        let k = Matrix::zeros(3, 1, 15).solve_homogeneous();
        assert_eq!(k.shape(), (15, 15));
        let a = matrix![3; [1, 2, 0, 1], [0, 1, 1, 1]];
        let k = a.solve_homogeneous();
        assert_eq!(k.rows(), 2);
        assert!((&a * &k.transpose()).is_zero());
    }

    #[test]
    fn eigenspaces() {
        let one = FieldElement::new(1, 3).unwrap();
        let two = FieldElement::new(2, 3).unwrap();
        assert_eq!(Matrix::identity(3, 4).eigenspace(one).unwrap().rows(), 4);
        assert_eq!(Matrix::scalar(3, 4, 2).eigenspace(two).unwrap().rows(), 4);
        assert_eq!(Matrix::scalar(3, 4, 2).eigenspace(one).unwrap().rows(), 0);
    }

    #[test]
    fn blocks_roundtrip() {
        let o = Matrix::zeros(3, 2, 2);
        let m = Matrix::from_blocks(&[vec![&o, &x()], vec![&x(), &o]]).unwrap();
        assert_eq!(m.shape(), (4, 4));
        assert_eq!(m.block(0, 2, 2, 2), x());
        assert_eq!(m.block(2, 0, 2, 2), x());
        assert_eq!(m.get(0, 3), 1);
    }

    #[test]
    fn ragged_and_mismatch() {
        assert_eq!(
            Matrix::from_rows(3, vec![vec![1i64, 2], vec![1]]),
            Err(LinalgError::RaggedRows)
        );
        let a = Matrix::identity(3, 2);
        let b = Matrix::identity(5, 2);
        assert_eq!(a.checked_mul(&b), Err(LinalgError::ModulusMismatch(3, 5)));
    }

    #[test]
    fn pow_and_display() {
        assert_eq!(x().pow(4), Matrix::identity(3, 2));
        assert_eq!(x().pow(0), Matrix::identity(3, 2));
        assert_eq!(x().to_string(), ". 1\n2 .");
        assert_eq!(serde_json::to_string(&x()).unwrap(), "[[0,1],[2,0]]");
    }
}
