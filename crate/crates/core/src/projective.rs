//! Subspaces of PG(d, q) in canonical (RREF) form, and enumeration of the
//! subspace lattice.

use std::fmt;
use std::sync::OnceLock;

use itertools::Itertools;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::linalg::{LinalgError, Matrix};

/// Upper limit on the number of subspaces [`AmbientSpace::subspaces`] will list.
pub const ENUMERATION_LIMIT: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProjectiveError {
    #[error("subspaces live in different ambient spaces")]
    AmbientMismatch,
    #[error("enumeration of {0} subspaces exceeds the limit of {ENUMERATION_LIMIT}")]
    TooLarge(u64),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A projective subspace, stored as the nonzero rows of its RREF basis.
///
/// Equality is equality of canonical bases, so two spanning sets of the same
/// subspace always compare equal.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subspace {
    basis: Matrix,
}

impl Subspace {
    /// The subspace spanned by the rows of `rows`; zero and dependent rows are
    /// dropped.
    pub fn canonicalize(rows: &Matrix) -> Self {
        Self {
            basis: rows.row_basis(),
        }
    }

    pub fn empty(d: usize, q: u8) -> Self {
        Self {
            basis: Matrix::zeros(q, 0, d + 1),
        }
    }

    pub fn full(d: usize, q: u8) -> Self {
        Self {
            basis: Matrix::identity(q, d + 1),
        }
    }

    /// The point spanned by one vector.
    pub fn point(q: u8, v: &[u8]) -> Self {
        let m = Matrix::from_data(q, 1, v.len(), v.to_vec()).expect("valid modulus");
        Self::canonicalize(&m)
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    /// Vector-space dimension.
    pub fn vdim(&self) -> usize {
        self.basis.rows()
    }

    /// Projective dimension; `-1` for the empty subspace.
    pub fn proj_dim(&self) -> isize {
        self.vdim() as isize - 1
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.cols() - 1
    }

    pub fn modulus(&self) -> u8 {
        self.basis.modulus()
    }

    pub fn is_empty(&self) -> bool {
        self.vdim() == 0
    }

    fn check_ambient(&self, other: &Self) -> Result<(), ProjectiveError> {
        if self.basis.cols() != other.basis.cols() || self.modulus() != other.modulus() {
            return Err(ProjectiveError::AmbientMismatch);
        }
        Ok(())
    }

    pub fn span(&self, other: &Self) -> Result<Self, ProjectiveError> {
        self.check_ambient(other)?;
        Ok(Self::canonicalize(&self.basis.vstack(&other.basis)?))
    }

    /// Intersection, computed from the left kernel of the stacked bases.
    pub fn meet(&self, other: &Self) -> Result<Self, ProjectiveError> {
        self.check_ambient(other)?;
        let (a, b) = (&self.basis, &other.basis);
        if a.rows() == 0 || b.rows() == 0 {
            return Ok(Self::empty(self.ambient_dim(), self.modulus()));
        }
        // (x, y) with x·A + y·B = 0; the meet is spanned by the x·A.
        let stacked = a.vstack(b)?;
        let kernel = stacked.transpose().solve_homogeneous();
        if kernel.rows() == 0 {
            return Ok(Self::empty(self.ambient_dim(), self.modulus()));
        }
        let xs = kernel.block(0, 0, kernel.rows(), a.rows());
        Ok(Self::canonicalize(&(&xs * a)))
    }

    pub fn is_disjoint(&self, other: &Self) -> Result<bool, ProjectiveError> {
        self.check_ambient(other)?;
        Ok(self.span(other)?.vdim() == self.vdim() + other.vdim())
    }

    /// True when `other` is a subspace of `self`.
    pub fn contains(&self, other: &Self) -> Result<bool, ProjectiveError> {
        self.check_ambient(other)?;
        Ok(self.span(other)?.vdim() == self.vdim())
    }

    pub fn contains_vector(&self, v: &[u8]) -> bool {
        let row = Matrix::from_data(self.modulus(), 1, v.len(), v.to_vec()).expect("valid modulus");
        self.basis
            .vstack(&row)
            .map(|m| m.rank() == self.vdim())
            .unwrap_or(false)
    }

    /// All nonzero vectors of the underlying vector subspace, in lexicographic
    /// order of their coordinate tuples with respect to the basis.
    pub fn vectors(&self) -> Vec<Vec<u8>> {
        let k = self.vdim();
        let q = self.modulus();
        (0..k)
            .map(|_| 0..q)
            .multi_cartesian_product()
            .filter(|c| c.iter().any(|&x| x != 0))
            .map(|c| combine(&c, &self.basis))
            .collect()
    }

    /// The points of this subspace, in canonical order.
    pub fn points(&self) -> Vec<Subspace> {
        let k = self.vdim();
        let q = self.modulus();
        if k == 0 {
            return Vec::new();
        }
        let mut pts: Vec<Subspace> = normalized_coefficients(k, q)
            .map(|c| Subspace::point(q, &combine(&c, &self.basis)))
            .collect();
        pts.sort();
        pts
    }

    /// Map a subspace of a smaller space into this one: the rows of `inner`
    /// are coordinates with respect to this subspace's basis.
    pub fn embed(&self, inner: &Subspace) -> Subspace {
        Subspace::canonicalize(&(inner.basis() * &self.basis))
    }

    /// Image under right multiplication of the basis by `g`.
    pub fn transform(&self, g: &Matrix) -> Subspace {
        Subspace::canonicalize(&(&self.basis * g))
    }
}

/// Coefficient vectors of length `k` whose first nonzero entry is 1.
fn normalized_coefficients(k: usize, q: u8) -> impl Iterator<Item = Vec<u8>> {
    (0..k)
        .map(|_| 0..q)
        .multi_cartesian_product()
        .filter(|c| c.iter().find(|&&x| x != 0) == Some(&1))
}

fn combine(coeffs: &[u8], basis: &Matrix) -> Vec<u8> {
    basis.apply_row(coeffs)
}

impl fmt::Debug for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .basis
            .row_iter()
            .map(|r| r.iter().map(u8::to_string).collect::<String>())
            .collect();
        write!(f, "<{}>", rows.join("/"))
    }
}

impl Serialize for Subspace {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Subspace", 3)?;
        st.serialize_field("basis", &self.basis)?;
        st.serialize_field("d", &self.ambient_dim())?;
        st.serialize_field("q", &self.modulus())?;
        st.end()
    }
}

/// Number of `k`-dimensional subspaces of an `n`-dimensional vector space
/// over GF(q).
pub fn gaussian_binomial(n: u32, k: u32, q: u64) -> u64 {
    assert!(k <= n, "k must not exceed n");
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 0..k {
        num *= (q as u128).pow(n - i) - 1;
        den *= (q as u128).pow(i + 1) - 1;
    }
    (num / den) as u64
}

/// PG(d, q) with lazily cached point, line and solid lists.
#[derive(Debug)]
pub struct AmbientSpace {
    d: usize,
    q: u8,
    points: OnceLock<Vec<Subspace>>,
    lines: OnceLock<Vec<Subspace>>,
    solids: OnceLock<Vec<Subspace>>,
}

impl Clone for AmbientSpace {
    fn clone(&self) -> Self {
        Self::new(self.d, self.q)
    }
}

impl AmbientSpace {
    pub fn new(d: usize, q: u8) -> Self {
        Self {
            d,
            q,
            points: OnceLock::new(),
            lines: OnceLock::new(),
            solids: OnceLock::new(),
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn q(&self) -> u8 {
        self.q
    }

    pub fn point_count(&self) -> u64 {
        gaussian_binomial(self.d as u32 + 1, 1, self.q as u64)
    }

    /// Every subspace of vector dimension `k`, in lexicographic order of the
    /// canonical bases. Generated directly from pivot patterns.
    pub fn subspaces(&self, k: usize) -> Result<Vec<Subspace>, ProjectiveError> {
        let n = self.d + 1;
        if k > n {
            return Ok(Vec::new());
        }
        let count = gaussian_binomial(n as u32, k as u32, self.q as u64);
        if count > ENUMERATION_LIMIT {
            return Err(ProjectiveError::TooLarge(count));
        }
        let q = self.q;
        let mut out = Vec::with_capacity(count as usize);
        for pivots in (0..n).combinations(k) {
            // free cells: row i, columns after its pivot that are not pivots
            let free: Vec<(usize, usize)> = (0..k)
                .flat_map(|i| {
                    let piv = &pivots;
                    (piv[i] + 1..n)
                        .filter(move |c| !piv.contains(c))
                        .map(move |c| (i, c))
                })
                .collect();
            let mut template = vec![0u8; k * n];
            for (i, &c) in pivots.iter().enumerate() {
                template[i * n + c] = 1;
            }
            if free.is_empty() {
                out.push(Subspace {
                    basis: Matrix::from_data(q, k, n, template).expect("valid"),
                });
                continue;
            }
            for vals in free.iter().map(|_| 0..q).multi_cartesian_product() {
                let mut data = template.clone();
                for (&(i, c), v) in free.iter().zip(vals) {
                    data[i * n + c] = v;
                }
                out.push(Subspace {
                    basis: Matrix::from_data(q, k, n, data).expect("valid"),
                });
            }
        }
        out.sort();
        Ok(out)
    }

    pub fn points(&self) -> &[Subspace] {
        self.points
            .get_or_init(|| self.subspaces(1).expect("point enumeration within limit"))
    }

    /// All lines of the space.
    ///
    /// # Panics
    /// If the line count exceeds [`ENUMERATION_LIMIT`]; use
    /// [`enumerate_lines`](Self::enumerate_lines) to get an error instead.
    pub fn lines(&self) -> &[Subspace] {
        self.lines
            .get_or_init(|| self.subspaces(2).expect("line enumeration within limit"))
    }

    pub fn enumerate_lines(&self) -> Result<&[Subspace], ProjectiveError> {
        if let Some(l) = self.lines.get() {
            return Ok(l);
        }
        let lines = self.subspaces(2)?;
        Ok(self.lines.get_or_init(|| lines))
    }

    /// Projective 3-spaces.
    pub fn solids(&self) -> &[Subspace] {
        self.solids
            .get_or_init(|| self.subspaces(4).expect("solid enumeration within limit"))
    }
}

/// Encode a vector over GF(q) as its base-q integer (first coordinate most
/// significant).
pub fn vector_code(v: &[u8], q: u8) -> usize {
    v.iter().fold(0usize, |acc, &x| acc * q as usize + x as usize)
}

/// Code of the normalized representative of a point.
pub fn point_code(p: &Subspace) -> usize {
    vector_code(p.basis().row(0), p.modulus())
}

pub fn decode_vector(mut code: usize, len: usize, q: u8) -> Vec<u8> {
    let mut v = vec![0u8; len];
    for slot in v.iter_mut().rev() {
        *slot = (code % q as usize) as u8;
        code /= q as usize;
    }
    v
}
