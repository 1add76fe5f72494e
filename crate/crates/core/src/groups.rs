//! Matrix groups over GF(p): closure, projective quotient, actions on
//! subspaces and spaces of (semi-)invariant forms.
//!
//! Vectors are rows and groups act on the right, `x ↦ x·g`. A bilinear form
//! with Gram matrix `M` is carried to `g·M·gᵀ`.

use std::collections::{HashMap, HashSet, VecDeque};

use itertools::Itertools;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{LinalgError, Matrix};
use crate::projective::{AmbientSpace, Subspace};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("generator {0} is not invertible")]
    NotInvertible(usize),
    #[error("generators have inconsistent shapes or moduli")]
    Inconsistent,
    #[error("group has more than {0} elements")]
    CapExceeded(usize),
    #[error("closure has not been materialized")]
    NotMaterialized,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone)]
pub struct MatrixGroup {
    generators: Vec<Matrix>,
    degree: usize,
    modulus: u8,
    closure: Option<Vec<Matrix>>,
}

impl MatrixGroup {
    pub fn new(generators: Vec<Matrix>) -> Result<Self, GroupError> {
        let first = generators.first().ok_or(GroupError::Inconsistent)?;
        let (degree, modulus) = (first.rows(), first.modulus());
        Self::with_degree(degree, modulus, generators)
    }

    /// A group on `GF(modulus)^degree`; the generator list may be empty.
    pub fn with_degree(degree: usize, modulus: u8, generators: Vec<Matrix>) -> Result<Self, GroupError> {
        for (i, g) in generators.iter().enumerate() {
            if g.shape() != (degree, degree) || g.modulus() != modulus {
                return Err(GroupError::Inconsistent);
            }
            if !g.is_invertible() {
                return Err(GroupError::NotInvertible(i));
            }
        }
        Ok(Self {
            generators,
            degree,
            modulus,
            closure: None,
        })
    }

    pub fn trivial(degree: usize, modulus: u8) -> Self {
        Self::with_degree(degree, modulus, Vec::new()).expect("empty generator list")
    }

    pub fn generators(&self) -> &[Matrix] {
        &self.generators
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn modulus(&self) -> u8 {
        self.modulus
    }

    pub fn identity(&self) -> Matrix {
        Matrix::identity(self.modulus, self.degree)
    }

    /// Materialize the element list, failing if it would exceed `cap`.
    pub fn materialize(mut self, cap: usize) -> Result<Self, GroupError> {
        self.closure = Some(closure(&self, cap)?);
        Ok(self)
    }

    pub fn elements(&self) -> Result<&[Matrix], GroupError> {
        self.closure.as_deref().ok_or(GroupError::NotMaterialized)
    }

    pub fn order(&self) -> Result<usize, GroupError> {
        Ok(self.elements()?.len())
    }

    /// The group generated by `h⁻¹·g·h` for each generator `g`.
    pub fn conjugate(&self, h: &Matrix) -> Result<Self, GroupError> {
        let hi = h.inverse()?;
        let gens = self.generators.iter().map(|g| &(&hi * g) * h).collect();
        Self::with_degree(self.degree, self.modulus, gens)
    }
}

/// Every element of the group, in breadth-first order from the identity.
pub fn closure(g: &MatrixGroup, cap: usize) -> Result<Vec<Matrix>, GroupError> {
    let id = g.identity();
    let mut seen: HashSet<Matrix> = HashSet::new();
    let mut order = vec![id.clone()];
    seen.insert(id.clone());
    let mut queue = VecDeque::from([id]);
    while let Some(x) = queue.pop_front() {
        for gen in &g.generators {
            let y = &x * gen;
            if seen.insert(y.clone()) {
                if order.len() == cap {
                    return Err(GroupError::CapExceeded(cap));
                }
                order.push(y.clone());
                queue.push_back(y);
            }
        }
    }
    Ok(order)
}

/// A matrix up to nonzero scalars, normalized so its first nonzero entry is 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ProjectiveElement(Matrix);

impl ProjectiveElement {
    pub fn new(m: &Matrix) -> Self {
        let lead = m
            .data()
            .iter()
            .copied()
            .find(|&v| v != 0)
            .expect("zero matrix has no projective class");
        let inv = crate::linalg::inv_mod(lead, m.modulus()).expect("nonzero");
        Self(m.scale(inv as i64))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0 == Matrix::identity(self.0.modulus(), self.0.rows())
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::new(&(&self.0 * &other.0))
    }

    /// Order in the projective group.
    pub fn order(&self) -> usize {
        let mut acc = self.clone();
        let mut n = 1;
        while !acc.is_identity() {
            acc = acc.mul(self);
            n += 1;
        }
        n
    }
}

/// Distinct projective classes of `elements`, sorted.
pub fn projective_quotient(elements: &[Matrix]) -> Vec<ProjectiveElement> {
    let mut out: Vec<ProjectiveElement> = elements
        .iter()
        .map(ProjectiveElement::new)
        .collect::<HashSet<_>>()
        .into_iter()
        .collect();
    out.sort();
    out
}

pub fn is_scalar(m: &Matrix) -> bool {
    m.is_square() && *m == Matrix::scalar(m.modulus(), m.rows(), m.get(0, 0) as i64) && m.get(0, 0) != 0
}

/// Commutator `a⁻¹·b⁻¹·a·b`.
pub fn commutator(a: &Matrix, b: &Matrix) -> Result<Matrix, GroupError> {
    let (ai, bi) = (a.inverse()?, b.inverse()?);
    Ok(&(&(&ai * &bi) * a) * b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RelationReport {
    pub c_squared: bool,
    pub d_eighth: bool,
    pub c_commutes_with_d4: bool,
    pub cd_fifth: bool,
    pub commutator_cubed: bool,
}

impl RelationReport {
    pub fn all(&self) -> bool {
        self.c_squared
            && self.d_eighth
            && self.c_commutes_with_d4
            && self.cd_fifth
            && self.commutator_cubed
    }
}

/// Evaluate `C² = D⁸ = [C, D⁴] = (CD)⁵ = [C, D]³ = 1` as exact matrix identities.
pub fn check_relations(c: &Matrix, d: &Matrix) -> Result<RelationReport, GroupError> {
    let id = Matrix::identity(c.modulus(), c.rows());
    Ok(RelationReport {
        c_squared: c.pow(2) == id,
        d_eighth: d.pow(8) == id,
        c_commutes_with_d4: commutator(c, &d.pow(4))? == id,
        cd_fifth: (c * d).pow(5) == id,
        commutator_cubed: commutator(c, d)?.pow(3) == id,
    })
}

/// Image of a subspace under `x ↦ x·g`.
pub fn line_action(g: &Matrix, line: &Subspace) -> Subspace {
    line.transform(g)
}

/// Orbit of `s` under the generators, sorted.
pub fn orbit(g: &MatrixGroup, s: &Subspace) -> Vec<Subspace> {
    let mut seen = HashSet::from([s.clone()]);
    let mut queue = VecDeque::from([s.clone()]);
    while let Some(x) = queue.pop_front() {
        for gen in &g.generators {
            let y = line_action(gen, &x);
            if seen.insert(y.clone()) {
                queue.push_back(y);
            }
        }
    }
    let mut out: Vec<Subspace> = seen.into_iter().collect();
    out.sort();
    out
}

/// Projective elements of the materialized group whose projective order is `n`.
pub fn elements_of_projective_order(g: &MatrixGroup, n: usize) -> Result<Vec<ProjectiveElement>, GroupError> {
    Ok(projective_quotient(g.elements()?)
        .into_iter()
        .filter(|e| e.order() == n)
        .collect())
}

/// Lines fixed by `g`, by filtering every line of the space.
pub fn fixed_lines(g: &Matrix, space: &AmbientSpace) -> Vec<Subspace> {
    space
        .lines()
        .par_iter()
        .filter(|l| line_action(g, l) == **l)
        .cloned()
        .collect()
}

/// Lines lying inside a single eigenspace of `g`. Every such line is fixed;
/// when `g` has no invariant plane outside its eigenspaces this is all of
/// [`fixed_lines`].
pub fn eigenspace_lines(g: &Matrix) -> Vec<Subspace> {
    let p = g.modulus();
    let mut out = Vec::new();
    for lam in 1..p {
        let lam = crate::linalg::FieldElement::new(lam as i64, p).expect("valid");
        let e = g.eigenspace(lam).expect("square");
        if e.rows() < 2 {
            continue;
        }
        let eig = Subspace::canonicalize(&e);
        let inner = AmbientSpace::new(e.rows() - 1, p);
        out.extend(inner.lines().iter().map(|l| eig.embed(l)));
    }
    out.sort();
    out.dedup();
    out
}

/// Permutation induced by `g` on `domain`; `None` if `g` does not preserve it.
pub fn permutation_on(g: &Matrix, domain: &[Subspace]) -> Option<Vec<usize>> {
    let index: HashMap<&Subspace, usize> = domain.iter().enumerate().map(|(i, s)| (s, i)).collect();
    domain
        .iter()
        .map(|s| index.get(&line_action(g, s)).copied())
        .collect()
}

/// The basis `E_ij - E_ji` (i < j) of alternating n×n matrices.
pub fn alternating_basis(modulus: u8, n: usize) -> Vec<Matrix> {
    (0..n)
        .tuple_combinations()
        .map(|(i, j)| {
            Matrix::zeros(modulus, n, n)
                .with_entry(i, j, 1)
                .with_entry(j, i, -1)
        })
        .collect()
}

/// The basis `E_ij + E_ji` (i < j) and `E_ii` of symmetric n×n matrices.
pub fn symmetric_basis(modulus: u8, n: usize) -> Vec<Matrix> {
    (0..n)
        .flat_map(|i| (i..n).map(move |j| (i, j)))
        .map(|(i, j)| {
            Matrix::zeros(modulus, n, n)
                .with_entry(i, j, 1)
                .with_entry(j, i, 1)
        })
        .collect()
}

fn combine(basis: &[Matrix], coeffs: &[u8]) -> Matrix {
    let first = &basis[0];
    basis
        .iter()
        .zip(coeffs)
        .fold(Matrix::zeros(first.modulus(), first.rows(), first.cols()), |acc, (b, &c)| {
            &acc + &b.scale(c as i64)
        })
}

/// Solve a linear system whose unknowns are coefficients over `basis`.
/// `constraints(b)` returns the images of a basis element under the linear
/// constraint map, flattened.
fn solve_over_basis(basis: &[Matrix], constraints: impl Fn(&Matrix) -> Vec<u8>) -> Vec<Matrix> {
    if basis.is_empty() {
        return Vec::new();
    }
    let p = basis[0].modulus();
    let columns: Vec<Vec<u8>> = basis.iter().map(&constraints).collect();
    let n_eq = columns[0].len();
    if n_eq == 0 {
        return basis.to_vec();
    }
    let mut data = Vec::with_capacity(n_eq * basis.len());
    for e in 0..n_eq {
        data.extend(columns.iter().map(|c| c[e]));
    }
    let system = Matrix::from_data(p, n_eq, basis.len(), data).expect("valid");
    system
        .solve_homogeneous()
        .row_iter()
        .map(|coeffs| combine(basis, coeffs))
        .collect()
}

/// Coordinates of `m` in the span of `basis`, if it lies there.
pub fn coordinates_in(basis: &[Matrix], m: &Matrix) -> Option<Vec<u8>> {
    if basis.is_empty() {
        return m.is_zero().then(Vec::new);
    }
    let p = m.modulus();
    let k = basis.len();
    let len = m.data().len();
    // columns: -m, then the basis; look for a kernel vector (1, c_1, ..., c_k)
    let mut data = Vec::with_capacity(len * (k + 1));
    for e in 0..len {
        data.push((p - m.data()[e]) % p);
        data.extend(basis.iter().map(|b| b.data()[e]));
    }
    let system = Matrix::from_data(p, len, k + 1, data).expect("valid");
    let kernel = system.solve_homogeneous();
    if kernel.rows() == 0 {
        return None;
    }
    let (r, piv) = kernel.rref();
    (piv.first() == Some(&0)).then(|| r.row(0)[1..].to_vec())
}

/// Alternating Gram matrices `M` with `ℓ·M·ℓᵀ = 0` for every listed line.
pub fn forms_vanishing_on_lines(lines: &[Subspace], modulus: u8, n: usize) -> Vec<Matrix> {
    let basis = alternating_basis(modulus, n);
    solve_over_basis(&basis, |b| {
        lines
            .iter()
            .map(|l| {
                let pm = &(l.basis() * b) * &l.basis().transpose();
                // alternating: only the (0,1) entry of the 2x2 pairing is free
                pm.get(0, 1)
            })
            .collect()
    })
}

/// Forms preserved by a group up to a scalar multiplier on each generator:
/// `g·M·gᵀ = multiplier·M`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FormSpace {
    pub multipliers: Vec<u8>,
    pub basis: Vec<Matrix>,
}

impl FormSpace {
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn is_exact(&self) -> bool {
        self.multipliers.iter().all(|&m| m == 1)
    }

    pub fn contains(&self, m: &Matrix) -> bool {
        coordinates_in(&self.basis, m).is_some()
    }
}

fn semi_invariant_forms(g: &MatrixGroup, basis: Vec<Matrix>) -> Vec<FormSpace> {
    let p = g.modulus();
    let gens = g.generators();
    let mut out = Vec::new();
    for multipliers in gens.iter().map(|_| 1..p).multi_cartesian_product() {
        let solved = solve_over_basis(&basis, |b| {
            gens.iter()
                .zip(&multipliers)
                .flat_map(|(gen, &chi)| {
                    let image = &(gen * b) * &gen.transpose();
                    (&image - &b.scale(chi as i64)).data().to_vec()
                })
                .collect()
        });
        if !solved.is_empty() {
            out.push(FormSpace {
                multipliers,
                basis: solved,
            });
        }
    }
    out
}

/// Nonzero spaces of alternating forms preserved up to scalars, one per
/// multiplier pattern on the generators. For a group without generators this
/// is a single space of dimension n(n-1)/2.
pub fn invariant_alternating_forms(g: &MatrixGroup) -> Vec<FormSpace> {
    semi_invariant_forms(g, alternating_basis(g.modulus(), g.degree()))
}

/// As [`invariant_alternating_forms`], for symmetric matrices.
pub fn invariant_quadratic_forms(g: &MatrixGroup) -> Vec<FormSpace> {
    semi_invariant_forms(g, symmetric_basis(g.modulus(), g.degree()))
}

/// The exactly invariant part (all multipliers 1), possibly empty.
pub fn exact_space(spaces: &[FormSpace]) -> Vec<Matrix> {
    spaces
        .iter()
        .find(|s| s.is_exact())
        .map(|s| s.basis.clone())
        .unwrap_or_default()
}
