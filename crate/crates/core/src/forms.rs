//! Symplectic and orthogonal polarities, and the perp-system predicates.

use itertools::Itertools;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::Matrix;
use crate::projective::{gaussian_binomial, ProjectiveError, Subspace};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormError {
    #[error("form is degenerate")]
    DegenerateForm,
    #[error("Gram matrix is not alternating")]
    NotAlternating,
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("form and subspace have different dimensions")]
    DimensionMismatch,
    #[error("bound exponent or quotient is not integral for d={d}, r={r}, q={q}")]
    NonIntegral { d: u32, r: u32, q: u64 },
    #[error("quadric classification needs an even number of variables, got {0}")]
    OddVariables(usize),
    #[error(transparent)]
    Projective(#[from] ProjectiveError),
}

/// A reflexive bilinear form viewed through its Gram matrix: the polarity
/// sends a subspace `S` to `{x : S·G·xᵀ = 0}`.
pub trait Polarity {
    /// Gram matrix of the bilinear form defining the polarity.
    fn bilinear_gram(&self) -> &Matrix;

    fn is_nondegenerate(&self) -> bool;
}

/// Alternating form `x·M·yᵀ` with `Mᵀ = -M` and zero diagonal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct AlternatingForm {
    gram: Matrix,
    #[serde(skip)]
    nondegenerate: bool,
}

impl AlternatingForm {
    pub fn new(gram: Matrix) -> Result<Self, FormError> {
        if !gram.is_square() {
            return Err(FormError::NotAlternating);
        }
        let n = gram.rows();
        let alternating = gram.transpose() == -&gram && (0..n).all(|i| gram.get(i, i) == 0);
        if !alternating {
            return Err(FormError::NotAlternating);
        }
        let nondegenerate = gram.rank() == n;
        Ok(Self {
            gram,
            nondegenerate,
        })
    }

    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    pub fn dimension(&self) -> usize {
        self.gram.rows()
    }
}

impl Polarity for AlternatingForm {
    fn bilinear_gram(&self) -> &Matrix {
        &self.gram
    }

    fn is_nondegenerate(&self) -> bool {
        self.nondegenerate
    }
}

/// Quadratic form `Q(x) = x·S·xᵀ` stored by its symmetric matrix `S`.
/// In odd characteristic the polar form is `2·S`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct QuadraticForm {
    sym: Matrix,
    #[serde(skip)]
    polar: Matrix,
    #[serde(skip)]
    nondegenerate: bool,
}

impl QuadraticForm {
    pub fn new(sym: Matrix) -> Result<Self, FormError> {
        if !sym.is_square() || sym.transpose() != sym {
            return Err(FormError::NotSymmetric);
        }
        let polar = sym.scale(2);
        let nondegenerate = polar.rank() == sym.rows();
        Ok(Self {
            sym,
            polar,
            nondegenerate,
        })
    }

    pub fn sym(&self) -> &Matrix {
        &self.sym
    }

    pub fn dimension(&self) -> usize {
        self.sym.rows()
    }

    pub fn evaluate(&self, x: &[u8]) -> u8 {
        let y = self.sym.apply_row(x);
        let p = self.sym.modulus() as u32;
        (x.iter().zip(&y).map(|(&a, &b)| a as u32 * b as u32).sum::<u32>() % p) as u8
    }
}

impl Polarity for QuadraticForm {
    fn bilinear_gram(&self) -> &Matrix {
        &self.polar
    }

    fn is_nondegenerate(&self) -> bool {
        self.nondegenerate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum QuadricType {
    Hyperbolic,
    Elliptic,
    Degenerate,
}

fn check_dim(s: &Subspace, f: &impl Polarity) -> Result<(), FormError> {
    if s.basis().cols() != f.bilinear_gram().rows() || s.modulus() != f.bilinear_gram().modulus() {
        return Err(FormError::DimensionMismatch);
    }
    Ok(())
}

/// The polar subspace `{x : B·G·xᵀ = 0}` where `B` is the basis of `s`.
pub fn perp(s: &Subspace, f: &impl Polarity) -> Result<Subspace, FormError> {
    check_dim(s, f)?;
    if !f.is_nondegenerate() {
        return Err(FormError::DegenerateForm);
    }
    let constraints = s.basis() * f.bilinear_gram();
    Ok(Subspace::canonicalize(&constraints.solve_homogeneous()))
}

/// `B·G·Cᵀ` for the bases of `a` and `b`.
pub fn pairing_matrix(a: &Subspace, b: &Subspace, f: &impl Polarity) -> Result<Matrix, FormError> {
    check_dim(a, f)?;
    check_dim(b, f)?;
    Ok(&(a.basis() * f.bilinear_gram()) * &b.basis().transpose())
}

pub fn is_totally_isotropic(s: &Subspace, f: &impl Polarity) -> Result<bool, FormError> {
    Ok(pairing_matrix(s, s, f)?.is_zero())
}

/// Two subspaces of equal dimension are opposite when their pairing matrix is
/// invertible, i.e. `perp(a) ∩ b` is empty. For `a = b` this is
/// non-singularity.
pub fn are_opposite(a: &Subspace, b: &Subspace, f: &impl Polarity) -> Result<bool, FormError> {
    if !f.is_nondegenerate() {
        return Err(FormError::DegenerateForm);
    }
    if a.vdim() != b.vdim() {
        return Ok(false);
    }
    Ok(pairing_matrix(a, b, f)?.is_invertible())
}

pub fn is_nonsingular(s: &Subspace, f: &impl Polarity) -> Result<bool, FormError> {
    are_opposite(s, s, f)
}

/// Upper bound on the size of a perp-system of `r`-spaces in PG(d, q):
/// `q^((d-2r-1)/2) · (q^((d+1)/2) + 1) / (q^((d-2r-1)/2) + 1)`.
pub fn perp_bound(d: u32, r: u32, q: u64) -> Result<u64, FormError> {
    let err = FormError::NonIntegral { d, r, q };
    let e1 = d as i64 - 2 * r as i64 - 1;
    if e1 < 0 || e1 % 2 != 0 || (d + 1) % 2 != 0 {
        return Err(err);
    }
    let a = q.checked_pow((e1 / 2) as u32).ok_or(err.clone())?;
    let b = q.checked_pow((d + 1) / 2).ok_or(err.clone())? + 1;
    let num = a.checked_mul(b).ok_or(err.clone())?;
    let den = a + 1;
    if num % den != 0 {
        return Err(err);
    }
    Ok(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairFailure {
    /// Self-pairing is degenerate (`i == j`).
    Singular,
    NotOpposite,
    NotDisjoint,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FailingPair {
    pub i: usize,
    pub j: usize,
    pub failure: PairFailure,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PerpSystemReport {
    pub line_count: usize,
    pub bound: Option<u64>,
    pub all_nonsingular: bool,
    pub pairwise_opposite: bool,
    pub pairwise_disjoint: bool,
    pub is_partial_perp_system: bool,
    pub is_maximal: bool,
    pub failing_pairs: Vec<FailingPair>,
}

/// Check every perp-system predicate on `lines`, recording all failures.
///
/// A degenerate form makes every pair fail as not opposite.
pub fn verify_perp_system(lines: &[Subspace], f: &impl Polarity) -> PerpSystemReport {
    let mut failing = Vec::new();
    let degenerate = !f.is_nondegenerate();
    let grams: Vec<Option<Matrix>> = lines
        .iter()
        .map(|l| check_dim(l, f).ok().map(|_| l.basis() * f.bilinear_gram()))
        .collect();
    let opposite = |i: usize, j: usize| -> bool {
        if degenerate || lines[i].vdim() != lines[j].vdim() {
            return false;
        }
        match &grams[i] {
            Some(bg) => (bg * &lines[j].basis().transpose()).is_invertible(),
            None => false,
        }
    };
    for i in 0..lines.len() {
        if !opposite(i, i) {
            failing.push(FailingPair {
                i,
                j: i,
                failure: PairFailure::Singular,
            });
        }
    }
    let all_nonsingular = failing.is_empty();
    let mut pairwise_opposite = true;
    let mut pairwise_disjoint = true;
    for (i, j) in (0..lines.len()).tuple_combinations() {
        if !opposite(i, j) {
            pairwise_opposite = false;
            failing.push(FailingPair {
                i,
                j,
                failure: PairFailure::NotOpposite,
            });
        }
        if !lines[i].is_disjoint(&lines[j]).unwrap_or(false) {
            pairwise_disjoint = false;
            failing.push(FailingPair {
                i,
                j,
                failure: PairFailure::NotDisjoint,
            });
        }
    }
    let bound = lines.first().and_then(|l| {
        perp_bound(l.ambient_dim() as u32, l.proj_dim().max(0) as u32, l.modulus() as u64).ok()
    });
    let is_partial = all_nonsingular && pairwise_opposite && pairwise_disjoint;
    PerpSystemReport {
        line_count: lines.len(),
        bound,
        all_nonsingular,
        pairwise_opposite,
        pairwise_disjoint,
        is_partial_perp_system: is_partial,
        is_maximal: is_partial && bound == Some(lines.len() as u64),
        failing_pairs: failing,
    }
}

/// Number of singular points of a nondegenerate quadric in PG(2m-1, q).
pub fn quadric_point_count(kind: QuadricType, n: usize, q: u64) -> Option<u64> {
    let m = (n / 2) as u32;
    let qm = q.pow(m);
    let qm1 = q.pow(m - 1);
    match kind {
        QuadricType::Hyperbolic => Some((qm1 + 1) * (qm - 1) / (q - 1)),
        QuadricType::Elliptic => Some((qm1 - 1) * (qm + 1) / (q - 1)),
        QuadricType::Degenerate => None,
    }
}

/// Count the projective points with `Q(x) = 0` and name the quadric.
pub fn classify_quadric(qf: &QuadraticForm) -> Result<(QuadricType, u64), FormError> {
    let n = qf.dimension();
    if n % 2 != 0 {
        return Err(FormError::OddVariables(n));
    }
    let q = qf.sym().modulus();
    // points as normalized vectors: first nonzero coordinate is 1
    let count = (0..n)
        .map(|_| 0..q)
        .multi_cartesian_product()
        .filter(|v| v.iter().find(|&&x| x != 0) == Some(&1))
        .filter(|v| qf.evaluate(v) == 0)
        .count() as u64;
    let kind = if !qf.is_nondegenerate() {
        QuadricType::Degenerate
    } else if Some(count) == quadric_point_count(QuadricType::Hyperbolic, n, q as u64) {
        QuadricType::Hyperbolic
    } else {
        debug_assert_eq!(
            Some(count),
            quadric_point_count(QuadricType::Elliptic, n, q as u64)
        );
        QuadricType::Elliptic
    };
    Ok((kind, count))
}

/// Sanity helper: total points of PG(n-1, q).
pub fn projective_point_total(n: usize, q: u64) -> u64 {
    gaussian_binomial(n as u32, 1, q)
}

/// The skew matrix `[[0, 1], [-1, 0]]` over GF(3).
pub fn x_block() -> Matrix {
    crate::matrix![3; [0, 1], [2, 0]]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Lemma1Violation {
    NotInvertible(&'static str),
    BlockSumZero,
    /// The pairing of the named seed line with `(I I I)` is singular.
    OppositeToDiagonal(&'static str),
    /// Every pairing condition holds but the Gram matrix has rank below 6.
    DegenerateGram,
}

/// Outcome of assembling a block Gram matrix for the four seed lines.
#[derive(Debug, Clone)]
pub struct Lemma1Outcome {
    pub form: Result<AlternatingForm, Vec<Lemma1Violation>>,
    /// Whether the shortcut sufficient condition `A+B-X, B+C-X, C+A-X`
    /// invertible holds; it coincides with the exact pairing condition only
    /// for some sign patterns.
    pub shortcut_condition_holds: bool,
}

/// Assemble `[[s1 X, A, B], [-Aᵀ, s2 X, C], [-Bᵀ, -Cᵀ, s3 X]]` and check the
/// conditions under which the four seed lines form a partial perp-system.
///
/// Each condition is the invertibility of a pairing block:
/// `ℓ1,ℓ2`: `A`; `ℓ1,ℓ3`: `B`; `ℓ2,ℓ3`: `C`; `ℓ4,ℓ4`: sum of all blocks;
/// `ℓ1,ℓ4`: `s1 X + A + B`; `ℓ2,ℓ4`: `s2 X - Aᵀ + C`; `ℓ3,ℓ4`: `s3 X - Bᵀ - Cᵀ`.
pub fn lemma1_gram_family(a: &Matrix, b: &Matrix, c: &Matrix, signs: [i8; 3]) -> Lemma1Outcome {
    let x = x_block();
    let sx: Vec<Matrix> = signs.iter().map(|&s| x.scale(s as i64)).collect();
    let (at, bt, ct) = (a.transpose(), b.transpose(), c.transpose());
    let (nat, nbt, nct) = (-&at, -&bt, -&ct);
    let gram = Matrix::from_blocks(&[
        vec![&sx[0], a, b],
        vec![&nat, &sx[1], c],
        vec![&nbt, &nct, &sx[2]],
    ])
    .expect("2x2 blocks");

    let mut violations = Vec::new();
    for (name, m) in [("A", a), ("B", b), ("C", c)] {
        if !m.is_invertible() {
            violations.push(Lemma1Violation::NotInvertible(name));
        }
    }
    let block_sum = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .map(|(i, j)| gram.block(2 * i, 2 * j, 2, 2))
        .fold(Matrix::zeros(3, 2, 2), |acc, m| &acc + &m);
    if block_sum.is_zero() {
        violations.push(Lemma1Violation::BlockSumZero);
    }
    let with_diagonal = [
        ("l1", &(&sx[0] + a) + b),
        ("l2", &(&sx[1] - &at) + c),
        ("l3", &(&sx[2] - &bt) - &ct),
    ];
    for (name, m) in &with_diagonal {
        if !m.is_invertible() {
            violations.push(Lemma1Violation::OppositeToDiagonal(name));
        }
    }
    if violations.is_empty() && !gram.is_invertible() {
        violations.push(Lemma1Violation::DegenerateGram);
    }
    let shortcut_condition_holds = [(a, b), (b, c), (c, a)]
        .iter()
        .all(|(u, v)| (&(*u + *v) - &x).is_invertible());

    let form = if violations.is_empty() {
        Ok(AlternatingForm::new(gram).expect("block construction is alternating"))
    } else {
        Err(violations)
    };
    Lemma1Outcome {
        form,
        shortcut_condition_holds,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix;

    fn line(rows: Vec<Vec<i64>>) -> Subspace {
        Subspace::canonicalize(&Matrix::from_rows(3, rows).unwrap())
    }

    fn m0() -> AlternatingForm {
        let o = Matrix::zeros(3, 2, 2);
        let x = x_block();
        AlternatingForm::new(
            Matrix::from_blocks(&[vec![&o, &x, &x], vec![&x, &o, &x], vec![&x, &x, &o]]).unwrap(),
        )
        .unwrap()
    }

    fn l1() -> Subspace {
        line(vec![vec![1, 0, 0, 0, 0, 0], vec![0, 1, 0, 0, 0, 0]])
    }

    fn l2() -> Subspace {
        line(vec![vec![0, 0, 1, 0, 0, 0], vec![0, 0, 0, 1, 0, 0]])
    }

    fn l4() -> Subspace {
        line(vec![vec![1, 0, 1, 0, 1, 0], vec![0, 1, 0, 1, 0, 1]])
    }

    #[test]
    fn perp_of_seed_lines() {
        let p1 = perp(&l1(), &m0()).unwrap();
        // (I O O / O I -I)
        let expected = line(vec![
            vec![1, 0, 0, 0, 0, 0],
            vec![0, 1, 0, 0, 0, 0],
            vec![0, 0, 1, 0, 2, 0],
            vec![0, 0, 0, 1, 0, 2],
        ]);
        assert_eq!(p1, expected);
        let p4 = perp(&l4(), &m0()).unwrap();
        let expected = line(vec![
            vec![1, 0, 0, 0, 2, 0],
            vec![0, 1, 0, 0, 0, 2],
            vec![0, 0, 1, 0, 2, 0],
            vec![0, 0, 0, 1, 0, 2],
        ]);
        assert_eq!(p4, expected);
        assert!(perp(&Subspace::full(5, 3), &m0()).unwrap().is_empty());
    }

    #[test]
    fn degenerate_form_rejected() {
        let zero = AlternatingForm::new(Matrix::zeros(3, 6, 6)).unwrap();
        assert_eq!(perp(&l1(), &zero), Err(FormError::DegenerateForm));
        assert_eq!(are_opposite(&l1(), &l2(), &zero), Err(FormError::DegenerateForm));
    }

    #[test]
    fn isotropy() {
        assert!(is_totally_isotropic(&l1(), &m0()).unwrap());
        assert!(is_totally_isotropic(&l4(), &m0()).unwrap());
        // any Gram with diagonal blocks ±X pairs ℓ1 with itself to ±X
        let x = x_block();
        let nx = -&x;
        let o = Matrix::zeros(3, 2, 2);
        let gram =
            Matrix::from_blocks(&[vec![&nx, &o, &o], vec![&o, &x, &o], vec![&o, &o, &x]]).unwrap();
        let f = AlternatingForm::new(gram).unwrap();
        assert!(!is_totally_isotropic(&l1(), &f).unwrap());
    }

    #[test]
    fn opposite_examples() {
        assert!(!are_opposite(&l1(), &l1(), &m0()).unwrap());
        let i2 = Matrix::identity(3, 2);
        let a = i2.clone();
        let f = AlternatingForm::new(
            Matrix::from_blocks(&[
                vec![&x_block(), &a, &Matrix::zeros(3, 2, 2)],
                vec![&-&a.transpose(), &-&x_block(), &Matrix::zeros(3, 2, 2)],
                vec![&Matrix::zeros(3, 2, 2), &Matrix::zeros(3, 2, 2), &x_block()],
            ])
            .unwrap(),
        )
        .unwrap();
        assert!(are_opposite(&l1(), &l2(), &f).unwrap());
        assert!(are_opposite(&l2(), &l1(), &f).unwrap());
    }

    #[test]
    fn bounds() {
        assert_eq!(perp_bound(5, 1, 3), Ok(21));
        assert_eq!(perp_bound(5, 1, 2), Ok(6));
        assert_eq!(perp_bound(7, 3, 3), Ok(41));
        assert!(matches!(perp_bound(4, 1, 3), Err(FormError::NonIntegral { .. })));
        assert!(matches!(perp_bound(5, 3, 3), Err(FormError::NonIntegral { .. })));
    }

    #[test]
    fn seed_lines_are_singular_for_m0() {
        let lines = vec![l1(), l2(), l4()];
        let rep = verify_perp_system(&lines, &m0());
        assert!(!rep.all_nonsingular);
        assert!(!rep.is_partial_perp_system);
        assert!(rep.pairwise_disjoint);
        assert_eq!(rep.bound, Some(21));
        assert!(rep
            .failing_pairs
            .iter()
            .any(|f| f.failure == PairFailure::Singular));
    }

    #[test]
    fn quadric_classification() {
        // x1x2 + x3x4 + x5x6 polarized: S has 2 (= 1/2) off the diagonal pairs
        let mut s = Matrix::zeros(3, 6, 6);
        for k in 0..3 {
            s = s.with_entry(2 * k, 2 * k + 1, 2).with_entry(2 * k + 1, 2 * k, 2);
        }
        let qf = QuadraticForm::new(s).unwrap();
        assert_eq!(qf.evaluate(&[1, 1, 0, 0, 0, 0]), 1);
        assert_eq!(classify_quadric(&qf).unwrap(), (QuadricType::Hyperbolic, 130));
        // x1² + x2² + ... + x6²: discriminant 1, and -1 is a non-square mod 3 so
        // (-1)^3·1 is a non-square: elliptic
        let qf = QuadraticForm::new(Matrix::identity(3, 6)).unwrap();
        assert_eq!(classify_quadric(&qf).unwrap(), (QuadricType::Elliptic, 112));
        let zero = QuadraticForm::new(Matrix::zeros(3, 6, 6)).unwrap();
        assert_eq!(classify_quadric(&zero).unwrap().0, QuadricType::Degenerate);
        assert_eq!(projective_point_total(6, 3), 364);
        assert_eq!(
            QuadraticForm::new(matrix![3; [0, 1], [0, 0]]),
            Err(FormError::NotSymmetric)
        );
    }

    #[test]
    fn lemma1_all_x_fails() {
        let x = x_block();
        let out = lemma1_gram_family(&x, &x, &x, [1, 1, 1]);
        let v = out.form.unwrap_err();
        assert!(v.contains(&Lemma1Violation::BlockSumZero));
        assert!(v.contains(&Lemma1Violation::OppositeToDiagonal("l1")));
    }

    #[test]
    fn lemma1_singular_a() {
        let a = matrix![3; [1, 1], [1, 1]];
        let i2 = Matrix::identity(3, 2);
        let out = lemma1_gram_family(&a, &i2, &i2, [1, 1, 1]);
        assert!(out
            .form
            .unwrap_err()
            .contains(&Lemma1Violation::NotInvertible("A")));
    }
}
