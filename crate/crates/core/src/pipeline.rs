//! The construction F₄ → ℒ → F₅ → F₆ → F₁₅ → ℳ of the 21-line perp-system,
//! the analysis of its complement, the inverse construction of F₅ from F₆,
//! and the search for orthogonal polarities making ℳ a perp-system.

use std::collections::{HashMap, HashSet};
use std::time::Instant;

use indexmap::IndexMap;
use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::forms::{
    self, classify_quadric, is_totally_isotropic, perp, verify_perp_system, AlternatingForm,
    FormError, PerpSystemReport, QuadraticForm, QuadricType,
};
use crate::geometries::{spreads, synthemes, Syntheme};
use crate::groups::{
    self, fixed_lines, invariant_quadratic_forms, line_action, GroupError, MatrixGroup,
    ProjectiveElement,
};
use crate::linalg::Matrix;
use crate::matrix;
use crate::projective::{point_code, AmbientSpace, ProjectiveError, Subspace};

/// The field order used throughout the construction.
pub const Q: u8 = 3;

/// Cap on group closures computed by the pipeline.
pub const GROUP_CAP: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PipelineError {
    #[error("line {0:?} is not in the 24-line set L")]
    NotInL(Subspace),
    #[error("seed index {0} out of range 0..24")]
    SeedOutOfRange(usize),
    #[error("invariant violated: {0}")]
    InvariantViolated(String),
    #[error("solid {pair:?} has {count} candidate lines instead of exactly one")]
    UniquenessViolated { pair: (usize, usize), count: usize },
    #[error("{qualifying} syntheme spreads qualify; expected exactly one")]
    RecoveryAmbiguous { qualifying: usize },
    #[error(
        "no witness found (hyperbolic: {found_hyperbolic}, elliptic: {found_elliptic}) \
         after {invariant_candidates} invariant candidates and {random_trials} random trials"
    )]
    WitnessNotFound {
        found_hyperbolic: bool,
        found_elliptic: bool,
        invariant_candidates: u64,
        random_trials: u64,
    },
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Projective(#[from] ProjectiveError),
}

pub type Result<T> = std::result::Result<T, PipelineError>;

fn violated(msg: impl Into<String>) -> PipelineError {
    PipelineError::InvariantViolated(msg.into())
}

/// An ordered, duplicate-free list of lines with a name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineSet {
    label: String,
    lines: Vec<Subspace>,
}

impl LineSet {
    pub fn new(label: impl Into<String>, lines: Vec<Subspace>) -> Result<Self> {
        let label = label.into();
        let mut seen = HashSet::new();
        for l in &lines {
            if l.vdim() != 2 {
                return Err(violated(format!("{label}: {l:?} is not a line")));
            }
            if !seen.insert(l) {
                return Err(violated(format!("{label}: duplicate line {l:?}")));
            }
        }
        Ok(Self { label, lines })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn lines(&self) -> &[Subspace] {
        &self.lines
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn contains(&self, l: &Subspace) -> bool {
        self.lines.contains(l)
    }

    /// Equality as unordered sets.
    pub fn same_set(&self, other: &[Subspace]) -> bool {
        let a: HashSet<&Subspace> = self.lines.iter().collect();
        let b: HashSet<&Subspace> = other.iter().collect();
        a == b && self.len() == other.len()
    }

    pub fn image(&self, g: &Matrix) -> Vec<Subspace> {
        self.lines.iter().map(|l| line_action(g, l)).collect()
    }

    pub fn pairwise_disjoint(&self) -> bool {
        self.lines
            .iter()
            .tuple_combinations()
            .all(|(a, b)| a.is_disjoint(b).unwrap_or(false))
    }
}

impl Serialize for LineSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.lines.iter().map(Subspace::basis))
    }
}

pub fn identity2() -> Matrix {
    Matrix::identity(Q, 2)
}

pub fn zero2() -> Matrix {
    Matrix::zeros(Q, 2, 2)
}

/// The line with block representation `(A B C)`.
pub fn block_line(a: &Matrix, b: &Matrix, c: &Matrix) -> Subspace {
    Subspace::canonicalize(&Matrix::from_blocks(&[vec![a, b, c]]).expect("2x2 blocks"))
}

/// `(R, S)` with the line equal to `(I R S)`, when its first block is invertible.
pub fn block_form(line: &Subspace) -> Option<(Matrix, Matrix)> {
    let b = line.basis();
    if b.rows() != 2 || b.cols() != 6 {
        return None;
    }
    let first = b.block(0, 0, 2, 2);
    let inv = first.inverse().ok()?;
    let normal = &inv * b;
    Some((normal.block(0, 2, 2, 2), normal.block(0, 4, 2, 2)))
}

/// Standard seed blocks: `R = [[2,0],[2,2]]`, `S = [[2,2],[0,2]]`.
pub fn standard_rs() -> (Matrix, Matrix) {
    (matrix![3; [2, 0], [2, 2]], matrix![3; [2, 2], [0, 2]])
}

pub fn standard_seed() -> Subspace {
    let (r, s) = standard_rs();
    block_line(&identity2(), &r, &s)
}

/// `(I O O), (O I O), (O O I), (I I I)`.
pub fn f4() -> LineSet {
    let (i, o) = (identity2(), zero2());
    LineSet::new(
        "F4",
        vec![
            block_line(&i, &o, &o),
            block_line(&o, &i, &o),
            block_line(&o, &o, &i),
            block_line(&i, &i, &i),
        ],
    )
    .expect("four distinct lines")
}

/// The block Gram matrix `(O X X / X O X / X X O)`.
pub fn m0() -> AlternatingForm {
    let (o, x) = (zero2(), forms::x_block());
    AlternatingForm::new(
        Matrix::from_blocks(&[vec![&o, &x, &x], vec![&x, &o, &x], vec![&x, &x, &o]]).expect("2x2"),
    )
    .expect("alternating")
}

/// All 48 elements of GL(2,3), in lexicographic order.
pub fn gl23() -> Vec<Matrix> {
    (0..4)
        .map(|_| 0..Q)
        .multi_cartesian_product()
        .map(|v| Matrix::from_data(Q, 2, 2, v).expect("valid"))
        .filter(Matrix::is_invertible)
        .collect()
}

/// The elements `Y` of GL(2,3) with `Y - I` invertible and `Y + I` of rank 1.
pub fn eight_matrices() -> Vec<Matrix> {
    let i = identity2();
    gl23()
        .into_iter()
        .filter(|y| (y - &i).is_invertible() && (y + &i).rank() == 1)
        .collect()
}

/// Elements `Z` of `class` with `rank(Y + Z) = 1`.
pub fn rank_one_partners(y: &Matrix, class: &[Matrix]) -> Vec<Matrix> {
    class.iter().filter(|z| (y + *z).rank() == 1).cloned().collect()
}

/// Pairs `(R, S)` from the eight-element class with `rank(R + S) = 1`.
pub fn admissible_pairs() -> Vec<(Matrix, Matrix)> {
    let eight = eight_matrices();
    eight
        .iter()
        .flat_map(|r| {
            rank_one_partners(r, &eight)
                .into_iter()
                .map(move |s| (r.clone(), s))
        })
        .collect()
}

/// The solids spanned by pairs of `lines`, in lexicographic pair order.
pub fn pair_spans(lines: &[Subspace]) -> Vec<((usize, usize), Subspace)> {
    (0..lines.len())
        .tuple_combinations()
        .map(|(i, j)| ((i, j), lines[i].span(&lines[j]).expect("same ambient")))
        .collect()
}

/// Context for testing membership in ℒ: the six solids of pairs of F₄ and the
/// polars of the four seed lines under M₀.
pub struct LFilter {
    form: AlternatingForm,
    solids: Vec<Subspace>,
    polars: Vec<Subspace>,
}

impl LFilter {
    pub fn new() -> Self {
        let form = m0();
        let seeds = f4();
        let solids = pair_spans(seeds.lines()).into_iter().map(|(_, s)| s).collect();
        let polars = seeds
            .lines()
            .iter()
            .map(|l| perp(l, &form).expect("M0 is nondegenerate"))
            .collect();
        Self {
            form,
            solids,
            polars,
        }
    }

    /// Totally isotropic for M₀, disjoint from every pair-solid of F₄, and
    /// meeting each `ℓ^⊥` (ℓ ∈ F₄) in exactly one point.
    pub fn accepts(&self, line: &Subspace) -> bool {
        is_totally_isotropic(line, &self.form).unwrap_or(false)
            && self
                .solids
                .iter()
                .all(|s| s.is_disjoint(line).unwrap_or(false))
            && self
                .polars
                .iter()
                .all(|p| p.meet(line).map(|m| m.vdim() == 1).unwrap_or(false))
    }
}

impl Default for LFilter {
    fn default() -> Self {
        Self::new()
    }
}

/// ℒ from the algebraic description: candidates `(I R S)` over the admissible
/// pairs, kept when `R + S + I` has rank 1 and the geometric conditions hold.
pub fn compute_l() -> Result<LineSet> {
    let filter = LFilter::new();
    let i = identity2();
    let mut lines: Vec<Subspace> = admissible_pairs()
        .into_iter()
        .filter(|(r, s)| (&(r + s) + &i).rank() == 1)
        .map(|(r, s)| block_line(&i, &r, &s))
        .filter(|l| filter.accepts(l))
        .collect();
    lines.sort();
    if lines.len() != 24 {
        return Err(violated(format!("|L| = {} (expected 24)", lines.len())));
    }
    for l in &lines {
        let (r, s) = block_form(l).ok_or_else(|| violated("L line without (I R S) form"))?;
        let shape_ok = r.is_invertible()
            && s.is_invertible()
            && (&r - &i).is_invertible()
            && (&s - &i).is_invertible()
            && (&r + &s).rank() == 1
            && (&r + &i).rank() == 1
            && (&s + &i).rank() == 1
            && (&(&r + &s) + &i).rank() == 1;
        if !shape_ok {
            return Err(violated(format!("L line {l:?} has the wrong block shape")));
        }
    }
    LineSet::new("L", lines)
}

/// ℒ by filtering every line of PG(5,3) against the geometric conditions.
pub fn compute_l_geometric(space: &AmbientSpace) -> LineSet {
    let filter = LFilter::new();
    let lines: Vec<Subspace> = space
        .lines()
        .par_iter()
        .filter(|l| filter.accepts(l))
        .cloned()
        .collect();
    LineSet::new("L", lines).expect("filtered lines are distinct")
}

/// The 24 admissible seeds: the standard `(I R S)` first, then the rest of ℒ
/// in canonical order.
pub fn seed_lines() -> Result<Vec<Subspace>> {
    let l = compute_l()?;
    let std_seed = standard_seed();
    if !l.contains(&std_seed) {
        return Err(PipelineError::NotInL(std_seed));
    }
    let mut out = vec![std_seed.clone()];
    out.extend(l.lines().iter().filter(|x| **x != std_seed).cloned());
    Ok(out)
}

/// `diag(E, E, E)`.
pub fn block_scalar(e: &Matrix) -> Matrix {
    let o = zero2();
    Matrix::from_blocks(&[vec![e, &o, &o], vec![&o, e, &o], vec![&o, &o, e]]).expect("2x2")
}

/// The element-wise stabilizer H of F₄ in GL(6,3), materialized.
pub fn h_group() -> MatrixGroup {
    let gens = vec![
        matrix![3; [1, 1], [0, 1]],
        matrix![3; [0, 1], [2, 0]],
        matrix![3; [2, 0], [0, 1]],
    ];
    MatrixGroup::new(gens.iter().map(block_scalar).collect())
        .and_then(|g| g.materialize(GROUP_CAP))
        .expect("H is a group of order 48")
}

/// An element of H sending `from` to `to`, the first in canonical order.
pub fn h_element_mapping(from: &Subspace, to: &Subspace) -> Option<Matrix> {
    let h = h_group();
    let mut els = h.elements().ok()?.to_vec();
    els.sort();
    els.into_iter().find(|g| line_action(g, from) == *to)
}

/// F₄ augmented by a line of ℒ.
pub fn f5(seed: &Subspace) -> Result<LineSet> {
    if !LFilter::new().accepts(seed) {
        return Err(PipelineError::NotInL(seed.clone()));
    }
    let mut lines = f4().lines().to_vec();
    lines.push(seed.clone());
    LineSet::new("F5", lines)
}

pub fn f5_from_blocks(r: &Matrix, s: &Matrix) -> Result<LineSet> {
    f5(&block_line(&identity2(), r, s))
}

/// `C` with anti-diagonal blocks `C₀ = [[2,1],[0,1]]`.
pub fn stabilizer_c() -> Matrix {
    let c0 = matrix![3; [2, 1], [0, 1]];
    let o = zero2();
    Matrix::from_blocks(&[vec![&o, &o, &c0], vec![&o, &c0, &o], vec![&c0, &o, &o]]).expect("2x2")
}

pub fn stabilizer_d() -> Matrix {
    matrix![3;
        [1, 1, 0, 0, 0, 0],
        [1, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 2, 2],
        [0, 0, 0, 0, 0, 1],
        [0, 1, 0, 1, 0, 1],
        [1, 0, 1, 0, 1, 0]
    ]
}

/// ⟨C, D⟩ for the standard seed, materialized and checked: order 240, all
/// five relations, and both generators preserve F₅.
pub fn f5_stabilizer() -> Result<MatrixGroup> {
    let (c, d) = (stabilizer_c(), stabilizer_d());
    let rel = groups::check_relations(&c, &d)?;
    if !rel.all() {
        return Err(violated(format!("relations fail: {rel:?}")));
    }
    let g = MatrixGroup::new(vec![c, d])?.materialize(GROUP_CAP)?;
    if g.order()? != 240 {
        return Err(violated(format!("|<C,D>| = {}", g.order()?)));
    }
    let f5 = f5(&standard_seed())?;
    check_stabilizes(&g, &f5)?;
    Ok(g)
}

pub fn check_stabilizes(g: &MatrixGroup, set: &LineSet) -> Result<()> {
    for gen in g.generators() {
        if !set.same_set(&set.image(gen)) {
            return Err(violated(format!("generator does not preserve {}", set.label())));
        }
    }
    Ok(())
}

/// Lines fixed by some element of projective order 5, in the order the
/// elements are listed.
pub fn f6(stabilizer: &MatrixGroup, space: &AmbientSpace) -> Result<(LineSet, Vec<FixedLineRecord>)> {
    let fives = groups::elements_of_projective_order(stabilizer, 5)?;
    let records: Vec<FixedLineRecord> = fives
        .iter()
        .map(|e| FixedLineRecord {
            element: e.clone(),
            fixed: fixed_lines(e.matrix(), space),
        })
        .collect();
    let mut lines: Vec<Subspace> = Vec::new();
    for r in &records {
        if r.fixed.len() != 1 {
            return Err(violated(format!(
                "a 5-element fixes {} lines instead of 1",
                r.fixed.len()
            )));
        }
        if !lines.contains(&r.fixed[0]) {
            lines.push(r.fixed[0].clone());
        }
    }
    if lines.len() != 6 {
        return Err(violated(format!("|F6| = {}", lines.len())));
    }
    let set = LineSet::new("F6", lines)?;
    if !set.pairwise_disjoint() {
        return Err(violated("F6 is not pairwise disjoint"));
    }
    Ok((set, records))
}

#[derive(Debug, Clone)]
pub struct FixedLineRecord {
    pub element: ProjectiveElement,
    pub fixed: Vec<Subspace>,
}

/// The Gram matrix for the standard seed, blocks
/// `A = [[2,2],[0,0]]`, `B = [[0,0],[1,1]]`, `C = [[0,0],[1,0]]`.
pub fn m15_gram() -> Matrix {
    matrix![3;
        [0, 0, 2, 2, 0, 0],
        [0, 0, 0, 0, 1, 1],
        [1, 0, 0, 0, 0, 0],
        [1, 0, 0, 0, 1, 0],
        [0, 2, 0, 2, 0, 0],
        [0, 2, 0, 0, 0, 0]
    ]
}

/// Upper blocks `(A, B, C)` of a Gram matrix with zero diagonal blocks.
pub fn upper_blocks(gram: &Matrix) -> (Matrix, Matrix, Matrix) {
    (gram.block(0, 2, 2, 2), gram.block(0, 4, 2, 2), gram.block(2, 4, 2, 2))
}

/// Whether `gram` has the shape `(O A B / -Aᵀ O C / -Bᵀ -Cᵀ O)` with
/// `A + B + C` and `A·Rᵀ + B·Sᵀ + R·C·Sᵀ` symmetric.
pub fn has_f5_block_shape(gram: &Matrix, r: &Matrix, s: &Matrix) -> bool {
    let diag_zero = (0..3).all(|k| gram.block(2 * k, 2 * k, 2, 2).is_zero());
    let (a, b, c) = upper_blocks(gram);
    let lower_ok = gram.block(2, 0, 2, 2) == -&a.transpose()
        && gram.block(4, 0, 2, 2) == -&b.transpose()
        && gram.block(4, 2, 2, 2) == -&c.transpose();
    let sum = &(&a + &b) + &c;
    let mixed = &(&(&a * &r.transpose()) + &(&b * &s.transpose())) + &(&(r * &c) * &s.transpose());
    diag_zero && lower_ok && sum.transpose() == sum && mixed.transpose() == mixed
}

/// The standard Gram matrix, checked for the block conditions relative to the
/// standard seed.
pub fn m15() -> Result<AlternatingForm> {
    let form = AlternatingForm::new(m15_gram())?;
    let (r, s) = standard_rs();
    if !has_f5_block_shape(form.gram(), &r, &s) {
        return Err(violated("M15 block conditions fail"));
    }
    if !forms::Polarity::is_nondegenerate(&form) {
        return Err(violated("M15 is degenerate"));
    }
    Ok(form)
}

/// Transport a form along `x ↦ x·h`: `h⁻¹·M·h⁻ᵀ`.
pub fn transport_form(gram: &Matrix, h: &Matrix) -> Result<Matrix> {
    let hi = h.inverse().map_err(GroupError::from)?;
    Ok(&(&hi * gram) * &hi.transpose())
}

#[derive(Debug, Clone, Serialize)]
pub struct F15Entry {
    pub pair: (usize, usize),
    pub candidates: usize,
}

/// For every solid spanned by two lines of F₆, its unique line that is
/// opposite to all of F₆ and disjoint from the other fourteen solids.
pub fn f15(f6: &LineSet, form: &AlternatingForm) -> Result<(LineSet, Vec<F15Entry>)> {
    if f6.len() != 6 {
        return Err(violated(format!("|F6| = {}", f6.len())));
    }
    if !forms::Polarity::is_nondegenerate(form) {
        return Err(FormError::DegenerateForm.into());
    }
    let solids = pair_spans(f6.lines());
    let inner = AmbientSpace::new(3, Q);
    let results: Vec<(F15Entry, Vec<Subspace>)> = solids
        .par_iter()
        .map(|(pair, alpha)| {
            let cands: Vec<Subspace> = inner
                .lines()
                .iter()
                .map(|l| alpha.embed(l))
                .filter(|l| {
                    f6.lines()
                        .iter()
                        .all(|m| forms::are_opposite(l, m, form).unwrap_or(false))
                })
                .filter(|l| {
                    solids
                        .iter()
                        .filter(|(p, _)| p != pair)
                        .all(|(_, other)| other.is_disjoint(l).unwrap_or(false))
                })
                .collect();
            (
                F15Entry {
                    pair: *pair,
                    candidates: cands.len(),
                },
                cands,
            )
        })
        .collect();
    let mut lines = Vec::with_capacity(15);
    let mut entries = Vec::with_capacity(15);
    for (entry, cands) in results {
        if cands.len() != 1 {
            return Err(PipelineError::UniquenessViolated {
                pair: entry.pair,
                count: cands.len(),
            });
        }
        lines.push(cands[0].clone());
        entries.push(entry);
    }
    Ok((LineSet::new("F15", lines)?, entries))
}

/// F₆ ∪ F₁₅ and its perp-system report.
pub fn mathon(f6: &LineSet, f15: &LineSet, form: &AlternatingForm) -> Result<(LineSet, PerpSystemReport)> {
    let mut lines = f6.lines().to_vec();
    lines.extend_from_slice(f15.lines());
    let set = LineSet::new("M21", lines)?;
    let report = verify_perp_system(set.lines(), form);
    Ok((set, report))
}

#[derive(Debug, Clone, Serialize)]
pub struct ComplementReport {
    pub covered_points: usize,
    pub doubly_covered_points: usize,
    pub uncovered_points: usize,
    pub complement_solids: Vec<Subspace>,
    pub solid_count: usize,
    pub pairwise_meets_are_lines: bool,
    /// Histogram: number of complement solids through a point -> number of
    /// uncovered points.
    pub solids_per_point: IndexMap<usize, usize>,
}

impl ComplementReport {
    pub fn every_point_on_three(&self) -> bool {
        self.solids_per_point.len() == 1 && self.solids_per_point.get(&3) == Some(&self.uncovered_points)
    }
}

/// Solids of PG(5,3) lying wholly in the set of points not covered by `lines`.
pub fn complement_analysis(lines: &LineSet, space: &AmbientSpace) -> ComplementReport {
    let mut covered: HashMap<usize, usize> = HashMap::new();
    for l in lines.lines() {
        for p in l.points() {
            *covered.entry(point_code(&p)).or_default() += 1;
        }
    }
    let doubly = covered.values().filter(|&&c| c > 1).count();
    let total = space.points().len();
    let complement_solids: Vec<Subspace> = space
        .solids()
        .par_iter()
        .filter(|s| {
            s.points()
                .iter()
                .all(|p| !covered.contains_key(&point_code(p)))
        })
        .cloned()
        .collect();
    let pairwise_meets_are_lines = complement_solids
        .iter()
        .tuple_combinations()
        .all(|(a, b)| a.meet(b).map(|m| m.vdim() == 2).unwrap_or(false));
    let mut through: HashMap<usize, usize> = HashMap::new();
    for s in &complement_solids {
        for p in s.points() {
            *through.entry(point_code(&p)).or_default() += 1;
        }
    }
    let mut histogram: IndexMap<usize, usize> = IndexMap::new();
    for p in space.points() {
        let code = point_code(p);
        if covered.contains_key(&code) {
            continue;
        }
        *histogram.entry(through.get(&code).copied().unwrap_or(0)).or_default() += 1;
    }
    histogram.sort_keys();
    ComplementReport {
        covered_points: covered.len(),
        doubly_covered_points: doubly,
        uncovered_points: total - covered.len(),
        solid_count: complement_solids.len(),
        complement_solids,
        pairwise_meets_are_lines,
        solids_per_point: histogram,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpreadOutcome {
    pub spread: Vec<Syntheme>,
    /// Projective dimension of the meet for each syntheme of the spread.
    pub meet_dims: Vec<isize>,
    pub qualifies: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Recovery {
    pub syntheme_count: usize,
    pub spread_count: usize,
    pub outcomes: Vec<SpreadOutcome>,
    pub qualifying: usize,
    /// The qualifying spread, in the order its synthemes produced `lines`.
    pub spread: Vec<Syntheme>,
    pub lines: LineSet,
}

/// For a syntheme `{{a,b},{c,d},{e,f}}` on the indices of F₆, the meet of
/// `⟨m_a,m_b⟩`, `⟨m_c,m_d⟩` and `⟨m_e,m_f⟩`.
pub fn syntheme_meet(f6: &LineSet, s: &Syntheme) -> Subspace {
    let m = f6.lines();
    s.duads()
        .iter()
        .map(|&(u, v)| m[u].span(&m[v]).expect("same ambient"))
        .reduce(|acc, x| acc.meet(&x).expect("same ambient"))
        .expect("three duads")
}

/// Recover F₅ from F₆ through the one syntheme spread all of whose meets are
/// lines.
pub fn recover_f5(f6: &LineSet) -> Result<Recovery> {
    if f6.len() != 6 {
        return Err(violated(format!("|F6| = {}", f6.len())));
    }
    let all = synthemes();
    let spread_list = spreads();
    let outcomes: Vec<SpreadOutcome> = spread_list
        .iter()
        .map(|sp| {
            let meets: Vec<Subspace> = sp.iter().map(|s| syntheme_meet(f6, s)).collect();
            let dims: Vec<isize> = meets.iter().map(Subspace::proj_dim).collect();
            SpreadOutcome {
                spread: sp.clone(),
                qualifies: dims.iter().all(|&d| d == 1),
                meet_dims: dims,
            }
        })
        .collect();
    let qualifying: Vec<&SpreadOutcome> = outcomes.iter().filter(|o| o.qualifies).collect();
    if qualifying.len() != 1 {
        return Err(PipelineError::RecoveryAmbiguous {
            qualifying: qualifying.len(),
        });
    }
    let spread = qualifying[0].spread.clone();
    let lines: Vec<Subspace> = spread.iter().map(|s| syntheme_meet(f6, s)).collect();
    Ok(Recovery {
        syntheme_count: all.len(),
        spread_count: spread_list.len(),
        qualifying: 1,
        lines: LineSet::new("F5", lines)?,
        spread,
        outcomes,
    })
}

/// How the polarity search picks the groups whose invariant quadratic forms
/// are tried before falling back to random symmetric matrices.
#[derive(Debug, Clone)]
pub enum SearchGroups {
    /// ⟨CD⟩ first, then every cyclic subgroup of the stabilizer.
    CyclicSubgroups,
    /// Only the given group.
    Only(MatrixGroup),
}

#[derive(Debug, Clone)]
pub struct PolaritySearchConfig {
    pub groups: SearchGroups,
    /// Random symmetric matrices tried after the invariant pass.
    pub budget: u64,
    pub seed: u64,
    /// Invariant spaces of larger dimension are skipped in the exhaustive pass.
    pub max_space_dim: usize,
}

impl Default for PolaritySearchConfig {
    fn default() -> Self {
        Self {
            groups: SearchGroups::CyclicSubgroups,
            budget: 100_000,
            seed: 1,
            max_space_dim: 10,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PolarityWitness {
    pub sym: Matrix,
    pub quadric: QuadricType,
    pub singular_points: u64,
    /// Where the witness came from, e.g. "invariant" or "random".
    pub source: String,
    pub report: PerpSystemReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct PolarityWitnesses {
    pub hyperbolic: PolarityWitness,
    pub elliptic: PolarityWitness,
    pub invariant_candidates: u64,
    pub random_trials: u64,
}

/// Fast perp-system test for 2×6 line bases under the polar form of `sym`
/// over GF(3). Used only to filter candidates; accepted forms are re-verified
/// with [`verify_perp_system`].
struct FastPerpCheck {
    bases: Vec<[[u8; 6]; 2]>,
}

impl FastPerpCheck {
    fn new(lines: &LineSet) -> Self {
        let bases = lines
            .lines()
            .iter()
            .map(|l| {
                let mut b = [[0u8; 6]; 2];
                for (i, row) in b.iter_mut().enumerate() {
                    row.copy_from_slice(l.basis().row(i));
                }
                b
            })
            .collect();
        Self { bases }
    }

    fn accepts(&self, sym: &Matrix) -> bool {
        let s = sym.data();
        let prods: Vec<[[u32; 6]; 2]> = self
            .bases
            .iter()
            .map(|b| {
                let mut out = [[0u32; 6]; 2];
                for r in 0..2 {
                    for j in 0..6 {
                        out[r][j] = (0..6).map(|k| b[r][k] as u32 * s[k * 6 + j] as u32).sum::<u32>() % 3;
                    }
                }
                out
            })
            .collect();
        for (i, pi) in prods.iter().enumerate() {
            for bj in &self.bases[i..] {
                let mut m = [[0u32; 2]; 2];
                for r in 0..2 {
                    for c in 0..2 {
                        m[r][c] = (0..6).map(|k| pi[r][k] * bj[c][k] as u32).sum::<u32>();
                    }
                }
                if (m[0][0] * m[1][1] + 2 * 9 * 9 * 36 - m[0][1] * m[1][0]) % 3 == 0 {
                    return false;
                }
            }
        }
        true
    }
}

fn cyclic_subgroup_key(e: &ProjectiveElement) -> Vec<ProjectiveElement> {
    let mut els = Vec::new();
    let mut acc = e.clone();
    loop {
        els.push(acc.clone());
        if acc.is_identity() {
            break;
        }
        acc = acc.mul(e);
    }
    els.sort();
    els
}

/// Find one hyperbolic and one elliptic quadratic form for which `m21` is a
/// perp-system. Deterministic for a fixed configuration.
pub fn find_epsilon_polarities(
    m21: &LineSet,
    stabilizer: &MatrixGroup,
    cfg: &PolaritySearchConfig,
) -> Result<PolarityWitnesses> {
    let fast = FastPerpCheck::new(m21);
    let mut found: [Option<PolarityWitness>; 2] = [None, None];
    let mut invariant_candidates = 0u64;

    let try_candidate = |sym: Matrix, source: &str, found: &mut [Option<PolarityWitness>; 2]| -> bool {
        if sym.rank() < 6 || !fast.accepts(&sym) {
            return false;
        }
        let qf = QuadraticForm::new(sym.clone()).expect("symmetric");
        let report = verify_perp_system(m21.lines(), &qf);
        if !report.is_partial_perp_system {
            return false;
        }
        let (kind, count) = classify_quadric(&qf).expect("six variables");
        let slot = match kind {
            QuadricType::Hyperbolic => 0,
            QuadricType::Elliptic => 1,
            QuadricType::Degenerate => return false,
        };
        if found[slot].is_none() {
            found[slot] = Some(PolarityWitness {
                sym,
                quadric: kind,
                singular_points: count,
                source: source.to_string(),
                report,
            });
        }
        found.iter().all(Option::is_some)
    };

    let groups_to_try: Vec<(String, MatrixGroup)> = match &cfg.groups {
        SearchGroups::Only(g) => vec![("given group".to_string(), g.clone())],
        SearchGroups::CyclicSubgroups => {
            let gens = stabilizer.generators();
            let mut out = Vec::new();
            let mut seen: HashSet<Vec<ProjectiveElement>> = HashSet::new();
            if gens.len() == 2 {
                let cd = &gens[0] * &gens[1];
                seen.insert(cyclic_subgroup_key(&ProjectiveElement::new(&cd)));
                out.push(("<CD>".to_string(), MatrixGroup::new(vec![cd])?));
            }
            let mut quotient = groups::projective_quotient(stabilizer.elements()?);
            quotient.sort_by_key(|e| std::cmp::Reverse(e.order()));
            for e in quotient {
                if e.is_identity() || !seen.insert(cyclic_subgroup_key(&e)) {
                    continue;
                }
                let label = format!("cyclic of order {}", e.order());
                out.push((label, MatrixGroup::new(vec![e.matrix().clone()])?));
            }
            out
        }
    };

    'groups: for (label, g) in &groups_to_try {
        for space in invariant_quadratic_forms(g) {
            if space.dimension() > cfg.max_space_dim {
                continue;
            }
            // coefficient vectors up to scalars: first nonzero entry is 1
            for coeffs in (0..space.dimension())
                .map(|_| 0..Q)
                .multi_cartesian_product()
                .filter(|c| c.iter().find(|&&x| x != 0) == Some(&1))
            {
                invariant_candidates += 1;
                let sym = space
                    .basis
                    .iter()
                    .zip(&coeffs)
                    .fold(Matrix::zeros(Q, 6, 6), |acc, (b, &c)| &acc + &b.scale(c as i64));
                let source = format!("invariant: {label}, multipliers {:?}", space.multipliers);
                if try_candidate(sym, &source, &mut found) {
                    break 'groups;
                }
            }
        }
    }

    let mut random_trials = 0u64;
    if found.iter().any(Option::is_none) {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        while random_trials < cfg.budget {
            random_trials += 1;
            let mut sym = Matrix::zeros(Q, 6, 6);
            for i in 0..6 {
                for j in i..6 {
                    let v: i64 = rng.gen_range(0..Q as i64);
                    sym = sym.with_entry(i, j, v).with_entry(j, i, v);
                }
            }
            if try_candidate(sym, "random", &mut found) {
                break;
            }
        }
    }

    match found {
        [Some(h), Some(e)] => Ok(PolarityWitnesses {
            hyperbolic: h,
            elliptic: e,
            invariant_candidates,
            random_trials,
        }),
        [h, e] => Err(PipelineError::WitnessNotFound {
            found_hyperbolic: h.is_some(),
            found_elliptic: e.is_some(),
            invariant_candidates,
            random_trials,
        }),
    }
}

/// Every stage of the construction for one seed line of ℒ.
#[derive(Debug, Clone)]
pub struct Construction {
    pub seed_index: usize,
    pub seed: Subspace,
    /// Element of H carrying the standard seed to `seed`.
    pub conjugator: Matrix,
    pub f4: LineSet,
    pub l: LineSet,
    pub f5: LineSet,
    pub stabilizer: MatrixGroup,
    pub f6: LineSet,
    pub fixed_line_records: Vec<FixedLineRecord>,
    pub form: AlternatingForm,
    pub f15: LineSet,
    pub f15_entries: Vec<F15Entry>,
    pub m21: LineSet,
    pub perp_report: PerpSystemReport,
    pub timings_ms: IndexMap<String, f64>,
}

impl Construction {
    /// Run the construction from the `seed_index`-th seed (0 is the standard
    /// `(I R S)`). Other seeds are handled by transporting the standard
    /// stabilizer and form along the element of H relating the seeds.
    pub fn run(seed_index: usize, space: &AmbientSpace) -> Result<Self> {
        let mut timings = IndexMap::new();
        let mut clock = Instant::now();
        let mut lap = |name: &str, timings: &mut IndexMap<String, f64>| {
            timings.insert(name.to_string(), clock.elapsed().as_secs_f64() * 1e3);
            clock = Instant::now();
        };

        let f4 = f4();
        let l = compute_l()?;
        let seeds = seed_lines()?;
        let seed = seeds
            .get(seed_index)
            .cloned()
            .ok_or(PipelineError::SeedOutOfRange(seed_index))?;
        lap("L", &mut timings);

        let conjugator = h_element_mapping(&standard_seed(), &seed)
            .ok_or_else(|| violated("H is not transitive on L"))?;
        let f5 = f5(&seed)?;
        let stabilizer = f5_stabilizer()?.conjugate(&conjugator)?.materialize(GROUP_CAP)?;
        check_stabilizes(&stabilizer, &f5)?;
        lap("F5", &mut timings);

        let (f6, records) = f6(&stabilizer, space)?;
        lap("F6", &mut timings);

        let form = AlternatingForm::new(transport_form(m15()?.gram(), &conjugator)?)?;
        let (f15, entries) = f15(&f6, &form)?;
        lap("F15", &mut timings);

        let (m21, report) = mathon(&f6, &f15, &form)?;
        if !report.is_maximal {
            return Err(violated("M21 is not a maximal perp-system"));
        }
        lap("M21", &mut timings);

        Ok(Self {
            seed_index,
            seed,
            conjugator,
            f4,
            l,
            f5,
            stabilizer,
            f6,
            fixed_line_records: records,
            form,
            f15,
            f15_entries: entries,
            m21,
            perp_report: report,
            timings_ms: timings,
        })
    }
}

/// Reference line tables for the standard seed.
pub mod reference {
    use super::*;

    fn line(rows: [[i64; 6]; 2]) -> Subspace {
        Subspace::canonicalize(&Matrix::from_rows(Q, rows).expect("valid"))
    }

    /// The six lines of F₆.
    pub fn f6_lines() -> Vec<Subspace> {
        [
            [[1, 0, 1, 2, 2, 0], [0, 1, 1, 0, 2, 2]],
            [[1, 0, 1, 2, 1, 1], [0, 1, 1, 0, 2, 0]],
            [[1, 0, 0, 2, 0, 1], [0, 1, 1, 1, 2, 1]],
            [[1, 0, 0, 2, 2, 0], [0, 1, 1, 1, 2, 2]],
            [[1, 0, 2, 2, 1, 1], [0, 1, 0, 2, 2, 0]],
            [[1, 0, 2, 2, 0, 1], [0, 1, 0, 2, 2, 1]],
        ]
        .into_iter()
        .map(line)
        .collect()
    }

    /// The fifteen lines of F₁₅.
    pub fn f15_lines() -> Vec<Subspace> {
        [
            [[1, 0, 2, 2, 2, 2], [0, 1, 0, 2, 0, 2]],
            [[1, 0, 0, 0, 0, 1], [0, 1, 0, 0, 2, 1]],
            [[1, 0, 1, 0, 2, 2], [0, 1, 0, 1, 0, 2]],
            [[0, 0, 1, 0, 1, 2], [0, 0, 0, 1, 1, 0]],
            [[1, 0, 0, 2, 1, 0], [0, 1, 1, 1, 0, 1]],
            [[0, 0, 1, 0, 1, 1], [0, 0, 0, 1, 2, 0]],
            [[1, 0, 2, 0, 0, 0], [0, 1, 2, 2, 0, 0]],
            [[1, 0, 1, 2, 0, 0], [0, 1, 1, 0, 0, 0]],
            [[1, 0, 1, 0, 0, 0], [0, 1, 0, 1, 0, 0]],
            [[1, 0, 2, 0, 2, 0], [0, 1, 2, 2, 2, 2]],
            [[1, 0, 0, 0, 1, 0], [0, 1, 0, 0, 0, 1]],
            [[0, 0, 1, 0, 1, 0], [0, 0, 0, 1, 0, 1]],
            [[1, 0, 0, 0, 2, 2], [0, 1, 0, 0, 0, 2]],
            [[1, 0, 2, 0, 1, 0], [0, 1, 2, 2, 0, 1]],
            [[1, 0, 1, 0, 1, 1], [0, 1, 0, 1, 2, 0]],
        ]
        .into_iter()
        .map(line)
        .collect()
    }

    /// The eight matrices of the conjugacy class underlying ℒ.
    pub fn eight_matrices() -> Vec<Matrix> {
        [
            [[0, 1], [2, 1]],
            [[0, 2], [1, 1]],
            [[1, 1], [2, 0]],
            [[1, 2], [1, 0]],
            [[2, 0], [1, 2]],
            [[2, 0], [2, 2]],
            [[2, 1], [0, 2]],
            [[2, 2], [0, 2]],
        ]
        .into_iter()
        .map(|m| Matrix::from_rows(Q, m).expect("valid"))
        .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f4_shape() {
        let f = f4();
        assert_eq!(f.len(), 4);
        assert!(f.pairwise_disjoint());
        for (_, s) in pair_spans(f.lines()) {
            assert_eq!(s.proj_dim(), 3);
        }
    }

    #[test]
    fn m0_properties() {
        let m = m0();
        assert_eq!(m.gram().transpose(), -m.gram());
        assert_eq!(m.gram().rank(), 6);
        for l in f4().lines() {
            assert!(is_totally_isotropic(l, &m).unwrap());
        }
    }

    #[test]
    fn eight_matrix_class() {
        let eight = eight_matrices();
        assert_eq!(eight.len(), 8);
        assert_eq!(eight, reference::eight_matrices());
        for y in &eight {
            assert_eq!(rank_one_partners(y, &eight).len(), 3);
        }
        assert_eq!(admissible_pairs().len(), 24);
        assert_eq!(gl23().len(), 48);
    }

    #[test]
    fn block_form_of_seed() {
        let (r, s) = standard_rs();
        assert_eq!(block_form(&standard_seed()), Some((r, s)));
        assert_eq!(block_form(&f4().lines()[1]), None);
    }

    #[test]
    fn f5_rejects_foreign_lines() {
        let i = identity2();
        let err = f5_from_blocks(&i, &i).unwrap_err();
        assert!(matches!(err, PipelineError::NotInL(_)));
        assert_eq!(f5(&standard_seed()).unwrap().len(), 5);
    }

    #[test]
    fn linesets_reject_duplicates() {
        let l = standard_seed();
        assert!(LineSet::new("x", vec![l.clone(), l]).is_err());
        let point = Subspace::point(3, &[1, 0, 0, 0, 0, 0]);
        assert!(LineSet::new("x", vec![point]).is_err());
    }

    #[test]
    fn m15_shape() {
        let m = m15().unwrap();
        let (a, b, c) = upper_blocks(m.gram());
        assert_eq!(a, matrix![3; [2, 2], [0, 0]]);
        assert_eq!(b, matrix![3; [0, 0], [1, 1]]);
        assert_eq!(c, matrix![3; [0, 0], [1, 0]]);
        assert_eq!(&(&a + &b) + &c, matrix![3; [2, 2], [2, 1]]);
        assert_eq!(m.gram().rank(), 6);
    }

    #[test]
    fn transport_identity() {
        let g = m15_gram();
        assert_eq!(transport_form(&g, &Matrix::identity(3, 6)).unwrap(), g);
    }
}
