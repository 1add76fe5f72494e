//! Incidence structures: the generalized quadrangle built from the perp-system,
//! Sylvester's duad/syntheme model, isomorphism search, and the linear
//! representation with its partial-geometry and strongly-regular-graph checks.

use fixedbitset::FixedBitSet;
use itertools::Itertools;
use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::forms::{perp, AlternatingForm};
use crate::pipeline::{LineSet, PipelineError, Recovery, F15Entry};
use crate::projective::{decode_vector, vector_code, Subspace};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeometryError {
    #[error("incidence references point {point} or line {line} out of range")]
    BadIncidence { point: usize, line: usize },
    #[error("point {point} repeated on line {line}")]
    RepeatedIncidence { point: usize, line: usize },
    #[error("points {0} and {1} lie on two common lines")]
    NotPartialLinear(usize, usize),
    #[error("line sizes or point degrees are not constant")]
    Irregular,
    #[error("no antiflags")]
    NoAntiflags,
    #[error("not a generalized quadrangle: point {point}, line {line} has {collinear} collinear points")]
    NotAGQ { point: usize, line: usize, collinear: usize },
    #[error(
        "not a partial geometry: point {point}, line {line} has {collinear} collinear points \
         (expected {expected})"
    )]
    NotAPartialGeometry {
        point: usize,
        line: usize,
        collinear: usize,
        expected: usize,
    },
    #[error("not strongly regular: {0}")]
    NotSRG(String),
}

/// A point/line incidence structure with points and lines numbered from 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidenceStructure {
    point_count: usize,
    lines: Vec<Vec<usize>>,
    point_lines: Vec<Vec<usize>>,
    point_labels: Option<Vec<String>>,
    line_labels: Option<Vec<String>>,
}

impl IncidenceStructure {
    /// Build from the point lists of the lines. Rejects bad ids, repeated
    /// incidences and pairs of points on two lines.
    pub fn new(point_count: usize, lines: Vec<Vec<usize>>) -> Result<Self, GeometryError> {
        let mut point_lines = vec![Vec::new(); point_count];
        let mut lines = lines;
        for (li, pts) in lines.iter_mut().enumerate() {
            pts.sort_unstable();
            for w in pts.windows(2) {
                if w[0] == w[1] {
                    return Err(GeometryError::RepeatedIncidence { point: w[0], line: li });
                }
            }
            for &p in pts.iter() {
                if p >= point_count {
                    return Err(GeometryError::BadIncidence { point: p, line: li });
                }
                point_lines[p].push(li);
            }
        }
        let mut seen = FixedBitSet::with_capacity(point_count * point_count);
        for pts in &lines {
            for (&a, &b) in pts.iter().tuple_combinations() {
                let idx = a * point_count + b;
                if seen.contains(idx) {
                    return Err(GeometryError::NotPartialLinear(a, b));
                }
                seen.insert(idx);
            }
        }
        Ok(Self {
            point_count,
            lines,
            point_lines,
            point_labels: None,
            line_labels: None,
        })
    }

    pub fn with_labels(mut self, points: Vec<String>, lines: Vec<String>) -> Self {
        self.point_labels = Some(points);
        self.line_labels = Some(lines);
        self
    }

    pub fn point_count(&self) -> usize {
        self.point_count
    }

    pub fn line_count(&self) -> usize {
        self.lines.len()
    }

    pub fn line(&self, l: usize) -> &[usize] {
        &self.lines[l]
    }

    pub fn lines_through(&self, p: usize) -> &[usize] {
        &self.point_lines[p]
    }

    pub fn is_incident(&self, p: usize, l: usize) -> bool {
        self.lines[l].binary_search(&p).is_ok()
    }

    pub fn point_labels(&self) -> Option<&[String]> {
        self.point_labels.as_deref()
    }

    pub fn line_labels(&self) -> Option<&[String]> {
        self.line_labels.as_deref()
    }

    /// `(p, l)` pairs in line-major order.
    pub fn incidences(&self) -> Vec<(usize, usize)> {
        self.lines
            .iter()
            .enumerate()
            .flat_map(|(l, pts)| pts.iter().map(move |&p| (p, l)))
            .collect()
    }

    /// The common size of all lines and the common degree of all points.
    pub fn regular_sizes(&self) -> Option<(usize, usize)> {
        let k = self.lines.first()?.len();
        let r = self.point_lines.first()?.len();
        (self.lines.iter().all(|l| l.len() == k) && self.point_lines.iter().all(|l| l.len() == r))
            .then_some((k, r))
    }

    /// Row `p` holds the points collinear with and distinct from `p`.
    pub fn collinearity(&self) -> Vec<FixedBitSet> {
        (0..self.point_count)
            .into_par_iter()
            .map(|p| {
                let mut row = FixedBitSet::with_capacity(self.point_count);
                for &l in &self.point_lines[p] {
                    for &x in &self.lines[l] {
                        row.insert(x);
                    }
                }
                row.set(p, false);
                row
            })
            .collect()
    }
}

impl Serialize for IncidenceStructure {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Labels<'a> {
            points: &'a [String],
            lines: &'a [String],
        }
        let mut st = s.serialize_struct("IncidenceStructure", 4)?;
        st.serialize_field("points", &self.point_count)?;
        st.serialize_field("lines", &self.lines.len())?;
        st.serialize_field("incidence", &self.incidences())?;
        let labels = match (&self.point_labels, &self.line_labels) {
            (Some(p), Some(l)) => Some(Labels { points: p, lines: l }),
            _ => None,
        };
        st.serialize_field("labels", &labels)?;
        st.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PGParams {
    pub s: usize,
    pub t: usize,
    pub alpha: usize,
}

impl PGParams {
    /// `((s+1)(st+α)/α, s(t+1), s−1+t(α−1), α(t+1))`.
    pub fn srg_formula(&self) -> SRGParams {
        let (s, t, a) = (self.s, self.t, self.alpha);
        SRGParams {
            v: (s + 1) * (s * t + a) / a,
            k: s * (t + 1),
            lambda: s - 1 + t * (a - 1),
            mu: a * (t + 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SRGParams {
    pub v: usize,
    pub k: usize,
    pub lambda: usize,
    pub mu: usize,
}

impl SRGParams {
    pub fn is_feasible(&self) -> bool {
        self.k * (self.k - self.lambda - 1) == (self.v - self.k - 1) * self.mu
    }
}

/// Check constant line size and point degree and a constant number of points
/// on a line collinear with any point off it.
pub fn check_partial_geometry(inc: &IncidenceStructure) -> Result<PGParams, GeometryError> {
    let (k, r) = inc.regular_sizes().ok_or(GeometryError::Irregular)?;
    if k < 2 || r < 1 {
        return Err(GeometryError::Irregular);
    }
    let coll = inc.collinearity();
    let counts: Vec<Option<(usize, usize, usize)>> = (0..inc.point_count())
        .into_par_iter()
        .map(|p| {
            let mut first: Option<(usize, usize, usize)> = None;
            let mut bad: Option<(usize, usize, usize)> = None;
            for l in 0..inc.line_count() {
                if inc.is_incident(p, l) {
                    continue;
                }
                let c = inc.line(l).iter().filter(|&&x| coll[p].contains(x)).count();
                match first {
                    None => first = Some((p, l, c)),
                    Some((_, _, c0)) if c0 != c => {
                        bad = Some((p, l, c));
                        break;
                    }
                    _ => {}
                }
            }
            bad.or(first)
        })
        .collect();
    let alpha = counts
        .iter()
        .flatten()
        .next()
        .map(|&(_, _, c)| c)
        .ok_or(GeometryError::NoAntiflags)?;
    for &(point, line, collinear) in counts.iter().flatten() {
        if collinear != alpha {
            return Err(GeometryError::NotAPartialGeometry {
                point,
                line,
                collinear,
                expected: alpha,
            });
        }
    }
    if alpha == 0 {
        return Err(GeometryError::NotAPartialGeometry {
            point: 0,
            line: 0,
            collinear: 0,
            expected: 1,
        });
    }
    Ok(PGParams {
        s: k - 1,
        t: r - 1,
        alpha,
    })
}

/// A partial geometry with α = 1; returns `(s, t)`.
pub fn check_gq(inc: &IncidenceStructure) -> Result<(usize, usize), GeometryError> {
    match check_partial_geometry(inc) {
        Ok(p) if p.alpha == 1 => Ok((p.s, p.t)),
        Ok(p) => {
            let (point, line) = first_antiflag(inc).unwrap_or((0, 0));
            Err(GeometryError::NotAGQ {
                point,
                line,
                collinear: p.alpha,
            })
        }
        Err(GeometryError::NotAPartialGeometry {
            point,
            line,
            collinear,
            expected,
        }) => {
            let (point, line, collinear) = if expected == 1 {
                (point, line, collinear)
            } else {
                let coll = inc.collinearity();
                let l = (0..inc.line_count()).find(|&l| {
                    !inc.is_incident(point, l)
                        && inc.line(l).iter().filter(|&&x| coll[point].contains(x)).count() != 1
                });
                let l = l.unwrap_or(line);
                (
                    point,
                    l,
                    inc.line(l).iter().filter(|&&x| coll[point].contains(x)).count(),
                )
            };
            Err(GeometryError::NotAGQ { point, line, collinear })
        }
        Err(e) => Err(e),
    }
}

fn first_antiflag(inc: &IncidenceStructure) -> Option<(usize, usize)> {
    (0..inc.point_count())
        .cartesian_product(0..inc.line_count())
        .find(|&(p, l)| !inc.is_incident(p, l))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SrgReport {
    pub counted: SRGParams,
    pub formula: SRGParams,
}

/// Count the parameters of the collinearity graph over all pairs and compare
/// with the formula for the partial geometry parameters.
pub fn check_srg(inc: &IncidenceStructure, pg: &PGParams) -> Result<SrgReport, GeometryError> {
    let coll = inc.collinearity();
    let v = inc.point_count();
    let k = coll.first().map(|r| r.count_ones(..)).unwrap_or(0);
    if coll.iter().any(|r| r.count_ones(..) != k) {
        return Err(GeometryError::NotSRG("graph is not regular".into()));
    }
    let per_point: Vec<(Option<usize>, Option<usize>, bool)> = (0..v)
        .into_par_iter()
        .map(|a| {
            let (mut lam, mut mu, mut ok) = (None, None, true);
            for b in (a + 1)..v {
                let common = coll[a].intersection(&coll[b]).count();
                let slot = if coll[a].contains(b) { &mut lam } else { &mut mu };
                match slot {
                    None => *slot = Some(common),
                    Some(c) if *c != common => ok = false,
                    _ => {}
                }
            }
            (lam, mu, ok)
        })
        .collect();
    if per_point.iter().any(|x| !x.2) {
        return Err(GeometryError::NotSRG("common neighbour counts vary".into()));
    }
    let pick = |f: fn(&(Option<usize>, Option<usize>, bool)) -> Option<usize>| -> Result<usize, GeometryError> {
        let vals: Vec<usize> = per_point.iter().filter_map(f).unique().collect();
        match vals.as_slice() {
            [x] => Ok(*x),
            [] => Ok(0),
            _ => Err(GeometryError::NotSRG("common neighbour counts vary".into())),
        }
    };
    let counted = SRGParams {
        v,
        k,
        lambda: pick(|x| x.0)?,
        mu: pick(|x| x.1)?,
    };
    let formula = pg.srg_formula();
    if counted != formula {
        return Err(GeometryError::NotSRG(format!(
            "counted {counted:?} differs from formula {formula:?}"
        )));
    }
    if !counted.is_feasible() {
        return Err(GeometryError::NotSRG("feasibility identity fails".into()));
    }
    Ok(SrgReport { counted, formula })
}

/// An unordered pair `{a, b}` with `a < b`, from labels `0..6`.
pub type Duad = (usize, usize);

/// Three mutually disjoint duads, sorted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Syntheme([Duad; 3]);

impl Syntheme {
    pub fn new(mut duads: [Duad; 3]) -> Self {
        for d in duads.iter_mut() {
            if d.0 > d.1 {
                *d = (d.1, d.0);
            }
        }
        duads.sort_unstable();
        Self(duads)
    }

    pub fn duads(&self) -> &[Duad; 3] {
        &self.0
    }

    pub fn contains(&self, d: Duad) -> bool {
        let d = if d.0 > d.1 { (d.1, d.0) } else { d };
        self.0.contains(&d)
    }

    pub fn shares_duad(&self, other: &Syntheme) -> bool {
        self.0.iter().any(|&d| other.contains(d))
    }
}

impl std::fmt::Display for Syntheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let [a, b, c] = self.0;
        write!(
            f,
            "{}{}|{}{}|{}{}",
            a.0 + 1,
            a.1 + 1,
            b.0 + 1,
            b.1 + 1,
            c.0 + 1,
            c.1 + 1
        )
    }
}

pub fn duads() -> Vec<Duad> {
    (0..6).tuple_combinations().collect()
}

/// The 15 synthemes on six labels, sorted.
pub fn synthemes() -> Vec<Syntheme> {
    let mut out: Vec<Syntheme> = (1..6)
        .flat_map(|b| {
            let rest: Vec<usize> = (1..6).filter(|&x| x != b).collect();
            let c = rest[0];
            rest[1..]
                .iter()
                .map(|&d| {
                    let others: Vec<usize> = rest.iter().copied().filter(|&x| x != c && x != d).collect();
                    Syntheme::new([(0, b), (c, d), (others[0], others[1])])
                })
                .collect::<Vec<_>>()
        })
        .collect();
    out.sort();
    out
}

/// The six partitions of the 15 duads into five synthemes.
pub fn spreads() -> Vec<Vec<Syntheme>> {
    fn extend(chosen: &mut Vec<Syntheme>, all: &[Syntheme], start: usize, out: &mut Vec<Vec<Syntheme>>) {
        if chosen.len() == 5 {
            out.push(chosen.clone());
            return;
        }
        for i in start..all.len() {
            if chosen.iter().all(|c| !c.shares_duad(&all[i])) {
                chosen.push(all[i]);
                extend(chosen, all, i + 1, out);
                chosen.pop();
            }
        }
    }
    let all = synthemes();
    let mut out = Vec::new();
    extend(&mut Vec::new(), &all, 0, &mut out);
    out
}

/// The syntheme outside `spread` sharing no duad with `a` or `b`.
pub fn spread_partner(spread: &[Syntheme], a: &Syntheme, b: &Syntheme) -> Option<Syntheme> {
    let found: Vec<Syntheme> = synthemes()
        .into_iter()
        .filter(|s| !spread.contains(s) && !s.shares_duad(a) && !s.shares_duad(b))
        .collect();
    (found.len() == 1).then(|| found[0])
}

fn duad_label(d: Duad) -> String {
    format!("{{{},{}}}", d.0 + 1, d.1 + 1)
}

/// Duads as points, synthemes as lines, incidence by containment.
pub fn sylvester_model() -> IncidenceStructure {
    let ds = duads();
    let ss = synthemes();
    let lines = ss
        .iter()
        .map(|s| {
            s.duads()
                .iter()
                .map(|d| ds.iter().position(|x| x == d).expect("duad"))
                .collect()
        })
        .collect();
    IncidenceStructure::new(15, lines)
        .expect("Sylvester model is a partial linear space")
        .with_labels(
            ds.into_iter().map(duad_label).collect(),
            ss.iter().map(ToString::to_string).collect(),
        )
}

/// The 3×3 grid: nine points, three rows and three columns.
pub fn grid3x3() -> IncidenceStructure {
    let rows = (0..3).map(|r| (0..3).map(|c| 3 * r + c).collect());
    let cols = (0..3).map(|c| (0..3).map(|r| 3 * r + c).collect());
    IncidenceStructure::new(9, rows.chain(cols).collect()).expect("grid")
}

/// The ten lines `⟨ℓ, m⟩^⊥` over pairs of F₅.
pub fn f10(f5: &LineSet, form: &AlternatingForm) -> Result<LineSet, PipelineError> {
    if f5.len() != 5 {
        return Err(PipelineError::InvariantViolated(format!("|F5| = {}", f5.len())));
    }
    let lines = f5
        .lines()
        .iter()
        .tuple_combinations()
        .map(|(a, b)| {
            let p = perp(&a.span(b)?, form)?;
            if p.vdim() != 2 {
                return Err(PipelineError::InvariantViolated("perp of a pair is not a line".into()));
            }
            Ok(p)
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;
    LineSet::new("F10", lines)
}

/// Points F₁₅; lines F₅ then F₁₀. A line ℓ of F₅ is incident with P when P
/// misses ℓ^⊥; a line ℓ of F₁₀ when P lies in ℓ^⊥.
pub fn build_w2(
    f15: &LineSet,
    f5: &LineSet,
    f10: &LineSet,
    form: &AlternatingForm,
) -> Result<IncidenceStructure, PipelineError> {
    let mut lines = Vec::with_capacity(15);
    for l in f5.lines() {
        let lp = perp(l, form)?;
        lines.push(
            (0..f15.len())
                .filter(|&i| f15.lines()[i].is_disjoint(&lp).unwrap_or(false))
                .collect::<Vec<_>>(),
        );
    }
    for l in f10.lines() {
        let lp = perp(l, form)?;
        lines.push(
            (0..f15.len())
                .filter(|&i| lp.contains(&f15.lines()[i]).unwrap_or(false))
                .collect::<Vec<_>>(),
        );
    }
    let inc = IncidenceStructure::new(f15.len(), lines)
        .map_err(|e| PipelineError::InvariantViolated(format!("W(2): {e}")))?;
    let labels = |prefix: &str, n: usize| -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{}", i + 1)).collect()
    };
    let mut line_labels = labels("F5.", f5.len());
    line_labels.extend(labels("F10.", f10.len()));
    Ok(inc.with_labels(labels("F15.", f15.len()), line_labels))
}

/// A point bijection and a line bijection preserving incidence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Isomorphism {
    pub points: Vec<usize>,
    pub lines: Vec<usize>,
}

impl Isomorphism {
    pub fn inverse(&self) -> Self {
        let inv = |v: &[usize]| {
            let mut out = vec![0; v.len()];
            for (i, &x) in v.iter().enumerate() {
                out[x] = i;
            }
            out
        };
        Self {
            points: inv(&self.points),
            lines: inv(&self.lines),
        }
    }

    pub fn is_valid(&self, a: &IncidenceStructure, b: &IncidenceStructure) -> bool {
        self.points.len() == a.point_count()
            && self.lines.len() == a.line_count()
            && self.points.iter().all_unique()
            && self.lines.iter().all_unique()
            && (0..a.point_count()).all(|p| {
                (0..a.line_count())
                    .all(|l| a.is_incident(p, l) == b.is_incident(self.points[p], self.lines[l]))
            })
    }
}

/// Backtracking search for an isomorphism `a → b`. Points are matched in a
/// breadth-first order over the collinearity graph, candidates restricted to
/// equal degree; `fixed` pins chosen point images.
pub fn isomorphism(
    a: &IncidenceStructure,
    b: &IncidenceStructure,
    fixed: Option<&[(usize, usize)]>,
) -> Option<Isomorphism> {
    if a.point_count() != b.point_count() || a.line_count() != b.line_count() {
        return None;
    }
    let sig = |inc: &IncidenceStructure, p: usize| {
        let mut sizes: Vec<usize> = inc.lines_through(p).iter().map(|&l| inc.line(l).len()).collect();
        sizes.sort_unstable();
        sizes
    };
    let (ca, cb) = (a.collinearity(), b.collinearity());
    let n = a.point_count();
    let mut pinned = vec![None; n];
    for &(p, q) in fixed.unwrap_or(&[]) {
        if p >= n || q >= n {
            return None;
        }
        pinned[p] = Some(q);
    }

    let mut order = Vec::with_capacity(n);
    let mut placed = FixedBitSet::with_capacity(n);
    let mut starts: Vec<usize> = (0..n).filter(|&p| pinned[p].is_some()).collect();
    starts.extend(0..n);
    for s in starts {
        if placed.contains(s) {
            continue;
        }
        let mut queue = std::collections::VecDeque::from([s]);
        placed.insert(s);
        while let Some(p) = queue.pop_front() {
            order.push(p);
            for x in ca[p].ones() {
                if !placed.contains(x) {
                    placed.insert(x);
                    queue.push_back(x);
                }
            }
        }
    }

    fn search(
        depth: usize,
        order: &[usize],
        map: &mut Vec<Option<usize>>,
        used: &mut FixedBitSet,
        ctx: &dyn Fn(usize, usize, &[Option<usize>]) -> bool,
        pinned: &[Option<usize>],
        n: usize,
    ) -> bool {
        if depth == order.len() {
            return true;
        }
        let p = order[depth];
        let cands: Vec<usize> = match pinned[p] {
            Some(q) => vec![q],
            None => (0..n).collect(),
        };
        for q in cands {
            if used.contains(q) || !ctx(p, q, map) {
                continue;
            }
            map[p] = Some(q);
            used.insert(q);
            if search(depth + 1, order, map, used, ctx, pinned, n) {
                return true;
            }
            map[p] = None;
            used.set(q, false);
        }
        false
    }

    let ctx = |p: usize, q: usize, map: &[Option<usize>]| -> bool {
        sig(a, p) == sig(b, q)
            && map
                .iter()
                .enumerate()
                .filter_map(|(x, y)| y.map(|y| (x, y)))
                .all(|(x, y)| ca[p].contains(x) == cb[q].contains(y))
    };

    let mut map = vec![None; n];
    let mut used = FixedBitSet::with_capacity(n);
    if !search(0, &order, &mut map, &mut used, &ctx, &pinned, n) {
        return None;
    }
    let points: Vec<usize> = map.into_iter().map(|x| x.expect("complete")).collect();
    // lines are determined by their point sets
    let mut lines = Vec::with_capacity(a.line_count());
    for l in 0..a.line_count() {
        let mut img: Vec<usize> = a.line(l).iter().map(|&p| points[p]).collect();
        img.sort_unstable();
        lines.push((0..b.line_count()).find(|&m| b.line(m) == img.as_slice())?);
    }
    let iso = Isomorphism { points, lines };
    iso.is_valid(a, b).then_some(iso)
}

/// The explicit correspondence between the perp-system quadrangle and
/// Sylvester's model, with the incidence equivalences it relies on.
#[derive(Debug, Clone, Serialize)]
pub struct W2MapReport {
    /// Sylvester point index for each point of the quadrangle.
    pub point_map: Vec<usize>,
    /// Sylvester line index for each line of the quadrangle.
    pub line_map: Vec<usize>,
    pub preserves_incidence: bool,
    /// `m_ij ∩ ℓ_a^⊥ = ∅` exactly when `{i,j}` lies in `s_a`.
    pub type_one_equivalence: bool,
    /// `m_ij ⊆ ⟨ℓ_a, ℓ_b⟩` exactly when `{i,j}` lies in `s_ab`.
    pub type_two_equivalence: bool,
    /// `ℓ_a^⊥` is spanned by the `m_u^⊥ ∩ m_v^⊥` over duads of `s_a`.
    pub polar_spans: bool,
    /// The search also finds an isomorphism when pinned to the point map.
    pub search_agrees: bool,
}

impl W2MapReport {
    pub fn all(&self) -> bool {
        self.preserves_incidence
            && self.type_one_equivalence
            && self.type_two_equivalence
            && self.polar_spans
            && self.search_agrees
    }
}

/// Check the maps `m_ij ↦ {i,j}`, `ℓ_a ↦ s_a`, `⟨ℓ_a,ℓ_b⟩^⊥ ↦ s_ab`, where the
/// spread `s_1..s_5` and the labels `ℓ_a` come from the inverse construction.
pub fn check_w2_map(
    w2: &IncidenceStructure,
    f6: &LineSet,
    f15: &LineSet,
    f15_entries: &[F15Entry],
    f5: &LineSet,
    f10: &LineSet,
    recovery: &Recovery,
    form: &AlternatingForm,
) -> Result<W2MapReport, PipelineError> {
    let syl = sylvester_model();
    let ds = duads();
    let ss = synthemes();
    let spread = &recovery.spread;
    let ell: Vec<&Subspace> = recovery.lines.lines().iter().collect();

    let point_map: Vec<usize> = f15_entries
        .iter()
        .map(|e| ds.iter().position(|&d| d == e.pair).expect("pair of 0..6"))
        .collect();

    let mut line_map = vec![usize::MAX; w2.line_count()];
    for (a, s) in spread.iter().enumerate() {
        let idx = f5
            .lines()
            .iter()
            .position(|l| l == ell[a])
            .ok_or_else(|| PipelineError::InvariantViolated("recovered line not in F5".into()))?;
        line_map[idx] = ss.iter().position(|x| x == s).expect("syntheme");
    }
    let mut type_two = true;
    for (a, b) in (0..5).tuple_combinations() {
        let lab = perp(&ell[a].span(ell[b])?, form)?;
        let idx = f10
            .lines()
            .iter()
            .position(|l| *l == lab)
            .ok_or_else(|| PipelineError::InvariantViolated("l_ab not in F10".into()))?;
        let sab = spread_partner(spread, &spread[a], &spread[b])
            .ok_or_else(|| PipelineError::InvariantViolated("no unique s_ab".into()))?;
        line_map[f5.len() + idx] = ss.iter().position(|x| *x == sab).expect("syntheme");
        let solid = ell[a].span(ell[b])?;
        for (i, e) in f15_entries.iter().enumerate() {
            let inside = solid.contains(&f15.lines()[i])?;
            type_two &= inside == sab.contains(e.pair);
        }
    }

    let mut type_one = true;
    let mut polar_spans = true;
    let m = f6.lines();
    for (a, s) in spread.iter().enumerate() {
        let lp = perp(ell[a], form)?;
        for (i, e) in f15_entries.iter().enumerate() {
            type_one &= f15.lines()[i].is_disjoint(&lp)? == s.contains(e.pair);
        }
        let mut span = Subspace::empty(5, 3);
        for &(u, v) in s.duads() {
            span = span.span(&perp(&m[u], form)?.meet(&perp(&m[v], form)?)?)?;
        }
        polar_spans &= span == lp;
    }

    let iso = Isomorphism {
        points: point_map.clone(),
        lines: line_map.clone(),
    };
    let preserves = !line_map.contains(&usize::MAX) && iso.is_valid(w2, &syl);
    let pins: Vec<(usize, usize)> = point_map.iter().copied().enumerate().collect();
    let search_agrees = isomorphism(w2, &syl, Some(&pins)).is_some();
    Ok(W2MapReport {
        point_map,
        line_map,
        preserves_incidence: preserves,
        type_one_equivalence: type_one,
        type_two_equivalence: type_two,
        polar_spans,
        search_agrees,
    })
}

/// Points are the vectors of GF(q)^n (by code); lines are the cosets
/// `v + U` for the subspaces `U` of `lines`, ordered by subspace then by
/// smallest member.
pub fn linear_representation(lines: &LineSet) -> IncidenceStructure {
    let first = &lines.lines()[0];
    let (n, q) = (first.basis().cols(), first.modulus());
    let total = (q as usize).pow(n as u32);
    let mut out = Vec::new();
    for u in lines.lines() {
        let mut members: Vec<Vec<u8>> = u.vectors();
        members.push(vec![0; n]);
        let mut seen = FixedBitSet::with_capacity(total);
        for code in 0..total {
            if seen.contains(code) {
                continue;
            }
            let v = decode_vector(code, n, q);
            let coset: Vec<usize> = members
                .iter()
                .map(|w| {
                    let s: Vec<u8> = v.iter().zip(w).map(|(a, b)| (a + b) % q).collect();
                    vector_code(&s, q)
                })
                .collect();
            for &c in &coset {
                seen.insert(c);
            }
            out.push(coset);
        }
    }
    IncidenceStructure::new(total, out).expect("cosets of disjoint subspaces form a partial linear space")
}
