//! Brute-force GF(3) oracle for PG(5,3), written against raw arrays so it
//! shares no code with the library. Points are codes of normalized vectors
//! (first nonzero coordinate 1); subspaces are sorted point-code lists.

#![allow(dead_code)]

use std::collections::BTreeSet;

pub const N: usize = 6;
pub type Vec6 = [u8; N];
pub type Mat6 = [[u8; N]; N];

pub fn code(v: &Vec6) -> usize {
    v.iter().fold(0, |a, &x| a * 3 + x as usize)
}

pub fn decode(mut c: usize) -> Vec6 {
    let mut v = [0u8; N];
    for i in (0..N).rev() {
        v[i] = (c % 3) as u8;
        c /= 3;
    }
    v
}

pub fn normalize(v: &Vec6) -> Option<Vec6> {
    let lead = *v.iter().find(|&&x| x != 0)?;
    // 1 and 2 are self-inverse mod 3
    Some(v.map(|x| (x * lead) % 3))
}

pub fn add(a: &Vec6, b: &Vec6) -> Vec6 {
    let mut r = [0; N];
    for i in 0..N {
        r[i] = (a[i] + b[i]) % 3;
    }
    r
}

pub fn scale(a: &Vec6, s: u8) -> Vec6 {
    a.map(|x| (x * s) % 3)
}

pub fn bilinear(x: &Vec6, g: &Mat6, y: &Vec6) -> u8 {
    let mut s = 0u32;
    for i in 0..N {
        for j in 0..N {
            s += x[i] as u32 * g[i][j] as u32 * y[j] as u32;
        }
    }
    (s % 3) as u8
}

pub fn quadratic(x: &Vec6, s: &Mat6) -> u8 {
    bilinear(x, s, x)
}

pub fn vec_times(v: &Vec6, g: &Mat6) -> Vec6 {
    let mut r = [0u8; N];
    for j in 0..N {
        let mut s = 0u32;
        for i in 0..N {
            s += v[i] as u32 * g[i][j] as u32;
        }
        r[j] = (s % 3) as u8;
    }
    r
}

pub fn mat_mul(a: &Mat6, b: &Mat6) -> Mat6 {
    let mut r = [[0u8; N]; N];
    for i in 0..N {
        r[i] = vec_times(&a[i], b);
    }
    r
}

pub fn transpose(a: &Mat6) -> Mat6 {
    let mut r = [[0u8; N]; N];
    for i in 0..N {
        for j in 0..N {
            r[i][j] = a[j][i];
        }
    }
    r
}

pub fn identity() -> Mat6 {
    let mut r = [[0u8; N]; N];
    for i in 0..N {
        r[i][i] = 1;
    }
    r
}

pub fn mat_from(rows: &[[u8; N]; N]) -> Mat6 {
    *rows
}

/// Rank of a list of vectors of any length over GF(3).
pub fn rank(rows: &[Vec<u8>]) -> usize {
    let mut m: Vec<Vec<u8>> = rows.to_vec();
    let cols = m.first().map(|r| r.len()).unwrap_or(0);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..m.len()).find(|&i| m[i][c] != 0) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c]; // self-inverse
        for x in m[r].iter_mut() {
            *x = (*x * inv) % 3;
        }
        for i in 0..m.len() {
            if i != r && m[i][c] != 0 {
                let f = m[i][c];
                for j in 0..cols {
                    m[i][j] = (m[i][j] + 3 * 3 - f * m[r][j] % 3) % 3;
                }
            }
        }
        r += 1;
    }
    r
}

/// All points of the span of `basis`, as sorted codes.
pub fn span_points(basis: &[Vec6]) -> Vec<usize> {
    let k = basis.len();
    let mut set = BTreeSet::new();
    for c in 1..3usize.pow(k as u32) {
        let mut v = [0u8; N];
        let mut t = c;
        for b in basis {
            v = add(&v, &scale(b, (t % 3) as u8));
            t /= 3;
        }
        if let Some(n) = normalize(&v) {
            set.insert(code(&n));
        }
    }
    set.into_iter().collect()
}

/// A subspace by its point codes (sorted).
pub type PointSet = Vec<usize>;

pub fn all_points() -> Vec<usize> {
    (1..729)
        .map(decode)
        .filter(|v| normalize(v) == Some(*v))
        .map(|v| code(&v))
        .collect()
}

/// All 11011 lines of PG(5,3), from pairs of points.
pub fn all_lines() -> Vec<PointSet> {
    let pts = all_points();
    let mut set = BTreeSet::new();
    for (i, &a) in pts.iter().enumerate() {
        for &b in &pts[i + 1..] {
            set.insert(span_points(&[decode(a), decode(b)]));
        }
    }
    set.into_iter().collect()
}

pub fn line_from_rows(rows: [[u8; N]; 2]) -> PointSet {
    span_points(&rows)
}

pub fn disjoint(a: &PointSet, b: &PointSet) -> bool {
    a.iter().all(|p| b.binary_search(p).is_err())
}

pub fn subset(a: &PointSet, b: &PointSet) -> bool {
    a.iter().all(|p| b.binary_search(p).is_ok())
}

pub fn join(a: &PointSet, b: &PointSet) -> PointSet {
    let mut basis: Vec<Vec6> = Vec::new();
    for &p in a.iter().chain(b.iter()) {
        let v = decode(p);
        let mut rows: Vec<Vec<u8>> = basis.iter().map(|x| x.to_vec()).collect();
        rows.push(v.to_vec());
        if rank(&rows) > basis.len() {
            basis.push(v);
        }
    }
    span_points(&basis)
}

/// Points of `b` orthogonal to every point of `a`.
pub fn orthogonal_points(a: &PointSet, b: &PointSet, g: &Mat6) -> usize {
    b.iter()
        .filter(|&&y| a.iter().all(|&x| bilinear(&decode(x), g, &decode(y)) == 0))
        .count()
}

/// No point of `b` is orthogonal to all of `a`.
pub fn opposite(a: &PointSet, b: &PointSet, g: &Mat6) -> bool {
    orthogonal_points(a, b, g) == 0
}

pub fn totally_isotropic(a: &PointSet, g: &Mat6) -> bool {
    a.iter()
        .all(|&x| a.iter().all(|&y| bilinear(&decode(x), g, &decode(y)) == 0))
}

pub fn image(a: &PointSet, g: &Mat6) -> PointSet {
    let mut out: Vec<usize> = a
        .iter()
        .map(|&p| code(&normalize(&vec_times(&decode(p), g)).expect("invertible")))
        .collect();
    out.sort_unstable();
    out
}

/// Singular projective points of `x S xᵀ`.
pub fn singular_points(s: &Mat6) -> usize {
    all_points()
        .into_iter()
        .filter(|&p| quadratic(&decode(p), s) == 0)
        .count()
}

/// `q^e (q^f + 1) / (q^e + 1)` with `e = (d-2r-1)/2`, `f = (d+1)/2`.
pub fn perp_bound(d: u32, r: u32, q: u64) -> u64 {
    let e = (d - 2 * r - 1) / 2;
    let f = (d + 1) / 2;
    q.pow(e) * (q.pow(f) + 1) / (q.pow(e) + 1)
}

pub fn rows_to_mat(rows: Vec<Vec<u8>>) -> Mat6 {
    let mut m = [[0u8; N]; N];
    for i in 0..N {
        for j in 0..N {
            m[i][j] = rows[i][j];
        }
    }
    m
}

/// BFS closure of a matrix group given by generators.
pub fn closure(gens: &[Mat6]) -> Vec<Mat6> {
    let mut seen = BTreeSet::new();
    let mut queue = vec![identity()];
    seen.insert(identity());
    while let Some(x) = queue.pop() {
        for g in gens {
            let y = mat_mul(&x, g);
            if seen.insert(y) {
                queue.push(y);
            }
        }
    }
    seen.into_iter().collect()
}

pub fn is_scalar(m: &Mat6) -> bool {
    (0..N).all(|i| (0..N).all(|j| if i == j { m[i][j] == m[0][0] } else { m[i][j] == 0 }))
}

pub fn projective_order(m: &Mat6) -> usize {
    let mut acc = *m;
    let mut n = 1;
    while !is_scalar(&acc) {
        acc = mat_mul(&acc, m);
        n += 1;
    }
    n
}
