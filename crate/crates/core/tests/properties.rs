//! Randomized invariants of the algebra and geometry layers.

use mathon_core::forms::{self, AlternatingForm, QuadraticForm};
use mathon_core::groups;
use mathon_core::linalg::Matrix;
use mathon_core::pipeline;
use mathon_core::projective::{gaussian_binomial, Subspace};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

fn config(cases: u32) -> Config {
    Config {
        cases,
        rng_seed: RngSeed::Fixed(20260501),
        failure_persistence: None,
        ..Config::default()
    }
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(0u8..3, rows * cols).prop_map(move |d| Matrix::from_data(3, rows, cols, d).unwrap())
}

fn square6() -> impl Strategy<Value = Matrix> {
    matrix(6, 6)
}

fn invertible(n: usize) -> impl Strategy<Value = Matrix> {
    matrix(n, n).prop_filter("singular", |m| m.is_invertible())
}

fn subspace() -> impl Strategy<Value = Subspace> {
    (1usize..=6).prop_flat_map(|k| matrix(k, 6)).prop_map(|m| Subspace::canonicalize(&m))
}

fn line() -> impl Strategy<Value = Subspace> {
    matrix(2, 6)
        .prop_filter("rank 2", |m| m.rank() == 2)
        .prop_map(|m| Subspace::canonicalize(&m))
}

fn nondegenerate_alternating() -> impl Strategy<Value = AlternatingForm> {
    prop::collection::vec(0u8..3, 15).prop_filter_map("degenerate", |v| {
        let mut m = Matrix::zeros(3, 6, 6);
        let mut it = v.into_iter();
        for i in 0..6 {
            for j in i + 1..6 {
                let x = it.next().unwrap() as i64;
                m = m.with_entry(i, j, x).with_entry(j, i, -x);
            }
        }
        AlternatingForm::new(m).ok().filter(|f| f.gram().is_invertible())
    })
}

fn nondegenerate_symmetric() -> impl Strategy<Value = QuadraticForm> {
    prop::collection::vec(0u8..3, 21).prop_filter_map("degenerate", |v| {
        let mut m = Matrix::zeros(3, 6, 6);
        let mut it = v.into_iter();
        for i in 0..6 {
            for j in i..6 {
                let x = it.next().unwrap() as i64;
                m = m.with_entry(i, j, x).with_entry(j, i, x);
            }
        }
        QuadraticForm::new(m).ok().filter(|f| f.sym().is_invertible())
    })
}

proptest! {
    #![proptest_config(config(1000))]

    #[test]
    fn multiplication_is_associative(a in square6(), b in square6(), c in square6()) {
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
    }

    #[test]
    fn rref_is_idempotent_and_rank_preserving(m in (1usize..7, 1usize..7).prop_flat_map(|(r, c)| matrix(r, c))) {
        let (r, _) = m.rref();
        prop_assert_eq!(r.rank(), m.rank());
        prop_assert_eq!(&r.rref().0, &r);
        prop_assert_eq!(m.solve_homogeneous().rows() + m.rank(), m.cols());
    }

    #[test]
    fn canonical_form_ignores_row_operations(rows in (1usize..=6).prop_flat_map(|k| (matrix(k, 6), invertible(k)))) {
        let (m, g) = rows;
        prop_assert_eq!(Subspace::canonicalize(&(&g * &m)), Subspace::canonicalize(&m));
    }

    #[test]
    fn dimension_formula(a in subspace(), b in subspace()) {
        let (span, meet) = (a.span(&b).unwrap(), a.meet(&b).unwrap());
        prop_assert_eq!(span.vdim() + meet.vdim(), a.vdim() + b.vdim());
        prop_assert!(span.contains(&a).unwrap() && a.contains(&meet).unwrap());
    }

    #[test]
    fn opposite_is_symmetric(a in line(), b in line(), f in nondegenerate_alternating()) {
        prop_assert_eq!(forms::are_opposite(&a, &b, &f).unwrap(), forms::are_opposite(&b, &a, &f).unwrap());
    }
}

proptest! {
    #![proptest_config(config(300))]

    #[test]
    fn inverse_is_two_sided(m in invertible(6)) {
        let inv = m.inverse().unwrap();
        prop_assert_eq!(&inv * &m, Matrix::identity(3, 6));
        prop_assert_eq!(&m * &inv, Matrix::identity(3, 6));
    }

    #[test]
    fn perp_is_an_involution(s in subspace(), f in nondegenerate_alternating(), q in nondegenerate_symmetric()) {
        let p = forms::perp(&s, &f).unwrap();
        prop_assert_eq!(p.vdim() + s.vdim(), 6);
        prop_assert_eq!(forms::perp(&p, &f).unwrap(), s.clone());
        let p = forms::perp(&s, &q).unwrap();
        prop_assert_eq!(p.vdim() + s.vdim(), 6);
        prop_assert_eq!(forms::perp(&p, &q).unwrap(), s);
    }

    #[test]
    fn perp_of_m15_is_an_involution(s in subspace()) {
        let f = pipeline::m15().unwrap();
        prop_assert_eq!(forms::perp(&forms::perp(&s, &f).unwrap(), &f).unwrap(), s);
    }

    #[test]
    fn line_action_is_a_right_action(g in invertible(6), h in invertible(6), s in subspace()) {
        prop_assert_eq!(groups::line_action(&Matrix::identity(3, 6), &s), s.clone());
        prop_assert_eq!(
            groups::line_action(&(&g * &h), &s),
            groups::line_action(&h, &groups::line_action(&g, &s))
        );
        prop_assert_eq!(groups::line_action(&g, &s).vdim(), s.vdim());
    }

    #[test]
    fn nondegenerate_quadrics_have_112_or_130_points(q in nondegenerate_symmetric()) {
        let (_, n) = forms::classify_quadric(&q).unwrap();
        prop_assert!(n == 112 || n == 130);
    }
}

#[test]
fn lines_and_solids_of_pg53() {
    let space = mathon_core::projective::AmbientSpace::new(5, 3);
    let lines = space.lines();
    assert_eq!(lines.len() as u64, gaussian_binomial(6, 2, 3));
    assert_eq!(lines.len(), 11011);
    let unique: std::collections::HashSet<_> = lines.iter().collect();
    assert_eq!(unique.len(), 11011);
    for l in lines {
        assert_eq!(l.basis().rref().0, *l.basis());
        assert_eq!(l.points().len(), 4);
    }
    let solids = space.solids();
    assert_eq!(solids.len(), 11011);
    assert!(solids.iter().take(50).all(|s| s.points().len() == 40));
}

#[test]
fn lemma1_sampling_agrees() {
    let (n, agree, accepted) = mathon_core::report::lemma1_sampling(500, 7);
    assert_eq!((n, agree), (500, 500));
    assert!(accepted > 0);
}

#[test]
fn materialized_closure_is_closed() {
    let g = pipeline::f5_stabilizer().unwrap();
    let els = g.elements().unwrap();
    let set: std::collections::HashSet<&Matrix> = els.iter().collect();
    for x in els.iter().step_by(7) {
        for y in els {
            assert!(set.contains(&(x * y)));
        }
    }
}
