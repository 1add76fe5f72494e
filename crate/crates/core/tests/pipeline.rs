use itertools::Itertools;
use mathon_core::forms;
use mathon_core::geometries::{self, check_gq, check_partial_geometry, check_srg, IncidenceStructure};
use mathon_core::groups;
use mathon_core::matrix;
use mathon_core::pipeline::{self, Construction, LineSet, PipelineError};
use mathon_core::projective::AmbientSpace;
use mathon_core::report;

fn space() -> AmbientSpace {
    AmbientSpace::new(5, 3)
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let a = report::to_json(&report::run_pipeline(0, false).unwrap());
    let b = report::to_json(&report::run_pipeline(0, false).unwrap());
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["schema_version"], report::SCHEMA_VERSION);
    assert_eq!(v["passed"], true);
    assert!(v["timings_ms"].as_object().unwrap().is_empty());
}

#[test]
fn every_seed_gives_the_same_shape() {
    let space = space();
    let base = Construction::run(0, &space).unwrap();
    for i in 0..24 {
        let c = Construction::run(i, &space).unwrap();
        let sizes = [c.l.len(), c.f5.len(), c.f6.len(), c.f15.len(), c.m21.len()];
        assert_eq!(sizes, [24, 5, 6, 15, 21], "seed {i}");
        assert!(c.perp_report.is_partial_perp_system && c.perp_report.is_maximal, "seed {i}");
        // the conjugator carries the whole construction
        let h = &c.conjugator;
        assert!(c.m21.same_set(&base.m21.image(h)), "seed {i}");
        assert!(c.f6.same_set(&base.f6.image(h)), "seed {i}");
        assert_eq!(*c.form.gram(), pipeline::transport_form(base.form.gram(), h).unwrap());
    }
}

#[test]
fn seed_out_of_range_is_an_error() {
    assert!(matches!(
        Construction::run(24, &space()),
        Err(PipelineError::SeedOutOfRange(24))
    ));
}

#[test]
fn line_outside_l_is_rejected() {
    let i = pipeline::identity2();
    let not_in_l = pipeline::block_line(&i, &i, &i.scale(2));
    assert!(matches!(pipeline::f5(&not_in_l), Err(PipelineError::NotInL(_))));
}

#[test]
fn f15_lines_sit_in_exactly_one_pair_solid() {
    let c = Construction::run(0, &space()).unwrap();
    let solids = pipeline::pair_spans(c.f6.lines());
    assert_eq!(solids.len(), 15);
    for (k, l) in c.f15.lines().iter().enumerate() {
        let inside: Vec<usize> = solids
            .iter()
            .enumerate()
            .filter(|(_, (_, s))| s.contains(l).unwrap())
            .map(|(j, _)| j)
            .collect();
        assert_eq!(inside.len(), 1);
        for (j, (_, s)) in solids.iter().enumerate() {
            if j != inside[0] {
                assert!(l.is_disjoint(s).unwrap());
            }
        }
        assert_eq!(solids[inside[0]].0, c.f15_entries[k].pair);
    }
}

#[test]
fn m15_lies_in_the_family_and_spans_the_semi_invariants() {
    let f5 = pipeline::f5(&pipeline::standard_seed()).unwrap();
    let family = groups::forms_vanishing_on_lines(f5.lines(), 3, 6);
    assert_eq!(family.len(), 10);
    let m15 = pipeline::m15_gram();
    assert!(groups::coordinates_in(&family, &m15).is_some());
    let (r, s) = pipeline::standard_rs();
    assert!(family.iter().all(|g| pipeline::has_f5_block_shape(g, &r, &s)));
    let spaces = groups::invariant_alternating_forms(&pipeline::f5_stabilizer().unwrap());
    assert_eq!(spaces.len(), 1);
    assert!(spaces[0].contains(&m15));
}

#[test]
fn perturbing_a_line_breaks_the_perp_system() {
    let c = Construction::run(0, &space()).unwrap();
    let mut lines = c.m21.lines().to_vec();
    lines[20] = lines[0].clone();
    let rep = forms::verify_perp_system(&lines, &c.form);
    assert!(!rep.is_partial_perp_system);
    assert!(rep.failing_pairs.iter().any(|p| (p.i, p.j) == (0, 20)));

    // the wrong form: M0 makes the seed lines singular
    let rep = forms::verify_perp_system(c.m21.lines(), &pipeline::m0());
    assert!(!rep.is_partial_perp_system);

    // F6 alone is partial but not maximal
    let rep = forms::verify_perp_system(c.f6.lines(), &c.form);
    assert!(rep.is_partial_perp_system && !rep.is_maximal);
    let rep = forms::verify_perp_system(pipeline::f4().lines(), &pipeline::m0());
    assert!(!rep.all_nonsingular);
}

#[test]
fn f15_under_the_wrong_form_is_reported() {
    let c = Construction::run(0, &space()).unwrap();
    match pipeline::f15(&c.f6, &pipeline::m0()) {
        Err(PipelineError::UniquenessViolated { count, .. }) => assert_ne!(count, 1),
        other => panic!("expected a uniqueness failure, got {other:?}"),
    }
}

#[test]
fn lineset_rejects_duplicates_and_non_lines() {
    let l = pipeline::standard_seed();
    assert!(LineSet::new("x", vec![l.clone(), l.clone()]).is_err());
    let point = mathon_core::projective::Subspace::point(3, &[1, 0, 0, 0, 0, 0]);
    assert!(LineSet::new("x", vec![point]).is_err());
}

#[test]
fn lemma_reports_pass() {
    for lemma in report::LEMMAS {
        let r = report::verify_lemma(lemma, 0).unwrap();
        assert!(r.passed, "lemma {lemma}: {:?}", r.checks.failed());
    }
}

#[test]
fn polarity_search_without_budget_and_invariants_fails_cleanly() {
    let r = report::run_polarity_search(0, 0, 1, report::SearchGroupChoice::Full).unwrap();
    assert!(!r.passed);
    assert!(r.error.is_some());
    assert_eq!(r.random_trials, 0);
}

#[test]
fn polarity_witnesses_are_deterministic() {
    let a = report::run_polarity_search(0, 100_000, 1, report::SearchGroupChoice::Cyclic).unwrap();
    let b = report::run_polarity_search(0, 100_000, 1, report::SearchGroupChoice::Cyclic).unwrap();
    assert!(a.passed);
    assert_eq!(report::to_json(&a), report::to_json(&b));
}

// ---- geometry ----

#[test]
fn w2_and_linear_representation() {
    let c = Construction::run(0, &space()).unwrap();
    let f10 = geometries::f10(&c.f5, &c.form).unwrap();
    let w2 = geometries::build_w2(&c.f15, &c.f5, &f10, &c.form).unwrap();
    assert_eq!(check_gq(&w2).unwrap(), (2, 2));
    let pg = check_partial_geometry(&w2).unwrap();
    let srg = check_srg(&w2, &pg).unwrap();
    assert_eq!(srg.counted, srg.formula);
    // the first five lines (F5 type) each carry three points
    assert!((0..5).all(|l| w2.line(l).len() == 3));

    let syl = geometries::sylvester_model();
    let iso = geometries::isomorphism(&w2, &syl, None).unwrap();
    assert!(iso.is_valid(&w2, &syl));
    assert!(iso.inverse().is_valid(&syl, &w2));
    let back = geometries::isomorphism(&syl, &w2, None).unwrap();
    assert!(back.is_valid(&syl, &w2));
}

#[test]
fn sylvester_and_grid() {
    let syl = geometries::sylvester_model();
    assert_eq!((syl.point_count(), syl.line_count()), (15, 15));
    assert_eq!(check_gq(&syl).unwrap(), (2, 2));
    assert_eq!(geometries::spreads().len(), 6);
    assert_eq!(geometries::synthemes().len(), 15);
    let grid = geometries::grid3x3();
    assert_eq!(check_gq(&grid).unwrap(), (2, 1));
    assert!(geometries::isomorphism(&syl, &grid, None).is_none());
}

#[test]
fn incidence_structure_rejects_bad_input() {
    assert!(IncidenceStructure::new(3, vec![vec![0, 1], vec![0, 1, 2]]).is_err());
    assert!(IncidenceStructure::new(3, vec![vec![0, 3]]).is_err());
    assert!(IncidenceStructure::new(3, vec![vec![0, 0]]).is_err());
}

#[test]
fn srg_parameters_satisfy_the_feasibility_identity() {
    for (s, t, alpha) in [(8, 20, 2), (2, 2, 1), (2, 1, 1), (3, 3, 1)] {
        let p = geometries::PGParams { s, t, alpha }.srg_formula();
        assert!(p.is_feasible(), "{p:?}");
        assert_eq!(p.k * (p.k - p.lambda - 1), (p.v - p.k - 1) * p.mu);
    }
}

#[test]
fn linear_representation_of_a_spread_is_a_net() {
    // a line spread of a 4-space gives the affine plane of order 9
    let lines: Vec<_> = [
        matrix![3; [1, 0, 0, 0], [0, 1, 0, 0]],
        matrix![3; [0, 0, 1, 0], [0, 0, 0, 1]],
    ]
    .iter()
    .map(mathon_core::projective::Subspace::canonicalize)
    .collect();
    let set = LineSet::new("net", lines).unwrap();
    let inc = geometries::linear_representation(&set);
    assert_eq!((inc.point_count(), inc.line_count()), (81, 18));
    assert!(inc.collinearity().iter().all(|row| row.count_ones(..) == 16));
}

#[test]
fn complement_pairs_are_all_lines() {
    let c = Construction::run(0, &space()).unwrap();
    let rep = pipeline::complement_analysis(&c.m21, &space());
    for (a, b) in rep.complement_solids.iter().tuple_combinations() {
        assert_eq!(a.meet(b).unwrap().vdim(), 2);
    }
}

#[test]
fn fixed_lines_of_cd_and_dc() {
    let space = space();
    let (c, d) = (pipeline::stabilizer_c(), pipeline::stabilizer_d());
    let table = pipeline::reference::f6_lines();
    let cd = groups::fixed_lines(&(&c * &d), &space);
    assert_eq!(cd, vec![table[0].clone()]);
    // DC fixes the fifth reference line, not the second
    let dc = groups::fixed_lines(&(&d * &c), &space);
    assert_eq!(dc, vec![table[4].clone()]);
    assert_eq!(groups::fixed_lines(&groups::MatrixGroup::trivial(6, 3).identity(), &space).len(), 11011);
}

#[test]
fn f15_is_ordered_by_pair() {
    let c = Construction::run(0, &space()).unwrap();
    let pairs: Vec<(usize, usize)> = c.f15_entries.iter().map(|e| e.pair).collect();
    assert_eq!(pairs, (0..6).tuple_combinations().collect::<Vec<_>>());
    let first = mathon_core::projective::Subspace::canonicalize(&matrix![3; [1, 0, 1, 2, 0, 0], [0, 1, 1, 0, 0, 0]]);
    assert_eq!(c.f15.lines()[0], first);
    // the first reference line belongs to the last pair
    let known = &pipeline::reference::f15_lines()[0];
    let k = c.f15.lines().iter().position(|l| l == known).unwrap();
    assert_eq!(pairs[k], (4, 5));
}
