mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use proxbounds::bridge::*;
use proxbounds::{Error, JointPmf, Role};

#[test]
fn square_invertible_system_is_feasible() {
    let k = DMatrix::from_row_slice(2, 2, &[0.8, 0.2, 0.3, 0.7]);
    let t = DVector::from_vec(vec![1.0, 2.0]);
    let (ok, res, h) = solve_bridge(&k, &t);
    assert!(ok && res < 1e-12);
    assert!((h[0] - 0.6).abs() < 1e-12 && (h[1] - 2.6).abs() < 1e-12);
}

#[test]
fn three_latent_two_proxy_system_is_infeasible() {
    let k = DMatrix::from_row_slice(3, 2, &[0.2, 0.8, 0.5, 0.5, 0.8, 0.2]);
    let t = DVector::from_vec(vec![1.0, 3.0, 1.0]);
    let (ok, res, _) = solve_bridge(&k, &t);
    assert!(!ok && res > 1e-3);
    // Independent check: no point of a fine non-negative lattice comes close.
    let mut best = f64::INFINITY;
    for i in 0..=1000 {
        for j in 0..=1000 {
            let h = DVector::from_vec(vec![i as f64 * 0.01, j as f64 * 0.01]);
            best = best.min((&k * h - &t).amax());
        }
    }
    assert!(best > 1e-3, "{best}");
    assert!(res >= best - 1e-9);
}

#[test]
fn negative_solution_is_infeasible() {
    // The unique exact solution is (−1, 2).
    let k = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, 0.5]);
    let t = DVector::from_vec(vec![-1.0, 0.5]);
    let (ok, res, h) = solve_bridge(&k, &t);
    assert!(!ok && res > 1e-3);
    assert!(h.iter().all(|&v| v >= 0.0));
}

proptest! {
    #[test]
    fn constructed_targets_are_feasible_and_stay_feasible_with_more_columns(
        rows in 1usize..5, cols in 1usize..5,
        seed in prop::collection::vec(0.05f64..1.0, 40),
        extra in prop::collection::vec(0.0f64..1.0, 5),
    ) {
        let k = DMatrix::from_fn(rows, cols, |i, j| seed[i * cols + j]);
        let h = DVector::from_fn(cols, |j, _| seed[20 + j] * 3.0);
        let t = &k * &h;
        let (ok, res, sol) = solve_bridge(&k, &t);
        prop_assert!(ok, "residual {res}");
        prop_assert!((&k * &sol - &t).amax() <= BRIDGE_TOLERANCE);
        let wider = DMatrix::from_fn(rows, cols + 1, |i, j| if j < cols { k[(i, j)] } else { extra[i] });
        prop_assert!(solve_bridge(&wider, &t).0);
    }

    #[test]
    fn feasible_verdicts_are_sound(
        rows in 1usize..5, cols in 1usize..5,
        entries in prop::collection::vec(0.0f64..1.0, 25),
        target in prop::collection::vec(-1.0f64..3.0, 5),
    ) {
        let k = DMatrix::from_fn(rows, cols, |i, j| entries[i * 5 + j]);
        let t = DVector::from_fn(rows, |i, _| target[i]);
        let (ok, res, sol) = solve_bridge(&k, &t);
        prop_assert!(sol.iter().all(|&v| v >= 0.0));
        prop_assert!(((&k * &sol - &t).amax() - res).abs() < 1e-12);
        if ok {
            prop_assert!(res <= BRIDGE_TOLERANCE);
        }
    }
}

#[test]
fn fixtures_admit_bridges() {
    let conf = load_joint("conf_small.json");
    let h = check_outcome_bridge(&conf, OutcomeVariant::Confounder).unwrap();
    assert!(h.overall_feasible && h.cells.len() == 4);
    let q = check_treatment_bridge(&conf).unwrap();
    assert!(q.overall_feasible);
    for c in &q.cells {
        assert!((c.normalization.unwrap() - 1.0).abs() < 1e-8);
    }
    let med =
        check_outcome_bridge(&load_joint("med_small.json"), OutcomeVariant::Mediation).unwrap();
    assert!(med.overall_feasible && med.cells.iter().all(|c| c.a.is_none()));
    let fd = check_outcome_bridge(&load_joint("fd_small.json"), OutcomeVariant::Frontdoor).unwrap();
    assert!(fd.overall_feasible);
}

fn confounder(nu: usize, nw: usize, nz: usize, weight: impl Fn(&[usize]) -> f64) -> JointPmf {
    let cb = codebook(
        &[
            ("U", nu, Role::LatentConfounder),
            ("X", 2, Role::Covariate),
            ("W", nw, Role::OutcomeProxy),
            ("Z", nz, Role::TreatmentProxy),
            ("A", 2, Role::Treatment),
            ("Y", 3, Role::Outcome),
        ],
        vec![0.0, 1.0, 2.0],
    );
    JointPmf::from_fn(cb, weight).unwrap()
}

#[test]
fn outcome_free_of_latent_gives_constant_bridge() {
    // Y depends only on (X, A), so h(w) = E[Y | a, x] works for every cell.
    let j = confounder(3, 2, 2, |i| {
        scramble(&[i[0], i[1], i[2], i[3], i[4]]) * scramble(&[i[1], i[4], i[5]])
    });
    let r = check_outcome_bridge(&j, OutcomeVariant::Confounder).unwrap();
    assert!(r.overall_feasible);
    for c in &r.cells {
        let a = c.a.unwrap() as usize;
        let m = ysum(&j, &[("X", c.x), ("A", a)]) / p(&j, &[("X", c.x), ("A", a)]);
        // With |W| < |U| the solution is unique, so it must be the constant.
        for v in c.solution.as_ref().unwrap() {
            assert!((v - m).abs() < 1e-8, "{v} vs {m}");
        }
    }
}

#[test]
fn treatment_free_of_latent_gives_unit_bridge() {
    // A depends only on X, so the target ratio is 1 and q ≡ 1 is the unique solution.
    let j = confounder(2, 2, 2, |i| {
        scramble(&[i[0], i[1], i[2]])
            * [1.0, 2.0, 0.5, 1.5][i[0] * 2 + i[3]]
            * [1.0, 3.0][i[4]]
            * scramble(&[i[0], i[5]])
    });
    let r = check_treatment_bridge(&j).unwrap();
    assert!(r.overall_feasible);
    for c in &r.cells {
        for v in c.solution.as_ref().unwrap() {
            assert!((v - 1.0).abs() < 1e-8);
        }
        assert!((c.normalization.unwrap() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn splitting_a_proxy_level_preserves_feasibility() {
    let base = load_joint("conf_small.json");
    let cb = codebook(
        &[
            ("U", 2, Role::LatentConfounder),
            ("X", 2, Role::Covariate),
            ("W", 3, Role::OutcomeProxy),
            ("Z", 2, Role::TreatmentProxy),
            ("A", 2, Role::Treatment),
            ("Y", 3, Role::Outcome),
        ],
        base.codebook().y_values().to_vec(),
    );
    let split = JointPmf::from_fn(cb, |i| {
        let (w, share) = match i[2] {
            0 => (0, 1.0),
            1 => (1, 0.3),
            _ => (1, 0.7),
        };
        base.get(&[i[0], i[1], w, i[3], i[4], i[5]]) * share
    })
    .unwrap();
    assert!(
        check_outcome_bridge(&base, OutcomeVariant::Confounder)
            .unwrap()
            .overall_feasible
    );
    assert!(
        check_outcome_bridge(&split, OutcomeVariant::Confounder)
            .unwrap()
            .overall_feasible
    );
}

#[test]
fn empty_latent_level_in_a_cell_is_a_positivity_violation() {
    let j = confounder(2, 2, 2, |i| {
        if i[0] == 1 && i[1] == 0 && i[4] == 1 {
            0.0
        } else {
            scramble(i)
        }
    });
    assert!(matches!(
        check_treatment_bridge(&j),
        Err(Error::PositivityViolation(_))
    ));
}

#[test]
fn missing_latent_axis_is_reported() {
    assert!(matches!(
        check_outcome_bridge(&load_joint("med_small.json"), OutcomeVariant::Confounder),
        Err(Error::MissingRole(_))
    ));
}
