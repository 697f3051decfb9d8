//! Randomized invariants of refinement, hanging constraints and formatting.

mod common;

use std::collections::BTreeSet;

use common::unit_square;
use fsidwr::driver::sci;
use fsidwr::fem::ScalarDofs;
use fsidwr::{ConstraintSet, MeshGeometry};
use proptest::prelude::*;

fn refine_randomly(picks: &[Vec<usize>]) -> fsidwr::Mesh {
    let mut mesh = unit_square(2);
    for round in picks {
        let active = mesh.active_cells().to_vec();
        let marks: BTreeSet<usize> = round.iter().map(|&k| active[k % active.len()]).collect();
        mesh = mesh.refine(&marks);
    }
    mesh
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn refinement_keeps_area_and_one_irregularity(picks in prop::collection::vec(prop::collection::vec(0usize..1000, 1..4), 1..4)) {
        let before = unit_square(2);
        let mesh = refine_randomly(&picks);
        mesh.validate().unwrap();
        prop_assert!(mesh.is_one_irregular());
        prop_assert!((mesh.total_area() - before.total_area()).abs() < 1e-14);
        prop_assert_eq!((mesh.n_active_cells() - before.n_active_cells()) % 3, 0);
    }

    #[test]
    fn constrained_fields_are_continuous(picks in prop::collection::vec(prop::collection::vec(0usize..1000, 1..4), 1..4),
                                         degree in 1usize..=3, coef in prop::array::uniform4(-1.0f64..1.0)) {
        // a random continuous piecewise polynomial: interpolate a global
        // polynomial, perturb the constrained dofs and let distribute repair them
        let mesh = refine_randomly(&picks);
        let geometry = MeshGeometry::new(&mesh, 1);
        let dofs = ScalarDofs::new(&mesh, &geometry, degree);
        let cs = ConstraintSet::hanging(&mesh, &dofs);
        let f = |p: [f64; 2]| coef[0] + coef[1] * p[0] + coef[2] * p[1] + coef[3] * p[0].powi(degree as i32) * p[1];
        let mut x: Vec<f64> = dofs.support_points().iter().map(|&p| f(p)).collect();
        for (i, xi) in x.iter_mut().enumerate() {
            if cs.is_constrained(i) {
                *xi = 1e3;
            }
        }
        cs.distribute(&mut x);
        for (i, &p) in dofs.support_points().iter().enumerate() {
            prop_assert!((x[i] - f(p)).abs() < 1e-12);
        }
    }

    #[test]
    fn sci_round_trips(m in -10.0f64..10.0, e in -300i32..300) {
        let x = m * 10f64.powi(e);
        let back: f64 = sci(x, 3).parse().unwrap();
        prop_assert!((back - x).abs() <= 5e-4 * x.abs());
    }
}
