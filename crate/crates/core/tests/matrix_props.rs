//! Invariants of the Maxwell matrix on small random plate stacks.

use std::sync::Arc;

use flipmon::geometry::{validate, Cuboid, Material, PlatePairParams, Solid};
use flipmon::solver::{build_grid, capacitance_matrix, GridPolicy, SolverSettings};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn maxwell_matrix_invariants(
        side in 20.0f64..80.0,
        gap in 2.0f64..8.0,
        eps in 1.0f64..12.0,
        fill in 0.1f64..0.9,
    ) {
        let p = PlatePairParams { side, gap_d: gap, plate_thickness: 1.0 };
        let mut g = p.build().unwrap();
        g.materials.push(Material::dielectric("fill", eps));
        g.solids.push(Solid::new(Cuboid::new([0.0, 0.0, 0.0], [side, side, fill * gap]), "fill", None));
        let grid = Arc::new(build_grid(Arc::new(validate(g).unwrap()), &GridPolicy::default()).unwrap());
        let run = capacitance_matrix(&grid, &SolverSettings::default()).unwrap();
        let m = &run.matrix;
        prop_assert!(m.asymmetry < 1e-4);
        for i in 0..m.len() {
            prop_assert!(m.entries[i][i] > 0.0);
            for j in 0..m.len() {
                if i != j {
                    prop_assert!(m.entries[i][j] <= 0.0);
                }
            }
            // Insulating walls and no ground: every row sums to zero.
            prop_assert!(m.row_sum(i).abs() < 1e-6 * m.entries[i][i]);
        }
        // Series layers bound the result.
        let c = -m.entries[0][1];
        let a = (side * 1e-6).powi(2);
        let e0 = flipmon::constants::VACUUM_PERMITTIVITY;
        let series = e0 * a / ((fill * gap / eps + (1.0 - fill) * gap) * 1e-6);
        prop_assert!((c / series - 1.0).abs() < 1e-3, "{} vs {}", c, series);
    }
}
