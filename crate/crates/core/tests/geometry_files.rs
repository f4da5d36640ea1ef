use std::path::Path;
use std::sync::Arc;

use flipmon::geometry::{from_toml_str, read_geometry, to_toml_string, validate, FlipmonParams, PlanarParams, PlatePairParams};
use flipmon::solver::{build_grid, capacitance_matrix, GridPolicy, SolverSettings};

fn geometry_file(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/geometries").join(name)
}

#[test]
fn shipped_geometries_match_templates() {
    let cases = [
        ("flipmon.toml", FlipmonParams::default().build().unwrap()),
        ("planar_transmon.toml", PlanarParams::default().build().unwrap()),
        ("plate_pair.toml", PlatePairParams::default().build().unwrap()),
    ];
    for (file, template) in cases {
        let g = read_geometry(&geometry_file(file)).unwrap();
        assert_eq!(g, template, "{file}");
        let again = from_toml_str(&to_toml_string(&g).unwrap()).unwrap();
        assert_eq!(again, g, "{file}");
        validate(g).unwrap();
    }
}

#[test]
fn plate_file_solves_like_the_template() {
    let g = read_geometry(&geometry_file("plate_pair.toml")).unwrap();
    let grid = Arc::new(build_grid(Arc::new(validate(g).unwrap()), &GridPolicy::default()).unwrap());
    let run = capacitance_matrix(&grid, &SolverSettings::default()).unwrap();
    let c = -run.matrix.get("plate_top", "plate_bottom").unwrap();
    let p = PlatePairParams::default();
    let exact = flipmon::constants::parallel_plate_capacitance((p.side * 1e-6).powi(2), p.gap_d * 1e-6, 1.0);
    assert!((c / exact - 1.0).abs() < 1e-6);
}
