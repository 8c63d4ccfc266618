//! Plane scans of the root set: contour points must actually be roots of
//! the reduced coordinate functions, chains must be continuous, curves must
//! pass through independently solved joint roots, and grids too coarse to
//! see a provable root must be refused rather than silently empty.

mod common;

use common::load;
use contagion::{
    f_eval, rootset_scan, validate_spec, write_contours_csv, AnalyticError, AxisFunction,
    AxisMap, Capital, CoordArray, GridRect, LabeledPolyline, ModelSpec, RawAtom, RawSpec,
    SolverParams,
};

fn params() -> SolverParams {
    SolverParams::default()
}

/// Axis map for the single-type two-level fixtures: the plane is
/// (level-1 coordinate, level-2 coordinate).
fn two_impact_axes() -> AxisMap {
    AxisMap {
        x_coeffs: CoordArray::from_flat(2, 1, vec![1.0, 0.0]).unwrap(),
        y_coeffs: CoordArray::from_flat(2, 1, vec![0.0, 1.0]).unwrap(),
        x_carrier: Some((0, 0, 0)),
        y_carrier: Some((1, 0, 0)),
        functions: vec![
            AxisFunction {
                label: "impact_1".into(),
                coord: (0, 0, 0),
            },
            AxisFunction {
                label: "impact_2".into(),
                coord: (1, 0, 0),
            },
        ],
    }
}

/// Axis map for the strongly coupled two-subsystem fixture, using its exact
/// cross-feed ratios (x drives subsystem 1, y drives subsystem 2).
fn coupled_a_axes() -> AxisMap {
    AxisMap {
        x_coeffs: CoordArray::from_flat(1, 2, vec![1.0, 0.0, 0.5, 0.0]).unwrap(),
        y_coeffs: CoordArray::from_flat(1, 2, vec![0.0, 1.0, 0.0, 1.0]).unwrap(),
        x_carrier: Some((0, 0, 0)),
        y_carrier: Some((0, 1, 1)),
        functions: vec![
            AxisFunction {
                label: "subsystem_1".into(),
                coord: (0, 0, 0),
            },
            AxisFunction {
                label: "subsystem_2".into(),
                coord: (0, 1, 1),
            },
        ],
    }
}

fn square_grid(x1: f64, y1: f64, cells: usize) -> GridRect {
    GridRect {
        x0: 0.0,
        x1,
        y0: 0.0,
        y1,
        nx: cells,
        ny: cells,
    }
}

fn embed(axes: &AxisMap, spec: &ModelSpec, x: f64, y: f64) -> CoordArray {
    let mut z = CoordArray::zeros(spec.r_levels(), spec.t_types());
    for (slot, (xc, yc)) in z.as_mut_slice().iter_mut().zip(
        axes.x_coeffs
            .as_slice()
            .iter()
            .zip(axes.y_coeffs.as_slice()),
    ) {
        *slot = x * xc + y * yc;
    }
    z
}

// ============================================================================
// Contour points are roots
// ============================================================================

#[test]
fn contour_points_satisfy_their_reduced_functions() {
    let spec = load("two_impact_contagious.json");
    let axes = two_impact_axes();
    let grid = square_grid(2.2, 2.2, 220);
    let lines = rootset_scan(&spec, &axes, &grid, &params()).unwrap();
    assert!(!lines.is_empty());

    let mut checked = 0usize;
    for line in &lines {
        let coord = axes
            .functions
            .iter()
            .find(|f| f.label == line.label)
            .unwrap()
            .coord;
        for &(x, y) in &line.points {
            let f = f_eval(&spec, &embed(&axes, &spec, x, y));
            let residual = f.get(coord.0, coord.1, coord.2).abs();
            assert!(
                residual <= 2e-3,
                "{} at ({x:.4}, {y:.4}): residual {residual:.2e}",
                line.label
            );
            checked += 1;
        }
    }
    assert!(checked > 100, "only {checked} contour points");
}

#[test]
fn both_contours_pass_through_the_joint_root() {
    // Independently solved joint root of the coupled fixture in plane
    // coordinates; both reduced curves must pass within a grid cell of it.
    let spec = load("coupled_subsystems_a.json");
    let axes = coupled_a_axes();
    let grid = square_grid(2.5, 2.5, 250);
    let lines = rootset_scan(&spec, &axes, &grid, &params()).unwrap();
    let root = (1.991869, 0.760726);

    for label in ["subsystem_1", "subsystem_2"] {
        let min_dist = lines
            .iter()
            .filter(|l| l.label == label)
            .flat_map(|l| l.points.iter())
            .map(|&(x, y)| ((x - root.0).powi(2) + (y - root.1).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min)
        ;
        assert!(
            min_dist < 0.02,
            "{label}: closest contour point {min_dist:.4} from the joint root"
        );
    }
}

// ============================================================================
// Chain geometry
// ============================================================================

#[test]
fn chained_polylines_step_at_most_one_cell() {
    let spec = load("two_impact_contagious.json");
    let axes = two_impact_axes();
    let grid = square_grid(2.2, 2.2, 220);
    let lines = rootset_scan(&spec, &axes, &grid, &params()).unwrap();
    let dx = (grid.x1 - grid.x0) / grid.nx as f64;
    let dy = (grid.y1 - grid.y0) / grid.ny as f64;
    let max_step = (dx * dx + dy * dy).sqrt() * (1.0 + 1e-9);

    for line in &lines {
        assert!(line.points.len() >= 2);
        for pair in line.points.windows(2) {
            let (ax, ay) = pair[0];
            let (bx, by) = pair[1];
            let step = ((bx - ax).powi(2) + (by - ay).powi(2)).sqrt();
            assert!(
                step <= max_step,
                "{} segment {} jumps {step:.4}",
                line.label,
                line.segment_id
            );
        }
    }
}

// ============================================================================
// Coarse-grid refusal
// ============================================================================

/// Two-level single-type system with unit capital and supercritical weights:
/// its map sits weakly above the diagonal on the whole unit box, so no
/// reduced function changes sign there, yet the smallest joint root (the
/// origin) provably lies inside the box.
fn unit_capital_supercritical() -> ModelSpec {
    validate_spec(RawSpec {
        description: None,
        r_levels: 2,
        t_types: 1,
        atoms: vec![RawAtom {
            prob: 1.0,
            vtype: 1,
            in_weights: vec![vec![1.5], vec![1.5]],
            out_weights: vec![vec![1.5], vec![1.5]],
            capital: Capital::Finite(1),
            shock_prob: 0.0,
            importance: 1.0,
        }],
    })
    .unwrap()
}

#[test]
fn grid_without_sign_change_over_an_interior_root_is_refused() {
    let spec = unit_capital_supercritical();
    let axes = two_impact_axes();
    let grid = square_grid(1.0, 1.0, 50);
    match rootset_scan(&spec, &axes, &grid, &params()) {
        Err(AnalyticError::GridTooCoarse { label, x, y }) => {
            assert_eq!(label, "impact_1");
            assert!(x.abs() < 1e-9 && y.abs() < 1e-9);
        }
        other => panic!("expected GridTooCoarse, got {other:?}"),
    }
}

#[test]
fn coarse_grid_is_accepted_when_the_root_is_outside_the_box() {
    // Same system, but the box dodges the origin: an empty scan is then a
    // legitimate answer, not a resolution failure.
    let spec = unit_capital_supercritical();
    let axes = two_impact_axes();
    let grid = GridRect {
        x0: 0.25,
        x1: 1.0,
        y0: 0.25,
        y1: 1.0,
        nx: 30,
        ny: 30,
    };
    let lines = rootset_scan(&spec, &axes, &grid, &params()).unwrap();
    assert!(lines.is_empty());
}

#[test]
fn carrier_free_maps_never_trigger_the_refusal() {
    // Without carriers the scanner cannot place the solver root in the
    // plane, so it reports the empty scan as-is.
    let spec = unit_capital_supercritical();
    let mut axes = two_impact_axes();
    axes.x_carrier = None;
    axes.y_carrier = None;
    let grid = square_grid(1.0, 1.0, 50);
    let lines = rootset_scan(&spec, &axes, &grid, &params()).unwrap();
    assert!(lines.is_empty());
}

// ============================================================================
// Input validation and CSV output
// ============================================================================

#[test]
fn rejects_degenerate_scan_boxes() {
    let spec = load("two_impact_contagious.json");
    let axes = two_impact_axes();
    for grid in [
        GridRect {
            x0: -0.1,
            x1: 1.0,
            y0: 0.0,
            y1: 1.0,
            nx: 10,
            ny: 10,
        },
        GridRect {
            x0: 0.0,
            x1: 0.0,
            y0: 0.0,
            y1: 1.0,
            nx: 10,
            ny: 10,
        },
        GridRect {
            x0: 0.0,
            x1: 1.0,
            y0: 0.0,
            y1: 1.0,
            nx: 0,
            ny: 10,
        },
    ] {
        assert!(matches!(
            rootset_scan(&spec, &axes, &grid, &params()),
            Err(AnalyticError::InvalidTolerance(_))
        ));
    }
}

#[test]
fn csv_rows_mirror_the_polyline_points() {
    let lines = vec![
        LabeledPolyline {
            label: "impact_1".into(),
            segment_id: 0,
            points: vec![(0.25, 0.5), (0.3, 0.55)],
        },
        LabeledPolyline {
            label: "impact_2".into(),
            segment_id: 1,
            points: vec![(1.0, 2.0)],
        },
    ];
    let mut buf = Vec::new();
    write_contours_csv(&mut buf, &lines).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "function_label,segment_id,z1,z2");
    assert_eq!(rows.len(), 1 + 3);
    assert_eq!(rows[1], "impact_1,0,0.25,0.5");
    assert_eq!(rows[3], "impact_2,1,1,2");
}
