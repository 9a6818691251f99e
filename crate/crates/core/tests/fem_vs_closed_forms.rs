//! FEM rectangles against the separable closed forms at moderate coupling,
//! where Robin and Dirichlet differ visibly.

use molspec::experiments::ground_state::{mesh_lowest, small_solve_options};
use molspec::geometry::{rectangle_mesh, BoundaryKind};
use molspec::separable_robin::{mu_hat3, mu_square, rectangle_lowest, RobinInterval};

fn fem_rectangle(w: f64, h: f64, cells: [usize; 2], bcs: [BoundaryKind<f64>; 4]) -> f64 {
    let mesh = rectangle_mesh([0.0, w], [0.0, h], cells, bcs).unwrap();
    mesh_lowest(&mesh, &small_solve_options()).unwrap().eigenvalues[0]
}

#[test]
fn corner_square_matches_mu_square() {
    let n = BoundaryKind::Neumann;
    for &(a, gamma) in &[(0.45, 1.0), (0.45, 10.0), (0.3, 50.0)] {
        let r = BoundaryKind::Robin(gamma);
        let coarse = fem_rectangle(a, a, [16, 16], [n, r, r, n]);
        let fine = fem_rectangle(a, a, [32, 32], [n, r, r, n]);
        let exact = mu_square(a, gamma);
        // conforming FEM approaches from above, error shrinking ~4x per halving
        assert!(fine >= exact && coarse >= fine, "a={a} g={gamma}: {coarse} {fine} {exact}");
        assert!((fine - exact) / exact < 2e-3, "a={a} g={gamma}: {fine} vs {exact}");
        assert!((coarse - exact) > 3.0 * (fine - exact));
    }
}

#[test]
fn separable_rectangle_matches_mu_hat3() {
    let n = BoundaryKind::Neumann;
    let d = 1.0;
    for &(a, gamma) in &[(0.46, 2.0), (0.48, 20.0)] {
        let len = d - a;
        let r = BoundaryKind::Robin(gamma);
        let fem = fem_rectangle(len, 0.3, [32, 8], [n, r, n, n]);
        let exact = mu_hat3(a, gamma, d);
        assert!(fem >= exact && (fem - exact) / exact < 1e-3, "a={a} g={gamma}: {fem} vs {exact}");
    }
}

#[test]
fn mixed_rectangle_is_sum_of_intervals() {
    let x = RobinInterval::new(1.5, BoundaryKind::Robin(0.7), BoundaryKind::Dirichlet);
    let y = RobinInterval::new(0.8, BoundaryKind::Neumann, BoundaryKind::Robin(4.0));
    let exact = rectangle_lowest(&x, &y);
    // bottom, right, top, left
    let bcs = [BoundaryKind::Neumann, BoundaryKind::Dirichlet, BoundaryKind::Robin(4.0), BoundaryKind::Robin(0.7)];
    let fem = fem_rectangle(1.5, 0.8, [48, 32], bcs);
    assert!(fem >= exact && (fem - exact) / exact < 2e-3, "{fem} vs {exact}");
}
