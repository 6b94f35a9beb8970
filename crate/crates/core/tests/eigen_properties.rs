mod common;

use common::{square_mesh, square_space};
use qafem::linalg::SparseOperator;
use qafem::{solve_lowest, EigenOptions, FESpace};

fn laplace_pencil(levels: usize) -> (SparseOperator<f64>, SparseOperator<f64>) {
    let s = square_space(levels, 1);
    let a = s.restrict_operator(&s.assemble_stiffness(1.0));
    let b = s.restrict_operator(&s.assemble_mass());
    (a, b)
}

#[test]
fn lambda1_non_increasing_under_nested_refinement() {
    let mut prev = f64::INFINITY;
    for level in 1..=4 {
        let s = FESpace::new(&square_mesh(level), 1).unwrap();
        let a = s.restrict_operator(&s.assemble_stiffness(1.0));
        let b = s.restrict_operator(&s.assemble_mass());
        let r = solve_lowest(&a, &b, 1, &EigenOptions::default(), None).unwrap();
        assert!(r.eigenvalues[0] <= prev + 1e-10, "level {level}");
        assert!(r.eigenvalues[0] >= 2.0 * std::f64::consts::PI.powi(2));
        prev = r.eigenvalues[0];
    }
}

#[test]
fn rayleigh_quotients_and_shift() {
    // level 4 has 225 interior unknowns, beyond the dense threshold
    for level in [2, 4] {
        let (a, b) = laplace_pencil(level);
        let opts = EigenOptions {
            tol: 1e-10,
            ..EigenOptions::default()
        };
        let r = solve_lowest(&a, &b, 3, &opts, None).unwrap();
        for (lam, x) in r.eigenvalues.iter().zip(&r.eigenvectors) {
            let rq = a.quadratic_form(x) / b.quadratic_form(x);
            assert!((rq - lam).abs() <= 1e-9 * lam, "{rq} {lam}");
        }
        let c = 3.25;
        let shifted = a.add_scaled(c, &b);
        let rs = solve_lowest(&shifted, &b, 3, &opts, None).unwrap();
        for (x, y) in r.eigenvalues.iter().zip(&rs.eigenvalues) {
            assert!((y - x - c).abs() <= 1e-10, "{x} {y}");
        }
    }
}
