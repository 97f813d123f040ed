use nalgebra::DMatrix;
use strelax_core::linalg::{spectral_radius_psd, Matrix, SPECTRAL_MAX_ITER, SPECTRAL_TOL};
use strelax_core::problems::gen_consistent_linear;
use strelax_core::rng::SplitMix64;
use strelax_core::solver::{self, RelaxationSchedule, Status, StoppingRule};
use strelax_core::step_size::StepSizeMode;
use strelax_core::string_averaging::StringPlan;
use strelax_core::linalg;

fn eig_max(m: &Matrix) -> f64 {
    let d = DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice());
    d.symmetric_eigen().eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn power_iteration_matches_dense_eigensolver_on_seeded_5x5() {
    for seed in 0..20 {
        let mut rng = SplitMix64::new(seed);
        let a = Matrix::new(5, 5, (0..25).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap();
        let b = a.transpose().mul(&a).unwrap();
        let est = spectral_radius_psd(&b, SPECTRAL_TOL, SPECTRAL_MAX_ITER).unwrap();
        let exact = eig_max(&b);
        assert!((est - exact).abs() <= 1e-8 * exact, "seed {seed}: {est} vs {exact}");
    }
}

#[test]
fn kaczmarz_strings_solve_a_consistent_system() {
    let lf = gen_consistent_linear(2024, 20, 10).unwrap();
    let ops = lf.build_operators(&[1.0; 20]).unwrap();
    let plan = StringPlan::sequential(20).unwrap();
    let sched = RelaxationSchedule::constant(1.0).unwrap();
    let stop = StoppingRule { feas_tol: 1e-8, fix_tol: 1e-16, max_iter: 5000 };
    let x0 = vec![0.0; 10];
    let r = solver::solve(&ops, &plan, &sched, StepSizeMode::sigma_max(), stop, &x0, lf.solution.as_deref()).unwrap();
    assert_eq!(r.status, Status::Feasible);
    let res = linalg::sub(&lf.matrix.mul_vec(&r.final_point), &lf.rhs);
    assert!(linalg::norm_inf(&res) <= 1e-8);
    assert!(solver::fejer_audit(&r).unwrap());
}
