//! End-to-end flows through the public API: generate → solve → certify,
//! file round trips, and the solver/certificate interplay.

use nalgebra::DVector;

use quadenv::certify::{
    certify_card_minimizer, check_k_feasibility, is_stationary, shadow_point, CertificateVerdict,
    FeasibilityMode,
};
use quadenv::constants::{rlip_beta, EnumerationBudget};
use quadenv::io;
use quadenv::model::{
    derive_seed, generate_ground_truth, generate_sensing_matrix, oracle_solution,
    synthesize_measurements,
};
use quadenv::penalty::PenaltyKind;
use quadenv::solver::{fbs_solve, SolverConfig, StartPoint, DESCENT_SLACK};

fn temp_dir(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("quadenv-pipeline-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn generate_solve_certify_round_trip() {
    // A clean instance the theory fully covers: compute betas, check the
    // guarantee, solve, certify, and confirm the oracle identity.
    let (m, n, k) = (24, 28, 2);
    let seed = 424242;
    let a = generate_sensing_matrix(m, n, seed).unwrap();
    let budget = EnumerationBudget::default();
    let beta_2k = rlip_beta(&a, 2 * k, &budget).unwrap();
    assert!(beta_2k > 0.0);

    let mu = 1.0;
    let magnitude = (1.0 / (beta_2k * beta_2k) + 1.0) * 1.4;
    let (x0, support) =
        generate_ground_truth(n, k, (magnitude, magnitude * 1.2), 0.0, derive_seed(seed, &[1]))
            .unwrap();
    let eps = 0.3 * beta_2k * beta_2k;
    let inst = synthesize_measurements(&a, &x0, eps, derive_seed(seed, &[2])).unwrap();

    let res = fbs_solve(&inst.a, &inst.b, &PenaltyKind::QuadEnvCard { mu }, &SolverConfig::default())
        .unwrap();
    assert_eq!(res.support, support, "support recovery failed");

    // The solver limit coincides with the known-support least squares.
    let xs = oracle_solution(&a, &inst.b, &support).unwrap();
    assert!((res.x_final.as_vector() - xs.as_vector()).norm() < 1e-7);

    let report =
        certify_card_minimizer(&inst.a, &inst.b, mu, res.x_final.as_vector(), 2 * k, &budget)
            .unwrap();
    assert_eq!(report.verdict, CertificateVerdict::UniqueGlobalMin, "{report:?}");

    // Serialize the certificate and read it back as JSON.
    let dir = temp_dir("cert");
    let path = dir.join("certificate.json");
    io::write_json(&path, &report).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(value["verdict"], "UniqueGlobalMin");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn instance_files_round_trip_through_disk() {
    let dir = temp_dir("io");
    let a = generate_sensing_matrix(12, 20, 9).unwrap();
    let (x0, _) = generate_ground_truth(20, 3, (2.0, 4.0), 11.0, 10).unwrap();
    let inst = synthesize_measurements(&a, &x0, 1.5, 11).unwrap();

    io::save_sensing_matrix(&dir.join("matrix"), &a, Some(9), "gaussian-normalized-columns").unwrap();
    io::save_signal_vector(&dir.join("b"), &inst.b, Some(11), "measurements").unwrap();

    let a2 = io::load_sensing_matrix(&dir.join("matrix")).unwrap();
    let b2 = io::load_signal_vector(&dir.join("b")).unwrap();
    assert_eq!(a2.entries(), a.entries());
    assert_eq!(b2.as_vector(), inst.b.as_vector());

    // Solving the reloaded instance gives the same result bit for bit.
    let kind = PenaltyKind::QuadEnvPk { k: 3 };
    let r1 = fbs_solve(&a, &inst.b, &kind, &SolverConfig::default()).unwrap();
    let r2 = fbs_solve(&a2, &b2, &kind, &SolverConfig::default()).unwrap();
    assert_eq!(r1.x_final.as_vector(), r2.x_final.as_vector());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn least_squares_start_changes_only_the_path_not_clean_limits() {
    let a = generate_sensing_matrix(40, 60, 77).unwrap();
    let (x0, support) = generate_ground_truth(60, 5, (2.0, 4.0), 11.0, 78).unwrap();
    let inst = synthesize_measurements(&a, &x0, 0.5, 79).unwrap();
    let kind = PenaltyKind::QuadEnvPk { k: 5 };
    let zero = fbs_solve(&inst.a, &inst.b, &kind, &SolverConfig::default()).unwrap();
    let ls = fbs_solve(
        &inst.a,
        &inst.b,
        &kind,
        &SolverConfig { start: StartPoint::LeastSquares, ..Default::default() },
    )
    .unwrap();
    assert_eq!(zero.support, support);
    assert_eq!(ls.support, support);
    assert!((zero.x_final.as_vector() - ls.x_final.as_vector()).norm() < 1e-7);
}

#[test]
fn converged_solves_are_certifiably_stationary() {
    for seed in 0..4u64 {
        let a = generate_sensing_matrix(30, 50, 100 + seed).unwrap();
        let (x0, _) = generate_ground_truth(50, 4, (2.0, 4.0), 11.0, 200 + seed).unwrap();
        let inst = synthesize_measurements(&a, &x0, 1.0, 300 + seed).unwrap();
        for kind in [PenaltyKind::QuadEnvCard { mu: 1.0 }, PenaltyKind::QuadEnvPk { k: 4 }] {
            let res = fbs_solve(&inst.a, &inst.b, &kind, &SolverConfig::default()).unwrap();
            assert!(res.converged);
            let (ok, residual) =
                is_stationary(&inst.a, &inst.b, res.x_final.as_vector(), &kind, 1e-6).unwrap();
            assert!(ok, "{} residual {residual}", kind.name());
            for w in res.objective_trace.windows(2) {
                assert!(w[1] <= w[0] + DESCENT_SLACK);
            }
        }
    }
}

#[test]
fn shadow_point_is_affine_in_x_and_b() {
    let a = generate_sensing_matrix(10, 16, 5).unwrap();
    let b1 = quadenv::model::SignalVector::from_slice(&[1.0; 10]).unwrap();
    let b2 = quadenv::model::SignalVector::from_slice(&[-0.5; 10]).unwrap();
    let x1 = DVector::from_fn(16, |i, _| (i as f64 * 0.37).sin());
    let x2 = DVector::from_fn(16, |i, _| (i as f64 * 0.11).cos());

    let z11 = shadow_point(&a, &b1, &x1);
    let z22 = shadow_point(&a, &b2, &x2);
    let bsum = quadenv::model::SignalVector::new(b1.as_vector() + b2.as_vector()).unwrap();
    let zsum = shadow_point(&a, &bsum, &(&x1 + &x2));
    assert!((&zsum - (&z11 + &z22)).norm() < 1e-12);

    // z - x = A^T (b - A x) exactly.
    let residual = &z11 - &x1 - a.entries().transpose() * (b1.as_vector() - a.entries() * &x1);
    assert!(residual.norm() < 1e-12);
}

#[test]
fn infeasibility_witnesses_are_concrete() {
    // Far-spread columns in the plane are pairwise beyond sqrt(2).
    let mut entries = nalgebra::DMatrix::zeros(2, 4);
    for (j, angle) in [0.0f64, 1.5708, 3.1416, 4.7124].iter().enumerate() {
        entries[(0, j)] = angle.cos();
        entries[(1, j)] = angle.sin();
    }
    let a = quadenv::model::SensingMatrix::new(entries).unwrap();
    let verdict = check_k_feasibility(&a, 1, FeasibilityMode::Exact).unwrap();
    // Opposite unit vectors sit at distance 2 > sqrt(2): squared distance 4.
    assert_eq!(verdict.status, quadenv::certify::FeasibilityStatus::Infeasible);
    assert!(!verdict.witness.is_empty());
}
