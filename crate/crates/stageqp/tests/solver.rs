//! Solver behavior against independent oracles.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stageqp::{solve_qp, CscMatrix, QpProblem, QpSettings, SolveStatus, WarmStart};

fn settings() -> QpSettings {
    QpSettings::default()
}

#[test]
fn scalar_halfline_projection() {
    // min (x-1)^2  s.t. x <= 0.5  =>  x = 0.5
    let problem = QpProblem {
        p_upper: CscMatrix::from_triplets(1, 1, &[(0, 0, 2.0)]),
        q: vec![-2.0],
        a: CscMatrix::identity(1),
        l: vec![f64::NEG_INFINITY],
        u: vec![0.5],
        layout: None,
    };
    let sol = solve_qp(&problem, &settings(), None).unwrap();
    assert_eq!(sol.status, SolveStatus::Solved);
    assert!((sol.x[0] - 0.5).abs() < 1e-8, "x = {}", sol.x[0]);
}

/// Random strictly convex equality-constrained QPs solved directly through
/// the dense KKT system.
#[test]
fn random_equality_qps_match_dense_kkt() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..10 {
        let n = 30;
        let me = 10;
        // P = M M' + I (strictly convex)
        let m_mat = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let p_dense = &m_mat * m_mat.transpose() + DMatrix::identity(n, n);
        let a_dense = DMatrix::from_fn(me, n, |_, _| rng.gen_range(-1.0..1.0));
        let q = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let b = DVector::from_fn(me, |_, _| rng.gen_range(-1.0..1.0));

        // dense KKT oracle: [[P, A'], [A, 0]] [x; y] = [-q; b]
        let mut kkt = DMatrix::zeros(n + me, n + me);
        kkt.view_mut((0, 0), (n, n)).copy_from(&p_dense);
        kkt.view_mut((0, n), (n, me)).copy_from(&a_dense.transpose());
        kkt.view_mut((n, 0), (me, n)).copy_from(&a_dense);
        let mut rhs = DVector::zeros(n + me);
        rhs.rows_mut(0, n).copy_from(&(-&q));
        rhs.rows_mut(n, me).copy_from(&b);
        let oracle = kkt.lu().solve(&rhs).expect("dense KKT solvable");

        let mut p_trips = Vec::new();
        for r in 0..n {
            for c in r..n {
                p_trips.push((r, c, p_dense[(r, c)]));
            }
        }
        let mut a_trips = Vec::new();
        for r in 0..me {
            for c in 0..n {
                a_trips.push((r, c, a_dense[(r, c)]));
            }
        }
        let problem = QpProblem {
            p_upper: CscMatrix::from_triplets(n, n, &p_trips),
            q: q.iter().copied().collect(),
            a: CscMatrix::from_triplets(me, n, &a_trips),
            l: b.iter().copied().collect(),
            u: b.iter().copied().collect(),
            layout: None,
        };
        let sol = solve_qp(&problem, &settings(), None).unwrap();
        assert_eq!(sol.status, SolveStatus::Solved, "trial {trial}");
        for j in 0..n {
            assert!(
                (sol.x[j] - oracle[j]).abs() < 1e-6,
                "trial {trial} var {j}: {} vs oracle {}",
                sol.x[j],
                oracle[j]
            );
        }
    }
}

/// Separable box QP: the minimizer is the unconstrained optimum clamped
/// coordinatewise.
#[test]
fn box_qp_matches_clamp_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 20;
    let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..4.0)).collect();
    let q: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let lo: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..0.0)).collect();
    let hi: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();

    let p_trips: Vec<(usize, usize, f64)> =
        diag.iter().enumerate().map(|(i, &d)| (i, i, d)).collect();
    let problem = QpProblem {
        p_upper: CscMatrix::from_triplets(n, n, &p_trips),
        q: q.clone(),
        a: CscMatrix::identity(n),
        l: lo.clone(),
        u: hi.clone(),
        layout: None,
    };
    let sol = solve_qp(&problem, &settings(), None).unwrap();
    assert_eq!(sol.status, SolveStatus::Solved);
    for j in 0..n {
        let oracle = (-q[j] / diag[j]).clamp(lo[j], hi[j]);
        assert!(
            (sol.x[j] - oracle).abs() < 1e-8,
            "var {j}: {} vs clamp oracle {}",
            sol.x[j],
            oracle
        );
    }
}

#[test]
fn kkt_stationarity_and_complementarity() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 12;
    let mw = 8;
    let m_mat = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let p_dense = &m_mat * m_mat.transpose() + DMatrix::identity(n, n) * 0.5;
    let mut p_trips = Vec::new();
    for r in 0..n {
        for c in r..n {
            p_trips.push((r, c, p_dense[(r, c)]));
        }
    }
    let mut a_trips = Vec::new();
    for r in 0..mw {
        for c in 0..n {
            a_trips.push((r, c, rng.gen_range(-1.0..1.0)));
        }
    }
    let q: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let problem = QpProblem {
        p_upper: CscMatrix::from_triplets(n, n, &p_trips),
        q: q.clone(),
        a: CscMatrix::from_triplets(mw, n, &a_trips),
        l: vec![-0.5; mw],
        u: vec![0.5; mw],
        layout: None,
    };
    let eps_abs = settings().eps_abs;
    let sol = solve_qp(&problem, &settings(), None).unwrap();
    assert_eq!(sol.status, SolveStatus::Solved);

    // stationarity: ||P x + q + A' y||_inf <= 10 eps_abs (1 + ||q||_inf)
    let q_norm = q.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(
        sol.dual_residual <= 10.0 * eps_abs * (1.0 + q_norm),
        "stationarity residual {}",
        sol.dual_residual
    );

    // complementarity: the sign of y matches the active bound
    let mut ax = vec![0.0; mw];
    problem.a.mul_vec(&sol.x, &mut ax);
    for i in 0..mw {
        if sol.y[i] > 1e-7 {
            assert!((ax[i] - 0.5).abs() < 1e-6, "row {i} should sit at upper bound");
        } else if sol.y[i] < -1e-7 {
            assert!((ax[i] + 0.5).abs() < 1e-6, "row {i} should sit at lower bound");
        }
    }
}

#[test]
fn warm_start_resolves_quickly() {
    let problem = QpProblem {
        p_upper: CscMatrix::from_triplets(3, 3, &[(0, 0, 2.0), (1, 1, 1.0), (2, 2, 3.0)]),
        q: vec![-1.0, 2.0, 0.5],
        a: CscMatrix::from_triplets(
            2,
            3,
            &[(0, 0, 1.0), (0, 1, 1.0), (1, 1, 1.0), (1, 2, -1.0)],
        ),
        l: vec![-1.0, f64::NEG_INFINITY],
        u: vec![1.0, 0.25],
        layout: None,
    };
    let sol = solve_qp(&problem, &settings(), None).unwrap();
    assert_eq!(sol.status, SolveStatus::Solved);
    let warm = WarmStart::from(&sol);
    let resolved = solve_qp(&problem, &settings(), Some(&warm)).unwrap();
    assert_eq!(resolved.status, SolveStatus::Solved);
    assert!(
        resolved.iterations <= 5,
        "warm-started resolve took {} iterations",
        resolved.iterations
    );
}

#[test]
fn deterministic_bit_for_bit() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let n = 25;
    let mut p_trips = Vec::new();
    for j in 0..n {
        p_trips.push((j, j, rng.gen_range(0.5..2.0)));
        if j + 1 < n {
            p_trips.push((j, j + 1, rng.gen_range(-0.3..0.3)));
        }
    }
    let mut a_trips = Vec::new();
    for i in 0..n {
        a_trips.push((i, i, 1.0));
        if i + 1 < n {
            a_trips.push((i, i + 1, rng.gen_range(-1.0..1.0)));
        }
    }
    let problem = QpProblem {
        p_upper: CscMatrix::from_triplets(n, n, &p_trips),
        q: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        a: CscMatrix::from_triplets(n, n, &a_trips),
        l: vec![-0.7; n],
        u: vec![0.9; n],
        layout: None,
    };
    let a = solve_qp(&problem, &settings(), None).unwrap();
    let b = solve_qp(&problem, &settings(), None).unwrap();
    assert_eq!(a.iterations, b.iterations);
    for j in 0..n {
        assert!(
            a.x[j].to_bits() == b.x[j].to_bits(),
            "var {j} differs between identical solves"
        );
    }
    for i in 0..n {
        assert!(a.y[i].to_bits() == b.y[i].to_bits());
    }
}

#[test]
fn detects_primal_infeasibility() {
    // x >= 1 and x <= -1 simultaneously
    let problem = QpProblem {
        p_upper: CscMatrix::from_triplets(1, 1, &[(0, 0, 1.0)]),
        q: vec![0.0],
        a: CscMatrix::from_triplets(2, 1, &[(0, 0, 1.0), (1, 0, 1.0)]),
        l: vec![1.0, f64::NEG_INFINITY],
        u: vec![f64::INFINITY, -1.0],
        layout: None,
    };
    let sol = solve_qp(&problem, &settings(), None).unwrap();
    assert_eq!(sol.status, SolveStatus::PrimalInfeasible);
}

#[test]
fn rejects_inconsistent_bounds() {
    let problem = QpProblem {
        p_upper: CscMatrix::identity(1),
        q: vec![0.0],
        a: CscMatrix::identity(1),
        l: vec![1.0],
        u: vec![0.0],
        layout: None,
    };
    assert!(solve_qp(&problem, &settings(), None).is_err());
}
