// scratch: minimal LP polish repro
use stageqp::{solve_qp, CscMatrix, QpProblem, QpSettings};

fn main() {
    // min t  s.t. x = 0.3, |x| <= t   (x free box, t free box)
    // optimum (0.3, 0.3); P = 0
    let problem = QpProblem {
        p_upper: CscMatrix::zeros(2, 2),
        q: vec![0.0, 1.0],
        a: CscMatrix::from_triplets(
            4,
            2,
            &[
                (0, 0, 1.0),            // eq x = 0.3
                (1, 0, 1.0), (1, 1, -1.0), // x - t <= 0
                (2, 0, 1.0), (2, 1, 1.0),  // x + t >= 0
                (3, 1, 1.0),            // t free-ish box row
            ],
        ),
        l: vec![0.3, f64::NEG_INFINITY, 0.0, f64::NEG_INFINITY],
        u: vec![0.3, 0.0, f64::INFINITY, f64::INFINITY],
        layout: None,
    };
    let mut settings = QpSettings::default();
    settings.verbose = true;
    let sol = solve_qp(&problem, &settings, None).unwrap();
    eprintln!(
        "status {:?} x {:?} iters {} prim {:.3e} dual {:.3e} polished {}",
        sol.status, sol.x, sol.iterations, sol.primal_residual, sol.dual_residual, sol.polished
    );
}
