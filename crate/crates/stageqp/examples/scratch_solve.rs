// scratch: solve a dumped problem, then analyze where a polish candidate fails
use stageqp::{parse_problem, solve_qp, QpSettings};

fn main() {
    let path = std::env::args().nth(1).expect("usage: scratch_solve DUMP");
    let file = std::fs::File::open(path).unwrap();
    let mut reader = std::io::BufReader::new(file);
    let problem = parse_problem(&mut reader).unwrap();
    let mut settings = QpSettings::default();
    settings.verbose = false;
    settings.polish = false; // plain ADMM to convergence
    let t0 = std::time::Instant::now();
    let sol = solve_qp(&problem, &settings, None).unwrap();
    eprintln!(
        "ADMM: status {:?} iters {} prim {:.3e} dual {:.3e} in {:.1}s",
        sol.status, sol.iterations, sol.primal_residual, sol.dual_residual,
        t0.elapsed().as_secs_f64()
    );
    // now run WITH polish enabled starting warm from the solution: the final
    // polish runs on a converged point; inspect acceptance
    settings.polish = true;
    settings.verbose = true;
    let warm = stageqp::WarmStart { x: sol.x.clone(), y: sol.y.clone() };
    let sol2 = solve_qp(&problem, &settings, Some(&warm)).unwrap();
    eprintln!(
        "resolve: status {:?} iters {} prim {:.3e} dual {:.3e} polished {}",
        sol2.status, sol2.iterations, sol2.primal_residual, sol2.dual_residual, sol2.polished
    );
    // stats on the dual vector: nonzero pattern by row block
    let n = problem.num_vars();
    let blocks = [
        ("varbox", 0usize, n),
        ("dynamics", n, n + 2013),
        ("rate", n + 2013, n + 2013 + 670),
        ("epigraph", n + 2013 + 670, problem.num_constraints()),
    ];
    for (name, a, b) in blocks {
        let nz = sol.y[a..b].iter().filter(|v| **v != 0.0).count();
        let max = sol.y[a..b].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        eprintln!("block {name}: rows {}..{} nonzero duals {nz} max |y| {max:.3e}", a, b);
    }
}
