//! Command-line planner: reads a scenario file, plans, and writes the
//! result bundle, trajectory table, and plot files.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use trailplan::corridor::BodyPointSet;
use trailplan::objectives::{ObjectiveKind, ObjectiveSpec};
use trailplan::output::{build_bundle, write_atomic, write_result_json, write_trajectory_csv};
use trailplan::planner::{plan, PlannerConfig};
use trailplan::plot::{curvature_chart_svg, plan_view_svg};
use trailplan::scenario::{load_scenario, Scenario};
use trailplan::PlanError;

#[derive(Parser)]
#[command(name = "trailplan", version, about = "Corridor path planning for tractor-trailer vehicles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan a path for a scenario file and write the results.
    Plan(PlanArgs),
}

#[derive(Args)]
struct PlanArgs {
    /// Scenario file (JSON).
    #[arg(long)]
    scenario: PathBuf,
    /// Objective selector 1-5; overrides the scenario's choice.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
    objective: Option<u8>,
    /// Blend parameter for objective 3.
    #[arg(long, value_name = "K")]
    k: Option<f64>,
    /// Grid step in meters; overrides scenario and defaults.
    #[arg(long)]
    ds: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Print per-iteration diagnostics.
    #[arg(long)]
    verbose: bool,
    /// Dump the final convex subproblem in the sparse text format.
    #[arg(long)]
    dump_qp: bool,
    /// Reserved: the planner has no randomness, so this flag is rejected.
    #[arg(long)]
    seedless: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // usage and parse problems map to exit 1
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match cli.command {
        Command::Plan(args) => match run_plan(args) {
            Ok(converged) => {
                if converged {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(2)
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
    }
}

fn resolve_objective(scenario: &Scenario, args: &PlanArgs) -> Result<ObjectiveSpec, PlanError> {
    let mut spec = scenario.objective_spec()?;
    if let Some(idx) = args.objective {
        let kind = ObjectiveKind::from_index(idx)?;
        let k = if kind == ObjectiveKind::Blend {
            args.k.or(spec.k_blend).or(Some(0.45))
        } else {
            None
        };
        spec = ObjectiveSpec { kind, k_blend: k, smooth_weight: spec.smooth_weight };
    } else if let Some(k) = args.k {
        if spec.kind != ObjectiveKind::Blend {
            return Err(PlanError::Configuration(
                "--K applies only to the blend objective (3)".into(),
            ));
        }
        spec.k_blend = Some(k);
    }
    spec.validate()?;
    Ok(spec)
}

fn resolve_config(scenario: &Scenario, args: &PlanArgs) -> Result<PlannerConfig, PlanError> {
    let objective = resolve_objective(scenario, args)?;
    let mut config = PlannerConfig::new(objective);
    let o = &scenario.planner;
    if let Some(ds) = o.ds {
        config.ds = ds;
    }
    if let Some(h) = o.horizon {
        config.horizon = h;
    }
    if let Some(it) = o.max_sqp_iters {
        config.max_sqp_iters = it;
    }
    if let Some(w) = o.slack_weight {
        config.slack_weight = w;
    }
    if let Some(b) = o.body_spacing {
        config.body_spacing = b;
    }
    if let Some(m) = o.safety_margin {
        config.safety_margin = m;
    }
    if let Some(ds) = args.ds {
        config.ds = ds;
    }
    config.validate()?;
    Ok(config)
}

fn run_plan(args: PlanArgs) -> Result<bool, PlanError> {
    if args.seedless {
        return Err(PlanError::Configuration(
            "--seedless is reserved: the planner is deterministic and uses no randomness".into(),
        ));
    }
    let text = std::fs::read_to_string(&args.scenario)?;
    let scenario = load_scenario(&text)?;
    let mut config = resolve_config(&scenario, &args)?;
    if std::env::var("TRAILPLAN_QP_VERBOSE").is_ok() {
        config.qp.verbose = true;
    }

    if config.objective.kind == ObjectiveKind::SweptSides {
        eprintln!(
            "note: the swept-sides objective adds epigraph rows for every body point and \
             typically runs much longer than objectives 1-4"
        );
    }

    let result = plan(&scenario, &config)?;
    if args.verbose {
        for (i, d) in result.diagnostics.iter().enumerate() {
            eprintln!(
                "iter {:>2}: objective {:.6e}  step_state {:.3e}  step_input {:.3e}  qp_iters {:>5}  shrinks {}",
                i + 1,
                d.objective,
                d.step_norm_state,
                d.step_norm_input,
                d.qp_iterations,
                d.trust_shrinks
            );
        }
    }

    let ds = config.ds;
    let params = scenario.vehicle_params(ds);
    let path = scenario.build_path(ds)?;
    let body_points = BodyPointSet::uniform(&params, config.body_spacing)?;
    let bundle = build_bundle(
        &scenario.name,
        config.objective.kind.index(),
        config.objective.k_blend,
        &path,
        &params,
        &body_points,
        &result,
    )?;
    write_result_json(&bundle, &args.out)?;
    write_trajectory_csv(&bundle, &args.out)?;

    let spans = scenario.corridor_spans();
    let left = make_bound_lookup(&spans, true);
    let right = make_bound_lookup(&spans, false);
    let svg = plan_view_svg(
        &path,
        &params,
        &result.trajectory,
        &body_points,
        &scenario.obstacles(),
        left,
        right,
    )?;
    write_atomic(&args.out, "plot.svg", svg.as_bytes())?;
    let chart = curvature_chart_svg(&result.trajectory, params.kappa_max);
    write_atomic(&args.out, "curvature.svg", chart.as_bytes())?;

    if args.dump_qp {
        let dump = trailplan::planner::dump_final_qp(&scenario, &config, &result.trajectory)?;
        write_atomic(&args.out, "qp_dump.txt", dump.as_bytes())?;
    }

    println!(
        "scenario: {}  objective: {}{}",
        scenario.name,
        config.objective.kind.index(),
        config
            .objective
            .k_blend
            .map(|k| format!(" (K = {k})"))
            .unwrap_or_default()
    );
    println!(
        "converged: {}  sqp_iterations: {}  wall_time: {:.2} s  max_slack: {:.4} m",
        result.converged,
        result.sqp_iterations,
        result.wall_time_s,
        result.trajectory.max_slack()
    );
    let m = &result.metrics;
    println!(
        "max_left: {:+.3} m (|{:.3}|)  max_right: {:+.3} m (|{:.3}|)  area_diff: {:+.2} m^2",
        m.max_left,
        m.max_left.abs(),
        m.max_right,
        m.max_right.abs(),
        m.area_diff
    );
    println!("results written to {}", args.out.display());
    Ok(result.converged)
}

fn make_bound_lookup(spans: &[(f64, f64, f64)], left: bool) -> impl Fn(f64) -> f64 + '_ {
    move |s: f64| {
        for &(end, l, r) in spans {
            if s <= end {
                return if left { l } else { r };
            }
        }
        let last = spans.last().unwrap();
        if left {
            last.1
        } else {
            last.2
        }
    }
}
