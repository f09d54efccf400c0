// scratch: dump the first objective-4 subproblem for solver debugging
use trailplan::planner::{dump_final_qp, initialize_trajectory, PlannerConfig};
use trailplan::objectives::{ObjectiveKind, ObjectiveSpec};
use trailplan::scenario::load_scenario;

fn main() {
    let text = std::fs::read_to_string("crates/trailplan/fixtures/uturn_0065.json").unwrap();
    let scenario = load_scenario(&text).unwrap();
    let spec = ObjectiveSpec::new(ObjectiveKind::MaxDeviation, None).unwrap();
    let mut config = PlannerConfig::new(spec);
    config.ds = 0.2;
    config.horizon = 134.2;
    let init = initialize_trajectory(&scenario, &config).unwrap();
    let dump = dump_final_qp(&scenario, &config, &init).unwrap();
    std::fs::write("/tmp/first_qp4.txt", dump).unwrap();
    eprintln!("dumped");
}
