use std::time::Duration;

use ddmapd::decomp::{run, run_with_trajectories, DecompConfig, TrajectorySource};
use ddmapd::domain::validate;
use ddmapd::fixtures::{example_instance, example_reference_log, example_trajectories};

#[test]
fn reference_plan_of_the_example_is_valid() {
    let inst = example_instance();
    let log = example_reference_log();
    let report = validate(&inst, &log).unwrap();
    assert!(report.is_valid(), "{:?}", report.violations);
    assert_eq!(log.makespan(), 7);
    assert_eq!(log.flowtime(), 14);
    assert!(example_trajectories().defects(&inst).is_empty());
}

#[test]
fn example_runs_on_its_reference_trajectories() {
    let inst = example_instance();
    let cfg = DecompConfig::nivf().with_budget(Duration::from_secs(5));
    let out = run_with_trajectories(&inst, &cfg, example_trajectories(), TrajectorySource::Search).unwrap();
    let report = validate(&inst, &out.log).unwrap();
    assert!(report.is_valid(), "{:?}", report.violations);
}

#[test]
fn example_solves_with_ivf() {
    let inst = example_instance();
    let cfg = DecompConfig::ivf(8).with_budget(Duration::from_secs(5));
    let out = run(&inst, &cfg).unwrap();
    let report = validate(&inst, &out.log).unwrap();
    assert!(report.is_valid(), "{:?}", report.violations);
}
