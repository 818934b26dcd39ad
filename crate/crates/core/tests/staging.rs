mod common;

use common::staging_faults::run_schedule;

#[test]
fn fault_schedules_keep_delivery_contract() {
    let dir = tempfile::tempdir().unwrap();
    let mut crashes = 0;
    let mut redeliveries = 0;
    for seed in 0..1000 {
        let tally = run_schedule(seed, dir.path()).unwrap_or_else(|e| panic!("{e}"));
        crashes += tally.crashes;
        redeliveries += tally.redeliveries;
    }
    // the schedules really do crash and redeliver
    assert!(crashes > 1000 && redeliveries > 1000, "{crashes} {redeliveries}");
}
