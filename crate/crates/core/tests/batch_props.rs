use mlrm::batch::{
    control_step, plan_stage, profile_job, BatchJob, BatchParams, BatchPolicy, BatchSimulation, PartitionProgress,
    StagePlan, StageSpec, VIOLATION_EPS,
};
use mlrm::contention::ContentionStrategy;
use mlrm::control::PiControllerState;
use mlrm::sim::{Engine, NodeSpec, SimTime};
use proptest::prelude::*;

fn job(id: usize, submit: f64, deadline: f64, stages: Vec<(f64, f64, f64)>) -> BatchJob {
    BatchJob {
        id: format!("j{id}"),
        submit_time: submit,
        deadline,
        memory_request: 8.0,
        stages: stages
            .into_iter()
            .enumerate()
            .map(|(i, (records, rate, shuffle_cost))| StageSpec {
                id: format!("s{i}"),
                deps: if i == 0 { vec![] } else { vec![format!("s{}", i - 1)] },
                records,
                rate,
                shuffle_cost,
            })
            .collect(),
    }
}

fn stage() -> impl Strategy<Value = (f64, f64, f64)> {
    (100.0..4000.0f64, 5.0..20.0f64, 0.0..3.0f64)
}

fn jobs() -> impl Strategy<Value = Vec<BatchJob>> {
    prop::collection::vec(
        (0.0..50.0f64, 10.0..400.0f64, prop::collection::vec(stage(), 1..4)),
        1..4,
    )
    .prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (submit, deadline, stages))| job(i, submit, deadline, stages))
            .collect()
    })
}

fn policy() -> impl Strategy<Value = BatchPolicy> {
    prop_oneof![
        Just(BatchPolicy::Fifo),
        Just(BatchPolicy::DeadlineControl(ContentionStrategy::Edf)),
        Just(BatchPolicy::DeadlineControl(ContentionStrategy::Proportional)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_job_finishes_within_capacity(jobs in jobs(), policy in policy(), nodes in 1usize..4, cores in 4.0..16.0f64, err in -0.2..0.2f64) {
        let cluster: Vec<NodeSpec> = (0..nodes).map(|i| NodeSpec::new(format!("n{i}"), cores, 64.0, 0)).collect();
        let params = BatchParams { policy, profiling_error: err, ..BatchParams::default() };
        let sim = BatchSimulation::new(cluster, jobs.clone(), params);
        let subs = sim.submissions();
        let mut engine = Engine::new(sim, 1.0).unwrap();
        for s in subs {
            engine.schedule(s).unwrap();
        }
        // any capacity breach aborts the run with an error
        engine.run_until(SimTime::new(20_000.0)).unwrap();
        prop_assert!(engine.model().capacity_checks() > 0);
        for (rec, job) in engine.model().job_records().iter().zip(&jobs) {
            let finish = rec.finish.expect("job finishes");
            prop_assert!(finish >= rec.start.unwrap());
            prop_assert!(rec.start.unwrap() >= job.submit());
            prop_assert_eq!(rec.violated, finish.secs() > job.absolute_deadline().secs() + VIOLATION_EPS);
        }
        for s in engine.log().samples.iter().filter(|s| s.series == "cores/total") {
            prop_assert!(s.value <= nodes as f64 * cores + 1e-9);
        }
    }

    #[test]
    fn chained_plans_fit_the_budget(stages in prop::collection::vec(stage(), 1..6), deadline in 20.0..500.0f64) {
        let j = job(0, 0.0, deadline, stages);
        let profiles = profile_job(&j, 0.0);
        let mut done = vec![false; j.stages.len()];
        let mut now = 0.0;
        for s in 0..j.stages.len() {
            let p = plan_stage(&j, s, SimTime::new(now), &profiles, &done, 4.0, 16).unwrap();
            prop_assert!(p.local_deadline.secs() >= now);
            prop_assert!(p.local_deadline.secs() <= deadline + 1e-9);
            prop_assert!(p.executor_count >= 1 && p.executor_count <= 16);
            let split: f64 = p.per_executor_records.iter().sum();
            prop_assert!((split - j.stages[s].records).abs() < 1e-6);
            now = p.local_deadline.secs();
            done[s] = true;
        }
        prop_assert!((now - deadline).abs() < 1e-6);
    }

    #[test]
    fn on_schedule_demand_is_feedforward(assigned in 10.0..1000.0f64, span in 2.0..100.0f64, frac in 0.0..0.9f64, rate in 1.0..20.0f64) {
        let plan = StagePlan {
            stage: 0,
            start: SimTime::ZERO,
            local_deadline: SimTime::new(span),
            executor_count: 1,
            per_executor_records: vec![assigned],
            shuffle_cost: 0.0,
            best_effort: false,
        };
        let now = frac * span;
        let work = PartitionProgress { assigned, processed: assigned * (now / span) };
        // exact zero error only when the two fractions agree bit for bit
        prop_assume!(work.fraction() == now / span);
        let mut pi = PiControllerState::new(2.0, 0.5, 0.0, 1e9, 1.0);
        let d = control_step(&work, &plan, rate, &mut pi, SimTime::new(now));
        let ff = work.remaining() / (rate * (span - now).max(1.0));
        prop_assert_eq!(d, ff);
    }
}
