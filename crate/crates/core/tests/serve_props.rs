use mlrm::harness::{gen_arrivals, stream, ArrivalSpec};
use mlrm::serve::{
    audit_requests, cpu_pick, gpu_pick, risk, supervise, Gateway, InferenceService, QueuedRequest, RomaParams,
    RoundRobin, RulesParams, ServeParams, ServePolicy, ServingSimulation, SlaAggregator,
};
use mlrm::sim::{Engine, NodeSpec, SimTime};
use proptest::prelude::*;

fn service(i: usize, cpu: f64, gpu_frac: f64, sla: f64) -> InferenceService {
    InferenceService {
        id: format!("s{i}"),
        sla_rt: sla,
        aggregator: SlaAggregator::Max,
        window: 10.0,
        cpu_time_1core: cpu,
        gpu_time: cpu * gpu_frac,
    }
}

proptest! {
    #[test]
    fn gpu_pick_has_the_highest_risk(
        heads in prop::collection::vec(prop::option::of(0.0..5.0f64), 1..6),
        gpu in prop::collection::vec(0.01..0.2f64, 6),
        sla in prop::collection::vec(0.1..2.0f64, 6),
    ) {
        let services: Vec<InferenceService> = (0..heads.len()).map(|i| service(i, 1.0, gpu[i], sla[i])).collect();
        let mut gw = Gateway::new(heads.len());
        for (s, h) in heads.iter().enumerate() {
            if let Some(a) = h {
                gw.enqueue(QueuedRequest { id: s as u64, service: s, arrival: SimTime::new(*a) }).unwrap();
            }
        }
        let now = SimTime::new(5.0);
        match gpu_pick(&gw, &services, now) {
            None => prop_assert!(gw.is_empty()),
            Some(p) => {
                let best = risk(gw.head(p).unwrap().arrival, now, &services[p]);
                for (s, svc) in services.iter().enumerate() {
                    if let Some(h) = gw.head(s) {
                        prop_assert!(risk(h.arrival, now, svc) <= best);
                    }
                }
            }
        }
    }

    #[test]
    fn round_robin_is_fair_while_all_are_busy(n in 1usize..8, picks in 1usize..100, start in prop::option::of(0usize..8)) {
        let mut rr = RoundRobin { last: start.map(|s| s % n) };
        let mut counts = vec![0usize; n];
        for _ in 0..picks {
            counts[cpu_pick(&vec![true; n], &mut rr).unwrap()] += 1;
        }
        let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
        prop_assert!(hi - lo <= 1);
    }

    #[test]
    fn supervisor_never_exceeds_the_node(demands in prop::collection::vec(0.0..8.0f64, 1..6), cores in 0.5..16.0f64) {
        let g = supervise(&demands, cores);
        prop_assert!(g.iter().sum::<f64>() <= cores + 1e-9);
        if demands.iter().sum::<f64>() <= cores {
            prop_assert_eq!(g, demands);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_workloads_keep_serving_invariants(
        seed in 0u64..10_000,
        m in 1usize..4,
        nodes in 1usize..3,
        cores in 2.0..8.0f64,
        gpus in 0u32..2,
        load in 0.2..1.5f64,
        roma in any::<bool>(),
    ) {
        let services: Vec<InferenceService> = (0..m).map(|i| service(i, 0.1 + 0.1 * i as f64, 0.2, 0.4)).collect();
        let cluster: Vec<NodeSpec> = (0..nodes).map(|i| NodeSpec::new(format!("n{i}"), cores, 16.0, gpus)).collect();
        let per_service = cores * nodes as f64 / m as f64;
        let traces: Vec<Vec<f64>> = services
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let spec = ArrivalSpec::Poisson { rate: load * per_service / s.cpu_time_1core };
                gen_arrivals(&spec, 30.0, &mut stream(seed, &format!("t{i}")))
            })
            .collect();
        let policy = if roma {
            ServePolicy::Roma(RomaParams::default())
        } else {
            ServePolicy::Rules(RulesParams::default())
        };
        let params = ServeParams { policy, control_period: 1.0, routing_latency: 0.01 };
        let mut sim = ServingSimulation::new(services, cluster, params);
        let events = sim.arrival_events(&traces);
        let total = events.len() as u64;
        let mut engine = Engine::new(sim, 1.0).unwrap();
        for e in events {
            engine.schedule(e).unwrap();
        }
        // an over-committed node aborts the run with an error
        engine.run_until(SimTime::new(35.0)).unwrap();
        let audit = engine.model().audit();
        prop_assert_eq!(audit.arrived, total);
        let breaches = audit_requests(engine.log(), &audit);
        prop_assert!(breaches.is_empty(), "{:?}", breaches);
        if gpus == 0 {
            prop_assert_eq!(audit.gpu_idle_with_work, 0);
        }
    }
}
