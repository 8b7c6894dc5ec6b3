/// Water-filling fair share of `total_memory` among jobs requesting `requests` GB each.
///
/// Every job gets an equal split capped at its request; whatever capped jobs leave over is
/// split among the others.
pub fn memory_rebalance(requests: &[f64], total_memory: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..requests.len()).collect();
    order.sort_by(|&a, &b| requests[a].total_cmp(&requests[b]).then(a.cmp(&b)));
    let mut alloc = vec![0.0; requests.len()];
    let mut left = total_memory.max(0.0);
    for (k, &i) in order.iter().enumerate() {
        let share = left / (requests.len() - k) as f64;
        alloc[i] = requests[i].max(0.0).min(share);
        left -= alloc[i];
    }
    alloc
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent route: repeatedly cap jobs whose request is below the running equal share.
    fn iterative_capping(requests: &[f64], total: f64) -> Vec<f64> {
        let mut alloc = vec![None; requests.len()];
        loop {
            let open: Vec<usize> = (0..requests.len()).filter(|&i| alloc[i].is_none()).collect();
            if open.is_empty() {
                break;
            }
            let used: f64 = alloc.iter().flatten().sum();
            let share = (total - used) / open.len() as f64;
            let capped: Vec<usize> = open.iter().copied().filter(|&i| requests[i] <= share).collect();
            if capped.is_empty() {
                for i in open {
                    alloc[i] = Some(share);
                }
                break;
            }
            for i in capped {
                alloc[i] = Some(requests[i]);
            }
        }
        alloc.into_iter().map(Option::unwrap).collect()
    }

    #[test]
    fn symmetric_fair_share() {
        assert_eq!(memory_rebalance(&[40.0, 30.0, 50.0], 90.0), vec![30.0, 30.0, 30.0]);
    }

    #[test]
    fn capped_job_releases_surplus() {
        // frozen from iterative_capping
        assert_eq!(iterative_capping(&[10.0, 50.0, 60.0], 90.0), vec![10.0, 40.0, 40.0]);
        assert_eq!(memory_rebalance(&[10.0, 50.0, 60.0], 90.0), vec![10.0, 40.0, 40.0]);
    }

    #[test]
    fn single_job_capped_by_request() {
        assert_eq!(memory_rebalance(&[20.0], 90.0), vec![20.0]);
    }

    #[test]
    fn no_jobs() {
        assert!(memory_rebalance(&[], 90.0).is_empty());
    }

    proptest! {
        #[test]
        fn matches_iterative_oracle(reqs in prop::collection::vec(0.1f64..200.0, 1..12), total in 1.0f64..500.0) {
            let got = memory_rebalance(&reqs, total);
            let want = iterative_capping(&reqs, total);
            prop_assert!(got.iter().sum::<f64>() <= total + 1e-9);
            for ((g, w), r) in got.iter().zip(&want).zip(&reqs) {
                prop_assert!((g - w).abs() < 1e-9, "{got:?} vs {want:?}");
                prop_assert!(*g <= r + 1e-12);
            }
        }
    }
}
