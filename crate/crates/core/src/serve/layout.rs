use crate::sim::{Assignment, ExecutorState, NodeSpec};

/// Executors provisioned on one worker node.
#[derive(Debug, Clone, PartialEq)]
pub struct ProvisionLayout {
    pub node: usize,
    /// One per service, each holding only that service's model.
    pub cpu: Vec<ExecutorState>,
    /// One per physical GPU, each holding every model.
    pub gpu: Vec<ExecutorState>,
}

/// `m` single-model CPU executors sharing the cores equally plus one all-model executor per GPU.
///
/// Executor ids are assigned consecutively from `first_id`.
pub fn provision_layout(services: usize, node: &NodeSpec, node_index: usize, first_id: usize) -> ProvisionLayout {
    let share = if services > 0 {
        node.cores / services as f64
    } else {
        0.0
    };
    let cpu = (0..services)
        .map(|s| {
            let mut e = ExecutorState::cpu(first_id + s, node_index);
            e.granted_cores = share;
            e.assignment = Assignment::Models(vec![s]);
            e
        })
        .collect();
    let gpu = (0..node.gpus as usize)
        .map(|g| {
            let mut e = ExecutorState::gpu(first_id + services + g, node_index);
            e.assignment = Assignment::Models((0..services).collect());
            e
        })
        .collect();
    ProvisionLayout {
        node: node_index,
        cpu,
        gpu,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::Device;

    #[test]
    fn four_services_one_gpu() {
        let l = provision_layout(4, &NodeSpec::new("w", 6.0, 56.0, 1), 0, 0);
        assert_eq!(l.cpu.len(), 4);
        assert_eq!(l.gpu.len(), 1);
        assert_eq!(l.gpu[0].assignment, Assignment::Models(vec![0, 1, 2, 3]));
        assert_eq!(l.gpu[0].device, Device::Gpu);
        assert!(l.cpu.iter().all(|e| e.granted_cores == 1.5));
        assert_eq!(l.cpu[2].assignment, Assignment::Models(vec![2]));
    }

    #[test]
    fn two_services_two_gpus() {
        let l = provision_layout(2, &NodeSpec::new("w", 6.0, 56.0, 2), 1, 10);
        assert_eq!((l.cpu.len(), l.gpu.len()), (2, 2));
        assert_eq!(l.gpu[1].id, 13);
        assert!(l.cpu.iter().chain(&l.gpu).all(|e| e.node == 1));
    }

    #[test]
    fn cpu_only_node() {
        let l = provision_layout(3, &NodeSpec::new("w", 6.0, 56.0, 0), 0, 0);
        assert_eq!((l.cpu.len(), l.gpu.len()), (3, 0));
    }
}
