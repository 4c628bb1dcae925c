//! Fixtures shared by the benchmark targets.

use qdiffusion::ansatz::build_circuit;
use qdiffusion::rng::{normal_vector, seeded};
use qdiffusion::statevec::amplitude_encode;
use qdiffusion::{AnsatzConfig, CircuitSpec, QuantumState};
use rand::Rng;

/// Reverse-bottleneck circuit with random angles.
pub fn random_circuit(n_data: usize, layers: [usize; 3], seed: u64) -> (CircuitSpec, Vec<f64>) {
    let c = build_circuit(&AnsatzConfig::reverse_bottleneck(n_data, 0, layers)).expect("valid ansatz");
    let mut rng = seeded(seed);
    let params = (0..c.param_count()).map(|_| rng.random_range(-3.0..3.0)).collect();
    (c, params)
}

pub fn random_state(n: usize, seed: u64) -> QuantumState {
    amplitude_encode(&normal_vector(&mut seeded(seed), 1 << n, true), true).expect("nonzero draw")
}
