use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Independent random stream for one named component of a run.
///
/// The stream seed is `SHA-256(master_seed_le || name)`, so adding or reseeding one component
/// never perturbs another.
pub fn stream(master_seed: u64, name: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update(name.as_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}
