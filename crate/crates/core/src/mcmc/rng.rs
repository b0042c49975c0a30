use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Sweep phases, each with its own family of random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Phase {
    Init = 0,
    Ess = 1,
    Hmc = 2,
    Kappa = 3,
    Hyper = 4,
    Rho = 5,
    Lambda = 6,
    Data = 7,
}

/// Independent generator for one (seed, chain, iteration, phase, index) cell.
///
/// The key encodes (seed, chain, iteration) and the stream encodes
/// (phase, index), so distinct cells never share a keystream and results do
/// not depend on the order in which cells are visited.
pub fn substream(seed: u64, chain: u64, iteration: u64, phase: Phase, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&chain.to_le_bytes());
    key[16..24].copy_from_slice(&iteration.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    debug_assert!(index < 1 << 56);
    rng.set_stream(((phase as u64) << 56) | index);
    rng
}
