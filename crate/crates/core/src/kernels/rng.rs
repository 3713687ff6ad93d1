use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Generator used throughout the crate. ChaCha output is specified
/// independently of platform, so equal seeds give equal streams everywhere.
pub type ChainRng = ChaCha12Rng;

/// Independent substream `index` derived from a root seed.
///
/// Substreams share the key but use distinct ChaCha stream ids, so they never
/// overlap.
pub fn substream(root_seed: u64, index: u64) -> ChainRng {
    let mut rng = ChainRng::seed_from_u64(root_seed);
    rng.set_stream(index);
    rng
}
