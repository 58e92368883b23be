//! Reproducible randomness. Every Monte Carlo driver owns a master seed and
//! derives one independent ChaCha stream per sample index, so parallel runs
//! produce bit-identical output regardless of scheduling.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// RNG for sample `index` of the experiment seeded with `master_seed`.
pub fn sample_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Uniform point of the unit torus of the given dimension.
pub fn uniform_torus(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.gen::<f64>()).collect()
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stateless uniform phase in [0, 1) attached to an integer vector. The same
/// `(key, tag, m)` always yields the same phase, so a truncated series can be
/// re-evaluated with a larger cutoff without re-randomizing the terms already
/// present.
pub fn phase_u01(key: u64, tag: u64, m: &[i64]) -> f64 {
    let mut h = splitmix64(key ^ splitmix64(tag));
    for &c in m {
        h = splitmix64(h ^ (c as u64));
    }
    // 53 high bits -> [0, 1)
    (h >> 11) as f64 * (1.0 / 9007199254740992.0)
}
