use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Uniform sample of `n` items without replacement, in original order.
/// Returns everything when there are at most `n` items.
pub fn sample_predictions<P: Clone>(points: &[P], n: usize, seed: u64) -> Vec<P> {
    if points.len() <= n {
        return points.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, points.len(), n).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| points[i].clone()).collect()
}
