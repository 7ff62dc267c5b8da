//! Seeded sampling of chart points and directions for the verification
//! suites. Every generator is deterministic in its seed so reports are
//! reproducible.

use crate::chart::{ChartPoint, SpacetimeId};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random points of the chart, kept on a compact sub-domain (`r <= 0.75`,
/// `|t| <= 1.2` for ball charts; a box for Minkowski) where all catalog
/// quantities are O(1).
pub fn random_points(id: SpacetimeId, n: usize, seed: u64) -> Vec<ChartPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let p = match id {
            SpacetimeId::Minkowski => {
                let mut c = [0.0; 4];
                for x in c.iter_mut() {
                    *x = rng.random_range(-2.0..2.0);
                }
                ChartPoint::new(id, c)
            }
            _ => {
                let r = rng.random_range(0.05..0.75f64);
                let dir = unit_dir(&mut rng);
                let t = rng.random_range(-1.2..1.2);
                ChartPoint::new(id, [t, r * dir[0], r * dir[1], r * dir[2]])
            }
        };
        out.push(p.expect("sampled point inside chart domain"));
    }
    out
}

/// Uniform direction on the unit 2-sphere.
pub fn unit_dir<R: Rng>(rng: &mut R) -> [f64; 3] {
    loop {
        let v = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ];
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 > 1e-6 && n2 <= 1.0 {
            let n = n2.sqrt();
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

/// Deterministic RNG for ad-hoc draws in suites and tests.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
