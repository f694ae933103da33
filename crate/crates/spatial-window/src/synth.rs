//! Seeded synthetic point generation.
//!
//! The generator algorithm is fixed and documented so that fixtures are
//! byte-reproducible anywhere: the stream comes from SplitMix64, uniform
//! doubles take the top 53 bits, integer draws reduce modulo the range,
//! and cluster offsets use the Box-Muller transform. Draw order per point
//! is x, then y, then the visit count (clusters draw the cluster index
//! first).

use crate::data::{Dataset, Point};

/// Name of the attribute column the generator emits.
pub const VISITS_ATTR: &str = "number_of_visits";

/// SplitMix64: state advances by the golden-gamma constant and the output
/// is a finalizing mix of the new state. Reference constants from the
/// original public-domain implementation.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform double in [0, 1): top 53 bits scaled by 2^-53.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [0, bound) by modulo reduction.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        self.next_u64() % bound
    }
}

/// How synthetic coordinates are laid out over the [0, 100)² square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointDistribution {
    Uniform,
    /// `count` cluster centers drawn uniformly; each point picks a center
    /// and adds a N(0, sigma²) offset, redrawing until it lands inside the
    /// square (after 1000 tries the offset is clamped).
    Clusters {
        count: usize,
        sigma: f64,
    },
}

/// Standard normal pair via Box-Muller on two uniform draws.
fn normal_pair(rng: &mut SplitMix64) -> (f64, f64) {
    let u1 = 1.0 - rng.next_f64(); // (0, 1], keeps ln finite
    let u2 = rng.next_f64();
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = 2.0 * std::f64::consts::PI * u2;
    (r * theta.cos(), r * theta.sin())
}

/// Generates `n` points with ids `p0..`, coordinates in [0, 100)², and an
/// integer `number_of_visits` attribute in [0, 1000].
pub fn generate_points(n: usize, dist: PointDistribution, seed: u64) -> Vec<Point> {
    let mut rng = SplitMix64::new(seed);
    let centers: Vec<(f64, f64)> = match dist {
        PointDistribution::Uniform => Vec::new(),
        PointDistribution::Clusters { count, .. } => (0..count.max(1))
            .map(|_| (rng.next_f64() * 100.0, rng.next_f64() * 100.0))
            .collect(),
    };
    (0..n)
        .map(|i| {
            let (x, y) = match dist {
                PointDistribution::Uniform => (rng.next_f64() * 100.0, rng.next_f64() * 100.0),
                PointDistribution::Clusters { sigma, .. } => {
                    let c = centers[rng.next_below(centers.len() as u64) as usize];
                    let mut xy = None;
                    for _ in 0..1000 {
                        let (dx, dy) = normal_pair(&mut rng);
                        let cand = (c.0 + sigma * dx, c.1 + sigma * dy);
                        if (0.0..100.0).contains(&cand.0) && (0.0..100.0).contains(&cand.1) {
                            xy = Some(cand);
                            break;
                        }
                    }
                    xy.unwrap_or((c.0.clamp(0.0, 99.999), c.1.clamp(0.0, 99.999)))
                }
            };
            let visits = rng.next_below(1001) as f64;
            Point::new(format!("p{i}"), x, y).with_attr(VISITS_ATTR, Some(visits))
        })
        .collect()
}

pub fn generate_dataset(n: usize, dist: PointDistribution, seed: u64) -> Dataset {
    Dataset::from_points(
        generate_points(n, dist, seed),
        vec![VISITS_ATTR.to_string()],
    )
    .expect("generated points are valid by construction")
}
