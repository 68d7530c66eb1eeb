//! Monte Carlo particle realization of the operator.
//!
//! Each child draws two parents uniformly with replacement from the current
//! generation and becomes the smaller parent with probability p, the larger
//! otherwise — the sampling form of the two-parent kernel, so the expected
//! child law is exactly one operator step of the parents' empirical
//! measure. Generations are synchronous and kept in canonical (sorted)
//! order so that runs are reproducible for a fixed (seed, N, thread count).
//!
//! Because the kernel favors the *smaller* parent, the analytic CDF of this
//! process at parameter p is the continuous orbit at the mirrored parameter
//! 1−p; [`analytic_cdf_orbit`] encodes that bridge.

use crate::cdf::{CdfMeasure, DensityOrbit};
use crate::convergence::InitialMeasure;
use crate::error::{Error, Result};
use crate::kernel::KernelParams;
use crate::rng::SplitMix64;

/// Bisection tolerance for CDF inversion when sampling continuous bases.
const INVERSION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct ParticleEnsemble {
    points: Vec<f64>,
    seed: u64,
    generation: u32,
}

impl ParticleEnsemble {
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn generation(&self) -> u32 {
        self.generation
    }

    pub fn mean(&self) -> f64 {
        self.points.iter().sum::<f64>() / self.len() as f64
    }

    /// Empirical CDF at x: fraction of particles strictly below x.
    pub fn empirical_cdf(&self, x: f64) -> f64 {
        // points are sorted; count strictly-less by partition point
        let idx = self.points.partition_point(|&t| t < x);
        idx as f64 / self.len() as f64
    }

    /// Empirical weight of the exact position `a`.
    pub fn weight_at(&self, a: f64) -> f64 {
        let lo = self.points.partition_point(|&t| t < a);
        let hi = self.points.partition_point(|&t| t <= a);
        (hi - lo) as f64 / self.len() as f64
    }

    /// Kolmogorov (sup) distance between the empirical CDF and a reference
    /// CDF, evaluated at the sample points on both sides of each jump.
    pub fn kolmogorov_distance(&self, reference: impl Fn(f64) -> f64) -> f64 {
        let n = self.len() as f64;
        let mut worst = 0.0f64;
        for (i, &x) in self.points.iter().enumerate() {
            let r = reference(x);
            worst = worst.max((i as f64 / n - r).abs());
            worst = worst.max(((i + 1) as f64 / n - r).abs());
        }
        worst
    }

    /// W1 distance between the empirical CDF and a reference CDF on `[0,1]`,
    /// by trapezoid sampling of |F_emp − F| on a fine grid.
    pub fn w1_distance(&self, reference: impl Fn(f64) -> f64, grid: usize) -> f64 {
        let mut acc = 0.0;
        for i in 0..grid {
            let x = (i as f64 + 0.5) / grid as f64;
            acc += (self.empirical_cdf(x) - reference(x)).abs();
        }
        acc / grid as f64
    }
}

fn invert_cdf(base: &CdfMeasure, u: f64) -> Result<f64> {
    // monotone bisection of g on [0,1]
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while hi - lo > INVERSION_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if base.cdf(mid)? < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // keep samples inside [0,1)
    Ok(lo.min(1.0 - f64::EPSILON))
}

/// Draws N particles from the initial measure: multinomial placement for
/// atomic specs, inversion sampling through monotone bisection for CDFs.
pub fn sample_initial(spec: &InitialMeasure, n: usize, seed: u64) -> Result<ParticleEnsemble> {
    if n == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let mut rng = SplitMix64::stream(seed, 0, 0);
    let mut points = Vec::with_capacity(n);
    match spec {
        InitialMeasure::Atomic(m) => {
            for _ in 0..n {
                let u = rng.next_f64();
                let mut acc = 0.0;
                let mut chosen = *m.atoms().last().expect("nonempty");
                for (a, w) in m.atoms().iter().zip(m.weights()) {
                    acc += w;
                    if u < acc {
                        chosen = *a;
                        break;
                    }
                }
                points.push(chosen);
            }
        }
        InitialMeasure::Cdf(base) => {
            for _ in 0..n {
                points.push(invert_cdf(base, rng.next_f64())?);
            }
        }
    }
    points.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    Ok(ParticleEnsemble {
        points,
        seed,
        generation: 0,
    })
}

/// Advances one synchronous generation. With `threads > 1` the children are
/// partitioned into contiguous blocks, each driven by its own stream
/// derived from (seed, generation, worker); the merged output is sorted, so
/// a run is reproducible for a fixed thread count.
pub fn step_generation(k: KernelParams, e: &ParticleEnsemble, threads: usize) -> ParticleEnsemble {
    let n = e.len();
    let threads = threads.max(1).min(n);
    let gen_label = e.generation as u64 + 1;

    let step_block = |worker: u64, count: usize| -> Vec<f64> {
        let mut rng = SplitMix64::stream(e.seed, gen_label, worker);
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let x = e.points[rng.below(n)];
            let y = e.points[rng.below(n)];
            let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
            out.push(if rng.next_f64() < k.p() { lo } else { hi });
        }
        out
    };

    let mut points: Vec<f64> = if threads == 1 {
        step_block(0, n)
    } else {
        let chunk = n.div_ceil(threads);
        let mut blocks: Vec<Vec<f64>> = Vec::with_capacity(threads);
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..threads)
                .map(|w| {
                    let count = chunk.min(n - (w * chunk).min(n));
                    scope.spawn(move || step_block(w as u64, count))
                })
                .collect();
            for h in handles {
                blocks.push(h.join().expect("worker panicked"));
            }
        });
        blocks.concat()
    };

    points.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    ParticleEnsemble {
        points,
        seed: e.seed,
        generation: e.generation + 1,
    }
}

/// The deterministic CDF orbit matching this particle process after `steps`
/// generations: the continuous-orbit machinery evaluated at the mirrored
/// parameter (see the module note).
pub fn analytic_cdf_orbit(k: KernelParams, base: &CdfMeasure, steps: u32) -> Result<DensityOrbit> {
    DensityOrbit::new(k.swapped(), base.clone(), steps + 1)
}

/// Empirical atom weights after stepping, for comparison against the exact
/// atomic trajectory.
pub fn empirical_weights(e: &ParticleEnsemble, atoms: &[f64]) -> Vec<f64> {
    atoms.iter().map(|&a| e.weight_at(a)).collect()
}

/// Convenience: sample, step `steps` generations, and return the ensemble.
pub fn run(
    k: KernelParams,
    spec: &InitialMeasure,
    n: usize,
    steps: u32,
    seed: u64,
    threads: usize,
) -> Result<ParticleEnsemble> {
    let mut e = sample_initial(spec, n, seed)?;
    for _ in 0..steps {
        e = step_generation(k, &e, threads);
    }
    Ok(e)
}
