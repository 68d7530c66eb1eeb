//! Exact operator dynamics on finite convex combinations of Dirac measures.
//!
//! One step multiplies each weight by an affine form of the mass on either
//! side: w_k <- w_k * (w_k + 2q * sum_{j<k} w_j + 2p * sum_{j>k} w_j).
//! Total mass is conserved algebraically ((sum w)^2 = 1), so each step
//! renormalizes by the raw sum to keep float drift from compounding.
//! The atom set never grows; for p != 1/2 the trajectory converges to the
//! Dirac at the smallest atom (p > 1/2) or the largest (p < 1/2).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::KernelParams;

/// Absolute tolerance under which two atoms are coalesced at construction.
pub const MERGE_TOLERANCE: f64 = 1e-12;

/// Construction accepts weight sums within this distance of 1, then
/// renormalizes exactly.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

/// Weights below this threshold are dropped to avoid denormal churn.
pub const WEIGHT_DROP_THRESHOLD: f64 = 1e-300;

/// A probability measure with finitely many atoms: strictly increasing
/// positions in [0,1) and positive weights summing to 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomicMeasure {
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

impl AtomicMeasure {
    /// Builds a measure from (position, weight) pairs. Input may be unsorted;
    /// positions closer than [`MERGE_TOLERANCE`] are coalesced (weights
    /// added), exact zero weights are dropped, and the result is
    /// renormalized provided the raw sum is within
    /// [`WEIGHT_SUM_TOLERANCE`] of 1.
    pub fn new(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut entries: Vec<(f64, f64)> = Vec::new();
        for (a, w) in pairs {
            if !a.is_finite() {
                return Err(Error::NonFinite(a));
            }
            if !w.is_finite() {
                return Err(Error::NonFinite(w));
            }
            if !(0.0..1.0).contains(&a) {
                return Err(Error::PointOutOfDomain(a));
            }
            if w == 0.0 {
                continue;
            }
            if w < 0.0 {
                return Err(Error::NonPositiveWeight(w));
            }
            entries.push((a, w));
        }
        if entries.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        entries.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite atoms"));

        let mut atoms: Vec<f64> = Vec::with_capacity(entries.len());
        let mut weights: Vec<f64> = Vec::with_capacity(entries.len());
        for (a, w) in entries {
            match atoms.last() {
                Some(&last) if a - last <= MERGE_TOLERANCE => {
                    *weights.last_mut().expect("nonempty") += w;
                }
                _ => {
                    atoms.push(a);
                    weights.push(w);
                }
            }
        }

        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::WeightSumMismatch {
                sum,
                tol: WEIGHT_SUM_TOLERANCE,
            });
        }
        for w in &mut weights {
            *w /= sum;
        }
        Ok(Self { atoms, weights })
    }

    /// A single Dirac measure at `a`.
    pub fn dirac(a: f64) -> Result<Self> {
        Self::new([(a, 1.0)])
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Weight carried by atom at position `a`, or 0 when absent.
    pub fn weight_at(&self, a: f64) -> f64 {
        match self
            .atoms
            .binary_search_by(|probe| probe.partial_cmp(&a).expect("finite"))
        {
            Ok(i) => self.weights[i],
            Err(_) => 0.0,
        }
    }

    /// Mean distance to a point: sum_i w_i |a_i - t|.
    pub fn mean_distance_to(&self, t: f64) -> f64 {
        self.atoms
            .iter()
            .zip(&self.weights)
            .map(|(a, w)| w * (a - t).abs())
            .sum()
    }
}

/// Diagnostics of a single update step.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StepInfo {
    /// |raw post-step mass - 1| before renormalization; the algebraic
    /// identity (sum w)^2 = 1 keeps this at rounding level.
    pub mass_error: f64,
    /// Number of atoms whose new weight fell below the drop threshold.
    pub dropped: usize,
}

/// One operator step together with its diagnostics.
pub fn apply_once_detailed(k: KernelParams, m: &AtomicMeasure) -> (AtomicMeasure, StepInfo) {
    let two_q = 2.0 * k.q();
    let two_p = 2.0 * k.p();
    let n = m.len();

    // Prefix/suffix sums give the affine factor for every atom in O(n).
    let mut below = Vec::with_capacity(n);
    let mut acc = 0.0;
    for w in &m.weights {
        below.push(acc);
        acc += w;
    }
    let mut above = vec![0.0; n];
    acc = 0.0;
    for (slot, w) in above.iter_mut().zip(&m.weights).rev() {
        *slot = acc;
        acc += w;
    }

    let raw: Vec<f64> = m
        .weights
        .iter()
        .zip(below.iter().zip(&above))
        .map(|(w, (lo, hi))| w * (w + two_q * lo + two_p * hi))
        .collect();
    let raw_sum: f64 = raw.iter().sum();
    let mass_error = (raw_sum - 1.0).abs();

    let mut atoms = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut dropped = 0usize;
    for (a, r) in m.atoms.iter().zip(&raw) {
        let w = r / raw_sum;
        if w < WEIGHT_DROP_THRESHOLD {
            dropped += 1;
        } else {
            atoms.push(*a);
            weights.push(w);
        }
    }
    // All mass collapsing onto dropped atoms cannot happen (the sum is 1),
    // but guard the degenerate empty case anyway.
    if atoms.is_empty() {
        atoms.push(m.atoms[0]);
        weights.push(1.0);
    }

    (
        AtomicMeasure { atoms, weights },
        StepInfo {
            mass_error,
            dropped,
        },
    )
}

/// One operator step: same atom list (minus underflowed weights), new weights.
pub fn apply_once(k: KernelParams, m: &AtomicMeasure) -> AtomicMeasure {
    apply_once_detailed(k, m).0
}

/// A dropped-atom record in a trajectory: which step lost which position.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DroppedAtom {
    pub step: usize,
    pub index: usize,
    pub atom: f64,
}

/// A full iteration record: the initial atom list and one weight row per
/// step (index 0 is the initial measure). Rows keep the initial atom
/// alignment; dropped atoms carry weight 0 from the step they vanish.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub p: f64,
    pub atoms: Vec<f64>,
    pub weights_per_step: Vec<Vec<f64>>,
    pub dropped_atoms: Vec<DroppedAtom>,
}

impl Trajectory {
    /// Measure at a given step, skipping zero rows for dropped atoms.
    pub fn measure_at(&self, step: usize) -> Result<AtomicMeasure> {
        let row = &self.weights_per_step[step];
        AtomicMeasure::new(
            self.atoms
                .iter()
                .copied()
                .zip(row.iter().copied())
                .filter(|(_, w)| *w > 0.0),
        )
    }

    pub fn last_measure(&self) -> Result<AtomicMeasure> {
        self.measure_at(self.weights_per_step.len() - 1)
    }
}

/// Iterates the operator `steps` times, recording every weight row.
pub fn iterate(k: KernelParams, initial: &AtomicMeasure, steps: usize) -> Trajectory {
    let atoms = initial.atoms.clone();
    let mut rows = Vec::with_capacity(steps + 1);
    rows.push(initial.weights.clone());
    let mut dropped_atoms = Vec::new();

    let mut current = initial.clone();
    for step in 1..=steps {
        let before: Vec<f64> = current.atoms.clone();
        let (next, info) = apply_once_detailed(k, &current);
        if info.dropped > 0 {
            for (idx, a) in before.iter().enumerate() {
                if !next.atoms.contains(a) {
                    let global = atoms.iter().position(|t| t == a).unwrap_or(idx);
                    dropped_atoms.push(DroppedAtom {
                        step,
                        index: global,
                        atom: *a,
                    });
                }
            }
        }
        // Align the row with the initial atom list.
        let mut row = vec![0.0; atoms.len()];
        for (a, w) in next.atoms.iter().zip(&next.weights) {
            if let Some(pos) = atoms.iter().position(|t| t == a) {
                row[pos] = *w;
            }
        }
        rows.push(row);
        current = next;
    }

    Trajectory {
        p: k.p(),
        atoms,
        weights_per_step: rows,
        dropped_atoms,
    }
}

/// The trajectory limit read off the parameter: Dirac at the smallest atom
/// for p > 1/2, at the largest for p < 1/2, and the measure itself for the
/// identity parameter p = 1/2.
pub fn predict_limit(k: KernelParams, m: &AtomicMeasure) -> AtomicMeasure {
    if k.is_identity() {
        return m.clone();
    }
    let target = if k.p() > 0.5 {
        m.atoms[0]
    } else {
        *m.atoms.last().expect("nonempty measure")
    };
    AtomicMeasure {
        atoms: vec![target],
        weights: vec![1.0],
    }
}

/// Brute-force operator step used as an independent oracle: the double sum
/// over parent pairs of two-atom kernel measures. Quadratic in the atom
/// count; only for cross-checks.
pub fn apply_once_brute_force(k: KernelParams, m: &AtomicMeasure) -> Result<AtomicMeasure> {
    let n = m.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            let pair = crate::kernel::kernel_measure(k, m.atoms[i], m.atoms[j])?;
            let wij = m.weights[i] * m.weights[j];
            for (a, w) in pair.atoms().iter().zip(pair.weights()) {
                let idx = m
                    .atoms
                    .iter()
                    .position(|t| t == a)
                    .expect("kernel support stays inside the atom set");
                out[idx] += wij * w;
            }
        }
    }
    AtomicMeasure::new(m.atoms.iter().copied().zip(out))
}
