//! The two-parent transition kernel family on [0,1).
//!
//! For an unordered parent pair {x,y} with x < y, the offspring measure puts
//! weight `p` on the smaller parent and `q = 1 - p` on the larger one; equal
//! parents reproduce themselves. The identity-kernel variant spreads weight
//! 1 / 1/2 / 0 by how many parents fall in the queried interval, and the
//! operator it generates fixes every measure.

use serde::Serialize;

use crate::atomic::AtomicMeasure;
use crate::error::{Error, Result};

/// The pair (p, q) with p + q = 1; q is always derived from p, never stored
/// independently.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelParams {
    p: f64,
}

impl KernelParams {
    pub fn new(p: f64) -> Result<Self> {
        if !p.is_finite() {
            return Err(Error::NonFinite(p));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::ProbabilityOutOfRange(p));
        }
        Ok(Self { p })
    }

    #[inline]
    pub fn p(&self) -> f64 {
        self.p
    }

    #[inline]
    pub fn q(&self) -> f64 {
        1.0 - self.p
    }

    /// The mirrored parameter set (p and q exchanged). Conjugates the
    /// dynamics under the reflection x -> 1 - x.
    #[inline]
    pub fn swapped(&self) -> Self {
        Self { p: 1.0 - self.p }
    }

    /// True when p = q = 1/2, i.e. the operator is the identity.
    #[inline]
    pub fn is_identity(&self) -> bool {
        self.p == 0.5
    }
}

/// Kernel selector: the parametric family, or the identity-operator example.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelVariant {
    Lebesgue(KernelParams),
    IdentityExample,
}

fn check_point(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite(x));
    }
    if !(0.0..1.0).contains(&x) {
        return Err(Error::PointOutOfDomain(x));
    }
    Ok(x)
}

/// Offspring measure of the parent pair (x, y): a one- or two-atom
/// probability measure supported on {x, y}.
pub fn kernel_measure(k: KernelParams, x: f64, y: f64) -> Result<AtomicMeasure> {
    let x = check_point(x)?;
    let y = check_point(y)?;
    if x == y {
        return AtomicMeasure::new([(x, 1.0)]);
    }
    let (lo, hi) = if x < y { (x, y) } else { (y, x) };
    // Zero-weight atoms are dropped by construction, so p = 0 or 1 collapses
    // to a single Dirac as it should.
    AtomicMeasure::new([(lo, k.p()), (hi, k.q())])
}

/// The identity-example kernel evaluated on an interval [lo, hi) within [0,1):
/// 1 if both parents land inside, 1/2 if exactly one does, 0 otherwise.
pub fn identity_kernel_measure(x: f64, y: f64, lo: f64, hi: f64) -> Result<f64> {
    let x = check_point(x)?;
    let y = check_point(y)?;
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::NonFinite(if lo.is_finite() { hi } else { lo }));
    }
    if lo > hi {
        return Err(Error::InvalidInterval { a: lo, b: hi });
    }
    let inside = |t: f64| t >= lo && t < hi;
    Ok(match (inside(x), inside(y)) {
        (true, true) => 1.0,
        (false, false) => 0.0,
        _ => 0.5,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(p: f64) -> KernelParams {
        KernelParams::new(p).unwrap()
    }

    #[test]
    fn two_parent_measure_puts_p_on_smaller() {
        let m = kernel_measure(params(0.8), 0.3, 0.7).unwrap();
        assert_eq!(m.atoms(), &[0.3, 0.7]);
        assert!((m.weights()[0] - 0.8).abs() <= 1e-15);
        assert!((m.weights()[1] - 0.2).abs() <= 1e-15);
        let s: f64 = m.weights().iter().sum();
        assert_eq!(s, 1.0);
    }

    #[test]
    fn equal_parents_reproduce() {
        let m = kernel_measure(params(0.8), 0.5, 0.5).unwrap();
        assert_eq!(m.atoms(), &[0.5]);
        assert_eq!(m.weights(), &[1.0]);
    }

    #[test]
    fn symmetric_in_parents_bit_for_bit() {
        let a = kernel_measure(params(0.8), 0.7, 0.3).unwrap();
        let b = kernel_measure(params(0.8), 0.3, 0.7).unwrap();
        assert_eq!(a.atoms(), b.atoms());
        for (wa, wb) in a.weights().iter().zip(b.weights()) {
            assert_eq!(wa.to_bits(), wb.to_bits());
        }
    }

    #[test]
    fn symmetric_parameter_splits_evenly() {
        let m = kernel_measure(params(0.5), 0.3, 0.7).unwrap();
        assert_eq!(m.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn degenerate_parameters_collapse_support() {
        let m = kernel_measure(params(1.0), 0.3, 0.7).unwrap();
        assert_eq!(m.atoms(), &[0.3]);
        let m = kernel_measure(params(0.0), 0.3, 0.7).unwrap();
        assert_eq!(m.atoms(), &[0.7]);
    }

    #[test]
    fn rejects_points_outside_domain() {
        assert!(kernel_measure(params(0.8), 1.0, 0.5).is_err());
        assert!(kernel_measure(params(0.8), -0.1, 0.5).is_err());
        assert!(kernel_measure(params(0.8), f64::NAN, 0.5).is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(KernelParams::new(1.2).is_err());
        assert!(KernelParams::new(-0.01).is_err());
        assert!(KernelParams::new(f64::NAN).is_err());
    }

    #[test]
    fn identity_kernel_cases() {
        assert_eq!(identity_kernel_measure(0.2, 0.3, 0.0, 0.5).unwrap(), 1.0);
        assert_eq!(identity_kernel_measure(0.2, 0.7, 0.0, 0.5).unwrap(), 0.5);
        assert_eq!(identity_kernel_measure(0.6, 0.7, 0.0, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn swapped_exchanges_p_and_q() {
        let k = params(0.3);
        assert_eq!(k.swapped().p(), 0.7);
        assert_eq!(k.swapped().q(), k.swapped().swapped().p());
        // The round trip is 1-(1-p), exact only up to an ulp.
        assert!((k.swapped().swapped().p() - k.p()).abs() < 1e-15);
    }
}
