//! Convergence diagnostics: distance traces to the predicted Dirac limit.
//!
//! The stopping metric is Wasserstein-1, computed for CDF orbits as the
//! area between the orbit CDF and the target Dirac's step function (it
//! metrizes weak convergence on `[0,1]` and vanishes exactly at the limit;
//! the sup distance from a continuous measure to a Dirac never does). For
//! atomic trajectories the distance is the weighted mean distance to the
//! target atom; the tail-mass metric (1 − winning weight) is also
//! available there.

use serde::Serialize;

use crate::atomic::{self, AtomicMeasure};
use crate::cdf::{CdfMeasure, DensityOrbit};
use crate::error::{Error, Result};
use crate::kernel::KernelParams;
use crate::quad;

/// Stopping metric for convergence runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    W1,
    TailMass,
}

/// Initial data for a convergence run.
#[derive(Debug, Clone)]
pub enum InitialMeasure {
    Atomic(AtomicMeasure),
    Cdf(CdfMeasure),
}

impl InitialMeasure {
    pub fn describe(&self) -> String {
        match self {
            InitialMeasure::Atomic(m) => format!("atoms[{}]", m.len()),
            InitialMeasure::Cdf(c) => c.name(),
        }
    }
}

/// Predicted trajectory limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PredictedLimit {
    /// Dirac at the given point (an endpoint for continuous initial data,
    /// the winning atom for atomic initial data).
    Point(f64),
    /// p = 1/2: the operator is the identity; nothing moves.
    Identity,
}

impl Serialize for PredictedLimit {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PredictedLimit::Point(x) => s.serialize_f64(*x),
            PredictedLimit::Identity => s.serialize_str("identity"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub p: f64,
    pub initial: String,
    pub metric: Metric,
    pub predicted_limit: PredictedLimit,
    /// (step, distance) pairs; step 0 is the initial measure.
    pub distances: Vec<(u32, f64)>,
    pub converged_at: Option<u32>,
    pub final_distance: f64,
}

/// Quadrature tolerance used for W1 integrals of CDF orbits.
const W1_QUAD_TOL: f64 = 1e-10;

/// W1 distance from the measure with CDF g to the Dirac at an endpoint:
/// ∫ g for target 1, ∫ (1 − g) for target 0.
pub fn w1_to_dirac_cdf(orbit: &DensityOrbit, target: f64) -> Result<f64> {
    if target != 0.0 && target != 1.0 {
        return Err(Error::InvalidDiracTarget(target));
    }
    let r = quad::integrate(
        |x| {
            let g = orbit.cdf_at(x).unwrap_or(f64::NAN);
            if target == 1.0 {
                g
            } else {
                1.0 - g
            }
        },
        0.0,
        1.0,
        W1_QUAD_TOL,
        1 << 16,
    );
    Ok(r.value.max(0.0))
}

/// W1 distance from an atomic measure to the Dirac at an endpoint.
pub fn w1_to_dirac_atomic(m: &AtomicMeasure, target: f64) -> Result<f64> {
    if target != 0.0 && target != 1.0 {
        return Err(Error::InvalidDiracTarget(target));
    }
    Ok(m.mean_distance_to(target))
}

/// |V δ_a({a}) − 1| computed through the atomic machinery; exactly 0 for
/// every a and p because each Dirac is a fixed point.
pub fn fixed_point_check(k: KernelParams, a: f64) -> Result<f64> {
    let dirac = AtomicMeasure::dirac(a)?;
    let image = atomic::apply_once(k, &dirac);
    Ok((image.weight_at(a) - 1.0).abs())
}

/// Iterates the appropriate dynamics, recording the distance to the
/// predicted limit each step, and stops at `tol` or after `max_steps`.
/// Non-convergence is reported in the result, not as an error. For
/// p = 1/2 the run short-circuits: the operator is the identity.
pub fn run_to_convergence(
    k: KernelParams,
    initial: &InitialMeasure,
    metric: Metric,
    tol: f64,
    max_steps: u32,
) -> Result<ConvergenceReport> {
    if tol <= 0.0 {
        return Err(Error::NonPositiveTolerance(tol));
    }
    if metric == Metric::TailMass && !matches!(initial, InitialMeasure::Atomic(_)) {
        return Err(Error::MetricUnsupported);
    }

    if k.is_identity() {
        return Ok(ConvergenceReport {
            p: k.p(),
            initial: initial.describe(),
            metric,
            predicted_limit: PredictedLimit::Identity,
            distances: vec![(0, 0.0)],
            converged_at: Some(0),
            final_distance: 0.0,
        });
    }

    match initial {
        InitialMeasure::Atomic(m) => {
            let limit = atomic::predict_limit(k, m);
            let target = limit.atoms()[0];
            let distance = |meas: &AtomicMeasure| -> f64 {
                match metric {
                    Metric::W1 => meas.mean_distance_to(target),
                    Metric::TailMass => 1.0 - meas.weight_at(target),
                }
            };
            let mut current = m.clone();
            let mut distances = Vec::new();
            let mut converged_at = None;
            for step in 0..=max_steps {
                let d = distance(&current);
                distances.push((step, d));
                if d <= tol {
                    converged_at = Some(step);
                    break;
                }
                if step < max_steps {
                    current = atomic::apply_once(k, &current);
                }
            }
            let final_distance = distances.last().expect("at least one step").1;
            Ok(ConvergenceReport {
                p: k.p(),
                initial: initial.describe(),
                metric,
                predicted_limit: PredictedLimit::Point(target),
                distances,
                converged_at,
                final_distance,
            })
        }
        InitialMeasure::Cdf(base) => {
            // continuous dynamics push mass to 1 for p > 1/2 and to 0 for
            // p < 1/2 (the orientation of the printed CDF map)
            let target = if k.p() > 0.5 { 1.0 } else { 0.0 };
            let mut distances = Vec::new();
            let mut converged_at = None;
            for step in 0..=max_steps {
                let orbit = DensityOrbit::new(k, base.clone(), step + 1)?;
                let d = w1_to_dirac_cdf(&orbit, target)?;
                distances.push((step, d));
                if d <= tol {
                    converged_at = Some(step);
                    break;
                }
            }
            let final_distance = distances.last().expect("at least one step").1;
            Ok(ConvergenceReport {
                p: k.p(),
                initial: initial.describe(),
                metric,
                predicted_limit: PredictedLimit::Point(target),
                distances,
                converged_at,
                final_distance,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(p: f64) -> KernelParams {
        KernelParams::new(p).unwrap()
    }

    #[test]
    fn w1_of_uniform_to_right_dirac_is_half() {
        let orbit = DensityOrbit::new(params(0.8), CdfMeasure::uniform(), 1).unwrap();
        let w = w1_to_dirac_cdf(&orbit, 1.0).unwrap();
        assert!((w - 0.5).abs() < 1e-9);
        let w0 = w1_to_dirac_cdf(&orbit, 0.0).unwrap();
        assert!((w0 - 0.5).abs() < 1e-9);
    }

    #[test]
    fn w1_of_single_atom() {
        let m = AtomicMeasure::dirac(0.2).unwrap();
        assert!((w1_to_dirac_atomic(&m, 0.0).unwrap() - 0.2).abs() < 1e-15);
        assert!((w1_to_dirac_atomic(&m, 1.0).unwrap() - 0.8).abs() < 1e-15);
        assert!(w1_to_dirac_atomic(&m, 0.5).is_err());
    }

    #[test]
    fn w1_strictly_decreases_along_the_orbit() {
        let o5 = DensityOrbit::new(params(0.8), CdfMeasure::uniform(), 6).unwrap();
        let o10 = DensityOrbit::new(params(0.8), CdfMeasure::uniform(), 11).unwrap();
        let w5 = w1_to_dirac_cdf(&o5, 1.0).unwrap();
        let w10 = w1_to_dirac_cdf(&o10, 1.0).unwrap();
        assert!(w10 < w5);
    }

    #[test]
    fn dirac_fixed_points_are_exact() {
        for p in [0.0, 0.25, 0.5, 0.75, 1.0] {
            for i in 0..50 {
                let a = i as f64 / 50.0;
                assert_eq!(fixed_point_check(params(p), a).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn identity_parameter_short_circuits() {
        let r = run_to_convergence(
            params(0.5),
            &InitialMeasure::Cdf(CdfMeasure::uniform()),
            Metric::W1,
            1e-3,
            100,
        )
        .unwrap();
        assert_eq!(r.predicted_limit, PredictedLimit::Identity);
        assert_eq!(r.converged_at, Some(0));
        assert_eq!(r.final_distance, 0.0);
    }

    #[test]
    fn continuous_run_converges_to_the_right_endpoint() {
        let r = run_to_convergence(
            params(0.8),
            &InitialMeasure::Cdf(CdfMeasure::uniform()),
            Metric::W1,
            1e-3,
            200,
        )
        .unwrap();
        assert_eq!(r.predicted_limit, PredictedLimit::Point(1.0));
        let at = r.converged_at.expect("must converge");
        assert!(at <= 60, "converged_at={at}");
    }

    #[test]
    fn atomic_run_with_tight_tolerance() {
        let m = AtomicMeasure::new([(0.2, 0.5), (0.7, 0.5)]).unwrap();
        let r = run_to_convergence(
            params(0.3),
            &InitialMeasure::Atomic(m),
            Metric::W1,
            1e-9,
            200,
        )
        .unwrap();
        assert_eq!(r.predicted_limit, PredictedLimit::Point(0.7));
        assert!(r.converged_at.expect("converges") <= 60);
    }

    #[test]
    fn tail_mass_metric_tracks_the_winning_weight() {
        let m = AtomicMeasure::new([(0.2, 0.5), (0.7, 0.5)]).unwrap();
        let r = run_to_convergence(
            params(0.8),
            &InitialMeasure::Atomic(m),
            Metric::TailMass,
            1e-9,
            30,
        )
        .unwrap();
        assert_eq!(r.predicted_limit, PredictedLimit::Point(0.2));
        assert!(r.converged_at.expect("reaches 1e-9 within 30 steps") <= 30);

        // the metric is undefined for continuous initial data
        assert!(run_to_convergence(
            params(0.8),
            &InitialMeasure::Cdf(CdfMeasure::uniform()),
            Metric::TailMass,
            1e-3,
            10,
        )
        .is_err());
    }

    #[test]
    fn non_convergence_is_reported_not_thrown() {
        let m = AtomicMeasure::new([(0.2, 0.5), (0.7, 0.5)]).unwrap();
        let r = run_to_convergence(
            params(0.8),
            &InitialMeasure::Atomic(m),
            Metric::W1,
            1e-12,
            3,
        )
        .unwrap();
        assert_eq!(r.converged_at, None);
        assert!(r.final_distance > 1e-12);
    }

    #[test]
    fn grid_base_converges_without_a_density() {
        let base =
            CdfMeasure::from_grid(vec![(0.0, 0.0), (0.3, 0.05), (0.8, 0.5), (1.0, 1.0)]).unwrap();
        let r = run_to_convergence(
            params(0.8),
            &InitialMeasure::Cdf(base),
            Metric::W1,
            1e-3,
            200,
        )
        .unwrap();
        assert_eq!(r.predicted_limit, PredictedLimit::Point(1.0));
        assert!(r.converged_at.is_some());
    }

    #[test]
    fn limit_side_matches_parameter_sign() {
        for p in [0.6, 0.8, 0.95] {
            let r = run_to_convergence(
                params(p),
                &InitialMeasure::Cdf(CdfMeasure::uniform()),
                Metric::W1,
                1e-3,
                200,
            )
            .unwrap();
            assert_eq!(r.predicted_limit, PredictedLimit::Point(1.0));
        }
        for p in [0.05, 0.2, 0.4] {
            let r = run_to_convergence(
                params(p),
                &InitialMeasure::Cdf(CdfMeasure::uniform()),
                Metric::W1,
                1e-3,
                200,
            )
            .unwrap();
            assert_eq!(r.predicted_limit, PredictedLimit::Point(0.0));
        }
    }
}
