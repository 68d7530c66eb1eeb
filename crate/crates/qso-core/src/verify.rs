//! The invariant suite behind the CLI `verify` command.
//!
//! Every check is a numerical invariant of a correct build: conservation
//! laws, symmetries, oracle agreements, and the certified bound checks on
//! cells where the claimed inequalities are mathematically true. Cells
//! where the density sup bound is known to overshoot (see [`crate::bounds`])
//! are reported as informational lines with their measured violation; they
//! do not fail the suite, since no implementation can make a false
//! inequality hold.

use serde::Serialize;

use crate::atomic::{self, AtomicMeasure};
use crate::bounds;
use crate::cdf::{self, CdfMeasure, DensityOrbit};
use crate::convergence::{self, InitialMeasure, Metric, PredictedLimit};
use crate::kernel::{self, KernelParams};
use crate::particle;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Info,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub module: &'static str,
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
}

impl CheckOutcome {
    fn gate(module: &'static str, name: &'static str, ok: bool, detail: String) -> Self {
        CheckOutcome {
            module,
            name,
            status: if ok { Status::Pass } else { Status::Fail },
            detail,
        }
    }
}

fn params(p: f64) -> KernelParams {
    KernelParams::new(p).expect("checked parameter")
}

fn random_measure(rng: &mut SplitMix64, max_atoms: usize) -> AtomicMeasure {
    loop {
        let n = 1 + rng.below(max_atoms);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.next_f64() * 0.999, rng.next_f64() + 1e-3))
            .collect();
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        for pr in &mut pairs {
            pr.1 /= total;
        }
        if let Ok(m) = AtomicMeasure::new(pairs) {
            return m;
        }
    }
}

fn kernel_checks(out: &mut Vec<CheckOutcome>) {
    let mut rng = SplitMix64::new(0xA11CE);
    let mut sum_ok = true;
    let mut sym_ok = true;
    let mut support_ok = true;
    for _ in 0..2000 {
        let k = params(rng.next_f64());
        let x = rng.next_f64() * 0.999;
        let y = rng.next_f64() * 0.999;
        let m = kernel::kernel_measure(k, x, y).expect("domain ok");
        let s: f64 = m.weights().iter().sum();
        sum_ok &= (s - 1.0).abs() <= 1e-15 && m.weights().iter().all(|w| *w >= 0.0);
        support_ok &= m.atoms().iter().all(|a| *a == x || *a == y);
        let m2 = kernel::kernel_measure(k, y, x).expect("domain ok");
        sym_ok &= m.atoms() == m2.atoms()
            && m.weights()
                .iter()
                .zip(m2.weights())
                .all(|(a, b)| a.to_bits() == b.to_bits());
    }
    out.push(CheckOutcome::gate(
        "kernel",
        "pair_measure_is_probability",
        sum_ok,
        "weights of every two-parent measure sum to 1".into(),
    ));
    out.push(CheckOutcome::gate(
        "kernel",
        "parent_symmetry_bitwise",
        sym_ok,
        "kernel_measure(x,y) == kernel_measure(y,x)".into(),
    ));
    out.push(CheckOutcome::gate(
        "kernel",
        "support_subset_of_parents",
        support_ok,
        "offspring support stays inside {x,y}".into(),
    ));

    // the identity-example kernel generates the identity operator on atoms
    let mut rng = SplitMix64::new(0xA11CF);
    let mut id_ok = true;
    for _ in 0..50 {
        let m = random_measure(&mut rng, 8);
        for (i, &a) in m.atoms().iter().enumerate() {
            // [a, hi) isolates this atom from the next one
            let hi = match m.atoms().get(i + 1) {
                Some(&next) => a + 0.45 * (next - a),
                None => (a + 1e-9).min(1.0),
            };
            // V m ({a}) = sum_{j,l} w_j w_l P(a_j, a_l, [a, hi))
            let mut v = 0.0;
            for (j, &aj) in m.atoms().iter().enumerate() {
                for (l, &al) in m.atoms().iter().enumerate() {
                    let p_val = kernel::identity_kernel_measure(aj, al, a, hi).expect("ok");
                    v += m.weights()[j] * m.weights()[l] * p_val;
                }
            }
            id_ok &= (v - m.weights()[i]).abs() <= 1e-12;
        }
    }
    out.push(CheckOutcome::gate(
        "kernel",
        "identity_example_fixes_atoms",
        id_ok,
        "the 1 / 1/2 / 0 kernel's operator fixes every atomic measure".into(),
    ));
}

fn atomic_checks(out: &mut Vec<CheckOutcome>) {
    let mut rng = SplitMix64::new(0xB0B);
    let mut mass_ok = true;
    let mut worst_mass = 0.0f64;
    for _ in 0..10_000 {
        let m = random_measure(&mut rng, 20);
        let k = params(rng.next_f64());
        let (_, info) = atomic::apply_once_detailed(k, &m);
        worst_mass = worst_mass.max(info.mass_error);
        mass_ok &= info.mass_error <= 1e-12;
    }
    out.push(CheckOutcome::gate(
        "atomic",
        "mass_conservation",
        mass_ok,
        format!("worst |raw mass - 1| = {worst_mass:.2e} over 1e4 random steps"),
    ));

    let mut rng = SplitMix64::new(0xB0C);
    let mut mono_ok = true;
    let mut conv_ok = true;
    for _ in 0..50 {
        let m = random_measure(&mut rng, 6);
        let p = rng.next_f64();
        let k = params(p);
        let tr = atomic::iterate(k, &m, 150);
        // extreme-weight monotonicity along the whole trajectory
        for w in tr.weights_per_step.windows(2) {
            if p >= 0.5 {
                mono_ok &= w[1][0] >= w[0][0] - 1e-15;
            }
            if p <= 0.5 {
                mono_ok &= *w[1].last().unwrap() >= *w[0].last().unwrap() - 1e-15;
            }
        }
        if (p - 0.5).abs() > 0.05 && m.len() >= 2 {
            let limit = atomic::predict_limit(k, &m);
            let last = tr.last_measure().expect("nonempty");
            conv_ok &= last.mean_distance_to(limit.atoms()[0]) < 1e-3;
        }
    }
    out.push(CheckOutcome::gate(
        "atomic",
        "extreme_weight_monotonicity",
        mono_ok,
        "winning-side weight never decreases".into(),
    ));
    out.push(CheckOutcome::gate(
        "atomic",
        "trajectory_reaches_predicted_limit",
        conv_ok,
        "150 steps land within 1e-3 of the predicted Dirac".into(),
    ));

    let mut rng = SplitMix64::new(0xB0D);
    let mut oracle_ok = true;
    for _ in 0..100 {
        let m = random_measure(&mut rng, 20);
        let k = params(rng.next_f64());
        let fast = atomic::apply_once(k, &m);
        let slow = atomic::apply_once_brute_force(k, &m).expect("oracle");
        oracle_ok &= fast.len() == slow.len()
            && fast
                .weights()
                .iter()
                .zip(slow.weights())
                .all(|(a, b)| (a - b).abs() <= 1e-12);
    }
    out.push(CheckOutcome::gate(
        "atomic",
        "double_sum_oracle_agreement",
        oracle_ok,
        "prefix-sum step equals the brute-force kernel double sum to 1e-12".into(),
    ));
}

fn cdf_checks(out: &mut Vec<CheckOutcome>) {
    // endpoint density exactness
    let mut endpoint_ok = true;
    for p in [0.6, 0.8, 0.95] {
        let k = params(p);
        for n in 1..=40u32 {
            let o = DensityOrbit::new(k, CdfMeasure::uniform(), n).expect("n >= 1");
            let d0 = o.density_at(0.0).expect("ok").value;
            let d1 = o.density_at(1.0).expect("ok").value;
            let e0 = exact_pow(2.0 * k.q(), n);
            let e1 = exact_pow(2.0 * k.p(), n);
            let budget = n as f64 * 2f64.powi(-50);
            endpoint_ok &= ((d0 - e0) / e0).abs() <= budget && ((d1 - e1) / e1).abs() <= budget;
        }
    }
    out.push(CheckOutcome::gate(
        "cdf",
        "endpoint_density_exactness",
        endpoint_ok,
        "density at the endpoints equals (2q)^n and (2p)^n to n ulps".into(),
    ));

    // CDF/density consistency and normalization
    let mut rng = SplitMix64::new(0xC0FFEE);
    let mut consistency_ok = true;
    let mut worst = 0.0f64;
    for _ in 0..60 {
        let p = 0.02 + 0.96 * rng.next_f64();
        let n = 1 + rng.below(15) as u32;
        let a = rng.next_f64() * 0.6;
        let b = (a + rng.next_f64() * (1.0 - a)).min(1.0);
        let base = if rng.below(2) == 0 {
            CdfMeasure::uniform()
        } else {
            CdfMeasure::power(2.0).expect("k >= 1")
        };
        let o = DensityOrbit::new(params(p), base, n).expect("n >= 1");
        let next = o.at_step(n + 1).expect("n + 1 >= 1");
        let lhs = match o.integrate_density(a, b, 1e-9) {
            Ok(r) => r.value,
            Err(_) => {
                consistency_ok = false;
                continue;
            }
        };
        let rhs = next.cdf_at(b).expect("ok") - next.cdf_at(a).expect("ok");
        worst = worst.max((lhs - rhs).abs());
        consistency_ok &= (lhs - rhs).abs() <= 1e-6;
    }
    out.push(CheckOutcome::gate(
        "cdf",
        "density_integral_matches_cdf_difference",
        consistency_ok,
        format!("worst |quadrature - CDF difference| = {worst:.2e}"),
    ));

    let mut norm_ok = true;
    for n in [1u32, 5, 10, 20] {
        let o = DensityOrbit::new(params(0.8), CdfMeasure::uniform(), n).expect("ok");
        match o.integrate_density(0.0, 1.0, 1e-8) {
            Ok(r) => norm_ok &= (r.value - 1.0).abs() <= 1e-6,
            Err(_) => norm_ok = false,
        }
    }
    out.push(CheckOutcome::gate(
        "cdf",
        "density_normalization",
        norm_ok,
        "the density integrates to 1 over [0,1] for n <= 20".into(),
    ));

    // reflection conjugacy
    let mut refl_ok = true;
    let mut rng = SplitMix64::new(0xC0FFE7);
    for _ in 0..10 {
        let k = params(rng.next_f64());
        let sw = k.swapped();
        for i in 0..=10_000 {
            let x = i as f64 / 10_000.0;
            let lhs = cdf::g_map_unchecked(k, x);
            let rhs = 1.0 - cdf::g_map_unchecked(sw, 1.0 - x);
            refl_ok &= (lhs - rhs).abs() <= 1e-15;
        }
    }
    out.push(CheckOutcome::gate(
        "cdf",
        "reflection_conjugacy",
        refl_ok,
        "G_p(x) = 1 - G_swapped(1-x) to 1e-15 on 1e4-point grids".into(),
    ));

    // monotone CDFs and the derivative identity
    let mut mono_ok = true;
    let mut deriv_ok = true;
    for p in [0.2, 0.5, 0.8] {
        let k = params(p);
        for n in [1u32, 4, 9] {
            let o = DensityOrbit::new(k, CdfMeasure::uniform(), n).expect("ok");
            let mut prev = -1.0;
            for i in 0..=500 {
                let x = i as f64 / 500.0;
                let g = o.cdf_at(x).expect("ok");
                mono_ok &= g >= prev - 1e-12;
                prev = g;
            }
        }
        let h = 1e-6;
        for i in 1..200 {
            let x = i as f64 / 200.0 - 2.5e-3;
            let fd = (cdf::g_map_unchecked(k, x + h) - cdf::g_map_unchecked(k, x - h)) / (2.0 * h);
            deriv_ok &= (fd - cdf::f_factor_unchecked(k, x)).abs() <= 1e-6;
        }
    }
    out.push(CheckOutcome::gate(
        "cdf",
        "cdf_monotone_in_x",
        mono_ok,
        "orbit CDFs are nondecreasing on sampled grids".into(),
    ));
    out.push(CheckOutcome::gate(
        "cdf",
        "map_derivative_is_density_factor",
        deriv_ok,
        "centered difference of G matches f to 1e-6".into(),
    ));

    // endpoint divergence dichotomy: for p > 1/2 the density at 0 strictly
    // decays to 0 and at 1 strictly grows without bound; mirrored otherwise
    let mut dich_ok = true;
    for p in [0.8, 0.2] {
        let k = params(p);
        let (decaying, growing) = if p > 0.5 { (0.0, 1.0) } else { (1.0, 0.0) };
        let mut prev_decay = f64::INFINITY;
        let mut prev_grow = 0.0f64;
        for n in 1..=25u32 {
            let o = DensityOrbit::new(k, CdfMeasure::uniform(), n).expect("ok");
            let d_decay = o.density_at(decaying).expect("ok").value;
            let d_grow = o.density_at(growing).expect("ok").value;
            dich_ok &= d_decay < prev_decay && d_grow > prev_grow;
            prev_decay = d_decay;
            prev_grow = d_grow;
        }
        dich_ok &= prev_decay < 1e-8 && prev_grow > 1e4;
    }
    out.push(CheckOutcome::gate(
        "cdf",
        "endpoint_divergence_dichotomy",
        dich_ok,
        "losing-endpoint density decays, winning-endpoint density grows".into(),
    ));
}

fn exact_pow(base: f64, n: u32) -> f64 {
    // binary exponentiation; error O(log n) ulps
    let mut acc = 1.0f64;
    let mut b = base;
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            acc *= b;
        }
        b *= b;
        e >>= 1;
    }
    acc
}

fn bounds_checks(out: &mut Vec<CheckOutcome>) {
    // certificate structure: boundary identity, constants chain, domain growth
    let mut boundary_ok = true;
    let mut chain_ok = true;
    for p in [0.6, 0.8, 0.95] {
        let k = params(p);
        let start = bounds::min_valid_n(k).expect("p != 1/2");
        let mut prev_end = 0.0;
        for n in start..start + 50 {
            let c = bounds::certificate(k, n).expect("valid n");
            boundary_ok &= (cdf::g_map_unchecked(k, c.domain_end) - c.beta_n * c.domain_end).abs()
                <= 1e-12
                && c.beta_n * c.domain_end < c.domain_end;
            chain_ok &= 2.0 * p * c.beta_n.powf((n as f64 - 1.0) / 2.0) < 1.0 / (2.0 * p)
                && 1.0 / (2.0 * p) < 1.0;
            boundary_ok &= c.domain_end > prev_end;
            prev_end = c.domain_end;
        }
    }
    out.push(CheckOutcome::gate(
        "bounds",
        "certified_domain_boundary_identity",
        boundary_ok,
        "G(B_n) = beta_n B_n to 1e-12 and B_n grows toward 1".into(),
    ));
    out.push(CheckOutcome::gate(
        "bounds",
        "constants_inequality_chain",
        chain_ok,
        "2p sqrt(beta_n^(n-1)) < 1/(2p) < 1 on valid certificates".into(),
    ));

    // grid verification on cells where the density sup bound is true
    for p in [0.8, 0.95, 0.2, 0.05] {
        let k = params(p);
        let n = bounds::min_valid_n(k).expect("ok");
        for step in [n, n + 10] {
            let report =
                bounds::verify_bounds(k, &CdfMeasure::uniform(), step, 500).expect("valid");
            out.push(CheckOutcome::gate(
                "bounds",
                "grid_verification",
                report.all_pass,
                format!("p={p} n={step}: all four checks within 1e-12"),
            ));
        }
    }
    // cells with the known analytical overshoot: measured, reported, non-fatal
    for p in [0.6, 0.4] {
        let k = params(p);
        let n = bounds::min_valid_n(k).expect("ok") + 10;
        let report = bounds::verify_bounds(k, &CdfMeasure::uniform(), n, 500).expect("valid");
        let density = report
            .checks
            .iter()
            .find(|c| c.name == "density_sup_bound")
            .expect("present");
        out.push(CheckOutcome {
            module: "bounds",
            name: "density_sup_bound_overshoot",
            status: Status::Info,
            detail: format!(
                "p={p} n={n}: the density sup bound overshoots by {:.3e} (analytically expected; not an implementation defect)",
                density.max_violation
            ),
        });
    }
}

fn convergence_checks(out: &mut Vec<CheckOutcome>) {
    let mut fixed_ok = true;
    for p in [0.0, 0.25, 0.5, 0.75, 1.0] {
        for i in 0..100 {
            let a = i as f64 / 100.0;
            fixed_ok &= convergence::fixed_point_check(params(p), a).expect("ok") == 0.0;
        }
    }
    out.push(CheckOutcome::gate(
        "convergence",
        "dirac_fixed_points_exact",
        fixed_ok,
        "|V delta_a({a}) - 1| = 0 exactly on a dense grid".into(),
    ));

    let mut regular_ok = true;
    let mut limit_ok = true;
    for p in [0.05, 0.2, 0.4, 0.6, 0.8, 0.95] {
        let k = params(p);
        for init in [
            InitialMeasure::Cdf(CdfMeasure::uniform()),
            InitialMeasure::Cdf(CdfMeasure::power(2.0).expect("ok")),
            InitialMeasure::Atomic(
                AtomicMeasure::new([(0.2, 1.0 / 3.0), (0.5, 1.0 / 3.0), (0.8, 1.0 / 3.0)])
                    .expect("ok"),
            ),
        ] {
            let r = convergence::run_to_convergence(k, &init, Metric::W1, 1e-3, 200).expect("runs");
            regular_ok &= r.converged_at.is_some();
            match (&init, r.predicted_limit) {
                (InitialMeasure::Cdf(_), PredictedLimit::Point(t)) => {
                    limit_ok &= (p > 0.5 && t == 1.0) || (p < 0.5 && t == 0.0);
                }
                (InitialMeasure::Atomic(m), PredictedLimit::Point(t)) => {
                    limit_ok &= (p > 0.5 && t == m.atoms()[0])
                        || (p < 0.5 && t == *m.atoms().last().unwrap());
                }
                _ => limit_ok = false,
            }
        }
    }
    out.push(CheckOutcome::gate(
        "convergence",
        "regularity_within_200_steps",
        regular_ok,
        "every preset initial measure reaches W1 <= 1e-3".into(),
    ));
    out.push(CheckOutcome::gate(
        "convergence",
        "limit_matches_parameter_side",
        limit_ok,
        "predicted limit follows the sign of p - 1/2".into(),
    ));

    // W1 of the CDF orbit vs the particle empirical measure at the same step
    let mut w1_ok = true;
    let n_particles = 100_000usize;
    let w1_budget = 3.0 / (n_particles as f64).sqrt();
    for p in [0.3, 0.8] {
        let k = params(p);
        let spec = InitialMeasure::Cdf(CdfMeasure::uniform());
        let mut e = particle::sample_initial(&spec, n_particles, 42).expect("ok");
        for step in 1..=5u32 {
            e = particle::step_generation(k, &e, 1);
            let orbit = particle::analytic_cdf_orbit(k, &CdfMeasure::uniform(), step).expect("ok");
            let w1 = e.w1_distance(|x| orbit.cdf_at(x).expect("ok"), 4000);
            w1_ok &= w1 <= w1_budget;
        }
    }
    out.push(CheckOutcome::gate(
        "convergence",
        "w1_orbit_vs_particles",
        w1_ok,
        format!("orbit/particle W1 gap within {w1_budget:.2e} for 5 steps"),
    ));
}

fn particle_checks(out: &mut Vec<CheckOutcome>) {
    let n = 100_000usize;

    // support containment + determinism
    let spec = InitialMeasure::Atomic(
        AtomicMeasure::new([(0.1, 0.3), (0.5, 0.4), (0.9, 0.3)]).expect("ok"),
    );
    let e1 = particle::run(params(0.7), &spec, 10_000, 3, 5, 1).expect("ok");
    let e2 = particle::run(params(0.7), &spec, 10_000, 3, 5, 1).expect("ok");
    let subset = e1
        .points()
        .iter()
        .all(|&x| x == 0.1 || x == 0.5 || x == 0.9);
    out.push(CheckOutcome::gate(
        "particle",
        "support_containment",
        subset,
        "children never leave the parents' support".into(),
    ));
    out.push(CheckOutcome::gate(
        "particle",
        "determinism_same_seed",
        e1.points() == e2.points(),
        "identical (seed, inputs) reproduce identical ensembles".into(),
    ));

    // atomic agreement after 5 steps
    let atoms = AtomicMeasure::new([(0.2, 0.5), (0.7, 0.5)]).expect("ok");
    let mut agree_ok = true;
    for p in [0.3, 0.8] {
        let k = params(p);
        let e = particle::run(k, &InitialMeasure::Atomic(atoms.clone()), n, 5, 42, 1).expect("ok");
        let exact = atomic::iterate(k, &atoms, 5);
        let last = exact.weights_per_step.last().expect("rows");
        let emp = particle::empirical_weights(&e, exact.atoms.as_slice());
        let budget = 4.0 / (n as f64).sqrt();
        agree_ok &= emp.iter().zip(last).all(|(a, b)| (a - b).abs() <= budget);
    }
    out.push(CheckOutcome::gate(
        "particle",
        "atomic_agreement",
        agree_ok,
        "empirical weights match the exact trajectory within 4/sqrt(N)".into(),
    ));

    // continuous agreement via the mirrored orbit, moderate horizon
    let mut ks_ok = true;
    for p in [0.3, 0.8] {
        let k = params(p);
        let e =
            particle::run(k, &InitialMeasure::Cdf(CdfMeasure::uniform()), n, 3, 42, 1).expect("ok");
        let orbit = particle::analytic_cdf_orbit(k, &CdfMeasure::uniform(), 3).expect("ok");
        let ks = e.kolmogorov_distance(|x| orbit.cdf_at(x).expect("ok"));
        ks_ok &= ks <= 0.015;
    }
    out.push(CheckOutcome::gate(
        "particle",
        "continuous_agreement_short_horizon",
        ks_ok,
        "3-step empirical CDF within Kolmogorov 0.015 of the mirrored orbit".into(),
    ));
}

/// Runs the whole invariant suite. `Fail` outcomes indicate an
/// implementation defect; `Info` lines record measured facts that are not
/// gates.
pub fn run_all() -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    kernel_checks(&mut out);
    atomic_checks(&mut out);
    cdf_checks(&mut out);
    bounds_checks(&mut out);
    convergence_checks(&mut out);
    particle_checks(&mut out);
    out
}

/// True when no check failed (Info lines do not count).
pub fn all_passed(outcomes: &[CheckOutcome]) -> bool {
    outcomes.iter().all(|c| c.status != Status::Fail)
}
