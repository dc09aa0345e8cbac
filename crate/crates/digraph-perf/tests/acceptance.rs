//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its measured numbers. Tolerances are pinned in the assertions.

use std::collections::BTreeSet;
use std::time::Instant;

use ndarray::prelude::*;
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use digraph_perf::analysis::{
    self, compare_directed_undirected, gamma_p_thresholds, omega_argmin, omega_sweep,
    star_vs_complete,
};
use digraph_perf::closed_form::{
    performance, pf_coefficients_distinct, pf_coefficients_repeated, star_performance, Dynamics,
    OutputKind, PerformanceQuery,
};
use digraph_perf::error::Error;
use digraph_perf::graph::{
    build_laplacian, complete_laplacian, cyclic_laplacian, deviation_from_average_output,
    directed_path_laplacian, imploding_star_laplacian, FamilyHint, Laplacian, OutputMatrix,
    WeightedDigraph,
};
use digraph_perf::oracle;
use digraph_perf::spectral::{decompose, observable_indices, InputSpec, SpectralData};
use digraph_perf::stability::{char_roots, io_stable_second_order, GainSet, ModeCoefficients};

fn dav(n: usize) -> OutputMatrix {
    deviation_from_average_output(n).unwrap()
}

/// Random q×n output matrix with C·1 = 0: random rows projected onto 1⊥.
fn random_output(rng: &mut ChaCha8Rng, n: usize) -> OutputMatrix {
    let q = rng.random_range(1..=n);
    let mut c = Array2::<f64>::zeros((q, n));
    for i in 0..q {
        let mut row: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mean = row.iter().sum::<f64>() / n as f64;
        row.iter_mut().for_each(|v| *v -= mean);
        for (j, v) in row.iter().enumerate() {
            c[[i, j]] = *v;
        }
    }
    OutputMatrix::from_matrix(c)
}

/// Strongly connected random weighted digraph: a ring backbone plus chords.
fn random_digraph(rng: &mut ChaCha8Rng, n: usize) -> Laplacian {
    let mut edges = Vec::new();
    for i in 0..n {
        edges.push((i, (i + 1) % n, rng.random_range(0.3..2.0)));
    }
    let chords = rng.random_range(0..=n);
    for _ in 0..chords {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i != j && !edges.iter().any(|&(a, b, _)| a == i && b == j) {
            edges.push((i, j, rng.random_range(0.2..1.5)));
        }
    }
    build_laplacian(&WeightedDigraph::new(n, edges).unwrap()).unwrap()
}

/// Random convex combination of cyclic Laplacians: normal, weight-balanced,
/// strongly connected, unit out-degree.
fn random_normal_laplacian(rng: &mut ChaCha8Rng, n: usize) -> Laplacian {
    let terms = rng.random_range(1..=3usize);
    let mut weights: Vec<f64> = (0..terms).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let mut m = Array2::<f64>::zeros((n, n));
    let mut used = BTreeSet::new();
    for w in weights {
        let mut omega = rng.random_range(1..n);
        while used.contains(&omega) {
            omega = rng.random_range(1..n);
        }
        used.insert(omega);
        let l = cyclic_laplacian(n, 1.0, omega).unwrap();
        m = &m + &(l.matrix() * w);
    }
    Laplacian::from_matrix(m).unwrap()
}

fn random_gains(rng: &mut ChaCha8Rng) -> GainSet {
    let mut k_p = rng.random_range(0.1..2.0);
    let mut gamma_p = rng.random_range(0.1..2.0);
    let gamma_d = if rng.random_bool(0.25) { 0.0 } else { rng.random_range(0.1..2.0) };
    let k_d = if gamma_d == 0.0 { rng.random_range(0.1..2.0) } else { rng.random_range(0.0..2.0) };
    if rng.random_bool(0.25) {
        gamma_p = 0.0;
    } else if rng.random_bool(0.2) {
        k_p = 0.0;
    }
    GainSet::new(k_p, k_d, gamma_p, gamma_d).unwrap()
}

fn stable_gains_for(rng: &mut ChaCha8Rng, s: &SpectralData, c: &OutputMatrix) -> GainSet {
    let obsv = observable_indices(c, s).unwrap();
    for _ in 0..60 {
        let g = random_gains(rng);
        if io_stable_second_order(s, &g, &obsv) {
            return g;
        }
    }
    // γ_p = 0 with positive absolute gains is stable for any reachable graph
    GainSet::new(1.0, 1.0, 0.0, 1.0).unwrap()
}

/// Criterion 1: closed form matches the Gramian oracles to 1e−8 relative on
/// 200 random stable queries over the family mix, in under 60 s.
#[test]
fn acceptance_1_oracle_equivalence() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC1);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    while count < 200 {
        let (l, s) = match count % 5 {
            0 => {
                let n = rng.random_range(4..=20);
                let l = random_digraph(&mut rng, n);
                match decompose(&l, None) {
                    Ok(s) => (l, s),
                    Err(_) => continue,
                }
            }
            1 => {
                let n = rng.random_range(3..=20);
                let omega = rng.random_range(1..n);
                let l = cyclic_laplacian(n, 1.0, omega).unwrap();
                let s = decompose(&l, Some(FamilyHint::Cycle { n, d: 1.0, omega })).unwrap();
                (l, s)
            }
            2 => {
                let n = rng.random_range(2..=20);
                let l = imploding_star_laplacian(n).unwrap();
                let s = decompose(&l, Some(FamilyHint::Star { n })).unwrap();
                (l, s)
            }
            3 => {
                let n = rng.random_range(3..=20);
                let l = complete_laplacian(n).unwrap();
                let s =
                    decompose(&l, Some(FamilyHint::Cycle { n, d: 1.0, omega: n - 1 })).unwrap();
                (l, s)
            }
            _ => {
                let n = rng.random_range(3..=12);
                let l = directed_path_laplacian(n).unwrap();
                let s = decompose(&l, Some(FamilyHint::Path { n })).unwrap();
                (l, s)
            }
        };
        let n = l.n();
        let c = if rng.random_bool(0.5) { dav(n) } else { random_output(&mut rng, n) };
        let (dynamics, output) = match count % 4 {
            0 => (Dynamics::FirstOrder, OutputKind::Position),
            1 => (Dynamics::SecondOrder, OutputKind::Position),
            2 => (Dynamics::SecondOrder, OutputKind::Velocity),
            _ => (Dynamics::SecondOrder, OutputKind::Position),
        };
        let gains = match dynamics {
            Dynamics::FirstOrder => None,
            Dynamics::SecondOrder => Some(stable_gains_for(&mut rng, &s, &c)),
        };
        let deterministic = rng.random_bool(0.4);
        let w0: Array1<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let input = if deterministic {
            InputSpec::Deterministic(w0.clone())
        } else {
            InputSpec::IdentityCovariance
        };
        let query = PerformanceQuery { dynamics, output, c: c.clone(), gains, input };
        let result = performance(&l, &s, &query).unwrap();
        assert!(
            result.imag_residual <= 1e-9 * (1.0 + result.value),
            "query {count}: imaginary residual {}",
            result.imag_residual
        );
        let closed = result.value;
        let ss = oracle::assemble(&l, gains.as_ref(), dynamics, output, &c).unwrap();
        let deflated = oracle::deflate(&ss, &s).unwrap();
        let reference = if deterministic {
            oracle::l2_response(&deflated, &w0).unwrap()
        } else {
            oracle::h2_norm(&deflated).unwrap()
        };
        let rel = (closed - reference).abs() / (1.0_f64).max(reference.abs());
        assert!(
            rel <= 1e-8,
            "query {count}: closed {closed} vs oracle {reference} (rel {rel:.3e})"
        );
        worst = worst.max(rel);
        count += 1;
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "criterion 1 took {elapsed:.1} s");
    println!("ACCEPTANCE 1 PASS: 200 queries, worst rel err {worst:.3e}, {elapsed:.1} s");
}

/// Criterion 2: exact star closed forms to 1e−12 relative for n = 2..49.
#[test]
fn acceptance_2_star_exact_special_cases() {
    let gains = GainSet::new(1.0, 1.0, 1.0, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    for n in 2..=49usize {
        let nf = n as f64;
        let mu: Vec<f64> = std::iter::once(0.0).chain(std::iter::repeat_n(1.0, n - 1)).collect();
        let l = imploding_star_laplacian(n).unwrap();
        let s = decompose(&l, Some(FamilyHint::Star { n })).unwrap();

        let expect_first = (nf - 1.0) * (nf - 1.0) / (2.0 * nf);
        let query = PerformanceQuery {
            dynamics: Dynamics::FirstOrder,
            output: OutputKind::Position,
            c: dav(n),
            gains: None,
            input: InputSpec::IdentityCovariance,
        };
        let general = performance(&l, &s, &query).unwrap().value;
        let special =
            star_performance(n, Dynamics::FirstOrder, OutputKind::Position, None, &mu).unwrap();
        for v in [general, special] {
            let rel = (v - expect_first).abs() / expect_first;
            assert!(rel <= 1e-12, "first order n={n}: {v} vs {expect_first}");
            worst = worst.max(rel);
        }

        let lam = nf / (nf - 1.0);
        let expect_pos = (nf - 1.0) / (2.0 * (1.0 + lam) * (1.0 + lam));
        let expect_vel = (nf - 1.0) / (2.0 * (1.0 + lam));
        for (output, expect) in
            [(OutputKind::Position, expect_pos), (OutputKind::Velocity, expect_vel)]
        {
            let query = PerformanceQuery {
                dynamics: Dynamics::SecondOrder,
                output,
                c: dav(n),
                gains: Some(gains),
                input: InputSpec::IdentityCovariance,
            };
            let general = performance(&l, &s, &query).unwrap().value;
            let special =
                star_performance(n, Dynamics::SecondOrder, output, Some(&gains), &mu).unwrap();
            for v in [general, special] {
                let rel = (v - expect).abs() / expect;
                assert!(rel <= 1e-12, "{output:?} n={n}: {v} vs {expect}");
                worst = worst.max(rel);
            }
        }
    }
    println!("ACCEPTANCE 2 PASS: star closed forms n=2..49, worst rel err {worst:.3e}");
}

/// Criterion 3: |P_star − P_complete| within 1e−10 relative across n = 2..49
/// and the five query families of the connectivity figure.
#[test]
fn acceptance_3_star_vs_complete() {
    let g1111 = GainSet::new(1.0, 1.0, 1.0, 1.0).unwrap();
    let g1101 = GainSet::new(1.0, 1.0, 0.0, 1.0).unwrap();
    let cases: [(Dynamics, OutputKind, Option<GainSet>, &str); 5] = [
        (Dynamics::FirstOrder, OutputKind::Position, None, "first"),
        (Dynamics::SecondOrder, OutputKind::Position, Some(g1111), "pos 1,1,1,1"),
        (Dynamics::SecondOrder, OutputKind::Position, Some(g1101), "pos 1,1,0,1"),
        (Dynamics::SecondOrder, OutputKind::Velocity, Some(g1111), "vel 1,1,1,1"),
        (Dynamics::SecondOrder, OutputKind::Velocity, Some(g1101), "vel 1,1,0,1"),
    ];
    let mut worst: f64 = 0.0;
    for (dynamics, output, gains, label) in cases {
        let rows = star_vs_complete(2..=49, gains.as_ref(), dynamics, output).unwrap();
        for r in &rows {
            let rel = r.abs_diff / (1.0_f64).max(r.p_star.abs());
            assert!(
                rel <= 1e-10,
                "{label} n={}: star {} vs complete {}",
                r.n,
                r.p_star,
                r.p_complete
            );
            worst = worst.max(rel);
        }
    }
    println!("ACCEPTANCE 3 PASS: star=complete over n=2..49 x 5 families, worst rel {worst:.3e}");
}

/// Criterion 4: 500 random normal-Laplacian comparisons never contradict the
/// directionality theorems; velocity-based performance of the directed system
/// is never better than the undirected one.
#[test]
fn acceptance_4_directionality_regression() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC4);
    let mut checked = 0;
    let mut velocity_checked = 0;
    while checked < 500 {
        let n = rng.random_range(5..=24);
        let l = random_normal_laplacian(&mut rng, n);
        let s = match decompose(&l, None) {
            Ok(s) => s,
            Err(_) => continue,
        };
        let c = if rng.random_bool(0.5) { dav(n) } else { random_output(&mut rng, n) };
        let (dynamics, output) = match checked % 3 {
            0 => (Dynamics::FirstOrder, OutputKind::Position),
            1 => (Dynamics::SecondOrder, OutputKind::Position),
            _ => (Dynamics::SecondOrder, OutputKind::Velocity),
        };
        let gains = match dynamics {
            Dynamics::FirstOrder => None,
            Dynamics::SecondOrder => Some(stable_gains_for(&mut rng, &s, &c)),
        };
        let query = PerformanceQuery {
            dynamics,
            output,
            c,
            gains,
            input: InputSpec::IdentityCovariance,
        };
        let report = match compare_directed_undirected(&l, &query) {
            Ok(r) => r,
            Err(Error::Unstable(_)) => continue,
            Err(e) => panic!("comparison failed: {e}"),
        };
        assert!(
            report.consistent,
            "sample {checked}: prediction {:?} but relation {:?} \
             (directed {}, undirected {})",
            report.theorem_prediction, report.relation, report.p_directed, report.p_undirected
        );
        if dynamics == Dynamics::SecondOrder && output == OutputKind::Velocity {
            assert!(
                report.p_directed >= report.p_undirected - 1e-9,
                "velocity degradation theorem violated: {} < {}",
                report.p_directed,
                report.p_undirected
            );
            velocity_checked += 1;
        }
        checked += 1;
    }
    println!("ACCEPTANCE 4 PASS: 500 comparisons consistent ({velocity_checked} velocity checks)");
}

/// Criterion 5: the γ_p bracket for the 50-cycle contains a sign change of
/// P − P′, with P < P′ below the bracket and P > P′ above it, in under 10 s.
#[test]
fn acceptance_5_gamma_thresholds() {
    let started = Instant::now();
    let l = cyclic_laplacian(50, 1.0, 1).unwrap();
    let l_prime = l.hermitian_part().unwrap();
    let c = dav(50);
    let t = gamma_p_thresholds(&l, 1.0, 2.0, 6.5, &c).unwrap();
    assert!(!t.crossings.is_empty(), "no sign change located in the bracket");
    for x in &t.crossings {
        assert!(*x >= t.gamma_l && *x <= t.gamma_u, "crossing {x} outside bracket");
    }

    // sign checks outside the bracket; an unstable directed system counts as
    // infinitely bad
    let s = decompose(&l, None).unwrap();
    let s_prime = decompose(&l_prime, None).unwrap();
    let eval = |lap: &Laplacian, sd: &SpectralData, gamma_p: f64| -> f64 {
        let query = PerformanceQuery {
            dynamics: Dynamics::SecondOrder,
            output: OutputKind::Position,
            c: dav(50),
            gains: Some(GainSet::new(1.0, 2.0, gamma_p, 6.5).unwrap()),
            input: InputSpec::IdentityCovariance,
        };
        match performance(lap, sd, &query) {
            Ok(r) => r.value,
            Err(Error::Unstable(_)) => f64::INFINITY,
            Err(e) => panic!("{e}"),
        }
    };
    let below = t.gamma_l / 2.0;
    assert!(
        eval(&l, &s, below) < eval(&l_prime, &s_prime, below),
        "directed should win below the bracket"
    );
    let above = 2.0 * t.gamma_u;
    assert!(
        eval(&l, &s, above) > eval(&l_prime, &s_prime, above),
        "directed should lose above the bracket"
    );
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "criterion 5 took {elapsed:.1} s");
    println!(
        "ACCEPTANCE 5 PASS: bracket [{:.4}, {:.4}], {} crossing(s), first at {:.6}, {elapsed:.1} s",
        t.gamma_l,
        t.gamma_u,
        t.crossings.len(),
        t.crossings[0]
    );
}

/// Criterion 6: the n = 51 connectivity sweep has its optimum at ω = 25 for
/// the four non-monotone panels and is monotone nonincreasing for the
/// velocity output with relative position feedback, in under 120 s.
#[test]
fn acceptance_6_omega_sweep() {
    let started = Instant::now();
    let n = 51;
    let c = dav(n);
    let g1111 = GainSet::new(1.0, 1.0, 1.0, 1.0).unwrap();
    let g1101 = GainSet::new(1.0, 1.0, 0.0, 1.0).unwrap();

    let argmin_cases: [(Dynamics, OutputKind, Option<GainSet>, &str); 4] = [
        (Dynamics::FirstOrder, OutputKind::Position, None, "first order"),
        (Dynamics::SecondOrder, OutputKind::Position, Some(g1111), "position 1,1,1,1"),
        (Dynamics::SecondOrder, OutputKind::Position, Some(g1101), "position 1,1,0,1"),
        (Dynamics::SecondOrder, OutputKind::Velocity, Some(g1101), "velocity 1,1,0,1"),
    ];
    for (dynamics, output, gains, label) in argmin_cases {
        let rows = omega_sweep(n, gains.as_ref(), dynamics, output, &c).unwrap();
        assert!(rows.iter().all(|r| r.stable), "{label}: unstable sweep point");
        let best = omega_argmin(&rows).unwrap();
        assert_eq!(best, 25, "{label}: argmin ω = {best}, expected 25");
    }

    let rows =
        omega_sweep(n, Some(&g1111), Dynamics::SecondOrder, OutputKind::Velocity, &c).unwrap();
    let vals: Vec<f64> = rows.iter().map(|r| r.performance.unwrap()).collect();
    for w in vals.windows(2) {
        assert!(
            w[1] <= w[0] + 1e-9 * (1.0 + w[0].abs()),
            "velocity 1,1,1,1 not monotone nonincreasing: {} -> {}",
            w[0],
            w[1]
        );
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 120.0, "criterion 6 took {elapsed:.1} s");
    println!(
        "ACCEPTANCE 6 PASS: argmin ω = 25 on 4 panels, velocity panel monotone, {elapsed:.1} s"
    );
}

fn omega_direct(
    lambda: Complex64,
    gains: &GainSet,
    delta: usize,
    output: OutputKind,
    s: Complex64,
) -> Complex64 {
    let b = Complex64::new(gains.k_d, 0.0) + gains.gamma_d * lambda;
    let c = Complex64::new(gains.k_p, 0.0) + gains.gamma_p * lambda;
    let r = match output {
        OutputKind::Position => Complex64::new(1.0, 0.0),
        OutputKind::Velocity => s,
    };
    let lin = Complex64::new(gains.gamma_p, 0.0) + s * gains.gamma_d;
    let mut num = r;
    for _ in 0..delta - 1 {
        num *= lin;
    }
    let chi = s * s + b * s + c;
    let mut den = Complex64::new(1.0, 0.0);
    for _ in 0..delta {
        den *= chi;
    }
    num / den
}

/// Criterion 7: the appendix partial-fraction coefficients reconstruct
/// Ω_{k,δ}(s) at random sample points, both root configurations, 1e−9
/// relative, 1000 samples.
#[test]
fn acceptance_7_partial_fraction_lemmas() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC7);
    let mut worst: f64 = 0.0;
    let mut repeated_count = 0;
    let mut trial = 0;
    let mut done = 0;
    while done < 1000 {
        trial += 1;
        let delta = rng.random_range(1..=4usize);
        let output = if trial % 2 == 0 { OutputKind::Position } else { OutputKind::Velocity };
        let make_repeated = trial % 3 == 0;
        let (lambda, gains) = if make_repeated {
            // pick gains, then λ (real, or complex with the constrained real
            // part) so the characteristic discriminant vanishes exactly
            let k_d = rng.random_range(0.2..2.0);
            let g_d = rng.random_range(0.2..2.0);
            let g_p = rng.random_range(0.2..2.0);
            let lambda = if rng.random_bool(0.5) {
                Complex64::new(rng.random_range(0.2..2.5), 0.0)
            } else {
                let re = (2.0 * g_p / g_d - k_d) / g_d;
                if re <= 0.05 {
                    continue;
                }
                Complex64::new(re, rng.random_range(0.1..1.5))
            };
            let b = Complex64::new(k_d, 0.0) + g_d * lambda;
            let k_p = (b * b / 4.0 - g_p * lambda).re;
            if k_p < 0.0 {
                continue;
            }
            (lambda, GainSet::new(k_p, k_d, g_p, g_d).unwrap())
        } else {
            let gains = GainSet::new(
                rng.random_range(0.1..2.0),
                rng.random_range(0.1..2.0),
                rng.random_range(0.1..2.0),
                if trial % 5 == 0 { 0.0 } else { rng.random_range(0.1..2.0) },
            )
            .unwrap();
            (
                Complex64::new(rng.random_range(0.1..2.5), rng.random_range(-1.5..1.5)),
                gains,
            )
        };
        let (r1, r2, repeated) = char_roots(lambda, &gains);
        let coeffs = if repeated {
            repeated_count += 1;
            pf_coefficients_repeated(lambda, &gains, delta, output).unwrap()
        } else {
            pf_coefficients_distinct(lambda, &gains, delta, output).unwrap()
        };
        for _ in 0..10 {
            let sp = Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            if (sp - r1).norm() < 0.3 || (sp - r2).norm() < 0.3 {
                continue;
            }
            let direct = omega_direct(lambda, &gains, delta, output, sp);
            let mut recon = Complex64::new(0.0, 0.0);
            if repeated {
                for lidx in 1..=2 * delta {
                    let mut den = Complex64::new(1.0, 0.0);
                    for _ in 0..2 * delta - lidx + 1 {
                        den *= sp - r1;
                    }
                    recon += coeffs[lidx - 1] / den;
                }
            } else {
                for lidx in 1..=delta {
                    let mut d1 = Complex64::new(1.0, 0.0);
                    let mut d2 = Complex64::new(1.0, 0.0);
                    for _ in 0..delta - lidx + 1 {
                        d1 *= sp - r1;
                        d2 *= sp - r2;
                    }
                    recon += coeffs[lidx - 1] / d1 + coeffs[lidx + delta - 1] / d2;
                }
            }
            let rel = (direct - recon).norm() / (1.0 + direct.norm());
            assert!(
                rel <= 1e-9,
                "trial {trial} δ={delta} {output:?} repeated={repeated}: rel {rel:.3e}"
            );
            worst = worst.max(rel);
        }
        done += 1;
    }
    assert!(repeated_count >= 100, "only {repeated_count} repeated-root samples");
    println!(
        "ACCEPTANCE 7 PASS: 1000 reconstructions ({repeated_count} repeated), worst rel {worst:.3e}"
    );
}

/// Criterion 8: the Routh–Hurwitz predicate agrees with direct root
/// computation away from a 1e−7 boundary band, 1000 samples.
#[test]
fn acceptance_8_stability_criterion() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC8);
    let mut checked = 0;
    let mut attempts = 0;
    while checked < 1000 {
        attempts += 1;
        assert!(attempts < 20_000, "boundary band rejected too many samples");
        let lambda = Complex64::new(rng.random_range(0.01..3.0), rng.random_range(-3.0..3.0));
        let gains = GainSet::new(
            if rng.random_bool(0.15) { 0.0 } else { rng.random_range(0.0..2.0) },
            rng.random_range(0.0..2.0),
            rng.random_range(0.0..2.0),
            if rng.random_bool(0.2) { 0.0 } else { rng.random_range(0.0..2.0) },
        );
        let gains = match gains {
            Ok(g) if g.has_both_feedbacks() => g,
            _ => continue,
        };
        let m = ModeCoefficients::for_mode(lambda, &gains);
        // skip the band around the stability boundary
        let scale = 1.0 + m.alpha.abs() + m.phi.abs() + m.beta.abs() + m.xi.abs();
        if m.hurwitz_margin().abs() <= 1e-7 * scale * scale || m.phi.abs() <= 1e-7 * scale {
            continue;
        }
        let (r1, r2, _) = char_roots(lambda, &gains);
        let max_re = r1.re.max(r2.re);
        if max_re.abs() <= 1e-7 {
            continue;
        }
        let rh = m.is_stable();
        let roots_stable = max_re < 0.0;
        assert_eq!(
            rh, roots_stable,
            "λ = {lambda}, gains {gains:?}: RH {rh} vs roots {roots_stable} (max Re {max_re})"
        );
        checked += 1;
    }
    println!("ACCEPTANCE 8 PASS: RH predicate = root test on 1000 samples");
}

/// Criterion 9: the Monte-Carlo mean of L2 responses over random
/// unit-covariance impulses converges to the H2 value within three standard
/// errors at 10,000 samples.
#[test]
fn acceptance_9_h2_l2_expectation() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC9);
    let n = 8;
    let l = cyclic_laplacian(n, 1.0, 1).unwrap();
    let s = decompose(&l, Some(FamilyHint::Cycle { n, d: 1.0, omega: 1 })).unwrap();
    let gains = GainSet::new(1.0, 1.0, 1.0, 1.0).unwrap();
    let c = dav(n);
    let query = PerformanceQuery {
        dynamics: Dynamics::SecondOrder,
        output: OutputKind::Position,
        c: c.clone(),
        gains: Some(gains),
        input: InputSpec::IdentityCovariance,
    };
    let h2 = performance(&l, &s, &query).unwrap().value;

    let ss = oracle::assemble(
        &l,
        Some(&gains),
        Dynamics::SecondOrder,
        OutputKind::Position,
        &c,
    )
    .unwrap();
    let deflated = oracle::deflate(&ss, &s).unwrap();
    let samples = 10_000;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        // standard normal entries give E[w0 w0ᵀ] = I
        let w0: Array1<f64> = (0..n)
            .map(|_| {
                let u1: f64 = rng.random_range(f64::EPSILON..1.0);
                let u2: f64 = rng.random_range(0.0..1.0);
                (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
            })
            .collect();
        let v = oracle::l2_response(&deflated, &w0).unwrap();
        sum += v;
        sum_sq += v * v;
    }
    let mean = sum / samples as f64;
    let var = (sum_sq / samples as f64 - mean * mean).max(0.0);
    let std_err = (var / samples as f64).sqrt();
    let dev = (mean - h2).abs();
    assert!(
        dev <= 3.0 * std_err,
        "Monte Carlo mean {mean} vs H2 {h2}: deviation {dev:.3e} > 3σ = {:.3e}",
        3.0 * std_err
    );
    println!(
        "ACCEPTANCE 9 PASS: MC mean {mean:.6} vs H2 {h2:.6} within {:.2} standard errors",
        dev / std_err
    );
}

/// Spec invariant: gauge changes of the eigenvector columns leave the
/// performance metric unchanged.
#[test]
fn invariant_gauge_independence() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6A06E);
    for trial in 0..20 {
        let n = rng.random_range(4..=12);
        let l = random_digraph(&mut rng, n);
        let s = match decompose(&l, None) {
            Ok(s) => s,
            Err(_) => continue,
        };
        let c = dav(n);
        let gains = stable_gains_for(&mut rng, &s, &c);
        let query = PerformanceQuery {
            dynamics: if trial % 2 == 0 { Dynamics::FirstOrder } else { Dynamics::SecondOrder },
            output: OutputKind::Position,
            c,
            gains: if trial % 2 == 0 { None } else { Some(gains) },
            input: InputSpec::IdentityCovariance,
        };
        let base = performance(&l, &s, &query).unwrap().value;
        // rescale every non-consensus column by a random complex factor
        let mut r = s.r().clone();
        for k in 1..n {
            let factor = Complex64::new(rng.random_range(0.3..2.0), rng.random_range(-1.0..1.0));
            for i in 0..n {
                r[[i, k]] *= factor;
            }
        }
        let rescaled = digraph_perf::spectral::import_jordan(
            &l,
            s.eigenvalues().to_vec(),
            s.block_sizes().to_vec(),
            r,
        )
        .unwrap();
        let regauged = performance(&l, &rescaled, &query).unwrap().value;
        assert!(
            (regauged - base).abs() <= 1e-9 * (1.0 + base.abs()),
            "gauge dependence: {base} vs {regauged}"
        );
    }
    println!("INVARIANT PASS: performance is gauge independent");
}

/// Spec invariant: for normal Laplacians ν_kk > 0 exactly on the observable
/// set.
#[test]
fn invariant_observability_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0B5E);
    for _ in 0..25 {
        let n = rng.random_range(5..=16);
        let l = random_normal_laplacian(&mut rng, n);
        let s = match decompose(&l, None) {
            Ok(s) => s,
            Err(_) => continue,
        };
        let c = if rng.random_bool(0.5) { dav(n) } else { random_output(&mut rng, n) };
        let w = digraph_perf::spectral::geometric_weights(&c, &s).unwrap();
        for k in 1..n {
            let nu_kk = w.nu()[[k - 1, k - 1]].re;
            if w.observable().contains(&k) {
                assert!(nu_kk > 0.0, "observable block {k} has ν_kk = {nu_kk}");
            } else {
                assert!(nu_kk.abs() <= 1e-9, "unobservable block {k} has ν_kk = {nu_kk}");
            }
        }
    }
    println!("INVARIANT PASS: ν_kk > 0 iff observable (normal Laplacians)");
}

/// Spec invariant: the normal-Laplacian fast path equals the general path.
#[test]
fn invariant_h2_normal_agrees_with_general() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x42A1);
    for trial in 0..30 {
        let n = rng.random_range(5..=18);
        let l = random_normal_laplacian(&mut rng, n);
        let s = match decompose(&l, None) {
            Ok(s) => s,
            Err(_) => continue,
        };
        let c = if rng.random_bool(0.5) { dav(n) } else { random_output(&mut rng, n) };
        let gains = stable_gains_for(&mut rng, &s, &c);
        let (dynamics, output, q_gains) = match trial % 3 {
            0 => (Dynamics::FirstOrder, OutputKind::Position, None),
            1 => (Dynamics::SecondOrder, OutputKind::Position, Some(gains)),
            _ => (Dynamics::SecondOrder, OutputKind::Velocity, Some(gains)),
        };
        let query = PerformanceQuery {
            dynamics,
            output,
            c: c.clone(),
            gains: q_gains,
            input: InputSpec::IdentityCovariance,
        };
        let w = digraph_perf::spectral::geometric_weights(&c, &s).unwrap();
        let fast = digraph_perf::closed_form::h2_normal(&l, &s, &w, &query).unwrap();
        let general = performance(&l, &s, &query).unwrap().value;
        assert!(
            (fast - general).abs() <= 1e-9 * (1.0 + general.abs()),
            "fast {fast} vs general {general}"
        );
    }
    println!("INVARIANT PASS: normal fast path equals the general path");
}

/// Spec invariant: the ω = (n−1)/2 sweep point ties the complete graph for
/// first-order dynamics (Hermitian-part identity).
#[test]
fn invariant_half_hop_equals_full_hop() {
    let rows = omega_sweep(
        51,
        None,
        Dynamics::FirstOrder,
        OutputKind::Position,
        &dav(51),
    )
    .unwrap();
    let half = rows[24].performance.unwrap();
    let full = rows[49].performance.unwrap();
    assert!((half - full).abs() <= 1e-9 * (1.0 + full));
    println!("INVARIANT PASS: ω = 25 ties ω = 50 at n = 51 (first order)");
}

/// Spec example: the position- and velocity-based γ sweep regimes of the
/// directionality figure.
#[test]
fn invariant_gamma_sweep_regimes() {
    let n = 20;
    let l = cyclic_laplacian(n, 1.0, 1).unwrap();
    let lp = l.hermitian_part().unwrap();
    let c = dav(n);

    // panel (a): k_p = 3, k_d = 5, γ_d = 0 — directed never better
    let grid_a = analysis::linspace(0.25, 6.0, 12);
    let rows = analysis::gamma_sweep(&l, &lp, 3.0, 5.0, 0.0, &grid_a, OutputKind::Position, &c)
        .unwrap();
    for r in &rows {
        let (Some(pd), Some(pu)) = (r.p_directed, r.p_undirected) else { continue };
        assert!(pd >= pu - 1e-9, "panel (a) γ_p = {}: {pd} < {pu}", r.gamma_p);
    }

    // panel (b): k_p = 1, k_d = 2, γ_d = 6.5 — directed wins at small γ_p,
    // loses at large γ_p (unstable rows count as infinitely bad)
    let t = gamma_p_thresholds(&l, 1.0, 2.0, 6.5, &c).unwrap();
    let grid_b = vec![t.gamma_l / 2.0, 2.0 * t.gamma_u];
    let rows = analysis::gamma_sweep(&l, &lp, 1.0, 2.0, 6.5, &grid_b, OutputKind::Position, &c)
        .unwrap();
    let pd_low = rows[0].p_directed.unwrap();
    let pu_low = rows[0].p_undirected.unwrap();
    assert!(pd_low < pu_low, "small γ_p should favor the directed cycle");
    let pu_high = rows[1].p_undirected.unwrap();
    match rows[1].p_directed {
        None => {}
        Some(pd_high) => assert!(pd_high > pu_high, "large γ_p should favor undirected"),
    }

    // panel (c): velocity output, k_p = 1, k_d = 2, γ_d = 7 — directed ≥
    // undirected everywhere, equal at γ_p = 0
    let grid_c = analysis::linspace(0.0, 3.0, 7);
    let rows = analysis::gamma_sweep(&l, &lp, 1.0, 2.0, 7.0, &grid_c, OutputKind::Velocity, &c)
        .unwrap();
    for r in &rows {
        let (Some(pd), Some(pu)) = (r.p_directed, r.p_undirected) else { continue };
        assert!(pd >= pu - 1e-9, "panel (c) γ_p = {}: {pd} < {pu}", r.gamma_p);
        if r.gamma_p == 0.0 {
            assert!((pd - pu).abs() <= 1e-9 * (1.0 + pu));
        }
    }
    println!("INVARIANT PASS: γ sweep regimes match the directionality figure");
}
