//! The paper's comparative experiments as executable queries: directed vs
//! undirected counterparts, γ_p thresholds, ω sweeps, and the
//! star-vs-complete equivalence.

use rayon::prelude::*;
use serde::Serialize;

use crate::closed_form::{performance, Dynamics, OutputKind, PerformanceQuery};
use crate::error::{Error, Result};
use crate::graph::{
    complete_laplacian, cyclic_laplacian, deviation_from_average_output, imploding_star_laplacian,
    FamilyHint, Laplacian, OutputMatrix,
};
use crate::spectral::{decompose, observable_indices, InputSpec, SpectralData};
use crate::stability::GainSet;

/// Relative tolerance band used to call two performance values equal.
pub const RELATION_TOL: f64 = 1e-9;
/// Modes with `|Im λ| ≤ IMAG_TOL·(1 + |λ|)` count as real when deriving
/// theorem predictions.
pub const IMAG_TOL: f64 = 1e-9;
/// Margin before a sign condition counts as strict in a prediction.
pub const STRICT_MARGIN: f64 = 1e-7;
/// Absolute bisection tolerance for γ_p crossings.
pub const CROSSING_TOL: f64 = 1e-6;

/// Environment variable capping sweep parallelism.
pub const THREADS_ENV: &str = "DIGRAPH_PERF_THREADS";

fn sweep_pool() -> rayon::ThreadPool {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        if let Ok(k) = v.trim().parse::<usize>() {
            if k > 0 {
                builder = builder.num_threads(k);
            }
        }
    }
    builder.build().expect("thread pool construction cannot fail")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Less,
    Equal,
    Greater,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Prediction {
    Less,
    Equal,
    Greater,
    Indeterminate,
}

/// Outcome of one directed-vs-undirected comparison.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub p_directed: f64,
    pub p_undirected: f64,
    pub relation: Relation,
    pub theorem_prediction: Prediction,
    pub consistent: bool,
}

fn classify(p_directed: f64, p_undirected: f64) -> Relation {
    let tol = RELATION_TOL * (1.0 + p_directed.abs().max(p_undirected.abs()));
    if (p_directed - p_undirected).abs() <= tol {
        Relation::Equal
    } else if p_directed < p_undirected {
        Relation::Less
    } else {
        Relation::Greater
    }
}

/// Derive the theorem prediction from the directed spectrum alone, before
/// any performance number is computed, so a disagreement is a genuine bug
/// signal rather than circular arithmetic.
fn predict(
    s: &SpectralData,
    query: &PerformanceQuery,
    obsv: &std::collections::BTreeSet<usize>,
) -> Prediction {
    if !matches!(query.input, InputSpec::IdentityCovariance) {
        // the comparison theorems are H2 statements
        return Prediction::Indeterminate;
    }
    let complex_observable: Vec<usize> = obsv
        .iter()
        .copied()
        .filter(|&k| {
            let lam = s.eigenvalues()[k];
            lam.im.abs() > IMAG_TOL * (1.0 + lam.norm())
        })
        .collect();
    match query.dynamics {
        Dynamics::FirstOrder => Prediction::Equal,
        Dynamics::SecondOrder => {
            let g = query.gains.as_ref().expect("validated second-order query");
            match query.output {
                OutputKind::Velocity => {
                    if g.gamma_p != 0.0 && !complex_observable.is_empty() {
                        Prediction::Greater
                    } else {
                        Prediction::Equal
                    }
                }
                OutputKind::Position => {
                    if g.gamma_p == 0.0 || complex_observable.is_empty() {
                        return Prediction::Equal;
                    }
                    // sign conditions γ_d(k_d + γ_d Re λ_k) − γ_p over the
                    // observable set; strictness at a complex mode required
                    let cond = |k: usize| {
                        g.gamma_d * (g.k_d + g.gamma_d * s.eigenvalues()[k].re) - g.gamma_p
                    };
                    let all_nonneg = obsv.iter().all(|&k| cond(k) >= -STRICT_MARGIN);
                    let all_nonpos = obsv.iter().all(|&k| cond(k) <= STRICT_MARGIN);
                    let strict_pos = complex_observable.iter().any(|&k| cond(k) > STRICT_MARGIN);
                    let strict_neg = complex_observable.iter().any(|&k| cond(k) < -STRICT_MARGIN);
                    if all_nonneg && strict_pos {
                        Prediction::Less
                    } else if all_nonpos && strict_neg {
                        Prediction::Greater
                    } else {
                        Prediction::Indeterminate
                    }
                }
            }
        }
    }
}

/// Compare a normal directed Laplacian against its undirected counterpart
/// `(L + Lᵀ)/2` on one query, and check the outcome against the theorem
/// prediction derived from the spectrum alone.
pub fn compare_directed_undirected(
    l: &Laplacian,
    query: &PerformanceQuery,
) -> Result<ComparisonReport> {
    query.validate()?;
    if !l.is_normal(1e-10) {
        return Err(Error::NotNormal(
            "directed/undirected comparison requires a normal Laplacian".into(),
        ));
    }
    let l_prime = l.hermitian_part()?;
    let s = decompose(l, None)?;
    let s_prime = decompose(&l_prime, None)?;
    let obsv = observable_indices(&query.c, &s)?;
    let prediction = predict(&s, query, &obsv);
    let p_directed = performance(l, &s, query)?.value;
    let p_undirected = performance(&l_prime, &s_prime, query)?.value;
    let relation = classify(p_directed, p_undirected);
    let consistent = match prediction {
        Prediction::Indeterminate => true,
        Prediction::Less => relation == Relation::Less,
        Prediction::Equal => relation == Relation::Equal,
        Prediction::Greater => relation == Relation::Greater,
    };
    Ok(ComparisonReport {
        p_directed,
        p_undirected,
        relation,
        theorem_prediction: prediction,
        consistent,
    })
}

/// γ_p threshold data for position-based performance.
#[derive(Debug, Clone, Serialize)]
pub struct GammaThresholds {
    /// `min_k γ_d (k_d + γ_d Re λ_k)` over observable complex modes.
    pub gamma_l: f64,
    /// `max_k γ_d (k_d + γ_d Re λ_k)` over observable complex modes.
    pub gamma_u: f64,
    /// Sign changes of `P − P′` inside `[gamma_l, gamma_u]`.
    pub crossings: Vec<f64>,
}

/// Locate the γ_p bracket of the relative-feedback theorem and the sign
/// changes of `P(γ_p) − P′(γ_p)` inside it.
///
/// A γ_p that destabilizes the directed system is treated as `P = +∞`
/// (the L2 integral diverges), so the difference is positive there.
pub fn gamma_p_thresholds(
    l: &Laplacian,
    k_p: f64,
    k_d: f64,
    gamma_d: f64,
    c: &OutputMatrix,
) -> Result<GammaThresholds> {
    if gamma_d <= 0.0 || gamma_d.is_nan() {
        return Err(Error::InvalidQuery(format!(
            "gamma_d must be positive, got {gamma_d}"
        )));
    }
    if !l.is_normal(1e-10) {
        return Err(Error::NotNormal("γ_p thresholds require a normal Laplacian".into()));
    }
    let l_prime = l.hermitian_part()?;
    let s = decompose(l, None)?;
    let s_prime = decompose(&l_prime, None)?;
    let obsv = observable_indices(c, &s)?;
    let complex_modes: Vec<f64> = obsv
        .iter()
        .filter(|&&k| {
            let lam = s.eigenvalues()[k];
            lam.im.abs() > IMAG_TOL * (1.0 + lam.norm())
        })
        .map(|&k| gamma_d * (k_d + gamma_d * s.eigenvalues()[k].re))
        .collect();
    if complex_modes.is_empty() {
        return Err(Error::NoComplexObservableMode);
    }
    let gamma_l = complex_modes.iter().cloned().fold(f64::INFINITY, f64::min);
    let gamma_u = complex_modes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let diff = |gamma_p: f64| -> Result<f64> {
        let gains = GainSet::new(k_p, k_d, gamma_p, gamma_d)?;
        let query = PerformanceQuery {
            dynamics: Dynamics::SecondOrder,
            output: OutputKind::Position,
            c: c.clone(),
            gains: Some(gains),
            input: InputSpec::IdentityCovariance,
        };
        let pd = match performance(l, &s, &query) {
            Ok(r) => r.value,
            Err(Error::Unstable(_)) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        let pu = match performance(&l_prime, &s_prime, &query) {
            Ok(r) => r.value,
            Err(Error::Unstable(_)) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        if pd.is_infinite() && pu.is_infinite() {
            return Err(Error::Unstable(format!(
                "both systems unstable at gamma_p = {gamma_p}"
            )));
        }
        Ok(pd - pu)
    };

    // grid scan for brackets, then bisection
    let grid_points = 256usize;
    let mut crossings = Vec::new();
    let step = (gamma_u - gamma_l) / grid_points as f64;
    if step > 0.0 {
        let mut prev_g = gamma_l;
        let mut prev_f = diff(prev_g)?;
        for i in 1..=grid_points {
            let g = gamma_l + step * i as f64;
            let f = diff(g)?;
            if prev_f == 0.0 {
                crossings.push(prev_g);
            } else if prev_f.signum() != f.signum() {
                let (mut lo, mut hi, mut flo) = (prev_g, g, prev_f);
                while hi - lo > CROSSING_TOL {
                    let mid = 0.5 * (lo + hi);
                    let fm = diff(mid)?;
                    if fm == 0.0 {
                        lo = mid;
                        hi = mid;
                    } else if fm.signum() == flo.signum() {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                crossings.push(0.5 * (lo + hi));
            }
            prev_g = g;
            prev_f = f;
        }
    }
    Ok(GammaThresholds { gamma_l, gamma_u, crossings })
}

/// One row of the ω sweep.
#[derive(Debug, Clone, Serialize)]
pub struct OmegaRow {
    pub omega: usize,
    /// `None` when the query is unstable at this ω.
    pub performance: Option<f64>,
    pub stable: bool,
}

/// Per-ω performance of the ω-nearest-neighbor family `L^cyc(1, ω)` with
/// identity input covariance. Unstable rows are flagged and the sweep
/// continues.
pub fn omega_sweep(
    n: usize,
    gains: Option<&GainSet>,
    dynamics: Dynamics,
    output: OutputKind,
    c: &OutputMatrix,
) -> Result<Vec<OmegaRow>> {
    if n < 2 {
        return Err(Error::BadSize(format!("omega sweep needs n >= 2, got {n}")));
    }
    let gains = gains.copied();
    let pool = sweep_pool();
    let rows: Vec<Result<OmegaRow>> = pool.install(|| {
        (1..n)
            .into_par_iter()
            .map(|omega| {
                let l = cyclic_laplacian(n, 1.0, omega)?;
                let s = decompose(&l, Some(FamilyHint::Cycle { n, d: 1.0, omega }))?;
                let query = PerformanceQuery {
                    dynamics,
                    output,
                    c: c.clone(),
                    gains,
                    input: InputSpec::IdentityCovariance,
                };
                match performance(&l, &s, &query) {
                    Ok(r) => Ok(OmegaRow { omega, performance: Some(r.value), stable: true }),
                    Err(Error::Unstable(_)) => {
                        Ok(OmegaRow { omega, performance: None, stable: false })
                    }
                    Err(e) => Err(e),
                }
            })
            .collect()
    });
    rows.into_iter().collect()
}

/// The ω with the smallest stable performance value; ties resolve to the
/// smallest ω within a relative tolerance band.
pub fn omega_argmin(rows: &[OmegaRow]) -> Option<usize> {
    let min = rows
        .iter()
        .filter_map(|r| r.performance)
        .fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return None;
    }
    rows.iter()
        .find(|r| {
            r.performance
                .map(|v| v <= min * (1.0 + 1e-9) + 1e-12)
                .unwrap_or(false)
        })
        .map(|r| r.omega)
}

/// One row of the star-vs-complete table.
#[derive(Debug, Clone, Serialize)]
pub struct StarCompleteRow {
    pub n: usize,
    pub p_star: f64,
    pub p_complete: f64,
    pub abs_diff: f64,
}

/// Deviation-from-average performance of the all-to-one star against the
/// all-to-all complete graph over a range of network sizes.
pub fn star_vs_complete(
    n_range: std::ops::RangeInclusive<usize>,
    gains: Option<&GainSet>,
    dynamics: Dynamics,
    output: OutputKind,
) -> Result<Vec<StarCompleteRow>> {
    let gains = gains.copied();
    let sizes: Vec<usize> = n_range.collect();
    let pool = sweep_pool();
    let rows: Vec<Result<StarCompleteRow>> = pool.install(|| {
        sizes
            .par_iter()
            .map(|&n| {
                let c = deviation_from_average_output(n)?;
                let query = PerformanceQuery {
                    dynamics,
                    output,
                    c,
                    gains,
                    input: InputSpec::IdentityCovariance,
                };
                let l_star = imploding_star_laplacian(n)?;
                let s_star = decompose(&l_star, Some(FamilyHint::Star { n }))?;
                let p_star = performance(&l_star, &s_star, &query)?.value;
                let l_comp = complete_laplacian(n)?;
                let s_comp =
                    decompose(&l_comp, Some(FamilyHint::Cycle { n, d: 1.0, omega: n - 1 }))?;
                let p_complete = performance(&l_comp, &s_comp, &query)?.value;
                Ok(StarCompleteRow {
                    n,
                    p_star,
                    p_complete,
                    abs_diff: (p_star - p_complete).abs(),
                })
            })
            .collect()
    });
    rows.into_iter().collect()
}

/// One row of the γ_p sweep.
#[derive(Debug, Clone, Serialize)]
pub struct GammaSweepRow {
    pub gamma_p: f64,
    /// `None` when the directed system is unstable at this γ_p.
    pub p_directed: Option<f64>,
    /// `None` when the undirected system is unstable at this γ_p.
    pub p_undirected: Option<f64>,
}

/// Position- or velocity-based performance curves over a γ_p grid for a
/// directed Laplacian and its undirected counterpart.
#[allow(clippy::too_many_arguments)]
pub fn gamma_sweep(
    l: &Laplacian,
    l_prime: &Laplacian,
    k_p: f64,
    k_d: f64,
    gamma_d: f64,
    gamma_p_grid: &[f64],
    output: OutputKind,
    c: &OutputMatrix,
) -> Result<Vec<GammaSweepRow>> {
    let s = decompose(l, None)?;
    let s_prime = decompose(l_prime, None)?;
    let pool = sweep_pool();
    let rows: Vec<Result<GammaSweepRow>> = pool.install(|| {
        gamma_p_grid
            .par_iter()
            .map(|&gamma_p| {
                let gains = GainSet::new(k_p, k_d, gamma_p, gamma_d)?;
                let query = PerformanceQuery {
                    dynamics: Dynamics::SecondOrder,
                    output,
                    c: c.clone(),
                    gains: Some(gains),
                    input: InputSpec::IdentityCovariance,
                };
                let eval = |lap: &Laplacian, spec: &SpectralData| -> Result<Option<f64>> {
                    match performance(lap, spec, &query) {
                        Ok(r) => Ok(Some(r.value)),
                        Err(Error::Unstable(_)) => Ok(None),
                        Err(e) => Err(e),
                    }
                };
                Ok(GammaSweepRow {
                    gamma_p,
                    p_directed: eval(l, &s)?,
                    p_undirected: eval(l_prime, &s_prime)?,
                })
            })
            .collect()
    });
    rows.into_iter().collect()
}

/// Uniform grid helper for the CLI: `count` points from `start` to `stop`.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    if count == 0 {
        return Vec::new();
    }
    if count == 1 {
        return vec![start];
    }
    let step = (stop - start) / (count - 1) as f64;
    (0..count).map(|i| start + step * i as f64).collect()
}

fn fmt17(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.16e}")
    }
}

/// CSV with header `omega,performance,stable`; 17 significant digits.
pub fn omega_sweep_csv(rows: &[OmegaRow]) -> String {
    let mut out = String::from("omega,performance,stable\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            r.omega,
            fmt17(r.performance.unwrap_or(f64::NAN)),
            r.stable
        ));
    }
    out
}

/// CSV with header `gamma_p,p_directed,p_undirected`.
pub fn gamma_sweep_csv(rows: &[GammaSweepRow]) -> String {
    let mut out = String::from("gamma_p,p_directed,p_undirected\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            fmt17(r.gamma_p),
            fmt17(r.p_directed.unwrap_or(f64::NAN)),
            fmt17(r.p_undirected.unwrap_or(f64::NAN)),
        ));
    }
    out
}

/// CSV with header `n,p_star,p_complete,abs_diff`.
pub fn star_vs_complete_csv(rows: &[StarCompleteRow]) -> String {
    let mut out = String::from("n,p_star,p_complete,abs_diff\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.n,
            fmt17(r.p_star),
            fmt17(r.p_complete),
            fmt17(r.abs_diff)
        ));
    }
    out
}
