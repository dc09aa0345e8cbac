//! Closed-form evaluation of the performance metric `P = tr(Σ_Q Ψ)` from
//! per-block scalar products, with fast paths for diagonalizable and normal
//! Laplacians and the all-to-one special cases.

use std::collections::HashMap;
use std::f64::consts::PI;

use ndarray::prelude::*;
use num_complex::Complex64;
use serde::Serialize;

use crate::dd::{Dd, DdC};
use crate::error::{Error, Result};
use crate::graph::{Laplacian, OutputMatrix};
use crate::spectral::{geometric_weights, sigma_q, GeometricWeights, InputSpec, SpectralData};
use crate::stability::{
    char_roots, check_assumptions, io_stable_second_order, GainSet, ModeCoefficients,
};

/// Largest Jordan block size handled by the factorial tables.
pub const MAX_BLOCK_DELTA: usize = 20;

/// Block size beyond which even the extended-precision evaluation of the
/// second-order scalar products starts losing accuracy (the partial-fraction
/// terms cancel by ~1e20 at size 11 and grow roughly 1e3 per extra row).
pub const DELTA_FULL_ACCURACY: usize = 12;

const FACT_LEN: usize = 4 * MAX_BLOCK_DELTA + 1;

fn factorial(n: usize) -> f64 {
    static TABLE: std::sync::OnceLock<[f64; FACT_LEN]> = std::sync::OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = [1.0; FACT_LEN];
        for i in 1..FACT_LEN {
            t[i] = t[i - 1] * i as f64;
        }
        t
    });
    table[n]
}

fn dd_factorial(n: usize) -> Dd {
    static TABLE: std::sync::OnceLock<[Dd; FACT_LEN]> = std::sync::OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = [Dd::ONE; FACT_LEN];
        for i in 1..FACT_LEN {
            t[i] = t[i - 1].scale(i as f64);
        }
        t
    });
    table[n]
}

fn dd_binomial(n: usize, k: usize) -> Dd {
    if k > n {
        return Dd::ZERO;
    }
    dd_factorial(n) / (dd_factorial(k) * dd_factorial(n - k))
}

/// Integer power with the `z⁰ = 1` convention, also for `z = 0`.
fn powu(z: Complex64, e: usize) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    for _ in 0..e {
        acc *= z;
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Dynamics {
    FirstOrder,
    SecondOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Position,
    Velocity,
}

/// A fully specified performance question.
#[derive(Debug, Clone)]
pub struct PerformanceQuery {
    pub dynamics: Dynamics,
    pub output: OutputKind,
    pub c: OutputMatrix,
    /// Present iff `dynamics` is second order.
    pub gains: Option<GainSet>,
    pub input: InputSpec,
}

impl PerformanceQuery {
    pub fn validate(&self) -> Result<()> {
        if self.dynamics == Dynamics::FirstOrder && self.output == OutputKind::Velocity {
            return Err(Error::InvalidQuery(
                "velocity output requires second-order dynamics".into(),
            ));
        }
        if self.dynamics == Dynamics::SecondOrder && self.gains.is_none() {
            return Err(Error::InvalidQuery(
                "second-order dynamics requires a gain set".into(),
            ));
        }
        Ok(())
    }

    fn gains(&self) -> &GainSet {
        self.gains.as_ref().expect("validated second-order query")
    }
}

/// Which formula family produced a performance value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaPath {
    FirstOrderDiagonalizable,
    FirstOrderJordan,
    SecondOrderDiagonalizable,
    SecondOrderJordan,
}

#[derive(Debug, Clone, Serialize)]
pub struct PerformanceResult {
    /// `Re tr(Σ_Q Ψ)`, clipped to zero if within −1e−12.
    pub value: f64,
    /// Per-state contributions `Re diag(Σ_Q Ψ)` over the non-consensus
    /// states; they sum to `value`.
    pub psi_diag: Vec<f64>,
    /// Discarded imaginary part of the trace.
    pub imag_residual: f64,
    pub path: FormulaPath,
    /// Human-readable notes: repeated-root classifications, clipping.
    pub diagnostics: Vec<String>,
}

/// Theorem-1 scalar product for first-order networks:
/// `(−1)^e Φ / (λ̄_k + λ_l)^{e+1}` with `e = b−a+q−p` and
/// `Φ = e!/((b−a)!(q−p)!)`.
pub fn scalar_product_first_order(
    lam_k: Complex64,
    lam_l: Complex64,
    p: usize,
    q: usize,
    a: usize,
    b: usize,
) -> Result<Complex64> {
    assert!(p >= 1 && a >= 1 && p <= q && a <= b, "block entry indices must satisfy 1 ≤ p ≤ q, 1 ≤ a ≤ b");
    let den = lam_k.conj() + lam_l;
    if den.re <= 0.0 {
        return Err(Error::DivergentIntegral(format!(
            "Re(λ̄_k + λ_l) = {} is not positive",
            den.re
        )));
    }
    let e = (b - a) + (q - p);
    let phi = factorial(e) / (factorial(b - a) * factorial(q - p));
    let sign = if e.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(sign * phi / powu(den, e + 1))
}

/// τ(ζ, l) of the appendix lemmas.
fn dd_tau(zeta: usize, l: usize, delta: usize) -> Dd {
    let sign = if (l - zeta - 1).is_multiple_of(2) { 1.0 } else { -1.0 };
    (dd_binomial(l - 1, zeta) * dd_binomial(delta + l - zeta - 2, l - 1)).scale(sign)
}

/// Per-block characteristic-root data in extended precision. The
/// repeated/distinct classification comes from the shared f64 discriminant
/// threshold so every module branches identically.
#[derive(Debug, Clone, Copy)]
struct ModeRoots {
    r1: DdC,
    r2: DdC,
    repeated: bool,
}

impl ModeRoots {
    fn new(lambda: Complex64, gains: &GainSet) -> Self {
        let (f_r1, f_r2, repeated) = char_roots(lambda, gains);
        let lam = DdC::from_c64(lambda);
        let b = DdC::from_f64(gains.k_d, 0.0) + lam.scale(gains.gamma_d);
        let c = DdC::from_f64(gains.k_p, 0.0) + lam.scale(gains.gamma_p);
        if repeated {
            let rho = b.scale(-0.5);
            return Self { r1: rho, r2: rho, repeated: true };
        }
        let disc = b * b - c.scale(4.0);
        let sq = disc.sqrt();
        let bp = b + sq;
        let bm = b - sq;
        // cancellation-free branch first, companion root from the product
        let q = if bp.norm() >= bm.norm() { bp.scale(-0.5) } else { bm.scale(-0.5) };
        let other = c / q;
        // order the pair to match the f64 roots the public API reports
        let (r1, r2) = if (q.to_c64() - f_r1).norm() <= (q.to_c64() - f_r2).norm() {
            (q, other)
        } else {
            (other, q)
        };
        Self { r1, r2, repeated: false }
    }
}

fn dd_coefficients(
    mode: &ModeRoots,
    gains: &GainSet,
    delta: usize,
    output: OutputKind,
) -> Vec<DdC> {
    let gp = DdC::from_f64(gains.gamma_p, 0.0);
    let gd = DdC::from_f64(gains.gamma_d, 0.0);
    let mut coeffs = vec![DdC::ZERO; 2 * delta];
    if mode.repeated {
        let rho = mode.r1;
        let lin = gp + rho * gd;
        match output {
            OutputKind::Position => {
                for l in 1..=delta {
                    coeffs[l - 1] = gd.powu(l - 1)
                        * lin.powu(delta - l)
                        * DdC::from_real(dd_binomial(delta - 1, l - 1));
                }
            }
            OutputKind::Velocity => {
                // l = 1 evaluates the cancelled form ρ (γ_p + ρ γ_d)^{δ−1},
                // which keeps γ_d = 0 well-defined
                coeffs[0] = rho * lin.powu(delta - 1);
                for l in 2..=delta {
                    let pref = (gp.scale((l - 1) as f64) + (rho * gd).scale(delta as f64))
                        .scale(1.0 / (delta - l + 1) as f64);
                    coeffs[l - 1] = pref
                        * gd.powu(l - 2)
                        * lin.powu(delta - l)
                        * DdC::from_real(dd_binomial(delta - 1, l - 1));
                }
                coeffs[delta] = gd.powu(delta - 1);
            }
        }
        return coeffs;
    }
    for (base, ra, rb) in [(0usize, mode.r1, mode.r2), (delta, mode.r2, mode.r1)] {
        let lin = gp + ra * gd; // γ_p + ρ γ_d
        let gap = ra - rb;
        for l in 1..=delta {
            let mut acc = DdC::ZERO;
            for zeta in 0..l {
                let weight = match output {
                    OutputKind::Position => gd.powu(zeta) * lin.powu(delta - zeta - 1),
                    OutputKind::Velocity => {
                        // the ζ = 0 term cancels γ_d^{−1}·(δ ρ γ_d)/δ to ρ
                        let pref = if zeta == 0 {
                            ra
                        } else {
                            ((gp.scale(zeta as f64) + (ra * gd).scale(delta as f64))
                                * gd.powu(zeta - 1))
                            .scale(1.0 / (delta - zeta) as f64)
                        };
                        pref * lin.powu(delta - zeta - 1)
                    }
                };
                acc = acc
                    + weight * DdC::from_real(dd_tau(zeta, l, delta))
                        / gap.powu(delta + l - zeta - 1);
            }
            coeffs[base + l - 1] = acc;
        }
    }
    coeffs
}

/// Partial-fraction coefficients of `Ω_{k,δ}` when the characteristic roots
/// are distinct. Returns `c_1..c_{2δ}`: the first δ entries belong to ρ₁,
/// the rest to ρ₂ (the roots reported by [`char_roots`]).
pub fn pf_coefficients_distinct(
    lambda: Complex64,
    gains: &GainSet,
    delta: usize,
    output: OutputKind,
) -> Result<Vec<Complex64>> {
    check_delta(delta)?;
    let mode = ModeRoots::new(lambda, gains);
    if mode.repeated {
        return Err(Error::RepeatedRoots(format!(
            "characteristic roots at λ = {lambda} coincide; use the repeated-root coefficients"
        )));
    }
    Ok(dd_coefficients(&mode, gains, delta, output)
        .into_iter()
        .map(DdC::to_c64)
        .collect())
}

/// Partial-fraction coefficients of `Ω_{k,δ}` for a repeated characteristic
/// root; `c_1..c_{2δ}` over the single size-2δ chain.
pub fn pf_coefficients_repeated(
    lambda: Complex64,
    gains: &GainSet,
    delta: usize,
    output: OutputKind,
) -> Result<Vec<Complex64>> {
    check_delta(delta)?;
    let mode = ModeRoots::new(lambda, gains);
    if !mode.repeated {
        return Err(Error::DistinctRoots(format!(
            "characteristic roots at λ = {lambda} are distinct; use the distinct-root coefficients"
        )));
    }
    Ok(dd_coefficients(&mode, gains, delta, output)
        .into_iter()
        .map(DdC::to_c64)
        .collect())
}

fn check_delta(delta: usize) -> Result<()> {
    if delta == 0 {
        return Err(Error::ShapeMismatch("delta must be positive".into()));
    }
    if delta > MAX_BLOCK_DELTA {
        return Err(Error::ShapeMismatch(format!(
            "Jordan block size {delta} exceeds the supported maximum {MAX_BLOCK_DELTA}"
        )));
    }
    Ok(())
}

/// `Φ_{ζr}(σ, υ)` of the second-order scalar-product formulas.
fn dd_phi_zr(zeta: usize, r: usize, sigma: usize, upsilon: usize) -> Dd {
    let sign = if (zeta + r + 1).is_multiple_of(2) { 1.0 } else { -1.0 };
    (dd_factorial(sigma + upsilon - zeta - r)
        / (dd_factorial(sigma - zeta) * dd_factorial(upsilon - r)))
    .scale(sign)
}

fn stable_pair(num: DdC) -> Result<DdC> {
    if num.re.to_f64() >= 0.0 {
        return Err(Error::DivergentIntegral(format!(
            "Re(ρ̄ + ρ′) = {} is not negative",
            num.re.to_f64()
        )));
    }
    Ok(num)
}

fn second_order_product(
    mode_k: &ModeRoots,
    mode_l: &ModeRoots,
    ck: &[DdC],
    cl: &[DdC],
    sigma: usize,
    upsilon: usize,
) -> Result<DdC> {
    let mut acc = DdC::ZERO;
    match (mode_k.repeated, mode_l.repeated) {
        (false, false) => {
            let pairs = [
                (mode_k.r1, mode_l.r1, 0usize, 0usize),
                (mode_k.r1, mode_l.r2, 0, upsilon),
                (mode_k.r2, mode_l.r1, sigma, 0),
                (mode_k.r2, mode_l.r2, sigma, upsilon),
            ];
            let mut dens = [DdC::ZERO; 4];
            for (i, (rk, rl, _, _)) in pairs.iter().enumerate() {
                dens[i] = stable_pair(rk.conj() + *rl)?;
            }
            for zeta in 1..=sigma {
                for r in 1..=upsilon {
                    let f = DdC::from_real(dd_phi_zr(zeta, r, sigma, upsilon));
                    let e = sigma + upsilon - zeta - r + 1;
                    for (i, (_, _, ok, ol)) in pairs.iter().enumerate() {
                        acc = acc
                            + ck[zeta + ok - 1].conj() * cl[r + ol - 1] * f
                                / dens[i].powu(e);
                    }
                }
            }
        }
        (false, true) => {
            let rho_l = mode_l.r1;
            let d1 = stable_pair(mode_k.r1.conj() + rho_l)?;
            let d2 = stable_pair(mode_k.r2.conj() + rho_l)?;
            let sign = if upsilon.is_multiple_of(2) { 1.0 } else { -1.0 };
            for zeta in 1..=sigma {
                for r in 1..=2 * upsilon {
                    let fz = DdC::from_real(dd_phi_zr(zeta, r, sigma, 2 * upsilon).scale(sign));
                    let e = sigma + 2 * upsilon - zeta - r + 1;
                    acc = acc + ck[zeta - 1].conj() * cl[r - 1] * fz / d1.powu(e);
                    acc = acc + ck[zeta + sigma - 1].conj() * cl[r - 1] * fz / d2.powu(e);
                }
            }
        }
        (true, false) => {
            // ⟨h̃_ab, h̃_pq⟩ = conj(⟨h̃_pq, h̃_ab⟩) with the roles swapped
            let swapped = second_order_product(mode_l, mode_k, cl, ck, upsilon, sigma)?;
            acc = swapped.conj();
        }
        (true, true) => {
            let den = stable_pair(mode_k.r1.conj() + mode_l.r1)?;
            let sign = if (sigma + upsilon).is_multiple_of(2) { 1.0 } else { -1.0 };
            for zeta in 1..=2 * sigma {
                for r in 1..=2 * upsilon {
                    let fz =
                        DdC::from_real(dd_phi_zr(zeta, r, 2 * sigma, 2 * upsilon).scale(sign));
                    let e = 2 * sigma + 2 * upsilon - zeta - r + 1;
                    acc = acc + ck[zeta - 1].conj() * cl[r - 1] * fz / den.powu(e);
                }
            }
        }
    }
    Ok(acc)
}

/// Theorem-2 scalar product `⟨h̃_ab^{(l)}, h̃_pq^{(k)}⟩` for second-order
/// networks, dispatching on the root configuration of each block.
#[allow(clippy::too_many_arguments)]
pub fn scalar_product_second_order(
    lam_k: Complex64,
    lam_l: Complex64,
    gains: &GainSet,
    output: OutputKind,
    p: usize,
    q: usize,
    a: usize,
    b: usize,
) -> Result<Complex64> {
    assert!(p >= 1 && a >= 1 && p <= q && a <= b, "block entry indices must satisfy 1 ≤ p ≤ q, 1 ≤ a ≤ b");
    let sigma = q - p + 1;
    let upsilon = b - a + 1;
    check_delta(sigma)?;
    check_delta(upsilon)?;
    let mode_k = ModeRoots::new(lam_k, gains);
    let mode_l = ModeRoots::new(lam_l, gains);
    let ck = dd_coefficients(&mode_k, gains, sigma, output);
    let cl = dd_coefficients(&mode_l, gains, upsilon, output);
    Ok(second_order_product(&mode_k, &mode_l, &ck, &cl, sigma, upsilon)?.to_c64())
}

/// Assemble the Hermitian matrix Ψ block by block:
/// `[Ψ_kl]_{qb} = Σ_{p≤q} Σ_{a≤b} ν_{d_k+p, d_l+a} ⟨h̃_ab^{(l)}, h̃_pq^{(k)}⟩`.
///
/// Blocks outside the observable set contribute nothing to the metric (their
/// ν rows vanish) and are skipped, which also keeps unstable unobservable
/// modes out of the integrals.
pub fn assemble_psi(
    s: &SpectralData,
    w: &GeometricWeights,
    query: &PerformanceQuery,
) -> Result<Array2<Complex64>> {
    query.validate()?;
    let n = s.n();
    let mut psi = Array2::<Complex64>::zeros((n - 1, n - 1));
    let obsv: Vec<usize> = w.observable().iter().copied().collect();
    if let Some(&max_block) = s.block_sizes().iter().max() {
        check_delta(max_block.max(1))?;
    }

    // per-(block, delta) coefficient cache for the second-order products
    let mut coeff_cache: HashMap<(usize, usize), Vec<DdC>> = HashMap::new();
    let mut roots: HashMap<usize, ModeRoots> = HashMap::new();
    if query.dynamics == Dynamics::SecondOrder {
        let gains = query.gains();
        for &k in &obsv {
            roots.insert(k, ModeRoots::new(s.eigenvalues()[k], gains));
        }
    }

    for &k in &obsv {
        for &l in &obsv {
            let nk = s.block_sizes()[k];
            let nl = s.block_sizes()[l];
            let dk = s.offsets()[k];
            let dl = s.offsets()[l];
            for qq in 1..=nk {
                for bb in 1..=nl {
                    let mut acc = DdC::ZERO;
                    for p in 1..=qq {
                        for a in 1..=bb {
                            let nu = w.nu_entry(dk + p, dl + a);
                            if nu.norm() == 0.0 {
                                continue;
                            }
                            let sp = match query.dynamics {
                                Dynamics::FirstOrder => DdC::from_c64(
                                    scalar_product_first_order(
                                        s.eigenvalues()[k],
                                        s.eigenvalues()[l],
                                        p,
                                        qq,
                                        a,
                                        bb,
                                    )?,
                                ),
                                Dynamics::SecondOrder => {
                                    let gains = query.gains();
                                    let sigma = qq - p + 1;
                                    let upsilon = bb - a + 1;
                                    let mk = roots[&k];
                                    let ml = roots[&l];
                                    coeff_cache.entry((k, sigma)).or_insert_with(|| {
                                        dd_coefficients(&mk, gains, sigma, query.output)
                                    });
                                    coeff_cache.entry((l, upsilon)).or_insert_with(|| {
                                        dd_coefficients(&ml, gains, upsilon, query.output)
                                    });
                                    second_order_product(
                                        &mk,
                                        &ml,
                                        &coeff_cache[&(k, sigma)],
                                        &coeff_cache[&(l, upsilon)],
                                        sigma,
                                        upsilon,
                                    )?
                                }
                            };
                            acc = acc + sp * DdC::from_c64(nu);
                        }
                    }
                    // Ψ rows/cols are offset by one for the deleted consensus state
                    psi[[dk + qq - 2, dl + bb - 2]] = acc.to_c64();
                }
            }
        }
    }
    Ok(psi)
}

/// Evaluate the performance metric `P = Re tr(Σ_Q Ψ)` for a query, checking
/// the gain/output assumptions and input-output stability first.
pub fn performance(
    l: &Laplacian,
    s: &SpectralData,
    query: &PerformanceQuery,
) -> Result<PerformanceResult> {
    query.validate()?;
    if l.n() != s.n() {
        return Err(Error::ShapeMismatch(format!(
            "L has {} nodes but the decomposition has {}",
            l.n(),
            s.n()
        )));
    }
    if query.dynamics == Dynamics::SecondOrder {
        check_assumptions(query.gains(), &query.c)?;
    } else if !query.c.annihilates_consensus() {
        return Err(Error::OutputAssumptionViolated(format!(
            "C·1 has max residual {:.3e}",
            query.c.ones_residual()
        )));
    }
    let w = geometric_weights(&query.c, s)?;
    let mut diagnostics = Vec::new();
    if query.dynamics == Dynamics::SecondOrder {
        let gains = query.gains();
        if !io_stable_second_order(s, gains, w.observable()) {
            let detail: Vec<String> = w
                .observable()
                .iter()
                .filter(|&&k| !ModeCoefficients::for_mode(s.eigenvalues()[k], gains).is_stable())
                .map(|&k| format!("block {k} (λ = {})", s.eigenvalues()[k]))
                .collect();
            return Err(Error::Unstable(format!(
                "observable modes fail the Routh-Hurwitz conditions: {}",
                detail.join(", ")
            )));
        }
        for &k in w.observable() {
            let (_, _, repeated) = char_roots(s.eigenvalues()[k], gains);
            if repeated {
                diagnostics.push(format!(
                    "block {k}: discriminant within the repeated-root threshold; \
                     repeated-root formulas used"
                ));
            }
            if s.block_sizes()[k] > DELTA_FULL_ACCURACY {
                diagnostics.push(format!(
                    "block {k} has size {}; scalar products lose accuracy beyond \
                     size {DELTA_FULL_ACCURACY}",
                    s.block_sizes()[k]
                ));
            }
        }
    }
    let sq = sigma_q(s, &query.input)?;
    let psi = assemble_psi(s, &w, query)?;
    let prod = sq.dot(&psi);
    let mut trace = Complex64::new(0.0, 0.0);
    let mut psi_diag = Vec::with_capacity(s.n() - 1);
    for i in 0..s.n() - 1 {
        trace += prod[[i, i]];
        psi_diag.push(prod[[i, i]].re);
    }
    let mut value = trace.re;
    let imag_residual = trace.im.abs();
    if value < 0.0 {
        if value < -1e-12 {
            return Err(Error::Numerical(format!(
                "performance value {value} is negative beyond tolerance"
            )));
        }
        diagnostics.push(format!("value {value:.3e} clipped to 0"));
        value = 0.0;
    }
    let diagonalizable = s.block_sizes().iter().all(|&b| b == 1);
    let path = match (query.dynamics, diagonalizable) {
        (Dynamics::FirstOrder, true) => FormulaPath::FirstOrderDiagonalizable,
        (Dynamics::FirstOrder, false) => FormulaPath::FirstOrderJordan,
        (Dynamics::SecondOrder, true) => FormulaPath::SecondOrderDiagonalizable,
        (Dynamics::SecondOrder, false) => FormulaPath::SecondOrderJordan,
    };
    Ok(PerformanceResult {
        value,
        psi_diag,
        imag_residual,
        path,
        diagnostics,
    })
}

/// Theorem-3 kernel for diagonalizable first-order networks, written as the
/// explicit real/imaginary split; equals `1/(λ̄_k + λ_l)`.
pub fn psi_diag_diagonalizable_first(lam_k: Complex64, lam_l: Complex64) -> Result<Complex64> {
    let re_sum = lam_k.re + lam_l.re;
    let im_diff = lam_k.im - lam_l.im;
    if re_sum <= 0.0 {
        return Err(Error::DivergentIntegral(format!(
            "Re λ_k + Re λ_l = {re_sum} is not positive"
        )));
    }
    let den = re_sum * re_sum + im_diff * im_diff;
    Ok(Complex64::new(re_sum / den, im_diff / den))
}

/// Theorem-4 diagonal kernel for second-order networks (the ν-free factor of
/// `Ψ_kk`).
pub fn psi_kk_second_order(
    lambda: Complex64,
    gains: &GainSet,
    output: OutputKind,
) -> Result<f64> {
    let m = ModeCoefficients::for_mode(lambda, gains);
    if !m.is_stable() {
        return Err(Error::Unstable(format!(
            "mode λ = {lambda} fails the Routh-Hurwitz conditions"
        )));
    }
    let den = 2.0 * m.hurwitz_margin();
    Ok(match output {
        OutputKind::Position => m.phi / den,
        OutputKind::Velocity => (m.xi * m.beta + m.phi * m.alpha) / den,
    })
}

/// Cross-term kernel `Ψ_kl/ν_kl` for diagonalizable Laplacians with real
/// eigenvalues (both modes real and stable).
pub fn psi_cross_real_eigen(
    lam_k: f64,
    lam_l: f64,
    gains: &GainSet,
    output: OutputKind,
) -> Result<f64> {
    let GainSet { k_p, k_d, gamma_p, gamma_d } = *gains;
    for lam in [lam_k, lam_l] {
        let m = ModeCoefficients::for_mode(Complex64::new(lam, 0.0), gains);
        if !m.is_stable() {
            return Err(Error::Unstable(format!(
                "real mode λ = {lam} fails the Routh-Hurwitz conditions"
            )));
        }
    }
    let pk = k_p + gamma_p * lam_k;
    let pl = k_p + gamma_p * lam_l;
    let dk = k_d + gamma_d * lam_k;
    let dl = k_d + gamma_d * lam_l;
    let denom = dk * dl * (2.0 * k_p + gamma_p * (lam_k + lam_l))
        + gamma_p * gamma_p * (lam_k - lam_l) * (lam_k - lam_l)
        + pk * dl * dl
        + pl * dk * dk;
    let num = match output {
        OutputKind::Position => 2.0 * k_d + gamma_d * (lam_k + lam_l),
        OutputKind::Velocity => pl * dk + pk * dl,
    };
    Ok(num / denom)
}

/// Normal-Laplacian fast path: `Σ_{k∈N_obsv} ν_kk · ψ(λ_k)` for identity
/// input covariance. Agrees with [`performance`] on the same query.
pub fn h2_normal(
    l: &Laplacian,
    s: &SpectralData,
    w: &GeometricWeights,
    query: &PerformanceQuery,
) -> Result<f64> {
    query.validate()?;
    if !l.is_normal(1e-10) {
        return Err(Error::NotNormal("commutator test failed".into()));
    }
    if !matches!(query.input, InputSpec::IdentityCovariance) {
        return Err(Error::InvalidQuery(
            "the normal-Laplacian fast path is an H2 formula; it needs identity input covariance"
                .into(),
        ));
    }
    // the derivation needs orthonormal eigenvectors
    let rt = s.r_tilde().to_owned();
    let gram = crate::spectral::conj_transpose(&rt).dot(&rt);
    let mut dev: f64 = 0.0;
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            let expect = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((gram[[i, j]] - Complex64::new(expect, 0.0)).norm());
        }
    }
    if dev > 1e-7 {
        return Err(Error::NotNormal(format!(
            "eigenvector columns deviate from orthonormality by {dev:.3e}; \
             decompose this Laplacian with an analytic hint"
        )));
    }
    let mut total = 0.0;
    for &k in w.observable() {
        let nu_kk = w.nu_entry(s.offsets()[k] + 1, s.offsets()[k] + 1).re;
        let kernel = match query.dynamics {
            Dynamics::FirstOrder => {
                let re = s.eigenvalues()[k].re;
                if re <= 0.0 {
                    return Err(Error::DivergentIntegral(format!(
                        "Re λ_{k} = {re} is not positive"
                    )));
                }
                1.0 / (2.0 * re)
            }
            Dynamics::SecondOrder => {
                psi_kk_second_order(s.eigenvalues()[k], query.gains(), query.output)?
            }
        };
        total += nu_kk * kernel;
    }
    Ok(total)
}

/// Closed-form all-to-one performance for circulant output matrices.
///
/// `mu` holds the eigenvalues of `M = CᵀC` paired with the Fourier vectors
/// (`mu[0]` belongs to the constant vector and must be 0). With `mu ≡ 1`
/// this reproduces the deviation-from-average closed forms
/// `(n−1)²/(2n)`, `(n−1)/(2(k_p+γ_p n/(n−1))(k_d+γ_d n/(n−1)))` and
/// `(n−1)/(2(k_d+γ_d n/(n−1)))`.
pub fn star_performance(
    n: usize,
    dynamics: Dynamics,
    output: OutputKind,
    gains: Option<&GainSet>,
    mu: &[f64],
) -> Result<f64> {
    if n < 2 {
        return Err(Error::BadSize(format!("star needs n >= 2, got {n}")));
    }
    if mu.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "mu has length {}, expected {n}",
            mu.len()
        )));
    }
    if dynamics == Dynamics::FirstOrder && output == OutputKind::Velocity {
        return Err(Error::InvalidQuery(
            "velocity output requires second-order dynamics".into(),
        ));
    }
    let nf = n as f64;
    match dynamics {
        Dynamics::FirstOrder => {
            // (n−1)/n² Σ_i μ_i (n−1 + Σ_{l>k} cos(2π(i−1)(l−k)/n))
            let mut total = 0.0;
            for i in 2..=n {
                let mut pairs = 0.0;
                for gap in 1..=n.saturating_sub(2) {
                    pairs += (n - 1 - gap) as f64 * (2.0 * PI * (i - 1) as f64 * gap as f64 / nf).cos();
                }
                total += mu[i - 1] * ((nf - 1.0) + pairs);
            }
            Ok((nf - 1.0) / (nf * nf) * total)
        }
        Dynamics::SecondOrder => {
            let gains = gains.ok_or_else(|| {
                Error::InvalidQuery("second-order dynamics requires a gain set".into())
            })?;
            if !gains.has_both_feedbacks() {
                return Err(Error::GainAssumptionViolated(
                    "need feedback in both state variables".into(),
                ));
            }
            let lam = nf / (nf - 1.0);
            let pos_gain = gains.k_p + gains.gamma_p * lam;
            let vel_gain = gains.k_d + gains.gamma_d * lam;
            if pos_gain <= 0.0 || vel_gain <= 0.0 {
                return Err(Error::Unstable(format!(
                    "closed-loop factors must be positive, got {pos_gain} and {vel_gain}"
                )));
            }
            // P_0 = (1/n) Σ_i μ_i ((n−1) + Σ_{k,l} e^{j2π(i−1)(l−k)/n});
            // the double sum collapses to |Σ_k e^{j2π(i−1)k/n}|², so the
            // symmetrized complex sum is exactly real.
            let mut p0 = Complex64::new(0.0, 0.0);
            for i in 2..=n {
                let mut d = Complex64::new(0.0, 0.0);
                for k in 2..=n {
                    d += Complex64::from_polar(1.0, 2.0 * PI * (i - 1) as f64 * k as f64 / nf);
                }
                p0 += mu[i - 1] * (Complex64::new(nf - 1.0, 0.0) + d * d.conj());
            }
            let p0 = p0 / nf;
            if p0.im.abs() > 1e-9 * (1.0 + p0.re.abs()) {
                return Err(Error::Numerical(format!(
                    "imaginary residual {:.3e} in the star sum",
                    p0.im
                )));
            }
            let p0 = p0.re;
            Ok(match output {
                OutputKind::Position => p0 / (2.0 * pos_gain * vel_gain),
                OutputKind::Velocity => p0 / (2.0 * vel_gain),
            })
        }
    }
}
