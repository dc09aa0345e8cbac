//! Feedback-gain assumptions and input-output stability of the closed loop.

use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::OutputMatrix;
use crate::spectral::SpectralData;

/// Discriminant threshold below which the characteristic roots are treated
/// as repeated. Shared with the closed-form module so both branch the same
/// way on the same quadratic.
pub const REPEATED_ROOT_TOL: f64 = 1e-9;

/// The four nonnegative feedback gains `(k_p, k_d, γ_p, γ_d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainSet {
    pub k_p: f64,
    pub k_d: f64,
    pub gamma_p: f64,
    pub gamma_d: f64,
}

impl GainSet {
    pub fn new(k_p: f64, k_d: f64, gamma_p: f64, gamma_d: f64) -> Result<Self> {
        for (name, v) in [("k_p", k_p), ("k_d", k_d), ("gamma_p", gamma_p), ("gamma_d", gamma_d)] {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::GainAssumptionViolated(format!(
                    "{name} must be a nonnegative real, got {v}"
                )));
            }
        }
        Ok(Self { k_p, k_d, gamma_p, gamma_d })
    }

    /// Assumption 1: feedback in both state variables.
    pub fn has_both_feedbacks(&self) -> bool {
        (self.k_p != 0.0 || self.gamma_p != 0.0) && (self.k_d != 0.0 || self.gamma_d != 0.0)
    }
}

/// Per-mode coefficients of the Routh–Hurwitz criterion:
/// `α = k_p + γ_p Re λ`, `φ = k_d + γ_d Re λ`, `β = γ_p Im λ`, `ξ = γ_d Im λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeCoefficients {
    pub alpha: f64,
    pub phi: f64,
    pub beta: f64,
    pub xi: f64,
}

impl ModeCoefficients {
    pub fn for_mode(lambda: Complex64, gains: &GainSet) -> Self {
        Self {
            alpha: gains.k_p + gains.gamma_p * lambda.re,
            phi: gains.k_d + gains.gamma_d * lambda.re,
            beta: gains.gamma_p * lambda.im,
            xi: gains.gamma_d * lambda.im,
        }
    }

    /// `α φ² + β ξ φ − β²`, positive (with `φ > 0`) iff the mode is stable.
    pub fn hurwitz_margin(&self) -> f64 {
        self.alpha * self.phi * self.phi + self.beta * self.xi * self.phi - self.beta * self.beta
    }

    /// Strict Routh–Hurwitz stability of this mode; exact boundary cases
    /// count as unstable because the performance integral diverges there.
    pub fn is_stable(&self) -> bool {
        self.hurwitz_margin() > 0.0 && self.phi > 0.0
    }
}

/// Enforce Assumption 1 (both feedbacks present) and Assumption 2
/// (`C·1 = 0`).
pub fn check_assumptions(gains: &GainSet, c: &OutputMatrix) -> Result<()> {
    if !gains.has_both_feedbacks() {
        return Err(Error::GainAssumptionViolated(format!(
            "need (k_p, γ_p) ≠ (0, 0) and (k_d, γ_d) ≠ (0, 0), got \
             ({}, {}) and ({}, {})",
            gains.k_p, gains.gamma_p, gains.k_d, gains.gamma_d
        )));
    }
    if !c.annihilates_consensus() {
        return Err(Error::OutputAssumptionViolated(format!(
            "C·1 has max residual {:.3e}",
            c.ones_residual()
        )));
    }
    Ok(())
}

/// Roots of `s² + (k_d + γ_d λ) s + (k_p + γ_p λ) = 0` by the complex
/// quadratic formula, plus the shared repeated-root classification.
pub fn char_roots(lambda: Complex64, gains: &GainSet) -> (Complex64, Complex64, bool) {
    let b = Complex64::new(gains.k_d, 0.0) + gains.gamma_d * lambda;
    let c = Complex64::new(gains.k_p, 0.0) + gains.gamma_p * lambda;
    let disc = b * b - 4.0 * c;
    let repeated = disc.norm() <= REPEATED_ROOT_TOL * (1.0 + b.norm_sqr() + c.norm_sqr());
    if repeated {
        let rho = -b / 2.0;
        return (rho, rho, true);
    }
    let sq = disc.sqrt();
    // pick the branch that avoids cancellation in -b ± sq
    let q = if (b + sq).norm() >= (b - sq).norm() {
        -(b + sq) / 2.0
    } else {
        -(b - sq) / 2.0
    };
    let r1 = q;
    let r2 = if q.norm() > 0.0 { c / q } else { (sq - b) / 2.0 };
    (r1, r2, false)
}

/// First-order networks are input-output stable iff `C·1 = 0` (given a
/// globally reachable node).
pub fn io_stable_first_order(c: &OutputMatrix) -> bool {
    c.annihilates_consensus()
}

/// Second-order networks are input-output stable iff every observable mode
/// satisfies the Routh–Hurwitz conditions.
pub fn io_stable_second_order(s: &SpectralData, gains: &GainSet, obsv: &BTreeSet<usize>) -> bool {
    obsv.iter().all(|&k| {
        ModeCoefficients::for_mode(s.eigenvalues()[k], gains).is_stable()
    })
}
