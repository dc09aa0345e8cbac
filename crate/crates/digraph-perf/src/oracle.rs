//! Independent ground truth: assemble the full closed-loop state space,
//! deflate the consensus mode in Jordan coordinates, and compute metrics by
//! Gramian solves and by direct time-domain integration.

use ndarray::prelude::*;
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;

use crate::closed_form::{Dynamics, OutputKind};
use crate::error::{Error, Result};
use crate::graph::{Laplacian, OutputMatrix};
use crate::spectral::{conj_transpose, SpectralData};
use crate::stability::GainSet;

/// Relative tail threshold that stops the impulse-response integration.
pub const SIM_TAIL_TOL: f64 = 1e-6;
/// Hard step cap of the time-domain oracle.
pub const SIM_MAX_STEPS: usize = 10_000_000;

/// Full closed-loop realization `(A, B, Cout)` together with the query that
/// produced it, so deflation can rebuild the block structure exactly.
#[derive(Debug, Clone)]
pub struct StateSpace {
    a: Array2<f64>,
    b: Array2<f64>,
    c_out: Array2<f64>,
    dynamics: Dynamics,
    output: OutputKind,
    gains: Option<GainSet>,
    c: OutputMatrix,
}

impl StateSpace {
    pub fn a(&self) -> &Array2<f64> {
        &self.a
    }

    pub fn b(&self) -> &Array2<f64> {
        &self.b
    }

    pub fn c_out(&self) -> &Array2<f64> {
        &self.c_out
    }

    /// Transfer function `Cout (sI − A)⁻¹ B` at one complex frequency.
    pub fn transfer_at(&self, s: Complex64) -> Result<Array2<Complex64>> {
        let n = self.a.nrows();
        let mut m = self.a.mapv(|v| Complex64::new(-v, 0.0));
        for i in 0..n {
            m[[i, i]] += s;
        }
        let rhs = self.b.mapv(|v| Complex64::new(v, 0.0));
        let x = solve_complex(&m, &rhs)?;
        Ok(self.c_out.mapv(|v| Complex64::new(v, 0.0)).dot(&x))
    }
}

/// Build the closed-loop realization for a query.
///
/// First order: `A = −L`, `B = I`, `Cout = C`. Second order:
/// `A = [[0, I], [−k_p I − γ_p L, −k_d I − γ_d L]]`, `B = [0; I]`,
/// `Cout = [C, 0]` (position) or `[0, C]` (velocity).
pub fn assemble(
    l: &Laplacian,
    gains: Option<&GainSet>,
    dynamics: Dynamics,
    output: OutputKind,
    c: &OutputMatrix,
) -> Result<StateSpace> {
    let n = l.n();
    if c.n() != n {
        return Err(Error::ShapeMismatch(format!(
            "C has {} columns but L has {n} nodes",
            c.n()
        )));
    }
    if dynamics == Dynamics::FirstOrder && output == OutputKind::Velocity {
        return Err(Error::InvalidQuery(
            "velocity output requires second-order dynamics".into(),
        ));
    }
    let q = c.matrix().nrows();
    match dynamics {
        Dynamics::FirstOrder => Ok(StateSpace {
            a: l.matrix().mapv(|v| -v),
            b: Array2::eye(n),
            c_out: c.matrix().clone(),
            dynamics,
            output,
            gains: None,
            c: c.clone(),
        }),
        Dynamics::SecondOrder => {
            let g = gains.ok_or_else(|| {
                Error::InvalidQuery("second-order dynamics requires a gain set".into())
            })?;
            let mut a = Array2::<f64>::zeros((2 * n, 2 * n));
            for i in 0..n {
                a[[i, n + i]] = 1.0;
            }
            for i in 0..n {
                for j in 0..n {
                    let lv = l.matrix()[[i, j]];
                    a[[n + i, j]] = -g.gamma_p * lv;
                    a[[n + i, n + j]] = -g.gamma_d * lv;
                }
                a[[n + i, i]] -= g.k_p;
                a[[n + i, n + i]] -= g.k_d;
            }
            let mut b = Array2::<f64>::zeros((2 * n, n));
            for i in 0..n {
                b[[n + i, i]] = 1.0;
            }
            let mut c_out = Array2::<f64>::zeros((q, 2 * n));
            let col_off = match output {
                OutputKind::Position => 0,
                OutputKind::Velocity => n,
            };
            for i in 0..q {
                for j in 0..n {
                    c_out[[i, col_off + j]] = c.matrix()[[i, j]];
                }
            }
            Ok(StateSpace {
                a,
                b,
                c_out,
                dynamics,
                output,
                gains: Some(*g),
                c: c.clone(),
            })
        }
    }
}

/// The consensus-deflated system in Jordan coordinates. For second-order
/// dynamics the states are interleaved per mode, `(x̃_i, ṽ_i)`, which makes
/// the matrix block upper bidiagonal with 2×2 diagonal blocks.
#[derive(Debug, Clone)]
pub struct DeflatedSystem {
    a: Array2<Complex64>,
    b: Array2<Complex64>,
    c: Array2<Complex64>,
    block_dim: usize,
}

impl DeflatedSystem {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &Array2<Complex64> {
        &self.a
    }

    pub fn b(&self) -> &Array2<Complex64> {
        &self.b
    }

    pub fn c(&self) -> &Array2<Complex64> {
        &self.c
    }

    /// Transfer function `C̃ (sI − Ã)⁻¹ B̃` at one complex frequency.
    pub fn transfer_at(&self, s: Complex64) -> Result<Array2<Complex64>> {
        let n = self.a.nrows();
        let mut m = self.a.mapv(|z| -z);
        for i in 0..n {
            m[[i, i]] += s;
        }
        let x = solve_complex(&m, &self.b)?;
        Ok(self.c.dot(&x))
    }
}

/// Change basis by `R` per block and delete the rows/columns of the
/// consensus block. The transfer function is preserved; `C·1 = 0` makes the
/// dropped mode unobservable.
pub fn deflate(ss: &StateSpace, s: &SpectralData) -> Result<DeflatedSystem> {
    if !ss.c.annihilates_consensus() {
        return Err(Error::AssumptionViolated(format!(
            "C·1 has max residual {:.3e}; deflation requires Assumption 2",
            ss.c.ones_residual()
        )));
    }
    let n = s.n();
    if ss.c.n() != n {
        return Err(Error::ShapeMismatch(format!(
            "C has {} columns but the decomposition has {n} states",
            ss.c.n()
        )));
    }
    let m = n - 1;
    let jt = s.jordan_matrix_deflated();
    let qt = s.q_tilde().to_owned();
    let cc = ss.c.matrix().mapv(|v| Complex64::new(v, 0.0));
    let crt = cc.dot(&s.r_tilde());
    let q_rows = crt.nrows();
    match ss.dynamics {
        Dynamics::FirstOrder => Ok(DeflatedSystem {
            a: jt.mapv(|z| -z),
            b: qt,
            c: crt,
            block_dim: 1,
        }),
        Dynamics::SecondOrder => {
            let g = ss.gains.expect("second-order state space carries gains");
            let mut a = Array2::<Complex64>::zeros((2 * m, 2 * m));
            for i in 0..m {
                a[[2 * i, 2 * i + 1]] = Complex64::new(1.0, 0.0);
                a[[2 * i + 1, 2 * i]] = -Complex64::new(g.k_p, 0.0) - g.gamma_p * jt[[i, i]];
                a[[2 * i + 1, 2 * i + 1]] = -Complex64::new(g.k_d, 0.0) - g.gamma_d * jt[[i, i]];
                if i + 1 < m && jt[[i, i + 1]].norm() > 0.0 {
                    // superdiagonal of the Jordan chain couples mode i to i+1
                    a[[2 * i + 1, 2 * (i + 1)]] = -Complex64::new(g.gamma_p, 0.0) * jt[[i, i + 1]];
                    a[[2 * i + 1, 2 * (i + 1) + 1]] =
                        -Complex64::new(g.gamma_d, 0.0) * jt[[i, i + 1]];
                }
            }
            let mut b = Array2::<Complex64>::zeros((2 * m, n));
            for i in 0..m {
                for j in 0..n {
                    b[[2 * i + 1, j]] = qt[[i, j]];
                }
            }
            let mut c = Array2::<Complex64>::zeros((q_rows, 2 * m));
            let off = match ss.output {
                OutputKind::Position => 0,
                OutputKind::Velocity => 1,
            };
            for i in 0..q_rows {
                for j in 0..m {
                    c[[i, 2 * j + off]] = crt[[i, j]];
                }
            }
            Ok(DeflatedSystem { a, b, c, block_dim: 2 })
        }
    }
}

/// Squared H2 norm `tr(B̃* X B̃)` with `X` the observability Gramian from
/// `Ã* X + X Ã = −C̃* C̃`, solved after a per-block Schur triangularization.
pub fn h2_norm(d: &DeflatedSystem) -> Result<f64> {
    let x = observability_gramian(d)?;
    let bh = conj_transpose(&d.b);
    let val = bh.dot(&x).dot(&d.b);
    let mut trace = Complex64::new(0.0, 0.0);
    for i in 0..val.nrows() {
        trace += val[[i, i]];
    }
    Ok(trace.re)
}

/// Squared L2 norm of the response to the deterministic impulse `w0`:
/// `(B̃ w0)* X (B̃ w0)`.
pub fn l2_response(d: &DeflatedSystem, w0: &Array1<f64>) -> Result<f64> {
    if w0.len() != d.b.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "w0 has length {}, expected {}",
            w0.len(),
            d.b.ncols()
        )));
    }
    let x = observability_gramian(d)?;
    let w0c = w0.mapv(|v| Complex64::new(v, 0.0));
    let bw = d.b.dot(&w0c);
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..bw.len() {
        for j in 0..bw.len() {
            acc += bw[i].conj() * x[[i, j]] * bw[j];
        }
    }
    Ok(acc.re)
}

fn observability_gramian(d: &DeflatedSystem) -> Result<Array2<Complex64>> {
    let m = d.a.nrows();
    // triangularize: per-block closed-form Schur of the diagonal blocks
    let (tri, u) = match d.block_dim {
        1 => (d.a.clone(), Array2::<Complex64>::eye(m)),
        2 => {
            let mut u = Array2::<Complex64>::zeros((m, m));
            let nb = m / 2;
            let mut blocks = Vec::with_capacity(nb);
            for i in 0..nb {
                let mb = [
                    [d.a[[2 * i, 2 * i]], d.a[[2 * i, 2 * i + 1]]],
                    [d.a[[2 * i + 1, 2 * i]], d.a[[2 * i + 1, 2 * i + 1]]],
                ];
                let (ub, tb) = schur_2x2(mb);
                for r in 0..2 {
                    for c in 0..2 {
                        u[[2 * i + r, 2 * i + c]] = ub[r][c];
                    }
                }
                blocks.push(tb);
            }
            let uh = conj_transpose(&u);
            let mut tri = uh.dot(&d.a).dot(&u);
            // the diagonal blocks are triangular by construction; pin the
            // subdiagonal zeros so back-substitution sees exact structure
            for i in 0..nb {
                tri[[2 * i + 1, 2 * i]] = Complex64::new(0.0, 0.0);
                for r in 0..2 {
                    for c in r..2 {
                        tri[[2 * i + r, 2 * i + c]] = blocks[i][r][c];
                    }
                }
            }
            (tri, u)
        }
        other => {
            return Err(Error::ShapeMismatch(format!(
                "unsupported deflated block dimension {other}"
            )))
        }
    };
    for i in 0..m {
        if tri[[i, i]].re >= 0.0 {
            return Err(Error::Unstable(format!(
                "deflated eigenvalue {} is not in the open left half-plane",
                tri[[i, i]]
            )));
        }
    }
    let c_tri = d.c.dot(&u);
    let q = conj_transpose(&c_tri).dot(&c_tri);
    let x_tri = triangular_lyapunov(&tri, &q)?;
    let x = u.dot(&x_tri).dot(&conj_transpose(&u));
    // enforce and assert Hermitian PSD
    let xh = conj_transpose(&x);
    let x = (&x + &xh) * Complex64::new(0.5, 0.0);
    let scale = x.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let (eigs, _) = x
        .eigh(UPLO::Lower)
        .map_err(|e| Error::LyapunovIllConditioned(format!("gramian eigh failed: {e}")))?;
    if let Some(&wmin) = eigs.iter().find(|&&w| w < -1e-8 * scale) {
        return Err(Error::LyapunovIllConditioned(format!(
            "gramian has negative eigenvalue {wmin:.3e}"
        )));
    }
    Ok(x)
}

/// Closed-form Schur decomposition of a 2×2 complex matrix: `M = U T U*`
/// with `U` unitary and `T` upper triangular.
fn schur_2x2(m: [[Complex64; 2]; 2]) -> ([[Complex64; 2]; 2], [[Complex64; 2]; 2]) {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = (tr * tr - 4.0 * det).sqrt();
    // root with the better-conditioned eigenvector
    let mu1 = (tr + disc) / 2.0;
    let mu2 = (tr - disc) / 2.0;
    let pick = |mu: Complex64| -> (Complex64, Complex64) {
        // (M − μI) v = 0: v from the larger row of the singular matrix
        let r1 = (m[0][0] - mu, m[0][1]);
        let r2 = (m[1][0], m[1][1] - mu);
        let n1 = r1.0.norm_sqr() + r1.1.norm_sqr();
        let n2 = r2.0.norm_sqr() + r2.1.norm_sqr();
        if n1 >= n2 {
            (-r1.1, r1.0)
        } else {
            (-r2.1, r2.0)
        }
    };
    let (mut v1, mut v2) = pick(mu1);
    let mut mu = mu1;
    let nrm = (v1.norm_sqr() + v2.norm_sqr()).sqrt();
    if nrm < 1e-300 {
        // μ1's eigenvector was degenerate; fall back to μ2
        let (w1, w2) = pick(mu2);
        v1 = w1;
        v2 = w2;
        mu = mu2;
        let nrm2 = (v1.norm_sqr() + v2.norm_sqr()).sqrt();
        if nrm2 < 1e-300 {
            // M is a multiple of the identity
            let eye = [[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
                       [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]];
            return (eye, m);
        }
        v1 /= nrm2;
        v2 /= nrm2;
    } else {
        v1 /= nrm;
        v2 /= nrm;
    }
    // unitary with first column v, second column its orthogonal complement
    let u = [[v1, -v2.conj()], [v2, v1.conj()]];
    // T = U* M U; enforce exact triangularity
    let t01 = u[0][0].conj() * (m[0][0] * u[0][1] + m[0][1] * u[1][1])
        + u[1][0].conj() * (m[1][0] * u[0][1] + m[1][1] * u[1][1]);
    let t11 = u[0][1].conj() * (m[0][0] * u[0][1] + m[0][1] * u[1][1])
        + u[1][1].conj() * (m[1][0] * u[0][1] + m[1][1] * u[1][1]);
    let t = [[mu, t01], [Complex64::new(0.0, 0.0), t11]];
    (u, t)
}

/// Solve `S* X + X S = −Q` for upper triangular `S` by forward
/// back-substitution over the (i, j) grid.
fn triangular_lyapunov(s: &Array2<Complex64>, q: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    let n = s.nrows();
    let scale = s.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let mut x = Array2::<Complex64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            // (S* X)_{ij} = Σ_{k≤i} conj(S_{ki}) X_{kj}
            // (X S)_{ij} = Σ_{k≤j} X_{ik} S_{kj}
            let mut rhs = -q[[i, j]];
            for k in 0..i {
                rhs -= s[[k, i]].conj() * x[[k, j]];
            }
            for k in 0..j {
                rhs -= x[[i, k]] * s[[k, j]];
            }
            let den = s[[i, i]].conj() + s[[j, j]];
            if den.norm() <= 1e-14 * scale {
                return Err(Error::LyapunovIllConditioned(format!(
                    "pivot λ̄_{i} + λ_{j} = {den} is numerically zero"
                )));
            }
            x[[i, j]] = rhs / den;
        }
    }
    Ok(x)
}

/// Dense complex linear solve (partial-pivot LU), used for resolvent
/// evaluations.
fn solve_complex(a: &Array2<Complex64>, rhs: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    let n = a.nrows();
    let mut lu = a.clone();
    let mut x = rhs.clone();
    let cols = rhs.ncols();
    for k in 0..n {
        let mut piv = k;
        for i in k + 1..n {
            if lu[[i, k]].norm() > lu[[piv, k]].norm() {
                piv = i;
            }
        }
        if lu[[piv, k]].norm() == 0.0 {
            return Err(Error::Numerical("singular resolvent matrix".into()));
        }
        if piv != k {
            for j in 0..n {
                let tmp = lu[[k, j]];
                lu[[k, j]] = lu[[piv, j]];
                lu[[piv, j]] = tmp;
            }
            for j in 0..cols {
                let tmp = x[[k, j]];
                x[[k, j]] = x[[piv, j]];
                x[[piv, j]] = tmp;
            }
        }
        for i in k + 1..n {
            let f = lu[[i, k]] / lu[[k, k]];
            lu[[i, k]] = f;
            for j in k + 1..n {
                let sub = f * lu[[k, j]];
                lu[[i, j]] -= sub;
            }
            for j in 0..cols {
                let sub = f * x[[k, j]];
                x[[i, j]] -= sub;
            }
        }
    }
    for j in 0..cols {
        for i in (0..n).rev() {
            let mut acc = x[[i, j]];
            for k in i + 1..n {
                acc -= lu[[i, k]] * x[[k, j]];
            }
            x[[i, j]] = acc / lu[[i, i]];
        }
    }
    Ok(x)
}

/// Explicit RK4 integration of `ẋ = Ax` from `x(0) = B w0`, accumulating
/// `∫ ‖Cout x‖² dt` by the composite trapezoid rule. The horizon extends
/// until the last window contributes less than [`SIM_TAIL_TOL`] of the
/// accumulated value.
pub fn simulate_impulse(ss: &StateSpace, w0: &Array1<f64>, dt: f64, horizon: f64) -> Result<f64> {
    if dt <= 0.0 || dt.is_nan() {
        return Err(Error::InvalidQuery(format!("dt must be positive, got {dt}")));
    }
    if horizon <= dt || horizon.is_nan() {
        return Err(Error::InvalidQuery(format!(
            "horizon {horizon} must exceed dt {dt}"
        )));
    }
    if w0.len() != ss.b.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "w0 has length {}, expected {}",
            w0.len(),
            ss.b.ncols()
        )));
    }
    let a = &ss.a;
    let mut x = ss.b.dot(w0);
    let output_sq = |x: &Array1<f64>| -> f64 {
        let y = ss.c_out.dot(x);
        y.iter().map(|v| v * v).sum()
    };
    let steps_per_window = (horizon / dt).ceil() as usize;
    let mut total = 0.0;
    let mut g_prev = output_sq(&x);
    let mut steps = 0usize;
    loop {
        let mut window = 0.0;
        for _ in 0..steps_per_window {
            let k1 = a.dot(&x);
            let k2 = a.dot(&(&x + &(&k1 * (dt / 2.0))));
            let k3 = a.dot(&(&x + &(&k2 * (dt / 2.0))));
            let k4 = a.dot(&(&x + &(&k3 * dt)));
            x = &x + &((&k1 + &(&k2 * 2.0) + &(&k3 * 2.0) + &k4) * (dt / 6.0));
            let g = output_sq(&x);
            window += 0.5 * (g_prev + g) * dt;
            g_prev = g;
            steps += 1;
            if steps >= SIM_MAX_STEPS {
                return Err(Error::HorizonExceeded(steps));
            }
        }
        total += window;
        if window <= SIM_TAIL_TOL * total || total == 0.0 {
            return Ok(total);
        }
    }
}
