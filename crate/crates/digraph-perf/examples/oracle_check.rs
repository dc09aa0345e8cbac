//! Cross-check the closed-form metric against the two independent oracles:
//! the observability-Gramian solve and direct RK4 integration of the
//! impulse response.

use digraph_perf::closed_form::{performance, Dynamics, OutputKind, PerformanceQuery};
use digraph_perf::graph::{
    cyclic_laplacian, deviation_from_average_output, directed_path_laplacian, FamilyHint,
};
use digraph_perf::oracle::{assemble, deflate, h2_norm, l2_response, simulate_impulse};
use digraph_perf::spectral::{decompose, InputSpec};
use digraph_perf::stability::GainSet;
use ndarray::Array1;

fn main() -> digraph_perf::Result<()> {
    let gains = GainSet::new(1.0, 1.0, 1.0, 1.0)?;

    // H2 route on a directed cycle
    let n = 12;
    let l = cyclic_laplacian(n, 1.0, 2)?;
    let s = decompose(&l, Some(FamilyHint::Cycle { n, d: 1.0, omega: 2 }))?;
    let c = deviation_from_average_output(n)?;
    let query = PerformanceQuery {
        dynamics: Dynamics::SecondOrder,
        output: OutputKind::Velocity,
        c: c.clone(),
        gains: Some(gains),
        input: InputSpec::IdentityCovariance,
    };
    let closed = performance(&l, &s, &query)?.value;
    let ss = assemble(&l, Some(&gains), Dynamics::SecondOrder, OutputKind::Velocity, &c)?;
    let gramian = h2_norm(&deflate(&ss, &s)?)?;
    println!("cycle n={n} velocity H2:");
    println!("  closed form {closed:.12}");
    println!("  gramian     {gramian:.12}  (rel {:.2e})", (closed - gramian).abs() / gramian);

    // L2 route on the defective directed path, all three computations
    let n = 6;
    let l = directed_path_laplacian(n)?;
    let s = decompose(&l, Some(FamilyHint::Path { n }))?;
    let c = deviation_from_average_output(n)?;
    let w0 = Array1::from_vec(vec![1.0, -0.5, 0.0, 0.75, -1.0, -0.25]);
    let query = PerformanceQuery {
        dynamics: Dynamics::SecondOrder,
        output: OutputKind::Position,
        c: c.clone(),
        gains: Some(gains),
        input: InputSpec::Deterministic(w0.clone()),
    };
    let closed = performance(&l, &s, &query)?.value;
    let ss = assemble(&l, Some(&gains), Dynamics::SecondOrder, OutputKind::Position, &c)?;
    let gramian = l2_response(&deflate(&ss, &s)?, &w0)?;
    let rk4 = simulate_impulse(&ss, &w0, 1e-3, 15.0)?;
    println!("defective path n={n} position L2 (deterministic impulse):");
    println!("  closed form {closed:.12}");
    println!("  gramian     {gramian:.12}  (rel {:.2e})", (closed - gramian).abs() / gramian);
    println!("  rk4         {rk4:.12}  (rel {:.2e})", (closed - rk4).abs() / rk4);
    Ok(())
}
