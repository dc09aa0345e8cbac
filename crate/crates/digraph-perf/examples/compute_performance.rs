//! Evaluate the performance metric for a few graphs and queries: family
//! constructors, a custom digraph, deterministic and random impulse inputs.

use digraph_perf::closed_form::{performance, Dynamics, OutputKind, PerformanceQuery};
use digraph_perf::graph::{
    build_laplacian, deviation_from_average_output, imploding_star_laplacian, FamilyHint,
    WeightedDigraph,
};
use digraph_perf::spectral::{decompose, InputSpec};
use digraph_perf::stability::GainSet;
use ndarray::arr1;

fn main() -> digraph_perf::Result<()> {
    // all-to-one network, first-order consensus, deviation-from-average
    let n = 5;
    let star = imploding_star_laplacian(n)?;
    let spectral = decompose(&star, Some(FamilyHint::Star { n }))?;
    let query = PerformanceQuery {
        dynamics: Dynamics::FirstOrder,
        output: OutputKind::Position,
        c: deviation_from_average_output(n)?,
        gains: None,
        input: InputSpec::IdentityCovariance,
    };
    let result = performance(&star, &spectral, &query)?;
    println!("star n={n}, first order, P_dav      = {:.12}", result.value);
    println!("  formula (n-1)^2/(2n)              = {:.12}", 16.0 / 10.0);

    // same network, double-integrator dynamics
    let gains = GainSet::new(1.0, 1.0, 1.0, 1.0)?;
    for output in [OutputKind::Position, OutputKind::Velocity] {
        let query = PerformanceQuery {
            dynamics: Dynamics::SecondOrder,
            output,
            c: deviation_from_average_output(n)?,
            gains: Some(gains),
            input: InputSpec::IdentityCovariance,
        };
        let result = performance(&star, &spectral, &query)?;
        println!("star n={n}, second order, {output:?} = {:.12}", result.value);
    }

    // a custom strongly connected digraph with a deterministic impulse
    let g = WeightedDigraph::new(
        4,
        vec![(0, 1, 1.0), (1, 2, 2.0), (2, 3, 1.0), (3, 0, 0.5), (1, 3, 0.25)],
    )?;
    let l = build_laplacian(&g)?;
    let s = decompose(&l, None)?;
    let query = PerformanceQuery {
        dynamics: Dynamics::SecondOrder,
        output: OutputKind::Position,
        c: deviation_from_average_output(4)?,
        gains: Some(GainSet::new(0.5, 1.0, 1.0, 0.5)?),
        input: InputSpec::Deterministic(arr1(&[1.0, -0.5, 0.25, -0.75])),
    };
    let result = performance(&l, &s, &query)?;
    println!("custom digraph, deterministic w0    = {:.12}", result.value);
    println!("  per-state contributions: {:?}", result.psi_diag);
    for note in &result.diagnostics {
        println!("  note: {note}");
    }
    Ok(())
}
