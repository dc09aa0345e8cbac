//! Compare directed cycles against their undirected counterparts across the
//! feedback regimes: equal for single integrators, degraded or improved for
//! double integrators depending on the relative gains.

use digraph_perf::analysis::compare_directed_undirected;
use digraph_perf::closed_form::{Dynamics, OutputKind, PerformanceQuery};
use digraph_perf::graph::{cyclic_laplacian, deviation_from_average_output};
use digraph_perf::spectral::InputSpec;
use digraph_perf::stability::GainSet;

fn main() -> digraph_perf::Result<()> {
    let n = 30;
    let l = cyclic_laplacian(n, 1.0, 1)?;
    let c = deviation_from_average_output(n)?;

    let cases: [(Dynamics, OutputKind, Option<GainSet>, &str); 5] = [
        (Dynamics::FirstOrder, OutputKind::Position, None, "first order"),
        (
            Dynamics::SecondOrder,
            OutputKind::Position,
            Some(GainSet::new(3.0, 5.0, 1.0, 0.0)?),
            "position, relative position only",
        ),
        (
            Dynamics::SecondOrder,
            OutputKind::Position,
            Some(GainSet::new(1.0, 2.0, 1.0, 6.5)?),
            "position, small gamma_p with gamma_d",
        ),
        (
            Dynamics::SecondOrder,
            OutputKind::Velocity,
            Some(GainSet::new(1.0, 2.0, 1.0, 7.0)?),
            "velocity, gamma_p present",
        ),
        (
            Dynamics::SecondOrder,
            OutputKind::Velocity,
            Some(GainSet::new(1.0, 2.0, 0.0, 7.0)?),
            "velocity, gamma_p absent",
        ),
    ];

    println!("{:38} {:>12} {:>12}  relation (prediction)", "case", "directed", "undirected");
    for (dynamics, output, gains, label) in cases {
        let query = PerformanceQuery {
            dynamics,
            output,
            c: c.clone(),
            gains,
            input: InputSpec::IdentityCovariance,
        };
        let r = compare_directed_undirected(&l, &query)?;
        println!(
            "{label:38} {:12.6} {:12.6}  {:?} ({:?}){}",
            r.p_directed,
            r.p_undirected,
            r.relation,
            r.theorem_prediction,
            if r.consistent { "" } else { "  INCONSISTENT" },
        );
    }
    Ok(())
}
