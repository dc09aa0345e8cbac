//! Reproduce the connectivity experiment: deviation-from-average
//! performance of the ω-nearest-neighbor cyclic digraph as ω grows,
//! at n = 51, for single- and double-integrator dynamics.

use digraph_perf::analysis::{omega_argmin, omega_sweep, omega_sweep_csv};
use digraph_perf::closed_form::{Dynamics, OutputKind};
use digraph_perf::graph::deviation_from_average_output;
use digraph_perf::stability::GainSet;

fn main() -> digraph_perf::Result<()> {
    let n = 51;
    let c = deviation_from_average_output(n)?;
    let g1111 = GainSet::new(1.0, 1.0, 1.0, 1.0)?;
    let g1101 = GainSet::new(1.0, 1.0, 0.0, 1.0)?;

    let cases: [(Dynamics, OutputKind, Option<GainSet>, &str); 5] = [
        (Dynamics::FirstOrder, OutputKind::Position, None, "single integrator"),
        (Dynamics::SecondOrder, OutputKind::Position, Some(g1111), "position, gains 1,1,1,1"),
        (Dynamics::SecondOrder, OutputKind::Position, Some(g1101), "position, gains 1,1,0,1"),
        (Dynamics::SecondOrder, OutputKind::Velocity, Some(g1111), "velocity, gains 1,1,1,1"),
        (Dynamics::SecondOrder, OutputKind::Velocity, Some(g1101), "velocity, gains 1,1,0,1"),
    ];
    for (dynamics, output, gains, label) in cases {
        let rows = omega_sweep(n, gains.as_ref(), dynamics, output, &c)?;
        let best = omega_argmin(&rows).expect("all sweep points stable");
        let p1 = rows[0].performance.unwrap();
        let pbest = rows[best - 1].performance.unwrap();
        let plast = rows[n - 2].performance.unwrap();
        println!(
            "{label:28} P(1) = {p1:9.4}  best ω = {best:2} with P = {pbest:9.4}  P({}) = {plast:9.4}",
            n - 1
        );
    }

    // full CSV for one case, same format the CLI emits
    let rows = omega_sweep(n, None, Dynamics::FirstOrder, OutputKind::Position, &c)?;
    let csv = omega_sweep_csv(&rows);
    println!("\nfirst-order sweep CSV (head):");
    for line in csv.lines().take(5) {
        println!("  {line}");
    }
    Ok(())
}
