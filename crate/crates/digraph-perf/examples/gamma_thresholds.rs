//! Locate the γ_p interval where the directed 50-cycle switches from
//! beating its undirected counterpart to losing against it, and sweep the
//! curve around the crossing.

use digraph_perf::analysis::{gamma_p_thresholds, gamma_sweep, linspace};
use digraph_perf::closed_form::OutputKind;
use digraph_perf::graph::{cyclic_laplacian, deviation_from_average_output};

fn main() -> digraph_perf::Result<()> {
    let n = 50;
    let (k_p, k_d, gamma_d) = (1.0, 2.0, 6.5);
    let l = cyclic_laplacian(n, 1.0, 1)?;
    let c = deviation_from_average_output(n)?;

    let t = gamma_p_thresholds(&l, k_p, k_d, gamma_d, &c)?;
    println!("bracket: gamma_l = {:.6}, gamma_u = {:.6}", t.gamma_l, t.gamma_u);
    println!("sign changes of P - P' inside the bracket: {:?}", t.crossings);

    let l_prime = l.hermitian_part()?;
    let grid = linspace(0.5, 20.0, 14);
    let rows = gamma_sweep(&l, &l_prime, k_p, k_d, gamma_d, &grid, OutputKind::Position, &c)?;
    println!("\n{:>8} {:>14} {:>14}", "gamma_p", "directed", "undirected");
    for r in rows {
        match (r.p_directed, r.p_undirected) {
            (Some(pd), Some(pu)) => println!("{:8.3} {pd:14.6} {pu:14.6}", r.gamma_p),
            (None, Some(pu)) => println!("{:8.3} {:>14} {pu:14.6}", r.gamma_p, "unstable"),
            _ => println!("{:8.3} both unstable", r.gamma_p),
        }
    }
    Ok(())
}
