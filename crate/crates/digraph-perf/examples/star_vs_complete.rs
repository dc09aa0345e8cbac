//! The all-to-one star and the all-to-all complete graph perform identically
//! for the deviation-from-average metric, at equal total out-degree.

use digraph_perf::analysis::{star_vs_complete, star_vs_complete_csv};
use digraph_perf::closed_form::{Dynamics, OutputKind};
use digraph_perf::stability::GainSet;

fn main() -> digraph_perf::Result<()> {
    let gains = GainSet::new(1.0, 1.0, 1.0, 1.0)?;
    let rows = star_vs_complete(2..=12, Some(&gains), Dynamics::SecondOrder, OutputKind::Position)?;
    println!("{:>4} {:>16} {:>16} {:>12}", "n", "P_star", "P_complete", "|diff|");
    for r in &rows {
        println!(
            "{:4} {:16.12} {:16.12} {:12.3e}",
            r.n, r.p_star, r.p_complete, r.abs_diff
        );
    }

    println!("\nCSV head (CLI format):");
    for line in star_vs_complete_csv(&rows).lines().take(3) {
        println!("  {line}");
    }
    Ok(())
}
