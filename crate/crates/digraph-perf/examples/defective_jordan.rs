//! Working with a defective Laplacian: the directed path carries one Jordan
//! block of size n−1, which the numeric eigensolver rightly refuses. Family
//! hints or explicit Jordan data unlock it.

use digraph_perf::closed_form::{performance, Dynamics, OutputKind, PerformanceQuery};
use digraph_perf::graph::{deviation_from_average_output, directed_path_laplacian, FamilyHint};
use digraph_perf::spectral::{decompose, import_jordan, InputSpec};
use digraph_perf::stability::GainSet;

fn main() -> digraph_perf::Result<()> {
    let n = 8;
    let l = directed_path_laplacian(n)?;

    match decompose(&l, None) {
        Err(e) => println!("numeric path refused as expected:\n  {e}"),
        Ok(_) => println!("unexpected numeric success"),
    }

    let s = decompose(&l, Some(FamilyHint::Path { n }))?;
    println!(
        "\nanalytic decomposition: eigenvalues {:?}, block sizes {:?}",
        s.eigenvalues(),
        s.block_sizes()
    );

    // round-trip the analytic data through the import/validation path
    let imported = import_jordan(
        &l,
        s.eigenvalues().to_vec(),
        s.block_sizes().to_vec(),
        s.r().clone(),
    )?;
    println!("import_jordan accepted the chain (alpha = {})", imported.alpha());

    let query = PerformanceQuery {
        dynamics: Dynamics::SecondOrder,
        output: OutputKind::Position,
        c: deviation_from_average_output(n)?,
        gains: Some(GainSet::new(1.0, 1.0, 1.0, 1.0)?),
        input: InputSpec::IdentityCovariance,
    };
    let result = performance(&l, &imported, &query)?;
    println!("\nsecond-order P_dav over the path = {:.12}", result.value);
    println!("formula path: {:?}", result.path);
    Ok(())
}
