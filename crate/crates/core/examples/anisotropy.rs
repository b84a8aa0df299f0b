//! Direction sweep of the surface density on the square grid and on random
//! parking lattices; the table goes to stdout as CSV.

use stochat::cellprob::*;
use stochat::lattice::LatticeKind;
use stochat::table::write_sweep_csv;

fn main() -> stochat::Result<()> {
    for (kind, replicas) in [(LatticeKind::Periodic, 1), (LatticeKind::RandomParking, 4)] {
        let lattice = LatticeSpec {
            kind,
            dim: 2,
            scale: 1.0,
            jitter: 0.0,
        };
        let cfg = AnisotropyConfig::new(
            lattice,
            EdgeSpec::Voronoi,
            default_directions(8),
            vec![12.0, 16.0],
            replicas,
        );
        let table = anisotropy_sweep(&cfg)?;
        for s in &table.summary {
            eprintln!(
                "{:<14} t={:<3} max/min {:.4}  CoV {:.4}",
                kind.as_str(),
                s.t,
                s.max_min_ratio,
                s.cov
            );
        }
        write_sweep_csv(&table.rows, std::io::stdout().lock())?;
    }
    Ok(())
}
