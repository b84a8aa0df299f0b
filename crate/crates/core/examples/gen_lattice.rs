//! Generate the three lattice kinds on a box and print their admissibility
//! constants. Pass a path to also write the parking lattice as JSON.

use stochat::lattice::*;

fn main() -> stochat::Result<()> {
    let dom = BoxDomain::cube(2, 30.0)?;
    let sets = [
        generate_random_parking(&dom, 1.0, 42)?,
        generate_periodic(&dom, 1.0)?,
        generate_jittered(&dom, 1.0, 0.3, 42)?,
    ];
    for ps in &sets {
        let rep = check_admissibility(ps)?;
        println!(
            "{:<14} n={:<5} density={:.3}  min pair {:.4} (r={})  cover {:.4} (R={:.4})",
            ps.kind.as_str(),
            ps.len(),
            ps.len() as f64 / dom.volume(),
            rep.min_pair_dist,
            ps.r,
            rep.max_cover_dist,
            ps.big_r
        );
    }
    if let Some(path) = std::env::args().nth(1) {
        std::fs::write(&path, sets[0].to_json())?;
        println!("wrote {path}");
    }
    Ok(())
}
