//! CSV tables of cell-problem results.
//!
//! Reals are written with 17 significant digits so that tables round-trip
//! bit-exactly and identical runs produce identical bytes.

use std::io::Write;

use crate::cellprob::{CandidateKind, EllRow, SweepRow};
use crate::error::{Error, Result};
use crate::lattice::LatticeKind;
use crate::numeric::fmt_g17;

pub const SWEEP_COLUMNS: [&str; 11] = [
    "lattice_kind",
    "seed",
    "nu_x",
    "nu_y",
    "t",
    "ell",
    "density",
    "raw_energy",
    "candidate_kind",
    "flips_accepted",
    "wall_ms",
];

/// Extra columns of an ell sweep, after [`SWEEP_COLUMNS`].
pub const ELL_COLUMNS: [&str; 5] = ["s1", "lower", "upper", "min_lower_gap", "planar_gap"];

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        k => Error::Format(format!("csv: {k:?}")),
    }
}

fn sweep_record(r: &SweepRow) -> Vec<String> {
    vec![
        r.lattice_kind.as_str().to_string(),
        r.seed.to_string(),
        fmt_g17(r.nu[0]),
        fmt_g17(r.nu.get(1).copied().unwrap_or(0.0)),
        fmt_g17(r.t),
        fmt_g17(r.ell),
        fmt_g17(r.density),
        fmt_g17(r.raw_energy),
        r.candidate_kind.as_str().to_string(),
        r.flips_accepted.to_string(),
        r.wall_ms.to_string(),
    ]
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_COLUMNS).map_err(csv_err)?;
    for r in rows {
        w.write_record(sweep_record(r)).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Rows of an ell sweep in the sweep schema followed by [`ELL_COLUMNS`].
pub fn write_ell_csv<W: Write>(base: &SweepRow, rows: &[EllRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_COLUMNS.iter().chain(&ELL_COLUMNS))
        .map_err(csv_err)?;
    for r in rows {
        let s = SweepRow {
            ell: r.ell,
            density: r.phi,
            raw_energy: r.raw_energy,
            candidate_kind: r.candidate_kind,
            flips_accepted: r.flips_accepted,
            ..base.clone()
        };
        let mut rec = sweep_record(&s);
        rec.extend([r.s1, r.lower, r.upper, r.min_lower_gap, r.planar_gap].map(fmt_g17));
        w.write_record(rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn kind_from(s: &str) -> Result<CandidateKind> {
    Ok(match s {
        "harmonic" => CandidateKind::Harmonic,
        "planar" => CandidateKind::Planar,
        "local-search" => CandidateKind::LocalSearch,
        "exhaustive" => CandidateKind::Exhaustive,
        _ => return Err(Error::Format(format!("unknown candidate kind {s:?}"))),
    })
}

/// Parse a table written by [`write_sweep_csv`]. Directions come back
/// two-dimensional.
pub fn read_sweep_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header = rd.headers().map_err(csv_err)?.clone();
    if header.iter().ne(SWEEP_COLUMNS) {
        return Err(Error::Format(format!(
            "unexpected header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let num = |s: &str| -> Result<f64> { s.parse().map_err(|_| Error::Format(format!("not a number: {s:?}"))) };
    let int = |s: &str| -> Result<u64> { s.parse().map_err(|_| Error::Format(format!("not an integer: {s:?}"))) };
    rd.records()
        .map(|rec| {
            let rec = rec.map_err(csv_err)?;
            Ok(SweepRow {
                lattice_kind: LatticeKind::parse(&rec[0]).map_err(|e| Error::Format(e.to_string()))?,
                seed: int(&rec[1])?,
                nu: vec![num(&rec[2])?, num(&rec[3])?],
                t: num(&rec[4])?,
                ell: num(&rec[5])?,
                density: num(&rec[6])?,
                raw_energy: num(&rec[7])?,
                candidate_kind: kind_from(&rec[8])?,
                flips_accepted: int(&rec[9])? as usize,
                wall_ms: int(&rec[10])?,
            })
        })
        .collect()
}
