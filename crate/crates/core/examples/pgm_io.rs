//! PGM encoding, and the sample/rasterize round trip between images and
//! lattice fields.

use stochat::image::*;
use stochat::lattice::{generate_periodic, generate_random_parking, BoxDomain};

fn main() -> stochat::Result<()> {
    let ramp = GrayImage::from_fn(32, 32, |i, j| (i + j) as f64 / 62.0)?;
    let p5 = encode_pgm(&ramp, true)?;
    let p2 = encode_pgm(&ramp, false)?;
    println!("P5 {} bytes, P2 {} bytes", p5.len(), p2.len());
    let back = parse_pgm(&p5)?;
    let err = ramp
        .pixels()
        .iter()
        .zip(back.pixels())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("8-bit round trip error {err:.5} (1/255 = {:.5})", 1.0 / 255.0);
    assert_eq!(parse_pgm(&p2)?, back);

    // half-pixel grid: every pixel center is a lattice point
    let dense = generate_periodic(&BoxDomain::cube(2, 32.0)?, 0.5)?;
    let g = sample_image_to_lattice(&back, &dense, false)?;
    let img = rasterize_field(&g, &dense, 32, 32)?;
    let err = back
        .pixels()
        .iter()
        .zip(img.pixels())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("sample then rasterize on the half-pixel grid: max error {err:.2e}");

    // a coarse random lattice blurs the ramp into Voronoi cells
    let coarse = generate_random_parking(&BoxDomain::cube(2, 32.0)?, 1.5, 1)?;
    let g = sample_image_to_lattice(&back, &coarse, false)?;
    let img = rasterize_field(&g, &coarse, 32, 32)?;
    let err = back
        .pixels()
        .iter()
        .zip(img.pixels())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!(
        "on a parking lattice with r = 1.5 ({} points): max error {err:.4}",
        coarse.len()
    );
    Ok(())
}
