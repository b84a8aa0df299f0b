//! Grayscale images: PGM I/O and transfer to and from lattice fields.
//!
//! The image rectangle `[0, W] x [0, H]` maps affinely onto the lattice
//! domain, pixel `(i, j)` covering `[i, i + 1] x [j, j + 1]` with its center
//! at `(i + 1/2, j + 1/2)`. Row `j` grows with the second coordinate; there
//! is no vertical flip.

use std::fs;
use std::path::Path;

use crate::energy::Field;
use crate::error::{invalid, Error, Result};
use crate::grid::BinGrid;
use crate::lattice::PointSet;

/// Tolerance on the aspect-ratio match between image and domain.
pub const ASPECT_TOL: f64 = 1e-6;

/// Row-major gray levels in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width.checked_mul(height) != Some(pixels.len()) {
            return Err(Error::SizeMismatch {
                expected: width.saturating_mul(height),
                got: pixels.len(),
            });
        }
        if let Some(k) = pixels.iter().position(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::OutOfRange(format!("pixel {k} = {} outside [0, 1]", pixels[k])));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let pixels = (0..height)
            .flat_map(|j| (0..width).map(move |i| (i, j)))
            .map(|(i, j)| f(i, j))
            .collect();
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    /// Pixel in column `i`, row `j`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pixels[j * self.width + i]
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }
}

struct Tokens<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn skip_space(&mut self) {
        while self.pos < self.data.len() {
            match self.data[self.pos] {
                b'#' => {
                    while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn uint(&mut self, what: &str) -> Result<u64> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.data.len() && self.data[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(if self.pos >= self.data.len() {
                Error::Format(format!("truncated PGM: missing {what}"))
            } else {
                Error::Format(format!("malformed PGM: expected {what}"))
            });
        }
        std::str::from_utf8(&self.data[start..self.pos])
            .expect("ascii digits")
            .parse()
            .map_err(|_| Error::Format(format!("malformed PGM: {what} too large")))
    }
}

/// Decode a P2 or P5 PGM.
pub fn parse_pgm(data: &[u8]) -> Result<GrayImage> {
    let binary = match data.get(..2) {
        Some(b"P2") => false,
        Some(b"P5") => true,
        Some(m) => {
            return Err(Error::Format(format!(
                "unsupported PGM magic {:?}",
                String::from_utf8_lossy(m)
            )))
        }
        None => return Err(Error::Format("truncated PGM: missing magic".into())),
    };
    let mut tok = Tokens { data, pos: 2 };
    if tok.pos < data.len() && !data[tok.pos].is_ascii_whitespace() && data[tok.pos] != b'#' {
        return Err(Error::Format("malformed PGM: no separator after magic".into()));
    }
    let width = tok.uint("width")? as usize;
    let height = tok.uint("height")? as usize;
    let maxval = tok.uint("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::Format(format!("PGM has zero size {width}x{height}")));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("PGM maxval {maxval} outside 1..=65535")));
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::Format("PGM dimensions overflow".into()))?;
    let mut raw = Vec::with_capacity(n);
    if binary {
        // exactly one whitespace byte before the raster
        match data.get(tok.pos) {
            Some(c) if c.is_ascii_whitespace() => tok.pos += 1,
            _ => return Err(Error::Format("truncated PGM: missing raster".into())),
        }
        let bytes = if maxval < 256 { 1 } else { 2 };
        let body = &data[tok.pos..];
        if body.len() < n * bytes {
            return Err(Error::Format(format!(
                "truncated PGM: {} raster bytes, expected {}",
                body.len(),
                n * bytes
            )));
        }
        for k in 0..n {
            raw.push(if bytes == 1 {
                body[k] as u64
            } else {
                (body[2 * k] as u64) << 8 | body[2 * k + 1] as u64
            });
        }
    } else {
        for _ in 0..n {
            raw.push(tok.uint("pixel value")?);
        }
    }
    if let Some(x) = raw.iter().find(|&&x| x > maxval) {
        return Err(Error::Format(format!("PGM sample {x} exceeds maxval {maxval}")));
    }
    let m = maxval as f64;
    GrayImage::new(width, height, raw.into_iter().map(|x| x as f64 / m).collect())
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    parse_pgm(&fs::read(path)?)
}

/// Gray level in `0..=255`, rounding halves up.
pub fn quantize(x: f64) -> u8 {
    (x * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Encode as P5 (`binary`) or P2 with maxval 255.
pub fn encode_pgm(img: &GrayImage, binary: bool) -> Result<Vec<u8>> {
    if img.is_empty() {
        return invalid("cannot write an image of zero size");
    }
    let mut out = format!(
        "{}\n{} {}\n255\n",
        if binary { "P5" } else { "P2" },
        img.width,
        img.height
    )
    .into_bytes();
    if binary {
        out.extend(img.pixels.iter().map(|&x| quantize(x)));
    } else {
        for row in img.pixels.chunks(img.width) {
            let line: Vec<String> = row.iter().map(|&x| quantize(x).to_string()).collect();
            out.extend_from_slice(line.join(" ").as_bytes());
            out.push(b'\n');
        }
    }
    Ok(out)
}

pub fn write_pgm(img: &GrayImage, path: impl AsRef<Path>, binary: bool) -> Result<()> {
    let bytes = encode_pgm(img, binary)?;
    fs::write(path, bytes)?;
    Ok(())
}

fn check_plane(ps: &PointSet) -> Result<()> {
    if ps.dim() != 2 {
        return Err(Error::Dimension(format!(
            "images need a 2-dimensional lattice, got d = {}",
            ps.dim()
        )));
    }
    Ok(())
}

fn check_aspect(width: usize, height: usize, ps: &PointSet, stretch: bool) -> Result<()> {
    if width == 0 || height == 0 {
        return invalid("image has zero size");
    }
    let d = ps.domain();
    let a = width as f64 / height as f64;
    let b = d.side(0) / d.side(1);
    if !stretch && ((a - b) / a).abs() > ASPECT_TOL {
        return invalid(format!(
            "image aspect ratio {a} differs from domain aspect ratio {b}; pass --stretch to allow"
        ));
    }
    Ok(())
}

/// Bilinear interpolation of the pixel values at each lattice point.
/// Unequal aspect ratios are an error unless `stretch` is set.
pub fn sample_image_to_lattice(img: &GrayImage, ps: &PointSet, stretch: bool) -> Result<Field> {
    check_plane(ps)?;
    check_aspect(img.width, img.height, ps, stretch)?;
    let d = ps.domain();
    let (w, h) = (img.width as f64, img.height as f64);
    let clamp_at = |x: f64, n: usize| -> (usize, usize, f64) {
        let x = x.clamp(0.0, (n - 1) as f64);
        let i = (x.floor() as usize).min(n - 1);
        let j = (i + 1).min(n - 1);
        (i, j, x - i as f64)
    };
    Ok(Field(
        ps.points()
            .map(|p| {
                let px = (p[0] - d.lo()[0]) / d.side(0) * w - 0.5;
                let py = (p[1] - d.lo()[1]) / d.side(1) * h - 0.5;
                let (i0, i1, fx) = clamp_at(px, img.width);
                let (j0, j1, fy) = clamp_at(py, img.height);
                let top = (1.0 - fx) * img.get(i0, j0) + fx * img.get(i1, j0);
                let bot = (1.0 - fx) * img.get(i0, j1) + fx * img.get(i1, j1);
                (1.0 - fy) * top + fy * bot
            })
            .collect(),
    ))
}

/// Voronoi interpolation of a field: each pixel takes the value of the
/// lattice point nearest to its center (smaller index on ties), clamped to
/// `[0, 1]`.
pub fn rasterize_field(f: &[f64], ps: &PointSet, width: usize, height: usize) -> Result<GrayImage> {
    check_plane(ps)?;
    if f.len() != ps.len() {
        return Err(Error::SizeMismatch {
            expected: ps.len(),
            got: f.len(),
        });
    }
    if ps.is_empty() {
        return invalid("cannot rasterize on an empty lattice");
    }
    if width == 0 || height == 0 {
        return invalid("image has zero size");
    }
    let d = ps.domain();
    let bin = (d.volume() / ps.len() as f64).sqrt().max(1e-9);
    let grid = BinGrid::from_points(d.lo(), d.hi(), bin, ps.coords());
    GrayImage::from_fn(width, height, |i, j| {
        let q = [
            d.lo()[0] + (i as f64 + 0.5) / width as f64 * d.side(0),
            d.lo()[1] + (j as f64 + 0.5) / height as f64 * d.side(1),
        ];
        let (k, _) = grid.nearest(&q).expect("nonempty lattice");
        f[k].clamp(0.0, 1.0)
    })
}
