//! File formats.
//!
//! PRSG grids are little-endian:
//!
//! ```text
//! b"PRSG" | version: u32 | rows: u32 | cols: u32 | flag: u8 (0 real, 1 complex)
//! rows * cols values, row-major, f64 (complex values as re, im pairs)
//! ```
//!
//! Spectrograms are stored with rows = frequency bins and cols = frames.
//! Onset masks are plain text, one line per source, holding space-separated
//! frame indices.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array2;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const PRSG_MAGIC: &[u8; 4] = b"PRSG";
pub const PRSG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Real(Array2<f64>),
    Complex(Array2<Complex<f64>>),
}

impl Grid {
    pub fn dim(&self) -> (usize, usize) {
        match self {
            Grid::Real(a) => a.dim(),
            Grid::Complex(a) => a.dim(),
        }
    }

    pub fn into_real(self) -> Result<Array2<f64>> {
        match self {
            Grid::Real(a) => Ok(a),
            Grid::Complex(_) => Err(Error::Format("expected a real grid, found complex".into())),
        }
    }

    pub fn into_complex(self) -> Result<Array2<Complex<f64>>> {
        match self {
            Grid::Complex(a) => Ok(a),
            Grid::Real(a) => Ok(a.mapv(|v| Complex::new(v, 0.0))),
        }
    }
}

fn write_header(w: &mut impl Write, dim: (usize, usize), flag: u8) -> Result<()> {
    let to_u32 = |n: usize| {
        u32::try_from(n).map_err(|_| Error::Format(format!("dimension {n} exceeds u32")))
    };
    w.write_all(PRSG_MAGIC)?;
    w.write_u32::<LittleEndian>(PRSG_VERSION)?;
    w.write_u32::<LittleEndian>(to_u32(dim.0)?)?;
    w.write_u32::<LittleEndian>(to_u32(dim.1)?)?;
    w.write_u8(flag)?;
    Ok(())
}

pub fn write_real<T: Real>(w: &mut impl Write, grid: &Array2<T>) -> Result<()> {
    write_header(w, grid.dim(), 0)?;
    for &v in grid.iter() {
        w.write_f64::<LittleEndian>(v.to_f64_lossy())?;
    }
    Ok(())
}

pub fn write_complex<T: Real>(w: &mut impl Write, grid: &Array2<Complex<T>>) -> Result<()> {
    write_header(w, grid.dim(), 1)?;
    for c in grid.iter() {
        w.write_f64::<LittleEndian>(c.re.to_f64_lossy())?;
        w.write_f64::<LittleEndian>(c.im.to_f64_lossy())?;
    }
    Ok(())
}

pub fn read_grid(r: &mut impl Read) -> Result<Grid> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != PRSG_MAGIC {
        return Err(Error::Format("bad magic bytes".into()));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != PRSG_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let rows = r.read_u32::<LittleEndian>()? as usize;
    let cols = r.read_u32::<LittleEndian>()? as usize;
    let flag = r.read_u8()?;
    let count = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
    match flag {
        0 => {
            let mut values = vec![0.0; count];
            r.read_f64_into::<LittleEndian>(&mut values)?;
            Ok(Grid::Real(
                Array2::from_shape_vec((rows, cols), values).expect("count matches shape"),
            ))
        }
        1 => {
            let mut values = vec![0.0; 2 * count];
            r.read_f64_into::<LittleEndian>(&mut values)?;
            let data = values
                .chunks_exact(2)
                .map(|c| Complex::new(c[0], c[1]))
                .collect();
            Ok(Grid::Complex(
                Array2::from_shape_vec((rows, cols), data).expect("count matches shape"),
            ))
        }
        other => Err(Error::Format(format!("unknown value flag {other}"))),
    }
}

pub fn save_real<T: Real>(path: impl AsRef<Path>, grid: &Array2<T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_real(&mut w, grid)?;
    w.flush()?;
    Ok(())
}

pub fn save_complex<T: Real>(path: impl AsRef<Path>, grid: &Array2<Complex<T>>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_complex(&mut w, grid)?;
    w.flush()?;
    Ok(())
}

pub fn load_grid(path: impl AsRef<Path>) -> Result<Grid> {
    read_grid(&mut BufReader::new(File::open(path)?))
}

/// Parses one line of frame indices per source. Lines starting with `#` are skipped.
pub fn parse_onset_masks(text: &str) -> Result<Vec<Vec<usize>>> {
    text.lines()
        .filter(|line| !line.trim_start().starts_with('#'))
        .map(|line| {
            let mut frames = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<usize>()
                        .map_err(|_| Error::Format(format!("bad frame index `{tok}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            frames.sort_unstable();
            frames.dedup();
            Ok(frames)
        })
        .collect()
}

pub fn format_onset_masks(masks: &[Vec<usize>]) -> String {
    let mut out = String::new();
    for frames in masks {
        let line: Vec<String> = frames.iter().map(usize::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let grid = Array2::from_shape_vec((2, 3), vec![1.0f64, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let mut buf = Vec::new();
        write_real(&mut buf, &grid).unwrap();
        assert_eq!(&buf[..4], b"PRSG");
        assert_eq!(&buf[4..8], &1u32.to_le_bytes());
        assert_eq!(&buf[8..12], &2u32.to_le_bytes());
        assert_eq!(&buf[12..16], &3u32.to_le_bytes());
        assert_eq!(buf[16], 0);
        assert_eq!(buf.len(), 17 + 6 * 8);
        // row-major: second value is grid[[0, 1]]
        assert_eq!(&buf[25..33], &2.0f64.to_le_bytes());
    }

    #[test]
    fn complex_interleaved() {
        let grid = Array2::from_shape_vec(
            (1, 2),
            vec![Complex::new(1.0f64, -1.0), Complex::new(0.5, 2.0)],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_complex(&mut buf, &grid).unwrap();
        assert_eq!(buf[16], 1);
        assert_eq!(&buf[25..33], &(-1.0f64).to_le_bytes());
        assert_eq!(read_grid(&mut buf.as_slice()).unwrap(), Grid::Complex(grid));
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(
            read_grid(&mut &b"NOPE\x01\0\0\0"[..]),
            Err(Error::Format(_))
        ));
        let mut buf = Vec::new();
        write_real(&mut buf, &Array2::<f64>::zeros((2, 2))).unwrap();
        buf[16] = 7;
        assert!(matches!(
            read_grid(&mut buf.as_slice()),
            Err(Error::Format(_))
        ));
        buf.truncate(20);
        buf[16] = 0;
        assert!(matches!(read_grid(&mut buf.as_slice()), Err(Error::Io(_))));
    }

    #[test]
    fn onset_text() {
        let masks = parse_onset_masks("0 40 80\n# comment\n\n3 1 3\n").unwrap();
        assert_eq!(masks, vec![vec![0, 40, 80], vec![], vec![1, 3]]);
        assert_eq!(format_onset_masks(&masks), "0 40 80\n\n1 3\n");
        assert!(parse_onset_masks("0 x").is_err());
    }

    proptest! {
        #[test]
        fn real_grid_round_trip(rows in 1usize..6, cols in 1usize..6, seed in any::<u32>()) {
            let grid = Array2::from_shape_fn((rows, cols), |(i, j)| (seed as f64) * 1e-3 + (i * 7 + j) as f64 - 3.25);
            let mut buf = Vec::new();
            write_real(&mut buf, &grid).unwrap();
            prop_assert_eq!(read_grid(&mut buf.as_slice()).unwrap(), Grid::Real(grid));
        }
    }
}
