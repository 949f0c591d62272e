//! File formats: PBM (P4) for sets, 16-bit PGM (P5) and `i,j,value` CSV for scalar fields.
//!
//! Image row `r` holds grid row `j = r`, so cell `(0, 0)` is the top-left pixel.
//! PBM uses 1 for an occupied cell.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::grid::{PeriodicGrid, ScalarField, TorusSet};

pub fn write_pbm<W: Write>(set: &TorusSet, mut w: W) -> Result<()> {
    let g = set.grid();
    write!(w, "P4\n{} {}\n", g.nx(), g.ny())?;
    let stride = g.nx().div_ceil(8);
    let mut row = vec![0u8; stride];
    for j in 0..g.ny() {
        row.iter_mut().for_each(|b| *b = 0);
        for i in 0..g.nx() {
            if set.contains(i, j) {
                row[i / 8] |= 0x80 >> (i % 8);
            }
        }
        w.write_all(&row)?;
    }
    Ok(())
}

/// Reads whitespace-separated header tokens, skipping `#` comments.
fn header_tokens<R: BufRead>(r: &mut R, count: usize) -> Result<Vec<String>> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    let mut in_comment = false;
    let mut byte = [0u8; 1];
    while tokens.len() < count {
        if r.read(&mut byte)? == 0 {
            return Err(Error::Format("truncated header".into()));
        }
        let c = byte[0] as char;
        if in_comment {
            in_comment = c != '\n';
            continue;
        }
        if c == '#' {
            in_comment = true;
        } else if c.is_ascii_whitespace() {
            if !cur.is_empty() {
                tokens.push(std::mem::take(&mut cur));
            }
        } else {
            cur.push(c);
        }
    }
    Ok(tokens)
}

fn parse_dim(s: &str) -> Result<usize> {
    s.parse().map_err(|_| Error::Format(format!("bad dimension {s:?}")))
}

pub fn read_pbm<R: BufRead>(mut r: R) -> Result<TorusSet> {
    let t = header_tokens(&mut r, 3)?;
    if t[0] != "P4" {
        return Err(Error::Format(format!("expected P4 magic, found {:?}", t[0])));
    }
    let grid = PeriodicGrid::new(parse_dim(&t[1])?, parse_dim(&t[2])?)?;
    let stride = grid.nx().div_ceil(8);
    let mut data = vec![0u8; stride * grid.ny()];
    r.read_exact(&mut data).map_err(|_| Error::Format("truncated raster".into()))?;
    Ok(TorusSet::from_fn(grid, |i, j| data[j * stride + i / 8] & (0x80 >> (i % 8)) != 0))
}

/// 16-bit PGM; the affine map `value = offset + scale * sample` is recorded in a comment.
pub fn write_pgm16<W: Write>(field: &ScalarField, mut w: W) -> Result<()> {
    let g = field.grid();
    let (lo, hi) = field.values().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let scale = if hi > lo { (hi - lo) / 65535.0 } else { 1.0 };
    write!(w, "P5\n# affine offset={lo:e} scale={scale:e}\n{} {}\n65535\n", g.nx(), g.ny())?;
    let mut buf = Vec::with_capacity(2 * g.len());
    for &v in field.values() {
        let s = ((v - lo) / scale).round().clamp(0.0, 65535.0) as u16;
        buf.extend_from_slice(&s.to_be_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Lossless CSV export: header comment, then `i,j,value` with round-trip float formatting.
pub fn write_field_csv<W: Write>(field: &ScalarField, mut w: W) -> Result<()> {
    let g = field.grid();
    writeln!(w, "# schema=1")?;
    writeln!(w, "# grid={}x{}", g.nx(), g.ny())?;
    writeln!(w, "i,j,value")?;
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            writeln!(w, "{i},{j},{:?}", field.get(i, j))?;
        }
    }
    Ok(())
}

pub fn read_field_csv<R: BufRead>(r: R) -> Result<ScalarField> {
    let mut grid = None;
    let mut values = Vec::new();
    let mut seen = Vec::new();
    for line in r.lines() {
        let line = line?;
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("# grid=") {
            let (a, b) = rest.split_once('x').ok_or_else(|| Error::Format("bad grid line".into()))?;
            let g = PeriodicGrid::new(parse_dim(a)?, parse_dim(b)?)?;
            values = vec![0.0; g.len()];
            seen = vec![false; g.len()];
            grid = Some(g);
            continue;
        }
        if line.is_empty() || line.starts_with('#') || line == "i,j,value" {
            continue;
        }
        let g = grid.ok_or_else(|| Error::Format("missing grid line".into()))?;
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::Format(format!("bad row {line:?}")));
        }
        let i = parse_dim(parts[0])?;
        let j = parse_dim(parts[1])?;
        let v: f64 = parts[2].parse().map_err(|_| Error::Format(format!("bad value {:?}", parts[2])))?;
        if i >= g.nx() || j >= g.ny() {
            return Err(Error::Format(format!("cell ({i},{j}) out of range")));
        }
        values[g.index(i, j)] = v;
        seen[g.index(i, j)] = true;
    }
    let g = grid.ok_or_else(|| Error::Format("missing grid line".into()))?;
    if seen.iter().any(|s| !s) {
        return Err(Error::Format("missing cells".into()));
    }
    ScalarField::new(g, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pbm_round_trip_with_odd_width() {
        let g = PeriodicGrid::new(13, 9).unwrap();
        let s = TorusSet::from_fn(g, |i, j| (i * 5 + j * 3) % 4 == 1);
        let mut buf = Vec::new();
        write_pbm(&s, &mut buf).unwrap();
        assert!(buf.starts_with(b"P4\n13 9\n"));
        assert_eq!(read_pbm(buf.as_slice()).unwrap(), s);
    }

    #[test]
    fn pbm_top_left_is_origin() {
        let g = PeriodicGrid::square(8).unwrap();
        let mut s = TorusSet::empty(g);
        s.set(0, true);
        let mut buf = Vec::new();
        write_pbm(&s, &mut buf).unwrap();
        assert_eq!(buf[buf.len() - 8], 0x80);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let g = PeriodicGrid::new(6, 5).unwrap();
        let f = ScalarField::from_fn(g, |i, j| (i as f64 * 0.1).sin() / (j as f64 + 3.0)).unwrap();
        let mut buf = Vec::new();
        write_field_csv(&f, &mut buf).unwrap();
        assert_eq!(read_field_csv(buf.as_slice()).unwrap(), f);
    }

    #[test]
    fn pgm_header_records_scaling() {
        let g = PeriodicGrid::square(4).unwrap();
        let f = ScalarField::from_fn(g, |i, _| i as f64).unwrap();
        let mut buf = Vec::new();
        write_pgm16(&f, &mut buf).unwrap();
        let text = String::from_utf8_lossy(&buf[..40]);
        assert!(text.starts_with("P5\n# affine offset="));
        assert_eq!(buf.len() - buf.iter().rposition(|&b| b == b'\n').unwrap() - 1, 32);
    }

    #[test]
    fn rejects_wrong_magic() {
        assert!(read_pbm(&b"P1\n8 8\n"[..]).is_err());
    }
}
