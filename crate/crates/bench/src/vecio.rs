//! Vector files.
//!
//! Text: one vector per line, comma-separated decimal literals. Blank lines
//! and lines starting with `#` are skipped. Values are rounded to the target
//! format on load.
//!
//! Binary: a 16-byte little-endian header followed by `count * d` raw
//! elements, each stored in its format's own width (4 bytes for FP32, 2 for
//! FP16 and BF16), little-endian, row after row.
//!
//! | offset | size | field                               |
//! |--------|------|-------------------------------------|
//! | 0      | 4    | magic `b"IL2N"`                     |
//! | 4      | 4    | format tag: 1 FP32, 2 FP16, 3 BF16  |
//! | 8      | 4    | `d`                                 |
//! | 12     | 4    | `count`                             |

use std::io::Write;
use std::path::Path;

use iterl2norm::{Format, FpScalar};

use crate::error::{BenchError, Result};

pub const MAGIC: [u8; 4] = *b"IL2N";
pub const HEADER_LEN: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct VectorSet {
    pub format: Format,
    pub d: usize,
    pub rows: Vec<Vec<FpScalar>>,
}

pub fn format_tag(format: Format) -> u32 {
    match format {
        Format::Fp32 => 1,
        Format::Fp16 => 2,
        Format::Bf16 => 3,
    }
}

pub fn format_from_tag(tag: u32) -> Option<Format> {
    match tag {
        1 => Some(Format::Fp32),
        2 => Some(Format::Fp16),
        3 => Some(Format::Bf16),
        _ => None,
    }
}

fn element_bytes(format: Format) -> usize {
    format.spec().total_bits as usize / 8
}

/// Read a text or binary vector file; binary files are recognized by their
/// magic. `format` is required for text and, if given, must match a binary
/// file's tag.
pub fn read_vectors(path: &Path, format: Option<Format>) -> Result<VectorSet> {
    let bytes = std::fs::read(path).map_err(|e| BenchError::Io(path.into(), e))?;
    if bytes.starts_with(&MAGIC) {
        let set = parse_binary(path, &bytes)?;
        if let Some(f) = format {
            if f != set.format {
                return Err(BenchError::Usage(format!(
                    "{} holds {} data but {f} was requested",
                    path.display(),
                    set.format
                )));
            }
        }
        Ok(set)
    } else {
        let text = String::from_utf8(bytes)
            .map_err(|_| BenchError::data(path, 1, "neither a binary vector file nor UTF-8 text"))?;
        parse_text(path, &text, format.unwrap_or(Format::Fp32))
    }
}

pub fn parse_text(path: &Path, text: &str, format: Format) -> Result<VectorSet> {
    let mut rows = Vec::new();
    let mut d = None;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|field| {
                let field = field.trim();
                let v: f64 = field
                    .parse()
                    .map_err(|_| BenchError::data(path, line_no, format!("not a number: `{field}`")))?;
                if !v.is_finite() {
                    return Err(BenchError::data(path, line_no, format!("non-finite value `{field}`")));
                }
                Ok(FpScalar::from_f64(v, format))
            })
            .collect::<Result<Vec<_>>>()?;
        match d {
            None => d = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(BenchError::data(
                    path,
                    line_no,
                    format!("row has {} values, expected {d}", row.len()),
                ))
            }
            _ => {}
        }
        rows.push(row);
    }
    let d = d.ok_or_else(|| BenchError::data(path, 1, "no vectors in file"))?;
    Ok(VectorSet { format, d, rows })
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

pub fn parse_binary(path: &Path, bytes: &[u8]) -> Result<VectorSet> {
    if bytes.len() < HEADER_LEN || bytes[..4] != MAGIC {
        return Err(BenchError::data(path, 0, "truncated or missing header"));
    }
    let tag = read_u32(bytes, 4);
    let format = format_from_tag(tag)
        .ok_or_else(|| BenchError::data(path, 0, format!("unknown format tag {tag}")))?;
    let d = read_u32(bytes, 8) as usize;
    let count = read_u32(bytes, 12) as usize;
    if d == 0 || count == 0 {
        return Err(BenchError::data(path, 0, "empty vector set"));
    }
    let width = element_bytes(format);
    let expected = d
        .checked_mul(count)
        .and_then(|n| n.checked_mul(width))
        .and_then(|n| n.checked_add(HEADER_LEN));
    if expected != Some(bytes.len()) {
        return Err(BenchError::data(
            path,
            0,
            format!("payload is {} bytes, header implies {count} x {d} {format}", bytes.len() - HEADER_LEN),
        ));
    }
    let rows = bytes[HEADER_LEN..]
        .chunks_exact(d * width)
        .map(|row| {
            row.chunks_exact(width)
                .map(|e| {
                    let bits = match width {
                        4 => u32::from_le_bytes(e.try_into().unwrap()),
                        _ => u16::from_le_bytes(e.try_into().unwrap()) as u32,
                    };
                    FpScalar::from_bits(bits, format)
                })
                .collect()
        })
        .collect();
    Ok(VectorSet { format, d, rows })
}

pub fn write_text(out: &mut impl Write, rows: &[Vec<FpScalar>]) -> std::io::Result<()> {
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| v.to_f64().to_string()).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn write_binary(out: &mut impl Write, set: &VectorSet) -> std::io::Result<()> {
    out.write_all(&MAGIC)?;
    out.write_all(&format_tag(set.format).to_le_bytes())?;
    out.write_all(&(set.d as u32).to_le_bytes())?;
    out.write_all(&(set.rows.len() as u32).to_le_bytes())?;
    let width = element_bytes(set.format);
    for v in set.rows.iter().flatten() {
        out.write_all(&v.bits().to_le_bytes()[..width])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p() -> &'static Path {
        Path::new("mem")
    }

    #[test]
    fn text_parses_and_rounds() {
        let set = parse_text(p(), "# header\n1, 2,3\n\n0.1,-4,5e-1\n", Format::Bf16).unwrap();
        assert_eq!(set.d, 3);
        assert_eq!(set.rows.len(), 2);
        assert_eq!(set.rows[1][0].bits(), 0x3DCD);
    }

    #[test]
    fn text_errors_carry_line_numbers() {
        let err = parse_text(p(), "1,2\n1,2,3\n", Format::Fp32).unwrap_err();
        assert!(matches!(err, BenchError::Data { line: 2, .. }), "{err}");
        let err = parse_text(p(), "1,x\n", Format::Fp32).unwrap_err();
        assert!(matches!(err, BenchError::Data { line: 1, .. }));
        assert!(parse_text(p(), "1,nan\n", Format::Fp32).is_err());
        assert!(parse_text(p(), "# only comments\n", Format::Fp32).is_err());
    }

    #[test]
    fn binary_header_layout() {
        let set = VectorSet {
            format: Format::Fp16,
            d: 2,
            rows: vec![vec![FpScalar::from_f64(1.0, Format::Fp16), FpScalar::from_f64(-2.0, Format::Fp16)]],
        };
        let mut buf = Vec::new();
        write_binary(&mut buf, &set).unwrap();
        assert_eq!(
            buf,
            [b'I', b'L', b'2', b'N', 2, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0, 0x00, 0x3C, 0x00, 0xC0]
        );
        assert_eq!(parse_binary(p(), &buf).unwrap(), set);
        assert!(parse_binary(p(), &buf[..buf.len() - 1]).is_err());
        let mut bad = buf.clone();
        bad[4] = 9;
        assert!(parse_binary(p(), &bad).is_err());
    }

    proptest! {
        #[test]
        fn binary_round_trip(bits in prop::collection::vec(any::<u32>(), 1..40), tag in 1u32..4) {
            let format = format_from_tag(tag).unwrap();
            let mask = format.spec().bit_mask();
            let row: Vec<FpScalar> = bits.iter().map(|b| FpScalar::from_bits(b & mask, format)).collect();
            let set = VectorSet { format, d: row.len(), rows: vec![row.clone(), row] };
            let mut buf = Vec::new();
            write_binary(&mut buf, &set).unwrap();
            let back = parse_binary(p(), &buf).unwrap();
            let same = back.rows.iter().flatten().zip(set.rows.iter().flatten()).all(|(a, b)| a.bits() == b.bits());
            prop_assert!(same);
        }

        #[test]
        fn text_round_trip(vals in prop::collection::vec(-1e6f64..1e6, 1..30)) {
            let row: Vec<FpScalar> = vals.iter().map(|v| FpScalar::from_f64(*v, Format::Fp32)).collect();
            let mut buf = Vec::new();
            write_text(&mut buf, std::slice::from_ref(&row)).unwrap();
            let back = parse_text(p(), std::str::from_utf8(&buf).unwrap(), Format::Fp32).unwrap();
            prop_assert_eq!(&back.rows[0], &row);
        }
    }
}
