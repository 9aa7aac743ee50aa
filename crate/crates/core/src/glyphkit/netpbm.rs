//! Netpbm PBM (P1) and PGM (P2, P5) decoding, PGM P2 encoding.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PnmKind {
    /// ASCII bitmap, 1 = black.
    P1,
    /// ASCII graymap.
    P2,
    /// Binary graymap.
    P5,
}

/// Decoded raster: `samples` row-major, each in `0..=maxval`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graymap {
    pub kind: PnmKind,
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn header_uint(&mut self, what: &str) -> Result<u64> {
        self.skip_ws_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::MalformedHeader(format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| Error::MalformedHeader(format!("{what} out of range")))
    }

    fn raster_uint(&mut self) -> Result<u64> {
        self.header_uint("raster sample")
            .map_err(|_| Error::MalformedHeader("raster truncated or not numeric".into()))
    }
}

pub fn decode(bytes: &[u8]) -> Result<Graymap> {
    let kind = match bytes.get(..2) {
        Some(b"P1") => PnmKind::P1,
        Some(b"P2") => PnmKind::P2,
        Some(b"P5") => PnmKind::P5,
        _ => return Err(Error::MalformedHeader("unsupported magic number".into())),
    };
    let mut cur = Cursor { bytes, pos: 2 };
    if !cur.bytes.get(2).is_some_and(|b| b.is_ascii_whitespace() || *b == b'#') {
        return Err(Error::MalformedHeader("magic must be followed by whitespace".into()));
    }
    let width = cur.header_uint("width")? as usize;
    let height = cur.header_uint("height")? as usize;
    if width == 0 || height == 0 {
        return Err(Error::DimensionZero);
    }
    let maxval = match kind {
        PnmKind::P1 => 1,
        _ => {
            let m = cur.header_uint("maxval")?;
            if m == 0 || m > u16::MAX as u64 {
                return Err(Error::MalformedHeader(format!("maxval {m} outside 1..=65535")));
            }
            m as u16
        }
    };
    let count = width
        .checked_mul(height)
        .ok_or_else(|| Error::MalformedHeader("dimensions overflow".into()))?;
    let mut samples = Vec::with_capacity(count);
    match kind {
        PnmKind::P1 => {
            // P1 digits need not be whitespace separated.
            while samples.len() < count {
                cur.skip_ws_and_comments();
                match cur.bytes.get(cur.pos) {
                    Some(b'0') => samples.push(0),
                    Some(b'1') => samples.push(1),
                    _ => return Err(Error::MalformedHeader("raster truncated or not 0/1".into())),
                }
                cur.pos += 1;
            }
        }
        PnmKind::P2 => {
            while samples.len() < count {
                let v = cur.raster_uint()?;
                if v > maxval as u64 {
                    return Err(Error::MalformedHeader(format!("sample {v} exceeds maxval {maxval}")));
                }
                samples.push(v as u16);
            }
        }
        PnmKind::P5 => {
            if !cur.bytes.get(cur.pos).is_some_and(u8::is_ascii_whitespace) {
                return Err(Error::MalformedHeader("missing whitespace before raster".into()));
            }
            cur.pos += 1;
            let wide = maxval > 255;
            let need = count * if wide { 2 } else { 1 };
            let raw = cur
                .bytes
                .get(cur.pos..cur.pos + need)
                .ok_or_else(|| Error::MalformedHeader("raster truncated".into()))?;
            for chunk in raw.chunks_exact(if wide { 2 } else { 1 }) {
                let v = if wide {
                    u16::from_be_bytes([chunk[0], chunk[1]])
                } else {
                    chunk[0] as u16
                };
                if v > maxval {
                    return Err(Error::MalformedHeader(format!("sample {v} exceeds maxval {maxval}")));
                }
                samples.push(v);
            }
        }
    }
    Ok(Graymap {
        kind,
        width,
        height,
        maxval,
        samples,
    })
}

/// Encodes an ASCII PGM (P2), one raster row per line.
pub fn encode_p2(width: usize, height: usize, maxval: u16, samples: &[u16]) -> Result<String> {
    if width == 0 || height == 0 {
        return Err(Error::DimensionZero);
    }
    if samples.len() != width * height {
        return Err(Error::ShapeMismatch(format!(
            "{width}x{height} raster needs {} samples, got {}",
            width * height,
            samples.len()
        )));
    }
    let mut out = format!("P2\n{width} {height}\n{maxval}\n");
    for row in samples.chunks(width) {
        let line: Vec<String> = row.iter().map(u16::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decodes_p1_with_comments_and_packed_digits() {
        let g = decode(b"P1\n# a comment\n3 2\n101\n0 1 0\n").unwrap();
        assert_eq!((g.width, g.height, g.maxval), (3, 2, 1));
        assert_eq!(g.samples, vec![1, 0, 1, 0, 1, 0]);
    }

    #[test]
    fn decodes_p2() {
        let g = decode(b"P2 2 1 255 0 255").unwrap();
        assert_eq!(g.samples, vec![0, 255]);
        assert_eq!(g.kind, PnmKind::P2);
    }

    #[test]
    fn decodes_p5_8_and_16_bit() {
        let mut b = b"P5\n2 1\n255\n".to_vec();
        b.extend_from_slice(&[7, 200]);
        assert_eq!(decode(&b).unwrap().samples, vec![7, 200]);

        let mut b = b"P5\n1 1\n1000\n".to_vec();
        b.extend_from_slice(&1000u16.to_be_bytes());
        assert_eq!(decode(&b).unwrap().samples, vec![1000]);
    }

    #[test]
    fn header_errors() {
        assert!(matches!(decode(b"P3\n1 1\n"), Err(Error::MalformedHeader(_))));
        assert!(matches!(decode(b"P2\nx 1\n"), Err(Error::MalformedHeader(_))));
        assert!(matches!(decode(b"P2\n0 4 255\n"), Err(Error::DimensionZero)));
        assert!(matches!(decode(b"P2\n1 1 0\n0"), Err(Error::MalformedHeader(_))));
        assert!(matches!(decode(b"P2\n2 1 255\n3"), Err(Error::MalformedHeader(_))));
        assert!(matches!(decode(b"P2\n1 1 10\n11"), Err(Error::MalformedHeader(_))));
        assert!(matches!(decode(b"P5\n2 1 255\n\x01"), Err(Error::MalformedHeader(_))));
    }

    #[test]
    fn p2_encoding_round_trips() {
        let text = encode_p2(3, 2, 255, &[0, 1, 2, 253, 254, 255]).unwrap();
        assert_eq!(text, "P2\n3 2\n255\n0 1 2\n253 254 255\n");
        let back = decode(text.as_bytes()).unwrap();
        assert_eq!(back.samples, vec![0, 1, 2, 253, 254, 255]);
    }
}
