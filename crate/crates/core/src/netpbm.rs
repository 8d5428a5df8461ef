//! Minimal binary netpbm codecs: P5 (8- and 16-bit greyscale) and P6 (RGB).
//!
//! Headers are written as `P5\n<w> <h>\n<maxval>\n`. The reader accepts any
//! whitespace and `#` comments between header fields. 16-bit samples are
//! big-endian.

use std::io::{self, Read, Write};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetpbmError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("malformed netpbm data: {0}")]
    Malformed(String),
    #[error("unsupported netpbm variant: {0}")]
    Unsupported(String),
}

/// Decoded greyscale image. Samples are widened to `u16` regardless of depth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graymap {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

impl Graymap {
    /// Samples as bytes; fails for 16-bit images.
    pub fn into_bytes(self) -> Result<Vec<u8>, NetpbmError> {
        if self.maxval > 255 {
            return Err(NetpbmError::Unsupported(format!(
                "expected 8-bit PGM, got maxval {}",
                self.maxval
            )));
        }
        Ok(self.samples.into_iter().map(|v| v as u8).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pixmap {
    pub width: usize,
    pub height: usize,
    pub rgb: Vec<[u8; 3]>,
}

pub fn write_pgm8<W: Write>(
    mut out: W,
    width: usize,
    height: usize,
    data: &[u8],
) -> Result<(), NetpbmError> {
    check_len(width, height, data.len())?;
    write!(out, "P5\n{width} {height}\n255\n")?;
    out.write_all(data)?;
    Ok(())
}

pub fn write_pgm16<W: Write>(
    mut out: W,
    width: usize,
    height: usize,
    data: &[u16],
) -> Result<(), NetpbmError> {
    check_len(width, height, data.len())?;
    write!(out, "P5\n{width} {height}\n65535\n")?;
    let mut buf = Vec::with_capacity(data.len() * 2);
    for v in data {
        buf.extend_from_slice(&v.to_be_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn write_ppm<W: Write>(mut out: W, image: &Pixmap) -> Result<(), NetpbmError> {
    check_len(image.width, image.height, image.rgb.len())?;
    write!(out, "P6\n{} {}\n255\n", image.width, image.height)?;
    let flat: Vec<u8> = image.rgb.iter().flatten().copied().collect();
    out.write_all(&flat)?;
    Ok(())
}

pub fn read_pgm<R: Read>(mut input: R) -> Result<Graymap, NetpbmError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let mut cur = Cursor {
        data: &bytes,
        pos: 0,
    };
    let magic = cur.token()?;
    if magic != "P5" {
        return Err(NetpbmError::Unsupported(format!(
            "magic {magic:?}, expected P5"
        )));
    }
    let (width, height, maxval) = cur.dimensions()?;
    let samples = if maxval < 256 {
        let raw = cur.payload(width * height)?;
        raw.iter().map(|&b| u16::from(b)).collect()
    } else {
        let raw = cur.payload(width * height * 2)?;
        raw.chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    };
    Ok(Graymap {
        width,
        height,
        maxval,
        samples,
    })
}

pub fn read_ppm<R: Read>(mut input: R) -> Result<Pixmap, NetpbmError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let mut cur = Cursor {
        data: &bytes,
        pos: 0,
    };
    let magic = cur.token()?;
    if magic != "P6" {
        return Err(NetpbmError::Unsupported(format!(
            "magic {magic:?}, expected P6"
        )));
    }
    let (width, height, maxval) = cur.dimensions()?;
    if maxval != 255 {
        return Err(NetpbmError::Unsupported(format!("PPM maxval {maxval}")));
    }
    let raw = cur.payload(width * height * 3)?;
    Ok(Pixmap {
        width,
        height,
        rgb: raw.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
    })
}

fn check_len(width: usize, height: usize, len: usize) -> Result<(), NetpbmError> {
    if width == 0 || height == 0 || len != width * height {
        return Err(NetpbmError::Malformed(format!(
            "{len} samples for a {width}x{height} image"
        )));
    }
    Ok(())
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
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

    fn token(&mut self) -> Result<String, NetpbmError> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.data.len() && !self.data[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(NetpbmError::Malformed("truncated header".into()));
        }
        Ok(String::from_utf8_lossy(&self.data[start..self.pos]).into_owned())
    }

    fn number(&mut self) -> Result<usize, NetpbmError> {
        let t = self.token()?;
        t.parse()
            .map_err(|_| NetpbmError::Malformed(format!("bad header field {t:?}")))
    }

    fn dimensions(&mut self) -> Result<(usize, usize, u16), NetpbmError> {
        let width = self.number()?;
        let height = self.number()?;
        let maxval = self.number()?;
        if width == 0 || height == 0 {
            return Err(NetpbmError::Malformed("zero image dimension".into()));
        }
        if maxval == 0 || maxval > 65535 {
            return Err(NetpbmError::Malformed(format!("maxval {maxval}")));
        }
        // Exactly one whitespace byte separates the header from the raster.
        match self.data.get(self.pos) {
            Some(c) if c.is_ascii_whitespace() => self.pos += 1,
            _ => return Err(NetpbmError::Malformed("missing raster separator".into())),
        }
        Ok((width, height, maxval as u16))
    }

    fn payload(&mut self, len: usize) -> Result<&[u8], NetpbmError> {
        let rest = &self.data[self.pos..];
        if rest.len() < len {
            return Err(NetpbmError::Malformed(format!(
                "raster has {} bytes, expected {len}",
                rest.len()
            )));
        }
        self.pos += len;
        Ok(&rest[..len])
    }
}
