//! 8-bit grayscale image files: binary PGM (P5) in and out, PNG in.

use std::fs::File;
use std::io::{BufWriter, Cursor, Write};
use std::path::Path;

use crate::error::{OsprError, Result};

/// An 8-bit grayscale raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gray8 {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

const PNG_MAGIC: &[u8] = &[0x89, b'P', b'N', b'G', 0x0d, 0x0a, 0x1a, 0x0a];

/// Read a P5 PGM or an 8-bit grayscale PNG, picking the decoder from the magic bytes.
pub fn read_gray8(path: &Path) -> Result<Gray8> {
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(OsprError::MissingImage(path.to_path_buf()))
        }
        Err(e) => return Err(OsprError::io(path, e)),
    };
    if bytes.starts_with(b"P5") {
        parse_pgm(&bytes)
    } else if bytes.starts_with(PNG_MAGIC) {
        parse_png(&bytes)
    } else {
        Err(OsprError::UnsupportedFormat(format!(
            "{}: expected binary PGM (P5) or PNG",
            path.display()
        )))
    }
}

pub fn parse_pgm(bytes: &[u8]) -> Result<Gray8> {
    let mut pos = 2;
    let mut header = [0usize; 3];
    for slot in header.iter_mut() {
        // whitespace and `#` comments may separate header fields
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while !matches!(bytes.get(pos), Some(b'\n') | None) {
                        pos += 1;
                    }
                }
                Some(c) if c.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(OsprError::UnsupportedFormat("malformed PGM header".into()));
        }
        *slot = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| OsprError::UnsupportedFormat("malformed PGM header".into()))?;
    }
    let [width, height, maxval] = header;
    if maxval == 0 || maxval > 255 {
        return Err(OsprError::UnsupportedFormat(format!(
            "PGM maxval {maxval} is not 8-bit"
        )));
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(OsprError::UnsupportedFormat("malformed PGM header".into()));
    }
    pos += 1;
    let n = width * height;
    let raster = bytes
        .get(pos..pos + n)
        .ok_or_else(|| OsprError::UnsupportedFormat("truncated PGM raster".into()))?;
    Ok(Gray8 {
        width,
        height,
        pixels: raster.to_vec(),
    })
}

fn parse_png(bytes: &[u8]) -> Result<Gray8> {
    let bad = |e: png::DecodingError| OsprError::UnsupportedFormat(format!("PNG: {e}"));
    let mut reader = png::Decoder::new(Cursor::new(bytes)).read_info().map_err(bad)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| OsprError::UnsupportedFormat("PNG too large".into()))?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(bad)?;
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
        return Err(OsprError::UnsupportedFormat(format!(
            "PNG is {:?}/{:?}, only 8-bit grayscale is accepted",
            info.color_type, info.bit_depth
        )));
    }
    let (width, height) = (info.width as usize, info.height as usize);
    let mut pixels = Vec::with_capacity(width * height);
    for row in buf.chunks(info.line_size).take(height) {
        pixels.extend_from_slice(&row[..width]);
    }
    Ok(Gray8 {
        width,
        height,
        pixels,
    })
}

pub fn encode_pgm(image: &Gray8) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend_from_slice(&image.pixels);
    out
}

pub fn write_pgm(path: &Path, image: &Gray8) -> Result<()> {
    let file = File::create(path).map_err(|e| OsprError::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&encode_pgm(image))
        .and_then(|_| w.flush())
        .map_err(|e| OsprError::io(path, e))
}

/// Write an 8-bit grayscale PNG. Used by tests and examples to exercise the PNG loader.
pub fn write_png(path: &Path, image: &Gray8) -> Result<()> {
    let file = File::create(path).map_err(|e| OsprError::io(path, e))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), image.width as u32, image.height as u32);
    enc.set_color(png::ColorType::Grayscale);
    enc.set_depth(png::BitDepth::Eight);
    let err = |e: png::EncodingError| {
        OsprError::io(path, std::io::Error::other(e.to_string()))
    };
    let mut writer = enc.write_header().map_err(err)?;
    writer.write_image_data(&image.pixels).map_err(err)?;
    writer.finish().map_err(err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip_with_comment() {
        let img = Gray8 {
            width: 3,
            height: 2,
            pixels: vec![0, 10, 20, 30, 40, 255],
        };
        let mut bytes = b"P5\n# made by hand\n3 2\n255\n".to_vec();
        bytes.extend_from_slice(&img.pixels);
        assert_eq!(parse_pgm(&bytes).unwrap(), img);
        assert_eq!(parse_pgm(&encode_pgm(&img)).unwrap(), img);
    }

    #[test]
    fn pgm_rejects_sixteen_bit() {
        let bytes = b"P5 2 1 65535\n\0\0\0\0".to_vec();
        assert!(matches!(
            parse_pgm(&bytes),
            Err(OsprError::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn pgm_rejects_truncated_raster() {
        let bytes = b"P5 4 4 255\n\0\0".to_vec();
        assert!(parse_pgm(&bytes).is_err());
    }

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.png");
        let img = Gray8 {
            width: 5,
            height: 3,
            pixels: (0..15).map(|v| v * 17).collect(),
        };
        write_png(&path, &img).unwrap();
        assert_eq!(read_gray8(&path).unwrap(), img);
    }

    #[test]
    fn unknown_magic_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.pgm");
        std::fs::write(&path, b"P2\n2 2\n255\n0 0 0 0\n").unwrap();
        assert!(matches!(
            read_gray8(&path),
            Err(OsprError::UnsupportedFormat(_))
        ));
        assert!(matches!(
            read_gray8(&dir.path().join("nope.pgm")),
            Err(OsprError::MissingImage(_))
        ));
    }
}
