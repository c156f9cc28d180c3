//! Flat binary grid dumps.
//!
//! A dump is an ASCII header of `key value` lines ending with `end`,
//! followed by `width * height` little-endian `f64` values in row-major
//! order and then one mask byte per pixel (`1` valid, `0` invalid):
//!
//! ```text
//! VBSGRID 1
//! kind depth
//! units m
//! width 128
//! height 128
//! dtype f64le
//! mask u8
//! end
//! ```

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{DenseImage, ImageSize, Unit};

const MAGIC: &str = "VBSGRID 1";

pub fn write_grid<U: Unit, W: Write>(mut out: W, image: &DenseImage<U>) -> Result<()> {
    write!(
        out,
        "{MAGIC}\nkind {}\nunits {}\nwidth {}\nheight {}\ndtype f64le\nmask u8\nend\n",
        U::KIND,
        U::NAME,
        image.width(),
        image.height()
    )?;
    let mut buf = Vec::with_capacity(image.values().len() * 9);
    for v in image.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend(image.mask().iter().map(|m| u8::from(*m)));
    out.write_all(&buf)?;
    Ok(())
}

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

pub fn read_grid<U: Unit, R: Read>(input: R) -> Result<DenseImage<U>> {
    let mut reader = BufReader::new(input);
    let mut line = String::new();
    let mut next = |reader: &mut BufReader<R>| -> Result<String> {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            return Err(parse_err("grid header ended early"));
        }
        Ok(line.trim_end_matches('\n').to_string())
    };
    if next(&mut reader)? != MAGIC {
        return Err(parse_err("missing VBSGRID 1 magic"));
    }
    let (mut width, mut height) = (None, None);
    loop {
        let l = next(&mut reader)?;
        if l == "end" {
            break;
        }
        let (key, value) = l
            .split_once(' ')
            .ok_or_else(|| parse_err(format!("bad header line {l:?}")))?;
        let expect = |want: &str| {
            if value == want {
                Ok(())
            } else {
                Err(parse_err(format!("{key} is {value:?}, expected {want:?}")))
            }
        };
        match key {
            "kind" => expect(U::KIND)?,
            "units" => expect(U::NAME)?,
            "dtype" => expect("f64le")?,
            "mask" => expect("u8")?,
            "width" => width = value.parse::<usize>().ok(),
            "height" => height = value.parse::<usize>().ok(),
            _ => return Err(parse_err(format!("unknown header key {key:?}"))),
        }
    }
    let (Some(width), Some(height)) = (width, height) else {
        return Err(parse_err("header lacks a valid width or height"));
    };
    let size = ImageSize::new(width, height);
    let n = size.pixel_count();
    let mut body = vec![0u8; n * 9];
    reader
        .read_exact(&mut body)
        .map_err(|_| parse_err("grid body is truncated"))?;
    let mut image = DenseImage::<U>::invalid(size);
    for i in 0..n {
        let v = f64::from_le_bytes(body[i * 8..i * 8 + 8].try_into().expect("8 bytes"));
        match body[n * 8 + i] {
            0 => {}
            1 => image.set_index(i, Some(v)),
            m => return Err(parse_err(format!("mask byte {m} at pixel {i}"))),
        }
    }
    Ok(image)
}

pub fn write_grid_file<U: Unit>(path: impl AsRef<Path>, image: &DenseImage<U>) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_grid(&mut f, image)?;
    f.flush()?;
    Ok(())
}

pub fn read_grid_file<U: Unit>(path: impl AsRef<Path>) -> Result<DenseImage<U>> {
    read_grid(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DepthImage, DisparityImage};

    #[test]
    fn round_trip_is_bit_exact() {
        let mut img = DepthImage::invalid(ImageSize::new(3, 2));
        img.set(0, 0, Some(0.1 + 0.2));
        img.set(2, 1, Some(1e-300));
        let mut buf = Vec::new();
        write_grid(&mut buf, &img).unwrap();
        let back: DepthImage = read_grid(buf.as_slice()).unwrap();
        assert_eq!(back, img);
        assert_eq!(back.get(0, 0).unwrap().to_bits(), (0.1f64 + 0.2).to_bits());
    }

    #[test]
    fn header_layout() {
        let img = DisparityImage::invalid(ImageSize::new(2, 1));
        let mut buf = Vec::new();
        write_grid(&mut buf, &img).unwrap();
        let header = "VBSGRID 1\nkind disparity\nunits px\nwidth 2\nheight 1\ndtype f64le\nmask u8\nend\n";
        assert!(buf.starts_with(header.as_bytes()));
        assert_eq!(buf.len(), header.len() + 2 * 9);
    }

    #[test]
    fn rejects_wrong_kind_and_truncation() {
        let img = DepthImage::invalid(ImageSize::new(2, 2));
        let mut buf = Vec::new();
        write_grid(&mut buf, &img).unwrap();
        assert!(read_grid::<crate::geometry::Pixels, _>(buf.as_slice()).is_err());
        buf.pop();
        assert!(read_grid::<crate::geometry::Meters, _>(buf.as_slice()).is_err());
    }
}
