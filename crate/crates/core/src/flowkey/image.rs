//! Grayscale/color frames and binary PNM input/output.

use super::FlowError;
use std::io::Write;
use std::path::Path;

/// Row-major 8-bit luminance image.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayFrame {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
    pub timestamp: f64,
}

/// Row-major interleaved RGB image.
#[derive(Clone, Debug, PartialEq)]
pub struct RgbFrame {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[u8; 3]>,
    pub timestamp: f64,
}

impl GrayFrame {
    pub fn new(
        width: usize,
        height: usize,
        pixels: Vec<u8>,
        timestamp: f64,
    ) -> Result<Self, FlowError> {
        if pixels.len() != width * height {
            return Err(FlowError::Dimensions(format!(
                "{} pixels for a {width}x{height} frame",
                pixels.len()
            )));
        }
        Ok(GrayFrame {
            width,
            height,
            pixels,
            timestamp,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        GrayFrame {
            width,
            height,
            pixels: vec![value; width * height],
            timestamp: 0.0,
        }
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }
}

/// Luminance conversion, rounded to the nearest integer.
pub fn to_grayscale(frame: &RgbFrame) -> Result<GrayFrame, FlowError> {
    if frame.pixels.len() != frame.width * frame.height {
        return Err(FlowError::Dimensions(format!(
            "{} color pixels for a {}x{} frame",
            frame.pixels.len(),
            frame.width,
            frame.height
        )));
    }
    let pixels = frame
        .pixels
        .iter()
        .map(|&[r, g, b]| {
            let l = 0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64;
            l.round().clamp(0.0, 255.0) as u8
        })
        .collect();
    Ok(GrayFrame {
        width: frame.width,
        height: frame.height,
        pixels,
        timestamp: frame.timestamp,
    })
}

enum Pnm {
    Gray(GrayFrame),
    Color(RgbFrame),
}

fn parse_pnm(bytes: &[u8]) -> Result<Pnm, FlowError> {
    let bad = |m: &str| FlowError::Format(m.to_string());
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(bad("missing PNM magic"));
    }
    let channels = match bytes[1] {
        b'5' => 1,
        b'6' => 3,
        _ => return Err(bad("only binary P5/P6 are supported")),
    };
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                Some(c) if c.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err(bad("truncated header")),
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("expected a number in the header"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("header number out of range"))?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(bad("only maxval 255 is supported"));
    }
    // exactly one whitespace byte separates the header from the raster
    if !bytes.get(pos).is_some_and(|c| c.is_ascii_whitespace()) {
        return Err(bad("missing raster separator"));
    }
    pos += 1;
    let need = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| bad("image too large"))?;
    let raster = bytes
        .get(pos..pos + need)
        .ok_or_else(|| bad("truncated raster"))?;
    Ok(if channels == 1 {
        Pnm::Gray(GrayFrame {
            width,
            height,
            pixels: raster.to_vec(),
            timestamp: 0.0,
        })
    } else {
        let pixels = raster.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        Pnm::Color(RgbFrame {
            width,
            height,
            pixels,
            timestamp: 0.0,
        })
    })
}

/// Decodes a P5 or P6 image, converting color to grayscale.
pub fn decode_pnm(bytes: &[u8]) -> Result<GrayFrame, FlowError> {
    match parse_pnm(bytes)? {
        Pnm::Gray(g) => Ok(g),
        Pnm::Color(c) => to_grayscale(&c),
    }
}

pub fn encode_pgm(frame: &GrayFrame) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", frame.width, frame.height).into_bytes();
    out.extend_from_slice(&frame.pixels);
    out
}

pub fn encode_ppm(frame: &RgbFrame) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", frame.width, frame.height).into_bytes();
    for p in &frame.pixels {
        out.extend_from_slice(p);
    }
    out
}

pub fn write_pgm(path: &Path, frame: &GrayFrame) -> Result<(), FlowError> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&encode_pgm(frame))?;
    Ok(())
}

/// Loads every `.pgm`/`.ppm` file in a directory, sorted by file name.
/// Every `interval`-th frame is kept; timestamps are frame ordinals times `frame_period`.
pub fn load_frame_dir(
    dir: &Path,
    interval: usize,
    frame_period: f64,
) -> Result<Vec<GrayFrame>, FlowError> {
    if interval == 0 {
        return Err(FlowError::InvalidParameter(
            "frame interval must be at least 1".into(),
        ));
    }
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("pgm") | Some("ppm")
            )
        })
        .collect();
    paths.sort();
    let mut frames = Vec::new();
    for (i, p) in paths.iter().enumerate().step_by(interval) {
        let bytes = std::fs::read(p)?;
        let mut g = decode_pnm(&bytes).map_err(|e| match e {
            FlowError::Format(m) => FlowError::Format(format!("{}: {m}", p.display())),
            other => other,
        })?;
        g.timestamp = i as f64 * frame_period;
        if let Some(first) = frames.first() {
            let first: &GrayFrame = first;
            if first.width != g.width || first.height != g.height {
                return Err(FlowError::Dimensions(format!(
                    "{} differs in size",
                    p.display()
                )));
            }
        }
        frames.push(g);
    }
    Ok(frames)
}
