//! Raster containers, image file I/O and the convolution primitive.
//!
//! Three pixel kinds follow the pipeline: [`RgbImage`] for camera input,
//! [`GrayImage`] for single-channel intensity, and [`BinaryImage`] for
//! thresholded edge maps. Convolution output stays real-valued in a
//! [`Plane`] until a later stage decides how to normalize it.

use std::fs;
use std::io::{BufWriter, Cursor, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::verdict::Tangle;

const PNG_SIGNATURE: [u8; 8] = [137, 80, 78, 71, 13, 10, 26, 10];

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions { width, height });
    }
    Ok(())
}

/// 8-bit RGB image, row-major, three bytes per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        Self::filled(width, height, [0, 0, 0])
    }

    pub fn filled(width: usize, height: usize, color: [u8; 3]) -> Result<Self> {
        check_dims(width, height)?;
        let data = color.iter().copied().cycle().take(width * height * 3).collect();
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != width * height * 3 {
            return Err(Error::CorruptData(format!(
                "expected {} bytes for {width}x{height} RGB, got {}",
                width * height * 3,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn put(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Sets a pixel given signed coordinates, ignoring anything off-image.
    pub fn put_clipped(&mut self, x: i64, y: i64, rgb: [u8; 3]) {
        if x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height {
            self.put(x as usize, y as usize, rgb);
        }
    }

    pub fn pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.data.chunks_exact(3).map(|c| [c[0], c[1], c[2]])
    }

    pub fn map_pixels(&self, f: impl Fn([u8; 3]) -> [u8; 3]) -> Self {
        let data = self.pixels().flat_map(f).collect();
        Self {
            width: self.width,
            height: self.height,
            data,
        }
    }

    /// Splits into three real-valued channel planes (r, g, b).
    pub fn channels(&self) -> [Plane; 3] {
        std::array::from_fn(|c| Plane {
            width: self.width,
            height: self.height,
            data: self.data.iter().skip(c).step_by(3).map(|&v| f64::from(v)).collect(),
        })
    }

    /// Reassembles channel planes, rounding and clamping each value to 0–255.
    pub fn from_channels(planes: &[Plane; 3]) -> Self {
        let (width, height) = (planes[0].width, planes[0].height);
        let mut data = Vec::with_capacity(width * height * 3);
        for i in 0..width * height {
            for plane in planes {
                data.push(clamp_u8(plane.data[i]));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }
}

/// Single-channel 8-bit intensity image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != width * height {
            return Err(Error::CorruptData(format!(
                "expected {} bytes for {width}x{height} gray, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> u8) -> Result<Self> {
        check_dims(width, height)?;
        let data = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    pub fn to_plane(&self) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f64::from(v)).collect(),
        }
    }
}

/// Thresholded image; `true` marks foreground (edge) pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            data: vec![false; width * height],
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Result<Self> {
        check_dims(width, height)?;
        let data = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Parses rows of `#` (foreground) and `.` (background). Handy in tests.
    pub fn from_ascii(rows: &[&str]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::CorruptData("ragged ascii rows".into()));
        }
        Self::from_fn(width, height, |x, y| rows[y].as_bytes()[x] == b'#')
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    /// Foreground test with signed coordinates; off-image reads as background.
    pub fn is_set(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.data[y as usize * self.width + x as usize]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.data[y * self.width + x] = value;
    }

    pub fn count_foreground(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }
}

/// Real-valued single-channel plane holding signed convolution responses.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn from_raw(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != width * height {
            return Err(Error::CorruptData(format!(
                "expected {} samples for {width}x{height} plane, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }
}

/// Square, odd-sized convolution mask stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    size: usize,
    coefficients: Vec<f64>,
}

impl Kernel {
    pub fn new(size: usize, coefficients: Vec<f64>) -> Result<Self> {
        if size == 0 || size % 2 == 0 {
            return Err(Error::EvenKernel(size));
        }
        if coefficients.len() != size * size {
            return Err(Error::InvalidConfig(format!(
                "kernel of size {size} needs {} coefficients, got {}",
                size * size,
                coefficients.len()
            )));
        }
        Ok(Self { size, coefficients })
    }

    pub fn from_rows<const N: usize>(rows: [[f64; N]; N]) -> Result<Self> {
        Self::new(N, rows.iter().flatten().copied().collect())
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Coefficient at column `i`, row `j`.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.coefficients[j * self.size + i]
    }

    pub fn sum(&self) -> f64 {
        self.coefficients.iter().sum()
    }
}

fn clamp_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Correlates `plane` with `kernel` (no kernel flip), replicating edge pixels
/// past the border.
pub fn convolve_plane(plane: &Plane, kernel: &Kernel) -> Result<Plane> {
    if kernel.size % 2 == 0 {
        return Err(Error::EvenKernel(kernel.size));
    }
    let (w, h) = (plane.width as i64, plane.height as i64);
    let c = (kernel.size / 2) as i64;
    let mut out = Vec::with_capacity(plane.data.len());
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for j in 0..kernel.size {
                let sy = (y + j as i64 - c).clamp(0, h - 1) as usize;
                let row = &plane.data[sy * plane.width..(sy + 1) * plane.width];
                for i in 0..kernel.size {
                    let sx = (x + i as i64 - c).clamp(0, w - 1) as usize;
                    acc += kernel.coefficients[j * kernel.size + i] * row[sx];
                }
            }
            out.push(acc);
        }
    }
    Ok(Plane {
        width: plane.width,
        height: plane.height,
        data: out,
    })
}

/// Convolves an 8-bit image, keeping the signed real-valued response.
pub fn convolve(image: &GrayImage, kernel: &Kernel) -> Result<Plane> {
    convolve_plane(&image.to_plane(), kernel)
}

/// ITU-R 601 luma: round(0.299 r + 0.587 g + 0.114 b).
pub fn to_grayscale(image: &RgbImage) -> GrayImage {
    let data = image
        .pixels()
        .map(|[r, g, b]| clamp_u8(0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b)))
        .collect();
    GrayImage {
        width: image.width,
        height: image.height,
        data,
    }
}

// ---------------------------------------------------------------------------
// File I/O
// ---------------------------------------------------------------------------

/// Loads a binary PPM (P6) or PNG file, sniffing the format from its magic bytes.
pub fn load_image(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::FileNotFound(path.to_path_buf()))
        }
        Err(e) => return Err(e.into()),
    };
    decode_image(&bytes)
}

pub fn decode_image(bytes: &[u8]) -> Result<RgbImage> {
    if bytes.starts_with(b"P6") {
        decode_ppm(bytes)
    } else if bytes.starts_with(&PNG_SIGNATURE) {
        decode_png(bytes)
    } else {
        let magic: String = bytes.iter().take(2).map(|&b| b as char).collect();
        Err(Error::UnsupportedFormat(format!("unrecognized magic {magic:?}")))
    }
}

/// Parses a P6 header and returns the image plus nothing else; trailing bytes
/// beyond the declared raster are ignored.
pub fn decode_ppm(bytes: &[u8]) -> Result<RgbImage> {
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(Error::CorruptData("truncated PPM header".into())),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::CorruptData("expected a number in PPM header".into()));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        *field = text
            .parse()
            .map_err(|_| Error::CorruptData(format!("bad PPM header value {text}")))?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(Error::UnsupportedFormat(format!("PPM maxval {maxval} (only 255 supported)")));
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::CorruptData("missing whitespace after PPM maxval".into()));
    }
    pos += 1;
    let need = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(3))
        .ok_or_else(|| Error::CorruptData("PPM dimensions overflow".into()))?;
    let raster = &bytes[pos..];
    if raster.len() < need {
        return Err(Error::CorruptData(format!(
            "PPM declares {need} raster bytes but only {} present",
            raster.len()
        )));
    }
    if width == 0 || height == 0 {
        return Err(Error::CorruptData(format!("PPM has empty dimensions {width}x{height}")));
    }
    RgbImage::from_raw(width, height, raster[..need].to_vec())
}

fn decode_png(bytes: &[u8]) -> Result<RgbImage> {
    let corrupt = |e: png::DecodingError| Error::CorruptData(format!("png: {e}"));
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = decoder.read_info().map_err(corrupt)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::CorruptData("png: image too large".into()))?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(corrupt)?;
    let (width, height) = (info.width as usize, info.height as usize);
    let buf = &buf[..info.buffer_size()];
    let data: Vec<u8> = match info.color_type {
        png::ColorType::Rgb => buf.to_vec(),
        png::ColorType::Rgba => buf.chunks_exact(4).flat_map(|p| [p[0], p[1], p[2]]).collect(),
        png::ColorType::Grayscale => buf.iter().flat_map(|&v| [v, v, v]).collect(),
        png::ColorType::GrayscaleAlpha => buf.chunks_exact(2).flat_map(|p| [p[0]; 3]).collect(),
        other => {
            return Err(Error::UnsupportedFormat(format!("png color type {other:?}")));
        }
    };
    RgbImage::from_raw(width, height, data)
}

pub fn encode_ppm(image: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend_from_slice(&image.data);
    out
}

fn encode_png(image: &RgbImage, sink: impl Write) -> Result<()> {
    let mut encoder = png::Encoder::new(sink, image.width as u32, image.height as u32);
    encoder.set_color(png::ColorType::Rgb);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder
        .write_header()
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    writer
        .write_image_data(&image.data)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    Ok(())
}

/// Writes PNG when the path ends in `.png`, binary PPM otherwise.
pub fn save_image(image: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let is_png = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    let file = fs::File::create(path)?;
    let mut sink = BufWriter::new(file);
    if is_png {
        encode_png(image, &mut sink)?;
    } else {
        sink.write_all(&encode_ppm(image))?;
    }
    sink.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Annotation
// ---------------------------------------------------------------------------

const CROSSHAIR_ARM: i64 = 6;
const CROSSHAIR_COLOR: [u8; 3] = [255, 255, 0];

// 3x5 glyphs, one row per byte, bit 2 = leftmost column.
fn glyph(c: char) -> [u8; 5] {
    match c {
        '0' => [7, 5, 5, 5, 7],
        '1' => [2, 6, 2, 2, 7],
        '2' => [7, 1, 7, 4, 7],
        '3' => [7, 1, 7, 1, 7],
        '4' => [5, 5, 7, 1, 1],
        '5' => [7, 4, 7, 1, 7],
        '6' => [7, 4, 7, 5, 7],
        '7' => [7, 1, 1, 1, 1],
        '8' => [7, 5, 7, 5, 7],
        '9' => [7, 5, 7, 1, 7],
        '.' => [0, 0, 0, 0, 2],
        _ => [0; 5],
    }
}

fn draw_text(image: &mut RgbImage, text: &str, x: i64, y: i64, color: [u8; 3]) {
    for (k, c) in text.chars().enumerate() {
        let ox = x + 4 * k as i64;
        for (row, bits) in glyph(c).iter().enumerate() {
            for col in 0..3 {
                if bits & (4 >> col) != 0 {
                    image.put_clipped(ox + col, y + row as i64, color);
                }
            }
        }
    }
}

/// Returns a copy of `image` with a cross-hair and confidence label at every
/// tangle position.
pub fn annotate(image: &RgbImage, tangles: &[Tangle]) -> Result<RgbImage> {
    let mut out = image.clone();
    for t in tangles {
        let p = t.position;
        let inside = p.x >= 0.0
            && p.y >= 0.0
            && p.x <= (image.width - 1) as f64
            && p.y <= (image.height - 1) as f64;
        if !inside {
            return Err(Error::OutOfBounds {
                x: p.x,
                y: p.y,
                width: image.width,
                height: image.height,
            });
        }
        let (cx, cy) = (p.x.round() as i64, p.y.round() as i64);
        for d in -CROSSHAIR_ARM..=CROSSHAIR_ARM {
            out.put_clipped(cx + d, cy, CROSSHAIR_COLOR);
            out.put_clipped(cx, cy + d, CROSSHAIR_COLOR);
        }
        draw_text(
            &mut out,
            &format!("{:.2}", t.confidence),
            cx + CROSSHAIR_ARM + 2,
            cy + 2,
            CROSSHAIR_COLOR,
        );
    }
    Ok(out)
}

pub fn save_annotated(image: &RgbImage, tangles: &[Tangle], path: impl AsRef<Path>) -> Result<()> {
    let annotated = annotate(image, tangles)?;
    save_image(&annotated, path)
}
