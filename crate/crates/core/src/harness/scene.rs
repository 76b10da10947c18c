//! Synthetic wire scenes with exact crossing ground truth.
//!
//! Wires are drawn in list order as hard-edged thick polylines, so a later
//! wire lies over every earlier one it crosses. Each wire is preceded by a
//! band of background `gap_px` wide on both sides, which cuts a visible gap
//! into whatever it passes over.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::Point;
use crate::raster::{to_grayscale, RgbImage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireSpec {
    pub points: Vec<Point>,
    pub thickness: f64,
    pub color: [u8; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Background {
    Flat { color: [u8; 3] },
    /// Smooth value noise around `base`, lattice spacing `cell` pixels.
    Texture { base: [u8; 3], amplitude: f64, cell: f64 },
}

impl Default for Background {
    fn default() -> Self {
        Background::Flat { color: [60, 60, 60] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    /// Draw order: later wires are over earlier ones.
    pub wires: Vec<WireSpec>,
    #[serde(default)]
    pub seed: u64,
    /// Standard deviation of additive Gaussian pixel noise.
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub background: Background,
    #[serde(default = "default_gap")]
    pub gap_px: f64,
}

fn default_gap() -> f64 {
    4.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub x: f64,
    pub y: f64,
    pub over: usize,
    pub under: usize,
    /// Segment orientations at the crossing, degrees in [0, 180).
    pub over_angle_deg: f64,
    pub under_angle_deg: f64,
}

impl Crossing {
    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub width: usize,
    pub height: usize,
    pub crossings: Vec<Crossing>,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidDimensions {
                width: self.width,
                height: self.height,
            });
        }
        if !(self.noise_sigma >= 0.0) || !(self.gap_px >= 0.0) {
            return Err(Error::InvalidScene("noise and gap must be non-negative".into()));
        }
        let (xmax, ymax) = ((self.width - 1) as f64, (self.height - 1) as f64);
        for (i, w) in self.wires.iter().enumerate() {
            if !(w.thickness > 0.0) || !w.thickness.is_finite() {
                return Err(Error::InvalidScene(format!("wire {i} has thickness {}", w.thickness)));
            }
            if w.points.len() < 2 {
                return Err(Error::InvalidScene(format!("wire {i} needs at least two points")));
            }
            if let Some(p) = w.points.iter().find(|p| !(0.0..=xmax).contains(&p.x) || !(0.0..=ymax).contains(&p.y)) {
                return Err(Error::InvalidScene(format!(
                    "wire {i} point ({}, {}) is outside the {}x{} image",
                    p.x, p.y, self.width, self.height
                )));
            }
        }
        Ok(())
    }
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0)
    };
    p.distance(Point::new(a.x + t * dx, a.y + t * dy))
}

fn orientation(a: Point, b: Point) -> f64 {
    (b.y - a.y).atan2(b.x - a.x).to_degrees().rem_euclid(180.0)
}

fn segment_intersection(a: Point, b: Point, c: Point, d: Point) -> Option<Point> {
    let r = (b.x - a.x, b.y - a.y);
    let s = (d.x - c.x, d.y - c.y);
    let denom = r.0 * s.1 - r.1 * s.0;
    if denom == 0.0 {
        return None;
    }
    let qp = (c.x - a.x, c.y - a.y);
    let t = (qp.0 * s.1 - qp.1 * s.0) / denom;
    let u = (qp.0 * r.1 - qp.1 * r.0) / denom;
    ((0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u)).then(|| Point::new(a.x + t * r.0, a.y + t * r.1))
}

/// Centerline crossings between every pair of wires, later wire over.
pub fn crossings(wires: &[WireSpec]) -> Vec<Crossing> {
    let mut out: Vec<Crossing> = Vec::new();
    for (under, lower) in wires.iter().enumerate() {
        for (over, upper) in wires.iter().enumerate().skip(under + 1) {
            for s in lower.points.windows(2) {
                for t in upper.points.windows(2) {
                    let Some(p) = segment_intersection(s[0], s[1], t[0], t[1]) else {
                        continue;
                    };
                    // a crossing through a shared vertex is found on both adjacent segments
                    let duplicate = out
                        .iter()
                        .any(|c| c.over == over && c.under == under && c.position().distance(p) < 1e-9);
                    if !duplicate {
                        out.push(Crossing {
                            x: p.x,
                            y: p.y,
                            over,
                            under,
                            over_angle_deg: orientation(t[0], t[1]),
                            under_angle_deg: orientation(s[0], s[1]),
                        });
                    }
                }
            }
        }
    }
    out
}

struct ValueNoise {
    lattice: Vec<f64>,
    cols: usize,
    cell: f64,
}

impl ValueNoise {
    fn new(width: usize, height: usize, cell: f64, rng: &mut ChaCha8Rng) -> Self {
        let cell = cell.max(1.0);
        let cols = (width as f64 / cell).ceil() as usize + 2;
        let rows = (height as f64 / cell).ceil() as usize + 2;
        let lattice = (0..cols * rows).map(|_| rng.random_range(-1.0..1.0)).collect();
        Self { lattice, cols, cell }
    }

    fn at(&self, x: usize, y: usize) -> f64 {
        let (fx, fy) = (x as f64 / self.cell, y as f64 / self.cell);
        let (ix, iy) = (fx as usize, fy as usize);
        let (tx, ty) = (fx - ix as f64, fy - iy as f64);
        let v = |i: usize, j: usize| self.lattice[j * self.cols + i];
        let top = v(ix, iy) * (1.0 - tx) + v(ix + 1, iy) * tx;
        let bottom = v(ix, iy + 1) * (1.0 - tx) + v(ix + 1, iy + 1) * tx;
        top * (1.0 - ty) + bottom * ty
    }
}

fn clamp_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Renders the scene and computes its crossings. Identical specs give
/// identical output.
pub fn generate_scene(spec: &SceneSpec) -> Result<(RgbImage, GroundTruth)> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let background = match spec.background {
        Background::Flat { color } => RgbImage::filled(w, h, color)?,
        Background::Texture { base, amplitude, cell } => {
            let noise = ValueNoise::new(w, h, cell, &mut rng);
            let mut img = RgbImage::new(w, h)?;
            for y in 0..h {
                for x in 0..w {
                    let offset = amplitude * noise.at(x, y);
                    img.put(x, y, base.map(|c| clamp_u8(f64::from(c) + offset)));
                }
            }
            img
        }
    };

    let mut image = background.clone();
    for wire in &spec.wires {
        let half = wire.thickness / 2.0;
        let reach = half + spec.gap_px;
        let (lo_x, hi_x, lo_y, hi_y) = wire.points.iter().fold(
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), p| (a.min(p.x), b.max(p.x), c.min(p.y), d.max(p.y)),
        );
        let x_range = (lo_x - reach).floor().max(0.0) as usize..=((hi_x + reach).ceil() as usize).min(w - 1);
        let y_range = (lo_y - reach).floor().max(0.0) as usize..=((hi_y + reach).ceil() as usize).min(h - 1);
        for y in y_range {
            for x in x_range.clone() {
                let p = Point::new(x as f64, y as f64);
                let d = wire
                    .points
                    .windows(2)
                    .map(|s| segment_distance(p, s[0], s[1]))
                    .fold(f64::INFINITY, f64::min);
                if d <= half {
                    image.put(x, y, wire.color);
                } else if d <= reach {
                    image.put(x, y, background.get(x, y));
                }
            }
        }
    }

    if spec.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, spec.noise_sigma).expect("sigma is finite and non-negative");
        let mut noisy = RgbImage::new(w, h)?;
        for y in 0..h {
            for x in 0..w {
                let p = image.get(x, y);
                noisy.put(x, y, p.map(|c| clamp_u8(f64::from(c) + normal.sample(&mut rng))));
            }
        }
        image = noisy;
    }

    let truth = GroundTruth {
        width: w,
        height: h,
        crossings: crossings(&spec.wires),
    };
    Ok((image, truth))
}

/// Parameters of the randomized two-wire X-crossing scenes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XCrossingParams {
    pub width: usize,
    pub height: usize,
    pub thickness: (f64, f64),
    pub noise_sigma: f64,
    pub gap_px: f64,
}

impl Default for XCrossingParams {
    fn default() -> Self {
        Self {
            width: 640,
            height: 480,
            thickness: (3.0, 5.0),
            noise_sigma: 3.0,
            gap_px: 4.0,
        }
    }
}

/// End points of the line through `c` with direction `angle`, clipped to the
/// pixel extent of a `w` x `h` image.
fn clip_line(c: Point, angle: f64, w: usize, h: usize) -> (Point, Point) {
    let (dx, dy) = (angle.cos(), angle.sin());
    let (xmax, ymax) = ((w - 1) as f64, (h - 1) as f64);
    let mut t_lo = f64::NEG_INFINITY;
    let mut t_hi = f64::INFINITY;
    for (origin, dir, max) in [(c.x, dx, xmax), (c.y, dy, ymax)] {
        if dir.abs() > 1e-12 {
            let (a, b) = ((0.0 - origin) / dir, (max - origin) / dir);
            t_lo = t_lo.max(a.min(b));
            t_hi = t_hi.min(a.max(b));
        }
    }
    let at = |t: f64| Point::new((c.x + t * dx).clamp(0.0, xmax), (c.y + t * dy).clamp(0.0, ymax));
    (at(t_lo), at(t_hi))
}

fn luma(c: [u8; 3]) -> f64 {
    to_grayscale(&RgbImage::filled(1, 1, c).expect("1x1")).get(0, 0) as f64
}

/// Rejection-samples a color whose luma differs from each `(color, gap)` pair
/// by at least the gap. Gives up after `tries` draws.
fn contrasting_color(rng: &mut ChaCha8Rng, against: &[([u8; 3], f64)], tries: usize) -> Option<[u8; 3]> {
    (0..tries).find_map(|_| {
        let c = [rng.random(), rng.random(), rng.random()];
        against
            .iter()
            .all(|&(a, gap)| (luma(c) - luma(a)).abs() >= gap)
            .then_some(c)
    })
}

const WIRE_CONTRAST: f64 = 70.0;

/// Two straight wires spanning the image and crossing once in its central
/// half, at between 45 and 135 degrees. Wire 1 is drawn last and is over.
pub fn x_crossing_spec(seed: u64, params: &XCrossingParams) -> SceneSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (params.width, params.height);
    let c = Point::new(
        rng.random_range(0.25..0.75) * w as f64,
        rng.random_range(0.25..0.75) * h as f64,
    );
    let a1 = rng.random_range(0.0..std::f64::consts::PI);
    let a2 = a1 + rng.random_range(45f64..135.0).to_radians();
    let bg_level = rng.random_range(30..=90u8);
    let bg = [bg_level, bg_level, bg_level];
    // a background below luma 100 always leaves room for one contrasting wire
    let c1 = contrasting_color(&mut rng, &[(bg, WIRE_CONTRAST)], usize::MAX).expect("unbounded");
    // the two wires should also differ, but that is not always possible at
    // full contrast
    let c2 = contrasting_color(&mut rng, &[(bg, WIRE_CONTRAST), (c1, WIRE_CONTRAST)], 1000)
        .or_else(|| contrasting_color(&mut rng, &[(bg, WIRE_CONTRAST), (c1, WIRE_CONTRAST / 3.0)], usize::MAX))
        .expect("unbounded");
    let wire = |angle: f64, color: [u8; 3], rng: &mut ChaCha8Rng| {
        let (p, q) = clip_line(c, angle, w, h);
        WireSpec {
            points: vec![p, q],
            thickness: rng.random_range(params.thickness.0..=params.thickness.1).round(),
            color,
        }
    };
    let under = wire(a1, c1, &mut rng);
    let over = wire(a2, c2, &mut rng);
    SceneSpec {
        width: w,
        height: h,
        wires: vec![under, over],
        seed,
        noise_sigma: params.noise_sigma,
        background: Background::Flat { color: bg },
        gap_px: params.gap_px,
    }
}
