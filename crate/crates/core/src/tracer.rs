//! Direction-coded inner boundary tracing.
//!
//! Directions are numbered counter-clockwise starting from east. In
//! eight-connectivity 0 = E, 1 = NE, 2 = N, ... 7 = SE; in four-connectivity
//! 0 = E, 1 = N, 2 = W, 3 = S. "North" is toward smaller y (image rows grow
//! downward). The neighbourhood of the current pixel is scanned
//! counter-clockwise from a start direction derived from the previous move,
//! and the first foreground pixel found becomes the next contour element.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::BinaryImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

const STEPS_8: [(i64, i64); 8] = [(1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1)];
const STEPS_4: [(i64, i64); 4] = [(1, 0), (0, -1), (-1, 0), (0, 1)];

impl Connectivity {
    fn steps(self) -> &'static [(i64, i64)] {
        match self {
            Connectivity::Four => &STEPS_4,
            Connectivity::Eight => &STEPS_8,
        }
    }

    /// Direction value assigned before the first move.
    pub fn initial_direction(self) -> usize {
        match self {
            Connectivity::Four => 0,
            Connectivity::Eight => 7,
        }
    }

    /// First direction to test after arriving with `direction`.
    pub fn search_start(self, direction: usize) -> usize {
        match self {
            Connectivity::Four => (direction + 3) % 4,
            Connectivity::Eight if direction % 2 == 0 => (direction + 7) % 8,
            Connectivity::Eight => (direction + 6) % 8,
        }
    }

    /// Direction code of a unit move, if it is a legal step.
    pub fn direction_of(self, from: (usize, usize), to: (usize, usize)) -> Option<usize> {
        let d = (to.0 as i64 - from.0 as i64, to.1 as i64 - from.1 as i64);
        self.steps().iter().position(|&s| s == d)
    }

    pub fn are_neighbors(self, a: (usize, usize), b: (usize, usize)) -> bool {
        self.direction_of(a, b).is_some()
    }
}

/// Ordered boundary pixels of one region, without the closing repeat.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contour {
    pub points: Vec<(usize, usize)>,
    pub connectivity: Connectivity,
}

impl Contour {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// First foreground pixel in raster order.
pub fn find_start(region: &BinaryImage) -> Option<(usize, usize)> {
    (0..region.height())
        .flat_map(|y| (0..region.width()).map(move |x| (x, y)))
        .find(|&(x, y)| region.get(x, y))
}

/// Traces the boundary of the region containing `start`, which should be the
/// region's raster-first pixel.
pub fn trace_contour(region: &BinaryImage, start: (usize, usize), conn: Connectivity) -> Result<Contour> {
    trace_contour_from(region, start, conn.initial_direction(), conn)
}

/// Traces with an explicit initial direction, e.g. to resume from the middle
/// of an existing contour using the move that entered that point.
pub fn trace_contour_from(
    region: &BinaryImage,
    start: (usize, usize),
    direction: usize,
    conn: Connectivity,
) -> Result<Contour> {
    if start.0 >= region.width() || start.1 >= region.height() || !region.get(start.0, start.1) {
        return Err(Error::StartNotForeground {
            x: start.0,
            y: start.1,
        });
    }
    let steps = conn.steps();
    let n_dirs = steps.len();
    let mut dir = direction % n_dirs;
    let mut current = start;
    let mut seq = vec![start];
    // each boundary pixel can be entered from at most n_dirs directions
    let limit = n_dirs * region.count_foreground() + 4;

    loop {
        let first = conn.search_start(dir);
        let next = (0..n_dirs).map(|k| (first + k) % n_dirs).find_map(|d| {
            let (dx, dy) = steps[d];
            let (nx, ny) = (current.0 as i64 + dx, current.1 as i64 + dy);
            region.is_set(nx, ny).then_some((d, (nx as usize, ny as usize)))
        });
        let Some((d, pixel)) = next else {
            // isolated pixel
            return Ok(Contour {
                points: vec![start],
                connectivity: conn,
            });
        };
        dir = d;
        current = pixel;
        seq.push(current);
        let n = seq.len() - 1;
        if n >= 3 && seq[n] == seq[1] && seq[n - 1] == seq[0] {
            seq.truncate(n - 1);
            return Ok(Contour {
                points: seq,
                connectivity: conn,
            });
        }
        if n > limit {
            unreachable!("boundary trace failed to close after {n} steps");
        }
    }
}
