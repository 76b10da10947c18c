//! Raster-order sliding windows and the edge patches captured in each.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::point::Point;
use crate::raster::BinaryImage;

/// Axis-aligned window in image pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WindowRect {
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
    pub h: usize,
}

impl WindowRect {
    pub const fn new(x0: usize, y0: usize, w: usize, h: usize) -> Self {
        Self { x0, y0, w, h }
    }

    /// Window diagonal, the normalizer of the confidence ratio.
    pub fn diagonal(&self) -> f64 {
        (self.w as f64).hypot(self.h as f64)
    }

    /// Whether a real-valued point falls on the window's pixel extent.
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x0 as f64
            && p.y >= self.y0 as f64
            && p.x <= (self.x0 + self.w - 1) as f64
            && p.y <= (self.y0 + self.h - 1) as f64
    }

    pub fn contains_pixel(&self, x: usize, y: usize) -> bool {
        (self.x0..self.x0 + self.w).contains(&x) && (self.y0..self.y0 + self.h).contains(&y)
    }

    pub fn translate(&self, dx: usize, dy: usize) -> Self {
        Self::new(self.x0 + dx, self.y0 + dy, self.w, self.h)
    }

    pub fn as_array(&self) -> [usize; 4] {
        [self.x0, self.y0, self.w, self.h]
    }
}

fn placements(extent: usize, size: usize, stride: usize) -> Vec<usize> {
    let size = size.min(extent);
    let last = extent - size;
    let mut out: Vec<usize> = (0..=last).step_by(stride).collect();
    if out.last() != Some(&last) {
        out.push(last);
    }
    out
}

/// Window placements at multiples of `stride`, plus right/bottom flush
/// placements wherever the stride grid leaves a margin, in raster order.
/// Windows larger than the image shrink to the image size.
pub fn windows(image_w: usize, image_h: usize, w: usize, h: usize, stride: usize) -> Vec<WindowRect> {
    assert!(w >= 1 && h >= 1 && stride >= 1, "window and stride must be positive");
    let (ww, wh) = (w.min(image_w), h.min(image_h));
    let xs = placements(image_w, w, stride);
    placements(image_h, h, stride)
        .into_iter()
        .flat_map(|y0| xs.iter().map(move |&x0| WindowRect::new(x0, y0, ww, wh)))
        .collect()
}

/// An 8-connected group of edge pixels inside one window. Pixel coordinates
/// are window-local.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Patch {
    pub id: usize,
    pub pixels: Vec<(usize, usize)>,
    /// (min_x, min_y, max_x, max_y), window-local and inclusive.
    pub bbox: (usize, usize, usize, usize),
}

impl Patch {
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    /// Window-sized binary mask containing only this patch.
    pub fn mask(&self, rect: &WindowRect) -> BinaryImage {
        let mut mask = BinaryImage::new(rect.w, rect.h).expect("window is non-empty");
        for &(x, y) in &self.pixels {
            mask.set(x, y, true);
        }
        mask
    }

    /// Raster-first pixel of the patch.
    pub fn first_pixel(&self) -> (usize, usize) {
        self.pixels[0]
    }
}

const NEIGHBORS_8: [(i64, i64); 8] = [(1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1)];

/// Labels 8-connected foreground components inside `rect`, dropping those
/// smaller than `min_patch_pixels`. Patches are numbered in order of their
/// raster-first pixel, and each patch's pixel list is sorted in raster order.
pub fn extract_patches(edges: &BinaryImage, rect: &WindowRect, min_patch_pixels: usize) -> Vec<Patch> {
    let (w, h) = (rect.w, rect.h);
    let inside = |x: usize, y: usize| edges.get(rect.x0 + x, rect.y0 + y);
    let mut seen = vec![false; w * h];
    let mut patches = Vec::new();
    let mut queue = VecDeque::new();
    for y in 0..h {
        for x in 0..w {
            if seen[y * w + x] || !inside(x, y) {
                continue;
            }
            seen[y * w + x] = true;
            queue.push_back((x, y));
            let mut pixels = Vec::new();
            while let Some((cx, cy)) = queue.pop_front() {
                pixels.push((cx, cy));
                for (dx, dy) in NEIGHBORS_8 {
                    let (nx, ny) = (cx as i64 + dx, cy as i64 + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let (nx, ny) = (nx as usize, ny as usize);
                    if !seen[ny * w + nx] && inside(nx, ny) {
                        seen[ny * w + nx] = true;
                        queue.push_back((nx, ny));
                    }
                }
            }
            if pixels.len() < min_patch_pixels.max(1) {
                continue;
            }
            pixels.sort_unstable_by_key(|&(px, py)| (py, px));
            let bbox = pixels.iter().fold(
                (usize::MAX, usize::MAX, 0, 0),
                |(a, b, c, d), &(px, py)| (a.min(px), b.min(py), c.max(px), d.max(py)),
            );
            patches.push(Patch {
                id: patches.len(),
                pixels,
                bbox,
            });
        }
    }
    patches
}

/// Crops `rect` out of `edges` as its own binary image.
pub fn crop(edges: &BinaryImage, rect: &WindowRect) -> Result<BinaryImage> {
    BinaryImage::from_fn(rect.w, rect.h, |x, y| edges.get(rect.x0 + x, rect.y0 + y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn vga_window_count() {
        let ws = windows(640, 480, 64, 64, 32);
        assert_eq!(ws.len(), 19 * 14);
        assert_eq!(ws[0], WindowRect::new(0, 0, 64, 64));
        assert_eq!(ws[1], WindowRect::new(32, 0, 64, 64));
        assert_eq!(ws[19], WindowRect::new(0, 32, 64, 64));
        assert_eq!(*ws.last().unwrap(), WindowRect::new(576, 416, 64, 64));
    }

    #[test]
    fn window_equal_to_image() {
        assert_eq!(windows(64, 48, 64, 48, 16), vec![WindowRect::new(0, 0, 64, 48)]);
    }

    #[test]
    fn oversized_stride_and_window_clamp() {
        assert_eq!(windows(50, 40, 64, 64, 100), vec![WindowRect::new(0, 0, 50, 40)]);
    }

    #[test]
    fn flush_windows_cover_margins() {
        let ws = windows(100, 70, 64, 64, 32);
        assert!(ws.contains(&WindowRect::new(36, 0, 64, 64)));
        assert!(ws.contains(&WindowRect::new(36, 6, 64, 64)));
        // x placements 0, 32, 36; y placements 0, 6
        assert_eq!(ws.len(), 6);
    }

    #[test]
    fn diagonal_of_64_window() {
        assert!((WindowRect::new(0, 0, 64, 64).diagonal() - 8192f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn empty_window_has_no_patches() {
        let img = BinaryImage::new(16, 16).unwrap();
        assert!(extract_patches(&img, &WindowRect::new(0, 0, 16, 16), 1).is_empty());
    }

    #[test]
    fn single_blob() {
        let img = BinaryImage::from_ascii(&[
            "........",
            ".###....",
            "..####..",
            "...###..",
            "....##..",
            "........",
        ])
        .unwrap();
        let patches = extract_patches(&img, &WindowRect::new(0, 0, 8, 6), 1);
        assert_eq!(patches.len(), 1);
        assert_eq!(patches[0].len(), 12);
        assert_eq!(patches[0].first_pixel(), (1, 1));
        assert_eq!(patches[0].bbox, (1, 1, 5, 4));
    }

    #[test]
    fn separated_blobs_and_size_floor() {
        let img = BinaryImage::from_ascii(&[
            "##...#",
            "##...#",
            "......",
            "......",
            "..#...",
        ])
        .unwrap();
        let rect = WindowRect::new(0, 0, 6, 5);
        let patches = extract_patches(&img, &rect, 1);
        assert_eq!(patches.len(), 3);
        assert_eq!(patches[1].pixels, vec![(5, 0), (5, 1)]);
        assert_eq!(extract_patches(&img, &rect, 2).len(), 2);
        assert_eq!(extract_patches(&img, &rect, 4).len(), 1);
    }

    #[test]
    fn patches_are_window_local() {
        let img = BinaryImage::from_fn(20, 20, |x, y| (12..15).contains(&x) && y == 9).unwrap();
        let patches = extract_patches(&img, &WindowRect::new(10, 8, 8, 8), 1);
        assert_eq!(patches[0].pixels, vec![(2, 1), (3, 1), (4, 1)]);
    }

    /// Recursive-free flood fill used as an independent labeling oracle.
    fn oracle_components(img: &BinaryImage) -> Vec<Vec<(usize, usize)>> {
        let (w, h) = (img.width(), img.height());
        let mut label = vec![usize::MAX; w * h];
        let mut comps = Vec::new();
        for y in 0..h {
            for x in 0..w {
                if !img.get(x, y) || label[y * w + x] != usize::MAX {
                    continue;
                }
                let id = comps.len();
                let mut stack = vec![(x, y)];
                let mut members = Vec::new();
                label[y * w + x] = id;
                while let Some((cx, cy)) = stack.pop() {
                    members.push((cx, cy));
                    for ny in cy.saturating_sub(1)..=(cy + 1).min(h - 1) {
                        for nx in cx.saturating_sub(1)..=(cx + 1).min(w - 1) {
                            if img.get(nx, ny) && label[ny * w + nx] == usize::MAX {
                                label[ny * w + nx] = id;
                                stack.push((nx, ny));
                            }
                        }
                    }
                }
                members.sort_unstable_by_key(|&(a, b)| (b, a));
                comps.push(members);
            }
        }
        comps
    }

    #[test]
    fn agrees_with_flood_fill_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let density = rng.random_range(0.1..0.6);
            let (w, h) = (rng.random_range(1..24), rng.random_range(1..24));
            let bits: Vec<bool> = (0..w * h).map(|_| rng.random_bool(density)).collect();
            let img = BinaryImage::from_fn(w, h, |x, y| bits[y * w + x]).unwrap();
            let got: Vec<_> = extract_patches(&img, &WindowRect::new(0, 0, w, h), 1)
                .into_iter()
                .map(|p| p.pixels)
                .collect();
            assert_eq!(got, oracle_components(&img));
        }
    }

    proptest! {
        #[test]
        fn windows_cover_every_pixel(
            iw in 1usize..200, ih in 1usize..200,
            w in 1usize..80, h in 1usize..80, stride in 1usize..90,
        ) {
            prop_assume!(stride <= w.min(h));
            let ws = windows(iw, ih, w, h, stride);
            let mut covered = vec![false; iw * ih];
            for r in &ws {
                prop_assert!(r.x0 + r.w <= iw && r.y0 + r.h <= ih);
                for y in r.y0..r.y0 + r.h {
                    for x in r.x0..r.x0 + r.w {
                        covered[y * iw + x] = true;
                    }
                }
            }
            prop_assert!(covered.iter().all(|&c| c));
            prop_assert_eq!(ws, windows(iw, ih, w, h, stride));
        }

        #[test]
        fn patches_partition_retained_foreground(
            bits in prop::collection::vec(any::<bool>(), 144),
            floor in 1usize..6,
        ) {
            let img = BinaryImage::from_fn(12, 12, |x, y| bits[y * 12 + x]).unwrap();
            let patches = extract_patches(&img, &WindowRect::new(0, 0, 12, 12), floor);
            let mut seen = std::collections::HashSet::new();
            for p in &patches {
                prop_assert!(p.len() >= floor);
                for &px in &p.pixels {
                    prop_assert!(img.get(px.0, px.1));
                    prop_assert!(seen.insert(px));
                }
            }
            let retained: usize = oracle_components(&img)
                .iter()
                .filter(|c| c.len() >= floor)
                .map(Vec::len)
                .sum();
            prop_assert_eq!(seen.len(), retained);
        }
    }
}
