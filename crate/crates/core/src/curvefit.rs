//! Centerline recovery from a traced contour and polynomial intersection.
//!
//! A contour is folded onto itself: point `i` is paired with point `L-1-i`
//! and the pair midpoints trace the middle of the patch. A least-squares
//! polynomial through those midpoints stands in for the wire segment, and
//! crossings of two such polynomials inside a window mark candidate tangles.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::Point;
use crate::scanner::WindowRect;
use crate::tracer::Contour;

/// Pair midpoints of a contour and their arithmetic mean.
#[derive(Debug, Clone, PartialEq)]
pub struct Midpoints {
    pub points: Vec<Point>,
    pub mean: Point,
}

impl Midpoints {
    pub fn from_points(points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::UnfittablePatch("no midpoints".into()));
        }
        let n = points.len() as f64;
        let sx: f64 = points.iter().map(|p| p.x).sum();
        let sy: f64 = points.iter().map(|p| p.y).sum();
        Ok(Self {
            points,
            mean: Point::new(sx / n, sy / n),
        })
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        Self {
            points: self.points.iter().map(|p| p.translate(dx, dy)).collect(),
            mean: self.mean.translate(dx, dy),
        }
    }
}

/// Folds the contour: index `i` pairs with `L-1-i` for `i < ceil(L/2)`, the
/// middle element of an odd-length contour pairing with itself.
pub fn pair_midpoints(contour: &Contour) -> Result<Midpoints> {
    let pts = &contour.points;
    let len = pts.len();
    let points = (0..len.div_ceil(2))
        .map(|i| {
            let (a, b) = (pts[i], pts[len - 1 - i]);
            Point::new((a.0 + b.0) as f64 / 2.0, (a.1 + b.1) as f64 / 2.0)
        })
        .collect();
    Midpoints::from_points(points)
}

/// Which coordinate is the independent variable of a centerline polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    /// y = p(x)
    XMajor,
    /// x = p(y)
    YMajor,
}

impl Axis {
    fn split(self, p: Point) -> (f64, f64) {
        match self {
            Axis::XMajor => (p.x, p.y),
            Axis::YMajor => (p.y, p.x),
        }
    }

    fn join(self, abscissa: f64, ordinate: f64) -> Point {
        match self {
            Axis::XMajor => Point::new(abscissa, ordinate),
            Axis::YMajor => Point::new(ordinate, abscissa),
        }
    }
}

/// Polynomial centerline. Coefficients apply to the normalized abscissa
/// `t = (u - center) / scale`, lowest order first.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterlinePoly {
    pub axis: Axis,
    pub degree: usize,
    pub coefficients: Vec<f64>,
    pub center: f64,
    pub scale: f64,
    pub rms_residual: f64,
    /// Condition number of the normal matrix in the normalized basis.
    pub condition: f64,
}

impl CenterlinePoly {
    /// Builds a polynomial directly from monomial coefficients in the raw
    /// abscissa (lowest order first).
    pub fn from_monomial(axis: Axis, coefficients: Vec<f64>) -> Self {
        assert!(!coefficients.is_empty());
        Self {
            axis,
            degree: coefficients.len() - 1,
            coefficients,
            center: 0.0,
            scale: 1.0,
            rms_residual: 0.0,
            condition: 1.0,
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        let t = (u - self.center) / self.scale;
        self.coefficients.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    /// d/du of the polynomial.
    pub fn derivative(&self, u: f64) -> f64 {
        let t = (u - self.center) / self.scale;
        let dt = self
            .coefficients
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, &c)| acc * t + k as f64 * c);
        dt / self.scale
    }

    pub fn point_at(&self, u: f64) -> Point {
        self.axis.join(u, self.eval(u))
    }

    /// Independent-variable value of a point.
    pub fn abscissa_of(&self, p: Point) -> f64 {
        self.axis.split(p).0
    }

    /// Unit-free tangent direction (dx, dy) at abscissa `u`.
    pub fn tangent(&self, u: f64) -> (f64, f64) {
        let slope = self.derivative(u);
        match self.axis {
            Axis::XMajor => (1.0, slope),
            Axis::YMajor => (slope, 1.0),
        }
    }

    /// Orientation of the curve near `p`, in degrees within [0, 180).
    pub fn orientation_at(&self, p: Point) -> f64 {
        let (dx, dy) = self.tangent(self.abscissa_of(p));
        dy.atan2(dx).to_degrees().rem_euclid(180.0)
    }

    /// Shifts the curve by (dx, dy) in image space.
    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        let (du, dv) = self.axis.split(Point::new(dx, dy));
        let mut out = self.clone();
        out.center += du;
        out.coefficients[0] += dv;
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub max_degree: usize,
    pub tolerance_px: f64,
    pub max_condition: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_degree: 5,
            tolerance_px: 1.5,
            max_condition: 1e8,
        }
    }
}

fn distinct_count(values: &[f64]) -> usize {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}

/// Axis with the larger extent; ties go to x.
pub fn choose_axis(points: &[Point]) -> Axis {
    let extent = |f: fn(&Point) -> f64| {
        let (lo, hi) = points
            .iter()
            .map(f)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        hi - lo
    };
    if extent(|p| p.x) >= extent(|p| p.y) {
        Axis::XMajor
    } else {
        Axis::YMajor
    }
}

/// Least-squares polynomial of exactly `degree` along `axis`.
pub fn least_squares(points: &[Point], axis: Axis, degree: usize) -> Result<CenterlinePoly> {
    let (us, vs): (Vec<f64>, Vec<f64>) = points.iter().map(|&p| axis.split(p)).unzip();
    let distinct = distinct_count(&us);
    if distinct < 2 || degree + 1 > distinct {
        return Err(Error::UnfittablePatch(format!(
            "degree {degree} needs {} distinct abscissae, have {distinct}",
            degree + 1
        )));
    }
    let (lo, hi) = us
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &u| (a.min(u), b.max(u)));
    let center = (lo + hi) / 2.0;
    let scale = (hi - lo) / 2.0;

    let n = us.len();
    let cols = degree + 1;
    let a = DMatrix::from_fn(n, cols, |r, c| ((us[r] - center) / scale).powi(c as i32));
    let b = DVector::from_column_slice(&vs);

    let normal = a.transpose() * &a;
    let eig = SymmetricEigen::new(normal).eigenvalues;
    let (lmin, lmax) = eig
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &l| (lo.min(l), hi.max(l.abs())));
    let condition = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };

    let coef = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::UnfittablePatch(e.to_string()))?;
    let residual = &a * &coef - &b;
    let rms_residual = (residual.norm_squared() / n as f64).sqrt();

    Ok(CenterlinePoly {
        axis,
        degree,
        coefficients: coef.iter().copied().collect(),
        center,
        scale,
        rms_residual,
        condition,
    })
}

/// Fits a centerline with the top-down degree search: start from the highest
/// admissible degree and step down until a fit is well conditioned and within
/// tolerance. Degree 1 is always accepted.
pub fn fit_polynomial(mids: &Midpoints, config: &FitConfig) -> Result<CenterlinePoly> {
    let axis = choose_axis(&mids.points);
    let abscissae: Vec<f64> = mids.points.iter().map(|&p| axis.split(p).0).collect();
    let distinct = distinct_count(&abscissae);
    if distinct < 2 {
        return Err(Error::UnfittablePatch(format!(
            "{} midpoints with a single distinct position",
            mids.points.len()
        )));
    }
    let top = config.max_degree.clamp(1, 5).min(distinct - 1);
    for degree in (1..=top).rev() {
        let poly = least_squares(&mids.points, axis, degree)?;
        if degree == 1 || (poly.condition <= config.max_condition && poly.rms_residual <= config.tolerance_px) {
            return Ok(poly);
        }
    }
    unreachable!("degree 1 is always accepted")
}

/// Per-patch geometry gathered for the over/under decision.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchAnalysis {
    pub patch_id: usize,
    pub midpoints: Midpoints,
    pub poly: CenterlinePoly,
}

impl PatchAnalysis {
    /// How far beyond the patch's own midpoints `p` lies, measured along the
    /// fit's abscissa. Zero inside the midpoint span.
    pub fn extrapolation(&self, p: Point) -> f64 {
        let (lo, hi) = self
            .midpoints
            .points
            .iter()
            .map(|&m| self.poly.abscissa_of(m))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), u| (a.min(u), b.max(u)));
        let u = self.poly.abscissa_of(p);
        (lo - u).max(u - hi).max(0.0)
    }

    /// Principal-axis orientation of the midpoints, degrees in [0, 180).
    /// Unlike the fit's local slope this does not swing with high-degree
    /// wiggle, so it is the better summary of which way a patch runs.
    pub fn principal_angle(&self) -> f64 {
        let m = self.midpoints.mean;
        let (sxx, syy, sxy) = self.midpoints.points.iter().fold((0.0, 0.0, 0.0), |(a, b, c), p| {
            let (dx, dy) = (p.x - m.x, p.y - m.y);
            (a + dx * dx, b + dy * dy, c + dx * dy)
        });
        (0.5 * (2.0 * sxy).atan2(sxx - syy)).to_degrees().rem_euclid(180.0)
    }

    /// Extent of the midpoints along the principal axis.
    pub fn length(&self) -> f64 {
        let (s, c) = self.principal_angle().to_radians().sin_cos();
        let m = self.midpoints.mean;
        let (lo, hi) = self.midpoints.points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            let t = (p.x - m.x) * c + (p.y - m.y) * s;
            (lo.min(t), hi.max(t))
        });
        hi - lo
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntersectionPoint {
    pub position: Point,
    pub patches: (usize, usize),
    /// Acute angle between the two curves at the crossing, degrees in [0, 90].
    pub crossing_angle: f64,
}

const ROOT_TOLERANCE: f64 = 1e-6;

fn bisect(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let lo_positive = f(lo) > 0.0;
    while hi - lo > ROOT_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Roots of `f` on [start, end], found on a unit grid and refined by bisection.
fn grid_roots(f: &dyn Fn(f64) -> f64, start: f64, end: f64) -> Vec<f64> {
    let steps = (end - start).round() as usize;
    let samples: Vec<(f64, f64)> = (0..=steps)
        .map(|k| {
            let u = start + k as f64;
            (u, f(u))
        })
        .collect();
    let mut roots = Vec::new();
    for (k, &(u, fu)) in samples.iter().enumerate() {
        if fu == 0.0 {
            roots.push(u);
            continue;
        }
        if let Some(&(v, fv)) = samples.get(k + 1) {
            if fv != 0.0 && (fu > 0.0) != (fv > 0.0) {
                roots.push(bisect(f, u, v));
            }
        }
    }
    roots
}

fn span(rect: &WindowRect, axis: Axis) -> (f64, f64) {
    match axis {
        Axis::XMajor => (rect.x0 as f64, (rect.x0 + rect.w - 1) as f64),
        Axis::YMajor => (rect.y0 as f64, (rect.y0 + rect.h - 1) as f64),
    }
}

fn acute_angle(a: (f64, f64), b: (f64, f64)) -> f64 {
    let dot = (a.0 * b.0 + a.1 * b.1).abs();
    let norm = a.0.hypot(a.1) * b.0.hypot(b.1);
    (dot / norm).clamp(0.0, 1.0).acos().to_degrees()
}

/// Crossing of two centerlines inside `rect`. When several roots fall in the
/// window, the one closest (summed distance) to the two anchors wins.
/// Returns the point and the acute crossing angle in degrees.
pub fn intersect_polys(
    p: &CenterlinePoly,
    q: &CenterlinePoly,
    rect: &WindowRect,
    anchors: (Point, Point),
) -> Option<(Point, f64)> {
    // canonical order keeps the result independent of argument order
    let (p, q) = match (p.axis, q.axis) {
        (Axis::YMajor, Axis::XMajor) => (q, p),
        _ => (p, q),
    };
    let mut candidates: Vec<Point> = Vec::new();
    if p.axis == q.axis {
        let (lo, hi) = span(rect, p.axis);
        let f = |u: f64| p.eval(u) - q.eval(u);
        // averaging the two ordinates keeps the point independent of argument order
        candidates.extend(
            grid_roots(&f, lo, hi)
                .into_iter()
                .map(|u| p.axis.join(u, 0.5 * (p.eval(u) + q.eval(u)))),
        );
    } else {
        // p: y = p(x), q: x = q(y)
        let (xlo, xhi) = span(rect, Axis::XMajor);
        let g = |x: f64| q.eval(p.eval(x)) - x;
        candidates.extend(grid_roots(&g, xlo, xhi).into_iter().map(|x| p.point_at(x)));
        let (ylo, yhi) = span(rect, Axis::YMajor);
        let h = |y: f64| p.eval(q.eval(y)) - y;
        candidates.extend(grid_roots(&h, ylo, yhi).into_iter().map(|y| q.point_at(y)));
    }
    let score = |c: &Point| c.distance(anchors.0) + c.distance(anchors.1);
    let best = candidates
        .into_iter()
        .filter(|c| rect.contains(*c))
        .min_by(|a, b| score(a).total_cmp(&score(b)))?;
    let angle = acute_angle(
        p.tangent(p.abscissa_of(best)),
        q.tangent(q.abscissa_of(best)),
    );
    Some((best, angle))
}

pub fn intersect(a: &PatchAnalysis, b: &PatchAnalysis, rect: &WindowRect) -> Option<IntersectionPoint> {
    let anchors = (a.midpoints.mean, b.midpoints.mean);
    intersect_polys(&a.poly, &b.poly, rect, anchors).map(|(position, crossing_angle)| IntersectionPoint {
        position,
        patches: (a.patch_id.min(b.patch_id), a.patch_id.max(b.patch_id)),
        crossing_angle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::BinaryImage;
    use crate::tracer::{find_start, trace_contour, Connectivity};
    use proptest::prelude::*;

    fn contour(points: &[(usize, usize)]) -> Contour {
        Contour {
            points: points.to_vec(),
            connectivity: Connectivity::Eight,
        }
    }

    fn pts(v: &[(f64, f64)]) -> Vec<Point> {
        v.iter().map(|&(x, y)| Point::new(x, y)).collect()
    }

    #[test]
    fn run_of_three_midpoints() {
        let m = pair_midpoints(&contour(&[(0, 0), (1, 0), (2, 0), (1, 0)])).unwrap();
        assert_eq!(m.points, pts(&[(0.5, 0.0), (1.5, 0.0)]));
        assert_eq!(m.mean, Point::new(1.0, 0.0));
    }

    #[test]
    fn single_point_pairs_with_itself() {
        let m = pair_midpoints(&contour(&[(4, 7)])).unwrap();
        assert_eq!(m.points, pts(&[(4.0, 7.0)]));
        assert_eq!(m.mean, Point::new(4.0, 7.0));
    }

    #[test]
    fn odd_contour_middle_self_pairs() {
        let m = pair_midpoints(&contour(&[(0, 0), (2, 0), (4, 0)])).unwrap();
        assert_eq!(m.points, pts(&[(2.0, 0.0), (2.0, 0.0)]));
    }

    #[test]
    fn thick_bar_midpoints_follow_centerline() {
        let img = BinaryImage::from_fn(12, 4, |x, y| (1..11).contains(&x) && (1..3).contains(&y)).unwrap();
        let c = trace_contour(&img, find_start(&img).unwrap(), Connectivity::Eight).unwrap();
        let m = pair_midpoints(&c).unwrap();
        let center_y = 1.5;
        // the fold at each end pairs two pixels from the same row
        let last = m.points.len() - 1;
        for (i, p) in m.points.iter().enumerate() {
            if i == 0 || i == last {
                assert!((p.y - center_y).abs() <= 0.5);
            } else {
                assert_eq!(p.y, center_y);
            }
        }
        assert!((m.mean.y - center_y).abs() < 0.1);
    }

    /// Normal-equations oracle in the raw monomial basis, solved with
    /// Gaussian elimination with partial pivoting.
    fn normal_equation_oracle(points: &[Point], degree: usize) -> Vec<f64> {
        let n = degree + 1;
        let mut m = vec![vec![0.0; n + 1]; n];
        for p in points {
            for r in 0..n {
                for c in 0..n {
                    m[r][c] += p.x.powi((r + c) as i32);
                }
                m[r][n] += p.y * p.x.powi(r as i32);
            }
        }
        for col in 0..n {
            let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())).unwrap();
            m.swap(col, piv);
            for r in 0..n {
                if r != col {
                    let f = m[r][col] / m[col][col];
                    for c in col..=n {
                        m[r][c] -= f * m[col][c];
                    }
                }
            }
        }
        (0..n).map(|r| m[r][n] / m[r][r]).collect()
    }

    /// Distance along the ordinate between `p` and the curve.
    fn ordinate_error(poly: &CenterlinePoly, p: Point) -> f64 {
        let expected = match poly.axis {
            Axis::XMajor => p.y,
            Axis::YMajor => p.x,
        };
        (poly.eval(poly.abscissa_of(p)) - expected).abs()
    }

    fn eval_monomial(c: &[f64], x: f64) -> f64 {
        c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
    }

    #[test]
    fn recovers_exact_line() {
        let points: Vec<Point> = (0..6).map(|i| Point::new(i as f64, 2.0 * i as f64 + 1.0)).collect();
        let oracle = normal_equation_oracle(&points, 1);
        assert!((oracle[0] - 1.0).abs() < 1e-9 && (oracle[1] - 2.0).abs() < 1e-9);
        let poly = fit_polynomial(&Midpoints::from_points(points.clone()).unwrap(), &FitConfig::default()).unwrap();
        // y spans twice the x range, so the fit runs along y
        assert_eq!(poly.axis, Axis::YMajor);
        for p in &points {
            assert!(ordinate_error(&poly, Point::new(p.x, eval_monomial(&oracle, p.x))) < 1e-6);
        }
    }

    #[test]
    fn two_points_force_a_line() {
        let points = pts(&[(1.0, 3.0), (5.0, -1.0)]);
        let poly = fit_polynomial(&Midpoints::from_points(points).unwrap(), &FitConfig::default()).unwrap();
        assert_eq!(poly.degree, 1);
        assert!(poly.rms_residual < 1e-12);
        assert!((poly.eval(3.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn recovers_exact_parabola() {
        let points: Vec<Point> = (0..8).map(|i| Point::new(i as f64, (i * i) as f64)).collect();
        let oracle = normal_equation_oracle(&points, 2);
        let poly = least_squares(&points, Axis::XMajor, 2).unwrap();
        for p in &points {
            assert!((eval_monomial(&oracle, p.x) - p.y).abs() < 1e-6);
            assert!(ordinate_error(&poly, *p) < 1e-6);
        }
        // a flatter parabola is wider than tall, so the degree search sees it along x
        let flat: Vec<Point> = (0..8).map(|i| Point::new(i as f64, (i * i) as f64 / 10.0)).collect();
        let poly = fit_polynomial(&Midpoints::from_points(flat.clone()).unwrap(), &FitConfig::default()).unwrap();
        assert_eq!(poly.axis, Axis::XMajor);
        for p in &flat {
            assert!(ordinate_error(&poly, *p) < 1e-6);
        }
    }

    #[test]
    fn tall_point_sets_fit_y_major() {
        let points: Vec<Point> = (0..10).map(|i| Point::new(3.0, i as f64)).collect();
        let poly = fit_polynomial(&Midpoints::from_points(points).unwrap(), &FitConfig::default()).unwrap();
        assert_eq!(poly.axis, Axis::YMajor);
        assert!((poly.eval(4.5) - 3.0).abs() < 1e-9);
    }

    #[test]
    fn single_location_is_unfittable() {
        let m = Midpoints::from_points(pts(&[(2.0, 2.0), (2.0, 2.0)])).unwrap();
        assert!(matches!(fit_polynomial(&m, &FitConfig::default()), Err(Error::UnfittablePatch(_))));
    }

    #[test]
    fn noisy_data_steps_down_to_a_line() {
        // a zig-zag no polynomial up to degree 5 follows within tolerance
        let points: Vec<Point> = (0..30)
            .map(|i| Point::new(i as f64, if i % 2 == 0 { 0.0 } else { 6.0 }))
            .collect();
        let poly = fit_polynomial(&Midpoints::from_points(points).unwrap(), &FitConfig::default()).unwrap();
        assert_eq!(poly.degree, 1);
    }

    fn window10() -> WindowRect {
        WindowRect::new(0, 0, 11, 11)
    }

    fn line(c0: f64, c1: f64) -> CenterlinePoly {
        CenterlinePoly::from_monomial(Axis::XMajor, vec![c0, c1])
    }

    #[test]
    fn crossing_lines() {
        let anchors = (Point::new(0.0, 0.0), Point::new(2.0, 0.0));
        let (p, angle) = intersect_polys(&line(0.0, 1.0), &line(2.0, -1.0), &window10(), anchors).unwrap();
        assert!((p.x - 1.0).abs() < 1e-6 && (p.y - 1.0).abs() < 1e-6);
        assert!((angle - 90.0).abs() < 1e-9);
    }

    #[test]
    fn parallel_lines_do_not_meet() {
        let anchors = (Point::default(), Point::default());
        assert!(intersect_polys(&line(1.0, 0.0), &line(3.0, 0.0), &window10(), anchors).is_none());
    }

    #[test]
    fn parabola_and_line_keep_in_window_root() {
        let parabola = CenterlinePoly::from_monomial(Axis::XMajor, vec![0.0, 0.0, 1.0]);
        let anchors = (Point::new(1.0, 1.0), Point::new(3.0, 5.0));
        let (p, _) = intersect_polys(&parabola, &line(2.0, 1.0), &window10(), anchors).unwrap();
        assert!((p.x - 2.0).abs() < 1e-6 && (p.y - 4.0).abs() < 1e-6);
    }

    #[test]
    fn mixed_axis_crossing() {
        // y = 0.5 x + 1 against x = -0.25 y + 6  ->  (46/9, 32/9)
        let p = line(1.0, 0.5);
        let q = CenterlinePoly::from_monomial(Axis::YMajor, vec![6.0, -0.25]);
        let anchors = (Point::new(2.0, 2.0), Point::new(5.0, 5.0));
        let (a, _) = intersect_polys(&p, &q, &window10(), anchors).unwrap();
        let (b, _) = intersect_polys(&q, &p, &window10(), anchors).unwrap();
        assert!((a.x - 46.0 / 9.0).abs() < 1e-5 && (a.y - 32.0 / 9.0).abs() < 1e-5);
        assert_eq!(a, b);
    }

    #[test]
    fn multiple_roots_pick_nearest_anchors() {
        // y = (x-2)(x-8) + 5 meets y = 5 at x = 2 and x = 8
        let p = CenterlinePoly::from_monomial(Axis::XMajor, vec![21.0, -10.0, 1.0]);
        let q = line(5.0, 0.0);
        let near_right = (Point::new(9.0, 5.0), Point::new(7.0, 5.0));
        let (pt, _) = intersect_polys(&p, &q, &window10(), near_right).unwrap();
        assert!((pt.x - 8.0).abs() < 1e-6);
        let near_left = (Point::new(1.0, 5.0), Point::new(3.0, 5.0));
        let (pt, _) = intersect_polys(&p, &q, &window10(), near_left).unwrap();
        assert!((pt.x - 2.0).abs() < 1e-6);
    }

    #[test]
    fn orientation_reads_tangent() {
        assert!((line(0.0, 1.0).orientation_at(Point::new(3.0, 3.0)) - 45.0).abs() < 1e-9);
        assert!((line(0.0, -1.0).orientation_at(Point::new(3.0, -3.0)) - 135.0).abs() < 1e-9);
        let vertical = CenterlinePoly::from_monomial(Axis::YMajor, vec![4.0, 0.0]);
        assert!((vertical.orientation_at(Point::new(4.0, 2.0)) - 90.0).abs() < 1e-9);
    }

    fn poly_strategy() -> impl Strategy<Value = CenterlinePoly> {
        (any::<bool>(), prop::collection::vec(-2.0f64..2.0, 2..4), 0.0f64..40.0).prop_map(|(ymaj, mut c, off)| {
            c[0] = off;
            let axis = if ymaj { Axis::YMajor } else { Axis::XMajor };
            // keep curvature mild inside a 40 px window
            for (k, v) in c.iter_mut().enumerate().skip(2) {
                *v *= 0.05f64.powi(k as i32 - 1);
            }
            CenterlinePoly::from_monomial(axis, c)
        })
    }

    proptest! {
        #[test]
        fn midpoints_stay_within_contour_bounds(raw in prop::collection::vec((0usize..30, 0usize..30), 1..40)) {
            let m = pair_midpoints(&contour(&raw)).unwrap();
            let (xs, ys): (Vec<usize>, Vec<usize>) = raw.iter().copied().unzip();
            let (xl, xh) = (*xs.iter().min().unwrap() as f64, *xs.iter().max().unwrap() as f64);
            let (yl, yh) = (*ys.iter().min().unwrap() as f64, *ys.iter().max().unwrap() as f64);
            for p in &m.points {
                prop_assert!(p.x >= xl && p.x <= xh && p.y >= yl && p.y <= yh);
            }
        }

        #[test]
        fn residual_never_grows_with_degree(ys in prop::collection::vec(-20.0f64..20.0, 8..30)) {
            let points: Vec<Point> = ys.iter().enumerate().map(|(i, &y)| Point::new(i as f64 * 1.5, y)).collect();
            let mut prev = f64::INFINITY;
            for m in 1..=5 {
                let r = least_squares(&points, Axis::XMajor, m).unwrap().rms_residual;
                prop_assert!(r <= prev + 1e-9);
                prev = r;
            }
        }

        #[test]
        fn intersection_is_symmetric(p in poly_strategy(), q in poly_strategy()) {
            let rect = WindowRect::new(0, 0, 41, 41);
            let anchors = (Point::new(10.0, 10.0), Point::new(30.0, 30.0));
            let a = intersect_polys(&p, &q, &rect, anchors);
            let b = intersect_polys(&q, &p, &rect, (anchors.1, anchors.0));
            prop_assert_eq!(a.is_some(), b.is_some());
            if let (Some((a, _)), Some((b, _))) = (a, b) {
                prop_assert!(a.distance(b) < 1e-6);
            }
        }

        #[test]
        fn intersection_translates(p in poly_strategy(), q in poly_strategy(), dx in 0usize..300, dy in 0usize..300) {
            let rect = WindowRect::new(0, 0, 41, 41);
            let anchors = (Point::new(10.0, 10.0), Point::new(30.0, 30.0));
            let base = intersect_polys(&p, &q, &rect, anchors);
            let (fx, fy) = (dx as f64, dy as f64);
            let moved = intersect_polys(
                &p.translate(fx, fy),
                &q.translate(fx, fy),
                &rect.translate(dx, dy),
                (anchors.0.translate(fx, fy), anchors.1.translate(fx, fy)),
            );
            prop_assert_eq!(base.is_some(), moved.is_some());
            if let (Some((a, _)), Some((b, _))) = (base, moved) {
                prop_assert!(a.translate(fx, fy).distance(b) < 1e-6);
            }
        }
    }
}
