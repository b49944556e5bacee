//! Closed curves on the unit sphere: construction, arc-length resampling,
//! normal fields, self-intersection checks, and the cylindrical
//! crossing-measure diagnostic.

use crate::error::{Error, Result};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

/// Geodesic distance between two unit vectors, computed from the chord so it
/// stays accurate for nearly-coincident points.
pub fn geodesic_gap(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let chord = (a - b).norm();
    2.0 * (0.5 * chord).clamp(-1.0, 1.0).asin()
}

/// Spherical linear interpolation; falls back to normalized linear
/// interpolation when the points nearly coincide.
fn slerp(a: &Vector3<f64>, b: &Vector3<f64>, t: f64) -> Vector3<f64> {
    let omega = geodesic_gap(a, b);
    if omega < 1e-8 {
        return (a * (1.0 - t) + b * t).normalize();
    }
    let so = omega.sin();
    (a * ((1.0 - t) * omega).sin() + b * ((t * omega).sin())) / so
}

/// Deterministic right-handed orthonormal frame (u, v, e) for a unit axis e.
pub fn axis_frame(e: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let pick = if e.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    let u = (pick - e * pick.dot(e)).normalize();
    let v = e.cross(&u);
    (u, v)
}

/// A closed or open polyline of unit vectors on S^2 with its cumulative
/// arc-length table (geodesic gaps between consecutive samples).
#[derive(Clone, Debug)]
pub struct SphericalCurve {
    samples: Vec<Vector3<f64>>,
    closed: bool,
    arclength: Vec<f64>,
}

impl SphericalCurve {
    /// Validates unit norms (renormalizing drifts below 1e-6) and rejects
    /// repeated points, then builds the arc-length table.
    pub fn new(samples: Vec<Vector3<f64>>, closed: bool) -> Result<Self> {
        if samples.len() < if closed { 3 } else { 2 } {
            return Err(Error::Curve(format!(
                "need at least {} samples, got {}",
                if closed { 3 } else { 2 },
                samples.len()
            )));
        }
        let mut pts = Vec::with_capacity(samples.len());
        for (i, p) in samples.iter().enumerate() {
            let n = p.norm();
            if !n.is_finite() || (n - 1.0).abs() > 1e-6 {
                return Err(Error::Curve(format!(
                    "sample {i} has norm {n}, not on the unit sphere"
                )));
            }
            // renormalize drifted points; leave already-unit ones untouched
            // (64 ulp, beyond one division's worst-case drift) so the map is
            // idempotent and import/export round-trips are bitwise exact
            if (n - 1.0).abs() <= 64.0 * f64::EPSILON {
                pts.push(*p);
            } else {
                pts.push(p / n);
            }
        }
        let m = pts.len();
        let gap_count = if closed { m } else { m - 1 };
        let mut arclength = Vec::with_capacity(gap_count + 1);
        arclength.push(0.0);
        let mut acc = 0.0;
        for i in 0..gap_count {
            let g = geodesic_gap(&pts[i], &pts[(i + 1) % m]);
            if g < 1e-12 {
                return Err(Error::Curve(format!(
                    "samples {i} and {} coincide",
                    (i + 1) % m
                )));
            }
            acc += g;
            arclength.push(acc);
        }
        Ok(SphericalCurve {
            samples: pts,
            closed,
            arclength,
        })
    }

    pub fn samples(&self) -> &[Vector3<f64>] {
        &self.samples
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Cumulative arc length; entry i is the length up to sample i, and the
    /// last entry is the total (including the wrap gap when closed).
    pub fn arclength(&self) -> &[f64] {
        &self.arclength
    }

    pub fn total_length(&self) -> f64 {
        *self.arclength.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Geodesic gap following sample i.
    pub fn gap(&self, i: usize) -> f64 {
        self.arclength[i + 1] - self.arclength[i]
    }

    /// Trapezoid quadrature weights in arc length, one per sample
    /// (cyclic average of the adjacent gaps for closed curves, half-gaps at
    /// the ends of open ones).
    pub fn arc_weights(&self) -> Vec<f64> {
        let n = self.samples.len();
        if self.closed {
            (0..n)
                .map(|i| 0.5 * (self.gap((i + n - 1) % n) + self.gap(i)))
                .collect()
        } else {
            (0..n)
                .map(|i| {
                    let left = if i > 0 { self.gap(i - 1) } else { 0.0 };
                    let right = if i + 1 < n { self.gap(i) } else { 0.0 };
                    0.5 * (left + right)
                })
                .collect()
        }
    }

    /// True when consecutive gaps are equal within `rel` relative deviation.
    pub fn is_uniform(&self, rel: f64) -> bool {
        let n_gaps = self.arclength.len() - 1;
        let mean = self.total_length() / n_gaps as f64;
        (0..n_gaps).all(|i| (self.gap(i) - mean).abs() <= rel * mean)
    }

    /// Point at arc-length position sigma along the polyline (geodesic
    /// interpolation within segments); sigma wraps for closed curves.
    pub fn point_at(&self, sigma: f64) -> Vector3<f64> {
        let total = self.total_length();
        let s = if self.closed {
            sigma.rem_euclid(total)
        } else {
            sigma.clamp(0.0, total)
        };
        // last index with arclength[i] <= s
        let i = match self
            .arclength
            .binary_search_by(|a| a.partial_cmp(&s).unwrap())
        {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let i = i.min(self.arclength.len() - 2);
        let g = self.gap(i);
        let t = if g > 0.0 { (s - self.arclength[i]) / g } else { 0.0 };
        let a = &self.samples[i];
        let b = &self.samples[(i + 1) % self.samples.len()];
        slerp(a, b, t.clamp(0.0, 1.0))
    }
}

/// Circle {x . axis = cos(polar)} sampled uniformly with n points, oriented
/// counterclockwise around the axis. With this orientation the normal field
/// gamma x gamma' points along +axis.
pub fn make_circle(axis: &Vector3<f64>, polar: f64, n: usize) -> Result<SphericalCurve> {
    if !(polar > 0.0 && polar < std::f64::consts::PI) {
        return Err(Error::Domain(format!(
            "polar angle must lie strictly in (0, pi), got {polar}"
        )));
    }
    if n < 3 {
        return Err(Error::Curve("circle needs at least 3 samples".into()));
    }
    let e = axis.normalize();
    let (u, v) = axis_frame(&e);
    let (sp, cp) = polar.sin_cos();
    let samples = (0..n)
        .map(|i| {
            let th = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            let (st, ct) = th.sin_cos();
            u * (sp * ct) + v * (sp * st) + e * cp
        })
        .collect();
    SphericalCurve::new(samples, true)
}

/// Circle perturbed by a latitude profile z(theta) = sum_k a_k cos(k theta)
/// (k starting at 1), projected back to the sphere. The profile must keep
/// the curve inside the band |x . axis| < 1/2, which also guarantees the
/// theta-parametrization stays injective; violations are rejected, as are
/// self-intersecting results.
pub fn make_perturbed_circle(
    axis: &Vector3<f64>,
    amplitudes: &[f64],
    n: usize,
) -> Result<SphericalCurve> {
    if n < 16 {
        return Err(Error::Curve("perturbed circle needs at least 16 samples".into()));
    }
    let e = axis.normalize();
    let (u, v) = axis_frame(&e);
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let th = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
        let z: f64 = amplitudes
            .iter()
            .enumerate()
            .map(|(k, a)| a * ((k + 1) as f64 * th).cos())
            .sum();
        let (st, ct) = th.sin_cos();
        let p = u * ct + v * st + e * z;
        let q = p.normalize();
        let lat = q.dot(&e);
        if lat.abs() >= 0.5 {
            return Err(Error::Curve(format!(
                "perturbation leaves the validity band: |x.axis| = {:.3} >= 1/2 at theta = {th:.3}",
                lat.abs()
            )));
        }
        samples.push(q);
    }
    let curve = SphericalCurve::new(samples, true)?;
    if !self_intersection_check(&curve) {
        return Err(Error::Curve(
            "perturbed circle self-intersects at this amplitude".into(),
        ));
    }
    Ok(curve)
}

/// Figure-eight on the sphere (a Lissajous curve crossing itself at the
/// equator point theta = 0): longitude 1.2 sin t, latitude 0.6 sin 2t.
pub fn make_figure_eight(n: usize) -> Result<SphericalCurve> {
    if n < 16 {
        return Err(Error::Curve("figure eight needs at least 16 samples".into()));
    }
    let samples = (0..n)
        .map(|i| {
            let t = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            let lon = 1.2 * t.sin();
            let lat = 0.6 * (2.0 * t).sin();
            let (sl, cl) = lat.sin_cos();
            let (so, co) = lon.sin_cos();
            Vector3::new(cl * co, cl * so, sl)
        })
        .collect();
    SphericalCurve::new(samples, true)
}

/// Resamples a curve to n samples equispaced in measured arc length.
///
/// Starts from the cumulative-length inversion of the input polyline and
/// then equalizes the measured gaps by a fixed-point iteration, anchoring
/// the first sample. Resampling an already-uniform curve is idempotent.
pub fn resample_arclength(curve: &SphericalCurve, n: usize) -> Result<SphericalCurve> {
    if n < 16 {
        return Err(Error::Curve(format!("resampling needs n >= 16, got {n}")));
    }
    if curve.len() < 4 {
        return Err(Error::Curve("too few input samples to resample".into()));
    }
    if !curve.closed {
        return Err(Error::Curve("resampling is defined for closed curves".into()));
    }
    let l_in = curve.total_length();
    let nf = n as f64;
    // positions along the input polyline, anchored at sample 0
    let mut pos: Vec<f64> = (0..n).map(|j| l_in * j as f64 / nf).collect();
    for _ in 0..6 {
        let pts: Vec<Vector3<f64>> = pos.iter().map(|&s| curve.point_at(s)).collect();
        // measured cumulative gaps of the current candidate
        let mut cum = Vec::with_capacity(n + 1);
        cum.push(0.0);
        let mut acc = 0.0;
        for j in 0..n {
            acc += geodesic_gap(&pts[j], &pts[(j + 1) % n]);
            cum.push(acc);
        }
        let total = acc;
        // invert the monotone map pos -> cum at the equal-spacing targets
        let mut next = Vec::with_capacity(n);
        next.push(0.0);
        let mut seg = 0usize;
        for j in 1..n {
            let target = total * j as f64 / nf;
            while seg + 1 < n && cum[seg + 1] < target {
                seg += 1;
            }
            let lo = cum[seg];
            let hi = cum[seg + 1];
            let p_lo = pos[seg];
            let p_hi = if seg + 1 < n { pos[seg + 1] } else { l_in };
            let t = if hi > lo { (target - lo) / (hi - lo) } else { 0.0 };
            next.push(p_lo + t * (p_hi - p_lo));
        }
        let drift: f64 = pos
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        pos = next;
        if drift < 1e-13 * l_in {
            break;
        }
    }
    let samples: Vec<Vector3<f64>> = pos.iter().map(|&s| curve.point_at(s)).collect();
    SphericalCurve::new(samples, true)
}

/// Normal field nu = gamma x gamma' with centered cyclic differences,
/// renormalized per sample. Requires a closed, arc-length resampled curve.
pub fn normal_field(curve: &SphericalCurve) -> Result<Vec<Vector3<f64>>> {
    if !curve.closed {
        return Err(Error::Curve("normal field needs a closed curve".into()));
    }
    if !curve.is_uniform(1e-6) {
        return Err(Error::Curve(
            "normal field needs an arc-length resampled curve".into(),
        ));
    }
    let n = curve.len();
    let pts = &curve.samples;
    let h = curve.total_length() / n as f64;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let prev = &pts[(i + n - 1) % n];
        let next = &pts[(i + 1) % n];
        let deriv = (next - prev) / (2.0 * h);
        let nu = pts[i].cross(&deriv);
        let norm = nu.norm();
        if norm < 1e-9 {
            return Err(Error::Degenerate(format!(
                "vanishing tangent at sample {i}"
            )));
        }
        out.push(nu / norm);
    }
    Ok(out)
}

/// Shortest distance between segments [p1,p2] and [q1,q2] in R^3.
fn segment_distance(
    p1: &Vector3<f64>,
    p2: &Vector3<f64>,
    q1: &Vector3<f64>,
    q2: &Vector3<f64>,
) -> f64 {
    let d1 = p2 - p1;
    let d2 = q2 - q1;
    let r = p1 - q1;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);
    let (mut s, mut t);
    if a <= 1e-30 && e <= 1e-30 {
        return r.norm();
    }
    if a <= 1e-30 {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= 1e-30 {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            s = if denom > 0.0 {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            t = (b * s + f) / e;
            if t < 0.0 {
                t = 0.0;
                s = (-c / a).clamp(0.0, 1.0);
            } else if t > 1.0 {
                t = 1.0;
                s = ((b - c) / a).clamp(0.0, 1.0);
            }
        }
    }
    (p1 + d1 * s - (q1 + d2 * t)).norm()
}

/// True iff the curve is simple: every pair of non-adjacent segments stays
/// farther apart than 0.1 x the local sample spacing.
pub fn self_intersection_check(curve: &SphericalCurve) -> bool {
    let n = curve.len();
    let pts = &curve.samples;
    let seg_count = if curve.closed { n } else { n - 1 };
    let seg_len: Vec<f64> = (0..seg_count)
        .map(|i| (pts[(i + 1) % n] - pts[i]).norm())
        .collect();
    for i in 0..seg_count {
        for j in (i + 2)..seg_count {
            // adjacent pairs share a vertex (including the wrap pair)
            if curve.closed && i == 0 && j == seg_count - 1 {
                continue;
            }
            let d = segment_distance(
                &pts[i],
                &pts[(i + 1) % n],
                &pts[j],
                &pts[(j + 1) % n],
            );
            let local = seg_len[i].min(seg_len[j]);
            if d < 0.1 * local {
                return false;
            }
        }
    }
    true
}

/// Thin band {|x . axis| <= half_height} around a maximal circle.
#[derive(Clone, Copy, Debug)]
pub struct CylinderBand {
    axis: Vector3<f64>,
    half_height: f64,
}

impl CylinderBand {
    pub fn new(axis: Vector3<f64>, half_height: f64) -> Result<Self> {
        let n = axis.norm();
        if !n.is_finite() || n < 1e-12 {
            return Err(Error::Domain("band axis must be a nonzero vector".into()));
        }
        if !(half_height > 0.0 && half_height <= 0.01) {
            return Err(Error::Domain(format!(
                "band half-height must lie in (0, 1/100], got {half_height}"
            )));
        }
        Ok(CylinderBand {
            axis: axis / n,
            half_height,
        })
    }

    pub fn axis(&self) -> &Vector3<f64> {
        &self.axis
    }

    pub fn half_height(&self) -> f64 {
        self.half_height
    }
}

/// Cylindrical coordinates of a curve in the band frame: unwrapped azimuth
/// (continuous lift, starting in [0, 2pi)) and height z = x . axis per sample.
pub fn band_coordinates(curve: &SphericalCurve, band: &CylinderBand) -> (Vec<f64>, Vec<f64>) {
    let (u, v) = axis_frame(band.axis());
    let mut theta = Vec::with_capacity(curve.len());
    let mut z = Vec::with_capacity(curve.len());
    let mut prev = 0.0;
    for (i, p) in curve.samples.iter().enumerate() {
        let raw = p.dot(&v).atan2(p.dot(&u));
        let lifted = if i == 0 {
            raw.rem_euclid(2.0 * std::f64::consts::PI)
        } else {
            // choose the branch nearest the previous lifted angle
            let mut cand = raw + 2.0 * std::f64::consts::PI * ((prev - raw) / (2.0 * std::f64::consts::PI)).round();
            while cand - prev > std::f64::consts::PI {
                cand -= 2.0 * std::f64::consts::PI;
            }
            while cand - prev < -std::f64::consts::PI {
                cand += 2.0 * std::f64::consts::PI;
            }
            cand
        };
        prev = lifted;
        theta.push(lifted);
        z.push(p.dot(band.axis()));
    }
    (theta, z)
}

/// Crossing measure of Lemma-style band diagnostics: the arc length of
/// {t outside the window : theta'(t) <= 0 and |z(t)| <= b}.
///
/// The window is the parameter interval (in arc length, starting at sample 0)
/// that must wind twice around the axis with |z| <= b/2 at its start,
/// discrete slope |dz/dtheta| <= b/(8 pi), strictly increasing azimuth, and
/// end height above start height. Each violated hypothesis is reported by
/// name. The curve must be closed and simple.
pub fn cylinder_crossing_measure(
    curve: &SphericalCurve,
    band: &CylinderBand,
    window: (f64, f64),
) -> Result<f64> {
    if !curve.closed {
        return Err(Error::Hypothesis("curve is not closed".into()));
    }
    if !self_intersection_check(curve) {
        return Err(Error::Hypothesis("curve is not simple".into()));
    }
    let (w_lo, w_hi) = window;
    let total = curve.total_length();
    if !(w_lo >= 0.0 && w_hi > w_lo && w_hi <= total) {
        return Err(Error::Hypothesis(format!(
            "window [{w_lo}, {w_hi}] is not a subinterval of [0, {total}]"
        )));
    }
    let b = band.half_height();
    let (theta, z) = band_coordinates(curve, band);
    let n = curve.len();

    // hypothesis checks on the window samples
    let in_window = |i: usize| -> bool {
        let t = curve.arclength[i];
        t >= w_lo && t <= w_hi
    };
    let first_idx = (0..n).find(|&i| in_window(i)).ok_or_else(|| {
        Error::Hypothesis("window contains no samples".into())
    })?;
    if z[first_idx].abs() > 0.5 * b * (1.0 + 1e-9) {
        return Err(Error::Hypothesis(format!(
            "window start height |z| = {:.3e} exceeds b/2 = {:.3e}",
            z[first_idx].abs(),
            0.5 * b
        )));
    }
    let slope_cap = b / (8.0 * std::f64::consts::PI) * (1.0 + 1e-6);
    let mut winding = 0.0;
    let mut last_in = first_idx;
    for i in first_idx..n {
        if !in_window(i) {
            break;
        }
        if i > first_idx {
            let dth = theta[i] - theta[i - 1];
            let dz = z[i] - z[i - 1];
            if dth <= 0.0 {
                return Err(Error::Hypothesis(format!(
                    "azimuth not strictly increasing on the window at sample {i}"
                )));
            }
            if (dz / dth).abs() > slope_cap {
                return Err(Error::Hypothesis(format!(
                    "window slope |dz/dtheta| = {:.3e} exceeds b/(8 pi) = {:.3e} at sample {i}",
                    (dz / dth).abs(),
                    b / (8.0 * std::f64::consts::PI)
                )));
            }
            winding += dth;
        }
        last_in = i;
    }
    if (winding - 4.0 * std::f64::consts::PI).abs() > 0.1 {
        return Err(Error::Hypothesis(format!(
            "window winds {winding:.4} rad, expected 4 pi = {:.4}",
            4.0 * std::f64::consts::PI
        )));
    }
    if z[last_in] <= z[first_idx] {
        return Err(Error::Hypothesis(
            "window end height does not exceed start height".into(),
        ));
    }

    // measure segments outside the window with theta' <= 0, clipped to |z| <= b
    let mut acc = crate::util::Accumulator::new();
    for i in 0..n {
        let j = (i + 1) % n;
        let t_mid = if j == 0 {
            0.5 * (curve.arclength[i] + total)
        } else {
            0.5 * (curve.arclength[i] + curve.arclength[j])
        };
        if t_mid >= w_lo && t_mid <= w_hi {
            continue;
        }
        let dth = if j == 0 {
            // wrap step: compare lifted end against start modulo 2 pi
            let raw = theta[0] - theta[n - 1];
            raw - 2.0 * std::f64::consts::PI * (raw / (2.0 * std::f64::consts::PI)).round()
        } else {
            theta[j] - theta[i]
        };
        if dth > 0.0 {
            continue;
        }
        let (z0, z1) = (z[i], z[j]);
        let seg = curve.gap(i);
        // fraction of the segment with |z| <= b, z linear along the step
        let frac = clip_fraction(z0, z1, b);
        acc.add(seg * frac);
    }
    Ok(acc.total())
}

/// Fraction of [0,1] on which the linear interpolation from z0 to z1 has
/// absolute value at most b.
fn clip_fraction(z0: f64, z1: f64, b: f64) -> f64 {
    if z0 == z1 {
        return if z0.abs() <= b { 1.0 } else { 0.0 };
    }
    let inv = 1.0 / (z1 - z0);
    let (t0, t1) = ((-b - z0) * inv, (b - z0) * inv);
    let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
    (hi.min(1.0) - lo.max(0.0)).max(0.0)
}

/// Double-loop crossing example: winds twice around the band axis inside
/// |z| <= b/8 with slope b/(16 pi) (half the hypothesis cap), then returns
/// backward through the middle of the channel between its own strands.
/// The returned window (arc interval of the double wind) starts at sample 0.
pub fn make_double_loop(
    band: &CylinderBand,
    n: usize,
) -> Result<(SphericalCurve, (f64, f64))> {
    if n < 1024 {
        return Err(Error::Curve(
            "double loop needs at least 1024 samples to stay simple".into(),
        ));
    }
    let b = band.half_height();
    let c = b / (16.0 * std::f64::consts::PI);
    let psi_end = 4.0 * std::f64::consts::PI;
    // control polyline in (unwrapped psi, z)
    let mut ctrl: Vec<(f64, f64)> = Vec::new();
    let m_window = 4096;
    for i in 0..=m_window {
        let psi = psi_end * i as f64 / m_window as f64;
        ctrl.push((psi, -b / 8.0 + c * psi));
    }
    ctrl.push((psi_end, b / 16.0));
    // straight return through the channel center down to psi = 2 pi
    let m_ret = 2048;
    for i in 1..=m_ret {
        let f = i as f64 / m_ret as f64;
        let psi = psi_end - 2.0 * std::f64::consts::PI * f;
        ctrl.push((psi, b / 16.0 - (b / 8.0) * f));
    }
    ctrl.push((2.0 * std::f64::consts::PI, -b / 8.0));
    // drop the duplicate closing point: the wrap identifies (2 pi, -b/8)
    // with the start (0, -b/8)
    ctrl.pop();
    let (u, v) = axis_frame(band.axis());
    let e = *band.axis();
    let samples: Vec<Vector3<f64>> = ctrl
        .iter()
        .map(|&(psi, zz)| {
            let rho = (1.0 - zz * zz).sqrt();
            let (sp, cp) = psi.sin_cos();
            u * (rho * cp) + v * (rho * sp) + e * zz
        })
        .collect();
    let rough = SphericalCurve::new(samples, true)?;
    let curve = resample_arclength(&rough, n)?;
    // locate the window end: arc position where the unwrapped azimuth
    // first reaches 4 pi
    let (theta, _) = band_coordinates(&curve, band);
    let mut w_hi = curve.total_length() * 2.0 / 3.0;
    for i in 1..curve.len() {
        if theta[i] >= psi_end {
            let t0 = curve.arclength[i - 1];
            let t1 = curve.arclength[i];
            let f = (psi_end - theta[i - 1]) / (theta[i] - theta[i - 1]);
            w_hi = t0 + f * (t1 - t0);
            break;
        }
    }
    Ok((curve, (0.0, w_hi)))
}

/// Union of disjoint simple closed curves with per-component orientation
/// flags (+1 keeps the stored direction, -1 records that the construction
/// reversed it to keep normals on a consistent side).
#[derive(Clone, Debug)]
pub struct ConeTrace {
    components: Vec<SphericalCurve>,
    orientations: Vec<i8>,
}

impl ConeTrace {
    pub fn new(components: Vec<SphericalCurve>, orientations: Vec<i8>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Curve("trace needs at least one component".into()));
        }
        if orientations.len() != components.len() {
            return Err(Error::Curve(
                "one orientation flag per component required".into(),
            ));
        }
        for (idx, c) in components.iter().enumerate() {
            if !c.is_closed() {
                return Err(Error::Curve(format!("component {idx} is not closed")));
            }
            if !self_intersection_check(c) {
                return Err(Error::Curve(format!("component {idx} is not simple")));
            }
        }
        // pairwise disjointness, with the same resolution-scaled threshold
        // as the self-intersection check
        for i in 0..components.len() {
            for j in (i + 1)..components.len() {
                let (a, b) = (&components[i], &components[j]);
                let ha = a.total_length() / a.len() as f64;
                let hb = b.total_length() / b.len() as f64;
                let mut min_d = f64::INFINITY;
                for p in a.samples() {
                    for q in b.samples() {
                        min_d = min_d.min((p - q).norm());
                    }
                }
                if min_d < 0.1 * ha.min(hb) {
                    return Err(Error::Curve(format!(
                        "components {i} and {j} touch (distance {min_d:.3e})"
                    )));
                }
            }
        }
        Ok(ConeTrace {
            components,
            orientations,
        })
    }

    pub fn components(&self) -> &[SphericalCurve] {
        &self.components
    }

    pub fn orientations(&self) -> &[i8] {
        &self.orientations
    }

    pub fn total_length(&self) -> f64 {
        self.components.iter().map(|c| c.total_length()).sum()
    }
}

// ---------------------------------------------------------------------------
// import / export

/// Writes a curve as CSV rows (t, x, y, z) with t the cumulative arc length.
pub fn curve_to_csv<W: std::io::Write>(curve: &SphericalCurve, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "x", "y", "z"]).map_err(csv_err)?;
    for (i, p) in curve.samples().iter().enumerate() {
        w.write_record(&[
            format!("{}", curve.arclength[i]),
            format!("{}", p.x),
            format!("{}", p.y),
            format!("{}", p.z),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a curve from CSV rows (t, x, y, z); the t column is ignored in
/// favor of recomputed arc length. The curve is treated as closed.
pub fn curve_from_csv<R: std::io::Read>(input: R) -> Result<SphericalCurve> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let mut samples = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() < 4 {
            return Err(Error::Curve("curve CSV needs columns t,x,y,z".into()));
        }
        let parse = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Curve(format!("bad number {s:?}: {e}")))
        };
        samples.push(Vector3::new(
            parse(&rec[1])?,
            parse(&rec[2])?,
            parse(&rec[3])?,
        ));
    }
    SphericalCurve::new(samples, true)
}

#[derive(Serialize, Deserialize)]
struct CurveJson {
    samples: Vec<[f64; 3]>,
    closed: bool,
}

pub fn curve_to_json(curve: &SphericalCurve) -> String {
    let doc = CurveJson {
        samples: curve.samples().iter().map(|p| [p.x, p.y, p.z]).collect(),
        closed: curve.is_closed(),
    };
    serde_json::to_string(&doc).expect("curve serialization cannot fail")
}

pub fn curve_from_json(text: &str) -> Result<SphericalCurve> {
    let doc: CurveJson =
        serde_json::from_str(text).map_err(|e| Error::Curve(format!("bad curve JSON: {e}")))?;
    SphericalCurve::new(
        doc.samples
            .into_iter()
            .map(|[x, y, z]| Vector3::new(x, y, z))
            .collect(),
        doc.closed,
    )
}

fn csv_err(e: csv::Error) -> Error {
    Error::Curve(format!("csv: {e}"))
}
