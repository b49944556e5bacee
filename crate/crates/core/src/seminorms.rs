//! Fractional Sobolev seminorms with the (1 - sigma) normalization,
//! discrete Hölder-1/4 norms, the Poincaré-type embedding diagnostic, and
//! the flatness fit of a curve's normal field.

use crate::curves::{normal_field, SphericalCurve};
use crate::error::{Error, Result};
use crate::util::{par_sum_indexed, smoothstep_quintic, sum_compensated, Accumulator};
use nalgebra::Vector3;
use rayon::prelude::*;

/// Parameter domain of a sampled function: a finite interval or a circle of
/// given period (with the cyclic arc metric).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Domain {
    Interval,
    Circle { period: f64 },
}

/// Sample values the seminorms accept: reals and 3-vectors.
pub trait SampleValue: Copy + Send + Sync {
    fn dist_sq(a: Self, b: Self) -> f64;
    fn zero() -> Self;
    fn add(a: Self, b: Self) -> Self;
    fn scale(a: Self, c: f64) -> Self;
    fn magnitude(a: Self) -> f64;
    fn all_finite(a: Self) -> bool;
}

impl SampleValue for f64 {
    fn dist_sq(a: Self, b: Self) -> f64 {
        (a - b) * (a - b)
    }
    fn zero() -> Self {
        0.0
    }
    fn add(a: Self, b: Self) -> Self {
        a + b
    }
    fn scale(a: Self, c: f64) -> Self {
        a * c
    }
    fn magnitude(a: Self) -> f64 {
        a.abs()
    }
    fn all_finite(a: Self) -> bool {
        a.is_finite()
    }
}

impl SampleValue for Vector3<f64> {
    fn dist_sq(a: Self, b: Self) -> f64 {
        (a - b).norm_squared()
    }
    fn zero() -> Self {
        Vector3::zeros()
    }
    fn add(a: Self, b: Self) -> Self {
        a + b
    }
    fn scale(a: Self, c: f64) -> Self {
        a * c
    }
    fn magnitude(a: Self) -> f64 {
        a.norm()
    }
    fn all_finite(a: Self) -> bool {
        a.iter().all(|x| x.is_finite())
    }
}

/// A function sampled on a strictly increasing grid, over an interval or a
/// circle.
#[derive(Clone, Debug)]
pub struct SampledFunction<V: SampleValue> {
    grid: Vec<f64>,
    values: Vec<V>,
    domain: Domain,
}

impl<V: SampleValue> SampledFunction<V> {
    pub fn new(grid: Vec<f64>, values: Vec<V>, domain: Domain) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::Domain(format!(
                "{} grid points but {} values",
                grid.len(),
                values.len()
            )));
        }
        if grid.len() < 2 {
            return Err(Error::Domain("need at least 2 samples".into()));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) || !grid[0].is_finite() {
            return Err(Error::Domain("grid must be strictly increasing".into()));
        }
        if let Domain::Circle { period } = domain {
            if !(period > 0.0) {
                return Err(Error::Domain(format!("period must be positive, got {period}")));
            }
            if grid[0] < 0.0 || *grid.last().unwrap() >= period {
                return Err(Error::Domain(
                    "cyclic grid must lie within [0, period)".into(),
                ));
            }
        }
        if values.iter().any(|&v| !V::all_finite(v)) {
            return Err(Error::Domain("values must be finite".into()));
        }
        Ok(SampledFunction {
            grid,
            values,
            domain,
        })
    }

    /// Uniform samples of an interval [0, length], endpoints included.
    pub fn uniform_interval(length: f64, values: Vec<V>) -> Result<Self> {
        let n = values.len();
        if n < 2 || !(length > 0.0) {
            return Err(Error::Domain("need >= 2 values and positive length".into()));
        }
        let grid = crate::util::linspace(0.0, length, n);
        Self::new(grid, values, Domain::Interval)
    }

    /// Uniform samples of a circle with the given period (no duplicated
    /// endpoint).
    pub fn uniform_circle(period: f64, values: Vec<V>) -> Result<Self> {
        let n = values.len();
        if n < 2 || !(period > 0.0) {
            return Err(Error::Domain("need >= 2 values and positive period".into()));
        }
        let grid = (0..n).map(|i| period * i as f64 / n as f64).collect();
        Self::new(grid, values, Domain::Circle { period })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[V] {
        &self.values
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Distance between two grid parameters in the domain metric.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let raw = (self.grid[i] - self.grid[j]).abs();
        match self.domain {
            Domain::Interval => raw,
            Domain::Circle { period } => raw.min(period - raw),
        }
    }

    /// Trapezoid quadrature weights on the grid.
    pub fn weights(&self) -> Vec<f64> {
        let n = self.grid.len();
        match self.domain {
            Domain::Interval => (0..n)
                .map(|i| {
                    let left = if i > 0 { self.grid[i] - self.grid[i - 1] } else { 0.0 };
                    let right = if i + 1 < n { self.grid[i + 1] - self.grid[i] } else { 0.0 };
                    0.5 * (left + right)
                })
                .collect(),
            Domain::Circle { period } => (0..n)
                .map(|i| {
                    let left = if i > 0 {
                        self.grid[i] - self.grid[i - 1]
                    } else {
                        self.grid[0] + period - self.grid[n - 1]
                    };
                    let right = if i + 1 < n {
                        self.grid[i + 1] - self.grid[i]
                    } else {
                        self.grid[0] + period - self.grid[n - 1]
                    };
                    0.5 * (left + right)
                })
                .collect(),
        }
    }

    /// Mean spacing; the diagonal band of the pair sums is one such cell.
    fn mean_spacing(&self) -> f64 {
        match self.domain {
            Domain::Interval => {
                (self.grid[self.grid.len() - 1] - self.grid[0]) / (self.grid.len() - 1) as f64
            }
            Domain::Circle { period } => period / self.grid.len() as f64,
        }
    }

    /// Centered-difference squared slope at each sample (one-sided at
    /// interval ends, cyclic on circles).
    fn slope_sq(&self) -> Vec<f64> {
        let n = self.grid.len();
        let (g, v) = (&self.grid, &self.values);
        (0..n)
            .map(|i| match self.domain {
                Domain::Interval => {
                    let (a, b) = if i == 0 {
                        (0, 1)
                    } else if i == n - 1 {
                        (n - 2, n - 1)
                    } else {
                        (i - 1, i + 1)
                    };
                    V::dist_sq(v[b], v[a]) / ((g[b] - g[a]) * (g[b] - g[a]))
                }
                Domain::Circle { period } => {
                    let a = (i + n - 1) % n;
                    let b = (i + 1) % n;
                    let mut dt = g[b] - g[a];
                    if dt <= 0.0 {
                        dt += period;
                    }
                    V::dist_sq(v[b], v[a]) / (dt * dt)
                }
            })
            .collect()
    }

    /// Weighted mean value (trapezoid).
    pub fn mean(&self) -> V {
        let w = self.weights();
        let mut acc = V::zero();
        let mut total = 0.0;
        for (&wi, &vi) in w.iter().zip(&self.values) {
            acc = V::add(acc, V::scale(vi, wi));
            total += wi;
        }
        V::scale(acc, 1.0 / total)
    }
}

/// Fractional seminorm [(1-sigma) double-integral of
/// |f(t)-f(t')|^2 / |t-t'|^{1+2 sigma}]^{1/2} by trapezoid pair summation.
///
/// Pairs closer than one grid cell are replaced by the local-slope
/// approximation of the diagonal band, integrated in closed form (one-sided
/// at interval ends); this keeps the convergent band contribution without
/// the noise of near-diagonal quotients.
pub fn hs_seminorm<V: SampleValue>(f: &SampledFunction<V>, sigma: f64) -> Result<f64> {
    if !(sigma > 0.5 && sigma < 1.0) {
        return Err(Error::Domain(format!(
            "seminorm index must lie in (1/2, 1), got {sigma}"
        )));
    }
    if f.len() < 64 {
        return Err(Error::Domain(format!(
            "seminorm needs at least 64 samples, got {}",
            f.len()
        )));
    }
    let n = f.len();
    let w = f.weights();
    let h = f.mean_spacing();
    let expo = -(1.0 + 2.0 * sigma);
    let values = f.values();
    let pair = par_sum_indexed(n, 32, |i| {
        let mut row = Accumulator::new();
        for j in 0..n {
            if j == i {
                continue;
            }
            let d = f.distance(i, j);
            if d < h * (1.0 - 1e-12) {
                continue;
            }
            row.add(w[j] * V::dist_sq(values[i], values[j]) * d.powf(expo));
        }
        w[i] * row.total()
    });
    // diagonal band: |f(t)-f(t')|^2 ~ f'(t)^2 (t-t')^2 integrated over
    // |t-t'| < h gives f'^2 h^{2-2 sigma}/(1-sigma) (halved per side)
    let slope = f.slope_sq();
    let g = |x: f64| x.powf(2.0 - 2.0 * sigma) / (2.0 - 2.0 * sigma);
    let band = sum_compensated((0..n).map(|i| {
        let side = match f.domain() {
            Domain::Interval => {
                let lo = f.grid()[i] - f.grid()[0];
                let hi = f.grid()[n - 1] - f.grid()[i];
                g(h.min(lo)) + g(h.min(hi))
            }
            Domain::Circle { .. } => 2.0 * g(h),
        };
        w[i] * slope[i] * side
    }));
    Ok(((1.0 - sigma) * (pair + band)).max(0.0).sqrt())
}

/// Discrete Hölder-1/4 norm: the sup over sample pairs of
/// |f(t)-f(t')| / |t-t'|^{1/4} plus the sup of |f|.
pub fn holder_quarter_norm<V: SampleValue>(f: &SampledFunction<V>) -> f64 {
    let values = f.values();
    let n = f.len();
    let row_sups: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut best = 0.0f64;
            for j in (i + 1)..n {
                let d = f.distance(i, j);
                if d <= 0.0 {
                    continue;
                }
                let q = V::dist_sq(values[i], values[j]).sqrt() / d.sqrt().sqrt();
                best = best.max(q);
            }
            best
        })
        .collect();
    let sup_ratio = row_sups.into_iter().fold(0.0f64, f64::max);
    let sup_abs = values
        .iter()
        .map(|&v| V::magnitude(v))
        .fold(0.0f64, f64::max);
    sup_ratio + sup_abs
}

/// Centered variant: the Hölder-1/4 norm of f minus its weighted mean.
pub fn holder_quarter_norm_centered<V: SampleValue>(f: &SampledFunction<V>) -> f64 {
    let m = f.mean();
    let centered: Vec<V> = f
        .values()
        .iter()
        .map(|&v| V::add(v, V::scale(m, -1.0)))
        .collect();
    let g = SampledFunction {
        grid: f.grid.clone(),
        values: centered,
        domain: f.domain,
    };
    holder_quarter_norm(&g)
}

/// Embedding diagnostic: the ratio of the centered Hölder-1/4 norm to the
/// fractional seminorm, with a degeneracy flag for (near-)constant inputs.
#[derive(Clone, Copy, Debug)]
pub struct PoincareRatio {
    pub ratio: f64,
    pub degenerate: bool,
}

pub fn poincare_ratio<V: SampleValue>(f: &SampledFunction<V>, sigma: f64) -> Result<PoincareRatio> {
    if !(sigma >= 0.75 && sigma < 1.0) {
        return Err(Error::Domain(format!(
            "embedding diagnostic needs sigma in [3/4, 1), got {sigma}"
        )));
    }
    let semi = hs_seminorm(f, sigma)?;
    let holder = holder_quarter_norm_centered(f);
    // scale-aware degeneracy guard: seminorm tiny relative to the data size
    let scale = f
        .values()
        .iter()
        .map(|&v| V::magnitude(v))
        .fold(0.0f64, f64::max)
        .max(1e-300);
    if semi <= 1e-12 * scale {
        return Ok(PoincareRatio {
            ratio: 0.0,
            degenerate: true,
        });
    }
    Ok(PoincareRatio {
        ratio: holder / semi,
        degenerate: false,
    })
}

/// Result of fitting a constant axis to a curve's normal field.
#[derive(Clone, Copy, Debug)]
pub struct FlatnessFit {
    /// Unit vector closest to the averaged normal field.
    pub axis: Vector3<f64>,
    /// Hölder-1/4 distance of the normal field from the axis.
    pub dev: f64,
    /// Fractional seminorm of the normal field at index (1+s)/2.
    pub seminorm: f64,
}

/// Fits a constant axis to the normal field of a closed resampled curve and
/// measures the deviation in the Hölder-1/4 and fractional-seminorm scales,
/// after rescaling the parameter to the unit-speed circle.
pub fn flatness_fit(curve: &SphericalCurve, s: f64) -> Result<FlatnessFit> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Domain(format!("index s must lie in (0,1), got {s}")));
    }
    let nu = normal_field(curve)?;
    let n = nu.len();
    let mean: Vector3<f64> =
        nu.iter().fold(Vector3::zeros(), |acc, v| acc + v) / n as f64;
    if mean.norm() < 1e-3 {
        return Err(Error::Degenerate(
            "normal field averages to nearly zero; no well-defined axis".into(),
        ));
    }
    let axis = mean.normalize();
    let hat = SampledFunction::uniform_circle(2.0 * std::f64::consts::PI, nu)?;
    let centered: Vec<Vector3<f64>> = hat.values().iter().map(|v| v - axis).collect();
    let dev_fn =
        SampledFunction::uniform_circle(2.0 * std::f64::consts::PI, centered)?;
    let dev = holder_quarter_norm(&dev_fn);
    let seminorm = hs_seminorm(&hat, (1.0 + s) / 2.0)?;
    Ok(FlatnessFit { axis, dev, seminorm })
}

/// Ten smooth test functions on [0, 5 pi], each sampled at n uniform points.
pub fn smooth_corpus(n: usize) -> Vec<(&'static str, SampledFunction<f64>)> {
    let length = 5.0 * std::f64::consts::PI;
    let grid = crate::util::linspace(0.0, length, n);
    let build = |name: &'static str, f: &dyn Fn(f64) -> f64| {
        let values = grid.iter().map(|&t| f(t)).collect();
        (
            name,
            SampledFunction::new(grid.clone(), values, Domain::Interval)
                .expect("corpus construction cannot fail"),
        )
    };
    vec![
        build("cos-t", &|t| t.cos()),
        build("sin-t", &|t| t.sin()),
        build("sin-2t", &|t| (2.0 * t).sin()),
        build("cos-3t", &|t| (3.0 * t).cos()),
        build("gauss-bump", &move |t| (-(t - length / 2.0).powi(2) / 2.0).exp()),
        build("ramp", &move |t| t / length),
        build("parabola", &move |t| (t / length) * (1.0 - t / length)),
        build("damped-cos", &move |t| (-t / length).exp() * (2.0 * t).cos()),
        build("plateau", &move |t| {
            smoothstep_quintic((t - 1.0) / 2.0) * smoothstep_quintic((length - 1.0 - t) / 2.0)
        }),
        build("slow-sine", &|t| (0.5 * t).sin()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{make_circle, make_perturbed_circle, resample_arclength};
    use std::f64::consts::PI;

    fn ramp_unit(n: usize) -> SampledFunction<f64> {
        let grid = crate::util::linspace(0.0, 1.0, n);
        let values = grid.clone();
        SampledFunction::new(grid, values, Domain::Interval).unwrap()
    }

    #[test]
    fn constant_function_has_zero_seminorm() {
        let f = SampledFunction::uniform_interval(5.0 * PI, vec![5.0; 256]).unwrap();
        let v = hs_seminorm(&f, 0.75).unwrap();
        assert!(v.abs() < 1e-9, "{v}");
    }

    #[test]
    fn ramp_matches_closed_form() {
        // (1-s) int int |t-u|^{-1/2} over the unit square = 2/3 at s = 3/4
        let f = ramp_unit(10_000);
        let got = hs_seminorm(&f, 0.75).unwrap();
        let want = (2.0f64 / 3.0).sqrt();
        assert!(
            (got / want - 1.0).abs() < 0.02,
            "{got} vs {want} ({})",
            (got / want - 1.0).abs()
        );
    }

    #[test]
    fn seminorm_is_homogeneous() {
        let grid = crate::util::linspace(0.0, 5.0 * PI, 512);
        let base: Vec<f64> = grid.iter().map(|&t| (2.0 * t).sin()).collect();
        let scaled: Vec<f64> = base.iter().map(|v| 3.0 * v).collect();
        let f = SampledFunction::new(grid.clone(), base, Domain::Interval).unwrap();
        let g = SampledFunction::new(grid, scaled, Domain::Interval).unwrap();
        let (a, b) = (hs_seminorm(&f, 0.8).unwrap(), hs_seminorm(&g, 0.8).unwrap());
        assert!((b / (3.0 * a) - 1.0).abs() < 1e-12, "{b} vs {}", 3.0 * a);
    }

    #[test]
    fn seminorm_is_refinement_stable() {
        let coarse_corpus = smooth_corpus(2500);
        let fine_corpus = smooth_corpus(5000);
        for ((name, f), (_, g)) in coarse_corpus.iter().zip(&fine_corpus) {
            let coarse = hs_seminorm(f, 0.8).unwrap();
            let fine = hs_seminorm(g, 0.8).unwrap();
            assert!(
                (coarse / fine - 1.0).abs() < 0.02,
                "{name}: {coarse} vs {fine}"
            );
        }
    }

    #[test]
    fn seminorm_varies_continuously_in_sigma() {
        let f = &smooth_corpus(1024)[2].1;
        let mut prev = f64::NAN;
        for i in 0..5 {
            let sigma = 0.75 + 0.05 * i as f64;
            let v = hs_seminorm(f, sigma).unwrap();
            assert!(v.is_finite() && v > 0.0);
            if prev.is_finite() {
                let r = v / prev;
                assert!(r > 0.5 && r < 2.0, "jump at sigma={sigma}: {r}");
            }
            prev = v;
        }
    }

    #[test]
    fn circle_seminorm_is_shift_invariant() {
        let n = 256;
        let period = 2.0 * PI;
        let vals: Vec<f64> = (0..n)
            .map(|i| (2.0 * PI * i as f64 / n as f64).cos())
            .collect();
        let f = SampledFunction::uniform_circle(period, vals.clone()).unwrap();
        let shifted: Vec<f64> = (0..n).map(|i| vals[(i + 40) % n]).collect();
        let g = SampledFunction::uniform_circle(period, shifted).unwrap();
        let (a, b) = (hs_seminorm(&f, 0.8).unwrap(), hs_seminorm(&g, 0.8).unwrap());
        assert!((a / b - 1.0).abs() < 1e-12);
        let (ha, hb) = (holder_quarter_norm(&f), holder_quarter_norm(&g));
        assert!((ha / hb - 1.0).abs() < 1e-12);
    }

    #[test]
    fn holder_norm_matches_dense_oracle() {
        let n = 20_001;
        let grid = crate::util::linspace(0.0, 5.0 * PI, n);
        let values: Vec<f64> = grid.iter().map(|&t| t.cos()).collect();
        let f = SampledFunction::new(grid, values, Domain::Interval).unwrap();
        let got = holder_quarter_norm(&f);
        // strided dense-grid oracle; the all-pairs sup can only exceed it
        // by a vanishing refinement margin
        let want = 2.523644535163788;
        assert!(got >= want - 1e-12, "{got}");
        assert!((got / want - 1.0).abs() < 2e-5, "{got} vs {want}");
    }

    #[test]
    fn holder_norm_shift_behavior() {
        let f = SampledFunction::uniform_interval(5.0 * PI, vec![3.25; 128]).unwrap();
        assert!(holder_quarter_norm_centered(&f) < 1e-12);
        let grid = crate::util::linspace(0.0, 5.0 * PI, 512);
        let base: Vec<f64> = grid.iter().map(|&t| t.sin()).collect();
        let lifted: Vec<f64> = base.iter().map(|v| v + 2.5).collect();
        let a = holder_quarter_norm_centered(
            &SampledFunction::new(grid.clone(), base, Domain::Interval).unwrap(),
        );
        let b = holder_quarter_norm_centered(
            &SampledFunction::new(grid, lifted, Domain::Interval).unwrap(),
        );
        assert!((a / b - 1.0).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn poincare_ratio_flags_constants() {
        let f = SampledFunction::uniform_interval(5.0 * PI, vec![1.0; 128]).unwrap();
        let r = poincare_ratio(&f, 0.8).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.ratio, 0.0);
        assert!(poincare_ratio(&f, 0.6).is_err());
    }

    #[test]
    fn poincare_ratio_is_bounded_and_stable_on_corpus() {
        let mut max_coarse = 0.0f64;
        let mut max_fine = 0.0f64;
        for ((name, f), (_, g)) in smooth_corpus(1000).iter().zip(&smooth_corpus(2000)) {
            let a = poincare_ratio(f, 0.8).unwrap();
            let b = poincare_ratio(g, 0.8).unwrap();
            assert!(!a.degenerate, "{name} flagged degenerate");
            assert!(
                (a.ratio / b.ratio - 1.0).abs() < 0.1,
                "{name}: {} vs {}",
                a.ratio,
                b.ratio
            );
            max_coarse = max_coarse.max(a.ratio);
            max_fine = max_fine.max(b.ratio);
        }
        println!("corpus max embedding ratio: {max_coarse} (n=1000), {max_fine} (n=2000)");
        assert!(max_fine < 10.0);
    }

    #[test]
    fn maximal_circle_is_flat() {
        let c = make_circle(&Vector3::z(), PI / 2.0, 1024).unwrap();
        let fit = flatness_fit(&c, 0.9).unwrap();
        assert!((fit.axis - Vector3::z()).norm() < 1e-9);
        assert!(fit.dev <= 1e-9, "dev = {}", fit.dev);
        assert!(fit.seminorm <= 1e-9, "seminorm = {}", fit.seminorm);
    }

    #[test]
    fn perturbed_circle_has_positive_deviation() {
        let c = make_perturbed_circle(&Vector3::z(), &[0.0, 0.05], 4096).unwrap();
        let r = resample_arclength(&c, 2048).unwrap();
        let fit = flatness_fit(&r, 0.9).unwrap();
        assert!((fit.axis - Vector3::z()).norm() < 0.05, "{:?}", fit.axis);
        assert!(fit.dev > 1e-3 && fit.dev < 1.0, "dev = {}", fit.dev);
        assert!(fit.seminorm > 1e-3, "seminorm = {}", fit.seminorm);
    }

    #[test]
    fn flatness_fit_is_rotation_equivariant() {
        let rot = nalgebra::Rotation3::from_axis_angle(
            &nalgebra::Unit::new_normalize(Vector3::new(0.3, -1.0, 0.6)),
            0.9,
        );
        let c = make_perturbed_circle(&Vector3::z(), &[0.0, 0.05], 2048).unwrap();
        let r = resample_arclength(&c, 1024).unwrap();
        let fit = flatness_fit(&r, 0.85).unwrap();
        let rotated =
            SphericalCurve::new(r.samples().iter().map(|p| rot * p).collect(), true).unwrap();
        let fit_rot = flatness_fit(&rotated, 0.85).unwrap();
        assert!((rot * fit.axis - fit_rot.axis).norm() < 1e-9);
        assert!((fit.dev - fit_rot.dev).abs() < 1e-9);
        assert!((fit.seminorm - fit_rot.seminorm).abs() < 1e-9);
    }

    #[test]
    fn flatness_fit_is_start_point_invariant() {
        let c = make_perturbed_circle(&Vector3::z(), &[0.0, 0.05], 2048).unwrap();
        let r = resample_arclength(&c, 512).unwrap();
        let fit = flatness_fit(&r, 0.9).unwrap();
        let n = r.len();
        let shifted: Vec<Vector3<f64>> =
            (0..n).map(|i| r.samples()[(i + 77) % n]).collect();
        let shifted_curve = SphericalCurve::new(shifted, true).unwrap();
        let fit2 = flatness_fit(&shifted_curve, 0.9).unwrap();
        assert!((fit.dev - fit2.dev).abs() < 1e-9);
        assert!((fit.seminorm - fit2.seminorm).abs() < 1e-9);
        assert!((fit.axis - fit2.axis).norm() < 1e-9);
    }

    #[test]
    fn flatness_fit_rejects_bad_index() {
        let c = make_circle(&Vector3::z(), PI / 2.0, 256).unwrap();
        assert!(flatness_fit(&c, 0.0).is_err());
        assert!(flatness_fit(&c, 1.0).is_err());
    }

    #[test]
    fn construction_rejects_bad_grids() {
        assert!(SampledFunction::new(vec![0.0, 0.0, 1.0], vec![1.0, 2.0, 3.0], Domain::Interval)
            .is_err());
        assert!(SampledFunction::new(vec![0.0, 1.0], vec![1.0], Domain::Interval).is_err());
        assert!(SampledFunction::new(
            vec![0.0, 7.0],
            vec![1.0, 2.0],
            Domain::Circle { period: 6.0 }
        )
        .is_err());
        assert!(SampledFunction::new(vec![0.0, 1.0], vec![f64::NAN, 2.0], Domain::Interval)
            .is_err());
        let f = SampledFunction::uniform_interval(1.0, vec![0.0; 32]).unwrap();
        assert!(hs_seminorm(&f, 0.75).is_err());
        let g = SampledFunction::uniform_interval(1.0, vec![0.0; 64]).unwrap();
        assert!(hs_seminorm(&g, 0.5).is_err());
        assert!(hs_seminorm(&g, 1.0).is_err());
    }
}
