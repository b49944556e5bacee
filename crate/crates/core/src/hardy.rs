//! Hardy-inequality machinery on radial profiles: the weighted functionals
//! I and J, the polar-coordinates Hardy ratio, and the homogeneous
//! near-optimizer family with smooth logarithmic cutoffs.
//!
//! The common computational core is `tau_pair_functional`, which integrates
//! |zeta(r) - zeta(r tau)|^2 against a dilation kernel K(tau) over
//! r in (0, inf), tau in (1, inf). The same engine serves the planar Hardy
//! numerator (ring kernel) and the cone stability comparisons (curve-pair
//! kernels); only the kernel trait object changes.

use crate::error::{Error, Result};
use crate::kernels::{ring_band_constant, ring_kernel_integral};
use crate::quad::gk15_points;
use crate::specfun::{frac_lap_constant, FracOrder};
use crate::util::{par_sum_indexed, smoothstep_quintic, Accumulator, CubicTable};
use rayon::prelude::*;
use std::path::Path;

/// A radial test function on a log-uniform grid over [r_min, r_max],
/// identically zero outside the grid. Both end values must vanish, so the
/// profile is compactly supported away from the origin.
#[derive(Clone, Debug)]
pub struct RadialProfile {
    r_min: f64,
    r_max: f64,
    log_step: f64,
    values: Vec<f64>,
}

impl RadialProfile {
    pub fn new(r_min: f64, r_max: f64, values: Vec<f64>) -> Result<Self> {
        if !(r_min > 0.0) || !r_max.is_finite() || !(r_max > r_min) {
            return Err(Error::Domain(format!(
                "radial support needs 0 < r_min < r_max < inf, got [{r_min}, {r_max}]"
            )));
        }
        if values.len() < 2 {
            return Err(Error::Domain("profile needs at least 2 samples".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("profile values must be finite".into()));
        }
        let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        if values[0].abs() > 1e-12 * scale || values[values.len() - 1].abs() > 1e-12 * scale {
            return Err(Error::Domain(
                "profile must vanish at both grid ends".into(),
            ));
        }
        let log_step = (r_max / r_min).ln() / (values.len() - 1) as f64;
        Ok(RadialProfile {
            r_min,
            r_max,
            log_step,
            values,
        })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(r_min: f64, r_max: f64, n: usize, f: F) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain("profile needs at least 2 samples".into()));
        }
        let step = (r_max / r_min).ln() / (n - 1) as f64;
        let values = (0..n)
            .map(|i| f(r_min * (i as f64 * step).exp()))
            .collect();
        Self::new(r_min, r_max, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Grid spacing in ln r.
    pub fn log_step(&self) -> f64 {
        self.log_step
    }

    pub fn radius(&self, i: usize) -> f64 {
        self.r_min * (i as f64 * self.log_step).exp()
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.radius(i)).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// The same shape on a dilated support [lambda r_min, lambda r_max].
    pub fn dilated(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Domain(format!(
                "dilation factor must be positive and finite, got {lambda}"
            )));
        }
        RadialProfile::new(self.r_min * lambda, self.r_max * lambda, self.values.clone())
    }

    /// Pointwise rescaling of the values.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        RadialProfile::new(
            self.r_min,
            self.r_max,
            self.values.iter().map(|v| c * v).collect(),
        )
    }
}

/// Smooth bump S(2(r-a)/(b-a)) S(2(b-r)/(b-a)) on [a, b], with the quintic
/// smoothstep S; the ramps meet at the midpoint.
pub fn bump_profile(a: f64, b: f64, n: usize) -> Result<RadialProfile> {
    if !(a > 0.0 && b > a) {
        return Err(Error::Domain(format!(
            "bump support needs 0 < a < b, got [{a}, {b}]"
        )));
    }
    RadialProfile::from_fn(a, b, n, |r| bump_shape(r, a, b))
}

fn bump_shape(r: f64, a: f64, b: f64) -> f64 {
    let w = 2.0 / (b - a);
    smoothstep_quintic(w * (r - a)) * smoothstep_quintic(w * (b - r))
}

/// Dilation-kernel abstraction for `tau_pair_functional`: an even kernel of
/// the pair geometry evaluated at dilation factor tau, with its tau -> 1+
/// blow-up constant and large-tau moments.
pub trait TauPairKernel: Sync {
    /// Kernel decay exponent p; the engine requires p = 2 + 2 sigma.
    fn exponent(&self) -> f64;
    /// B with K(tau) ~ B (tau-1)^{1-p} as tau -> 1+.
    fn band_constant(&self) -> f64;
    /// (total mass squared, mean cosine, mean squared cosine) of the pair
    /// measure, driving K(tau) ~ tau^{-p} mass^2 (1 + p m1/tau + ...).
    fn far_moments(&self) -> (f64, f64, f64);
    fn eval(&self, tau: f64) -> Result<f64>;
}

/// The circle-against-dilated-circle kernel, the planar Hardy case.
#[derive(Clone, Copy, Debug)]
pub struct RingTauKernel {
    p: f64,
    band: f64,
}

impl RingTauKernel {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma < 1.0) {
            return Err(Error::Domain(format!(
                "ring kernel index must lie in (0, 1), got {sigma}"
            )));
        }
        let p = 2.0 + 2.0 * sigma;
        Ok(RingTauKernel {
            p,
            band: ring_band_constant(p)?,
        })
    }
}

impl TauPairKernel for RingTauKernel {
    fn exponent(&self) -> f64 {
        self.p
    }
    fn band_constant(&self) -> f64 {
        self.band
    }
    fn far_moments(&self) -> (f64, f64, f64) {
        let two_pi = 2.0 * std::f64::consts::PI;
        (two_pi * two_pi, 0.0, 0.5)
    }
    fn eval(&self, tau: f64) -> Result<f64> {
        ring_kernel_integral(tau, self.p)
    }
}

/// Discretization controls for the dilation integral.
#[derive(Clone, Copy, Debug)]
pub struct TauIntegralParams {
    /// Grid cells next to the diagonal refined by fixed Kronrod quadrature.
    pub sub_cells: usize,
    /// The numeric dilation sum runs this far beyond the support before the
    /// analytic far expansion takes over.
    pub far_factor: f64,
}

impl Default for TauIntegralParams {
    fn default() -> Self {
        TauIntegralParams {
            sub_cells: 4,
            far_factor: 32.0,
        }
    }
}

impl TauIntegralParams {
    fn validate(&self) -> Result<()> {
        if self.sub_cells < 1 || self.sub_cells > 64 {
            return Err(Error::Domain(format!(
                "sub_cells must lie in [1, 64], got {}",
                self.sub_cells
            )));
        }
        if !(self.far_factor >= 8.0) || !self.far_factor.is_finite() {
            return Err(Error::Domain(format!(
                "far_factor must be >= 8, got {}",
                self.far_factor
            )));
        }
        Ok(())
    }
}

/// int_0^inf dr r^{1-2 sigma} int_1^inf dtau tau |zeta(r) - zeta(r tau)|^2
/// K(tau), on the profile's log grid with dilation nodes aligned to it.
///
/// Decomposition per radius node: a closed-form diagonal band from the
/// kernel's blow-up constant, Kronrod-refined cells next to it, the aligned
/// midpoint sum, and the analytic tail from the kernel's far moments. The
/// radius grid is extended below the support (where zeta(r) = 0 but
/// zeta(r tau) is not) and the remainder below that is added in closed form.
pub fn tau_pair_functional<K: TauPairKernel>(
    zeta: &RadialProfile,
    sigma: f64,
    kernel: &K,
    params: &TauIntegralParams,
) -> Result<f64> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::Domain(format!(
            "dilation integral index must lie in (0, 1), got {sigma}"
        )));
    }
    params.validate()?;
    let p = kernel.exponent();
    if ((2.0 + 2.0 * sigma) - p).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "kernel exponent {p} does not match index sigma = {sigma}; need p = 2 + 2 sigma"
        )));
    }
    let n = zeta.len();
    if n < 64 {
        return Err(Error::Domain(format!(
            "dilation integral needs at least 64 profile samples, got {n}"
        )));
    }
    let step = zeta.log_step();
    let u0 = zeta.r_min().ln();
    let values = zeta.values();
    let ext = (params.far_factor.ln() / step).ceil() as usize;
    let k_glob = n - 1 + ext;
    let sub = params.sub_cells;

    // aligned kernel values K(e^{k step}), k = sub+1 .. k_glob
    let kern_aligned: Vec<f64> = (sub + 1..=k_glob)
        .into_par_iter()
        .map(|k| kernel.eval((k as f64 * step).exp()))
        .collect::<Result<Vec<f64>>>()?;
    let kern_at = |k: usize| kern_aligned[k - sub - 1];

    // Kronrod nodes for the near-diagonal cells, shared across radii
    let mut sub_nodes: Vec<(f64, f64, f64)> = Vec::with_capacity(15 * sub);
    for c in 1..=sub {
        let lo = (0.5f64).max(c as f64 - 0.5) * step;
        let hi = (c as f64 + 0.5) * step;
        for (v, w) in gk15_points(lo, hi) {
            sub_nodes.push((v, w, kernel.eval(v.exp())?));
        }
    }

    let table = CubicTable::new(u0, step, values.to_vec());
    let u_max = u0 + (n - 1) as f64 * step;
    let zeta_of = move |u: f64| -> f64 {
        if u <= u0 || u >= u_max {
            0.0
        } else {
            table.eval(u)
        }
    };

    // centered log-slope, used only for the diagonal band
    let slope: Vec<f64> = (0..n)
        .map(|i| {
            if i == 0 {
                (values[1] - values[0]) / step
            } else if i == n - 1 {
                (values[n - 1] - values[n - 2]) / step
            } else {
                (values[i + 1] - values[i - 1]) / (2.0 * step)
            }
        })
        .collect();

    let band_const = kernel.band_constant();
    let band_exp = 4.0 - p; // = 2 - 2 sigma
    let band_factor = band_const * (0.5 * step).powf(band_exp) / band_exp;
    let (mass_sq, m1, m2) = kernel.far_moments();
    let far_tail = |t: f64| -> f64 {
        mass_sq
            * (t.powf(2.0 - p) / (p - 2.0)
                + p * m1 * t.powf(1.0 - p) / (p - 1.0)
                + (0.5 * p * (p + 2.0) * m2 - 0.5 * p) * t.powf(-p) / p)
    };

    let rows = n + ext;
    let sum = par_sum_indexed(rows, 16, |row| {
        let i = row as i64 - ext as i64; // radius index; i < 0 is below support
        let u_i = u0 + i as f64 * step;
        let zi = if i >= 0 { values[i as usize] } else { 0.0 };
        let mut acc = Accumulator::new();

        if i >= 0 {
            let s_i = slope[i as usize];
            acc.add(s_i * s_i * band_factor);
        }

        let v_hi = (sub as f64 + 0.5) * step;
        if zi != 0.0 || u_i + v_hi > u0 {
            for &(v, w, kv) in &sub_nodes {
                let d = zi - zeta_of(u_i + v);
                if d != 0.0 {
                    acc.add(w * (2.0 * v).exp() * d * d * kv);
                }
            }
        }

        let k_end = (n as i64 - 1 - i) as usize;
        let k_num = if zi != 0.0 { k_end + ext } else { k_end };
        for k in (sub + 1)..=k_num {
            let j = i + k as i64;
            let zj = if j >= 0 && j < n as i64 {
                values[j as usize]
            } else {
                0.0
            };
            let d = zi - zj;
            if d != 0.0 {
                acc.add(step * (2.0 * k as f64 * step).exp() * d * d * kern_at(k));
            }
        }

        if zi != 0.0 {
            let t_cut = ((k_num as f64 + 0.5) * step).exp();
            acc.add(zi * zi * far_tail(t_cut));
        }

        step * ((2.0 - 2.0 * sigma) * u_i).exp() * acc.total()
    });

    // radii below the extended grid: zeta(r) = 0 and every relevant tau is
    // deep in the far regime, so the double integral reduces to
    // mass^2 r_low^2/2 int zeta(q)^2 q^{1-p} dq at leading order
    let u_low = u0 - (ext as f64 + 0.5) * step;
    let q_int = sum_weighted(values, |i, z| {
        step * ((2.0 - p) * (u0 + i as f64 * step)).exp() * z * z
    });
    let below = mass_sq * 0.5 * (2.0 * u_low).exp() * q_int;

    Ok(sum + below)
}

fn sum_weighted<F: Fn(usize, f64) -> f64>(values: &[f64], f: F) -> f64 {
    let mut acc = Accumulator::new();
    for (i, &z) in values.iter().enumerate() {
        acc.add(f(i, z));
    }
    acc.total()
}

fn j_weighted(zeta: &RadialProfile, sigma: f64) -> f64 {
    let step = zeta.log_step();
    let u0 = zeta.r_min().ln();
    sum_weighted(zeta.values(), |i, z| {
        step * ((2.0 - 2.0 * sigma) * (u0 + i as f64 * step)).exp() * z * z
    })
}

/// J[zeta, sigma] = int_0^inf r^{1-2 sigma} zeta(r)^2 dr on the log grid.
pub fn j_functional(zeta: &RadialProfile, sigma: f64) -> Result<f64> {
    if !(sigma > 0.5 && sigma < 1.0) {
        return Err(Error::Domain(format!(
            "J index must lie in (1/2, 1), got {sigma}"
        )));
    }
    Ok(j_weighted(zeta, sigma))
}

/// I[zeta, sigma]: the dilation functional against the ring kernel of
/// exponent 2 + 2 sigma.
pub fn i_functional(
    zeta: &RadialProfile,
    sigma: f64,
    params: &TauIntegralParams,
) -> Result<f64> {
    if !(sigma > 0.5 && sigma < 1.0) {
        return Err(Error::Domain(format!(
            "I index must lie in (1/2, 1), got {sigma}"
        )));
    }
    let kernel = RingTauKernel::new(sigma)?;
    tau_pair_functional(zeta, sigma, &kernel, params)
}

/// Rayleigh quotient of the planar fractional Hardy inequality for a radial
/// function: the full double integral reduces by dilation symmetry to twice
/// the tau > 1 half, so the quotient is c_{2,sigma} I / (2 pi J). Always at
/// least the sharp constant.
pub fn hardy_ratio(u: &RadialProfile, order: FracOrder) -> Result<f64> {
    if order.dim() != 2 {
        return Err(Error::Domain(format!(
            "the Hardy ratio is implemented in dimension 2, got {}",
            order.dim()
        )));
    }
    let sigma = order.sigma();
    if u.max_abs() == 0.0 {
        return Err(Error::Degenerate(
            "Hardy ratio of the zero profile is undefined".into(),
        ));
    }
    let kernel = RingTauKernel::new(sigma)?;
    let i_val = tau_pair_functional(u, sigma, &kernel, &TauIntegralParams::default())?;
    let j_val = j_weighted(u, sigma);
    if j_val <= 0.0 {
        return Err(Error::Degenerate("zero Hardy denominator".into()));
    }
    Ok(frac_lap_constant(order) * i_val / (2.0 * std::f64::consts::PI * j_val))
}

/// Profile r^{sigma-1} chi(ln r) with chi a C^2 plateau cutoff: 1 on
/// [e/k, k/e], 0 outside [1/k, k], quintic-smoothstep ramps of unit log
/// width. The Hardy ratio of this family decreases toward the sharp
/// constant as k grows.
pub fn near_optimizer(sigma: f64, k: f64) -> Result<RadialProfile> {
    near_optimizer_resolved(sigma, k, 4096)
}

pub fn near_optimizer_resolved(sigma: f64, k: f64, n: usize) -> Result<RadialProfile> {
    if !(sigma > 0.5 && sigma < 1.0) {
        return Err(Error::Domain(format!(
            "near-optimizer index must lie in (1/2, 1), got {sigma}"
        )));
    }
    if !(k >= 2.0) || !k.is_finite() {
        return Err(Error::Domain(format!(
            "cutoff must satisfy k >= 2, got {k}"
        )));
    }
    if n < 64 {
        return Err(Error::Domain(format!(
            "near-optimizer needs at least 64 samples, got {n}"
        )));
    }
    let big_k = k.ln();
    RadialProfile::from_fn(1.0 / k, k, n, move |r| {
        let u = r.ln();
        r.powf(sigma - 1.0)
            * smoothstep_quintic(u + big_k)
            * smoothstep_quintic(big_k - u)
    })
}

/// Measured constant I / ((1 - sigma) J); bounded along the near-optimizer
/// family exactly when the family saturates the Hardy constant fast enough
/// in (1 - sigma).
pub fn corollary_check(zeta: &RadialProfile, sigma: f64) -> Result<f64> {
    let j_val = j_functional(zeta, sigma)?;
    if j_val <= 0.0 {
        return Err(Error::Degenerate(
            "measured constant undefined for zero profile".into(),
        ));
    }
    let i_val = i_functional(zeta, sigma, &TauIntegralParams::default())?;
    Ok(i_val / ((1.0 - sigma) * j_val))
}

/// Three reference profiles: the unit bump on [1, 2], a wide bump on
/// [1/2, 8], and a two-humped profile on [1, 5].
pub fn profile_corpus(n: usize) -> Result<Vec<(&'static str, RadialProfile)>> {
    Ok(vec![
        ("bump-1-2", bump_profile(1.0, 2.0, n)?),
        ("wide-bump", bump_profile(0.5, 8.0, n)?),
        (
            "double-hump",
            RadialProfile::from_fn(1.0, 5.0, n, |r| {
                bump_shape(r, 1.0, 2.0) + 0.8 * bump_shape(r, 2.5, 5.0)
            })?,
        ),
    ])
}

/// Writes a profile as CSV with columns r, zeta.
pub fn profile_to_csv<P: AsRef<Path>>(zeta: &RadialProfile, path: P) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref()).map_err(csv_err)?;
    w.write_record(["r", "zeta"]).map_err(csv_err)?;
    for i in 0..zeta.len() {
        w.write_record(&[
            format!("{:?}", zeta.radius(i)),
            format!("{:?}", zeta.values()[i]),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a profile from CSV, checking that the radii form a log-uniform grid.
pub fn profile_from_csv<P: AsRef<Path>>(path: P) -> Result<RadialProfile> {
    let mut r = csv::Reader::from_path(path.as_ref()).map_err(csv_err)?;
    let mut radii = Vec::new();
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != 2 {
            return Err(Error::Domain(format!(
                "profile CSV row needs 2 fields, got {}",
                rec.len()
            )));
        }
        radii.push(parse_f64(&rec[0])?);
        values.push(parse_f64(&rec[1])?);
    }
    if radii.len() < 2 {
        return Err(Error::Domain("profile CSV needs at least 2 rows".into()));
    }
    if radii.windows(2).any(|w| !(w[1] > w[0])) || radii[0] <= 0.0 {
        return Err(Error::Domain(
            "profile radii must be positive and increasing".into(),
        ));
    }
    let step = (radii[radii.len() - 1] / radii[0]).ln() / (radii.len() - 1) as f64;
    for (i, &rad) in radii.iter().enumerate() {
        let expected = radii[0] * (i as f64 * step).exp();
        if (rad / expected - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!(
                "profile radii are not log-uniform near r = {rad}"
            )));
        }
    }
    RadialProfile::new(radii[0], radii[radii.len() - 1], values)
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::Domain(format!("bad float {s:?}: {e}")))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
