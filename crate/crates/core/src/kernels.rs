//! The singular sphere kernel, its chord-normalized lower-bound ratio, and
//! the ring and curve-pair interaction integrals that the dilation-pair
//! functionals are built from.

use crate::curves::{ConeTrace, SphericalCurve};
use crate::error::{Error, Result};
use crate::quad;
use crate::specfun::line_kernel_moment;
use crate::util::{par_sum_indexed, Accumulator, CubicTable};
use nalgebra::Vector3;

/// Parameters shared by the kernel evaluators: the fractional index s and
/// the quadrature controls.
#[derive(Clone, Debug)]
pub struct KernelParams {
    s: f64,
    quad_rel_tol: f64,
    /// Extra subdivision anchors merged into the automatic ones (rarely
    /// needed; the automatic anchors already track the near-diagonal peak).
    split_points: Vec<f64>,
}

impl KernelParams {
    pub fn new(s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Domain(format!(
                "fractional index s must lie in (0,1), got {s}"
            )));
        }
        Ok(KernelParams {
            s,
            quad_rel_tol: 1e-11,
            split_points: Vec::new(),
        })
    }

    pub fn with_tolerance(mut self, rel_tol: f64) -> Result<Self> {
        if !(1e-12..=1e-4).contains(&rel_tol) {
            return Err(Error::Domain(format!(
                "quadrature tolerance must lie in [1e-12, 1e-4], got {rel_tol}"
            )));
        }
        self.quad_rel_tol = rel_tol;
        Ok(self)
    }

    pub fn with_split_points(mut self, pts: Vec<f64>) -> Self {
        self.split_points = pts;
        self
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn quad_rel_tol(&self) -> f64 {
        self.quad_rel_tol
    }
}

/// Below this squared-half-chord the kernel is evaluated by its diagonal
/// asymptote instead of quadrature.
const NEAR_DIAGONAL_U: f64 = 1e-9;

/// Diagonal asymptote coefficient: kernel_ks ~ c(s) (2u)^{-(2+s)/2} as the
/// half-chord-squared u tends to 0. Equals the one-dimensional line-kernel
/// moment of order 0 at exponent 3+s.
pub fn ks_asymptotic_constant(s: f64) -> Result<f64> {
    line_kernel_moment(0, 3.0 + s)
}

/// Kernel as a function of u = 1 - a = |x-y|^2 / 2 for unit vectors x, y:
/// the integral of t ((t-1)^2 + 2 t u)^{-(3+s)/2} over t in (0, infinity).
///
/// Taking u directly keeps near-diagonal evaluations free of the
/// cancellation that computing 1 - x.y would suffer.
pub fn kernel_ks_u(u: f64, params: &KernelParams) -> Result<f64> {
    if !(u > 0.0) {
        return Err(Error::Singular(format!(
            "kernel diverges on the diagonal (u = {u} must be positive)"
        )));
    }
    if u > 2.0 + 1e-12 {
        return Err(Error::Domain(format!(
            "u = {u} exceeds 2, impossible for unit vectors"
        )));
    }
    let s = params.s;
    if u < NEAR_DIAGONAL_U {
        // overflow guard near the diagonal: relative error O(u) here
        return Ok(ks_asymptotic_constant(s)? * (2.0 * u).powf(-(2.0 + s) / 2.0));
    }
    let q = (3.0 + s) / 2.0;
    let f = move |t: f64| {
        let d = t - 1.0;
        t * (d * d + 2.0 * t * u).powf(-q)
    };
    let w = (2.0 * u).sqrt();
    let big_t = 8.0_f64.max(1.0 + 8.0 * w);
    let mut anchors = vec![0.0, 1.0 - w, 1.0, 1.0 + w, big_t];
    anchors.extend(
        params
            .split_points
            .iter()
            .copied()
            .filter(|&x| x > 0.0 && x < big_t),
    );
    anchors.retain(|&x| x >= 0.0);
    anchors.sort_by(|a, b| a.partial_cmp(b).unwrap());
    anchors.dedup();
    let head = quad::integrate_with_breakpoints(f, &anchors, params.quad_rel_tol, 0.0)?;
    // tail beyond big_t via t -> 1/v
    let g = move |v: f64| {
        let d = 1.0 - v;
        v.powf(s) * (d * d + 2.0 * u * v).powf(-q)
    };
    let tail = quad::integrate(g, 0.0, 1.0 / big_t, params.quad_rel_tol, 0.0)?;
    Ok(head.value + tail.value)
}

/// Kernel as a function of the cosine a = x.y; strictly positive and finite
/// for a < 1.
pub fn kernel_ks(a: f64, params: &KernelParams) -> Result<f64> {
    if a >= 1.0 {
        return Err(Error::Singular(format!(
            "kernel diverges as the cosine reaches 1 (got a = {a})"
        )));
    }
    if a < -1.0 {
        return Err(Error::Domain(format!(
            "cosine a = {a} below -1 is impossible for unit vectors"
        )));
    }
    kernel_ks_u(1.0 - a, params)
}

/// Chord-normalized kernel: kernel_ks(a) |x-y|^{2+s} with |x-y|^2 = 2 - 2a.
/// Bounded below by a positive constant uniformly in a; tends to the
/// diagonal asymptote coefficient as a -> 1.
pub fn ks_lower_bound_ratio(a: f64, params: &KernelParams) -> Result<f64> {
    if a >= 1.0 || a < -1.0 {
        return Err(Error::Domain(format!(
            "cosine must lie in [-1, 1), got {a}"
        )));
    }
    let u = 1.0 - a;
    if u < NEAR_DIAGONAL_U {
        return ks_asymptotic_constant(params.s);
    }
    Ok(kernel_ks_u(u, params)? * (2.0 * u).powf((2.0 + params.s) / 2.0))
}

/// Tabulated sphere kernel for bulk pair sums: cubic interpolation of the
/// smooth profile kernel * (2u)^{(2+s)/2} against ln u, built once per s.
#[derive(Clone, Debug)]
pub struct SphereKernel {
    s: f64,
    c_asym: f64,
    table: CubicTable,
    ln_u_min: f64,
}

impl SphereKernel {
    pub const TABLE_NODES: usize = 512;

    pub fn new(params: &KernelParams) -> Result<Self> {
        let s = params.s;
        let c_asym = ks_asymptotic_constant(s)?;
        let ln_u_min = NEAR_DIAGONAL_U.ln();
        let ln_u_max = 2.0_f64.ln();
        let n = Self::TABLE_NODES;
        let dx = (ln_u_max - ln_u_min) / (n - 1) as f64;
        let expo = (2.0 + s) / 2.0;
        let mut values = Vec::with_capacity(n);
        for i in 0..n {
            let u = (ln_u_min + dx * i as f64).exp().min(2.0);
            values.push(kernel_ks_u(u, params)? * (2.0 * u).powf(expo));
        }
        Ok(SphereKernel {
            s,
            c_asym,
            table: CubicTable::new(ln_u_min, dx, values),
            ln_u_min,
        })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn asymptotic_constant(&self) -> f64 {
        self.c_asym
    }

    /// Kernel value at half-chord-squared u = |x-y|^2 / 2.
    pub fn eval_u(&self, u: f64) -> f64 {
        let expo = (2.0 + self.s) / 2.0;
        if u < NEAR_DIAGONAL_U {
            return self.c_asym * (2.0 * u).powf(-expo);
        }
        let x = u.min(2.0).ln().max(self.ln_u_min);
        self.table.eval(x) * (2.0 * u).powf(-expo)
    }

    /// Kernel value for a concrete pair of unit vectors.
    pub fn eval_pair(&self, x: &Vector3<f64>, y: &Vector3<f64>) -> f64 {
        self.eval_u(0.5 * (x - y).norm_squared())
    }
}

/// Coefficient of the (tau-1)^{1-p} divergence of the ring integral as
/// tau -> 1 (the band constant): 2 pi sqrt(pi) Gamma((p-1)/2) / Gamma(p/2).
pub fn ring_band_constant(p: f64) -> Result<f64> {
    Ok(2.0 * std::f64::consts::PI * line_kernel_moment(0, p)?)
}

/// Interaction of a unit circle with its tau-dilate:
/// the double integral of |X - tau Y|^{-p} over S^1 x S^1, which reduces to
/// 2 pi times a single angular integral.
pub fn ring_kernel_integral(tau: f64, p: f64) -> Result<f64> {
    if p <= 2.0 {
        return Err(Error::Domain(format!("ring exponent must exceed 2, got {p}")));
    }
    if tau <= 1.0 {
        return Err(Error::Singular(format!(
            "ring integral diverges for tau <= 1 (got {tau})"
        )));
    }
    let dm1 = tau - 1.0;
    if dm1 < 1e-10 {
        return Err(Error::Singular(format!(
            "tau - 1 = {dm1:.2e} is below the evaluation floor 1e-10"
        )));
    }
    // |X - tau Y|^2 = (tau-1)^2 + 4 tau sin^2(theta/2); integrate over the
    // half-angle phi = theta/2
    let f = move |phi: f64| {
        let sp = phi.sin();
        (dm1 * dm1 + 4.0 * tau * sp * sp).powf(-p / 2.0)
    };
    let width = (dm1 / (2.0 * tau.sqrt())).min(std::f64::consts::FRAC_PI_4);
    let mut anchors = vec![0.0, width, std::f64::consts::FRAC_PI_2];
    let mut w = width;
    while w * 8.0 < std::f64::consts::FRAC_PI_2 {
        w *= 8.0;
        anchors.push(w);
    }
    anchors.sort_by(|a, b| a.partial_cmp(b).unwrap());
    anchors.dedup();
    let inner = quad::integrate_with_breakpoints(f, &anchors, 1e-11, 0.0)?;
    Ok(2.0 * std::f64::consts::PI * 4.0 * inner.value)
}

/// Interaction of two sampled curves across a dilation:
/// the double integral of |x - tau y|^{-p} over trace_a x trace_b by
/// trapezoid pair summation. tau = 1 needs disjoint curves.
pub fn curve_pair_kernel_integral(
    trace_a: &SphericalCurve,
    trace_b: &SphericalCurve,
    tau: f64,
    p: f64,
) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::Domain(format!("exponent must be positive, got {p}")));
    }
    if tau < 1.0 {
        return Err(Error::Domain(format!(
            "dilation factor must satisfy tau >= 1, got {tau}"
        )));
    }
    let wa = trace_a.arc_weights();
    let wb = trace_b.arc_weights();
    let pa = trace_a.samples();
    let pb = trace_b.samples();
    if tau == 1.0 {
        let ha = trace_a.total_length() / pa.len() as f64;
        let hb = trace_b.total_length() / pb.len() as f64;
        let mut min_sq = f64::INFINITY;
        for x in pa {
            for y in pb {
                min_sq = min_sq.min((x - y).norm_squared());
            }
        }
        let floor = 0.1 * ha.min(hb);
        if min_sq < floor * floor {
            return Err(Error::Singular(format!(
                "tau = 1 needs separated curves; closest samples are {:.3e} apart",
                min_sq.sqrt()
            )));
        }
    }
    let dm1 = tau - 1.0;
    let shift = dm1 * dm1;
    let half_p = p / 2.0;
    // row-major over trace_a with a fixed-chunk deterministic reduction
    let total = par_sum_indexed(pa.len(), 64, |i| {
        let x = &pa[i];
        let mut row = Accumulator::new();
        for (y, wj) in pb.iter().zip(&wb) {
            let dist_sq = shift + tau * (x - y).norm_squared();
            row.add(wj * dist_sq.powf(-half_p));
        }
        wa[i] * row.total()
    });
    Ok(total)
}

/// Measured constant of the curve-vs-ring comparison: the ratio of the
/// trace's dilation-pair integral at exponent 3+s to
/// H^1(trace)/(1-s) times the ring integral at the same exponent.
pub fn compare_s1_bound(trace: &ConeTrace, tau: f64, params: &KernelParams) -> Result<f64> {
    if tau <= 1.0 {
        return Err(Error::Domain(format!(
            "comparison needs tau > 1, got {tau}"
        )));
    }
    let p = 3.0 + params.s;
    let comps = trace.components();
    let mut total = Accumulator::new();
    for a in comps {
        for b in comps {
            total.add(curve_pair_kernel_integral(a, b, tau, p)?);
        }
    }
    let ring = ring_kernel_integral(tau, p)?;
    let denom = trace.total_length() / (1.0 - params.s) * ring;
    Ok(total.total() / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::make_circle;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn params(s: f64) -> KernelParams {
        KernelParams::new(s).unwrap()
    }

    #[test]
    fn antipodal_closed_form() {
        // at a = -1 the kernel is the Beta integral 1/((1+s)(2+s))
        for s in [0.5, 0.6, 0.75, 0.9, 0.95] {
            let got = kernel_ks(-1.0, &params(s)).unwrap();
            let want = 1.0 / ((1.0 + s) * (2.0 + s));
            assert!(
                (got / want - 1.0).abs() < 1e-8,
                "s={s}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn orthogonal_closed_form() {
        // at a = 0 the antiderivative is elementary: value 1/(1+s)
        for s in [0.5, 0.75, 0.9, 0.95] {
            let got = kernel_ks(0.0, &params(s)).unwrap();
            assert!((got * (1.0 + s) - 1.0).abs() < 1e-10, "s={s}: {got}");
        }
    }

    #[test]
    fn frozen_kernel_values() {
        let cases = [
            (0.5, 0.9, 1.49865652873315483985777095256),
            (0.9, 0.6, 13.5727918511947766239976950589),
            (0.999, 0.95, 15178.3805253458728791570696745),
        ];
        for (a, s, want) in cases {
            let got = kernel_ks(a, &params(s)).unwrap();
            assert!((got / want - 1.0).abs() < 1e-9, "a={a}, s={s}: {got}");
        }
    }

    #[test]
    fn diagonal_is_rejected_and_guarded() {
        let p = params(0.75);
        assert!(kernel_ks(1.0, &p).is_err());
        assert!(kernel_ks(1.5, &p).is_err());
        assert!(kernel_ks(-1.5, &p).is_err());
        // just below the diagonal the asymptotic guard takes over
        let a = 1.0 - 1e-15;
        let v = kernel_ks(a, &p).unwrap();
        assert!(v.is_finite() && v > 1e15, "{v}");
        let c = ks_asymptotic_constant(0.75).unwrap();
        let u = 1.0 - a;
        assert!((v / (c * (2.0 * u).powf(-1.375)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn asymptotic_constant_matches_extrapolated_quadrature() {
        // Richardson in u: 2 R(u) - R(2u) cancels the linear correction,
        // leaving a residual of order u^{1+s}
        for s in [0.5, 0.75, 0.9] {
            let p = params(s);
            let r = |u: f64| {
                kernel_ks_u(u, &p).unwrap() * (2.0 * u).powf((2.0 + s) / 2.0)
            };
            let extrap = 2.0 * r(4e-6) - r(8e-6);
            let closed = ks_asymptotic_constant(s).unwrap();
            assert!(
                (extrap / closed - 1.0).abs() < 1e-7,
                "s={s}: {extrap} vs {closed}"
            );
        }
    }

    #[test]
    fn frozen_asymptotic_constants() {
        let cases = [
            (0.5, 1.74803836952807987364322639326),
            (0.75, 1.65248853968636113564640071707),
            (0.9, 1.60202563651098691566517244286),
            (0.95, 1.58618501126726565084997246238),
            (0.99, 1.5738389240168124073498639064),
        ];
        for (s, want) in cases {
            let got = ks_asymptotic_constant(s).unwrap();
            assert!((got / want - 1.0).abs() < 1e-12, "s={s}");
        }
    }

    #[test]
    fn lower_bound_ratio_floor_and_limit() {
        let p = params(0.75);
        let mut min = f64::INFINITY;
        for i in 0..200 {
            let a = -1.0 + (2.0 - 1e-3) * i as f64 / 199.0;
            min = min.min(ks_lower_bound_ratio(a, &p).unwrap());
        }
        assert!(min >= 0.04, "grid minimum {min}");
        // the measured floor sits far above the asserted one
        assert!(min > 1.3, "grid minimum {min}");
        let near = ks_lower_bound_ratio(1.0 - 1e-8, &p).unwrap();
        let c = ks_asymptotic_constant(0.75).unwrap();
        assert!((near / c - 1.0).abs() < 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn lower_bound_ratio_stays_positive(
            a in -1.0..0.999f64,
            s in 0.5..0.99f64,
        ) {
            let r = ks_lower_bound_ratio(a, &params(s)).unwrap();
            prop_assert!(r >= 0.04, "ratio {r} at a={a}, s={s}");
        }
    }

    #[test]
    fn sphere_kernel_table_matches_quadrature() {
        let p = params(0.9);
        let table = SphereKernel::new(&p).unwrap();
        for i in 0..40 {
            let u = 10f64.powf(-8.0 + 8.3 * i as f64 / 39.0);
            let direct = kernel_ks_u(u, &p).unwrap();
            let interp = table.eval_u(u);
            assert!(
                (interp / direct - 1.0).abs() < 1e-6,
                "u={u:.3e}: {interp} vs {direct}"
            );
        }
        // pair form agrees with the cosine form
        let x = Vector3::new(1.0, 0.0, 0.0);
        let y = Vector3::new(0.6, 0.8, 0.0);
        let via_pair = table.eval_pair(&x, &y);
        let via_cos = kernel_ks(x.dot(&y), &p).unwrap();
        assert!((via_pair / via_cos - 1.0).abs() < 1e-6);
    }

    #[test]
    fn frozen_ring_values() {
        let cases = [
            (2.0, 3.5, 8.17454257557677247365805808127),
            (1.5, 3.9, 62.5753588291097418096694675841),
            (1.01, 3.0, 125048.091863366515156341506508),
            (1.25, 3.2, 226.407888923565139099626293242),
        ];
        for (tau, p, want) in cases {
            let got = ring_kernel_integral(tau, p).unwrap();
            assert!(
                (got / want - 1.0).abs() < 1e-9,
                "tau={tau}, p={p}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn ring_far_field_scaling() {
        // tau^p Ring -> (2 pi)^2 from above, monotonically, with the
        // relative correction p^2 / (4 tau^2)
        let p = 3.5;
        let lim = 4.0 * PI * PI;
        let taus = [10.0, 30.0, 100.0];
        let vals: Vec<f64> = taus
            .iter()
            .map(|&tau| ring_kernel_integral(tau, p).unwrap() * tau.powf(p))
            .collect();
        assert!(vals[0] > vals[1] && vals[1] > vals[2]);
        assert!(vals[2] > lim && (vals[2] / lim - 1.0) < 1e-3);
        for (&tau, &v) in taus.iter().zip(&vals) {
            let correction = 1.0 + p * p / (4.0 * tau * tau);
            assert!((v / (lim * correction) - 1.0).abs() < 1e-3, "tau={tau}");
        }
    }

    #[test]
    fn ring_matches_product_rule_oracle() {
        // naive 2D trapezoid over both angles
        let (tau, p) = (2.0, 3.0);
        let n = 1024;
        let mut acc = Accumulator::new();
        for i in 0..n {
            let th1 = 2.0 * PI * i as f64 / n as f64;
            for j in 0..n {
                let th2 = 2.0 * PI * j as f64 / n as f64;
                let d = (th1 - th2).cos();
                acc.add((1.0 + tau * tau - 2.0 * tau * d).powf(-p / 2.0));
            }
        }
        let brute = acc.total() * (2.0 * PI / n as f64) * (2.0 * PI / n as f64);
        let fast = ring_kernel_integral(tau, p).unwrap();
        assert!((fast / brute - 1.0).abs() < 1e-6, "{fast} vs {brute}");
    }

    #[test]
    fn ring_rejects_the_diagonal() {
        assert!(ring_kernel_integral(1.0, 3.5).is_err());
        assert!(ring_kernel_integral(1.0 + 1e-12, 3.5).is_err());
        assert!(ring_kernel_integral(0.5, 3.5).is_err());
        assert!(ring_kernel_integral(2.0, 1.5).is_err());
    }

    #[test]
    fn ring_near_diagonal_matches_band_asymptote() {
        let p = 3.9;
        let tau = 1.0 + 1e-7;
        let got = ring_kernel_integral(tau, p).unwrap();
        let asym = ring_band_constant(p).unwrap() * (tau - 1.0).powf(1.0 - p);
        assert!((got / asym - 1.0).abs() < 1e-5, "{got} vs {asym}");
    }

    #[test]
    fn equator_pair_equals_ring() {
        let c = make_circle(&Vector3::z(), PI / 2.0, 2048).unwrap();
        let (tau, p) = (2.0, 3.75);
        let pair = curve_pair_kernel_integral(&c, &c, tau, p).unwrap();
        let ring = ring_kernel_integral(tau, p).unwrap();
        assert!((pair / ring - 1.0).abs() < 1e-5, "{pair} vs {ring}");
    }

    #[test]
    fn parallel_circles_baseline() {
        // continuum value from an independent 1D-reduction oracle
        let top = make_circle(&Vector3::z(), 0.25f64.acos(), 2048).unwrap();
        let bot = make_circle(&Vector3::z(), (-0.25f64).acos(), 2048).unwrap();
        let got = curve_pair_kernel_integral(&top, &bot, 1.0, 2.75).unwrap();
        let want = 46.05627885071749;
        assert!((got / want - 1.0).abs() < 1e-5, "{got} vs {want}");
        // symmetric under swapping the factors
        let swapped = curve_pair_kernel_integral(&bot, &top, 1.0, 2.75).unwrap();
        assert!((got / swapped - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pair_sum_is_resolution_stable() {
        let mk = |n| make_circle(&Vector3::z(), 0.25f64.acos(), n).unwrap();
        let mk_b = |n| make_circle(&Vector3::z(), (-0.25f64).acos(), n).unwrap();
        let coarse = curve_pair_kernel_integral(&mk(512), &mk_b(512), 1.0, 2.75).unwrap();
        let fine = curve_pair_kernel_integral(&mk(1024), &mk_b(1024), 1.0, 2.75).unwrap();
        assert!((coarse / fine - 1.0).abs() < 1e-4);
    }

    #[test]
    fn touching_curves_rejected_at_tau_one() {
        let c = make_circle(&Vector3::z(), PI / 2.0, 256).unwrap();
        assert!(curve_pair_kernel_integral(&c, &c, 1.0, 2.75).is_err());
        assert!(curve_pair_kernel_integral(&c, &c, 0.9, 2.75).is_err());
    }

    #[test]
    fn maximal_circle_comparison_reduces_to_one_minus_s() {
        let c = make_circle(&Vector3::z(), PI / 2.0, 2048).unwrap();
        let trace = ConeTrace::new(vec![c], vec![1]).unwrap();
        let s = 0.9;
        let got = compare_s1_bound(&trace, 1.5, &params(s)).unwrap();
        let want = (1.0 - s) / (2.0 * PI);
        assert!((got / want - 1.0).abs() < 1e-5, "{got} vs {want}");
        assert!(got <= 1.0);
    }

    #[test]
    fn parallel_circles_comparison_baseline() {
        let top = make_circle(&Vector3::z(), 0.25f64.acos(), 1024).unwrap();
        let bot = make_circle(&Vector3::z(), (-0.25f64).acos(), 1024).unwrap();
        let trace = ConeTrace::new(vec![top, bot], vec![1, -1]).unwrap();
        let got = compare_s1_bound(&trace, 1.5, &params(0.9)).unwrap();
        let want = 0.020251526456908493;
        assert!((got / want - 1.0).abs() < 1e-4, "{got} vs {want}");
        // invariant under rotating the whole trace
        let rot = nalgebra::Rotation3::from_axis_angle(
            &nalgebra::Unit::new_normalize(Vector3::new(1.0, 0.5, -0.2)),
            0.8,
        );
        let rotated = ConeTrace::new(
            trace
                .components()
                .iter()
                .map(|c| {
                    SphericalCurve::new(c.samples().iter().map(|q| rot * q).collect(), true)
                        .unwrap()
                })
                .collect(),
            vec![1, -1],
        )
        .unwrap();
        let got_rot = compare_s1_bound(&rotated, 1.5, &params(0.9)).unwrap();
        assert!((got / got_rot - 1.0).abs() < 1e-9);
    }

    #[test]
    fn params_validate_inputs() {
        assert!(KernelParams::new(0.0).is_err());
        assert!(KernelParams::new(1.0).is_err());
        assert!(KernelParams::new(0.5)
            .unwrap()
            .with_tolerance(1e-2)
            .is_err());
    }
}
