//! Adaptive Gauss-Kronrod quadrature.
//!
//! A 15-point Kronrod rule with embedded 7-point Gauss estimate, refined by
//! bisection of the worst panel. The panel queue is ordered by error with
//! ties broken on interval endpoints, so the subdivision sequence (and hence
//! the result, bit for bit) does not depend on anything but the inputs.

use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Kronrod abscissae on [-1, 1] (positive half, descending; last is 0).
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

/// 7-point Gauss weights for abscissae XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// The 15 Kronrod nodes and weights mapped onto [a, b]. Useful when the same
/// fixed rule must be shared across many integrands evaluated at identical
/// abscissae.
pub fn gk15_points(a: f64, b: f64) -> [(f64, f64); 15] {
    let centr = 0.5 * (a + b);
    let hlgth = 0.5 * (b - a);
    let mut out = [(0.0, 0.0); 15];
    for j in 0..7 {
        out[j] = (centr - hlgth * XGK[j], WGK[j] * hlgth);
        out[14 - j] = (centr + hlgth * XGK[j], WGK[j] * hlgth);
    }
    out[7] = (centr, WGK[7] * hlgth);
    out
}

/// Result of an adaptive integration.
#[derive(Clone, Copy, Debug)]
pub struct QuadResult {
    pub value: f64,
    pub abs_err: f64,
    pub evals: usize,
}

#[derive(Clone, Copy, Debug)]
struct Panel {
    err: f64,
    a: f64,
    b: f64,
    value: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        // Max-heap on error; endpoint tie-breaks keep the pop order total.
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.a.total_cmp(&self.a))
            .then_with(|| other.b.total_cmp(&self.b))
    }
}

/// One 15-point Kronrod evaluation on [a, b].
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Panel> {
    let centr = 0.5 * (a + b);
    let hlgth = 0.5 * (b - a);

    let fc = f(centr);
    let mut resg = WG[3] * fc;
    let mut resk = WGK[7] * fc;
    let mut resabs = resk.abs();
    let mut fv = [0.0f64; 15];
    fv[7] = fc;
    for j in 0..7 {
        let dx = hlgth * XGK[j];
        let f1 = f(centr - dx);
        let f2 = f(centr + dx);
        fv[j] = f1;
        fv[14 - j] = f2;
        let fsum = f1 + f2;
        resk += WGK[j] * fsum;
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * fsum;
        }
    }
    if !resk.is_finite() {
        return Err(Error::Quadrature(format!(
            "non-finite integrand on [{a}, {b}]"
        )));
    }
    let reskh = resk * 0.5;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv[j] - reskh).abs() + (fv[14 - j] - reskh).abs());
    }
    let mut abserr = ((resk - resg) * hlgth).abs();
    let resasc = resasc * hlgth.abs();
    let resabs = resabs * hlgth.abs();
    if resasc != 0.0 && abserr != 0.0 {
        abserr = resasc * f64::min(1.0, (200.0 * abserr / resasc).powf(1.5));
    }
    let eps50 = 50.0 * f64::EPSILON;
    if resabs > f64::MIN_POSITIVE / eps50 {
        abserr = f64::max(eps50 * resabs, abserr);
    }
    Ok(Panel {
        err: abserr,
        a,
        b,
        value: resk * hlgth,
    })
}

const MAX_PANELS: usize = 4096;

/// Adaptive integral of `f` over [a, b] to relative tolerance `rel_tol`
/// (with absolute floor `abs_tol`).
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<QuadResult> {
    integrate_with_breakpoints(f, &[a, b], rel_tol, abs_tol)
}

/// Adaptive integral over `[pts[0], pts[last]]` with initial panels split at
/// the given interior breakpoints (useful when the integrand has known kinks
/// or near-singular anchors).
pub fn integrate_with_breakpoints<F: Fn(f64) -> f64>(
    f: F,
    pts: &[f64],
    rel_tol: f64,
    abs_tol: f64,
) -> Result<QuadResult> {
    if pts.len() < 2 {
        return Err(Error::Quadrature("need at least two breakpoints".into()));
    }
    for w in pts.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::Quadrature(format!(
                "breakpoints must be strictly increasing, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    let rel_tol = rel_tol.max(1e-14);
    let mut heap: BinaryHeap<Panel> = BinaryHeap::new();
    let mut evals = 0usize;
    for w in pts.windows(2) {
        heap.push(gk15(&f, w[0], w[1])?);
        evals += 15;
    }

    loop {
        let mut total = 0.0;
        let mut total_err = 0.0;
        for p in heap.iter() {
            total += p.value;
            total_err += p.err;
        }
        let target = f64::max(abs_tol, rel_tol * total.abs());
        if total_err <= target {
            // Final pass: deterministic summation order (sorted by interval),
            // so the value does not depend on heap layout.
            let mut panels: Vec<Panel> = heap.into_vec();
            panels.sort_by(|p, q| p.a.total_cmp(&q.a));
            let value = crate::util::sum_compensated(panels.iter().map(|p| p.value));
            let abs_err = crate::util::sum_compensated(panels.iter().map(|p| p.err));
            return Ok(QuadResult { value, abs_err, evals });
        }
        if heap.len() >= MAX_PANELS {
            return Err(Error::Quadrature(format!(
                "panel budget exhausted: err {total_err:.3e} > target {target:.3e} with {} panels",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("heap cannot be empty here");
        let mid = 0.5 * (worst.a + worst.b);
        if !(worst.a < mid && mid < worst.b) {
            return Err(Error::Quadrature(format!(
                "interval [{}, {}] cannot be bisected further (err {:.3e})",
                worst.a, worst.b, worst.err
            )));
        }
        heap.push(gk15(&f, worst.a, mid)?);
        heap.push(gk15(&f, mid, worst.b)?);
        evals += 30;
    }
}
