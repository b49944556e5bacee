//! Numeric utilities: compensated summation, deterministic parallel
//! reduction, grids, and uniform-grid cubic interpolation.

use rayon::prelude::*;

/// Neumaier compensated accumulator.
///
/// Adding values in a fixed order through this accumulator gives a sum whose
/// error is O(1) ulp independent of the number of terms, and the result is a
/// pure function of the input order. All reductions in this crate that feed
/// reported numbers go through fixed-order compensated sums so repeated runs
/// are byte-identical.
#[derive(Clone, Copy, Debug, Default)]
pub struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    pub fn new() -> Self {
        Accumulator { sum: 0.0, comp: 0.0 }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of an iterator in its iteration order.
pub fn sum_compensated<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut acc = Accumulator::new();
    for x in xs {
        acc.add(x);
    }
    acc.total()
}

/// Deterministic parallel sum of `f(0) + f(1) + ... + f(n-1)`.
///
/// The index range is split into fixed-size chunks; each chunk is summed
/// sequentially with compensation and the per-chunk partials are combined in
/// chunk order. The result is therefore bit-identical for any worker count,
/// including serial execution.
pub fn par_sum_indexed<F>(n: usize, chunk: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    assert!(chunk > 0, "chunk size must be positive");
    if n == 0 {
        return 0.0;
    }
    let n_chunks = n.div_ceil(chunk);
    let partials: Vec<f64> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * chunk;
            let hi = usize::min(lo + chunk, n);
            let mut acc = Accumulator::new();
            for i in lo..hi {
                acc.add(f(i));
            }
            acc.total()
        })
        .collect();
    sum_compensated(partials)
}

/// `n` evenly spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "linspace needs at least two points");
    let step = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { b } else { a + step * i as f64 })
        .collect()
}

/// `n` logarithmically spaced points from `a` to `b` inclusive (`a, b > 0`).
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(a > 0.0 && b > 0.0, "logspace endpoints must be positive");
    linspace(a.ln(), b.ln(), n).into_iter().map(f64::exp).collect()
}

/// Quintic smoothstep: 0 for `x <= 0`, 1 for `x >= 1`, C^2 across the joins.
pub fn smoothstep_quintic(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        x * x * x * (10.0 + x * (-15.0 + 6.0 * x))
    }
}

/// Cubic Lagrange interpolation on a uniform grid.
///
/// Stores `values[i] = f(x0 + i*dx)` and evaluates with the 4-point stencil
/// centered on the query; near the ends the stencil is clamped into range.
/// `weights` exposes the stencil so callers can apply the same interpolation
/// to several tables at once.
#[derive(Clone, Debug)]
pub struct CubicTable {
    x0: f64,
    dx: f64,
    values: Vec<f64>,
}

impl CubicTable {
    pub fn new(x0: f64, dx: f64, values: Vec<f64>) -> Self {
        assert!(dx > 0.0, "grid step must be positive");
        assert!(values.len() >= 4, "cubic interpolation needs >= 4 nodes");
        CubicTable { x0, dx, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Stencil base index and the four Lagrange weights for `x`.
    ///
    /// Queries outside the grid are clamped to the end stencils; callers that
    /// need strict range control should check bounds themselves.
    pub fn weights_on(n: usize, x0: f64, dx: f64, x: f64) -> (usize, [f64; 4]) {
        debug_assert!(n >= 4);
        let t = (x - x0) / dx;
        // Center the 4-point stencil on the query, clamped into the table.
        let mut base = (t.floor() as isize) - 1;
        base = base.clamp(0, n as isize - 4);
        let base = base as usize;
        let u = t - base as f64; // in [~1, ~2] for interior queries
        let um0 = u;
        let um1 = u - 1.0;
        let um2 = u - 2.0;
        let um3 = u - 3.0;
        let w0 = -um1 * um2 * um3 / 6.0;
        let w1 = um0 * um2 * um3 / 2.0;
        let w2 = -um0 * um1 * um3 / 2.0;
        let w3 = um0 * um1 * um2 / 6.0;
        (base, [w0, w1, w2, w3])
    }

    pub fn weights(&self, x: f64) -> (usize, [f64; 4]) {
        Self::weights_on(self.values.len(), self.x0, self.dx, x)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (base, w) = self.weights(x);
        let v = &self.values[base..base + 4];
        w[0] * v[0] + w[1] * v[1] + w[2] * v[2] + w[3] * v[3]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        // 1 + 1e-16 * 10^4 loses the small terms in naive order; the
        // compensated sum keeps them.
        let mut xs = vec![1.0f64];
        xs.extend(std::iter::repeat(1e-16).take(10_000));
        let naive: f64 = xs.iter().sum();
        let comp = sum_compensated(xs.iter().copied());
        assert_eq!(naive, 1.0);
        assert!((comp - (1.0 + 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn par_sum_matches_serial_bitwise() {
        let f = |i: usize| ((i as f64) * 0.37).sin() / ((i + 1) as f64);
        let serial = par_sum_indexed(100_000, 1024, f);
        // Re-run; rayon scheduling must not change the bits.
        for _ in 0..3 {
            let again = par_sum_indexed(100_000, 1024, f);
            assert_eq!(serial.to_bits(), again.to_bits());
        }
    }

    #[test]
    fn cubic_table_reproduces_cubics_exactly() {
        // Cubic Lagrange interpolation is exact on cubic polynomials.
        let f = |x: f64| 2.0 - x + 0.5 * x * x - 0.125 * x * x * x;
        let values: Vec<f64> = (0..50).map(|i| f(0.3 * i as f64)).collect();
        let table = CubicTable::new(0.0, 0.3, values);
        for &x in &[0.0, 0.05, 1.0, 7.77, 14.6, 14.7] {
            assert!((table.eval(x) - f(x)).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn smoothstep_is_monotone_and_clamped() {
        assert_eq!(smoothstep_quintic(-1.0), 0.0);
        assert_eq!(smoothstep_quintic(2.0), 1.0);
        let mut prev = 0.0;
        for i in 0..=100 {
            let v = smoothstep_quintic(i as f64 / 100.0);
            assert!(v >= prev);
            prev = v;
        }
        assert!((smoothstep_quintic(0.5) - 0.5).abs() < 1e-15);
    }
}
