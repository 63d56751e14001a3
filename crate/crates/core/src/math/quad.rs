use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

/// Adaptive Simpson quadrature with Richardson extrapolation.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 48)
}

/// 16-point Gauss-Legendre nodes and weights on [-1, 1].
const GL16_X: [f64; 8] = [
    0.0950125098376374,
    0.2816035507792589,
    0.4580167776572274,
    0.6178762444026438,
    0.7554044083550030,
    0.8656312023878318,
    0.9445750230732326,
    0.9894009349916499,
];
const GL16_W: [f64; 8] = [
    0.1894506104550685,
    0.1826034150449236,
    0.1691565193950025,
    0.1495959888165767,
    0.1246289712555339,
    0.0951585116824928,
    0.0622535239386479,
    0.0271524594117541,
];

/// Composite 16-point Gauss-Legendre rule over `panels` equal subintervals.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let c = a + (p as f64 + 0.5) * h;
        let half = 0.5 * h;
        let mut s = 0.0;
        for k in 0..8 {
            s += GL16_W[k] * (f(c + half * GL16_X[k]) + f(c - half * GL16_X[k]));
        }
        total += s * half;
    }
    total
}

/// Nodes and weights of the composite rule, for integrands evaluated in bulk.
pub fn gauss_legendre_nodes(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * 16);
    for p in 0..panels {
        let c = a + (p as f64 + 0.5) * h;
        let half = 0.5 * h;
        for k in 0..8 {
            out.push((c - half * GL16_X[k], GL16_W[k] * half));
            out.push((c + half * GL16_X[k], GL16_W[k] * half));
        }
    }
    out
}

/// Neumaier compensated accumulator. Summation order still matters for
/// bit-exactness, but rounding error stays O(ε) independent of count.
#[derive(Clone, Copy, Debug, Default)]
pub struct Kbn {
    sum: f64,
    comp: f64,
}

impl Kbn {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    /// Folds another accumulator in (used when merging chunk partials).
    pub fn merge(&mut self, other: &Kbn) {
        self.add(other.sum);
        self.add(other.comp);
    }

    /// Multiplies the accumulated value by a power of two (exact).
    pub fn scale_pow2(&mut self, factor: f64) {
        self.sum *= factor;
        self.comp *= factor;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn simpson_exp() {
        let v = adaptive_simpson(&|x: f64| x.exp(), 0.0, 1.0, 1e-12);
        assert_relative_eq!(v, core::f64::consts::E - 1.0, epsilon = 1e-11);
    }

    #[test]
    fn simpson_abs_kink() {
        let v = adaptive_simpson(&|x: f64| (2.0 * x - 1.0).abs(), 0.0, 1.0, 1e-10);
        assert_relative_eq!(v, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn gl_oscillatory() {
        // ∫0^π sin = 2, with plenty of panels to spare.
        let v = gauss_legendre(&|x: f64| x.sin(), 0.0, core::f64::consts::PI, 4);
        assert_relative_eq!(v, 2.0, epsilon = 1e-13);
    }

    #[test]
    fn kbn_recovers_cancellation() {
        let mut acc = Kbn::default();
        acc.add(1.0);
        for _ in 0..10 {
            acc.add(1e-17);
        }
        acc.add(-1.0);
        assert_relative_eq!(acc.value(), 1e-16, epsilon = 1e-30);
    }
}
