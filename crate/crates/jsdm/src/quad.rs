//! Adaptive Gauss-Legendre quadrature for vector-valued complex integrands.

use crate::error::{JsdmError, Result};
use crate::linalg::{C64, ZERO};

/// Nodes and weights of the n-point Gauss-Legendre rule on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * p - pm1) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Settings for [`integrate_vec`].
#[derive(Debug, Clone)]
pub struct QuadOptions {
    /// Absolute tolerance on every output entry.
    pub tol: f64,
    /// Points per panel.
    pub order: usize,
    /// Panels of the initial uniform split.
    pub initial_panels: usize,
    /// Upper bound on the number of accepted panels.
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { tol: 1e-10, order: 20, initial_panels: 1, max_panels: 1 << 16 }
    }
}

struct Rule {
    x: Vec<f64>,
    w: Vec<f64>,
}

impl Rule {
    fn apply<F: Fn(f64, &mut [C64])>(&self, f: &F, a: f64, b: f64, buf: &mut [C64], out: &mut [C64]) {
        out.iter_mut().for_each(|z| *z = ZERO);
        let h = 0.5 * (b - a);
        let c = 0.5 * (a + b);
        for (xi, wi) in self.x.iter().zip(&self.w) {
            f(c + h * xi, buf);
            let s = h * wi;
            for (o, v) in out.iter_mut().zip(buf.iter()) {
                *o += *v * s;
            }
        }
    }
}

/// Integrates a vector-valued function over [a, b]. The closure writes the
/// `len` integrand values at its first argument into the buffer.
///
/// Each panel is accepted when halving it changes no entry by more than its
/// share tol·(panel length)/(b − a).
pub fn integrate_vec<F>(f: F, a: f64, b: f64, len: usize, opts: &QuadOptions) -> Result<Vec<C64>>
where
    F: Fn(f64, &mut [C64]),
{
    let mut total = vec![ZERO; len];
    if len == 0 || b == a {
        return Ok(total);
    }
    let (x, w) = gauss_legendre(opts.order.max(2));
    let rule = Rule { x, w };
    let width = b - a;
    let mut buf = vec![ZERO; len];
    let mut left = vec![ZERO; len];
    let mut right = vec![ZERO; len];

    let n0 = opts.initial_panels.max(1);
    let mut stack: Vec<(f64, f64, Vec<C64>)> = Vec::with_capacity(64);
    for k in (0..n0).rev() {
        let pa = a + width * k as f64 / n0 as f64;
        let pb = a + width * (k + 1) as f64 / n0 as f64;
        let mut whole = vec![ZERO; len];
        rule.apply(&f, pa, pb, &mut buf, &mut whole);
        stack.push((pa, pb, whole));
    }

    let mut accepted = 0usize;
    let mut worst = 0.0f64;
    while let Some((pa, pb, whole)) = stack.pop() {
        let mid = 0.5 * (pa + pb);
        rule.apply(&f, pa, mid, &mut buf, &mut left);
        rule.apply(&f, mid, pb, &mut buf, &mut right);
        let mut err = 0.0f64;
        for i in 0..len {
            err = err.max((left[i] + right[i] - whole[i]).norm());
        }
        let local_tol = opts.tol * (pb - pa) / width;
        let too_many = accepted + stack.len() + 2 > opts.max_panels;
        if err <= local_tol || too_many || (pb - pa) < 1e-15 * width.abs() {
            if err > local_tol {
                worst = worst.max(err * width / (pb - pa));
            }
            for i in 0..len {
                total[i] += left[i] + right[i];
            }
            accepted += 1;
        } else {
            stack.push((mid, pb, right.clone()));
            stack.push((pa, mid, left.clone()));
        }
    }
    if worst > opts.tol {
        return Err(JsdmError::Quadrature { estimate: worst, tol: opts.tol });
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
        let s0: f64 = w.iter().sum();
        assert!((s0 - 2.0).abs() < 1e-14);
    }

    #[test]
    fn oscillatory_vector_integral() {
        let freqs = [0.0, 10.0, 250.0];
        let out = integrate_vec(
            |t, buf| {
                for (k, f) in freqs.iter().enumerate() {
                    buf[k] = C64::from_polar(1.0, f * t);
                }
            },
            0.0,
            1.0,
            3,
            &QuadOptions::default(),
        )
        .unwrap();
        for (k, f) in freqs.iter().enumerate() {
            let exact = if *f == 0.0 { C64::new(1.0, 0.0) } else { (C64::from_polar(1.0, *f) - 1.0) / C64::new(0.0, *f) };
            assert!((out[k] - exact).norm() < 1e-10, "freq {f}");
        }
    }
}
