//! Analytic far fields for functions with algebraic tails.
//!
//! Conjugating π_s through the Fourier transform produces functions that decay
//! only like |x|^{-(s+1)}, far too slowly to be truncated at x_max. Such a
//! function is carried as a grid remainder plus a short expansion in
//!
//!   e_k(x) = (L² + x²)^{-(s+1+k)/2},   o_k(x) = x (L² + x²)^{-(s+2+k)/2},
//!
//! whose Fourier transforms are K-Bessel closed forms
//!
//!   F e_k(ξ) = C_ν (|ξ|/2L)^ν K_ν(L|ξ|),                ν = (s+k)/2
//!   F o_k(ξ) = -i C_ν L sgn(ξ) (|ξ|/2L)^ν K_{ν-1}(L|ξ|),  ν = (s+1+k)/2
//!
//! with C_ν = √2 / Γ(ν + 1/2) under the unitary normalization.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::sync::Arc;

use super::TableKey;
use crate::space::WeightedGrid;
use crate::special::{bessel_k_scaled, gamma};

#[derive(Debug, Clone)]
pub(crate) struct FarField {
    pub s: f64,
    pub l: f64,
    pub even: Vec<Complex64>,
    pub odd: Vec<Complex64>,
}

pub(crate) fn e_val(s: f64, l: f64, k: usize, x: f64) -> f64 {
    (l * l + x * x).powf(-(s + 1.0 + k as f64) / 2.0)
}

pub(crate) fn o_val(s: f64, l: f64, k: usize, x: f64) -> f64 {
    x * (l * l + x * x).powf(-(s + 2.0 + k as f64) / 2.0)
}

// C_ν (|ξ|/2L)^ν K_μ(L|ξ|), assembled in log space so that neither factor
// overflows for tiny ξ nor underflows prematurely for large ξ.
fn bessel_profile(nu: f64, mu: f64, l: f64, ax: f64) -> f64 {
    let z = l * ax;
    let log = nu * (ax / (2.0 * l)).ln() - z;
    if log < -745.0 {
        return 0.0;
    }
    std::f64::consts::SQRT_2 / gamma(nu + 0.5) * bessel_k_scaled(mu, z) * log.exp()
}

pub(crate) fn e_ft(s: f64, l: f64, k: usize, xi: f64) -> f64 {
    let nu = (s + k as f64) / 2.0;
    let ax = xi.abs();
    if ax == 0.0 {
        return std::f64::consts::SQRT_2 / gamma(nu + 0.5) * gamma(nu) / 2.0 * l.powf(-2.0 * nu);
    }
    bessel_profile(nu, nu, l, ax)
}

/// Imaginary part of F o_k (the real part vanishes).
pub(crate) fn o_ft_im(s: f64, l: f64, k: usize, xi: f64) -> f64 {
    let nu = (s + 1.0 + k as f64) / 2.0;
    if xi == 0.0 {
        return 0.0;
    }
    -l * xi.signum() * bessel_profile(nu, nu - 1.0, l, xi.abs())
}

fn table(grid: &WeightedGrid, key: TableKey, f: impl Fn(f64) -> f64) -> Arc<Vec<Complex64>> {
    if let Some(t) = grid.tables.lock().unwrap().get(&key) {
        return t.clone();
    }
    let imag = key.ft && key.odd;
    let sign = if key.odd { -1.0 } else { 1.0 };
    let k = grid.half();
    let pos: Vec<f64> = grid.positive_nodes().iter().map(|&x| f(x)).collect();
    let wrap = |v: f64| if imag { Complex64::new(0.0, v) } else { Complex64::new(v, 0.0) };
    let mut out = Vec::with_capacity(2 * k);
    out.extend(pos.iter().rev().map(|&v| wrap(sign * v)));
    out.extend(pos.iter().map(|&v| wrap(v)));
    let t = Arc::new(out);
    grid.tables.lock().unwrap().insert(key, t.clone());
    t
}

impl FarField {
    pub fn zero(s: f64, l: f64) -> Self {
        Self { s, l, even: Vec::new(), odd: Vec::new() }
    }

    fn key(&self, k: usize, odd: bool, ft: bool) -> TableKey {
        TableKey { s: self.s.to_bits(), l: self.l.to_bits(), k, odd, ft }
    }

    fn accumulate(&self, grid: &WeightedGrid, ft: bool) -> Vec<Complex64> {
        let (s, l) = (self.s, self.l);
        let mut out = vec![Complex64::default(); grid.n_nodes()];
        for (k, c) in self.even.iter().enumerate() {
            let t = if ft {
                table(grid, self.key(k, false, true), |x| e_ft(s, l, k, x))
            } else {
                table(grid, self.key(k, false, false), |x| e_val(s, l, k, x))
            };
            out.iter_mut().zip(t.iter()).for_each(|(o, v)| *o += c * v);
        }
        for (k, c) in self.odd.iter().enumerate() {
            let t = if ft {
                table(grid, self.key(k, true, true), |x| o_ft_im(s, l, k, x))
            } else {
                table(grid, self.key(k, true, false), |x| o_val(s, l, k, x))
            };
            out.iter_mut().zip(t.iter()).for_each(|(o, v)| *o += c * v);
        }
        out
    }

    /// Samples of the far field on the grid.
    pub fn values_on(&self, grid: &WeightedGrid) -> Vec<Complex64> {
        self.accumulate(grid, false)
    }

    /// Samples of its Fourier transform on the grid.
    pub fn transform_on(&self, grid: &WeightedGrid) -> Vec<Complex64> {
        self.accumulate(grid, true)
    }

    pub fn value(&self, x: f64) -> Complex64 {
        let (s, l) = (self.s, self.l);
        let e = self.even.iter().enumerate().map(|(k, c)| c * e_val(s, l, k, x));
        let o = self.odd.iter().enumerate().map(|(k, c)| c * o_val(s, l, k, x));
        e.chain(o).sum()
    }

    /// |z|^{-(s+1)} · value(num / z), stable as z → 0.
    ///
    /// For |y| = |num/z| > 1 the basis is rewritten in w = 1/y:
    /// e_k(y) = |num|^{-(s+1)} |z|^{s+1} |w|^k (1 + L²w²)^{-(s+1+k)/2}, and the
    /// |z|^{s+1} cancels against the prefactor.
    pub fn value_at_pole(&self, num: f64, z: f64) -> Complex64 {
        let (s, l) = (self.s, self.l);
        if num.abs() <= z.abs() {
            return z.abs().powf(-(s + 1.0)) * self.value(num / z);
        }
        let w = z / num;
        let ll = 1.0 + l * l * w * w;
        let aw = w.abs();
        let mut acc = Complex64::default();
        let mut pw = 1.0;
        for c in &self.even {
            acc += c * pw * ll.powf(-(s + 1.0) / 2.0);
            pw *= aw / ll.sqrt();
        }
        let mut pw = w.signum() / ll.sqrt();
        for c in &self.odd {
            acc += c * pw * ll.powf(-(s + 1.0) / 2.0);
            pw *= aw / ll.sqrt();
        }
        num.abs().powf(-(s + 1.0)) * acc
    }
}

/// Least squares min ‖A c − b‖ for real A and complex b, with column scaling.
pub(crate) fn lstsq(a: DMatrix<f64>, b: &[Complex64]) -> Vec<Complex64> {
    let (m, n) = a.shape();
    let scale: Vec<f64> = (0..n)
        .map(|j| a.column(j).amax().max(f64::MIN_POSITIVE))
        .collect();
    let mut a = a;
    for (j, sc) in scale.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / sc);
    }
    let rhs = DMatrix::from_fn(m, 2, |i, j| if j == 0 { b[i].re } else { b[i].im });
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let eps = f64::EPSILON * m.max(n) as f64 * smax;
    let sol = svd.solve(&rhs, eps).expect("svd computed with both factors");
    (0..n).map(|j| Complex64::new(sol[(j, 0)], sol[(j, 1)]) / scale[j]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_grid, Parity, SampledFunction};
    use crate::transforms::fourier;

    // The closed forms must agree with the quadrature transform of the basis.
    #[test]
    fn basis_transforms_match_quadrature() {
        let g = build_grid(200.0, 8192, 3.0).unwrap();
        let s = 0.5;
        let l = 1.0;
        for k in 0..3 {
            let e = SampledFunction::from_real(&g, Parity::Even, |x| e_val(s, l, k + 2, x));
            let fe = fourier(&e);
            let o = SampledFunction::from_real(&g, Parity::Odd, |x| o_val(s, l, k + 2, x));
            let fo = fourier(&o);
            for &xi in &[0.3, 1.0, 2.5] {
                let i = g.nodes().partition_point(|&x| x < xi);
                let x = g.nodes()[i];
                assert!((fe.values()[i].re - e_ft(s, l, k + 2, x)).abs() < 1e-4, "even k={k}");
                assert!((fo.values()[i].im - o_ft_im(s, l, k + 2, x)).abs() < 1e-4, "odd k={k}");
            }
        }
    }

    #[test]
    fn pole_form_matches_direct() {
        let far = FarField {
            s: 0.5,
            l: 2.0,
            even: vec![Complex64::new(1.0, 0.5), Complex64::new(-0.3, 0.0), Complex64::new(0.2, 0.1)],
            odd: vec![Complex64::new(0.7, 0.0), Complex64::new(0.0, -0.4)],
        };
        for &(num, z) in &[(3.0f64, 0.5f64), (-2.0, 0.1), (0.4, -0.02), (1.0, 1.0)] {
            let direct = z.abs().powf(-1.5) * far.value(num / z);
            let pole = far.value_at_pole(num, z);
            assert!((direct - pole).norm() < 1e-12 * direct.norm());
        }
        assert!(far.value_at_pole(1.0, 0.0).is_finite());
    }
}
