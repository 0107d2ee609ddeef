//! Fourier transform, the representations π_s and ρ_s = F π_s F⁻¹, the
//! restriction R to the diagonal subgroup, the Watson operator W = ρ_s(p),
//! dilations and the Pitt ratio.

mod far;

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::group::{GroupElement, LOWER_LEFT_EPS};
use crate::space::{norm, Parity, SampledFunction, SpaceTag, WeightedGrid};
use far::{e_ft, o_ft_im, lstsq, FarField};

/// |a + xb| at or below this is treated as the pole of π_s(g).
pub const POLE_EPS: f64 = 1e-10;

/// π_s(g) fails if more than this fraction of nodes hit the pole.
pub const MAX_CLIPPED_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepParams {
    pub s: f64,
    /// Sign-character exponent; only the trivial character is supported.
    pub epsilon_char: u8,
}

impl RepParams {
    pub fn new(s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::DomainError(format!("s = {s} outside (0, 1)")));
        }
        Ok(Self { s, epsilon_char: 0 })
    }

    pub fn h_tag(&self) -> SpaceTag {
        SpaceTag::h(self.s).expect("validated s")
    }

    pub fn v_tag(&self) -> SpaceTag {
        SpaceTag::v(self.s).expect("validated s")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) struct TableKey {
    pub s: u64,
    pub l: u64,
    pub k: usize,
    pub odd: bool,
    pub ft: bool,
}

/// cos(ξx) and sin(ξx) over the positive half-grid, packed lower-triangular
/// (both matrices are symmetric in ξ ↔ x because the grid is its own frequency grid).
pub(crate) struct FourierKernel {
    k: usize,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl FourierKernel {
    fn build(xp: &[f64]) -> Self {
        let k = xp.len();
        let len = k * (k + 1) / 2;
        let mut cos = Vec::with_capacity(len);
        let mut sin = Vec::with_capacity(len);
        for i in 0..k {
            for j in 0..=i {
                let (s, c) = (xp[i] * xp[j]).sin_cos();
                cos.push(c);
                sin.push(s);
            }
        }
        Self { k, cos, sin }
    }

    // y = A·(xr + i xi) for the packed symmetric A; one pass over the matrix.
    fn apply(&self, packed: &[f64], xr: &[f64], xi: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let k = self.k;
        let mut yr = vec![0.0; k];
        let mut yi = vec![0.0; k];
        for i in 0..k {
            let start = i * (i + 1) / 2;
            let row = &packed[start..start + i];
            let diag = packed[start + i];
            let (ar, ai) = (xr[i], xi[i]);
            let mut sr = diag * ar;
            let mut si = diag * ai;
            for (((a, &br), &bi), (yrj, yij)) in
                row.iter().zip(&xr[..i]).zip(&xi[..i]).zip(yr[..i].iter_mut().zip(yi[..i].iter_mut()))
            {
                sr += a * br;
                si += a * bi;
                *yrj += a * ar;
                *yij += a * ai;
            }
            yr[i] += sr;
            yi[i] += si;
        }
        (yr, yi)
    }
}

fn kernel(grid: &WeightedGrid) -> &FourierKernel {
    grid.kernel.get_or_init(|| FourierKernel::build(grid.positive_nodes()))
}

// (2π)^{-1/2} ∫ e^{sign·iξx} f(x) dx on the grid's own nodes, via the even/odd split.
fn transform(grid: &WeightedGrid, values: &[Complex64], sign: f64) -> Vec<Complex64> {
    let k = grid.half();
    let w = &grid.quad_weights()[k..];
    let mut er = vec![0.0; k];
    let mut ei = vec![0.0; k];
    let mut or = vec![0.0; k];
    let mut oi = vec![0.0; k];
    for j in 0..k {
        let p = values[k + j];
        let m = values[k - 1 - j];
        let e = 0.5 * (p + m) * w[j];
        let o = 0.5 * (p - m) * w[j];
        er[j] = e.re;
        ei[j] = e.im;
        or[j] = o.re;
        oi[j] = o.im;
    }
    let ker = kernel(grid);
    let c = 2.0 / (2.0 * PI).sqrt();
    let (cr, ci) = ker.apply(&ker.cos, &er, &ei);
    let (sr, si) = ker.apply(&ker.sin, &or, &oi);
    let mut out = vec![Complex64::default(); 2 * k];
    for j in 0..k {
        let even = Complex64::new(cr[j], ci[j]) * c;
        // e^{±iξx} on the odd part contributes ±i sin(ξx)
        let odd = Complex64::new(-si[j], sr[j]) * (sign * c);
        out[k + j] = even + odd;
        out[k - 1 - j] = even - odd;
    }
    out
}

/// Unitary Fourier transform (2π)^{-1/2} ∫ e^{-ixy} f(y) dy, sampled on the input grid.
pub fn fourier(f: &SampledFunction) -> SampledFunction {
    let v = transform(f.grid(), f.values(), -1.0);
    SampledFunction::from_parts(f.grid(), v, f.parity())
}

/// (2π)^{-1/2} ∫ e^{+ixy} f(y) dy.
pub fn inverse_fourier(f: &SampledFunction) -> SampledFunction {
    let v = transform(f.grid(), f.values(), 1.0);
    SampledFunction::from_parts(f.grid(), v, f.parity())
}

/// Fraction of nodes whose frequency exceeds the grid's Nyquist-style cutoff.
pub fn unresolved_fraction(grid: &WeightedGrid) -> f64 {
    let cut = grid.nyquist_cutoff();
    grid.nodes().iter().filter(|x| x.abs() > cut).count() as f64 / grid.n_nodes() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleDiagnostics {
    pub clipped: usize,
    pub total: usize,
}

fn parity_preserving(g: &GroupElement) -> bool {
    let tol = LOWER_LEFT_EPS * g.scale();
    (g.b.abs() <= tol && g.c.abs() <= tol) || (g.a.abs() <= tol && g.d.abs() <= tol)
}

/// π_s(g) evaluated pointwise:
/// |det g|^{(s+1)/2} |a + xb|^{-(s+1)} f((c + xd)/(a + xb)).
///
/// f is interpolated at the pulled-back argument and taken to vanish outside
/// [-x_max, x_max]. Nodes with |a + xb| <= [`POLE_EPS`] are set to zero and counted.
pub fn pi_s_apply(
    g: &GroupElement,
    f: &SampledFunction,
    p: &RepParams,
) -> Result<(SampledFunction, PoleDiagnostics)> {
    let s = p.s;
    let pref = g.det().abs().powf((s + 1.0) / 2.0);
    let mut clipped = 0;
    let values: Vec<Complex64> = f
        .grid()
        .nodes()
        .iter()
        .map(|&x| {
            let z = g.a + x * g.b;
            if z.abs() <= POLE_EPS {
                clipped += 1;
                return Complex64::default();
            }
            f.interp((g.c + x * g.d) / z) * (pref * z.abs().powf(-(s + 1.0)))
        })
        .collect();
    let total = values.len();
    if clipped as f64 > MAX_CLIPPED_FRACTION * total as f64 {
        return Err(Error::PoleOnGrid { clipped, total });
    }
    let parity = if parity_preserving(g) { f.parity() } else { Parity::None };
    Ok((SampledFunction::from_parts(f.grid(), values, parity), PoleDiagnostics { clipped, total }))
}

/// A function known as grid samples plus an analytic far field; the true
/// function is `rem + far` everywhere, with `rem` negligible beyond x_max.
struct Extended {
    rem: SampledFunction,
    far: FarField,
}

const CUSP_WINDOW: f64 = 0.2;
const CUSP_REGULAR: usize = 8;
const CUSP_SINGULAR: usize = 4;
const TAIL_NODES: usize = 32;
const TAIL_TERMS: usize = 13;

/// F⁻¹f with its algebraic tail split off.
///
/// A tail ~|x|^{-(s+1)} in F⁻¹f shows up as a |ξ|^s-type cusp of f at the
/// origin. The cusp is fitted on 0 < |ξ| <= 0.2 against regular powers plus the
/// transforms of the far-field basis; the fitted singular coefficients are the
/// far field and the smooth remainder is transformed numerically.
fn inverse_fourier_ext(f: &SampledFunction, s: f64) -> Extended {
    let grid = f.grid();
    let k = grid.half();
    let l = 1.0;
    let idx: Vec<usize> = (k..grid.n_nodes()).take_while(|&i| grid.nodes()[i] <= CUSP_WINDOW).collect();
    let vals = f.values();
    let xs: Vec<f64> = idx.iter().map(|&i| grid.nodes()[i]).collect();
    let even: Vec<Complex64> = idx.iter().map(|&i| 0.5 * (vals[i] + vals[grid.mirror_index(i)])).collect();
    let odd: Vec<Complex64> = idx.iter().map(|&i| 0.5 * (vals[i] - vals[grid.mirror_index(i)])).collect();
    let m = xs.len();
    let ncol = CUSP_REGULAR + CUSP_SINGULAR;
    let mut far = FarField::zero(s, l);
    if m >= ncol {
        let ae = DMatrix::from_fn(m, ncol, |r, c| {
            let x = xs[r];
            if c < CUSP_REGULAR {
                x.powi(2 * c as i32)
            } else {
                e_ft(s, l, c - CUSP_REGULAR, x)
            }
        });
        let ao = DMatrix::from_fn(m, ncol, |r, c| {
            let x = xs[r];
            if c < CUSP_REGULAR {
                x.powi(2 * c as i32 + 1)
            } else {
                o_ft_im(s, l, c - CUSP_REGULAR, x)
            }
        });
        let ce = lstsq(ae, &even);
        // the odd columns are the imaginary parts of F o_k, so rotate the coefficients
        let co = lstsq(ao, &odd);
        far.even = ce[CUSP_REGULAR..].to_vec();
        far.odd = co[CUSP_REGULAR..].iter().map(|c| c * Complex64::new(0.0, -1.0)).collect();
    }
    let ft = far.transform_on(grid);
    let smooth: Vec<Complex64> = vals.iter().zip(&ft).map(|(a, b)| a - b).collect();
    let rem = transform(grid, &smooth, 1.0);
    Extended { rem: SampledFunction::from_parts(grid, rem, f.parity()), far }
}

/// π_s(g) on an extended function; the result's tail is refitted to the far-field basis.
fn pi_apply_ext(g: &GroupElement, e: &Extended, s: f64) -> Extended {
    let grid = e.rem.grid();
    let x_max = grid.x_max();
    let pref = g.det().abs().powf((s + 1.0) / 2.0);
    let u_at = |x: f64| -> Complex64 {
        let z = g.a + x * g.b;
        let num = g.c + x * g.d;
        let mut v = e.far.value_at_pole(num, z);
        if z.abs() > 1e-300 {
            v += e.rem.interp(num / z) * z.abs().powf(-(s + 1.0));
        }
        v * pref
    };
    let u: Vec<Complex64> = grid.nodes().iter().map(|&x| u_at(x)).collect();

    // far field of u from samples at |x| = x_max / v, v in (0, 1)
    let l = x_max / 2.0;
    let ell = l / x_max;
    let vs: Vec<f64> = (0..TAIL_NODES)
        .map(|i| 0.5 * (1.0 + ((2 * i + 1) as f64 * PI / (2 * TAIL_NODES) as f64).cos()))
        .collect();
    let mut ev = Vec::with_capacity(TAIL_NODES);
    let mut od = Vec::with_capacity(TAIL_NODES);
    for &v in &vs {
        let r = x_max / v;
        let sc = r.powf(s + 1.0);
        let up = u_at(r) * sc;
        let um = u_at(-r) * sc;
        ev.push(0.5 * (up + um));
        od.push(0.5 * (up - um));
    }
    let basis = |extra: f64| {
        DMatrix::from_fn(TAIL_NODES, TAIL_TERMS, |r, c| {
            let v = vs[r];
            v.powi(c as i32) * (1.0 + ell * ell * v * v).powf(-(s + extra + c as f64) / 2.0)
        })
    };
    let al = lstsq(basis(1.0), &ev);
    let be = lstsq(basis(2.0), &od);
    let far = FarField {
        s,
        l,
        even: al.iter().enumerate().map(|(k, c)| c * x_max.powi(k as i32)).collect(),
        odd: be.iter().enumerate().map(|(k, c)| c * x_max.powi(k as i32)).collect(),
    };
    let fv = far.values_on(grid);
    let rem: Vec<Complex64> = u.iter().zip(&fv).map(|(a, b)| a - b).collect();
    let parity = if parity_preserving(g) { e.rem.parity() } else { Parity::None };
    Extended { rem: SampledFunction::from_parts(grid, rem, parity), far }
}

fn fourier_ext(e: &Extended) -> SampledFunction {
    let grid = e.rem.grid();
    let mut v = transform(grid, e.rem.values(), -1.0);
    for (a, b) in v.iter_mut().zip(e.far.transform_on(grid)) {
        *a += b;
    }
    SampledFunction::from_parts(grid, v, e.rem.parity())
}

/// ρ_s(g) = F π_s(g) F⁻¹.
///
/// The intermediate F⁻¹f lives in V_s, where it typically decays only like
/// |x|^{-(s+1)}; it is carried with an analytic far field (see `far`) so that
/// the conjugation does not lose the tail mass beyond x_max.
pub fn rho_s_apply(g: &GroupElement, f: &SampledFunction, p: &RepParams) -> SampledFunction {
    let ext = inverse_fourier_ext(f, p.s);
    let moved = pi_apply_ext(g, &ext, p.s);
    fourier_ext(&moved)
}

/// Closed form for upper-triangular q = [[a, c], [0, d]]:
/// e^{icx/d} |a|^{(1-s)/2} |d|^{(s-1)/2} f(xa/d).
pub fn rho_s_q_closed(q: &GroupElement, f: &SampledFunction, p: &RepParams) -> Result<SampledFunction> {
    if !q.is_upper_triangular() {
        return Err(Error::NotUpperTriangular(q.b));
    }
    let s = p.s;
    let amp = q.a.abs().powf((1.0 - s) / 2.0) * q.d.abs().powf((s - 1.0) / 2.0);
    let r = q.a / q.d;
    let phase = q.c / q.d;
    let grid = f.grid();
    let v = grid
        .nodes()
        .iter()
        .map(|&x| f.interp(x * r) * Complex64::from_polar(amp, phase * x))
        .collect();
    let parity = if phase == 0.0 { f.parity() } else { Parity::None };
    Ok(SampledFunction::from_parts(grid, v, parity))
}

/// R(γ) f(x) = |a|^{(1-s)/2} |d|^{(s-1)/2} f(xa/d) for diagonal γ.
pub fn r_apply(gamma: &GroupElement, f: &SampledFunction, p: &RepParams) -> Result<SampledFunction> {
    if !gamma.is_diagonal() {
        return Err(Error::NotDiagonal);
    }
    rho_s_q_closed(gamma, f, p)
}

/// W = ρ_s(p) for the Weyl element p.
pub fn watson_apply(f: &SampledFunction, p: &RepParams) -> SampledFunction {
    rho_s_apply(&GroupElement::weyl(), f, p)
}

/// T(a) f(x) = |a|^{1/2} f(ax).
pub fn dilate(a: f64, f: &SampledFunction) -> Result<SampledFunction> {
    if a == 0.0 || !a.is_finite() {
        return Err(Error::ZeroDilation);
    }
    let amp = a.abs().sqrt();
    let grid = f.grid();
    let v = grid.nodes().iter().map(|&x| f.interp(a * x) * amp).collect();
    Ok(SampledFunction::from_parts(grid, v, f.parity()))
}

/// ∫|Ff|²|x|^{-s} dx / ∫|f|²|x|^{s} dx.
pub fn pitt_ratio(f: &SampledFunction, p: &RepParams) -> Result<f64> {
    let grid = f.grid();
    let w = grid.power_weights(-p.s);
    let den: f64 = f.values().iter().zip(w.iter()).map(|(v, w)| v.norm_sqr() * w).sum();
    if !(den > 1e-14) {
        return Err(Error::DegenerateDenominator(den));
    }
    let num = norm(&fourier(f), p.h_tag()).powi(2);
    Ok(num / den)
}
