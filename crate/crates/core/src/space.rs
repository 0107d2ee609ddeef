//! Discretized weighted L² spaces on a symmetric, zero-avoiding graded grid.
//!
//! Nodes sit at ±x_max·(k/K)^g, k = 1..K. Quadrature is the trapezoid rule in
//! the uniform variable t = (|x|/x_max)^{1/g}, with Gregory end weights at
//! t = 1 and a generalized Euler–Maclaurin correction at t = 0 that accounts
//! for both the missing node at the origin and the |x|^{-σ} weight. Each
//! measure |x|^{-σ} dx gets its own weight vector, so singular weights are
//! integrated exactly rather than sampled.

use num_complex::Complex64;
use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::special::zeta;

pub const DEFAULT_X_MAX: f64 = 40.0;
pub const DEFAULT_NODES: usize = 8192;
pub const DEFAULT_GRADING: f64 = 3.0;

// Gregory end weights, outermost node first.
const GREGORY: [f64; 4] = [17.0 / 48.0, 59.0 / 48.0, 43.0 / 48.0, 49.0 / 48.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    /// L²((1+x²)^s dx)
    V,
    /// L²(|x|^{-s} dx)
    H,
    PlainL2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceTag {
    pub kind: SpaceKind,
    pub s: f64,
}

impl SpaceTag {
    pub fn v(s: f64) -> Result<Self> {
        check_s(s)?;
        Ok(Self { kind: SpaceKind::V, s })
    }

    pub fn h(s: f64) -> Result<Self> {
        check_s(s)?;
        Ok(Self { kind: SpaceKind::H, s })
    }

    pub fn plain() -> Self {
        Self { kind: SpaceKind::PlainL2, s: 0.0 }
    }
}

fn check_s(s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::DomainError(format!("s = {s} outside (0, 1)")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum MeasureKey {
    /// |x|^{-σ} dx, keyed by the bits of σ
    Power(u64),
    /// (1+x²)^s dx
    Bracket(u64),
}

pub struct WeightedGrid {
    x_max: f64,
    n_nodes: usize,
    grading: f64,
    nodes: Vec<f64>,
    quad_weights: Arc<Vec<f64>>,
    measures: Mutex<HashMap<MeasureKey, Arc<Vec<f64>>>>,
    pub(crate) kernel: OnceLock<crate::transforms::FourierKernel>,
    pub(crate) tables: Mutex<HashMap<crate::transforms::TableKey, Arc<Vec<Complex64>>>>,
}

impl fmt::Debug for WeightedGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightedGrid")
            .field("x_max", &self.x_max)
            .field("n_nodes", &self.n_nodes)
            .field("grading", &self.grading)
            .finish()
    }
}

impl PartialEq for WeightedGrid {
    fn eq(&self, other: &Self) -> bool {
        self.x_max == other.x_max && self.n_nodes == other.n_nodes && self.grading == other.grading
    }
}

pub fn build_grid(x_max: f64, n_nodes: usize, grading: f64) -> Result<Arc<WeightedGrid>> {
    if !(x_max > 0.0 && x_max.is_finite()) {
        return Err(Error::BadGridConfig(format!("x_max = {x_max} must be positive")));
    }
    if n_nodes < 16 || n_nodes % 2 != 0 {
        return Err(Error::BadGridConfig(format!("n_nodes = {n_nodes} must be even and >= 16")));
    }
    if !(grading >= 1.0 && grading.is_finite()) {
        return Err(Error::BadGridConfig(format!("grading = {grading} must be >= 1")));
    }
    let k = n_nodes / 2;
    let xp: Vec<f64> = (1..=k).map(|i| x_max * (i as f64 / k as f64).powf(grading)).collect();
    let wp = half_weights(x_max, k, grading, 0.0);
    if wp.iter().any(|&w| w <= 0.0) {
        return Err(Error::BadGridConfig("non-positive quadrature weight".into()));
    }
    Ok(Arc::new(WeightedGrid {
        x_max,
        n_nodes,
        grading,
        nodes: mirror(&xp, -1.0),
        quad_weights: Arc::new(mirror(&wp, 1.0)),
        measures: Mutex::new(HashMap::new()),
        kernel: OnceLock::new(),
        tables: Mutex::new(HashMap::new()),
    }))
}

pub fn default_grid() -> Result<Arc<WeightedGrid>> {
    build_grid(DEFAULT_X_MAX, DEFAULT_NODES, DEFAULT_GRADING)
}

fn mirror(pos: &[f64], sign: f64) -> Vec<f64> {
    pos.iter().rev().map(|v| sign * v).chain(pos.iter().copied()).collect()
}

/// Positive-side weights for ∫₀^X |x|^{-σ} u(x) dx.
///
/// With x = X t^g the integral is g X^{1-σ} ∫₀¹ t^β u dt, β = g(1-σ) - 1.
/// The trapezoid sum over t = h..1 misses the endpoint behaviour t^β at 0;
/// the leading correction is -ζ(-β) h^{β+1} u(0), applied at the innermost node.
fn half_weights(x_max: f64, k: usize, g: f64, sigma: f64) -> Vec<f64> {
    let h = 1.0 / k as f64;
    let beta = g * (1.0 - sigma) - 1.0;
    let coef = g * x_max.powf(1.0 - sigma);
    let mut w: Vec<f64> = (1..=k).map(|i| h * coef * (i as f64 * h).powf(beta)).collect();
    for (j, c) in GREGORY.iter().enumerate() {
        w[k - 1 - j] *= c;
    }
    w[0] += -zeta(-beta) * coef * h.powf(beta + 1.0);
    w
}

impl WeightedGrid {
    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn quad_weights(&self) -> &[f64] {
        &self.quad_weights
    }

    pub fn half(&self) -> usize {
        self.n_nodes / 2
    }

    /// Positive nodes in increasing order.
    pub fn positive_nodes(&self) -> &[f64] {
        &self.nodes[self.half()..]
    }

    /// Index of the node at -x for the node at index i.
    pub fn mirror_index(&self, i: usize) -> usize {
        self.n_nodes - 1 - i
    }

    /// Largest gap between neighbouring nodes.
    pub fn max_spacing(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Frequencies above π / max-spacing are not resolved by the quadrature.
    pub fn nyquist_cutoff(&self) -> f64 {
        std::f64::consts::PI / self.max_spacing()
    }

    fn measure(&self, key: MeasureKey) -> Arc<Vec<f64>> {
        let mut cache = self.measures.lock().unwrap();
        cache
            .entry(key)
            .or_insert_with(|| {
                let w = match key {
                    MeasureKey::Power(bits) => {
                        let sigma = f64::from_bits(bits);
                        mirror(&half_weights(self.x_max, self.half(), self.grading, sigma), 1.0)
                    }
                    MeasureKey::Bracket(bits) => {
                        let s = f64::from_bits(bits);
                        self.nodes
                            .iter()
                            .zip(self.quad_weights.iter())
                            .map(|(x, w)| w * (1.0 + x * x).powf(s))
                            .collect()
                    }
                };
                Arc::new(w)
            })
            .clone()
    }

    /// Weights for ∫ u(x) |x|^{-σ} dx, σ < 1.
    pub fn power_weights(&self, sigma: f64) -> Arc<Vec<f64>> {
        if sigma == 0.0 {
            return self.quad_weights.clone();
        }
        self.measure(MeasureKey::Power(sigma.to_bits()))
    }

    /// Weights for the measure of a space tag.
    pub fn weights(&self, tag: SpaceTag) -> Arc<Vec<f64>> {
        match tag.kind {
            SpaceKind::PlainL2 => self.quad_weights.clone(),
            SpaceKind::H => self.power_weights(tag.s),
            SpaceKind::V => self.measure(MeasureKey::Bracket(tag.s.to_bits())),
        }
    }

    /// Plain quadrature of a real function.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(self.quad_weights.iter()).map(|(&x, w)| w * f(x)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
    None,
}

impl Parity {
    fn combine(self, other: Parity) -> Parity {
        if self == other {
            self
        } else {
            Parity::None
        }
    }
}

/// Tolerance for declared parity, relative to the largest sample.
pub const PARITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SampledFunction {
    grid: Arc<WeightedGrid>,
    values: Vec<Complex64>,
    parity: Parity,
}

impl SampledFunction {
    pub fn new(grid: &Arc<WeightedGrid>, values: Vec<Complex64>, parity: Parity) -> Result<Self> {
        if values.len() != grid.n_nodes {
            return Err(Error::GridMismatch);
        }
        let f = Self { grid: grid.clone(), values, parity };
        if f.parity_defect(parity) > PARITY_TOL * f.max_abs().max(f64::MIN_POSITIVE) {
            return Err(Error::DomainError(format!("samples are not {parity:?}")));
        }
        Ok(f)
    }

    /// Samples `f` at every node. Parity is enforced by evaluating on x > 0 only.
    pub fn from_fn(grid: &Arc<WeightedGrid>, parity: Parity, f: impl Fn(f64) -> Complex64) -> Self {
        let k = grid.half();
        let mut values: Vec<Complex64> = grid.nodes.iter().map(|&x| f(x)).collect();
        let sign = match parity {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
            Parity::None => 0.0,
        };
        if parity != Parity::None {
            for i in 0..k {
                values[i] = sign * values[grid.mirror_index(i)];
            }
        }
        Self { grid: grid.clone(), values, parity }
    }

    pub fn from_real(grid: &Arc<WeightedGrid>, parity: Parity, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, parity, |x| Complex64::new(f(x), 0.0))
    }

    pub fn zeros(grid: &Arc<WeightedGrid>) -> Self {
        Self { grid: grid.clone(), values: vec![Complex64::default(); grid.n_nodes], parity: Parity::Even }
    }

    /// λ(x) = e^{-x²/2}.
    pub fn gaussian(grid: &Arc<WeightedGrid>) -> Self {
        Self::from_real(grid, Parity::Even, |x| (-x * x / 2.0).exp())
    }

    /// μ(x) = x e^{-x²/2}.
    pub fn gaussian_moment(grid: &Arc<WeightedGrid>) -> Self {
        Self::from_real(grid, Parity::Odd, |x| x * (-x * x / 2.0).exp())
    }

    pub fn grid(&self) -> &Arc<WeightedGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn with_parity(mut self, parity: Parity) -> Self {
        self.parity = parity;
        self
    }

    pub(crate) fn from_parts(grid: &Arc<WeightedGrid>, values: Vec<Complex64>, parity: Parity) -> Self {
        debug_assert_eq!(values.len(), grid.n_nodes);
        Self { grid: grid.clone(), values, parity }
    }

    pub fn same_grid(&self, other: &SampledFunction) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    fn check_grid(&self, other: &SampledFunction) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// max |f(x) ∓ f(-x)| for the given parity.
    pub fn parity_defect(&self, parity: Parity) -> f64 {
        let sign = match parity {
            Parity::Even => -1.0,
            Parity::Odd => 1.0,
            Parity::None => return 0.0,
        };
        (0..self.grid.half())
            .map(|i| (self.values[i] + sign * self.values[self.grid.mirror_index(i)]).norm())
            .fold(0.0, f64::max)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
            parity: self.parity,
        }
    }

    /// self + c·other
    pub fn axpy(&self, c: Complex64, other: &SampledFunction) -> Result<Self> {
        self.check_grid(other)?;
        Ok(Self {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect(),
            parity: self.parity.combine(other.parity),
        })
    }

    pub fn add(&self, other: &SampledFunction) -> Result<Self> {
        self.axpy(Complex64::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &SampledFunction) -> Result<Self> {
        self.axpy(Complex64::new(-1.0, 0.0), other)
    }

    /// Pointwise product with a function of x.
    pub fn modulate(&self, parity: Parity, m: impl Fn(f64) -> Complex64) -> Self {
        let values = self.grid.nodes.iter().zip(&self.values).map(|(&x, v)| v * m(x)).collect();
        Self { grid: self.grid.clone(), values, parity }
    }

    /// Cubic Lagrange interpolation on the four surrounding nodes; zero outside [-x_max, x_max].
    pub fn interp(&self, q: f64) -> Complex64 {
        interp_cubic(&self.grid.nodes, &self.values, self.grid.x_max, q)
    }

    /// |f(±x_max)|² relative to the peak of |f|²: a truncation diagnostic.
    pub fn tail_ratio(&self) -> f64 {
        let n = self.values.len();
        let edge = self.values[0].norm().max(self.values[n - 1].norm());
        let peak = self.max_abs();
        if peak == 0.0 {
            0.0
        } else {
            (edge / peak).powi(2)
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,re,im")?;
        for (x, v) in self.grid.nodes.iter().zip(&self.values) {
            writeln!(out, "{:.16e},{:.16e},{:.16e}", x, v.re, v.im)?;
        }
        Ok(())
    }

    /// Reads a CSV written by [`SampledFunction::write_csv`]; the x column must match the grid.
    pub fn read_csv<R: BufRead>(grid: &Arc<WeightedGrid>, input: R, parity: Parity) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| Error::Csv("empty input".into()))??;
        if header.trim() != "x,re,im" {
            return Err(Error::Csv(format!("unexpected header `{header}`")));
        }
        let mut values = Vec::with_capacity(grid.n_nodes);
        for (row, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(Error::Csv(format!("row {}: expected 3 columns", row + 1)));
            }
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|e| Error::Csv(format!("row {}: {e}", row + 1)))
            };
            let (x, re, im) = (parse(cols[0])?, parse(cols[1])?, parse(cols[2])?);
            let idx = values.len();
            if idx >= grid.n_nodes || (x - grid.nodes[idx]).abs() > 1e-12 * grid.x_max {
                return Err(Error::GridMismatch);
            }
            values.push(Complex64::new(re, im));
        }
        Self::new(grid, values, parity)
    }
}

pub(crate) fn interp_cubic(nodes: &[f64], values: &[Complex64], x_max: f64, q: f64) -> Complex64 {
    if !(q.abs() <= x_max) {
        return Complex64::default();
    }
    let n = nodes.len();
    // first index with nodes[j] >= q
    let j = nodes.partition_point(|&x| x < q);
    let j0 = j.saturating_sub(2).min(n - 4);
    let xs = &nodes[j0..j0 + 4];
    let mut acc = Complex64::default();
    for a in 0..4 {
        let mut l = 1.0;
        for b in 0..4 {
            if a != b {
                l *= (q - xs[b]) / (xs[a] - xs[b]);
            }
        }
        acc += values[j0 + a] * l;
    }
    acc
}

/// ∫ f conj(g) w dx for the tag's measure.
pub fn inner_product(f: &SampledFunction, g: &SampledFunction, tag: SpaceTag) -> Result<Complex64> {
    f.check_grid(g)?;
    let w = f.grid.weights(tag);
    Ok(f.values
        .iter()
        .zip(&g.values)
        .zip(w.iter())
        .map(|((a, b), w)| a * b.conj() * w)
        .sum())
}

pub fn norm(f: &SampledFunction, tag: SpaceTag) -> f64 {
    let w = f.grid.weights(tag);
    f.values.iter().zip(w.iter()).map(|(v, w)| v.norm_sqr() * w).sum::<f64>().sqrt()
}

/// Even or odd part (f(x) ± f(-x))/2.
pub fn parity_project(f: &SampledFunction, which: Parity) -> SampledFunction {
    let sign = match which {
        Parity::Even => 1.0,
        Parity::Odd => -1.0,
        Parity::None => return f.clone(),
    };
    let g = &f.grid;
    let values = (0..g.n_nodes)
        .map(|i| 0.5 * (f.values[i] + sign * f.values[g.mirror_index(i)]))
        .collect();
    SampledFunction { grid: g.clone(), values, parity: which }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gamma;
    use std::f64::consts::PI;

    #[test]
    fn rejects_bad_configs() {
        assert!(build_grid(40.0, 8, 3.0).is_err());
        assert!(build_grid(40.0, 17, 3.0).is_err());
        assert!(build_grid(-1.0, 64, 3.0).is_err());
        assert!(build_grid(40.0, 64, 0.5).is_err());
    }

    #[test]
    fn grid_shape() {
        let g = build_grid(10.0, 64, 3.0).unwrap();
        let x = g.nodes();
        assert_eq!(x.len(), 64);
        assert!(x.windows(2).all(|w| w[0] < w[1]));
        assert!(x.iter().all(|&v| v != 0.0));
        for i in 0..64 {
            assert_eq!(x[i], -x[g.mirror_index(i)]);
        }
        assert_eq!(x[63], 10.0);
        assert!(g.quad_weights().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn uniform_when_grading_one() {
        let g = build_grid(5.0, 100, 1.0).unwrap();
        let x = g.positive_nodes();
        for w in x.windows(2) {
            assert!((w[1] - w[0] - 2.0 * 5.0 / 100.0).abs() < 1e-14);
        }
    }

    #[test]
    fn weights_sum_to_interval_length() {
        for &(xm, gr) in &[(40.0, 3.0), (10.0, 1.0), (7.5, 2.5)] {
            let g = build_grid(xm, 8192, gr).unwrap();
            let total: f64 = g.quad_weights().iter().sum();
            assert!((total / (2.0 * xm) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn gaussian_integral() {
        let g = build_grid(10.0, 8192, 3.0).unwrap();
        let v = g.integrate(|x| (-x * x).exp());
        assert!((v - PI.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn singular_weight_integral() {
        let g = build_grid(1.0, 8192, 3.0).unwrap();
        let v: f64 = g.power_weights(0.5).iter().sum();
        assert!((v - 4.0).abs() < 1e-4);
    }

    #[test]
    fn gaussian_h_norm() {
        let g = default_grid().unwrap();
        let lam = SampledFunction::gaussian(&g);
        let ip = inner_product(&lam, &lam, SpaceTag::h(0.5).unwrap()).unwrap();
        assert!((ip.re - gamma(0.25)).abs() < 1e-4);
        assert_eq!(ip.im, 0.0);
        assert!((norm(&lam, SpaceTag::plain()) - PI.powf(0.25)).abs() < 1e-10);
    }

    #[test]
    fn parity_projection() {
        let g = build_grid(10.0, 256, 3.0).unwrap();
        let lam = SampledFunction::gaussian(&g);
        let mu = SampledFunction::gaussian_moment(&g);
        let sum = lam.add(&mu).unwrap();
        assert_eq!(sum.parity(), Parity::None);
        assert!(parity_project(&mu, Parity::Even).max_abs() == 0.0);
        let odd = parity_project(&sum, Parity::Odd);
        assert_eq!(odd.parity(), Parity::Odd);
        assert!(odd.sub(&mu).unwrap().max_abs() < 1e-15);
        let ip = inner_product(&lam, &mu, SpaceTag::h(0.3).unwrap()).unwrap();
        assert!(ip.norm() < 1e-14);
    }

    #[test]
    fn declared_parity_is_checked() {
        let g = build_grid(10.0, 64, 3.0).unwrap();
        let vals: Vec<Complex64> = g.nodes().iter().map(|&x| Complex64::new(x, 0.0)).collect();
        assert!(SampledFunction::new(&g, vals.clone(), Parity::Even).is_err());
        assert!(SampledFunction::new(&g, vals, Parity::Odd).is_ok());
    }

    #[test]
    fn grid_mismatch_detected() {
        let a = build_grid(10.0, 64, 3.0).unwrap();
        let b = build_grid(10.0, 128, 3.0).unwrap();
        let f = SampledFunction::gaussian(&a);
        let h = SampledFunction::gaussian(&b);
        assert_eq!(inner_product(&f, &h, SpaceTag::plain()), Err(Error::GridMismatch));
    }

    #[test]
    fn interpolation_reproduces_cubics() {
        let g = build_grid(4.0, 64, 2.0).unwrap();
        let p = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x * x;
        let f = SampledFunction::from_real(&g, Parity::None, p);
        for &q in &[-3.9, -1.234, -0.001, 0.0, 0.37, 2.5, 4.0] {
            assert!((f.interp(q).re - p(q)).abs() < 1e-12, "q={q}");
        }
        assert_eq!(f.interp(4.01), Complex64::default());
    }

    #[test]
    fn csv_round_trip() {
        let g = build_grid(6.0, 32, 3.0).unwrap();
        let f = SampledFunction::gaussian_moment(&g).scale(Complex64::new(0.3, -1.7));
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x,re,im\n"));
        let back = SampledFunction::read_csv(&g, buf.as_slice(), Parity::Odd).unwrap();
        assert_eq!(back.values(), f.values());
    }
}
