//! Named property suites, their configuration and machine-readable reports.
//!
//! Each suite returns a flat map of metrics, every one carrying its own
//! tolerance and comparison; a suite passes iff all of its metrics do.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use crate::error::{Error, Result};
use crate::group::{bruhat_factor, evaluate_word, inverse, GroupElement, WordSampler};
use crate::space::{
    build_grid, norm, parity_project, Parity, SampledFunction, SpaceTag, WeightedGrid,
    DEFAULT_GRADING, DEFAULT_NODES, DEFAULT_X_MAX,
};
use crate::special::{bessel_k, gamma, phi_at_zero, phi_bessel, phi_s, psi_s, PhiMethod};
use crate::transforms::{
    dilate, fourier, pitt_ratio, r_apply, rho_s_apply, rho_s_q_closed, watson_apply, RepParams,
};
use crate::watson::{
    analytic_agreement, build_orbit, construct_watson, density_residuals, geometric_samples,
    reality_check, skew_rotation_example, span_intertwining, write_matrix_csv,
};

pub const SCHEMA_VERSION: &str = "1";

/// Suite names in report order.
pub const SUITES: [&str; 8] =
    ["bruhat", "pitt", "q-unitarity", "phi", "psi", "watson", "full-unitarity", "prop21"];

pub const S_SWEEP: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

/// Random group elements are rejected above this σ_max/σ_min.
pub const MAX_DISTORTION: f64 = 4.0;

const MIN_NODES: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteConfig {
    pub s: f64,
    pub x_max: f64,
    pub n_nodes: usize,
    pub grading: f64,
    pub seed: u64,
    /// Keyed by suite name (overrides the headline metric) or `suite.metric`.
    pub tolerance_overrides: BTreeMap<String, f64>,
    pub refine: usize,
    #[serde(skip)]
    pub jobs: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            s: 0.5,
            x_max: DEFAULT_X_MAX,
            n_nodes: DEFAULT_NODES,
            grading: DEFAULT_GRADING,
            seed: 20240607,
            tolerance_overrides: BTreeMap::new(),
            refine: 1,
            jobs: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        }
    }
}

impl SuiteConfig {
    /// Checks the configuration; returns non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let bad = |m: String| Err(Error::ConfigError(m));
        if !(self.s > 0.0 && self.s < 1.0) {
            return bad(format!("s = {} must lie in (0, 1)", self.s));
        }
        if !(self.x_max > 0.0 && self.x_max.is_finite()) {
            return bad(format!("x_max = {} must be positive", self.x_max));
        }
        if self.n_nodes < MIN_NODES || self.n_nodes % 2 != 0 {
            return bad(format!("n_nodes = {} must be even and at least {MIN_NODES}", self.n_nodes));
        }
        if !(self.grading >= 1.0 && self.grading.is_finite()) {
            return bad(format!("grading = {} must be >= 1", self.grading));
        }
        if self.refine == 0 {
            return bad("refine must be at least 1".into());
        }
        if self.jobs == 0 {
            return bad("jobs must be at least 1".into());
        }
        for (k, v) in &self.tolerance_overrides {
            let suite = k.split('.').next().unwrap_or("");
            if !SUITES.contains(&suite) {
                return bad(format!("tolerance override for unknown suite '{k}'"));
            }
            if !(*v >= 0.0) {
                return bad(format!("tolerance override {k} = {v} must be non-negative"));
            }
        }
        let mut warnings = Vec::new();
        if !self.n_nodes.is_power_of_two() {
            warnings.push(format!("n_nodes = {} is not a power of two", self.n_nodes));
        }
        Ok(warnings)
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_defaults_file(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::ConfigError(format!("line {}: expected key = value", lineno + 1)));
            };
            self.set(k.trim(), v.trim())
                .map_err(|e| Error::ConfigError(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn parse<T: std::str::FromStr>(k: &str, v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("bad value '{v}' for {k}"))
        }
        match key {
            "s" => self.s = parse(key, value)?,
            "xmax" | "x_max" => self.x_max = parse(key, value)?,
            "nodes" | "n_nodes" => self.n_nodes = parse(key, value)?,
            "grading" => self.grading = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "refine" => self.refine = parse(key, value)?,
            "jobs" => self.jobs = parse(key, value)?,
            _ => match key.strip_prefix("tolerance.") {
                Some(name) => {
                    self.tolerance_overrides.insert(name.to_string(), parse(key, value)?);
                }
                None => return Err(format!("unknown key '{key}'")),
            },
        }
        Ok(())
    }

    fn level(&self, j: usize) -> (f64, usize) {
        (self.x_max * (1u64 << j) as f64, self.n_nodes << j)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Comparison {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metric {
    pub value: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
}

impl Metric {
    pub fn at_most(value: f64, tolerance: f64) -> Self {
        Self { value, tolerance, comparison: Comparison::AtMost }
    }

    pub fn at_least(value: f64, tolerance: f64) -> Self {
        Self { value, tolerance, comparison: Comparison::AtLeast }
    }

    /// NaN never passes.
    pub fn passed(&self) -> bool {
        match self.comparison {
            Comparison::AtMost => self.value <= self.tolerance,
            Comparison::AtLeast => self.value >= self.tolerance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridParams {
    pub x_max: f64,
    pub n_nodes: usize,
    pub grading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub metrics: BTreeMap<String, Metric>,
    pub grid_params: GridParams,
    /// Seconds; left out of JSON unless timings are requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
    pub paper_anchor: String,
}

impl SuiteReport {
    pub fn failed_metrics(&self) -> Vec<&str> {
        self.metrics.iter().filter(|(_, m)| !m.passed()).map(|(k, _)| k.as_str()).collect()
    }
}

#[derive(Serialize)]
struct ReportFile<'a> {
    version: &'static str,
    config: &'a SuiteConfig,
    reports: &'a [SuiteReport],
}

/// The top-level JSON document. Wall times are dropped unless `timings`.
pub fn reports_json(cfg: &SuiteConfig, reports: &[SuiteReport], timings: bool) -> String {
    let owned: Vec<SuiteReport>;
    let reports = if timings {
        reports
    } else {
        owned = reports.iter().cloned().map(|r| SuiteReport { wall_time: None, ..r }).collect();
        &owned
    };
    let mut out = serde_json::to_string_pretty(&ReportFile { version: SCHEMA_VERSION, config: cfg, reports })
        .expect("reports serialize");
    out.push('\n');
    out
}

/// Human-readable summary, one block per suite.
pub fn format_report(r: &SuiteReport) -> String {
    let mut out = format!(
        "[{}] {} — {}",
        if r.passed { "PASS" } else { "FAIL" },
        r.suite,
        r.paper_anchor
    );
    if let Some(t) = r.wall_time {
        out += &format!(" ({t:.1}s)");
    }
    out.push('\n');
    for (k, m) in &r.metrics {
        let cmp = match m.comparison {
            Comparison::AtMost => "<=",
            Comparison::AtLeast => ">=",
        };
        out += &format!(
            "    {} {:<34} {:>12.4e} {cmp} {:.1e}\n",
            if m.passed() { "ok  " } else { "FAIL" },
            k,
            m.value,
            m.tolerance
        );
    }
    out
}

/// Grids shared across suites so each Fourier kernel is built once.
#[derive(Default)]
pub struct GridCache {
    grids: Mutex<HashMap<(u64, usize, u64), Arc<WeightedGrid>>>,
}

impl GridCache {
    pub fn get(&self, x_max: f64, n_nodes: usize, grading: f64) -> Result<Arc<WeightedGrid>> {
        let key = (x_max.to_bits(), n_nodes, grading.to_bits());
        if let Some(g) = self.grids.lock().unwrap().get(&key) {
            return Ok(g.clone());
        }
        let g = build_grid(x_max, n_nodes, grading)?;
        self.grids.lock().unwrap().insert(key, g.clone());
        Ok(g)
    }
}

struct Ctx {
    grid: Arc<WeightedGrid>,
    p: RepParams,
    seed: u64,
}

impl Ctx {
    fn s(&self) -> f64 {
        self.p.s
    }

    fn h(&self) -> SpaceTag {
        self.p.h_tag()
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(stream);
        r
    }

    fn lambda(&self) -> SampledFunction {
        SampledFunction::gaussian(&self.grid)
    }

    fn mu(&self) -> SampledFunction {
        SampledFunction::gaussian_moment(&self.grid)
    }

    fn phi(&self) -> SampledFunction {
        let s = self.s();
        SampledFunction::from_real(&self.grid, Parity::Even, |x| phi_bessel(x, s))
    }

    fn psi(&self) -> SampledFunction {
        let s = self.s();
        SampledFunction::from_fn(&self.grid, Parity::Odd, |x| psi_s(x, s).expect("s validated"))
    }

    fn rel(&self, a: &SampledFunction, b: &SampledFunction) -> f64 {
        norm(&a.sub(b).expect("same grid"), self.h()) / norm(b, self.h())
    }

    fn norm_drift(&self, image: &SampledFunction, f: &SampledFunction) -> f64 {
        (norm(image, self.h()) / norm(f, self.h()) - 1.0).abs()
    }
}

type Metrics = Vec<(&'static str, Metric)>;

fn sign<R: Rng>(rng: &mut R) -> f64 {
    if rng.gen_bool(0.5) {
        1.0
    } else {
        -1.0
    }
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo.ln()..hi.ln()).exp()
}

fn random_q<R: Rng>(rng: &mut R) -> GroupElement {
    let a = sign(rng) * log_uniform(rng, 0.5, 2.0);
    let d = sign(rng) * log_uniform(rng, 0.5, 2.0);
    let c = rng.gen_range(-2.0..2.0);
    GroupElement::q(a, c, d).expect("nonzero diagonal")
}

fn log_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| (lo.ln() + (hi / lo).ln() * i as f64 / (n - 1) as f64).exp()).collect()
}

fn bool_metric(ok: bool) -> Metric {
    Metric::at_least(if ok { 1.0 } else { 0.0 }, 1.0)
}

fn suite_bruhat(ctx: &Ctx) -> Result<Metrics> {
    let mut rng = ctx.rng(1);
    let mut worst = 0.0f64;
    let mut longest = 0usize;
    let mut count = 0;
    while count < 1000 {
        let mut e = [0.0; 4];
        for v in e.iter_mut() {
            *v = rng.gen_range(-2.0..2.0);
        }
        // exercise the upper-triangular branch too
        if count % 10 == 0 {
            e[1] = 0.0;
        }
        let Ok(g) = GroupElement::new(e[0], e[1], e[2], e[3]) else { continue };
        if g.det().abs() < 1e-3 {
            continue;
        }
        let w = bruhat_factor(&g)?;
        longest = longest.max(w.len());
        worst = worst.max(evaluate_word(&w).rel_diff(&g));
        count += 1;
    }
    let singular = GroupElement::new(1.0, 2.0, 2.0, 4.0).is_err();
    Ok(vec![
        ("max_roundtrip_err", Metric::at_most(worst, 1e-12)),
        ("max_word_len", Metric::at_most(longest as f64, 4.0)),
        ("singular_rejected", bool_metric(singular)),
    ])
}

fn suite_pitt(ctx: &Ctx) -> Result<Metrics> {
    let s = ctx.s();
    let p = &ctx.p;
    let lam = ctx.lambda();
    let mu = ctx.mu();
    let exact_l = gamma((1.0 - s) / 2.0) / gamma((1.0 + s) / 2.0);
    let exact_m = gamma((3.0 - s) / 2.0) / gamma((3.0 + s) / 2.0);
    let rl = pitt_ratio(&lam, p)?;
    let rm = pitt_ratio(&mu, p)?;
    let mut worst_ratio = 0.0f64;
    for a in log_points(0.125, 8.0, 13) {
        for f in [&lam, &mu] {
            worst_ratio = worst_ratio.max(pitt_ratio(&dilate(a, f)?, p)? / rl);
        }
    }
    let plain = SpaceTag::plain();
    let f = lam.axpy(Complex64::new(0.3, -0.7), &mu)?;
    let plancherel = (norm(&fourier(&f), plain) / norm(&f, plain) - 1.0).abs();
    Ok(vec![
        ("lambda_ratio_err", Metric::at_most((rl - exact_l).abs(), 1e-3)),
        ("mu_ratio_rel_err", Metric::at_most((rm / exact_m - 1.0).abs(), 1e-3)),
        ("dilation_sweep_max_over_lambda", Metric::at_most(worst_ratio, 10.0)),
        ("plancherel_err", Metric::at_most(plancherel, 1e-8)),
    ])
}

fn suite_q_unitarity(ctx: &Ctx) -> Result<Metrics> {
    let p = &ctx.p;
    let mut rng = ctx.rng(3);
    let qs: Vec<GroupElement> = (0..100).map(|_| random_q(&mut rng)).collect();
    let fs = [
        ("lambda", ctx.lambda()),
        ("mu", ctx.mu()),
        ("phi", ctx.phi()),
        ("psi", ctx.psi()),
    ];
    let mut out = Metrics::new();
    let names: [[&'static str; 3]; 4] = [
        ["closed_norm_err_lambda", "conj_norm_err_lambda", "path_agreement_lambda"],
        ["closed_norm_err_mu", "conj_norm_err_mu", "path_agreement_mu"],
        ["closed_norm_err_phi", "conj_norm_err_phi", "path_agreement_phi"],
        ["closed_norm_err_psi", "conj_norm_err_psi", "path_agreement_psi"],
    ];
    for ((_, f), n) in fs.iter().zip(names) {
        let (mut closed, mut conj, mut agree) = (0.0f64, 0.0f64, 0.0f64);
        for q in &qs {
            let c = rho_s_q_closed(q, f, p)?;
            let v = rho_s_apply(q, f, p);
            closed = closed.max(ctx.norm_drift(&c, f));
            conj = conj.max(ctx.norm_drift(&v, f));
            agree = agree.max(ctx.rel(&v, &c));
        }
        out.push((n[0], Metric::at_most(closed, 1e-6)));
        out.push((n[1], Metric::at_most(conj, 1e-4)));
        out.push((n[2], Metric::at_most(agree, 1e-5)));
    }
    Ok(out)
}

// ∫ cosh(u)^{-s} du over ℝ (y = sinh u), an independent route to φ_s(0).
fn phi_zero_quadrature(s: f64) -> f64 {
    let h = 0.02;
    let umax = 60.0 / s;
    let n = (umax / h) as usize;
    let f = |u: f64| (-s * (u + (-2.0 * u).exp().ln_1p() - 2f64.ln())).exp();
    h * (f(0.0) + 2.0 * (1..=n).map(|i| f(i as f64 * h)).sum::<f64>())
}

fn suite_phi(ctx: &Ctx) -> Result<Metrics> {
    let xs = log_points(0.1, 10.0, 25);
    let mut two_route = 0.0f64;
    let mut zero = 0.0f64;
    for &s in &S_SWEEP {
        for &x in &xs {
            let d = phi_s(x, s, PhiMethod::DirectQuadrature)?.value;
            let b = phi_s(x, s, PhiMethod::BesselClosedForm)?.value;
            two_route = two_route.max((d - b).abs() / b);
        }
        zero = zero.max((phi_zero_quadrature(s) / phi_at_zero(s) - 1.0).abs());
    }
    let mut boundary = 0.0f64;
    for &x in &xs {
        let exact = PI * (-x).exp();
        for m in [PhiMethod::DirectQuadrature, PhiMethod::BesselClosedForm] {
            boundary = boundary.max((phi_s(x, 1.0, m)?.value - exact).abs() / exact);
        }
    }
    let khalf = (bessel_k(0.5, 1.0)? - (PI / 2.0).sqrt() * (-1f64).exp()).abs();

    let s = ctx.s();
    let dense: Vec<f64> = (0..=400).map(|i| i as f64 * 0.1).collect();
    let mut even = 0.0f64;
    let mut nonpositive = 0usize;
    for &x in &dense {
        let v = phi_bessel(x, s);
        even = even.max((v - phi_bessel(-x, s)).abs());
        if !(v > 0.0) {
            nonpositive += 1;
        }
    }
    // φ_s e^{|x|} |x|^{(1-s)/2} tends to a constant monotonically (K_ν, ν < 1/2)
    let limit = |x: f64| phi_bessel(x, s) * x.exp() * x.powf((1.0 - s) / 2.0);
    let ratios: Vec<f64> = (0..=50).map(|i| limit(5.0 + 0.5 * i as f64)).collect();
    let non_monotone = ratios.windows(2).filter(|w| w[1] < w[0]).count();

    let phi = ctx.phi();
    let hs = norm(&phi, ctx.h()).powi(2);
    let l2 = norm(&phi, SpaceTag::plain()).powi(2);
    let sup = phi.max_abs();
    let bound = 2.0 / (1.0 - s) * sup + l2;
    let bound_sq = 2.0 / (1.0 - s) * sup * sup + l2;
    let endpoint = phi_s(1.0, 0.01, PhiMethod::BesselClosedForm)?.endpoint_warning
        && !phi_s(1.0, 0.5, PhiMethod::BesselClosedForm)?.endpoint_warning;
    Ok(vec![
        ("two_route_err", Metric::at_most(two_route, 1e-8)),
        ("phi0_err", Metric::at_most(zero, 1e-8)),
        ("phi1_boundary_err", Metric::at_most(boundary, 1e-8)),
        ("k_half_err", Metric::at_most(khalf, 1e-10)),
        ("evenness_err", Metric::at_most(even, 0.0)),
        ("nonpositive_count", Metric::at_most(nonpositive as f64, 0.0)),
        ("decay_non_monotone_count", Metric::at_most(non_monotone as f64, 0.0)),
        ("norm_over_bound", Metric::at_most(hs / bound, 1.0)),
        ("norm_over_bound_sup_squared", Metric::at_most(hs / bound_sq, 1.0)),
        ("endpoint_flagged", bool_metric(endpoint)),
    ])
}

fn suite_psi(ctx: &Ctx) -> Result<Metrics> {
    let s = ctx.s();
    let phi = |x: f64| phi_bessel(x, s);
    let psi_im = |x: f64| psi_s(x, s).map(|v| v.im);
    let xs: Vec<f64> = (0..=45).map(|i| 0.5 + 0.1 * i as f64).collect();
    let at_zero = psi_s(0.0, s)?.norm();
    let mut odd = 0.0f64;
    let mut real_part = 0.0f64;
    let mut fd = 0.0f64;
    for &x in &xs {
        let v = psi_s(x, s)?;
        odd = odd.max((psi_s(-x, s)? + v).norm());
        real_part = real_part.max(v.re.abs());
        let h = 1e-5;
        fd = fd.max(((phi(x + h) - phi(x - h)) / (2.0 * h) - v.im).abs());
    }
    let mut order = f64::INFINITY;
    for &x in &[0.5, 1.0, 2.0, 3.5, 5.0] {
        let d = psi_im(x)?;
        let err = |h: f64| ((phi(x + h) - phi(x - h)) / (2.0 * h) - d).abs();
        let e: Vec<f64> = [0.1, 0.05, 0.025].iter().map(|&h| err(h)).collect();
        for w in e.windows(2) {
            order = order.min((w[0] / w[1]).log2());
        }
    }
    // ‖ψ_s‖²_{H_s} should settle under refinement near 0 if ψ_s ∈ H_s
    let psi = ctx.psi();
    let fine = build_grid(ctx.grid.x_max(), 2 * ctx.grid.n_nodes(), ctx.grid.grading())?;
    let psi_fine = SampledFunction::from_fn(&fine, Parity::Odd, |x| psi_s(x, s).expect("s validated"));
    let growth = norm(&psi_fine, ctx.h()).powi(2) / norm(&psi, ctx.h()).powi(2) - 1.0;

    let mut rng = ctx.rng(5);
    let gammas: Vec<GroupElement> = (0..100)
        .map(|_| GroupElement::gamma(sign(&mut rng) * log_uniform(&mut rng, 0.25, 4.0), 1.0).expect("nonzero"))
        .collect();
    let reality = reality_check(&psi, &gammas, &ctx.p)?;
    Ok(vec![
        ("psi_at_zero", Metric::at_most(at_zero, 0.0)),
        ("oddness_err", Metric::at_most(odd, 1e-12)),
        ("real_part_max", Metric::at_most(real_part, 0.0)),
        ("fd_err", Metric::at_most(fd, 1e-6)),
        ("fd_order", Metric::at_least(order, 1.9)),
        ("hs_norm_refinement_growth", Metric::at_most(growth.abs(), 1e-2)),
        ("reality_max_rel_imag", Metric::at_most(reality.max_rel_imag, 1e-8)),
    ])
}

fn suite_watson(ctx: &Ctx) -> Result<Metrics> {
    let p = &ctx.p;
    let lam = ctx.lambda();
    let mu = ctx.mu();
    let phi = ctx.phi();
    let psi = ctx.psi();
    let ww = |f: &SampledFunction| ctx.rel(&watson_apply(&watson_apply(f, p), p), f);
    let inv_lam = ww(&lam);
    let inv_mu = ww(&mu);
    let inv_phi = ww(&phi);
    let inv_psi = ww(&psi);
    let mut rng = ctx.rng(6);
    let mut inv_random = 0.0f64;
    for _ in 0..50 {
        // same representability rule as the group samples, applied to W ρ(q)
        let q = loop {
            let q = random_q(&mut rng);
            if (GroupElement::weyl() * q).distortion() <= MAX_DISTORTION {
                break q;
            }
        };
        let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let f = rho_s_q_closed(&q, &phi, p)?.axpy(c, &lam)?;
        inv_random = inv_random.max(ww(&f));
    }
    let involution = inv_lam.max(inv_mu).max(inv_phi).max(inv_random);

    let w_lam = watson_apply(&lam, p);
    let mut intertwine = 0.0f64;
    for _ in 0..100 {
        let g = GroupElement::gamma(log_uniform(&mut rng, 0.1, 10.0), 1.0).expect("nonzero");
        let left = watson_apply(&r_apply(&g, &lam, p)?, p);
        let right = r_apply(&inverse(&g)?, &w_lam, p)?;
        intertwine = intertwine.max(ctx.rel(&left, &right));
    }
    let w_phi = watson_apply(&phi, p);
    let fixed = ctx.rel(&w_phi, &phi);
    let w_mu = watson_apply(&mu, p);
    let parity = (norm(&parity_project(&w_lam, Parity::Odd), ctx.h()) / norm(&w_lam, ctx.h()))
        .max(norm(&parity_project(&w_mu, Parity::Even), ctx.h()) / norm(&w_mu, ctx.h()));
    Ok(vec![
        ("involution_err", Metric::at_most(involution, 1e-4)),
        ("involution_lambda", Metric::at_most(inv_lam, 1e-4)),
        ("involution_mu", Metric::at_most(inv_mu, 1e-4)),
        ("involution_phi", Metric::at_most(inv_phi, 1e-4)),
        ("involution_psi", Metric::at_most(inv_psi, 1e-4)),
        ("involution_random", Metric::at_most(inv_random, 1e-4)),
        ("intertwine_err", Metric::at_most(intertwine, 1e-4)),
        ("phi_fixed_err", Metric::at_most(fixed, 1e-4)),
        ("parity_leak", Metric::at_most(parity, 1e-10)),
    ])
}

fn suite_full_unitarity(ctx: &Ctx) -> Result<Metrics> {
    let p = &ctx.p;
    let lam = ctx.lambda();
    let mu = ctx.mu();
    let sampler = WordSampler::default();
    let mut rng = ctx.rng(7);
    let mut drift = 0.0f64;
    let mut drift_mu = 0.0f64;
    let mut max_kappa = 0.0f64;
    for _ in 0..100 {
        let (_, g) = sampler.sample_bounded(&mut rng, MAX_DISTORTION);
        max_kappa = max_kappa.max(g.distortion());
        drift = drift.max(ctx.norm_drift(&rho_s_apply(&g, &lam, p), &lam));
        drift_mu = drift_mu.max(ctx.norm_drift(&rho_s_apply(&g, &mu, p), &mu));
    }
    let mut homomorphism = 0.0f64;
    for _ in 0..20 {
        let (_, g1) = sampler.sample_bounded(&mut rng, MAX_DISTORTION);
        let (_, g2) = sampler.sample_bounded(&mut rng, MAX_DISTORTION);
        let whole = rho_s_apply(&(g1 * g2), &lam, p);
        let composed = rho_s_apply(&g1, &rho_s_apply(&g2, &lam, p), p);
        homomorphism = homomorphism.max(norm(&whole.sub(&composed)?, ctx.h()) / norm(&lam, ctx.h()));
    }
    let ident = ctx.rel(&rho_s_apply(&GroupElement::identity(), &lam, p), &lam);
    Ok(vec![
        ("norm_err", Metric::at_most(drift, 1e-4)),
        ("norm_err_mu", Metric::at_most(drift_mu, 1e-4)),
        ("homomorphism_err", Metric::at_most(homomorphism, 1e-4)),
        ("identity_err", Metric::at_most(ident, 1e-8)),
        ("max_sample_distortion", Metric::at_most(max_kappa, MAX_DISTORTION)),
    ])
}

fn suite_prop21(ctx: &Ctx) -> Result<Metrics> {
    let p = &ctx.p;
    let phi = ctx.phi();
    let psi = ctx.psi();
    let lam = ctx.lambda();
    let gammas = geometric_samples(0.25, 4.0, 9);
    let orbit = build_orbit(&phi, &gammas, p)?;
    let w = construct_watson(&orbit)?;
    let agreement = analytic_agreement(&orbit, &w);
    let (intertwine, _) = span_intertwining(&orbit, &w)?;

    // nested spans grown outwards from the identity
    let mut nested = gammas.clone();
    nested.sort_by(|a, b| a.a.ln().abs().total_cmp(&b.a.ln().abs()));
    let target = SampledFunction::from_real(&ctx.grid, Parity::Even, |x| (-x * x / 4.0).exp());
    let dens = density_residuals(&phi, &nested, &target, &[1, 3, 5, 7, 9], p)?;
    let dens_increases = dens.windows(2).filter(|d| d[1] > d[0]).count();

    let psi_w = construct_watson(&build_orbit(&psi, &gammas, p)?)?;

    let i03 = Complex64::new(0.0, 0.3);
    let mixed_literal = phi.axpy(i03, &psi)?;
    let lit_real = reality_check(&mixed_literal, &gammas, p)?;
    let lit_w = construct_watson(&build_orbit(&mixed_literal, &gammas, p)?)?;
    let mixed = phi.axpy(i03, &lam)?;
    let mix_real = reality_check(&mixed, &gammas, p)?;
    let mix_w = construct_watson(&build_orbit(&mixed, &gammas, p)?)?;

    let mut rng = ctx.rng(8);
    let random: Vec<GroupElement> = (0..100)
        .map(|_| GroupElement::gamma(sign(&mut rng) * log_uniform(&mut rng, 0.25, 4.0), 1.0).expect("nonzero"))
        .collect();
    let phi_real = reality_check(&phi, &random, p)?;
    let psi_real = reality_check(&psi, &random, p)?;

    let duplicate = [GroupElement::identity(), GroupElement::identity()];
    let dup_rejected = matches!(build_orbit(&phi, &duplicate, p), Err(Error::IllConditionedOrbit(_)));
    let skew = skew_rotation_example();

    Ok(vec![
        ("phi_orbit_unitarity", Metric::at_most(w.unitarity_residual, 1e-6)),
        ("phi_orbit_involution", Metric::at_most(w.involution_residual, 1e-6)),
        ("phi_orbit_sign", Metric::at_least(w.sign as f64, 1.0)),
        ("phi_orbit_cond", Metric::at_most(orbit.cond_estimate, 1e10)),
        ("analytic_agreement", Metric::at_most(agreement, 1e-4)),
        ("span_intertwining", Metric::at_most(intertwine, 1e-5)),
        ("density_residual_increases", Metric::at_most(dens_increases as f64, 0.0)),
        ("density_residual_final", Metric::at_most(dens[dens.len() - 1], 1e-2)),
        ("psi_orbit_unitarity", Metric::at_most(psi_w.unitarity_residual, 1e-6)),
        ("psi_orbit_involution", Metric::at_most(psi_w.involution_residual, 1e-6)),
        ("mixed_phi_psi_rel_imag", Metric::at_least(lit_real.max_rel_imag, 1e-3)),
        ("mixed_phi_psi_unitarity", Metric::at_least(lit_w.unitarity_residual, 1e-2)),
        ("mixed_phi_lambda_rel_imag", Metric::at_least(mix_real.max_rel_imag, 1e-3)),
        ("mixed_phi_lambda_unitarity", Metric::at_least(mix_w.unitarity_residual, 1e-2)),
        ("reality_phi", Metric::at_most(phi_real.max_rel_imag, 1e-8)),
        ("reality_psi", Metric::at_most(psi_real.max_rel_imag, 1e-8)),
        ("duplicate_samples_rejected", bool_metric(dup_rejected)),
        ("skew_example_residual", Metric::at_most(skew.involution_residual.max(skew.unitarity_residual), 1e-14)),
    ])
}

fn anchor(name: &str) -> &'static str {
    match name {
        "bruhat" => "Bruhat factorization of GL(2,R) into generators",
        "pitt" => "Pitt inequality: boundedness of the Fourier transform between power weights",
        "q-unitarity" => "upper-triangular subgroup acts unitarily on H_s",
        "phi" => "phi_s: closed form and membership in H_s",
        "psi" => "psi_s = i phi_s': derivative identity and membership in H_s",
        "watson" => "Watson operator: involution, intertwining, fixed vector",
        "full-unitarity" => "rho_s is a unitary representation of GL(2,R)",
        "prop21" => "Watson operator from a cyclic vector iff correlations are real",
        _ => "",
    }
}

/// Metrics followed across refinement levels; the first is the headline.
fn tracked(name: &str) -> &'static [&'static str] {
    match name {
        "bruhat" => &["max_roundtrip_err"],
        "pitt" => &["lambda_ratio_err", "mu_ratio_rel_err"],
        "q-unitarity" => &["path_agreement_phi", "conj_norm_err_phi"],
        "phi" => &["two_route_err"],
        "psi" => &["fd_err"],
        "watson" => &["involution_err", "intertwine_err", "phi_fixed_err"],
        "full-unitarity" => &["norm_err", "homomorphism_err"],
        "prop21" => &["analytic_agreement"],
        _ => &[],
    }
}

fn run_metrics(name: &str, ctx: &Ctx) -> Result<Metrics> {
    match name {
        "bruhat" => suite_bruhat(ctx),
        "pitt" => suite_pitt(ctx),
        "q-unitarity" => suite_q_unitarity(ctx),
        "phi" => suite_phi(ctx),
        "psi" => suite_psi(ctx),
        "watson" => suite_watson(ctx),
        "full-unitarity" => suite_full_unitarity(ctx),
        "prop21" => suite_prop21(ctx),
        other => Err(Error::UnknownSuite(other.to_string())),
    }
}

/// Runs one suite at the configured grid and, with `refine = k > 1`, at k-1
/// successively doubled grids, recording the headline metric per level.
pub fn run_suite_with(name: &str, cfg: &SuiteConfig, grids: &GridCache) -> Result<SuiteReport> {
    let idx = SUITES
        .iter()
        .position(|s| *s == name)
        .ok_or_else(|| Error::UnknownSuite(name.to_string()))?;
    cfg.validate()?;
    let start = Instant::now();
    let p = RepParams::new(cfg.s)?;
    let seed = cfg.seed ^ ((idx as u64 + 1) << 56);
    let follow = tracked(name);
    let head = follow[0];
    let mut metrics = BTreeMap::new();
    let mut levels: Vec<Vec<f64>> = Vec::new();
    for j in 0..cfg.refine {
        let (x_max, n) = cfg.level(j);
        let ctx = Ctx { grid: grids.get(x_max, n, cfg.grading)?, p, seed };
        let m: BTreeMap<String, Metric> = run_metrics(name, &ctx)?.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        levels.push(follow.iter().map(|k| m[*k].value).collect());
        if j == 0 {
            metrics = m;
        } else {
            for k in follow {
                metrics.insert(format!("{k}@refine{j}"), m[*k]);
            }
        }
    }
    if cfg.refine > 1 {
        // increases at the roundoff floor (1e-3 of the tolerance) do not count
        let mut increases = 0;
        for (i, k) in follow.iter().enumerate() {
            let tol = metrics[*k].tolerance;
            increases += levels.windows(2).filter(|w| !(w[1][i] <= w[0][i] || w[1][i] <= 1e-3 * tol)).count();
        }
        metrics.insert("refine_increases".into(), Metric::at_most(increases as f64, 0.0));
    }
    for (k, &v) in &cfg.tolerance_overrides {
        let target = match k.split_once('.') {
            Some((suite, metric)) if suite == name => metric.to_string(),
            None if k == name => head.to_string(),
            _ => continue,
        };
        match metrics.get_mut(&target) {
            Some(m) => m.tolerance = v,
            None => return Err(Error::ConfigError(format!("suite {name} has no metric '{target}'"))),
        }
    }
    let passed = metrics.values().all(Metric::passed);
    Ok(SuiteReport {
        suite: name.to_string(),
        passed,
        metrics,
        grid_params: GridParams { x_max: cfg.x_max, n_nodes: cfg.n_nodes, grading: cfg.grading },
        wall_time: Some(start.elapsed().as_secs_f64()),
        paper_anchor: anchor(name).to_string(),
    })
}

pub fn run_suite(name: &str, cfg: &SuiteConfig) -> Result<SuiteReport> {
    run_suite_with(name, cfg, &GridCache::default())
}

/// Runs the named suites on `cfg.jobs` threads; reports come back in input order.
pub fn run_many(names: &[&str], cfg: &SuiteConfig) -> Result<Vec<SuiteReport>> {
    cfg.validate()?;
    for n in names {
        if !SUITES.contains(n) {
            return Err(Error::UnknownSuite(n.to_string()));
        }
    }
    let grids = GridCache::default();
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<SuiteReport>>>> = names.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..cfg.jobs.min(names.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= names.len() {
                    break;
                }
                let r = run_suite_with(names[i], cfg, &grids);
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().unwrap().expect("every slot filled")).collect()
}

pub fn run_all(cfg: &SuiteConfig) -> Result<Vec<SuiteReport>> {
    run_many(&SUITES, cfg)
}

/// Writes operator traces (function_space CSV schema) and the constructed
/// orbit operator for plotting.
pub fn dump_traces(cfg: &SuiteConfig, dir: &Path) -> Result<Vec<String>> {
    cfg.validate()?;
    std::fs::create_dir_all(dir)?;
    let ctx = Ctx { grid: build_grid(cfg.x_max, cfg.n_nodes, cfg.grading)?, p: RepParams::new(cfg.s)?, seed: cfg.seed };
    let p = &ctx.p;
    let lam = ctx.lambda();
    let phi = ctx.phi();
    let traces = [
        ("lambda.csv", lam.clone()),
        ("w_lambda.csv", watson_apply(&lam, p)),
        ("phi.csv", phi.clone()),
        ("w_phi.csv", watson_apply(&phi, p)),
        ("psi.csv", ctx.psi()),
    ];
    let mut written = Vec::new();
    for (file, f) in traces {
        let path = dir.join(file);
        f.write_csv(std::io::BufWriter::new(std::fs::File::create(&path)?))?;
        written.push(path.display().to_string());
    }
    let orbit = build_orbit(&phi, &geometric_samples(0.25, 4.0, 9), p)?;
    let w = construct_watson(&orbit)?;
    let path = dir.join("watson_matrix.csv");
    write_matrix_csv(&w.matrix, std::io::BufWriter::new(std::fs::File::create(&path)?))?;
    written.push(path.display().to_string());
    Ok(written)
}

/// Rows (x, φ_s(x), ψ_s(x)/i) for x in [-x_max, x_max].
pub fn special_table(s: f64, x_max: f64, points: usize) -> Result<Vec<[f64; 3]>> {
    if points < 2 {
        return Err(Error::ConfigError("table needs at least two points".into()));
    }
    (0..points)
        .map(|i| {
            let x = -x_max + 2.0 * x_max * i as f64 / (points - 1) as f64;
            let phi = phi_s(x, s, PhiMethod::BesselClosedForm)?.value;
            let psi = psi_s(x, s)?;
            Ok([x, phi, psi.im])
        })
        .collect()
}
