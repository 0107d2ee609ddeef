//! Finite-dimensional construction of a Watson operator from the orbit of a
//! cyclic vector under the diagonal subgroup.
//!
//! Given v_i = R(γ_i)φ, the operator is defined on span{v_i} by
//! W v_i = R(γ_i⁻¹)φ and represented in the orbit basis. On an abelian orbit it
//! is unitary exactly when the correlations ⟨φ|R(γ)φ⟩ are real; both sides of
//! that equivalence are measured here.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;
use std::io::Write;

use crate::error::{Error, Result};
use crate::group::{inverse, GroupElement};
use crate::space::{inner_product, norm, SampledFunction};
use crate::transforms::{r_apply, watson_apply, RepParams};

/// Orbits whose Gram condition estimate exceeds this are rejected.
pub const MAX_CONDITION: f64 = 1e12;
/// Tikhonov parameter relative to trace(G)/m.
pub const REGULARIZATION: f64 = 1e-12;
/// Threshold of [`reality_check`].
pub const REALITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct OrbitSystem {
    pub base_vector: SampledFunction,
    pub group_samples: Vec<GroupElement>,
    pub orbit: Vec<SampledFunction>,
    /// G_ij = ⟨v_i|v_j⟩ in H_s.
    pub gram: DMatrix<Complex64>,
    pub cond_estimate: f64,
    /// Smallest Gram eigenvalue relative to the largest.
    pub min_eig_ratio: f64,
    pub params: RepParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WatsonKind {
    /// W² = I
    Involution,
    /// W² = -I
    Skew,
}

#[derive(Debug, Clone)]
pub struct WatsonOperatorMatrix {
    /// Column j holds the orbit-basis coefficients of W v_j.
    pub matrix: DMatrix<Complex64>,
    /// Sign of Wφ = ±φ, from the sign of Re⟨Wφ|φ⟩.
    pub sign: i8,
    pub kind: WatsonKind,
    /// max_i ‖(W² ∓ I) v_i‖ / ‖v_i‖
    pub involution_residual: f64,
    /// max_ij |⟨Wv_i|Wv_j⟩ − ⟨v_i|v_j⟩| / (‖v_i‖‖v_j‖)
    pub unitarity_residual: f64,
}

impl WatsonOperatorMatrix {
    /// Verdict of the finite criterion: unitary involution within `tol`.
    pub fn is_watson(&self, tol: f64) -> bool {
        self.involution_residual <= tol && self.unitarity_residual <= tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RealityReport {
    pub max_rel_imag: f64,
    pub is_real: bool,
    pub samples: usize,
}

fn check_diagonal(gammas: &[GroupElement]) -> Result<()> {
    if gammas.iter().any(|g| !g.is_diagonal()) {
        return Err(Error::NotDiagonal);
    }
    Ok(())
}

/// γ(r^k, 1) for k = -(m-1)/2 ..= (m-1)/2: a progression closed under inversion.
pub fn geometric_samples(lo: f64, hi: f64, m: usize) -> Vec<GroupElement> {
    if m == 1 {
        return vec![GroupElement::identity()];
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    let mid = 0.5 * (llo + lhi);
    let step = (lhi - llo) / (m - 1) as f64;
    (0..m)
        .map(|i| {
            let e = (i as f64 - (m - 1) as f64 / 2.0) * step + mid;
            GroupElement::gamma(e.exp(), 1.0).expect("positive diagonal")
        })
        .collect()
}

pub fn build_orbit(phi: &SampledFunction, gammas: &[GroupElement], p: &RepParams) -> Result<OrbitSystem> {
    if gammas.is_empty() {
        return Err(Error::DomainError("orbit needs at least one group sample".into()));
    }
    check_diagonal(gammas)?;
    let orbit = gammas
        .iter()
        .map(|g| r_apply(g, phi, p))
        .collect::<Result<Vec<_>>>()?;
    let m = orbit.len();
    let tag = p.h_tag();
    let mut gram = DMatrix::<Complex64>::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = inner_product(&orbit[i], &orbit[j], tag)?;
            gram[(i, j)] = v;
            gram[(j, i)] = v.conj();
        }
    }
    let eig = gram.clone().symmetric_eigenvalues();
    let lmax = eig.max();
    let lmin = eig.min();
    let cond_estimate = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };
    if !(cond_estimate <= MAX_CONDITION) {
        return Err(Error::IllConditionedOrbit(cond_estimate));
    }
    Ok(OrbitSystem {
        base_vector: phi.clone(),
        group_samples: gammas.to_vec(),
        orbit,
        gram,
        cond_estimate,
        min_eig_ratio: lmin / lmax,
        params: *p,
    })
}

impl OrbitSystem {
    pub fn dim(&self) -> usize {
        self.orbit.len()
    }

    // A[k][i] = ⟨v_i|v_k⟩, so that ⟨Σα_i v_i | Σβ_k v_k⟩ = β^H A α.
    fn metric(&self) -> DMatrix<Complex64> {
        self.gram.transpose()
    }

    /// Regularized least-squares coefficients of the projections of `targets`
    /// onto the orbit span, one column per target.
    pub fn project(&self, targets: &[SampledFunction]) -> Result<DMatrix<Complex64>> {
        let m = self.dim();
        let tag = self.params.h_tag();
        let mut a = self.metric();
        let lambda = REGULARIZATION * a.trace().re / m as f64;
        for i in 0..m {
            a[(i, i)] += Complex64::new(lambda, 0.0);
        }
        let mut rhs = DMatrix::<Complex64>::zeros(m, targets.len());
        for (j, t) in targets.iter().enumerate() {
            for k in 0..m {
                rhs[(k, j)] = inner_product(t, &self.orbit[k], tag)?;
            }
        }
        let chol = a
            .cholesky()
            .ok_or(Error::IllConditionedOrbit(self.cond_estimate))?;
        Ok(chol.solve(&rhs))
    }

    /// Σ c_i v_i
    pub fn combine(&self, coeffs: &DVector<Complex64>) -> SampledFunction {
        let mut out = SampledFunction::zeros(self.base_vector.grid());
        for (c, v) in coeffs.iter().zip(&self.orbit) {
            out = out.axpy(*c, v).expect("orbit shares one grid");
        }
        out
    }

    fn index_of(&self, g: &GroupElement) -> Option<usize> {
        let r = g.a / g.d;
        self.group_samples
            .iter()
            .position(|h| ((h.a / h.d) / r - 1.0).abs() < 1e-9)
    }
}

/// Relative residuals of a candidate operator on the span with metric `a`.
fn residuals(mat: &DMatrix<Complex64>, a: &DMatrix<Complex64>, kind: WatsonKind) -> (f64, f64) {
    let m = mat.nrows();
    let id = DMatrix::<Complex64>::identity(m, m);
    let sq = mat * mat;
    let defect = match kind {
        WatsonKind::Involution => sq - &id,
        WatsonKind::Skew => sq + &id,
    };
    let mut inv = 0.0f64;
    for i in 0..m {
        let col = defect.column(i);
        let n2 = (col.adjoint() * a * col)[(0, 0)].re.max(0.0);
        inv = inv.max((n2 / a[(i, i)].re).sqrt());
    }
    let pulled = mat.adjoint() * a * mat - a;
    let mut uni = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            let scale = (a[(i, i)].re * a[(j, j)].re).sqrt();
            uni = uni.max(pulled[(i, j)].norm() / scale);
        }
    }
    (inv, uni)
}

/// Solves for W on the orbit span from W v_i = R(γ_i⁻¹)φ.
pub fn construct_watson(orbit: &OrbitSystem) -> Result<WatsonOperatorMatrix> {
    if !(orbit.cond_estimate <= MAX_CONDITION) {
        return Err(Error::IllConditionedOrbit(orbit.cond_estimate));
    }
    let p = &orbit.params;
    let targets = orbit
        .group_samples
        .iter()
        .map(|g| r_apply(&inverse(g)?, &orbit.base_vector, p))
        .collect::<Result<Vec<_>>>()?;
    let matrix = orbit.project(&targets)?;
    let a = orbit.metric();
    let (involution_residual, unitarity_residual) = residuals(&matrix, &a, WatsonKind::Involution);

    let alpha = orbit.project(std::slice::from_ref(&orbit.base_vector))?;
    let alpha = alpha.column(0).into_owned();
    let w_alpha = &matrix * &alpha;
    let pairing = (alpha.adjoint() * &a * w_alpha)[(0, 0)];
    let sign = if pairing.re >= 0.0 { 1 } else { -1 };
    Ok(WatsonOperatorMatrix {
        matrix,
        sign,
        kind: WatsonKind::Involution,
        involution_residual,
        unitarity_residual,
    })
}

/// max_i |Im⟨φ|R(γ_i)φ⟩| / |⟨φ|R(γ_i)φ⟩| with a verdict at [`REALITY_TOL`].
pub fn reality_check(phi: &SampledFunction, gammas: &[GroupElement], p: &RepParams) -> Result<RealityReport> {
    check_diagonal(gammas)?;
    let tag = p.h_tag();
    let mut worst = 0.0f64;
    for g in gammas {
        let c = inner_product(phi, &r_apply(g, phi, p)?, tag)?;
        let mag = c.norm();
        if mag > 0.0 {
            worst = worst.max(c.im.abs() / mag);
        }
    }
    Ok(RealityReport { max_rel_imag: worst, is_real: worst <= REALITY_TOL, samples: gammas.len() })
}

/// Largest H_s-relative gap between the constructed operator and
/// `watson_apply` on the orbit basis vectors.
pub fn analytic_agreement(orbit: &OrbitSystem, w: &WatsonOperatorMatrix) -> f64 {
    let tag = orbit.params.h_tag();
    let mut worst = 0.0f64;
    for (i, v) in orbit.orbit.iter().enumerate() {
        let constructed = orbit.combine(&w.matrix.column(i).into_owned());
        let analytic = watson_apply(v, &orbit.params);
        let err = norm(&constructed.sub(&analytic).expect("same grid"), tag) / norm(&analytic, tag);
        worst = worst.max(err);
    }
    worst
}

/// W R(γ_j) v_i against R(γ_j⁻¹) W v_i over pairs with γ_jγ_i in the sample set.
/// Returns (max relative error, number of pairs checked).
pub fn span_intertwining(orbit: &OrbitSystem, w: &WatsonOperatorMatrix) -> Result<(f64, usize)> {
    let p = &orbit.params;
    let tag = p.h_tag();
    let mut worst = 0.0f64;
    let mut pairs = 0;
    for gj in &orbit.group_samples {
        if (gj.a / gj.d - 1.0).abs() < 1e-12 {
            continue;
        }
        for (i, gi) in orbit.group_samples.iter().enumerate() {
            let Some(moved) = orbit.index_of(&(*gj * *gi)) else { continue };
            let left = orbit.combine(&w.matrix.column(moved).into_owned());
            let wv = orbit.combine(&w.matrix.column(i).into_owned());
            let right = r_apply(&inverse(gj)?, &wv, p)?;
            let err = norm(&left.sub(&right)?, tag) / norm(&right, tag);
            worst = worst.max(err);
            pairs += 1;
        }
    }
    Ok((worst, pairs))
}

/// Relative residual of projecting `target` onto the orbit spans of the first
/// m samples, for each m in `sizes`. For a cyclic vector these decrease.
pub fn density_residuals(
    phi: &SampledFunction,
    gammas: &[GroupElement],
    target: &SampledFunction,
    sizes: &[usize],
    p: &RepParams,
) -> Result<Vec<f64>> {
    let tag = p.h_tag();
    let tn = norm(target, tag);
    sizes
        .iter()
        .map(|&m| {
            let orbit = build_orbit(phi, &gammas[..m], p)?;
            let c = orbit.project(std::slice::from_ref(target))?;
            let approx = orbit.combine(&c.column(0).into_owned());
            Ok(norm(&target.sub(&approx)?, tag) / tn)
        })
        .collect()
}

/// The synthetic skew example: the quarter rotation on an orthonormal pair,
/// which satisfies W² = -I and is unitary.
pub fn skew_rotation_example() -> WatsonOperatorMatrix {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::default();
    let matrix = DMatrix::from_row_slice(2, 2, &[zero, -one, one, zero]);
    let metric = DMatrix::<Complex64>::identity(2, 2);
    let (involution_residual, unitarity_residual) = residuals(&matrix, &metric, WatsonKind::Skew);
    WatsonOperatorMatrix { matrix, sign: 1, kind: WatsonKind::Skew, involution_residual, unitarity_residual }
}

/// Row-major matrix dump: a header, then one line per row of `re,im` pairs.
pub fn write_matrix_csv<W: Write>(m: &DMatrix<Complex64>, mut out: W) -> Result<()> {
    let header: Vec<String> = (0..m.ncols()).map(|j| format!("re_{j},im_{j}")).collect();
    writeln!(out, "{}", header.join(","))?;
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| format!("{:.16e},{:.16e}", m[(i, j)].re, m[(i, j)].im))
            .collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_grid, Parity};
    use crate::special::phi_bessel;

    fn setup() -> (SampledFunction, RepParams) {
        let g = build_grid(40.0, 2048, 3.0).unwrap();
        let s = 0.5;
        (SampledFunction::from_real(&g, Parity::Even, |x| phi_bessel(x, s)), RepParams::new(s).unwrap())
    }

    #[test]
    fn single_identity_orbit() {
        let (phi, p) = setup();
        let o = build_orbit(&phi, &[GroupElement::identity()], &p).unwrap();
        assert_eq!(o.dim(), 1);
        let n2 = norm(&phi, p.h_tag()).powi(2);
        assert!((o.gram[(0, 0)].re - n2).abs() < 1e-12 * n2);
        assert_eq!(o.gram[(0, 0)].im, 0.0);
    }

    #[test]
    fn rejects_bad_samples() {
        let (phi, p) = setup();
        let id = GroupElement::identity();
        assert!(matches!(build_orbit(&phi, &[id, id], &p), Err(Error::IllConditionedOrbit(_))));
        assert!(matches!(build_orbit(&phi, &[GroupElement::n(1.0)], &p), Err(Error::NotDiagonal)));
        assert!(build_orbit(&phi, &[], &p).is_err());
    }

    #[test]
    fn geometric_samples_close_under_inversion() {
        let g = geometric_samples(0.25, 4.0, 9);
        assert_eq!(g.len(), 9);
        for (x, y) in g.iter().zip(g.iter().rev()) {
            assert!((x.a * y.a - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn phi_orbit_is_watson() {
        let (phi, p) = setup();
        let orbit = build_orbit(&phi, &geometric_samples(0.25, 4.0, 9), &p).unwrap();
        assert!(orbit.cond_estimate < 1e10);
        for i in 0..orbit.dim() {
            assert!(orbit.gram[(i, i)].re > 0.0);
            for j in 0..orbit.dim() {
                assert!((orbit.gram[(i, j)] - orbit.gram[(j, i)].conj()).norm() < 1e-14 * orbit.gram[(i, i)].re);
            }
        }
        let w = construct_watson(&orbit).unwrap();
        assert_eq!(w.sign, 1);
        assert!(w.is_watson(1e-6), "{} {}", w.involution_residual, w.unitarity_residual);
        assert!(reality_check(&phi, &orbit.group_samples, &p).unwrap().is_real);
    }

    #[test]
    fn non_real_correlation_breaks_unitarity() {
        let (phi, p) = setup();
        let lam = SampledFunction::gaussian(phi.grid());
        let mixed = phi.axpy(Complex64::new(0.0, 0.3), &lam).unwrap();
        let gammas = geometric_samples(0.25, 4.0, 9);
        let r = reality_check(&mixed, &gammas, &p).unwrap();
        assert!(!r.is_real && r.max_rel_imag > 1e-3);
        let w = construct_watson(&build_orbit(&mixed, &gammas, &p).unwrap()).unwrap();
        assert!(w.unitarity_residual > 1e-3);
    }

    #[test]
    fn skew_rotation() {
        let w = skew_rotation_example();
        assert_eq!(w.kind, WatsonKind::Skew);
        assert!(w.involution_residual < 1e-15 && w.unitarity_residual < 1e-15);
    }

    #[test]
    fn matrix_csv_layout() {
        let m = DMatrix::from_row_slice(1, 2, &[Complex64::new(1.0, -2.0), Complex64::new(0.5, 0.0)]);
        let mut buf = Vec::new();
        write_matrix_csv(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "re_0,im_0,re_1,im_1");
        assert_eq!(lines[1].split(',').count(), 4);
    }
}
