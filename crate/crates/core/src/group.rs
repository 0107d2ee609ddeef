//! Arithmetic on GL(2,R) and factorization into the generators N, D and the
//! Weyl element p.
//!
//! Matrix layout is fixed project-wide:
//!
//! ```text
//!     g = | a  c |
//!         | b  d |
//! ```
//!
//! so `c` is the upper-right entry and `b` the lower-left one. The action
//! `x -> (c + x d) / (a + x b)` used by the representations depends on this.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// Default lower bound on |det| for an element to count as invertible.
pub const DET_EPS: f64 = 1e-12;

/// Relative size below which `b` is treated as zero by [`bruhat_factor`].
pub const LOWER_LEFT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    det: f64,
}

impl GroupElement {
    /// Builds `[[a, c], [b, d]]`, rejecting |det| <= [`DET_EPS`].
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        Self::with_eps(a, b, c, d, DET_EPS)
    }

    pub fn with_eps(a: f64, b: f64, c: f64, d: f64, eps: f64) -> Result<Self> {
        let det = a * d - b * c;
        if !det.is_finite() || det.abs() <= eps {
            return Err(Error::DegenerateDeterminant { det, eps });
        }
        Ok(Self { a, b, c, d, det })
    }

    // Generator constructors whose determinant is nonzero by construction.
    fn raw(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d, det: a * d - b * c }
    }

    pub fn identity() -> Self {
        Self::raw(1.0, 0.0, 0.0, 1.0)
    }

    /// Unipotent `n(c) = [[1, c], [0, 1]]`.
    pub fn n(c: f64) -> Self {
        Self::raw(1.0, 0.0, c, 1.0)
    }

    /// Diagonal `γ(a, d)`.
    pub fn gamma(a: f64, d: f64) -> Result<Self> {
        Self::new(a, 0.0, 0.0, d)
    }

    /// Upper triangular `q(a, c, d) = [[a, c], [0, d]]`.
    pub fn q(a: f64, c: f64, d: f64) -> Result<Self> {
        Self::new(a, 0.0, c, d)
    }

    /// The Weyl element `p = [[0, 1], [-1, 0]]`, with `p² = -I`.
    pub fn weyl() -> Self {
        Self::raw(0.0, -1.0, 1.0, 0.0)
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn is_upper_triangular(&self) -> bool {
        self.b.abs() <= LOWER_LEFT_EPS * self.scale()
    }

    pub fn is_diagonal(&self) -> bool {
        let tol = LOWER_LEFT_EPS * self.scale();
        self.b.abs() <= tol && self.c.abs() <= tol
    }

    /// Largest absolute entry.
    pub fn scale(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs()).max(self.d.abs())
    }

    /// Ratio of singular values σ₁/σ₂. Scalars have distortion 1.
    pub fn distortion(&self) -> f64 {
        let fro2 = self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d;
        let det = self.det.abs();
        // σ₁² + σ₂² = fro², σ₁σ₂ = |det|
        let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
        let s1 = ((fro2 + disc) / 2.0).sqrt();
        let s2 = det / s1;
        s1 / s2
    }

    /// Largest absolute entrywise difference, relative to the largest entry of `self`.
    pub fn rel_diff(&self, other: &GroupElement) -> f64 {
        let d = (self.a - other.a)
            .abs()
            .max((self.b - other.b).abs())
            .max((self.c - other.c).abs())
            .max((self.d - other.d).abs());
        d / self.scale()
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.c, self.b, self.d)
    }
}

pub fn multiply(g1: &GroupElement, g2: &GroupElement) -> GroupElement {
    GroupElement::raw(
        g1.a * g2.a + g1.c * g2.b,
        g1.b * g2.a + g1.d * g2.b,
        g1.a * g2.c + g1.c * g2.d,
        g1.b * g2.c + g1.d * g2.d,
    )
}

impl std::ops::Mul for GroupElement {
    type Output = GroupElement;
    fn mul(self, rhs: GroupElement) -> GroupElement {
        multiply(&self, &rhs)
    }
}

pub fn inverse(g: &GroupElement) -> Result<GroupElement> {
    if g.det.abs() <= DET_EPS {
        return Err(Error::DegenerateDeterminant { det: g.det, eps: DET_EPS });
    }
    let r = 1.0 / g.det;
    Ok(GroupElement::raw(g.d * r, -g.b * r, -g.c * r, g.a * r))
}

/// One generator: `N(c)`, `D(a, d)` or the Weyl element `P`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Token {
    N(f64),
    D(f64, f64),
    P,
}

impl Token {
    pub fn matrix(&self) -> GroupElement {
        match *self {
            Token::N(c) => GroupElement::n(c),
            Token::D(a, d) => GroupElement::raw(a, 0.0, 0.0, d),
            Token::P => GroupElement::weyl(),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Token::D(a, d) if a == 0.0 || d == 0.0 || !a.is_finite() || !d.is_finite() => {
                Err(Error::InvalidToken(format!("D({a}, {d})")))
            }
            Token::N(c) if !c.is_finite() => Err(Error::InvalidToken(format!("N({c})"))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::N(c) => write!(f, "N({c})"),
            Token::D(a, d) => write!(f, "D({a}, {d})"),
            Token::P => write!(f, "P"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GeneratorWord {
    tokens: Vec<Token>,
}

impl GeneratorWord {
    pub fn new(tokens: Vec<Token>) -> Result<Self> {
        for t in &tokens {
            t.validate()?;
        }
        Ok(Self { tokens })
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

impl fmt::Display for GeneratorWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.tokens.iter().map(|t| t.to_string()).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// Left-to-right product of the token matrices; the empty word is the identity.
pub fn evaluate_word(w: &GeneratorWord) -> GroupElement {
    w.tokens
        .iter()
        .fold(GroupElement::identity(), |acc, t| multiply(&acc, &t.matrix()))
}

/// Factors `g` through the two identities
///
/// * `b = 0`: `g = γ(a, d) n(c/a)`
/// * `b ≠ 0`: `g = n(a/b) p γ(-b, -det/b) n(d/b)`
///
/// `b` counts as zero when `|b| <= 1e-12 · max|entry|`.
pub fn bruhat_factor(g: &GroupElement) -> Result<GeneratorWord> {
    if g.det.abs() <= DET_EPS {
        return Err(Error::DegenerateDeterminant { det: g.det, eps: DET_EPS });
    }
    let tokens = if g.is_upper_triangular() {
        vec![Token::D(g.a, g.d), Token::N(g.c / g.a)]
    } else {
        vec![
            Token::N(g.a / g.b),
            Token::P,
            Token::D(-g.b, -g.det / g.b),
            Token::N(g.d / g.b),
        ]
    };
    GeneratorWord::new(tokens)
}

/// Parameters for random generator words.
#[derive(Debug, Clone, Copy)]
pub struct WordSampler {
    pub max_len: usize,
    /// D-token entries are log-uniform in `[1/diag_range, diag_range]` with random sign.
    pub diag_range: f64,
    /// N-token parameters are uniform in `[-shear_range, shear_range]`.
    pub shear_range: f64,
}

impl Default for WordSampler {
    fn default() -> Self {
        Self { max_len: 6, diag_range: 4.0, shear_range: 2.0 }
    }
}

impl WordSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> GeneratorWord {
        let len = rng.gen_range(1..=self.max_len);
        let ln = self.diag_range.ln();
        let tokens = (0..len)
            .map(|_| match rng.gen_range(0..3) {
                0 => Token::N(rng.gen_range(-self.shear_range..=self.shear_range)),
                1 => {
                    let a = rng.gen_range(-ln..=ln).exp();
                    let d = rng.gen_range(-ln..=ln).exp();
                    let sa = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                    let sd = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                    Token::D(sa * a, sd * d)
                }
                _ => Token::P,
            })
            .collect();
        GeneratorWord { tokens }
    }

    /// Samples words until the evaluated element has distortion at most `max_distortion`.
    pub fn sample_bounded<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        max_distortion: f64,
    ) -> (GeneratorWord, GroupElement) {
        loop {
            let w = self.sample(rng);
            let g = evaluate_word(&w);
            if g.distortion() <= max_distortion {
                return (w, g);
            }
        }
    }
}
