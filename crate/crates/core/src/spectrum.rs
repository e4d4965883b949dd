//! Spectrum of the linearized ring.
//!
//! With `z = (y_1..y_n, u_1..u_n)` the linearized ring evolves as `ż = M z`,
//!
//! ```text
//! M = | 0  A |     A: −1 on the diagonal, +1 on the superdiagonal and in the
//!     | C  B |        bottom-left corner (vehicle n follows vehicle 1)
//!                  C = diag(α_j)
//!                  B: −β_j on the diagonal, γ_j on the superdiagonal and γ_n
//!                     in the bottom-left corner
//! ```
//!
//! `M` always has a simple zero eigenvalue whose eigenvector leaves the
//! zero-sum headway subspace, so stability is read from the other `2n − 1`
//! eigenvalues. Its characteristic polynomial is
//! `∏(λ² + β_j λ + α_j) − ∏(γ_j λ + α_j)`, and the nonzero eigenvalues are the
//! solutions of `G(λ) = 1` for the transfer product
//! `G(z) = ∏ (γ_j z + α_j)/(z² + β_j z + α_j)`.

use faer::Mat;
use num_complex::Complex64;

use crate::equilibrium::{Composition, EquilibriumFlow};
use crate::error::{Error, Result};
use crate::linearize::{linearize, LinearTrio};

/// Above this many factors, products are accumulated as log-magnitude + phase.
const LOG_PRODUCT_THRESHOLD: usize = 64;

/// Linear trios of every vehicle, in ring order.
#[derive(Debug, Clone, PartialEq)]
pub struct RingSystem {
    trios: Vec<LinearTrio>,
}

impl RingSystem {
    pub fn new(trios: Vec<LinearTrio>) -> Result<Self> {
        if trios.len() < 2 {
            return Err(Error::Size(format!(
                "ring needs at least 2 vehicles, got {}",
                trios.len()
            )));
        }
        for t in &trios {
            LinearTrio::new(t.alpha, t.beta, t.gamma)?;
        }
        Ok(Self { trios })
    }

    /// Linearizes every class of `comp` around `eq` and lays the trios out
    /// in ring order.
    pub fn from_flow(comp: &Composition, eq: &EquilibriumFlow) -> Result<Self> {
        let mut by_class = std::collections::BTreeMap::new();
        for p in comp.populations().iter().filter(|p| p.count > 0) {
            by_class.insert(
                p.class_id,
                linearize(&p.model, eq.h_bar[&p.class_id], eq.v_bar)?,
            );
        }
        Self::new(comp.ordering().iter().map(|id| by_class[id]).collect())
    }

    pub fn trios(&self) -> &[LinearTrio] {
        &self.trios
    }

    pub fn len(&self) -> usize {
        self.trios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trios.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    /// The `2n − 1` eigenvalues left after removing the structural zero.
    pub eigenvalues: Vec<Complex64>,
    /// Largest real part among `eigenvalues`.
    pub abscissa: f64,
    pub zero_excluded: bool,
    /// Modulus below which an eigenvalue was treated as the structural zero.
    pub tol_eig0: f64,
}

/// The `2n × 2n` matrix `M`.
pub fn assemble(sys: &RingSystem) -> Mat<f64> {
    let n = sys.len();
    let mut m = Mat::<f64>::zeros(2 * n, 2 * n);
    for (j, t) in sys.trios.iter().enumerate() {
        let next = (j + 1) % n;
        m[(j, n + j)] -= 1.0;
        m[(j, n + next)] += 1.0;
        m[(n + j, j)] = t.alpha;
        m[(n + j, n + j)] -= t.beta;
        m[(n + j, n + next)] += t.gamma;
    }
    m
}

fn inf_norm(m: &Mat<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// All `2n` eigenvalues of `M`, unsorted.
pub fn full_spectrum(sys: &RingSystem) -> Result<Vec<Complex64>> {
    assemble(sys)
        .eigenvalues()
        .map_err(|e| Error::Numeric(format!("eigensolver failed: {e:?}")))
}

/// Spectrum restricted to the zero-sum headway subspace.
pub fn eigenvalues_on_h(sys: &RingSystem) -> Result<SpectrumReport> {
    let m = assemble(sys);
    let tol = 1e-8 * inf_norm(&m);
    let all = m
        .eigenvalues()
        .map_err(|e| Error::Numeric(format!("eigensolver failed: {e:?}")))?;
    let zeros = all.iter().filter(|z| z.norm() <= tol).count();
    if zeros != 1 {
        return Err(Error::Degeneracy { count: zeros, tol });
    }
    let eigenvalues: Vec<Complex64> = all.into_iter().filter(|z| z.norm() > tol).collect();
    let abscissa = eigenvalues
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(SpectrumReport {
        eigenvalues,
        abscissa,
        zero_excluded: true,
        tol_eig0: tol,
    })
}

/// A complex number stored as `mantissa · e^log_scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledComplex {
    pub mantissa: Complex64,
    pub log_scale: f64,
}

impl ScaledComplex {
    fn one() -> Self {
        Self {
            mantissa: Complex64::new(1.0, 0.0),
            log_scale: 0.0,
        }
    }

    fn mul(self, z: Complex64) -> Self {
        let m = self.mantissa * z;
        let r = m.norm();
        if r == 0.0 || !r.is_finite() {
            return Self {
                mantissa: m,
                log_scale: self.log_scale,
            };
        }
        Self {
            mantissa: m / r,
            log_scale: self.log_scale + r.ln(),
        }
    }

    /// `ln |value|`.
    pub fn ln_norm(&self) -> f64 {
        self.mantissa.norm().ln() + self.log_scale
    }

    pub fn to_complex(&self) -> Complex64 {
        self.mantissa * self.log_scale.exp()
    }

    /// `self − other`, in scaled form.
    fn sub(self, other: Self) -> Self {
        let s = self.log_scale.max(other.log_scale);
        let m = self.mantissa * (self.log_scale - s).exp()
            - other.mantissa * (other.log_scale - s).exp();
        Self {
            mantissa: m,
            log_scale: s,
        }
    }
}

fn product<I: Iterator<Item = Complex64>>(factors: I, len: usize) -> ScaledComplex {
    if len <= LOG_PRODUCT_THRESHOLD {
        let p = factors.fold(Complex64::new(1.0, 0.0), |acc, z| acc * z);
        return ScaledComplex {
            mantissa: p,
            log_scale: 0.0,
        };
    }
    factors.fold(ScaledComplex::one(), ScaledComplex::mul)
}

fn diag_factor(t: &LinearTrio, l: Complex64) -> Complex64 {
    l * l + t.beta * l + t.alpha
}

fn coupling_factor(t: &LinearTrio, l: Complex64) -> Complex64 {
    t.gamma * l + t.alpha
}

/// The two products of the characteristic polynomial,
/// `(∏(λ² + β_j λ + α_j), ∏(γ_j λ + α_j))`, in scaled form.
pub fn char_poly_terms(sys: &RingSystem, lambda: Complex64) -> (ScaledComplex, ScaledComplex) {
    let n = sys.len();
    (
        product(sys.trios.iter().map(|t| diag_factor(t, lambda)), n),
        product(sys.trios.iter().map(|t| coupling_factor(t, lambda)), n),
    )
}

/// `det(λI − M) = ∏(λ² + β_j λ + α_j) − ∏(γ_j λ + α_j)`, in scaled form.
pub fn char_poly_eval_scaled(sys: &RingSystem, lambda: Complex64) -> ScaledComplex {
    let (p, q) = char_poly_terms(sys, lambda);
    p.sub(q)
}

/// `det(λI − M)`. Overflows to infinity for very long rings; use
/// [`char_poly_eval_scaled`] or [`char_poly_relative_residual`] there.
pub fn char_poly_eval(sys: &RingSystem, lambda: Complex64) -> Complex64 {
    char_poly_eval_scaled(sys, lambda).to_complex()
}

/// `|det(λI − M)|` divided by `∏(|λ|² + β_j|λ| + α_j) + ∏(γ_j|λ| + α_j)`,
/// the size of the polynomial's terms at `|λ|`.
///
/// This is a backward-error measure: it stays near machine precision at
/// computed eigenvalues even where the two products nearly cancel or one of
/// them nearly vanishes.
pub fn char_poly_relative_residual(sys: &RingSystem, lambda: Complex64) -> f64 {
    let r = lambda.norm();
    let ln_p: f64 = sys
        .trios
        .iter()
        .map(|t| (r * r + t.beta * r + t.alpha).ln())
        .sum();
    let ln_q: f64 = sys.trios.iter().map(|t| (t.gamma * r + t.alpha).ln()).sum();
    let top = ln_p.max(ln_q);
    let ln_scale = top + ((ln_p - top).exp() + (ln_q - top).exp()).ln();
    (char_poly_eval_scaled(sys, lambda).ln_norm() - ln_scale).exp()
}

/// `d/dλ det(λI − M)` at `λ = 0`, i.e. `∏α_k · Σ(β_i − γ_i)/α_i`.
pub fn char_poly_derivative_at_zero(sys: &RingSystem) -> f64 {
    let log_prod: f64 = sys.trios.iter().map(|t| t.alpha.ln()).sum();
    let sum: f64 = sys.trios.iter().map(|t| (t.beta - t.gamma) / t.alpha).sum();
    log_prod.exp() * sum
}

/// `G(z) = ∏ (γ_j z + α_j)/(z² + β_j z + α_j)`, in scaled form.
pub fn transfer_product_scaled(sys: &RingSystem, z: Complex64) -> Result<ScaledComplex> {
    let mut factors = Vec::with_capacity(sys.len());
    for (index, t) in sys.trios.iter().enumerate() {
        let den = diag_factor(t, z);
        let size = z.norm_sqr() + t.beta * z.norm() + t.alpha;
        if den.norm() <= f64::EPSILON * size {
            return Err(Error::Pole { index });
        }
        factors.push(coupling_factor(t, z) / den);
    }
    Ok(product(factors.into_iter(), sys.len()))
}

pub fn transfer_product(sys: &RingSystem, z: Complex64) -> Result<Complex64> {
    Ok(transfer_product_scaled(sys, z)?.to_complex())
}
