//! Analytic optima, their validity regimes, truncation sandwich bounds and
//! the sub-multiplicativity gap.

use crate::error::{Error, Result};
pub use crate::error::RegimeClause;
use crate::fidelity::exact_bi_fidelity;
use crate::fock::{BipartiteSpectrum, SchmidtSpectrum, Spectrum};

/// Inputs this close above a regime threshold are accepted.
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RegimeVerdict {
    pub valid: bool,
    /// Threshold on `E` (unidirectional) or `2E` (bidirectional).
    pub bound: f64,
    pub clause: RegimeClause,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalSolution {
    pub spectrum: Spectrum,
    pub fidelity: f64,
    pub regime: RegimeVerdict,
    /// Weight on `|1,0>` in the asymmetric two-mode state.
    pub p_split: Option<f64>,
    /// False at `xi = 0`, where every input is optimal.
    pub unique: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FidelityBounds {
    pub lower: f64,
    pub upper: f64,
    pub m: usize,
    /// The raw lower bound was negative and has been replaced by 0.
    pub lower_floored: bool,
}

fn check_nonneg(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange { name, value: v })
    }
}

/// `E <= (1+xi)/(1+3xi)`.
pub fn uni_regime(e: f64, xi: f64) -> RegimeVerdict {
    let bound = (1.0 + xi) / (1.0 + 3.0 * xi);
    RegimeVerdict { valid: e <= bound + BOUNDARY_TOL, bound, clause: RegimeClause::UniSmallE }
}

/// `2E <= (1+xi)/(2+3xi)`.
pub fn bi_equal_regime(e: f64, xi: f64) -> RegimeVerdict {
    let bound = (1.0 + xi) / (2.0 + 3.0 * xi);
    RegimeVerdict { valid: 2.0 * e <= bound + BOUNDARY_TOL, bound, clause: RegimeClause::BiEqualNoise }
}

/// The two thresholds on `2E` for the asymmetric case. The second is
/// infinite at `xi = 0`.
pub fn bi_asym_thresholds(xi: f64, xi_prime: f64) -> (f64, f64) {
    let first = (xi_prime * xi_prime - 1.0) / (xi_prime * (3.0 * xi_prime - 1.0));
    let second = if xi == 0.0 { f64::INFINITY } else { (1.0 + xi) / (2.0 * xi) };
    (first, second)
}

/// `xi' >= 1` and `2E <= min{(xi'^2-1)/(xi'(3xi'-1)), (1+xi)/(2xi)}`.
pub fn bi_asym_regime(e: f64, xi: f64, xi_prime: f64) -> RegimeVerdict {
    let (t1, t2) = bi_asym_thresholds(xi, xi_prime);
    let bound = t1.min(t2);
    let valid = xi_prime >= 1.0 && 2.0 * e <= bound + BOUNDARY_TOL;
    RegimeVerdict { valid, bound: bound.max(0.0), clause: RegimeClause::BiAsymNoise }
}

fn violation(verdict: RegimeVerdict, detail: String) -> Error {
    Error::RegimeViolation { clause: verdict.clause, threshold: verdict.bound, detail }
}

/// Optimal single-mode input `sqrt(1-E)|0,0> + sqrt(E)|1,1>` and its fidelity
/// `(1/(1+xi)) [1 - 2sE + 2s^2E^2]`, `s = xi/(1+xi)`.
pub fn optimal_uni(e: f64, xi: f64) -> Result<OptimalSolution> {
    check_nonneg("E", e)?;
    check_nonneg("xi", xi)?;
    let regime = uni_regime(e, xi);
    if !regime.valid {
        return Err(violation(
            regime,
            format!("E = {e} exceeds (1+xi)/(1+3xi) = {:.5}", regime.bound),
        ));
    }
    let e = e.min(regime.bound);
    let eta = 1.0 / (1.0 + xi);
    let x = xi / (1.0 + xi) * e;
    let fidelity = eta * (1.0 - 2.0 * x + 2.0 * x * x);
    let spectrum = SchmidtSpectrum::new(&[1.0 - e, e])?;
    Ok(OptimalSolution {
        spectrum: spectrum.into(),
        fidelity,
        regime,
        p_split: None,
        unique: xi > 0.0,
    })
}

/// Optimal two-mode input for equal noise, weights `1-2E, E, E` on
/// `|0,0>, |0,1>, |1,0>`, with fidelity `(1/(1+xi)^2)[1 - 4sE + 6s^2E^2]`.
pub fn optimal_bi_equal(e: f64, xi: f64) -> Result<OptimalSolution> {
    check_nonneg("E", e)?;
    check_nonneg("xi", xi)?;
    let regime = bi_equal_regime(e, xi);
    if !regime.valid {
        return Err(violation(
            regime,
            format!("2E = {} exceeds (1+xi)/(2+3xi) = {:.5}", 2.0 * e, regime.bound),
        ));
    }
    let e = e.min(0.5 * regime.bound);
    let eta = 1.0 / (1.0 + xi);
    let x = xi / (1.0 + xi) * e;
    let fidelity = eta * eta * (1.0 - 4.0 * x + 6.0 * x * x);
    let grid = BipartiteSpectrum::from_entries(1, &[((0, 0), 1.0 - 2.0 * e), ((0, 1), e), ((1, 0), e)])?;
    Ok(OptimalSolution { spectrum: grid.into(), fidelity, regime, p_split: None, unique: xi > 0.0 })
}

/// The objective restricted to the states `(1-2E)|0,0> + (2E-x)|0,1> + x|1,0>`
/// (weights shown, amplitudes are their square roots):
/// `F(x) = eta eta' (c + b x + a x^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitQuadratic {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub eta: f64,
    pub eta_prime: f64,
    /// The total budget `2E`.
    pub total: f64,
}

impl SplitQuadratic {
    pub fn new(e: f64, xi: f64, xi_prime: f64) -> Self {
        let eta = 1.0 / (1.0 + xi);
        let etp = 1.0 / (1.0 + xi_prime);
        let a = 2.0 * ((eta - etp).powi(2) + (1.0 - eta) * (1.0 - etp));
        let b = 2.0 * (eta - etp) + 4.0 * (1.0 - etp) * (2.0 * etp - 1.0 - eta) * e;
        let c = 1.0 - 4.0 * (1.0 - etp) * e + 8.0 * (1.0 - etp).powi(2) * e * e;
        Self { a, b, c, eta, eta_prime: etp, total: 2.0 * e }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eta * self.eta_prime * (self.c + self.b * x + self.a * x * x)
    }

    /// Unconstrained stationary point `-b/(2a)`.
    pub fn vertex(&self) -> f64 {
        -self.b / (2.0 * self.a)
    }

    /// Unconstrained minimum `eta eta' (4ac - b^2)/(4a)`.
    pub fn vertex_value(&self) -> f64 {
        self.eta * self.eta_prime * (4.0 * self.a * self.c - self.b * self.b) / (4.0 * self.a)
    }

    /// Minimiser over the feasible segment `[0, 2E]`.
    pub fn minimizer(&self) -> f64 {
        if self.a > 0.0 {
            self.vertex().clamp(0.0, self.total)
        } else if self.b < 0.0 {
            self.total
        } else {
            0.0
        }
    }
}

/// The three-case split formula:
///
/// ```text
/// 0    if 2E < (xi-xi')(1+xi') / (xi'^2 (1+xi))
/// 2E   if 2E < (xi'-xi)(1+xi)(1+xi') / (xi^2 (1+xi')^2 + (xi-xi')^2)
/// [(xi-xi')(1+xi)(1+xi') + 2E xi'^2 (1+xi)^2] / [2((xi-xi')^2 + xi xi'(1+xi)(1+xi'))]   otherwise
/// ```
///
/// It does not minimise the restricted objective: the first two branches
/// are swapped and the interior formula has the wrong `E` coefficient. Kept
/// for comparison against [`SplitQuadratic::minimizer`], which
/// [`optimal_bi_asym`] uses.
pub fn split_three_case(e: f64, xi: f64, xi_prime: f64) -> f64 {
    let t = 2.0 * e;
    let d = xi - xi_prime;
    if t < d * (1.0 + xi_prime) / (xi_prime * xi_prime * (1.0 + xi)) {
        return 0.0;
    }
    if t < -d * (1.0 + xi) * (1.0 + xi_prime) / (xi * xi * (1.0 + xi_prime).powi(2) + d * d) {
        return t;
    }
    (d * (1.0 + xi) * (1.0 + xi_prime) + t * xi_prime * xi_prime * (1.0 + xi).powi(2))
        / (2.0 * (d * d + xi * xi_prime * (1.0 + xi) * (1.0 + xi_prime)))
}

/// Grid `(1-2E)|0,0> + (2E-x)|0,1> + x|1,0>` (weights).
pub fn split_grid(e: f64, x: f64) -> Result<BipartiteSpectrum> {
    let t = 2.0 * e;
    BipartiteSpectrum::from_entries(1, &[((0, 0), 1.0 - t), ((0, 1), t - x), ((1, 0), x)])
}

/// Optimal two-mode input for unequal noise in the regime `xi' >= 1`. The
/// split `x` minimises the restricted quadratic; the fidelity is evaluated
/// on the resulting grid with [`exact_bi_fidelity`].
pub fn optimal_bi_asym(e: f64, xi: f64, xi_prime: f64) -> Result<OptimalSolution> {
    check_nonneg("E", e)?;
    check_nonneg("xi", xi)?;
    check_nonneg("xi'", xi_prime)?;
    let regime = bi_asym_regime(e, xi, xi_prime);
    if !regime.valid {
        let (t1, t2) = bi_asym_thresholds(xi, xi_prime);
        let detail = if xi_prime < 1.0 {
            format!("xi' = {xi_prime} is below 1")
        } else {
            format!(
                "2E = {} exceeds min{{(xi'^2-1)/(xi'(3xi'-1)) = {t1:.5}, (1+xi)/(2xi) = {t2:.5}}}",
                2.0 * e
            )
        };
        let threshold = if xi_prime < 1.0 { 1.0 } else { regime.bound };
        return Err(Error::RegimeViolation { clause: regime.clause, threshold, detail });
    }
    let e = e.min(0.5 * regime.bound);
    let x = SplitQuadratic::new(e, xi, xi_prime).minimizer();
    let grid = split_grid(e, x)?;
    let fidelity = exact_bi_fidelity(&grid, xi, xi_prime);
    Ok(OptimalSolution { spectrum: grid.into(), fidelity, regime, p_split: Some(x), unique: true })
}

fn bounds(upper: f64, bracket: f64, m: usize) -> FidelityBounds {
    if bracket == 0.0 {
        return FidelityBounds { lower: upper, upper, m, lower_floored: false };
    }
    let raw = 1.0 - (bracket + (1.0 - upper).max(0.0).sqrt()).powi(2);
    FidelityBounds { lower: raw.max(0.0), upper, m, lower_floored: raw < 0.0 }
}

fn check_m(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::OutOfRange { name: "M", value: 0.0 });
    }
    Ok(())
}

/// `1 - [2 sqrt(E/(M+1)) + sqrt(1-F)]^2 <= F_E <= F`, with `F` the
/// truncated optimum, which does not depend on `M`.
pub fn sandwich_uni(e: f64, xi: f64, m: usize) -> Result<FidelityBounds> {
    check_m(m)?;
    let upper = optimal_uni(e, xi)?.fidelity;
    Ok(bounds(upper, 2.0 * (e / (m as f64 + 1.0)).sqrt(), m))
}

/// `1 - [2 sqrt(1-(1-2E/(M+1))^2) + sqrt(1-F)]^2 <= F_E <= F`. Uses the
/// equal-noise optimum when `xi == xi'`, the asymmetric one otherwise.
pub fn sandwich_bi(e: f64, xi: f64, xi_prime: f64, m: usize) -> Result<FidelityBounds> {
    check_m(m)?;
    let upper = if xi == xi_prime {
        optimal_bi_equal(e, xi)?.fidelity
    } else {
        optimal_bi_asym(e, xi, xi_prime)?.fidelity
    };
    let r = 1.0 - 2.0 * e / (m as f64 + 1.0);
    Ok(bounds(upper, 2.0 * (1.0 - r * r).max(0.0).sqrt(), m))
}

/// `F_uni(E)^2 - F_bi(E)`, the amount by which the two-mode optimum falls
/// below the product of single-mode optima.
pub fn submult_gap(e: f64, xi: f64) -> Result<f64> {
    let bi = optimal_bi_equal(e, xi)?;
    let uni = optimal_uni(e, xi)?;
    Ok(uni.fidelity * uni.fidelity - bi.fidelity)
}

/// `eta^2 2x^2 (1 - 4x + 2x^2)` with `x = xi E/(1+xi)`: the gap expanded.
pub fn submult_gap_polynomial(e: f64, xi: f64) -> f64 {
    let eta = 1.0 / (1.0 + xi);
    let x = xi / (1.0 + xi) * e;
    eta * eta * 2.0 * x * x * (1.0 - 4.0 * x + 2.0 * x * x)
}
