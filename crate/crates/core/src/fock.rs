//! Twin-Fock input states and truncated density matrices.
//!
//! Inputs are kept in probability space: a unidirectional input
//! `sum_n sqrt(p_n) |n>_R |n>_A` is stored as the vector `p`, a bidirectional
//! input `sum_{m,n} sqrt(p_{m,n}) |m,n>_R |m,n>_AB` as the dense grid `p_{m,n}`.
//! Amplitudes are derived on demand.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{CMatrix, C64};

/// Largest supported truncation index.
pub const MAX_TRUNCATION: usize = 64;

/// Sums within this distance of 1 are accepted and renormalised.
pub const INPUT_NORM_TOL: f64 = 1e-9;

/// Internal normalisation tolerance.
pub const NORM_TOL: f64 = 1e-12;

/// Entries above `-NEG_TOL` are treated as roundoff and clamped to zero.
const NEG_TOL: f64 = 1e-12;

fn validate_probs(raw: &[f64]) -> Result<Vec<f64>> {
    let mut probs = Vec::with_capacity(raw.len());
    for (index, &value) in raw.iter().enumerate() {
        if !value.is_finite() || value < -NEG_TOL {
            return Err(Error::NegativeEntry { index, value });
        }
        probs.push(value.max(0.0));
    }
    let sum: f64 = probs.iter().sum();
    let dev = (sum - 1.0).abs();
    if dev >= INPUT_NORM_TOL {
        return Err(Error::NotNormalized { sum });
    }
    // Leave already-normalised input bit-for-bit untouched.
    if dev > NORM_TOL {
        probs.iter_mut().for_each(|p| *p /= sum);
    }
    Ok(probs)
}

/// Schmidt probabilities `p_n`, `n = 0..=M`, of a twin-Fock superposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SchmidtSpectrum {
    probs: Vec<f64>,
}

/// Validates `raw` as a probability vector and wraps it.
pub fn make_schmidt_spectrum(raw: &[f64]) -> Result<SchmidtSpectrum> {
    SchmidtSpectrum::new(raw)
}

impl SchmidtSpectrum {
    pub fn new(raw: &[f64]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::EmptySpectrum);
        }
        if raw.len() > MAX_TRUNCATION + 1 {
            return Err(Error::TruncationTooLarge { m: raw.len() - 1, max: MAX_TRUNCATION });
        }
        Ok(Self { probs: validate_probs(raw)? })
    }

    /// The vacuum `|0>|0>`.
    pub fn vacuum() -> Self {
        Self { probs: vec![1.0] }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Truncation index `M` (the spectrum has `M + 1` entries).
    pub fn truncation(&self) -> usize {
        self.probs.len() - 1
    }

    /// Schmidt amplitudes `sqrt(p_n)`.
    pub fn amplitudes(&self) -> Vec<f64> {
        self.probs.iter().map(|p| p.sqrt()).collect()
    }

    /// Returns the same state with zeros appended up to truncation `m`.
    pub fn padded(&self, m: usize) -> Self {
        let mut probs = self.probs.clone();
        if probs.len() < m + 1 {
            probs.resize(m + 1, 0.0);
        }
        Self { probs }
    }
}

impl TryFrom<Vec<f64>> for SchmidtSpectrum {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(&v)
    }
}

impl From<SchmidtSpectrum> for Vec<f64> {
    fn from(s: SchmidtSpectrum) -> Self {
        s.probs
    }
}

/// Probabilities `p_{m,n}` over `(m, n) in {0..=M}^2`, stored row-major with
/// `m` (mode A) as the row index and `n` (mode B) as the column index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct BipartiteSpectrum {
    side: usize,
    probs: Vec<f64>,
}

impl BipartiteSpectrum {
    /// Builds a grid from row-major entries of a `(M+1) x (M+1)` matrix.
    pub fn from_flat(side: usize, flat: &[f64]) -> Result<Self> {
        if side == 0 || flat.is_empty() {
            return Err(Error::EmptySpectrum);
        }
        if flat.len() != side * side {
            return Err(Error::NotSquare);
        }
        if side > MAX_TRUNCATION + 1 {
            return Err(Error::TruncationTooLarge { m: side - 1, max: MAX_TRUNCATION });
        }
        Ok(Self { side, probs: validate_probs(flat)? })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let side = rows.len();
        if rows.iter().any(|r| r.len() != side) {
            return Err(Error::NotSquare);
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_flat(side, &flat)
    }

    /// Builds a grid of truncation `m` from sparse `((m, n), p)` entries.
    pub fn from_entries(m: usize, entries: &[((usize, usize), f64)]) -> Result<Self> {
        let side = m + 1;
        let mut flat = vec![0.0; side * side];
        for &((a, b), p) in entries {
            if a >= side || b >= side {
                return Err(Error::DimensionTooSmall { required: a.max(b) + 1, got: side });
            }
            flat[a * side + b] += p;
        }
        Self::from_flat(side, &flat)
    }

    /// Product grid `p_{m,n} = q_m r_n`, padded to the larger truncation.
    pub fn product(q: &SchmidtSpectrum, r: &SchmidtSpectrum) -> Self {
        let side = q.probs.len().max(r.probs.len());
        let q = q.padded(side - 1);
        let r = r.padded(side - 1);
        let mut probs = vec![0.0; side * side];
        for (a, qa) in q.probs.iter().enumerate() {
            for (b, rb) in r.probs.iter().enumerate() {
                probs[a * side + b] = qa * rb;
            }
        }
        Self { side, probs }
    }

    pub fn vacuum() -> Self {
        Self { side: 1, probs: vec![1.0] }
    }

    pub fn truncation(&self) -> usize {
        self.side - 1
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn get(&self, m: usize, n: usize) -> f64 {
        if m < self.side && n < self.side {
            self.probs[m * self.side + n]
        } else {
            0.0
        }
    }

    /// Row-major entries.
    pub fn flat(&self) -> &[f64] {
        &self.probs
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.probs.chunks(self.side).map(<[f64]>::to_vec).collect()
    }

    pub fn padded(&self, m: usize) -> Self {
        let side = (m + 1).max(self.side);
        if side == self.side {
            return self.clone();
        }
        let mut probs = vec![0.0; side * side];
        for a in 0..self.side {
            for b in 0..self.side {
                probs[a * side + b] = self.probs[a * self.side + b];
            }
        }
        Self { side, probs }
    }
}

impl TryFrom<Vec<Vec<f64>>> for BipartiteSpectrum {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<BipartiteSpectrum> for Vec<Vec<f64>> {
    fn from(g: BipartiteSpectrum) -> Self {
        g.rows()
    }
}

/// Either kind of twin-Fock input.
#[derive(Debug, Clone, PartialEq)]
pub enum Spectrum {
    Uni(SchmidtSpectrum),
    Bi(BipartiteSpectrum),
}

impl Spectrum {
    pub fn as_uni(&self) -> Option<&SchmidtSpectrum> {
        match self {
            Spectrum::Uni(s) => Some(s),
            Spectrum::Bi(_) => None,
        }
    }

    pub fn as_bi(&self) -> Option<&BipartiteSpectrum> {
        match self {
            Spectrum::Bi(g) => Some(g),
            Spectrum::Uni(_) => None,
        }
    }
}

impl From<SchmidtSpectrum> for Spectrum {
    fn from(s: SchmidtSpectrum) -> Self {
        Spectrum::Uni(s)
    }
}

impl From<BipartiteSpectrum> for Spectrum {
    fn from(g: BipartiteSpectrum) -> Self {
        Spectrum::Bi(g)
    }
}

/// Mean photon number budget `E >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct EnergyBudget(f64);

impl EnergyBudget {
    pub fn new(e: f64) -> Result<Self> {
        if !(e.is_finite() && e >= 0.0) {
            return Err(Error::OutOfRange { name: "E", value: e });
        }
        Ok(Self(e))
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// Total photon budget `2E` for the two-mode problem.
    pub fn bidirectional_total(self) -> f64 {
        2.0 * self.0
    }
}

/// `sum_n n p_n`.
pub fn mean_photon(spectrum: &SchmidtSpectrum) -> f64 {
    spectrum.probs.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
}

/// `sum_{m,n} (m + n) p_{m,n}`.
pub fn mean_total_photon(grid: &BipartiteSpectrum) -> f64 {
    let side = grid.side;
    grid.probs
        .iter()
        .enumerate()
        .map(|(i, p)| ((i / side) + (i % side)) as f64 * p)
        .sum()
}

/// Reduced state `Tr_R psi_RA = sum_n p_n |n><n|`.
pub fn reduced_density(spectrum: &SchmidtSpectrum) -> DensityMatrix {
    let d = spectrum.probs.len();
    let mut m = CMatrix::zeros(d, d);
    for (n, p) in spectrum.probs.iter().enumerate() {
        m[(n, n)] = C64::new(*p, 0.0);
    }
    DensityMatrix { entries: m, trunc_deficit: 0.0 }
}

/// Amplitude vector of the purified twin-Fock state.
///
/// For a Schmidt spectrum the result lives on `R (x) A` with both factors of
/// dimension `out_dim`, index `r * out_dim + a`. For a grid the layout is
/// `R_A (x) R_B (x) A (x) B`, index `((r_a * d + r_b) * d + a) * d + b` with
/// `d = out_dim`.
pub fn pure_state_vector(spectrum: &Spectrum, out_dim: usize) -> Result<Vec<C64>> {
    match spectrum {
        Spectrum::Uni(s) => {
            let need = s.probs.len();
            if out_dim < need {
                return Err(Error::DimensionTooSmall { required: need, got: out_dim });
            }
            let mut v = vec![C64::new(0.0, 0.0); out_dim * out_dim];
            for (n, p) in s.probs.iter().enumerate() {
                v[n * out_dim + n] = C64::new(p.sqrt(), 0.0);
            }
            Ok(v)
        }
        Spectrum::Bi(g) => {
            let need = g.side;
            if out_dim < need {
                return Err(Error::DimensionTooSmall { required: need, got: out_dim });
            }
            let d = out_dim;
            let mut v = vec![C64::new(0.0, 0.0); d * d * d * d];
            for a in 0..g.side {
                for b in 0..g.side {
                    let p = g.get(a, b);
                    if p > 0.0 {
                        v[((a * d + b) * d + a) * d + b] = C64::new(p.sqrt(), 0.0);
                    }
                }
            }
            Ok(v)
        }
    }
}

/// Hermitian, PSD, trace-normalised matrix on a truncated Fock space.
///
/// `trunc_deficit` is the trace mass the truncation is allowed to have lost.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: CMatrix,
    trunc_deficit: f64,
}

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const PSD_FLOOR: f64 = -1e-10;

impl DensityMatrix {
    pub fn new(entries: CMatrix, trunc_deficit: f64) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::NotSquare);
        }
        let d = entries.nrows();
        let mut asym = 0.0f64;
        for i in 0..d {
            for j in i..d {
                asym = asym.max((entries[(i, j)] - entries[(j, i)].conj()).norm());
            }
        }
        if asym > HERMITIAN_TOL {
            return Err(Error::NotHermitian { asym });
        }
        let trace = entries.trace().re;
        if trace > 1.0 + NORM_TOL || trace < 1.0 - trunc_deficit - NORM_TOL {
            return Err(Error::TraceOutOfRange { trace, deficit: trunc_deficit });
        }
        let herm = (&entries + entries.adjoint()) * C64::new(0.5, 0.0);
        let min_eig = herm.symmetric_eigenvalues().min();
        if min_eig < PSD_FLOOR {
            return Err(Error::NotPositive { min_eig });
        }
        Ok(Self { entries, trunc_deficit })
    }

    /// Diagonal state `sum_n p_n |n><n|`.
    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        let d = probs.len();
        let mut m = CMatrix::zeros(d, d);
        for (n, p) in probs.iter().enumerate() {
            m[(n, n)] = C64::new(*p, 0.0);
        }
        Self::new(m, 0.0)
    }

    /// Fock state `|n><n|` on dimension `dim`.
    pub fn fock(n: usize, dim: usize) -> Result<Self> {
        if n >= dim {
            return Err(Error::DimensionTooSmall { required: n + 1, got: dim });
        }
        let mut m = CMatrix::zeros(dim, dim);
        m[(n, n)] = C64::new(1.0, 0.0);
        Ok(Self { entries: m, trunc_deficit: 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    pub fn trunc_deficit(&self) -> f64 {
        self.trunc_deficit
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }

    /// Real diagonal (photon-number distribution).
    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.entries[(i, i)].re).collect()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.entries + self.entries.adjoint()) * C64::new(0.5, 0.0);
        let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Mean photon number `Tr(n rho)`.
    pub fn mean_photon(&self) -> f64 {
        self.diag().iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn vacuum_spectrum() {
        let s = make_schmidt_spectrum(&[1.0]).unwrap();
        assert_eq!(s.truncation(), 0);
        assert_eq!(s.probs(), &[1.0]);
    }

    #[test]
    fn symmetric_pair() {
        let s = make_schmidt_spectrum(&[0.5, 0.5]).unwrap();
        assert_eq!(s.truncation(), 1);
    }

    #[test]
    fn rejects_unnormalised() {
        assert!(matches!(
            make_schmidt_spectrum(&[0.5, 0.6]),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn rejects_negative_and_empty() {
        assert!(matches!(
            make_schmidt_spectrum(&[1.1, -0.1]),
            Err(Error::NegativeEntry { index: 1, .. })
        ));
        assert_eq!(make_schmidt_spectrum(&[]), Err(Error::EmptySpectrum));
        assert!(matches!(
            make_schmidt_spectrum(&vec![1.0 / 70.0; 70]),
            Err(Error::TruncationTooLarge { .. })
        ));
    }

    #[test]
    fn renormalises_small_deviation() {
        let s = make_schmidt_spectrum(&[0.5 + 1e-10, 0.5]).unwrap();
        assert_abs_diff_eq!(s.probs().iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        // tiny negative roundoff is clamped
        let s = make_schmidt_spectrum(&[1.0, -1e-13]).unwrap();
        assert_eq!(s.probs()[1], 0.0);
    }

    #[test]
    fn mean_photon_examples() {
        assert_eq!(mean_photon(&SchmidtSpectrum::vacuum()), 0.0);
        assert_abs_diff_eq!(mean_photon(&SchmidtSpectrum::new(&[0.5, 0.5]).unwrap()), 0.5);
        let s = SchmidtSpectrum::new(&[0.2, 0.0, 0.8]).unwrap();
        assert_abs_diff_eq!(mean_photon(&s), 1.6, epsilon = 1e-15);
    }

    #[test]
    fn mean_total_photon_examples() {
        assert_eq!(mean_total_photon(&BipartiteSpectrum::vacuum()), 0.0);
        let g = BipartiteSpectrum::from_entries(1, &[((0, 1), 0.5), ((1, 0), 0.5)]).unwrap();
        assert_abs_diff_eq!(mean_total_photon(&g), 1.0);
        let g = BipartiteSpectrum::from_entries(1, &[((0, 0), 0.6), ((0, 1), 0.2), ((1, 0), 0.2)])
            .unwrap();
        assert_abs_diff_eq!(mean_total_photon(&g), 0.4, epsilon = 1e-15);
    }

    #[test]
    fn reduced_density_is_diagonal() {
        let e = 0.3;
        let rho = reduced_density(&SchmidtSpectrum::new(&[1.0 - e, e]).unwrap());
        assert_eq!(rho.diag(), vec![0.7, 0.3]);
        assert_eq!(rho.entries()[(0, 1)], C64::new(0.0, 0.0));
        let rho = reduced_density(&SchmidtSpectrum::vacuum());
        assert_eq!(rho.dim(), 1);
        assert_eq!(rho.trace(), 1.0);
    }

    #[test]
    fn state_vector_uni() {
        let v = pure_state_vector(&SchmidtSpectrum::vacuum().into(), 2).unwrap();
        assert_eq!(v[0], C64::new(1.0, 0.0));
        assert!(v[1..].iter().all(|z| z.norm() == 0.0));

        let v = pure_state_vector(&SchmidtSpectrum::new(&[0.5, 0.5]).unwrap().into(), 2).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(v[0].re, h, epsilon = 1e-15);
        assert_abs_diff_eq!(v[3].re, h, epsilon = 1e-15);
        assert_eq!(v[1].norm() + v[2].norm(), 0.0);
    }

    #[test]
    fn state_vector_bi() {
        let e = 0.1;
        let g = BipartiteSpectrum::from_entries(
            1,
            &[((0, 0), 1.0 - 2.0 * e), ((0, 1), e), ((1, 0), e)],
        )
        .unwrap();
        let d = 2;
        let v = pure_state_vector(&g.into(), d).unwrap();
        let idx = |a: usize, b: usize| ((a * d + b) * d + a) * d + b;
        assert_abs_diff_eq!(v[idx(0, 0)].re, 0.8f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(v[idx(0, 1)].re, 0.1f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(v[idx(1, 0)].re, 0.1f64.sqrt(), epsilon = 1e-15);
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn state_vector_too_small() {
        let s = SchmidtSpectrum::new(&[0.5, 0.25, 0.25]).unwrap();
        assert_eq!(
            pure_state_vector(&s.into(), 2),
            Err(Error::DimensionTooSmall { required: 3, got: 2 })
        );
    }

    #[test]
    fn density_matrix_validation() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = C64::new(0.5, 0.0);
        m[(1, 1)] = C64::new(0.5, 0.0);
        m[(0, 1)] = C64::new(0.0, 0.3);
        assert!(matches!(DensityMatrix::new(m.clone(), 0.0), Err(Error::NotHermitian { .. })));
        m[(1, 0)] = C64::new(0.0, -0.3);
        assert!(DensityMatrix::new(m.clone(), 0.0).is_ok());
        m[(0, 1)] = C64::new(0.0, 0.9);
        m[(1, 0)] = C64::new(0.0, -0.9);
        assert!(matches!(DensityMatrix::new(m, 0.0), Err(Error::NotPositive { .. })));
        assert!(matches!(
            DensityMatrix::diagonal(&[0.5, 0.4]),
            Err(Error::TraceOutOfRange { .. })
        ));
    }
}
