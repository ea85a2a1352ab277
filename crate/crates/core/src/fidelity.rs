//! Fidelity evaluators.
//!
//! Three independent routes compute the output fidelity of a twin-Fock input
//! sent through identity versus additive noise:
//!
//! * closed functionals in probability space ([`exact_uni_fidelity`],
//!   [`exact_bi_fidelity`]),
//! * the Kraus oracle, which builds the purified state and pushes it through
//!   the loss and amplifier Kraus operators ([`kraus_oracle_uni`],
//!   [`kraus_oracle_bi`]),
//! * Gaussian covariance formulas for coherent and two-mode squeezed inputs.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::channels::{additive_noise_map, binomial, ket_bra, overlap_table, ChannelParams};
use crate::error::{Error, Result};
use crate::fock::{pure_state_vector, BipartiteSpectrum, DensityMatrix, SchmidtSpectrum, Spectrum};
use crate::{CMatrix, C64};

/// Slack allowed outside `[0, 1]` before a fidelity is treated as a bug.
pub const FIDELITY_SLACK: f64 = 1e-10;

/// Trace deficit used by the Kraus oracle.
pub const ORACLE_DEFICIT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Method {
    ClosedForm,
    Functional,
    KrausOracle,
    GaussianFormula,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FidelityValue {
    pub value: f64,
    pub method: Method,
}

impl FidelityValue {
    pub fn new(value: f64, method: Method) -> Result<Self> {
        Ok(Self { value: clamp_fidelity(value)?, method })
    }
}

/// Clamps roundoff into `[0, 1]`; anything further out is an error.
pub fn clamp_fidelity(f: f64) -> Result<f64> {
    if !(-FIDELITY_SLACK..=1.0 + FIDELITY_SLACK).contains(&f) {
        return Err(Error::OutOfRange { name: "fidelity", value: f });
    }
    Ok(f.clamp(0.0, 1.0))
}

/// `<psi| rho |psi>`, the fidelity when one argument is pure.
pub fn fidelity_pure_vs_mixed(psi: &[C64], rho: &DensityMatrix) -> Result<f64> {
    let m = rho.entries();
    if psi.len() != m.nrows() {
        return Err(Error::DimensionMismatch { left: psi.len(), right: m.nrows() });
    }
    let mut acc = C64::new(0.0, 0.0);
    for (i, pi) in psi.iter().enumerate() {
        if pi.norm() == 0.0 {
            continue;
        }
        for (j, pj) in psi.iter().enumerate() {
            acc += pi.conj() * m[(i, j)] * pj;
        }
    }
    clamp_fidelity(acc.re)
}

/// Sine distance `sqrt(1 - F)`.
pub fn sine_distance(f: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::OutOfRange { name: "fidelity", value: f });
    }
    Ok((1.0 - f).sqrt())
}

/// Coefficients `c_k(n) = C(n,k) (1-eta)^k eta^{n-k}`: the probability that
/// a loss channel of transmissivity `1 - eta` maps `|n>` to `|k>`.
fn complementary_loss_table(m: usize, eta: f64) -> Vec<Vec<f64>> {
    (0..=m)
        .map(|k| {
            (0..=m)
                .map(|n| {
                    if n < k {
                        0.0
                    } else {
                        binomial(n, k) * (1.0 - eta).powi(k as i32) * eta.powi((n - k) as i32)
                    }
                })
                .collect()
        })
        .collect()
}

/// Exact output fidelity of a twin-Fock input under `I` versus `T^xi`:
/// `eta * sum_k (sum_{n>=k} p_n C(n,k) (1-eta)^k eta^{n-k})^2`.
pub fn exact_uni_fidelity(spectrum: &SchmidtSpectrum, xi: f64) -> f64 {
    debug_assert!(xi >= 0.0);
    let eta = 1.0 / (1.0 + xi);
    let p = spectrum.probs();
    let c = complementary_loss_table(p.len() - 1, eta);
    let s: f64 = c
        .iter()
        .map(|row| {
            let inner: f64 = row.iter().zip(p).map(|(ck, pn)| ck * pn).sum();
            inner * inner
        })
        .sum();
    eta * s
}

/// Matrix `Q` with `exact_uni_fidelity(p) = p^T Q p` on truncation `m`.
pub fn uni_quadratic_form(m: usize, xi: f64) -> Vec<Vec<f64>> {
    let eta = 1.0 / (1.0 + xi);
    let c = complementary_loss_table(m, eta);
    (0..=m)
        .map(|n| {
            (0..=m).map(|np| eta * c.iter().map(|row| row[n] * row[np]).sum::<f64>()).collect()
        })
        .collect()
}

/// Lower bound `(1/(1+xi)) [(sum_n p_n/(1+xi)^n)^2 + (sum_{n>=1} p_n xi/(1+xi)^n)^2]`.
/// Saturated exactly when the support is within `{0, 1}`.
pub fn lower_bound_uni(spectrum: &SchmidtSpectrum, xi: f64) -> f64 {
    let eta = 1.0 / (1.0 + xi);
    let mut first = 0.0;
    let mut second = 0.0;
    let mut w = 1.0;
    for (n, p) in spectrum.probs().iter().enumerate() {
        first += p * w;
        if n >= 1 {
            second += p * xi * w;
        }
        w *= eta;
    }
    eta * (first * first + second * second)
}

/// Exact output fidelity of a two-mode twin-Fock input under `I (x) I` versus
/// `T^xi (x) T^xi'`:
/// `(1/((1+xi)(1+xi'))) sum p_{m,n} p_{m',n'} T_xi^{mm'} T_xi'^{nn'}`.
pub fn exact_bi_fidelity(grid: &BipartiteSpectrum, xi: f64, xi_prime: f64) -> f64 {
    let m = grid.truncation();
    let ta = overlap_table(m, xi);
    let tb = overlap_table(m, xi_prime);
    let side = grid.side();
    let p = grid.flat();
    let nz: Vec<(usize, usize, f64)> = p
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| (i / side, i % side, *v))
        .collect();
    let mut s = 0.0;
    for &(a, b, pab) in &nz {
        for &(ap, bp, papbp) in &nz {
            s += pab * papbp * ta[a][ap] * tb[b][bp];
        }
    }
    s / ((1.0 + xi) * (1.0 + xi_prime))
}

/// Matrix `Q` (row-major grid indices) with `exact_bi_fidelity(p) = p^T Q p`.
pub fn bi_quadratic_form(m: usize, xi: f64, xi_prime: f64) -> Vec<Vec<f64>> {
    let ta = overlap_table(m, xi);
    let tb = overlap_table(m, xi_prime);
    let side = m + 1;
    let pref = 1.0 / ((1.0 + xi) * (1.0 + xi_prime));
    (0..side * side)
        .map(|i| {
            (0..side * side)
                .map(|j| pref * ta[i / side][j / side] * tb[i % side][j % side])
                .collect()
        })
        .collect()
}

/// Smallest output dimension for which the amplifier leg of `T^xi` reaches
/// `tol` on every input level up to `max_n`.
pub fn oracle_dim_for(max_n: usize, xi: f64, tol: f64) -> usize {
    let gain = 1.0 + xi;
    let x = 1.0 - 1.0 / gain;
    let mut t = gain.powi(-((max_n + 1) as i32));
    let mut kept = t;
    let mut k = 0;
    while 1.0 - kept >= 0.5 * tol && k < 100_000 {
        k += 1;
        t *= (max_n + k) as f64 / k as f64 * x;
        kept += t;
    }
    max_n + k + 2
}

/// Nonzero amplitudes grouped by reference index.
type Amplitudes = BTreeMap<usize, Vec<(Vec<usize>, C64)>>;

fn channel_outputs(
    d: usize,
    params: ChannelParams,
    oracle_dim: usize,
) -> Result<Vec<Vec<CMatrix>>> {
    let mut out = Vec::with_capacity(d);
    for a in 0..d {
        let mut row = Vec::with_capacity(d);
        for ap in 0..d {
            let (y, _) = additive_noise_map(&ket_bra(a, ap, d), params, oracle_dim, ORACLE_DEFICIT_TOL)?;
            row.push(y);
        }
        out.push(row);
    }
    Ok(out)
}

/// `<psi| (id_R (x) T_1 (x) ... ) (|psi><psi|) |psi>` for a pure state given by
/// its nonzero amplitudes, with `outputs[mode][a][a'] = T_mode(|a><a'|)`.
fn contract(amps: &Amplitudes, outputs: &[&Vec<Vec<CMatrix>>]) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for row in amps.values() {
        for row_p in amps.values() {
            // psi[r, in] conj(psi[r', in']) conj(psi[r, out]) psi[r', out']
            for (inp, c_in) in row {
                for (inp_p, c_in_p) in row_p {
                    for (outp, c_out) in row {
                        for (outp_p, c_out_p) in row_p {
                            let mut elem = C64::new(1.0, 0.0);
                            for (mode, y) in outputs.iter().enumerate() {
                                elem *= y[inp[mode]][inp_p[mode]][(outp[mode], outp_p[mode])];
                            }
                            acc += c_in * c_in_p.conj() * c_out.conj() * c_out_p * elem;
                        }
                    }
                }
            }
        }
    }
    acc
}

/// Output fidelity obtained by applying the loss and amplifier Kraus
/// operators to the A factor of the purified input.
pub fn kraus_oracle_uni(spectrum: &SchmidtSpectrum, xi: f64, oracle_dim: usize) -> Result<f64> {
    let params = ChannelParams::new(xi)?;
    let d = spectrum.truncation() + 1;
    if oracle_dim < d {
        return Err(Error::DimensionTooSmall { required: d, got: oracle_dim });
    }
    let psi = pure_state_vector(&Spectrum::Uni(spectrum.clone()), d)?;
    let mut amps = Amplitudes::new();
    for (i, c) in psi.iter().enumerate() {
        if c.norm() != 0.0 {
            amps.entry(i / d).or_default().push((vec![i % d], *c));
        }
    }
    let ys = channel_outputs(d, params, oracle_dim)?;
    clamp_fidelity(contract(&amps, &[&ys]).re)
}

/// Two-mode analogue of [`kraus_oracle_uni`]: `T^xi` on mode A, `T^xi'` on B.
pub fn kraus_oracle_bi(
    grid: &BipartiteSpectrum,
    xi: f64,
    xi_prime: f64,
    oracle_dim: usize,
) -> Result<f64> {
    let pa = ChannelParams::new(xi)?;
    let pb = ChannelParams::new(xi_prime)?;
    let d = grid.side();
    if oracle_dim < d {
        return Err(Error::DimensionTooSmall { required: d, got: oracle_dim });
    }
    let psi = pure_state_vector(&Spectrum::Bi(grid.clone()), d)?;
    let mut amps = Amplitudes::new();
    for (i, c) in psi.iter().enumerate() {
        if c.norm() != 0.0 {
            let r = i / (d * d);
            let ab = i % (d * d);
            amps.entry(r).or_default().push((vec![ab / d, ab % d], *c));
        }
    }
    let ya = channel_outputs(d, pa, oracle_dim)?;
    let yb = channel_outputs(d, pb, oracle_dim)?;
    clamp_fidelity(contract(&amps, &[&ya, &yb]).re)
}

/// [`kraus_oracle_uni`] with the oracle dimension chosen by [`oracle_dim_for`].
pub fn kraus_oracle_uni_auto(spectrum: &SchmidtSpectrum, xi: f64) -> Result<f64> {
    let dim = oracle_dim_for(spectrum.truncation(), xi, ORACLE_DEFICIT_TOL);
    kraus_oracle_uni(spectrum, xi, dim)
}

/// [`kraus_oracle_bi`] with the oracle dimension chosen by [`oracle_dim_for`].
pub fn kraus_oracle_bi_auto(grid: &BipartiteSpectrum, xi: f64, xi_prime: f64) -> Result<f64> {
    let m = grid.truncation();
    let dim = oracle_dim_for(m, xi, ORACLE_DEFICIT_TOL).max(oracle_dim_for(m, xi_prime, ORACLE_DEFICIT_TOL));
    kraus_oracle_bi(grid, xi, xi_prime, dim)
}

/// `2^N / sqrt(det(V1 + V2))`, the fidelity of two Gaussian states with equal
/// means when at least one of them is pure. Vacuum covariance is the identity.
pub fn gaussian_fidelity_det(v1: &DMatrix<f64>, v2: &DMatrix<f64>, n_modes: usize) -> Result<f64> {
    let dim = 2 * n_modes;
    for v in [v1, v2] {
        if v.nrows() != dim || v.ncols() != dim {
            return Err(Error::BadCovariance { rows: v.nrows(), cols: v.ncols(), expected: dim });
        }
    }
    let det = (v1 + v2).determinant();
    if det.is_nan() || det <= 0.0 {
        return Err(Error::SingularSum { det });
    }
    Ok(2f64.powi(n_modes as i32) / det.sqrt())
}

/// Covariance matrix of the two-mode squeezed vacuum with mean photon number
/// `nbar` per mode, quadrature order `(x_R, p_R, x_A, p_A)`.
pub fn tmsv_covariance(nbar: f64) -> DMatrix<f64> {
    let a = 2.0 * nbar + 1.0;
    let c = 2.0 * (nbar * (nbar + 1.0)).sqrt();
    DMatrix::from_row_slice(
        4,
        4,
        &[
            a, 0.0, c, 0.0, //
            0.0, a, 0.0, -c, //
            c, 0.0, a, 0.0, //
            0.0, -c, 0.0, a,
        ],
    )
}

/// Covariance after `T^xi` acts on `mode`: adds `2 xi` to that mode's block.
pub fn add_noise_to_mode(v: &DMatrix<f64>, mode: usize, xi: f64) -> DMatrix<f64> {
    let mut out = v.clone();
    out[(2 * mode, 2 * mode)] += 2.0 * xi;
    out[(2 * mode + 1, 2 * mode + 1)] += 2.0 * xi;
    out
}

/// Coherent-state input: `1/(1+xi)`, independent of the amplitude.
pub fn coherent_fidelity(xi: f64) -> f64 {
    1.0 / (1.0 + xi)
}

/// Two-mode squeezed vacuum with energy `E`: `1/(1+(2E+1) xi)`.
pub fn tmsv_fidelity(e: f64, xi: f64) -> f64 {
    1.0 / (1.0 + (2.0 * e + 1.0) * xi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn s(p: &[f64]) -> SchmidtSpectrum {
        SchmidtSpectrum::new(p).unwrap()
    }

    #[test]
    fn pure_vs_mixed() {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let rho0 = DensityMatrix::diagonal(&[1.0, 0.0]).unwrap();
        let rho1 = DensityMatrix::diagonal(&[0.0, 1.0]).unwrap();
        assert_eq!(fidelity_pure_vs_mixed(&[one, zero], &rho0).unwrap(), 1.0);
        assert_eq!(fidelity_pure_vs_mixed(&[one, zero], &rho1).unwrap(), 0.0);
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let mixed = DensityMatrix::diagonal(&[0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(fidelity_pure_vs_mixed(&[h, h], &mixed).unwrap(), 0.5, epsilon = 1e-15);
        assert!(matches!(
            fidelity_pure_vs_mixed(&[one], &mixed),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sine_distance_examples() {
        assert_eq!(sine_distance(1.0).unwrap(), 0.0);
        assert_eq!(sine_distance(0.0).unwrap(), 1.0);
        assert_eq!(sine_distance(0.75).unwrap(), 0.5);
        assert!(sine_distance(1.5).is_err());
    }

    #[test]
    fn clamping_band() {
        assert_eq!(clamp_fidelity(1.0 + 1e-12).unwrap(), 1.0);
        assert_eq!(clamp_fidelity(-1e-12).unwrap(), 0.0);
        assert!(clamp_fidelity(1.0 + 1e-8).is_err());
    }

    #[test]
    fn exact_uni_examples() {
        for xi in [0.0, 0.3, 2.0] {
            assert_abs_diff_eq!(exact_uni_fidelity(&SchmidtSpectrum::vacuum(), xi), 1.0 / (1.0 + xi));
        }
        // |2>|2> at eta = 0.9: 0.9 (0.81^2 + 0.18^2 + 0.01^2)
        let xi = 1.0 / 9.0;
        assert_abs_diff_eq!(exact_uni_fidelity(&s(&[0.0, 0.0, 1.0]), xi), 0.61974, epsilon = 1e-12);
    }

    #[test]
    fn lower_bound_examples() {
        let xi = 1.0 / 9.0;
        assert_abs_diff_eq!(lower_bound_uni(&SchmidtSpectrum::vacuum(), xi), 0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(lower_bound_uni(&s(&[0.0, 0.0, 1.0]), xi), 0.59778, epsilon = 1e-12);
        let p = s(&[0.6, 0.4]);
        assert_abs_diff_eq!(lower_bound_uni(&p, 0.3), exact_uni_fidelity(&p, 0.3), epsilon = 1e-15);
    }

    #[test]
    fn quadratic_forms_match_functionals() {
        let p = s(&[0.4, 0.3, 0.2, 0.1]);
        let q = uni_quadratic_form(3, 0.7);
        let v: f64 = (0..4).flat_map(|i| (0..4).map(move |j| (i, j))).map(|(i, j)| p.probs()[i] * q[i][j] * p.probs()[j]).sum();
        assert_abs_diff_eq!(v, exact_uni_fidelity(&p, 0.7), epsilon = 1e-15);

        let g = BipartiteSpectrum::from_entries(2, &[((0, 0), 0.5), ((1, 2), 0.3), ((2, 1), 0.2)]).unwrap();
        let q = bi_quadratic_form(2, 0.4, 1.3);
        let f = g.flat();
        let v: f64 = (0..9).flat_map(|i| (0..9).map(move |j| (i, j))).map(|(i, j)| f[i] * q[i][j] * f[j]).sum();
        assert_abs_diff_eq!(v, exact_bi_fidelity(&g, 0.4, 1.3), epsilon = 1e-15);
    }

    #[test]
    fn exact_bi_vacuum() {
        let f = exact_bi_fidelity(&BipartiteSpectrum::vacuum(), 0.5, 2.0);
        assert_abs_diff_eq!(f, 1.0 / (1.5 * 3.0), epsilon = 1e-15);
    }

    #[test]
    fn oracle_vacuum_and_identity() {
        let f = kraus_oracle_uni_auto(&SchmidtSpectrum::vacuum(), 0.5).unwrap();
        assert_abs_diff_eq!(f, 2.0 / 3.0, epsilon = 1e-10);
        let f = kraus_oracle_uni(&s(&[0.3, 0.3, 0.4]), 0.0, 3).unwrap();
        assert_abs_diff_eq!(f, 1.0, epsilon = 1e-12);
        let f = kraus_oracle_bi_auto(&BipartiteSpectrum::vacuum(), 0.5, 0.5).unwrap();
        assert_abs_diff_eq!(f, 4.0 / 9.0, epsilon = 1e-10);
        let g = BipartiteSpectrum::from_entries(1, &[((0, 0), 0.5), ((1, 1), 0.5)]).unwrap();
        assert_abs_diff_eq!(kraus_oracle_bi(&g, 0.0, 0.0, 2).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn oracle_matches_functional_on_pair() {
        let p = s(&[0.5, 0.5]);
        let f = kraus_oracle_uni_auto(&p, 0.1).unwrap();
        assert_abs_diff_eq!(f, exact_uni_fidelity(&p, 0.1), epsilon = 1e-10);
    }

    #[test]
    fn oracle_dim_too_small() {
        assert!(matches!(
            kraus_oracle_uni(&s(&[0.5, 0.5]), 0.1, 1),
            Err(Error::DimensionTooSmall { .. })
        ));
        assert!(matches!(
            kraus_oracle_uni(&s(&[0.5, 0.5]), 2.0, 4),
            Err(Error::ToleranceUnreachable { .. })
        ));
    }

    #[test]
    fn gaussian_examples() {
        let i2 = DMatrix::<f64>::identity(2, 2);
        assert_abs_diff_eq!(gaussian_fidelity_det(&i2, &i2, 1).unwrap(), 1.0, epsilon = 1e-15);
        let xi = 0.3;
        let noisy = &i2 * (1.0 + 2.0 * xi);
        assert_abs_diff_eq!(gaussian_fidelity_det(&i2, &noisy, 1).unwrap(), 1.0 / (1.0 + xi), epsilon = 1e-14);
        for nbar in [0.0, 0.5, 2.0] {
            let v = tmsv_covariance(nbar);
            let w = add_noise_to_mode(&v, 1, xi);
            let f = gaussian_fidelity_det(&v, &w, 2).unwrap();
            assert_abs_diff_eq!(f, tmsv_fidelity(nbar, xi), epsilon = 1e-13);
        }
        let neg = &i2 * -1.0;
        assert!(matches!(gaussian_fidelity_det(&i2, &neg, 1), Err(Error::SingularSum { .. })));
        assert!(matches!(gaussian_fidelity_det(&i2, &i2, 2), Err(Error::BadCovariance { .. })));
    }

    #[test]
    fn baselines() {
        assert_eq!(coherent_fidelity(0.0), 1.0);
        assert_abs_diff_eq!(coherent_fidelity(0.1), 0.909_090_91, epsilon = 1e-8);
        assert_eq!(coherent_fidelity(1.0), 0.5);
        assert_abs_diff_eq!(tmsv_fidelity(0.0, 0.4), coherent_fidelity(0.4));
        assert_abs_diff_eq!(tmsv_fidelity(0.5, 0.1), 0.833_333_33, epsilon = 1e-8);
        assert_eq!(tmsv_fidelity(3.0, 0.0), 1.0);
    }

    #[test]
    fn fidelity_value_checks_range() {
        assert!(FidelityValue::new(0.4, Method::Functional).is_ok());
        assert!(FidelityValue::new(1.2, Method::Functional).is_err());
    }
}
