//! Fock-basis action of the bosonic channels.
//!
//! The additive-noise channel `T^xi` is realised as a quantum-limited
//! amplifier of gain `1/eta` composed after a pure-loss channel of
//! transmissivity `eta = 1/(1+xi)`. Every map here is linear and is applied to
//! arbitrary (not necessarily Hermitian) operators at the `CMatrix` level; the
//! `DensityMatrix` entry points add validation on top.

use crate::error::{Error, Result};
use crate::fock::DensityMatrix;
use crate::{CMatrix, C64};

/// Default trace deficit accepted from the amplifier's truncated Kraus sum.
pub const DEFAULT_DEFICIT_TOL: f64 = 1e-12;

/// Binomial coefficient as `f64`; exact integer arithmetic for `n <= 30`,
/// log-gamma above.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    if n <= 30 {
        let mut acc: u64 = 1;
        for i in 0..k {
            // acc * (n - i) / (i + 1) stays integral at every step
            acc = acc * (n - i) as u64 / (i + 1) as u64;
        }
        acc as f64
    } else {
        statrs::function::factorial::ln_binomial(n as u64, k as u64).exp()
    }
}

/// Noise parameter `xi >= 0` and the matching transmissivity `eta = 1/(1+xi)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ChannelParams {
    xi: f64,
    eta: f64,
}

impl ChannelParams {
    pub fn new(xi: f64) -> Result<Self> {
        if !(xi.is_finite() && xi >= 0.0) {
            return Err(Error::OutOfRange { name: "xi", value: xi });
        }
        Ok(Self { xi, eta: 1.0 / (1.0 + xi) })
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Amplifier gain `1/eta = 1 + xi`.
    pub fn gain(&self) -> f64 {
        1.0 + self.xi
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::OutOfRange { name: "eta", value: eta });
    }
    Ok(())
}

/// Pure-loss channel on an arbitrary operator:
/// `|m><m'| -> sum_k sqrt(C(m,k) C(m',k)) eta^{(m+m'-2k)/2} (1-eta)^k |m-k><m'-k|`.
pub fn pure_loss_map(x: &CMatrix, eta: f64, out_dim: usize) -> Result<CMatrix> {
    check_eta(eta)?;
    let d = x.nrows();
    if out_dim < d {
        return Err(Error::DimensionTooSmall { required: d, got: out_dim });
    }
    let sq_eta = eta.sqrt();
    let loss = 1.0 - eta;
    let mut out = CMatrix::zeros(out_dim, out_dim);
    for m in 0..d {
        for mp in 0..x.ncols() {
            let v = x[(m, mp)];
            if v.norm() == 0.0 {
                continue;
            }
            for k in 0..=m.min(mp) {
                let c = (binomial(m, k) * binomial(mp, k)).sqrt()
                    * sq_eta.powi((m + mp - 2 * k) as i32)
                    * loss.powi(k as i32);
                out[(m - k, mp - k)] += v * c;
            }
        }
    }
    Ok(out)
}

/// Kraus weights `t_{n,k} = C(n+k,k) G^{-(n+1)} (1-1/G)^k` for one input level.
fn amp_weights(n: usize, gain: f64, kmax: usize) -> Vec<f64> {
    let x = 1.0 - 1.0 / gain;
    let mut t = Vec::with_capacity(kmax + 1);
    let mut w = gain.powi(-((n + 1) as i32));
    t.push(w);
    for k in 1..=kmax {
        w *= (n + k) as f64 / k as f64 * x;
        t.push(w);
    }
    t
}

fn check_gain(gain: f64) -> Result<()> {
    if !(gain.is_finite() && gain >= 1.0) {
        return Err(Error::OutOfRange { name: "gain", value: gain });
    }
    Ok(())
}

fn accumulate_amp(x: &CMatrix, weights: &[Vec<f64>], kmax: usize, out_dim: usize) -> CMatrix {
    let d = x.nrows();
    let mut out = CMatrix::zeros(out_dim, out_dim);
    for n in 0..d {
        for np in 0..d {
            let v = x[(n, np)];
            if v.norm() == 0.0 {
                continue;
            }
            for k in 0..=kmax {
                if n + k >= out_dim || np + k >= out_dim {
                    break;
                }
                let c = (weights[n][k] * weights[np][k]).sqrt();
                out[(n + k, np + k)] += v * c;
            }
        }
    }
    out
}

/// Compression `Pi A^G(x) Pi` of the amplifier output onto the first
/// `out_dim` Fock levels. Exact: every Kraus term landing inside the window is
/// included.
pub fn amplifier_window(x: &CMatrix, gain: f64, out_dim: usize) -> Result<CMatrix> {
    check_gain(gain)?;
    let weights: Vec<Vec<f64>> = (0..x.nrows()).map(|n| amp_weights(n, gain, out_dim)).collect();
    Ok(accumulate_amp(x, &weights, out_dim, out_dim))
}

/// Quantum-limited amplifier with the Kraus sum truncated adaptively.
///
/// Terms `k = 0..=K` are summed for the smallest `K` whose neglected trace on
/// `x` is below `deficit_tol`. For non-diagonal input the neglected mass is
/// bounded through the envelope `w_n = (sum_j |x_nj| + sum_j |x_jn|) / 2`.
/// Returns the output and the bound on the neglected trace.
pub fn amplifier_map(
    x: &CMatrix,
    gain: f64,
    out_dim: usize,
    deficit_tol: f64,
) -> Result<(CMatrix, f64)> {
    check_gain(gain)?;
    if deficit_tol.is_nan() || deficit_tol <= 0.0 {
        return Err(Error::OutOfRange { name: "deficit_tol", value: deficit_tol });
    }
    let d = x.nrows();
    if out_dim < d {
        return Err(Error::DimensionTooSmall { required: d, got: out_dim });
    }
    let envelope: Vec<f64> = (0..d)
        .map(|n| {
            let row: f64 = (0..d).map(|j| x[(n, j)].norm()).sum();
            let col: f64 = (0..d).map(|j| x[(j, n)].norm()).sum();
            0.5 * (row + col)
        })
        .collect();
    let n_top = match envelope.iter().rposition(|w| *w > 0.0) {
        Some(n) => n,
        None => return Ok((CMatrix::zeros(out_dim, out_dim), 0.0)),
    };
    let kcap = out_dim - 1 - n_top;
    let weights: Vec<Vec<f64>> = (0..d).map(|n| amp_weights(n, gain, kcap)).collect();

    let mut kept = vec![0.0; d];
    let mut kmax = None;
    let mut deficit = f64::INFINITY;
    for k in 0..=kcap {
        for (kn, w) in kept.iter_mut().zip(&weights) {
            *kn += w[k];
        }
        deficit = (0..d).map(|n| envelope[n] * (1.0 - kept[n]).max(0.0)).sum();
        if deficit < deficit_tol {
            kmax = Some(k);
            break;
        }
    }
    let kmax = kmax.ok_or(Error::ToleranceUnreachable { deficit, tol: deficit_tol, out_dim })?;
    Ok((accumulate_amp(x, &weights, kmax, out_dim), deficit))
}

/// Additive-noise channel `T^xi = A^{1/eta} o L^eta` on an arbitrary operator.
pub fn additive_noise_map(
    x: &CMatrix,
    params: ChannelParams,
    out_dim: usize,
    deficit_tol: f64,
) -> Result<(CMatrix, f64)> {
    let lossy = pure_loss_map(x, params.eta(), x.nrows())?;
    amplifier_map(&lossy, params.gain(), out_dim, deficit_tol)
}

/// Pure-loss channel on a state. Trace is preserved exactly.
pub fn apply_pure_loss(rho: &DensityMatrix, eta: f64, out_dim: usize) -> Result<DensityMatrix> {
    let out = pure_loss_map(rho.entries(), eta, out_dim)?;
    DensityMatrix::new(out, rho.trunc_deficit())
}

/// Quantum-limited amplifier of gain `gain >= 1` on a state.
pub fn apply_amplifier(
    rho: &DensityMatrix,
    gain: f64,
    out_dim: usize,
    deficit_tol: f64,
) -> Result<DensityMatrix> {
    let (out, _) = amplifier_map(rho.entries(), gain, out_dim, deficit_tol)?;
    DensityMatrix::new(out, rho.trunc_deficit() + deficit_tol)
}

/// Additive-noise channel on a state.
pub fn apply_additive_noise(
    rho: &DensityMatrix,
    params: ChannelParams,
    out_dim: usize,
    deficit_tol: f64,
) -> Result<DensityMatrix> {
    let lossy = apply_pure_loss(rho, params.eta(), rho.dim())?;
    apply_amplifier(&lossy, params.gain(), out_dim, deficit_tol)
}

/// `T_xi^{m m'} = sum_{k=0}^{min(m,m')} C(m,k) C(m',k) xi^{2k} / (1+xi)^{m+m'}`,
/// the Hilbert-Schmidt overlap `Tr[L(|m><m'|) L(|m'><m|)]` at `eta = 1/(1+xi)`.
pub fn overlap_trace(m: usize, m_prime: usize, xi: f64) -> f64 {
    let eta = 1.0 / (1.0 + xi);
    let xi2 = xi * xi;
    let mut s = 0.0;
    let mut xp = 1.0;
    for k in 0..=m.min(m_prime) {
        s += binomial(m, k) * binomial(m_prime, k) * xp;
        xp *= xi2;
    }
    s * eta.powi((m + m_prime) as i32)
}

/// Table of `overlap_trace(m, m', xi)` for `m, m' <= max`.
pub fn overlap_table(max: usize, xi: f64) -> Vec<Vec<f64>> {
    (0..=max).map(|m| (0..=max).map(|mp| overlap_trace(m, mp, xi)).collect()).collect()
}

/// `|a><b|` on dimension `dim`.
pub fn ket_bra(a: usize, b: usize, dim: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    m[(a, b)] = C64::new(1.0, 0.0);
    m
}
