//! Mode-dispatched evaluation shared by `point` and `sweep`.

use cvtf_core::closedform::{bi_asym_regime, bi_equal_regime, uni_regime};
use cvtf_core::fidelity::{kraus_oracle_bi_auto, kraus_oracle_uni_auto};
use cvtf_core::optimize::{minimize_bi, minimize_uni};
use cvtf_core::{
    coherent_fidelity, optimal_bi_asym, optimal_bi_equal, optimal_uni, sandwich_bi, sandwich_uni,
    submult_gap, tmsv_fidelity, BipartiteSpectrum, Error, FidelityBounds, MinimizeOptions,
    MinimizeResult, OptimalSolution, PolytopeSpec, RegimeVerdict, SchmidtSpectrum, Spectrum,
};

use crate::args::ModeArg;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Query {
    pub mode: ModeArg,
    pub e: f64,
    pub xi: f64,
    /// Noise on the second mode; equals `xi` outside `bi-asym`.
    pub xi_prime: f64,
}

impl Query {
    pub fn new(mode: ModeArg, e: f64, xi: f64, xi_prime: Option<f64>) -> Result<Self, CliError> {
        let xi_prime = match mode {
            ModeArg::BiAsym => {
                xi_prime.ok_or_else(|| CliError::Usage("--xi-prime is required for bi-asym".into()))?
            }
            _ => xi,
        };
        for (name, v) in [("E", e), ("xi", xi), ("xi-prime", xi_prime)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(CliError::Usage(format!("--{name} must be a finite non-negative number, got {v}")));
            }
        }
        Ok(Self { mode, e, xi, xi_prime })
    }

    pub fn regime(&self) -> RegimeVerdict {
        match self.mode {
            ModeArg::Uni => uni_regime(self.e, self.xi),
            ModeArg::BiEqual | ModeArg::Gap => bi_equal_regime(self.e, self.xi),
            ModeArg::BiAsym => bi_asym_regime(self.e, self.xi, self.xi_prime),
        }
    }

    /// Coherent-state baseline (product over the modes used).
    pub fn coherent(&self) -> Option<f64> {
        match self.mode {
            ModeArg::Uni => Some(coherent_fidelity(self.xi)),
            ModeArg::BiEqual | ModeArg::BiAsym => {
                Some(coherent_fidelity(self.xi) * coherent_fidelity(self.xi_prime))
            }
            ModeArg::Gap => None,
        }
    }

    /// Two-mode squeezed vacuum baseline with energy `E` per mode.
    pub fn tmsv(&self) -> Option<f64> {
        match self.mode {
            ModeArg::Uni => Some(tmsv_fidelity(self.e, self.xi)),
            ModeArg::BiEqual | ModeArg::BiAsym => {
                Some(tmsv_fidelity(self.e, self.xi) * tmsv_fidelity(self.e, self.xi_prime))
            }
            ModeArg::Gap => None,
        }
    }

    /// Closed-form optimum; `Gap` has no state and is handled by [`Self::gap`].
    pub fn closed_form(&self) -> Result<OptimalSolution, CliError> {
        let r = match self.mode {
            ModeArg::Uni => optimal_uni(self.e, self.xi),
            ModeArg::BiEqual => optimal_bi_equal(self.e, self.xi),
            ModeArg::BiAsym => optimal_bi_asym(self.e, self.xi, self.xi_prime),
            ModeArg::Gap => return Err(CliError::Usage("gap mode has no optimal state".into())),
        };
        r.map_err(core_error)
    }

    pub fn gap(&self) -> Result<f64, CliError> {
        submult_gap(self.e, self.xi).map_err(core_error)
    }

    pub fn sandwich(&self, m: usize) -> Result<Option<FidelityBounds>, CliError> {
        let r = match self.mode {
            ModeArg::Uni => sandwich_uni(self.e, self.xi, m),
            ModeArg::BiEqual | ModeArg::BiAsym => sandwich_bi(self.e, self.xi, self.xi_prime, m),
            ModeArg::Gap => return Ok(None),
        };
        r.map(Some).map_err(core_error)
    }

    fn minimize_uni_at(&self, m: usize, opts: &MinimizeOptions) -> Result<MinimizeResult, CliError> {
        let spec = PolytopeSpec::uni(m, self.e).map_err(core_error)?;
        minimize_uni(&spec, self.xi, opts).map_err(core_error)
    }

    fn minimize_bi_at(&self, m: usize, opts: &MinimizeOptions) -> Result<MinimizeResult, CliError> {
        let spec = PolytopeSpec::bi(m, self.e).map_err(core_error)?;
        minimize_bi(&spec, self.xi, self.xi_prime, opts).map_err(core_error)
    }

    /// Optimizer value at truncation `m` (for `Gap`, the gap between optimizer values).
    pub fn numeric(&self, m: usize, opts: &MinimizeOptions) -> Result<Numeric, CliError> {
        Ok(match self.mode {
            ModeArg::Uni => Numeric::from_result(self.minimize_uni_at(m, opts)?),
            ModeArg::BiEqual | ModeArg::BiAsym => Numeric::from_result(self.minimize_bi_at(m, opts)?),
            ModeArg::Gap => {
                let u = self.minimize_uni_at(m, opts)?;
                let b = self.minimize_bi_at(m, opts)?;
                Numeric {
                    value: u.value * u.value - b.value,
                    minimizer: None,
                    converged: u.converged && b.converged,
                    starts_agreeing: u.starts_agreeing.min(b.starts_agreeing),
                }
            }
        })
    }

    /// Kraus-oracle fidelity of a state for this query's channel.
    pub fn oracle(&self, state: &Spectrum) -> Result<f64, CliError> {
        match state {
            Spectrum::Uni(s) => trim_uni(s).and_then(|s| kraus_oracle_uni_auto(&s, self.xi)),
            Spectrum::Bi(g) => trim_bi(g).and_then(|g| kraus_oracle_bi_auto(&g, self.xi, self.xi_prime)),
        }
        .map_err(core_error)
    }
}

pub struct Numeric {
    pub value: f64,
    pub minimizer: Option<Spectrum>,
    pub converged: bool,
    pub starts_agreeing: usize,
}

impl Numeric {
    fn from_result(r: MinimizeResult) -> Self {
        Self {
            value: r.value,
            minimizer: Some(r.minimizer),
            converged: r.converged,
            starts_agreeing: r.starts_agreeing,
        }
    }
}

/// Drop trailing zero levels so the oracle works on the smallest window.
fn trim_uni(s: &SchmidtSpectrum) -> cvtf_core::Result<SchmidtSpectrum> {
    let p = s.probs();
    let top = p.iter().rposition(|x| *x > 0.0).unwrap_or(0);
    SchmidtSpectrum::new(&p[..=top])
}

fn trim_bi(g: &BipartiteSpectrum) -> cvtf_core::Result<BipartiteSpectrum> {
    let side = g.side();
    let top = (0..side * side)
        .filter(|&i| g.flat()[i] > 0.0)
        .map(|i| (i / side).max(i % side))
        .max()
        .unwrap_or(0);
    let entries: Vec<((usize, usize), f64)> = (0..=top)
        .flat_map(|a| (0..=top).map(move |b| (a, b)))
        .map(|(a, b)| ((a, b), g.get(a, b)))
        .collect();
    BipartiteSpectrum::from_entries(top, &entries)
}

pub fn core_error(e: Error) -> CliError {
    match e {
        Error::RegimeViolation { .. } => CliError::Regime(e.to_string()),
        other => CliError::Usage(other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bi_asym_needs_xi_prime() {
        assert!(Query::new(ModeArg::BiAsym, 0.1, 0.0, None).is_err());
        let q = Query::new(ModeArg::BiEqual, 0.1, 0.2, Some(5.0)).unwrap();
        assert_eq!(q.xi_prime, 0.2);
    }

    #[test]
    fn regime_errors_map_to_exit_2() {
        let q = Query::new(ModeArg::Uni, 2.0, 0.1, None).unwrap();
        assert!(matches!(q.closed_form(), Err(CliError::Regime(_))));
        assert!(Query::new(ModeArg::Uni, -1.0, 0.1, None).is_err());
    }

    #[test]
    fn trimming() {
        let s = SchmidtSpectrum::new(&[0.5, 0.5, 0.0, 0.0]).unwrap();
        assert_eq!(trim_uni(&s).unwrap().truncation(), 1);
        let g = BipartiteSpectrum::from_entries(4, &[((0, 0), 0.5), ((0, 2), 0.5)]).unwrap();
        let t = trim_bi(&g).unwrap();
        assert_eq!(t.truncation(), 2);
        assert_eq!(t.get(0, 2), 0.5);
    }

    #[test]
    fn baselines_by_mode() {
        let q = Query::new(ModeArg::Uni, 0.5, 0.1, None).unwrap();
        assert!((q.coherent().unwrap() - 1.0 / 1.1).abs() < 1e-15);
        assert!((q.tmsv().unwrap() - 1.0 / 1.2).abs() < 1e-15);
        let q = Query::new(ModeArg::Gap, 0.1, 0.1, None).unwrap();
        assert!(q.coherent().is_none());
    }
}
