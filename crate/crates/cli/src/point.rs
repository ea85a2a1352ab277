use cvtf_core::MinimizeOptions;

use crate::args::{ModeArg, PointArgs};
use crate::compute::Query;
use crate::config::Settings;
use crate::output::{emit, Cell, Table};
use crate::CliError;

/// Ordered `(key, value)` pairs describing one point.
pub fn point_report(args: &PointArgs, s: &Settings) -> Result<Vec<(&'static str, Cell)>, CliError> {
    let mode = s.require_mode()?;
    let e = s.e.ok_or_else(|| CliError::Usage("--E is required".into()))?;
    let q = Query::new(mode, e, s.require_xi()?, s.xi_prime)?;
    let opts = MinimizeOptions { seed: s.seed, ..Default::default() };
    let regime = q.regime();

    let mut out: Vec<(&'static str, Cell)> = vec![
        ("mode", Cell::Text(mode.name().into())),
        ("E", Cell::Num(q.e)),
        ("xi", Cell::Num(q.xi)),
    ];
    if mode == ModeArg::BiAsym {
        out.push(("xi_prime", Cell::Num(q.xi_prime)));
    }
    out.push(("regime_clause", Cell::Text(regime.clause.to_string())));
    out.push(("regime_bound", Cell::Num(regime.bound)));

    let in_regime = match q.closed_form_or_gap() {
        Ok(()) => true,
        Err(CliError::Regime(msg)) if !args.allow_out_of_regime => return Err(CliError::Regime(msg)),
        Err(CliError::Regime(_)) => false,
        Err(other) => return Err(other),
    };
    out.push(("in_regime", Cell::Bool(in_regime)));

    let m = s.m;
    if mode == ModeArg::Gap {
        if in_regime {
            let delta = q.gap()?;
            let uq = Query { mode: ModeArg::Uni, ..q };
            let bq = Query { mode: ModeArg::BiEqual, ..q };
            let u = uq.closed_form()?;
            let b = bq.closed_form()?;
            out.push(("delta", Cell::Num(delta)));
            out.push(("F_uni", Cell::Num(u.fidelity)));
            out.push(("F_bi", Cell::Num(b.fidelity)));
            out.push(("source", Cell::Text("closed".into())));
            if args.verify {
                let ou = uq.oracle(&u.spectrum)?;
                let ob = bq.oracle(&b.spectrum)?;
                push_verify(&mut out, &q, m, &opts, delta, Some(ou * ou - ob))?;
            }
        } else {
            let n = q.numeric(m, &opts)?;
            out.push(("delta", Cell::Num(n.value)));
            out.push(("source", Cell::Text("numeric".into())));
        }
        return Ok(out);
    }

    if in_regime {
        let sol = q.closed_form()?;
        out.push(("F_optimal", Cell::Num(sol.fidelity)));
        out.push(("source", Cell::Text("closed".into())));
        if mode == ModeArg::BiAsym {
            out.push(("p_split", Cell::opt(sol.p_split)));
        }
        out.push(("F_coherent", Cell::opt(q.coherent())));
        out.push(("F_tmsv", Cell::opt(q.tmsv())));
        let b = q.sandwich(m)?.expect("non-gap modes have bounds");
        out.push(("M", Cell::Int(m as u64)));
        out.push(("sandwich_lower", Cell::Num(b.lower)));
        out.push(("sandwich_upper", Cell::Num(b.upper)));
        out.push(("sandwich_lower_floored", Cell::Bool(b.lower_floored)));
        if args.verify {
            let oracle = q.oracle(&sol.spectrum)?;
            push_verify(&mut out, &q, m, &opts, sol.fidelity, Some(oracle))?;
        }
    } else {
        let n = q.numeric(m, &opts)?;
        out.push(("F_optimal", Cell::Num(n.value)));
        out.push(("source", Cell::Text("numeric".into())));
        out.push(("F_coherent", Cell::opt(q.coherent())));
        out.push(("F_tmsv", Cell::opt(q.tmsv())));
        out.push(("M", Cell::Int(m as u64)));
        if args.verify {
            if let Some(state) = &n.minimizer {
                let oracle = q.oracle(state)?;
                out.push(("F_oracle", Cell::Num(oracle)));
                out.push(("oracle_delta", Cell::Num(oracle - n.value)));
            }
        }
    }
    Ok(out)
}

fn push_verify(
    out: &mut Vec<(&'static str, Cell)>,
    q: &Query,
    m: usize,
    opts: &MinimizeOptions,
    reference: f64,
    oracle: Option<f64>,
) -> Result<(), CliError> {
    let n = q.numeric(m, opts)?;
    out.push(("F_numeric", Cell::Num(n.value)));
    out.push(("numeric_delta", Cell::Num(n.value - reference)));
    out.push(("converged", Cell::Bool(n.converged)));
    out.push(("starts_agreeing", Cell::Int(n.starts_agreeing as u64)));
    if let Some(o) = oracle {
        out.push(("F_oracle", Cell::Num(o)));
        out.push(("oracle_delta", Cell::Num(o - reference)));
    }
    Ok(())
}

impl Query {
    /// Regime check through the closed form itself, so error messages match.
    fn closed_form_or_gap(&self) -> Result<(), CliError> {
        match self.mode {
            ModeArg::Gap => self.gap().map(|_| ()),
            _ => self.closed_form().map(|_| ()),
        }
    }
}

pub fn cmd_point(args: &PointArgs, s: &Settings) -> Result<(), CliError> {
    let report = point_report(args, s)?;
    let bytes = match s.format {
        Some(f) => {
            let keys: Vec<&str> = report.iter().map(|(k, _)| *k).collect();
            let mut t = Table::new(&keys);
            t.push(report.into_iter().map(|(_, v)| v).collect());
            t.render(f)?
        }
        None => {
            let width = report.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            let mut text = String::new();
            for (k, v) in &report {
                text.push_str(&format!("{k:<width$}  {}\n", v.text()));
            }
            text.into_bytes()
        }
    };
    emit(&bytes, s.out.as_deref())
}
