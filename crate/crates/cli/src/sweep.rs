use rayon::prelude::*;

use cvtf_core::MinimizeOptions;

use crate::args::{Format, GridSpec, ModeArg, SweepArgs};
use crate::compute::Query;
use crate::config::Settings;
use crate::output::{emit, Cell, Table};
use crate::CliError;

/// Resolved sweep description.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub mode: ModeArg,
    pub xi: Option<f64>,
    pub xi_prime: Option<f64>,
    pub e_grid: GridSpec,
    pub xi_grid: Option<GridSpec>,
    pub e_relative: bool,
    pub numeric_fallback: bool,
    pub m: usize,
    pub format: Format,
    pub seed: u64,
}

impl SweepConfig {
    pub fn from_args(args: &SweepArgs, s: &Settings) -> Result<Self, CliError> {
        let mode = s.require_mode()?;
        let e_grid = args
            .e_grid
            .or(s.file.e_grid)
            .ok_or_else(|| CliError::Usage("--E-grid is required".into()))?;
        e_grid.validate("E").map_err(CliError::Usage)?;
        let xi_grid = args.xi_grid.or(s.file.xi_grid);
        match xi_grid {
            Some(g) => g.validate("xi").map_err(CliError::Usage)?,
            None => {
                s.require_xi()?;
            }
        }
        Ok(Self {
            mode,
            xi: s.xi,
            xi_prime: s.xi_prime,
            e_grid,
            xi_grid,
            e_relative: args.e_relative,
            numeric_fallback: args.numeric_fallback,
            m: s.m,
            format: s.format.unwrap_or(Format::Csv),
            seed: s.seed,
        })
    }

    pub fn header(&self) -> Vec<&'static str> {
        let mut h = match self.mode {
            ModeArg::Uni | ModeArg::BiEqual => vec!["E", "xi", "F_coherent", "F_tmsv", "F_optimal", "in_regime"],
            ModeArg::BiAsym => {
                vec!["E", "xi", "xi_prime", "F_coherent", "F_tmsv", "F_optimal", "p_split", "in_regime"]
            }
            ModeArg::Gap => vec!["E", "xi", "delta", "in_regime"],
        };
        if self.numeric_fallback {
            h.push("source");
        }
        h
    }

    /// `(E value or fraction, xi)` pairs in E-major order.
    fn points(&self) -> Vec<(f64, f64)> {
        let xis = match self.xi_grid {
            Some(g) => g.points(),
            None => vec![self.xi.expect("checked in from_args")],
        };
        self.e_grid.points().into_iter().flat_map(|e| xis.iter().map(move |&xi| (e, xi))).collect()
    }
}

fn row(cfg: &SweepConfig, e_in: f64, xi: f64) -> Result<Vec<Cell>, CliError> {
    let probe = Query::new(cfg.mode, 0.0, xi, cfg.xi_prime)?;
    let e = if cfg.e_relative {
        let bound = probe.regime().bound;
        match cfg.mode {
            ModeArg::Uni => e_in * bound,
            _ => e_in * bound / 2.0,
        }
    } else {
        e_in
    };
    let q = Query::new(cfg.mode, e, xi, cfg.xi_prime)?;
    let opts = MinimizeOptions { seed: cfg.seed, ..Default::default() };

    // closed form where valid, otherwise empty cells or the optimizer value
    let (main, split, in_regime, source) = {
        let closed = match cfg.mode {
            ModeArg::Gap => q.gap().map(|d| (d, None)),
            _ => q.closed_form().map(|s| (s.fidelity, s.p_split)),
        };
        match closed {
            Ok((v, split)) => (Some(v), split, true, "closed"),
            Err(CliError::Regime(_)) if cfg.numeric_fallback => {
                (Some(q.numeric(cfg.m, &opts)?.value), None, false, "numeric")
            }
            Err(CliError::Regime(_)) => (None, None, false, "none"),
            Err(other) => return Err(other),
        }
    };

    let mut cells = vec![Cell::Num(q.e), Cell::Num(q.xi)];
    match cfg.mode {
        ModeArg::Uni | ModeArg::BiEqual => {
            cells.extend([Cell::opt(q.coherent()), Cell::opt(q.tmsv()), Cell::opt(main)]);
        }
        ModeArg::BiAsym => {
            cells.extend([
                Cell::Num(q.xi_prime),
                Cell::opt(q.coherent()),
                Cell::opt(q.tmsv()),
                Cell::opt(main),
                Cell::opt(split),
            ]);
        }
        ModeArg::Gap => cells.push(Cell::opt(main)),
    }
    cells.push(Cell::Bool(in_regime));
    if cfg.numeric_fallback {
        cells.push(Cell::Text(source.into()));
    }
    Ok(cells)
}

/// Rows are computed in parallel and assembled in grid order.
pub fn sweep_table(cfg: &SweepConfig) -> Result<Table, CliError> {
    let rows: Vec<Result<Vec<Cell>, CliError>> =
        cfg.points().into_par_iter().map(|(e, xi)| row(cfg, e, xi)).collect();
    let mut t = Table::new(&cfg.header());
    for r in rows {
        t.push(r?);
    }
    Ok(t)
}

pub fn cmd_sweep(args: &SweepArgs, s: &Settings) -> Result<(), CliError> {
    let cfg = SweepConfig::from_args(args, s)?;
    let bytes = sweep_table(&cfg)?.render(cfg.format)?;
    emit(&bytes, s.out.as_deref())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(mode: ModeArg, grid: &str) -> SweepConfig {
        SweepConfig {
            mode,
            xi: Some(0.1),
            xi_prime: None,
            e_grid: grid.parse().unwrap(),
            xi_grid: None,
            e_relative: false,
            numeric_fallback: false,
            m: 4,
            format: Format::Csv,
            seed: 1,
        }
    }

    #[test]
    fn gap_rows() {
        let t = sweep_table(&cfg(ModeArg::Gap, "0:0.2:5")).unwrap();
        assert_eq!(t.header, vec!["E", "xi", "delta", "in_regime"]);
        assert_eq!(t.rows.len(), 5);
        assert_eq!(t.rows[0][2], Cell::Num(0.0));
    }

    #[test]
    fn out_of_regime_rows_are_flagged() {
        let t = sweep_table(&cfg(ModeArg::Uni, "0.5:1.0:2")).unwrap();
        assert_eq!(t.rows[0][5], Cell::Bool(true));
        assert_eq!(t.rows[1][4], Cell::Empty);
        assert_eq!(t.rows[1][5], Cell::Bool(false));
        // baselines do not depend on the regime
        assert!(matches!(t.rows[1][2], Cell::Num(_)));

        let mut c = cfg(ModeArg::Uni, "0.5:1.0:2");
        c.numeric_fallback = true;
        let t = sweep_table(&c).unwrap();
        assert_eq!(t.rows[1][6], Cell::Text("numeric".into()));
        assert!(matches!(t.rows[1][4], Cell::Num(_)));
        assert_eq!(t.rows[0][6], Cell::Text("closed".into()));
    }

    #[test]
    fn e_major_ordering_and_relative_energies() {
        let mut c = cfg(ModeArg::Uni, "0.5:1:2");
        c.xi_grid = Some("0.1:0.2:2".parse().unwrap());
        c.e_relative = true;
        let t = sweep_table(&c).unwrap();
        let cols: Vec<(f64, f64)> = t
            .rows
            .iter()
            .map(|r| match (&r[0], &r[1]) {
                (Cell::Num(e), Cell::Num(x)) => (*e, *x),
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(cols[0].1, 0.1);
        assert_eq!(cols[1].1, 0.2);
        assert!((cols[0].0 - 0.5 * 1.1 / 1.3).abs() < 1e-15);
        assert!((cols[3].0 - 1.2 / 1.6).abs() < 1e-15);
        assert!(t.rows.iter().all(|r| r[5] == Cell::Bool(true)));
    }
}
