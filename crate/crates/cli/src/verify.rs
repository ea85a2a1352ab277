//! Certification suite behind `cvtf verify`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use cvtf_core::closedform::{split_grid, split_three_case};
use cvtf_core::fidelity::{kraus_oracle_bi_auto, kraus_oracle_uni_auto, lower_bound_uni};
use cvtf_core::optimize::{minimize_bi, minimize_uni};
use cvtf_core::{
    coherent_fidelity, exact_bi_fidelity, exact_uni_fidelity, optimal_bi_asym, optimal_bi_equal,
    optimal_uni, sandwich_bi, sandwich_uni, submult_gap, tmsv_fidelity, BipartiteSpectrum,
    MinimizeOptions, PolytopeSpec, SchmidtSpectrum,
};

use crate::args::{Format, Group, VerifyArgs};
use crate::config::Settings;
use crate::output::{emit, Cell, Table};
use crate::CliError;

const ORACLE_XI: [f64; 4] = [0.1, 0.5, 1.0, 2.0];
const UNI_XI: [f64; 5] = [0.05, 0.1, 0.2, 0.5, 1.0];
const UNI_FRAC: [f64; 4] = [0.1, 0.3, 0.5, 0.7];
const BI_XI: [f64; 3] = [0.05, 0.1, 0.3];
const BI_FRAC: [f64; 3] = [0.1, 0.5, 0.9];
/// `(E, xi, xi')` points for the asymmetric state.
const ASYM_POINTS: [(f64, f64, f64); 4] = [(0.1, 0.0, 2.0), (0.1, 5.0, 2.0), (0.125, 3.0, 2.0), (0.15, 2.0, 4.0)];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Relation {
    /// `|value - reference| <= tol`
    Close,
    /// `value <= reference + tol`
    AtMost,
    /// `value > reference`
    Above,
    /// `value < reference`
    Below,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Close => "~=",
            Relation::AtMost => "<=",
            Relation::Above => ">",
            Relation::Below => "<",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub group: &'static str,
    pub name: String,
    pub value: f64,
    pub reference: f64,
    pub relation: Relation,
    pub tol: f64,
}

impl Check {
    pub fn delta(&self) -> f64 {
        self.value - self.reference
    }

    pub fn passed(&self) -> bool {
        match self.relation {
            Relation::Close => self.delta().abs() <= self.tol,
            Relation::AtMost => self.value <= self.reference + self.tol,
            Relation::Above => self.value > self.reference,
            Relation::Below => self.value < self.reference,
        }
    }
}

struct Suite {
    tol_override: Option<f64>,
    seed: u64,
    checks: Vec<Check>,
}

impl Suite {
    fn tol(&self, default: f64) -> f64 {
        self.tol_override.unwrap_or(default)
    }

    fn close(&mut self, group: &'static str, name: String, value: f64, reference: f64, default_tol: f64) {
        let tol = self.tol(default_tol);
        self.checks.push(Check { group, name, value, reference, relation: Relation::Close, tol });
    }

    fn at_most(&mut self, group: &'static str, name: String, value: f64, reference: f64) {
        self.checks.push(Check { group, name, value, reference, relation: Relation::AtMost, tol: 0.0 });
    }

    fn above(&mut self, group: &'static str, name: String, value: f64, reference: f64) {
        self.checks.push(Check { group, name, value, reference, relation: Relation::Above, tol: 0.0 });
    }

    fn opts(&self) -> MinimizeOptions {
        MinimizeOptions { seed: self.seed, ..Default::default() }
    }
}

fn random_probs(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

fn random_spectra(rng: &mut ChaCha8Rng, count: usize, max_m: usize) -> Vec<SchmidtSpectrum> {
    (0..count)
        .map(|_| {
            let m = rng.random_range(0..=max_m);
            SchmidtSpectrum::new(&random_probs(rng, m + 1)).expect("normalized")
        })
        .collect()
}

fn max_abs(xs: impl Iterator<Item = f64>) -> f64 {
    xs.fold(0.0, |a, b| a.max(b.abs()))
}

fn oracle_group(s: &mut Suite) -> Result<(), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let spectra = random_spectra(&mut rng, 50, 6);
    for xi in ORACLE_XI {
        let deltas: Vec<f64> = spectra
            .par_iter()
            .map(|p| kraus_oracle_uni_auto(p, xi).map(|k| k - exact_uni_fidelity(p, xi)))
            .collect::<Result<_, _>>()
            .map_err(crate::compute::core_error)?;
        s.close("oracle", format!("uni kraus vs functional, 50 spectra, xi={xi}"), max_abs(deltas.into_iter()), 0.0, 1e-9);
    }
    let grids: Vec<(BipartiteSpectrum, f64, f64)> = (0..20)
        .map(|k| {
            let m = rng.random_range(0..=3);
            let g = BipartiteSpectrum::from_flat(m + 1, &random_probs(&mut rng, (m + 1) * (m + 1))).expect("normalized");
            (g, ORACLE_XI[k % 4], ORACLE_XI[(k / 4 + 1) % 4])
        })
        .collect();
    let deltas: Vec<f64> = grids
        .par_iter()
        .map(|(g, a, b)| kraus_oracle_bi_auto(g, *a, *b).map(|k| k - exact_bi_fidelity(g, *a, *b)))
        .collect::<Result<_, _>>()
        .map_err(crate::compute::core_error)?;
    s.close("oracle", "bi kraus vs functional, 20 grids".into(), max_abs(deltas.into_iter()), 0.0, 1e-9);
    Ok(())
}

fn lower_bound_group(s: &mut Suite) {
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed ^ 0x5EED);
    let spectra = random_spectra(&mut rng, 100, 8);
    let worst = spectra
        .iter()
        .flat_map(|p| ORACLE_XI.iter().map(move |&xi| lower_bound_uni(p, xi) - exact_uni_fidelity(p, xi)))
        .fold(f64::NEG_INFINITY, f64::max);
    s.at_most("lower-bound", "max(lower - exact), random spectra".into(), worst, 0.0);
    let two_level = max_abs((0..100).map(|_| {
        let p1: f64 = rng.random();
        let xi = rng.random_range(0.0..3.0);
        let sp = SchmidtSpectrum::new(&[1.0 - p1, p1]).expect("normalized");
        lower_bound_uni(&sp, xi) - exact_uni_fidelity(&sp, xi)
    }));
    s.close("lower-bound", "saturation on support {0,1}".into(), two_level, 0.0, 1e-12);
    let p2 = SchmidtSpectrum::new(&[0.0, 0.0, 1.0]).expect("normalized");
    let xi = 1.0 / 9.0;
    s.above("lower-bound", "strict gap at p2=1, eta=0.9".into(), exact_uni_fidelity(&p2, xi) - lower_bound_uni(&p2, xi), 1e-6);
}

fn uni_points() -> Vec<(f64, f64)> {
    UNI_XI.iter().flat_map(|&xi| UNI_FRAC.iter().map(move |&f| (f * (1.0 + xi) / (1.0 + 3.0 * xi), xi))).collect()
}

fn bi_points() -> Vec<(f64, f64)> {
    BI_XI.iter().flat_map(|&xi| BI_FRAC.iter().map(move |&f| (0.5 * f * (1.0 + xi) / (2.0 + 3.0 * xi), xi))).collect()
}

fn uni_group(s: &mut Suite) -> Result<(), CliError> {
    let opts = s.opts();
    let results: Vec<_> = uni_points()
        .into_par_iter()
        .map(|(e, xi)| -> cvtf_core::Result<_> {
            let r = minimize_uni(&PolytopeSpec::uni(10, e)?, xi, &opts)?;
            let c = optimal_uni(e, xi)?;
            Ok((e, xi, r, c))
        })
        .collect::<Result<_, _>>()
        .map_err(crate::compute::core_error)?;
    for (e, xi, r, c) in results {
        s.close("uni", format!("optimizer vs closed form, xi={xi} E={e:.6}"), r.value, c.fidelity, 1e-8);
        let p = r.probs();
        let dev = max_abs(p.iter().enumerate().map(|(n, x)| {
            x - match n {
                0 => 1.0 - e,
                1 => e,
                _ => 0.0,
            }
        }));
        s.close("uni", format!("minimizer vs {{1-E, E}}, xi={xi} E={e:.6}"), dev, 0.0, 1e-6);
    }
    Ok(())
}

fn bi_group(s: &mut Suite) -> Result<(), CliError> {
    let opts = s.opts();
    let results: Vec<_> = bi_points()
        .into_par_iter()
        .map(|(e, xi)| -> cvtf_core::Result<_> {
            let r = minimize_bi(&PolytopeSpec::bi(6, e)?, xi, xi, &opts)?;
            let c = optimal_bi_equal(e, xi)?;
            Ok((e, xi, r, c))
        })
        .collect::<Result<_, _>>()
        .map_err(crate::compute::core_error)?;
    for (e, xi, r, c) in results {
        s.close("bi", format!("optimizer vs closed form, xi={xi} 2E={:.6}", 2.0 * e), r.value, c.fidelity, 1e-8);
        let g = r.minimizer.as_bi().expect("bi result");
        let side = g.side();
        let dev = max_abs((0..side * side).map(|i| {
            let (a, b) = (i / side, i % side);
            g.get(a, b)
                - match (a, b) {
                    (0, 0) => 1.0 - 2.0 * e,
                    (0, 1) | (1, 0) => e,
                    _ => 0.0,
                }
        }));
        s.close("bi", format!("minimizer vs {{1-2E, E, E}}, xi={xi} 2E={:.6}", 2.0 * e), dev, 0.0, 1e-6);
    }
    Ok(())
}

fn asym_group(s: &mut Suite) -> Result<(), CliError> {
    let opts = s.opts();
    for (e, xi, xp) in ASYM_POINTS {
        let c = optimal_bi_asym(e, xi, xp).map_err(crate::compute::core_error)?;
        let r = PolytopeSpec::bi(6, e)
            .and_then(|spec| minimize_bi(&spec, xi, xp, &opts))
            .map_err(crate::compute::core_error)?;
        let g = c.spectrum.as_bi().expect("bi state");
        let k = kraus_oracle_bi_auto(g, xi, xp).map_err(crate::compute::core_error)?;
        let tag = format!("xi={xi} xi'={xp} 2E={}", 2.0 * e);
        s.close("asym", format!("optimizer vs closed form, {tag}"), r.value, c.fidelity, 1e-8);
        s.close("asym", format!("kraus oracle vs closed form, {tag}"), k, c.fidelity, 1e-9);
        let split = r.minimizer.as_bi().expect("bi result").get(1, 0);
        s.close("asym", format!("optimizer p10 vs split, {tag}"), split, c.p_split.unwrap_or(f64::NAN), 1e-6);
    }
    Ok(())
}

fn three_case_group(s: &mut Suite) -> Result<(), CliError> {
    let opts = s.opts();
    for (e, xi, xp) in ASYM_POINTS {
        let three = split_three_case(e, xi, xp);
        let r = PolytopeSpec::bi(6, e)
            .and_then(|spec| minimize_bi(&spec, xi, xp, &opts))
            .map_err(crate::compute::core_error)?;
        let f_three = split_grid(e, three.clamp(0.0, 2.0 * e))
            .map(|g| exact_bi_fidelity(&g, xi, xp))
            .map_err(crate::compute::core_error)?;
        let tag = format!("xi={xi} xi'={xp} 2E={}", 2.0 * e);
        let split = r.minimizer.as_bi().expect("bi result").get(1, 0);
        s.close("three-case", format!("three-case p_E vs optimizer p10, {tag}"), three, split, 1e-6);
        s.close("three-case", format!("three-case fidelity vs optimizer, {tag}"), f_three, r.value, 1e-8);
    }
    Ok(())
}

fn sandwich_group(s: &mut Suite) -> Result<(), CliError> {
    let ms = [10usize, 100, 1000];
    let mut below = f64::NEG_INFINITY;
    let mut above = f64::NEG_INFINITY;
    let mut upper_drift: f64 = 0.0;
    let mut width: f64 = 0.0;
    let ce = crate::compute::core_error;
    for (e, xi) in uni_points() {
        let f = optimal_uni(e, xi).map_err(ce)?.fidelity;
        for m in ms {
            let b = sandwich_uni(e, xi, m).map_err(ce)?;
            below = below.max(b.lower - f);
            above = above.max(f - b.upper);
            upper_drift = upper_drift.max((b.upper - f).abs());
            if m == 1000 && e <= 0.5 {
                width = width.max(b.upper - b.lower);
            }
        }
    }
    for (e, xi) in bi_points() {
        let f = optimal_bi_equal(e, xi).map_err(ce)?.fidelity;
        for m in ms {
            let b = sandwich_bi(e, xi, xi, m).map_err(ce)?;
            below = below.max(b.lower - f);
            above = above.max(f - b.upper);
            upper_drift = upper_drift.max((b.upper - f).abs());
            if m == 1000 && e <= 0.5 {
                width = width.max(b.upper - b.lower);
            }
        }
    }
    s.at_most("sandwich", "max(lower - closed form)".into(), below, 0.0);
    s.at_most("sandwich", "max(closed form - upper)".into(), above, 0.0);
    s.at_most("sandwich", "upper is M-independent (max drift)".into(), upper_drift, 0.0);
    s.at_most("sandwich", "max(upper - lower) at M=1000, E<=0.5".into(), width, 0.15);
    Ok(())
}

fn gap_group(s: &mut Suite) -> Result<(), CliError> {
    let xi = 0.1;
    let deltas: Vec<f64> = (0..=100)
        .map(|k| submult_gap(11.0 / 46.0 * k as f64 / 100.0, xi))
        .collect::<Result<_, _>>()
        .map_err(crate::compute::core_error)?;
    s.close("gap", "delta(0)".into(), deltas[0], 0.0, 1e-12);
    let min_pos = deltas[1..].iter().copied().fold(f64::INFINITY, f64::min);
    s.above("gap", "min delta(E), E in (0, 11/46]".into(), min_pos, 0.0);
    let min_step = deltas.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    s.above("gap", "min increment of delta over the sweep".into(), min_step, 0.0);
    Ok(())
}

fn baselines_group(s: &mut Suite) -> Result<(), CliError> {
    let ce = crate::compute::core_error;
    let mut rows = Vec::new();
    for (e, xi) in uni_points() {
        rows.push((optimal_uni(e, xi).map_err(ce)?.fidelity, tmsv_fidelity(e, xi), coherent_fidelity(xi)));
    }
    for (e, xi) in bi_points() {
        let t = tmsv_fidelity(e, xi);
        let c = coherent_fidelity(xi);
        rows.push((optimal_bi_equal(e, xi).map_err(ce)?.fidelity, t * t, c * c));
    }
    let opt_tmsv = rows.iter().map(|(o, t, _)| o - t).fold(f64::NEG_INFINITY, f64::max);
    let tmsv_coh = rows.iter().map(|(_, t, c)| t - c).fold(f64::NEG_INFINITY, f64::max);
    let closer = rows.iter().map(|(o, t, c)| (t - o) - (c - o)).fold(f64::NEG_INFINITY, f64::max);
    s.at_most("baselines", "max(F_opt - F_tmsv)".into(), opt_tmsv, 0.0);
    s.at_most("baselines", "max(F_tmsv - F_coherent)".into(), tmsv_coh, 0.0);
    s.checks.push(Check {
        group: "baselines",
        name: "max((F_tmsv - F_opt) - (F_coh - F_opt))".into(),
        value: closer,
        reference: 0.0,
        relation: Relation::Below,
        tol: 0.0,
    });
    Ok(())
}

/// Run the selected groups in a fixed order.
pub fn run_suite(groups: &[Group], seed: u64, tol: Option<f64>) -> Result<Vec<Check>, CliError> {
    let mut s = Suite { tol_override: tol, seed, checks: Vec::new() };
    let order = [
        Group::Oracle,
        Group::LowerBound,
        Group::Uni,
        Group::Bi,
        Group::Asym,
        Group::Sandwich,
        Group::Gap,
        Group::Baselines,
        Group::ThreeCase,
    ];
    for g in order.into_iter().filter(|g| groups.contains(g)) {
        match g {
            Group::Oracle => oracle_group(&mut s)?,
            Group::LowerBound => lower_bound_group(&mut s),
            Group::Uni => uni_group(&mut s)?,
            Group::Bi => bi_group(&mut s)?,
            Group::Asym => asym_group(&mut s)?,
            Group::Sandwich => sandwich_group(&mut s)?,
            Group::Gap => gap_group(&mut s)?,
            Group::Baselines => baselines_group(&mut s)?,
            Group::ThreeCase => three_case_group(&mut s)?,
        }
    }
    Ok(s.checks)
}

pub fn checks_table(checks: &[Check]) -> Table {
    let mut t = Table::new(&["group", "check", "value", "relation", "reference", "delta", "tol", "result"]);
    for c in checks {
        t.push(vec![
            Cell::Text(c.group.into()),
            Cell::Text(c.name.clone()),
            Cell::Num(c.value),
            Cell::Text(c.relation.symbol().into()),
            Cell::Num(c.reference),
            Cell::Num(c.delta()),
            Cell::Num(c.tol),
            Cell::Text(if c.passed() { "PASS" } else { "FAIL" }.into()),
        ]);
    }
    t
}

fn render_text(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
    let mut out = format!(
        "{:<12} {:<width$} {:>24} {:>2} {:>24} {:>24} {:>8} {}\n",
        "group", "check", "value", "", "reference", "delta", "tol", "result"
    );
    for c in checks {
        out.push_str(&format!(
            "{:<12} {:<width$} {:>24.16e} {:>2} {:>24.16e} {:>24.16e} {:>8.1e} {}\n",
            c.group,
            c.name,
            c.value,
            c.relation.symbol(),
            c.reference,
            c.delta(),
            c.tol,
            if c.passed() { "PASS" } else { "FAIL" }
        ));
    }
    let failed = checks.iter().filter(|c| !c.passed()).count();
    out.push_str(&format!("{} checks, {} passed, {} failed\n", checks.len(), checks.len() - failed, failed));
    out
}

pub fn cmd_verify(args: &VerifyArgs, s: &Settings) -> Result<(), CliError> {
    let groups: Vec<Group> = if args.only.is_empty() { Group::DEFAULT.to_vec() } else { args.only.clone() };
    let checks = run_suite(&groups, s.seed, s.tol)?;
    let bytes = match s.format {
        Some(f @ (Format::Csv | Format::Json)) => checks_table(&checks).render(f)?,
        None => render_text(&checks).into_bytes(),
    };
    emit(&bytes, s.out.as_deref())?;
    let failed = checks.iter().filter(|c| !c.passed()).count();
    if failed > 0 {
        return Err(CliError::Verify(failed));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relations() {
        let c = Check { group: "g", name: "n".into(), value: 1.0, reference: 1.0 + 1e-9, relation: Relation::Close, tol: 1e-8 };
        assert!(c.passed());
        let c = Check { tol: 1e-10, ..c };
        assert!(!c.passed());
        let c = Check { relation: Relation::Above, value: 0.0, reference: 0.0, ..c };
        assert!(!c.passed());
    }

    #[test]
    fn gap_group_passes() {
        let checks = run_suite(&[Group::Gap], 1, None).unwrap();
        assert_eq!(checks.len(), 3);
        assert!(checks.iter().all(Check::passed));
    }

    #[test]
    fn tight_tolerance_fails_with_deltas() {
        let checks = run_suite(&[Group::Asym], 1, Some(0.0)).unwrap();
        assert!(checks.iter().any(|c| !c.passed() && c.delta() != 0.0));
    }

    #[test]
    fn three_case_group_reports_the_defect() {
        let checks = run_suite(&[Group::ThreeCase], 1, None).unwrap();
        assert!(checks.iter().any(|c| !c.passed()));
    }
}
