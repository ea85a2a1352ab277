//! Numerical minimisation of the fidelity functionals over the
//! energy-constrained simplex `{p >= 0, sum p = 1, sum w p <= cap}`.
//!
//! The solver is Frank-Wolfe with exact line search on the quadratic
//! objective `p^T Q p`. Iterates are tracked as convex combinations of
//! polytope vertices so that away steps are available.

use std::cmp::Ordering;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fidelity::{bi_quadratic_form, exact_bi_fidelity, exact_uni_fidelity, uni_quadratic_form};
use crate::fock::{BipartiteSpectrum, SchmidtSpectrum, Spectrum, MAX_TRUNCATION};

pub const DEFAULT_SEED: u64 = 0xC0FFEE;
pub const DEFAULT_GRID_BUDGET: u128 = 10_000_000;

/// Entries below this are treated as zero when splitting a point into vertices.
const MASS_EPS: f64 = 1e-15;
/// How often the cached `Q p` is rebuilt from scratch.
const REFRESH_EVERY: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Mode {
    Uni,
    Bi,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PolytopeSpec {
    pub m: usize,
    /// `E` for the single-mode problem, `2E` for the two-mode one.
    pub energy_cap: f64,
    pub mode: Mode,
}

impl PolytopeSpec {
    pub fn new(m: usize, energy_cap: f64, mode: Mode) -> Result<Self> {
        if m > MAX_TRUNCATION {
            return Err(Error::TruncationTooLarge { m, max: MAX_TRUNCATION });
        }
        if !(energy_cap.is_finite() && energy_cap >= 0.0) {
            return Err(Error::OutOfRange { name: "energy_cap", value: energy_cap });
        }
        Ok(Self { m, energy_cap, mode })
    }

    /// Single-mode polytope with mean photon number at most `e`.
    pub fn uni(m: usize, e: f64) -> Result<Self> {
        Self::new(m, e, Mode::Uni)
    }

    /// Two-mode polytope with total mean photon number at most `2e`.
    pub fn bi(m: usize, e: f64) -> Result<Self> {
        Self::new(m, 2.0 * e, Mode::Bi)
    }

    pub fn dim(&self) -> usize {
        match self.mode {
            Mode::Uni => self.m + 1,
            Mode::Bi => (self.m + 1) * (self.m + 1),
        }
    }

    /// Photon number of each coordinate: `n`, or `m + n` in row-major order.
    pub fn weights(&self) -> Vec<f64> {
        let side = self.m + 1;
        (0..self.dim())
            .map(|i| match self.mode {
                Mode::Uni => i as f64,
                Mode::Bi => (i / side + i % side) as f64,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MinimizeOptions {
    pub max_iter: usize,
    /// Stop once the Frank-Wolfe duality gap falls below this.
    pub gap_tol: f64,
    pub starts: usize,
    pub seed: u64,
    pub away_steps: bool,
    /// Coordinate distance under which two runs count as agreeing.
    pub consensus_tol: f64,
    /// Keep the objective value after every iteration of the best run.
    pub record_trace: bool,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            gap_tol: 1e-12,
            starts: 20,
            seed: DEFAULT_SEED,
            away_steps: false,
            consensus_tol: 1e-6,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeResult {
    pub minimizer: Spectrum,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub starts_agreeing: usize,
    /// Final Frank-Wolfe duality gap of the best run.
    pub fw_gap: f64,
    pub trace: Vec<f64>,
}

impl MinimizeResult {
    /// Minimiser as a flat probability vector (row-major for grids).
    pub fn probs(&self) -> Vec<f64> {
        match &self.minimizer {
            Spectrum::Uni(s) => s.probs().to_vec(),
            Spectrum::Bi(g) => g.flat().to_vec(),
        }
    }
}

/// A polytope vertex: `theta e_i + (1 - theta) e_j`, with `i == j` for a
/// pure point.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Vertex {
    i: usize,
    j: usize,
    theta: f64,
}

impl Vertex {
    fn single(i: usize) -> Self {
        Self { i, j: i, theta: 1.0 }
    }

    fn key(&self) -> (usize, usize) {
        (self.i, self.j)
    }

    fn dot(&self, v: &[f64]) -> f64 {
        if self.i == self.j {
            v[self.i]
        } else {
            self.theta * v[self.i] + (1.0 - self.theta) * v[self.j]
        }
    }

    fn add_to(&self, p: &mut [f64], scale: f64) {
        if self.i == self.j {
            p[self.i] += scale;
        } else {
            p[self.i] += scale * self.theta;
            p[self.j] += scale * (1.0 - self.theta);
        }
    }

    fn dense(&self, dim: usize) -> Vec<f64> {
        let mut p = vec![0.0; dim];
        self.add_to(&mut p, 1.0);
        p
    }
}

/// Mixture of `e_lo` and `e_hi` whose weight equals `cap`, with `w_lo < cap < w_hi`.
fn saturating_pair(lo: usize, hi: usize, w: &[f64], cap: f64) -> Vertex {
    let theta = (w[hi] - cap) / (w[hi] - w[lo]);
    Vertex { i: lo, j: hi, theta }
}

fn best_vertex(g: &[f64], w: &[f64], cap: f64) -> Option<Vertex> {
    let mut best: Option<(f64, Vertex)> = None;
    let mut consider = |v: Vertex| {
        let val = v.dot(g);
        if best.as_ref().is_none_or(|(b, _)| val < *b) {
            best = Some((val, v));
        }
    };
    for i in 0..g.len() {
        if w[i] <= cap {
            consider(Vertex::single(i));
        }
        for j in i + 1..g.len() {
            if w[i] < cap && cap < w[j] {
                consider(saturating_pair(i, j, w, cap));
            } else if w[j] < cap && cap < w[i] {
                let v = saturating_pair(j, i, w, cap);
                consider(Vertex { i, j, theta: 1.0 - v.theta });
            }
        }
    }
    best.map(|(_, v)| v)
}

/// Exact minimiser of `<gradient, p>` over the polytope. Candidates are the
/// feasible pure points and every two-point mixture that saturates the cap;
/// ties go to the lowest first index, then the lowest second index.
pub fn lp_vertex_oracle(gradient: &[f64], spec: &PolytopeSpec) -> Result<Vec<f64>> {
    let dim = spec.dim();
    if gradient.len() != dim {
        return Err(Error::GradientLength { got: gradient.len(), expected: dim });
    }
    let w = spec.weights();
    best_vertex(gradient, &w, spec.energy_cap).map(|v| v.dense(dim)).ok_or(Error::Infeasible)
}

/// Write a feasible point as a convex combination of vertices by repeatedly
/// pairing the heaviest index above the cap with the lightest one below it.
fn decompose(p: &[f64], w: &[f64], cap: f64) -> Vec<(Vertex, f64)> {
    let mut rest: Vec<f64> = p.iter().map(|x| if *x > MASS_EPS { *x } else { 0.0 }).collect();
    let mut out: Vec<(Vertex, f64)> = Vec::new();
    loop {
        let hi = (0..rest.len()).filter(|&i| rest[i] > 0.0 && w[i] > cap).max_by(|&a, &b| {
            w[a].partial_cmp(&w[b]).unwrap_or(Ordering::Equal).then(b.cmp(&a))
        });
        let Some(hi) = hi else { break };
        let lo = (0..rest.len()).filter(|&i| rest[i] > 0.0 && w[i] < cap).min_by(|&a, &b| {
            w[a].partial_cmp(&w[b]).unwrap_or(Ordering::Equal).then(a.cmp(&b))
        });
        let Some(lo) = lo else {
            // roundoff left weight above the cap with nothing to balance it
            rest[hi] = 0.0;
            continue;
        };
        let v = saturating_pair(lo, hi, w, cap);
        let beta = (rest[lo] / v.theta).min(rest[hi] / (1.0 - v.theta));
        rest[lo] -= beta * v.theta;
        rest[hi] -= beta * (1.0 - v.theta);
        for k in [lo, hi] {
            if rest[k] <= MASS_EPS {
                rest[k] = 0.0;
            }
        }
        out.push((v, beta));
    }
    for (i, r) in rest.iter().enumerate() {
        if *r > 0.0 {
            out.push((Vertex::single(i), *r));
        }
    }
    let total: f64 = out.iter().map(|(_, a)| a).sum();
    if total <= 0.0 {
        return vec![(Vertex::single(0), 1.0)];
    }
    out.into_iter().map(|(v, a)| (v, a / total)).collect()
}

/// Dirichlet(1, ..., 1) point, mixed with the vacuum until it meets the cap.
fn random_start(rng: &mut ChaCha8Rng, w: &[f64], cap: f64) -> Vec<f64> {
    let mut p: Vec<f64> = (0..w.len()).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    let energy: f64 = p.iter().zip(w).map(|(a, b)| a * b).sum();
    if energy > cap {
        let lambda = cap / energy;
        p.iter_mut().for_each(|x| *x *= lambda);
        p[0] += 1.0 - lambda;
    }
    p
}

struct Quadratic {
    q: Vec<Vec<f64>>,
}

impl Quadratic {
    fn apply(&self, p: &[f64]) -> Vec<f64> {
        self.q.iter().map(|row| row.iter().zip(p).map(|(a, b)| a * b).sum()).collect()
    }

    /// `Q v` for a vertex.
    fn apply_vertex(&self, v: &Vertex) -> Vec<f64> {
        self.q.iter().map(|row| v.dot(row)).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Run {
    p: Vec<f64>,
    value: f64,
    iterations: usize,
    converged: bool,
    gap: f64,
    trace: Vec<f64>,
}

fn frank_wolfe(
    quad: &Quadratic,
    w: &[f64],
    cap: f64,
    start: &[f64],
    opts: &MinimizeOptions,
) -> Run {
    let dim = w.len();
    let mut active = decompose(start, w, cap);
    let rebuild = |active: &[(Vertex, f64)]| {
        let mut p = vec![0.0; dim];
        for (v, a) in active {
            v.add_to(&mut p, *a);
        }
        p
    };
    let mut p = rebuild(&active);
    let mut qp = quad.apply(&p);
    let mut value = dot(&p, &qp);
    let mut trace = Vec::new();
    if opts.record_trace {
        trace.push(value);
    }
    let mut gap = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        // the gradient is 2 Q p; the factor 2 does not change any argmin
        let fw = best_vertex(&qp, w, cap).expect("vacuum is always feasible");
        let qv = quad.apply_vertex(&fw);
        let p_qv = dot(&p, &qv);
        gap = 2.0 * (value - p_qv);
        if gap <= opts.gap_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let away = if opts.away_steps && active.len() > 1 {
            active
                .iter()
                .enumerate()
                .map(|(k, (v, a))| (k, v.dot(&qp), *a))
                .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap_or(Ordering::Equal).then(y.0.cmp(&x.0)))
        } else {
            None
        };
        let use_away = match away {
            Some((_, aval, _)) => aval - value > value - p_qv,
            None => false,
        };

        if use_away {
            let (k, _, alpha) = away.unwrap();
            let av = active[k].0;
            let qa = quad.apply_vertex(&av);
            let aqa = av.dot(&qa);
            let p_qa = dot(&p, &qa);
            // direction d = p - a
            let pqd = value - p_qa;
            let dqd = value - 2.0 * p_qa + aqa;
            let gmax = alpha / (1.0 - alpha);
            let gamma = if dqd > 0.0 { (-pqd / dqd).clamp(0.0, gmax) } else { gmax };
            for (y, z) in qp.iter_mut().zip(&qa) {
                *y += gamma * (*y - z);
            }
            for x in p.iter_mut() {
                *x *= 1.0 + gamma;
            }
            av.add_to(&mut p, -gamma);
            for (_, a) in active.iter_mut() {
                *a *= 1.0 + gamma;
            }
            active[k].1 -= gamma;
            if gamma >= gmax || active[k].1 <= MASS_EPS {
                active.remove(k);
            }
        } else {
            let vqv = fw.dot(&qv);
            let pqd = p_qv - value;
            let dqd = vqv - 2.0 * p_qv + value;
            let gamma = if dqd > 0.0 { (-pqd / dqd).clamp(0.0, 1.0) } else { 1.0 };
            for (y, z) in qp.iter_mut().zip(&qv) {
                *y += gamma * (z - *y);
            }
            for x in p.iter_mut() {
                *x *= 1.0 - gamma;
            }
            fw.add_to(&mut p, gamma);
            if gamma >= 1.0 {
                active.clear();
            } else {
                for (_, a) in active.iter_mut() {
                    *a *= 1.0 - gamma;
                }
            }
            match active.iter_mut().find(|(v, _)| v.key() == fw.key()) {
                Some((_, a)) => *a += gamma,
                None => active.push((fw, gamma)),
            }
            active.retain(|(_, a)| *a > MASS_EPS);
        }

        if iterations % REFRESH_EVERY == 0 {
            let total: f64 = active.iter().map(|(_, a)| a).sum();
            active.iter_mut().for_each(|(_, a)| *a /= total);
            p = rebuild(&active);
            qp = quad.apply(&p);
        }
        let next = dot(&p, &qp);
        // exact line search cannot increase the objective; clamp roundoff
        value = next.min(value);
        if opts.record_trace {
            trace.push(value);
        }
    }
    for x in p.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    Run { p, value, iterations, converged, gap, trace }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => {}
            o => return o,
        }
    }
    Ordering::Equal
}

fn multistart(quad: &Quadratic, spec: &PolytopeSpec, opts: &MinimizeOptions) -> (Run, usize) {
    let w = spec.weights();
    let cap = spec.energy_cap;
    let mut runs: Vec<Run> = (0..opts.starts.max(1))
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(k as u64);
            let start = random_start(&mut rng, &w, cap);
            frank_wolfe(quad, &w, cap, &start, opts)
        })
        .collect();
    runs.sort_by(|a, b| a.value.total_cmp(&b.value).then_with(|| lex_cmp(&a.p, &b.p)));
    let best = &runs[0].p;
    let agreeing = runs
        .iter()
        .filter(|r| r.p.iter().zip(best).all(|(x, y)| (x - y).abs() <= opts.consensus_tol))
        .count();
    (runs.swap_remove(0), agreeing)
}

fn require_mode(spec: &PolytopeSpec, mode: Mode) -> Result<()> {
    if spec.mode != mode {
        return Err(Error::Invalid(format!("polytope mode is {:?}, expected {:?}", spec.mode, mode)));
    }
    Ok(())
}

/// Minimise the single-mode fidelity functional over the polytope.
pub fn minimize_uni(spec: &PolytopeSpec, xi: f64, opts: &MinimizeOptions) -> Result<MinimizeResult> {
    require_mode(spec, Mode::Uni)?;
    crate::channels::ChannelParams::new(xi)?;
    let quad = Quadratic { q: uni_quadratic_form(spec.m, xi) };
    let (run, agreeing) = multistart(&quad, spec, opts);
    let s = SchmidtSpectrum::new(&run.p)?;
    let value = exact_uni_fidelity(&s, xi);
    Ok(MinimizeResult {
        minimizer: s.into(),
        value,
        iterations: run.iterations,
        converged: run.converged,
        starts_agreeing: agreeing,
        fw_gap: run.gap,
        trace: run.trace,
    })
}

/// Minimise the two-mode fidelity functional over the grid polytope.
pub fn minimize_bi(
    spec: &PolytopeSpec,
    xi: f64,
    xi_prime: f64,
    opts: &MinimizeOptions,
) -> Result<MinimizeResult> {
    require_mode(spec, Mode::Bi)?;
    crate::channels::ChannelParams::new(xi)?;
    crate::channels::ChannelParams::new(xi_prime)?;
    let quad = Quadratic { q: bi_quadratic_form(spec.m, xi, xi_prime) };
    let (run, agreeing) = multistart(&quad, spec, opts);
    let g = BipartiteSpectrum::from_flat(spec.m + 1, &run.p)?;
    let value = exact_bi_fidelity(&g, xi, xi_prime);
    Ok(MinimizeResult {
        minimizer: g.into(),
        value,
        iterations: run.iterations,
        converged: run.converged,
        starts_agreeing: agreeing,
        fw_gap: run.gap,
        trace: run.trace,
    })
}

/// `C(n, k)` saturating at `u128::MAX`.
fn lattice_size(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

struct LatticeSearch<'a> {
    q: &'a [Vec<f64>],
    w: &'a [f64],
    cap_units: f64,
    units: usize,
    counts: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
    evaluations: usize,
}

impl LatticeSearch<'_> {
    fn visit(&mut self, idx: usize, left: usize, energy: f64) {
        let dim = self.counts.len();
        if idx == dim {
            self.counts[0] = left;
            self.evaluations += 1;
            let k = self.units as f64;
            let p: Vec<f64> = self.counts.iter().map(|c| *c as f64 / k).collect();
            let val: f64 = p
                .iter()
                .enumerate()
                .filter(|(_, x)| **x != 0.0)
                .map(|(i, x)| x * dot(&self.q[i], &p))
                .sum();
            if self.best.as_ref().is_none_or(|(b, _)| val < *b) {
                self.best = Some((val, self.counts.clone()));
            }
            return;
        }
        for c in 0..=left {
            let e = energy + c as f64 * self.w[idx];
            if e > self.cap_units + 1e-9 {
                break;
            }
            self.counts[idx] = c;
            self.visit(idx + 1, left - c, e);
        }
        self.counts[idx] = 0;
    }
}

/// Exhaustive search over the lattice `p = k / K`, `K = floor(1/step)`,
/// restricted to feasible points. Fails with `BudgetExceeded` when the
/// lattice has more than `DEFAULT_GRID_BUDGET` points.
pub fn grid_oracle(
    spec: &PolytopeSpec,
    xi: f64,
    xi_prime: Option<f64>,
    step: f64,
) -> Result<MinimizeResult> {
    grid_oracle_with_budget(spec, xi, xi_prime, step, DEFAULT_GRID_BUDGET)
}

pub fn grid_oracle_with_budget(
    spec: &PolytopeSpec,
    xi: f64,
    xi_prime: Option<f64>,
    step: f64,
    budget: u128,
) -> Result<MinimizeResult> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::OutOfRange { name: "step", value: step });
    }
    crate::channels::ChannelParams::new(xi)?;
    let q = match (spec.mode, xi_prime) {
        (Mode::Uni, None) => uni_quadratic_form(spec.m, xi),
        (Mode::Bi, Some(xp)) => {
            crate::channels::ChannelParams::new(xp)?;
            bi_quadratic_form(spec.m, xi, xp)
        }
        _ => return Err(Error::Invalid("xi_prime must be given exactly for the two-mode polytope".into())),
    };
    let inv = 1.0 / step;
    let units = if (inv - inv.round()).abs() < 1e-9 { inv.round() } else { inv.floor() } as usize;
    let dim = spec.dim();
    let needed = lattice_size((units + dim - 1) as u128, (dim - 1) as u128);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let w = spec.weights();
    let mut search = LatticeSearch {
        q: &q,
        w: &w,
        cap_units: spec.energy_cap * units as f64,
        units: units.max(1),
        counts: vec![0; dim],
        best: None,
        evaluations: 0,
    };
    if units == 0 {
        search.counts[0] = 1;
        search.visit(dim, 1, 0.0);
    } else {
        search.visit(1, units, 0.0);
    }
    let (_, counts) = search.best.ok_or(Error::Infeasible)?;
    let k = search.units as f64;
    let p: Vec<f64> = counts.iter().map(|c| *c as f64 / k).collect();
    let (minimizer, value): (Spectrum, f64) = match spec.mode {
        Mode::Uni => {
            let s = SchmidtSpectrum::new(&p)?;
            let v = exact_uni_fidelity(&s, xi);
            (s.into(), v)
        }
        Mode::Bi => {
            let g = BipartiteSpectrum::from_flat(spec.m + 1, &p)?;
            let v = exact_bi_fidelity(&g, xi, xi_prime.unwrap_or(xi));
            (g.into(), v)
        }
    };
    Ok(MinimizeResult {
        minimizer,
        value,
        iterations: search.evaluations,
        converged: true,
        starts_agreeing: 1,
        fw_gap: 0.0,
        trace: Vec::new(),
    })
}
