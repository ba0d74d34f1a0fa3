//! Two APs serving one UE: rates of aligned, SIC, best-AP and rank-one ZF
//! transmission for the structured channel `G1 = g aᴴ`, `G2 = g bᴴ + α f cᴴ`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    cn_vector, column_space_basis, eye, frob2, hcat, hermitian_part, logdet_hpd, real, solve_hpd, trace_re, CMat, HermEig, LN2,
};
use crate::rng::{substream, Role};

/// Stop when the certified suboptimality falls below this fraction of the objective.
pub const PG_TOL: f64 = 1e-8;
pub const PG_MAX_ITERS: usize = 200_000;
const ZF_DEGENERATE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NormMode {
    /// Unit-norm vectors with `gᴴf = 0` and `cᴴb = 0`.
    Unit,
    /// i.i.d. CN(0, 1) entries, then `f` and `c` are made orthogonal to `g`
    /// and `b` by removing their projections (no renormalization).
    Iid,
}

impl std::str::FromStr for NormMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "UNIT" => Ok(NormMode::Unit),
            "IID" => Ok(NormMode::Iid),
            _ => Err(Error::config("norm_mode", format!("unknown mode `{s}` (expected UNIT or IID)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExampleVectors {
    pub g: CMat,
    pub f: CMat,
    pub a: CMat,
    pub b: CMat,
    pub c: CMat,
}

#[derive(Debug, Clone)]
pub struct TwoApInstance {
    pub g1: CMat,
    pub g2: CMat,
    pub rho: f64,
    pub alpha: f64,
    pub vectors: Option<ExampleVectors>,
}

impl TwoApInstance {
    pub fn new(g1: CMat, g2: CMat, rho: f64) -> Result<Self> {
        if g1.shape() != g2.shape() {
            return Err(Error::Dimension(format!("G1 is {:?} but G2 is {:?}", g1.shape(), g2.shape())));
        }
        if !(rho > 0.0) {
            return Err(Error::Domain(format!("rho must be positive, got {rho}")));
        }
        Ok(Self {
            g1,
            g2,
            rho,
            alpha: 0.0,
            vectors: None,
        })
    }

    pub fn with_rho(&self, rho: f64) -> Self {
        Self { rho, ..self.clone() }
    }
}

/// Removes the component of `v` along `u`.
fn orthogonalize(v: CMat, u: &CMat) -> CMat {
    let proj = (u.adjoint() * &v)[(0, 0)] / real(frob2(u));
    &v - u * proj
}

fn unit<R: Rng + ?Sized>(rng: &mut R, n: usize, orthogonal_to: Option<&CMat>) -> CMat {
    loop {
        let mut v = cn_vector(rng, n, 1.0);
        if let Some(u) = orthogonal_to {
            let proj = (u.adjoint() * &v)[(0, 0)] / real(frob2(u));
            v -= u * proj;
        }
        let norm = v.norm();
        if norm > 1e-6 {
            return v * real(1.0 / norm);
        }
    }
}

pub fn example_channels<R: Rng + ?Sized>(
    m: usize,
    n: usize,
    alpha: f64,
    rho: f64,
    mode: NormMode,
    rng: &mut R,
) -> Result<TwoApInstance> {
    if m < 2 || n < 2 {
        return Err(Error::Domain(format!("need M >= 2 and N >= 2, got M={m}, N={n}")));
    }
    if !(alpha.abs() < 1.0) {
        return Err(Error::Domain(format!("alpha must satisfy |alpha| < 1, got {alpha}")));
    }
    let v = match mode {
        NormMode::Unit => {
            let g = unit(rng, n, None);
            let f = unit(rng, n, Some(&g));
            let a = unit(rng, m, None);
            let b = unit(rng, m, None);
            let c = unit(rng, m, Some(&b));
            ExampleVectors { g, f, a, b, c }
        }
        NormMode::Iid => {
            let g = cn_vector(rng, n, 1.0);
            let f = orthogonalize(cn_vector(rng, n, 1.0), &g);
            let a = cn_vector(rng, m, 1.0);
            let b = cn_vector(rng, m, 1.0);
            let c = orthogonalize(cn_vector(rng, m, 1.0), &b);
            ExampleVectors { g, f, a, b, c }
        }
    };
    let g1 = &v.g * v.a.adjoint();
    let g2 = &v.g * v.b.adjoint() + (&v.f * v.c.adjoint()) * real(alpha);
    let mut inst = TwoApInstance::new(g1, g2, rho)?;
    inst.alpha = alpha;
    inst.vectors = Some(v);
    Ok(inst)
}

/// Waterfilling powers for channel gains `gains` (already scaled by ρ) under unit total power.
pub fn waterfill(gains: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..gains.len()).filter(|&i| gains[i] > 0.0).collect();
    order.sort_by(|&i, &j| gains[j].total_cmp(&gains[i]));
    let mut powers = vec![0.0; gains.len()];
    let mut active = 0;
    let mut level = 0.0;
    let mut inv_sum = 0.0;
    for (m, &i) in order.iter().enumerate() {
        let candidate = (1.0 + inv_sum + 1.0 / gains[i]) / (m + 1) as f64;
        if candidate <= 1.0 / gains[i] {
            break;
        }
        inv_sum += 1.0 / gains[i];
        level = candidate;
        active = m + 1;
    }
    for &i in &order[..active] {
        powers[i] = level - 1.0 / gains[i];
    }
    powers
}

/// `max log2|I + ρ G K Gᴴ|` subject to `tr K ≤ 1`, by waterfilling.
pub fn single_ap_capacity(g: &CMat, rho: f64) -> f64 {
    let gains: Vec<f64> = crate::linalg::singular_values(g).iter().map(|s| rho * s * s).collect();
    let p = waterfill(&gains);
    gains.iter().zip(&p).map(|(g, p)| (1.0 + g * p).log2()).sum()
}

pub fn best_ap_rate(inst: &TwoApInstance) -> f64 {
    single_ap_capacity(&inst.g1, inst.rho).max(single_ap_capacity(&inst.g2, inst.rho))
}

/// Optimum of a covariance problem together with the maximizer (`2M × 2M`).
#[derive(Debug, Clone)]
pub struct CovarianceSolution {
    pub rate: f64,
    pub covariance: CMat,
    pub iterations: usize,
    /// Objective in bpcu after every accepted step, starting from the initial
    /// point. The dual solve records only its final value.
    pub history: Vec<f64>,
    /// Certified bound on `optimum - rate` in bpcu.
    pub gap: f64,
}

/// `max log2|I + ρ H K Hᴴ|` over PSD `K` with `tr K₁₁ ≤ 1`, `tr K₂₂ ≤ 1`, `H = [G1 G2]`.
///
/// Solved through the dual in the two per-AP multipliers `μ`: for fixed `μ`
/// the inner maximization is waterfilling on `ρ H D_μ⁻¹ Hᴴ`, and the dual
/// gradient is `1 - tr K_ii(μ)`, which is monotone in each coordinate.
pub fn aligned_capacity(inst: &TwoApInstance) -> Result<CovarianceSolution> {
    let rho = inst.rho;
    let grams = [&inst.g1 * inst.g1.adjoint(), &inst.g2 * inst.g2.adjoint()];
    let active = [frob2(&inst.g1) > 0.0, frob2(&inst.g2) > 0.0];
    let m = inst.g1.ncols();
    let mut evals = 0usize;
    let mut eval = |mu: [f64; 2]| {
        evals += 1;
        dual_point(&grams, active, rho, mu)
    };
    let mut mu = [0.0; 2];
    match active {
        [false, false] => {}
        [true, false] | [false, true] => {
            let i = if active[0] { 0 } else { 1 };
            let x = root_decreasing(|x| {
                let mut t = [0.0; 2];
                t[i] = x.exp();
                eval(t).traces[i] - 1.0
            });
            mu[i] = x.exp();
        }
        [true, true] => {
            let inner = |mu1: f64, eval: &mut dyn FnMut([f64; 2]) -> DualPoint| {
                root_decreasing(|x| eval([mu1, x.exp()]).traces[1] - 1.0).exp()
            };
            let x1 = root_decreasing(|x| {
                let mu2 = inner(x.exp(), &mut eval);
                eval([x.exp(), mu2]).traces[0] - 1.0
            });
            mu = [x1.exp(), inner(x1.exp(), &mut eval)];
        }
    }
    let point = eval(mu);
    // Primal recovery: K = Σ_j p_j (ρ / s_j) D⁻¹ Hᴴ u_j u_jᴴ H D⁻¹.
    let h = hcat(&[&inst.g1, &inst.g2]);
    let mut k = CMat::zeros(2 * m, 2 * m);
    for (j, &s) in point.eig.values.iter().enumerate() {
        if s <= 1.0 {
            continue;
        }
        let mut z = h.adjoint() * point.eig.vectors.columns(j, 1);
        for (i, block) in [0..m, m..2 * m].into_iter().enumerate() {
            let inv = if active[i] { 1.0 / mu[i] } else { 0.0 };
            for r in block {
                z[(r, 0)] *= real(inv);
            }
        }
        k += (&z * z.adjoint()) * real((1.0 - 1.0 / s) * rho / s);
    }
    let k = repair_traces(&hermitian_part(&k), [m, m]);
    let fail = || Error::Domain("aligned objective is not finite".into());
    let nats = logdet_hpd(&(eye(h.nrows()) + (&h * &k * h.adjoint()) * real(rho))).ok_or_else(fail)?;
    Ok(CovarianceSolution {
        rate: nats / LN2,
        covariance: k,
        iterations: evals,
        history: vec![nats / LN2],
        gap: ((point.value - nats) / LN2).max(0.0),
    })
}

struct DualPoint {
    value: f64,
    traces: [f64; 2],
    eig: HermEig,
}

/// Dual function `Σμ_i + Σ_j h(s_j)`, `h(s) = ln s - 1 + 1/s` for `s > 1`,
/// with `s_j` the eigenvalues of `ρ Σ_i A_i / μ_i`, plus the block traces of
/// the inner maximizer.
fn dual_point(grams: &[CMat; 2], active: [bool; 2], rho: f64, mu: [f64; 2]) -> DualPoint {
    let n = grams[0].nrows();
    let mut b = CMat::zeros(n, n);
    for i in 0..2 {
        if active[i] {
            b += &grams[i] * real(rho / mu[i]);
        }
    }
    let eig = HermEig::new(&b);
    let mut value: f64 = (0..2).filter(|&i| active[i]).map(|i| mu[i]).sum();
    let mut traces = [0.0; 2];
    for (j, &s) in eig.values.iter().enumerate() {
        if s <= 1.0 {
            continue;
        }
        value += s.ln() - 1.0 + 1.0 / s;
        let u = eig.vectors.columns(j, 1);
        for i in 0..2 {
            if active[i] {
                let quad = (u.adjoint() * &grams[i] * u)[(0, 0)].re;
                traces[i] += (1.0 - 1.0 / s) / s * rho * quad / (mu[i] * mu[i]);
            }
        }
    }
    DualPoint { value, traces, eig }
}

/// Root of a non-increasing function that is positive far left and negative
/// far right. Bracketing by unit steps, then Illinois false position.
fn root_decreasing(mut f: impl FnMut(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 0.0);
    let mut flo = f(lo);
    let mut fhi = flo;
    let mut width = 1.0;
    while flo <= 0.0 {
        hi = lo;
        fhi = flo;
        lo -= width;
        width *= 2.0;
        flo = f(lo);
    }
    width = 1.0;
    while fhi > 0.0 {
        lo = hi;
        flo = fhi;
        hi += width;
        width *= 2.0;
        fhi = f(hi);
    }
    let mut side = 0i8;
    for _ in 0..200 {
        if hi - lo <= 1e-14 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        let mut x = (lo * fhi - hi * flo) / (fhi - flo);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x);
        if fx == 0.0 {
            return x;
        }
        if fx > 0.0 {
            lo = x;
            flo = fx;
            if side == 1 {
                fhi *= 0.5;
            }
            side = 1;
        } else {
            hi = x;
            fhi = fx;
            if side == -1 {
                flo *= 0.5;
            }
            side = -1;
        }
    }
    0.5 * (lo + hi)
}

/// `max log2|I + ρ G1 K₁₁ G1ᴴ + ρ G2 K₂₂ G2ᴴ|` over PSD blocks with unit
/// trace budgets, by projected gradient ascent with backtracking.
pub fn sic_rate(inst: &TwoApInstance) -> Result<CovarianceSolution> {
    let rho = inst.rho;
    let (h, q, sizes) = reduce(inst);
    let n = h.nrows();
    let dim = h.ncols();
    let ident = eye(n);
    let objective = |k: &CMat| -> Option<f64> { logdet_hpd(&(&ident + (&h * k * h.adjoint()) * real(rho))) };
    let gradient = |k: &CMat| -> Option<CMat> {
        let s = &ident + (&h * k * h.adjoint()) * real(rho);
        let g = hermitian_part(&(h.adjoint() * solve_hpd(&s, &h)? * real(rho)));
        let mut masked = CMat::zeros(dim, dim);
        for r in block_ranges(sizes) {
            let w = r.len();
            masked.view_mut((r.start, r.start), (w, w)).copy_from(&g.view((r.start, r.start), (w, w)));
        }
        Some(masked)
    };

    let mut k = CMat::zeros(dim, dim);
    for r in block_ranges(sizes) {
        let w = r.len();
        for i in r {
            k[(i, i)] = real(1.0 / w as f64);
        }
    }
    let fail = || Error::Domain("covariance objective is not finite".into());
    let mut f = objective(&k).ok_or_else(fail)?;
    let mut history = vec![f / LN2];
    let mut step = f64::NAN;
    let mut iterations = 0;
    let mut converged = dim == 0;
    while !converged && iterations < PG_MAX_ITERS {
        iterations += 1;
        let grad = gradient(&k).ok_or_else(fail)?;
        let gnorm = grad.norm();
        if gnorm == 0.0 {
            converged = true;
            break;
        }
        let gap = frank_wolfe_gap(&grad, &k, sizes);
        if gap <= PG_TOL * f {
            converged = true;
            break;
        }
        if step.is_nan() {
            step = 1.0 / gnorm;
        }
        loop {
            let cand = project_block_diagonal(&(&k + &grad * real(step)), sizes);
            let delta = &cand - &k;
            let moved = delta.norm();
            let lin = trace_re(&(grad.adjoint() * &delta));
            match objective(&cand) {
                Some(fc) if fc >= f && fc >= f + lin - moved * moved / (2.0 * step) => {
                    // Objective frozen at round-off: further steps cannot be resolved.
                    converged = fc - f <= 4.0 * f64::EPSILON * fc;
                    k = cand;
                    f = fc;
                    history.push(f / LN2);
                    step *= 2.0;
                    break;
                }
                _ => {
                    step *= 0.5;
                    // No ascent left above round-off.
                    if step * gnorm < 1e-15 {
                        converged = true;
                        break;
                    }
                }
            }
        }
    }
    if !converged {
        return Err(Error::NotConverged("projected gradient", PG_MAX_ITERS));
    }
    let gap = match gradient(&k) {
        Some(grad) if dim > 0 => frank_wolfe_gap(&grad, &k, sizes) / LN2,
        _ => 0.0,
    };
    Ok(CovarianceSolution {
        rate: f / LN2,
        covariance: &q * &k * q.adjoint(),
        iterations,
        history,
        gap,
    })
}

/// Frank-Wolfe bound on suboptimality over block-diagonal feasible `K`:
/// `Σ_i max(0, λ_max(∇_ii)) - ⟨∇, K⟩` (nats).
fn frank_wolfe_gap(grad: &CMat, k: &CMat, sizes: [usize; 2]) -> f64 {
    let mut best = 0.0;
    for r in block_ranges(sizes) {
        if !r.is_empty() {
            let w = r.len();
            best += HermEig::new(&grad.view((r.start, r.start), (w, w)).into_owned()).values[0].max(0.0);
        }
    }
    (best - trace_re(&(grad * k))).max(0.0)
}

/// Block-wise projection onto the row space of each `G_i`. Restricting `K_ii`
/// to that subspace leaves `H K Hᴴ` unchanged and never increases a trace.
fn reduce(inst: &TwoApInstance) -> (CMat, CMat, [usize; 2]) {
    let q1 = column_space_basis(&inst.g1.adjoint(), 1e-12);
    let q2 = column_space_basis(&inst.g2.adjoint(), 1e-12);
    let (r1, r2) = (q1.ncols(), q2.ncols());
    let m = inst.g1.ncols();
    let mut q = CMat::zeros(2 * m, r1 + r2);
    q.view_mut((0, 0), (m, r1)).copy_from(&q1);
    q.view_mut((m, r1), (m, r2)).copy_from(&q2);
    let h = hcat(&[&(&inst.g1 * &q1), &(&inst.g2 * &q2)]);
    (h, q, [r1, r2])
}

fn block_ranges(sizes: [usize; 2]) -> [std::ops::Range<usize>; 2] {
    [0..sizes[0], sizes[0]..sizes[0] + sizes[1]]
}

/// Euclidean projection onto PSD blocks with trace at most one; off-diagonal blocks vanish.
fn project_block_diagonal(y: &CMat, sizes: [usize; 2]) -> CMat {
    let mut out = CMat::zeros(y.nrows(), y.ncols());
    for r in block_ranges(sizes) {
        if r.is_empty() {
            continue;
        }
        let n = r.len();
        let eig = HermEig::new(&y.view((r.start, r.start), (n, n)).into_owned());
        let vals = crate::linalg::project_capped_simplex(&eig.values, 1.0);
        let block = HermEig {
            vectors: eig.vectors,
            values: vals,
        }
        .reconstruct();
        out.view_mut((r.start, r.start), (n, n)).copy_from(&block);
    }
    out
}

/// Scale each diagonal block so that block traces are at most one. Keeps PSD.
fn repair_traces(k: &CMat, sizes: [usize; 2]) -> CMat {
    let mut scale = vec![1.0; k.nrows()];
    for r in block_ranges(sizes) {
        let t: f64 = r.clone().map(|i| k[(i, i)].re).sum();
        if t > 1.0 {
            for i in r {
                scale[i] = 1.0 / t.sqrt();
            }
        }
    }
    CMat::from_fn(k.nrows(), k.ncols(), |i, j| k[(i, j)] * real(scale[i] * scale[j]))
}

/// Rate of two rank-one beams received with a zero-forcing combiner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZfRate {
    pub rate: f64,
    /// The effective channel `[G1 w1, G2 w2]` is rank deficient; `rate` is 0.
    pub degenerate: bool,
}

pub fn zf_rank1_rate(inst: &TwoApInstance, w1: &CMat, w2: &CMat) -> ZfRate {
    let h1 = &inst.g1 * w1;
    let h2 = &inst.g2 * w2;
    let g11 = frob2(&h1);
    let g22 = frob2(&h2);
    let g12 = (h1.adjoint() * &h2)[(0, 0)].norm_sqr();
    let det = g11 * g22 - g12;
    if !(det > ZF_DEGENERATE * g11 * g22) {
        return ZfRate {
            rate: 0.0,
            degenerate: true,
        };
    }
    // [(HᴴH)⁻¹]_11 = g22/det, [(HᴴH)⁻¹]_22 = g11/det.
    let rate = (1.0 + inst.rho * det / g22).log2() + (1.0 + inst.rho * det / g11).log2();
    ZfRate { rate, degenerate: false }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Aligned,
    Sic,
    BestAp,
    /// `w1 = a`, `w2 = c` (normalized).
    ZfAc,
    /// `w1 = a`, `w2 = b` (normalized).
    ZfAb,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [Strategy::Aligned, Strategy::Sic, Strategy::ZfAc, Strategy::BestAp, Strategy::ZfAb];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Aligned => "aligned",
            Strategy::Sic => "sic",
            Strategy::BestAp => "best_ap",
            Strategy::ZfAc => "zf_a_c",
            Strategy::ZfAb => "zf_a_b",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Figure1Config {
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_rho_db")]
    pub rho_db: Vec<f64>,
    #[serde(default = "default_norm")]
    pub norm_mode: NormMode,
    #[serde(default = "default_draws")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_m() -> usize {
    16
}
fn default_n() -> usize {
    2
}
fn default_alpha() -> f64 {
    0.7
}
fn default_rho_db() -> Vec<f64> {
    (0..7).map(|i| -40.0 + 5.0 * i as f64).collect()
}
fn default_norm() -> NormMode {
    NormMode::Iid
}
fn default_draws() -> usize {
    1000
}

impl Default for Figure1Config {
    fn default() -> Self {
        Self {
            m: default_m(),
            n: default_n(),
            alpha: default_alpha(),
            rho_db: default_rho_db(),
            norm_mode: default_norm(),
            trials: default_draws(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Figure1Row {
    pub rho_db: f64,
    pub strategy: Strategy,
    pub rate: f64,
}

/// All five strategies for one instance.
pub fn strategy_rates(inst: &TwoApInstance) -> Result<[(Strategy, f64); 5]> {
    let v = inst
        .vectors
        .as_ref()
        .ok_or_else(|| Error::Domain("instance has no structured vectors".into()))?;
    let unit = |x: &CMat| x * real(1.0 / x.norm());
    let (a, b, c) = (unit(&v.a), unit(&v.b), unit(&v.c));
    Ok([
        (Strategy::Aligned, aligned_capacity(inst)?.rate),
        (Strategy::Sic, sic_rate(inst)?.rate),
        (Strategy::ZfAc, zf_rank1_rate(inst, &a, &c).rate),
        (Strategy::BestAp, best_ap_rate(inst)),
        (Strategy::ZfAb, zf_rank1_rate(inst, &a, &b).rate),
    ])
}

/// Mean rate per strategy over `trials` vector draws at every ρ in the grid.
/// Draw `t` uses the same vectors at every ρ.
pub fn figure1_sweep(cfg: &Figure1Config) -> Result<Vec<Figure1Row>> {
    if cfg.trials == 0 {
        return Err(Error::config("trials", "must be at least 1"));
    }
    let per_trial: Vec<Vec<[(Strategy, f64); 5]>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = substream(cfg.seed, t as u64, Role::Example);
            let base = example_channels(cfg.m, cfg.n, cfg.alpha, 1.0, cfg.norm_mode, &mut rng)?;
            cfg.rho_db
                .iter()
                .map(|&db| strategy_rates(&base.with_rho(10f64.powf(db / 10.0))))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(cfg.rho_db.len() * 5);
    for (i, &db) in cfg.rho_db.iter().enumerate() {
        for (s, strategy) in Strategy::ALL.iter().enumerate() {
            let total: f64 = per_trial.iter().map(|r| r[i][s].1).sum();
            rows.push(Figure1Row {
                rho_db: db,
                strategy: *strategy,
                rate: total / cfg.trials as f64,
            });
        }
    }
    Ok(rows)
}

pub fn figure1_csv(rows: &[Figure1Row]) -> String {
    let mut out = String::from("rho_db,strategy,rate\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            crate::format::sig9(r.rho_db),
            r.strategy.name(),
            crate::format::sig9(r.rate)
        ));
    }
    out
}
