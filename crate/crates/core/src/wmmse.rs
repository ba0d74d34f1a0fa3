//! Weighted-MMSE precoder optimization under per-AP power constraints.
//!
//! The sum-rate problem is replaced by the equivalent minimization of
//! `Σ_kc tr(C_kc E_kc) - ln |C_kc|` over combiners `V`, weights `C` and
//! precoders `W`, solved by block coordinate descent:
//!
//! * `V` step: MMSE combiners.
//! * `C` step: `C_kc = E_kc⁻¹`.
//! * `W` step: one AP at a time (ascending). All precoders `W_kl` of AP `l` are
//!   solved jointly in closed form, with the multiplier `λ_l` of its power
//!   constraint found by bisection.
//!
//! For AP `l` in cluster `c`, with `J_k = Σ_c V_kc C_kc V_kcᴴ` and
//! `B_{l,l'} = Σ_k G_klᴴ J_k G_kl'`:
//!
//! ```text
//! W_kl(λ) = √ρ (ρ B_ll + λ I)⁻¹ Λ_kl
//! Λ_kl    = G_klᴴ V_kc C_kc - √ρ Σ_{l' ∈ C_c, l' ≠ l} B_{l,l'} W_kl'
//! ```
//!
//! With `B_ll = Ψ diag(σ) Ψᴴ` and `T = Ψᴴ Λ Λᴴ Ψ` the power spent at AP `l` is
//! `Σ_k Σ_m ρ T_mm / (ρ σ_m + λ)²`, decreasing in `λ`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    cn_matrix, eye, frob2, hermitian_part, inverse, logdet_hpd, real, right_singular, trace_re, CMat, HermEig, LN2,
};
use crate::rates::{
    max_ap_power, mmse_combiner_with, per_ap_power, sum_rate, BeamformingState, Products, RateReport, System,
    TraceEntry,
};

/// Eigenvalues of `B_ll` below this fraction of the largest are treated as zero.
pub const EIG_FLOOR: f64 = 1e-12;
const MAX_BISECTION_STEPS: usize = 400;
const INIT_PERTURBATION: f64 = 0.1;

fn default_max_outer_iters() -> usize {
    100
}
fn default_rate_tol() -> f64 {
    1e-4
}
fn default_bisect_eps() -> f64 {
    1e-8
}
fn default_power_tol() -> f64 {
    1e-6
}
fn default_inner_sweeps() -> usize {
    1
}
fn default_monotone_tol() -> f64 {
    1e-8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_max_outer_iters")]
    pub max_outer_iters: usize,
    /// Stop once the relative sum-rate change over one iteration drops below this.
    #[serde(default = "default_rate_tol")]
    pub rate_tol: f64,
    /// Width of the final bracket around `λ`.
    #[serde(default = "default_bisect_eps")]
    pub bisect_eps: f64,
    #[serde(default = "default_power_tol")]
    pub power_tol: f64,
    /// Passes over all APs per `W` step.
    #[serde(default = "default_inner_sweeps")]
    pub inner_sweeps: usize,
    /// Allowed objective increase per block update, relative to `1 + |objective|`.
    #[serde(default = "default_monotone_tol")]
    pub monotone_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_outer_iters: default_max_outer_iters(),
            rate_tol: default_rate_tol(),
            bisect_eps: default_bisect_eps(),
            power_tol: default_power_tol(),
            inner_sweeps: default_inner_sweeps(),
            monotone_tol: default_monotone_tol(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_outer_iters == 0 {
            return Err(Error::config("solver.max_outer_iters", "must be at least 1"));
        }
        if self.inner_sweeps == 0 {
            return Err(Error::config("solver.inner_sweeps", "must be at least 1"));
        }
        for (field, v) in [
            ("solver.rate_tol", self.rate_tol),
            ("solver.bisect_eps", self.bisect_eps),
            ("solver.power_tol", self.power_tol),
            ("solver.monotone_tol", self.monotone_tol),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(field, "must be positive"));
            }
        }
        Ok(())
    }
}

/// Closed-form ingredients for one precoder block `W_kl`.
///
/// `sigma` and `t` are in the unscaled convention: `W(λ) = √ρ (ρ Ψ diag(σ) Ψᴴ + λ I)⁻¹ Λ`.
#[derive(Debug, Clone)]
pub struct LagrangeTerms {
    pub psi: CMat,
    pub sigma: Vec<f64>,
    pub lambda: CMat,
    pub t: CMat,
}

/// The terms of every UE at one AP; they share `Ψ` and `σ`.
#[derive(Debug, Clone)]
pub struct ApTerms {
    pub psi: CMat,
    pub sigma: Vec<f64>,
    /// `Λ_kl` for every UE `k`.
    pub lambdas: Vec<CMat>,
    /// `Σ_k diag(Ψᴴ Λ_kl Λ_klᴴ Ψ)`.
    pub t_diag: Vec<f64>,
    /// Directions carrying neither curvature nor signal; left at zero.
    pub null: Vec<bool>,
    pub rho: f64,
}

impl ApTerms {
    pub fn new(psi: CMat, sigma: Vec<f64>, lambdas: Vec<CMat>, rho: f64) -> Self {
        let m = sigma.len();
        let mut t_diag = vec![0.0; m];
        let psi_h = psi.adjoint();
        for lam in &lambdas {
            let proj = &psi_h * lam;
            for i in 0..m {
                t_diag[i] += proj.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>();
            }
        }
        let sigma: Vec<f64> = sigma.into_iter().map(|s| s.max(0.0)).collect();
        let smax = sigma.iter().cloned().fold(0.0, f64::max);
        let ttotal: f64 = t_diag.iter().sum();
        let null = (0..m)
            .map(|i| sigma[i] <= EIG_FLOOR * smax && t_diag[i] <= EIG_FLOOR * ttotal)
            .collect();
        Self {
            psi,
            sigma,
            lambdas,
            t_diag,
            null,
            rho,
        }
    }

    /// Per-direction gain `1 / (ρ σ_m + λ)`; `None` marks an unbounded direction at `λ = 0`.
    fn gains(&self, lambda: f64) -> Vec<Option<f64>> {
        let smax = self.sigma.iter().cloned().fold(0.0, f64::max);
        (0..self.sigma.len())
            .map(|m| {
                if self.null[m] {
                    Some(0.0)
                } else if lambda == 0.0 && self.sigma[m] <= EIG_FLOOR * smax {
                    None
                } else {
                    Some(1.0 / (self.rho * self.sigma[m] + lambda))
                }
            })
            .collect()
    }

    /// Total power `Σ_k ‖W_kl(λ)‖²` at this AP; `+∞` when unbounded.
    pub fn power(&self, lambda: f64) -> f64 {
        let mut p = 0.0;
        for (m, g) in self.gains(lambda).into_iter().enumerate() {
            match g {
                Some(g) => p += self.rho * self.t_diag[m] * g * g,
                None => return f64::INFINITY,
            }
        }
        p
    }

    /// `√(Σ ρ T_mm)`; the power there is at most one.
    pub fn lambda_upper(&self) -> f64 {
        (self.rho * self.t_diag.iter().sum::<f64>()).sqrt()
    }

    /// Smallest `λ ≥ 0` (to within `eps`) with power at most one.
    pub fn bisect(&self, eps: f64) -> f64 {
        if self.power(0.0) <= 1.0 {
            return 0.0;
        }
        let mut lo = 0.0;
        let mut hi = self.lambda_upper();
        for _ in 0..MAX_BISECTION_STEPS {
            if hi - lo <= eps {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.power(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    /// `W_kl(λ)`; requires a finite power at `λ`.
    pub fn precoder(&self, k: usize, lambda: f64) -> CMat {
        let gains = self.gains(lambda);
        let mut scaled = self.psi.clone();
        for (m, g) in gains.iter().enumerate() {
            let g = g.expect("bounded direction");
            for i in 0..scaled.nrows() {
                scaled[(i, m)] *= real(g);
            }
        }
        scaled * (self.psi.adjoint() * &self.lambdas[k]) * real(self.rho.sqrt())
    }

    pub fn terms(&self, k: usize) -> LagrangeTerms {
        let proj = self.psi.adjoint() * &self.lambdas[k];
        LagrangeTerms {
            psi: self.psi.clone(),
            sigma: self.sigma.clone(),
            lambda: self.lambdas[k].clone(),
            t: hermitian_part(&(&proj * proj.adjoint())),
        }
    }
}

/// `Σ_k Σ_m ρ T_kl[m,m] / (ρ σ_m + λ)²` over the terms of one AP.
pub fn power_of_lambda(terms: &[LagrangeTerms], rho: f64, lambda: f64) -> f64 {
    let Some(first) = terms.first() else {
        return 0.0;
    };
    let lambdas = terms.iter().map(|t| t.lambda.clone()).collect();
    ApTerms::new(first.psi.clone(), first.sigma.clone(), lambdas, rho).power(lambda)
}

/// Root of `power(λ) = 1` (or zero when the constraint is slack), to within `eps`.
pub fn bisect_lambda(terms: &[LagrangeTerms], rho: f64, eps: f64) -> f64 {
    let Some(first) = terms.first() else {
        return 0.0;
    };
    let lambdas = terms.iter().map(|t| t.lambda.clone()).collect();
    ApTerms::new(first.psi.clone(), first.sigma.clone(), lambdas, rho).bisect(eps)
}

/// The closed-form block update for given terms and multiplier.
pub fn update_precoder_block(terms: &LagrangeTerms, rho: f64, lambda: f64) -> CMat {
    ApTerms::new(terms.psi.clone(), terms.sigma.clone(), vec![terms.lambda.clone()], rho).precoder(0, lambda)
}

/// `J_k = Σ_c V_kc C_kc V_kcᴴ` for every UE.
fn weighted_combiner_grams(sys: &System, state: &BeamformingState) -> Vec<CMat> {
    let n = sys.ue_antennas();
    (0..sys.num_ues())
        .map(|k| {
            let mut j = CMat::zeros(n, n);
            for c in 0..sys.num_clusters() {
                let v = &state.combiners[k][c];
                j += v * &state.weights[k][c] * v.adjoint();
            }
            hermitian_part(&j)
        })
        .collect()
}

/// `B_{l,l'} = Σ_k G_klᴴ J_k G_kl'`.
fn coupling(sys: &System, grams: &[CMat], l: usize, lp: usize) -> CMat {
    let m = sys.net.ap_antennas();
    let mut b = CMat::zeros(m, m);
    for (k, j) in grams.iter().enumerate() {
        b += sys.net.g(k, l).adjoint() * (j * sys.net.g(k, lp));
    }
    b
}

fn ap_terms_with(sys: &System, state: &BeamformingState, grams: &[CMat], l: usize) -> ApTerms {
    let c = sys.clusters.cluster_of(l);
    let rho = sys.rho();
    let eig = HermEig::new(&coupling(sys, grams, l, l));
    let others: Vec<(usize, CMat)> = sys
        .clusters
        .members(c)
        .iter()
        .filter(|&&lp| lp != l)
        .map(|&lp| (lp, coupling(sys, grams, l, lp)))
        .collect();
    let lambdas = (0..sys.num_ues())
        .map(|k| {
            let mut lam = sys.net.g(k, l).adjoint() * &state.combiners[k][c] * &state.weights[k][c];
            for (lp, b) in &others {
                lam -= b * &state.precoders[k][*lp] * real(rho.sqrt());
            }
            lam
        })
        .collect();
    ApTerms::new(eig.vectors, eig.values, lambdas, rho)
}

/// Block terms of AP `l` at the current combiners, weights and other precoders.
pub fn ap_terms(sys: &System, state: &BeamformingState, l: usize) -> ApTerms {
    ap_terms_with(sys, state, &weighted_combiner_grams(sys, state), l)
}

pub fn lambda_terms(sys: &System, state: &BeamformingState, k: usize, l: usize) -> LagrangeTerms {
    ap_terms(sys, state, l).terms(k)
}

/// Outcome of one `W` step.
#[derive(Debug, Clone, Copy, Default)]
pub struct WStepStats {
    pub max_lambda: f64,
    /// Largest `|power - 1|` over APs with an active multiplier.
    pub max_slack_violation: f64,
}

/// Runs `sweeps` passes of per-AP block updates in ascending AP order.
pub fn update_precoders(sys: &System, state: &mut BeamformingState, sweeps: usize, eps: f64) -> WStepStats {
    let grams = weighted_combiner_grams(sys, state);
    let mut stats = WStepStats::default();
    for _ in 0..sweeps {
        for l in 0..sys.num_aps() {
            let terms = ap_terms_with(sys, state, &grams, l);
            let lambda = terms.bisect(eps);
            for k in 0..sys.num_ues() {
                state.precoders[k][l] = terms.precoder(k, lambda);
            }
            stats.max_lambda = stats.max_lambda.max(lambda);
            if lambda > 1e-6 {
                stats.max_slack_violation = stats.max_slack_violation.max((terms.power(lambda) - 1.0).abs());
            }
        }
    }
    stats
}

/// Matched-filter start: the dominant right singular vectors of each `G_kl`
/// plus a small random perturbation, scaled to full power at every AP.
pub fn init_precoders<R: Rng + ?Sized>(sys: &System, rng: &mut R) -> BeamformingState {
    let mut state = BeamformingState::zeros(sys);
    let m = sys.net.ap_antennas();
    for l in 0..sys.num_aps() {
        let c = sys.clusters.cluster_of(l);
        for k in 0..sys.num_ues() {
            let d = sys.d(k, c);
            let (v, _) = right_singular(sys.net.g(k, l));
            let mut w = cn_matrix(rng, m, d, INIT_PERTURBATION * INIT_PERTURBATION / m as f64);
            for j in 0..d.min(v.ncols()) {
                let col = w.column(j) + v.column(j);
                w.set_column(j, &col);
            }
            state.precoders[k][l] = w;
        }
        normalize_ap(&mut state, l);
    }
    state
}

fn normalize_ap(state: &mut BeamformingState, l: usize) {
    let p = per_ap_power(state, l);
    if p > 0.0 {
        let s = real(1.0 / p.sqrt());
        for row in state.precoders.iter_mut() {
            row[l] *= s;
        }
    }
}

/// MMSE combiners for the current precoders.
pub fn update_combiners(sys: &System, state: &mut BeamformingState) {
    let products = Products::new(sys, &state.precoders);
    for k in 0..sys.num_ues() {
        for c in 0..sys.num_clusters() {
            state.combiners[k][c] = mmse_combiner_with(&products, sys.rho(), k, c);
        }
    }
}

/// `C_kc = (I - √ρ V_kcᴴ F_kkc)⁻¹`, Hermitian-symmetrized. Returns whether any
/// inverse needed regularization.
pub fn update_weights(sys: &System, state: &mut BeamformingState) -> bool {
    let products = Products::new(sys, &state.precoders);
    let mut regularized = false;
    for k in 0..sys.num_ues() {
        for c in 0..sys.num_clusters() {
            let d = sys.d(k, c);
            let m = eye(d) - state.combiners[k][c].adjoint() * products.desired(k, c) * real(sys.rho().sqrt());
            let inv = match inverse(&m) {
                Some(x) if x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => x,
                _ => {
                    regularized = true;
                    inverse(&(m + eye(d) * real(1e-10))).unwrap_or_else(|| eye(d))
                }
            };
            state.weights[k][c] = hermitian_part(&inv);
        }
    }
    regularized
}

fn mse_with(products: &Products, rho: f64, t_k: &CMat, u: &CMat, k: usize, c: usize) -> CMat {
    let x = u.adjoint() * products.desired(k, c) * real(rho.sqrt());
    let d = x.nrows();
    hermitian_part(&(eye(d) - &x - x.adjoint() + u.adjoint() * t_k * u))
}

/// `E_kc = (I - √ρ Uᴴ F)(I - √ρ Uᴴ F)ᴴ + Uᴴ A_kc U` for the combiner `u`.
pub fn mse_matrix(sys: &System, state: &BeamformingState, u: &CMat, k: usize, c: usize) -> CMat {
    let products = Products::new(sys, &state.precoders);
    let t = products.total_covariance(sys.rho(), k);
    mse_with(&products, sys.rho(), &t, u, k, c)
}

/// `Σ_kc tr(C_kc E_kc) - ln |C_kc|` at the state's combiners and weights.
pub fn objective(sys: &System, state: &BeamformingState) -> f64 {
    objective_with(sys, state, &Products::new(sys, &state.precoders))
}

fn objective_with(sys: &System, state: &BeamformingState, products: &Products) -> f64 {
    let mut total = 0.0;
    for k in 0..sys.num_ues() {
        let t = products.total_covariance(sys.rho(), k);
        for c in 0..sys.num_clusters() {
            let e = mse_with(products, sys.rho(), &t, &state.combiners[k][c], k, c);
            let w = &state.weights[k][c];
            total += trace_re(&(w * e));
            total -= logdet_hpd(w).unwrap_or(f64::NEG_INFINITY);
        }
    }
    total
}

/// Sum of `log2 |C_kc|`; equals the sum rate when combiners are MMSE.
pub fn weight_rate(state: &BeamformingState) -> f64 {
    state
        .weights
        .iter()
        .flatten()
        .map(|w| logdet_hpd(w).unwrap_or(0.0) / LN2)
        .sum()
}

fn check_monotone(cfg: &SolverConfig, before: f64, after: f64, iteration: usize, block: &'static str) -> Result<()> {
    let increase = after - before;
    if increase > cfg.monotone_tol * (1.0 + before.abs()) || after.is_nan() {
        return Err(Error::NonMonotone {
            iteration,
            block,
            increase,
        });
    }
    Ok(())
}

/// Block coordinate descent from a matched-filter start.
///
/// Returns the final state (MMSE combiners, matching weights) and its rate
/// report with one trace entry per outer iteration.
pub fn wmmse_solve<R: Rng + ?Sized>(
    sys: &System,
    cfg: &SolverConfig,
    rng: &mut R,
) -> Result<(BeamformingState, RateReport)> {
    let state = init_precoders(sys, rng);
    wmmse_solve_from(sys, cfg, state)
}

pub fn wmmse_solve_from(
    sys: &System,
    cfg: &SolverConfig,
    mut state: BeamformingState,
) -> Result<(BeamformingState, RateReport)> {
    update_combiners(sys, &mut state);
    let mut regularized = update_weights(sys, &mut state);
    let mut prev_rate = weight_rate(&state);
    let mut obj = objective(sys, &state);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=cfg.max_outer_iters {
        iterations = it;
        let stats = update_precoders(sys, &mut state, cfg.inner_sweeps, cfg.bisect_eps);
        let after_w = objective(sys, &state);
        check_monotone(cfg, obj, after_w, it, "precoder")?;

        update_combiners(sys, &mut state);
        let after_v = objective(sys, &state);
        check_monotone(cfg, after_w, after_v, it, "combiner")?;

        regularized |= update_weights(sys, &mut state);
        let after_c = objective(sys, &state);
        check_monotone(cfg, after_v, after_c, it, "weight")?;
        obj = after_c;

        let rate = weight_rate(&state);
        trace.push(TraceEntry {
            iteration: it,
            sum_rate: rate,
            objective: obj,
            max_power: max_ap_power(&state),
            max_lambda: stats.max_lambda,
        });
        let change = (rate - prev_rate).abs() / prev_rate.abs().max(1e-12);
        prev_rate = rate;
        if change < cfg.rate_tol {
            converged = true;
            break;
        }
    }
    let mut report = sum_rate(sys, &state);
    report.regularized |= regularized;
    report.iterations = iterations;
    report.converged = converged;
    report.trace = trace;
    Ok((state, report))
}

/// Maximum-ratio baseline: dominant right singular vectors of `G_kl`, equal
/// power per stream, full power per AP; MMSE combiners.
pub fn mr_precoder(sys: &System) -> (BeamformingState, RateReport) {
    let mut state = BeamformingState::zeros(sys);
    let m = sys.net.ap_antennas();
    for l in 0..sys.num_aps() {
        let c = sys.clusters.cluster_of(l);
        for k in 0..sys.num_ues() {
            let d = sys.d(k, c);
            let (v, _) = right_singular(sys.net.g(k, l));
            let mut w = CMat::zeros(m, d);
            for j in 0..d.min(v.ncols()) {
                w.set_column(j, &v.column(j));
            }
            state.precoders[k][l] = w;
        }
        normalize_ap(&mut state, l);
    }
    update_combiners(sys, &mut state);
    let regularized = update_weights(sys, &mut state);
    let mut report = sum_rate(sys, &state);
    report.regularized |= regularized;
    (state, report)
}

/// `Σ_k ‖W_kl‖²` minus one, for every AP.
pub fn power_slack(state: &BeamformingState) -> Vec<f64> {
    let num_aps = state.precoders.first().map(|r| r.len()).unwrap_or(0);
    (0..num_aps).map(|l| per_ap_power(state, l) - 1.0).collect()
}

/// Frobenius norm squared of every precoder block, for diagnostics.
pub fn precoder_energy(state: &BeamformingState) -> f64 {
    state.precoders.iter().flatten().map(frob2).sum()
}
