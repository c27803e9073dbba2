//! Numerical evaluation of the coverage-probability theorems.
//!
//! Every theorem shares the same outer structure: an integral of a
//! conditional coverage kernel against the joint density of the `n`
//! strongest normalized pathlosses. Substituting `u = Λ(γ'_n)` and
//! `w_i = Λ(γ'_i)` maps that density onto the unit-rate Poisson order
//! statistics — the weight becomes exactly `e^{−u}` on the simplex
//! `0 < w_1 < … < u` — so the engines integrate over `(w, u)` with a fixed
//! panel rule, truncate the tail where `e^{−Λ}` drops under the configured
//! cut, and recover `γ' = Λ^{−1}` pointwise.
//!
//! The conditional kernels are:
//!
//! * Rayleigh: `L_I(T') · L_N(T')` with `T' = T/Σ 1/γ'_i` on the positive
//!   real axis;
//! * Nakagami upper bound: a characteristic-function inversion with the
//!   gamma-sum signal transform `(1 + s/m)^{−nm}`;
//! * no small-scale fading: the interference CDF at `S₀/T − σ²/N_t`
//!   (deterministic coherent signal power `S₀ = (Σ 1/√γ'_i)²`);
//! * interference-free Nakagami: the regularized upper incomplete gamma in
//!   closed form.
//!
//! `n ∈ {1, 2}` uses nested fixed rules with cached per-node Laplace
//! transforms; `3 ≤ n ≤ 8` falls back to a deterministic quasi-Monte Carlo
//! average over the simplex.

pub(crate) mod laplace;
mod inversion;

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use num_complex::Complex64;
use rayon::prelude::*;
use statrs::distribution::ContinuousCDF;

use crate::channel::{self, FadingModel};
use crate::geometry::{self, Scenario};
use crate::simulator::{CoverageCurve, CurveEntry, Method};
use crate::{Error, Result};

pub use inversion::{cf_inversion, cf_inversion_no_interference, snr_outage_kernel};
pub use laplace::{laplace_interference, laplace_noise, mean_interferer_gain, LaplaceMode};

use inversion::{clamp_probability, prob_positive, ErrorStash};
use laplace::{GainQuadrature, NodeCache};

/// Largest cooperation size the integrators accept.
pub const MAX_COOP_N: usize = 8;

/// Points of the quasi-Monte Carlo simplex rule for `n ≥ 3`.
const QMC_POINTS: usize = 2048;

/// Tolerances and budgets of the numerical machinery.
#[derive(Debug, Clone)]
pub struct QuadratureConfig {
    /// Relative tolerance of the adaptive quadratures.
    pub rel_tol: f64,
    /// Outer integral truncates where `e^{−Λ}` falls below this.
    pub outer_tail_cut: f64,
    /// Absolute tail tolerance of the characteristic-function inversion.
    pub inversion_tail_tol: f64,
    /// Panel budget per adaptive pass.
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-5,
            outer_tail_cut: 1e-10,
            inversion_tail_tol: 1e-6,
            max_subdivisions: 20_000,
        }
    }
}

impl QuadratureConfig {
    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0)
            || !(self.outer_tail_cut > 0.0)
            || !(self.inversion_tail_tol > 0.0)
            || self.max_subdivisions == 0
        {
            return Err(Error::InvalidScenario(
                "quadrature tolerances must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Base panel boundaries of the outer `u`-rule; the density weight `e^{−u}`
/// motivates the geometric growth.
const OUTER_BOUNDS: [f64; 13] =
    [0.0, 0.08, 0.2, 0.4, 0.7, 1.1, 1.7, 2.6, 4.0, 6.0, 9.0, 13.0, 18.0];

/// Panel boundaries of the inner rule in the fraction `ξ = w/u ∈ (0, 1]`.
const INNER_BOUNDS: [f64; 8] = [0.0, 0.015, 0.05, 0.12, 0.25, 0.45, 0.7, 1.0];

fn panel_rule(bounds: &[f64], split: bool) -> Vec<(f64, f64)> {
    let mut edges: Vec<(f64, f64)> = Vec::new();
    for w in bounds.windows(2) {
        if split {
            let mid = 0.5 * (w[0] + w[1]);
            edges.push((w[0], mid));
            edges.push((mid, w[1]));
        } else {
            edges.push((w[0], w[1]));
        }
    }
    let mut rule = Vec::new();
    for (a, b) in edges {
        let center = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        for (x, w) in crate::quad::gk15_rule() {
            rule.push((center + half * x, w * half));
        }
    }
    rule
}

/// Shared per-scenario state of the analytic engines: the gain quadrature,
/// the fixed integration rules, and memoized per-`γ'_n` transform caches.
pub struct EngineContext {
    scenario: Scenario,
    cfg: QuadratureConfig,
    gq: Arc<GainQuadrature>,
    unit_gq: GainQuadrature,
    flat_c: OnceLock<f64>,
    sigma_nt: f64,
    outer: Vec<(f64, f64)>,
    inner: Vec<(f64, f64)>,
    nodes: RwLock<HashMap<u64, Arc<NodeCache>>>,
    inverse_memo: RwLock<HashMap<u64, f64>>,
}

impl EngineContext {
    pub fn new(scenario: Scenario) -> Result<Self> {
        Self::with_config(scenario, QuadratureConfig::default())
    }

    pub fn with_config(scenario: Scenario, cfg: QuadratureConfig) -> Result<Self> {
        scenario.validate()?;
        cfg.validate()?;
        let u_max = -cfg.outer_tail_cut.ln();
        let mut outer_bounds: Vec<f64> =
            OUTER_BOUNDS.iter().copied().filter(|b| *b < u_max).collect();
        outer_bounds.push(u_max);
        let split = cfg.rel_tol < 1e-6;
        Ok(Self {
            gq: laplace::gain_quadrature(&scenario.array, channel::DEFAULT_UPSILON_CELLS)?,
            unit_gq: GainQuadrature::unit_rule(),
            flat_c: OnceLock::new(),
            sigma_nt: scenario.noise_over_nt(),
            outer: panel_rule(&outer_bounds, split),
            inner: panel_rule(&INNER_BOUNDS, split),
            nodes: RwLock::new(HashMap::new()),
            inverse_memo: RwLock::new(HashMap::new()),
            scenario,
            cfg,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub(crate) fn cfg(&self) -> &QuadratureConfig {
        &self.cfg
    }

    pub(crate) fn sigma_over_nt(&self) -> f64 {
        self.sigma_nt
    }

    /// Flat-top main-lobe mass `c`, computed once.
    fn flat_top_c(&self) -> Result<f64> {
        if let Some(c) = self.flat_c.get() {
            return Ok(*c);
        }
        let c = channel::flat_top_constant(&self.scenario.array)?;
        Ok(*self.flat_c.get_or_init(|| c))
    }

    fn inverse_measure(&self, u: f64) -> Result<f64> {
        let key = u.to_bits();
        if let Some(v) = self
            .inverse_memo
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(&key)
        {
            return Ok(*v);
        }
        let v = geometry::inverse_intensity_measure(u, &self.scenario)?;
        self.inverse_memo
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(key, v);
        Ok(v)
    }

    /// Memoized per-`γ'_n` cache, with the inner-rule pathlosses
    /// precomputed for the two-dimensional engines.
    pub(crate) fn node_for(&self, gamma_n: f64) -> Result<Arc<NodeCache>> {
        let key = gamma_n.to_bits();
        if let Some(n) = self.nodes.read().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return Ok(Arc::clone(n));
        }
        let u = geometry::intensity_measure(gamma_n, &self.scenario)?;
        let mut inner_gammas = Vec::with_capacity(self.inner.len());
        for (xi, _) in &self.inner {
            inner_gammas.push(self.inverse_measure(u * xi)?);
        }
        let node = Arc::new(NodeCache::new(&self.scenario, gamma_n, inner_gammas)?);
        let mut map = self.nodes.write().unwrap_or_else(|e| e.into_inner());
        Ok(Arc::clone(map.entry(key).or_insert(node)))
    }

    /// Throwaway node for QMC points: same machinery, not retained.
    fn transient_node(&self, gamma_n: f64) -> Result<NodeCache> {
        NodeCache::new(&self.scenario, gamma_n, Vec::new())
    }

    fn laplace_real_cached(&self, node: &NodeCache, s: f64, mode: LaplaceMode) -> Result<f64> {
        match mode {
            LaplaceMode::Exact => {
                node.laplace_real(&self.scenario, &self.gq, None, s, self.cfg.rel_tol)
            }
            LaplaceMode::FlatTop => {
                let c = self.flat_top_c()?;
                node.laplace_real(&self.scenario, &self.unit_gq, Some(c), s, self.cfg.rel_tol)
            }
        }
    }

    pub(crate) fn laplace_imag_cached(&self, node: &NodeCache, y: f64) -> Result<Complex64> {
        debug_assert!(y >= 0.0);
        node.laplace_imag(&self.scenario, &self.gq, y, self.cfg.rel_tol)
    }

    pub(crate) fn interferer_gain_quad(&self) -> &GainQuadrature {
        &self.gq
    }
}

fn check_threshold(t_linear: f64) -> Result<()> {
    if !(t_linear > 0.0) || !t_linear.is_finite() {
        return Err(Error::Domain {
            op: "coverage",
            detail: format!("threshold must be a positive linear SINR, got {t_linear}"),
        });
    }
    Ok(())
}

/// Conditional coverage kernel given the ordered pathlosses; `gammas` is
/// ascending with `gammas.last() = γ'_n`.
trait ConditionalKernel: Sync {
    fn eval(&self, ctx: &EngineContext, node: &NodeCache, gammas: &[f64]) -> Result<f64>;
}

/// Outer/inner fixed-rule integration of a conditional kernel for n ∈ {1, 2},
/// QMC for 3 ≤ n ≤ MAX_COOP_N.
fn simplex_average<K: ConditionalKernel>(ctx: &EngineContext, kernel: &K) -> Result<f64> {
    let n = ctx.scenario.coop_n;
    match n {
        1 => {
            let mut acc = 0.0;
            for (u, wu) in &ctx.outer {
                let gamma_n = ctx.inverse_measure(*u)?;
                let node = ctx.node_for(gamma_n)?;
                acc += wu * (-u).exp() * kernel.eval(ctx, &node, &[gamma_n])?;
            }
            Ok(acc)
        }
        2 => {
            let mut acc = 0.0;
            for (u, wu) in &ctx.outer {
                let gamma_n = ctx.inverse_measure(*u)?;
                let node = ctx.node_for(gamma_n)?;
                let mut inner_acc = 0.0;
                for ((_, wxi), g1) in ctx.inner.iter().zip(&node.inner_gammas) {
                    inner_acc += wxi * kernel.eval(ctx, &node, &[*g1, gamma_n])?;
                }
                // ∫_0^u f dw = u ∫_0^1 f(uξ) dξ
                acc += wu * (-u).exp() * u * inner_acc;
            }
            Ok(acc)
        }
        n if n <= MAX_COOP_N => simplex_qmc(ctx, kernel, n),
        n => Err(Error::UnsupportedN { n, max: MAX_COOP_N }),
    }
}

/// Radical-inverse Halton point in the given base.
fn halton(mut index: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

const HALTON_BASES: [usize; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

fn simplex_qmc<K: ConditionalKernel>(ctx: &EngineContext, kernel: &K, n: usize) -> Result<f64> {
    // u ~ Gamma(n, 1) through its inverse CDF, the w's uniform on [0, u]
    // sorted: together they weight the simplex by exactly e^{−u}.
    let dist = statrs::distribution::Gamma::new(n as f64, 1.0)
        .map_err(|e| Error::InvalidScenario(format!("gamma sampler: {e}")))?;
    let mut acc = 0.0;
    for i in 0..QMC_POINTS {
        let idx = i + 1;
        let p = halton(idx, HALTON_BASES[n - 1]).clamp(1e-12, 1.0 - 1e-12);
        let u = dist.inverse_cdf(p);
        let mut ws: Vec<f64> = (0..n - 1)
            .map(|d| u * halton(idx, HALTON_BASES[d]))
            .collect();
        ws.sort_by(f64::total_cmp);
        let mut gammas = Vec::with_capacity(n);
        for w in &ws {
            gammas.push(ctx.inverse_measure(*w)?);
        }
        let gamma_n = ctx.inverse_measure(u)?;
        gammas.push(gamma_n);
        let node = ctx.transient_node(gamma_n)?;
        acc += kernel.eval(ctx, &node, &gammas)?;
    }
    Ok(acc / QMC_POINTS as f64)
}

struct RayleighKernel {
    t_linear: f64,
    mode: LaplaceMode,
}

impl ConditionalKernel for RayleighKernel {
    fn eval(&self, ctx: &EngineContext, node: &NodeCache, gammas: &[f64]) -> Result<f64> {
        let sum_inv: f64 = gammas.iter().map(|g| 1.0 / g).sum();
        let s = self.t_linear / sum_inv;
        let li = ctx.laplace_real_cached(node, s, self.mode)?;
        Ok(li * (-s * ctx.sigma_nt).exp())
    }
}

struct NakagamiKernel {
    t_linear: f64,
    nm: u32,
    m: f64,
}

impl ConditionalKernel for NakagamiKernel {
    fn eval(&self, ctx: &EngineContext, node: &NodeCache, gammas: &[f64]) -> Result<f64> {
        let sum_inv: f64 = gammas.iter().map(|g| 1.0 / g).sum();
        let t_scaled = self.t_linear / sum_inv;
        let stash = ErrorStash::new();
        let mut phi = |omega: f64| -> Complex64 {
            let signal = Complex64::new(1.0, -omega / self.m).powi(-(self.nm as i32));
            let noise = Complex64::new(0.0, -omega * t_scaled * ctx.sigma_nt).exp();
            let interf = match ctx.laplace_imag_cached(node, omega * t_scaled) {
                Ok(v) => v,
                Err(e) => {
                    stash.put(e);
                    Complex64::new(0.0, 0.0)
                }
            };
            signal * noise * interf
        };
        let raw = prob_positive(&mut phi, ctx.cfg.inversion_tail_tol, ctx.cfg.max_subdivisions);
        stash.check()?;
        Ok(clamp_probability(raw?, "nakagami coverage kernel"))
    }
}

struct SnrNakagamiKernel {
    t_linear: f64,
    n: usize,
    m: u32,
}

impl ConditionalKernel for SnrNakagamiKernel {
    fn eval(&self, ctx: &EngineContext, _node: &NodeCache, gammas: &[f64]) -> Result<f64> {
        let sum_inv: f64 = gammas.iter().map(|g| 1.0 / g).sum();
        let t_scaled = self.t_linear / sum_inv;
        snr_outage_kernel(self.n, self.m, t_scaled * ctx.sigma_nt)
    }
}

struct NoFadingKernel {
    t_linear: f64,
}

impl ConditionalKernel for NoFadingKernel {
    fn eval(&self, ctx: &EngineContext, node: &NodeCache, gammas: &[f64]) -> Result<f64> {
        // Deterministic coherent signal: coverage given γ' is the
        // interference CDF at S₀/T − σ²/N_t.
        let s0: f64 = gammas.iter().map(|g| 1.0 / g.sqrt()).sum::<f64>().powi(2);
        let w = s0 / self.t_linear - ctx.sigma_nt;
        if w <= 0.0 {
            return Ok(0.0);
        }
        // Concentration shortcut: far from the mean interference the CDF is
        // 0 or 1 to beyond the inversion tolerance (Cantelli bound).
        let (mean, var) = node.interference_mean_var(&ctx.gq);
        let cut = ctx.cfg.inversion_tail_tol;
        if w > mean {
            let bound = var / (var + (w - mean) * (w - mean));
            if bound < cut {
                return Ok(1.0 - 0.5 * bound);
            }
        } else {
            let bound = var / (var + (mean - w) * (mean - w));
            if bound < cut {
                return Ok(0.5 * bound);
            }
        }
        let stash = ErrorStash::new();
        let mut phi = |omega: f64| -> Complex64 {
            let interf = match ctx.laplace_imag_cached(node, omega) {
                Ok(v) => v,
                Err(e) => {
                    stash.put(e);
                    Complex64::new(0.0, 0.0)
                }
            };
            Complex64::new(0.0, omega * w).exp() * interf
        };
        let raw = prob_positive(&mut phi, ctx.cfg.inversion_tail_tol, ctx.cfg.max_subdivisions);
        stash.check()?;
        Ok(clamp_probability(raw?, "no-fading coverage kernel"))
    }
}

impl EngineContext {
    /// Coverage at one linear threshold with the engine matching the
    /// scenario's fading model. `no_interference` selects the SNR-only
    /// Nakagami bound and is rejected for other fading models.
    pub fn coverage(
        &self,
        t_linear: f64,
        mode: LaplaceMode,
        no_interference: bool,
    ) -> Result<f64> {
        check_threshold(t_linear)?;
        if no_interference && !matches!(self.scenario.fading, FadingModel::Nakagami { .. }) {
            return Err(Error::InvalidScenario(
                "the interference-free bound is defined for Nakagami fading only".into(),
            ));
        }
        let raw = match self.scenario.fading {
            FadingModel::Rayleigh => simplex_average(self, &RayleighKernel { t_linear, mode })?,
            FadingModel::Nakagami { m } => {
                if no_interference {
                    simplex_average(
                        self,
                        &SnrNakagamiKernel { t_linear, n: self.scenario.coop_n, m },
                    )?
                } else {
                    simplex_average(
                        self,
                        &NakagamiKernel {
                            t_linear,
                            nm: self.scenario.coop_n as u32 * m,
                            m: m as f64,
                        },
                    )?
                }
            }
            FadingModel::NoFading => simplex_average(self, &NoFadingKernel { t_linear })?,
        };
        Ok(clamp_probability(raw, "coverage"))
    }

    /// The theorem tag the scenario dispatches to.
    pub fn method(&self, no_interference: bool) -> Method {
        theorem_for(&self.scenario, no_interference)
    }
}

/// Which theorem a scenario evaluates under the analytic engine.
pub fn theorem_for(scenario: &Scenario, no_interference: bool) -> Method {
    match scenario.fading {
        FadingModel::Rayleigh => match scenario.pathloss {
            geometry::PathlossConfig::Uniform { .. } => Method::Th1,
            geometry::PathlossConfig::LosNlos { .. } => Method::Th2,
        },
        FadingModel::Nakagami { .. } => {
            if no_interference {
                Method::Cor1
            } else {
                Method::Th3
            }
        }
        FadingModel::NoFading => Method::Th4,
    }
}

/// Coverage probability under Rayleigh fading on the cooperating links
/// (exact-gain Laplace transform).
pub fn coverage_rayleigh(scenario: &Scenario, t_linear: f64) -> Result<f64> {
    if !matches!(scenario.fading, FadingModel::Rayleigh) {
        return Err(Error::InvalidScenario("scenario fading must be Rayleigh".into()));
    }
    EngineContext::new(scenario.clone())?.coverage(t_linear, LaplaceMode::Exact, false)
}

/// Upper bound on the coverage probability under Nakagami-m cooperating
/// fading; exact (not a bound) when `coop_n = 1`.
pub fn coverage_nakagami_ub(scenario: &Scenario, t_linear: f64) -> Result<f64> {
    if !matches!(scenario.fading, FadingModel::Nakagami { .. }) {
        return Err(Error::InvalidScenario("scenario fading must be Nakagami".into()));
    }
    EngineContext::new(scenario.clone())?.coverage(t_linear, LaplaceMode::Exact, false)
}

/// Interference-free Nakagami coverage bound (SNR-only corollary).
pub fn coverage_snr_nakagami(scenario: &Scenario, t_linear: f64) -> Result<f64> {
    if !matches!(scenario.fading, FadingModel::Nakagami { .. }) {
        return Err(Error::InvalidScenario("scenario fading must be Nakagami".into()));
    }
    EngineContext::new(scenario.clone())?.coverage(t_linear, LaplaceMode::Exact, true)
}

/// Coverage probability with no small-scale fading on the cooperating links.
pub fn coverage_nofading(scenario: &Scenario, t_linear: f64) -> Result<f64> {
    if !matches!(scenario.fading, FadingModel::NoFading) {
        return Err(Error::InvalidScenario("scenario fading must be NoFading".into()));
    }
    EngineContext::new(scenario.clone())?.coverage(t_linear, LaplaceMode::Exact, false)
}

/// Analytic coverage curve over ascending dB thresholds; thresholds
/// evaluate in parallel against one shared context.
pub fn analytic_curve(
    scenario: &Scenario,
    thresholds_db: &[f64],
    mode: LaplaceMode,
    no_interference: bool,
    cfg: QuadratureConfig,
) -> Result<CoverageCurve> {
    if thresholds_db.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain {
            op: "analytic_curve",
            detail: "thresholds must be strictly ascending".into(),
        });
    }
    let ctx = EngineContext::with_config(scenario.clone(), cfg)?;
    let method = ctx.method(no_interference);
    let entries: Result<Vec<CurveEntry>> = thresholds_db
        .par_iter()
        .map(|db| {
            let cov = ctx.coverage(10f64.powf(db / 10.0), mode, no_interference)?;
            Ok(CurveEntry { threshold_db: *db, coverage: cov, ci_halfwidth: None, method })
        })
        .collect();
    Ok(CoverageCurve { entries: entries? })
}
