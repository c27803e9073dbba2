//! Laplace transforms of the shot-noise interference and of the noise.
//!
//! The interference transform is an exponential functional of the mapped
//! point process,
//!
//! ```text
//! L_I(s) = exp( −∫_{γ'_n}^∞ [ 1 − E_Υ( 1 / (1 + s|G(Υ)|²/v) ) ] λ(v) dv ),
//! ```
//!
//! evaluated here in three layers:
//!
//! * the Υ-expectation is a fixed quadrature rule assembled once per array
//!   from the cell-averaged density table (Simpson within each cell, folded
//!   onto `[0, 2]` by symmetry);
//! * the `v`-integral runs in log coordinates up to a split point, beyond
//!   which a four-term moment expansion in `s/v` finishes the tail;
//! * per outer node `γ'_n` the exponent is cached on uniform log grids over
//!   the positive real axis and the positive imaginary axis — the only two
//!   lines the coverage engines ever evaluate on — with a series asymptote
//!   below the grid and saturation (`L_I → 0`) above it.

use std::collections::HashMap;
use std::sync::{Arc, LazyLock, Mutex, RwLock};

use num_complex::Complex64;

use crate::channel::{self, ArrayConfig, UpsilonTable};
use crate::geometry::{self, PathlossConfig, Scenario};
use crate::quad;
use crate::{Error, Result};

/// Noise Laplace transform `exp(−s σ²/N_t)`.
pub fn laplace_noise(s: Complex64, scenario: &Scenario) -> Complex64 {
    (-s * scenario.noise_over_nt()).exp()
}

/// Fixed quadrature rule for expectations over `|G(Υ)|²`:
/// `E[ψ(g)] ≈ Σ_q w_q ψ(g_q)` with `Σ w_q = 1`.
pub(crate) struct GainQuadrature {
    weights: Vec<f64>,
    gains: Vec<f64>,
    /// `E[g^k]` for k = 1..=4.
    moments: [f64; 4],
}

impl GainQuadrature {
    fn build(array: &ArrayConfig, table: &UpsilonTable) -> Self {
        let cells = table.cells();
        let mut weights = Vec::new();
        let mut gains = Vec::new();
        // |G|² and the density are both even, so an even table folds onto
        // its upper half with doubled masses.
        let (range, fold) = if cells % 2 == 0 {
            (cells / 2..cells, 2.0)
        } else {
            (0..cells, 1.0)
        };
        for i in range {
            let mass = table.mass(i) * fold;
            if mass <= 0.0 {
                continue;
            }
            let lo = table.cell_lo(i);
            let w = table.cell_width();
            // Simpson inside the cell: the density is cell-constant but the
            // gain oscillates on the sidelobe scale.
            for (frac, sw) in [(0.0, 1.0 / 6.0), (0.5, 4.0 / 6.0), (1.0, 1.0 / 6.0)] {
                weights.push(mass * sw);
                gains.push(channel::array_gain_power(lo + frac * w, array));
            }
        }
        let mut moments = [0.0; 4];
        for (w, g) in weights.iter().zip(&gains) {
            let mut p = 1.0;
            for m in &mut moments {
                p *= g;
                *m += w * p;
            }
        }
        Self { weights, gains, moments }
    }

    /// Degenerate rule with `g ≡ 1`: the kernel of the flat-top transform.
    fn unit() -> Self {
        Self { weights: vec![1.0], gains: vec![1.0], moments: [1.0; 4] }
    }

    pub(crate) fn mean_gain(&self) -> f64 {
        self.moments[0]
    }

    pub(crate) fn mean_gain_sq(&self) -> f64 {
        self.moments[1]
    }

    /// `1 − E_Υ[1/(1 + x g)] = Σ_q w_q x g_q/(1 + x g_q)` for real `x ≥ 0`;
    /// this form has no cancellation at small `x`.
    fn complement_real(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for (w, g) in self.weights.iter().zip(&self.gains) {
            let xg = x * g;
            acc += w * xg / (1.0 + xg);
        }
        acc
    }

    fn complement_complex(&self, x: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (w, g) in self.weights.iter().zip(&self.gains) {
            let xg = x * *g;
            acc += xg / (xg + 1.0) * *w;
        }
        acc
    }
}

static GAIN_QUAD_CACHE: LazyLock<Mutex<HashMap<(usize, u64, usize), Arc<GainQuadrature>>>> =
    LazyLock::new(|| Mutex::new(HashMap::new()));

pub(crate) fn gain_quadrature(array: &ArrayConfig, cells: usize) -> Result<Arc<GainQuadrature>> {
    let key = (array.n_antennas(), array.spacing().to_bits(), cells);
    {
        let cache = GAIN_QUAD_CACHE.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(q) = cache.get(&key) {
            return Ok(Arc::clone(q));
        }
    }
    let table = channel::upsilon_table(cells)?;
    let quad = Arc::new(GainQuadrature::build(array, &table));
    let mut cache = GAIN_QUAD_CACHE.lock().unwrap_or_else(|e| e.into_inner());
    Ok(Arc::clone(cache.entry(key).or_insert(quad)))
}

/// Mean beamforming gain power `E[|G(Υ)|²]` seen by an interferer.
pub fn mean_interferer_gain(array: &ArrayConfig) -> Result<f64> {
    Ok(gain_quadrature(array, channel::DEFAULT_UPSILON_CELLS)?.mean_gain())
}

/// Tail moment `C_k(v₀) = ∫_{v₀}^∞ v^{−k} λ(v) dv` for k ≥ 1.
///
/// Power-law pieces integrate in closed form; the blockage-damped pieces go
/// through octave quadrature in the link-length variable where the decay is
/// a plain exponential.
pub(crate) fn tail_moment(scenario: &Scenario, v0: f64, k: u32) -> Result<f64> {
    debug_assert!(v0 > 0.0 && k >= 1);
    let k = k as f64;
    let mut acc = 0.0;
    match scenario.pathloss {
        PathlossConfig::Uniform { alpha } => {
            for t in &scenario.tiers {
                let coef = t.density * (2.0 * std::f64::consts::PI / alpha)
                    * t.power.powf(2.0 / alpha);
                acc += coef * v0.powf(2.0 / alpha - k) / (k - 2.0 / alpha);
            }
        }
        PathlossConfig::LosNlos { alpha1, alpha2 } => {
            for t in &scenario.tiers {
                let a_coef = std::f64::consts::PI * t.density * (2.0 / alpha1)
                    * t.power.powf(2.0 / alpha1);
                let b_coef = std::f64::consts::PI * t.density * (2.0 / alpha2)
                    * t.power.powf(2.0 / alpha2);
                let a_rate = t.blockage * t.power.powf(1.0 / alpha1);
                let b_rate = t.blockage * t.power.powf(1.0 / alpha2);
                // LOS part: A ∫ v^{2/α₁−1−k} e^{−a v^{1/α₁}} dv.
                if a_rate == 0.0 {
                    acc += a_coef * v0.powf(2.0 / alpha1 - k) / (k - 2.0 / alpha1);
                } else {
                    acc += a_coef * alpha1 * damped_power_tail(1.0 - k * alpha1, a_rate, v0.powf(1.0 / alpha1))?;
                }
                // NLOS part: B ∫ v^{2/α₂−1−k} (1 − e^{−b v^{1/α₂}}) dv.
                acc += b_coef * v0.powf(2.0 / alpha2 - k) / (k - 2.0 / alpha2);
                if b_rate > 0.0 {
                    acc -= b_coef * alpha2 * damped_power_tail(1.0 - k * alpha2, b_rate, v0.powf(1.0 / alpha2))?;
                }
            }
        }
    }
    Ok(acc)
}

/// `∫_{z₀}^∞ z^p e^{−a z} dz` with `a > 0`.
fn damped_power_tail(p: f64, a: f64, z0: f64) -> Result<f64> {
    quad::decaying_tail(&mut |z: f64| z.powf(p) * (-a * z).exp(), z0, 1e-300, 1e-10, 2000)
}

/// Split point multiplier: the log-domain quadrature covers `v ≤ SPLIT·|s|`
/// and the moment expansion finishes the rest with relative error
/// `O(SPLIT^{-4})`.
const TAIL_SPLIT: f64 = 50.0;

/// Exponent `J(s) = ∫_{γ'_n}^∞ [1 − E_Υ(...)] λ(v) dv` for complex `s` with
/// `Re s ≥ 0`, computed without caching.
pub(crate) fn exponent_direct(
    scenario: &Scenario,
    gq: &GainQuadrature,
    gamma_n: f64,
    s: Complex64,
    rel_tol: f64,
) -> Result<Complex64> {
    if s.norm() == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let split = (TAIL_SPLIT * s.norm()).max(gamma_n);
    let mut mid = Complex64::new(0.0, 0.0);
    if split > gamma_n {
        mid = quad::adaptive_c(
            &mut |t: f64| {
                let v = t.exp();
                let lam = geometry::intensity(v, scenario).expect("positive v");
                gq.complement_complex(s / v) * (lam * v)
            },
            gamma_n.ln(),
            split.ln(),
            1e-300,
            rel_tol,
            4000,
        )?;
    }
    // Σ_k (−1)^{k+1} s^k E[g^k] C_k(split)
    let mut tail = Complex64::new(0.0, 0.0);
    let mut sk = Complex64::new(1.0, 0.0);
    let mut sign = 1.0;
    for k in 1..=4u32 {
        sk *= s;
        tail += sk * (sign * gq.moments[(k - 1) as usize] * tail_moment(scenario, split, k)?);
        sign = -sign;
    }
    Ok(mid + tail)
}

/// Real-axis exponent, same scheme with the real kernel.
pub(crate) fn exponent_direct_real(
    scenario: &Scenario,
    gq: &GainQuadrature,
    gamma_n: f64,
    s: f64,
    rel_tol: f64,
) -> Result<f64> {
    if s == 0.0 {
        return Ok(0.0);
    }
    let split = (TAIL_SPLIT * s).max(gamma_n);
    let mut mid = 0.0;
    if split > gamma_n {
        mid = quad::adaptive(
            &mut |t: f64| {
                let v = t.exp();
                let lam = geometry::intensity(v, scenario).expect("positive v");
                gq.complement_real(s / v) * lam * v
            },
            gamma_n.ln(),
            split.ln(),
            1e-300,
            rel_tol,
            4000,
        )?;
    }
    let mut tail = 0.0;
    let mut sk = 1.0;
    let mut sign = 1.0;
    for k in 1..=4u32 {
        sk *= s;
        tail += sign * sk * gq.moments[(k - 1) as usize] * tail_moment(scenario, split, k)?;
        sign = -sign;
    }
    Ok(mid + tail)
}

/// Which transform: the exact gain-averaged kernel or the flat-top
/// main-lobe approximation with captured mass `c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaplaceMode {
    Exact,
    FlatTop,
}

/// Laplace transform of the interference seen past `γ'_n`, `Re s ≥ 0`.
///
/// `Exact` averages the beamforming gain over the Υ quadrature; `FlatTop`
/// replaces `|G|²` by an indicator on the main lobe, which turns the inner
/// expectation into `c·(s/v)/(1 + s/v)`.
pub fn laplace_interference(
    s: Complex64,
    gamma_n: f64,
    scenario: &Scenario,
    mode: LaplaceMode,
) -> Result<Complex64> {
    scenario.validate()?;
    if s.re < 0.0 {
        return Err(Error::Domain {
            op: "laplace_interference",
            detail: format!("Re(s) must be nonnegative, got {}", s.re),
        });
    }
    if !(gamma_n > 0.0) {
        return Err(Error::Domain {
            op: "laplace_interference",
            detail: format!("gamma_n must be positive, got {gamma_n}"),
        });
    }
    let exponent = match mode {
        LaplaceMode::Exact => {
            let gq = gain_quadrature(&scenario.array, channel::DEFAULT_UPSILON_CELLS)?;
            exponent_direct(scenario, &gq, gamma_n, s, 1e-9)?
        }
        LaplaceMode::FlatTop => {
            let c = channel::flat_top_constant(&scenario.array)?;
            exponent_direct(scenario, &GainQuadrature::unit(), gamma_n, s, 1e-9)? * c
        }
    };
    Ok((-exponent).exp())
}

// ---------------------------------------------------------------------------
// Cached evaluation on the two axes the engines use
// ---------------------------------------------------------------------------

/// Grid resolution: points per factor e in the argument.
const GRID_STEP: f64 = std::f64::consts::LN_10 / 44.0;

/// Arguments under `ASYM_FRACTION·γ'_n` use the moment series instead of the
/// grid; the two agree to ~1e−8 at the boundary.
const ASYM_FRACTION: f64 = 1e-4;

/// Exponent real part beyond which the transform is numerically zero.
const SATURATION: f64 = 55.0;

enum Lookup<const W: usize> {
    Value([f64; W]),
    Below,
    NeedsIndex(usize),
    Saturated,
}

/// Append-only uniform grid in `ln x` with Catmull-Rom interpolation.
struct LogGrid<const W: usize> {
    ln_lo: f64,
    vals: Vec<[f64; W]>,
    saturated: bool,
}

impl<const W: usize> LogGrid<W> {
    fn new(ln_lo: f64) -> Self {
        Self { ln_lo, vals: Vec::new(), saturated: false }
    }

    fn ln_at(&self, i: usize) -> f64 {
        self.ln_lo + i as f64 * GRID_STEP
    }

    fn lookup(&self, ln_x: f64) -> Lookup<W> {
        let pos = (ln_x - self.ln_lo) / GRID_STEP;
        if pos < 1.0 {
            return Lookup::Below;
        }
        let i = pos as usize;
        if i + 2 >= self.vals.len() {
            if self.saturated {
                return Lookup::Saturated;
            }
            return Lookup::NeedsIndex(i + 2);
        }
        let t = pos - i as f64;
        let mut out = [0.0; W];
        for d in 0..W {
            let (p0, p1, p2, p3) = (
                self.vals[i - 1][d],
                self.vals[i][d],
                self.vals[i + 1][d],
                self.vals[i + 2][d],
            );
            out[d] = p1
                + t * (0.5 * (p2 - p0)
                    + t * ((p0 - 2.5 * p1 + 2.0 * p2 - 0.5 * p3)
                        + t * (1.5 * (p1 - p2) + 0.5 * (p3 - p0))));
        }
        Lookup::Value(out)
    }
}

/// Per-`γ'_n` cache of the interference exponent: `ln J(s)` on the positive
/// real axis and `(ln Re J, ln Im J)(jy)` on the positive imaginary axis.
pub(crate) struct NodeCache {
    pub(crate) gamma_n: f64,
    ln_asym: f64,
    /// `C_k(γ'_n)` for k = 1..=4.
    pub(crate) tail_moments: [f64; 4],
    real: RwLock<LogGrid<1>>,
    imag: RwLock<LogGrid<2>>,
    flat: RwLock<LogGrid<1>>,
    /// Precomputed `γ'(w)` at the inner-rule abscissae `w = u·ξ_j`.
    pub(crate) inner_gammas: Vec<f64>,
}

impl NodeCache {
    pub(crate) fn new(
        scenario: &Scenario,
        gamma_n: f64,
        inner_gammas: Vec<f64>,
    ) -> Result<Self> {
        let ln_asym = (ASYM_FRACTION * gamma_n).ln();
        let mut tail_moments = [0.0; 4];
        for k in 1..=4u32 {
            tail_moments[(k - 1) as usize] = tail_moment(scenario, gamma_n, k)?;
        }
        Ok(Self {
            gamma_n,
            ln_asym,
            tail_moments,
            real: RwLock::new(LogGrid::new(ln_asym - 2.0 * GRID_STEP)),
            imag: RwLock::new(LogGrid::new(ln_asym - 2.0 * GRID_STEP)),
            flat: RwLock::new(LogGrid::new(ln_asym - 2.0 * GRID_STEP)),
            inner_gammas,
        })
    }

    /// Mean interference power past `γ'_n` per unit gain moment:
    /// `E[I] = E[g]·C₁`, `Var[I] = 2·E[g²]·C₂` (Rayleigh gives `E[|h|⁴]=2`).
    pub(crate) fn interference_mean_var(&self, gq: &GainQuadrature) -> (f64, f64) {
        (
            gq.mean_gain() * self.tail_moments[0],
            2.0 * gq.mean_gain_sq() * self.tail_moments[1],
        )
    }

    /// Series exponent for arguments below the grid: four alternating
    /// moment terms.
    fn series(&self, gq: &GainQuadrature, s: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut sk = Complex64::new(1.0, 0.0);
        let mut sign = 1.0;
        for k in 0..4 {
            sk *= s;
            acc += sk * (sign * gq.moments[k] * self.tail_moments[k]);
            sign = -sign;
        }
        acc
    }

    fn extend_real(
        &self,
        scenario: &Scenario,
        gq: &GainQuadrature,
        flat_scale: Option<f64>,
        upto: usize,
        rel_tol: f64,
    ) -> Result<()> {
        let grid = if flat_scale.is_some() { &self.flat } else { &self.real };
        let mut g = grid.write().unwrap_or_else(|e| e.into_inner());
        while g.vals.len() <= upto {
            let s = g.ln_at(g.vals.len()).exp();
            let j = exponent_direct_real(scenario, gq, self.gamma_n, s, rel_tol * 0.1)?
                * flat_scale.unwrap_or(1.0);
            g.vals.push([j.ln()]);
            if j > SATURATION {
                g.saturated = true;
                break;
            }
        }
        Ok(())
    }

    fn extend_imag(
        &self,
        scenario: &Scenario,
        gq: &GainQuadrature,
        upto: usize,
        rel_tol: f64,
    ) -> Result<()> {
        let mut g = self.imag.write().unwrap_or_else(|e| e.into_inner());
        while g.vals.len() <= upto {
            let y = g.ln_at(g.vals.len()).exp();
            let j = exponent_direct(scenario, gq, self.gamma_n, Complex64::new(0.0, y), rel_tol * 0.1)?;
            g.vals.push([j.re.ln(), j.im.ln()]);
            if j.re > SATURATION {
                g.saturated = true;
                break;
            }
        }
        Ok(())
    }

    /// `L_I(s)` for real `s ≥ 0` through the cache.
    pub(crate) fn laplace_real(
        &self,
        scenario: &Scenario,
        gq: &GainQuadrature,
        flat_scale: Option<f64>,
        s: f64,
        rel_tol: f64,
    ) -> Result<f64> {
        debug_assert!(s >= 0.0);
        if s == 0.0 {
            return Ok(1.0);
        }
        let ln_s = s.ln();
        if ln_s < self.ln_asym {
            let j = self.series(gq, Complex64::new(s, 0.0)).re * flat_scale.unwrap_or(1.0);
            return Ok((-j).exp());
        }
        let grid = if flat_scale.is_some() { &self.flat } else { &self.real };
        loop {
            let need = {
                let g = grid.read().unwrap_or_else(|e| e.into_inner());
                match g.lookup(ln_s) {
                    Lookup::Value([ln_j]) => return Ok((-(ln_j.exp())).exp()),
                    Lookup::Saturated => return Ok(0.0),
                    Lookup::Below => unreachable!("grid starts below the asymptote cut"),
                    Lookup::NeedsIndex(i) => i,
                }
            };
            self.extend_real(scenario, gq, flat_scale, need, rel_tol)?;
        }
    }

    /// `L_I(jy)` for `y ≥ 0` through the cache; negative `y` by conjugation
    /// at the caller.
    pub(crate) fn laplace_imag(
        &self,
        scenario: &Scenario,
        gq: &GainQuadrature,
        y: f64,
        rel_tol: f64,
    ) -> Result<Complex64> {
        debug_assert!(y >= 0.0);
        if y == 0.0 {
            return Ok(Complex64::new(1.0, 0.0));
        }
        let ln_y = y.ln();
        if ln_y < self.ln_asym {
            let j = self.series(gq, Complex64::new(0.0, y));
            return Ok((-j).exp());
        }
        loop {
            let need = {
                let g = self.imag.read().unwrap_or_else(|e| e.into_inner());
                match g.lookup(ln_y) {
                    Lookup::Value([ln_re, ln_im]) => {
                        let j = Complex64::new(ln_re.exp(), ln_im.exp());
                        return Ok((-j).exp());
                    }
                    Lookup::Saturated => return Ok(Complex64::new(0.0, 0.0)),
                    Lookup::Below => unreachable!("grid starts below the asymptote cut"),
                    Lookup::NeedsIndex(i) => i,
                }
            };
            self.extend_imag(scenario, gq, need, rel_tol)?;
        }
    }

    /// Smallest `y` with `Re J(jy) ≈ target`: the decay scale of `|L_I(jy)|`,
    /// used to seed inversion panel widths.
    pub(crate) fn imag_decay_scale(
        &self,
        scenario: &Scenario,
        gq: &GainQuadrature,
        target: f64,
        rel_tol: f64,
    ) -> Result<f64> {
        let mut lo = (self.ln_asym + GRID_STEP).exp();
        let mut hi = lo;
        let re_j = |me: &Self, y: f64| -> Result<f64> {
            Ok(-me.laplace_imag(scenario, gq, y, rel_tol)?.norm().max(1e-300).ln())
        };
        let mut steps = 0;
        while re_j(self, hi)? < target {
            hi *= 8.0;
            steps += 1;
            if steps > 200 {
                return Err(Error::NonConvergence {
                    op: "imag_decay_scale",
                    detail: "interference transform never decays".into(),
                });
            }
        }
        while re_j(self, lo)? > target && lo > 1e-280 {
            lo /= 8.0;
        }
        for _ in 0..60 {
            let mid = (lo * hi).sqrt();
            if re_j(self, mid)? < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((lo * hi).sqrt())
    }
}
