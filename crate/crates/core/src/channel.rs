//! Antenna-array gain kernel, the directional-cosine-difference density, the
//! flat-top main-lobe mass, and the small-scale fading samplers.
//!
//! A uniform linear array with `N` elements at normalized spacing `Δ` steered
//! by a directional-cosine difference `y` has the complex gain
//!
//! ```text
//! G(y) = e^{jπΔ(N-1)y} · sin(πΔNy) / (N sin(πΔy)),   |G(y)| ≤ 1,
//! ```
//!
//! with removable singularities at the grating lobes `y = k/Δ`. Interferer
//! beams point at independent uniform angles, so the gain argument is
//! `Υ = cos φ − cos θ` with `φ, θ ~ U[−π, π]`: the difference of two arcsine
//! variables, supported on `[−2, 2]`, log-divergent at 0 and flat near the
//! edges (the density limit at `±2∓` is `1/2π`, the value at `±2` itself 0).

use std::collections::HashMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::{Arc, LazyLock, Mutex};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::quad;
use crate::{Error, Result};

/// Uniform linear transmit array: element count and normalized spacing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayConfig {
    n_antennas: usize,
    spacing: f64,
}

impl ArrayConfig {
    /// Standard half-wavelength element spacing.
    pub const HALF_WAVELENGTH: f64 = 0.5;

    pub fn new(n_antennas: usize, spacing: f64) -> Result<Self> {
        if n_antennas < 1 {
            return Err(Error::InvalidScenario("array needs at least one antenna".into()));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::InvalidScenario(format!(
                "antenna spacing must be a positive real, got {spacing}"
            )));
        }
        Ok(Self { n_antennas, spacing })
    }

    /// Half-wavelength array with `n_antennas` elements.
    pub fn half_wavelength(n_antennas: usize) -> Result<Self> {
        Self::new(n_antennas, Self::HALF_WAVELENGTH)
    }

    pub fn n_antennas(&self) -> usize {
        self.n_antennas
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Normalized array length `L = N·Δ`; the flat-top main lobe spans
    /// `[−1/L, +1/L]` in directional-cosine difference.
    pub fn array_length(&self) -> f64 {
        self.n_antennas as f64 * self.spacing
    }
}

/// Small-scale fading on the cooperating links. Interfering links are always
/// Rayleigh regardless of this choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FadingModel {
    /// Rich scattering: circularly-symmetric complex normal, unit mean power.
    Rayleigh,
    /// Nakagami-m amplitude (|h|² gamma with shape `m`, unit mean), uniform
    /// phase. `m = 1` coincides with Rayleigh power.
    Nakagami { m: u32 },
    /// Fully deterministic gain `h = 1`: the cooperating amplitudes add
    /// coherently, matching the deterministic-signal Laplace transform.
    NoFading,
}

impl FadingModel {
    pub fn nakagami(m: u32) -> Result<Self> {
        if m < 1 {
            return Err(Error::InvalidScenario("Nakagami shape m must be >= 1".into()));
        }
        Ok(FadingModel::Nakagami { m })
    }
}

/// Threshold below which `sin(πΔy)` is treated as a removable singularity
/// and the gain is evaluated through its L'Hôpital limit.
const SINGULAR_SIN_EPS: f64 = 1e-9;

/// Complex beamforming gain of a ULA at directional-cosine difference `y`.
///
/// `|array_gain(y)| ≤ 1` for all real `y`, with equality at the grating
/// lobes `y = k/Δ` where both sines vanish and the limit has unit magnitude.
pub fn array_gain(y: f64, cfg: &ArrayConfig) -> Complex64 {
    let n = cfg.n_antennas as f64;
    let d = cfg.spacing;
    let denom = (PI * d * y).sin();
    let ratio = if denom.abs() < SINGULAR_SIN_EPS {
        // Grating lobe: sin(πΔNy)/(N sin(πΔy)) -> cos(πΔNy)/cos(πΔy).
        (PI * d * n * y).cos() / (PI * d * y).cos()
    } else {
        (PI * d * n * y).sin() / (n * denom)
    };
    Complex64::new(0.0, PI * d * (n - 1.0) * y).exp() * ratio
}

/// Squared gain magnitude; the quantity the interference statistics use.
pub fn array_gain_power(y: f64, cfg: &ArrayConfig) -> f64 {
    let n = cfg.n_antennas as f64;
    let d = cfg.spacing;
    let denom = (PI * d * y).sin();
    let ratio = if denom.abs() < SINGULAR_SIN_EPS {
        (PI * d * n * y).cos() / (PI * d * y).cos()
    } else {
        (PI * d * n * y).sin() / (n * denom)
    };
    ratio * ratio
}

/// Transformed integrand of the arcsine-convolution density: after
/// `ω = −1 + (2−ε) sin²θ` both inverse-square-root endpoint factors cancel,
/// leaving a bounded smooth integrand on `[0, π/2]` for `ε ∈ (0, 2)`.
fn upsilon_integrand(theta: f64, eps: f64) -> f64 {
    let s2 = theta.sin().powi(2);
    let a = 2.0 - (2.0 - eps) * s2;
    let b = eps + (2.0 - eps) * s2;
    1.0 / (a * b).sqrt()
}

/// Below this point the density follows its logarithmic asymptote to machine
/// precision and the quadrature would fight f64 cancellation in `2‑(2‑ε)`.
const UPSILON_ASYMPTOTE_EPS: f64 = 1e-6;

/// Density value for `ε ∈ (0, 2)` without the domain bookkeeping. The inner
/// integrand is positive with inverse-square-root shoulders near both ends
/// for small `ε`, so the tolerance is purely relative; under
/// [`UPSILON_ASYMPTOTE_EPS`] the closed logarithmic asymptote
/// `ln(8/ε)/π²` takes over (relative error `O(ε² ln ε)`).
fn f_upsilon_inner(e: f64) -> f64 {
    if e < UPSILON_ASYMPTOTE_EPS {
        return (8.0 / e).ln() / (PI * PI);
    }
    let v = quad::adaptive(&mut |t| upsilon_integrand(t, e), 0.0, PI / 2.0, 0.0, 1e-11, 20_000)
        .expect("upsilon inner quadrature");
    2.0 / (PI * PI) * v
}

/// Probability density of `Υ = cos φ − cos θ` at `ε`.
///
/// Diverges logarithmically at `ε = 0` (returns `+∞` there); zero exactly at
/// `ε = ±2` where the convolution interval degenerates to a point. Errors
/// outside `[−2, 2]`.
pub fn f_upsilon(eps: f64) -> Result<f64> {
    if !eps.is_finite() || eps.abs() > 2.0 {
        return Err(Error::Domain {
            op: "f_upsilon",
            detail: format!("|eps| must be <= 2, got {eps}"),
        });
    }
    let e = eps.abs();
    if e == 2.0 {
        return Ok(0.0);
    }
    if e == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(f_upsilon_inner(e))
}

/// Υ-mass of an interval `[a, b] ⊆ [0, 2]`. The substitution `ε = x²` turns
/// the `ln ε` divergence at the origin into the integrable `x ln x`, so one
/// adaptive pass covers every cell including the ones touching 0.
fn upsilon_mass_nonneg(a: f64, b: f64) -> Result<f64> {
    debug_assert!(0.0 <= a && a <= b && b <= 2.0);
    if a == b {
        return Ok(0.0);
    }
    quad::adaptive(
        &mut |x| {
            let e = x * x;
            // The rule is open, so the endpoints 0 and 2 are never hit.
            2.0 * x * f_upsilon_inner(e.clamp(f64::MIN_POSITIVE, 2.0 - f64::EPSILON))
        },
        a.sqrt(),
        b.sqrt(),
        1e-13,
        1e-9,
        20_000,
    )
}

/// Υ-mass of an arbitrary interval within `[−2, 2]`, split at the origin and
/// folded by symmetry.
pub fn upsilon_mass(a: f64, b: f64) -> Result<f64> {
    debug_assert!(a <= b);
    let (a, b) = (a.max(-2.0), b.min(2.0));
    if a >= 0.0 {
        upsilon_mass_nonneg(a, b)
    } else if b <= 0.0 {
        upsilon_mass_nonneg(-b, -a)
    } else {
        Ok(upsilon_mass_nonneg(0.0, -a)? + upsilon_mass_nonneg(0.0, b)?)
    }
}

/// Piecewise-constant tabulation of the Υ density over `[−2, 2]`.
///
/// Cell values are cell-averaged masses divided by the cell width, so the
/// `ε = 0` singularity is absorbed into finite cell masses. The table is
/// scenario-independent; [`upsilon_table`] caches it per cell count.
#[derive(Debug, Clone)]
pub struct UpsilonTable {
    cells: usize,
    width: f64,
    masses: Vec<f64>,
}

impl UpsilonTable {
    fn build(cells: usize) -> Result<Self> {
        let width = 4.0 / cells as f64;
        let mut masses = vec![0.0; cells];
        // Compute the upper half and mirror; cells straddling 0 (odd counts)
        // are split at the singularity.
        for i in 0..cells {
            let a = -2.0 + i as f64 * width;
            let b = a + width;
            if b <= 0.0 {
                continue;
            }
            masses[i] = upsilon_mass(a.max(0.0).min(b), b)?;
            if a < 0.0 {
                masses[i] += upsilon_mass(a, 0.0f64.min(b))?;
            }
        }
        for i in 0..cells / 2 {
            masses[i] = masses[cells - 1 - i];
        }
        Ok(Self { cells, width, masses })
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn cell_width(&self) -> f64 {
        self.width
    }

    /// Lower edge of cell `i`.
    pub fn cell_lo(&self, i: usize) -> f64 {
        -2.0 + i as f64 * self.width
    }

    /// Probability mass of cell `i`.
    pub fn mass(&self, i: usize) -> f64 {
        self.masses[i]
    }

    /// Cell-averaged density of cell `i`.
    pub fn density(&self, i: usize) -> f64 {
        self.masses[i] / self.width
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// CDF of the tabulated (piecewise-constant) density.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= -2.0 {
            return 0.0;
        }
        if x >= 2.0 {
            return 1.0;
        }
        let pos = (x + 2.0) / self.width;
        let full = pos.floor() as usize;
        let frac = pos - full as f64;
        let mut acc = 0.0;
        for i in 0..full.min(self.cells) {
            acc += self.masses[i];
        }
        if full < self.cells {
            acc += self.masses[full] * frac;
        }
        acc
    }
}

static TABLE_CACHE: LazyLock<Mutex<HashMap<usize, Arc<UpsilonTable>>>> =
    LazyLock::new(|| Mutex::new(HashMap::new()));

/// Default resolution of the Υ table used by the analytic engine.
pub const DEFAULT_UPSILON_CELLS: usize = 512;

/// Cell-averaged Υ density table with `grid_cells` cells, computed once per
/// resolution and shared.
pub fn upsilon_table(grid_cells: usize) -> Result<Arc<UpsilonTable>> {
    if grid_cells < 16 {
        return Err(Error::Domain {
            op: "upsilon_table",
            detail: format!("need at least 16 cells, got {grid_cells}"),
        });
    }
    let mut cache = TABLE_CACHE.lock().unwrap_or_else(|e| e.into_inner());
    if let Some(t) = cache.get(&grid_cells) {
        return Ok(Arc::clone(t));
    }
    let table = Arc::new(UpsilonTable::build(grid_cells)?);
    cache.insert(grid_cells, Arc::clone(&table));
    Ok(table)
}

/// Mass of the Υ density inside the flat-top main lobe `[−1/L, +1/L]`.
///
/// Equals 1 whenever the lobe covers the whole support, i.e. `L ≤ 1/2`; this
/// is the regime in which the flat-top Laplace transform reduces to the
/// omnidirectional prior-work transform.
pub fn flat_top_constant(cfg: &ArrayConfig) -> Result<f64> {
    let half_lobe = 1.0 / cfg.array_length();
    if half_lobe >= 2.0 {
        return Ok(1.0);
    }
    Ok((2.0 * upsilon_mass_nonneg(0.0, half_lobe)?).min(1.0))
}

/// One draw of `Υ = cos φ − cos θ` with independent uniform angles.
pub fn sample_upsilon<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let phi = rng.random_range(-PI..PI);
    let theta = rng.random_range(-PI..PI);
    phi.cos() - theta.cos()
}

/// One draw of the complex channel gain `h` with `E[|h|²] = 1`.
pub fn sample_fading<R: Rng + ?Sized>(model: FadingModel, rng: &mut R) -> Complex64 {
    match model {
        FadingModel::Rayleigh => {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
        }
        FadingModel::Nakagami { m } => {
            let shape = m as f64;
            // |h|² ~ Gamma(m, 1/m): unit mean power for every m.
            let power = Gamma::new(shape, 1.0 / shape)
                .expect("validated shape")
                .sample(rng);
            let phase = rng.random_range(-PI..PI);
            Complex64::from_polar(power.sqrt(), phase)
        }
        FadingModel::NoFading => Complex64::new(1.0, 0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn cfg(n: usize) -> ArrayConfig {
        ArrayConfig::half_wavelength(n).unwrap()
    }

    #[test]
    fn gain_main_lobe_peak_is_one() {
        let g = array_gain(0.0, &cfg(16));
        assert!((g - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn gain_analytic_null() {
        // y=1, N=2, Δ=1/2: numerator sin(π) = 0 while the denominator stays
        // away from zero.
        let g = array_gain(1.0, &cfg(2));
        assert!(g.norm() < 1e-12);
    }

    #[test]
    fn gain_hand_evaluated_magnitude() {
        let g = array_gain(0.25, &cfg(4));
        let expected = (PI / 2.0).sin() / (4.0 * (PI / 8.0).sin());
        assert!((g.norm() - expected).abs() < 1e-12);
        assert!((expected - 0.6533).abs() < 1e-4);
    }

    #[test]
    fn gain_grating_lobe_limit() {
        // y=2, Δ=1/2: both sines vanish; the L'Hôpital limit has magnitude 1.
        let g = array_gain(2.0, &cfg(4));
        assert!((g.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gain_magnitude_bounded_and_periodic() {
        let c = cfg(8);
        let mut y = -4.0;
        while y <= 4.0 {
            let g = array_gain(y, &c).norm();
            assert!(g <= 1.0 + 1e-12, "magnitude {g} exceeds 1 at y={y}");
            // |G| has period 1/Δ = 2.
            let g2 = array_gain(y + 2.0, &c).norm();
            assert!((g - g2).abs() < 1e-9, "periodicity broken at y={y}");
            y += 0.0173;
        }
    }

    #[test]
    fn density_domain_and_endpoints() {
        assert!(f_upsilon(2.3).is_err());
        assert_eq!(f_upsilon(2.0).unwrap(), 0.0);
        assert_eq!(f_upsilon(-2.0).unwrap(), 0.0);
        assert!(f_upsilon(0.0).unwrap().is_infinite());
    }

    #[test]
    fn density_is_even() {
        for &e in &[0.13, 0.5, 1.0, 1.7, 1.99] {
            let lhs = f_upsilon(e).unwrap();
            let rhs = f_upsilon(-e).unwrap();
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    /// Complete elliptic integral K parameterized by the complementary
    /// modulus k' (here k' = ε/2 exactly, dodging the 1−k² cancellation).
    fn elliptic_k_comp(kp: f64) -> f64 {
        let mut a = 1.0f64;
        let mut b = kp;
        while (a - b).abs() > 1e-15 * a {
            let (na, nb) = (0.5 * (a + b), (a * b).sqrt());
            a = na;
            b = nb;
        }
        PI / (2.0 * a)
    }

    #[test]
    fn density_matches_elliptic_identity() {
        // The difference of two arcsine variables has density K(√(1-ε²/4))/π²,
        // an independent closed-form oracle for the convolution quadrature.
        for &e in &[1e-5, 1e-3, 0.05, 0.3, 0.7, 1.0, 1.4, 1.9, 1.999] {
            let quadrature = f_upsilon(e).unwrap();
            let oracle = elliptic_k_comp(e / 2.0) / (PI * PI);
            assert!(
                (quadrature - oracle).abs() < 1e-8 * oracle,
                "e={e}: {quadrature} vs {oracle}"
            );
        }
    }

    #[test]
    fn density_edge_limit_is_half_inv_pi() {
        // The convolution of the two arcsine edge singularities leaves a
        // finite density limit 1/2π at the support boundary.
        let f = f_upsilon(1.999_999).unwrap();
        assert!((f - 1.0 / (2.0 * PI)).abs() < 1e-4, "f={f}");
    }

    #[test]
    fn table_normalizes_and_mirrors() {
        let t = upsilon_table(DEFAULT_UPSILON_CELLS).unwrap();
        assert!((t.total_mass() - 1.0).abs() < 1e-6, "mass={}", t.total_mass());
        for i in 0..t.cells() {
            assert_eq!(t.mass(i), t.mass(t.cells() - 1 - i), "mirror cell {i}");
        }
    }

    #[test]
    fn table_rejects_tiny_grids() {
        assert!(upsilon_table(8).is_err());
        assert!(upsilon_table(16).is_ok());
    }

    #[test]
    fn table_cells_match_elliptic_oracle() {
        // Deterministic per-cell check of the default table: every cell mass
        // against adaptive quadrature of the closed-form density.
        let t = upsilon_table(DEFAULT_UPSILON_CELLS).unwrap();
        for i in t.cells() / 2..t.cells() {
            let (a, b) = (t.cell_lo(i), t.cell_lo(i) + t.cell_width());
            let oracle = quad::adaptive(
                &mut |e: f64| elliptic_k_comp(e / 2.0) / (PI * PI),
                a.max(1e-13),
                b.min(2.0),
                1e-13,
                1e-10,
                20_000,
            )
            .unwrap();
            assert!(
                (t.mass(i) - oracle).abs() < 1e-8 * oracle.max(1e-6),
                "cell {i}: {} vs {}",
                t.mass(i),
                oracle
            );
        }
    }

    #[test]
    fn table_matches_monte_carlo_histogram() {
        // 64 cells keep the familywise 3σ criterion statistically meaningful.
        let t = upsilon_table(64).unwrap();
        let n = 10_000_000usize;
        let mut rng = ChaCha12Rng::seed_from_u64(0x5eed_0001);
        let mut counts = vec![0u64; t.cells()];
        for _ in 0..n {
            let u = sample_upsilon(&mut rng);
            let idx = (((u + 2.0) / t.cell_width()) as usize).min(t.cells() - 1);
            counts[idx] += 1;
        }
        let nf = n as f64;
        for i in 0..t.cells() {
            let p = t.mass(i);
            let sigma = (nf * p * (1.0 - p)).sqrt().max(1.0);
            let dev = (counts[i] as f64 - nf * p).abs();
            assert!(
                dev <= 3.0 * sigma,
                "cell {i}: count {} vs expected {:.1} ({}σ)",
                counts[i],
                nf * p,
                dev / sigma
            );
        }
    }

    #[test]
    fn density_matches_monte_carlo_at_one() {
        let n = 10_000_000usize;
        let mut rng = ChaCha12Rng::seed_from_u64(0x5eed_0002);
        // Histogram cell [0.98, 1.02] around ε = 1.
        let (lo, hi) = (0.98, 1.02);
        let mut hits = 0u64;
        for _ in 0..n {
            let u = sample_upsilon(&mut rng);
            if u >= lo && u < hi {
                hits += 1;
            }
        }
        let empirical = hits as f64 / n as f64 / (hi - lo);
        let analytic = f_upsilon(1.0).unwrap();
        assert!(
            (empirical - analytic).abs() < 0.02 * analytic,
            "empirical {empirical} vs analytic {analytic}"
        );
    }

    #[test]
    fn flat_top_full_support_window() {
        // L = N·Δ ≤ 1/2 puts the whole support inside the main lobe.
        let c = ArrayConfig::new(1, 0.5).unwrap();
        assert_eq!(flat_top_constant(&c).unwrap(), 1.0);
    }

    #[test]
    fn flat_top_shrinks_with_array_length() {
        let c16 = flat_top_constant(&cfg(16)).unwrap();
        let c64 = flat_top_constant(&cfg(64)).unwrap();
        assert!(c64 < c16, "c64={c64} c16={c16}");
        assert!(c16 > 0.0 && c16 < 1.0);
    }

    #[test]
    fn flat_top_matches_monte_carlo() {
        let n = 10_000_000usize;
        let mut rng = ChaCha12Rng::seed_from_u64(0x5eed_0003);
        // N=16, Δ=1/2 -> L=8, lobe half-width 1/8.
        let mut hits = 0u64;
        for _ in 0..n {
            if sample_upsilon(&mut rng).abs() <= 0.125 {
                hits += 1;
            }
        }
        let empirical = hits as f64 / n as f64;
        let c = flat_top_constant(&cfg(16)).unwrap();
        assert!((empirical - c).abs() < 1e-3, "empirical {empirical} vs c {c}");
    }

    #[test]
    fn upsilon_sampler_range_and_mean() {
        let mut rng = ChaCha12Rng::seed_from_u64(0x5eed_0004);
        let n = 1_000_000usize;
        let mut sum = 0.0;
        for _ in 0..n {
            let u = sample_upsilon(&mut rng);
            assert!((-2.0..=2.0).contains(&u));
            sum += u;
        }
        assert!((sum / n as f64).abs() < 0.005);
    }

    #[test]
    fn upsilon_sampler_matches_quadrature_cdf() {
        let t = upsilon_table(DEFAULT_UPSILON_CELLS).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(0x5eed_0005);
        let n = 1_000_000usize;
        let mut xs: Vec<f64> = (0..n).map(|_| sample_upsilon(&mut rng)).collect();
        xs.sort_by(f64::total_cmp);
        let mut ks = 0.0f64;
        for (i, x) in xs.iter().enumerate() {
            let f = t.cdf(*x);
            let lo = i as f64 / n as f64;
            let hi = (i + 1) as f64 / n as f64;
            ks = ks.max((f - lo).abs()).max((f - hi).abs());
        }
        assert!(ks < 0.002, "KS distance {ks}");
    }

    #[test]
    fn fading_unit_mean_power_all_models() {
        for model in [
            FadingModel::Rayleigh,
            FadingModel::Nakagami { m: 3 },
            FadingModel::NoFading,
        ] {
            let mut rng = ChaCha12Rng::seed_from_u64(0x5eed_0006);
            let n = 1_000_000usize;
            let mut acc = 0.0;
            for _ in 0..n {
                acc += sample_fading(model, &mut rng).norm_sqr();
            }
            let mean = acc / n as f64;
            assert!((mean - 1.0).abs() < 0.01, "{model:?}: mean power {mean}");
        }
    }

    #[test]
    fn no_fading_is_exactly_one() {
        let mut rng = ChaCha12Rng::seed_from_u64(0x5eed_0007);
        for _ in 0..100 {
            assert_eq!(sample_fading(FadingModel::NoFading, &mut rng), Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn nakagami_one_power_is_exponential() {
        let mut rng = ChaCha12Rng::seed_from_u64(0x5eed_0008);
        let n = 1_000_000usize;
        let mut xs: Vec<f64> = (0..n)
            .map(|_| sample_fading(FadingModel::Nakagami { m: 1 }, &mut rng).norm_sqr())
            .collect();
        xs.sort_by(f64::total_cmp);
        let mut ks = 0.0f64;
        for (i, x) in xs.iter().enumerate() {
            let f = 1.0 - (-x).exp();
            let lo = i as f64 / n as f64;
            let hi = (i + 1) as f64 / n as f64;
            ks = ks.max((f - lo).abs()).max((f - hi).abs());
        }
        assert!(ks < 0.002, "KS distance {ks}");
    }

    #[test]
    fn samplers_are_seed_deterministic() {
        let draw = |seed: u64| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            (0..32).map(|_| sample_upsilon(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(42), draw(42));
        assert_ne!(draw(42), draw(43));
    }
}

