//! Tier and point-process machinery.
//!
//! Each tier is a planar homogeneous PPP of base stations. The Mapping
//! Theorem turns the union of tiers into a one-dimensional point process of
//! *normalized pathlosses* `v = r^α / P` with computable intensity `λ(v)`
//! and intensity measure `Λ([0, v])`; the `n` cooperating base stations are
//! the `n` smallest mapped points and their joint density is
//! `Π λ(γ'_i) · exp(−Λ(γ'_n))`.
//!
//! With per-tier blockage a link of length `r` is line-of-sight with
//! probability `e^{−β r}`, carrying exponent `α₁`, otherwise `α₂`; the
//! mapped intensity splits into an exponentially damped LOS part and a
//! complementary NLOS part.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::channel::{ArrayConfig, FadingModel};
use crate::{Error, Result};

/// One network tier: a homogeneous PPP of identical base stations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TierConfig {
    /// Base stations per square meter.
    pub density: f64,
    /// Transmit power in watts.
    pub power: f64,
    /// Blockage constant in 1/m; `1/blockage` is the average LOS range and
    /// 0 disables blockage for the tier.
    pub blockage: f64,
}

impl TierConfig {
    pub fn new(density: f64, power: f64, blockage: f64) -> Result<Self> {
        let t = Self { density, power, blockage };
        t.validate()?;
        Ok(t)
    }

    /// Tier whose density corresponds to one base station per disk of the
    /// given radius: `λ = 1/(π r²)`, the convention the scenario tables use.
    pub fn from_cell_radius(radius_m: f64, power: f64, blockage: f64) -> Result<Self> {
        if !(radius_m > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "cell radius must be positive, got {radius_m}"
            )));
        }
        Self::new(1.0 / (radius_m * radius_m * std::f64::consts::PI), power, blockage)
    }

    fn validate(&self) -> Result<()> {
        if !(self.density > 0.0) || !self.density.is_finite() {
            return Err(Error::InvalidScenario(format!(
                "tier density must be positive, got {}",
                self.density
            )));
        }
        if !(self.power > 0.0) || !self.power.is_finite() {
            return Err(Error::InvalidScenario(format!(
                "tier power must be positive, got {}",
                self.power
            )));
        }
        if self.blockage < 0.0 || !self.blockage.is_finite() {
            return Err(Error::InvalidScenario(format!(
                "tier blockage must be nonnegative, got {}",
                self.blockage
            )));
        }
        Ok(())
    }

    /// Radius of the disk holding one base station on average.
    pub fn nominal_radius(&self) -> f64 {
        1.0 / (std::f64::consts::PI * self.density).sqrt()
    }
}

/// Pathloss law. `Uniform` applies one exponent to every link; `LosNlos`
/// draws per-link LOS/NLOS states with exponents `alpha1`/`alpha2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathlossConfig {
    Uniform { alpha: f64 },
    LosNlos { alpha1: f64, alpha2: f64 },
}

/// Receiver noise: thermal floor plus noise figure over the bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
}

/// Noise power `σ²` in watts: `−174 dBm/Hz + 10·log₁₀(BW) + NF`.
pub fn noise_power(cfg: &NoiseConfig) -> f64 {
    let dbm = -174.0 + 10.0 * cfg.bandwidth_hz.log10() + cfg.noise_figure_db;
    10f64.powf((dbm - 30.0) / 10.0)
}

/// A complete experiment description.
///
/// Interfering links always carry Rayleigh fading; the `fading` field only
/// controls the cooperating links.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub tiers: Vec<TierConfig>,
    pub pathloss: PathlossConfig,
    pub array: ArrayConfig,
    pub noise: NoiseConfig,
    pub fading: FadingModel,
    /// Number of cooperating base stations n.
    pub coop_n: usize,
}

impl Scenario {
    /// Check every model invariant. Engines call this once on entry.
    ///
    /// Exponent rules: the no-blockage interference integral diverges for
    /// `α ≤ 2`, so `Uniform` requires `α > 2` and the NLOS exponent must
    /// satisfy `α₂ > 2`. The LOS exponent may equal 2 (the free-space value
    /// used by the mmWave measurement literature) because the blockage
    /// damping `e^{−β r}` keeps its integrals finite — unless a tier has
    /// `β = 0`, in which case its LOS part is undamped and `α₁ > 2` is
    /// required as well.
    pub fn validate(&self) -> Result<()> {
        if self.tiers.is_empty() {
            return Err(Error::InvalidScenario("at least one tier is required".into()));
        }
        for t in &self.tiers {
            t.validate()?;
        }
        if self.coop_n < 1 {
            return Err(Error::InvalidScenario("coop_n must be at least 1".into()));
        }
        if !(self.noise.bandwidth_hz > 0.0) {
            return Err(Error::InvalidScenario("bandwidth must be positive".into()));
        }
        if let FadingModel::Nakagami { m } = self.fading {
            if m < 1 {
                return Err(Error::InvalidScenario("Nakagami shape m must be >= 1".into()));
            }
        }
        match self.pathloss {
            PathlossConfig::Uniform { alpha } => {
                if !(alpha > 2.0) {
                    return Err(Error::InvalidScenario(format!(
                        "uniform pathloss exponent must exceed 2, got {alpha}"
                    )));
                }
                if self.tiers.iter().any(|t| t.blockage != 0.0) {
                    return Err(Error::InvalidScenario(
                        "uniform pathloss mode requires zero blockage on every tier".into(),
                    ));
                }
            }
            PathlossConfig::LosNlos { alpha1, alpha2 } => {
                if alpha1 > alpha2 {
                    return Err(Error::InvalidScenario(format!(
                        "LOS exponent {alpha1} must not exceed NLOS exponent {alpha2}"
                    )));
                }
                if !(alpha2 > 2.0) {
                    return Err(Error::InvalidScenario(format!(
                        "NLOS pathloss exponent must exceed 2, got {alpha2}"
                    )));
                }
                if !(alpha1 >= 2.0) {
                    return Err(Error::InvalidScenario(format!(
                        "LOS pathloss exponent must be at least 2, got {alpha1}"
                    )));
                }
                if alpha1 <= 2.0 && self.tiers.iter().any(|t| t.blockage == 0.0) {
                    return Err(Error::InvalidScenario(
                        "alpha1 = 2 with an unblocked tier makes the LOS intensity non-integrable"
                            .into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Noise power divided by the array size: the effective noise floor of
    /// the beamformed SINR.
    pub fn noise_over_nt(&self) -> f64 {
        noise_power(&self.noise) / self.array.n_antennas() as f64
    }

    /// Largest nominal tier radius, the deployment's natural length scale.
    pub fn nominal_radius(&self) -> f64 {
        self.tiers
            .iter()
            .map(|t| t.nominal_radius())
            .fold(0.0, f64::max)
    }
}

/// Stable `1 − e^{−x}(1 + x)`; the naive form loses all precision for the
/// small blockage arguments the β→0 degeneracy checks exercise.
fn one_minus_exp_one_plus(x: f64) -> f64 {
    if x >= 0.5 {
        return 1.0 - (-x).exp() * (1.0 + x);
    }
    // Σ_{k≥2} (−1)^k (k−1)/k! x^k
    let mut term = x * x / 2.0; // k = 2
    let mut acc = term;
    let mut k = 3.0;
    loop {
        term *= -x * (k - 1.0) / (k * (k - 2.0));
        acc += term;
        if term.abs() < acc.abs() * 1e-17 {
            return acc;
        }
        k += 1.0;
    }
}

fn check_positive(v: f64, op: &'static str) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::Domain {
            op,
            detail: format!("normalized pathloss must be positive, got {v}"),
        });
    }
    Ok(())
}

/// Intensity `λ(v)` of the mapped normalized-pathloss process at `v`.
pub fn intensity(v: f64, scenario: &Scenario) -> Result<f64> {
    check_positive(v, "intensity")?;
    let mut acc = 0.0;
    match scenario.pathloss {
        PathlossConfig::Uniform { alpha } => {
            for t in &scenario.tiers {
                acc += t.density * (2.0 * std::f64::consts::PI / alpha)
                    * t.power.powf(2.0 / alpha)
                    * v.powf(2.0 / alpha - 1.0);
            }
        }
        PathlossConfig::LosNlos { alpha1, alpha2 } => {
            for t in &scenario.tiers {
                let a_k = std::f64::consts::PI * t.density * (2.0 / alpha1)
                    * t.power.powf(2.0 / alpha1);
                let b_k = std::f64::consts::PI * t.density * (2.0 / alpha2)
                    * t.power.powf(2.0 / alpha2);
                let los_rate = t.blockage * t.power.powf(1.0 / alpha1);
                let nlos_rate = t.blockage * t.power.powf(1.0 / alpha2);
                acc += a_k * v.powf(2.0 / alpha1 - 1.0) * (-los_rate * v.powf(1.0 / alpha1)).exp();
                acc += b_k * v.powf(2.0 / alpha2 - 1.0)
                    * (-(-nlos_rate * v.powf(1.0 / alpha2)).exp_m1());
            }
        }
    }
    Ok(acc)
}

/// Intensity measure `Λ([0, v])`: the expected number of mapped points below
/// `v`; `e^{−Λ}` is the void probability driving the order statistics.
pub fn intensity_measure(v: f64, scenario: &Scenario) -> Result<f64> {
    check_positive(v, "intensity_measure")?;
    let mut acc = 0.0;
    match scenario.pathloss {
        PathlossConfig::Uniform { alpha } => {
            for t in &scenario.tiers {
                acc += std::f64::consts::PI * t.density * (t.power * v).powf(2.0 / alpha);
            }
        }
        PathlossConfig::LosNlos { alpha1, alpha2 } => {
            for t in &scenario.tiers {
                let pi_l = std::f64::consts::PI * t.density;
                let r_los = (v * t.power).powf(1.0 / alpha1);
                let r_nlos = (v * t.power).powf(1.0 / alpha2);
                if t.blockage == 0.0 {
                    // β→0: everything is LOS.
                    acc += pi_l * r_los * r_los;
                } else {
                    let c = 2.0 * pi_l / (t.blockage * t.blockage);
                    acc += c * one_minus_exp_one_plus(t.blockage * r_los);
                    acc += pi_l * r_nlos * r_nlos;
                    acc -= c * one_minus_exp_one_plus(t.blockage * r_nlos);
                }
            }
        }
    }
    Ok(acc)
}

/// Inverse of the intensity measure: the `v` with `Λ([0, v]) = target`.
///
/// Closed form in uniform mode; bracketing bisection with a Newton polish in
/// blockage mode.
pub fn inverse_intensity_measure(target: f64, scenario: &Scenario) -> Result<f64> {
    if !(target >= 0.0) || !target.is_finite() {
        return Err(Error::Domain {
            op: "inverse_intensity_measure",
            detail: format!("target must be nonnegative, got {target}"),
        });
    }
    if target == 0.0 {
        return Ok(0.0);
    }
    if let PathlossConfig::Uniform { alpha } = scenario.pathloss {
        let c: f64 = scenario
            .tiers
            .iter()
            .map(|t| std::f64::consts::PI * t.density * t.power.powf(2.0 / alpha))
            .sum();
        return Ok((target / c).powf(alpha / 2.0));
    }

    // Blockage mode: Λ is strictly increasing and continuous. Bracket by
    // doubling from a pure-NLOS guess, then bisect.
    let mut hi = {
        let PathlossConfig::LosNlos { alpha2, .. } = scenario.pathloss else { unreachable!() };
        let c: f64 = scenario
            .tiers
            .iter()
            .map(|t| std::f64::consts::PI * t.density * t.power.powf(2.0 / alpha2))
            .sum();
        (target / c).powf(alpha2 / 2.0).max(1e-12)
    };
    let mut lo = hi;
    while intensity_measure(hi, scenario)? < target {
        hi *= 4.0;
        if !hi.is_finite() {
            return Err(Error::NonConvergence {
                op: "inverse_intensity_measure",
                detail: format!("no upper bracket for target {target}"),
            });
        }
    }
    while intensity_measure(lo, scenario)? > target {
        lo /= 4.0;
        if lo < f64::MIN_POSITIVE {
            return Ok(0.0);
        }
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if intensity_measure(mid, scenario)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Ascending normalized pathlosses of the `n` cooperating base stations.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedPathloss {
    values: Vec<f64>,
}

impl OrderedPathloss {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain {
                op: "OrderedPathloss",
                detail: "need at least one pathloss".into(),
            });
        }
        for w in values.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::Domain {
                    op: "OrderedPathloss",
                    detail: format!("values must be strictly ascending, got {:?}", w),
                });
            }
        }
        if !(values[0] > 0.0) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain {
                op: "OrderedPathloss",
                detail: "values must be positive finite reals".into(),
            });
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// Largest (weakest) cooperating pathloss γ'_n.
    pub fn last(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// `Σ 1/γ'_i`: the mean of the conditional Rayleigh signal power.
    pub fn sum_inverse(&self) -> f64 {
        self.values.iter().map(|v| 1.0 / v).sum()
    }

    /// `(Σ γ'_i^{−1/2})²`: the deterministic coherent signal power.
    pub fn coherent_power(&self) -> f64 {
        self.values.iter().map(|v| 1.0 / v.sqrt()).sum::<f64>().powi(2)
    }
}

/// Joint density of the `n` smallest normalized pathlosses,
/// `Π λ(γ'_i) · exp(−Λ(γ'_n))`.
pub fn joint_pathloss_pdf(g: &OrderedPathloss, scenario: &Scenario) -> Result<f64> {
    let mut acc = (-intensity_measure(g.last(), scenario)?).exp();
    for &v in g.values() {
        acc *= intensity(v, scenario)?;
    }
    Ok(acc)
}

/// One base station of a sampled deployment, reduced to what the SINR needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathlossPoint {
    /// Normalized pathloss `r^α / P` with the exponent of the link state.
    pub pathloss: f64,
    pub tier: usize,
    pub los: bool,
}

/// One sampled deployment inside a finite window, sorted ascending by
/// normalized pathloss.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRealization {
    pub points: Vec<PathlossPoint>,
    pub window_radius: f64,
}

impl NetworkRealization {
    /// Restriction of the realization to a smaller window. Recovering the
    /// link length from the pathloss is exact because the exponent of each
    /// point's state is known.
    pub fn restrict(&self, radius: f64, scenario: &Scenario) -> NetworkRealization {
        let points = self
            .points
            .iter()
            .filter(|p| {
                let t = &scenario.tiers[p.tier];
                let alpha = link_alpha(scenario.pathloss, p.los);
                (p.pathloss * t.power).powf(1.0 / alpha) <= radius
            })
            .copied()
            .collect();
        NetworkRealization { points, window_radius: radius }
    }
}

fn link_alpha(pathloss: PathlossConfig, los: bool) -> f64 {
    match pathloss {
        PathlossConfig::Uniform { alpha } => alpha,
        PathlossConfig::LosNlos { alpha1, alpha2 } => {
            if los {
                alpha1
            } else {
                alpha2
            }
        }
    }
}

/// Sample one deployment: per tier a Poisson number of points uniform in the
/// disk of the given radius, each with an independent LOS coin `e^{−β r}`.
pub fn sample_network<R: Rng + ?Sized>(
    scenario: &Scenario,
    window_radius: f64,
    rng: &mut R,
) -> NetworkRealization {
    debug_assert!(window_radius > 0.0);
    let mut points = Vec::new();
    for (k, tier) in scenario.tiers.iter().enumerate() {
        let mean = tier.density * std::f64::consts::PI * window_radius * window_radius;
        let count = Poisson::new(mean).expect("positive mean").sample(rng) as usize;
        points.reserve(count);
        for _ in 0..count {
            let r = window_radius * rng.random::<f64>().sqrt();
            let los = tier.blockage == 0.0 || rng.random::<f64>() < (-tier.blockage * r).exp();
            let alpha = link_alpha(scenario.pathloss, los);
            points.push(PathlossPoint {
                pathloss: r.powf(alpha) / tier.power,
                tier: k,
                los,
            });
        }
    }
    points.sort_by(|a, b| a.pathloss.total_cmp(&b.pathloss));
    NetworkRealization { points, window_radius }
}

/// Default simulation window: ten nominal tier radii. Truncation beyond the
/// window is handled by the simulator's far-field mean compensation.
pub fn default_window_radius(scenario: &Scenario) -> f64 {
    10.0 * scenario.nominal_radius()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn example1_scenario() -> Scenario {
        Scenario {
            tiers: vec![
                TierConfig::from_cell_radius(150.0, 1.0, 0.0).unwrap(),
                TierConfig::from_cell_radius(50.0, 0.25, 0.0).unwrap(),
            ],
            pathloss: PathlossConfig::Uniform { alpha: 3.0 },
            array: ArrayConfig::half_wavelength(16).unwrap(),
            noise: NoiseConfig { bandwidth_hz: 1e9, noise_figure_db: 10.0 },
            fading: FadingModel::Rayleigh,
            coop_n: 2,
        }
    }

    fn blockage_scenario(beta: f64) -> Scenario {
        Scenario {
            tiers: vec![TierConfig::from_cell_radius(80.0, 1.0, beta).unwrap()],
            pathloss: PathlossConfig::LosNlos { alpha1: 2.0, alpha2: 4.0 },
            array: ArrayConfig::half_wavelength(16).unwrap(),
            noise: NoiseConfig { bandwidth_hz: 1e9, noise_figure_db: 5.0 },
            fading: FadingModel::Rayleigh,
            coop_n: 2,
        }
    }

    #[test]
    fn noise_power_formula() {
        // 1 GHz, NF 10 dB -> −74 dBm.
        let w = noise_power(&NoiseConfig { bandwidth_hz: 1e9, noise_figure_db: 10.0 });
        assert!((w - 3.981e-11).abs() < 1e-14 * 1e3, "w={w:e}");
        // 1 GHz, NF 5 dB -> −79 dBm.
        let w = noise_power(&NoiseConfig { bandwidth_hz: 1e9, noise_figure_db: 5.0 });
        assert!((w - 1.259e-11).abs() < 1e-14 * 1e3, "w={w:e}");
        // 1 Hz, NF 0: the thermal floor.
        let w = noise_power(&NoiseConfig { bandwidth_hz: 1.0, noise_figure_db: 0.0 });
        assert!((w.log10() - (-17.4 - 3.0)).abs() < 1e-12);
    }

    #[test]
    fn validation_rules() {
        let mut s = example1_scenario();
        s.validate().unwrap();
        s.coop_n = 0;
        assert!(s.validate().is_err());

        let mut s = example1_scenario();
        s.pathloss = PathlossConfig::Uniform { alpha: 2.0 };
        assert!(s.validate().is_err(), "alpha <= 2 must be rejected");

        let mut s = example1_scenario();
        s.tiers[0].blockage = 0.01;
        assert!(s.validate().is_err(), "uniform mode requires zero blockage");

        // alpha1 = 2 is fine with blockage, rejected without.
        blockage_scenario(0.006).validate().unwrap();
        let mut s = blockage_scenario(0.0);
        assert!(s.validate().is_err());
        s.pathloss = PathlossConfig::LosNlos { alpha1: 2.5, alpha2: 4.0 };
        s.validate().unwrap();

        let mut s = blockage_scenario(0.006);
        s.pathloss = PathlossConfig::LosNlos { alpha1: 4.0, alpha2: 3.0 };
        assert!(s.validate().is_err(), "alpha1 > alpha2 must be rejected");
    }

    #[test]
    fn intensity_closed_form_single_tier() {
        let mut s = example1_scenario();
        s.tiers.truncate(1);
        // λ(1) = (2π/3)(150²π)^{-1}
        let expected = 2.0 / (3.0 * 150.0 * 150.0);
        let got = intensity(1.0, &s).unwrap();
        assert!((got - expected).abs() < 1e-12 * expected);
        assert!(intensity(0.0, &s).is_err());
        assert!(intensity(-1.0, &s).is_err());
    }

    #[test]
    fn intensity_measure_closed_form_single_tier() {
        let mut s = example1_scenario();
        s.tiers.truncate(1);
        let got = intensity_measure(1e4, &s).unwrap();
        let expected = 1e4f64.powf(2.0 / 3.0) / (150.0 * 150.0);
        assert!((got - expected).abs() < 1e-12 * expected);
        assert!((expected - 0.02063).abs() < 1e-5);
        // Null measure at the origin.
        assert!(intensity_measure(1e-280, &s).unwrap() < 1e-150);
    }

    #[test]
    fn blockage_intensity_zero_beta_is_pure_los() {
        let s = {
            let mut s = blockage_scenario(0.0);
            s.pathloss = PathlossConfig::LosNlos { alpha1: 3.0, alpha2: 4.0 };
            s
        };
        for &v in &[0.1, 10.0, 1e4, 1e8] {
            let got = intensity(v, &s).unwrap();
            let a_k = std::f64::consts::PI * s.tiers[0].density * (2.0 / 3.0);
            let expected = a_k * v.powf(2.0 / 3.0 - 1.0);
            assert!((got - expected).abs() <= 1e-14 * expected, "v={v}");
        }
    }

    #[test]
    fn blockage_degenerates_to_uniform() {
        // β→0 with α₁=α₂=α must reproduce the uniform-mode quantities.
        let uniform = {
            let mut s = example1_scenario();
            s.tiers.truncate(1);
            s
        };
        let nearly = {
            let mut s = uniform.clone();
            s.pathloss = PathlossConfig::LosNlos { alpha1: 3.0, alpha2: 3.0 };
            s.tiers[0].blockage = 1e-9;
            s
        };
        for &v in &[1.0, 1e3, 1e6, 1e9] {
            let lu = intensity_measure(v, &uniform).unwrap();
            let lb = intensity_measure(v, &nearly).unwrap();
            assert!((lu - lb).abs() <= 1e-6 * lu, "Λ at v={v}: {lu} vs {lb}");
            let iu = intensity(v, &uniform).unwrap();
            let ib = intensity(v, &nearly).unwrap();
            assert!((iu - ib).abs() <= 1e-6 * iu, "λ at v={v}: {iu} vs {ib}");
        }
    }

    #[test]
    fn measure_derivative_matches_intensity() {
        // Five-point finite-difference oracle on a log grid, both modes.
        for s in [example1_scenario(), blockage_scenario(0.0143)] {
            for exp in 0..=8 {
                let v = 10f64.powi(exp);
                let h = v * 1e-3;
                let f = |x: f64| intensity_measure(x, &s).unwrap();
                let fd = (f(v - 2.0 * h) - 8.0 * f(v - h) + 8.0 * f(v + h) - f(v + 2.0 * h))
                    / (12.0 * h);
                let lam = intensity(v, &s).unwrap();
                assert!(
                    (fd - lam).abs() <= 1e-6 * lam.abs(),
                    "v=1e{exp}: fd={fd:e} λ={lam:e}"
                );
            }
        }
    }

    #[test]
    fn inverse_measure_roundtrip() {
        for s in [example1_scenario(), blockage_scenario(0.02)] {
            for &u in &[1e-6, 0.1, 1.0, 5.0, 23.0] {
                let v = inverse_intensity_measure(u, &s).unwrap();
                let back = intensity_measure(v, &s).unwrap();
                assert!((back - u).abs() < 1e-10 * u, "u={u}: roundtrip {back}");
            }
        }
    }

    #[test]
    fn ordered_pathloss_validation() {
        assert!(OrderedPathloss::new(vec![1.0, 2.0]).is_ok());
        assert!(OrderedPathloss::new(vec![2.0, 1.0]).is_err());
        assert!(OrderedPathloss::new(vec![1.0, 1.0]).is_err());
        assert!(OrderedPathloss::new(vec![-1.0, 1.0]).is_err());
        assert!(OrderedPathloss::new(vec![]).is_err());
    }

    #[test]
    fn joint_pdf_normalizes_n1() {
        let s = example1_scenario();
        // ∫ λ(γ)e^{−Λ(γ)} dγ over (0, Λ^{-1}(40)) ≈ 1.
        let hi = inverse_intensity_measure(40.0, &s).unwrap();
        let mass = quad::adaptive(
            &mut |g| {
                joint_pathloss_pdf(&OrderedPathloss::new(vec![g]).unwrap(), &s).unwrap()
            },
            1e-9,
            hi,
            1e-9,
            1e-8,
            4000,
        )
        .unwrap();
        assert!((mass - 1.0).abs() < 1e-6, "mass={mass}");
    }

    #[test]
    fn joint_pdf_normalizes_n2() {
        // Outer variable in Λ-coordinates (γ₂ = Λ^{-1}(u)) so the outer
        // integrand is O(1)-scaled; the pdf itself is still evaluated raw.
        let s = blockage_scenario(0.006);
        let mass = quad::adaptive(
            &mut |u: f64| {
                let g2 = inverse_intensity_measure(u, &s).unwrap();
                let inner = quad::adaptive(
                    &mut |g1: f64| {
                        joint_pathloss_pdf(&OrderedPathloss::new(vec![g1, g2]).unwrap(), &s)
                            .unwrap()
                    },
                    g2 * 1e-13,
                    g2 * (1.0 - 1e-13),
                    0.0,
                    1e-8,
                    4000,
                )
                .unwrap();
                inner / intensity(g2, &s).unwrap()
            },
            1e-8,
            40.0,
            1e-9,
            1e-7,
            4000,
        )
        .unwrap();
        assert!((mass - 1.0).abs() < 1e-5, "mass={mass}");
    }

    #[test]
    fn joint_pdf_matches_order_statistics_histogram() {
        // Empirical joint density of the two smallest normalized pathlosses
        // against Π λ(γ_i) e^{−Λ(γ₂)}, binned over a central region.
        let mut s = example1_scenario();
        s.tiers.truncate(1);
        let realizations = 1_000_000usize;
        let mut rng = ChaCha12Rng::seed_from_u64(0x0dd5_0001);
        // Window covering Λ(v_max) ≈ 25 -> miss probability e^{-25}.
        let v_max = inverse_intensity_measure(25.0, &s).unwrap();
        let radius = v_max.powf(1.0 / 3.0);

        // Bin grid over [0, v_lo]² with v_lo at Λ≈2.5.
        let v_lo = inverse_intensity_measure(2.5, &s).unwrap();
        let bins = 6usize;
        let w = v_lo / bins as f64;
        let mut counts = vec![0u64; bins * bins];
        for _ in 0..realizations {
            let net = sample_network(&s, radius, &mut rng);
            if net.points.len() < 2 {
                continue;
            }
            let (g1, g2) = (net.points[0].pathloss, net.points[1].pathloss);
            if g2 < v_lo {
                let (i, j) = ((g1 / w) as usize, (g2 / w) as usize);
                counts[j * bins + i] += 1;
            }
        }
        for j in 0..bins {
            for i in 0..=j {
                // Expected bin mass by nested adaptive quadrature of the pdf;
                // the intensity carries an integrable v^{2/α-1} singularity at
                // the origin, so fixed-order rules are not enough here.
                let mass = quad::adaptive(
                    &mut |g2: f64| {
                        let lo = (i as f64) * w;
                        let hi = ((i + 1) as f64 * w).min(g2 * (1.0 - 1e-12));
                        if hi <= lo {
                            return 0.0;
                        }
                        quad::adaptive(
                            &mut |g1: f64| {
                                joint_pathloss_pdf(
                                    &OrderedPathloss::new(vec![g1, g2]).unwrap(),
                                    &s,
                                )
                                .unwrap()
                            },
                            lo.max(g2 * 1e-14),
                            hi,
                            0.0,
                            1e-8,
                            4000,
                        )
                        .unwrap()
                    },
                    (j as f64) * w + w * 1e-14,
                    (j + 1) as f64 * w,
                    0.0,
                    1e-7,
                    4000,
                )
                .unwrap();
                let expected = realizations as f64 * mass;
                let sigma = (realizations as f64 * mass * (1.0 - mass)).sqrt().max(1.0);
                let got = counts[j * bins + i] as f64;
                assert!(
                    (got - expected).abs() <= 3.0 * sigma,
                    "bin ({i},{j}): {got} vs {expected:.1} (3σ={:.1})",
                    3.0 * sigma
                );
            }
        }
    }

    #[test]
    fn network_sampling_poisson_mean() {
        let s = example1_scenario();
        let radius = 400.0;
        let mut rng = ChaCha12Rng::seed_from_u64(0x0dd5_0002);
        let reps = 10_000usize;
        let mut counts = [0u64; 2];
        for _ in 0..reps {
            let net = sample_network(&s, radius, &mut rng);
            for p in &net.points {
                counts[p.tier] += 1;
            }
        }
        for (k, tier) in s.tiers.iter().enumerate() {
            let mean = tier.density * std::f64::consts::PI * radius * radius;
            let got = counts[k] as f64 / reps as f64;
            let sigma = (mean / reps as f64).sqrt();
            assert!(
                (got - mean).abs() <= 3.0 * sigma,
                "tier {k}: {got} vs {mean} (σ={sigma})"
            );
        }
    }

    #[test]
    fn network_sampling_zero_blockage_all_los() {
        let s = example1_scenario();
        let mut rng = ChaCha12Rng::seed_from_u64(0x0dd5_0003);
        let net = sample_network(&s, 500.0, &mut rng);
        assert!(!net.points.is_empty());
        assert!(net.points.iter().all(|p| p.los));
        // Sorted ascending.
        assert!(net.points.windows(2).all(|w| w[0].pathloss <= w[1].pathloss));
    }

    #[test]
    fn network_sampling_los_probability_at_mean_range() {
        // β = 0.02 -> average LOS range 50 m; links of length ~50 m are LOS
        // with probability e^{−1}.
        let s = Scenario {
            tiers: vec![TierConfig::from_cell_radius(20.0, 1.0, 0.02).unwrap()],
            pathloss: PathlossConfig::LosNlos { alpha1: 2.0, alpha2: 4.0 },
            array: ArrayConfig::half_wavelength(16).unwrap(),
            noise: NoiseConfig { bandwidth_hz: 1e9, noise_figure_db: 5.0 },
            fading: FadingModel::Rayleigh,
            coop_n: 2,
        };
        let mut rng = ChaCha12Rng::seed_from_u64(0x0dd5_0004);
        let (mut los, mut total) = (0u64, 0u64);
        while total < 60_000 {
            let net = sample_network(&s, 60.0, &mut rng);
            for p in &net.points {
                let alpha = if p.los { 2.0 } else { 4.0 };
                let r = (p.pathloss * s.tiers[0].power).powf(1.0 / alpha);
                if (49.0..51.0).contains(&r) {
                    total += 1;
                    los += u64::from(p.los);
                }
            }
        }
        let p_los = los as f64 / total as f64;
        assert!(
            (p_los - (-1.0f64).exp()).abs() < 0.01,
            "P(LOS | r≈50) = {p_los}, want e^-1 ≈ 0.368"
        );
    }

    #[test]
    fn network_sampling_deterministic() {
        let s = blockage_scenario(0.006);
        let a = sample_network(&s, 800.0, &mut ChaCha12Rng::seed_from_u64(7));
        let b = sample_network(&s, 800.0, &mut ChaCha12Rng::seed_from_u64(7));
        assert_eq!(a, b);
    }

    #[test]
    fn window_restriction_keeps_inner_points() {
        let s = blockage_scenario(0.0143);
        let mut rng = ChaCha12Rng::seed_from_u64(0x0dd5_0005);
        let net = sample_network(&s, 1000.0, &mut rng);
        let inner = net.restrict(500.0, &s);
        assert!(inner.points.len() < net.points.len());
        for p in &inner.points {
            let alpha = if p.los { 2.0 } else { 4.0 };
            let r = (p.pathloss * s.tiers[0].power).powf(1.0 / alpha);
            assert!(r <= 500.0 + 1e-9);
        }
    }
}
