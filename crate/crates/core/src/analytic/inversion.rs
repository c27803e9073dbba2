//! Characteristic-function inversion.
//!
//! Every fading model that is not Rayleigh enters the coverage probability
//! through `P(X > 0)` for a variable `X` assembled from the signal, the
//! scaled interference and the noise. With `Φ(ω) = E[e^{jωX}]` this is the
//! half-line inversion
//!
//! ```text
//! P(X > 0) = 1/2 + (1/π) ∫_0^∞ Im Φ(ω) / ω dω,
//! ```
//!
//! the conjugate-symmetric reduction of the two-sided kernel
//! `∫ L_I L_N (L_S(−2jπs) − 1)/(2jπs) ds` (the `−1` piece integrates to the
//! constant 1/2 because the interference-plus-noise variable is negative).
//!
//! The integral is walked panel by panel with widths controlled by the
//! local phase rate of `Φ`; slowly decaying oscillatory tails are summed by
//! repeated averaging of the half-cycle partial sums. The interference-free
//! Nakagami bound has a closed form — the regularized upper incomplete
//! gamma — which doubles as the cross-check for the contour-derivative
//! (residue) evaluation of the same quantity.

use std::cell::Cell;
use std::f64::consts::PI;

use num_complex::Complex64;
use statrs::function::gamma::gamma_ur;

use crate::analytic::laplace::NodeCache;
use crate::analytic::EngineContext;
use crate::geometry::OrderedPathloss;
use crate::geometry::Scenario;
use crate::{Error, Result};

/// Stashes the first error raised inside an infallible-looking closure so
/// quadrature loops can keep plain `f64` signatures.
pub(crate) struct ErrorStash {
    slot: Cell<Option<Error>>,
}

impl ErrorStash {
    pub(crate) fn new() -> Self {
        Self { slot: Cell::new(None) }
    }

    pub(crate) fn put(&self, e: Error) {
        if self.slot.take().is_none() {
            self.slot.set(Some(e));
        } else {
            // keep the first error
        }
    }

    pub(crate) fn check(&self) -> Result<()> {
        match self.slot.take() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

/// Find the ω at which `|Φ(ω) − 1|` first reaches ~0.2: the natural width
/// scale of the inversion integrand near the origin.
fn characteristic_scale(phi: &mut impl FnMut(f64) -> Complex64) -> f64 {
    let mut w = 1.0f64;
    let dev = |p: Complex64| (p - 1.0).norm();
    let mut steps = 0;
    if dev(phi(w)) > 0.2 {
        while dev(phi(w)) > 0.2 && steps < 600 {
            w *= 0.25;
            steps += 1;
        }
    } else {
        while dev(phi(w)) < 0.2 && steps < 600 {
            w *= 4.0;
            steps += 1;
        }
        w *= 0.25;
    }
    w.clamp(1e-280, 1e280)
}

/// Iterated averaging of the trailing partial sums; returns the
/// extrapolated limit and the change in the deepest fold.
fn accelerate(partials: &[f64]) -> (f64, f64) {
    let take = partials.len().min(24);
    let mut row: Vec<f64> = partials[partials.len() - take..].to_vec();
    let mut last = *row.last().unwrap();
    let mut delta = f64::INFINITY;
    while row.len() > 1 {
        for i in 0..row.len() - 1 {
            row[i] = 0.5 * (row[i] + row[i + 1]);
        }
        row.pop();
        let v = *row.last().unwrap();
        delta = (v - last).abs();
        last = v;
    }
    (last, delta)
}

/// `P(X > 0)` by half-line inversion of the characteristic function.
///
/// `phi` must satisfy `Φ(0) = 1` (a proper CF); errors inside `phi` are
/// routed through an [`ErrorStash`] by the caller. Returns the raw
/// (unclamped) probability.
pub(crate) fn prob_positive(
    phi: &mut impl FnMut(f64) -> Complex64,
    tail_tol: f64,
    max_panels: usize,
) -> Result<f64> {
    let scale = characteristic_scale(phi);
    let mut width = scale / 6.0;
    let mut lo = 0.0f64;
    let mut phi_lo = Complex64::new(1.0, 0.0);
    let mut acc = 0.0f64;
    let mut quiet = 0usize;
    let mut osc_run = 0usize;
    let mut osc_mode = false;
    let mut partials: Vec<f64> = Vec::new();

    for _ in 0..max_panels {
        // Probe the panel end; halve until the phase step is resolvable.
        let mut hi = lo + width;
        let mut phi_hi = phi(hi);
        for _ in 0..48 {
            let resolvable = if phi_lo.norm() < 1e-120 || phi_hi.norm() < 1e-120 {
                true
            } else {
                (phi_hi * phi_lo.conj()).arg().abs() < 2.6
                    && (phi_hi.norm().max(1e-120) / phi_lo.norm().max(1e-120)).ln().abs() < 2.0
            };
            if resolvable {
                break;
            }
            width *= 0.5;
            hi = lo + width;
            phi_hi = phi(hi);
        }

        let (panel, _) = crate::quad::gk15(&mut |w: f64| phi(w).im / w, lo, hi);
        acc += panel;

        // Phase bookkeeping for the width controller.
        let (dphase, dmag) = if phi_lo.norm() < 1e-120 || phi_hi.norm() < 1e-120 {
            (0.0, 4.0)
        } else {
            (
                (phi_hi * phi_lo.conj()).arg().abs(),
                (phi_hi.norm() / phi_lo.norm()).ln().abs(),
            )
        };

        // Plain convergence: the transform has decayed and panels are quiet.
        if phi_hi.norm() < 0.1 * tail_tol && panel.abs() < 0.25 * tail_tol {
            quiet += 1;
            if quiet >= 2 {
                return Ok(0.5 + acc / PI);
            }
        } else {
            quiet = 0;
        }

        // Oscillatory regime: phase turns with little magnitude change.
        if dphase > 1.8 && dmag < 0.4 {
            osc_run += 1;
        } else {
            osc_run = 0;
        }
        if osc_run >= 6 {
            osc_mode = true;
        }
        if osc_mode {
            partials.push(acc);
            if partials.len() >= 8 {
                let (limit, delta) = accelerate(&partials);
                if delta < 0.5 * tail_tol {
                    return Ok(0.5 + limit / PI);
                }
            }
        }

        // Width control: aim at ~π phase per panel, cap the swing.
        let target = if osc_mode { PI } else { 2.2 };
        let factor = (target / dphase.max(0.05)).min(2.0 / dmag.max(0.05));
        width *= factor.clamp(0.45, 2.0);
        lo = hi;
        phi_lo = phi_hi;
    }
    Err(Error::NonConvergence {
        op: "cf_inversion",
        detail: format!("no tail convergence after {max_panels} panels (reached ω={lo:.3e})"),
    })
}

/// Raw → reported probability: clamp to [0, 1] and warn when the excursion
/// exceeds the documented numerical slack.
pub(crate) fn clamp_probability(raw: f64, what: &str) -> f64 {
    if raw < -1e-3 || raw > 1.0 + 1e-3 {
        log::warn!("{what}: raw probability {raw:.6} clamped to [0,1]");
    }
    raw.clamp(0.0, 1.0)
}

/// Two-sided inversion of the paper kernel with interference, evaluated as
/// `P(X > 0)` for `X = S − t_scaled·(I + σ²/N_t)` where `S` has Laplace
/// transform `signal_transform`.
///
/// `gamma` fixes the cooperating pathlosses: interference starts past
/// `γ'_n`, and `t_scaled` is the threshold over the sum signal scale
/// (`T' = T/Σ 1/γ'_i`, or `T` itself for the unnormalized deterministic
/// form).
pub fn cf_inversion(
    signal_transform: &dyn Fn(Complex64) -> Complex64,
    gamma: &OrderedPathloss,
    scenario: &Scenario,
    _threshold: f64,
    t_scaled: f64,
) -> Result<f64> {
    let ctx = EngineContext::new(scenario.clone())?;
    let node = ctx.node_for(gamma.last())?;
    let raw = cf_inversion_raw(signal_transform, Some(&node), &ctx, t_scaled)?;
    Ok(clamp_probability(raw, "cf_inversion"))
}

/// Interference-free variant of [`cf_inversion`].
pub fn cf_inversion_no_interference(
    signal_transform: &dyn Fn(Complex64) -> Complex64,
    scenario: &Scenario,
    t_scaled: f64,
) -> Result<f64> {
    let ctx = EngineContext::new(scenario.clone())?;
    let raw = cf_inversion_raw(signal_transform, None, &ctx, t_scaled)?;
    Ok(clamp_probability(raw, "cf_inversion"))
}

pub(crate) fn cf_inversion_raw(
    signal_transform: &dyn Fn(Complex64) -> Complex64,
    node: Option<&NodeCache>,
    ctx: &EngineContext,
    t_scaled: f64,
) -> Result<f64> {
    let stash = ErrorStash::new();
    let sigma = ctx.sigma_over_nt();
    let mut phi = |omega: f64| -> Complex64 {
        let signal = signal_transform(Complex64::new(0.0, -omega));
        let noise = Complex64::new(0.0, -omega * t_scaled * sigma).exp();
        let interf = match node {
            Some(nc) => match ctx.laplace_imag_cached(nc, omega * t_scaled) {
                Ok(v) => v,
                Err(e) => {
                    stash.put(e);
                    Complex64::new(0.0, 0.0)
                }
            },
            None => Complex64::new(1.0, 0.0),
        };
        signal * noise * interf
    };
    let raw = prob_positive(&mut phi, ctx.cfg().inversion_tail_tol, ctx.cfg().max_subdivisions);
    stash.check()?;
    raw
}

// ---------------------------------------------------------------------------
// Interference-free Nakagami bound: residue and incomplete-gamma routes
// ---------------------------------------------------------------------------

/// The contour integrand of the interference-free kernel: a pole of order
/// `nm` at `z* = m/(2πj)` with analytic part
/// `g(z) = (−1)^{nm} (1 − (1 − 2πjz/m)^{nm}) e^{−2πjz·x} / ((2πj/m)^{nm} 2πjz)`.
fn residue_g(z: Complex64, nm: u32, m: f64, x: f64) -> Complex64 {
    let two_pi_j = Complex64::new(0.0, 2.0 * PI);
    let sign = if nm % 2 == 0 { 1.0 } else { -1.0 };
    let numer = Complex64::new(1.0, 0.0) - (Complex64::new(1.0, 0.0) - two_pi_j * z / m).powu(nm);
    let denom = (two_pi_j / m).powu(nm) * (two_pi_j * z);
    (numer / denom) * (-two_pi_j * z * x).exp() * sign
}

/// `(nm−1)`-th derivative over factorial of `g` at `z*` by the trapezoid
/// Cauchy integral, times the `−2πj` contour factor that closes the real
/// line through the lower half-plane.
pub(crate) fn residue_route(nm: u32, m: u32, x: f64) -> f64 {
    let m = m as f64;
    let zstar = Complex64::new(0.0, -m / (2.0 * PI));
    // Radius half-way to the only other singularity (z = 0): large enough
    // to keep the ρ^{-(nm-1)} roundoff amplification harmless at nm = 12.
    let rho = 0.5 * zstar.norm();
    let p = nm - 1;
    let nodes = 64usize;
    let mut acc = Complex64::new(0.0, 0.0);
    for l in 0..nodes {
        let theta = 2.0 * PI * l as f64 / nodes as f64;
        let z = zstar + Complex64::from_polar(rho, theta);
        acc += residue_g(z, nm, m, x) * Complex64::from_polar(1.0, -(p as f64) * theta);
    }
    let deriv_over_factorial = acc / (nodes as f64 * rho.powi(p as i32));
    (Complex64::new(0.0, -2.0 * PI) * deriv_over_factorial).re
}

/// Interference-free coverage kernel `P(S^UP > x)` for the Nakagami sum
/// bound `S^UP ~ Gamma(nm, 1/m)`: the regularized upper incomplete gamma
/// `Q(nm, m·x)`, cross-checked against the residue route on every call.
pub fn snr_outage_kernel(n: usize, m: u32, x: f64) -> Result<f64> {
    debug_assert!(x >= 0.0);
    let nm = (n as u32) * m;
    let gamma_route = gamma_ur(nm as f64, (m as f64) * x);
    let residue = residue_route(nm, m, x);
    let diff = (gamma_route - residue).abs();
    if diff > 1e-6 {
        return Err(Error::RouteDisagreement { nm, x, diff });
    }
    Ok(gamma_route)
}
