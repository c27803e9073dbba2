//! Adaptive quadrature primitives.
//!
//! Everything in this crate that touches an integral goes through the small
//! kit in this module: a 15-point Gauss–Kronrod rule, a heap-driven adaptive
//! integrator over finite intervals (real- and complex-valued), and an
//! octave-panel scheme for integrals over `[a, ∞)` whose integrand envelope
//! decays monotonically.

use num_complex::Complex64;

use crate::{Error, Result};

/// Kronrod abscissae for the 15-point rule on [-1, 1] (symmetric, only the
/// non-negative half is stored; index 7 is the midpoint).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_17,
    0.207_784_955_007_898_47,
    0.0,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

/// Weights of the embedded 7-point Gauss rule (abscissae `XGK[1,3,5,7]`).
const WG: [f64; 4] = [
    0.129_484_966_168_869_69,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

/// QUADPACK-style error rescaling: sharpen the raw `|K - G|` difference using
/// the integral of `|f - mean|` so smooth panels are not over-refined.
fn rescale_error(raw: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut err = raw.abs();
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        err = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    err
}

/// One 15-point Gauss–Kronrod panel. Returns `(integral, error, res_abs)`.
pub fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);

    let mut fv = [0.0f64; 15];
    fv[7] = f_center;
    let mut kronrod = WGK[7] * f_center;
    let mut gauss = WG[3] * f_center;
    let mut res_abs = kronrod.abs();

    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv[j] = f1;
        fv[14 - j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = 0.5 * kronrod;
    let mut res_asc = WGK[7] * (f_center - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv[j] - mean).abs() + (fv[14 - j] - mean).abs());
    }

    let value = kronrod * half;
    let err = rescale_error((kronrod - gauss) * half, res_abs * half.abs(), res_asc * half.abs());
    (value, err, res_abs * half.abs())
}

/// Complex-valued Gauss–Kronrod panel; the error estimate is the modulus of
/// the Kronrod-Gauss difference.
pub fn gk15_c<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);

    let mut kronrod = WGK[7] * f_center;
    let mut gauss = WG[3] * f_center;

    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        kronrod += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }

    (kronrod * half, (kronrod - gauss).norm() * half.abs())
}

struct Interval<T> {
    err: f64,
    a: f64,
    b: f64,
    value: T,
}

/// Adaptive Gauss–Kronrod integration of `f` over `[a, b]`.
///
/// Stops when the accumulated error estimate drops under
/// `max(abs_tol, rel_tol * |result|)`; errs with [`Error::NonConvergence`]
/// when `max_intervals` panels were not enough.
pub fn adaptive<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (value, err, _) = gk15(f, a, b);
    let mut intervals = vec![Interval { err, a, b, value }];
    let mut total = value;
    let mut total_err = err;

    while total_err > abs_tol.max(rel_tol * total.abs()) {
        if intervals.len() >= max_intervals {
            return Err(Error::NonConvergence {
                op: "adaptive quadrature",
                detail: format!(
                    "error {total_err:.3e} over [{a:.3e}, {b:.3e}] after {} panels",
                    intervals.len()
                ),
            });
        }
        // Split the panel with the largest error estimate.
        let worst = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .map(|(i, _)| i)
            .unwrap();
        let Interval { err, a, b, value } = intervals.swap_remove(worst);
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            // Interval collapsed to machine precision; accept its estimate.
            intervals.push(Interval { err: 0.0, a, b, value });
            total_err -= err;
            continue;
        }
        let (v1, e1, _) = gk15(f, a, mid);
        let (v2, e2, _) = gk15(f, mid, b);
        total += v1 + v2 - value;
        total_err += e1 + e2 - err;
        intervals.push(Interval { err: e1, a, b: mid, value: v1 });
        intervals.push(Interval { err: e2, a: mid, b, value: v2 });
    }
    Ok(total)
}

/// Complex-valued adaptive Gauss–Kronrod over `[a, b]`.
pub fn adaptive_c<F: FnMut(f64) -> Complex64>(
    f: &mut F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Result<Complex64> {
    if a == b {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let (value, err) = gk15_c(f, a, b);
    let mut intervals = vec![Interval { err, a, b, value }];
    let mut total = value;
    let mut total_err = err;

    while total_err > abs_tol.max(rel_tol * total.norm()) {
        if intervals.len() >= max_intervals {
            return Err(Error::NonConvergence {
                op: "adaptive quadrature (complex)",
                detail: format!("error {total_err:.3e} after {} panels", intervals.len()),
            });
        }
        let worst = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .map(|(i, _)| i)
            .unwrap();
        let Interval { err, a, b, value } = intervals.swap_remove(worst);
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            intervals.push(Interval { err: 0.0, a, b, value });
            total_err -= err;
            continue;
        }
        let (v1, e1) = gk15_c(f, a, mid);
        let (v2, e2) = gk15_c(f, mid, b);
        total += v1 + v2 - value;
        total_err += e1 + e2 - err;
        intervals.push(Interval { err: e1, a, b: mid, value: v1 });
        intervals.push(Interval { err: e2, a: mid, b, value: v2 });
    }
    Ok(total)
}

/// Number of consecutive negligible octaves required before a tail integral
/// is declared converged.
const TAIL_QUIET_PANELS: usize = 3;

/// Integrate `f` over `[a, ∞)` for integrands whose magnitude envelope
/// decays monotonically at large argument.
///
/// The half-line is covered by octave panels `[a·2^k, a·2^{k+1}]`, each
/// integrated adaptively; accumulation stops once several consecutive
/// octaves contribute below tolerance.
pub fn decaying_tail<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_octaves: usize,
) -> Result<f64> {
    debug_assert!(a > 0.0);
    let mut acc = 0.0;
    let mut lo = a;
    let mut quiet = 0;
    for _ in 0..max_octaves {
        let hi = lo * 2.0;
        let panel = adaptive(f, lo, hi, abs_tol * 0.25, rel_tol * 0.25, 200)?;
        acc += panel;
        if panel.abs() < (abs_tol.max(rel_tol * acc.abs())) * 0.25 {
            quiet += 1;
            if quiet >= TAIL_QUIET_PANELS {
                return Ok(acc);
            }
        } else {
            quiet = 0;
        }
        lo = hi;
    }
    Err(Error::NonConvergence {
        op: "tail quadrature",
        detail: format!("no decay after {max_octaves} octaves from {a:.3e}"),
    })
}

/// Complex-valued counterpart of [`decaying_tail`].
pub fn decaying_tail_c<F: FnMut(f64) -> Complex64>(
    f: &mut F,
    a: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_octaves: usize,
) -> Result<Complex64> {
    debug_assert!(a > 0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut lo = a;
    let mut quiet = 0;
    for _ in 0..max_octaves {
        let hi = lo * 2.0;
        let panel = adaptive_c(f, lo, hi, abs_tol * 0.25, rel_tol * 0.25, 200)?;
        acc += panel;
        if panel.norm() < (abs_tol.max(rel_tol * acc.norm())) * 0.25 {
            quiet += 1;
            if quiet >= TAIL_QUIET_PANELS {
                return Ok(acc);
            }
        } else {
            quiet = 0;
        }
        lo = hi;
    }
    Err(Error::NonConvergence {
        op: "tail quadrature (complex)",
        detail: format!("no decay after {max_octaves} octaves from {a:.3e}"),
    })
}
