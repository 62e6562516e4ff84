//! Adaptive Gauss–Kronrod (7/15 point) quadrature.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_3,
    0.949_107_912_342_758_524_526_189_684_047_9,
    0.864_864_423_359_769_072_789_712_788_640_9,
    0.741_531_185_599_394_439_863_864_773_280_8,
    0.586_087_235_467_691_130_294_144_845_693_0,
    0.405_845_151_377_397_166_906_606_412_076_9,
    0.207_784_955_007_898_467_600_689_403_773_2,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_97,
    0.063_092_092_629_978_553_290_700_663_189_20,
    0.104_790_010_322_250_183_839_876_322_541_5,
    0.140_653_259_715_525_918_745_189_590_510_2,
    0.169_004_726_639_267_902_826_583_426_598_6,
    0.190_350_578_064_785_409_913_256_402_421_0,
    0.204_432_940_075_298_892_414_161_999_234_6,
    0.209_482_141_084_727_828_012_999_174_891_7,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_1,
    0.279_705_391_489_276_667_901_467_771_423_8,
    0.381_830_050_505_118_944_950_369_775_488_98,
    0.417_959_183_673_469_387_755_102_040_816_3,
];

const MAX_INTERVALS: usize = 20_000;

/// One 15-point Kronrod estimate with its embedded 7-point Gauss error estimate.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for k in 0..7 {
        let dx = half * XGK[k];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[k] * pair;
        if k % 2 == 1 {
            gauss += WG[k / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Integrates `f` over `[a, b]` to absolute tolerance `abs_tol`.
///
/// Global adaptive bisection: the interval with the largest error estimate is
/// split until the summed estimate is below tolerance.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Integration(format!("non-finite limits [{a}, {b}]")));
    }
    let (sign, lo, hi) = if a < b { (1.0, a, b) } else { (-1.0, b, a) };
    let (v, e) = gk15(&f, lo, hi);
    let mut intervals = vec![(lo, hi, v, e)];
    let mut total_err = e;
    loop {
        if !total_err.is_finite() {
            return Err(Error::Integration("integrand produced a non-finite value".into()));
        }
        if total_err <= abs_tol {
            break;
        }
        if intervals.len() >= MAX_INTERVALS {
            return Err(Error::Integration(format!(
                "no convergence after {MAX_INTERVALS} subintervals (error estimate {total_err:e})"
            )));
        }
        let (idx, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (l, r, _, err) = intervals.swap_remove(idx);
        let mid = 0.5 * (l + r);
        if mid <= l || mid >= r {
            // Interval cannot be split further in floating point.
            if err <= abs_tol.max(f64::EPSILON) * 1e3 {
                intervals.push((l, r, 0.0, 0.0));
                total_err -= err;
                continue;
            }
            return Err(Error::Integration("interval underflow during refinement".into()));
        }
        let (v1, e1) = gk15(&f, l, mid);
        let (v2, e2) = gk15(&f, mid, r);
        total_err += e1 + e2 - err;
        intervals.push((l, mid, v1, e1));
        intervals.push((mid, r, v2, e2));
        // Re-sum occasionally to keep the running error honest.
        if intervals.len() % 256 == 0 {
            total_err = intervals.iter().map(|iv| iv.3).sum();
        }
    }
    let mut sum = 0.0;
    let mut comp = 0.0;
    for iv in &intervals {
        neumaier_add(&mut sum, &mut comp, iv.2);
    }
    Ok(sign * (sum + comp))
}

/// Integrates `f` over `[a, ∞)` using the map `w = a + s / (1 - s)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, abs_tol: f64) -> Result<f64> {
    integrate(
        |s| {
            let one_minus = 1.0 - s;
            let w = a + s / one_minus;
            let v = f(w) / (one_minus * one_minus);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        abs_tol,
    )
}

/// Neumaier compensated accumulation step.
pub(crate) fn neumaier_add(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}
