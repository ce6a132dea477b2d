//! Shapiro-Wilk W test with Royston's approximations (Algorithm AS R94,
//! Royston 1995, extending Royston 1982): polynomial corrections for the two
//! extreme weights, Blom-type normal scores for the rest, and a normalizing
//! transformation of `ln(1 − W)` for the p-value. Valid for 3 ≤ n ≤ 5000.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_3, PI};

use super::{NormalityKind, NormalityTestResult, SampleSeries};
use crate::error::{Error, Result};
use crate::numeric::{find_root, norm_quantile, norm_sf};

pub const MAX_LEN: usize = 5000;

const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056];
const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
// ln(1 - W) location/scale, 4 <= n <= 11 (after the gamma transform)
const C3: [f64; 4] = [0.544, -0.39978, 0.025054, -6.714e-4];
const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
// n >= 12, as polynomials in ln(n)
const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
const G: [f64; 2] = [-2.273, 0.459];

fn poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Weights for the upper half of the order statistics, largest first; the
/// lower half mirrors them with opposite sign. They have unit sum of squares.
fn half_weights(n: usize) -> Vec<f64> {
    let half = n / 2;
    if n == 3 {
        return vec![FRAC_1_SQRT_2];
    }
    let an = n as f64;
    // m[i] for i = 0..half are the (negative) lower normal scores
    let mut m: Vec<f64> = (1..=half).map(|i| norm_quantile((i as f64 - 0.375) / (an + 0.25))).collect();
    let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
    let ssumm2 = summ2.sqrt();
    let rsn = 1.0 / an.sqrt();
    let a1 = poly(&C1, rsn) - m[0] / ssumm2;

    let (first_scaled, fac) = if n > 5 {
        let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
        let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2)).sqrt();
        m[1] = a2;
        (2, fac)
    } else {
        let fac = ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt();
        (1, fac)
    };
    m[0] = a1;
    for v in m.iter_mut().skip(first_scaled) {
        *v /= -fac;
    }
    m
}

/// W and its p-value for raw (unsorted) values.
pub fn shapiro_wilk_values(values: &[f64]) -> Result<(f64, f64)> {
    let n = values.len();
    if !(3..=MAX_LEN).contains(&n) {
        return Err(Error::SampleSize { n, min: 3, max: MAX_LEN });
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Validation(vec![format!("value #{i} is not finite")]));
    }
    let mut x = values.to_vec();
    x.sort_unstable_by(f64::total_cmp);
    let range = x[n - 1] - x[0];
    if range.is_nan() || range <= 0.0 {
        return Err(Error::Degenerate("Shapiro-Wilk needs a non-constant sample".into()));
    }

    let half = half_weights(n);
    let weight = |i: usize| -> f64 {
        let j = n - 1 - i;
        match i.cmp(&j) {
            std::cmp::Ordering::Less => -half[i],
            std::cmp::Ordering::Greater => half[j],
            std::cmp::Ordering::Equal => 0.0,
        }
    };

    // squared correlation between weights and data, scaled by the range
    let xs: Vec<f64> = x.iter().map(|v| v / range).collect();
    let x_mean = xs.iter().sum::<f64>() / n as f64;
    let a_mean = (0..n).map(weight).sum::<f64>() / n as f64;
    let (mut ssa, mut ssx, mut sax) = (0.0, 0.0, 0.0);
    for (i, &xi) in xs.iter().enumerate() {
        let da = weight(i) - a_mean;
        let dx = xi - x_mean;
        ssa += da * da;
        ssx += dx * dx;
        sax += da * dx;
    }
    let root = (ssa * ssx).sqrt();
    let w1 = (root - sax) * (root + sax) / (ssa * ssx);
    let w = (1.0 - w1).clamp(f64::MIN_POSITIVE, 1.0);
    Ok((w, shapiro_wilk_p_value(w, n)))
}

/// Upper-tail p-value of W for a sample of size `n`.
pub fn shapiro_wilk_p_value(w: f64, n: usize) -> f64 {
    if n == 3 {
        let p = 6.0 / PI * (w.sqrt().asin() - FRAC_PI_3);
        return p.clamp(0.0, 1.0);
    }
    if w >= 1.0 {
        return 1.0;
    }
    let an = n as f64;
    let mut y = (1.0 - w).ln();
    let (m, s) = if n <= 11 {
        let gamma = poly(&G, an);
        if y >= gamma {
            return 1e-99;
        }
        y = -(gamma - y).ln();
        (poly(&C3, an), poly(&C4, an).exp())
    } else {
        let ln_n = an.ln();
        (poly(&C5, ln_n), poly(&C6, ln_n).exp())
    };
    norm_sf((y - m) / s)
}

/// The W statistic whose p-value at sample size `n` equals `p`.
pub fn w_equivalent(p: f64, n: usize) -> f64 {
    let p = p.clamp(0.0, 1.0);
    if n == 3 {
        return (p * PI / 6.0 + FRAC_PI_3).sin().powi(2);
    }
    if p >= 1.0 {
        return 1.0;
    }
    // p(W) decreases in y = ln(1 - W)
    let upper = if n <= 11 { poly(&G, n as f64).min(0.0) - 1e-12 } else { -1e-15 };
    let objective = |y: f64| shapiro_wilk_p_value(-y.exp_m1(), n) - p;
    let lower = -60.0;
    if objective(upper) >= 0.0 {
        return -upper.exp_m1();
    }
    if objective(lower) <= 0.0 {
        return -lower.exp_m1();
    }
    let y = find_root(objective, lower, upper, 1e-13).unwrap_or(upper);
    -y.exp_m1()
}

pub fn shapiro_wilk(series: &SampleSeries) -> Result<NormalityTestResult> {
    let (w, p) = shapiro_wilk_values(series.values())?;
    Ok(NormalityTestResult {
        w_stat: w,
        p_value: p,
        n: series.len(),
        kind: NormalityKind::Univariate,
        h_stat: None,
        edf: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // W and p from scipy.stats.shapiro on the same data
    const NORMAL_37: [f64; 37] = [
        0.4511, 0.5132, 0.6788, 0.5694, 0.642, 0.6077, 0.4864, 0.6042, 0.5183, 0.5178, 0.5597, 0.3974, 0.6692,
        0.4829, 0.65, 0.5636, 0.7032, 0.484, 0.5188, 0.5838, 0.3293, 0.6328, 0.7042, 0.6627, 0.6255, 0.5354, 0.6782,
        0.6574, 0.5893, 0.5505, 0.5138, 0.427, 0.6726, 0.3328, 0.513, 0.5664, 0.636,
    ];
    const EXPO_37: [f64; 37] = [
        1.0261, 0.1637, 0.3863, 0.2106, 0.9029, 0.092, 1.7513, 0.1406, 0.2257, 0.0308, 0.0477, 0.6161, 1.0258,
        0.3896, 0.2447, 0.0008, 0.6755, 0.7653, 0.9929, 3.4593, 1.4761, 0.1106, 0.9706, 0.4638, 1.0169, 0.3766,
        1.7387, 1.9565, 0.0204, 0.3954, 1.1467, 4.2237, 0.9202, 0.6084, 0.7499, 0.0683, 0.5004,
    ];
    const UNIFORM_20: [f64; 20] = [
        0.6101, 0.7439, 0.4298, 0.3028, 0.0059, 0.7565, 0.0776, 0.49, 0.3044, 0.8408, 0.9505, 0.3189, 0.8978,
        0.3375, 0.8121, 0.7988, 0.6553, 0.2287, 0.1377, 0.4244,
    ];
    const N11: [f64; 11] = [-0.1488, 1.3157, -1.2223, -0.3036, -1.1737, 0.8263, 0.8503, -0.5158, 1.6581, -0.2973, -1.3834];
    const N12: [f64; 12] = [
        -0.2812, 0.36, -0.2344, 2.2655, 0.8554, 1.7313, 1.3859, -1.6858, -0.3778, -2.7285, -0.6464, 1.1151,
    ];

    #[test]
    fn matches_reference_implementation() {
        let cases: [(&[f64], f64, f64); 7] = [
            (&NORMAL_37, 0.9486351508237837, 0.08720701042694314),
            (&EXPO_37, 0.7570810214536151, 1.988572403919401e-06),
            (&UNIFORM_20, 0.9472696841389573, 0.3275381921936833),
            (&[2.1, 3.4, 1.9, 5.6, 2.8], 0.8686352171997569, 0.2609413256959834),
            (&[1.0, 2.0, 4.0], 0.9642857142857142, 0.6368868450289689),
            (&N11, 0.9233592838778649, 0.3476192599172202),
            (&N12, 0.9685039901525122, 0.8945159601294884),
        ];
        for (data, w_ref, p_ref) in cases {
            let (w, p) = shapiro_wilk_values(data).unwrap();
            assert!((w - w_ref).abs() < 1e-3, "n={} W {w} vs {w_ref}", data.len());
            assert!((p - p_ref).abs() < 1e-2, "n={} p {p} vs {p_ref}", data.len());
        }
    }

    #[test]
    fn weights_have_unit_norm() {
        for n in [3, 4, 5, 6, 11, 12, 37, 500, 5000] {
            let half = half_weights(n);
            let norm: f64 = 2.0 * half.iter().map(|a| a * a).sum::<f64>();
            assert!((norm - 1.0).abs() < 1e-12, "n={n}: {norm}");
            assert!(half.iter().all(|&a| a > 0.0));
        }
    }

    #[test]
    fn normal_scores_are_accepted() {
        let scores: Vec<f64> = (1..=37).map(|i| norm_quantile((i as f64 - 0.375) / 37.25)).collect();
        let (w, p) = shapiro_wilk_values(&scores).unwrap();
        assert!(w >= 0.99 && p >= 0.9, "W {w} p {p}");
    }

    #[test]
    fn affine_invariance() {
        let (w, p) = shapiro_wilk_values(&NORMAL_37).unwrap();
        let moved: Vec<f64> = NORMAL_37.iter().map(|v| 37.5 * v - 12.0).collect();
        let (w2, p2) = shapiro_wilk_values(&moved).unwrap();
        assert!((w - w2).abs() < 1e-10);
        assert!((p - p2).abs() < 1e-9);
    }

    #[test]
    fn size_and_degenerate_errors() {
        assert!(matches!(shapiro_wilk_values(&[1.0, 2.0]), Err(Error::SampleSize { .. })));
        assert!(matches!(shapiro_wilk_values(&vec![0.0; 5001]), Err(Error::SampleSize { .. })));
        assert!(matches!(shapiro_wilk_values(&[2.0; 10]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn w_equivalent_inverts_p_value() {
        for n in [3, 5, 11, 12, 37, 200] {
            for p in [0.001, 0.05, 0.3, 0.509, 0.856, 0.99] {
                let w = w_equivalent(p, n);
                assert!(w > 0.0 && w <= 1.0);
                assert!((shapiro_wilk_p_value(w, n) - p).abs() < 1e-9, "n={n} p={p} w={w}");
            }
        }
    }
}
