//! Moments, Pearson correlation and tail probabilities carried in log space.
//!
//! Leakage statistics routinely reach p-values far below `f64::MIN_POSITIVE`,
//! so every tail here returns `ln p` and callers report `-log10 p`.

use std::f64::consts::LN_10;

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::ln_gamma;

const CF_EPS: f64 = 1e-16;
const CF_MAX_ITER: usize = 20_000;
const TINY: f64 = 1e-300;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Bessel-corrected variance; zero for fewer than two values.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mu = mean(xs);
    xs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn population_variance(xs: &[f64]) -> f64 {
    let mu = mean(xs);
    xs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / xs.len() as f64
}

/// Pearson correlation; `None` when either input has zero variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    debug_assert_eq!(xs.len(), ys.len());
    let mx = mean(xs);
    let my = mean(ys);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

pub fn neg_log10(ln_p: f64) -> f64 {
    let v = -ln_p / LN_10;
    if v == 0.0 {
        0.0 // avoid -0
    } else {
        v
    }
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

pub fn ln_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Continued fraction of the incomplete beta function (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

/// `ln I_x(a, b)`, the log of the regularized incomplete beta function.
/// `y` must equal `1 - x`; passing it separately keeps precision near x = 1.
pub fn ln_beta_inc(a: f64, b: f64, x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if y <= 0.0 {
        return 0.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * y.ln();
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front + beta_cf(a, b, x).ln() - a.ln()
    } else {
        let q = (ln_front + beta_cf(b, a, y).ln() - b.ln()).exp();
        (-q).ln_1p()
    }
}

/// `ln` of the upper tail of the standard normal.
pub fn ln_normal_sf(z: f64) -> f64 {
    if z < 5.0 {
        let p = 1.0 - Normal::standard().cdf(z);
        if z < 0.0 {
            return (-Normal::standard().cdf(z)).ln_1p();
        }
        return p.ln();
    }
    // Mills-ratio asymptotic series, accurate to < 1e-6 relative beyond z = 5
    let z2 = z * z;
    let series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2) + 105.0 / (z2 * z2 * z2 * z2);
    -0.5 * z2 - z.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() + series.ln()
}

/// `ln` of the two-sided Student-t p-value.
pub fn ln_student_t_two_sided(t: f64, df: f64) -> f64 {
    if !t.is_finite() {
        return f64::NEG_INFINITY;
    }
    if t == 0.0 {
        return 0.0;
    }
    if df > 1.0e7 {
        return std::f64::consts::LN_2 + ln_normal_sf(t.abs());
    }
    let t2 = t * t;
    let x = df / (df + t2);
    let y = t2 / (df + t2);
    ln_beta_inc(0.5 * df, 0.5, x, y)
}

/// Two-sided Student-t p-value on the `-log10` scale.
pub fn t_to_neglog10p(t: f64, df: f64) -> f64 {
    neg_log10(ln_student_t_two_sided(t, df))
}

/// Welch-Satterthwaite degrees of freedom.
pub fn welch_df(var_a: f64, n_a: f64, var_b: f64, n_b: f64) -> f64 {
    let qa = var_a / n_a;
    let qb = var_b / n_b;
    let num = (qa + qb) * (qa + qb);
    let den = qa * qa / (n_a - 1.0) + qb * qb / (n_b - 1.0);
    if den > 0.0 {
        num / den
    } else {
        n_a + n_b - 2.0
    }
}

/// `ln Q(a, x)`, the log of the regularized upper incomplete gamma function.
pub fn ln_gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let ln_front = -x + a * x.ln() - ln_gamma(a);
    if x < a + 1.0 {
        // series for P, then Q = 1 - P
        let mut ap = a;
        let mut del = 1.0 / a;
        let mut sum = del;
        for _ in 0..CF_MAX_ITER {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * CF_EPS {
                break;
            }
        }
        let p = (ln_front + sum.ln()).exp();
        (-p).ln_1p()
    } else {
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..=CF_MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < CF_EPS {
                break;
            }
        }
        ln_front + h.ln()
    }
}

/// `ln` of the chi-square survival function.
pub fn ln_chi2_sf(stat: f64, df: f64) -> f64 {
    ln_gamma_q(0.5 * df, 0.5 * stat)
}

/// `ln P(X >= k)` for `X ~ Binomial(m, 1/2)`, summed exactly in log space.
pub fn ln_binomial_upper_tail_half(k: u64, m: u64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    if k > m {
        return f64::NEG_INFINITY;
    }
    let mf = m as f64;
    let ln_half_m = -mf * std::f64::consts::LN_2;
    let ln_m_fact = ln_gamma(mf + 1.0);
    let mut acc = f64::NEG_INFINITY;
    // terms shrink away from m/2, so sum from the far end towards k for accuracy
    for i in (k..=m).rev() {
        let fi = i as f64;
        let ln_term = ln_m_fact - ln_gamma(fi + 1.0) - ln_gamma(mf - fi + 1.0) + ln_half_m;
        acc = ln_add_exp(acc, ln_term);
    }
    acc.min(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ChiSquared, StudentsT};

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn pearson_basics() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(pearson(&[1.0, 1.0], &[0.0, 1.0]), None);
    }

    #[test]
    fn t_tail_matches_statrs_in_range() {
        for &df in &[1.0, 2.5, 9.0, 30.0, 200.0, 9998.0] {
            let dist = StudentsT::new(0.0, 1.0, df).unwrap();
            for &t in &[0.1, 0.7, 1.5, 3.0, 4.5, 8.0] {
                let reference = 2.0 * dist.sf(t);
                if reference < 1e-12 {
                    continue;
                }
                let ours = ln_student_t_two_sided(t, df).exp();
                assert!(close(ours, reference, 1e-7), "t={t} df={df}: {ours} vs {reference}");
            }
        }
    }

    #[test]
    fn t_tail_large_df_meets_normal() {
        // beyond df = 1e7 the normal tail takes over; both sides must agree
        for &t in &[2.0, 6.0, 12.0] {
            let a = ln_student_t_two_sided(t, 9.9e6);
            let b = ln_student_t_two_sided(t, 1.1e7);
            assert!((a - b).abs() < 1e-3 * a.abs().max(1.0), "t={t}: {a} vs {b}");
        }
    }

    #[test]
    fn t_tail_deep_values_are_finite() {
        let v = t_to_neglog10p(60.0, 5000.0);
        assert!(v.is_finite() && v > 300.0, "{v}");
        assert_eq!(t_to_neglog10p(0.0, 10.0), 0.0);
    }

    #[test]
    fn chi2_tail_matches_statrs_in_range() {
        for &df in &[1.0, 2.0, 5.0, 17.0] {
            let dist = ChiSquared::new(df).unwrap();
            for &x in &[0.01, 0.5, 2.0, 7.5, 20.0, 60.0] {
                let reference = dist.sf(x);
                if reference < 1e-12 {
                    continue;
                }
                let ours = ln_chi2_sf(x, df).exp();
                assert!(close(ours, reference, 1e-7), "x={x} df={df}: {ours} vs {reference}");
            }
        }
    }

    #[test]
    fn chi2_one_df_equals_two_sided_normal() {
        // chi2(1) tail at z^2 is the two-sided normal tail at z, checked far past underflow
        for &z in &[6.0, 14.142135623730951, 30.0] {
            let lhs = ln_chi2_sf(z * z, 1.0);
            let rhs = std::f64::consts::LN_2 + ln_normal_sf(z);
            assert!((lhs - rhs).abs() < 1e-6 * rhs.abs(), "z={z}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn binomial_tail_small_exact() {
        // m = 4: P(X>=3) = (4 + 1)/16
        let p = ln_binomial_upper_tail_half(3, 4).exp();
        assert!((p - 5.0 / 16.0).abs() < 1e-14);
        assert_eq!(ln_binomial_upper_tail_half(0, 4), 0.0);
        assert!((ln_binomial_upper_tail_half(4, 4) - 4.0 * (0.5f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn normal_quantile_known() {
        assert!((normal_quantile(0.975) - 1.959963984540054).abs() < 1e-9);
    }
}
