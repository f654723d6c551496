//! Scalar special functions: standard normal CDF/PDF and the modified Bessel
//! function of the second kind for real order (needed by the Matérn family).

use std::f64::consts::PI;

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const INV_SQRT_2PI: f64 = 0.3989422804014327; // 1/sqrt(2*pi)

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Modified Bessel function of the second kind, K_nu(x), for real nu >= 0 and
/// x > 0.
///
/// Uses Temme's series for x <= 2 and the Steed continued-fraction method for
/// x > 2 to obtain K at the fractional order mu in [-1/2, 1/2], then recurs
/// upward to nu. Both branches are computed in scaled form (e^x * K) and
/// rescaled once at the end.
pub fn bessel_k(nu: f64, x: f64) -> f64 {
    assert!(nu >= 0.0 && x > 0.0, "bessel_k requires nu >= 0, x > 0");
    let n_steps = (nu + 0.5).floor() as i32;
    let mu = nu - n_steps as f64; // -1/2 <= mu <= 1/2

    let (mut k_mu, mut k_mup1) = if x <= 2.0 {
        k_scaled_temme(mu, x)
    } else {
        k_scaled_steed(mu, x)
    };

    for n in 0..n_steps {
        let next = 2.0 * (mu + n as f64 + 1.0) / x * k_mup1 + k_mu;
        k_mu = k_mup1;
        k_mup1 = next;
    }
    k_mu * (-x).exp()
}

/// Temme coefficients: Gamma(1+mu) and Gamma(1-mu) for the p/q series terms,
/// plus g1 = (1/Gamma(1-mu) - 1/Gamma(1+mu)) / (2 mu) and
/// g2 = (1/Gamma(1-mu) + 1/Gamma(1+mu)) / 2 for f_0, with the mu -> 0 limit
/// of g1 handled by a Taylor expansion to avoid cancellation.
fn temme_gamma(mu: f64) -> (f64, f64, f64, f64) {
    const EULER_GAMMA: f64 = 0.5772156649015329;
    // Next even-order Taylor coefficient of g1 about mu = 0:
    // gamma^3/6 - gamma*pi^2/12 + zeta(3)/3.
    const C3: f64 = -0.04200263503409524;
    let gamma_1pmu = libm::tgamma(1.0 + mu);
    let gamma_1mmu = libm::tgamma(1.0 - mu);
    let g1 = if mu.abs() < 1e-4 {
        EULER_GAMMA + C3 * mu * mu
    } else {
        (1.0 / gamma_1mmu - 1.0 / gamma_1pmu) / (2.0 * mu)
    };
    let g2 = 0.5 * (1.0 / gamma_1mmu + 1.0 / gamma_1pmu);
    (gamma_1pmu, gamma_1mmu, g1, g2)
}

/// Scaled (e^x K) Bessel K at orders mu and mu+1 via Temme's series; valid for
/// |mu| <= 1/2 and small x.
fn k_scaled_temme(mu: f64, x: f64) -> (f64, f64) {
    const MAX_ITER: usize = 15_000;
    let half_x = 0.5 * x;
    let ln_half_x = half_x.ln();
    let half_x_mu = (mu * ln_half_x).exp();
    let pi_mu = PI * mu;
    let sigma = -mu * ln_half_x;
    let sinrat = if pi_mu.abs() < f64::EPSILON {
        1.0
    } else {
        pi_mu / pi_mu.sin()
    };
    let sinhrat = if sigma.abs() < f64::EPSILON {
        1.0
    } else {
        sigma.sinh() / sigma
    };

    let (gamma_1pmu, gamma_1mmu, g1, g2) = temme_gamma(mu);

    let mut fk = sinrat * (sigma.cosh() * g1 - sinhrat * ln_half_x * g2);
    let mut pk = 0.5 / half_x_mu * gamma_1pmu;
    let mut qk = 0.5 * half_x_mu * gamma_1mmu;
    let mut ck = 1.0;
    let mut sum0 = fk;
    let mut sum1 = pk;
    for k in 1..=MAX_ITER {
        let kf = k as f64;
        fk = (kf * fk + pk + qk) / (kf * kf - mu * mu);
        ck *= half_x * half_x / kf;
        pk /= kf - mu;
        qk /= kf + mu;
        let hk = -kf * fk + pk;
        let del0 = ck * fk;
        sum0 += del0;
        sum1 += ck * hk;
        if del0.abs() < 0.5 * sum0.abs() * f64::EPSILON {
            break;
        }
    }
    let ex = x.exp();
    (sum0 * ex, sum1 * 2.0 / x * ex)
}

/// Scaled (e^x K) Bessel K at orders mu and mu+1 via the Steed/Temme CF2
/// continued fraction; valid for |mu| <= 1/2 and x > 2.
fn k_scaled_steed(mu: f64, x: f64) -> (f64, f64) {
    const MAX_ITER: usize = 10_000;
    let mut bi = 2.0 * (1.0 + x);
    let mut di = 1.0 / bi;
    let mut delhi = di;
    let mut hi = di;

    let mut qi = 0.0;
    let mut qip1 = 1.0;

    let a1 = -(0.25 - mu * mu);
    let mut ai = a1;
    let mut ci = -a1;
    let mut bqi = -a1;

    let mut s = 1.0 + bqi * delhi;

    for i in 2..=MAX_ITER {
        ai -= 2.0 * (i - 1) as f64;
        ci = -ai * ci / i as f64;
        let tmp = (qi - bi * qip1) / ai;
        qi = qip1;
        qip1 = tmp;
        bqi += ci * qip1;
        bi += 2.0;
        di = 1.0 / (bi + ai * di);
        delhi = (bi * di - 1.0) * delhi;
        hi += delhi;
        let dels = bqi * delhi;
        s += dels;
        if (dels / s).abs() < f64::EPSILON {
            break;
        }
    }
    let hi = -a1 * hi;

    let k_mu = (PI / (2.0 * x)).sqrt() / s;
    let k_mup1 = k_mu * (mu + x + 0.5 - hi) / x;
    (k_mu, k_mup1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k_half(x: f64) -> f64 {
        (PI / (2.0 * x)).sqrt() * (-x).exp()
    }

    #[test]
    fn norm_cdf_reference_points() {
        assert!((norm_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((norm_cdf(1.959963984540054) - 0.975).abs() < 1e-12);
        assert!((norm_cdf(-8.0) - 6.220960574271786e-16).abs() < 1e-22);
        assert!((norm_pdf(0.0) - 0.3989422804014327).abs() < 1e-15);
    }

    #[test]
    fn bessel_half_integer_closed_forms() {
        for &x in &[0.1, 1.0, 5.0] {
            let expected = k_half(x);
            let got = bessel_k(0.5, x);
            assert!(
                ((got - expected) / expected).abs() < 1e-10,
                "K_1/2({x}): got {got}, expected {expected}"
            );
            // K_{3/2}(x) = sqrt(pi/2x) e^-x (1 + 1/x)
            let e32 = k_half(x) * (1.0 + 1.0 / x);
            let g32 = bessel_k(1.5, x);
            assert!(((g32 - e32) / e32).abs() < 1e-10);
            // K_{5/2}(x) = sqrt(pi/2x) e^-x (1 + 3/x + 3/x^2)
            let e52 = k_half(x) * (1.0 + 3.0 / x + 3.0 / (x * x));
            let g52 = bessel_k(2.5, x);
            assert!(((g52 - e52) / e52).abs() < 1e-10);
        }
    }

    #[test]
    fn bessel_fractional_orders_match_reference() {
        // Reference values computed with scipy.special.kv.
        let cases = [
            (0.8, 0.05, 11.018879633967888),
            (0.8, 0.5, 1.3508481018154008),
            (0.8, 1.0, 0.530191901503203),
            (0.8, 3.0, 0.038121704182096226),
            (0.8, 10.0, 1.833138748927476e-5),
            (0.3, 0.5, 0.9764741243817909),
            (0.3, 3.0, 0.0351976322831403),
            (1.7, 0.05, 240.14812072096626),
            (1.7, 1.0, 1.138717809179936),
            (2.5, 0.5, 20.425904466498487),
            (2.5, 10.0, 2.3931325864627893e-5),
        ];
        for (nu, x, expected) in cases {
            let got = bessel_k(nu, x);
            assert!(
                ((got - expected) / expected).abs() < 1e-12,
                "K_{nu}({x}): got {got}, expected {expected}"
            );
        }
    }

    #[test]
    fn bessel_positive_and_decreasing() {
        for &nu in &[0.3, 0.8, 1.3, 2.7] {
            let mut prev = f64::INFINITY;
            for i in 1..200 {
                let x = 0.05 * i as f64;
                let k = bessel_k(nu, x);
                assert!(k > 0.0);
                assert!(k < prev, "K_{nu} not decreasing at x={x}");
                prev = k;
            }
        }
    }
}
