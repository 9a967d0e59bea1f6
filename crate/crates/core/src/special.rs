//! Modified Bessel functions and the Gamma function.
//!
//! `I0`/`I1` back the closed-form radial solutions on the unit disk that the
//! solver tests compare against, and `gamma` normalizes the fractional-step
//! convolution weights. Arguments stay small in this crate (|x| of a few),
//! where the power series converge to machine precision.

/// Modified Bessel function of the first kind, order zero.
///
/// Power series for |x| <= 30 (all terms positive, no cancellation),
/// asymptotic expansion beyond.
pub fn bessel_i0(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 30.0 {
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..200 {
            term *= q / ((k * k) as f64);
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
        }
        sum
    } else {
        // A&S 9.7.1, five terms are plenty for |x| > 30
        let inv = 1.0 / ax;
        let series = 1.0
            + inv
                * (0.125
                    + inv
                        * (0.0703125
                            + inv
                                * (0.0732421875
                                    + inv * (0.112152099609375 + inv * 0.22710800170898438))));
        ax.exp() / (2.0 * std::f64::consts::PI * ax).sqrt() * series
    }
}

/// Modified Bessel function of the first kind, order one.
pub fn bessel_i1(x: f64) -> f64 {
    let ax = x.abs();
    let value = if ax <= 30.0 {
        let q = 0.25 * x * x;
        let mut term = 0.5 * ax;
        let mut sum = term;
        for k in 1..200 {
            term *= q / ((k * (k + 1)) as f64);
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
        }
        sum
    } else {
        let inv = 1.0 / ax;
        let series = 1.0
            - inv
                * (0.375
                    + inv
                        * (0.1171875
                            + inv
                                * (0.1025390625
                                    + inv * (0.144195556640625 + inv * 0.277_576_446_533_203_1))));
        ax.exp() / (2.0 * std::f64::consts::PI * ax).sqrt() * series
    };
    if x < 0.0 {
        -value
    } else {
        value
    }
}

/// Euler's Gamma function for positive real arguments (Lanczos, g = 7, n = 9).
pub fn gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEFFS: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    assert!(x > 0.0, "gamma requires a positive argument, got {x}");
    if x < 0.5 {
        // reflection formula
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x))
    } else {
        let z = x - 1.0;
        let mut acc = COEFFS[0];
        for (i, c) in COEFFS.iter().enumerate().skip(1) {
            acc += c / (z + i as f64);
        }
        let t = z + G + 0.5;
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * acc
    }
}

/// Exact factorial for k <= 20 (fits in u64 and in the f64 mantissa).
pub fn factorial(k: u32) -> f64 {
    assert!(k <= 20, "factorial overflows beyond 20!, got {k}");
    (1..=k as u64).product::<u64>() as f64
}
