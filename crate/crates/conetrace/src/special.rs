//! Special functions and series utilities: complex Gamma (Lanczos), polygamma,
//! local Gamma expansions, the exponential integral E1, and small helpers for
//! power-series arithmetic used by the Laurent machinery.

use num_complex::Complex64;

/// Euler–Mascheroni constant γ.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// ζ(2), ζ(3), … ζ(12); used for the Taylor expansion of log Γ(1+w).
const ZETA: [f64; 11] = [
    1.644_934_066_848_226_4,  // ζ(2)
    1.202_056_903_159_594_3,  // ζ(3)
    1.082_323_233_711_138_2,  // ζ(4)
    1.036_927_755_143_369_9,  // ζ(5)
    1.017_343_061_984_449_1,  // ζ(6)
    1.008_349_277_381_922_7,  // ζ(7)
    1.004_077_356_197_944_3,  // ζ(8)
    1.002_008_392_826_082_2,  // ζ(9)
    1.000_994_575_127_818_1,  // ζ(10)
    1.000_494_188_604_119_5,  // ζ(11)
    1.000_246_086_553_308_05, // ζ(12)
];

/// n! for n ≤ 20 (exact in f64 up to 18!).
const FACTORIAL: [f64; 21] = [
    1.0,
    1.0,
    2.0,
    6.0,
    24.0,
    120.0,
    720.0,
    5040.0,
    40320.0,
    362880.0,
    3628800.0,
    39916800.0,
    479001600.0,
    6227020800.0,
    87178291200.0,
    1307674368000.0,
    20922789888000.0,
    355687428096000.0,
    6402373705728000.0,
    121645100408832000.0,
    2432902008176640000.0,
];

/// n! as f64; falls back to a product loop past the table.
pub fn factorial(n: u32) -> f64 {
    if (n as usize) < FACTORIAL.len() {
        FACTORIAL[n as usize]
    } else {
        (21..=n).fold(FACTORIAL[20], |acc, i| acc * i as f64)
    }
}

/// Rising factorial z(z+1)…(z+j−1); poch(z, 0) = 1.
pub fn pochhammer(z: Complex64, j: u32) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    for i in 0..j {
        acc *= z + i as f64;
    }
    acc
}

/// Coefficients of the polynomial z(z+1)…(z+j−1) in ascending powers of z.
pub fn pochhammer_poly(j: u32) -> Vec<Complex64> {
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    for i in 0..j {
        // multiply by (z + i)
        let c = Complex64::new(i as f64, 0.0);
        let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
        for (r, &a) in coeffs.iter().enumerate() {
            next[r] += a * c;
            next[r + 1] += a;
        }
        coeffs = next;
    }
    coeffs
}

// Lanczos approximation, g = 7, 9 coefficients. Accurate to ~1e-14 on the
// strips used here.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Γ(z) for complex z via Lanczos with reflection. Returns a non-finite value
/// at the poles z = 0, −1, −2, …
pub fn gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // reflection: Γ(z) = π / (sin πz · Γ(1−z))
        let pi = std::f64::consts::PI;
        let sin = (pi * z).sin();
        return pi / (sin * gamma(Complex64::new(1.0, 0.0) - z));
    }
    let zm1 = z - 1.0;
    let mut acc = Complex64::new(LANCZOS[0], 0.0);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (zm1 + i as f64);
    }
    let t = zm1 + LANCZOS_G + 0.5;
    let sqrt_2pi = (2.0 * std::f64::consts::PI).sqrt();
    sqrt_2pi * t.powc(zm1 + 0.5) * (-t).exp() * acc
}

// Bernoulli numbers B_2, B_4, …, B_16 for the polygamma asymptotics.
const BERNOULLI: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

/// Polygamma ψ^{(n)}(z) for n ≤ 12 at z off the poles. Recurrence pushes the
/// argument to Re z ≥ 10 + 2n, then the Bernoulli asymptotic series applies.
pub fn polygamma(n: u32, z: Complex64) -> Complex64 {
    assert!(n <= 12, "polygamma implemented for n <= 12");
    let mut z = z;
    let mut acc = Complex64::new(0.0, 0.0);
    // ψ^{(n)}(z) = ψ^{(n)}(z+1) − (−1)^n n! z^{−n−1}
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let z_min = 10.0 + 2.0 * n as f64;
    while z.re < z_min {
        acc -= sign * factorial(n) * z.powi(-(n as i32) - 1);
        z += 1.0;
    }
    let mut res = Complex64::new(0.0, 0.0);
    if n == 0 {
        res += z.ln() - 0.5 / z;
        for (k, &b) in BERNOULLI.iter().enumerate() {
            let two_k = 2 * (k + 1) as i32;
            res -= b / (two_k as f64) * z.powi(-two_k);
        }
    } else {
        // ψ^{(n)}(z) ~ (−1)^{n−1}[ (n−1)!/z^n + n!/(2 z^{n+1})
        //              + Σ_k B_{2k} (2k+n−1)!/(2k)! z^{−2k−n} ]
        let lead_sign = if (n - 1) % 2 == 0 { 1.0 } else { -1.0 };
        let mut s = factorial(n - 1) * z.powi(-(n as i32))
            + factorial(n) / 2.0 * z.powi(-(n as i32) - 1);
        for (k, &b) in BERNOULLI.iter().enumerate() {
            let two_k = 2 * (k + 1) as u32;
            let coeff = b * factorial(two_k + n - 1) / factorial(two_k);
            s += coeff * z.powi(-((two_k + n) as i32));
        }
        res = lead_sign * s;
    }
    res + acc
}

/// Taylor coefficients of Γ at a regular point z0, orders 0..len-1.
/// Uses Γ(z0+w) = Γ(z0)·exp(ψ(z0)w + ψ'(z0)w²/2! + …).
pub fn gamma_taylor_regular(z0: Complex64, len: usize) -> Vec<Complex64> {
    assert!(len <= 13, "gamma_taylor_regular supports order <= 12");
    let mut log_series = vec![Complex64::new(0.0, 0.0); len];
    for j in 1..len {
        log_series[j] = polygamma(j as u32 - 1, z0) / factorial(j as u32);
    }
    let mut out = series_exp(&log_series);
    let g0 = gamma(z0);
    for c in &mut out {
        *c *= g0;
    }
    out
}

/// Local data of Γ at the pole z = −ℓ: the residue r_1 = (−1)^ℓ/ℓ! and the
/// Taylor coefficients of Γ(z) − r_1/(z+ℓ), orders 0..len-1. Exact series
/// arithmetic via Γ(z) = Γ(1+w)/(w·∏_{i=1}^{ℓ}(w−i)), w = z+ℓ.
pub fn gamma_laurent_neg(ell: u32, len: usize) -> (Complex64, Vec<Complex64>) {
    let order = len + 1;
    // log Γ(1+w) = −γ w + Σ_{j≥2} (−1)^j ζ(j) w^j / j
    let mut log_series = vec![Complex64::new(0.0, 0.0); order + 1];
    if order >= 1 {
        log_series[1] = Complex64::new(-EULER_GAMMA, 0.0);
    }
    for j in 2..=order {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        log_series[j] = Complex64::new(sign * ZETA[j - 2] / j as f64, 0.0);
    }
    let mut num = series_exp(&log_series); // Γ(1+w)
    // divide by (w − i) for i = 1..ℓ: 1/(w−i) = −(1/i)·Σ (w/i)^r
    for i in 1..=ell {
        let inv = -1.0 / i as f64;
        let mut geo = vec![Complex64::new(0.0, 0.0); order + 1];
        let mut p = 1.0;
        for g in geo.iter_mut() {
            *g = Complex64::new(inv * p, 0.0);
            p /= i as f64;
        }
        num = series_mul(&num, &geo, order + 1);
    }
    // divide by w: Laurent r_1 = num[0], Taylor_j = num[j+1]
    let residue = num[0];
    let taylor = num[1..=len].to_vec();
    (residue, taylor)
}

/// Residue of Γ at z = −ℓ and the regular value Γ₀(−ℓ) there.
pub fn gamma_residue_and_regular(ell: u32) -> (Complex64, Complex64) {
    let (r, t) = gamma_laurent_neg(ell, 1);
    (r, t[0])
}

/// Exponential integral E1(x) for x > 0: power series for x ≤ 1, continued
/// fraction by backward recurrence otherwise.
pub fn exp1(x: f64) -> f64 {
    if x == 0.0 {
        return f64::INFINITY;
    }
    if x <= 1.0 {
        let mut e1 = 1.0;
        let mut r = 1.0;
        for k in 1..=30 {
            let d = k as f64 + 1.0;
            r = -r * k as f64 * x / (d * d);
            e1 += r;
            if r.abs() <= e1.abs() * 1e-16 {
                break;
            }
        }
        -EULER_GAMMA - x.ln() + x * e1
    } else {
        let m = (80.0 / x) as usize + 20;
        let mut t0 = 0.0;
        for k in (1..=m).rev() {
            t0 = k as f64 / (k as f64 / (x + t0) + 1.0);
        }
        (-x).exp() / (x + t0)
    }
}

// ---- power series helpers (coefficient vectors in ascending order) ----

/// Cauchy product truncated to `len` coefficients.
pub fn series_mul(a: &[Complex64], b: &[Complex64], len: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for (i, &ai) in a.iter().enumerate().take(len) {
        for (j, &bj) in b.iter().enumerate() {
            if i + j >= len {
                break;
            }
            out[i + j] += ai * bj;
        }
    }
    out
}

/// exp of a series with zero constant term times e^{a₀}.
pub fn series_exp(a: &[Complex64]) -> Vec<Complex64> {
    let n = a.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    out[0] = a[0].exp();
    for k in 1..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 1..=k {
            acc += j as f64 * a[j] * out[k - j];
        }
        out[k] = acc / k as f64;
    }
    out
}

/// Reciprocal series 1/a to `len` coefficients; a[0] must be nonzero.
pub fn series_inv(a: &[Complex64], len: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    out[0] = 1.0 / a[0];
    for k in 1..len {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 1..=k.min(a.len() - 1) {
            acc += a[j] * out[k - j];
        }
        out[k] = -acc / a[0];
    }
    out
}

/// True if x is within `tol` of a nonnegative integer; returns it.
pub fn as_nonneg_int(x: f64, tol: f64) -> Option<u32> {
    if x < -tol {
        return None;
    }
    let r = x.round();
    if (x - r).abs() <= tol && r >= 0.0 {
        Some(r as u32)
    } else {
        None
    }
}
