//! The residue-type trace functionals on model cone symbols: the Wodzicki
//! residue density, the b-integral with its pole data, Tr_σ, Tr_{∂,σ}, the
//! regularized boundary trace Tr_∂, and the change-of-boundary-defining-
//! function identities.
//!
//! Conventions: the base Y is reduced to a point, so densities are scalar
//! functions of x written u(x)·dx/x; all ∫_Y are identities. Gated values
//! are exactly 0 when their ℕ₀-gate fails.

use num_complex::Complex64;
use thiserror::Error;

use crate::heat::{resolvent_symbol, ConeOperatorModel, HeatError};
use crate::mellin::{angular_factor, mellin_diagonal, MellinError};
use crate::special::as_nonneg_int;
use crate::symcore::{ConeSymbolFamily, FamilyKind, ProfileEval, XDensity};

#[derive(Debug, Error)]
pub enum ResidueError {
    #[error("density evaluator is singular inside (0, 1]")]
    NonIntegrableInterior,
    #[error(transparent)]
    Mellin(#[from] MellinError),
    #[error(transparent)]
    Heat(#[from] Box<HeatError>),
    #[error(transparent)]
    Mero(#[from] crate::merofn::MeroError),
}

const GATE_TOL: f64 = 1e-9;

/// Wodzicki residue density of a λ-free family: for each x-offset, the
/// angular integral over |ξ| = 1 of the degree-(−n) homogeneous component.
/// Zero if no such component exists (non-integer order families).
pub fn residue_density(fam: &ConeSymbolFamily) -> XDensity {
    assert_eq!(fam.kind, FamilyKind::LambdaFree, "residue density needs λ-free symbol data");
    let n = fam.n;
    let target = -(n as f64);
    let mut taylor = Vec::new();
    for xt in &fam.x_terms {
        let mut coeff = Complex64::new(0.0, 0.0);
        for part in &xt.parts {
            if (part.degree - target).abs() <= 1e-9 {
                for atom in &part.atoms {
                    coeff += atom.coeff * angular_factor(n, atom.parity);
                }
            }
        }
        if coeff.norm() > 0.0 {
            taylor.push((xt.offset, coeff));
        }
    }
    XDensity::polynomial(taylor)
}

/// Result of the b-integral: the regular value at z = 0 of ∫₀¹ x^z u, plus
/// the full pole list of z ↦ ∫ x^z u (simple poles at z = −offset).
#[derive(Debug, Clone)]
pub struct BIntegral {
    pub value: Complex64,
    pub poles: Vec<(f64, Complex64)>,
}

/// The b-integral of a density supported in [0, 1]. The Taylor route is
/// exact coefficient arithmetic; a custom evaluator adds a numeric interior
/// correction for the part not captured by the Taylor data.
pub fn b_integral(u: &XDensity) -> Result<BIntegral, ResidueError> {
    let profile = &u.0;
    let poles: Vec<(f64, Complex64)> = profile.taylor.iter().map(|&(o, c)| (-o, c)).collect();
    let mut value = Complex64::new(0.0, 0.0);
    for &(o, c) in &profile.taylor {
        if o.abs() > GATE_TOL {
            value += c / o;
        }
        // the offset-0 term contributes its 1/z pole and no regular value
    }
    if let ProfileEval::Custom(_) = profile.eval {
        // interior remainder: ∫₀¹ (u(x) − Taylor polynomial) dx/x
        let sub = |x: f64| -> Complex64 {
            let mut v = profile.value(x);
            for &(o, c) in &profile.taylor {
                v -= c * x.powf(o);
            }
            v
        };
        let mut acc = Complex64::new(0.0, 0.0);
        let hi = profile.support.1.min(1.0);
        let mut a = 1e-7f64;
        while a < hi {
            let b = (2.0 * a).min(hi);
            acc += gauss32(|x| sub(x) / x, a, b);
            a = b;
        }
        if !(acc.re.is_finite() && acc.im.is_finite()) {
            return Err(ResidueError::NonIntegrableInterior);
        }
        value += acc;
    }
    Ok(BIntegral { value, poles })
}

fn gauss32(f: impl Fn(f64) -> Complex64, a: f64, b: f64) -> Complex64 {
    crate::mellin::gl32_panel(f, a, b)
}

/// A trace value together with the ℕ₀-gate that produced it.
#[derive(Debug, Clone, Copy)]
pub struct GatedValue {
    pub value: Complex64,
    pub gate_open: bool,
    pub gate_param: f64,
}

/// The x⁰-coefficient functional (1/p!)∂_x^p{x^p u}|₀ with its gate record.
pub fn gated_boundary_coefficient(u: &XDensity, p: f64) -> GatedValue {
    match as_nonneg_int(p, GATE_TOL) {
        Some(_) => GatedValue { value: u.0.coeff_at(0.0), gate_open: true, gate_param: p },
        None => GatedValue { value: Complex64::new(0.0, 0.0), gate_open: false, gate_param: p },
    }
}

/// Tr_{∂,σ}(P): the x⁰ Taylor coefficient of the residue density, gated on
/// p ∈ ℕ₀ (the restriction of the Wodzicki residue to the boundary).
pub fn tr_partial_sigma(fam: &ConeSymbolFamily) -> GatedValue {
    let density = residue_density(fam);
    gated_boundary_coefficient(&density, fam.weight)
}

/// Tr_σ(P) = ∫ᵇ res P: the b-integral of the residue density.
pub fn tr_sigma(fam: &ConeSymbolFamily) -> Result<Complex64, ResidueError> {
    Ok(b_integral(&residue_density(fam))?.value)
}

/// Tr_∂(P) with the regularizer fixed to the model's own A^z = M(Q₀)(−z):
/// composes P with the resolvent parametrix, takes the regular value at
/// z = 0 of the diagonal Mellin family, and extracts the x⁰ coefficient.
/// Gated on p ∈ ℕ₀.
pub fn tr_partial(
    p_fam: &ConeSymbolFamily,
    a_model: &ConeOperatorModel,
    strip: (f64, f64),
) -> Result<GatedValue, ResidueError> {
    let p = p_fam.weight;
    if as_nonneg_int(p, GATE_TOL).is_none() {
        return Ok(GatedValue { value: Complex64::new(0.0, 0.0), gate_open: false, gate_param: p });
    }
    // P # parametrix with the trailing kernel factor x^m applied after the
    // composition (it commutes past left factors)
    let composite = resolvent_symbol(a_model, Some(p_fam), p_fam.truncation).map_err(Box::new)?;
    let diag = mellin_diagonal(&composite, strip)?;
    let density = diag.regular_value_density_at(Complex64::new(0.0, 0.0))?;
    Ok(GatedValue { value: density.0.coeff_at(0.0), gate_open: true, gate_param: p })
}

/// The three trace functionals of one (P, A) pair, with gate records.
#[derive(Debug, Clone)]
pub struct TraceReport {
    pub tr_sigma: Complex64,
    pub tr_partial: GatedValue,
    pub tr_partial_sigma: GatedValue,
    /// Identity of the Tr_∂ regularizer (fixed: the model's own A^z).
    pub regularizer: String,
}

pub fn trace_report(
    p_fam: &ConeSymbolFamily,
    a_model: &ConeOperatorModel,
    strip: (f64, f64),
) -> Result<TraceReport, ResidueError> {
    Ok(TraceReport {
        tr_sigma: tr_sigma(p_fam)?,
        tr_partial: tr_partial(p_fam, a_model, strip)?,
        tr_partial_sigma: tr_partial_sigma(p_fam),
        regularizer: format!(
            "A^z = M(Q0)(-z) of the order-{} model operator (mu = {})",
            a_model.m, a_model.mu
        ),
    })
}

/// A positive boundary-defining-function factor a(x) (x′ = a·x): Taylor data
/// of a at x = 0 plus an evaluator.
#[derive(Clone)]
pub struct BdfFactor {
    /// Taylor coefficients a_0, a_1, … of a at 0 (a_0 > 0).
    pub taylor: Vec<f64>,
    pub eval: std::sync::Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl BdfFactor {
    pub fn constant(a0: f64) -> Self {
        BdfFactor { taylor: vec![a0], eval: std::sync::Arc::new(move |_| a0) }
    }

    pub fn one_plus_x() -> Self {
        BdfFactor { taylor: vec![1.0, 1.0], eval: std::sync::Arc::new(|x| 1.0 + x) }
    }

    pub fn exp_x() -> Self {
        BdfFactor {
            taylor: vec![1.0, 1.0, 0.5, 1.0 / 6.0, 1.0 / 24.0, 1.0 / 120.0],
            eval: std::sync::Arc::new(|x| x.exp()),
        }
    }

    /// Taylor coefficients of log a(x) at 0, to `len` terms.
    pub fn log_taylor(&self, len: usize) -> Vec<f64> {
        // log(a0(1 + v)) = log a0 + v − v²/2 + v³/3 − …, v = (a − a0)/a0
        let a0 = self.taylor[0];
        let mut v = vec![0.0; len];
        for (i, &c) in self.taylor.iter().enumerate().skip(1) {
            if i < len {
                v[i] = c / a0;
            }
        }
        let mut out = vec![0.0; len];
        out[0] = a0.ln();
        let mut vpow = v.clone();
        for j in 1..len {
            let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
            for i in 0..len {
                out[i] += sign * vpow[i] / j as f64;
            }
            let mut next = vec![0.0; len];
            for i in 0..len {
                for k in 0..len - i {
                    next[i + k] += vpow[i] * v[k];
                }
            }
            vpow = next;
        }
        out
    }
}

/// Both sides of the change-of-bdf identity for the b-integral:
/// ∫_{b,x′} u = ∫_{b,x} u + (1/p!)∂_x^p{x^p log a · u}|₀, each side
/// computed independently.
#[derive(Debug, Clone)]
pub struct ChangeBdfReport {
    pub bint_x: Complex64,
    pub bint_x_prime: Complex64,
    pub correction: Complex64,
    /// bint_x_prime − bint_x − correction.
    pub discrepancy: Complex64,
    pub gate_open: bool,
}

/// Evaluates the b-integral w.r.t. x′ = a·x directly (regular value at z = 0
/// of ∫ (ax)^z u) and compares with the correction formula.
pub fn change_bdf(u: &XDensity, a: &BdfFactor, p: f64) -> Result<ChangeBdfReport, ResidueError> {
    let bint_x = b_integral(u)?.value;

    // Regular value at 0 of F(z) = ∫₀¹ a(x)^z x^z u(x) dx/x. With
    // v(x, z) = a^z u and x-Taylor coefficients c_o(z) analytic in z:
    // F_reg(0) = Σ_{o≠0} c_o(0)/o + c_0'(0) + interior remainder, where
    // c_o(0) = u_o and c_0'(0) collects the log a convolution.
    let len = 10usize;
    let log_a = a.log_taylor(len);
    let mut value = Complex64::new(0.0, 0.0);
    for &(o, c) in &u.0.taylor {
        if o.abs() > GATE_TOL {
            value += c / o;
        }
    }
    let mut c0_prime = Complex64::new(0.0, 0.0);
    for &(o, c) in &u.0.taylor {
        if o <= GATE_TOL {
            if let Some(ji) = as_nonneg_int(-o, GATE_TOL) {
                if (ji as usize) < len {
                    c0_prime += c * log_a[ji as usize];
                }
            }
        }
    }
    value += c0_prime;
    if let ProfileEval::Custom(_) = u.0.eval {
        let sub = |x: f64| -> Complex64 {
            let mut v = u.0.value(x);
            for &(o, c) in &u.0.taylor {
                v -= c * x.powf(o);
            }
            v
        };
        let mut acc = Complex64::new(0.0, 0.0);
        let mut lo = 1e-7f64;
        while lo < 1.0 {
            let hi = (2.0 * lo).min(1.0);
            acc += gauss32(|x| sub(x) / x, lo, hi);
            lo = hi;
        }
        value += acc;
    }
    let bint_x_prime = value;

    let gate_open = as_nonneg_int(p, GATE_TOL).is_some();
    let correction = if gate_open {
        let mut corr = Complex64::new(0.0, 0.0);
        for &(o, c) in &u.0.taylor {
            if o <= GATE_TOL {
                if let Some(ji) = as_nonneg_int(-o, GATE_TOL) {
                    if (ji as usize) < len {
                        corr += c * log_a[ji as usize];
                    }
                }
            }
        }
        corr
    } else {
        Complex64::new(0.0, 0.0)
    };

    Ok(ChangeBdfReport {
        bint_x,
        bint_x_prime,
        correction,
        discrepancy: bint_x_prime - bint_x - correction,
        gate_open,
    })
}

/// Pointwise product density log a(x)·u(x), Taylor data convolved from the
/// factors (used for the Tr_σ change-of-bdf covariance).
pub fn log_bdf_times(u: &XDensity, a: &BdfFactor) -> XDensity {
    let len = 10usize;
    let log_a = a.log_taylor(len);
    let mut taylor = Vec::new();
    for &(o, c) in &u.0.taylor {
        for (j, &lj) in log_a.iter().enumerate() {
            if lj != 0.0 {
                taylor.push((o + j as f64, c * lj));
            }
        }
    }
    XDensity::polynomial(taylor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::{Cutoff, HomogeneousPart, SymbolAtom, XProfile, XTerm};
    use approx::assert_relative_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn free_family(m_prime: f64, p: f64, terms: Vec<(f64, Vec<(f64, f64)>)>) -> ConeSymbolFamily {
        // terms: (offset, [(coeff, s)])
        let x_terms = terms
            .into_iter()
            .map(|(off, atoms)| XTerm {
                offset: off,
                parts: atoms
                    .into_iter()
                    .map(|(cf, s)| HomogeneousPart::new(s, vec![SymbolAtom::lambda_free(c(cf), s)]))
                    .collect(),
            })
            .collect();
        ConeSymbolFamily::new(FamilyKind::LambdaFree, m_prime, p, 1.0, 1, 16, Cutoff::Sharp, x_terms)
            .unwrap()
    }

    #[test]
    fn residue_density_examples() {
        // n=1, atom |ξ|^{−1}, x-profile ≡ 1 → coefficient 1/π at offset 0
        let fam = free_family(-1.0, 0.0, vec![(0.0, vec![(1.0, -1.0)])]);
        let d = residue_density(&fam);
        assert_relative_eq!(d.0.coeff_at(0.0).re, 1.0 / std::f64::consts::PI, epsilon = 1e-15);
        // non-integer order → zero density
        let fam = free_family(0.3, 0.0, vec![(0.0, vec![(1.0, 0.3)])]);
        assert!(residue_density(&fam).0.is_zero());
        // |ξ|^{−2} in n=1 → zero (degree −2 ≠ −n)
        let fam = free_family(-2.0, 0.0, vec![(0.0, vec![(1.0, -2.0)])]);
        assert!(residue_density(&fam).0.is_zero());
    }

    #[test]
    fn b_integral_examples() {
        // u = x^{−1}·dx/x → value −1, pole at z = 1 with residue 1
        let u = XDensity::polynomial(vec![(-1.0, c(1.0))]);
        let b = b_integral(&u).unwrap();
        assert_relative_eq!(b.value.re, -1.0, epsilon = 1e-15);
        assert_eq!(b.poles.len(), 1);
        assert_relative_eq!(b.poles[0].0, 1.0);
        assert_relative_eq!(b.poles[0].1.re, 1.0);
        // u = 1·dx/x → value 0, pole at 0 with residue 1
        let u = XDensity::polynomial(vec![(0.0, c(1.0))]);
        let b = b_integral(&u).unwrap();
        assert!(b.value.norm() < 1e-15);
        assert_relative_eq!(b.poles[0].0, 0.0);
        // vanishing-to-infinite-order evaluator → plain integral, no poles
        let u = XDensity(XProfile::with_evaluator(vec![], |x| {
            Complex64::new((-1.0 / x).exp(), 0.0)
        }));
        let b = b_integral(&u).unwrap();
        assert!(b.poles.is_empty());
        // ∫₀¹ e^{−1/x} dx/x = E1(1)
        assert_relative_eq!(b.value.re, crate::special::exp1(1.0), epsilon = 1e-9);
    }

    #[test]
    fn b_integral_pole_residues_match_finite_differences() {
        // u = x^{−2}(1 + 3x + x³)·dx/x, p = 2: residues at z = p − j are
        // (1/j!)∂_x^j{x^p u}|₀
        let u = XDensity::polynomial(vec![(-2.0, c(1.0)), (-1.0, c(3.0)), (1.0, c(1.0))]);
        let b = b_integral(&u).unwrap();
        let smooth = |x: f64| 1.0 + 3.0 * x + x * x * x; // x^p u
        let h = 1e-2;
        let d0 = smooth(0.0);
        let d1 = (smooth(h) - smooth(-h)) / (2.0 * h);
        let d3 = (smooth(2.0 * h) - 2.0 * smooth(h) + 2.0 * smooth(-h) - smooth(-2.0 * h))
            / (2.0 * h * h * h);
        for (loc, fd) in [(2.0, d0), (1.0, d1), (-1.0, d3 / 6.0)] {
            let pole = b.poles.iter().find(|(l, _)| (l - loc).abs() < 1e-12).unwrap();
            assert!(
                (pole.1.re - fd).abs() < 1e-4,
                "residue at z={loc}: {} vs finite difference {fd}",
                pole.1.re
            );
        }
    }

    #[test]
    fn tr_partial_sigma_examples() {
        // res P density = 2x^{−1} + 3 + 5x → 3
        let u = XDensity::polynomial(vec![(-1.0, c(2.0)), (0.0, c(3.0)), (1.0, c(5.0))]);
        let v = gated_boundary_coefficient(&u, 1.0);
        assert!(v.gate_open);
        assert_relative_eq!(v.value.re, 3.0);
        // p = 1/2 → gated to zero
        let v = gated_boundary_coefficient(&u, 0.5);
        assert!(!v.gate_open);
        assert_eq!(v.value, c(0.0));
        // zero density → 0
        let v = gated_boundary_coefficient(&XDensity::polynomial(vec![]), 0.0);
        assert_eq!(v.value, c(0.0));
    }

    #[test]
    fn tr_sigma_examples() {
        // residue density = 1·dx/x on [0,1] → 0 (the 1/z pole carries it all)
        let fam = free_family(-1.0, 0.0, vec![(0.0, vec![(std::f64::consts::PI, -1.0)])]);
        assert!(tr_sigma(&fam).unwrap().norm() < 1e-14);
        // P vanishing at the boundary: res density = x → ordinary integral 1
        let fam = free_family(-1.0, -1.0, vec![(1.0, vec![(std::f64::consts::PI, -1.0)])]);
        assert_relative_eq!(tr_sigma(&fam).unwrap().re, 1.0, epsilon = 1e-14);
        // zero density → 0
        let fam = free_family(0.0, 0.0, vec![(0.0, vec![(1.0, 0.0)])]);
        assert_eq!(tr_sigma(&fam).unwrap(), c(0.0));
    }

    #[test]
    fn change_bdf_examples() {
        // a ≡ 1 → both sides equal, correction 0
        let u = XDensity::polynomial(vec![(0.0, c(1.0))]);
        let r = change_bdf(&u, &BdfFactor::constant(1.0), 0.0).unwrap();
        assert!(r.correction.norm() < 1e-15);
        assert!(r.discrepancy.norm() < 1e-12);
        // a ≡ 2, u = 1·dx/x: correction = log 2 × (x⁰ coefficient) = log 2
        let r = change_bdf(&u, &BdfFactor::constant(2.0), 0.0).unwrap();
        assert_relative_eq!(r.correction.re, 2.0f64.ln(), epsilon = 1e-14);
        assert!(r.discrepancy.norm() < 1e-12);
        // a = 1 + x with data below the boundary: agreement to 1e−8
        let u = XDensity::polynomial(vec![(-2.0, c(1.0)), (-1.0, c(0.5)), (0.0, c(2.0))]);
        let r = change_bdf(&u, &BdfFactor::one_plus_x(), 2.0).unwrap();
        assert!(r.discrepancy.norm() < 1e-8, "discrepancy {}", r.discrepancy);
    }

    #[test]
    fn change_bdf_against_numeric_substitution() {
        // ∫₀¹ (2x)^z dx/x = 2^z/z has regular value log 2 at z = 0
        let u = XDensity::polynomial(vec![(0.0, c(1.0))]);
        let r = change_bdf(&u, &BdfFactor::constant(2.0), 0.0).unwrap();
        assert_relative_eq!(r.bint_x_prime.re, 2.0f64.ln(), epsilon = 1e-12);
        assert!(r.bint_x.norm() < 1e-14);
    }
}
