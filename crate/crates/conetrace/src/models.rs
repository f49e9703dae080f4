//! The named desk models fixed in the repository. Each one witnesses a
//! distinct pole constellation of B(z)Γ(z):
//!
//! * `m1` — identity trace of the pure order-1 model operator; fully
//!   closed-form: Tr Q(t) = (1/(πt))e^{−t} − (1/π)E₁(t).
//! * `m2` — P of weight p = −1: vanishing (log t)² and the Tr_σ identity.
//! * `m3` — P of weight p = 1 with symbol levels at degrees −1, −2 and
//!   x-offsets {−1, 0}: triple pole at z = 0, the (log t)² witness.
//! * `m4` — irrational weight and order: every gate closed, pure powers.
//! * `m5` — P of order m′ = −2 < −n: vanishing (log t)² and the Tr_∂
//!   identity.

use num_complex::Complex64;

use crate::heat::{resolvent_symbol, ConeOperatorModel, HeatError};
use crate::symcore::{ConeSymbolFamily, Cutoff, FamilyKind, HomogeneousPart, SymbolAtom, XTerm};

/// Calculus parameters shared by a model run.
#[derive(Debug, Clone, Copy)]
pub struct CalculusConfig {
    pub n: u32,
    pub epsilon: f64,
    pub delta: f64,
    pub cutoff: Cutoff,
    pub truncation: u32,
    pub horizon: f64,
}

impl Default for CalculusConfig {
    fn default() -> Self {
        CalculusConfig {
            n: 1,
            epsilon: std::f64::consts::FRAC_PI_4,
            delta: 0.5,
            cutoff: Cutoff::Sharp,
            truncation: 8,
            horizon: 4.0,
        }
    }
}

/// Verification parameters: the t-grid, the fit tolerance, and optional
/// smooth-part coefficients r_k entering as Σ r_k t^{(k−p)/m}.
#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub t_min: f64,
    pub t_max: f64,
    pub t_points: usize,
    pub fit_tol: f64,
    pub smooth_part: Vec<Complex64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { t_min: 1e-4, t_max: 1e-1, t_points: 40, fit_tol: 1e-3, smooth_part: vec![] }
    }
}

/// One named model: the operator A, the cone operator P, and the run
/// configuration.
#[derive(Debug, Clone)]
pub struct DeskModel {
    pub name: String,
    pub operator: ConeOperatorModel,
    pub p_family: ConeSymbolFamily,
    pub calculus: CalculusConfig,
    pub verify: VerifyConfig,
}

impl DeskModel {
    /// The Q-type family P(A−λ)^{−1} in the kernel convention.
    pub fn q_family(&self) -> Result<ConeSymbolFamily, HeatError> {
        resolvent_symbol(&self.operator, Some(&self.p_family), self.calculus.truncation)
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn operator(calc: &CalculusConfig) -> ConeOperatorModel {
    ConeOperatorModel {
        m: 1.0,
        mu: c(1.0),
        lower: vec![],
        alpha: 0.0,
        epsilon: calc.epsilon,
        n: calc.n,
        cutoff: calc.cutoff,
    }
}

fn p_family(
    calc: &CalculusConfig,
    m_prime: f64,
    p: f64,
    terms: &[(f64, &[(f64, f64)])],
) -> ConeSymbolFamily {
    // terms: (offset, [(coeff, s)])
    let x_terms = terms
        .iter()
        .map(|&(off, atoms)| XTerm {
            offset: off,
            parts: atoms
                .iter()
                .map(|&(cf, s)| HomogeneousPart::new(s, vec![SymbolAtom::lambda_free(c(cf), s)]))
                .collect(),
        })
        .collect();
    ConeSymbolFamily::new(
        FamilyKind::LambdaFree,
        m_prime,
        p,
        1.0,
        calc.n,
        calc.truncation,
        calc.cutoff,
        x_terms,
    )
    .expect("desk model families are structurally valid")
}

/// m = 1, μ = 1, P = Id, p = 0, m′ = 0, n = 1, sharp cutoff.
pub fn m1() -> DeskModel {
    let calc = CalculusConfig::default();
    let verify = VerifyConfig { fit_tol: 1e-6, ..VerifyConfig::default() };
    DeskModel {
        name: "M1".into(),
        operator: operator(&calc),
        p_family: p_family(&calc, 0.0, 0.0, &[(0.0, &[(1.0, 0.0)])]),
        calculus: calc,
        verify,
    }
}

/// p = −1 variant exercising the first vanishing corollary.
pub fn m2() -> DeskModel {
    let calc = CalculusConfig::default();
    DeskModel {
        name: "M2".into(),
        operator: operator(&calc),
        p_family: p_family(&calc, 0.0, -1.0, &[(1.0, &[(1.0, 0.0), (1.0, -1.0)])]),
        calculus: calc,
        verify: VerifyConfig::default(),
    }
}

/// p = 1 with symbol levels at degrees −1, −2 and x-offsets {−1, 0}: the
/// triple-pole / (log t)² witness. B(z) = (1/π)(1/(z−1) + 1/z)².
pub fn m3() -> DeskModel {
    let calc = CalculusConfig::default();
    let verify =
        VerifyConfig { t_max: 1e-2, t_points: 60, fit_tol: 1e-2, ..VerifyConfig::default() };
    DeskModel {
        name: "M3".into(),
        operator: operator(&calc),
        p_family: p_family(
            &calc,
            0.0,
            1.0,
            &[(-1.0, &[(1.0, 0.0), (1.0, -1.0)]), (0.0, &[(1.0, 0.0), (1.0, -1.0)])],
        ),
        calculus: calc,
        verify,
    }
}

/// Irrational weight p = 1/√2 and order m′ = √3: all factorial gates closed,
/// pure power expansion.
pub fn m4() -> DeskModel {
    let calc = CalculusConfig::default();
    let p = 1.0 / std::f64::consts::SQRT_2;
    let mp = 3.0f64.sqrt();
    DeskModel {
        name: "M4".into(),
        operator: operator(&calc),
        p_family: p_family(
            &calc,
            mp,
            p,
            &[(-p, &[(1.0, mp), (0.5, mp - 1.0)]), (1.0 - p, &[(1.0 / 3.0, mp)])],
        ),
        calculus: calc,
        verify: VerifyConfig::default(),
    }
}

/// Order m′ = −2 < −n: the second vanishing corollary (Tr_∂ identity).
pub fn m5() -> DeskModel {
    let calc = CalculusConfig::default();
    DeskModel {
        name: "M5".into(),
        operator: operator(&calc),
        p_family: p_family(&calc, -2.0, 0.0, &[(0.0, &[(1.0, -2.0)])]),
        calculus: calc,
        verify: VerifyConfig::default(),
    }
}

pub fn by_name(name: &str) -> Option<DeskModel> {
    match name.to_ascii_uppercase().as_str() {
        "M1" => Some(m1()),
        "M2" => Some(m2()),
        "M3" => Some(m3()),
        "M4" => Some(m4()),
        "M5" => Some(m5()),
        _ => None,
    }
}

pub fn all() -> Vec<DeskModel> {
    vec![m1(), m2(), m3(), m4(), m5()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heat::{heat_expansion, heat_expansion_via_traces};
    use crate::residue::{tr_partial_sigma, tr_sigma};
    use crate::special::EULER_GAMMA;
    use approx::assert_relative_eq;

    const PI: f64 = std::f64::consts::PI;

    #[test]
    fn all_models_build_and_validate() {
        for model in all() {
            let q = model.q_family().unwrap();
            assert!(q.validate(model.calculus.epsilon).all_pass(), "{}", model.name);
        }
    }

    #[test]
    fn m3_expansion_constants() {
        // Tr Q(t) = (2−γ)/π · t^{−1} − (1/π) t^{−1} log t + (γ²/2 + π²/12 +
        // 2γ − 1)/π + (γ+2)/π · log t + 1/(2π) · (log t)² + O(t)
        let model = m3();
        let q = model.q_family().unwrap();
        let exp = heat_expansion(&q, model.calculus.horizon).unwrap();
        assert_relative_eq!(exp.coeff(-1.0, 0).re, (2.0 - EULER_GAMMA) / PI, epsilon = 1e-11);
        assert_relative_eq!(exp.coeff(-1.0, 1).re, -1.0 / PI, epsilon = 1e-11);
        let g1 = EULER_GAMMA * EULER_GAMMA / 2.0 + PI * PI / 12.0;
        assert_relative_eq!(
            exp.coeff(0.0, 0).re,
            (g1 + 2.0 * EULER_GAMMA - 1.0) / PI,
            epsilon = 1e-11
        );
        assert_relative_eq!(exp.coeff(0.0, 1).re, (EULER_GAMMA + 2.0) / PI, epsilon = 1e-11);
        assert_relative_eq!(exp.coeff(0.0, 2).re, 1.0 / (2.0 * PI), epsilon = 1e-11);
        // triple pole at 0, double at 1
        let p0 = exp.poles.iter().find(|p| p.location.norm() < 1e-9).unwrap();
        assert_eq!(p0.actual_order, 3);
        let p1 = exp.poles.iter().find(|p| (p.location.re - 1.0).abs() < 1e-9).unwrap();
        assert_eq!(p1.actual_order, 2);
    }

    #[test]
    fn m3_log_sq_links_to_boundary_residue_trace() {
        // Tr_{∂,σ}(P) = 2m²·(coefficient of (log t)²) = 1/π
        let model = m3();
        let q = model.q_family().unwrap();
        let exp = heat_expansion(&q, model.calculus.horizon).unwrap();
        let t = tr_partial_sigma(&model.p_family);
        assert!(t.gate_open);
        assert_relative_eq!(t.value.re, 1.0 / PI, epsilon = 1e-12);
        assert_relative_eq!(t.value.re, 2.0 * exp.log_sq_coeff().re, epsilon = 1e-11);
    }

    #[test]
    fn m2_corollary() {
        let model = m2();
        let q = model.q_family().unwrap();
        let exp = heat_expansion(&q, model.calculus.horizon).unwrap();
        assert_eq!(exp.max_log_power(), 1);
        let sigma = tr_sigma(&model.p_family).unwrap();
        assert_relative_eq!(sigma.re, 1.0 / PI, epsilon = 1e-12);
        assert_relative_eq!(sigma.re, -exp.log_coeff().re, epsilon = 1e-11);
    }

    #[test]
    fn m4_pure_power_expansion() {
        let model = m4();
        let q = model.q_family().unwrap();
        let exp = heat_expansion(&q, model.calculus.horizon).unwrap();
        assert_eq!(exp.max_log_power(), 0);
        let via = heat_expansion_via_traces(
            &model.p_family,
            &model.operator,
            model.calculus.horizon,
            model.calculus.truncation,
        )
        .unwrap();
        assert!(via.terms.is_empty());
    }

    #[test]
    fn m5_corollary() {
        let model = m5();
        let q = model.q_family().unwrap();
        let exp = heat_expansion(&q, model.calculus.horizon).unwrap();
        assert_eq!(exp.max_log_power(), 1);
        // res P = 0 for order below −n
        assert!(tr_sigma(&model.p_family).unwrap().norm() < 1e-14);
        let tp = crate::residue::tr_partial(
            &model.p_family,
            &model.operator,
            crate::heat::strip_for(&q, model.calculus.horizon),
        )
        .unwrap();
        assert_relative_eq!(tp.value.re, 1.0 / PI, epsilon = 1e-12);
        assert_relative_eq!(tp.value.re, -exp.log_coeff().re, epsilon = 1e-11);
    }
}
