//! Resolvent-symbol construction for model cone operators, classification of
//! the B(z)Γ(z) poles, and emission of the full small-time expansion of
//! Tr P e^{−tA} — through the Laurent route (pole pushing) and through the
//! residue trace functionals — plus the independent numeric heat-trace
//! oracle and the expansion fitter.
//!
//! Symbol composition uses the b-calculus product in the coordinates
//! t = log x: a # b = Σ_α (1/α!) ∂_ξ^α a · (−i x∂_x)^α b, under which x∂_x
//! acts on x-Taylor data by offset scaling.

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::mellin::{angular_factor, assemble_b, mellin_diagonal, DiagonalMellin, MellinError};
use crate::merofn::{
    mero_mul, merge_terms, pole_to_expansion, ExpansionTerm, MeroFunction,
    Provenance,
};
use crate::residue::{
    gated_boundary_coefficient, tr_partial, tr_partial_sigma, tr_sigma, ResidueError,
};
use crate::special::{as_nonneg_int, factorial, gamma, gamma_residue_and_regular};
use crate::symcore::{
    ConeSymbolFamily, Cutoff, FamilyKind, HomogeneousPart, SymbolAtom, SymError, XTerm,
};

#[derive(Debug, Error)]
pub enum HeatError {
    #[error("parameter-ellipticity fails: {0}")]
    EllipticityFailure(String),
    #[error("the families carry different resolvent bases")]
    BaseMismatch,
    #[error("heat-trace operations require m > p (got m = {m}, p = {p})")]
    TraceClassViolation { m: f64, p: f64 },
    #[error("Laurent route and structural formulas disagree: {0}")]
    CrossCheckFailure(String),
    #[error("heat-trace quadrature failure: {0}")]
    QuadratureFailure(String),
    #[error("design matrix condition number {0:.3e} exceeds 1e12")]
    IllConditioned(f64),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Symbol(#[from] SymError),
    #[error(transparent)]
    Mellin(#[from] MellinError),
    #[error(transparent)]
    Mero(#[from] crate::merofn::MeroError),
    #[error(transparent)]
    Residue(#[from] Box<ResidueError>),
}

/// A model cone differential operator A = x^{−m}(μ(xD_x-radial)^m + lower):
/// x^m A has b-symbol μ|ξ|^m + Σ a_{j,k} x^j |ξ|^k with constant leading
/// coefficient μ, |arg μ| < ε.
#[derive(Debug, Clone)]
pub struct ConeOperatorModel {
    pub m: f64,
    pub mu: Complex64,
    pub lower: Vec<LowerTerm>,
    /// Weight of the parameter-ellipticity conditions (2)–(3); recorded but
    /// not verified (operator-level, out of the symbol calculus).
    pub alpha: f64,
    /// Sector aperture ε of Λ = {ε ≤ arg λ ≤ 2π−ε}.
    pub epsilon: f64,
    pub n: u32,
    pub cutoff: Cutoff,
}

/// One lower-order coefficient a_{j,k} x^j |ξ|^k of x^m A.
#[derive(Debug, Clone, Copy)]
pub struct LowerTerm {
    pub x_offset: u32,
    pub xi_power: u32,
    pub coeff: Complex64,
}

impl ConeOperatorModel {
    pub fn validate(&self) -> Result<(), HeatError> {
        if !(self.m > 0.0) {
            return Err(HeatError::InvalidModel("order m must be positive".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < std::f64::consts::FRAC_PI_2) {
            return Err(HeatError::InvalidModel("sector aperture out of (0, π/2)".into()));
        }
        for t in &self.lower {
            let level = self.m - t.xi_power as f64;
            if level < 1.0 - 1e-9 || (level - level.round()).abs() > 1e-9 {
                return Err(HeatError::InvalidModel(format!(
                    "lower term |ξ|^{} is not below the leading order {} by an integer",
                    t.xi_power, self.m
                )));
            }
        }
        // parameter-ellipticity condition (1) at the symbol level:
        // μ|ξ|^m − λ invertible for ξ ≠ 0, λ ∈ Λ ⇔ arg μ stays inside (−ε, ε)
        if !(self.mu.norm() > 0.0 && self.mu.arg().abs() < self.epsilon) {
            return Err(HeatError::EllipticityFailure(format!(
                "arg μ = {:.4} is not inside (−ε, ε), ε = {:.4}",
                self.mu.arg(),
                self.epsilon
            )));
        }
        Ok(())
    }

    /// The λ-free symbol of A itself: x^{−m}(μ|ξ|^m + lower), a family of
    /// weight m and order m.
    pub fn symbol_family(&self, truncation: u32) -> Result<ConeSymbolFamily, HeatError> {
        let mut terms: Vec<(f64, HomogeneousPart)> = vec![(
            -self.m,
            HomogeneousPart::new(self.m, vec![SymbolAtom::lambda_free(self.mu, self.m)]),
        )];
        for t in &self.lower {
            terms.push((
                t.x_offset as f64 - self.m,
                HomogeneousPart::new(
                    t.xi_power as f64,
                    vec![SymbolAtom::lambda_free(t.coeff, t.xi_power as f64)],
                ),
            ));
        }
        let mut x_terms: Vec<XTerm> = Vec::new();
        for (off, part) in terms {
            if let Some(xt) = x_terms.iter_mut().find(|xt| (xt.offset - off).abs() <= 1e-12) {
                xt.parts.push(part);
            } else {
                x_terms.push(XTerm { offset: off, parts: vec![part] });
            }
        }
        Ok(ConeSymbolFamily::new(
            FamilyKind::LambdaFree,
            self.m,
            self.m,
            self.m,
            self.n,
            truncation,
            self.cutoff,
            x_terms,
        )?)
    }

    /// The identity as a λ-free family in this model's calculus.
    pub fn identity_family(&self, truncation: u32) -> ConeSymbolFamily {
        ConeSymbolFamily::new(
            FamilyKind::LambdaFree,
            0.0,
            0.0,
            self.m,
            self.n,
            truncation,
            self.cutoff,
            vec![XTerm {
                offset: 0.0,
                parts: vec![HomogeneousPart::new(
                    0.0,
                    vec![SymbolAtom::lambda_free(Complex64::new(1.0, 0.0), 0.0)],
                )],
            }],
        )
        .expect("identity family is structurally valid")
    }
}

// ---- symbol composition ----

/// Intermediate representation of one degree level: atoms grouped by x-offset.
type Level = Vec<(f64, Vec<SymbolAtom>)>;

fn level_push(level: &mut Level, offset: f64, atom: SymbolAtom) {
    if atom.coeff.norm() <= 1e-300 {
        return;
    }
    if let Some((_, atoms)) = level.iter_mut().find(|(o, _)| (o - offset).abs() <= 1e-12) {
        atoms.push(atom);
    } else {
        level.push((offset, vec![atom]));
    }
}

/// ∂_ξ^α of an atom as a sum of atoms.
fn dxi_pow(atom: &SymbolAtom, alpha: u32) -> Vec<SymbolAtom> {
    let mut acc = vec![*atom];
    for _ in 0..alpha {
        acc = acc.iter().flat_map(|a| a.dxi()).collect();
    }
    acc
}

/// The b-calculus symbol product a # b truncated at `n_levels` degree levels.
/// The left factor must be λ-free; the right factor may carry the resolvent.
pub fn compose(
    a: &ConeSymbolFamily,
    b: &ConeSymbolFamily,
    n_levels: u32,
) -> Result<ConeSymbolFamily, HeatError> {
    if a.kind != FamilyKind::LambdaFree {
        return Err(HeatError::InvalidModel(
            "composition is implemented for a λ-free left factor".into(),
        ));
    }
    if a.n != b.n {
        return Err(HeatError::InvalidModel("fiber dimensions differ".into()));
    }
    let kind = b.kind;
    let m = b.m;
    let mut levels: Vec<Level> = vec![Vec::new(); n_levels as usize];
    for xt_a in &a.x_terms {
        for part_a in &xt_a.parts {
            let la = a.level_of(part_a.degree).round() as i64;
            for xt_b in &b.x_terms {
                for part_b in &xt_b.parts {
                    let lb = b.level_of(part_b.degree).round() as i64;
                    for atom_a in &part_a.atoms {
                        for atom_b in &part_b.atoms {
                            let mut alpha = 0u32;
                            loop {
                                let j = la + lb + alpha as i64;
                                if j >= n_levels as i64 {
                                    break;
                                }
                                // (−i)^α/α! ∂_ξ^α a · (x∂_x)^α b
                                let xd = xt_b.offset.powi(alpha as i32);
                                if alpha > 0 && xd == 0.0 {
                                    alpha += 1;
                                    continue;
                                }
                                let scale = Complex64::new(0.0, -1.0).powu(alpha)
                                    / factorial(alpha)
                                    * xd;
                                for da in dxi_pow(atom_a, alpha) {
                                    let mut prod =
                                        da.mul(atom_b).map_err(|_| HeatError::BaseMismatch)?;
                                    prod.coeff *= scale;
                                    level_push(
                                        &mut levels[j as usize],
                                        xt_a.offset + xt_b.offset,
                                        prod,
                                    );
                                }
                                alpha += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    let lead_order = a.lead_order() + b.lead_order();
    let mut x_terms: Vec<XTerm> = Vec::new();
    for (j, level) in levels.into_iter().enumerate() {
        let degree = lead_order - j as f64;
        for (offset, atoms) in level {
            let part = HomogeneousPart::new(degree, atoms);
            if part.atoms.is_empty() {
                continue;
            }
            if let Some(xt) = x_terms.iter_mut().find(|xt| (xt.offset - offset).abs() <= 1e-12) {
                xt.parts.push(part);
            } else {
                x_terms.push(XTerm { offset, parts: vec![part] });
            }
        }
    }
    Ok(ConeSymbolFamily::new(
        kind,
        a.m_prime + b.m_prime,
        a.weight + b.weight,
        m,
        a.n,
        n_levels,
        b.cutoff,
        x_terms,
    )?)
}

/// Interior parametrix of (p_b − λ) by the standard degree recursion,
/// left-composed with P and carried to the kernel convention: the returned
/// family is x^m·(P # parametrix), i.e. O(x^{m−p}) with degrees m′−m−j.
pub fn resolvent_symbol(
    a: &ConeOperatorModel,
    p: Option<&ConeSymbolFamily>,
    truncation: u32,
) -> Result<ConeSymbolFamily, HeatError> {
    a.validate()?;
    if let Some(p_fam) = p {
        if p_fam.kind != FamilyKind::LambdaFree {
            return Err(HeatError::InvalidModel("P must be λ-free".into()));
        }
        if p_fam.n != a.n {
            return Err(HeatError::InvalidModel("fiber dimensions differ".into()));
        }
        if let Some((mu, d)) = p_fam.base() {
            if (mu - a.mu).norm() > 1e-12 || (d - a.m).abs() > 1e-12 {
                return Err(HeatError::BaseMismatch);
            }
        }
    }
    let n_levels = truncation;
    // p_b levels: level l holds the |ξ|^{m−l} coefficients as λ-free atoms
    let mut pb: Vec<Level> = vec![Vec::new(); n_levels as usize];
    level_push(&mut pb[0], 0.0, SymbolAtom::lambda_free(a.mu, a.m));
    for t in &a.lower {
        let l = (a.m - t.xi_power as f64).round() as usize;
        if l < pb.len() {
            level_push(&mut pb[l], t.x_offset as f64, SymbolAtom::lambda_free(t.coeff, t.xi_power as f64));
        }
    }
    // q_0 = (μ|ξ|^m − λ)^{−1}
    let q0_atom = SymbolAtom::new(Complex64::new(1.0, 0.0), 0.0, 1, a.mu, a.m);
    let mut q: Vec<Level> = vec![Vec::new(); n_levels as usize];
    level_push(&mut q[0], 0.0, q0_atom);
    // recursion from (p_b − λ) # q = 1: the level-j component vanishes, so
    // q_j = −q_0 · Σ_{l+α+i=j, (l,α)≠(0,0)} (−i)^α/α! ∂_ξ^α p_{b,l} (x∂_x)^α q_i
    for j in 1..n_levels as usize {
        let mut acc: Level = Vec::new();
        for l in 0..=j {
            for alpha in 0..=(j - l) as u32 {
                if l == 0 && alpha == 0 {
                    continue;
                }
                let i = j - l - alpha as usize;
                for (off_p, atoms_p) in &pb[l] {
                    for atom_p in atoms_p {
                        for da in dxi_pow(atom_p, alpha) {
                            if da.coeff.norm() <= 1e-300 {
                                continue;
                            }
                            for (off_q, atoms_q) in &q[i] {
                                let xd = off_q.powi(alpha as i32);
                                if alpha > 0 && xd == 0.0 {
                                    continue;
                                }
                                let scale = Complex64::new(0.0, -1.0).powu(alpha)
                                    / factorial(alpha)
                                    * xd;
                                for atom_q in atoms_q {
                                    let mut prod =
                                        da.mul(atom_q).map_err(|_| HeatError::BaseMismatch)?;
                                    prod.coeff *= scale;
                                    level_push(&mut acc, off_p + off_q, prod);
                                }
                            }
                        }
                    }
                }
            }
        }
        // multiply by −q_0 (left or right is the same: atoms commute)
        for (off, atoms) in acc {
            for atom in atoms {
                let mut prod = atom.mul(&q0_atom).map_err(|_| HeatError::BaseMismatch)?;
                prod.coeff = -prod.coeff;
                level_push(&mut q[j], off, prod);
            }
        }
    }
    // parametrix as a Q-type family of weight m (leading offset 0)
    let mut x_terms: Vec<XTerm> = Vec::new();
    for (j, level) in q.iter().enumerate() {
        let degree = -a.m - j as f64;
        for (offset, atoms) in level {
            let part = HomogeneousPart::new(degree, atoms.clone());
            if part.atoms.is_empty() {
                continue;
            }
            if let Some(xt) = x_terms.iter_mut().find(|xt| (xt.offset - offset).abs() <= 1e-12) {
                xt.parts.push(part);
            } else {
                x_terms.push(XTerm { offset: *offset, parts: vec![part] });
            }
        }
    }
    let parametrix = ConeSymbolFamily::new(
        FamilyKind::Resolvent,
        0.0,
        a.m,
        a.m,
        a.n,
        truncation,
        a.cutoff,
        x_terms,
    )?;
    let composed = match p {
        Some(p_fam) => compose(p_fam, &parametrix, truncation)?,
        None => parametrix,
    };
    // kernel convention: trailing x^m factor of (p_b − x^mλ)^{−1} x^m
    Ok(shift_x_offsets(&composed, a.m)?)
}

/// Shift every x-offset by `shift` (the trailing x^m of the kernel
/// convention); the weight drops accordingly.
pub fn shift_x_offsets(fam: &ConeSymbolFamily, shift: f64) -> Result<ConeSymbolFamily, HeatError> {
    let x_terms = fam
        .x_terms
        .iter()
        .map(|xt| XTerm { offset: xt.offset + shift, parts: xt.parts.clone() })
        .collect();
    Ok(ConeSymbolFamily::new(
        fam.kind,
        fam.m_prime,
        fam.weight - shift,
        fam.m,
        fam.n,
        fam.truncation,
        fam.cutoff,
        x_terms,
    )?)
}

/// Samples of the parametrix defect sup |(p_b − λ) # q − 1| at scaled points
/// (λ on the sector spine, |λ| = |ξ|^m); the sup decays like |ξ|^{−N}.
pub fn resolvent_defect(
    a: &ConeOperatorModel,
    truncation: u32,
    xis: &[f64],
) -> Result<Vec<(f64, f64)>, HeatError> {
    let q = resolvent_symbol(a, None, truncation)?;
    // undo the kernel-convention shift to work with the parametrix equation
    let parametrix = shift_x_offsets(&q, -a.m)?;
    let pb_levels = truncation + a.m.round() as u32 + 1;
    let pb = pb_family(a, pb_levels)?;
    let composite = compose(&pb, &parametrix, pb_levels)?;
    let mut out = Vec::new();
    for &xi in xis {
        let lambda = -Complex64::new(xi.powf(a.m), 0.0);
        let mut sup = 0.0f64;
        for &x in &[0.3, 0.7, 1.0] {
            let v = composite.eval(x, xi, lambda)?
                - lambda * parametrix.eval(x, xi, lambda)?
                - Complex64::new(1.0, 0.0);
            sup = sup.max(v.norm());
        }
        out.push((xi, sup));
    }
    Ok(out)
}

fn pb_family(a: &ConeOperatorModel, truncation: u32) -> Result<ConeSymbolFamily, HeatError> {
    // p_b = μ|ξ|^m + lower as a weight-0 λ-free family of order m
    let mut x_terms: Vec<XTerm> = vec![XTerm {
        offset: 0.0,
        parts: vec![HomogeneousPart::new(a.m, vec![SymbolAtom::lambda_free(a.mu, a.m)])],
    }];
    for t in &a.lower {
        let off = t.x_offset as f64;
        let part = HomogeneousPart::new(
            t.xi_power as f64,
            vec![SymbolAtom::lambda_free(t.coeff, t.xi_power as f64)],
        );
        if let Some(xt) = x_terms.iter_mut().find(|xt| (xt.offset - off).abs() <= 1e-12) {
            xt.parts.push(part);
        } else {
            x_terms.push(XTerm { offset: off, parts: vec![part] });
        }
    }
    Ok(ConeSymbolFamily::new(
        FamilyKind::LambdaFree,
        a.m,
        0.0,
        a.m,
        a.n,
        truncation,
        a.cutoff,
        x_terms,
    )?)
}

// ---- pole classification ----

/// Progression memberships of one pole of B(z)Γ(z).
#[derive(Debug, Clone, Copy, Default)]
pub struct PoleMemberships {
    pub gamma_ell: Option<u32>,
    pub x_j: Option<u32>,
    pub symbol_k: Option<u32>,
}

impl PoleMemberships {
    pub fn count(&self) -> u32 {
        self.gamma_ell.is_some() as u32
            + self.x_j.is_some() as u32
            + self.symbol_k.is_some() as u32
    }
}

#[derive(Debug, Clone)]
pub struct ClassifiedPole {
    pub location: Complex64,
    pub memberships: PoleMemberships,
    /// Order suggested by the progression catalog.
    pub candidate_order: u32,
    /// Order realized by the actual Laurent data (0 if the pole cancels).
    pub actual_order: u32,
    /// Laurent coefficients r_1..r_actual of B(z)Γ(z).
    pub laurent: Vec<Complex64>,
    pub provenance: Provenance,
}

/// Expansion-shaping parameters read off a Q-type family.
#[derive(Debug, Clone, Copy)]
pub struct ExpansionParams {
    pub m: f64,
    pub m_prime: f64,
    pub weight: f64,
    pub n: u32,
    pub truncation: u32,
}

impl ExpansionParams {
    pub fn of(fam: &ConeSymbolFamily) -> Self {
        ExpansionParams {
            m: fam.m,
            m_prime: fam.m_prime,
            weight: fam.weight,
            n: fam.n,
            truncation: fam.truncation,
        }
    }

    pub fn z_k(&self, k: u32) -> f64 {
        (k as f64 - self.m_prime - self.n as f64) / self.m
    }
}

/// Classify every pole of B(z)Γ(z) on the strip by progression membership
/// and actual order, with Laurent data from the product catalog.
pub fn classify_poles(
    b: &MeroFunction,
    gamma_fn: &MeroFunction,
    params: &ExpansionParams,
) -> Result<Vec<ClassifiedPole>, HeatError> {
    let product = mero_mul(b, gamma_fn)?;
    let tol = 1e-9;
    let mut out = Vec::new();
    // candidate locations: actual product poles plus progression points that
    // cancelled (actual order 0 is still reported as membership data)
    let mut locations: Vec<f64> = product.poles().iter().map(|p| p.location.re).collect();
    let strip = product.strip;
    let push_loc = |locs: &mut Vec<f64>, v: f64| {
        if v >= strip.0 && v <= strip.1 && !locs.iter().any(|l| (l - v).abs() <= tol) {
            locs.push(v);
        }
    };
    let mut ell = 0u32;
    loop {
        let z = -(ell as f64);
        if z < strip.0 {
            break;
        }
        push_loc(&mut locations, z);
        ell += 1;
    }
    for j in 0u32..200 {
        let z = -((j as f64 - params.weight) / params.m);
        if z < strip.0 {
            break;
        }
        push_loc(&mut locations, z);
    }
    for k in 0u32..400 {
        let z = -params.z_k(k);
        if z < strip.0 {
            if params.z_k(k) > 0.0 {
                break;
            }
            continue;
        }
        push_loc(&mut locations, z);
    }
    locations.sort_by(|a, b| b.partial_cmp(a).unwrap());
    for loc in locations {
        let w = Complex64::new(loc, 0.0);
        let memberships = PoleMemberships {
            gamma_ell: as_nonneg_int(-loc, tol),
            x_j: as_nonneg_int(params.weight - params.m * loc, tol),
            symbol_k: as_nonneg_int(
                params.m_prime + params.n as f64 - params.m * loc,
                tol,
            ),
        };
        if memberships.count() == 0 {
            // a product pole must be on some progression; report it anyway
        }
        let (actual_order, laurent) = match product.find_pole(w) {
            Some(p) => (p.order, p.principal.clone()),
            None => (0, vec![]),
        };
        let provenance = provenance_of(&memberships, actual_order);
        out.push(ClassifiedPole {
            location: w,
            memberships,
            candidate_order: memberships.count(),
            actual_order,
            laurent,
            provenance,
        });
    }
    Ok(out)
}

fn provenance_of(m: &PoleMemberships, actual_order: u32) -> Provenance {
    match (m.gamma_ell.is_some(), m.x_j.is_some(), m.symbol_k.is_some()) {
        (true, true, true) => Provenance::Triple,
        (false, true, true) => Provenance::Case1,
        (true, false, true) => Provenance::Case2,
        (true, true, false) => Provenance::Case3,
        (true, false, false) => Provenance::GammaOnly,
        (false, true, false) => Provenance::XPole,
        (false, false, true) => Provenance::SymbolPole,
        (false, false, false) => {
            debug_assert_eq!(actual_order, 0);
            Provenance::Truncated
        }
    }
}

// ---- heat expansion ----

/// A factorial/integrality gate record.
#[derive(Debug, Clone)]
pub struct GateRecord {
    pub name: String,
    pub param: f64,
    pub open: bool,
}

/// The assembled expansion with its pole report and gate records.
#[derive(Debug, Clone)]
pub struct HeatExpansion {
    pub terms: Vec<ExpansionTerm>,
    pub poles: Vec<ClassifiedPole>,
    pub gates: Vec<GateRecord>,
    pub horizon: f64,
    /// Exponents at or above this value may be affected by truncation.
    pub exact_below: f64,
    pub params: ExpansionParams,
}

impl HeatExpansion {
    pub fn coeff(&self, exponent: f64, log_power: u32) -> Complex64 {
        self.terms
            .iter()
            .find(|t| (t.exponent.re - exponent).abs() <= 1e-9 && t.log_power == log_power)
            .map(|t| t.coeff)
            .unwrap_or_else(|| Complex64::new(0.0, 0.0))
    }

    /// The coefficient of log t at t^0.
    pub fn log_coeff(&self) -> Complex64 {
        self.coeff(0.0, 1)
    }

    /// The coefficient of (log t)^2 at t^0.
    pub fn log_sq_coeff(&self) -> Complex64 {
        self.coeff(0.0, 2)
    }

    pub fn max_log_power(&self) -> u32 {
        self.terms.iter().map(|t| t.log_power).max().unwrap_or(0)
    }
}

/// The trace-class gate of the heat operations. Weights strictly above the
/// operator order are refused; the borderline p = m (needed by the triple-
/// pole witness, whose model-class integrals all converge) is admitted.
pub fn check_trace_class(m: f64, p: f64) -> Result<(), HeatError> {
    if p > m + 1e-12 {
        return Err(HeatError::TraceClassViolation { m, p });
    }
    Ok(())
}

fn default_strip(params: &ExpansionParams, horizon: f64) -> (f64, f64) {
    let upper = (1.0f64).max((params.m_prime + params.n as f64) / params.m + 0.75);
    (-horizon - 0.75, upper)
}

/// The working strip used for a family's Mellin data at a given horizon.
pub fn strip_for(fam: &ConeSymbolFamily, horizon: f64) -> (f64, f64) {
    default_strip(&ExpansionParams::of(fam), horizon)
}

/// Full small-time expansion of Tr Q(t) through the Laurent route, with the
/// log coefficients cross-checked against the structural residue formulas.
pub fn heat_expansion(fam: &ConeSymbolFamily, horizon: f64) -> Result<HeatExpansion, HeatError> {
    let params = ExpansionParams::of(fam);
    check_trace_class(params.m, params.weight)?;
    let strip = default_strip(&params, horizon);
    let diag = mellin_diagonal(fam, strip)?;
    let (b, _flags) = assemble_b(&diag, (0.0, 1.0))?;
    let gamma_fn = MeroFunction::gamma(strip);
    let poles = classify_poles(&b, &gamma_fn, &params)?;

    let mut terms = Vec::new();
    for p in &poles {
        if p.actual_order == 0 || p.location.re < -horizon - 1e-9 {
            continue;
        }
        let pole = crate::merofn::Pole {
            location: p.location,
            order: p.actual_order,
            principal: p.laurent.clone(),
            removable: false,
        };
        terms.extend(pole_to_expansion(&pole, p.provenance));
    }
    let mut terms = merge_terms(terms);

    // structural recompute of every log coefficient (β, γ, δ) from the
    // diagonal Mellin data; a mismatch is an internal error
    let (structural, gates) = structural_log_terms(&diag, &params, horizon)?;
    for st in &structural {
        let laurent = terms
            .iter()
            .find(|t| {
                (t.exponent - st.exponent).norm() <= 1e-9 && t.log_power == st.log_power
            })
            .map(|t| t.coeff)
            .unwrap_or_else(|| Complex64::new(0.0, 0.0));
        if (laurent - st.coeff).norm() > 1e-9 * laurent.norm().max(1.0) {
            return Err(HeatError::CrossCheckFailure(format!(
                "t^{}(log t)^{}: laurent {} vs structural {}",
                st.exponent.re, st.log_power, laurent, st.coeff
            )));
        }
    }
    // conversely every log term of the Laurent route must be structural
    for t in terms.iter().filter(|t| t.log_power >= 1) {
        let st = structural
            .iter()
            .find(|s| (t.exponent - s.exponent).norm() <= 1e-9 && s.log_power == t.log_power)
            .map(|s| s.coeff)
            .unwrap_or_else(|| Complex64::new(0.0, 0.0));
        if (st - t.coeff).norm() > 1e-9 * t.coeff.norm().max(1.0) {
            return Err(HeatError::CrossCheckFailure(format!(
                "t^{}(log t)^{}: laurent {} vs structural {}",
                t.exponent.re, t.log_power, t.coeff, st
            )));
        }
    }

    let exact_below = exact_horizon(&params);
    for t in &mut terms {
        if t.exponent.re >= exact_below - 1e-9 {
            t.provenance = Provenance::Truncated;
        }
    }
    Ok(HeatExpansion { terms, poles, gates, horizon, exact_below, params })
}

fn exact_horizon(params: &ExpansionParams) -> f64 {
    let n_f = params.truncation as f64;
    let sym = (n_f - params.m_prime - params.n as f64) / params.m;
    let xp = (n_f - params.weight) / params.m;
    sym.min(xp)
}

/// β_k, γ_k, δ_k from the diagonal Mellin data by the structural formulas:
///   β_k = −((−1)^k/(m k!))·(∫ᵇ res M(Q)(−k) + [x⁰ of Res₀ M(Q)(−k)|_Δ]),
///   γ_k = −(Γ₀(−z_k)/m²)·T_k,   δ_k = ((−1)^{z_k}/(2 m² z_k!))·T_k,
/// with T_k the gated x⁰ coefficient of res M(Q)(−z_k).
fn structural_log_terms(
    diag: &DiagonalMellin,
    params: &ExpansionParams,
    horizon: f64,
) -> Result<(Vec<ExpansionTerm>, Vec<GateRecord>), HeatError> {
    let m = params.m;
    let mut terms = Vec::new();
    let mut gates = Vec::new();
    // integer ladder: β_ℓ at t^ℓ
    let mut ell = 0u32;
    while (ell as f64) <= horizon + 1e-9 {
        let z = Complex64::new(-(ell as f64), 0.0);
        let res_density = diag.residue_density_at(z);
        let bint = crate::residue::b_integral(&res_density).map_err(Box::new)?.value;
        let j = params.weight + ell as f64 * m;
        let reg_density = diag.regular_value_density_at(z)?;
        let gated = gated_boundary_coefficient(&reg_density, j);
        gates.push(GateRecord {
            name: format!("beta_{ell}: (p + k m) with k = {ell}"),
            param: j,
            open: gated.gate_open,
        });
        let sign = if ell % 2 == 0 { 1.0 } else { -1.0 };
        let beta = -(sign / (m * factorial(ell))) * (bint + gated.value);
        if beta.norm() > 0.0 {
            terms.push(ExpansionTerm {
                exponent: Complex64::new(ell as f64, 0.0),
                log_power: 1,
                coeff: beta,
                provenance: Provenance::Case2,
            });
        }
        ell += 1;
    }
    // symbol ladder: γ_k, δ_k at t^{z_k}
    let k_max = (params.m_prime + params.n as f64 + m * horizon).ceil() as i64 + 1;
    for k in 0..=k_max.max(0) as u32 {
        let z_k = params.z_k(k);
        if z_k > horizon + 1e-9 {
            break;
        }
        let z = Complex64::new(-z_k, 0.0);
        let density = diag.residue_density_at(z);
        let j = params.weight + z_k * m;
        let gated = gated_boundary_coefficient(&density, j);
        gates.push(GateRecord {
            name: format!("gamma/delta at z_k = {z_k:.6}: (p + z_k m)"),
            param: j,
            open: gated.gate_open,
        });
        if !gated.gate_open || gated.value.norm() == 0.0 {
            continue;
        }
        let gamma0 = match as_nonneg_int(z_k, 1e-9) {
            Some(ellk) => gamma_residue_and_regular(ellk).1,
            None => gamma(Complex64::new(-z_k, 0.0)),
        };
        let gamma_k = -(gamma0 / (m * m)) * gated.value;
        if gamma_k.norm() > 0.0 {
            terms.push(ExpansionTerm {
                exponent: Complex64::new(z_k, 0.0),
                log_power: 1,
                coeff: gamma_k,
                provenance: Provenance::Case1,
            });
        }
        if let Some(zk_int) = as_nonneg_int(z_k, 1e-9) {
            let sign = if zk_int % 2 == 0 { 1.0 } else { -1.0 };
            let delta_k = sign / (2.0 * m * m * factorial(zk_int)) * gated.value;
            gates.push(GateRecord {
                name: format!("delta at z_k = {z_k:.6}: z_k"),
                param: z_k,
                open: true,
            });
            if delta_k.norm() > 0.0 {
                terms.push(ExpansionTerm {
                    exponent: Complex64::new(z_k, 0.0),
                    log_power: 2,
                    coeff: delta_k,
                    provenance: Provenance::Triple,
                });
            }
        } else {
            gates.push(GateRecord {
                name: format!("delta at z_k = {z_k:.6}: z_k"),
                param: z_k,
                open: false,
            });
        }
    }
    Ok((merge_terms(terms), gates))
}

/// The trace-functional route of the main expansion theorem: every log
/// coefficient from Tr_σ, Tr_∂ and Tr_{∂,σ}:
///   β_k = −((−1)^k/(m k!))·(Tr_σ(PA^k) + Tr_∂(PA^k)),
///   γ_k = −(Γ₀(−z_k)/m²)·Tr_{∂,σ}(PA^{z_k}),
///   δ_k = ((−1)^{z_k}/(2 m² z_k!))·Tr_{∂,σ}(PA^{z_k}).
///
/// The k = 0 rungs evaluate the functionals of P itself (residue density,
/// b-integral, gated boundary coefficients — no composition at all). The
/// k ≥ 1 rungs realize A^k through the complex-power convention
/// PA^{k+z} = M(Q_P)(z−k): the truncated symbol composite P#A#…#A agrees
/// with it only when every ∂_ξ-chain terminates (checked separately on the
/// polynomial-symbol models), so the shift realization is the one that is
/// exact at every truncation order.
pub fn heat_expansion_via_traces(
    p_fam: &ConeSymbolFamily,
    a_model: &ConeOperatorModel,
    horizon: f64,
    truncation: u32,
) -> Result<HeatExpansion, HeatError> {
    let m = a_model.m;
    let q_fam = resolvent_symbol(a_model, Some(p_fam), truncation)?;
    let params = ExpansionParams::of(&q_fam);
    check_trace_class(m, params.weight)?;
    let strip = default_strip(&params, horizon);
    let diag = mellin_diagonal(&q_fam, strip)?;

    let mut terms = Vec::new();
    let mut gates = Vec::new();
    // β ladder
    let mut k = 0u32;
    while (k as f64) <= horizon + 1e-9 {
        let sigma = if k == 0 {
            tr_sigma(p_fam).map_err(Box::new)?
        } else {
            let density = diag.residue_density_at(Complex64::new(-(k as f64), 0.0));
            crate::residue::b_integral(&density).map_err(Box::new)?.value
        };
        let partial = if k == 0 {
            tr_partial(p_fam, a_model, strip).map_err(Box::new)?
        } else {
            let reg_density = diag.regular_value_density_at(Complex64::new(-(k as f64), 0.0))?;
            gated_boundary_coefficient(&reg_density, params.weight + k as f64 * m)
        };
        gates.push(GateRecord {
            name: format!("Tr_partial(P A^{k}): weight"),
            param: partial.gate_param,
            open: partial.gate_open,
        });
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let beta = -(sign / (m * factorial(k))) * (sigma + partial.value);
        if beta.norm() > 0.0 {
            terms.push(ExpansionTerm {
                exponent: Complex64::new(k as f64, 0.0),
                log_power: 1,
                coeff: beta,
                provenance: Provenance::Case2,
            });
        }
        k += 1;
    }
    // γ/δ ladder through Tr_{∂,σ}(PA^{z_k})
    let k_max = (params.m_prime + params.n as f64 + m * horizon).ceil() as i64 + 1;
    for kk in 0..=k_max.max(0) as u32 {
        let z_k = params.z_k(kk);
        if z_k > horizon + 1e-9 {
            break;
        }
        let j = params.weight + z_k * m;
        let t_value = if z_k.abs() <= 1e-9 {
            // A^0 = Id: the functional of P itself
            let v = tr_partial_sigma(p_fam);
            gates.push(GateRecord {
                name: "Tr_partial_sigma(P): weight".into(),
                param: v.gate_param,
                open: v.gate_open,
            });
            v
        } else {
            let density = diag.residue_density_at(Complex64::new(-z_k, 0.0));
            let v = gated_boundary_coefficient(&density, j);
            gates.push(GateRecord {
                name: format!("Tr_partial_sigma(P A^z), z = {z_k:.6}: weight"),
                param: j,
                open: v.gate_open,
            });
            v
        };
        if !t_value.gate_open || t_value.value.norm() == 0.0 {
            continue;
        }
        let gamma0 = match as_nonneg_int(z_k, 1e-9) {
            Some(ellk) => gamma_residue_and_regular(ellk).1,
            None => gamma(Complex64::new(-z_k, 0.0)),
        };
        let gamma_k = -(gamma0 / (m * m)) * t_value.value;
        if gamma_k.norm() > 0.0 {
            terms.push(ExpansionTerm {
                exponent: Complex64::new(z_k, 0.0),
                log_power: 1,
                coeff: gamma_k,
                provenance: Provenance::Case1,
            });
        }
        if let Some(zk_int) = as_nonneg_int(z_k, 1e-9) {
            let sign = if zk_int % 2 == 0 { 1.0 } else { -1.0 };
            let delta_k = sign / (2.0 * m * m * factorial(zk_int)) * t_value.value;
            if delta_k.norm() > 0.0 {
                terms.push(ExpansionTerm {
                    exponent: Complex64::new(z_k, 0.0),
                    log_power: 2,
                    coeff: delta_k,
                    provenance: Provenance::Triple,
                });
            }
        }
    }
    let poles = Vec::new();
    Ok(HeatExpansion {
        terms: merge_terms(terms),
        poles,
        gates,
        horizon,
        exact_below: exact_horizon(&params),
        params,
    })
}

// ---- numeric oracle ----

const T_FLOOR: f64 = 1e-6;

/// Tr Q(t) = ∬ L_c(q)(t, x, ξ) d̄ξ dx/x by per-atom closed-form Laplace
/// kernels and adaptive 2-D quadrature; adds Σ r_k t^{(k−p)/m} when smooth-
/// part coefficients are supplied.
pub fn heat_trace_numeric(
    fam: &ConeSymbolFamily,
    t: f64,
    smooth_part: &[Complex64],
) -> Result<Complex64, HeatError> {
    let params = ExpansionParams::of(fam);
    check_trace_class(params.m, params.weight)?;
    if t < T_FLOOR {
        return Err(HeatError::QuadratureFailure(format!("t = {t} below the floor {T_FLOOR}")));
    }
    let m = fam.m;
    let inner_r = fam.cutoff.inner_radius();
    let mut total = Complex64::new(0.0, 0.0);
    for (offset, _, atom) in fam.iter_atoms() {
        if atom.k == 0 {
            continue; // λ-free atoms carry no Υ-transform
        }
        let ang = angular_factor(fam.n, atom.parity);
        if ang == 0.0 {
            continue;
        }
        let k = atom.k;
        let mu = atom.mu;
        let d = atom.d;
        let s = atom.s;
        let n_f = fam.n as f64;
        let decay = mu.norm() * mu.arg().cos();
        // outer integral over x: integrand ∝ e^{−t x^{−m} Re(μ) r^d}, dead
        // below x_min where the exponent exceeds ~46 at the cutoff radius
        let x_min = (t * decay * inner_r.powf(d) / 46.0).powf(1.0 / m).min(0.5);
        let chi = |r: f64| fam.cutoff.chi(r);
        let inner = |x: f64| -> Complex64 {
            let c_x = t * x.powf(-m);
            // tail radius: decay exponent 46 at c_x·|μ|cos(arg μ)·R^d
            let r_max = (46.0 / (c_x * decay)).powf(1.0 / d).max(2.0 * fam.cutoff.outer_radius());
            let mut acc = Complex64::new(0.0, 0.0);
            let mut a = inner_r;
            while a < r_max {
                let b = (2.0 * a).min(r_max);
                acc += crate::mellin::gl32_panel(
                    |r: f64| {
                        let weight = (-c_x * mu * r.powf(d)).exp();
                        chi(r) * r.powf(s + n_f - 1.0) * weight
                    },
                    a,
                    b,
                );
                a = b;
            }
            acc
        };
        let mut outer = Complex64::new(0.0, 0.0);
        let mut a = x_min;
        while a < 1.0 {
            let b = (2.0 * a).min(1.0);
            outer += crate::mellin::gl32_panel(
                |x: f64| x.powf(offset - m * k as f64 - 1.0) * inner(x),
                a,
                b,
            );
            a = b;
        }
        total += atom.coeff * ang * t.powi(k as i32 - 1) / factorial(k - 1) * outer;
    }
    for (k, r_k) in smooth_part.iter().enumerate() {
        total += r_k * t.powf((k as f64 - params.weight) / m);
    }
    Ok(total)
}

/// Heat-trace samples over a t-grid, evaluated in parallel with a fixed
/// reduction order.
pub fn heat_trace_grid(
    fam: &ConeSymbolFamily,
    ts: &[f64],
    smooth_part: &[Complex64],
) -> Result<Vec<(f64, Complex64)>, HeatError> {
    let values: Result<Vec<_>, HeatError> = ts
        .par_iter()
        .map(|&t| heat_trace_numeric(fam, t, smooth_part).map(|v| (t, v)))
        .collect();
    values
}

/// Geometric t-grid.
pub fn geometric_grid(t_min: f64, t_max: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| {
            let frac = i as f64 / (points - 1).max(1) as f64;
            t_min * (t_max / t_min).powf(frac)
        })
        .collect()
}

/// Least-squares fit in the basis t^e (log t)^j with column equilibration;
/// refuses design matrices with condition number above 1e12.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub basis: Vec<(f64, u32)>,
    pub coeffs: Vec<Complex64>,
    pub residual: f64,
    pub condition: f64,
}

pub fn fit_expansion(
    samples: &[(f64, Complex64)],
    basis: &[(f64, u32)],
) -> Result<FitResult, HeatError> {
    use nalgebra::{DMatrix, DVector};
    let rows = samples.len();
    let cols = basis.len();
    if rows < cols {
        return Err(HeatError::QuadratureFailure("fewer samples than basis functions".into()));
    }
    let mut design = DMatrix::zeros(rows, cols);
    for (i, &(t, _)) in samples.iter().enumerate() {
        let lt = t.ln();
        for (j, &(e, lp)) in basis.iter().enumerate() {
            design[(i, j)] = t.powf(e) * lt.powi(lp as i32);
        }
    }
    // column equilibration
    let scales: Vec<f64> = (0..cols)
        .map(|j| {
            let norm = design.column(j).norm();
            if norm > 0.0 {
                norm
            } else {
                1.0
            }
        })
        .collect();
    let mut scaled = design.clone();
    for j in 0..cols {
        for i in 0..rows {
            scaled[(i, j)] /= scales[j];
        }
    }
    let svd = scaled.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= 1e12) {
        return Err(HeatError::IllConditioned(condition));
    }
    let y_re = DVector::from_iterator(rows, samples.iter().map(|&(_, v)| v.re));
    let y_im = DVector::from_iterator(rows, samples.iter().map(|&(_, v)| v.im));
    let sol_re = svd.solve(&y_re, 1e-14).map_err(|e| HeatError::QuadratureFailure(e.into()))?;
    let sol_im = svd.solve(&y_im, 1e-14).map_err(|e| HeatError::QuadratureFailure(e.into()))?;
    let coeffs: Vec<Complex64> = (0..cols)
        .map(|j| Complex64::new(sol_re[j] / scales[j], sol_im[j] / scales[j]))
        .collect();
    // residual of the unscaled system
    let mut residual = 0.0;
    for (i, &(_, v)) in samples.iter().enumerate() {
        let mut pred = Complex64::new(0.0, 0.0);
        for j in 0..cols {
            pred += coeffs[j] * design[(i, j)];
        }
        residual += (pred - v).norm_sqr();
    }
    Ok(FitResult { basis: basis.to_vec(), coeffs, residual: residual.sqrt(), condition })
}

/// Which vanishing corollary applies to a (p, m′, n) configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorollaryFlags {
    pub no_log_sq: bool,
    /// p < 0: Tr_σ(P) = −m × (coefficient of log t).
    pub tr_sigma_identity: bool,
    /// m′ < −n: Tr_∂(P) = −m × (coefficient of log t).
    pub tr_partial_identity: bool,
}

pub fn corollary_flags(p: f64, m_prime: f64, n: u32) -> CorollaryFlags {
    let c1 = p < 0.0;
    let c2 = m_prime < -(n as f64);
    CorollaryFlags { no_log_sq: c1 || c2, tr_sigma_identity: c1, tr_partial_identity: c2 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::EULER_GAMMA;
    use crate::symcore::Parity;
    use approx::assert_relative_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn model_m1_operator() -> ConeOperatorModel {
        ConeOperatorModel {
            m: 1.0,
            mu: c(1.0),
            lower: vec![],
            alpha: 0.0,
            epsilon: std::f64::consts::FRAC_PI_4,
            n: 1,
            cutoff: Cutoff::Sharp,
        }
    }

    #[test]
    fn resolvent_pure_leading_is_exact() {
        // x-independent ξ-linear leading symbol: q = x·(μ|ξ|−λ)^{−1} exactly
        let a = model_m1_operator();
        let q = resolvent_symbol(&a, None, 8).unwrap();
        assert_eq!(q.x_terms.len(), 1);
        assert_relative_eq!(q.x_terms[0].offset, 1.0);
        assert_eq!(q.x_terms[0].parts.len(), 1);
        let atoms = &q.x_terms[0].parts[0].atoms;
        assert_eq!(atoms.len(), 1);
        assert_eq!(atoms[0].k, 1);
        assert_relative_eq!(atoms[0].coeff.re, 1.0);
    }

    #[test]
    fn resolvent_left_factor_offsets() {
        // P = multiplication by (1 + x): q-family with x-offsets {1, 2}
        let a = model_m1_operator();
        let p = ConeSymbolFamily::new(
            FamilyKind::LambdaFree,
            0.0,
            0.0,
            1.0,
            1,
            8,
            Cutoff::Sharp,
            vec![
                XTerm {
                    offset: 0.0,
                    parts: vec![HomogeneousPart::new(0.0, vec![SymbolAtom::lambda_free(c(1.0), 0.0)])],
                },
                XTerm {
                    offset: 1.0,
                    parts: vec![HomogeneousPart::new(0.0, vec![SymbolAtom::lambda_free(c(1.0), 0.0)])],
                },
            ],
        )
        .unwrap();
        let q = resolvent_symbol(&a, Some(&p), 8).unwrap();
        let offsets: Vec<f64> = q.x_terms.iter().map(|t| t.offset).collect();
        assert_eq!(offsets.len(), 2);
        assert_relative_eq!(offsets[0], 1.0);
        assert_relative_eq!(offsets[1], 2.0);
    }

    #[test]
    fn resolvent_one_correction_step() {
        // A with a lower-order term b·|ξ|⁰: q_{−2} = −b(μ|ξ|−λ)^{−2}
        let mut a = model_m1_operator();
        let b_coeff = 0.7;
        a.lower.push(LowerTerm { x_offset: 0, xi_power: 0, coeff: c(b_coeff) });
        let q = resolvent_symbol(&a, None, 3).unwrap();
        // level-1 part at offset 1 (post shift): atom (−b, s=0, k=2)
        let xt = &q.x_terms[0];
        assert_relative_eq!(xt.offset, 1.0);
        let part = xt.parts.iter().find(|p| (p.degree + 2.0).abs() < 1e-9).unwrap();
        assert_eq!(part.atoms.len(), 1);
        assert_eq!(part.atoms[0].k, 2);
        assert_relative_eq!(part.atoms[0].coeff.re, -b_coeff, epsilon = 1e-14);
    }

    #[test]
    fn resolvent_defect_decays() {
        let mut a = model_m1_operator();
        a.lower.push(LowerTerm { x_offset: 0, xi_power: 0, coeff: c(0.5) });
        a.lower.push(LowerTerm { x_offset: 1, xi_power: 0, coeff: c(0.3) });
        let n = 6;
        let xis = [4.0, 8.0, 16.0, 32.0];
        let defect = resolvent_defect(&a, n, &xis).unwrap();
        // log-log slope ≈ −(N+1) or steeper
        for pair in defect.windows(2) {
            let slope = (pair[1].1 / pair[0].1).ln() / (pair[1].0 / pair[0].0).ln();
            assert!(slope < -(n as f64) + 1.0, "defect slope {slope} too shallow");
        }
    }

    #[test]
    fn ellipticity_failure_detected() {
        let mut a = model_m1_operator();
        a.mu = c(-1.0);
        assert!(matches!(resolvent_symbol(&a, None, 4), Err(HeatError::EllipticityFailure(_))));
    }

    #[test]
    fn compose_commutator_is_symbolic() {
        // [xD_x, x] = −i x at the symbol level: a = ξ (odd parity), b = x
        let a_fam = ConeSymbolFamily::new(
            FamilyKind::LambdaFree,
            1.0,
            0.0,
            1.0,
            1,
            4,
            Cutoff::Sharp,
            vec![XTerm {
                offset: 0.0,
                parts: vec![HomogeneousPart::new(1.0, {
                    let mut at = SymbolAtom::lambda_free(c(1.0), 1.0);
                    at.parity = Parity::Odd;
                    vec![at]
                })],
            }],
        )
        .unwrap();
        let b_fam = ConeSymbolFamily::new(
            FamilyKind::LambdaFree,
            0.0,
            -1.0,
            1.0,
            1,
            4,
            Cutoff::Sharp,
            vec![XTerm {
                offset: 1.0,
                parts: vec![HomogeneousPart::new(0.0, vec![SymbolAtom::lambda_free(c(1.0), 0.0)])],
            }],
        )
        .unwrap();
        let ab = compose(&a_fam, &b_fam, 4).unwrap();
        let ba = compose(&b_fam, &a_fam, 4).unwrap();
        // commutator value at (x, ξ) = (0.7, 2): −i·0.7
        let lam = c(0.0);
        let v = ab.eval(0.7, 2.0, lam).unwrap() - ba.eval(0.7, 2.0, lam).unwrap();
        assert!((v - Complex64::new(0.0, -0.7)).norm() < 1e-14, "commutator {v}");
    }

    #[test]
    fn m1_heat_expansion_closed_form() {
        // Tr Q(t) = (1/(πt))e^{−t} − (1/π)E₁(t):
        // 1/π at t^{−1}, 1/π at log t, (γ−1)/π at t⁰, −1/(2π) at t, 1/(12π) at t²
        let a = model_m1_operator();
        let q = resolvent_symbol(&a, None, 8).unwrap();
        let exp = heat_expansion(&q, 3.0).unwrap();
        let pi = std::f64::consts::PI;
        assert_relative_eq!(exp.coeff(-1.0, 0).re, 1.0 / pi, epsilon = 1e-12);
        assert_relative_eq!(exp.coeff(0.0, 1).re, 1.0 / pi, epsilon = 1e-12);
        assert_relative_eq!(exp.coeff(0.0, 0).re, (EULER_GAMMA - 1.0) / pi, epsilon = 1e-12);
        assert_relative_eq!(exp.coeff(1.0, 0).re, -1.0 / (2.0 * pi), epsilon = 1e-12);
        assert_relative_eq!(exp.coeff(2.0, 0).re, 1.0 / (12.0 * pi), epsilon = 1e-12);
        assert_eq!(exp.max_log_power(), 1);
    }

    #[test]
    fn m1_pole_classification() {
        let a = model_m1_operator();
        let q = resolvent_symbol(&a, None, 8).unwrap();
        let exp = heat_expansion(&q, 3.0).unwrap();
        let find = |loc: f64| exp.poles.iter().find(|p| (p.location.re - loc).abs() < 1e-9).unwrap();
        assert_eq!(find(1.0).actual_order, 1);
        assert_eq!(find(0.0).actual_order, 2);
        // z = −1: candidate membership in all three progressions, but the
        // actual pole is simple (B is regular there)
        let p = find(-1.0);
        assert_eq!(p.candidate_order, 3);
        assert_eq!(p.actual_order, 1);
    }

    #[test]
    fn m1_heat_trace_numeric_closed_form() {
        let a = model_m1_operator();
        let q = resolvent_symbol(&a, None, 8).unwrap();
        let pi = std::f64::consts::PI;
        for &t in &[0.1, 0.5, 1.0] {
            let v = heat_trace_numeric(&q, t, &[]).unwrap();
            let closed = (1.0 / (pi * t)) * (-t).exp() - crate::special::exp1(t) / pi;
            assert!(
                (v.re - closed).abs() < 1e-9 * closed.abs().max(1e-9),
                "t={t}: {v} vs {closed}"
            );
            assert!(v.im.abs() < 1e-12);
        }
        // large t: value decays monotonically
        let v1 = heat_trace_numeric(&q, 5.0, &[]).unwrap().re;
        let v2 = heat_trace_numeric(&q, 10.0, &[]).unwrap().re;
        let v3 = heat_trace_numeric(&q, 20.0, &[]).unwrap().re;
        assert!(v1 > v2 && v2 > v3 && v3 > 0.0);
    }

    #[test]
    fn trace_class_gate_enforced() {
        // p > m violates the trace-class condition
        let fam = ConeSymbolFamily::new(
            FamilyKind::Resolvent,
            0.0,
            1.5,
            1.0,
            1,
            4,
            Cutoff::Sharp,
            vec![XTerm {
                offset: -0.5,
                parts: vec![HomogeneousPart::new(
                    -1.0,
                    vec![SymbolAtom::new(c(1.0), 0.0, 1, c(1.0), 1.0)],
                )],
            }],
        )
        .unwrap();
        assert!(matches!(
            heat_expansion(&fam, 2.0),
            Err(HeatError::TraceClassViolation { .. })
        ));
        assert!(matches!(
            heat_trace_numeric(&fam, 0.1, &[]),
            Err(HeatError::TraceClassViolation { .. })
        ));
    }

    #[test]
    fn fit_recovers_synthetic_m1_coefficients() {
        let pi = std::f64::consts::PI;
        let c1 = 1.0 / pi;
        let c2 = 1.0 / pi;
        let c3 = (EULER_GAMMA - 1.0) / pi;
        let ts = geometric_grid(1e-4, 1e-1, 40);
        let samples: Vec<(f64, Complex64)> = ts
            .iter()
            .map(|&t| (t, Complex64::new(c1 / t + c2 * t.ln() + c3, 0.0)))
            .collect();
        let basis = vec![(-1.0, 0), (0.0, 1), (0.0, 0)];
        let fit = fit_expansion(&samples, &basis).unwrap();
        assert!((fit.coeffs[0].re - c1).abs() < 1e-6 * c1.abs());
        assert!((fit.coeffs[1].re - c2).abs() < 1e-6 * c2.abs());
        assert!((fit.coeffs[2].re - c3).abs() < 1e-6 * c3.abs());
        assert!(fit.residual < 1e-8);
    }

    #[test]
    fn fit_misfit_detection_and_conditioning() {
        // basis missing the log term leaves a large residual
        let ts = geometric_grid(1e-3, 1e-1, 30);
        let samples: Vec<(f64, Complex64)> =
            ts.iter().map(|&t| (t, Complex64::new(t.ln(), 0.0))).collect();
        let fit = fit_expansion(&samples, &[(0.0, 0), (1.0, 0)]).unwrap();
        assert!(fit.residual > 1e-1);
        // duplicated column is ill-conditioned
        let err = fit_expansion(&samples, &[(0.0, 0), (0.0, 0)]);
        assert!(matches!(err, Err(HeatError::IllConditioned(_))));
    }

    #[test]
    fn corollary_flag_examples() {
        let f = corollary_flags(-1.0, 0.0, 1);
        assert!(f.no_log_sq && f.tr_sigma_identity && !f.tr_partial_identity);
        let f = corollary_flags(0.0, -2.0, 1);
        assert!(f.no_log_sq && !f.tr_sigma_identity && f.tr_partial_identity);
        let f = corollary_flags(0.0, 0.0, 1);
        assert!(!f.no_log_sq && !f.tr_sigma_identity && !f.tr_partial_identity);
    }
}
