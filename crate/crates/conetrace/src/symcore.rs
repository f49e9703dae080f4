//! The closed algebra of model parameter-dependent symbols: anisotropic
//! homogeneous atoms c·|ξ|^s (μ|ξ|^d − λ)^{−k} with x-Taylor data, their
//! evaluation, ξ-derivative and product, plus the truncated classical
//! families they assemble into.
//!
//! Atoms are defined on the ray ξ > 0 and extended to ξ < 0 with a parity
//! flag (even by default; odd parity only arises from ∂_ξ inside symbol
//! compositions and integrates to zero on |ξ| = 1).

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SymError {
    #[error("atom evaluated at its resolvent pole μ|ξ|^d = λ")]
    PoleHit,
    #[error("atom evaluated at ξ = 0")]
    DomainError,
    #[error("atoms have different bases: ({0}, {1}) vs ({2}, {3})")]
    BaseMismatch(Complex64, f64, Complex64, f64),
    #[error("invalid family: {0}")]
    InvalidFamily(String),
}

/// Reflection behaviour of a ray-defined atom under ξ → −ξ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    fn flip(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }

    /// 1 + (−1)^parity: the factor the two rays contribute to an angular sum.
    pub fn ray_sum_factor(self) -> f64 {
        match self {
            Parity::Even => 2.0,
            Parity::Odd => 0.0,
        }
    }
}

/// One closed-form building block c·|ξ|^s (μ|ξ|^d − λ)^{−k}.
///
/// For k = 0 the atom is λ-free with value c·|ξ|^s; μ and d are then inert.
#[derive(Debug, Clone, Copy)]
pub struct SymbolAtom {
    pub coeff: Complex64,
    pub s: f64,
    pub k: u32,
    pub mu: Complex64,
    pub d: f64,
    pub parity: Parity,
}

impl SymbolAtom {
    pub fn new(coeff: Complex64, s: f64, k: u32, mu: Complex64, d: f64) -> Self {
        SymbolAtom { coeff, s, k, mu, d, parity: Parity::Even }
    }

    /// λ-free atom c·|ξ|^s.
    pub fn lambda_free(coeff: Complex64, s: f64) -> Self {
        SymbolAtom::new(coeff, s, 0, Complex64::new(1.0, 0.0), 1.0)
    }

    /// Anisotropic degree s − d·k.
    pub fn degree(&self) -> f64 {
        self.s - self.d * self.k as f64
    }

    fn same_base(&self, other: &SymbolAtom) -> bool {
        (self.mu - other.mu).norm() <= 1e-14 * (self.mu.norm() + other.mu.norm()).max(1.0)
            && (self.d - other.d).abs() <= 1e-14
    }

    /// Like-term key: atoms with equal (s, k, parity) on the same base merge.
    fn merge_key(&self) -> (i64, u32, bool) {
        ((self.s * 1e9).round() as i64, self.k, self.parity == Parity::Odd)
    }

    /// Value at (ξ, λ). Errors on ξ = 0 and on the resolvent pole.
    pub fn eval(&self, xi: f64, lambda: Complex64) -> Result<Complex64, SymError> {
        if xi == 0.0 {
            return Err(SymError::DomainError);
        }
        let r = xi.abs();
        let sign = match self.parity {
            Parity::Even => 1.0,
            Parity::Odd => xi.signum(),
        };
        let radial = self.coeff * sign * r.powf(self.s);
        if self.k == 0 {
            return Ok(radial);
        }
        let den = self.mu * r.powf(self.d) - lambda;
        if den.norm() <= 1e-300 {
            return Err(SymError::PoleHit);
        }
        Ok(radial * den.powi(-(self.k as i32)))
    }

    /// Exact ∂_ξ on the ray ξ > 0, extended by parity:
    /// {(c·s, s−1, k), (−c·k·μ·d, s+d−1, k+1)}; the parity flips.
    pub fn dxi(&self) -> Vec<SymbolAtom> {
        let mut out = Vec::with_capacity(2);
        if self.s != 0.0 {
            out.push(SymbolAtom {
                coeff: self.coeff * self.s,
                s: self.s - 1.0,
                k: self.k,
                mu: self.mu,
                d: self.d,
                parity: self.parity.flip(),
            });
        }
        if self.k > 0 {
            out.push(SymbolAtom {
                coeff: -self.coeff * self.k as f64 * self.mu * self.d,
                s: self.s + self.d - 1.0,
                k: self.k + 1,
                mu: self.mu,
                d: self.d,
                parity: self.parity.flip(),
            });
        }
        out
    }

    /// Product of two atoms on the same base: coefficients multiply,
    /// exponents and resolvent powers add, parities add mod 2.
    pub fn mul(&self, other: &SymbolAtom) -> Result<SymbolAtom, SymError> {
        if self.k > 0 && other.k > 0 && !self.same_base(other) {
            return Err(SymError::BaseMismatch(self.mu, self.d, other.mu, other.d));
        }
        let (mu, d) = if self.k > 0 { (self.mu, self.d) } else { (other.mu, other.d) };
        let parity = if self.parity == other.parity { Parity::Even } else { Parity::Odd };
        Ok(SymbolAtom {
            coeff: self.coeff * other.coeff,
            s: self.s + other.s,
            k: self.k + other.k,
            mu,
            d,
            parity,
        })
    }
}

/// Atoms of one common anisotropic degree.
#[derive(Debug, Clone)]
pub struct HomogeneousPart {
    pub degree: f64,
    pub atoms: Vec<SymbolAtom>,
}

impl HomogeneousPart {
    pub fn new(degree: f64, atoms: Vec<SymbolAtom>) -> Self {
        let mut p = HomogeneousPart { degree, atoms };
        p.canonicalize();
        p
    }

    /// Sort by (s, k, parity) and merge like terms; drop negligible atoms.
    pub fn canonicalize(&mut self) {
        self.atoms.sort_by(|a, b| {
            a.merge_key()
                .partial_cmp(&b.merge_key())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut merged: Vec<SymbolAtom> = Vec::with_capacity(self.atoms.len());
        for a in self.atoms.drain(..) {
            if let Some(last) = merged.last_mut() {
                if last.merge_key() == a.merge_key() && last.same_base(&a) {
                    last.coeff += a.coeff;
                    continue;
                }
            }
            merged.push(a);
        }
        merged.retain(|a| a.coeff.norm() > 1e-300);
        self.atoms = merged;
    }
}

/// Radial excision function χ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cutoff {
    /// Indicator of {|ξ| ≥ 1}; the exact-backend default.
    Sharp,
    /// C^∞ ramp vanishing for |ξ| ≤ r0 and ≡ 1 for |ξ| ≥ r1.
    Smooth { r0: f64, r1: f64 },
}

impl Cutoff {
    pub fn chi(&self, xi: f64) -> f64 {
        let r = xi.abs();
        match *self {
            Cutoff::Sharp => {
                if r >= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Cutoff::Smooth { r0, r1 } => {
                if r <= r0 {
                    0.0
                } else if r >= r1 {
                    1.0
                } else {
                    let u = (r - r0) / (r1 - r0);
                    let f = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
                    f(u) / (f(u) + f(1.0 - u))
                }
            }
        }
    }

    /// Radius past which χ ≡ 1.
    pub fn outer_radius(&self) -> f64 {
        match *self {
            Cutoff::Sharp => 1.0,
            Cutoff::Smooth { r1, .. } => r1,
        }
    }

    /// Radius below which χ ≡ 0.
    pub fn inner_radius(&self) -> f64 {
        match *self {
            Cutoff::Sharp => 1.0,
            Cutoff::Smooth { r0, .. } => r0,
        }
    }
}

/// Whether a family carries the spectral parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    /// Q-type: all atoms have k ≥ 1; degrees m′−m−j; leading x-offset m−p.
    Resolvent,
    /// P-type: λ-free, all atoms k = 0; degrees m′−j; leading x-offset −p.
    LambdaFree,
}

/// One x-offset with its homogeneous parts.
#[derive(Debug, Clone)]
pub struct XTerm {
    pub offset: f64,
    pub parts: Vec<HomogeneousPart>,
}

/// A truncated classical symbol family q(x, ξ, λ) = Σ_α x^α χ(ξ) Σ_j a_{deg_j}(ξ, λ).
#[derive(Debug, Clone)]
pub struct ConeSymbolFamily {
    pub kind: FamilyKind,
    pub m_prime: f64,
    /// Weight exponent p: the family is O(x^{m−p}) (Q-type) resp. O(x^{−p}).
    pub weight: f64,
    /// Anisotropy order d = m (also the order of the underlying operator).
    pub m: f64,
    pub n: u32,
    pub truncation: u32,
    pub cutoff: Cutoff,
    pub x_terms: Vec<XTerm>,
}

impl ConeSymbolFamily {
    pub fn new(
        kind: FamilyKind,
        m_prime: f64,
        weight: f64,
        m: f64,
        n: u32,
        truncation: u32,
        cutoff: Cutoff,
        x_terms: Vec<XTerm>,
    ) -> Result<Self, SymError> {
        let mut fam = ConeSymbolFamily { kind, m_prime, weight, m, n, truncation, cutoff, x_terms };
        fam.canonicalize();
        fam.check_structure()?;
        Ok(fam)
    }

    /// Leading order of the symbol: m′−m for Q-type, m′ for λ-free data.
    pub fn lead_order(&self) -> f64 {
        match self.kind {
            FamilyKind::Resolvent => self.m_prime - self.m,
            FamilyKind::LambdaFree => self.m_prime,
        }
    }

    /// Leading x-offset required by the weight: m−p resp. −p.
    pub fn lead_offset(&self) -> f64 {
        match self.kind {
            FamilyKind::Resolvent => self.m - self.weight,
            FamilyKind::LambdaFree => -self.weight,
        }
    }

    /// Degree-ladder index of a part: j with degree = lead_order − j.
    pub fn level_of(&self, degree: f64) -> f64 {
        self.lead_order() - degree
    }

    pub fn canonicalize(&mut self) {
        for xt in &mut self.x_terms {
            for p in &mut xt.parts {
                p.canonicalize();
            }
            xt.parts.retain(|p| !p.atoms.is_empty());
            xt.parts
                .sort_by(|a, b| b.degree.partial_cmp(&a.degree).unwrap_or(std::cmp::Ordering::Equal));
            // merge parts of equal degree
            let mut merged: Vec<HomogeneousPart> = Vec::new();
            for p in xt.parts.drain(..) {
                if let Some(last) = merged.last_mut() {
                    if (last.degree - p.degree).abs() <= 1e-10 {
                        last.atoms.extend(p.atoms);
                        last.canonicalize();
                        continue;
                    }
                }
                merged.push(p);
            }
            xt.parts = merged;
        }
        self.x_terms.retain(|t| !t.parts.is_empty());
        self.x_terms
            .sort_by(|a, b| a.offset.partial_cmp(&b.offset).unwrap_or(std::cmp::Ordering::Equal));
    }

    fn check_structure(&self) -> Result<(), SymError> {
        for xt in &self.x_terms {
            for part in &xt.parts {
                let level = self.level_of(part.degree);
                let rounded = level.round();
                if (level - rounded).abs() > 1e-8 || rounded < -1e-9 {
                    return Err(SymError::InvalidFamily(format!(
                        "part degree {} is not on the ladder {}−j",
                        part.degree,
                        self.lead_order()
                    )));
                }
                if rounded as u32 >= self.truncation {
                    return Err(SymError::InvalidFamily(format!(
                        "part level {} exceeds truncation {}",
                        rounded, self.truncation
                    )));
                }
                for a in &part.atoms {
                    if (a.degree() - part.degree).abs() > 1e-9 {
                        return Err(SymError::InvalidFamily(format!(
                            "atom degree {} stored under part degree {}",
                            a.degree(),
                            part.degree
                        )));
                    }
                    match self.kind {
                        FamilyKind::Resolvent => {
                            if a.k == 0 {
                                return Err(SymError::InvalidFamily(
                                    "λ-free (k = 0) atom inside a Q-type family".into(),
                                ));
                            }
                            if (a.d - self.m).abs() > 1e-12 {
                                return Err(SymError::InvalidFamily(
                                    "atom anisotropy differs from the family order".into(),
                                ));
                            }
                        }
                        FamilyKind::LambdaFree => {
                            if a.k != 0 {
                                return Err(SymError::InvalidFamily(
                                    "resolvent atom inside a λ-free family".into(),
                                ));
                            }
                        }
                    }
                }
            }
        }
        if let Some(first) = self.x_terms.first() {
            if (first.offset - self.lead_offset()).abs() > 1e-8 {
                return Err(SymError::InvalidFamily(format!(
                    "leading x-offset {} does not match the weight (expected {})",
                    first.offset,
                    self.lead_offset()
                )));
            }
        }
        Ok(())
    }

    /// The shared resolvent base (μ, d) of a Q-type family.
    pub fn base(&self) -> Option<(Complex64, f64)> {
        self.x_terms
            .iter()
            .flat_map(|t| t.parts.iter())
            .flat_map(|p| p.atoms.iter())
            .find(|a| a.k > 0)
            .map(|a| (a.mu, a.d))
    }

    /// q(x, ξ, λ) = Σ_α x^α χ(ξ) Σ parts.
    pub fn eval(&self, x: f64, xi: f64, lambda: Complex64) -> Result<Complex64, SymError> {
        let chi = self.cutoff.chi(xi);
        if chi == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for xt in &self.x_terms {
            let mut part_sum = Complex64::new(0.0, 0.0);
            for part in &xt.parts {
                for atom in &part.atoms {
                    part_sum += atom.eval(xi, lambda)?;
                }
            }
            acc += x.powf(xt.offset) * part_sum;
        }
        Ok(acc * chi)
    }

    pub fn iter_atoms(&self) -> impl Iterator<Item = (f64, &HomogeneousPart, &SymbolAtom)> {
        self.x_terms.iter().flat_map(|xt| {
            xt.parts
                .iter()
                .flat_map(move |p| p.atoms.iter().map(move |a| (xt.offset, p, a)))
        })
    }

    pub fn is_zero(&self) -> bool {
        self.x_terms.is_empty()
    }

    /// Validation report: sector avoidance, sampled homogeneity, degree
    /// bookkeeping, λ → ∞ regularity, weight/offset consistency.
    pub fn validate(&self, epsilon: f64) -> ValidationReport {
        let mut report = ValidationReport::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_cafe);

        // sector avoidance: μ|ξ|^d stays off Λ = {ε ≤ arg λ ≤ 2π−ε}
        let mut ok = true;
        let mut detail = String::new();
        for (off, _, a) in self.iter_atoms() {
            if a.k > 0 {
                let arg = a.mu.arg().abs();
                if !(a.mu.norm() > 0.0 && arg < epsilon) {
                    ok = false;
                    detail = format!(
                        "atom at offset {off}: arg μ = {:.4} not inside (−ε, ε), ε = {epsilon:.4}",
                        a.mu.arg()
                    );
                    break;
                }
            }
        }
        report.push("sector-avoidance", ok, detail);

        // homogeneity: value(δξ, δ^d λ) = δ^{s−dk} value(ξ, λ) on samples
        let mut ok = true;
        let mut detail = String::new();
        'homog: for (_, _, a) in self.iter_atoms() {
            for &delta in &[2.0, 3.0, 10.0] {
                let xi = 1.0 + rng.gen_range(0.0..2.0);
                let lam = -Complex64::new(rng.gen_range(0.5..2.0), rng.gen_range(-0.3..0.3));
                let (v1, v2) = match (a.eval(xi, lam), a.eval(delta * xi, delta.powf(a.d) * lam)) {
                    (Ok(v1), Ok(v2)) => (v1, v2),
                    _ => continue,
                };
                let expect = delta.powf(a.degree()) * v1;
                if (v2 - expect).norm() > 1e-12 * expect.norm().max(1e-12) {
                    ok = false;
                    detail = format!("atom (s={}, k={}) failed at δ={delta}", a.s, a.k);
                    break 'homog;
                }
            }
        }
        report.push("homogeneity", ok, detail);

        // degree bookkeeping (re-run of the structural check)
        let structure = self.check_structure();
        report.push(
            "degree-bookkeeping",
            structure.is_ok(),
            structure.err().map(|e| e.to_string()).unwrap_or_default(),
        );

        // regularity at λ = ∞: z^{−k} value(ξ, 1/z) → c|ξ|^s (−1)^k
        let mut ok = true;
        let mut detail = String::new();
        for (_, _, a) in self.iter_atoms() {
            if a.k == 0 {
                continue;
            }
            let xi = 1.7f64;
            let limit = a.coeff * xi.powf(a.s) * (-1.0f64).powi(a.k as i32);
            let z = Complex64::new(-1e-9, 0.0); // approach along the sector spine
            let v = a.eval(xi, 1.0 / z).unwrap() * z.powi(-(a.k as i32));
            if (v - limit).norm() > 1e-6 * limit.norm().max(1.0) {
                ok = false;
                detail = format!("atom (s={}, k={}) limit mismatch", a.s, a.k);
                break;
            }
        }
        report.push("lambda-infinity-regularity", ok, detail);

        let lead_ok = self
            .x_terms
            .first()
            .map(|t| (t.offset - self.lead_offset()).abs() <= 1e-8)
            .unwrap_or(true);
        report.push("leading-offset", lead_ok, String::new());

        report
    }
}

#[derive(Debug, Default, Clone)]
pub struct ValidationReport {
    pub entries: Vec<CheckEntry>,
}

#[derive(Debug, Clone)]
pub struct CheckEntry {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl ValidationReport {
    fn push(&mut self, name: &str, pass: bool, detail: String) {
        self.entries.push(CheckEntry { name: name.to_string(), pass, detail });
    }

    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }
}

type Evaluator = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// How an x-profile evaluates between its Taylor data and the interior.
#[derive(Clone)]
pub enum ProfileEval {
    /// The Taylor polynomial itself, times the indicator of the support.
    TaylorPoly,
    /// A custom smooth extension consistent with the Taylor data.
    Custom(Evaluator),
}

/// An element of x^{−p}C^∞ on (0, 1]: Taylor data at x = 0 plus an evaluable
/// interior profile.
#[derive(Clone)]
pub struct XProfile {
    /// (offset, coefficient), sorted by offset. Offsets may be real.
    pub taylor: Vec<(f64, Complex64)>,
    pub support: (f64, f64),
    pub eval: ProfileEval,
}

impl std::fmt::Debug for XProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("XProfile")
            .field("taylor", &self.taylor)
            .field("support", &self.support)
            .finish()
    }
}

impl XProfile {
    pub fn polynomial(taylor: Vec<(f64, Complex64)>) -> Self {
        let mut taylor = taylor;
        taylor.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        let mut merged: Vec<(f64, Complex64)> = Vec::new();
        for (o, c) in taylor {
            if let Some(last) = merged.last_mut() {
                if (last.0 - o).abs() <= 1e-12 {
                    last.1 += c;
                    continue;
                }
            }
            merged.push((o, c));
        }
        merged.retain(|(_, c)| c.norm() > 1e-300);
        XProfile { taylor: merged, support: (0.0, 1.0), eval: ProfileEval::TaylorPoly }
    }

    pub fn with_evaluator(
        taylor: Vec<(f64, Complex64)>,
        f: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        let mut p = XProfile::polynomial(taylor);
        p.eval = ProfileEval::Custom(Arc::new(f));
        p
    }

    pub fn value(&self, x: f64) -> Complex64 {
        if x < self.support.0 || x > self.support.1 || x <= 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        match &self.eval {
            ProfileEval::TaylorPoly => self
                .taylor
                .iter()
                .map(|&(o, c)| c * x.powf(o))
                .sum(),
            ProfileEval::Custom(f) => f(x),
        }
    }

    /// Coefficient at a given offset (0 if absent).
    pub fn coeff_at(&self, offset: f64) -> Complex64 {
        self.taylor
            .iter()
            .find(|(o, _)| (o - offset).abs() <= 1e-9)
            .map(|&(_, c)| c)
            .unwrap_or_else(|| Complex64::new(0.0, 0.0))
    }

    pub fn is_zero(&self) -> bool {
        self.taylor.is_empty()
    }
}

/// A density u(x)·dx/x with the same data shape as [`XProfile`], written
/// after fixing the trivialization dx/x.
#[derive(Debug, Clone)]
pub struct XDensity(pub XProfile);

impl XDensity {
    pub fn polynomial(taylor: Vec<(f64, Complex64)>) -> Self {
        XDensity(XProfile::polynomial(taylor))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn atom(c: f64, s: f64, k: u32, mu: f64, d: f64) -> SymbolAtom {
        SymbolAtom::new(Complex64::new(c, 0.0), s, k, Complex64::new(mu, 0.0), d)
    }

    #[test]
    fn atom_eval_examples() {
        // identity case
        let a = atom(1.0, 0.0, 1, 1.0, 1.0);
        assert_eq!(a.eval(1.0, Complex64::new(0.0, 0.0)).unwrap(), Complex64::new(1.0, 0.0));
        // direct substitution 1/(2+2)
        assert_relative_eq!(
            a.eval(2.0, Complex64::new(-2.0, 0.0)).unwrap().re,
            0.25,
            epsilon = 1e-15
        );
        // 1·1·(2+2)^{−2}
        let b = atom(1.0, 1.0, 2, 2.0, 2.0);
        assert_relative_eq!(
            b.eval(1.0, Complex64::new(-2.0, 0.0)).unwrap().re,
            1.0 / 16.0,
            epsilon = 1e-15
        );
        assert!(matches!(a.eval(0.0, Complex64::new(0.0, 0.0)), Err(SymError::DomainError)));
        assert!(matches!(a.eval(1.0, Complex64::new(1.0, 0.0)), Err(SymError::PoleHit)));
    }

    #[test]
    fn atom_dxi_examples() {
        // power rule
        let out = atom(1.0, 2.0, 0, 1.0, 1.0).dxi();
        assert_eq!(out.len(), 1);
        assert_relative_eq!(out[0].coeff.re, 2.0);
        assert_relative_eq!(out[0].s, 1.0);
        // ∂_ξ (ξ−λ)^{−1} = −(ξ−λ)^{−2}
        let out = atom(1.0, 0.0, 1, 1.0, 1.0).dxi();
        assert_eq!(out.len(), 1);
        assert_relative_eq!(out[0].coeff.re, -1.0);
        assert_eq!(out[0].k, 2);
        // (1, s=1, k=1, μ=2, d=2) → {(1, s=0, k=1), (−4, s=2, k=2)}
        let out = atom(1.0, 1.0, 1, 2.0, 2.0).dxi();
        assert_eq!(out.len(), 2);
        assert_relative_eq!(out[0].coeff.re, 1.0);
        assert_relative_eq!(out[0].s, 0.0);
        assert_relative_eq!(out[1].coeff.re, -4.0);
        assert_relative_eq!(out[1].s, 2.0);
        assert_eq!(out[1].k, 2);
    }

    #[test]
    fn dxi_matches_finite_differences() {
        for a in [
            atom(1.0, 0.0, 1, 1.0, 1.0),
            atom(1.0, 1.0, 1, 2.0, 2.0),
            atom(0.7, -1.0, 2, 1.0, 1.0),
        ] {
            let lam = Complex64::new(-1.3, 0.2);
            let xi = 1.9;
            let h = 1e-5;
            let num =
                (a.eval(xi + h, lam).unwrap() - a.eval(xi - h, lam).unwrap()) / (2.0 * h);
            let sym: Complex64 = a.dxi().iter().map(|b| b.eval(xi, lam).unwrap()).sum();
            assert!((num - sym).norm() < 1e-6 * sym.norm().max(1.0), "atom {a:?}");
        }
    }

    #[test]
    fn atom_mul_examples() {
        let a = atom(2.0, 1.0, 0, 1.0, 1.0);
        let b = atom(3.0, -1.0, 1, 1.0, 1.0);
        let p = a.mul(&b).unwrap();
        assert_relative_eq!(p.coeff.re, 6.0);
        assert_relative_eq!(p.s, 0.0);
        assert_eq!(p.k, 1);
        // identity element
        let unit = atom(1.0, 0.0, 0, 1.0, 1.0);
        let q = b.mul(&unit).unwrap();
        assert_relative_eq!(q.coeff.re, b.coeff.re);
        assert_relative_eq!(q.s, b.s);
        assert_eq!(q.k, b.k);
        // pointwise evaluation oracle at (ξ, λ) = (2, −1)
        let lam = Complex64::new(-1.0, 0.0);
        let lhs = p.eval(2.0, lam).unwrap();
        let rhs = a.eval(2.0, lam).unwrap() * b.eval(2.0, lam).unwrap();
        assert!((lhs - rhs).norm() < 1e-14);
        // base mismatch
        let c = atom(1.0, 0.0, 1, 2.0, 1.0);
        assert!(matches!(b.mul(&c), Err(SymError::BaseMismatch(..))));
    }

    fn m1_family() -> ConeSymbolFamily {
        ConeSymbolFamily::new(
            FamilyKind::Resolvent,
            0.0,
            0.0,
            1.0,
            1,
            8,
            Cutoff::Sharp,
            vec![XTerm {
                offset: 1.0,
                parts: vec![HomogeneousPart::new(-1.0, vec![atom(1.0, 0.0, 1, 1.0, 1.0)])],
            }],
        )
        .unwrap()
    }

    #[test]
    fn symbol_eval_examples() {
        let fam = m1_family();
        // (x, ξ, λ) = (1/2, 2, 0) → 1/4
        assert_relative_eq!(
            fam.eval(0.5, 2.0, Complex64::new(0.0, 0.0)).unwrap().re,
            0.25,
            epsilon = 1e-15
        );
        // excision
        assert_eq!(
            fam.eval(0.5, 0.5, Complex64::new(0.0, 0.0)).unwrap(),
            Complex64::new(0.0, 0.0)
        );
        // homogeneity ratio at δ = 3, degree −1
        let lam = Complex64::new(-1.0, 0.0);
        let v1 = fam.eval(0.5, 2.0, lam).unwrap();
        let v2 = fam.eval(0.5, 6.0, 3.0 * lam).unwrap();
        assert_relative_eq!((v2 / v1).re, 3.0f64.powf(-1.0), epsilon = 1e-12);
    }

    #[test]
    fn validate_family_examples() {
        let fam = m1_family();
        assert!(fam.validate(std::f64::consts::FRAC_PI_4).all_pass());

        // μ = −1 puts the pole inside Λ
        let bad = ConeSymbolFamily::new(
            FamilyKind::Resolvent,
            0.0,
            0.0,
            1.0,
            1,
            8,
            Cutoff::Sharp,
            vec![XTerm {
                offset: 1.0,
                parts: vec![HomogeneousPart::new(-1.0, vec![atom(1.0, 0.0, 1, -1.0, 1.0)])],
            }],
        )
        .unwrap();
        let report = bad.validate(std::f64::consts::FRAC_PI_4);
        assert!(!report.all_pass());
        assert!(report.entries.iter().any(|e| e.name == "sector-avoidance" && !e.pass));

        // mismatched stored degree is rejected at construction
        let err = ConeSymbolFamily::new(
            FamilyKind::Resolvent,
            0.0,
            0.0,
            1.0,
            1,
            8,
            Cutoff::Sharp,
            vec![XTerm {
                offset: 1.0,
                parts: vec![HomogeneousPart {
                    degree: -2.0,
                    atoms: vec![atom(1.0, 0.0, 1, 1.0, 1.0)],
                }],
            }],
        );
        assert!(err.is_err());
    }

    #[test]
    fn q_type_rejects_lambda_free_atoms() {
        let err = ConeSymbolFamily::new(
            FamilyKind::Resolvent,
            0.0,
            0.0,
            1.0,
            1,
            8,
            Cutoff::Sharp,
            vec![XTerm {
                offset: 1.0,
                parts: vec![HomogeneousPart::new(-1.0, vec![atom(1.0, -1.0, 0, 1.0, 1.0)])],
            }],
        );
        assert!(err.is_err());
    }

    #[test]
    fn profile_evaluator_consistency() {
        // evaluator minus Taylor polynomial vanishes to the stated order
        let taylor = vec![(0.0, Complex64::new(1.0, 0.0)), (1.0, Complex64::new(-0.5, 0.0))];
        let p = XProfile::with_evaluator(taylor.clone(), |x| {
            Complex64::new(1.0 - 0.5 * x + x * x * (x.sin()), 0.0)
        });
        let poly = XProfile::polynomial(taylor);
        for &x in &[1e-2, 1e-3, 1e-4] {
            let diff = (p.value(x) - poly.value(x)).norm();
            assert!(diff < 10.0 * x * x, "x = {x}, diff = {diff}");
        }
    }

    proptest! {
        #[test]
        fn prop_homogeneity(c in -3.0f64..3.0, s in -3.0f64..3.0, k in 0u32..4,
                            xi in 0.5f64..4.0, delta in prop::sample::select(vec![2.0, 3.0, 10.0])) {
            let a = atom(c, s, k, 1.0, 2.0);
            let lam = Complex64::new(-1.1, 0.3);
            let v1 = a.eval(xi, lam).unwrap();
            let v2 = a.eval(delta * xi, delta.powf(a.d) * lam).unwrap();
            let expect = delta.powf(a.degree()) * v1;
            prop_assert!((v2 - expect).norm() <= 1e-12 * expect.norm().max(1e-12));
        }

        #[test]
        fn prop_mul_assoc_comm(c1 in -2.0f64..2.0, c2 in -2.0f64..2.0, c3 in -2.0f64..2.0,
                               s1 in -2.0f64..2.0, s2 in -2.0f64..2.0,
                               k1 in 0u32..3, k2 in 0u32..3) {
            let a = atom(c1, s1, k1, 1.0, 1.0);
            let b = atom(c2, s2, k2, 1.0, 1.0);
            let c = atom(c3, 1.0, 1, 1.0, 1.0);
            let ab = a.mul(&b).unwrap();
            let ba = b.mul(&a).unwrap();
            prop_assert!((ab.coeff - ba.coeff).norm() < 1e-14);
            prop_assert_eq!(ab.k, ba.k);
            prop_assert!((ab.s - ba.s).abs() < 1e-12);
            let abc1 = ab.mul(&c).unwrap();
            let abc2 = a.mul(&b.mul(&c).unwrap()).unwrap();
            prop_assert!((abc1.coeff - abc2.coeff).norm() < 1e-13);
            prop_assert!((abc1.s - abc2.s).abs() < 1e-12);
            prop_assert_eq!(abc1.k, abc2.k);
        }
    }
}
