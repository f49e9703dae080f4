//! Meromorphic functions of one complex variable represented by explicit pole
//! catalogs with stored Laurent data, exact local expansions where available,
//! a contour-quadrature Laurent oracle, and the pole-to-expansion map that
//! turns an order-(ℓ+1) pole of t ↦ ∫ t^{−z}ψ(z)dz into t^{−w}(log t)^k terms.

use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::special::{self, factorial, series_mul};

#[derive(Debug, Error)]
pub enum MeroError {
    #[error("cannot expand the regular part to the needed order at {0}")]
    InsufficientLocalData(Complex64),
    #[error("contour quadrature failed the two-radius consistency check at {0}")]
    QuadratureDivergence(Complex64),
}

pub type EvalFn = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;
pub type TaylorFn =
    Arc<dyn Fn(Complex64, usize) -> Result<Vec<Complex64>, MeroError> + Send + Sync>;

/// One pole: location, order, and the principal part r_1..r_order, where r_j
/// is the coefficient of (z−w)^{−j}.
#[derive(Debug, Clone)]
pub struct Pole {
    pub location: Complex64,
    pub order: u32,
    pub principal: Vec<Complex64>,
    pub removable: bool,
}

impl Pole {
    pub fn simple(location: Complex64, residue: Complex64) -> Self {
        Pole { location, order: 1, principal: vec![residue], removable: false }
    }

    pub fn residue(&self) -> Complex64 {
        self.principal.first().copied().unwrap_or_else(|| Complex64::new(0.0, 0.0))
    }

    fn singular_value(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let w = z - self.location;
        let mut p = 1.0 / w;
        for &r in &self.principal {
            acc += r * p;
            p /= w;
        }
        acc
    }

    /// Taylor coefficients at z0 of the singular part (z0 must differ from
    /// the pole location).
    fn singular_taylor(&self, z0: Complex64, len: usize) -> Vec<Complex64> {
        let base = z0 - self.location;
        let mut out = vec![Complex64::new(0.0, 0.0); len];
        for (jm1, &r) in self.principal.iter().enumerate() {
            let j = jm1 + 1;
            // (z−w)^{−j} = base^{−j} Σ_i (−1)^i C(j+i−1, i) (u/base)^i
            let mut c = base.powi(-(j as i32));
            for (i, o) in out.iter_mut().enumerate() {
                *o += r * c;
                let binom = (j + i) as f64 / (i + 1) as f64;
                c *= -binom / base;
            }
        }
        out
    }
}

/// A finite Laurent expansion Σ coeffs[i]·(z−z0)^{lead+i}.
#[derive(Debug, Clone)]
pub struct LocalExpansion {
    pub lead: i32,
    pub coeffs: Vec<Complex64>,
}

impl LocalExpansion {
    pub fn coeff_at(&self, power: i32) -> Complex64 {
        let idx = power - self.lead;
        if idx < 0 || idx as usize >= self.coeffs.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[idx as usize]
        }
    }

    pub fn mul(&self, other: &LocalExpansion, keep: usize) -> LocalExpansion {
        LocalExpansion {
            lead: self.lead + other.lead,
            coeffs: series_mul(&self.coeffs, &other.coeffs, keep),
        }
    }

    pub fn add(&self, other: &LocalExpansion) -> LocalExpansion {
        let lead = self.lead.min(other.lead);
        let top = (self.lead + self.coeffs.len() as i32).max(other.lead + other.coeffs.len() as i32);
        let mut coeffs = vec![Complex64::new(0.0, 0.0); (top - lead) as usize];
        for (i, &c) in self.coeffs.iter().enumerate() {
            coeffs[(self.lead - lead) as usize + i] += c;
        }
        for (i, &c) in other.coeffs.iter().enumerate() {
            coeffs[(other.lead - lead) as usize + i] += c;
        }
        LocalExpansion { lead, coeffs }
    }

    /// Drop a negligible singular head (relative to the local scale).
    pub fn trim(&mut self) {
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
        while self.lead < 0 && !self.coeffs.is_empty() && self.coeffs[0].norm() <= 1e-12 * scale {
            self.coeffs.remove(0);
            self.lead += 1;
        }
    }

    /// Principal part r_1..r_{−lead} (empty if regular).
    pub fn principal(&self) -> Vec<Complex64> {
        let ord = (-self.lead).max(0) as usize;
        let mut out = vec![Complex64::new(0.0, 0.0); ord];
        for j in 1..=ord {
            out[j - 1] = self.coeff_at(-(j as i32));
        }
        out
    }
}

/// A summand that can be evaluated and Laurent-expanded around any point on
/// the real axis of the working strip.
pub trait LocalPiece: Send + Sync {
    fn eval(&self, z: Complex64) -> Complex64;
    fn local_series(&self, z0: Complex64, len: usize) -> LocalExpansion;
    /// Real candidate pole locations of this summand.
    fn roots(&self) -> Vec<f64>;
}

/// Closed-form factor scale · poly(z) · e^{rate·z} / Π (a_i z + b_i): the
/// exact representation of one Sharp-backend Mellin summand. Admits exact
/// Laurent expansion at every point.
#[derive(Debug, Clone)]
pub struct ClosedTerm {
    pub scale: Complex64,
    /// Polynomial coefficients in ascending powers of z; empty means 1.
    pub poly: Vec<Complex64>,
    pub rate: Complex64,
    /// Linear denominator factors (a, b) with a ≠ 0.
    pub denom: Vec<(f64, f64)>,
}

impl LocalPiece for ClosedTerm {
    fn eval(&self, z: Complex64) -> Complex64 {
        ClosedTerm::eval(self, z)
    }
    fn local_series(&self, z0: Complex64, len: usize) -> LocalExpansion {
        ClosedTerm::local_series(self, z0, len)
    }
    fn roots(&self) -> Vec<f64> {
        self.denom.iter().map(|&(a, b)| -b / a).collect()
    }
}

impl ClosedTerm {
    pub fn constant(c: Complex64) -> Self {
        ClosedTerm { scale: c, poly: vec![], rate: Complex64::new(0.0, 0.0), denom: vec![] }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = self.scale;
        if !self.poly.is_empty() {
            let mut p = Complex64::new(0.0, 0.0);
            for &c in self.poly.iter().rev() {
                p = p * z + c;
            }
            acc *= p;
        }
        if self.rate.norm() != 0.0 {
            acc *= (self.rate * z).exp();
        }
        for &(a, b) in &self.denom {
            acc /= a * z + b;
        }
        acc
    }

    /// Laurent expansion at z0 to `len` stored coefficients.
    pub fn local_series(&self, z0: Complex64, len: usize) -> LocalExpansion {
        // pole order at z0
        let mut sing = 0usize;
        for &(a, b) in &self.denom {
            if (a * z0 + b).norm() <= 1e-9 * (a * z0.norm() + b.abs()).max(1.0) {
                sing += 1;
            }
        }
        let keep = len + sing;
        // numerator series: scale · poly(z0 + w) · e^{rate z0} e^{rate w}
        let mut num = vec![Complex64::new(0.0, 0.0); keep];
        num[0] = Complex64::new(1.0, 0.0);
        if !self.poly.is_empty() {
            // Taylor shift by repeated synthetic division by (z − z0)
            let mut coeffs = self.poly.clone();
            let mut shifted = Vec::with_capacity(self.poly.len());
            for _ in 0..self.poly.len() {
                let n = coeffs.len();
                let mut q = vec![Complex64::new(0.0, 0.0); n.saturating_sub(1)];
                let mut carry = Complex64::new(0.0, 0.0);
                for k in (1..n).rev() {
                    carry = coeffs[k] + carry * z0;
                    q[k - 1] = carry;
                }
                let rem = coeffs[0] + carry * z0;
                shifted.push(rem);
                if q.is_empty() {
                    break;
                }
                coeffs = q;
            }
            num = series_mul(&num, &shifted, keep);
        }
        let mut acc_scale = self.scale;
        if self.rate.norm() != 0.0 {
            acc_scale *= (self.rate * z0).exp();
            let mut es = vec![Complex64::new(0.0, 0.0); keep];
            let mut p = Complex64::new(1.0, 0.0);
            for (j, e) in es.iter_mut().enumerate() {
                *e = p;
                p *= self.rate / (j as f64 + 1.0);
            }
            num = series_mul(&num, &es, keep);
        }
        for c in &mut num {
            *c *= acc_scale;
        }
        // denominator factors
        let mut lead = 0i32;
        for &(a, b) in &self.denom {
            let v = a * z0 + b;
            if v.norm() <= 1e-9 * (a * z0.norm() + b.abs()).max(1.0) {
                // singular factor: 1/(a w)
                for c in &mut num {
                    *c /= a;
                }
                lead -= 1;
            } else {
                // Taylor of 1/(a z + b) at z0: (1/v) Σ (−a/v)^i w^i
                let mut geo = vec![Complex64::new(0.0, 0.0); keep];
                let mut p = 1.0 / v;
                for g in geo.iter_mut() {
                    *g = p;
                    p *= -a / v;
                }
                num = series_mul(&num, &geo, keep);
            }
        }
        LocalExpansion { lead, coeffs: num }
    }
}

/// A meromorphic function: pole catalog plus an evaluator for the function
/// minus all listed singular parts; optionally an exact Taylor provider for
/// that regular part.
#[derive(Clone)]
pub struct MeroFunction {
    poles: Vec<Pole>,
    /// Strip of validity in Re z: poles are cataloged inside it.
    pub strip: (f64, f64),
    regular: EvalFn,
    taylor: Option<TaylorFn>,
}

impl std::fmt::Debug for MeroFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MeroFunction")
            .field("poles", &self.poles)
            .field("strip", &self.strip)
            .finish()
    }
}

const MERGE_TOL: f64 = 1e-9;

impl MeroFunction {
    pub fn new(poles: Vec<Pole>, strip: (f64, f64), regular: EvalFn, taylor: Option<TaylorFn>) -> Self {
        let mut poles = poles;
        poles.sort_by(|a, b| {
            (a.location.re, a.location.im)
                .partial_cmp(&(b.location.re, b.location.im))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        MeroFunction { poles, strip, regular, taylor }
    }

    /// A function with only the listed singular parts (regular part ≡ 0).
    pub fn from_poles(poles: Vec<Pole>, strip: (f64, f64)) -> Self {
        MeroFunction::new(
            poles,
            strip,
            Arc::new(|_| Complex64::new(0.0, 0.0)),
            Some(Arc::new(|_, len| Ok(vec![Complex64::new(0.0, 0.0); len]))),
        )
    }

    pub fn constant(c: Complex64, strip: (f64, f64)) -> Self {
        MeroFunction::new(
            vec![],
            strip,
            Arc::new(move |_| c),
            Some(Arc::new(move |_, len| {
                let mut v = vec![Complex64::new(0.0, 0.0); len];
                if len > 0 {
                    v[0] = c;
                }
                Ok(v)
            })),
        )
    }

    /// Γ(z) with poles cataloged on the strip; exact local data from the
    /// functional-equation series.
    pub fn gamma(strip: (f64, f64)) -> Self {
        let mut poles = Vec::new();
        let mut ell = 0u32;
        while -(ell as f64) >= strip.0 - 0.5 {
            if -(ell as f64) <= strip.1 {
                let (r, _) = special::gamma_residue_and_regular(ell);
                poles.push(Pole::simple(Complex64::new(-(ell as f64), 0.0), r));
            }
            ell += 1;
            if ell > 200 {
                break;
            }
        }
        let catalog = poles.clone();
        let catalog2 = poles.clone();
        let regular: EvalFn = Arc::new(move |z| {
            let mut v = special::gamma(z);
            for p in &catalog {
                v -= p.singular_value(z);
            }
            v
        });
        let taylor: TaylorFn = Arc::new(move |z0, len| {
            // Taylor of Γ − Σ catalog singulars at z0
            let mut at_pole: Option<u32> = None;
            if z0.im.abs() < 1e-12 && z0.re <= 0.5 {
                let r = (-z0.re).round();
                if (z0.re + r).abs() < 1e-9 && r >= 0.0 {
                    at_pole = Some(r as u32);
                }
            }
            let mut out = if let Some(ell) = at_pole {
                let (_, t) = special::gamma_laurent_neg(ell, len);
                t
            } else {
                special::gamma_taylor_regular(z0, len)
            };
            for p in &catalog2 {
                if (p.location - z0).norm() <= MERGE_TOL {
                    continue; // its principal part is already excluded above
                }
                let st = p.singular_taylor(z0, len);
                for (o, s) in out.iter_mut().zip(st) {
                    *o -= s;
                }
            }
            Ok(out)
        });
        MeroFunction::new(poles, strip, regular, Some(taylor))
    }

    /// Build from exact closed-form summands; also reports locations that are
    /// suspiciously close without being identical (they are not merged).
    pub fn from_closed_terms(terms: Vec<ClosedTerm>, strip: (f64, f64)) -> (Self, Vec<f64>) {
        let pieces: Vec<Arc<dyn LocalPiece>> =
            terms.into_iter().map(|t| Arc::new(t) as Arc<dyn LocalPiece>).collect();
        MeroFunction::from_pieces(pieces, strip)
    }

    /// Build from any locally-expandable summands (exact closed terms plus,
    /// e.g., entire quadrature-backed corrections).
    pub fn from_pieces(pieces: Vec<Arc<dyn LocalPiece>>, strip: (f64, f64)) -> (Self, Vec<f64>) {
        let mut locations: Vec<f64> = Vec::new();
        for t in &pieces {
            for r in t.roots() {
                if r < strip.0 - 0.5 || r > strip.1 + 0.5 {
                    continue;
                }
                if !locations.iter().any(|&l| (l - r).abs() <= MERGE_TOL) {
                    locations.push(r);
                }
            }
        }
        locations.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // near-merge flags: distinct roots closer than 100×tol but not merged
        let mut flags = Vec::new();
        for w in locations.windows(2) {
            if w[1] - w[0] < 100.0 * MERGE_TOL {
                flags.push(w[0]);
            }
        }
        let mut poles = Vec::new();
        for &loc in &locations {
            let z0 = Complex64::new(loc, 0.0);
            let mut local = LocalExpansion { lead: 0, coeffs: vec![] };
            for t in &pieces {
                local = local.add(&t.local_series(z0, 8));
            }
            local.trim();
            if local.lead < 0 {
                poles.push(Pole {
                    location: z0,
                    order: (-local.lead) as u32,
                    principal: local.principal(),
                    removable: false,
                });
            }
        }
        let pieces2 = pieces.clone();
        let catalog = poles.clone();
        let regular: EvalFn = Arc::new(move |z| {
            let mut v = Complex64::new(0.0, 0.0);
            for t in &pieces2 {
                v += t.eval(z);
            }
            for p in &catalog {
                v -= p.singular_value(z);
            }
            v
        });
        let catalog2 = poles.clone();
        let taylor: TaylorFn = Arc::new(move |z0, len| {
            let mut local = LocalExpansion { lead: 0, coeffs: vec![] };
            for t in &pieces {
                local = local.add(&t.local_series(z0, len + 4));
            }
            let mut out = vec![Complex64::new(0.0, 0.0); len];
            for (i, o) in out.iter_mut().enumerate() {
                *o = local.coeff_at(i as i32);
            }
            for p in &catalog2 {
                if (p.location - z0).norm() <= MERGE_TOL {
                    continue;
                }
                let st = p.singular_taylor(z0, len);
                for (o, s) in out.iter_mut().zip(st) {
                    *o -= s;
                }
            }
            Ok(out)
        });
        (MeroFunction::new(poles, strip, regular, Some(taylor)), flags)
    }

    pub fn poles(&self) -> &[Pole] {
        &self.poles
    }

    pub fn find_pole(&self, w: Complex64) -> Option<&Pole> {
        self.poles.iter().find(|p| (p.location - w).norm() <= MERGE_TOL)
    }

    /// Full value f(z) away from poles.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut v = (self.regular)(z);
        for p in &self.poles {
            v += p.singular_value(z);
        }
        v
    }

    fn nearest_other_pole_distance(&self, z0: Complex64) -> f64 {
        self.poles
            .iter()
            .map(|p| (p.location - z0).norm())
            .filter(|d| *d > MERGE_TOL)
            .fold(f64::INFINITY, f64::min)
    }

    /// Taylor coefficients of the regular part at z0: exact provider when
    /// present, Cauchy-integral fallback otherwise.
    fn regular_taylor(&self, z0: Complex64, len: usize) -> Result<Vec<Complex64>, MeroError> {
        if let Some(t) = &self.taylor {
            return t(z0, len);
        }
        let mut radius = 0.25f64;
        radius = radius.min(self.nearest_other_pole_distance(z0) / 2.0);
        radius = radius.min((z0.re - self.strip.0).abs().max(1e-6));
        radius = radius.min((self.strip.1 - z0.re).abs().max(1e-6));
        if !(radius > 1e-4) {
            return Err(MeroError::InsufficientLocalData(z0));
        }
        let reg = &self.regular;
        let c1 = cauchy_taylor(|z| (reg)(z), z0, radius, len);
        let c2 = cauchy_taylor(|z| (reg)(z), z0, radius / 2.0, len);
        for (a, b) in c1.iter().zip(&c2) {
            if (a - b).norm() > 1e-8 * a.norm().max(1e-12) {
                return Err(MeroError::QuadratureDivergence(z0));
            }
        }
        Ok(c2)
    }

    /// Full local Laurent expansion at z0 with `reg_len` regular coefficients.
    pub fn local_laurent(&self, z0: Complex64, reg_len: usize) -> Result<LocalExpansion, MeroError> {
        let mut out = LocalExpansion { lead: 0, coeffs: self.regular_taylor(z0, reg_len)? };
        for p in &self.poles {
            if (p.location - z0).norm() <= MERGE_TOL {
                let mut principal =
                    LocalExpansion { lead: -(p.order as i32), coeffs: p.principal.clone() };
                principal.coeffs.reverse();
                out = out.add(&principal);
            } else {
                let st = p.singular_taylor(z0, reg_len);
                out = out.add(&LocalExpansion { lead: 0, coeffs: st });
            }
        }
        Ok(out)
    }

    /// f(z0) if regular there; otherwise the (z−z0)^0 Laurent coefficient.
    pub fn regular_value(&self, z0: Complex64) -> Result<Complex64, MeroError> {
        if self.find_pole(z0).is_none() {
            return Ok(self.eval(z0));
        }
        Ok(self.local_laurent(z0, 2)?.coeff_at(0))
    }
}

/// Product of two cataloged functions: orders add at shared locations and
/// local Laurent data is computed by series multiplication.
pub fn mero_mul(f: &MeroFunction, g: &MeroFunction) -> Result<MeroFunction, MeroError> {
    let strip = (f.strip.0.max(g.strip.0), f.strip.1.min(g.strip.1));
    let mut locations: Vec<Complex64> = Vec::new();
    for p in f.poles().iter().chain(g.poles()) {
        if p.location.re < strip.0 - 0.5 || p.location.re > strip.1 + 0.5 {
            continue;
        }
        if !locations.iter().any(|&l| (l - p.location).norm() <= MERGE_TOL) {
            locations.push(p.location);
        }
    }
    locations.sort_by(|a, b| {
        (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut poles = Vec::new();
    for &loc in &locations {
        let of = f.find_pole(loc).map(|p| p.order).unwrap_or(0) as usize;
        let og = g.find_pole(loc).map(|p| p.order).unwrap_or(0) as usize;
        let keep = of + og + 6;
        let lf = f.local_laurent(loc, keep)?;
        let lg = g.local_laurent(loc, keep)?;
        let mut prod = lf.mul(&lg, keep + of + og);
        prod.trim();
        if prod.lead < 0 {
            poles.push(Pole {
                location: loc,
                order: (-prod.lead) as u32,
                principal: prod.principal(),
                removable: false,
            });
        }
    }
    let ff = f.clone();
    let gg = g.clone();
    let catalog = poles.clone();
    let regular: EvalFn = Arc::new(move |z| {
        let mut v = ff.eval(z) * gg.eval(z);
        for p in &catalog {
            v -= p.singular_value(z);
        }
        v
    });
    let ff2 = f.clone();
    let gg2 = g.clone();
    let catalog2 = poles.clone();
    let taylor: TaylorFn = Arc::new(move |z0, len| {
        let of = ff2.find_pole(z0).map(|p| p.order).unwrap_or(0) as usize;
        let og = gg2.find_pole(z0).map(|p| p.order).unwrap_or(0) as usize;
        let keep = len + of + og + 2;
        let lf = ff2.local_laurent(z0, keep)?;
        let lg = gg2.local_laurent(z0, keep)?;
        let prod = lf.mul(&lg, keep + of + og);
        let mut out = vec![Complex64::new(0.0, 0.0); len];
        for (i, o) in out.iter_mut().enumerate() {
            *o = prod.coeff_at(i as i32);
        }
        for p in &catalog2 {
            if (p.location - z0).norm() <= MERGE_TOL {
                continue;
            }
            let st = p.singular_taylor(z0, len);
            for (o, s) in out.iter_mut().zip(st) {
                *o -= s;
            }
        }
        Ok(out)
    });
    Ok(MeroFunction::new(poles, strip, regular, Some(taylor)))
}

/// Γ's local data at z = −ℓ: (residue, regular value).
pub fn gamma_laurent(ell: u32) -> (Complex64, Complex64) {
    special::gamma_residue_and_regular(ell)
}

/// Where an expansion term came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    GammaOnly,
    XPole,
    SymbolPole,
    Case1,
    Case2,
    Case3,
    Triple,
    Truncated,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Provenance::GammaOnly => "gamma",
            Provenance::XPole => "x-pole",
            Provenance::SymbolPole => "symbol-pole",
            Provenance::Case1 => "case1",
            Provenance::Case2 => "case2",
            Provenance::Case3 => "case3",
            Provenance::Triple => "triple",
            Provenance::Truncated => "truncated",
        };
        write!(f, "{s}")
    }
}

/// One term c · t^e (log t)^j of a small-time expansion.
#[derive(Debug, Clone, Copy)]
pub struct ExpansionTerm {
    pub exponent: Complex64,
    pub log_power: u32,
    pub coeff: Complex64,
    pub provenance: Provenance,
}

/// The inverse-Mellin map: an order-ℓ+1 pole at w contributes exactly
/// order-many terms (1/k!)(−1)^k t^{−w} (log t)^k r_{k+1}, k = 0..ℓ.
pub fn pole_to_expansion(pole: &Pole, provenance: Provenance) -> Vec<ExpansionTerm> {
    let mut out = Vec::with_capacity(pole.order as usize);
    for k in 0..pole.order {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        out.push(ExpansionTerm {
            exponent: -pole.location,
            log_power: k,
            coeff: sign / factorial(k) * pole.principal[k as usize],
            provenance,
        });
    }
    out
}

/// Merge terms with equal (exponent, log power); sort by descending
/// singularity (ascending Re e), then log power.
pub fn merge_terms(mut terms: Vec<ExpansionTerm>) -> Vec<ExpansionTerm> {
    terms.sort_by(|a, b| {
        (a.exponent.re, a.exponent.im, a.log_power)
            .partial_cmp(&(b.exponent.re, b.exponent.im, b.log_power))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut out: Vec<ExpansionTerm> = Vec::with_capacity(terms.len());
    for t in terms {
        if let Some(last) = out.last_mut() {
            if (last.exponent - t.exponent).norm() <= MERGE_TOL && last.log_power == t.log_power {
                last.coeff += t.coeff;
                continue;
            }
        }
        out.push(t);
    }
    out
}

/// Laurent coefficients r_1..r_jmax of an evaluator around w by trapezoid
/// contour quadrature on two circles; errors if the radii disagree.
pub fn numeric_laurent(
    f: impl Fn(Complex64) -> Complex64,
    w: Complex64,
    jmax: usize,
    radius: f64,
) -> Result<Vec<Complex64>, MeroError> {
    let r1 = cauchy_laurent(&f, w, radius, jmax);
    let r2 = cauchy_laurent(&f, w, radius / 2.0, jmax);
    // 1e−8 relative with an absolute floor of 1e−12 on the coefficient scale
    let scale = r1
        .iter()
        .map(|c| c.norm())
        .fold(f(w + radius * Complex64::new(0.6, 0.8)).norm(), f64::max);
    for (a, b) in r1.iter().zip(&r2) {
        if (a - b).norm() > (1e-8 * a.norm()).max(1e-12 * scale.max(1e-30)) {
            return Err(MeroError::QuadratureDivergence(w));
        }
    }
    Ok(r2)
}

const QUAD_NODES: usize = 512;

/// r_j = ρ^j / N · Σ_l f(w + ρ e^{iθ_l}) e^{i j θ_l}.
fn cauchy_laurent(
    f: &impl Fn(Complex64) -> Complex64,
    w: Complex64,
    rho: f64,
    jmax: usize,
) -> Vec<Complex64> {
    let samples: Vec<(Complex64, Complex64)> = (0..QUAD_NODES)
        .map(|l| {
            let th = 2.0 * std::f64::consts::PI * l as f64 / QUAD_NODES as f64;
            let e = Complex64::new(0.0, th).exp();
            (e, f(w + rho * e))
        })
        .collect();
    (1..=jmax)
        .map(|j| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (e, v) in &samples {
                acc += v * e.powu(j as u32);
            }
            acc * rho.powi(j as i32) / QUAD_NODES as f64
        })
        .collect()
}

/// Taylor coefficients c_0..c_{len−1} around z0 by the same quadrature.
pub fn cauchy_taylor(
    f: impl Fn(Complex64) -> Complex64,
    z0: Complex64,
    rho: f64,
    len: usize,
) -> Vec<Complex64> {
    let samples: Vec<(Complex64, Complex64)> = (0..QUAD_NODES)
        .map(|l| {
            let th = 2.0 * std::f64::consts::PI * l as f64 / QUAD_NODES as f64;
            let e = Complex64::new(0.0, th).exp();
            (e, f(z0 + rho * e))
        })
        .collect();
    (0..len)
        .map(|j| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (e, v) in &samples {
                acc += v * e.powu(j as u32).conj();
            }
            acc / (rho.powi(j as i32) * QUAD_NODES as f64)
        })
        .collect()
}
