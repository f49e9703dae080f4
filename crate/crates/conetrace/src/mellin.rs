//! Sector/contour machinery: closed-form Laplace and Mellin transforms of
//! resolvent atoms along the contour Υ bounding the sector
//! Λ = {ε ≤ arg λ ≤ 2π−ε}, assembly of the diagonal Mellin family M(Q)(z)|_Δ
//! and of B(z) with complete pole catalogs, and a numeric contour-quadrature
//! oracle for the closed forms.
//!
//! The orientation of Υ is fixed by the identity
//! (i/2π)∮ e^{−tλ}(μ−λ)^{−1} dλ = e^{−tμ}; every sign downstream inherits
//! from it. With that orientation,
//!
//!   (i/2π)∮ e^{−tλ}(μ−λ)^{−k} dλ = t^{k−1} e^{−tμ}/(k−1)!,
//!   (i/2π)∮ λ^{−z}(μ̃−λ)^{−k} dλ = z(z+1)…(z+k−2)/(k−1)! · μ̃^{−z−k+1},
//!
//! both verified against the quadrature oracle in the acceptance suite.

use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::merofn::{ClosedTerm, LocalExpansion, LocalPiece, MeroFunction};
use crate::special::{factorial, pochhammer, pochhammer_poly, series_mul};
use crate::symcore::{ConeSymbolFamily, Cutoff, Parity};

#[derive(Debug, Error)]
pub enum MellinError {
    #[error("contour parameters invalid: {0}")]
    InvalidContour(String),
    #[error("ray truncation tail bound exceeded (running value {0})")]
    TailBoundExceeded(f64),
    #[error("atom of degree {0} is not on the classical ladder")]
    NonClassical(f64),
    #[error("x-profile support exceeds [0, 1]")]
    UnboundedProfile,
}

/// The contour Υ: boundary rays of Λ at arg = ±ε plus the arc |λ| = δ
/// through arg 0, traversed so that the sector poles are enclosed once
/// counterclockwise.
#[derive(Debug, Clone, Copy)]
pub struct SectorContour {
    pub epsilon: f64,
    pub delta: f64,
}

impl SectorContour {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self, MellinError> {
        if !(epsilon > 0.0 && epsilon < std::f64::consts::FRAC_PI_2) {
            return Err(MellinError::InvalidContour(format!("aperture ε = {epsilon}")));
        }
        if !(delta > 0.0) {
            return Err(MellinError::InvalidContour(format!("arc radius δ = {delta}")));
        }
        Ok(SectorContour { epsilon, delta })
    }

    /// Default contour for a model base: ε = π/4, δ = min(1/2, |pole|/2).
    pub fn default_for(mu: Complex64, cutoff_radius: f64, d: f64) -> Self {
        let pole_mod = mu.norm() * cutoff_radius.powf(d);
        SectorContour {
            epsilon: std::f64::consts::FRAC_PI_4,
            delta: (0.5f64).min(pole_mod / 2.0),
        }
    }

    /// All atom poles μ·r^d (r ≥ cutoff radius) must lie strictly right of Υ.
    pub fn encloses(&self, mu: Complex64, cutoff_radius: f64, d: f64) -> bool {
        mu.norm() * cutoff_radius.powf(d) > self.delta && mu.arg().abs() < self.epsilon
    }
}

/// Weight of the contour integral.
#[derive(Debug, Clone, Copy)]
pub enum ContourWeight {
    /// e^{−tλ}
    Heat { t: f64 },
    /// λ^{−z}, principal branch (cut along arg = π, the bisector of Λ)
    Power { z: Complex64 },
}

const GL32_NODES: usize = 32;

fn gauss_legendre_32() -> &'static [(f64, f64)] {
    use std::sync::OnceLock;
    static TABLE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    TABLE.get_or_init(|| newton_gl(GL32_NODES))
}

fn gauss_legendre_64() -> &'static [(f64, f64)] {
    use std::sync::OnceLock;
    static TABLE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    TABLE.get_or_init(|| newton_gl(64))
}

/// Gauss–Legendre nodes/weights on [−1, 1] by Newton iteration on P_n.
fn newton_gl(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn gl_panel(f: &mut impl FnMut(f64) -> Complex64, a: f64, b: f64, nodes: &[(f64, f64)]) -> Complex64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = Complex64::new(0.0, 0.0);
    for &(x, w) in nodes {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// 32-node Gauss–Legendre panel on [a, b]; shared with the trace quadratures.
pub fn gl32_panel(f: impl Fn(f64) -> Complex64, a: f64, b: f64) -> Complex64 {
    let mut g = |x: f64| f(x);
    gl_panel(&mut g, a, b, gauss_legendre_32())
}

/// (i/2π) ∮_Υ weight(λ)·f(λ) dλ by fixed-node quadrature: Gauss–Legendre on
/// the arc, geometric Gauss–Legendre panels on the rays with an explicit
/// tail bound on the truncation.
pub fn contour_quadrature(
    f: impl Fn(Complex64) -> Complex64,
    contour: &SectorContour,
    weight: ContourWeight,
) -> Result<Complex64, MellinError> {
    let eps = contour.epsilon;
    let delta = contour.delta;
    let w = |lam: Complex64| -> Complex64 {
        match weight {
            ContourWeight::Heat { t } => (-t * lam).exp(),
            ContourWeight::Power { z } => (-z * lam.ln()).exp(),
        }
    };

    let ray = |phi: f64| -> Result<Complex64, MellinError> {
        let dir = Complex64::new(0.0, phi).exp();
        let mut g = |r: f64| {
            let lam = r * dir;
            w(lam) * f(lam)
        };
        let mut total = Complex64::new(0.0, 0.0);
        let mut a = delta;
        let mut panels = 0usize;
        loop {
            let b = 2.0 * a;
            let panel = gl_panel(&mut g, a, b, gauss_legendre_32());
            total += panel;
            a = b;
            panels += 1;
            match weight {
                ContourWeight::Heat { t } => {
                    // |e^{−tλ}| = e^{−t r cos ε}: stop once the exponent kills it
                    if t * a * eps.cos() > 46.0 {
                        break;
                    }
                }
                ContourWeight::Power { .. } => {
                    // panels shrink geometrically once the algebraic decay
                    // dominates; stop when the last panel is below the tail
                    // target (the remaining tail is a fraction of it)
                    if panels >= 4 && panel.norm() < 1e-13 * total.norm().max(1e-300) {
                        break;
                    }
                }
            }
            if panels > 400 {
                return Err(MellinError::TailBoundExceeded(total.norm()));
            }
        }
        Ok(total * dir)
    };

    // upper ray traversed from infinity inward (sign −), lower ray outward
    let upper = ray(eps)?;
    let lower = ray(-eps)?;
    // arc from +ε to −ε through arg 0
    let mut arc_f = |th: f64| {
        let lam = delta * Complex64::new(0.0, th).exp();
        w(lam) * f(lam) * Complex64::new(0.0, 1.0) * lam
    };
    let arc = gl_panel(&mut arc_f, eps, -eps, gauss_legendre_64());

    Ok((lower - upper + arc) * Complex64::new(0.0, 1.0) / (2.0 * std::f64::consts::PI))
}

/// Kernel factor of the Laplace transform of a resolvent atom:
/// (i/2π)∮ e^{−tλ}(μ_eff−λ)^{−k} dλ = t^{k−1} e^{−t μ_eff}/(k−1)!.
pub fn laplace_atom(k: u32, t: f64, mu_eff: Complex64) -> Complex64 {
    assert!(k >= 1, "laplace_atom needs a resolvent atom (k >= 1)");
    t.powi(k as i32 - 1) * (-t * mu_eff).exp() / factorial(k - 1)
}

/// (i/2π)∮ λ^{−z}(μ̃−λ)^{−k} dλ = z(z+1)…(z+k−2)/(k−1)! · μ̃^{−z−k+1};
/// entire in z, principal branch in μ̃.
pub fn mellin_atom(k: u32, z: Complex64, mu_tilde: Complex64) -> Complex64 {
    assert!(k >= 1, "mellin_atom needs a resolvent atom (k >= 1)");
    let power = (-(z + (k as f64 - 1.0)) * mu_tilde.ln()).exp();
    pochhammer(z, k - 1) / factorial(k - 1) * power
}

/// Entire-in-z correction from a smooth cutoff: the numerator factors of a
/// Mellin atom times ∫_{r0}^{r1} χ(r) r^{w(z)−1} dr, w(z) = w0 − d·z.
/// Quadrature-backed but locally expandable (∂_z pulls down −d·ln r).
#[derive(Clone)]
pub struct SmoothPiece {
    pub scale: Complex64,
    pub poly: Vec<Complex64>,
    pub rate: Complex64,
    pub w0: f64,
    pub d: f64,
    pub r0: f64,
    pub r1: f64,
    /// Optional extra linear denominator (x-integration factor).
    pub denom: Option<(f64, f64)>,
}

impl SmoothPiece {
    fn chi(&self, r: f64) -> f64 {
        Cutoff::Smooth { r0: self.r0, r1: self.r1 }.chi(r)
    }

    /// d^j/dz^j of ∫ χ r^{w0 − dz − 1} dr at z0.
    fn integral_deriv(&self, z0: Complex64, j: usize) -> Complex64 {
        let mut f = |r: f64| {
            let ln_r = r.ln();
            let p = ((Complex64::new(self.w0, 0.0) - self.d * z0) * ln_r).exp() / r;
            p * self.chi(r) * (-self.d * ln_r).powi(j as i32)
        };
        gl_panel(&mut f, self.r0, self.r1, gauss_legendre_64())
    }

    fn numerator_series(&self, z0: Complex64, len: usize) -> Vec<Complex64> {
        let t = ClosedTerm { scale: self.scale, poly: self.poly.clone(), rate: self.rate, denom: vec![] };
        let s = t.local_series(z0, len);
        debug_assert_eq!(s.lead, 0);
        s.coeffs
    }
}

impl LocalPiece for SmoothPiece {
    fn eval(&self, z: Complex64) -> Complex64 {
        let t = ClosedTerm { scale: self.scale, poly: self.poly.clone(), rate: self.rate, denom: vec![] };
        let mut v = t.eval(z) * self.integral_deriv(z, 0);
        if let Some((a, b)) = self.denom {
            v /= a * z + b;
        }
        v
    }

    fn local_series(&self, z0: Complex64, len: usize) -> LocalExpansion {
        let sing = match self.denom {
            Some((a, b)) => {
                if (a * z0 + b).norm() <= 1e-9 * (a * z0.norm() + b.abs()).max(1.0) {
                    1
                } else {
                    0
                }
            }
            None => 0,
        };
        let keep = len + sing;
        let num = self.numerator_series(z0, keep);
        let mut integral = Vec::with_capacity(keep);
        for j in 0..keep {
            integral.push(self.integral_deriv(z0, j) / factorial(j as u32));
        }
        let mut coeffs = series_mul(&num, &integral, keep);
        let mut lead = 0i32;
        if let Some((a, b)) = self.denom {
            let v = a * z0 + b;
            if sing == 1 {
                for c in &mut coeffs {
                    *c /= a;
                }
                lead = -1;
            } else {
                let mut geo = vec![Complex64::new(0.0, 0.0); keep];
                let mut p = 1.0 / v;
                for g in geo.iter_mut() {
                    *g = p;
                    p *= -a / v;
                }
                coeffs = series_mul(&coeffs, &geo, keep);
            }
        }
        LocalExpansion { lead, coeffs }
    }

    fn roots(&self) -> Vec<f64> {
        self.denom.iter().map(|&(a, b)| -b / a).collect()
    }
}

/// One x-offset of M(Q)(z)|_Δ: the density pair x^{a·z+b}·g(z)·(dx/x).
pub struct DiagonalPair {
    /// x-exponent affine form a·z + b with a = m, b = α − m.
    pub x_coeff: f64,
    pub x_const: f64,
    /// Exact (Sharp) summands of g.
    pub closed: Vec<ClosedTerm>,
    /// Entire corrections (Smooth cutoff only).
    pub smooth: Vec<SmoothPiece>,
    /// g(z) with its symbol-pole catalog.
    pub g: MeroFunction,
}

/// M(Q)(z)|_Δ as a finite list of diagonal pairs; element of
/// x^{mz−p}C^∞·(dx/x) after fixing the trivialization.
pub struct DiagonalMellin {
    pub pairs: Vec<DiagonalPair>,
    pub m: f64,
    pub n: u32,
    pub weight: f64,
    pub m_prime: f64,
    pub strip: (f64, f64),
    /// Count of λ-free atoms that were flagged Residual and excluded.
    pub residual_flagged: usize,
    /// Suspiciously close but unmerged pole locations (per pair).
    pub near_merge_flags: Vec<f64>,
}

/// Angular integral over |ξ| = 1 of a parity-extended radial monomial, in
/// the d̄ξ = (2π)^{−n} dξ convention. For n = 1 this is (value at +1 +
/// value at −1)/2π; for n > 1 only radial (even) atoms are admitted.
pub fn angular_factor(n: u32, parity: Parity) -> f64 {
    if n == 1 {
        parity.ray_sum_factor() / (2.0 * std::f64::consts::PI)
    } else {
        match parity {
            Parity::Even => {
                let nf = n as f64;
                let vol = 2.0 * std::f64::consts::PI.powf(nf / 2.0)
                    / crate::special::gamma(Complex64::new(nf / 2.0, 0.0)).re;
                vol * (2.0 * std::f64::consts::PI).powf(-nf)
            }
            Parity::Odd => 0.0,
        }
    }
}

/// The Mellin transform of a Q-type family along the diagonal:
/// q̂(x,ξ,z) = x^{mz−m}(i/2π)∮ λ^{−z} q(x,ξ,λ)dλ, integrated in ξ over the
/// cutoff region. Pole catalog: simple poles exactly at z = (m′+n−j)/m.
pub fn mellin_diagonal(fam: &ConeSymbolFamily, strip: (f64, f64)) -> Result<DiagonalMellin, MellinError> {
    let m = fam.m;
    let n = fam.n;
    let mut residual = 0usize;
    let mut pairs = Vec::new();
    let mut flags = Vec::new();
    for xt in &fam.x_terms {
        let mut closed = Vec::new();
        let mut smooth = Vec::new();
        for part in &xt.parts {
            let level = fam.level_of(part.degree);
            if (level - level.round()).abs() > 1e-8 {
                return Err(MellinError::NonClassical(part.degree));
            }
            for atom in &part.atoms {
                if atom.k == 0 {
                    residual += 1;
                    continue;
                }
                let ang = angular_factor(n, atom.parity);
                if ang == 0.0 {
                    continue;
                }
                let k = atom.k;
                let km1 = (k - 1) as f64;
                // g_atom(z) = c·ang·poch(z,k−1)/(k−1)!·μ^{−z−k+1}·R(z),
                // Sharp: R(z) = ∫_ρ^∞ r^{w−1}dr = ρ^w/(dz − w0),
                //   w = s+n−d(z+k−1) = w0 − d z, w0 = s+n−d(k−1), ρ = outer radius
                let w0 = atom.s + n as f64 - atom.d * km1;
                let scale_base = atom.coeff * ang / factorial(k - 1)
                    * (-km1 * atom.mu.ln()).exp();
                let rate_base = -atom.mu.ln();
                let poly = pochhammer_poly(k - 1);
                match fam.cutoff {
                    Cutoff::Sharp => {
                        closed.push(ClosedTerm {
                            scale: scale_base,
                            poly: poly.clone(),
                            rate: rate_base,
                            denom: vec![(atom.d, -w0)],
                        });
                    }
                    Cutoff::Smooth { r0, r1 } => {
                        // outer tail from r1: r1^w/(dz − w0)
                        closed.push(ClosedTerm {
                            scale: scale_base * r1.powf(w0),
                            poly: poly.clone(),
                            rate: rate_base - Complex64::new(atom.d * r1.ln(), 0.0),
                            denom: vec![(atom.d, -w0)],
                        });
                        // bounded ramp correction on [r0, r1]
                        smooth.push(SmoothPiece {
                            scale: scale_base,
                            poly: poly.clone(),
                            rate: rate_base,
                            w0,
                            d: atom.d,
                            r0,
                            r1,
                            denom: None,
                        });
                    }
                }
            }
        }
        let mut pieces: Vec<Arc<dyn LocalPiece>> = Vec::new();
        for t in &closed {
            pieces.push(Arc::new(t.clone()));
        }
        for s in &smooth {
            pieces.push(Arc::new(s.clone()));
        }
        let (g, f) = MeroFunction::from_pieces(pieces, strip);
        flags.extend(f);
        pairs.push(DiagonalPair {
            x_coeff: m,
            x_const: xt.offset - m,
            closed,
            smooth,
            g,
        });
    }
    Ok(DiagonalMellin {
        pairs,
        m,
        n,
        weight: fam.weight,
        m_prime: fam.m_prime,
        strip,
        residual_flagged: residual,
        near_merge_flags: flags,
    })
}

impl DiagonalMellin {
    /// Residue density of M(Q)(z)|_Δ at the symbol pole z = −z_k, as an
    /// x-density: res M(Q)(−z_k) = m·Σ_α x^{−m·z_k + α − m}·Res(g_α; −z_k).
    /// Offsets carry the x^{mz} prefactor evaluated at the pole.
    pub fn residue_density_at(&self, z: Complex64) -> crate::symcore::XDensity {
        let mut taylor = Vec::new();
        for p in &self.pairs {
            if let Some(pole) = p.g.find_pole(z) {
                let offset = p.x_coeff * z.re + p.x_const;
                taylor.push((offset, self.m * pole.residue()));
            }
        }
        crate::symcore::XDensity::polynomial(taylor)
    }

    /// Regular value (in z) of the density at z0, with the x^{mz} prefactor
    /// evaluated at the point: Σ_α x^{m·z0 + α − m}·[z⁰-coefficient of g_α].
    pub fn regular_value_density_at(
        &self,
        z0: Complex64,
    ) -> Result<crate::symcore::XDensity, crate::merofn::MeroError> {
        let mut taylor = Vec::new();
        for p in &self.pairs {
            let v = p.g.regular_value(z0)?;
            taylor.push((p.x_coeff * z0.re + p.x_const, v));
        }
        Ok(crate::symcore::XDensity::polynomial(taylor))
    }

    /// Full value of the stripped density Σ_α x^{α−m} g_α(z) at (x, z).
    pub fn eval_stripped(&self, x: f64, z: Complex64) -> Complex64 {
        self.pairs
            .iter()
            .map(|p| x.powf(p.x_const) * p.g.eval(z))
            .sum()
    }
}

/// B(z) = ∫_M M(Q)(z)|_Δ: integrates each pair against ∫₀¹ x^{az+b} dx/x =
/// 1/(az+b). Returns the full catalog: simple poles on the x- and symbol
/// progressions, higher order where they collide.
pub fn assemble_b(
    diag: &DiagonalMellin,
    support: (f64, f64),
) -> Result<(MeroFunction, Vec<f64>), MellinError> {
    if support.0 < 0.0 || support.1 > 1.0 {
        return Err(MellinError::UnboundedProfile);
    }
    let mut pieces: Vec<Arc<dyn LocalPiece>> = Vec::new();
    for p in &diag.pairs {
        let xfac = (p.x_coeff, p.x_const);
        for t in &p.closed {
            let mut t = t.clone();
            t.denom.push(xfac);
            pieces.push(Arc::new(t));
        }
        for s in &p.smooth {
            let mut s = s.clone();
            s.denom = Some(xfac);
            pieces.push(Arc::new(s));
        }
    }
    Ok(MeroFunction::from_pieces(pieces, diag.strip))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::{FamilyKind, HomogeneousPart, SymbolAtom, XTerm};
    use approx::assert_relative_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn default_contour() -> SectorContour {
        SectorContour::new(std::f64::consts::FRAC_PI_4, 0.5).unwrap()
    }

    #[test]
    fn laplace_examples() {
        // k=1, μ=1, t=1 → e^{−1}
        assert_relative_eq!(laplace_atom(1, 1.0, c(1.0)).re, (-1.0f64).exp(), epsilon = 1e-15);
        // k=1, t→0⁺ → 1
        assert_relative_eq!(laplace_atom(1, 1e-12, c(3.7)).re, 1.0, epsilon = 1e-10);
        // k=2, μ=1, t=2 → 2e^{−2} (∂/∂μ of the k=1 identity)
        assert_relative_eq!(laplace_atom(2, 2.0, c(1.0)).re, 2.0 * (-2.0f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn laplace_against_quadrature() {
        let contour = default_contour();
        for k in 1..=3u32 {
            for &t in &[0.5, 1.0, 2.0] {
                let mu = Complex64::new(1.8, 0.4);
                let quad = contour_quadrature(
                    |lam| (mu - lam).powi(-(k as i32)),
                    &contour,
                    ContourWeight::Heat { t },
                )
                .unwrap();
                let closed = laplace_atom(k, t, mu);
                assert!(
                    (quad - closed).norm() < 1e-10 * closed.norm().max(1.0),
                    "k={k} t={t}: quad {quad} vs closed {closed}"
                );
            }
        }
    }

    #[test]
    fn mellin_examples() {
        // k=1, μ̃=1 → 1 for all z
        assert_relative_eq!(mellin_atom(1, c(2.3), c(1.0)).re, 1.0, epsilon = 1e-15);
        // k=1, μ̃=2, z=1 → 1/2
        assert_relative_eq!(mellin_atom(1, c(1.0), c(2.0)).re, 0.5, epsilon = 1e-15);
        // k=2, μ̃=1, z=1: z·μ̃^{−z−1} = 1 (the contour oracle fixes the sign)
        assert_relative_eq!(mellin_atom(2, c(1.0), c(1.0)).re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn mellin_against_quadrature() {
        let contour = default_contour();
        for k in 1..=3u32 {
            let mu = Complex64::new(2.0, 0.0);
            for &z in &[c(1.2), Complex64::new(1.5, 0.7)] {
                let quad = contour_quadrature(
                    |lam| (mu - lam).powi(-(k as i32)),
                    &contour,
                    ContourWeight::Power { z },
                )
                .unwrap();
                let closed = mellin_atom(k, z, mu);
                assert!(
                    (quad - closed).norm() < 1e-9 * closed.norm().max(1.0),
                    "k={k} z={z}: quad {quad} vs closed {closed}"
                );
            }
        }
    }

    #[test]
    fn mellin_recursion() {
        // mellin(k) = (z+k−2)/(k−1) · mellin(k−1) · μ̃^{−1}
        let mu = Complex64::new(1.5, 0.3);
        let z = Complex64::new(0.7, -0.2);
        for k in 2..=5u32 {
            let lhs = mellin_atom(k, z, mu);
            let rhs = (z + (k as f64 - 2.0)) / (k as f64 - 1.0) * mellin_atom(k - 1, z, mu) / mu;
            assert!((lhs - rhs).norm() < 1e-14 * lhs.norm().max(1e-14));
        }
    }

    #[test]
    fn quadrature_zero_function() {
        let contour = default_contour();
        let v = contour_quadrature(
            |_| Complex64::new(0.0, 0.0),
            &contour,
            ContourWeight::Heat { t: 1.0 },
        )
        .unwrap();
        assert!(v.norm() < 1e-300);
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
                parts: vec![HomogeneousPart::new(
                    -1.0,
                    vec![SymbolAtom::new(c(1.0), 0.0, 1, c(1.0), 1.0)],
                )],
            }],
        )
        .unwrap()
    }

    #[test]
    fn diagonal_mellin_m1() {
        // single pair (x-exponent z, g(z) = (1/π)/(z−1))
        let fam = m1_family();
        let d = mellin_diagonal(&fam, (-5.0, 3.0)).unwrap();
        assert_eq!(d.pairs.len(), 1);
        assert_relative_eq!(d.pairs[0].x_coeff, 1.0);
        assert_relative_eq!(d.pairs[0].x_const, 0.0);
        let g = &d.pairs[0].g;
        assert_eq!(g.poles().len(), 1);
        let pole = g.find_pole(c(1.0)).unwrap();
        assert_eq!(pole.order, 1);
        assert_relative_eq!(pole.residue().re, 1.0 / std::f64::consts::PI, epsilon = 1e-14);
        // pointwise: g(z) = (1/π)/(z−1)
        let z = Complex64::new(2.5, 0.3);
        let expect = 1.0 / std::f64::consts::PI / (z - 1.0);
        assert!((g.eval(z) - expect).norm() < 1e-13);
    }

    #[test]
    fn assemble_b_m1() {
        // B(z) = 1/(π z (z−1))
        let fam = m1_family();
        let d = mellin_diagonal(&fam, (-5.0, 3.0)).unwrap();
        let (b, flags) = assemble_b(&d, (0.0, 1.0)).unwrap();
        assert!(flags.is_empty());
        let pi = std::f64::consts::PI;
        assert_relative_eq!(b.find_pole(c(0.0)).unwrap().residue().re, -1.0 / pi, epsilon = 1e-13);
        assert_relative_eq!(b.find_pole(c(1.0)).unwrap().residue().re, 1.0 / pi, epsilon = 1e-13);
        let z = Complex64::new(0.4, 0.8);
        let expect = 1.0 / (pi * z * (z - 1.0));
        assert!((b.eval(z) - expect).norm() < 1e-13);
        // numeric Laurent oracle confirms the catalog
        let r = crate::merofn::numeric_laurent(|z| b.eval(z), c(0.0), 1, 0.25).unwrap();
        assert!((r[0] - b.find_pole(c(0.0)).unwrap().residue()).norm() < 1e-10);
    }

    #[test]
    fn assemble_b_m3_direct_family() {
        // two offsets {0, 1}, atoms (1, s=0, k=1) and (1, s=−1, k=1) at each:
        // B(z) = (1/π)(1/(z−1) + 1/z)², triple-pole witness at z = 0 after Γ
        let atoms = |off: f64| XTerm {
            offset: off,
            parts: vec![
                HomogeneousPart::new(-1.0, vec![SymbolAtom::new(c(1.0), 0.0, 1, c(1.0), 1.0)]),
                HomogeneousPart::new(-2.0, vec![SymbolAtom::new(c(1.0), -1.0, 1, c(1.0), 1.0)]),
            ],
        };
        let fam = ConeSymbolFamily::new(
            FamilyKind::Resolvent,
            0.0,
            1.0,
            1.0,
            1,
            8,
            Cutoff::Sharp,
            vec![atoms(0.0), atoms(1.0)],
        )
        .unwrap();
        let d = mellin_diagonal(&fam, (-5.0, 3.0)).unwrap();
        let (b, _) = assemble_b(&d, (0.0, 1.0)).unwrap();
        let pi = std::f64::consts::PI;
        let expect = |z: Complex64| (1.0 / (z - 1.0) + 1.0 / z).powu(2) / pi;
        for &z in &[Complex64::new(0.3, 0.4), Complex64::new(-1.7, 0.2)] {
            assert!((b.eval(z) - expect(z)).norm() < 1e-12);
        }
        // double poles at 0 and 1
        assert_eq!(b.find_pole(c(0.0)).unwrap().order, 2);
        assert_eq!(b.find_pole(c(1.0)).unwrap().order, 2);
        // Laurent data at 0: πB = 1/z² − 2/z − 1 + O(z)
        let p0 = b.find_pole(c(0.0)).unwrap();
        assert_relative_eq!(p0.principal[1].re, 1.0 / pi, epsilon = 1e-13);
        assert_relative_eq!(p0.principal[0].re, -2.0 / pi, epsilon = 1e-13);
    }

    #[test]
    fn zero_family_gives_zero_b() {
        let fam = ConeSymbolFamily::new(
            FamilyKind::Resolvent,
            0.0,
            0.0,
            1.0,
            1,
            8,
            Cutoff::Sharp,
            vec![],
        )
        .unwrap();
        let d = mellin_diagonal(&fam, (-5.0, 3.0)).unwrap();
        let (b, _) = assemble_b(&d, (0.0, 1.0)).unwrap();
        assert!(b.poles().is_empty());
        assert!(b.eval(Complex64::new(0.7, 0.1)).norm() < 1e-300);
    }

    #[test]
    fn sharp_vs_smooth_singular_parts() {
        // pole locations and residues identical; regular parts differ
        let mk = |cut: Cutoff| {
            ConeSymbolFamily::new(
                FamilyKind::Resolvent,
                0.0,
                0.0,
                1.0,
                1,
                8,
                cut,
                vec![XTerm {
                    offset: 1.0,
                    parts: vec![
                        HomogeneousPart::new(-1.0, vec![SymbolAtom::new(c(1.0), 0.0, 1, c(1.0), 1.0)]),
                        HomogeneousPart::new(-2.0, vec![SymbolAtom::new(c(0.5), -1.0, 1, c(1.0), 1.0)]),
                    ],
                }],
            )
            .unwrap()
        };
        let strip = (-4.0, 3.0);
        let sharp = mellin_diagonal(&mk(Cutoff::Sharp), strip).unwrap();
        let smooth = mellin_diagonal(&mk(Cutoff::Smooth { r0: 0.5, r1: 1.5 }), strip).unwrap();
        let gs = &sharp.pairs[0].g;
        let gm = &smooth.pairs[0].g;
        assert_eq!(gs.poles().len(), gm.poles().len());
        for (a, b) in gs.poles().iter().zip(gm.poles()) {
            assert!((a.location - b.location).norm() < 1e-10);
            assert_eq!(a.order, b.order);
            assert!(
                (a.residue() - b.residue()).norm() < 1e-8 * a.residue().norm().max(1e-8),
                "residues differ: {} vs {}",
                a.residue(),
                b.residue()
            );
        }
        // regular parts genuinely differ
        let z = c(0.25);
        assert!((gs.regular_value(z).unwrap() - gm.regular_value(z).unwrap()).norm() > 1e-3);
    }

    #[test]
    fn mellin_laplace_consistency() {
        // (1/Γ(z))∫₀^∞ t^{z−1} laplace_atom(t) dt = mellin_atom(z) on a grid
        let mu = Complex64::new(1.3, 0.2);
        for k in 1..=3u32 {
            for &zre in &[1.5, 2.0, 2.5] {
                let z = c(zre);
                // 1-D quadrature of t^{z−1}·t^{k−1}e^{−tμ}/(k−1)! via panels
                let mut f = |t: f64| {
                    Complex64::new(t, 0.0).powc(z - 1.0) * laplace_atom(k, t, mu)
                };
                let mut acc = Complex64::new(0.0, 0.0);
                let mut a = 1e-9f64;
                while a < 200.0 {
                    let b = (2.0 * a).min(200.0);
                    acc += gl_panel(&mut f, a, b, gauss_legendre_32());
                    a = b;
                }
                let lhs = acc / crate::special::gamma(z);
                let rhs = mellin_atom(k, z, mu);
                assert!(
                    (lhs - rhs).norm() < 1e-8 * rhs.norm().max(1.0),
                    "k={k} z={zre}: {lhs} vs {rhs}"
                );
            }
        }
    }
}
