//! conetrace: a symbolic-numeric engine for the full small-time expansion of
//! generalized heat traces Tr P e^{−tA} of model cone operators.
//!
//! The engine works with a closed algebra of anisotropic-homogeneous symbol
//! atoms c·|ξ|^s(μ|ξ|^d − λ)^{−k}, builds the resolvent parametrix of a model
//! operator, pushes it through the sector Laplace/Mellin transforms, catalogs
//! every pole of B(z)Γ(z), and emits every expansion term c·t^e(log t)^j —
//! including the log t and (log t)² coefficients expressed through the
//! residue trace functionals Tr_σ, Tr_∂ and Tr_{∂,σ}. Every analytic route is
//! paired with an independent numeric oracle (contour quadrature, Laurent
//! coefficient recovery by Cauchy integrals, and a heat-trace sampler with a
//! log-basis least-squares fit).

pub mod cli;
pub mod heat;
pub mod mellin;
pub mod merofn;
pub mod models;
pub mod residue;
pub mod special;
pub mod symcore;

pub use mellin::{
    assemble_b, contour_quadrature, laplace_atom, mellin_atom, mellin_diagonal, ContourWeight,
    DiagonalMellin, SectorContour,
};
pub use merofn::{
    gamma_laurent, mero_mul, numeric_laurent, pole_to_expansion, ExpansionTerm, MeroFunction,
    Pole, Provenance,
};
pub use symcore::{
    ConeSymbolFamily, Cutoff, FamilyKind, HomogeneousPart, Parity, SymbolAtom, XDensity, XProfile,
    XTerm,
};
