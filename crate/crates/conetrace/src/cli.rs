//! Batch front end: the structured-text model format, the expand / poles /
//! traces / verify commands, and deterministic text/CSV report rendering.
//!
//! Model files are flat key/value sections. Numbers are decimal with
//! optional pi-literals (`pi`, `pi/4`, `1/pi`, `3/2pi`).
//!
//! ```text
//! [operator]
//! m = 1
//! mu_re = 1
//! mu_im = 0
//! alpha = 0
//! # lower = <x-offset> <xi-power> <re> <im>   (repeatable)
//!
//! [P]
//! m_prime = 0
//! p = 0
//! term = 0 0 1 0        # <x-offset> <s> <re> <im>  (repeatable)
//!
//! [calculus]
//! n = 1
//! epsilon = pi/4
//! delta = 1/2
//! cutoff = sharp        # or: smooth <r0> <r1>
//! truncation = 8
//! horizon = 4
//!
//! [verify]
//! t_min = 1e-4
//! t_max = 1e-1
//! t_points = 40
//! fit_tol = 1e-3
//! # smooth = <re> <im>  (repeatable: r_0, r_1, … of Σ r_k t^{(k−p)/m})
//! ```

use std::fmt::Write as _;

use num_complex::Complex64;
use thiserror::Error;

use crate::heat::{
    check_trace_class, classify_poles, corollary_flags, fit_expansion, geometric_grid,
    heat_expansion, heat_expansion_via_traces, heat_trace_grid, resolvent_defect, strip_for,
    ExpansionParams, HeatError,
};
use crate::mellin::{
    assemble_b, contour_quadrature, laplace_atom, mellin_atom, mellin_diagonal, ContourWeight,
    MellinError, SectorContour,
};
use crate::merofn::numeric_laurent;
use crate::models::{CalculusConfig, DeskModel, VerifyConfig};
use crate::residue::{trace_report, ResidueError};
use crate::symcore::{
    ConeSymbolFamily, Cutoff, FamilyKind, HomogeneousPart, SymbolAtom, SymError, XTerm,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("spec error: {0}")]
    Spec(String),
    #[error("cross-check failure: {0}")]
    CrossCheck(String),
    #[error("quadrature failure: {0}")]
    Quadrature(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Exit codes: 0 ok, 2 spec error, 3 cross-check failure, 4 quadrature.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Spec(_) | CliError::Io(_) => 2,
            CliError::CrossCheck(_) => 3,
            CliError::Quadrature(_) => 4,
        }
    }
}

fn lift_heat(e: HeatError) -> CliError {
    match e {
        HeatError::CrossCheckFailure(msg) => CliError::CrossCheck(msg),
        HeatError::QuadratureFailure(msg) => CliError::Quadrature(msg),
        HeatError::IllConditioned(c) => {
            CliError::Quadrature(format!("ill-conditioned design matrix ({c:.3e})"))
        }
        HeatError::Mellin(MellinError::TailBoundExceeded(v)) => {
            CliError::Quadrature(format!("contour tail bound exceeded at {v:.3e}"))
        }
        other => CliError::Spec(other.to_string()),
    }
}

fn lift_residue(e: ResidueError) -> CliError {
    CliError::Spec(e.to_string())
}

// ---- the model file ----

/// In-memory form of a model file; parse/serialize round trips losslessly.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub name: String,
    pub m: f64,
    pub mu: Complex64,
    pub alpha: f64,
    /// (x-offset, ξ-power, coefficient)
    pub lower: Vec<(u32, u32, Complex64)>,
    pub m_prime: f64,
    pub p: f64,
    /// (x-offset, s, coefficient)
    pub terms: Vec<(f64, f64, Complex64)>,
    pub n: u32,
    pub epsilon: f64,
    pub delta: f64,
    pub cutoff: Cutoff,
    pub truncation: u32,
    pub horizon: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub t_points: usize,
    pub fit_tol: f64,
    pub smooth_part: Vec<Complex64>,
}

/// Parse a decimal-or-pi-literal number: `pi`, `2pi`, `pi/4`, `1/pi`,
/// `3/2pi`, or a plain float.
pub fn parse_number(s: &str) -> Result<f64, CliError> {
    let s = s.trim();
    let parse_part = |part: &str| -> Result<f64, CliError> {
        let part = part.trim();
        if part.is_empty() {
            return Err(CliError::Spec("empty number".into()));
        }
        if let Some(head) = part.strip_suffix("pi") {
            let head = head.trim();
            let factor = if head.is_empty() || head == "+" {
                1.0
            } else if head == "-" {
                -1.0
            } else {
                head.parse::<f64>().map_err(|_| {
                    CliError::Spec(format!("cannot parse number '{part}'"))
                })?
            };
            Ok(factor * std::f64::consts::PI)
        } else {
            part.parse::<f64>()
                .map_err(|_| CliError::Spec(format!("cannot parse number '{part}'")))
        }
    };
    match s.split_once('/') {
        Some((num, den)) => Ok(parse_part(num)? / parse_part(den)?),
        None => parse_part(s),
    }
}

fn split_values(v: &str) -> Vec<&str> {
    v.split_whitespace().collect()
}

pub fn parse_spec(text: &str) -> Result<ModelSpec, CliError> {
    let mut spec = ModelSpec {
        name: String::new(),
        m: f64::NAN,
        mu: Complex64::new(f64::NAN, 0.0),
        alpha: 0.0,
        lower: vec![],
        m_prime: f64::NAN,
        p: f64::NAN,
        terms: vec![],
        n: 1,
        epsilon: std::f64::consts::FRAC_PI_4,
        delta: 0.5,
        cutoff: Cutoff::Sharp,
        truncation: 8,
        horizon: 4.0,
        t_min: 1e-4,
        t_max: 1e-1,
        t_points: 40,
        fit_tol: 1e-3,
        smooth_part: vec![],
    };
    let mut section = String::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') && line.ends_with(']') {
            section = line[1..line.len() - 1].trim().to_ascii_lowercase();
            match section.as_str() {
                "operator" | "p" | "calculus" | "verify" => {}
                other => {
                    return Err(CliError::Spec(format!(
                        "line {}: unknown section [{other}]",
                        lineno + 1
                    )))
                }
            }
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Spec(format!("line {}: expected key = value", lineno + 1))
        })?;
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim();
        let err = |msg: &str| CliError::Spec(format!("line {}: {msg}", lineno + 1));
        match (section.as_str(), key.as_str()) {
            ("", "name") => spec.name = value.to_string(),
            ("operator", "m") => spec.m = parse_number(value)?,
            ("operator", "mu_re") => spec.mu.re = parse_number(value)?,
            ("operator", "mu_im") => spec.mu.im = parse_number(value)?,
            ("operator", "alpha") => spec.alpha = parse_number(value)?,
            ("operator", "lower") => {
                let v = split_values(value);
                if v.len() != 4 {
                    return Err(err("lower takes: x-offset xi-power re im"));
                }
                spec.lower.push((
                    parse_number(v[0])? as u32,
                    parse_number(v[1])? as u32,
                    Complex64::new(parse_number(v[2])?, parse_number(v[3])?),
                ));
            }
            ("p", "m_prime") => spec.m_prime = parse_number(value)?,
            ("p", "p") => spec.p = parse_number(value)?,
            ("p", "term") => {
                let v = split_values(value);
                if v.len() != 4 {
                    return Err(err("term takes: x-offset s re im"));
                }
                spec.terms.push((
                    parse_number(v[0])?,
                    parse_number(v[1])?,
                    Complex64::new(parse_number(v[2])?, parse_number(v[3])?),
                ));
            }
            ("calculus", "n") => spec.n = parse_number(value)? as u32,
            ("calculus", "epsilon") => spec.epsilon = parse_number(value)?,
            ("calculus", "delta") => spec.delta = parse_number(value)?,
            ("calculus", "cutoff") => {
                let v = split_values(value);
                spec.cutoff = match v.as_slice() {
                    ["sharp"] => Cutoff::Sharp,
                    ["smooth", r0, r1] => {
                        Cutoff::Smooth { r0: parse_number(r0)?, r1: parse_number(r1)? }
                    }
                    _ => return Err(err("cutoff is 'sharp' or 'smooth <r0> <r1>'")),
                };
            }
            ("calculus", "truncation") => spec.truncation = parse_number(value)? as u32,
            ("calculus", "horizon") => spec.horizon = parse_number(value)?,
            ("verify", "t_min") => spec.t_min = parse_number(value)?,
            ("verify", "t_max") => spec.t_max = parse_number(value)?,
            ("verify", "t_points") => spec.t_points = parse_number(value)? as usize,
            ("verify", "fit_tol") => spec.fit_tol = parse_number(value)?,
            ("verify", "smooth") => {
                let v = split_values(value);
                if v.len() != 2 {
                    return Err(err("smooth takes: re im"));
                }
                spec.smooth_part
                    .push(Complex64::new(parse_number(v[0])?, parse_number(v[1])?));
            }
            (sec, k) => {
                return Err(err(&format!("unknown key '{k}' in section [{sec}]")));
            }
        }
    }
    if !spec.m.is_finite() || !spec.mu.re.is_finite() {
        return Err(CliError::Spec("[operator] must set m and mu_re".into()));
    }
    if !spec.m_prime.is_finite() || !spec.p.is_finite() {
        return Err(CliError::Spec("[P] must set m_prime and p".into()));
    }
    if spec.terms.is_empty() {
        return Err(CliError::Spec("[P] must list at least one term".into()));
    }
    Ok(spec)
}

fn fmt_f(x: f64) -> String {
    // shortest roundtrip representation
    format!("{x}")
}

pub fn render_spec(spec: &ModelSpec) -> String {
    let mut s = String::new();
    if !spec.name.is_empty() {
        let _ = writeln!(s, "name = {}", spec.name);
        let _ = writeln!(s);
    }
    let _ = writeln!(s, "[operator]");
    let _ = writeln!(s, "m = {}", fmt_f(spec.m));
    let _ = writeln!(s, "mu_re = {}", fmt_f(spec.mu.re));
    let _ = writeln!(s, "mu_im = {}", fmt_f(spec.mu.im));
    let _ = writeln!(s, "alpha = {}", fmt_f(spec.alpha));
    for &(j, k, c) in &spec.lower {
        let _ = writeln!(s, "lower = {j} {k} {} {}", fmt_f(c.re), fmt_f(c.im));
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "[P]");
    let _ = writeln!(s, "m_prime = {}", fmt_f(spec.m_prime));
    let _ = writeln!(s, "p = {}", fmt_f(spec.p));
    for &(off, sexp, c) in &spec.terms {
        let _ = writeln!(s, "term = {} {} {} {}", fmt_f(off), fmt_f(sexp), fmt_f(c.re), fmt_f(c.im));
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "[calculus]");
    let _ = writeln!(s, "n = {}", spec.n);
    let _ = writeln!(s, "epsilon = {}", fmt_f(spec.epsilon));
    let _ = writeln!(s, "delta = {}", fmt_f(spec.delta));
    match spec.cutoff {
        Cutoff::Sharp => {
            let _ = writeln!(s, "cutoff = sharp");
        }
        Cutoff::Smooth { r0, r1 } => {
            let _ = writeln!(s, "cutoff = smooth {} {}", fmt_f(r0), fmt_f(r1));
        }
    }
    let _ = writeln!(s, "truncation = {}", spec.truncation);
    let _ = writeln!(s, "horizon = {}", fmt_f(spec.horizon));
    let _ = writeln!(s);
    let _ = writeln!(s, "[verify]");
    let _ = writeln!(s, "t_min = {}", fmt_f(spec.t_min));
    let _ = writeln!(s, "t_max = {}", fmt_f(spec.t_max));
    let _ = writeln!(s, "t_points = {}", spec.t_points);
    let _ = writeln!(s, "fit_tol = {}", fmt_f(spec.fit_tol));
    for &c in &spec.smooth_part {
        let _ = writeln!(s, "smooth = {} {}", fmt_f(c.re), fmt_f(c.im));
    }
    s
}

impl ModelSpec {
    pub fn from_desk(model: &DeskModel) -> ModelSpec {
        let op = &model.operator;
        let mut terms = Vec::new();
        for (off, _, atom) in model.p_family.iter_atoms() {
            terms.push((off, atom.s, atom.coeff));
        }
        ModelSpec {
            name: model.name.clone(),
            m: op.m,
            mu: op.mu,
            alpha: op.alpha,
            lower: op.lower.iter().map(|t| (t.x_offset, t.xi_power, t.coeff)).collect(),
            m_prime: model.p_family.m_prime,
            p: model.p_family.weight,
            terms,
            n: model.calculus.n,
            epsilon: model.calculus.epsilon,
            delta: model.calculus.delta,
            cutoff: model.calculus.cutoff,
            truncation: model.calculus.truncation,
            horizon: model.calculus.horizon,
            t_min: model.verify.t_min,
            t_max: model.verify.t_max,
            t_points: model.verify.t_points,
            fit_tol: model.verify.fit_tol,
            smooth_part: model.verify.smooth_part.clone(),
        }
    }

    /// Build the semantic model from the file data.
    pub fn build(&self) -> Result<DeskModel, CliError> {
        let calc = CalculusConfig {
            n: self.n,
            epsilon: self.epsilon,
            delta: self.delta,
            cutoff: self.cutoff,
            truncation: self.truncation,
            horizon: self.horizon,
        };
        let operator = crate::heat::ConeOperatorModel {
            m: self.m,
            mu: self.mu,
            lower: self
                .lower
                .iter()
                .map(|&(j, k, c)| crate::heat::LowerTerm { x_offset: j, xi_power: k, coeff: c })
                .collect(),
            alpha: self.alpha,
            epsilon: self.epsilon,
            n: self.n,
            cutoff: self.cutoff,
        };
        operator.validate().map_err(lift_heat)?;
        check_trace_class(self.m, self.p).map_err(lift_heat)?;
        let mut x_terms: Vec<XTerm> = Vec::new();
        for &(off, sexp, c) in &self.terms {
            let part = HomogeneousPart::new(sexp, vec![SymbolAtom::lambda_free(c, sexp)]);
            if let Some(xt) = x_terms.iter_mut().find(|xt| (xt.offset - off).abs() <= 1e-12) {
                xt.parts.push(part);
            } else {
                x_terms.push(XTerm { offset: off, parts: vec![part] });
            }
        }
        let p_family = ConeSymbolFamily::new(
            FamilyKind::LambdaFree,
            self.m_prime,
            self.p,
            self.m,
            self.n,
            self.truncation,
            self.cutoff,
            x_terms,
        )
        .map_err(|e: SymError| CliError::Spec(e.to_string()))?;
        Ok(DeskModel {
            name: if self.name.is_empty() { "model".into() } else { self.name.clone() },
            operator,
            p_family,
            calculus: calc,
            verify: VerifyConfig {
                t_min: self.t_min,
                t_max: self.t_max,
                t_points: self.t_points,
                fit_tol: self.fit_tol,
                smooth_part: self.smooth_part.clone(),
            },
        })
    }
}

// ---- commands ----

/// Runtime overrides from the command line.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub horizon: Option<f64>,
    pub strip: Option<(f64, f64)>,
    pub cutoff: Option<CutoffChoice>,
}

#[derive(Debug, Clone, Copy)]
pub enum CutoffChoice {
    Sharp,
    Smooth,
}

fn apply_overrides(model: &mut DeskModel, ov: &Overrides) {
    if let Some(h) = ov.horizon {
        model.calculus.horizon = h;
    }
    if let Some(choice) = ov.cutoff {
        let cutoff = match choice {
            CutoffChoice::Sharp => Cutoff::Sharp,
            CutoffChoice::Smooth => match model.calculus.cutoff {
                Cutoff::Smooth { r0, r1 } => Cutoff::Smooth { r0, r1 },
                Cutoff::Sharp => Cutoff::Smooth { r0: 0.5, r1: 1.5 },
            },
        };
        model.calculus.cutoff = cutoff;
        model.operator.cutoff = cutoff;
        // rebuild the P family with the new cutoff
        let mut fam = model.p_family.clone();
        fam.cutoff = cutoff;
        model.p_family = fam;
    }
}

fn fmt_c15(x: f64) -> String {
    format!("{x:+.15e}")
}

/// One table row of the expansion report.
#[derive(Debug, Clone)]
pub struct ExpandRow {
    pub exponent: f64,
    pub log_power: u32,
    pub coeff_laurent: Complex64,
    /// Filled for log rows (the trace-functional route produces exactly the
    /// log coefficients).
    pub coeff_traces: Option<Complex64>,
    pub provenance: String,
    pub gate: String,
}

#[derive(Debug, Clone)]
pub struct ExpandReport {
    pub model: String,
    pub rows: Vec<ExpandRow>,
    pub gates: Vec<String>,
    /// Largest coefficientwise deviation between the two routes.
    pub route_deviation: f64,
    pub exact_below: f64,
}

impl ExpandReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "exponent,log_power,coeff_laurent_re,coeff_laurent_im,coeff_traces_re,coeff_traces_im,provenance,gate\n",
        );
        for r in &self.rows {
            let (tre, tim) = match r.coeff_traces {
                Some(c) => (fmt_c15(c.re), fmt_c15(c.im)),
                None => (String::new(), String::new()),
            };
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                fmt_c15(r.exponent),
                r.log_power,
                fmt_c15(r.coeff_laurent.re),
                fmt_c15(r.coeff_laurent.im),
                tre,
                tim,
                r.provenance,
                r.gate
            );
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "heat trace expansion of {}", self.model);
        let _ = writeln!(
            s,
            "{:>22} {:>9} {:>24} {:>24}  {}",
            "t-exponent", "log-pow", "coeff (laurent)", "coeff (traces)", "provenance"
        );
        for r in &self.rows {
            let traces = match r.coeff_traces {
                Some(c) => format!("{:+.12e}", c.re),
                None => "-".into(),
            };
            let _ = writeln!(
                s,
                "{:>22.12} {:>9} {:>24} {:>24}  {}{}",
                r.exponent,
                r.log_power,
                format!("{:+.12e}", r.coeff_laurent.re),
                traces,
                r.provenance,
                if r.gate.is_empty() { String::new() } else { format!(" [{}]", r.gate) }
            );
        }
        let _ = writeln!(s, "route deviation: {:.3e}", self.route_deviation);
        let _ = writeln!(s, "exact below t-exponent {:.6}", self.exact_below);
        s
    }
}

/// Run both expansion routes and tabulate them side by side; a route
/// mismatch beyond 1e−9 is a cross-check failure.
pub fn cmd_expand(spec: &ModelSpec, ov: &Overrides) -> Result<ExpandReport, CliError> {
    let mut model = spec.build()?;
    apply_overrides(&mut model, ov);
    let q = model.q_family().map_err(lift_heat)?;
    let horizon = model.calculus.horizon;
    let laurent = heat_expansion(&q, horizon).map_err(lift_heat)?;
    let traces = heat_expansion_via_traces(
        &model.p_family,
        &model.operator,
        horizon,
        model.calculus.truncation,
    )
    .map_err(lift_heat)?;
    let mut deviation = 0.0f64;
    let mut rows = Vec::new();
    for t in &laurent.terms {
        let trace_coeff = if t.log_power >= 1 {
            let c = traces
                .terms
                .iter()
                .find(|s| (s.exponent - t.exponent).norm() <= 1e-9 && s.log_power == t.log_power)
                .map(|s| s.coeff)
                .unwrap_or_else(|| Complex64::new(0.0, 0.0));
            deviation = deviation.max((c - t.coeff).norm());
            Some(c)
        } else {
            None
        };
        rows.push(ExpandRow {
            exponent: t.exponent.re,
            log_power: t.log_power,
            coeff_laurent: t.coeff,
            coeff_traces: trace_coeff,
            provenance: t.provenance.to_string(),
            gate: String::new(),
        });
    }
    // log terms present only in the trace route would also be a mismatch
    for s in &traces.terms {
        let missing = !laurent
            .terms
            .iter()
            .any(|t| (s.exponent - t.exponent).norm() <= 1e-9 && t.log_power == s.log_power);
        if missing {
            deviation = deviation.max(s.coeff.norm());
        }
    }
    if deviation > 1e-9 {
        return Err(CliError::CrossCheck(format!(
            "trace-functional route deviates from the Laurent route by {deviation:.3e}"
        )));
    }
    let gates = laurent
        .gates
        .iter()
        .map(|g| format!("{} = {} ({})", g.name, g.param, if g.open { "open" } else { "closed" }))
        .collect();
    Ok(ExpandReport {
        model: model.name.clone(),
        rows,
        gates,
        route_deviation: deviation,
        exact_below: laurent.exact_below,
    })
}

#[derive(Debug, Clone)]
pub struct PoleRow {
    pub location: f64,
    pub candidate_order: u32,
    pub actual_order: u32,
    pub memberships: String,
    pub laurent: Vec<Complex64>,
}

#[derive(Debug, Clone)]
pub struct PoleReport {
    pub model: String,
    pub rows: Vec<PoleRow>,
}

impl PoleReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "poles of B(z)Gamma(z) for {}", self.model);
        for r in &self.rows {
            let laurent: Vec<String> =
                r.laurent.iter().enumerate().map(|(j, c)| format!("r_{} = {:+.9e}", j + 1, c.re)).collect();
            let _ = writeln!(
                s,
                "z = {:>12.6}: order {} (candidate {}), members [{}]  {}",
                r.location,
                r.actual_order,
                r.candidate_order,
                r.memberships,
                laurent.join(", ")
            );
        }
        s
    }
}

pub fn cmd_poles(spec: &ModelSpec, ov: &Overrides) -> Result<PoleReport, CliError> {
    let mut model = spec.build()?;
    apply_overrides(&mut model, ov);
    let q = model.q_family().map_err(lift_heat)?;
    let horizon = model.calculus.horizon;
    let strip = ov.strip.unwrap_or_else(|| strip_for(&q, horizon));
    let diag = mellin_diagonal(&q, strip).map_err(|e| lift_heat(e.into()))?;
    let (b, _) = assemble_b(&diag, (0.0, 1.0)).map_err(|e| lift_heat(e.into()))?;
    let gamma_fn = crate::merofn::MeroFunction::gamma(strip);
    let params = ExpansionParams::of(&q);
    let poles = classify_poles(&b, &gamma_fn, &params).map_err(lift_heat)?;
    let rows = poles
        .iter()
        .map(|p| {
            let mut members = Vec::new();
            if let Some(l) = p.memberships.gamma_ell {
                members.push(format!("gamma l={l}"));
            }
            if let Some(j) = p.memberships.x_j {
                members.push(format!("x j={j}"));
            }
            if let Some(k) = p.memberships.symbol_k {
                members.push(format!("symbol k={k}"));
            }
            PoleRow {
                location: p.location.re,
                candidate_order: p.candidate_order,
                actual_order: p.actual_order,
                memberships: members.join(", "),
                laurent: p.laurent.clone(),
            }
        })
        .collect();
    Ok(PoleReport { model: model.name.clone(), rows })
}

#[derive(Debug, Clone)]
pub struct TraceReportOut {
    pub model: String,
    pub tr_sigma: Complex64,
    pub tr_partial: Complex64,
    pub tr_partial_sigma: Complex64,
    pub gates: Vec<String>,
    pub regularizer: String,
}

impl TraceReportOut {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "residue trace functionals of {}", self.model);
        let _ = writeln!(s, "Tr_sigma         = {:+.12e} {:+.12e}i", self.tr_sigma.re, self.tr_sigma.im);
        let _ = writeln!(s, "Tr_partial       = {:+.12e} {:+.12e}i", self.tr_partial.re, self.tr_partial.im);
        let _ = writeln!(
            s,
            "Tr_partial_sigma = {:+.12e} {:+.12e}i",
            self.tr_partial_sigma.re, self.tr_partial_sigma.im
        );
        for g in &self.gates {
            let _ = writeln!(s, "gate: {g}");
        }
        let _ = writeln!(s, "regularizer: {}", self.regularizer);
        s
    }
}

pub fn cmd_traces(spec: &ModelSpec, ov: &Overrides) -> Result<TraceReportOut, CliError> {
    let mut model = spec.build()?;
    apply_overrides(&mut model, ov);
    let q = model.q_family().map_err(lift_heat)?;
    let strip = ov.strip.unwrap_or_else(|| strip_for(&q, model.calculus.horizon));
    let report = trace_report(&model.p_family, &model.operator, strip).map_err(lift_residue)?;
    let mut gates = Vec::new();
    gates.push(format!(
        "Tr_partial weight gate p = {} ({})",
        report.tr_partial.gate_param,
        if report.tr_partial.gate_open { "open" } else { "closed" }
    ));
    gates.push(format!(
        "Tr_partial_sigma weight gate p = {} ({})",
        report.tr_partial_sigma.gate_param,
        if report.tr_partial_sigma.gate_open { "open" } else { "closed" }
    ));
    Ok(TraceReportOut {
        model: model.name.clone(),
        tr_sigma: report.tr_sigma,
        tr_partial: report.tr_partial.value,
        tr_partial_sigma: report.tr_partial_sigma.value,
        gates,
        regularizer: report.regularizer,
    })
}

#[derive(Debug, Clone)]
pub struct VerifyCheck {
    pub name: String,
    pub pass: bool,
    pub residual: f64,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub model: String,
    pub checks: Vec<VerifyCheck>,
    pub fit_condition: f64,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "verification of {}", self.model);
        for c in &self.checks {
            let _ = writeln!(
                s,
                "[{}] {:<46} residual {:.3e}{}",
                if c.pass { "pass" } else { "FAIL" },
                c.name,
                c.residual,
                if c.detail.is_empty() { String::new() } else { format!("  ({})", c.detail) }
            );
        }
        let _ = writeln!(s, "fit condition number: {:.3e}", self.fit_condition);
        s
    }
}

/// The full oracle chain for one model: family validation, closed forms vs
/// contour quadrature, stored Laurent data vs the numeric oracle, both
/// expansion routes, sharp-vs-smooth singular parts, parametrix defect, and
/// the numeric fit against the analytic coefficients.
pub fn cmd_verify(spec: &ModelSpec, ov: &Overrides) -> Result<VerifyReport, CliError> {
    let mut model = spec.build()?;
    apply_overrides(&mut model, ov);
    let mut checks: Vec<VerifyCheck> = Vec::new();
    let mut push = |name: &str, pass: bool, residual: f64, detail: String| {
        checks.push(VerifyCheck { name: name.into(), pass, residual, detail });
    };

    let q = model.q_family().map_err(lift_heat)?;
    let horizon = model.calculus.horizon;
    let strip = ov.strip.unwrap_or_else(|| strip_for(&q, horizon));

    // 1. family invariants
    let validation = q.validate(model.calculus.epsilon);
    push(
        "family-invariants",
        validation.all_pass(),
        0.0,
        validation
            .entries
            .iter()
            .filter(|e| !e.pass)
            .map(|e| e.name.clone())
            .collect::<Vec<_>>()
            .join(", "),
    );

    // 2. closed forms vs contour quadrature on atom samples
    let contour = SectorContour::new(model.calculus.epsilon, model.calculus.delta)
        .map_err(|e| lift_heat(e.into()))?;
    let mut worst = 0.0f64;
    for k in 1..=3u32 {
        let mu = model.operator.mu * 1.3;
        for &t in &[0.5, 2.0] {
            let quad =
                contour_quadrature(|lam| (mu - lam).powi(-(k as i32)), &contour, ContourWeight::Heat { t })
                    .map_err(|e| lift_heat(e.into()))?;
            let closed = laplace_atom(k, t, mu);
            worst = worst.max((quad - closed).norm() / closed.norm().max(1.0));
        }
        let z = Complex64::new(1.4, 0.3);
        let quad =
            contour_quadrature(|lam| (mu - lam).powi(-(k as i32)), &contour, ContourWeight::Power { z })
                .map_err(|e| lift_heat(e.into()))?;
        let closed = mellin_atom(k, z, mu);
        worst = worst.max((quad - closed).norm() / closed.norm().max(1.0));
    }
    push("contour-vs-closed-forms", worst < 1e-9, worst, String::new());

    // 3. stored Laurent catalog vs the numeric oracle
    let diag = mellin_diagonal(&q, strip).map_err(|e| lift_heat(e.into()))?;
    let (b, _) = assemble_b(&diag, (0.0, 1.0)).map_err(|e| lift_heat(e.into()))?;
    let gamma_fn = crate::merofn::MeroFunction::gamma(strip);
    let product = crate::merofn::mero_mul(&b, &gamma_fn).map_err(|e| lift_heat(e.into()))?;
    let mut worst = 0.0f64;
    let mut checked = 0;
    for pole in product.poles() {
        if pole.location.re < -horizon || pole.location.re.abs() > 6.0 {
            continue;
        }
        let radius = product
            .poles()
            .iter()
            .map(|p| (p.location - pole.location).norm())
            .filter(|d| *d > 1e-9)
            .fold(0.25f64, f64::min)
            / 2.0;
        let r = numeric_laurent(|z| product.eval(z), pole.location, pole.order as usize, radius)
            .map_err(|e| CliError::Quadrature(e.to_string()))?;
        let scale = r.iter().map(|c| c.norm()).fold(1e-12, f64::max);
        for (a, bb) in r.iter().zip(&pole.principal) {
            worst = worst.max((a - bb).norm() / scale);
        }
        checked += 1;
    }
    push("numeric-laurent-vs-stored", worst < 1e-8, worst, format!("{checked} poles"));

    // 4. route agreement
    let expand = cmd_expand(spec, ov)?;
    push("route-agreement", expand.route_deviation <= 1e-9, expand.route_deviation, String::new());

    // 5. sharp vs smooth cutoff: identical singular parts of the diagonal data
    {
        let mut smooth_model = model.clone();
        apply_overrides(&mut smooth_model, &Overrides {
            cutoff: Some(CutoffChoice::Smooth),
            ..Default::default()
        });
        let q_smooth = smooth_model.q_family().map_err(lift_heat)?;
        let diag_smooth = mellin_diagonal(&q_smooth, strip).map_err(|e| lift_heat(e.into()))?;
        let mut worst = 0.0f64;
        let mut ok = diag.pairs.len() == diag_smooth.pairs.len();
        if ok {
            for (ps, pm) in diag.pairs.iter().zip(&diag_smooth.pairs) {
                ok &= ps.g.poles().len() == pm.g.poles().len();
                if !ok {
                    break;
                }
                for (a, bb) in ps.g.poles().iter().zip(pm.g.poles()) {
                    worst = worst.max((a.location - bb.location).norm());
                    let scale = a.residue().norm().max(1e-12);
                    worst = worst.max((a.residue() - bb.residue()).norm() / scale);
                }
            }
        }
        push("sharp-vs-smooth-singular-parts", ok && worst < 1e-7, worst, String::new());
    }

    // 6. parametrix defect decay (meaningful when A has lower-order terms)
    if !model.operator.lower.is_empty() {
        let defect = resolvent_defect(&model.operator, model.calculus.truncation, &[4.0, 8.0, 16.0])
            .map_err(lift_heat)?;
        let slope = (defect[2].1 / defect[0].1).ln() / (defect[2].0 / defect[0].0).ln();
        push(
            "parametrix-defect-decay",
            slope < -(model.calculus.truncation as f64) + 1.5,
            slope,
            format!("log-log slope {slope:.2}"),
        );
    }

    // 7. numeric heat trace + fit vs analytic coefficients
    let laurent = heat_expansion(&q, horizon).map_err(lift_heat)?;
    let ts = geometric_grid(model.verify.t_min, model.verify.t_max, model.verify.t_points);
    let samples = heat_trace_grid(&q, &ts, &model.verify.smooth_part).map_err(lift_heat)?;
    let mut basis: Vec<(f64, u32)> = laurent
        .terms
        .iter()
        .map(|t| (t.exponent.re, t.log_power))
        .collect();
    basis.dedup();
    let fit = fit_expansion(&samples, &basis).map_err(lift_heat)?;
    // compare the leading analytic coefficients (smallest exponents first)
    let mut worst = 0.0f64;
    let mut compared = 0;
    for (i, &(e, j)) in basis.iter().enumerate() {
        if compared >= 4 {
            break;
        }
        let analytic = laurent.coeff(e, j);
        if analytic.norm() < 1e-10 {
            continue;
        }
        let rel = (fit.coeffs[i] - analytic).norm() / analytic.norm();
        worst = worst.max(rel);
        compared += 1;
    }
    push(
        "fit-vs-analytic",
        worst < model.verify.fit_tol,
        worst,
        format!("{} coefficients at tolerance {:.1e}", compared, model.verify.fit_tol),
    );

    // 8. corollary identities when a vanishing corollary applies
    let flags = corollary_flags(model.p_family.weight, model.p_family.m_prime, model.calculus.n);
    if flags.no_log_sq {
        let no_sq = laurent.max_log_power() <= 1;
        let mut residual = 0.0;
        let mut detail = String::new();
        let mut pass = no_sq;
        if flags.tr_sigma_identity {
            let sigma = crate::residue::tr_sigma(&model.p_family).map_err(lift_residue)?;
            residual = (sigma + model.operator.m * laurent.log_coeff()).norm();
            pass &= residual < 1e-8;
            detail = "Tr_sigma = -m x log-coefficient".into();
        }
        if flags.tr_partial_identity {
            let tp = crate::residue::tr_partial(&model.p_family, &model.operator, strip)
                .map_err(lift_residue)?;
            residual = (tp.value + model.operator.m * laurent.log_coeff()).norm();
            pass &= residual < 1e-8;
            detail = "Tr_partial = -m x log-coefficient".into();
        }
        push("corollary-identities", pass, residual, detail);
    }

    // 9. determinism: two renders of the expansion are byte-identical
    let second = cmd_expand(spec, ov)?;
    push(
        "determinism",
        expand.to_csv() == second.to_csv(),
        0.0,
        String::new(),
    );

    Ok(VerifyReport { model: model.name.clone(), checks, fit_condition: fit.condition })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    #[test]
    fn number_parser() {
        assert_eq!(parse_number("1.5").unwrap(), 1.5);
        assert_eq!(parse_number("pi").unwrap(), std::f64::consts::PI);
        assert_eq!(parse_number("pi/4").unwrap(), std::f64::consts::FRAC_PI_4);
        assert_eq!(parse_number("1/pi").unwrap(), 1.0 / std::f64::consts::PI);
        assert_eq!(parse_number("2pi").unwrap(), 2.0 * std::f64::consts::PI);
        assert_eq!(parse_number("3/2pi").unwrap(), 3.0 / (2.0 * std::f64::consts::PI));
        assert_eq!(parse_number("-pi").unwrap(), -std::f64::consts::PI);
        assert_eq!(parse_number("1e-4").unwrap(), 1e-4);
        assert!(parse_number("chicken").is_err());
    }

    #[test]
    fn spec_round_trip_is_identity() {
        for model in models::all() {
            let spec = ModelSpec::from_desk(&model);
            let text = render_spec(&spec);
            let reparsed = parse_spec(&text).unwrap();
            assert_eq!(spec, reparsed, "round trip failed for {}", model.name);
            // and a second round trip is bytewise stable
            assert_eq!(text, render_spec(&reparsed));
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = "\n[operator]\nm = 1\nmu_re = 1\nfrobnicate = 3\n";
        assert!(matches!(parse_spec(text), Err(CliError::Spec(_))));
        let text = "\n[frobnicator]\nm = 1\n";
        assert!(matches!(parse_spec(text), Err(CliError::Spec(_))));
    }

    #[test]
    fn trace_class_refusal() {
        // p > m is refused with a trace-class error (exit code 2)
        let mut spec = ModelSpec::from_desk(&models::m1());
        spec.p = 1.5;
        spec.terms = vec![(-1.5, 0.0, Complex64::new(1.0, 0.0))];
        let err = spec.build().unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("m > p"), "{err}");
    }

    #[test]
    fn expand_m1_rows() {
        let spec = ModelSpec::from_desk(&models::m1());
        let report = cmd_expand(&spec, &Overrides::default()).unwrap();
        let pi = std::f64::consts::PI;
        let find = |e: f64, j: u32| {
            report
                .rows
                .iter()
                .find(|r| (r.exponent - e).abs() < 1e-9 && r.log_power == j)
                .unwrap()
                .coeff_laurent
                .re
        };
        assert!((find(-1.0, 0) - 1.0 / pi).abs() < 1e-12);
        assert!((find(0.0, 1) - 1.0 / pi).abs() < 1e-12);
        assert!(report.route_deviation < 1e-11);
    }

    #[test]
    fn expand_m4_has_no_log_rows() {
        let spec = ModelSpec::from_desk(&models::m4());
        let report = cmd_expand(&spec, &Overrides::default()).unwrap();
        assert!(report.rows.iter().all(|r| r.log_power == 0));
    }

    #[test]
    fn poles_m1_and_m3() {
        let spec = ModelSpec::from_desk(&models::m1());
        let report = cmd_poles(&spec, &Overrides::default()).unwrap();
        let find = |loc: f64| report.rows.iter().find(|r| (r.location - loc).abs() < 1e-9).unwrap();
        assert_eq!(find(1.0).actual_order, 1);
        assert_eq!(find(0.0).actual_order, 2);
        let spec = ModelSpec::from_desk(&models::m3());
        let report = cmd_poles(&spec, &Overrides::default()).unwrap();
        let find = |loc: f64| report.rows.iter().find(|r| (r.location - loc).abs() < 1e-9).unwrap();
        assert_eq!(find(0.0).actual_order, 3);
    }

    #[test]
    fn traces_m1() {
        let spec = ModelSpec::from_desk(&models::m1());
        let report = cmd_traces(&spec, &Overrides::default()).unwrap();
        let pi = std::f64::consts::PI;
        assert!(report.tr_sigma.norm() < 1e-13);
        assert!((report.tr_partial.re + 1.0 / pi).abs() < 1e-12);
        assert!(report.tr_partial_sigma.norm() < 1e-13);
        assert!(report.regularizer.contains("M(Q0)(-z)"));
    }

    #[test]
    fn expand_csv_deterministic() {
        let spec = ModelSpec::from_desk(&models::m2());
        let a = cmd_expand(&spec, &Overrides::default()).unwrap().to_csv();
        let b = cmd_expand(&spec, &Overrides::default()).unwrap().to_csv();
        assert_eq!(a, b);
    }
}
