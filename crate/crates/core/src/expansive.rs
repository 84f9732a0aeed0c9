//! Certificates of `L^1`-invertibility, which make the action on the
//! dual of `ZΓ / ZΓ f` expansive with constant `ε = 1 / (3 ||f||_1)`, and
//! truncated Neumann-series inverses.
//!
//! An uncertified element is not claimed to be non-expansive. For
//! virtually nilpotent groups `L^1`-units and units of the von Neumann
//! algebra coincide, but nothing here decides the latter in general.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupSpec};
use crate::group_ring::{Coefficient, FloatElement, GroupRingElement};
use crate::linalg::exact_determinant;
use crate::mahler::{self, DEFAULT_GRID_CAP};

/// Grid resolutions tried, in order, by the torus route.
pub const TORUS_RESOLUTIONS: [usize; 4] = [64, 256, 1024, 4096];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    ContractionSeries,
    TorusNonvanishing,
    FiniteUnit,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpansivenessCertificate {
    pub is_certified: bool,
    pub route: Option<Route>,
    /// `1 / (3 ||f||_1)`, present iff certified.
    pub epsilon: Option<f64>,
    /// The same constant as an exact fraction, for exact coefficients.
    pub epsilon_exact: Option<String>,
    pub l1_norm: f64,
    /// `||f / a_e - 1||_1` when `a_e != 0`.
    pub contraction_norm: Option<f64>,
    pub details: Vec<String>,
}

/// Tries the contraction route, then (on `Z^n`) the torus route, then (on
/// finite groups) the determinant route.
pub fn certify_expansive<T: Coefficient>(f: &GroupRingElement<T>) -> Result<ExpansivenessCertificate> {
    if f.is_zero() {
        return Err(Error::ZeroElement);
    }
    let mut details = Vec::new();
    let mut route = None;

    // (i) f = c(1 + g), ||g||_1 < 1
    let c = f.trace_e();
    let contraction_norm = if c.is_zero() {
        details.push("contraction: identity coefficient is zero".to_string());
        None
    } else {
        let off = f.l1_norm_exact() - c.abs();
        let norm = off.as_f64() / c.abs().as_f64();
        if off < c.abs() {
            details.push(format!("contraction: ||g||_1 = {norm} < 1"));
            route = Some(Route::ContractionSeries);
        } else {
            details.push(format!("contraction: ||g||_1 = {norm} >= 1"));
        }
        Some(norm)
    };

    // (ii) nonvanishing symbol on the torus
    if route.is_none() {
        if let GroupSpec::FreeAbelian { rank } = f.spec() {
            for m in TORUS_RESOLUTIONS {
                if m.checked_pow(*rank as u32).is_none_or(|t| t > DEFAULT_GRID_CAP) {
                    break;
                }
                let cert = mahler::nonvanishing_certificate(f, m)?;
                if cert.certified {
                    details.push(format!(
                        "torus: certified at m = {m} (grid min {}, threshold {})",
                        cert.grid_min, cert.threshold
                    ));
                    route = Some(Route::TorusNonvanishing);
                    break;
                }
                details.push(format!("torus: not certified at m = {m} (grid min {})", cert.grid_min));
            }
        }
    }

    // (iii) finite group: R_f invertible
    if route.is_none() {
        if let GroupSpec::Finite(_) = f.spec() {
            let det = finite_determinant_sign(f)?;
            if det.is_zero() {
                details.push("finite: det R_f = 0".to_string());
            } else {
                details.push(format!("finite: det R_f = {det} != 0"));
                route = Some(Route::FiniteUnit);
            }
        }
    }

    let l1 = f.l1_norm();
    let certified = route.is_some();
    let (epsilon, epsilon_exact) = if certified {
        let exact = T::KIND.is_exact().then(|| {
            let norm = f.l1_norm_exact().to_rational().expect("exact coefficient");
            (BigRational::one() / (norm * BigRational::from_integer(BigInt::from(3)))).to_string()
        });
        (Some(1.0 / (3.0 * l1)), exact)
    } else {
        details.push("uncertified; no claim about expansiveness is made".to_string());
        (None, None)
    };
    Ok(ExpansivenessCertificate {
        is_certified: certified,
        route,
        epsilon,
        epsilon_exact,
        l1_norm: l1,
        contraction_norm,
        details,
    })
}

/// Exact `det R_f` (up to a positive factor) on a finite group; coefficients
/// are made integral by clearing denominators.
fn finite_determinant_sign<T: Coefficient>(f: &GroupRingElement<T>) -> Result<BigInt> {
    let order = f.spec().order().expect("finite group");
    let coeffs: Vec<(GroupElement, BigRational)> = f
        .terms()
        .map(|(g, a)| {
            a.to_rational()
                .map(|r| (g.clone(), r))
                .ok_or_else(|| Error::CoefficientKind("non-finite coefficient".into()))
        })
        .collect::<Result<_>>()?;
    let lcm = coeffs.iter().fold(BigInt::one(), |acc, (_, r)| acc.lcm(r.denom()));
    let scaled = GroupRingElement::<BigInt>::from_terms(
        f.spec(),
        coeffs
            .into_iter()
            .map(|(g, r)| (g, (r * BigRational::from_integer(lcm.clone())).to_integer())),
    )?;
    let m = crate::finite_entropy::right_multiplication_matrix(&scaled)?;
    Ok(exact_determinant(order, m.rows()))
}

#[derive(Clone, Debug)]
pub struct NeumannInverse {
    pub inverse: FloatElement,
    /// Number of series terms after the constant one.
    pub terms: usize,
    /// `||f^{-1} - inverse||_1 <= ||g||^{M+1} / (|c| (1 - ||g||))`.
    pub error_bound: f64,
    /// `||f · inverse - e||_1`, computed.
    pub residual: f64,
    /// `residual <= tol · ||f||_1`.
    pub residual_ok: bool,
}

/// Truncated `f^{-1} = (1/c) Σ_ν (-g)^ν` for `f = c(1 + g)`, `||g||_1 < 1`,
/// with enough terms that the `L^1` error bound is at most `tol`.
pub fn neumann_inverse<T: Coefficient>(f: &GroupRingElement<T>, tol: f64) -> Result<NeumannInverse> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Config("tolerance must be positive".into()));
    }
    let c = f.trace_e().as_f64();
    if c == 0.0 {
        return Err(Error::NoCertificate(
            "contraction unavailable: identity coefficient is zero".into(),
        ));
    }
    let e = f.spec().identity();
    let g = FloatElement::from_terms(
        f.spec(),
        f.terms()
            .filter(|(h, _)| **h != e)
            .map(|(h, a)| (h.clone(), a.as_f64() / c)),
    )?;
    let r = g.l1_norm();
    if r >= 1.0 {
        return Err(Error::NoCertificate(format!(
            "contraction unavailable: ||g||_1 = {r} >= 1"
        )));
    }
    let bound = |m: usize| r.powi(m as i32 + 1) / (c.abs() * (1.0 - r));
    let mut terms = 0;
    while bound(terms) > tol {
        terms += 1;
    }
    let minus_g = g.scale(&-1.0);
    let mut power = FloatElement::scalar(f.spec(), 1.0);
    let mut sum = power.clone();
    for _ in 0..terms {
        power = power.convolve(&minus_g)?;
        sum = sum.add(&power)?;
    }
    let inverse = sum.scale(&(1.0 / c));
    let residual = f
        .to_float()
        .convolve(&inverse)?
        .sub(&FloatElement::scalar(f.spec(), 1.0))?
        .l1_norm();
    Ok(NeumannInverse {
        inverse,
        terms,
        error_bound: bound(terms),
        residual,
        residual_ok: residual <= tol * f.l1_norm(),
    })
}
