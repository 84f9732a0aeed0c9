//! Exact entropy and determinant of principal actions over finite groups.
//!
//! For finite `Γ` the dual of `ZΓ / ZΓ f` is finite exactly when right
//! multiplication `R_f` is injective, and then
//! `h_f = (1/|Γ|) log |ZΓ / ZΓ f|`; otherwise `h_f = ∞`. The determinant
//! side is `(1/2|Γ|) Σ log λ` over the nonzero eigenvalues of `R_{ff*}`.
//!
//! Matrix convention: `R_f` on the group basis is the truncation of `f*`
//! to the whole group (see [`crate::truncation`]).

use nalgebra::SymmetricEigen;
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::determinant::log_bigint;
use crate::error::{Error, Result};
use crate::group::{FoelnerSet, GroupElement, GroupSpec};
use crate::group_ring::{make_positive, IntElement};
use crate::snf;
use crate::truncation::{assemble, TruncatedMatrix};

#[derive(Clone, Debug, PartialEq)]
pub struct FiniteEntropyResult {
    /// `|ZΓ / ZΓ f|`, `None` when infinite.
    pub index: Option<BigInt>,
    /// `f64::INFINITY` when the index is infinite.
    pub h_f: f64,
    pub logdet_eigen: f64,
    pub is_unit: bool,
}

impl FiniteEntropyResult {
    /// JSON row; `INFINITE` marks the non-unit case.
    pub fn to_json(&self) -> Value {
        let index = match &self.index {
            Some(i) => match i.to_u64() {
                Some(u) => json!(u),
                None => json!(i.to_string()),
            },
            None => json!("INFINITE"),
        };
        let h_f = if self.h_f.is_finite() {
            json!(self.h_f)
        } else {
            json!("INFINITE")
        };
        json!({
            "index": index,
            "h_f": h_f,
            "logdet_eigen": self.logdet_eigen,
            "is_unit": self.is_unit,
        })
    }
}

fn whole_group(spec: &GroupSpec) -> Result<FoelnerSet> {
    match spec {
        GroupSpec::Finite(t) => FoelnerSet::new(spec, (0..t.order()).map(GroupElement::Finite).collect()),
        _ => Err(Error::SpecMismatch(format!(
            "finite group required, got the {} group",
            spec.kind_name()
        ))),
    }
}

/// Matrix of right multiplication by `f` on the group basis.
pub fn right_multiplication_matrix(f: &IntElement) -> Result<TruncatedMatrix<BigInt>> {
    assemble(&f.star(), &whole_group(f.spec())?)
}

/// Lattice-index entropy together with the eigenvalue determinant.
pub fn finite_entropy(f: &IntElement) -> Result<FiniteEntropyResult> {
    let m = right_multiplication_matrix(f)?;
    let order = m.dim();
    let divisors = snf::snf(&m.to_dense());
    let product = divisors.iter().fold(BigInt::one(), |acc, d| acc * d);
    assert_eq!(product, m.determinant().abs(), "Smith form and determinant disagree");
    let logdet_eigen = if f.is_zero() {
        f64::NEG_INFINITY
    } else {
        finite_logdet_eigen(f)?
    };
    if product.is_zero() {
        return Ok(FiniteEntropyResult {
            index: None,
            h_f: f64::INFINITY,
            logdet_eigen,
            is_unit: false,
        });
    }
    let h_f = log_bigint(&product) / order as f64;
    Ok(FiniteEntropyResult {
        index: Some(product),
        h_f,
        logdet_eigen,
        is_unit: true,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenLogdet {
    pub value: f64,
    /// Exact rank of `R_{ff*}` from its Smith form.
    pub rank: usize,
    /// Number of eigenvalues above `cutoff`; expected to equal `rank`.
    pub float_rank: usize,
    /// Eigenvalues of `R_{ff*}` in descending order.
    pub eigenvalues: Vec<f64>,
    /// `σ_max · |Γ| · ε · 16`.
    pub cutoff: f64,
}

/// `(1/2|Γ|) Σ log λ` over the nonzero eigenvalues `λ` of `R_{ff*}`.
pub fn finite_logdet_eigen(f: &IntElement) -> Result<f64> {
    Ok(finite_logdet_eigen_detailed(f)?.value)
}

/// As [`finite_logdet_eigen`]; the number of eigenvalues kept is the exact
/// rank, and the float cutoff must agree with it.
pub fn finite_logdet_eigen_detailed(f: &IntElement) -> Result<EigenLogdet> {
    if f.is_zero() {
        return Err(Error::ZeroElement);
    }
    let ffstar = make_positive(f);
    let m = right_multiplication_matrix(&ffstar)?;
    let order = m.dim();
    let rank = snf::rank(&m.to_dense());
    let eig = SymmetricEigen::new(m.to_dense_f64());
    let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(|a, b| b.total_cmp(a));
    let sigma_max = eigenvalues.first().copied().unwrap_or(0.0).abs();
    let cutoff = sigma_max * order as f64 * f64::EPSILON * 16.0;
    let float_rank = eigenvalues.iter().filter(|&&l| l > cutoff).count();
    let logs: Vec<f64> = eigenvalues[..rank].iter().map(|l| l.ln()).collect();
    let value = crate::linalg::pairwise_sum(&logs) / (2.0 * order as f64);
    Ok(EigenLogdet {
        value,
        rank,
        float_rank,
        eigenvalues,
        cutoff,
    })
}

/// `true` if `f` is invertible, i.e. `det R_f != 0`.
pub fn is_unit(f: &IntElement) -> Result<bool> {
    Ok(!right_multiplication_matrix(f)?.determinant().is_zero())
}
