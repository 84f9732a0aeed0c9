//! Finitely supported elements `f = Σ a_γ γ` of the group ring, with exact
//! integer, exact rational or floating-point coefficients.

use std::collections::BTreeMap;
use std::fmt::{self, Debug, Display};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive};

use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoeffKind {
    ExactInt,
    ExactRational,
    Float,
}

impl CoeffKind {
    pub fn is_exact(self) -> bool {
        !matches!(self, CoeffKind::Float)
    }
}

impl Display for CoeffKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoeffKind::ExactInt => "exact_int",
            CoeffKind::ExactRational => "exact_rational",
            CoeffKind::Float => "float",
        })
    }
}

/// Scalar type of a group-ring element. Real scalars only, so complex
/// conjugation in the involution is the identity.
pub trait Coefficient:
    Signed + PartialOrd + Clone + Debug + Display + FromStr + ToPrimitive + FromPrimitive + Send + Sync + 'static
{
    const KIND: CoeffKind;

    fn as_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Exact rational value; `None` only for non-finite floats.
    fn to_rational(&self) -> Option<BigRational>;
}

impl Coefficient for BigInt {
    const KIND: CoeffKind = CoeffKind::ExactInt;

    fn to_rational(&self) -> Option<BigRational> {
        Some(BigRational::from_integer(self.clone()))
    }
}

impl Coefficient for BigRational {
    const KIND: CoeffKind = CoeffKind::ExactRational;

    fn to_rational(&self) -> Option<BigRational> {
        Some(self.clone())
    }
}

impl Coefficient for f64 {
    const KIND: CoeffKind = CoeffKind::Float;

    fn to_rational(&self) -> Option<BigRational> {
        BigRational::from_float(*self)
    }
}

/// `Σ a_γ γ` with finite support and no stored zero coefficients.
#[derive(Clone, PartialEq)]
pub struct GroupRingElement<T> {
    spec: GroupSpec,
    terms: BTreeMap<GroupElement, T>,
}

pub type IntElement = GroupRingElement<BigInt>;
pub type RationalElement = GroupRingElement<BigRational>;
pub type FloatElement = GroupRingElement<f64>;

impl<T: Debug> Debug for GroupRingElement<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map()
            .entries(self.terms.iter().map(|(g, a)| (g.to_string(), a)))
            .finish()
    }
}

impl<T: Coefficient> GroupRingElement<T> {
    pub fn zero(spec: &GroupSpec) -> Self {
        Self {
            spec: spec.clone(),
            terms: BTreeMap::new(),
        }
    }

    /// `c · e`.
    pub fn scalar(spec: &GroupSpec, c: T) -> Self {
        Self::from_terms_unchecked(spec, [(spec.identity(), c)])
    }

    pub fn basis(spec: &GroupSpec, g: GroupElement) -> Result<Self> {
        Self::from_terms(spec, [(g, T::one())])
    }

    /// Builds an element, summing repeated group elements and dropping zeros.
    pub fn from_terms(spec: &GroupSpec, terms: impl IntoIterator<Item = (GroupElement, T)>) -> Result<Self> {
        let mut out = Self::zero(spec);
        for (g, a) in terms {
            spec.validate(&g)?;
            out.add_term(g, a);
        }
        Ok(out)
    }

    fn from_terms_unchecked(spec: &GroupSpec, terms: impl IntoIterator<Item = (GroupElement, T)>) -> Self {
        let mut out = Self::zero(spec);
        for (g, a) in terms {
            out.add_term(g, a);
        }
        out
    }

    fn add_term(&mut self, g: GroupElement, a: T) {
        if a.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(g) {
            Entry::Vacant(v) => {
                v.insert(a);
            }
            Entry::Occupied(mut o) => {
                let s = o.get().clone() + a;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    pub fn kind(&self) -> CoeffKind {
        T::KIND
    }

    pub fn terms(&self) -> impl Iterator<Item = (&GroupElement, &T)> + '_ {
        self.terms.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &GroupElement> + '_ {
        self.terms.keys()
    }

    pub fn support_len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, g: &GroupElement) -> T {
        self.terms.get(g).cloned().unwrap_or_else(T::zero)
    }

    fn check_spec(&self, other: &Self) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::SpecMismatch(format!(
                "{} element combined with {} element",
                self.spec.kind_name(),
                other.spec.kind_name()
            )));
        }
        Ok(())
    }

    /// Group-ring product `(Σ a_γ γ)(Σ b_δ δ) = Σ a_γ b_δ (γδ)`.
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        self.check_spec(other)?;
        let mut acc: BTreeMap<GroupElement, T> = BTreeMap::new();
        for (g, a) in &self.terms {
            for (h, b) in &other.terms {
                let p = self.spec.mul(g, h);
                let v = a.clone() * b.clone();
                match acc.get_mut(&p) {
                    Some(x) => *x = x.clone() + v,
                    None => {
                        acc.insert(p, v);
                    }
                }
            }
        }
        acc.retain(|_, v| !v.is_zero());
        Ok(Self {
            spec: self.spec.clone(),
            terms: acc,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_spec(other)?;
        let mut out = self.clone();
        for (g, a) in &other.terms {
            out.add_term(g.clone(), a.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&-T::one()))
    }

    pub fn scale(&self, c: &T) -> Self {
        Self::from_terms_unchecked(
            &self.spec,
            self.terms.iter().map(|(g, a)| (g.clone(), a.clone() * c.clone())),
        )
    }

    /// `f^ν` in the group ring; `f^0 = e`.
    pub fn pow(&self, nu: u32) -> Self {
        let mut out = Self::scalar(&self.spec, T::one());
        for _ in 0..nu {
            out = out.convolve(self).expect("same spec");
        }
        out
    }

    /// The involution `f* = Σ a_γ γ^{-1}`.
    pub fn star(&self) -> Self {
        Self::from_terms_unchecked(
            &self.spec,
            self.terms.iter().map(|(g, a)| (self.spec.inv(g), a.clone())),
        )
    }

    pub fn is_self_adjoint(&self) -> bool {
        *self == self.star()
    }

    /// `Σ |a_γ|` as a coefficient (exact for exact kinds).
    pub fn l1_norm_exact(&self) -> T {
        self.terms.values().fold(T::zero(), |acc, a| acc + a.abs())
    }

    /// `Σ |a_γ|`.
    pub fn l1_norm(&self) -> f64 {
        self.l1_norm_exact().as_f64()
    }

    /// Coefficient of the identity, i.e. the von Neumann trace on the group ring.
    pub fn trace_e(&self) -> T {
        self.coeff(&self.spec.identity())
    }

    /// `Σ a_γ b_{γ^{-1}}`, the identity coefficient of `self · other`,
    /// computed without forming the product.
    pub fn trace_of_product(&self, other: &Self) -> Result<T> {
        self.check_spec(other)?;
        let (small, large) = if self.terms.len() <= other.terms.len() {
            (self, other)
        } else {
            (other, self)
        };
        Ok(small
            .terms
            .iter()
            .fold(T::zero(), |acc, (g, a)| match large.terms.get(&self.spec.inv(g)) {
                Some(b) => acc + a.clone() * b.clone(),
                None => acc,
            }))
    }

    pub fn map_coeffs<U: Coefficient>(&self, f: impl Fn(&T) -> U) -> GroupRingElement<U> {
        GroupRingElement::from_terms_unchecked(&self.spec, self.terms.iter().map(|(g, a)| (g.clone(), f(a))))
    }

    pub fn to_float(&self) -> FloatElement {
        self.map_coeffs(|a| a.as_f64())
    }

    /// Text form: one `coeff<TAB>element` line per support element, in
    /// element order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (g, a) in &self.terms {
            out.push_str(&format!("{a}\t{g}\n"));
        }
        out
    }

    /// Parses the text form. Blank lines and `#` comments are skipped;
    /// repeated elements are summed.
    pub fn parse(spec: &GroupSpec, text: &str) -> Result<Self> {
        let mut out = Self::zero(spec);
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let perr = |msg: String| Error::Parse { line: i + 1, msg };
            let (coeff, elem) = line
                .split_once(char::is_whitespace)
                .ok_or_else(|| perr(format!("expected `coeff<TAB>element`, got `{line}`")))?;
            let a = coeff
                .parse::<T>()
                .map_err(|_| perr(format!("bad {} coefficient `{coeff}`", T::KIND)))?;
            let g = spec.parse_element(elem).map_err(|e| perr(e.to_string()))?;
            out.add_term(g, a);
        }
        Ok(out)
    }
}

impl RationalElement {
    /// Returns the element with integer coefficients when all denominators are 1.
    pub fn to_integral(&self) -> Option<IntElement> {
        let mut out = IntElement::zero(&self.spec);
        for (g, a) in &self.terms {
            if !a.is_integer() {
                return None;
            }
            out.terms.insert(g.clone(), a.to_integer());
        }
        Some(out)
    }
}

impl IntElement {
    pub fn to_rational(&self) -> RationalElement {
        self.map_coeffs(|a| BigRational::from_integer(a.clone()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct L1Unit<T> {
    pub h: GroupRingElement<T>,
    /// `||g||_1 < 1` was verified, so `h = N(1+g)` is invertible in `L^1`.
    pub is_l1_unit: bool,
}

/// `h = N (1 + g)` for a contraction `g` (`||g||_1 < 1`, strict).
pub fn build_l1_unit<T: Coefficient>(g: &GroupRingElement<T>, n: u64) -> Result<L1Unit<T>> {
    if n == 0 {
        return Err(Error::InvalidGroup("N must be a positive integer".into()));
    }
    let norm = g.l1_norm_exact();
    if norm >= T::one() {
        return Err(Error::NotAContraction { norm: norm.as_f64() });
    }
    let one_plus_g = g.add(&GroupRingElement::scalar(g.spec(), T::one()))?;
    let n = T::from_u64(n).expect("N representable");
    Ok(L1Unit {
        h: one_plus_g.scale(&n),
        is_l1_unit: true,
    })
}

/// `h h*`, self-adjoint and positive.
pub fn make_positive<T: Coefficient>(h: &GroupRingElement<T>) -> GroupRingElement<T> {
    h.convolve(&h.star()).expect("same spec")
}
