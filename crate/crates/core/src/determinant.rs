//! Estimators for the von Neumann trace and the log Fuglede–Kadison
//! determinant, each returning an [`EstimateReport`].
//!
//! * [`foelner_logdet`]: `(1/|F_n|) log det f_{F_n}` for positive `f`.
//! * [`lattice_index`]: `|Z[F] / f_F Z[F]|`, exactly, via determinant and
//!   Smith normal form.
//! * [`trace_series_logdet`]: `log c + Σ (-1)^{ν-1}/ν tr(g^ν)` for
//!   `f = c(1 + g)` with `||g||_1 < 1`.
//! * [`lueck_trace`]: `(1/|F_n|) tr Q(f_{F_n})` against the exact
//!   `tr Q(f)`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{FoelnerSequence, FoelnerSet, GroupSpec};
use crate::group_ring::{make_positive, Coefficient, FloatElement, GroupRingElement, IntElement};
use crate::mahler;
use crate::snf;
use crate::truncation::assemble;

/// Lattice indices are cross-checked against Smith normal form up to this size.
pub const SNF_CROSSCHECK_LIMIT: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    FoelnerLogdet,
    LatticeIndex,
    Series,
    Mahler,
    Jensen,
    LueckTrace,
    FiniteEntropy,
    Expansive,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::FoelnerLogdet,
        Method::LatticeIndex,
        Method::Series,
        Method::Mahler,
        Method::Jensen,
        Method::LueckTrace,
        Method::FiniteEntropy,
        Method::Expansive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::FoelnerLogdet => "foelner_logdet",
            Method::LatticeIndex => "lattice_index",
            Method::Series => "series",
            Method::Mahler => "mahler",
            Method::Jensen => "jensen",
            Method::LueckTrace => "lueck_trace",
            Method::FiniteEntropy => "finite_entropy",
            Method::Expansive => "expansive",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub n: usize,
    pub size: usize,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error_bound: Option<f64>,
}

/// Convergence record of one estimator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub method: Method,
    pub steps: Vec<Step>,
    #[serde(rename = "final")]
    pub final_value: f64,
    pub error_bound: Option<f64>,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl EstimateReport {
    /// Builds a report whose final value is the last step.
    pub fn from_steps(method: Method, steps: Vec<Step>, error_bound: Option<f64>, notes: Vec<String>) -> Result<Self> {
        let last = steps
            .last()
            .ok_or_else(|| Error::Config(format!("{method} produced no steps")))?
            .value;
        Ok(Self {
            method,
            steps,
            final_value: last,
            error_bound,
            notes,
        })
    }

    pub fn single(method: Method, n: usize, size: usize, value: f64, error_bound: Option<f64>) -> Self {
        Self {
            method,
            steps: vec![Step {
                n,
                size,
                value,
                error_bound,
            }],
            final_value: value,
            error_bound,
            notes: Vec::new(),
        }
    }

    /// CSV with columns `n,set_size,value,error_bound`, values to 17
    /// significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,set_size,value,error_bound\n");
        for s in &self.steps {
            let eb = s.error_bound.map(fmt_full).unwrap_or_default();
            out.push_str(&format!("{},{},{},{}\n", s.n, s.size, fmt_full(s.value), eb));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// 17 significant digits.
pub fn fmt_full(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Natural log of a positive big integer without overflowing `f64`.
pub fn log_bigint(x: &BigInt) -> f64 {
    assert!(x.is_positive(), "log of non-positive integer");
    let bits = x.bits();
    if bits <= 1000 {
        return num_traits::ToPrimitive::to_f64(x).unwrap().ln();
    }
    let shift = bits - 64;
    let top: BigInt = x >> shift;
    num_traits::ToPrimitive::to_f64(&top).unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

/// Evidence that a self-adjoint `f` is positive in the group von Neumann
/// algebra, supplied by the caller and verified before use.
#[derive(Clone, Debug)]
pub enum PositivityCertificate<T> {
    /// `f = h h*`.
    Factor(GroupRingElement<T>),
    /// `Z^n` only: the symbol is certified nonvanishing on the torus at this
    /// grid resolution and positive at `z = 1`, hence positive everywhere.
    TorusSymbol { points_per_dim: usize },
    /// `f = c (1 + g)` with `c = a_e > 0`, `g = g*` and `||g||_1 < 1`.
    Contraction,
}

impl<T: Coefficient> PositivityCertificate<T> {
    pub fn verify(&self, f: &GroupRingElement<T>) -> Result<()> {
        if !f.is_self_adjoint() {
            return Err(Error::NotSelfAdjoint);
        }
        match self {
            PositivityCertificate::Factor(h) => {
                let hh = make_positive(h);
                let diff = hh.sub(f)?;
                if T::KIND.is_exact() {
                    if !diff.is_zero() {
                        return Err(Error::Certificate("f differs from h h*".into()));
                    }
                } else if diff.l1_norm() > 1e-12 * f.l1_norm().max(1.0) {
                    return Err(Error::Certificate("f differs from h h* beyond rounding".into()));
                }
                Ok(())
            }
            PositivityCertificate::TorusSymbol { points_per_dim } => {
                if !matches!(f.spec(), GroupSpec::FreeAbelian { .. }) {
                    return Err(Error::Certificate("torus symbol certificate needs Z^n".into()));
                }
                let cert = mahler::nonvanishing_certificate(&f.to_float(), *points_per_dim)?;
                if !cert.certified {
                    return Err(Error::Certificate("symbol not certified nonvanishing".into()));
                }
                let at_one = f.terms().fold(T::zero(), |acc, (_, a)| acc + a.clone());
                if !at_one.is_positive() {
                    return Err(Error::Certificate("symbol is negative at z = 1".into()));
                }
                Ok(())
            }
            PositivityCertificate::Contraction => {
                let c = f.trace_e();
                if !c.is_positive() {
                    return Err(Error::Certificate("identity coefficient must be positive".into()));
                }
                let off = f.l1_norm_exact() - c.clone();
                if off >= c {
                    return Err(Error::Certificate(format!(
                        "||f/a_e - 1||_1 = {} is not < 1",
                        off.as_f64() / c.as_f64()
                    )));
                }
                Ok(())
            }
        }
    }
}

/// `(1/|F_n|) log det f_{F_n}` over a Følner sequence, for certified
/// positive `f`. Each truncation is factored independently.
pub fn foelner_logdet<T: Coefficient>(
    f: &GroupRingElement<T>,
    seq: &FoelnerSequence,
    certificate: &PositivityCertificate<T>,
) -> Result<EstimateReport> {
    certificate.verify(f)?;
    let ff = f.to_float();
    let steps = seq
        .steps()
        .par_iter()
        .map(|(n, set)| {
            let value = truncated_logdet(&ff, set)?;
            Ok(Step {
                n: *n,
                size: set.len(),
                value,
                error_bound: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    EstimateReport::from_steps(Method::FoelnerLogdet, steps, None, Vec::new())
}

/// `(1/|F|) log det f_F` by envelope Cholesky.
pub fn truncated_logdet(f: &FloatElement, set: &FoelnerSet) -> Result<f64> {
    let m = assemble(f, set)?;
    Ok(m.log_det_spd()? / set.len() as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeIndex {
    /// `|Z[F] / f_F Z[F]| = |det f_F|`.
    pub index: BigInt,
    /// Elementary divisors, when the Smith-form cross-check ran.
    pub divisors: Option<Vec<BigInt>>,
}

impl LatticeIndex {
    pub fn log_per_site(&self, size: usize) -> f64 {
        log_bigint(&self.index) / size as f64
    }
}

/// The lattice index `|Z[F] / f_F Z[F]|`. Computed as `|det f_F|` and, for
/// `|F| <= 200`, also as the product of Smith-form elementary divisors;
/// the two must agree exactly.
pub fn lattice_index(f: &IntElement, set: &FoelnerSet) -> Result<LatticeIndex> {
    let m = assemble(f, set)?;
    let det = m.determinant().abs();
    let divisors = if set.len() <= SNF_CROSSCHECK_LIMIT {
        let d = snf::snf(&m.to_dense());
        let product = d.iter().fold(BigInt::one(), |acc, x| acc * x);
        assert_eq!(
            product,
            det,
            "Smith form and determinant disagree on |F| = {}",
            set.len()
        );
        Some(d)
    } else {
        None
    };
    if det.is_zero() {
        return Err(Error::InfiniteIndex);
    }
    Ok(LatticeIndex { index: det, divisors })
}

/// `log(lattice index) / |F_n|` along a sequence. Singular truncations are
/// skipped and noted.
pub fn lattice_index_logdet(f: &IntElement, seq: &FoelnerSequence) -> Result<EstimateReport> {
    let results: Vec<_> = seq
        .steps()
        .par_iter()
        .map(|(n, set)| (*n, set.len(), lattice_index(f, set)))
        .collect();
    let mut steps = Vec::new();
    let mut notes = Vec::new();
    for (n, size, r) in results {
        match r {
            Ok(idx) => steps.push(Step {
                n,
                size,
                value: idx.log_per_site(size),
                error_bound: None,
            }),
            Err(Error::InfiniteIndex) => notes.push(format!("n = {n}: truncation singular, skipped")),
            Err(e) => return Err(e),
        }
    }
    if steps.is_empty() {
        return Err(Error::InfiniteIndex);
    }
    EstimateReport::from_steps(Method::LatticeIndex, steps, None, notes)
}

/// Rigorous tail bound `Σ_{ν>M} r^ν/ν <= r^{M+1} / ((M+1)(1-r))`.
pub fn series_tail_bound(r: f64, m: usize) -> f64 {
    r.powi(m as i32 + 1) / ((m as f64 + 1.0) * (1.0 - r))
}

/// Decomposes self-adjoint `f = c(1 + g)` with `c = a_e` and returns
/// `(c, g, ||g||_1)`. Refuses unless `c > 0` and `||g||_1 < 1`.
pub fn contraction_split<T: Coefficient>(f: &GroupRingElement<T>) -> Result<(f64, FloatElement, f64)> {
    let c = f.trace_e();
    if !c.is_positive() {
        return Err(Error::NoCertificate("identity coefficient must be positive".into()));
    }
    let off = f.l1_norm_exact() - c.clone();
    let norm = off.as_f64() / c.as_f64();
    if off >= c {
        return Err(Error::SeriesDivergent { norm });
    }
    let cf = c.as_f64();
    let e = f.spec().identity();
    let g = GroupRingElement::<f64>::from_terms(
        f.spec(),
        f.terms()
            .filter(|(h, _)| **h != e)
            .map(|(h, a)| (h.clone(), a.as_f64() / cf)),
    )?;
    Ok((cf, g, norm))
}

/// `log c + Σ_{ν<=M} (-1)^{ν-1}/ν tr(g^ν)` with `M` the first order whose
/// tail bound drops below `tol` (capped at `max_terms`). Traces of `g^ν`
/// are read off as `tr(g^{⌈ν/2⌉} g^{⌊ν/2⌋})`, so only half the powers
/// are formed.
pub fn trace_series_logdet<T: Coefficient>(
    f: &GroupRingElement<T>,
    tol: f64,
    max_terms: usize,
) -> Result<EstimateReport> {
    if !f.is_self_adjoint() {
        return Err(Error::NotSelfAdjoint);
    }
    let (c, g, _) = contraction_split(f)?;
    let r = g.l1_norm();
    let mut order = 0;
    while order < max_terms && series_tail_bound(r, order) >= tol {
        order += 1;
    }
    let tail = series_tail_bound(r, order);
    let mut notes = Vec::new();
    if tail >= tol {
        notes.push(format!("stopped at max_terms = {max_terms} with tail bound {tail:e}"));
    }

    let half = order.div_ceil(2);
    let mut powers = vec![FloatElement::scalar(f.spec(), 1.0)];
    for k in 1..=half {
        let next = powers[k - 1].convolve(&g)?;
        powers.push(next);
    }
    let mut partial = c.ln();
    let mut steps = vec![Step {
        n: 0,
        size: 1,
        value: partial,
        error_bound: Some(series_tail_bound(r, 0)),
    }];
    for nu in 1..=order {
        let (a, b) = (nu.div_ceil(2), nu / 2);
        let tr = powers[a].trace_of_product(&powers[b])?;
        let sign = if nu % 2 == 1 { 1.0 } else { -1.0 };
        partial += sign * tr / nu as f64;
        steps.push(Step {
            n: nu,
            size: powers[a].support_len(),
            value: partial,
            error_bound: Some(series_tail_bound(r, nu)),
        });
    }
    EstimateReport::from_steps(Method::Series, steps, Some(tail), notes)
}

/// Result of [`lueck_trace`].
#[derive(Clone, Debug)]
pub struct LueckTrace<T> {
    pub report: EstimateReport,
    /// `tr Q(f_{F_n})` per step, in the coefficient type of `f`.
    pub traces: Vec<T>,
    /// `tr_N Q(f)`, the identity coefficient of `Q(f)` in the group ring.
    pub exact_limit: T,
}

/// `(1/|F_n|) tr Q(f_{F_n})` along a sequence, with `Q = Σ q_k T^k`.
pub fn lueck_trace<T: Coefficient>(f: &GroupRingElement<T>, q: &[T], seq: &FoelnerSequence) -> Result<LueckTrace<T>> {
    // exact limit by Horner in the group ring
    let mut qf = GroupRingElement::<T>::zero(f.spec());
    for c in q.iter().rev() {
        qf = qf.convolve(f)?.add(&GroupRingElement::scalar(f.spec(), c.clone()))?;
    }
    let exact_limit = qf.trace_e();

    let traces = seq
        .steps()
        .par_iter()
        .map(|(_, set)| truncated_poly_trace(f, q, set))
        .collect::<Result<Vec<T>>>()?;
    let steps = seq
        .steps()
        .iter()
        .zip(&traces)
        .map(|((n, set), tr)| Step {
            n: *n,
            size: set.len(),
            value: tr.as_f64() / set.len() as f64,
            error_bound: None,
        })
        .collect();
    let report = EstimateReport::from_steps(
        Method::LueckTrace,
        steps,
        None,
        vec![format!("exact limit tr Q(f) = {exact_limit}")],
    )?;
    Ok(LueckTrace {
        report,
        traces,
        exact_limit,
    })
}

/// `tr Q(f_F)`, as `Σ_i (Q(M) e_i)_i` with sparse Horner steps.
pub fn truncated_poly_trace<T: Coefficient>(f: &GroupRingElement<T>, q: &[T], set: &FoelnerSet) -> Result<T> {
    let m = assemble(f, set)?;
    let rows = m.transpose();
    // column access: (M w)_r = Σ_c M[r][c] w_c, pushed forward from each nonzero w_c
    let cols = rows.rows();
    let mut total = T::zero();
    for i in 0..set.len() {
        let mut w: BTreeMap<usize, T> = BTreeMap::new();
        for (k, c) in q.iter().enumerate().rev() {
            if k + 1 < q.len() {
                let mut next: BTreeMap<usize, T> = BTreeMap::new();
                for (j, x) in &w {
                    for (r, v) in &cols[*j] {
                        let e = next.entry(*r).or_insert_with(T::zero);
                        *e = e.clone() + v.clone() * x.clone();
                    }
                }
                w = next;
            }
            if !c.is_zero() {
                let e = w.entry(i).or_insert_with(T::zero);
                *e = e.clone() + c.clone();
            }
        }
        if let Some(x) = w.get(&i) {
            total = total + x.clone();
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{box_set, FoelnerSet, GroupElement, DEFAULT_SIZE_CAP};

    fn z1() -> GroupSpec {
        GroupSpec::free_abelian(1).unwrap()
    }

    fn f5() -> IntElement {
        IntElement::parse(&z1(), "5\t(0)\n1\t(1)\n1\t(-1)\n").unwrap()
    }

    /// log((5 + √21)/2), the Mahler measure of 5 + z + 1/z.
    fn target() -> f64 {
        ((5.0 + 21f64.sqrt()) / 2.0).ln()
    }

    /// det of tridiag(5;1) of size n by the three-term recurrence.
    fn tridiag_det(n: usize) -> BigInt {
        let (mut a, mut b) = (BigInt::one(), BigInt::from(5));
        for _ in 1..n {
            let c = BigInt::from(5) * &b - &a;
            a = b;
            b = c;
        }
        b
    }

    fn c2() -> GroupSpec {
        GroupSpec::cyclic(2).unwrap()
    }

    fn whole(spec: &GroupSpec) -> FoelnerSet {
        let n = spec.order().unwrap();
        FoelnerSet::new(spec, (0..n).map(GroupElement::Finite).collect()).unwrap()
    }

    #[test]
    fn foelner_logdet_z1_converges() {
        let seq = FoelnerSequence::boxes(1, (1..=10).map(|k| 100 * k), DEFAULT_SIZE_CAP).unwrap();
        let r = foelner_logdet(&f5(), &seq, &PositivityCertificate::Contraction).unwrap();
        assert_eq!(r.steps.len(), 10);
        assert_eq!(r.final_value, r.steps.last().unwrap().value);
        // recurrence oracle at n = 100
        let oracle = log_bigint(&tridiag_det(100)) / 100.0;
        assert!((r.steps[0].value - oracle).abs() < 1e-12);
        assert!((r.final_value - target()).abs() < 1e-4);
        for w in r.steps.windows(2) {
            assert!((w[1].value - target()).abs() < (w[0].value - target()).abs());
        }
    }

    #[test]
    fn foelner_logdet_identity_and_finite() {
        let e = IntElement::scalar(&z1(), BigInt::one());
        let seq = FoelnerSequence::boxes(1, [3, 10], DEFAULT_SIZE_CAP).unwrap();
        let r = foelner_logdet(&e, &seq, &PositivityCertificate::Contraction).unwrap();
        assert!(r.steps.iter().all(|s| s.value == 0.0));

        let f = IntElement::parse(&c2(), "3\t(0)\n1\t(1)\n").unwrap();
        let seq = FoelnerSequence::from_sets(vec![(1, whole(&c2()))]).unwrap();
        let r = foelner_logdet(&f, &seq, &PositivityCertificate::Contraction).unwrap();
        assert!((r.final_value - 0.5 * 8f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn foelner_logdet_rejects_bad_certificates() {
        let seq = FoelnerSequence::boxes(1, [5], DEFAULT_SIZE_CAP).unwrap();
        let shift = IntElement::parse(&z1(), "1\t(1)\n").unwrap();
        assert!(matches!(
            foelner_logdet(&shift, &seq, &PositivityCertificate::Contraction),
            Err(Error::NotSelfAdjoint)
        ));
        // 1 + 2z + 2/z is self-adjoint but not positive
        let g = IntElement::parse(&z1(), "1\t(0)\n2\t(1)\n2\t(-1)\n").unwrap();
        assert!(matches!(
            foelner_logdet(&g, &seq, &PositivityCertificate::Contraction),
            Err(Error::Certificate(_))
        ));
        let wrong_factor = PositivityCertificate::Factor(IntElement::parse(&z1(), "2\t(0)\n").unwrap());
        assert!(matches!(
            foelner_logdet(&g, &seq, &wrong_factor),
            Err(Error::Certificate(_))
        ));
        // torus route refuses a symbol that changes sign
        assert!(foelner_logdet(&g, &seq, &PositivityCertificate::TorusSymbol { points_per_dim: 64 }).is_err());
        // a factor that does not reproduce f is rejected
        let wrong = PositivityCertificate::Factor(IntElement::parse(&z1(), "1\t(0)\n2\t(1)\n").unwrap());
        let hh = make_positive(&IntElement::parse(&z1(), "1\t(0)\n1\t(1)\n").unwrap());
        let five = FoelnerSequence::boxes(1, [5], DEFAULT_SIZE_CAP).unwrap();
        assert!(matches!(foelner_logdet(&hh, &five, &wrong), Err(Error::Certificate(_))));
        // 2 + z + 1/z truncations are positive definite even though the symbol vanishes at z = -1
        let right = PositivityCertificate::Factor(IntElement::parse(&z1(), "1\t(0)\n1\t(1)\n").unwrap());
        assert!(foelner_logdet(&hh, &five, &right).is_ok());
    }

    #[test]
    fn lattice_index_examples() {
        let f = IntElement::parse(&c2(), "3\t(0)\n1\t(1)\n").unwrap();
        let idx = lattice_index(&f, &whole(&c2())).unwrap();
        assert_eq!(idx.index, BigInt::from(8));
        assert_eq!(idx.divisors.unwrap(), vec![BigInt::from(1), BigInt::from(8)]);

        let e = IntElement::scalar(&z1(), BigInt::one());
        assert_eq!(
            lattice_index(&e, &box_set(1, 7, DEFAULT_SIZE_CAP).unwrap())
                .unwrap()
                .index,
            BigInt::one()
        );

        let idx = lattice_index(&f5(), &box_set(1, 3, DEFAULT_SIZE_CAP).unwrap()).unwrap();
        assert_eq!(idx.index, BigInt::from(115));
        assert_eq!(idx.index, tridiag_det(3));

        let singular = IntElement::parse(&c2(), "1\t(0)\n1\t(1)\n").unwrap();
        assert!(matches!(
            lattice_index(&singular, &whole(&c2())),
            Err(Error::InfiniteIndex)
        ));
    }

    #[test]
    fn lattice_index_matches_recurrence_beyond_snf_limit() {
        let idx = lattice_index(&f5(), &box_set(1, 400, DEFAULT_SIZE_CAP).unwrap()).unwrap();
        assert!(idx.divisors.is_none());
        assert_eq!(idx.index, tridiag_det(400));
    }

    #[test]
    fn lattice_sequence_skips_singular_entries() {
        // 1 + z + z^2 truncated to {0,1,2} on Z/3 is singular; on a box of Z it is not
        let c3 = GroupSpec::cyclic(3).unwrap();
        let f = IntElement::parse(&c3, "1\t(0)\n1\t(1)\n1\t(2)\n").unwrap();
        let small = FoelnerSet::new(&c3, vec![GroupElement::Finite(0)]).unwrap();
        let seq = FoelnerSequence::from_sets(vec![(1, small), (3, whole(&c3))]).unwrap();
        let r = lattice_index_logdet(&f, &seq).unwrap();
        assert_eq!(r.steps.len(), 1);
        assert_eq!(r.notes.len(), 1);
    }

    #[test]
    fn series_examples() {
        let r = trace_series_logdet(&f5(), 1e-10, 1000).unwrap();
        assert!(r.error_bound.unwrap() < 1e-10);
        assert!((r.final_value - target()).abs() < 1e-10);

        let two = IntElement::scalar(&z1(), BigInt::from(2));
        let r = trace_series_logdet(&two, 1e-10, 10).unwrap();
        assert_eq!(r.final_value, 2f64.ln());
        assert_eq!(r.error_bound, Some(0.0));
    }

    #[test]
    fn series_refusals() {
        let shift = IntElement::parse(&z1(), "3\t(0)\n1\t(1)\n").unwrap();
        assert!(matches!(
            trace_series_logdet(&shift, 1e-8, 100),
            Err(Error::NotSelfAdjoint)
        ));
        let wide = IntElement::parse(&z1(), "2\t(0)\n1\t(1)\n1\t(-1)\n").unwrap();
        assert!(matches!(
            trace_series_logdet(&wide, 1e-8, 100),
            Err(Error::SeriesDivergent { .. })
        ));
        let neg = IntElement::parse(&z1(), "-5\t(0)\n").unwrap();
        assert!(trace_series_logdet(&neg, 1e-8, 100).is_err());
    }

    #[test]
    fn series_tail_bound_is_geometric() {
        assert!((series_tail_bound(0.5, 0) - 1.0).abs() < 1e-15);
        let exact: f64 = (3..200).map(|k| 0.4f64.powi(k) / k as f64).sum();
        assert!(series_tail_bound(0.4, 2) >= exact);
    }

    #[test]
    fn lueck_trace_examples() {
        let seq = FoelnerSequence::boxes(1, [5, 50], DEFAULT_SIZE_CAP).unwrap();
        let shift = IntElement::parse(&z1(), "1\t(1)\n").unwrap();
        let r = lueck_trace(&shift, &[BigInt::zero(), BigInt::one()], &seq).unwrap();
        assert!(r.exact_limit.is_zero());
        assert!(r.traces.iter().all(|t| t.is_zero()));

        let s = IntElement::parse(&z1(), "1\t(1)\n1\t(-1)\n").unwrap();
        let q = [BigInt::zero(), BigInt::zero(), BigInt::one()];
        let r = lueck_trace(&s, &q, &seq).unwrap();
        assert_eq!(r.exact_limit, BigInt::from(2));
        assert_eq!(r.traces, vec![BigInt::from(8), BigInt::from(98)]);

        let f = IntElement::parse(&c2(), "3\t(0)\n1\t(1)\n").unwrap();
        let seq = FoelnerSequence::from_sets(vec![(1, whole(&c2()))]).unwrap();
        let r = lueck_trace(&f, &q, &seq).unwrap();
        assert_eq!(r.exact_limit, BigInt::from(10));
        assert_eq!(r.traces, vec![BigInt::from(20)]);
        assert_eq!(r.report.final_value, 10.0);
    }

    #[test]
    fn poly_trace_matches_dense_power() {
        let heis = GroupSpec::Heisenberg;
        let set = crate::group::ball(&heis, &heis.standard_generators(), 2, DEFAULT_SIZE_CAP).unwrap();
        let f = IntElement::parse(&heis, "2\t(0,0,0)\n1\t(1,0,0)\n-3\t(0,1,1)\n").unwrap();
        let q: Vec<BigInt> = [1, -2, 0, 3].iter().map(|&x| BigInt::from(x)).collect();
        let m = assemble(&f, &set).unwrap().to_dense();
        let n = m.len();
        let mut power = snf::identity(n);
        let mut acc = BigInt::zero();
        for c in &q {
            acc += c * (0..n).map(|i| power[i][i].clone()).sum::<BigInt>();
            power = snf::mat_mul(&power, &m);
        }
        assert_eq!(truncated_poly_trace(&f, &q, &set).unwrap(), acc);
    }

    #[test]
    fn report_serialisation() {
        let r = EstimateReport::single(Method::Mahler, 4096, 4096, 1.5, Some(1e-12));
        let json = r.to_json().unwrap();
        assert!(json.contains("\"final\": 1.5"));
        assert!(json.contains("\"method\": \"mahler\""));
        let back: EstimateReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
        assert_eq!(
            r.to_csv(),
            "n,set_size,value,error_bound\n4096,4096,1.5000000000000000e0,9.9999999999999998e-13\n"
        );
    }

    #[test]
    fn log_bigint_large() {
        let x = BigInt::from(3).pow(2000);
        assert!((log_bigint(&x) - 2000.0 * 3f64.ln()).abs() < 1e-9);
    }
}
