//! Mahler measure of Laurent polynomials on `Z^n`: tensor trapezoid rule
//! on the torus, a certified non-vanishing check, and a one-variable
//! Jensen-formula oracle from companion-matrix roots.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupSpec};
use crate::group_ring::{Coefficient, GroupRingElement};
use crate::linalg::pairwise_sum;

/// Default cap on the total number of torus nodes.
pub const DEFAULT_GRID_CAP: usize = 1 << 24;

/// Roots within this distance of the unit circle void the Jensen oracle.
pub const UNIT_CIRCLE_BAND: f64 = 1e-8;

const CHUNK: usize = 4096;

/// Tensor grid of `m^n` nodes `(2π j_1/m, .., 2π j_n/m)`, row-major in
/// `(j_1, .., j_n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TorusGrid {
    pub dim: usize,
    pub points_per_dim: usize,
}

impl TorusGrid {
    pub fn new(dim: usize, points_per_dim: usize) -> Result<Self> {
        Self::with_cap(dim, points_per_dim, DEFAULT_GRID_CAP)
    }

    pub fn with_cap(dim: usize, points_per_dim: usize, cap: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidGroup("torus dimension must be at least 1".into()));
        }
        if points_per_dim < 2 {
            return Err(Error::Config("torus grid needs at least 2 points per dimension".into()));
        }
        let total = u32::try_from(dim)
            .ok()
            .and_then(|d| points_per_dim.checked_pow(d))
            .filter(|&t| t <= cap)
            .ok_or(Error::SizeCap { size: usize::MAX, cap })?;
        debug_assert!(total >= 2);
        Ok(Self { dim, points_per_dim })
    }

    pub fn total_points(&self) -> usize {
        self.points_per_dim.pow(self.dim as u32)
    }
}

/// `ω^k = exp(2πik/m)` for `k < m`, built by octant reduction so that the
/// table is exactly symmetric (`ω^{k+m/2} = -ω^k` bit-for-bit when `m` is even).
fn roots_of_unity(m: usize) -> Vec<Complex64> {
    (0..m)
        .map(|k| {
            // angle 2πk/m = (π/4) * (8k/m); reduce 8k into octant + remainder
            let num = 8 * k as u128;
            let oct = (num / m as u128) as u32;
            let rem = (num % m as u128) as f64 / m as f64; // in [0, 1)
            let (c, s) = octant_cos_sin(oct, rem);
            Complex64::new(c, s)
        })
        .collect()
}

/// cos/sin of `(π/4)(oct + t)` with `t ∈ [0, 1)`, using only angles in `[0, π/4]`.
fn octant_cos_sin(oct: u32, t: f64) -> (f64, f64) {
    let q = PI / 4.0;
    let (a, b) = ((q * t).cos(), (q * t).sin()); // angle t in first octant
    let (ca, sa) = ((q * (1.0 - t)).cos(), (q * (1.0 - t)).sin());
    match oct {
        0 => (a, b),
        1 => (sa, ca),
        2 => (-b, a),
        3 => (-ca, sa),
        4 => (-a, -b),
        5 => (-sa, -ca),
        6 => (b, -a),
        _ => (ca, -sa),
    }
}

fn exponents(f: &GroupRingElement<impl Coefficient>) -> Result<Vec<(Vec<i64>, f64)>> {
    if !matches!(f.spec(), GroupSpec::FreeAbelian { .. }) {
        return Err(Error::SpecMismatch(format!(
            "torus methods need Z^n, got the {} group",
            f.spec().kind_name()
        )));
    }
    Ok(f.terms()
        .map(|(g, a)| match g {
            GroupElement::Abelian(v) => (v.clone(), a.as_f64()),
            _ => unreachable!("validated Z^n element"),
        })
        .collect())
}

/// `|f|` at every grid node, in row-major node order.
fn abs_values(terms: &[(Vec<i64>, f64)], grid: &TorusGrid) -> Vec<f64> {
    let m = grid.points_per_dim;
    let roots = roots_of_unity(m);
    let total = grid.total_points();
    let idx: Vec<usize> = (0..total).collect();
    idx.par_chunks(CHUNK)
        .flat_map_iter(|chunk| {
            let roots = &roots;
            chunk.iter().map(move |&flat| {
                // decode flat index into (j_1, .., j_n), j_n fastest
                let mut js = vec![0usize; grid.dim];
                let mut rest = flat;
                for d in (0..grid.dim).rev() {
                    js[d] = rest % m;
                    rest /= m;
                }
                let mut acc = Complex64::new(0.0, 0.0);
                for (nu, a) in terms {
                    let mut k: i128 = 0;
                    for (e, j) in nu.iter().zip(&js) {
                        k += *e as i128 * *j as i128;
                    }
                    acc += roots[k.rem_euclid(m as i128) as usize] * *a;
                }
                acc.norm()
            })
        })
        .collect()
}

/// `(1/m^n) Σ log |f(node)|`. Errors with [`Error::NodeHit`] if `f`
/// vanishes exactly at a node.
pub fn mahler_quadrature<T: Coefficient>(f: &GroupRingElement<T>, grid: &TorusGrid) -> Result<f64> {
    if f.is_zero() {
        return Err(Error::ZeroElement);
    }
    let terms = exponents(f)?;
    check_dim(f.spec(), grid)?;
    let values = abs_values(&terms, grid);
    if values.contains(&0.0) {
        return Err(Error::NodeHit);
    }
    let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    Ok(pairwise_sum(&logs) / grid.total_points() as f64)
}

fn check_dim(spec: &GroupSpec, grid: &TorusGrid) -> Result<()> {
    match spec {
        GroupSpec::FreeAbelian { rank } if *rank == grid.dim => Ok(()),
        _ => Err(Error::SpecMismatch(format!(
            "grid dimension {} does not match the group",
            grid.dim
        ))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NonvanishingCertificate {
    pub certified: bool,
    pub points_per_dim: usize,
    /// Minimum of `|f|` over the grid.
    pub grid_min: f64,
    /// `L = 2π Σ |a_ν| ||ν||_1`, a Lipschitz constant of `|f|` in the
    /// normalised coordinates `θ / 2π ∈ [0, 1)^n`.
    pub lipschitz_bound: f64,
    /// `L √n / (2m)`; certified iff `grid_min > threshold`.
    pub threshold: f64,
}

/// Certifies that `f` has no zero on `T^n`: every point lies within half a
/// cell diagonal of a node, so `|f| >= grid_min - threshold > 0`.
pub fn nonvanishing_certificate<T: Coefficient>(
    f: &GroupRingElement<T>,
    points_per_dim: usize,
) -> Result<NonvanishingCertificate> {
    let terms = exponents(f)?;
    let dim = match f.spec() {
        GroupSpec::FreeAbelian { rank } => *rank,
        _ => unreachable!(),
    };
    let grid = TorusGrid::new(dim, points_per_dim)?;
    let grid_min = abs_values(&terms, &grid).into_iter().fold(f64::INFINITY, f64::min);
    let lipschitz_bound = 2.0
        * PI
        * terms
            .iter()
            .map(|(nu, a)| a.abs() * nu.iter().map(|x| x.unsigned_abs() as f64).sum::<f64>())
            .sum::<f64>();
    let threshold = lipschitz_bound * (dim as f64).sqrt() / (2.0 * points_per_dim as f64);
    Ok(NonvanishingCertificate {
        certified: !f.is_zero() && grid_min > threshold,
        points_per_dim,
        grid_min,
        lipschitz_bound,
        threshold,
    })
}

/// Quadrature together with its non-vanishing certificate at the same grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MahlerResult {
    pub value: f64,
    pub grid: TorusGrid,
    pub certified: bool,
    pub lipschitz_bound: f64,
    pub grid_min: f64,
}

pub fn mahler_measure<T: Coefficient>(f: &GroupRingElement<T>, grid: &TorusGrid) -> Result<MahlerResult> {
    let value = mahler_quadrature(f, grid)?;
    let cert = nonvanishing_certificate(f, grid.points_per_dim)?;
    Ok(MahlerResult {
        value,
        grid: *grid,
        certified: cert.certified,
        lipschitz_bound: cert.lipschitz_bound,
        grid_min: cert.grid_min,
    })
}

/// Diagonal similarity scaling of a square matrix (Parlett–Reinsch, powers of 2).
fn balance(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    let radix = 2.0f64;
    loop {
        let mut converged = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / radix;
            while c < g {
                f *= radix;
                c *= radix * radix;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= radix * radix;
            }
            if (c + r) / f < 0.95 * s {
                converged = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                }
                for j in 0..n {
                    m[(j, i)] *= f;
                }
            }
        }
        if converged {
            return;
        }
    }
}

/// Roots of `Σ_k c_k z^k` (`c` in ascending order, nonzero lead and constant).
pub fn polynomial_roots(c: &[f64]) -> Vec<Complex64> {
    let d = c.len() - 1;
    if d == 0 {
        return Vec::new();
    }
    let lead = c[d];
    let mut comp = DMatrix::<f64>::zeros(d, d);
    for i in 1..d {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..d {
        comp[(i, d - 1)] = -c[i] / lead;
    }
    balance(&mut comp);
    let eig = comp.complex_eigenvalues();
    eig.iter()
        .map(|&z0| {
            // Newton polish on the original coefficients
            let mut z = z0;
            for _ in 0..3 {
                let (mut p, mut dp) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
                for &ck in c.iter().rev() {
                    dp = dp * z + p;
                    p = p * z + ck;
                }
                if dp.norm() == 0.0 {
                    break;
                }
                let step = p / dp;
                if !step.re.is_finite() || !step.im.is_finite() {
                    break;
                }
                z -= step;
            }
            z
        })
        .collect()
}

/// Mahler measure of a one-variable Laurent polynomial by Jensen's formula:
/// `log |lead| + Σ log max(1, |root|)`. Refuses when a root lies within
/// `1e-8` of the unit circle.
pub fn jensen_1d<T: Coefficient>(f: &GroupRingElement<T>) -> Result<f64> {
    if !matches!(f.spec(), GroupSpec::FreeAbelian { rank: 1 }) {
        return Err(Error::SpecMismatch("Jensen oracle needs Z^1".into()));
    }
    if f.is_zero() {
        return Err(Error::ZeroElement);
    }
    let terms = exponents(f)?;
    let lo = terms.iter().map(|(nu, _)| nu[0]).min().unwrap();
    let hi = terms.iter().map(|(nu, _)| nu[0]).max().unwrap();
    let mut coeffs = vec![0.0; (hi - lo) as usize + 1];
    for (nu, a) in &terms {
        coeffs[(nu[0] - lo) as usize] = *a;
    }
    let roots = polynomial_roots(&coeffs);
    if let Some(r) = roots.iter().find(|r| (r.norm() - 1.0).abs() < UNIT_CIRCLE_BAND) {
        return Err(Error::NoCertificate(format!(
            "root {r} lies within 1e-8 of the unit circle"
        )));
    }
    let mut parts = vec![coeffs.last().unwrap().abs().ln()];
    parts.extend(roots.iter().map(|r| r.norm().max(1.0).ln()));
    Ok(pairwise_sum(&parts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group_ring::IntElement;

    fn z1() -> GroupSpec {
        GroupSpec::free_abelian(1).unwrap()
    }

    fn target() -> f64 {
        ((5.0 + 21f64.sqrt()) / 2.0).ln()
    }

    fn p(text: &str) -> IntElement {
        IntElement::parse(&z1(), text).unwrap()
    }

    #[test]
    fn roots_table_is_symmetric() {
        for m in [2, 4, 6, 8, 12, 64, 100, 4096] {
            let r = roots_of_unity(m);
            assert_eq!(r[0], Complex64::new(1.0, 0.0));
            if m % 2 == 0 {
                for k in 0..m / 2 {
                    assert_eq!(r[k + m / 2], -r[k], "m = {m}, k = {k}");
                }
            }
            for (k, z) in r.iter().enumerate() {
                let t = 2.0 * PI * k as f64 / m as f64;
                assert!((z.re - t.cos()).abs() < 1e-15 && (z.im - t.sin()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn quadrature_examples() {
        let two = p("2\t(0)\n");
        for m in [2, 7, 64] {
            assert_eq!(
                mahler_quadrature(&two, &TorusGrid::new(1, m).unwrap()).unwrap(),
                2f64.ln()
            );
        }
        let lin = p("1\t(1)\n-2\t(0)\n");
        for m in [8, 64, 512] {
            let oracle = (m as f64 * 2f64.ln() + (-(0.5f64.powi(m as i32))).ln_1p()) / m as f64;
            let q = mahler_quadrature(&lin, &TorusGrid::new(1, m).unwrap()).unwrap();
            assert!((q - oracle).abs() < 1e-12, "m = {m}");
        }
        let f = p("5\t(0)\n1\t(1)\n1\t(-1)\n");
        let q = mahler_quadrature(&f, &TorusGrid::new(1, 4096).unwrap()).unwrap();
        assert!((q - target()).abs() < 1e-12);
    }

    #[test]
    fn quadrature_node_hit() {
        let f = p("1\t(1)\n-1\t(0)\n");
        assert!(matches!(
            mahler_quadrature(&f, &TorusGrid::new(1, 16).unwrap()),
            Err(Error::NodeHit)
        ));
        let f = p("1\t(2)\n1\t(0)\n"); // z^2 + 1 vanishes at ±i
        assert!(matches!(
            mahler_quadrature(&f, &TorusGrid::new(1, 12).unwrap()),
            Err(Error::NodeHit)
        ));
        assert!(mahler_quadrature(&f, &TorusGrid::new(1, 6).unwrap()).is_ok());
    }

    #[test]
    fn quadrature_two_variables() {
        // 3 + z1 + z2: m = log 3 (|z1 + z2| <= 2 < 3, so log|3 + ...| has mean log 3)
        let z2 = GroupSpec::free_abelian(2).unwrap();
        let f = IntElement::parse(&z2, "3\t(0,0)\n1\t(1,0)\n1\t(0,1)\n").unwrap();
        let q = mahler_quadrature(&f, &TorusGrid::new(2, 128).unwrap()).unwrap();
        assert!((q - 3f64.ln()).abs() < 1e-12);
        assert!(TorusGrid::new(2, 1 << 13).is_err());
        assert!(mahler_quadrature(&f, &TorusGrid::new(1, 8).unwrap()).is_err());
    }

    #[test]
    fn jensen_examples() {
        assert!((jensen_1d(&p("1\t(1)\n-2\t(0)\n")).unwrap() - 2f64.ln()).abs() < 1e-14);
        assert!((jensen_1d(&p("5\t(0)\n1\t(1)\n1\t(-1)\n")).unwrap() - target()).abs() < 1e-14);
        assert!((jensen_1d(&p("3\t(0)\n")).unwrap() - 3f64.ln()).abs() < 1e-15);
        assert!(matches!(
            jensen_1d(&p("1\t(1)\n-1\t(0)\n")),
            Err(Error::NoCertificate(_))
        ));
        assert!(jensen_1d(&IntElement::zero(&z1())).is_err());
        // (z - 2)(z - 3)(z + 1/2): m = log 6
        let cubic = crate::group_ring::FloatElement::parse(&z1(), "1\t(3)\n-4.5\t(2)\n3.5\t(1)\n3\t(0)\n").unwrap();
        assert!((jensen_1d(&cubic).unwrap() - 6f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn certificate_examples() {
        let f = p("5\t(0)\n1\t(1)\n1\t(-1)\n");
        let c = nonvanishing_certificate(&f, 64).unwrap();
        assert!(c.certified);
        assert!((c.lipschitz_bound - 4.0 * PI).abs() < 1e-12);
        assert!(c.grid_min >= 3.0 - 1e-12);

        let c = nonvanishing_certificate(&p("1\t(1)\n-1\t(0)\n"), 64).unwrap();
        assert!(!c.certified);
        assert_eq!(c.grid_min, 0.0);

        let c = nonvanishing_certificate(&p("2\t(0)\n"), 2).unwrap();
        assert!(c.certified);
        assert_eq!(c.lipschitz_bound, 0.0);
        assert_eq!(c.grid_min, 2.0);
    }

    #[test]
    fn mahler_result_json() {
        let f = p("5\t(0)\n1\t(1)\n1\t(-1)\n");
        let r = mahler_measure(&f, &TorusGrid::new(1, 64).unwrap()).unwrap();
        let json = serde_json::to_value(&r).unwrap();
        for key in ["value", "grid", "certified", "lipschitz_bound", "grid_min"] {
            assert!(json.get(key).is_some(), "{key}");
        }
        assert_eq!(json["certified"], true);
    }
}
