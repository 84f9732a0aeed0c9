//! Seeded generators shared by the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use fklab::group::CayleyTable;
use fklab::{GroupElement, GroupSpec, IntElement};
use num_bigint::BigInt;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn z(rank: usize) -> GroupSpec {
    GroupSpec::free_abelian(rank).unwrap()
}

/// `S_3` with 0 = id, 1 = (12), 2 = (13), 3 = (23), 4 = (123), 5 = (132).
pub fn s3() -> GroupSpec {
    let text = "6 0\n0 1 2 3 4 5\n1 0 4 5 2 3\n2 5 0 4 3 1\n3 4 5 0 1 2\n4 3 1 2 5 0\n5 2 3 1 0 4\n";
    GroupSpec::Finite(Arc::new(CayleyTable::parse(text).unwrap()))
}

pub fn random_group_element(rng: &mut ChaCha8Rng, spec: &GroupSpec) -> GroupElement {
    match spec {
        GroupSpec::FreeAbelian { rank } => GroupElement::Abelian((0..*rank).map(|_| rng.gen_range(-4..=4)).collect()),
        GroupSpec::Finite(t) => GroupElement::Finite(rng.gen_range(0..t.order())),
        GroupSpec::Heisenberg => {
            GroupElement::Heisenberg([rng.gen_range(-3..=3), rng.gen_range(-3..=3), rng.gen_range(-5..=5)])
        }
    }
}

/// Up to `terms` random terms with coefficients in `-c..=c`.
pub fn random_element(rng: &mut ChaCha8Rng, spec: &GroupSpec, terms: usize, c: i64) -> IntElement {
    let n = rng.gen_range(0..=terms);
    let t: Vec<_> = (0..n)
        .map(|_| (random_group_element(rng, spec), BigInt::from(rng.gen_range(-c..=c))))
        .collect();
    IntElement::from_terms(spec, t).unwrap()
}

/// Laurent polynomial `Σ c_k z^k` on `Z`.
pub fn laurent(coeffs: &[(i64, i64)]) -> IntElement {
    IntElement::from_terms(
        &z(1),
        coeffs
            .iter()
            .map(|&(k, c)| (GroupElement::Abelian(vec![k]), BigInt::from(c))),
    )
    .unwrap()
}

/// Nonzero `h = c_0 + c_1 z + c_2 z^2` with `c_i ∈ -3..=3`.
pub fn random_width3(rng: &mut ChaCha8Rng) -> IntElement {
    loop {
        let h = laurent(&[
            (0, rng.gen_range(-3..=3)),
            (1, rng.gen_range(-3..=3)),
            (2, rng.gen_range(-3..=3)),
        ]);
        if !h.is_zero() {
            return h;
        }
    }
}

/// `N e + g` with `||g||_1 < N`, on `Z`.
pub fn random_contraction_z1(rng: &mut ChaCha8Rng) -> IntElement {
    loop {
        let g = random_element(rng, &z(1), 4, 3);
        let off: i64 = g
            .terms()
            .filter(|(k, _)| **k != GroupElement::Abelian(vec![0]))
            .map(|(_, a)| i64::try_from(a.magnitude().clone()).unwrap())
            .sum();
        let n = off + rng.gen_range(1..=3);
        let f = g
            .add(&IntElement::scalar(&z(1), BigInt::from(n) - g.trace_e()))
            .unwrap();
        if !f.is_zero() {
            return f;
        }
    }
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, c: i64) -> Vec<Vec<BigInt>> {
    (0..n)
        .map(|_| (0..n).map(|_| BigInt::from(rng.gen_range(-c..=c))).collect())
        .collect()
}

pub fn sparse_rows(m: &[Vec<BigInt>]) -> Vec<Vec<(usize, BigInt)>> {
    m.iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .filter(|(_, x)| *x != &BigInt::from(0))
                .map(|(j, x)| (j, x.clone()))
                .collect()
        })
        .collect()
}
