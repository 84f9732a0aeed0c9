//! Group families (free abelian, finite by Cayley table, integral Heisenberg),
//! word balls and boxes, and Følner-quality diagnostics.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Default cap on the number of elements of any enumerated Følner set.
pub const DEFAULT_SIZE_CAP: usize = 20_000;

/// Tables up to this order get a full associativity check on construction.
const FULL_ASSOCIATIVITY_LIMIT: usize = 64;
const SAMPLED_ASSOCIATIVITY_TRIPLES: usize = 10_000;

/// An element of one of the supported groups.
///
/// Heisenberg elements use upper-triangular coordinates: `(a, b, c)` stands
/// for the matrix `[[1, a, c], [0, 1, b], [0, 0, 1]]`, so the product is
/// `(a, b, c)(a', b', c') = (a + a', b + b', c + c' + a b')`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupElement {
    Abelian(Vec<i64>),
    Finite(usize),
    Heisenberg([i64; 3]),
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let write_tuple = |f: &mut fmt::Formatter<'_>, xs: &[i64]| {
            f.write_str("(")?;
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{x}")?;
            }
            f.write_str(")")
        };
        match self {
            GroupElement::Abelian(v) => write_tuple(f, v),
            GroupElement::Finite(i) => write!(f, "({i})"),
            GroupElement::Heisenberg(v) => write_tuple(f, v),
        }
    }
}

/// Multiplication table of a finite group on `{0, .., order - 1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CayleyTable {
    order: usize,
    identity: usize,
    table: Vec<usize>,
    inverses: Vec<usize>,
}

impl CayleyTable {
    /// Validates the table: Latin square, two-sided identity, associativity
    /// (exhaustive up to order 64, 10^4 seeded random triples above).
    pub fn new(rows: Vec<Vec<usize>>, identity: usize) -> Result<Self> {
        let order = rows.len();
        if order == 0 {
            return Err(Error::InvalidGroup("empty Cayley table".into()));
        }
        if identity >= order {
            return Err(Error::InvalidGroup(format!(
                "identity index {identity} out of range for order {order}"
            )));
        }
        let mut table = Vec::with_capacity(order * order);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != order {
                return Err(Error::InvalidGroup(format!(
                    "row {i} has {} entries, expected {order}",
                    row.len()
                )));
            }
            if !is_permutation(row.iter().copied(), order) {
                return Err(Error::InvalidGroup(format!("row {i} is not a permutation")));
            }
            table.extend_from_slice(row);
        }
        for j in 0..order {
            if !is_permutation((0..order).map(|i| table[i * order + j]), order) {
                return Err(Error::InvalidGroup(format!("column {j} is not a permutation")));
            }
        }
        for i in 0..order {
            if table[identity * order + i] != i || table[i * order + identity] != i {
                return Err(Error::InvalidGroup(format!(
                    "index {identity} does not act as identity on {i}"
                )));
            }
        }
        let mut inverses = vec![0; order];
        for (i, inv) in inverses.iter_mut().enumerate() {
            // Latin square: exactly one j with i * j = e
            *inv = (0..order).find(|&j| table[i * order + j] == identity).unwrap();
        }
        let out = Self {
            order,
            identity,
            table,
            inverses,
        };
        out.check_associativity()?;
        Ok(out)
    }

    /// Cyclic group `Z/n` with identity 0.
    pub fn cyclic(n: usize) -> Result<Self> {
        let rows = (0..n).map(|i| (0..n).map(|j| (i + j) % n).collect()).collect();
        Self::new(rows, 0)
    }

    /// Parses the plain-text format: first line `order identity`, then
    /// `order` rows of `order` whitespace-separated indices.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header line".into(),
        })?;
        let head: Vec<usize> = parse_indices(header, hline)?;
        if head.len() != 2 {
            return Err(Error::Parse {
                line: hline,
                msg: "header must be `order identity`".into(),
            });
        }
        let (order, identity) = (head[0], head[1]);
        let mut rows = Vec::with_capacity(order);
        for (line, l) in lines {
            let row = parse_indices(l, line)?;
            if row.len() != order {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected {order} entries, found {}", row.len()),
                });
            }
            rows.push(row);
        }
        if rows.len() != order {
            return Err(Error::Parse {
                line: hline,
                msg: format!("expected {order} rows, found {}", rows.len()),
            });
        }
        Self::new(rows, identity)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.order, self.identity);
        for i in 0..self.order {
            let row: Vec<String> = self.table[i * self.order..(i + 1) * self.order]
                .iter()
                .map(|x| x.to_string())
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    #[inline]
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a * self.order + b]
    }

    #[inline]
    pub fn inv(&self, a: usize) -> usize {
        self.inverses[a]
    }

    fn check_associativity(&self) -> Result<()> {
        let n = self.order;
        let check = |a: usize, b: usize, c: usize| {
            if self.mul(self.mul(a, b), c) != self.mul(a, self.mul(b, c)) {
                Err(Error::InvalidGroup(format!("associativity fails on ({a}, {b}, {c})")))
            } else {
                Ok(())
            }
        };
        if n <= FULL_ASSOCIATIVITY_LIMIT {
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        check(a, b, c)?;
                    }
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_ca11);
            for _ in 0..SAMPLED_ASSOCIATIVITY_TRIPLES {
                check(rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n))?;
            }
        }
        Ok(())
    }
}

fn is_permutation(it: impl Iterator<Item = usize>, n: usize) -> bool {
    let mut seen = vec![false; n];
    for x in it {
        if x >= n || std::mem::replace(&mut seen[x], true) {
            return false;
        }
    }
    seen.iter().all(|&s| s)
}

fn parse_indices(line: &str, lineno: usize) -> Result<Vec<usize>> {
    line.split_whitespace()
        .map(|t| {
            t.parse::<usize>().map_err(|e| Error::Parse {
                line: lineno,
                msg: format!("bad index `{t}`: {e}"),
            })
        })
        .collect()
}

/// One of the three supported group families.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GroupSpec {
    FreeAbelian { rank: usize },
    Finite(Arc<CayleyTable>),
    Heisenberg,
}

impl GroupSpec {
    pub fn free_abelian(rank: usize) -> Result<Self> {
        if rank == 0 {
            return Err(Error::InvalidGroup("free abelian rank must be at least 1".into()));
        }
        Ok(GroupSpec::FreeAbelian { rank })
    }

    pub fn finite(table: CayleyTable) -> Self {
        GroupSpec::Finite(Arc::new(table))
    }

    pub fn cyclic(n: usize) -> Result<Self> {
        Ok(Self::finite(CayleyTable::cyclic(n)?))
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            GroupSpec::FreeAbelian { .. } => "free_abelian",
            GroupSpec::Finite(_) => "finite",
            GroupSpec::Heisenberg => "heisenberg",
        }
    }

    /// Group order for finite groups, `None` otherwise.
    pub fn order(&self) -> Option<usize> {
        match self {
            GroupSpec::Finite(t) => Some(t.order()),
            _ => None,
        }
    }

    pub fn identity(&self) -> GroupElement {
        match self {
            GroupSpec::FreeAbelian { rank } => GroupElement::Abelian(vec![0; *rank]),
            GroupSpec::Finite(t) => GroupElement::Finite(t.identity()),
            GroupSpec::Heisenberg => GroupElement::Heisenberg([0; 3]),
        }
    }

    pub fn is_identity(&self, g: &GroupElement) -> bool {
        *g == self.identity()
    }

    pub fn validate(&self, g: &GroupElement) -> Result<()> {
        match (self, g) {
            (GroupSpec::FreeAbelian { rank }, GroupElement::Abelian(v)) if v.len() == *rank => Ok(()),
            (GroupSpec::Finite(t), GroupElement::Finite(i)) if *i < t.order() => Ok(()),
            (GroupSpec::Heisenberg, GroupElement::Heisenberg(_)) => Ok(()),
            _ => Err(Error::MalformedElement(format!(
                "{g} is not an element of the {} group",
                self.kind_name()
            ))),
        }
    }

    /// Group product `g h`.
    pub fn multiply(&self, g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
        self.validate(g)?;
        self.validate(h)?;
        Ok(self.mul(g, h))
    }

    pub fn inverse(&self, g: &GroupElement) -> Result<GroupElement> {
        self.validate(g)?;
        Ok(self.inv(g))
    }

    /// Product without validation; callers guarantee membership.
    pub(crate) fn mul(&self, g: &GroupElement, h: &GroupElement) -> GroupElement {
        match (self, g, h) {
            (GroupSpec::FreeAbelian { .. }, GroupElement::Abelian(a), GroupElement::Abelian(b)) => {
                GroupElement::Abelian(a.iter().zip(b).map(|(x, y)| x + y).collect())
            }
            (GroupSpec::Finite(t), GroupElement::Finite(a), GroupElement::Finite(b)) => {
                GroupElement::Finite(t.mul(*a, *b))
            }
            (GroupSpec::Heisenberg, GroupElement::Heisenberg(a), GroupElement::Heisenberg(b)) => {
                GroupElement::Heisenberg([a[0] + b[0], a[1] + b[1], a[2] + b[2] + a[0] * b[1]])
            }
            _ => panic!("element {g} or {h} does not belong to the {} group", self.kind_name()),
        }
    }

    pub(crate) fn inv(&self, g: &GroupElement) -> GroupElement {
        match (self, g) {
            (GroupSpec::FreeAbelian { .. }, GroupElement::Abelian(a)) => {
                GroupElement::Abelian(a.iter().map(|x| -x).collect())
            }
            (GroupSpec::Finite(t), GroupElement::Finite(a)) => GroupElement::Finite(t.inv(*a)),
            (GroupSpec::Heisenberg, GroupElement::Heisenberg([a, b, c])) => {
                GroupElement::Heisenberg([-a, -b, a * b - c])
            }
            _ => panic!("element {g} does not belong to the {} group", self.kind_name()),
        }
    }

    /// Parses a tuple encoding such as `(1,-2)` or `(3)`.
    pub fn parse_element(&self, s: &str) -> Result<GroupElement> {
        let inner = s
            .trim()
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| Error::MalformedElement(format!("`{s}` is not a parenthesised tuple")))?;
        let coords: Vec<i64> = inner
            .split(',')
            .map(|t| t.trim())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<i64>()
                    .map_err(|e| Error::MalformedElement(format!("`{t}`: {e}")))
            })
            .collect::<Result<_>>()?;
        let g = match self {
            GroupSpec::FreeAbelian { .. } => GroupElement::Abelian(coords),
            GroupSpec::Finite(_) => match coords.as_slice() {
                [i] if *i >= 0 => GroupElement::Finite(*i as usize),
                _ => return Err(Error::MalformedElement(format!("`{s}` is not a finite-group index"))),
            },
            GroupSpec::Heisenberg => match coords.as_slice() {
                [a, b, c] => GroupElement::Heisenberg([*a, *b, *c]),
                _ => return Err(Error::MalformedElement(format!("`{s}` is not a Heisenberg triple"))),
            },
        };
        self.validate(&g)?;
        Ok(g)
    }

    /// `{e} ∪ {±e_i}` for `Z^n`, `{e, x^±1, y^±1}` for the Heisenberg group,
    /// and all elements for a finite group.
    pub fn standard_generators(&self) -> GeneratingSet {
        let elements = match self {
            GroupSpec::FreeAbelian { rank } => {
                let mut out = vec![self.identity()];
                for i in 0..*rank {
                    for s in [1, -1] {
                        let mut v = vec![0; *rank];
                        v[i] = s;
                        out.push(GroupElement::Abelian(v));
                    }
                }
                out
            }
            GroupSpec::Finite(t) => (0..t.order()).map(GroupElement::Finite).collect(),
            GroupSpec::Heisenberg => vec![
                GroupElement::Heisenberg([0, 0, 0]),
                GroupElement::Heisenberg([1, 0, 0]),
                GroupElement::Heisenberg([-1, 0, 0]),
                GroupElement::Heisenberg([0, 1, 0]),
                GroupElement::Heisenberg([0, -1, 0]),
            ],
        };
        GeneratingSet { elements }
    }
}

/// Finite generating set with `e ∈ S = S^{-1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratingSet {
    elements: Vec<GroupElement>,
}

impl GeneratingSet {
    pub fn new(spec: &GroupSpec, elements: Vec<GroupElement>) -> Result<Self> {
        for g in &elements {
            spec.validate(g)?;
        }
        let set: HashSet<&GroupElement> = elements.iter().collect();
        if !set.contains(&spec.identity()) {
            return Err(Error::InvalidGenerators("identity missing".into()));
        }
        for g in &elements {
            if !set.contains(&spec.inv(g)) {
                return Err(Error::InvalidGenerators(format!("inverse of {g} missing")));
            }
        }
        let mut elements = elements;
        elements.sort();
        elements.dedup();
        Ok(Self { elements })
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }
}

/// Ordered finite subset of a group together with its inverse index map.
#[derive(Clone, Debug)]
pub struct FoelnerSet {
    spec: GroupSpec,
    elements: Vec<GroupElement>,
    index: HashMap<GroupElement, usize>,
}

impl FoelnerSet {
    pub fn new(spec: &GroupSpec, elements: Vec<GroupElement>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidGroup("Følner set must be nonempty".into()));
        }
        let mut index = HashMap::with_capacity(elements.len());
        for (i, g) in elements.iter().enumerate() {
            spec.validate(g)?;
            if index.insert(g.clone(), i).is_some() {
                return Err(Error::InvalidGroup(format!("duplicate element {g} in Følner set")));
            }
        }
        Ok(Self {
            spec: spec.clone(),
            elements,
            index,
        })
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn index_of(&self, g: &GroupElement) -> Option<usize> {
        self.index.get(g).copied()
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        self.index.contains_key(g)
    }
}

/// Breadth-first enumeration of `S^0 ⊆ S^1 ⊆ ...`, one layer at a time.
/// Each new layer is sorted by element encoding.
struct BallEnumerator<'a> {
    spec: &'a GroupSpec,
    gens: &'a [GroupElement],
    elements: Vec<GroupElement>,
    seen: HashSet<GroupElement>,
    frontier: Vec<GroupElement>,
}

impl<'a> BallEnumerator<'a> {
    fn new(spec: &'a GroupSpec, gens: &'a GeneratingSet) -> Self {
        let e = spec.identity();
        Self {
            spec,
            gens: gens.elements(),
            elements: vec![e.clone()],
            seen: HashSet::from([e.clone()]),
            frontier: vec![e],
        }
    }

    fn grow(&mut self, cap: usize) -> Result<()> {
        let mut layer = Vec::new();
        for x in &self.frontier {
            for s in self.gens {
                let y = self.spec.mul(x, s);
                if !self.seen.contains(&y) {
                    self.seen.insert(y.clone());
                    layer.push(y);
                }
            }
        }
        if self.elements.len() + layer.len() > cap {
            return Err(Error::SizeCap {
                size: self.elements.len() + layer.len(),
                cap,
            });
        }
        layer.sort();
        self.elements.extend_from_slice(&layer);
        self.frontier = layer;
        Ok(())
    }
}

/// The word ball `S^n`, in BFS layer order with lexicographic tie-breaks.
pub fn ball(spec: &GroupSpec, gens: &GeneratingSet, n: usize, cap: usize) -> Result<FoelnerSet> {
    let mut en = BallEnumerator::new(spec, gens);
    for _ in 0..n {
        en.grow(cap)?;
    }
    FoelnerSet::new(spec, en.elements)
}

/// Balls `S^0, .., S^n_max` sharing one enumeration.
pub fn balls(spec: &GroupSpec, gens: &GeneratingSet, n_max: usize, cap: usize) -> Result<Vec<FoelnerSet>> {
    let mut en = BallEnumerator::new(spec, gens);
    let mut out = vec![FoelnerSet::new(spec, en.elements.clone())?];
    for _ in 0..n_max {
        en.grow(cap)?;
        out.push(FoelnerSet::new(spec, en.elements.clone())?);
    }
    Ok(out)
}

/// The box `{0, .., n-1}^rank` in `Z^rank`, lexicographic order.
pub fn box_set(rank: usize, n: usize, cap: usize) -> Result<FoelnerSet> {
    let spec = GroupSpec::free_abelian(rank)?;
    if n == 0 {
        return Err(Error::InvalidGroup("box side must be at least 1".into()));
    }
    let size = u32::try_from(rank)
        .ok()
        .and_then(|r| n.checked_pow(r))
        .filter(|&s| s <= cap)
        .ok_or(Error::SizeCap { size: usize::MAX, cap })?;
    let mut elements = Vec::with_capacity(size);
    let mut cur = vec![0i64; rank];
    for _ in 0..size {
        elements.push(GroupElement::Abelian(cur.clone()));
        for d in (0..rank).rev() {
            cur[d] += 1;
            if (cur[d] as usize) < n {
                break;
            }
            cur[d] = 0;
        }
    }
    FoelnerSet::new(&spec, elements)
}

/// Følner sets indexed by their parameter `n` (box side or ball radius).
#[derive(Clone, Debug)]
pub struct FoelnerSequence {
    steps: Vec<(usize, FoelnerSet)>,
}

impl FoelnerSequence {
    pub fn from_sets(steps: Vec<(usize, FoelnerSet)>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::InvalidGroup("empty Følner sequence".into()));
        }
        Ok(Self { steps })
    }

    pub fn boxes(rank: usize, ns: impl IntoIterator<Item = usize>, cap: usize) -> Result<Self> {
        Self::from_sets(
            ns.into_iter()
                .map(|n| Ok((n, box_set(rank, n, cap)?)))
                .collect::<Result<_>>()?,
        )
    }

    pub fn balls(
        spec: &GroupSpec,
        gens: &GeneratingSet,
        ns: impl IntoIterator<Item = usize>,
        cap: usize,
    ) -> Result<Self> {
        let ns: Vec<usize> = ns.into_iter().collect();
        let n_max = ns.iter().copied().max().unwrap_or(0);
        let all = balls(spec, gens, n_max, cap)?;
        Self::from_sets(ns.into_iter().map(|n| (n, all[n].clone())).collect())
    }

    pub fn steps(&self) -> &[(usize, FoelnerSet)] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FoelnerDefect {
    /// `|FK \ F| / |F|`, exact.
    pub ratio: Ratio<u64>,
    /// `|FK \ F|`.
    pub boundary: usize,
    /// `ratio · log(1 + |FK \ F|)`.
    pub strong_value: f64,
}

fn boundary_count(f: &FoelnerSet, k: &[GroupElement]) -> usize {
    let spec = f.spec();
    let mut outside = HashSet::new();
    for x in f.elements() {
        for y in k {
            let p = spec.mul(x, y);
            if !f.contains(&p) {
                outside.insert(p);
            }
        }
    }
    outside.len()
}

/// Følner defect of `F` with respect to `K`, in the ordinary and strong forms.
pub fn foelner_defect(f: &FoelnerSet, k: &[GroupElement]) -> Result<FoelnerDefect> {
    for g in k {
        f.spec().validate(g)?;
    }
    let boundary = boundary_count(f, k);
    let ratio = Ratio::new(boundary as u64, f.len() as u64);
    let strong_value = boundary as f64 / f.len() as f64 * (1.0 + boundary as f64).ln();
    Ok(FoelnerDefect {
        ratio,
        boundary,
        strong_value,
    })
}

/// `max_{γ ∈ K} |Fγ \ F| / |F| · log |F|`.
pub fn translate_defect_log(f: &FoelnerSet, k: &[GroupElement]) -> Result<f64> {
    let mut best = 0usize;
    for g in k {
        f.spec().validate(g)?;
        best = best.max(boundary_count(f, std::slice::from_ref(g)));
    }
    Ok(best as f64 / f.len() as f64 * (f.len() as f64).ln())
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct GrowthRow {
    pub n: usize,
    pub ball_size: usize,
    /// `(|S^{n+1}| / |S^n| - 1) · log |S^n|`.
    pub ratio_growth_log: f64,
    /// `max_{γ ∈ S} |S^n γ \ S^n| / |S^n| · log |S^n|`.
    pub translate_defect_log: f64,
}

/// Ball sizes and the two strong-Følner growth diagnostics for `n = 1..=n_max`.
pub fn growth_series(spec: &GroupSpec, gens: &GeneratingSet, n_max: usize, cap: usize) -> Result<Vec<GrowthRow>> {
    if n_max == 0 {
        return Err(Error::InvalidGroup("growth series needs n_max >= 1".into()));
    }
    let all = balls(spec, gens, n_max + 1, cap)?;
    (1..=n_max)
        .map(|n| {
            let cur = all[n].len() as f64;
            let next = all[n + 1].len() as f64;
            Ok(GrowthRow {
                n,
                ball_size: all[n].len(),
                ratio_growth_log: (next / cur - 1.0) * cur.ln(),
                translate_defect_log: translate_defect_log(&all[n], gens.elements())?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(v: &[i64]) -> GroupElement {
        GroupElement::Abelian(v.to_vec())
    }

    fn h(a: i64, b: i64, c: i64) -> GroupElement {
        GroupElement::Heisenberg([a, b, c])
    }

    #[test]
    fn multiply_examples() {
        let z2 = GroupSpec::free_abelian(2).unwrap();
        assert_eq!(z2.multiply(&z(&[1, 0]), &z(&[0, 1])).unwrap(), z(&[1, 1]));
        let heis = GroupSpec::Heisenberg;
        assert_eq!(heis.multiply(&h(1, 0, 0), &h(0, 1, 0)).unwrap(), h(1, 1, 1));
        assert_eq!(heis.multiply(&h(0, 1, 0), &h(1, 0, 0)).unwrap(), h(1, 1, 0));
        let c2 = GroupSpec::cyclic(2).unwrap();
        assert_eq!(
            c2.multiply(&GroupElement::Finite(1), &GroupElement::Finite(1)).unwrap(),
            GroupElement::Finite(0)
        );
    }

    #[test]
    fn multiply_rejects_mismatched_encoding() {
        let z2 = GroupSpec::free_abelian(2).unwrap();
        assert!(matches!(
            z2.multiply(&z(&[1]), &z(&[0, 1])),
            Err(Error::MalformedElement(_))
        ));
        assert!(GroupSpec::Heisenberg.multiply(&z(&[1, 0, 0]), &h(0, 0, 0)).is_err());
        let c2 = GroupSpec::cyclic(2).unwrap();
        assert!(c2.multiply(&GroupElement::Finite(2), &GroupElement::Finite(0)).is_err());
    }

    #[test]
    fn heisenberg_inverse() {
        let heis = GroupSpec::Heisenberg;
        let g = h(2, -3, 5);
        let gi = heis.inverse(&g).unwrap();
        assert_eq!(gi, h(-2, 3, -6 - 5));
        assert_eq!(heis.mul(&g, &gi), heis.identity());
        assert_eq!(heis.mul(&gi, &g), heis.identity());
    }

    #[test]
    fn cayley_table_validation() {
        assert!(CayleyTable::new(vec![vec![0, 1], vec![1, 1]], 0).is_err());
        assert!(CayleyTable::new(vec![vec![1, 0], vec![0, 1]], 0).is_err());
        assert!(CayleyTable::new(vec![vec![0, 1], vec![1, 0]], 2).is_err());
        // Latin square with identity that is not associative (a loop of order 5)
        let loop5 = vec![
            vec![0, 1, 2, 3, 4],
            vec![1, 0, 3, 4, 2],
            vec![2, 4, 0, 1, 3],
            vec![3, 2, 4, 0, 1],
            vec![4, 3, 1, 2, 0],
        ];
        assert!(matches!(CayleyTable::new(loop5, 0), Err(Error::InvalidGroup(_))));
        assert!(CayleyTable::cyclic(100).is_ok());
    }

    #[test]
    fn cayley_text_roundtrip() {
        let t = CayleyTable::cyclic(3).unwrap();
        let text = t.to_text();
        assert_eq!(text, "3 0\n0 1 2\n1 2 0\n2 0 1\n");
        assert_eq!(CayleyTable::parse(&text).unwrap(), t);
        let err = CayleyTable::parse("2 0\n0 1\n1 x\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
    }

    #[test]
    fn ball_examples() {
        let z2 = GroupSpec::free_abelian(2).unwrap();
        let s = z2.standard_generators();
        assert_eq!(ball(&z2, &s, 0, DEFAULT_SIZE_CAP).unwrap().len(), 1);
        assert_eq!(ball(&z2, &s, 1, DEFAULT_SIZE_CAP).unwrap().len(), 5);
        // diamond |S^n| = 2n^2 + 2n + 1
        for n in 0..8 {
            assert_eq!(ball(&z2, &s, n, DEFAULT_SIZE_CAP).unwrap().len(), 2 * n * n + 2 * n + 1);
        }
        let heis = GroupSpec::Heisenberg;
        assert_eq!(
            ball(&heis, &heis.standard_generators(), 1, DEFAULT_SIZE_CAP)
                .unwrap()
                .len(),
            5
        );
        assert!(matches!(ball(&z2, &s, 200, 1000), Err(Error::SizeCap { .. })));
    }

    #[test]
    fn ball_order_is_layered_and_deterministic() {
        let heis = GroupSpec::Heisenberg;
        let s = heis.standard_generators();
        let a = ball(&heis, &s, 4, DEFAULT_SIZE_CAP).unwrap();
        let b = ball(&heis, &s, 4, DEFAULT_SIZE_CAP).unwrap();
        assert_eq!(a.elements(), b.elements());
        assert_eq!(a.elements()[0], heis.identity());
        assert_eq!(&a.elements()[1..5], &[h(-1, 0, 0), h(0, -1, 0), h(0, 1, 0), h(1, 0, 0)]);
    }

    #[test]
    fn generating_set_requires_identity_and_inverses() {
        let z1 = GroupSpec::free_abelian(1).unwrap();
        assert!(GeneratingSet::new(&z1, vec![z(&[1]), z(&[-1])]).is_err());
        assert!(GeneratingSet::new(&z1, vec![z(&[0]), z(&[1])]).is_err());
        assert!(GeneratingSet::new(&z1, vec![z(&[0]), z(&[1]), z(&[-1])]).is_ok());
    }

    #[test]
    fn box_examples() {
        assert_eq!(
            box_set(1, 3, DEFAULT_SIZE_CAP).unwrap().elements(),
            &[z(&[0]), z(&[1]), z(&[2])]
        );
        assert_eq!(
            box_set(2, 2, DEFAULT_SIZE_CAP).unwrap().elements(),
            &[z(&[0, 0]), z(&[0, 1]), z(&[1, 0]), z(&[1, 1])]
        );
        assert_eq!(box_set(2, 10, DEFAULT_SIZE_CAP).unwrap().len(), 100);
        assert!(matches!(box_set(3, 100, DEFAULT_SIZE_CAP), Err(Error::SizeCap { .. })));
        assert!(box_set(64, 10, DEFAULT_SIZE_CAP).is_err());
    }

    #[test]
    fn foelner_defect_examples() {
        let f = box_set(1, 10, DEFAULT_SIZE_CAP).unwrap();
        let d = foelner_defect(&f, &[z(&[1])]).unwrap();
        assert_eq!(d.ratio, Ratio::new(1, 10));
        assert!((d.strong_value - 0.1 * 2f64.ln()).abs() < 1e-15);
        let d = foelner_defect(&f, &[z(&[0])]).unwrap();
        assert_eq!(d.ratio, Ratio::new(0, 1));
        assert_eq!(d.strong_value, 0.0);
        let d = foelner_defect(&f, &[z(&[-1]), z(&[0]), z(&[1])]).unwrap();
        assert_eq!(d.boundary, 2);
        assert_eq!(d.ratio, Ratio::new(1, 5));
    }

    #[test]
    fn growth_series_z1_closed_form() {
        let z1 = GroupSpec::free_abelian(1).unwrap();
        let rows = growth_series(&z1, &z1.standard_generators(), 10, DEFAULT_SIZE_CAP).unwrap();
        for r in &rows {
            let size = (2 * r.n + 1) as f64;
            assert_eq!(r.ball_size, 2 * r.n + 1);
            assert!((r.ratio_growth_log - 2.0 / size * size.ln()).abs() < 1e-12);
        }
        for w in rows.windows(2) {
            assert!(w[1].ratio_growth_log < w[0].ratio_growth_log);
        }
    }

    #[test]
    fn growth_series_finite_saturates() {
        let c5 = GroupSpec::cyclic(5).unwrap();
        let s = GeneratingSet::new(
            &c5,
            vec![
                GroupElement::Finite(0),
                GroupElement::Finite(1),
                GroupElement::Finite(4),
            ],
        )
        .unwrap();
        let rows = growth_series(&c5, &s, 5, DEFAULT_SIZE_CAP).unwrap();
        assert_eq!(rows[0].ball_size, 3);
        assert_eq!(rows[1].ball_size, 5);
        for r in &rows[1..] {
            assert_eq!(r.ratio_growth_log, 0.0);
            assert_eq!(r.translate_defect_log, 0.0);
        }
    }

    #[test]
    fn parse_element_formats() {
        let heis = GroupSpec::Heisenberg;
        assert_eq!(heis.parse_element("(1, -2, 3)").unwrap(), h(1, -2, 3));
        assert!(heis.parse_element("(1,2)").is_err());
        let c3 = GroupSpec::cyclic(3).unwrap();
        assert_eq!(c3.parse_element("(2)").unwrap(), GroupElement::Finite(2));
        assert!(c3.parse_element("(3)").is_err());
        assert_eq!(h(1, -2, 3).to_string(), "(1,-2,3)");
    }
}
