//! Experiment configuration: a TOML file with `group`, `element`, `foelner`,
//! `methods`, `tolerances` and `output` sections. Unknown keys are errors.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use crate::determinant::Method;
use crate::error::{Error, Result};
use crate::group::{CayleyTable, FoelnerSequence, GeneratingSet, GroupSpec, DEFAULT_SIZE_CAP};
use crate::group_ring::{make_positive, CoeffKind, FloatElement, GroupRingElement, IntElement, RationalElement};
use crate::mahler::DEFAULT_GRID_CAP;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub group: GroupSection,
    pub element: ElementSection,
    pub foelner: Option<FoelnerSection>,
    #[serde(default)]
    pub methods: MethodsSection,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSection {
    /// `free_abelian`, `finite` or `heisenberg`.
    pub kind: String,
    pub rank: Option<usize>,
    /// Cyclic group of this order.
    pub cyclic: Option<usize>,
    /// Path to a Cayley-table file, relative to the config file.
    pub table: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementSection {
    /// `f` in the `coeff<TAB>element` text format.
    pub text: Option<String>,
    /// File holding `f`, relative to the config file.
    pub file: Option<PathBuf>,
    /// `h`; the element becomes `f = h h*`, certified positive by `h`.
    pub factor: Option<String>,
    #[serde(default = "default_coefficients")]
    pub coefficients: CoeffKind,
    /// `auto`, `factor`, `contraction` or `torus`.
    #[serde(default = "default_certificate")]
    pub certificate: String,
}

fn default_coefficients() -> CoeffKind {
    CoeffKind::ExactInt
}

fn default_certificate() -> String {
    "auto".into()
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FoelnerSection {
    /// `box` or `ball`.
    pub kind: String,
    /// Explicit list of `n`; otherwise `n_min..=n_max` by `n_step`.
    pub ns: Option<Vec<usize>>,
    pub n_min: Option<usize>,
    pub n_max: Option<usize>,
    pub n_step: Option<usize>,
    pub cap: Option<usize>,
    /// Symmetric generating set for balls; defaults to the standard one.
    pub generators: Option<Vec<String>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodsSection {
    /// Method names, or `["all"]` for every applicable method.
    #[serde(default = "default_methods")]
    pub enabled: Vec<String>,
    /// Coefficients `q_0, q_1, ...` of the polynomial for `lueck_trace`.
    pub lueck_polynomial: Option<Vec<String>>,
}

fn default_methods() -> Vec<String> {
    vec!["all".into()]
}

impl Default for MethodsSection {
    fn default() -> Self {
        Self {
            enabled: default_methods(),
            lueck_polynomial: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub series_tol: f64,
    pub series_max_terms: usize,
    pub mahler_points: usize,
    pub grid_cap: usize,
    /// Added to the error bounds before two finals count as disagreeing.
    pub truncation_allowance: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            series_tol: 1e-10,
            series_max_terms: 500,
            mahler_points: 4096,
            grid_cap: DEFAULT_GRID_CAP,
            truncation_allowance: 1e-3,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Output directory, relative to the config file; `--out` overrides it.
    pub dir: Option<PathBuf>,
}

/// Element in whichever coefficient ring the config asked for.
#[derive(Clone, Debug)]
pub enum Element {
    Int(IntElement),
    Rational(RationalElement),
    Float(FloatElement),
}

impl Element {
    pub fn kind(&self) -> CoeffKind {
        match self {
            Element::Int(_) => CoeffKind::ExactInt,
            Element::Rational(_) => CoeffKind::ExactRational,
            Element::Float(_) => CoeffKind::Float,
        }
    }

    pub fn to_text(&self) -> String {
        match self {
            Element::Int(f) => f.to_text(),
            Element::Rational(f) => f.to_text(),
            Element::Float(f) => f.to_text(),
        }
    }

    pub fn to_float(&self) -> FloatElement {
        match self {
            Element::Int(f) => f.to_float(),
            Element::Rational(f) => f.to_float(),
            Element::Float(f) => f.clone(),
        }
    }

    pub fn is_self_adjoint(&self) -> bool {
        match self {
            Element::Int(f) => f.is_self_adjoint(),
            Element::Rational(f) => f.is_self_adjoint(),
            Element::Float(f) => f.is_self_adjoint(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Element::Int(f) => f.is_zero(),
            Element::Rational(f) => f.is_zero(),
            Element::Float(f) => f.is_zero(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CertificateChoice {
    Auto,
    Factor,
    Contraction,
    Torus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FoelnerKind {
    Box,
    Ball,
}

#[derive(Clone, Debug)]
pub struct FoelnerPlan {
    pub kind: FoelnerKind,
    pub ns: Vec<usize>,
    pub cap: usize,
    pub generators: GeneratingSet,
}

impl FoelnerPlan {
    pub fn sequence(&self, spec: &GroupSpec) -> Result<FoelnerSequence> {
        self.sequence_for(spec, &self.ns)
    }

    pub fn sequence_for(&self, spec: &GroupSpec, ns: &[usize]) -> Result<FoelnerSequence> {
        match self.kind {
            FoelnerKind::Box => {
                let GroupSpec::FreeAbelian { rank } = spec else {
                    return Err(Error::Config("boxes need a free abelian group".into()));
                };
                FoelnerSequence::boxes(*rank, ns.iter().copied(), self.cap)
            }
            FoelnerKind::Ball => FoelnerSequence::balls(spec, &self.generators, ns.iter().copied(), self.cap),
        }
    }
}

/// A parsed and validated experiment.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub spec: GroupSpec,
    pub element: Element,
    /// `h` when the element was given as `h h*`.
    pub factor: Option<Element>,
    pub certificate: CertificateChoice,
    pub foelner: Option<FoelnerPlan>,
    pub methods: Vec<Method>,
    pub lueck_polynomial: Option<Vec<String>>,
    pub tolerances: Tolerances,
    pub output_dir: Option<PathBuf>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Parses `text`; relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Parse {
            line: e.span().map_or(0, |s| line_of(text, s.start)),
            msg: e.message().to_string(),
        })?;
        Self::from_raw(raw, base)
    }

    pub fn from_raw(raw: RawConfig, base: &Path) -> Result<Self> {
        let spec = build_group(&raw.group, base)?;
        let kind = raw.element.coefficients;

        let sources = [
            raw.element.text.is_some(),
            raw.element.file.is_some(),
            raw.element.factor.is_some(),
        ];
        if sources.iter().filter(|&&b| b).count() != 1 {
            return Err(Error::Config(
                "element: give exactly one of `text`, `file`, `factor`".into(),
            ));
        }
        let (element, factor) = if let Some(h) = &raw.element.factor {
            let h = parse_element(&spec, kind, h).map_err(|e| Error::Config(format!("element.factor: {e}")))?;
            let f = match &h {
                Element::Int(h) => Element::Int(make_positive(h)),
                Element::Rational(h) => Element::Rational(make_positive(h)),
                Element::Float(h) => Element::Float(make_positive(h)),
            };
            (f, Some(h))
        } else {
            let body = match (&raw.element.text, &raw.element.file) {
                (Some(t), _) => t.clone(),
                (_, Some(p)) => std::fs::read_to_string(base.join(p))?,
                _ => unreachable!(),
            };
            (
                parse_element(&spec, kind, &body).map_err(|e| Error::Config(format!("element: {e}")))?,
                None,
            )
        };
        if element.is_zero() {
            return Err(Error::Config("element: f is zero".into()));
        }

        let certificate = match raw.element.certificate.as_str() {
            "auto" => CertificateChoice::Auto,
            "factor" => CertificateChoice::Factor,
            "contraction" => CertificateChoice::Contraction,
            "torus" => CertificateChoice::Torus,
            other => return Err(Error::Config(format!("element.certificate: unknown value `{other}`"))),
        };
        if certificate == CertificateChoice::Factor && factor.is_none() {
            return Err(Error::Config(
                "element.certificate = \"factor\" needs element.factor".into(),
            ));
        }
        if certificate == CertificateChoice::Torus && !matches!(spec, GroupSpec::FreeAbelian { .. }) {
            return Err(Error::Config(
                "element.certificate = \"torus\" needs a free abelian group".into(),
            ));
        }

        let foelner = raw.foelner.as_ref().map(|s| build_foelner(s, &spec)).transpose()?;
        let methods = select_methods(&raw.methods, &spec, &element, foelner.is_some())?;
        if let Some(q) = &raw.methods.lueck_polynomial {
            if q.is_empty() {
                return Err(Error::Config("methods.lueck_polynomial is empty".into()));
            }
        }
        let t = &raw.tolerances;
        let positive = t.series_tol.is_finite() && t.series_tol > 0.0;
        let allowance_ok = t.truncation_allowance.is_finite() && t.truncation_allowance >= 0.0;
        if !positive || !allowance_ok || t.mahler_points < 2 {
            return Err(Error::Config(
                "tolerances: series_tol > 0, truncation_allowance >= 0 and mahler_points >= 2 required".into(),
            ));
        }
        Ok(Self {
            spec,
            element,
            factor,
            certificate,
            foelner,
            methods,
            lueck_polynomial: raw.methods.lueck_polynomial.clone(),
            tolerances: raw.tolerances.clone(),
            output_dir: raw.output.dir.as_ref().map(|d| base.join(d)),
        })
    }
}

fn build_group(g: &GroupSection, base: &Path) -> Result<GroupSpec> {
    let extra = |field: &str, present: bool| {
        if present {
            Err(Error::Config(format!(
                "group.{field} does not apply to the {} group",
                g.kind
            )))
        } else {
            Ok(())
        }
    };
    match g.kind.as_str() {
        "free_abelian" => {
            extra("cyclic", g.cyclic.is_some())?;
            extra("table", g.table.is_some())?;
            let rank = g
                .rank
                .ok_or_else(|| Error::Config("group.rank is required for free_abelian".into()))?;
            GroupSpec::free_abelian(rank)
        }
        "finite" => {
            extra("rank", g.rank.is_some())?;
            match (g.cyclic, &g.table) {
                (Some(n), None) => GroupSpec::cyclic(n),
                (None, Some(p)) => Ok(GroupSpec::Finite(Arc::new(CayleyTable::load(base.join(p))?))),
                _ => Err(Error::Config(
                    "finite group: give exactly one of `cyclic`, `table`".into(),
                )),
            }
        }
        "heisenberg" => {
            extra("rank", g.rank.is_some())?;
            extra("cyclic", g.cyclic.is_some())?;
            extra("table", g.table.is_some())?;
            Ok(GroupSpec::Heisenberg)
        }
        other => Err(Error::Config(format!("group.kind: unknown value `{other}`"))),
    }
}

fn parse_element(spec: &GroupSpec, kind: CoeffKind, text: &str) -> Result<Element> {
    Ok(match kind {
        CoeffKind::ExactInt => Element::Int(GroupRingElement::parse(spec, text)?),
        CoeffKind::ExactRational => Element::Rational(GroupRingElement::parse(spec, text)?),
        CoeffKind::Float => Element::Float(GroupRingElement::parse(spec, text)?),
    })
}

fn build_foelner(s: &FoelnerSection, spec: &GroupSpec) -> Result<FoelnerPlan> {
    let kind = match s.kind.as_str() {
        "box" => FoelnerKind::Box,
        "ball" => FoelnerKind::Ball,
        other => return Err(Error::Config(format!("foelner.kind: unknown value `{other}`"))),
    };
    if kind == FoelnerKind::Box && !matches!(spec, GroupSpec::FreeAbelian { .. }) {
        return Err(Error::Config(
            "foelner.kind = \"box\" needs a free abelian group".into(),
        ));
    }
    let ns = match (&s.ns, s.n_min, s.n_max) {
        (Some(ns), None, None) if s.n_step.is_none() => ns.clone(),
        (None, Some(lo), Some(hi)) => {
            let step = s.n_step.unwrap_or(1);
            if step == 0 || lo > hi {
                return Err(Error::Config("foelner: need n_min <= n_max and n_step >= 1".into()));
            }
            (lo..=hi).step_by(step).collect()
        }
        _ => {
            return Err(Error::Config(
                "foelner: give either `ns` or `n_min`/`n_max` (with optional `n_step`)".into(),
            ))
        }
    };
    if ns.is_empty() || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(
            "foelner: n values must be nonempty and strictly increasing".into(),
        ));
    }
    let generators = match &s.generators {
        Some(g) => {
            if kind == FoelnerKind::Box {
                return Err(Error::Config("foelner.generators applies to balls only".into()));
            }
            let elems = g.iter().map(|x| spec.parse_element(x)).collect::<Result<Vec<_>>>()?;
            GeneratingSet::new(spec, elems)?
        }
        None => spec.standard_generators(),
    };
    Ok(FoelnerPlan {
        kind,
        ns,
        cap: s.cap.unwrap_or(DEFAULT_SIZE_CAP),
        generators,
    })
}

fn select_methods(m: &MethodsSection, spec: &GroupSpec, f: &Element, have_foelner: bool) -> Result<Vec<Method>> {
    let abelian_rank = match spec {
        GroupSpec::FreeAbelian { rank } => Some(*rank),
        _ => None,
    };
    let finite = matches!(spec, GroupSpec::Finite(_));
    let int = matches!(f, Element::Int(_));
    let check = |method: Method| -> std::result::Result<(), String> {
        match method {
            Method::Mahler if abelian_rank.is_none() => Err("needs a free abelian group".into()),
            Method::Jensen if abelian_rank != Some(1) => Err("needs the group Z".into()),
            Method::FiniteEntropy if !finite => Err("needs a finite group".into()),
            Method::FiniteEntropy | Method::LatticeIndex if !int => Err("needs exact_int coefficients".into()),
            Method::FoelnerLogdet | Method::LatticeIndex | Method::LueckTrace if !have_foelner => {
                Err("needs a [foelner] section".into())
            }
            Method::FoelnerLogdet | Method::Series if !f.is_self_adjoint() => {
                Err("needs a self-adjoint element".into())
            }
            Method::LueckTrace if m.lueck_polynomial.is_none() => Err("needs methods.lueck_polynomial".into()),
            _ => Ok(()),
        }
    };
    if m.enabled.iter().any(|s| s == "all") {
        if m.enabled.len() != 1 {
            return Err(Error::Config(
                "methods.enabled: `all` cannot be combined with other names".into(),
            ));
        }
        return Ok(Method::ALL.into_iter().filter(|&x| check(x).is_ok()).collect());
    }
    let mut out = Vec::new();
    for name in &m.enabled {
        let method = Method::from_name(name)
            .ok_or_else(|| Error::Config(format!("methods.enabled: unknown method `{name}`")))?;
        check(method).map_err(|why| Error::Config(format!("method {name} {why} (group: {})", spec.kind_name())))?;
        if !out.contains(&method) {
            out.push(method);
        }
    }
    if out.is_empty() {
        return Err(Error::Config("methods.enabled is empty".into()));
    }
    out.sort();
    Ok(out)
}
