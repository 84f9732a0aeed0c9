//! Batch driver behind the `fklab` binary: runs the configured estimators,
//! compares their finals and renders CSV and JSON artifacts.

use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{CertificateChoice, Element, ExperimentConfig};
use crate::determinant::{
    self, fmt_full, lattice_index_logdet, lueck_trace, trace_series_logdet, EstimateReport, Method,
    PositivityCertificate,
};
use crate::error::{Error, Result};
use crate::expansive::certify_expansive;
use crate::finite_entropy::finite_entropy;
use crate::group::{foelner_defect, translate_defect_log, GroupSpec};
use crate::group_ring::{Coefficient, GroupRingElement};
use crate::mahler::{jensen_1d, mahler_measure, TorusGrid};

/// Methods whose final value estimates `log det f` and so take part in
/// pairwise comparison.
const COMPARED: [Method; 6] = [
    Method::FoelnerLogdet,
    Method::LatticeIndex,
    Method::Series,
    Method::Mahler,
    Method::Jensen,
    Method::FiniteEntropy,
];

#[derive(Clone, Debug)]
pub struct MethodOutcome {
    pub method: Method,
    pub report: Option<EstimateReport>,
    /// Method-specific JSON (certificates, exact values).
    pub extra: Option<Value>,
    pub error: Option<String>,
}

impl MethodOutcome {
    fn compared_final(&self) -> Option<(f64, f64)> {
        let r = self.report.as_ref()?;
        (COMPARED.contains(&self.method) && r.final_value.is_finite())
            .then(|| (r.final_value, r.error_bound.unwrap_or(0.0)))
    }

    fn to_json(&self) -> Value {
        let mut v = json!({ "method": self.method.name() });
        if let Some(r) = &self.report {
            v["final"] = json!(r.final_value);
            v["error_bound"] = json!(r.error_bound);
            v["steps"] = json!(r.steps.len());
            v["notes"] = json!(r.notes);
        }
        if let Some(x) = &self.extra {
            v["details"] = x.clone();
        }
        if let Some(e) = &self.error {
            v["error"] = json!(e);
        }
        v
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct Comparison {
    pub a: Method,
    pub b: Method,
    pub difference: f64,
    /// `eb_a + eb_b + allowance`.
    pub threshold: f64,
    pub disagree: bool,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub outcomes: Vec<MethodOutcome>,
    pub comparisons: Vec<Comparison>,
    pub summary: Value,
}

impl RunOutput {
    pub fn failures(&self) -> usize {
        self.outcomes.iter().filter(|o| o.error.is_some()).count()
    }

    pub fn disagreements(&self) -> usize {
        self.comparisons.iter().filter(|c| c.disagree).count()
    }

    /// `(file name, contents)` for every artifact, in a fixed order.
    pub fn files(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = self
            .outcomes
            .iter()
            .map(|o| {
                let csv = match &o.report {
                    Some(r) => r.to_csv(),
                    None => "n,set_size,value,error_bound\n".to_string(),
                };
                (format!("{}.csv", o.method.name()), csv)
            })
            .collect();
        let mut summary = serde_json::to_string_pretty(&self.summary).expect("json values serialise");
        summary.push('\n');
        out.push(("summary.json".into(), summary));
        out
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, body) in self.files() {
            std::fs::write(dir.join(name), body)?;
        }
        Ok(())
    }
}

/// Runs every configured method (concurrently) and compares the finals.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let outcomes: Vec<MethodOutcome> = cfg
        .methods
        .par_iter()
        .map(|&m| match run_method(cfg, m) {
            Ok(o) => o,
            Err(e) => MethodOutcome {
                method: m,
                report: None,
                extra: None,
                error: Some(e.to_string()),
            },
        })
        .collect();

    let allowance = cfg.tolerances.truncation_allowance;
    let mut comparisons = Vec::new();
    for (i, a) in outcomes.iter().enumerate() {
        for b in &outcomes[i + 1..] {
            if let (Some((va, ea)), Some((vb, eb))) = (a.compared_final(), b.compared_final()) {
                let difference = (va - vb).abs();
                let threshold = ea + eb + allowance;
                comparisons.push(Comparison {
                    a: a.method,
                    b: b.method,
                    difference,
                    threshold,
                    disagree: difference > threshold,
                });
            }
        }
    }

    let summary = json!({
        "group": describe_group(&cfg.spec),
        "element": cfg.element.to_text(),
        "coefficients": cfg.element.kind(),
        "methods": outcomes.iter().map(MethodOutcome::to_json).collect::<Vec<_>>(),
        "comparisons": comparisons,
        "disagreements": comparisons.iter().filter(|c| c.disagree).count(),
        "failures": outcomes.iter().filter(|o| o.error.is_some()).count(),
        "truncation_allowance": allowance,
    });
    Ok(RunOutput {
        outcomes,
        comparisons,
        summary,
    })
}

pub fn describe_group(spec: &GroupSpec) -> String {
    match spec {
        GroupSpec::FreeAbelian { rank } => format!("Z^{rank}"),
        GroupSpec::Finite(t) => format!("finite of order {}", t.order()),
        GroupSpec::Heisenberg => "Heisenberg".into(),
    }
}

fn run_method(cfg: &ExperimentConfig, method: Method) -> Result<MethodOutcome> {
    match (&cfg.element, &cfg.factor) {
        (Element::Int(f), h) => run_typed(
            cfg,
            method,
            f,
            h.as_ref().map(|h| match h {
                Element::Int(h) => h,
                _ => unreachable!("factor shares the element's coefficients"),
            }),
        ),
        (Element::Rational(f), h) => run_typed(
            cfg,
            method,
            f,
            h.as_ref().map(|h| match h {
                Element::Rational(h) => h,
                _ => unreachable!("factor shares the element's coefficients"),
            }),
        ),
        (Element::Float(f), h) => run_typed(
            cfg,
            method,
            f,
            h.as_ref().map(|h| match h {
                Element::Float(h) => h,
                _ => unreachable!("factor shares the element's coefficients"),
            }),
        ),
    }
}

fn positivity_certificate<T: Coefficient>(
    cfg: &ExperimentConfig,
    f: &GroupRingElement<T>,
    h: Option<&GroupRingElement<T>>,
) -> Result<PositivityCertificate<T>> {
    let torus = PositivityCertificate::TorusSymbol {
        points_per_dim: cfg.tolerances.mahler_points,
    };
    match cfg.certificate {
        CertificateChoice::Factor => Ok(PositivityCertificate::Factor(h.expect("validated").clone())),
        CertificateChoice::Contraction => Ok(PositivityCertificate::Contraction),
        CertificateChoice::Torus => Ok(torus),
        CertificateChoice::Auto => {
            if let Some(h) = h {
                return Ok(PositivityCertificate::Factor(h.clone()));
            }
            if PositivityCertificate::Contraction.verify(f).is_ok() {
                return Ok(PositivityCertificate::Contraction);
            }
            if matches!(f.spec(), GroupSpec::FreeAbelian { .. }) {
                return Ok(torus);
            }
            Err(Error::NoCertificate(
                "no positivity certificate applies; give element.factor or a contraction".into(),
            ))
        }
    }
}

fn run_typed<T: Coefficient>(
    cfg: &ExperimentConfig,
    method: Method,
    f: &GroupRingElement<T>,
    h: Option<&GroupRingElement<T>>,
) -> Result<MethodOutcome> {
    let sequence = || {
        cfg.foelner
            .as_ref()
            .ok_or_else(|| Error::Config(format!("{method} needs a [foelner] section")))?
            .sequence(&cfg.spec)
    };
    let int = || match &cfg.element {
        Element::Int(f) => Ok(f),
        _ => Err(Error::CoefficientKind(format!("{method} needs exact_int coefficients"))),
    };
    let mut extra = None;
    let report = match method {
        Method::FoelnerLogdet => {
            let cert = positivity_certificate(cfg, f, h)?;
            Some(determinant::foelner_logdet(f, &sequence()?, &cert)?)
        }
        Method::LatticeIndex => Some(lattice_index_logdet(int()?, &sequence()?)?),
        Method::Series => Some(trace_series_logdet(
            f,
            cfg.tolerances.series_tol,
            cfg.tolerances.series_max_terms,
        )?),
        Method::Mahler => {
            let GroupSpec::FreeAbelian { rank } = f.spec() else {
                return Err(Error::SpecMismatch("mahler needs a free abelian group".into()));
            };
            let grid = TorusGrid::with_cap(*rank, cfg.tolerances.mahler_points, cfg.tolerances.grid_cap)?;
            let r = mahler_measure(f, &grid)?;
            extra = Some(json!({
                "certified": r.certified,
                "grid_min": r.grid_min,
                "lipschitz_bound": r.lipschitz_bound,
                "points_per_dim": grid.points_per_dim,
            }));
            Some(EstimateReport::single(
                Method::Mahler,
                grid.points_per_dim,
                grid.total_points(),
                r.value,
                None,
            ))
        }
        Method::Jensen => {
            let v = jensen_1d(f)?;
            Some(EstimateReport::single(Method::Jensen, 0, f.support_len(), v, None))
        }
        Method::LueckTrace => {
            let q_text = cfg
                .lueck_polynomial
                .as_ref()
                .ok_or_else(|| Error::Config("lueck_trace needs methods.lueck_polynomial".into()))?;
            let q = q_text
                .iter()
                .map(|s| {
                    s.parse::<T>()
                        .map_err(|_| Error::Config(format!("methods.lueck_polynomial: bad coefficient `{s}`")))
                })
                .collect::<Result<Vec<T>>>()?;
            let lt = lueck_trace(f, &q, &sequence()?)?;
            extra = Some(json!({
                "exact_limit": lt.exact_limit.to_string(),
                "traces": lt.traces.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
            }));
            Some(lt.report)
        }
        Method::FiniteEntropy => {
            let f = int()?;
            let r = finite_entropy(f)?;
            let order = f.spec().order().unwrap_or(0);
            extra = Some(r.to_json());
            Some(EstimateReport::single(Method::FiniteEntropy, order, order, r.h_f, None))
        }
        Method::Expansive => {
            let c = certify_expansive(f)?;
            extra = Some(serde_json::to_value(&c)?);
            c.epsilon
                .map(|eps| EstimateReport::single(Method::Expansive, 0, f.support_len(), eps, None))
        }
    };
    Ok(MethodOutcome {
        method,
        report,
        extra,
        error: None,
    })
}

/// CSV `n,size,eq28,eq29,strong_value` over the configured Følner range, with
/// `K` the generating set (balls) or the standard generators (boxes).
pub fn foelner_stats(cfg: &ExperimentConfig) -> Result<String> {
    let plan = cfg
        .foelner
        .as_ref()
        .ok_or_else(|| Error::Config("foelner-stats needs a [foelner] section".into()))?;
    let mut ns: Vec<usize> = plan.ns.iter().flat_map(|&n| [n, n + 1]).collect();
    ns.sort_unstable();
    ns.dedup();
    let seq = plan.sequence_for(&cfg.spec, &ns)?;
    let k = plan.generators.elements();
    let rows = plan
        .ns
        .par_iter()
        .map(|&n| {
            let find = |m: usize| {
                let i = ns.binary_search(&m).expect("n and n + 1 were both enumerated");
                &seq.steps()[i].1
            };
            let (cur, next) = (find(n), find(n + 1));
            let size = cur.len() as f64;
            let eq28 = translate_defect_log(cur, k)?;
            let eq29 = (next.len() as f64 / size - 1.0) * size.ln();
            let strong = foelner_defect(cur, k)?.strong_value;
            Ok(format!(
                "{n},{},{},{},{}\n",
                cur.len(),
                fmt_full(eq28),
                fmt_full(eq29),
                fmt_full(strong)
            ))
        })
        .collect::<Result<Vec<String>>>()?;
    let mut out = String::from("n,size,eq28,eq29,strong_value\n");
    out.extend(rows);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::parse(text, Path::new(".")).unwrap()
    }

    #[test]
    fn z2_finite_entropy() {
        let c = cfg(r#"
[group]
kind = "finite"
cyclic = 2
[element]
text = "3 (0)\n1 (1)"
[methods]
enabled = ["finite_entropy"]
"#);
        let out = run(&c).unwrap();
        let details = &out.summary["methods"][0]["details"];
        assert_eq!(details["index"], 8);
        assert!((details["h_f"].as_f64().unwrap() - 0.5 * 8f64.ln()).abs() < 1e-15);
        assert_eq!(out.failures(), 0);
    }

    #[test]
    fn z1_cross_check_and_determinism() {
        let text = r#"
[group]
kind = "free_abelian"
rank = 1
[element]
text = "5 (0)\n1 (1)\n1 (-1)"
[foelner]
kind = "box"
ns = [50, 100, 200]
[tolerances]
truncation_allowance = 2e-2
"#;
        let a = run(&cfg(text)).unwrap();
        assert_eq!(a.failures(), 0, "{:#}", a.summary);
        assert_eq!(a.disagreements(), 0, "{:#}", a.summary);
        assert_eq!(a.comparisons.len(), 10);
        let b = run(&cfg(text)).unwrap();
        assert_eq!(a.files(), b.files());
    }

    #[test]
    fn mahler_of_non_self_adjoint_element() {
        let c = cfg(r#"
[group]
kind = "free_abelian"
rank = 1
[element]
text = "1 (1)\n-2 (0)"
[methods]
enabled = ["mahler", "expansive"]
"#);
        let out = run(&c).unwrap();
        assert_eq!(out.failures(), 0);
        let v = out.summary["methods"][0]["final"].as_f64().unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn failures_are_recorded() {
        let c = cfg(r#"
[group]
kind = "free_abelian"
rank = 1
[element]
text = "1 (0)\n1 (1)\n1 (-1)"
[methods]
enabled = ["series", "expansive"]
"#);
        let out = run(&c).unwrap();
        assert_eq!(out.failures(), 1);
        assert!(out.summary["methods"][0]["error"]
            .as_str()
            .unwrap()
            .contains("diverges"));
        assert_eq!(out.files()[0].1, "n,set_size,value,error_bound\n");
        // uncertified is not an error
        assert_eq!(out.summary["methods"][1]["details"]["is_certified"], false);
    }

    #[test]
    fn stats_on_finite_group_vanish() {
        let c = cfg(r#"
[group]
kind = "finite"
cyclic = 6
[element]
text = "1 (0)"
[foelner]
kind = "ball"
ns = [1, 2]
[methods]
enabled = ["expansive"]
"#);
        let csv = foelner_stats(&c).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "n,size,eq28,eq29,strong_value");
        for l in &lines[1..] {
            let cols: Vec<&str> = l.split(',').collect();
            assert_eq!(cols[1], "6");
            for x in &cols[2..] {
                assert_eq!(x.parse::<f64>().unwrap(), 0.0);
            }
        }
    }
}
