//! Instance JSON, alpha files, graph edge lists and reduction artifacts.

use fjopt_core::clique;
use fjopt_core::graph::{GraphError, RegularGraph};
use fjopt_core::model::{build_clique_matrix, mix_matrices, regular_matrix, validate_instance, Violation};
use fjopt_core::reduction::{ReductionArtifact, ReductionKind, VertexCoverInstance};
use fjopt_core::scalar::rational_string;
use fjopt_core::{Bounds, InteractionMatrix, Matrix, OpinionInstance, Rational};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::number::parse_rational;

/// Input diagnostic with the offending field and, when known, its line.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct FormatError {
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for FormatError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}, field `{}`: {}", self.field, self.message),
            None => write!(f, "field `{}`: {}", self.field, self.message),
        }
    }
}

fn ferr(field: impl Into<String>, message: impl ToString) -> FormatError {
    FormatError {
        line: None,
        field: field.into(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDoc {
    pub agents: usize,
    pub innate: Vec<Value>,
    pub alpha_init: Vec<Value>,
    pub bounds: Vec<[Value; 2]>,
    pub interaction: InteractionDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduction: Option<ReductionBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum InteractionDoc {
    Dense {
        rows: Vec<Vec<Value>>,
    },
    Mix {
        delta: Value,
        clique_n: usize,
        edges: Vec<[usize; 2]>,
        degree: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReductionBlock {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<String>,
    pub theta: String,
    pub gap: String,
    pub k: usize,
}

fn num(field: &str, v: &Value) -> Result<Rational, FormatError> {
    let text = match v {
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        _ => return Err(ferr(field, "expected a number or a \"p/q\" string")),
    };
    parse_rational(&text).map_err(|e| ferr(field, e))
}

fn nums(field: &str, vs: &[Value]) -> Result<Vec<Rational>, FormatError> {
    vs.iter()
        .enumerate()
        .map(|(i, v)| num(&format!("{field}[{i}]"), v))
        .collect()
}

fn exact(v: &Rational) -> Value {
    Value::String(rational_string(v))
}

/// Line of the first occurrence of `"key"` in `text`, 1-based.
fn line_of(text: &str, field: &str) -> Option<usize> {
    let key = field.split(['[', '.']).next().unwrap_or(field);
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
}

fn interaction_from(doc: &InteractionDoc, agents: usize) -> Result<InteractionMatrix<Rational>, FormatError> {
    match doc {
        InteractionDoc::Dense { rows } => {
            if rows.len() != agents {
                return Err(ferr(
                    "interaction.rows",
                    format!("has {} rows, expected {agents}", rows.len()),
                ));
            }
            let mut cells = Vec::with_capacity(agents);
            for (i, row) in rows.iter().enumerate() {
                if row.len() != agents {
                    return Err(ferr(
                        format!("interaction.rows[{i}]"),
                        format!("has {} entries, expected {agents}", row.len()),
                    ));
                }
                cells.push(nums(&format!("interaction.rows[{i}]"), row)?);
            }
            let m = Matrix::from_rows(cells).map_err(|e| ferr("interaction.rows", e))?;
            InteractionMatrix::new(m).map_err(|e| ferr("interaction.rows", e))
        }
        InteractionDoc::Mix {
            delta,
            clique_n,
            edges,
            degree,
        } => {
            if clique_n + 1 != agents {
                return Err(ferr(
                    "interaction.clique_n",
                    format!("clique_n + 1 = {} but agents = {agents}", clique_n + 1),
                ));
            }
            let delta = num("interaction.delta", delta)?;
            let edges: Vec<(usize, usize)> = edges.iter().map(|e| (e[0], e[1])).collect();
            let graph = RegularGraph::new(*clique_n, *degree, &edges).map_err(|e| ferr("interaction.edges", e))?;
            let c = build_clique_matrix(*clique_n).map_err(|e| ferr("interaction.clique_n", e))?;
            mix_matrices(&c, &regular_matrix(&graph), &delta).map_err(|e| ferr("interaction.delta", e))
        }
    }
}

fn violation_field(v: &Violation) -> String {
    match v {
        Violation::NegativeEntry { row, .. } | Violation::RowNotStochastic { row, .. } => {
            format!("interaction.rows[{row}]")
        }
        Violation::InnateOutOfRange { agent } => format!("innate[{agent}]"),
        Violation::InitialOutOfBounds { agent } => format!("alpha_init[{agent}]"),
        Violation::NoPositiveLowerBound => "bounds".to_string(),
        Violation::BoundsInvalid { agent } => format!("bounds[{agent}]"),
        Violation::Reducible { .. } => "interaction".to_string(),
    }
}

pub fn instance_from_doc(doc: &InstanceDoc) -> Result<OpinionInstance<Rational>, FormatError> {
    let n = doc.agents;
    if n == 0 {
        return Err(ferr("agents", "must be positive"));
    }
    for (field, len) in [
        ("innate", doc.innate.len()),
        ("alpha_init", doc.alpha_init.len()),
        ("bounds", doc.bounds.len()),
    ] {
        if len != n {
            return Err(ferr(field, format!("has length {len}, expected agents = {n}")));
        }
    }
    let innate = nums("innate", &doc.innate)?;
    let alpha_init = nums("alpha_init", &doc.alpha_init)?;
    let bounds = doc
        .bounds
        .iter()
        .enumerate()
        .map(|(i, [l, u])| {
            Ok(Bounds::new(
                num(&format!("bounds[{i}][0]"), l)?,
                num(&format!("bounds[{i}][1]"), u)?,
            ))
        })
        .collect::<Result<Vec<_>, FormatError>>()?;
    let p = interaction_from(&doc.interaction, n)?;
    let inst = OpinionInstance::new(innate, bounds, alpha_init, p).map_err(|e| ferr("agents", e))?;
    let report = validate_instance(&inst, 0.0);
    if let Some(v) = report.violations.first() {
        return Err(ferr(violation_field(v), v));
    }
    Ok(inst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedInstance {
    pub instance: OpinionInstance<Rational>,
    pub doc: InstanceDoc,
}

/// Parses and validates an instance; errors carry the line and field.
pub fn parse_instance(text: &str) -> Result<ParsedInstance, FormatError> {
    let doc: InstanceDoc = serde_json::from_str(text).map_err(|e| FormatError {
        line: Some(e.line()),
        field: "<json>".to_string(),
        message: e.to_string(),
    })?;
    let instance = instance_from_doc(&doc).map_err(|mut e| {
        e.line = line_of(text, &e.field);
        e
    })?;
    Ok(ParsedInstance { instance, doc })
}

/// Dense document with every number as an exact "p/q" string.
pub fn instance_doc(inst: &OpinionInstance<Rational>) -> InstanceDoc {
    let p = inst.interaction().matrix();
    InstanceDoc {
        agents: inst.agents(),
        innate: inst.innate().iter().map(exact).collect(),
        alpha_init: inst.alpha_init().iter().map(exact).collect(),
        bounds: inst.bounds().iter().map(|b| [exact(&b.lower), exact(&b.upper)]).collect(),
        interaction: InteractionDoc::Dense {
            rows: (0..p.rows()).map(|i| p.row(i).iter().map(exact).collect()).collect(),
        },
        reduction: None,
    }
}

/// Instance document plus a `reduction` block. L1 gadgets use the compact
/// `mix` interaction form.
pub fn artifact_doc(a: &ReductionArtifact) -> InstanceDoc {
    let mut doc = instance_doc(&a.instance);
    let g = a.vc.graph();
    if let (ReductionKind::L1, Some(delta)) = (a.kind, &a.delta) {
        doc.interaction = InteractionDoc::Mix {
            delta: exact(delta),
            clique_n: g.n(),
            edges: g.edges().iter().map(|&(u, v)| [u, v]).collect(),
            degree: g.degree(),
        };
    }
    doc.reduction = Some(ReductionBlock {
        kind: a.kind.tag().to_string(),
        delta: a.delta.as_ref().map(rational_string),
        theta: rational_string(&a.theta),
        gap: rational_string(&a.gap),
        k: a.vc.k(),
    });
    doc
}

/// Sorted-key compact JSON.
pub fn canonical_json(doc: &InstanceDoc) -> String {
    let v = serde_json::to_value(doc).expect("instance documents serialize");
    serde_json::to_string(&v).expect("values serialize")
}

pub fn pretty_json(doc: &InstanceDoc) -> String {
    let v = serde_json::to_value(doc).expect("instance documents serialize");
    serde_json::to_string_pretty(&v).expect("values serialize")
}

/// First 16 hex digits of the SHA-256 of the canonical JSON.
pub fn digest(doc: &InstanceDoc) -> String {
    let hash = Sha256::digest(canonical_json(doc).as_bytes());
    hex::encode(&hash[..8])
}

pub fn instance_digest(inst: &OpinionInstance<Rational>) -> String {
    digest(&instance_doc(inst))
}

/// A JSON array of numbers or "p/q" strings, one per agent.
pub fn parse_alpha(text: &str, agents: usize) -> Result<Vec<Rational>, FormatError> {
    let vs: Vec<Value> = serde_json::from_str(text).map_err(|e| FormatError {
        line: Some(e.line()),
        field: "alpha".to_string(),
        message: e.to_string(),
    })?;
    if vs.len() != agents {
        return Err(ferr("alpha", format!("has length {}, expected {agents}", vs.len())));
    }
    nums("alpha", &vs)
}

/// Edge list with header `n d k`; `#` starts a comment.
pub fn parse_graph(text: &str) -> Result<VertexCoverInstance, FormatError> {
    let mut header: Option<[usize; 3]> = None;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = |field: &str, message: String| FormatError {
            line: Some(idx + 1),
            field: field.to_string(),
            message,
        };
        let parts: Result<Vec<usize>, _> = line.split_whitespace().map(str::parse::<usize>).collect();
        let parts = parts.map_err(|_| at("graph", format!("expected nonnegative integers, got `{line}`")))?;
        match (header.is_some(), parts.len()) {
            (false, 3) => header = Some([parts[0], parts[1], parts[2]]),
            (false, _) => return Err(at("header", "expected `n d k`".to_string())),
            (true, 2) => edges.push((parts[0], parts[1])),
            (true, _) => return Err(at("edge", format!("expected `u v`, got `{line}`"))),
        }
    }
    let [n, d, k] = header.ok_or_else(|| ferr("header", "missing `n d k` line"))?;
    let graph = RegularGraph::new(n, d, &edges).map_err(|e| {
        let line = match e {
            GraphError::VertexOutOfRange(u, v, _) | GraphError::DuplicateEdge(u, v) => edge_line(text, u, v),
            GraphError::SelfLoop(u) => edge_line(text, u, u),
            _ => None,
        };
        FormatError {
            line,
            field: "edges".to_string(),
            message: e.to_string(),
        }
    })?;
    VertexCoverInstance::new(graph, k).map_err(|e| ferr("header", e))
}

fn edge_line(text: &str, u: usize, v: usize) -> Option<usize> {
    // Last match, so a duplicate points at its second occurrence.
    text.lines().enumerate().skip(1).filter_map(|(i, l)| {
        let p: Vec<usize> = l.split('#').next()?.split_whitespace().filter_map(|s| s.parse().ok()).collect();
        (p.len() == 2 && ((p[0], p[1]) == (u, v) || (p[1], p[0]) == (u, v))).then_some(i + 1)
    })
    .last()
}

pub fn graph_text(vc: &VertexCoverInstance) -> String {
    let g = vc.graph();
    let mut s = format!("{} {} {}\n", g.n(), g.degree(), vc.k());
    for (u, v) in g.edges() {
        s.push_str(&format!("{u} {v}\n"));
    }
    s
}

/// The clique gadget on `n` vertices as a document, for tests and examples.
pub fn clique_doc(n: usize) -> InstanceDoc {
    instance_doc(&clique::clique_instance(n).expect("n >= 2"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use fjopt_core::clique::DeltaVariant;
    use fjopt_core::reduction::{build_l0_reduction, build_l1_reduction, DeltaChoice};
    use fjopt_core::Scalar;

    fn triangle(k: usize) -> VertexCoverInstance {
        VertexCoverInstance::new(RegularGraph::triangle(), k).unwrap()
    }

    #[test]
    fn round_trip_dense() {
        let doc = clique_doc(3);
        let parsed = parse_instance(&pretty_json(&doc)).unwrap();
        assert_eq!(parsed.instance, clique::clique_instance::<Rational>(3).unwrap());
        assert_eq!(digest(&parsed.doc), digest(&doc));
    }

    #[test]
    fn round_trip_mix_artifact() {
        let a = build_l1_reduction(&triangle(2), &DeltaChoice::Formula(DeltaVariant::Paper)).unwrap();
        let doc = artifact_doc(&a);
        let text = pretty_json(&doc);
        assert!(text.contains("\"type\": \"mix\""));
        assert!(text.contains("\"delta\": \"729/1000000000\""));
        assert_eq!(parse_instance(&text).unwrap().instance, a.instance);
        let l0 = artifact_doc(&build_l0_reduction(&triangle(2)).unwrap());
        assert_eq!(l0.reduction.unwrap().theta, "4/3");
    }

    #[test]
    fn decimals_and_fractions_accepted() {
        let text = r#"{"agents": 2, "innate": [0.25, "1/3"], "alpha_init": [1, "1/2"],
            "bounds": [[1, 1], [0, 1]],
            "interaction": {"type": "dense", "rows": [[0, 1], ["1/1", 0.0]]}}"#;
        let inst = parse_instance(text).unwrap().instance;
        assert_eq!(inst.innate()[0], Rational::from_ratio(1, 4));
        assert_eq!(inst.innate()[1], Rational::from_ratio(1, 3));
    }

    #[test]
    fn diagnostics_name_line_and_field() {
        let text = "{\n\"agents\": 2,\n\"innate\": [0, 1],\n\"alpha_init\": [1, 0],\n\"bounds\": [[1, 1], [0, 1]],\n\"interaction\": {\"type\": \"dense\", \"rows\": [[0, 1], [0.5, 0]]}\n}";
        let e = parse_instance(text).unwrap_err();
        assert_eq!(e.field, "interaction.rows[1]");
        assert_eq!(e.line, Some(6));
        assert!(e.to_string().contains("row not stochastic"));
        let e = parse_instance("{\n\"agents\": 2,\n\"innate\": [0, \"x\"]}").unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(parse_instance("{\"agents\": 1, \"extra\": 0}").is_err());
    }

    #[test]
    fn graph_files() {
        let vc = parse_graph("# triangle\n3 2 2\n1 2\n2 3\n1 3\n").unwrap();
        assert_eq!(vc.graph(), &RegularGraph::triangle());
        assert_eq!(parse_graph(&graph_text(&vc)).unwrap(), vc);
        let e = parse_graph("4 2 2\n1 2\n2 3\n3 4\n").unwrap_err();
        assert!(e.message.contains("vertex 1"), "{e}");
        let e = parse_graph("3 2 2\n1 2\n1 2\n").unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(parse_graph("3 2\n").is_err());
        assert!(parse_graph("3 2 0\n1 2\n2 3\n1 3\n").is_err());
    }

    #[test]
    fn alpha_files() {
        let a = parse_alpha("[1, \"1/2\", 0.25]", 3).unwrap();
        assert_eq!(a[1], Rational::from_ratio(1, 2));
        assert!(parse_alpha("[1]", 3).is_err());
        assert_eq!(a[2].to_f64(), 0.25);
    }
}
