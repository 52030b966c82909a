//! JSON documents for trained forests, correction maps and reports.
//!
//! Forest trees are stored in preorder: each split is followed by its left
//! subtree, then its right subtree. Floats are written in shortest
//! round-trip form, so a reloaded model predicts bit-identically.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::correction::CorrectionModel;
use crate::error::{Error, Result};
use crate::evaluation::EvaluationReport;
use crate::forest::{ForestModel, Node, Tree, TrainingParams};

pub const FOREST_FORMAT: &str = "rfbias-forest";
pub const CORRECTION_FORMAT: &str = "rfbias-correction";
pub const REPORT_FORMAT: &str = "rfbias-report";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "t", rename_all = "lowercase")]
pub enum PreorderNode {
    Split { feature: usize, cutoff: f64 },
    Leaf { value: f64, count: usize },
}

#[derive(Debug, Serialize, Deserialize)]
struct ForestDocument {
    format: String,
    version: u32,
    params: TrainingParams,
    feature_names: Vec<String>,
    target_name: String,
    trees: Vec<Vec<PreorderNode>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Envelope<T> {
    format: String,
    version: u32,
    #[serde(flatten)]
    body: T,
}

pub fn encode_tree(tree: &Tree) -> Vec<PreorderNode> {
    tree.preorder()
        .into_iter()
        .map(|n| match *n {
            Node::Split { feature, cutoff, .. } => PreorderNode::Split { feature, cutoff },
            Node::Leaf { prediction, count } => PreorderNode::Leaf {
                value: prediction,
                count,
            },
        })
        .collect()
}

pub fn decode_tree(encoded: &[PreorderNode], n_features: usize) -> Result<Tree> {
    // Rebuild with an explicit stack of split nodes still awaiting children.
    let mut nodes: Vec<Node> = Vec::with_capacity(encoded.len());
    let mut open: Vec<(usize, bool)> = Vec::new();
    for (pos, item) in encoded.iter().enumerate() {
        if pos > 0 && open.is_empty() {
            return Err(Error::Format("trailing nodes after a complete tree".into()));
        }
        let idx = nodes.len();
        if let Some((parent, left_done)) = open.last_mut() {
            if let Node::Split { left, right, .. } = &mut nodes[*parent] {
                if *left_done {
                    *right = idx;
                    open.pop();
                } else {
                    *left = idx;
                    *left_done = true;
                }
            }
        }
        match *item {
            PreorderNode::Split { feature, cutoff } => {
                if feature >= n_features || !cutoff.is_finite() {
                    return Err(Error::Format(format!("invalid split at node {pos}")));
                }
                nodes.push(Node::Split {
                    feature,
                    cutoff,
                    left: usize::MAX,
                    right: usize::MAX,
                });
                open.push((idx, false));
            }
            PreorderNode::Leaf { value, count } => {
                if !value.is_finite() {
                    return Err(Error::Format(format!("non-finite leaf at node {pos}")));
                }
                nodes.push(Node::Leaf {
                    prediction: value,
                    count,
                });
            }
        }
    }
    if !open.is_empty() {
        return Err(Error::Format("truncated tree".into()));
    }
    Tree::from_nodes(nodes)
}

pub fn forest_to_json(model: &ForestModel) -> Result<String> {
    let doc = ForestDocument {
        format: FOREST_FORMAT.into(),
        version: FORMAT_VERSION,
        params: model.params.clone(),
        feature_names: model.feature_names.clone(),
        target_name: model.target_name.clone(),
        trees: model.trees.iter().map(encode_tree).collect(),
    };
    Ok(serde_json::to_string(&doc)?)
}

fn check_header(format: &str, version: u32, expected: &str) -> Result<()> {
    if format != expected {
        return Err(Error::Format(format!("expected `{expected}` document, found `{format}`")));
    }
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    Ok(())
}

pub fn forest_from_json(text: &str) -> Result<ForestModel> {
    let doc: ForestDocument = serde_json::from_str(text)?;
    check_header(&doc.format, doc.version, FOREST_FORMAT)?;
    if doc.trees.len() != doc.params.ntree() {
        return Err(Error::Format(format!(
            "{} trees stored but ntree is {}",
            doc.trees.len(),
            doc.params.ntree()
        )));
    }
    let p = doc.feature_names.len();
    let trees = doc
        .trees
        .iter()
        .map(|t| decode_tree(t, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(ForestModel {
        trees,
        params: doc.params,
        feature_names: doc.feature_names,
        target_name: doc.target_name,
    })
}

pub fn save_forest(model: &ForestModel, path: &Path) -> Result<()> {
    fs::write(path, forest_to_json(model)?)?;
    Ok(())
}

pub fn load_forest(path: &Path) -> Result<ForestModel> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    forest_from_json(&fs::read_to_string(path)?)
}

fn to_document<T: Serialize>(format: &str, body: &T) -> Result<String> {
    let env = Envelope {
        format: format.to_string(),
        version: FORMAT_VERSION,
        body,
    };
    let mut text = serde_json::to_string_pretty(&env)?;
    text.push('\n');
    Ok(text)
}

fn from_document<T: for<'de> Deserialize<'de>>(format: &str, text: &str) -> Result<T> {
    let env: Envelope<T> = serde_json::from_str(text)?;
    check_header(&env.format, env.version, format)?;
    Ok(env.body)
}

pub fn correction_to_json(model: &CorrectionModel) -> Result<String> {
    to_document(CORRECTION_FORMAT, model)
}

pub fn correction_from_json(text: &str) -> Result<CorrectionModel> {
    let m: CorrectionModel = from_document(CORRECTION_FORMAT, text)?;
    if m.a <= 0.0 || !m.a.is_finite() {
        return Err(Error::Format("correction scale `a` must be positive".into()));
    }
    Ok(m)
}

pub fn save_correction(model: &CorrectionModel, path: &Path) -> Result<()> {
    fs::write(path, correction_to_json(model)?)?;
    Ok(())
}

pub fn load_correction(path: &Path) -> Result<CorrectionModel> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    correction_from_json(&fs::read_to_string(path)?)
}

/// Reports keyed by prediction column name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedReport {
    pub column: String,
    #[serde(flatten)]
    pub report: EvaluationReport,
}

#[derive(Debug, Serialize, Deserialize)]
struct ReportBody {
    reports: Vec<NamedReport>,
}

pub fn reports_to_json(reports: &[NamedReport]) -> Result<String> {
    to_document(
        REPORT_FORMAT,
        &ReportBody {
            reports: reports.to_vec(),
        },
    )
}

pub fn reports_from_json(text: &str) -> Result<Vec<NamedReport>> {
    Ok(from_document::<ReportBody>(REPORT_FORMAT, text)?.reports)
}

pub fn reports_to_csv(reports: &[NamedReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["column"];
    header.extend(EvaluationReport::CSV_HEADER);
    w.write_record(&header)?;
    for r in reports {
        let mut row = vec![r.column.clone()];
        row.extend(r.report.csv_row());
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
