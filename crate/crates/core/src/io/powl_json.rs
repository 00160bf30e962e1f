use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::net::{IdSource, Label, NodeId};
use crate::powl::{CgNode, ChoiceGraphStruct, OrderStruct, PowlError, PowlNode, StructError};

#[derive(Debug, Error)]
pub enum PowlDocError {
    #[error("invalid document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("at {path:?}: {error}")]
    Structure { path: Vec<usize>, error: StructError },
    #[error(transparent)]
    Invalid(#[from] PowlError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum Doc {
    Transition {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<String>,
        #[serde(default)]
        label: Option<String>,
    },
    PartialOrder {
        children: Vec<Doc>,
        order: Vec<(usize, usize)>,
    },
    ChoiceGraph {
        children: Vec<Doc>,
        edges: Vec<(Endpoint, Endpoint)>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
enum Endpoint {
    Child(usize),
    Token(Token),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Token {
    Start,
    End,
}

fn to_doc(m: &PowlNode) -> Doc {
    match m {
        PowlNode::Leaf { id, label } => Doc::Transition {
            id: Some(id.as_str().to_string()),
            label: label.activity().map(|a| a.to_string()),
        },
        PowlNode::PartialOrder { order, children } => Doc::PartialOrder {
            children: children.iter().map(to_doc).collect(),
            order: order.relation().iter().copied().collect(),
        },
        PowlNode::ChoiceGraph { graph, children } => {
            let end = |x: CgNode| match x {
                CgNode::Start => Endpoint::Token(Token::Start),
                CgNode::End => Endpoint::Token(Token::End),
                CgNode::Child(i) => Endpoint::Child(i),
            };
            Doc::ChoiceGraph {
                children: children.iter().map(to_doc).collect(),
                edges: graph.edges().iter().map(|&(a, b)| (end(a), end(b))).collect(),
            }
        }
    }
}

/// Pretty-printed JSON document for `model`.
pub fn serialize_powl(model: &PowlNode) -> String {
    serde_json::to_string_pretty(&to_doc(model)).expect("documents always serialize")
}

/// Parses and validates a model. Leaves without an `id` get fresh `t#n` ids
/// that clash with none of the explicit ones.
pub fn parse_powl(text: &str) -> Result<PowlNode, PowlDocError> {
    let doc: Doc = serde_json::from_str(text)?;
    let ids = IdSource::new();
    reserve(&doc, &ids);
    let mut path = Vec::new();
    let model = from_doc(doc, &ids, &mut path)?;
    model.validate()?;
    Ok(model)
}

fn reserve(doc: &Doc, ids: &IdSource) {
    match doc {
        Doc::Transition { id: Some(id), .. } => ids.reserve_id(&NodeId::new(id)),
        Doc::Transition { id: None, .. } => {}
        Doc::PartialOrder { children, .. } | Doc::ChoiceGraph { children, .. } => {
            children.iter().for_each(|c| reserve(c, ids));
        }
    }
}

fn from_doc(doc: Doc, ids: &IdSource, path: &mut Vec<usize>) -> Result<PowlNode, PowlDocError> {
    let structure = |path: &Vec<usize>, error| PowlDocError::Structure { path: path.clone(), error };
    let kids = |children: Vec<Doc>, path: &mut Vec<usize>| -> Result<Vec<PowlNode>, PowlDocError> {
        let mut out = Vec::with_capacity(children.len());
        for (i, c) in children.into_iter().enumerate() {
            path.push(i);
            out.push(from_doc(c, ids, path)?);
            path.pop();
        }
        Ok(out)
    };
    Ok(match doc {
        Doc::Transition { id, label } => {
            let id = id.map(NodeId::from).unwrap_or_else(|| ids.transition());
            PowlNode::leaf(id, label.map(Label::visible).unwrap_or(Label::Silent))
        }
        Doc::PartialOrder { children, order } => {
            let o = OrderStruct::new(children.len(), order).map_err(|e| structure(path, e))?;
            PowlNode::partial_order(o, kids(children, path)?)
        }
        Doc::ChoiceGraph { children, edges } => {
            let node = |e: Endpoint| match e {
                Endpoint::Token(Token::Start) => CgNode::Start,
                Endpoint::Token(Token::End) => CgNode::End,
                Endpoint::Child(i) => CgNode::Child(i),
            };
            let g = ChoiceGraphStruct::new(children.len(), edges.into_iter().map(|(a, b)| (node(a), node(b))))
                .map_err(|e| structure(path, e))?;
            PowlNode::choice_graph(g, kids(children, path)?)
        }
    })
}
