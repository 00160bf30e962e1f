use std::collections::BTreeMap;
use std::fmt::Write as _;

use roxmltree::{Document, Node};
use thiserror::Error;

use crate::net::{Label, NetError, NodeId, PetriNet, WfError, WorkflowNet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PnmlError {
    #[error("malformed document at {line}:{column}: {message}")]
    Parse { line: u32, column: u32, message: String },
    #[error("missing {0}")]
    Missing(&'static str),
    #[error("unsupported: {0}")]
    UnsupportedFeature(String),
    #[error("not a workflow net: {0}")]
    NotAWorkflowNet(WfError),
    #[error(transparent)]
    Net(#[from] NetError),
}

/// How transition names map to silent labels.
#[derive(Debug, Clone)]
pub struct PnmlOptions {
    /// Names that mark a transition as silent, compared exactly.
    pub silent_names: Vec<String>,
    /// Also treat names such as `skip`, `silent`, `tau_3` or `invisible` as
    /// silent (case-insensitive prefix match).
    pub fuzzy_silents: bool,
}

impl Default for PnmlOptions {
    fn default() -> Self {
        PnmlOptions { silent_names: vec!["tau".into()], fuzzy_silents: false }
    }
}

const FUZZY: [&str; 4] = ["tau", "skip", "silent", "invisible"];

impl PnmlOptions {
    fn is_silent(&self, name: &str) -> bool {
        let name = name.trim();
        if name.is_empty() || self.silent_names.iter().any(|s| s == name) {
            return true;
        }
        self.fuzzy_silents && {
            let lower = name.to_ascii_lowercase();
            FUZZY.iter().any(|f| lower.starts_with(f))
        }
    }
}

fn child<'a, 'i>(n: Node<'a, 'i>, tag: &str) -> Option<Node<'a, 'i>> {
    n.children().find(|c| c.has_tag_name(tag))
}

fn text_of(n: Node, tag: &str) -> Option<String> {
    let t = child(child(n, tag)?, "text")?;
    Some(t.text().unwrap_or("").to_string())
}

fn id_of(n: Node) -> Result<NodeId, PnmlError> {
    n.attribute("id").map(NodeId::new).ok_or(PnmlError::Missing("id attribute"))
}

/// Parses a single-net PNML document into a workflow net. Graphics and tool
/// specific data are ignored, except the common `$invisible$` activity marker.
pub fn parse_pnml(text: &str, opts: &PnmlOptions) -> Result<WorkflowNet, PnmlError> {
    let doc = Document::parse(text).map_err(|e| {
        let pos = e.pos();
        PnmlError::Parse { line: pos.row, column: pos.col, message: e.to_string() }
    })?;
    let root = doc.root_element();
    let nets: Vec<Node> = if root.has_tag_name("net") {
        vec![root]
    } else {
        root.children().filter(|c| c.has_tag_name("net")).collect()
    };
    let net = match nets.as_slice() {
        [] => return Err(PnmlError::Missing("net element")),
        [n] => *n,
        _ => return Err(PnmlError::UnsupportedFeature(format!("{} nets in one file", nets.len()))),
    };
    let pages: Vec<Node> = net.children().filter(|c| c.has_tag_name("page")).collect();
    let body = match pages.as_slice() {
        [] => net,
        [p] => *p,
        _ => return Err(PnmlError::UnsupportedFeature(format!("{} pages", pages.len()))),
    };
    if body.children().any(|c| c.has_tag_name("page")) {
        return Err(PnmlError::UnsupportedFeature("nested pages".into()));
    }

    let mut places = Vec::new();
    let mut transitions = Vec::new();
    let mut arcs = Vec::new();
    for n in body.children().filter(Node::is_element) {
        match n.tag_name().name() {
            "place" => places.push(id_of(n)?),
            "transition" => {
                let invisible = n
                    .children()
                    .filter(|c| c.has_tag_name("toolspecific"))
                    .any(|c| c.attribute("activity") == Some("$invisible$"));
                let label = match text_of(n, "name") {
                    Some(name) if !invisible && !opts.is_silent(&name) => Label::visible(name.trim()),
                    _ => Label::Silent,
                };
                transitions.push((id_of(n)?, label));
            }
            "arc" => {
                if let Some(w) = text_of(n, "inscription") {
                    if w.trim() != "1" {
                        return Err(PnmlError::UnsupportedFeature(format!("arc weight {}", w.trim())));
                    }
                }
                let src = n.attribute("source").ok_or(PnmlError::Missing("arc source"))?;
                let dst = n.attribute("target").ok_or(PnmlError::Missing("arc target"))?;
                arcs.push((NodeId::new(src), NodeId::new(dst)));
            }
            _ => {}
        }
    }
    let net = PetriNet::from_parts(places, transitions, arcs)?;
    WorkflowNet::validate(net).map_err(PnmlError::NotAWorkflowNet)
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Writes `wf` as PNML. Silent transitions get an empty name. Output depends
/// only on the net.
pub fn write_pnml(wf: &WorkflowNet) -> String {
    let net = wf.net();
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<pnml>\n");
    s.push_str("  <net id=\"net\" type=\"http://www.pnml.org/version-2009/grammar/ptnet\">\n");
    s.push_str("    <page id=\"page\">\n");
    let mut places: Vec<&NodeId> = net.places().iter().collect();
    places.sort();
    for p in places {
        let id = escape(p.as_str());
        if p == wf.source_id() {
            let _ = writeln!(
                s,
                "      <place id=\"{id}\"><name><text>{id}</text></name><initialMarking><text>1</text></initialMarking></place>"
            );
        } else {
            let _ = writeln!(s, "      <place id=\"{id}\"><name><text>{id}</text></name></place>");
        }
    }
    let transitions: BTreeMap<&NodeId, &Label> = net.transitions().iter().zip(net.labels()).collect();
    for (t, label) in transitions {
        let name = label.activity().map(|a| escape(a)).unwrap_or_default();
        let _ = writeln!(s, "      <transition id=\"{}\"><name><text>{name}</text></name></transition>", escape(t.as_str()));
    }
    for (k, (a, b)) in net.arcs().collect::<std::collections::BTreeSet<_>>().into_iter().enumerate() {
        let _ = writeln!(s, "      <arc id=\"arc{k}\" source=\"{}\" target=\"{}\"/>", escape(a.as_str()), escape(b.as_str()));
    }
    s.push_str("    </page>\n");
    let _ = writeln!(
        s,
        "    <finalmarkings><marking><place idref=\"{}\"><text>1</text></place></marking></finalmarkings>",
        escape(wf.sink_id().as_str())
    );
    s.push_str("  </net>\n</pnml>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::test_util::wf;

    const BASE: &str = r#"<?xml version="1.0"?>
<pnml><net id="n" type="ptnet"><page id="pg">
  <place id="src"><graphics/></place>
  <place id="snk"/>
  <transition id="t1"><name><text>register</text></name></transition>
  <arc id="a1" source="src" target="t1"><inscription><text>1</text></inscription></arc>
  <arc id="a2" source="t1" target="snk"/>
</page></net></pnml>"#;

    #[test]
    fn base_net_parses() {
        let n = parse_pnml(BASE, &PnmlOptions::default()).unwrap();
        assert_eq!(n.net().transition_count(), 1);
        assert_eq!(n.net().label_of(&"t1".into()).unwrap(), &Label::visible("register"));
        assert_eq!(n.source_id().as_str(), "src");
    }

    #[test]
    fn two_sources_rejected() {
        let doc = BASE.replace(r#"<place id="snk"/>"#, r#"<place id="snk"/><place id="x"/><arc id="a3" source="x" target="t1"/>"#);
        assert!(matches!(
            parse_pnml(&doc, &PnmlOptions::default()),
            Err(PnmlError::NotAWorkflowNet(WfError::MultipleSources(_)))
        ));
    }

    #[test]
    fn unsupported_features() {
        let weighted = BASE.replacen("<text>1</text></inscription>", "<text>2</text></inscription>", 1);
        assert!(matches!(parse_pnml(&weighted, &PnmlOptions::default()), Err(PnmlError::UnsupportedFeature(_))));
        let two = BASE.replace("</page></net>", "</page><page id=\"q\"/></net>");
        assert!(matches!(parse_pnml(&two, &PnmlOptions::default()), Err(PnmlError::UnsupportedFeature(_))));
        assert!(matches!(parse_pnml("<pnml><net", &PnmlOptions::default()), Err(PnmlError::Parse { .. })));
    }

    #[test]
    fn silent_conventions() {
        let named = |name: &str| BASE.replace("register", name);
        let strict = PnmlOptions::default();
        let fuzzy = PnmlOptions { fuzzy_silents: true, ..Default::default() };
        let silent = |doc: &str, o: &PnmlOptions| parse_pnml(doc, o).unwrap().net().labels()[0].is_silent();
        assert!(silent(&named(""), &strict));
        assert!(silent(&named("tau"), &strict));
        assert!(!silent(&named("skip_1"), &strict));
        assert!(silent(&named("skip_1"), &fuzzy));
        let prom = BASE.replace("</name></transition>", "</name><toolspecific tool=\"ProM\" activity=\"$invisible$\"/></transition>");
        assert!(silent(&prom, &strict));
    }

    #[test]
    fn write_then_parse_is_isomorphic() {
        let n = wf(&[("i", "a"), ("a", "p1"), ("a", "p2"), ("p1", "tau1"), ("p2", "b&c"), ("tau1", "p3"), ("b&c", "p4"), ("p3", "d"), ("p4", "d"), ("d", "o")]);
        let text = write_pnml(&n);
        assert_eq!(text, write_pnml(&n));
        let back = parse_pnml(&text, &PnmlOptions::default()).unwrap();
        assert!(back.net().isomorphic(n.net()));
        assert!(back.net().label_of(&"tau1".into()).unwrap().is_silent());
        assert_eq!(write_pnml(&back), text);
    }
}
