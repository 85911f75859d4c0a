use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::xml_escape as escape;

use super::{BasicEvent, FaultTreeDoc, FaultTreeError, FtNode, GateKind, HazardTree};

/// Parse the canonical fault-tree XML.
///
/// ```xml
/// <faultTree id="I_01">
///   <hazard id="HZ_02">
///     <or>
///       <event id="E_13" p="2e-3"/>
///       <event id="E_14" p="5e-4"/>
///     </or>
///   </hazard>
/// </faultTree>
/// ```
pub fn parse_fault_tree(xml_text: &str) -> Result<FaultTreeDoc, FaultTreeError> {
    let doc = roxmltree::Document::parse(xml_text).map_err(|e| FaultTreeError::Xml(e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "faultTree" {
        return Err(FaultTreeError::UnknownElement {
            path: String::new(),
            name: root.tag_name().name().to_string(),
        });
    }
    let item_id = required_attr(&root, "id", "faultTree")?;
    if item_id.is_empty() {
        return Err(FaultTreeError::Structure {
            path: "faultTree".into(),
            message: "empty item id".into(),
        });
    }
    let root_path = format!("faultTree[{item_id}]");

    let mut hazards = Vec::new();
    let mut seen_hazards = BTreeSet::new();
    for child in root.children().filter(|n| n.is_element()) {
        let name = child.tag_name().name();
        if name != "hazard" {
            return Err(FaultTreeError::UnknownElement {
                path: root_path.clone(),
                name: name.to_string(),
            });
        }
        let hazard_id = required_attr(&child, "id", &format!("{root_path}/hazard"))?;
        let path = format!("{root_path}/hazard[{hazard_id}]");
        if hazard_id.is_empty() {
            return Err(FaultTreeError::Structure {
                path,
                message: "empty hazard id".into(),
            });
        }
        if !seen_hazards.insert(hazard_id.clone()) {
            return Err(FaultTreeError::DuplicateHazard { path, id: hazard_id });
        }
        let mut nodes = child.children().filter(|n| n.is_element());
        let (Some(top), None) = (nodes.next(), nodes.next()) else {
            return Err(FaultTreeError::Structure {
                path,
                message: "hazard must contain exactly one <event>, <and> or <or>".into(),
            });
        };
        let mut events = BTreeSet::new();
        let root = parse_node(&top, &path, &hazard_id, &mut events)?;
        hazards.push(HazardTree { hazard_id, root });
    }
    if hazards.is_empty() {
        return Err(FaultTreeError::Structure {
            path: root_path,
            message: "no hazards".into(),
        });
    }
    Ok(FaultTreeDoc { item_id, hazards })
}

fn required_attr(node: &roxmltree::Node<'_, '_>, attr: &str, path: &str) -> Result<String, FaultTreeError> {
    node.attribute(attr)
        .map(|s| s.trim().to_string())
        .ok_or_else(|| FaultTreeError::MissingAttribute {
            path: path.to_string(),
            attribute: attr.to_string(),
        })
}

fn parse_node(
    node: &roxmltree::Node<'_, '_>,
    parent: &str,
    hazard: &str,
    seen: &mut BTreeSet<String>,
) -> Result<FtNode, FaultTreeError> {
    let name = node.tag_name().name();
    match name {
        "event" => {
            let id = required_attr(node, "id", &format!("{parent}/event"))?;
            let path = format!("{parent}/event[{id}]");
            if id.is_empty() {
                return Err(FaultTreeError::Structure {
                    path,
                    message: "empty event id".into(),
                });
            }
            let raw = required_attr(node, "p", &path)?;
            let probability = match raw.parse::<f64>() {
                Ok(p) if (0.0..=1.0).contains(&p) => p,
                _ => return Err(FaultTreeError::ProbabilityRange { path, value: raw }),
            };
            if node.children().any(|n| n.is_element()) {
                return Err(FaultTreeError::Structure {
                    path,
                    message: "event cannot have children".into(),
                });
            }
            if !seen.insert(id.clone()) {
                return Err(FaultTreeError::DuplicateEvent {
                    path,
                    hazard: hazard.to_string(),
                    id,
                });
            }
            Ok(FtNode::Event(BasicEvent { id, probability }))
        }
        "and" | "or" => {
            let kind = if name == "and" { GateKind::And } else { GateKind::Or };
            let path = format!("{parent}/{name}");
            let elements: Vec<_> = node.children().filter(|n| n.is_element()).collect();
            if elements.len() < 2 {
                return Err(FaultTreeError::GateArity {
                    path,
                    found: elements.len(),
                });
            }
            let children = elements
                .iter()
                .map(|c| parse_node(c, &path, hazard, seen))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(FtNode::Gate { kind, children })
        }
        other => Err(FaultTreeError::UnknownElement {
            path: parent.to_string(),
            name: other.to_string(),
        }),
    }
}

/// Serialize a document back to the canonical XML. Probabilities use the
/// shortest round-trip scientific form (`5e-4`).
pub fn to_xml(doc: &FaultTreeDoc) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(out, "<faultTree id=\"{}\">", escape(&doc.item_id));
    for h in &doc.hazards {
        let _ = writeln!(out, "  <hazard id=\"{}\">", escape(&h.hazard_id));
        write_node(&mut out, &h.root, 2);
        out.push_str("  </hazard>\n");
    }
    out.push_str("</faultTree>\n");
    out
}

fn write_node(out: &mut String, node: &FtNode, depth: usize) {
    let pad = "  ".repeat(depth);
    match node {
        FtNode::Event(e) => {
            let _ = writeln!(out, "{pad}<event id=\"{}\" p=\"{:e}\"/>", escape(&e.id), e.probability);
        }
        FtNode::Gate { kind, children } => {
            let _ = writeln!(out, "{pad}<{kind}>");
            for c in children {
                write_node(out, c, depth + 1);
            }
            let _ = writeln!(out, "{pad}</{kind}>");
        }
    }
}
