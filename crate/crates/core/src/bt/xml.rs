use std::fmt::Write as _;

use super::{BtDefinition, BtDocument, BtError, BtNode, DecoratorKind};
use crate::xml_escape as escape;

/// Dialect version written to `<root BTCPP_format=...>`.
pub const BTCPP_FORMAT: &str = "3";

/// Render a document in the BehaviorTree.CPP XML dialect. Definitions are
/// written in document order with two-space indentation; equal documents
/// produce identical bytes.
pub fn emit_xml(doc: &BtDocument) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<root BTCPP_format=\"{BTCPP_FORMAT}\" main_tree_to_execute=\"{}\">",
        escape(doc.main_id())
    );
    for d in doc.definitions() {
        let _ = writeln!(out, "  <BehaviorTree ID=\"{}\">", escape(&d.id));
        write_node(&mut out, &d.root, 2);
        out.push_str("  </BehaviorTree>\n");
    }
    out.push_str("</root>\n");
    out
}

fn write_node(out: &mut String, node: &BtNode, depth: usize) {
    let pad = "  ".repeat(depth);
    let (open, close) = match node {
        BtNode::Condition(id) => {
            let _ = writeln!(out, "{pad}<Condition ID=\"{}\"/>", escape(id));
            return;
        }
        BtNode::Action(id) => {
            let _ = writeln!(out, "{pad}<Action ID=\"{}\"/>", escape(id));
            return;
        }
        BtNode::SubTree(id) => {
            let _ = writeln!(out, "{pad}<SubTree ID=\"{}\"/>", escape(id));
            return;
        }
        BtNode::Fallback(_) => ("<Fallback>".to_string(), "</Fallback>"),
        BtNode::Sequence(_) => ("<Sequence>".to_string(), "</Sequence>"),
        BtNode::Parallel { success_threshold, .. } => (
            format!("<Parallel success_threshold=\"{success_threshold}\">"),
            "</Parallel>",
        ),
        BtNode::Decorator {
            kind: DecoratorKind::Inverter,
            ..
        } => ("<Inverter>".to_string(), "</Inverter>"),
    };
    let _ = writeln!(out, "{pad}{open}");
    for c in node.children() {
        write_node(out, c, depth + 1);
    }
    let _ = writeln!(out, "{pad}{close}");
}

/// Parse the dialect written by [`emit_xml`]. Whitespace and comments are
/// insignificant. When `main_tree_to_execute` is absent the document must
/// hold exactly one definition.
pub fn parse_xml(text: &str) -> Result<BtDocument, BtError> {
    let xml = roxmltree::Document::parse(text).map_err(|e| BtError::Xml(e.to_string()))?;
    let root = xml.root_element();
    if root.tag_name().name() != "root" {
        return Err(BtError::UnknownElement {
            path: String::new(),
            name: root.tag_name().name().to_string(),
        });
    }

    let mut definitions = Vec::new();
    for el in root.children().filter(|n| n.is_element()) {
        let name = el.tag_name().name();
        if name != "BehaviorTree" {
            return Err(BtError::UnknownElement {
                path: "root".into(),
                name: name.to_string(),
            });
        }
        let id = id_attr(&el, "root/BehaviorTree")?;
        let path = format!("root/BehaviorTree[{id}]");
        let mut kids = el.children().filter(|n| n.is_element());
        let (Some(top), None) = (kids.next(), kids.next()) else {
            return Err(BtError::Structure {
                path,
                message: "BehaviorTree must have exactly one child".into(),
            });
        };
        let node = parse_node(&top, &path)?;
        definitions.push(BtDefinition::new(id, node));
    }

    let main_id = match root.attribute("main_tree_to_execute") {
        Some(m) => m.to_string(),
        None if definitions.len() == 1 => definitions[0].id.clone(),
        None => {
            return Err(BtError::MissingAttribute {
                path: "root".into(),
                attribute: "main_tree_to_execute".into(),
            })
        }
    };
    BtDocument::new(main_id, definitions)
}

fn id_attr(node: &roxmltree::Node<'_, '_>, path: &str) -> Result<String, BtError> {
    match node.attribute("ID") {
        Some(id) if !id.is_empty() => Ok(id.to_string()),
        _ => Err(BtError::MissingAttribute {
            path: path.to_string(),
            attribute: "ID".into(),
        }),
    }
}

fn parse_node(node: &roxmltree::Node<'_, '_>, parent: &str) -> Result<BtNode, BtError> {
    let name = node.tag_name().name();
    let path = format!("{parent}/{name}");
    let children = || -> Result<Vec<BtNode>, BtError> {
        node.children()
            .filter(|n| n.is_element())
            .map(|c| parse_node(&c, &path))
            .collect()
    };
    let leaf = |make: fn(String) -> BtNode| -> Result<BtNode, BtError> {
        if node.children().any(|n| n.is_element()) {
            return Err(BtError::Structure {
                path: path.clone(),
                message: "leaf node cannot have children".into(),
            });
        }
        Ok(make(id_attr(node, &path)?))
    };
    let composite = |c: Vec<BtNode>| -> Result<Vec<BtNode>, BtError> {
        if c.is_empty() {
            Err(BtError::Structure {
                path: path.clone(),
                message: "composite node without children".into(),
            })
        } else {
            Ok(c)
        }
    };

    match name {
        "Fallback" => Ok(BtNode::Fallback(composite(children()?)?)),
        "Sequence" => Ok(BtNode::Sequence(composite(children()?)?)),
        "Parallel" => {
            let raw = node.attribute("success_threshold").ok_or_else(|| BtError::MissingAttribute {
                path: path.clone(),
                attribute: "success_threshold".into(),
            })?;
            let success_threshold = raw.trim().parse::<usize>().map_err(|_| BtError::Structure {
                path: path.clone(),
                message: format!("invalid success_threshold `{raw}`"),
            })?;
            Ok(BtNode::Parallel {
                children: composite(children()?)?,
                success_threshold,
            })
        }
        "Inverter" => {
            let mut c = children()?;
            if c.len() != 1 {
                return Err(BtError::Structure {
                    path,
                    message: format!("Inverter needs exactly one child, found {}", c.len()),
                });
            }
            Ok(BtNode::inverter(c.remove(0)))
        }
        "Condition" => leaf(BtNode::Condition),
        "Action" => leaf(BtNode::Action),
        "SubTree" => leaf(BtNode::SubTree),
        other => Err(BtError::UnknownElement {
            path: parent.to_string(),
            name: other.to_string(),
        }),
    }
}
