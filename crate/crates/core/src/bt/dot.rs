use std::fmt::Write as _;

use super::{BtDocument, BtNode};

/// One `digraph` per definition, concatenated in document order. Nodes are
/// named `n<k>` in pre-order within each graph.
pub fn emit_dot(doc: &BtDocument) -> String {
    let mut out = String::new();
    for d in doc.definitions() {
        let _ = writeln!(out, "digraph \"{}\" {{", quote(&d.id));
        let _ = writeln!(out, "  label=\"{}\";", quote(&d.id));
        out.push_str("  node [fontname=\"Helvetica\"];\n");
        let mut next = 0usize;
        write_node(&mut out, &d.root, &mut next, None);
        out.push_str("}\n");
    }
    out
}

fn write_node(out: &mut String, node: &BtNode, next: &mut usize, parent: Option<usize>) {
    let me = *next;
    *next += 1;
    let shape = match node {
        BtNode::Condition(_) => "ellipse",
        BtNode::Action(_) => "box",
        BtNode::SubTree(_) => "box, style=dashed",
        BtNode::Decorator { .. } => "diamond",
        _ => "square",
    };
    let _ = writeln!(out, "  n{me} [label=\"{}\", shape={shape}];", quote(node.label()));
    if let Some(p) = parent {
        let _ = writeln!(out, "  n{p} -> n{me};");
    }
    for c in node.children() {
        write_node(out, c, next, Some(me));
    }
}

fn quote(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
