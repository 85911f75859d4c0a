//! Compile fault trees and HARA tables into behavior-tree safety
//! supervisors, tick them deterministically, and evaluate them with
//! scripted fault-injection campaigns.
//!
//! Pipeline: [`fault_tree::parse_fault_tree`] + [`hara::parse_hara`] →
//! [`compiler::compile_supervisor`] → [`runtime::run_supervisor`] driven by
//! [`harness::run_campaign`].

pub mod bt;
pub mod compiler;
pub mod fault_tree;
pub mod gen;
pub mod hara;
pub mod harness;
pub mod runtime;

pub use bt::{emit_dot, emit_xml, parse_xml, structural_equal, BtDefinition, BtDocument, BtError, BtNode, TickStatus};
pub use compiler::{compile_supervisor, compile_supervisor_with, CompileError, CompileOptions, CompiledSupervisor};
pub use fault_tree::{parse_fault_tree, FaultTreeDoc, FaultTreeError, FtNode, GateKind, HazardTree};
pub use hara::{parse_hara, validate_cross, Asil, Diagnostic, HaraError, HaraTable, Severity};
pub use harness::{load_scenario, run_campaign, CampaignReport, HarnessError, Scenario};
pub use runtime::{run_supervisor, RuntimeError, TickTrace, TraceEntry};

pub(crate) fn xml_escape(s: &str) -> String {
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
