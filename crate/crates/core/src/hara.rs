//! Hazard analysis and risk assessment table, extended with the safety
//! state each (hazard, operating scenario) pair must enter.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fault_tree::FaultTreeDoc;

pub const HARA_HEADER: [&str; 6] = [
    "item_id",
    "hazard_id",
    "operating_scenario_id",
    "asil",
    "safety_goal_id",
    "safety_state_id",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HaraError {
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("bad header: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("line {line}: expected 6 fields, found {found}")]
    FieldCount { line: u64, found: usize },
    #[error("line {line}: empty `{column}`")]
    EmptyField { line: u64, column: &'static str },
    #[error("line {line}: invalid ASIL `{token}` (expected QM, A, B, C or D)")]
    InvalidAsil { line: u64, token: String },
    #[error("line {line}: duplicate row for ({item}, {hazard}, {os})")]
    DuplicateKey {
        line: u64,
        item: String,
        hazard: String,
        os: String,
    },
    #[error("no rows")]
    NoRows,
    #[error("unknown item `{0}`")]
    UnknownItem(String),
    #[error("unknown operating scenario `{os}` for item `{item}`")]
    UnknownScenario { item: String, os: String },
}

impl HaraError {
    pub fn is_validation(&self) -> bool {
        !matches!(self, HaraError::Csv(_) | HaraError::Header { .. } | HaraError::FieldCount { .. })
    }
}

/// Automotive safety integrity level, `QM < A < B < C < D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Asil {
    QM,
    A,
    B,
    C,
    D,
}

impl FromStr for Asil {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s.trim().to_ascii_uppercase().as_str() {
            "QM" => Ok(Asil::QM),
            "A" => Ok(Asil::A),
            "B" => Ok(Asil::B),
            "C" => Ok(Asil::C),
            "D" => Ok(Asil::D),
            _ => Err(()),
        }
    }
}

impl fmt::Display for Asil {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Asil::QM => "QM",
            Asil::A => "A",
            Asil::B => "B",
            Asil::C => "C",
            Asil::D => "D",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HaraRow {
    pub item_id: String,
    pub hazard_id: String,
    pub os_id: String,
    pub asil: Asil,
    pub safety_goal_id: String,
    pub safety_state_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct HaraTable {
    rows: Vec<HaraRow>,
}

impl HaraTable {
    /// Build a table, enforcing non-empty fields and `(item, hazard, os)`
    /// uniqueness. Line numbers in errors count the header as line 1.
    pub fn new(rows: Vec<HaraRow>) -> Result<Self, HaraError> {
        if rows.is_empty() {
            return Err(HaraError::NoRows);
        }
        let mut keys = BTreeSet::new();
        for (i, r) in rows.iter().enumerate() {
            let line = i as u64 + 2;
            for (column, value) in [
                ("item_id", &r.item_id),
                ("hazard_id", &r.hazard_id),
                ("operating_scenario_id", &r.os_id),
                ("safety_goal_id", &r.safety_goal_id),
                ("safety_state_id", &r.safety_state_id),
            ] {
                if value.is_empty() {
                    return Err(HaraError::EmptyField { line, column });
                }
            }
            if !keys.insert((&r.item_id, &r.hazard_id, &r.os_id)) {
                return Err(HaraError::DuplicateKey {
                    line,
                    item: r.item_id.clone(),
                    hazard: r.hazard_id.clone(),
                    os: r.os_id.clone(),
                });
            }
        }
        Ok(HaraTable { rows })
    }

    pub fn rows(&self) -> &[HaraRow] {
        &self.rows
    }

    /// Item ids in first-appearance order.
    pub fn items(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.item_id.as_str()) {
                out.push(&r.item_id);
            }
        }
        out
    }

    pub fn rows_for_item<'a, 'b>(&'a self, item: &'b str) -> impl Iterator<Item = &'a HaraRow> + use<'a, 'b> {
        self.rows.iter().filter(move |r| r.item_id == item)
    }

    /// Operating scenarios of an item in first-appearance order.
    pub fn scenarios(&self, item: &str) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in self.rows_for_item(item) {
            if !out.contains(&r.os_id.as_str()) {
                out.push(&r.os_id);
            }
        }
        out
    }

    pub fn rows_for(&self, item: &str, os: &str) -> Vec<&HaraRow> {
        self.rows_for_item(item).filter(|r| r.os_id == os).collect()
    }

    /// Serialize with `\n` line endings; `parse_hara` inverts this.
    pub fn to_csv(&self) -> String {
        let mut out = HARA_HEADER.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.item_id, r.hazard_id, r.os_id, r.asil, r.safety_goal_id, r.safety_state_id
            ));
        }
        out
    }
}

pub fn parse_hara(csv_text: &str) -> Result<HaraTable, HaraError> {
    let text = csv_text.strip_prefix('\u{feff}').unwrap_or(csv_text);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let header = reader.headers().map_err(|e| HaraError::Csv(e.to_string()))?.clone();
    let found: Vec<&str> = header.iter().collect();
    if found != HARA_HEADER {
        return Err(HaraError::Header {
            expected: HARA_HEADER.join(","),
            found: found.join(","),
        });
    }

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| HaraError::Csv(e.to_string()))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != HARA_HEADER.len() {
            return Err(HaraError::FieldCount {
                line,
                found: record.len(),
            });
        }
        for (i, value) in record.iter().enumerate() {
            if value.is_empty() {
                return Err(HaraError::EmptyField {
                    line,
                    column: HARA_HEADER[i],
                });
            }
        }
        let asil = record[3].parse::<Asil>().map_err(|()| HaraError::InvalidAsil {
            line,
            token: record[3].to_string(),
        })?;
        rows.push((
            line,
            HaraRow {
                item_id: record[0].to_string(),
                hazard_id: record[1].to_string(),
                os_id: record[2].to_string(),
                asil,
                safety_goal_id: record[4].to_string(),
                safety_state_id: record[5].to_string(),
            },
        ));
    }

    let mut keys = BTreeSet::new();
    for (line, r) in &rows {
        if !keys.insert((&r.item_id, &r.hazard_id, &r.os_id)) {
            return Err(HaraError::DuplicateKey {
                line: *line,
                item: r.item_id.clone(),
                hazard: r.hazard_id.clone(),
                os: r.os_id.clone(),
            });
        }
    }
    HaraTable::new(rows.into_iter().map(|(_, r)| r).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    fn error(message: String) -> Self {
        Diagnostic {
            severity: Severity::Error,
            message,
        }
    }

    fn warning(message: String) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            message,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.severity {
            Severity::Error => write!(f, "error: {}", self.message),
            Severity::Warning => write!(f, "warning: {}", self.message),
        }
    }
}

/// Check the HARA rows of `doc.item_id` against the fault-tree document.
/// Rows for other items are ignored.
pub fn validate_cross(table: &HaraTable, doc: &FaultTreeDoc) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let item = doc.item_id.as_str();
    let rows: Vec<&HaraRow> = table.rows_for_item(item).collect();
    if rows.is_empty() {
        out.push(Diagnostic::error(format!("no HARA rows for item `{item}`")));
        return out;
    }

    let mut reported = BTreeSet::new();
    for r in &rows {
        if doc.hazard(&r.hazard_id).is_none() && reported.insert(&r.hazard_id) {
            out.push(Diagnostic::error(format!(
                "item `{item}`: hazard `{}` appears in the HARA but not in the fault tree",
                r.hazard_id
            )));
        }
    }

    for h in &doc.hazards {
        if !rows.iter().any(|r| r.hazard_id == h.hazard_id) {
            out.push(Diagnostic::warning(format!(
                "item `{item}`: hazard `{}` is never referenced by the HARA",
                h.hazard_id
            )));
        }
    }

    let mut goals: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for r in &rows {
        goals.entry(&r.hazard_id).or_default().insert(&r.safety_goal_id);
    }
    for (hazard, set) in goals {
        if set.len() > 1 {
            let list: Vec<&str> = set.into_iter().collect();
            out.push(Diagnostic::warning(format!(
                "item `{item}`: hazard `{hazard}` maps to several safety goals: {}",
                list.join(", ")
            )));
        }
    }
    out
}

/// Ranking key for operating scenarios of one item. `Ord` sorts in priority
/// order: the first key ranks first (leftmost in the compiled tree).
///
/// Chain: highest ASIL, then the descending ASIL multiset compared
/// lexicographically, then the summed hazard top-event probability, all
/// descending; finally the scenario id ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct OsPriorityKey {
    pub max_asil: Asil,
    pub asils_desc: Vec<Asil>,
    pub probability_sum: f64,
    pub os_id: String,
}

impl Eq for OsPriorityKey {}

impl Ord for OsPriorityKey {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .max_asil
            .cmp(&self.max_asil)
            .then_with(|| other.asils_desc.cmp(&self.asils_desc))
            .then_with(|| other.probability_sum.total_cmp(&self.probability_sum))
            .then_with(|| self.os_id.cmp(&other.os_id))
    }
}

impl PartialOrd for OsPriorityKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// `hazard_probability` supplies top-event probabilities for the third
/// tie-break; unknown hazards count as 0.
pub fn os_priority_key(
    table: &HaraTable,
    item: &str,
    os: &str,
    hazard_probability: &BTreeMap<String, f64>,
) -> Result<OsPriorityKey, HaraError> {
    if table.rows_for_item(item).next().is_none() {
        return Err(HaraError::UnknownItem(item.to_string()));
    }
    let rows = table.rows_for(item, os);
    if rows.is_empty() {
        return Err(HaraError::UnknownScenario {
            item: item.to_string(),
            os: os.to_string(),
        });
    }
    let mut asils: Vec<Asil> = rows.iter().map(|r| r.asil).collect();
    asils.sort_unstable_by(|a, b| b.cmp(a));
    let probability_sum = rows
        .iter()
        .map(|r| hazard_probability.get(&r.hazard_id).copied().unwrap_or(0.0))
        .sum();
    Ok(OsPriorityKey {
        max_asil: asils[0],
        asils_desc: asils,
        probability_sum,
        os_id: os.to_string(),
    })
}

/// Scenarios of `item` sorted by [`OsPriorityKey`].
pub fn ranked_scenarios(
    table: &HaraTable,
    item: &str,
    hazard_probability: &BTreeMap<String, f64>,
) -> Result<Vec<OsPriorityKey>, HaraError> {
    let mut keys = table
        .scenarios(item)
        .into_iter()
        .map(|os| os_priority_key(table, item, os, hazard_probability))
        .collect::<Result<Vec<_>, _>>()?;
    if keys.is_empty() {
        return Err(HaraError::UnknownItem(item.to_string()));
    }
    keys.sort();
    Ok(keys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fault_tree::parse_fault_tree;
    use proptest::prelude::*;

    const TABLE_I: &str = include_str!("../data/i01_hara.csv");
    const FIG2: &str = include_str!("../data/i01_fault_tree.xml");

    #[test]
    fn parses_bundled_table() {
        let t = parse_hara(TABLE_I).unwrap();
        assert_eq!(t.rows().len(), 6);
        let r = t.rows_for("I_01", "OS_3");
        let hz02 = r.iter().find(|r| r.hazard_id == "HZ_02").unwrap();
        assert_eq!(hz02.asil, Asil::D);
        assert_eq!(hz02.safety_state_id, "SS_04");
        assert_eq!(t.scenarios("I_01"), vec!["OS_1", "OS_2", "OS_3"]);
    }

    #[test]
    fn crlf_and_lowercase_asil() {
        let text = "item_id,hazard_id,operating_scenario_id,asil,safety_goal_id,safety_state_id\r\nI,H,O,qm,G,S\r\n";
        let t = parse_hara(text).unwrap();
        assert_eq!(t.rows()[0].asil, Asil::QM);
    }

    #[test]
    fn empty_table_is_rejected() {
        let header = HARA_HEADER.join(",") + "\n";
        assert_eq!(parse_hara(&header), Err(HaraError::NoRows));
    }

    #[test]
    fn invalid_asil_names_the_line() {
        let text = format!("{}\nI,H,O1,C,G,S\nI,H,O2,E,G,S\n", HARA_HEADER.join(","));
        let err = parse_hara(&text).unwrap_err();
        assert_eq!(
            err,
            HaraError::InvalidAsil {
                line: 3,
                token: "E".into()
            }
        );
        assert!(err.to_string().contains("line 3"));
    }

    #[test]
    fn header_and_duplicates() {
        let bad = "item,hazard_id,operating_scenario_id,asil,safety_goal_id,safety_state_id\nI,H,O,C,G,S\n";
        assert!(matches!(parse_hara(bad), Err(HaraError::Header { .. })));
        let dup = format!("{}\nI,H,O,C,G,S\nI,H,O,D,G,S\n", HARA_HEADER.join(","));
        assert!(matches!(parse_hara(&dup), Err(HaraError::DuplicateKey { line: 3, .. })));
        let short = format!("{}\nI,H,O,C,G\n", HARA_HEADER.join(","));
        assert!(matches!(parse_hara(&short), Err(HaraError::FieldCount { .. })));
        let empty = format!("{}\nI,,O,C,G,S\n", HARA_HEADER.join(","));
        assert!(matches!(parse_hara(&empty), Err(HaraError::EmptyField { column: "hazard_id", .. })));
    }

    #[test]
    fn cross_validation() {
        let doc = parse_fault_tree(FIG2).unwrap();
        let t = parse_hara(TABLE_I).unwrap();
        assert!(validate_cross(&t, &doc).is_empty());

        let extra = parse_hara(&format!("{TABLE_I}I_01,HZ_99,OS_1,A,SG_09,SS_09\n")).unwrap();
        let d = validate_cross(&extra, &doc);
        assert_eq!(d.iter().filter(|d| d.is_error()).count(), 1);
        assert!(d[0].message.contains("HZ_99"));

        let two_goals = TABLE_I.replace("I_01,HZ_01,OS_2,C,SG_01", "I_01,HZ_01,OS_2,C,SG_09");
        let d = validate_cross(&parse_hara(&two_goals).unwrap(), &doc);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].severity, Severity::Warning);

        let only_hz02: String = TABLE_I.lines().filter(|l| !l.contains("HZ_01")).map(|l| format!("{l}\n")).collect();
        let d = validate_cross(&parse_hara(&only_hz02).unwrap(), &doc);
        assert_eq!(d.len(), 1);
        assert!(d[0].message.contains("HZ_01") && !d[0].is_error());

        let other_item = TABLE_I.replace("I_01", "I_02");
        let d = validate_cross(&parse_hara(&other_item).unwrap(), &doc);
        assert!(d[0].is_error());
    }

    #[test]
    fn scenario_ranking_matches_os_tree_order() {
        let t = parse_hara(TABLE_I).unwrap();
        let probs = parse_fault_tree(FIG2).unwrap().hazard_probabilities();
        let ranked: Vec<String> = ranked_scenarios(&t, "I_01", &probs).unwrap().into_iter().map(|k| k.os_id).collect();
        assert_eq!(ranked, ["OS_3", "OS_2", "OS_1"]);

        let os3 = os_priority_key(&t, "I_01", "OS_3", &probs).unwrap();
        assert_eq!(os3.max_asil, Asil::D);
        let os2 = os_priority_key(&t, "I_01", "OS_2", &probs).unwrap();
        let os1 = os_priority_key(&t, "I_01", "OS_1", &probs).unwrap();
        assert_eq!(os2.max_asil, os1.max_asil);
        assert_eq!(os2.asils_desc, vec![Asil::C, Asil::C]);
        assert_eq!(os1.asils_desc, vec![Asil::C, Asil::B]);
        assert!(os2 < os1);

        assert!(matches!(os_priority_key(&t, "I_09", "OS_1", &probs), Err(HaraError::UnknownItem(_))));
        assert!(matches!(os_priority_key(&t, "I_01", "OS_9", &probs), Err(HaraError::UnknownScenario { .. })));
    }

    #[test]
    fn single_scenario_ranks_first() {
        let t = parse_hara(&format!("{}\nI,H,O,B,G,S\n", HARA_HEADER.join(","))).unwrap();
        let ranked = ranked_scenarios(&t, "I", &BTreeMap::new()).unwrap();
        assert_eq!(ranked.len(), 1);
        assert_eq!(ranked[0].os_id, "O");
    }

    fn arb_asil() -> impl Strategy<Value = Asil> {
        prop_oneof![Just(Asil::QM), Just(Asil::A), Just(Asil::B), Just(Asil::C), Just(Asil::D)]
    }

    fn arb_table() -> impl Strategy<Value = HaraTable> {
        prop::collection::btree_map((0u8..3, 0u8..4, 0u8..5), (arb_asil(), 0u8..3), 1..30).prop_map(|m| {
            let rows = m
                .into_iter()
                .map(|((i, h, o), (asil, s))| HaraRow {
                    item_id: format!("I_{i}"),
                    hazard_id: format!("HZ_{h}"),
                    os_id: format!("OS_{o}"),
                    asil,
                    safety_goal_id: format!("SG_{h}"),
                    safety_state_id: format!("SS_{s}"),
                })
                .collect();
            HaraTable::new(rows).unwrap()
        })
    }

    proptest! {
        #[test]
        fn csv_round_trip(t in arb_table()) {
            prop_assert_eq!(parse_hara(&t.to_csv()).unwrap(), t);
        }

        #[test]
        fn asil_order_is_total(a in arb_asil(), b in arb_asil(), c in arb_asil()) {
            prop_assert!(a <= b || b <= a);
            if a <= b && b <= c { prop_assert!(a <= c); }
        }

        #[test]
        fn scenario_keys_are_strictly_ordered(t in arb_table(), probs in prop::collection::vec(0.0f64..1.0, 4)) {
            let probs: BTreeMap<String, f64> = probs.into_iter().enumerate().map(|(i, p)| (format!("HZ_{i}"), p)).collect();
            for item in t.items() {
                let keys = ranked_scenarios(&t, item, &probs).unwrap();
                for w in keys.windows(2) {
                    prop_assert_eq!(w[0].cmp(&w[1]), Ordering::Less);
                }
            }
        }
    }
}
