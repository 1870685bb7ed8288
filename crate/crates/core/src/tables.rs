//! Published reference values for the two-agent tasks, transcribed verbatim.
//!
//! Decimal entries keep the printed digits; fractions are exact. A computed
//! rational matches a decimal entry when it lies within `DECIMAL_TOLERANCE`.

use std::fmt;

use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::tasks::{StartRule, TaskKind, TaskSpec};

/// Printed decimals carry five or six digits.
pub const DECIMAL_TOLERANCE: f64 = 5e-6;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PublishedValue {
    Exact(Rational),
    Decimal { value: Rational, text: String },
}

impl PublishedValue {
    /// Fractions and integers are exact; anything with a decimal point is a
    /// rounded decimal.
    pub fn parse(text: &str) -> Result<PublishedValue> {
        let value = rational::parse(text)?;
        if text.contains('.') || text.contains(',') {
            Ok(PublishedValue::Decimal { value, text: text.to_string() })
        } else {
            Ok(PublishedValue::Exact(value))
        }
    }

    pub fn value(&self) -> &Rational {
        match self {
            PublishedValue::Exact(v) | PublishedValue::Decimal { value: v, .. } => v,
        }
    }

    pub fn to_f64(&self) -> f64 {
        rational::to_f64(self.value())
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, PublishedValue::Exact(_))
    }

    /// Exact equality for fractions, `DECIMAL_TOLERANCE` for decimals.
    pub fn matches(&self, computed: &Rational) -> bool {
        match self {
            PublishedValue::Exact(v) => v == computed,
            PublishedValue::Decimal { value, .. } => {
                rational::to_f64(&(value - computed).abs()) <= DECIMAL_TOLERANCE
            }
        }
    }
}

impl fmt::Display for PublishedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PublishedValue::Exact(v) => f.write_str(&rational::format(v)),
            PublishedValue::Decimal { text, .. } => f.write_str(text),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TableId {
    RendezvousAny = 1,
    RendezvousDistinct = 2,
    RendezvousDistinctSymmetric = 3,
    DominationAny = 4,
    DominationDistinct = 5,
}

impl TableId {
    pub const ALL: [TableId; 5] = [
        TableId::RendezvousAny,
        TableId::RendezvousDistinct,
        TableId::RendezvousDistinctSymmetric,
        TableId::DominationAny,
        TableId::DominationDistinct,
    ];

    pub fn from_number(n: u8) -> Result<TableId> {
        TableId::ALL
            .into_iter()
            .find(|t| t.number() == n)
            .ok_or_else(|| Error::InvalidParameter(format!("table must be 1..5, got {n}")))
    }

    pub fn number(self) -> u8 {
        self as u8
    }

    pub fn spec(self) -> TaskSpec {
        match self {
            TableId::RendezvousAny => TaskSpec::rendezvous(StartRule::Any),
            TableId::RendezvousDistinct => TaskSpec::rendezvous(StartRule::Distinct),
            TableId::RendezvousDistinctSymmetric => TaskSpec::rendezvous(StartRule::Distinct).symmetric(true),
            TableId::DominationAny => TaskSpec::domination(StartRule::Any),
            TableId::DominationDistinct => TaskSpec::domination(StartRule::Distinct),
        }
    }

    pub fn kind(self) -> TaskKind {
        self.spec().kind
    }
}

/// One printed row. `npa_level2` marks values computed at level 2 rather
/// than 1+ab.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PublishedRow {
    pub table: TableId,
    pub graph: &'static str,
    pub random: &'static str,
    pub classical: &'static str,
    pub npa: &'static str,
    pub npa_level2: bool,
    pub advantage: &'static str,
}

impl PublishedRow {
    pub fn random_value(&self) -> PublishedValue {
        PublishedValue::parse(self.random).expect("transcribed value parses")
    }

    pub fn classical_value(&self) -> PublishedValue {
        PublishedValue::parse(self.classical).expect("transcribed value parses")
    }

    pub fn npa_value(&self) -> PublishedValue {
        PublishedValue::parse(self.npa).expect("transcribed value parses")
    }

    pub fn advantage_value(&self) -> f64 {
        self.advantage.parse().expect("transcribed value parses")
    }
}

const fn row(
    table: TableId,
    graph: &'static str,
    random: &'static str,
    classical: &'static str,
    npa: &'static str,
    npa_level2: bool,
    advantage: &'static str,
) -> PublishedRow {
    PublishedRow { table, graph, random, classical, npa, npa_level2, advantage }
}

use TableId::*;

const L1: bool = false;
const L2: bool = true;

static ROWS: &[PublishedRow] = &[
    row(RendezvousAny, "tetrahedron", "1/4", "5/8", "0.64506", L2, "5"),
    row(RendezvousAny, "square curly", "1/4", "5/8", "0.64506", L2, "5"),
    row(RendezvousAny, "pentagon curly", "1/5", "13/25", "0.53009", L2, "3"),
    row(RendezvousAny, "arrow", "0.20667", "13/25", "0.52051", L2, "0.1"),
    row(RendezvousAny, "clamp", "0.18827", "7/18", "0.40063", L2, "6"),
    row(RendezvousAny, "hat", "0.17207", "5/9", "7/12", L1, "7"),
    row(RendezvousAny, "house", "0.18210", "5/9", "7/12", L1, "7"),
    row(RendezvousAny, "caltrop", "0.20833", "5/9", "7/12", L1, "8"),
    row(RendezvousAny, "cube", "1/8", "5/16", "0.32253", L2, "5"),
    row(RendezvousAny, "triangle", "1/3", "5/9", "7/12", L1, "13"),
    row(RendezvousAny, "pentagon", "1/5", "9/25", "0.38090", L1, "13"),
    row(RendezvousAny, "hexagon", "1/6", "5/18", "0.29167", L1, "13"),
    row(RendezvousAny, "heptagon", "1/7", "13/49", "0.27864", L1, "11"),
    row(RendezvousAny, "ennagon", "1/9", "17/81", "0.21887", L1, "9"),
    row(RendezvousAny, "decagon", "1/10", "9/50", "0.19045", L1, "13"),
    row(RendezvousAny, "11-gon", "1/11", "21/121", "0.17998", L1, "8"),
    row(RendezvousAny, "13-gon", "1/13", "25/169", "0.15273", L1, "7"),
    row(RendezvousAny, "3-line curly", "1/3", "5/9", "7/12", L1, "13"),
    row(RendezvousAny, "5-line curly", "1/5", "9/25", "0.38090", L1, "13"),
    row(RendezvousAny, "7-line curly", "1/7", "13/49", "0.27864", L1, "11"),
    row(RendezvousDistinct, "tetrahedron", "2/9", "1/2", "8/15", L2, "12"),
    row(RendezvousDistinct, "square curly", "2/9", "1/2", "8/15", L2, "12"),
    row(RendezvousDistinct, "pentagon curly", "1/6", "2/5", "0.41316", L2, "6"),
    row(RendezvousDistinct, "arrow", "2/21", "3/14", "0.22857", L2, "12"),
    row(RendezvousDistinct, "clamp", "0.13704", "4/15", "0.28229", L2, "12"),
    row(RendezvousDistinct, "hat", "0.15093", "7/15", "1/2", L1, "11"),
    row(RendezvousDistinct, "house", "0.15463", "7/15", "1/2", L1, "11"),
    row(RendezvousDistinct, "caltrop", "7/40", "7/15", "1/2", L1, "11"),
    row(RendezvousDistinct, "cube", "2/21", "3/14", "0.22857", L2, "12"),
    row(RendezvousDistinctSymmetric, "tetrahedron", "2/9", "1/2", "8/15", L2, "12"),
    row(RendezvousDistinctSymmetric, "square curly", "2/9", "1/2", "8/15", L2, "12"),
    row(RendezvousDistinctSymmetric, "pentagon curly", "1/6", "2/5", "0.41316", L2, "6"),
    row(RendezvousDistinctSymmetric, "arrow", "1/6", "2/5", "0.40490", L2, "2"),
    row(RendezvousDistinctSymmetric, "clamp", "0.13704", "4/15", "0.28229", L2, "12"),
    row(RendezvousDistinctSymmetric, "hat", "0.15093", "7/15", "1/2", L1, "11"),
    row(RendezvousDistinctSymmetric, "house", "0.15463", "7/15", "1/2", L1, "11"),
    row(RendezvousDistinctSymmetric, "caltrop", "7/40", "7/15", "1/2", L1, "11"),
    row(RendezvousDistinctSymmetric, "cube", "2/21", "3/14", "0.22857", L2, "12"),
    row(RendezvousDistinctSymmetric, "triangle", "1/4", "1/3", "1/2", L1, "200"),
    row(RendezvousDistinctSymmetric, "pentagon", "1/8", "1/5", "1/4", L1, "67"),
    row(RendezvousDistinctSymmetric, "hexagon", "1/10", "2/15", "1/5", L1, "200"),
    row(RendezvousDistinctSymmetric, "heptagon", "1/12", "1/7", "1/6", L1, "40"),
    row(RendezvousDistinctSymmetric, "ennagon", "1/16", "1/9", "1/8", L1, "29"),
    row(RendezvousDistinctSymmetric, "decagon", "1/18", "4/45", "1/9", L1, "67"),
    row(RendezvousDistinctSymmetric, "11-gon", "1/20", "1/11", "1/10", L1, "22"),
    row(RendezvousDistinctSymmetric, "13-gon", "1/24", "1/13", "1/12", L1, "18"),
    row(RendezvousDistinctSymmetric, "3-line curly", "1/4", "1/3", "1/2", L1, "200"),
    row(RendezvousDistinctSymmetric, "5-line curly", "1/8", "1/5", "1/4", L1, "67"),
    row(RendezvousDistinctSymmetric, "7-line curly", "1/12", "1/7", "1/6", L1, "40"),
    row(DominationAny, "pentagon curly", "4.2", "4.64", "4.67361", L2, "8"),
    row(DominationAny, "caltrop", "5.458333", "5.88889", "5.916667", L1, "6"),
    row(DominationAny, "spike", "4.51333", "4.92", "4.93", L1, "2"),
    row(DominationAny, "clamp", "4.94907", "5.44444", "5.45453", L1, "2"),
    row(DominationAny, "pentagon", "4.2", "4.6", "4.67361", L1, "18"),
    row(DominationAny, "hexagon", "4.50000", "4.95000", "5.0000", L1, "13"),
    row(DominationAny, "heptagon", "4.71428", "5.08163", "5.15517", L1, "20"),
    row(DominationAny, "octagon", "4.875", "5.1875", "5.23928", L1, "17"),
    row(DominationAny, "9-gon", "5", "5.24691", "5.29434", L1, "19"),
    row(DominationAny, "10-gon", "5.1", "5.3", "5.33680", L1, "18"),
    row(DominationAny, "11-gon", "5.18182", "5.39669", "5.43395", L1, "17"),
    row(DominationAny, "12-gon", "5.25", "5.47222", "5.5", L1, "13"),
    row(DominationAny, "13-gon", "5.30769", "5.50888", "5.54543", L1, "18"),
    row(DominationAny, "6-line curly", "4.11111", "4.44445", "4.44895", L1, "1"),
    row(DominationDistinct, "pentagon curly", "4,27778", "4.7", "4.73987", L1, "9"),
    row(DominationDistinct, "clamp", "5.01482", "5.4", "5.41210", L2, "3"),
    row(DominationDistinct, "caltrop", "5.48750", "5.86667", "5.9", L1, "9"),
    row(DominationDistinct, "spike", "4.56944", "4.9", "4.9125", L1, "4"),
    row(DominationDistinct, "pentagon", "4.25", "4.5", "4.59201", L1, "37"),
    row(DominationDistinct, "hexagon", "4.60000", "4.93333", "5.00000", L1, "20"),
    row(DominationDistinct, "heptagon", "4.83333", "5.09524", "5.18103", L1, "33"),
    row(DominationDistinct, "octagon", "5", "5.21429", "5.27346", L1, "28"),
    row(DominationDistinct, "9-gon", "5.125", "5.27778", "5.33113", L1, "35"),
    row(DominationDistinct, "10-gon", "5.22222", "5.34444", "5.37423", L1, "24"),
    row(DominationDistinct, "11-gon", "5.3", "5.43636", "5.47735", L1, "30"),
    row(DominationDistinct, "12-gon", "5.36364", "5.51515", "5.54545", L1, "20"),
    row(DominationDistinct, "13-gon", "5.41667", "5.51515", "5.59088", L1, "29"),
];

pub fn rows(table: TableId) -> impl Iterator<Item = &'static PublishedRow> {
    ROWS.iter().filter(move |r| r.table == table)
}

pub fn all_rows() -> &'static [PublishedRow] {
    ROWS
}

/// Rows printed for a graph, matched by catalog lookup so that aliases agree.
pub fn rows_for_graph(canonical: &str) -> Vec<&'static PublishedRow> {
    ROWS.iter()
        .filter(|r| {
            crate::catalog::canonical_name(r.graph)
                .map(|c| c == canonical)
                .unwrap_or(false)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn every_entry_parses() {
        for r in all_rows() {
            r.random_value();
            r.classical_value();
            r.npa_value();
            r.advantage_value();
        }
    }

    #[test]
    fn table_sizes() {
        let sizes: Vec<usize> = TableId::ALL.iter().map(|&t| rows(t).count()).collect();
        assert_eq!(sizes, vec![20, 9, 20, 14, 13]);
    }

    #[test]
    fn decimal_matching() {
        let v = PublishedValue::parse("0.20667").unwrap();
        assert!(v.matches(&ratio(31, 150)));
        assert!(!v.matches(&ratio(1, 5)));
        let v = PublishedValue::parse("7/12").unwrap();
        assert!(v.is_exact() && v.matches(&ratio(7, 12)));
        assert!(PublishedValue::parse("4,27778").unwrap().matches(&ratio(77, 18)));
    }
}
