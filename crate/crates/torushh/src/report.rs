//! Output schemas: the HH table shared by every cohomology-producing module
//! and the assertion reports emitted by the command-line front end.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// One block of a Hochschild table. `dim` is the Q-dimension in undeformed
/// mode and the free rank in deformed mode; `torsion` lists the q-exponents
/// of the cyclic q-torsion summands.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HHEntry {
    pub deg: i64,
    pub wt: i64,
    pub dim: usize,
    pub basis: Vec<String>,
    pub torsion: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct HHTable {
    pub params: BTreeMap<String, String>,
    pub entries: Vec<HHEntry>,
}

impl HHTable {
    pub fn entry(&self, deg: i64, wt: i64) -> Option<&HHEntry> {
        self.entries.iter().find(|e| e.deg == deg && e.wt == wt)
    }

    pub fn dim(&self, deg: i64, wt: i64) -> usize {
        self.entry(deg, wt).map_or(0, |e| e.dim)
    }

    pub fn torsion(&self, deg: i64, wt: i64) -> &[usize] {
        self.entry(deg, wt).map_or(&[], |e| e.torsion.as_slice())
    }

    /// dim summed over all weights at a fixed degree.
    pub fn dim_total(&self, deg: i64) -> usize {
        self.entries
            .iter()
            .filter(|e| e.deg == deg)
            .map(|e| e.dim)
            .sum()
    }

    pub fn sort(&mut self) {
        self.entries.sort_by_key(|e| (e.deg, e.wt));
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }

    /// CSV with the stable column order degree,weight,dim,torsion,basis.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("degree,weight,dim,torsion,basis\n");
        for e in &self.entries {
            let torsion = e
                .torsion
                .iter()
                .map(|t| t.to_string())
                .collect::<Vec<_>>()
                .join("|");
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.deg,
                e.wt,
                e.dim,
                torsion,
                e.basis.join("|")
            ));
        }
        out
    }
}

/// One verified statement in a report; `tag` is the stable identifier of the
/// assertion family used by downstream tooling.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub tag: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, Default)]
pub struct Report {
    pub command: String,
    pub params: BTreeMap<String, String>,
    pub assertions: Vec<Assertion>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report {
            command: command.to_string(),
            ..Default::default()
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) {
        self.params.insert(key.to_string(), value.to_string());
    }

    pub fn check(&mut self, name: &str, tag: &str, pass: bool, detail: impl ToString) {
        self.assertions.push(Assertion {
            name: name.to_string(),
            tag: tag.to_string(),
            pass,
            detail: detail.to_string(),
        });
    }

    pub fn all_pass(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }

    pub fn first_failure(&self) -> Option<&Assertion> {
        self.assertions.iter().find(|a| !a.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_json_roundtrip() {
        let mut t = HHTable::default();
        t.params.insert("K".into(), "3".into());
        t.entries.push(HHEntry {
            deg: 1,
            wt: 0,
            dim: 2,
            basis: vec!["X*X".into(), "Y*Y".into()],
            torsion: vec![],
        });
        let json = t.to_json();
        let back: HHTable = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn empty_table_csv_is_header_only() {
        let t = HHTable::default();
        assert_eq!(t.to_csv(), "degree,weight,dim,torsion,basis\n");
    }
}
