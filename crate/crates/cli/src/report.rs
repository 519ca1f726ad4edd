//! Averages of result rows per `(σ², model)` cell, laid out like the comparison tables: time,
//! gap, number of instances solved to optimality and number of rounds.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use stieltjes_cuts::models::Model;

#[derive(Debug, Deserialize)]
struct Row {
    instance_id: String,
    model: String,
    status: String,
    rel_gap: f64,
    time_s: f64,
    rounds: f64,
}

/// σ² parsed from a generated instance id (`…-sigma2-0.5-…`); `None` for other instances.
fn sigma2_of(id: &str) -> Option<String> {
    let rest = &id[id.find("sigma2-")? + "sigma2-".len()..];
    let value = rest.split_once("-mu").map_or(rest, |(v, _)| v);
    value.parse::<f64>().ok().map(|_| value.to_string())
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Key {
    sigma2: GroupLabel,
    model: ModelLabel,
}

/// Numeric σ² order with ungrouped rows last.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum GroupLabel {
    Sigma2(OrderedValue),
    Other,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct OrderedValue {
    bits: i64,
    text: String,
}

impl GroupLabel {
    fn new(text: Option<String>) -> Self {
        match text {
            Some(t) => {
                let v: f64 = t.parse().expect("checked by sigma2_of");
                // positive floats order like their bit patterns
                GroupLabel::Sigma2(OrderedValue {
                    bits: v.to_bits() as i64,
                    text: t,
                })
            }
            None => GroupLabel::Other,
        }
    }

    fn text(&self) -> &str {
        match self {
            GroupLabel::Sigma2(v) => &v.text,
            GroupLabel::Other => "-",
        }
    }
}

/// Table order of the models, unknown names last.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct ModelLabel {
    rank: usize,
    name: String,
}

impl ModelLabel {
    fn new(name: &str) -> Self {
        const ORDER: [Model; 5] = [
            Model::PersC,
            Model::PersB,
            Model::Poly,
            Model::Exact,
            Model::Sfm,
        ];
        let rank = ORDER
            .iter()
            .position(|m| m.as_str() == name)
            .unwrap_or(ORDER.len());
        ModelLabel {
            rank,
            name: name.to_string(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Cell {
    pub instances: usize,
    pub time_s: f64,
    /// Mean over rows with a finite gap; `NaN` when there are none.
    pub rel_gap: f64,
    pub optimal: usize,
    pub rounds: f64,
}

#[derive(Default)]
struct Acc {
    count: usize,
    time: f64,
    gap_sum: f64,
    gap_count: usize,
    optimal: usize,
    rounds: f64,
}

pub const TABLE_HEADER: [&str; 7] = [
    "sigma2",
    "model",
    "instances",
    "time_s",
    "rel_gap",
    "n_opt",
    "rounds",
];

pub struct Table {
    rows: Vec<(String, String, Cell)>,
}

fn read_rows(paths: &[PathBuf]) -> Result<Vec<Row>, String> {
    let mut out = Vec::new();
    for path in paths {
        let mut reader =
            csv::Reader::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
        for (i, row) in reader.deserialize::<Row>().enumerate() {
            match row {
                Ok(r) => out.push(r),
                Err(e) => log::warn!("{}: skipping record {}: {e}", path.display(), i + 1),
            }
        }
    }
    Ok(out)
}

fn aggregate(rows: &[Row]) -> Table {
    let mut acc: BTreeMap<Key, Acc> = BTreeMap::new();
    for r in rows {
        let key = Key {
            sigma2: GroupLabel::new(sigma2_of(&r.instance_id)),
            model: ModelLabel::new(&r.model),
        };
        let a = acc.entry(key).or_default();
        a.count += 1;
        a.time += r.time_s;
        a.rounds += r.rounds;
        if r.rel_gap.is_finite() {
            a.gap_sum += r.rel_gap;
            a.gap_count += 1;
        }
        if r.status == "optimal" {
            a.optimal += 1;
        }
    }

    let groups: BTreeSet<&GroupLabel> = acc.keys().map(|k| &k.sigma2).collect();
    let models: BTreeSet<&ModelLabel> = acc.keys().map(|k| &k.model).collect();
    for g in &groups {
        for m in &models {
            let key = Key {
                sigma2: (*g).clone(),
                model: (*m).clone(),
            };
            if !acc.contains_key(&key) {
                log::warn!("no results for σ² = {}, model {}", g.text(), m.name);
            }
        }
    }

    let rows = acc
        .into_iter()
        .map(|(k, a)| {
            let n = a.count as f64;
            let cell = Cell {
                instances: a.count,
                time_s: a.time / n,
                rel_gap: if a.gap_count > 0 {
                    a.gap_sum / a.gap_count as f64
                } else {
                    f64::NAN
                },
                optimal: a.optimal,
                rounds: a.rounds / n,
            };
            (k.sigma2.text().to_string(), k.model.name, cell)
        })
        .collect();
    Table { rows }
}

impl Table {
    fn records(&self) -> Vec<[String; 7]> {
        self.rows
            .iter()
            .map(|(s, m, c)| {
                [
                    s.clone(),
                    m.clone(),
                    c.instances.to_string(),
                    format!("{:.3}", c.time_s),
                    if c.rel_gap.is_nan() {
                        "-".to_string()
                    } else {
                        format!("{:.2e}", c.rel_gap)
                    },
                    c.optimal.to_string(),
                    format!("{:.1}", c.rounds),
                ]
            })
            .collect()
    }

    pub fn text(&self) -> String {
        let records = self.records();
        let mut widths = TABLE_HEADER.map(str::len);
        for r in &records {
            for (w, v) in widths.iter_mut().zip(r) {
                *w = (*w).max(v.chars().count());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, cells: &[String]| {
            let padded: Vec<String> = cells
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (c, w))| {
                    if i < 2 {
                        format!("{c:<w$}")
                    } else {
                        format!("{c:>w$}")
                    }
                })
                .collect();
            writeln!(out, "{}", padded.join("  ").trim_end()).expect("string write");
        };
        line(&mut out, &TABLE_HEADER.map(String::from));
        for r in &records {
            line(&mut out, r);
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), String> {
        let err = |e: csv::Error| format!("{}: {e}", path.display());
        let mut w = csv::Writer::from_path(path).map_err(err)?;
        w.write_record(TABLE_HEADER).map_err(err)?;
        for r in self.records() {
            w.write_record(&r).map_err(err)?;
        }
        w.flush().map_err(|e| format!("{}: {e}", path.display()))
    }
}

pub fn run(inputs: &[PathBuf], csv_out: Option<&Path>) -> Result<(), String> {
    let table = aggregate(&read_rows(inputs)?);
    print!("{}", table.text());
    if let Some(path) = csv_out {
        table.write_csv(path)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: &str, model: &str, status: &str, gap: f64, time: f64, rounds: f64) -> Row {
        Row {
            instance_id: id.into(),
            model: model.into(),
            status: status.into(),
            rel_gap: gap,
            time_s: time,
            rounds,
        }
    }

    #[test]
    fn sigma2_from_generated_ids() {
        assert_eq!(
            sigma2_of("grid6-sigma2-0.5-mu-0.25-k36-seed1").as_deref(),
            Some("0.5")
        );
        assert_eq!(
            sigma2_of("grid6-sigma2-2-mu-0.12-k36-seed3").as_deref(),
            Some("2")
        );
        assert_eq!(sigma2_of("example1"), None);
    }

    #[test]
    fn averages_per_cell() {
        let rows = vec![
            row(
                "grid6-sigma2-2-mu-0.12-k36-seed1",
                "poly",
                "optimal",
                0.0,
                1.0,
                3.0,
            ),
            row(
                "grid6-sigma2-2-mu-0.12-k36-seed2",
                "poly",
                "solved",
                1e-3,
                3.0,
                6.0,
            ),
            row(
                "grid6-sigma2-0.5-mu-0.25-k36-seed1",
                "pers-c",
                "solved",
                0.02,
                0.5,
                1.0,
            ),
            row(
                "grid6-sigma2-0.5-mu-0.25-k36-seed1",
                "poly",
                "failed",
                f64::NAN,
                9.0,
                0.0,
            ),
        ];
        let t = aggregate(&rows);
        let keys: Vec<(&str, &str)> = t
            .rows
            .iter()
            .map(|(s, m, _)| (s.as_str(), m.as_str()))
            .collect();
        assert_eq!(
            keys,
            vec![("0.5", "pers-c"), ("0.5", "poly"), ("2", "poly")]
        );
        let c = &t.rows[2].2;
        assert_eq!(c.instances, 2);
        assert_eq!(c.time_s, 2.0);
        assert_eq!(c.rel_gap, 5e-4);
        assert_eq!(c.optimal, 1);
        assert_eq!(c.rounds, 4.5);
        assert!(t.rows[1].2.rel_gap.is_nan());
    }

    #[test]
    fn empty_input_gives_header_only() {
        let t = aggregate(&[]);
        assert_eq!(t.text().lines().count(), 1);
        assert!(t.text().starts_with("sigma2"));
    }
}
