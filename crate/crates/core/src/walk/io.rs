use std::io::Write;

use serde::{Deserialize, Serialize};

use super::state::{Site, StateVector};
use crate::error::Result;

/// Site probabilities at one time, in the state's canonical site order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionTable {
    pub time: u64,
    pub entries: Vec<(Site, f64)>,
}

/// CSV/JSON row of a [`DistributionTable`]; `copy` is empty for the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionRow {
    pub copy: Option<usize>,
    pub x: i64,
    pub y: i64,
    pub probability: f64,
}

impl DistributionTable {
    pub fn from_state(s: &StateVector) -> Self {
        Self {
            time: s.time(),
            entries: s.site_probabilities().collect(),
        }
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }

    pub fn get(&self, site: Site) -> f64 {
        self.entries
            .iter()
            .find(|(s, _)| *s == site)
            .map_or(0.0, |(_, p)| *p)
    }

    pub fn rows(&self) -> Vec<DistributionRow> {
        self.entries
            .iter()
            .map(|(site, p)| {
                let (copy, x, y) = site.coords();
                DistributionRow {
                    copy,
                    x,
                    y,
                    probability: *p,
                }
            })
            .collect()
    }

    /// CSV with header `copy,x,y,probability`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        for row in self.rows() {
            wtr.serialize(row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "time": self.time,
            "sites": self.rows(),
        })
    }
}

/// One line of a state snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub copy: Option<usize>,
    pub x: i64,
    pub y: i64,
    pub label: String,
    pub re: f64,
    pub im: f64,
}

/// Writes the nonzero amplitudes of `s` as JSON lines.
pub fn write_snapshot_jsonl<W: Write>(s: &StateVector, mut w: W) -> Result<()> {
    for (site, label, z) in s.iter_nonzero() {
        let (copy, x, y) = site.coords();
        let rec = SnapshotRecord {
            copy,
            x,
            y,
            label: label.to_string(),
            re: z.re,
            im: z.im,
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
