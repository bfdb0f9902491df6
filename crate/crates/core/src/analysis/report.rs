use crate::error::Result;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// The single row schema shared by every check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub family: String,
    pub epsilon: f64,
    /// Seed of the cell that produced the row.
    pub seed: u64,
    pub r: f64,
    pub t: f64,
    pub quantity: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// `;`-separated, empty when clean.
    pub flags: String,
}

impl CheckRow {
    pub fn new(family: &str, epsilon: f64, r: f64, t: f64, quantity: &str, lhs: f64, rhs: f64) -> Self {
        CheckRow {
            family: family.into(),
            epsilon,
            seed: 0,
            r,
            t,
            quantity: quantity.into(),
            lhs,
            rhs,
            ratio: super::checks::ratio(lhs, rhs),
            flags: String::new(),
        }
    }

    pub fn flagged(mut self, flags: &[String]) -> Self {
        self.flags = flags.join(";");
        self
    }

    /// A row recording that a check could not run.
    pub fn failure(family: &str, epsilon: f64, quantity: &str, reason: &str) -> Self {
        let mut row = CheckRow::new(family, epsilon, f64::NAN, f64::NAN, quantity, f64::NAN, f64::NAN);
        row.ratio = f64::NAN;
        row.flags = format!("error: {}", reason.replace([';', '\n'], ","));
        row
    }

    pub fn is_clean(&self) -> bool {
        self.flags.is_empty()
    }
}

/// Orders rows by family, ε, seed, quantity, r, t; the order is total and independent of completion order.
pub fn sort_rows(rows: &mut [CheckRow]) {
    rows.sort_by(|a, b| {
        a.family
            .cmp(&b.family)
            .then(a.epsilon.total_cmp(&b.epsilon))
            .then(a.seed.cmp(&b.seed))
            .then(a.quantity.cmp(&b.quantity))
            .then(a.r.total_cmp(&b.r))
            .then(a.t.total_cmp(&b.t))
    });
}

pub fn write_rows(w: impl Write, rows: &[CheckRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_rows(r: impl std::io::Read) -> Result<Vec<CheckRow>> {
    let mut rd = csv::Reader::from_reader(r);
    let mut rows = Vec::new();
    for row in rd.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}
