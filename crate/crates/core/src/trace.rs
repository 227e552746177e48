//! Recorded per-step metrics of a run and their CSV form.

use std::io::Write;

use serde::Serialize;

use crate::convex::Point;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub k: usize,
    pub points: Vec<Point>,
    /// `|x_i(k)|_{X_i}` per node.
    pub dist_own: Vec<f64>,
    /// `|x_i(k)|_{X₀}` per node, from the oracle.
    pub dist_intersection: Vec<f64>,
    /// `h(k) = max_i |x_i(k)|_{X₀}`.
    pub h: f64,
    /// `max_{p,q} |x_p(k) - x_q(k)|`.
    pub diameter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trace {
    pub dimension: usize,
    pub records: Vec<TraceRecord>,
    /// Set when a coordinate left the finite range; the run stopped there.
    pub diverged: bool,
    /// Steps actually executed.
    pub steps: usize,
}

impl Trace {
    pub fn first(&self) -> Option<&TraceRecord> {
        self.records.first()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn h_series(&self) -> Vec<(usize, f64)> {
        self.records.iter().map(|r| (r.k, r.h)).collect()
    }

    /// One row per `(k, node)`:
    /// `k,node_id,x_0..x_{m-1},dist_own_set,dist_intersection,h,consensus_diameter`.
    ///
    /// Floats use Rust's shortest round-trip formatting, so output is
    /// locale-free and byte-stable.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["k".to_string(), "node_id".to_string()];
        header.extend((0..self.dimension).map(|c| format!("x_{c}")));
        header.extend(["dist_own_set", "dist_intersection", "h", "consensus_diameter"].map(String::from));
        w.write_record(&header)?;
        let mut row = Vec::with_capacity(header.len());
        for r in &self.records {
            for (i, p) in r.points.iter().enumerate() {
                row.clear();
                row.push(r.k.to_string());
                row.push(i.to_string());
                row.extend(p.coords().iter().map(|x| x.to_string()));
                row.push(r.dist_own[i].to_string());
                row.push(r.dist_intersection[i].to_string());
                row.push(r.h.to_string());
                row.push(r.diameter.to_string());
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
