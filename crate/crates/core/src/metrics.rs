//! Benchmark result rows, CSV output, and per-method aggregation.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

/// One run of one method on one scenario with one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub scenario: String,
    pub method: String,
    pub n_robots: usize,
    pub n_objects: usize,
    pub success: bool,
    /// Total distance driven by all robots (m).
    pub sum_cost: f64,
    pub avg_cost: f64,
    pub iterations: usize,
    /// Mean wall time per iteration; left blank unless timing was requested
    /// so that reruns stay byte-identical.
    pub avg_iter_ms: Option<f64>,
    pub swaps: usize,
    pub waits: usize,
    pub seed: u64,
}

pub const CSV_HEADER: &str =
    "scenario,method,n_robots,n_objects,success,sum_cost,avg_cost,iterations,avg_iter_ms,swaps,waits,seed";

pub fn write_csv<W: Write>(rows: &[MetricsRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(CSV_HEADER.split(','))?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(rows: &[MetricsRow]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is utf-8")
}

pub fn read_csv<R: Read>(input: R) -> csv::Result<Vec<MetricsRow>> {
    csv::Reader::from_reader(input).deserialize().collect()
}

/// Success rate and cost for one (scenario, method) group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: String,
    pub method: String,
    pub runs: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Mean per-robot cost over successful runs.
    pub mean_avg_cost: Option<f64>,
    pub mean_iter_ms: Option<f64>,
}

/// Groups rows by (scenario, method) in order of first appearance.
pub fn summarize(rows: &[MetricsRow]) -> Vec<Summary> {
    let mut keys: Vec<(&str, &str)> = Vec::new();
    for r in rows {
        let k = (r.scenario.as_str(), r.method.as_str());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(scenario, method)| {
            let group: Vec<&MetricsRow> = rows
                .iter()
                .filter(|r| r.scenario == scenario && r.method == method)
                .collect();
            let ok: Vec<&&MetricsRow> = group.iter().filter(|r| r.success).collect();
            let timed: Vec<f64> = group.iter().filter_map(|r| r.avg_iter_ms).collect();
            Summary {
                scenario: scenario.to_string(),
                method: method.to_string(),
                runs: group.len(),
                successes: ok.len(),
                success_rate: ok.len() as f64 / group.len() as f64,
                mean_avg_cost: (!ok.is_empty()).then(|| ok.iter().map(|r| r.avg_cost).sum::<f64>() / ok.len() as f64),
                mean_iter_ms: (!timed.is_empty()).then(|| timed.iter().sum::<f64>() / timed.len() as f64),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(scenario: &str, method: &str, success: bool, avg_cost: f64, seed: u64) -> MetricsRow {
        MetricsRow {
            scenario: scenario.into(),
            method: method.into(),
            n_robots: 4,
            n_objects: 0,
            success,
            sum_cost: 4.0 * avg_cost,
            avg_cost,
            iterations: 10,
            avg_iter_ms: None,
            swaps: 0,
            waits: 0,
            seed,
        }
    }

    #[test]
    fn header_is_exact() {
        let text = to_csv_string(&[row("a", "gspi", true, 1.0, 1)]);
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(to_csv_string(&[]).trim_end(), CSV_HEADER);
    }

    #[test]
    fn blank_timing_roundtrips() {
        let mut rows = vec![row("a", "gspi", true, 1.25, 1), row("a", "pibt", false, 3.0, 1)];
        rows[1].avg_iter_ms = Some(0.5);
        let text = to_csv_string(&rows);
        assert!(text.contains(",,"), "{text}");
        assert_eq!(read_csv(text.as_bytes()).unwrap(), rows);
    }
}
