//! Rendering of metric rows: an aligned text table and a CSV with a fixed
//! column order. Floats are written with 17 significant digits so the CSV
//! round-trips bit-exactly.

use super::{BenchError, MetricsRow};

pub const CSV_HEADER: &str =
    "mode,mean_len,std_len,collisions,mean_reward,std_reward,hs_reward,saved_nfe_pct,episodes";

fn full(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_csv(rows: &[MetricsRow]) -> Result<String, BenchError> {
    if rows.is_empty() {
        return Err(BenchError::EmptyReport);
    }
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.label,
            full(r.mean_len),
            full(r.std_len),
            r.collisions,
            full(r.mean_reward),
            full(r.std_reward),
            full(r.high_speed_reward),
            full(r.saved_nfe_pct),
            r.episodes,
        ));
    }
    Ok(out)
}

/// Parses a CSV produced by [`to_csv`]. Seed lists and collision rates are
/// not part of the wire format; the rate is recomputed.
pub fn parse_csv(text: &str) -> Result<Vec<MetricsRow>, BenchError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => {
            return Err(BenchError::BadCsv(format!(
                "unexpected header {other:?}"
            )))
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(BenchError::BadCsv(format!(
                "line {}: expected 9 fields, got {}",
                i + 2,
                fields.len()
            )));
        }
        let f = |s: &str| -> Result<f64, BenchError> {
            s.parse()
                .map_err(|e| BenchError::BadCsv(format!("line {}: {e}", i + 2)))
        };
        let episodes: usize = fields[8]
            .parse()
            .map_err(|e| BenchError::BadCsv(format!("line {}: {e}", i + 2)))?;
        let collisions: usize = fields[3]
            .parse()
            .map_err(|e| BenchError::BadCsv(format!("line {}: {e}", i + 2)))?;
        rows.push(MetricsRow {
            label: fields[0].to_string(),
            mean_len: f(fields[1])?,
            std_len: f(fields[2])?,
            collisions,
            collision_rate: collisions as f64 / episodes as f64,
            mean_reward: f(fields[4])?,
            std_reward: f(fields[5])?,
            high_speed_reward: f(fields[6])?,
            saved_nfe_pct: f(fields[7])?,
            episodes,
            seeds: Vec::new(),
        });
    }
    if rows.is_empty() {
        return Err(BenchError::EmptyReport);
    }
    Ok(rows)
}

/// Aligned text table with the reported-metrics layout.
pub fn render_table(rows: &[MetricsRow]) -> Result<String, BenchError> {
    if rows.is_empty() {
        return Err(BenchError::EmptyReport);
    }
    let headers = [
        "Model",
        "Mean Trajectory Length",
        "Num. Collisions",
        "Mean Reward",
        "Mean High-Speed Reward",
        "Saved NFE (%)",
    ];
    let mut cells: Vec<[String; 6]> = Vec::with_capacity(rows.len());
    for r in rows {
        cells.push([
            r.label.clone(),
            format!("{:.1} (±{:.1})", r.mean_len, r.std_len),
            format!("{}", r.collisions),
            format!("{:.2} (±{:.2})", r.mean_reward, r.std_reward),
            format!("{:.3}", r.high_speed_reward),
            format!("{:.1}", r.saved_nfe_pct),
        ]);
    }
    let mut widths = headers.map(str::len);
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let fmt_row = |cols: &[String]| -> String {
        cols.iter()
            .zip(widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    out.push_str(&fmt_row(&headers.map(String::from)));
    out.push('\n');
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    out.push('\n');
    for row in &cells {
        out.push_str(&fmt_row(row));
        out.push('\n');
    }
    Ok(out)
}
