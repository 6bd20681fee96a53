//! Metrics CSV: `examples_seen,phase,loss,val_accuracy`, one row per check.

use learnpool_core::training::HistoryRow;

pub const HEADER: &str = "examples_seen,phase,loss,val_accuracy";

pub fn to_csv(rows: &[HistoryRow]) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{},{},{:?},{:?}\n", r.examples_seen, r.phase, r.loss, r.val_acc));
    }
    out
}

pub fn parse_csv(text: &str) -> Result<Vec<HistoryRow>, String> {
    let mut lines = text.lines();
    if lines.next() != Some(HEADER) {
        return Err("missing metrics header".into());
    }
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 4 {
                return Err(format!("bad metrics row {l:?}"));
            }
            let bad = || format!("bad metrics row {l:?}");
            Ok(HistoryRow {
                examples_seen: f[0].parse().map_err(|_| bad())?,
                phase: f[1].parse().map_err(|_| bad())?,
                loss: f[2].parse().map_err(|_| bad())?,
                val_acc: f[3].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}
