//! Presenting conflict reports on a terminal.

use conflict_radar_core::detect::worst_severity;
use conflict_radar_core::model::{ConflictReport, Severity};

/// 0 when there is nothing to report, 1 for awareness only, 2 when any
/// conflict is present.
pub fn exit_code(reports: &[ConflictReport]) -> i32 {
    match worst_severity(reports) {
        None => 0,
        Some(Severity::Awareness) => 1,
        Some(Severity::Conflict) => 2,
    }
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")
}

/// One line per report: severity, path id, remote authors, kinds and the
/// decoration position.
pub fn describe(report: &ConflictReport) -> String {
    let start = report.decoration_span.start();
    let mut kinds = join(&report.remote_kinds);
    if !report.local_kinds.is_empty() {
        kinds = format!("{kinds} / mine: {}", join(&report.local_kinds));
    }
    format!(
        "{:<10} {} by {} [{}] at {}:{}",
        report.severity,
        report.path_id,
        join(report.remote_authors.iter().map(|a| a.as_str())),
        kinds,
        start.line,
        start.col
    )
}

pub fn table(reports: &[ConflictReport]) -> String {
    if reports.is_empty() {
        return "no conflicts\n".into();
    }
    let rows: Vec<[String; 5]> = reports
        .iter()
        .map(|r| {
            let s = r.decoration_span.start();
            [
                r.severity.to_string(),
                r.path_id.clone(),
                join(r.remote_authors.iter().map(|a| a.as_str())),
                join(r.remote_kinds.iter().chain(r.local_kinds.iter())),
                format!("{}:{}", s.line, s.col),
            ]
        })
        .collect();
    let header = ["SEVERITY", "PATH", "AUTHORS", "KINDS", "AT"];
    let mut widths = header.map(str::len);
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: [&str; 5]| {
        let padded: Vec<String> = cells.iter().zip(widths).map(|(c, w)| format!("{c:<w$}")).collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(header);
    for row in &rows {
        out += &line([&row[0], &row[1], &row[2], &row[3], &row[4]]);
    }
    out
}

/// Reports that appeared and disappeared between two detection runs.
pub fn changed(old: &[ConflictReport], new: &[ConflictReport]) -> (Vec<ConflictReport>, Vec<ConflictReport>) {
    let added = new.iter().filter(|r| !old.contains(r)).cloned().collect();
    let removed = old.iter().filter(|r| !new.contains(r)).cloned().collect();
    (added, removed)
}
