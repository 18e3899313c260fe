use std::fmt::Write;

use mitoforge_core::ensemble::EvalReport;

/// Balanced accuracy as a percentage with three decimals, e.g. `80.000`.
pub fn percent(ba: f64) -> String {
    format!("{:.3}", ba * 100.0)
}

/// One row per domain in name order, then the pooled `OBA` row.
pub fn report_table(report: &EvalReport) -> String {
    let width = report
        .per_domain_ba
        .keys()
        .map(|k| k.chars().count())
        .chain(["domain".len()])
        .max()
        .unwrap_or(0);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:>8}", "domain", "BA (%)");
    for (domain, ba) in &report.per_domain_ba {
        let _ = writeln!(out, "{domain:<width$}  {:>8}", percent(*ba));
    }
    let _ = writeln!(out, "{:<width$}  {:>8}", "OBA", percent(report.overall_ba));
    out
}
