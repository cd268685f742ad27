//! Line-delimited JSON and CSV renderings of an [`AuditReport`].

use std::io::{self, Write};

use serde::Serialize;

use super::AuditReport;

/// Trailing record of the JSONL report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditSummary {
    pub phi0: f64,
    pub phim: f64,
    pub sum_a: u64,
    pub sum_bound: f64,
    pub verdict: &'static str,
}

/// One JSON object per operation, then the summary.
pub fn write_jsonl(report: &AuditReport, mut out: impl Write) -> io::Result<()> {
    for op in &report.ops {
        serde_json::to_writer(&mut out, op)?;
        out.write_all(b"\n")?;
    }
    serde_json::to_writer(&mut out, &report.summary())?;
    out.write_all(b"\n")?;
    out.flush()
}

/// One row per operation with the same columns as the JSONL records.
pub fn write_csv(report: &AuditReport, out: impl Write) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for op in &report.ops {
        w.serialize(op)?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audit::audit_trace;
    use crate::trace::parse_trace;

    fn report() -> AuditReport {
        let t = parse_trace(
            "{\"op\":\"make_heap\",\"heap_out\":1}\n\
             {\"op\":\"insert\",\"heap\":1,\"key\":4,\"node_out\":1}\n\
             {\"op\":\"extract_min\",\"heap\":1}\n",
        )
        .unwrap();
        audit_trace(&t).unwrap()
    }

    #[test]
    fn jsonl_has_one_line_per_op_plus_summary() {
        let mut buf = Vec::new();
        write_jsonl(&report(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(
            lines[0],
            r#"{"op_index":1,"kind":"make_heap","a":1,"n":0,"delta_phi":8.0,"bound":21.0,"slack":12.0}"#
        );
        let summary: serde_json::Value = serde_json::from_str(lines[3]).unwrap();
        assert_eq!(summary["verdict"], "pass");
        assert_eq!(summary["phi0"], 0.0);
        assert_eq!(summary["sum_a"], 3);
    }

    #[test]
    fn csv_columns() {
        let mut buf = Vec::new();
        write_csv(&report(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("op_index,kind,a,n,delta_phi,bound,slack"));
        assert_eq!(lines.next(), Some("1,make_heap,1,0,8.0,21.0,12.0"));
        assert_eq!(text.lines().count(), 4);
    }
}
