use std::io::Write;

use super::{RatioCheck, SweepRow, SyncRow, Table1Report};
use crate::error::Result;

/// Columns: `magnitude, e_x_max, e_y_max, e_x_mean, e_y_mean`.
pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per ratio entry, with the expected value and band.
pub fn write_table1_csv<W: Write>(out: W, report: &Table1Report) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "focal_length_mm",
        "parameter",
        "ratio",
        "value",
        "expected",
        "tolerance",
        "pass",
    ])?;
    for RatioCheck {
        focal_length_mm,
        parameter,
        kind,
        value,
        expectation,
        pass,
    } in &report.checks
    {
        let kind = match kind {
            super::RatioKind::YOverX => "e_y/e_x",
            super::RatioKind::LeftOverRightX => "e_x_L/e_x_R",
            super::RatioKind::LeftOverRightY => "e_y_L/e_y_R",
        };
        w.write_record([
            focal_length_mm.to_string(),
            parameter.name().to_string(),
            kind.to_string(),
            value.to_string(),
            expectation.label(),
            expectation.tolerance().to_string(),
            pass.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns: `baseline, delta_t, v_max`.
pub fn write_sync_csv<W: Write>(out: W, rows: &[SyncRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_header() {
        let mut buf = Vec::new();
        let row = SweepRow {
            magnitude: 1.0,
            e_x_max: 2.0,
            e_y_max: 3.0,
            e_x_mean: 0.5,
            e_y_mean: 0.25,
        };
        write_sweep_csv(&mut buf, &[row]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "magnitude,e_x_max,e_y_max,e_x_mean,e_y_mean\n1.0,2.0,3.0,0.5,0.25\n"
        );
    }

    #[test]
    fn sync_header() {
        let mut buf = Vec::new();
        let rows = super::super::sync_sweep(1.0, 1.0, 1000.0, &[0.2], &[0.005]).unwrap();
        write_sync_csv(&mut buf, &rows).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("baseline,delta_t,v_max\n0.2,0.005,"));
    }
}
