use std::io::Write;

use serde::Serialize;

use crate::error::Result;

/// Writes one CSV row per record, with a header taken from the field names.
pub fn write_records<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
