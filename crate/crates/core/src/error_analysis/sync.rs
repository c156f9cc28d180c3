use serde::Serialize;

use crate::error::{ensure_positive, Error, Result};

/// Largest velocity whose synchronization offset `delta_t` keeps the false
/// disparity below `k` pixels at depth `z`: `v = k Z^2 / (delta_t (b f - k Z))`.
pub fn max_velocity_for_sync(k: f64, z: f64, b: f64, f: f64, delta_t: f64) -> Result<f64> {
    ensure_positive("k", k)?;
    ensure_positive("depth", z)?;
    ensure_positive("baseline", b)?;
    ensure_positive("focal length", f)?;
    ensure_positive("delta_t", delta_t)?;
    let bf = b * f;
    let kz = k * z;
    if bf <= kz {
        return Err(Error::UnboundedRegime { bf, kz });
    }
    Ok(k * z * z / (delta_t * (bf - kz)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SyncRow {
    pub baseline: f64,
    pub delta_t: f64,
    pub v_max: f64,
}

/// Evaluates the bound over every `(baseline, delta_t)` pair, skipping pairs
/// in the unbounded regime.
pub fn sync_sweep(k: f64, z: f64, f: f64, baselines: &[f64], delta_ts: &[f64]) -> Result<Vec<SyncRow>> {
    let mut rows = Vec::with_capacity(baselines.len() * delta_ts.len());
    for &delta_t in delta_ts {
        for &baseline in baselines {
            match max_velocity_for_sync(k, z, baseline, f, delta_t) {
                Ok(v_max) => rows.push(SyncRow {
                    baseline,
                    delta_t,
                    v_max,
                }),
                Err(Error::UnboundedRegime { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok(rows)
}
