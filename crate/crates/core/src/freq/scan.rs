//! MP power and WAP for every alternative of a design.

use rayon::prelude::*;

use super::mp::{mp_delta, report};
use super::{check_alpha, PowerReport};
use crate::error::Result;
use crate::population::TypeSpace;

const CHUNK: usize = 64;

/// Runs the scan and hands each report to `sink` in canonical type order.
/// Alternatives are solved in parallel a chunk at a time, so a failure is
/// reported after every earlier row has been emitted. Returns the row count.
pub fn power_scan_streaming(
    space: &TypeSpace,
    alpha: f64,
    mut sink: impl FnMut(&PowerReport) -> Result<()>,
) -> Result<usize> {
    check_alpha(alpha)?;
    let alts = space.alternatives();
    for chunk in alts.chunks(CHUNK) {
        let rows: Vec<Result<PowerReport>> = chunk
            .par_iter()
            .map(|&i| {
                let theta = space.types()[i];
                mp_delta(space, &theta, alpha)
                    .and_then(|delta| report(space, &delta, &theta))
                    .map_err(|e| e.context(format_args!("power scan at theta={theta}")))
            })
            .collect();
        for row in rows {
            sink(&row?)?;
        }
    }
    Ok(alts.len())
}

/// One report per alternative, in canonical type order.
pub fn power_scan(space: &TypeSpace, alpha: f64) -> Result<Vec<PowerReport>> {
    let mut out = Vec::with_capacity(space.alternatives().len());
    power_scan_streaming(space, alpha, |r| {
        out.push(r.clone());
        Ok(())
    })?;
    Ok(out)
}
