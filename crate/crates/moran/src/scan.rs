//! Zero scans with grid points spread over the rayon pool.

use moran_core::diagnostics::{finish_scan, scan_grid_point, ScanParams, ZeroScan};
use moran_core::{EvalConfig, FourierTransform, MoranError, Result};
use rayon::prelude::*;

pub fn parallel_zero_scan<M: FourierTransform + Sync + ?Sized>(m: &M, p: &ScanParams, cfg: &EvalConfig) -> Result<ZeroScan> {
    if p.grid < 2 || p.window < 0 || !(p.tol > 0.0) {
        return Err(MoranError::InvalidParams("grid ≥ 2, window ≥ 0, tol > 0".into()));
    }
    let points = (0..p.grid).into_par_iter().map(|j| scan_grid_point(m, j, p, cfg)).collect::<Result<Vec<_>>>()?;
    finish_scan(m, p, &points, cfg)
}
