//! Spectrum approximation by trace-bounded energy bands.
//!
//! At level n the set {E : |xₙ(E)| ≤ bound} is a finite union of closed
//! intervals that approximates the spectrum; bands shrink doubly fast with
//! the level, which is the numerical footprint of a zero-measure Cantor
//! spectrum. Band edges are refined by bisection on log|xₙ| − log bound.

use crate::error::{Error, Result};
use crate::transfer::{trace_orbit, BlockTable, PotentialMap};
use rayon::prelude::*;

/// A closed energy interval on which |xₙ| stays at or below the bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
    pub level: u32,
    pub bound: f64,
    pub edge_tol: f64,
}

impl Band {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Result of a band scan, with a flag raised when the parent level is
/// already under-resolved on the same grid.
#[derive(Debug, Clone)]
pub struct BandScan {
    pub bands: Vec<Band>,
    pub coarse_warning: bool,
}

/// Scan parameters with the module defaults.
#[derive(Debug, Clone, Copy)]
pub struct ScanParams {
    pub level: u32,
    pub bound: f64,
    pub search_lo: f64,
    pub search_hi: f64,
    pub grid: usize,
    pub edge_tol: f64,
}

impl ScanParams {
    /// Defaults for a potential: bound 2, window [min V − 2.5, max V + 2.5],
    /// 4096 grid points per unit of energy, edge tolerance 1e−10.
    pub fn for_potential(level: u32, pot: &PotentialMap) -> Self {
        let lo = pot.min_value() - 2.5;
        let hi = pot.max_value() + 2.5;
        ScanParams {
            level,
            bound: 2.0,
            search_lo: lo,
            search_hi: hi,
            grid: ((hi - lo) * 4096.0).ceil() as usize + 1,
            edge_tol: 1e-10,
        }
    }
}

fn trace_log_at(energy: f64, level: u32, pot: &PotentialMap) -> f64 {
    BlockTable::new(energy, pot).trace_log(level).0
}

/// Maximal intervals of the search window on which |x_level| ≤ bound.
///
/// Interior grid points classify each cell; crossings are refined by
/// bisection to `edge_tol` and the reported endpoint is the midpoint of
/// the final bracket. The scan is deterministic for fixed inputs
/// regardless of thread count. An empty result is valid. The warning
/// flag is set when any level−1 band on the same grid spans fewer than
/// three cells, the sign that this level is under-resolved.
pub fn approximate_bands(params: &ScanParams, pot: &PotentialMap) -> Result<BandScan> {
    let ScanParams {
        level,
        bound,
        search_lo,
        search_hi,
        grid,
        edge_tol,
    } = *params;
    if !(search_lo < search_hi) {
        return Err(Error::Domain("empty search window".into()));
    }
    if grid < 2 {
        return Err(Error::Domain("grid needs at least two points".into()));
    }
    if !(bound > 0.0) {
        return Err(Error::Domain("bound must be positive".into()));
    }
    let log_bound = bound.ln();
    let step = (search_hi - search_lo) / (grid - 1) as f64;
    let energies: Vec<f64> = (0..grid).map(|i| search_lo + i as f64 * step).collect();

    // one table per grid point gives both this level and the parent level
    let flags: Vec<(bool, bool)> = energies
        .par_iter()
        .map(|&e| {
            let mut table = BlockTable::new(e, pot);
            let here = table.trace_log(level).0 <= log_bound;
            let parent = if level > 0 {
                table.trace_log(level - 1).0 <= log_bound
            } else {
                here
            };
            (here, parent)
        })
        .collect();

    let runs = |select: fn(&(bool, bool)) -> bool| -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < grid {
            if select(&flags[i]) {
                let mut j = i;
                while j + 1 < grid && select(&flags[j + 1]) {
                    j += 1;
                }
                out.push((i, j));
                i = j + 1;
            } else {
                i += 1;
            }
        }
        out
    };

    let inside = |e: f64| trace_log_at(e, level, pot) <= log_bound;
    let bisect = |mut e_in: f64, mut e_out: f64| -> f64 {
        for _ in 0..200 {
            if (e_out - e_in).abs() <= edge_tol {
                break;
            }
            let mid = 0.5 * (e_in + e_out);
            if inside(mid) {
                e_in = mid;
            } else {
                e_out = mid;
            }
        }
        0.5 * (e_in + e_out)
    };

    let bands: Vec<Band> = runs(|f| f.0)
        .into_par_iter()
        .map(|(i0, i1)| {
            let lo = if i0 == 0 {
                energies[0]
            } else {
                bisect(energies[i0], energies[i0 - 1])
            };
            let hi = if i1 == grid - 1 {
                energies[grid - 1]
            } else {
                bisect(energies[i1], energies[i1 + 1])
            };
            Band {
                lo,
                hi,
                level,
                bound,
                edge_tol,
            }
        })
        .collect();

    let coarse_warning = level > 0
        && runs(|f| f.1)
            .iter()
            .any(|&(i0, i1)| ((i1 - i0) as f64) < 3.0 - 1e-12 && i0 > 0 && i1 < grid - 1);

    Ok(BandScan {
        bands,
        coarse_warning,
    })
}

/// Total Lebesgue measure of a band list.
pub fn band_measure(bands: &[Band]) -> f64 {
    bands.iter().map(Band::width).sum()
}

/// Empirical trace bound: the sup of max_{n ≤ n_max} |xₙ(E)| over interior
/// samples of every band, floored at 2 (the bound is known to be at least
/// 2). With escaping samples this sup can be enormous while still finite;
/// it saturates at f64::MAX rather than overflowing.
pub fn estimate_trace_bound(
    bands: &[Band],
    n_max: u32,
    samples_per_band: usize,
    pot: &PotentialMap,
) -> f64 {
    let samples: Vec<f64> = bands
        .iter()
        .flat_map(|b| interior_points(b, samples_per_band))
        .collect();
    orbit_sup(&samples, n_max, pot).max(2.0)
}

fn interior_points(band: &Band, count: usize) -> Vec<f64> {
    (1..=count)
        .map(|j| band.lo + (band.hi - band.lo) * j as f64 / (count as f64 + 1.0))
        .collect()
}

/// sup over the energies of max_{n ≤ n_max} |xₙ(E)|, saturating.
pub fn orbit_sup(energies: &[f64], n_max: u32, pot: &PotentialMap) -> f64 {
    energies
        .par_iter()
        .map(|&e| trace_orbit(e, n_max, pot).sup())
        .reduce(|| 0.0, f64::max)
}

/// Bounded-trace membership test: max_{n ≤ n_max} |xₙ(E)| ≤ c.
pub fn in_spectrum_heuristic(energy: f64, n_max: u32, c: f64, pot: &PotentialMap) -> bool {
    assert!(c >= 2.0, "trace bound must be at least 2");
    trace_orbit(energy, n_max, pot).sup() <= c
}

/// Band list with the empirical trace bound attached.
#[derive(Debug, Clone)]
pub struct SpectrumEstimate {
    pub bands: Vec<Band>,
    pub total_measure: f64,
    pub c_emp: f64,
    pub n_max: u32,
}

pub fn estimate_spectrum(
    params: &ScanParams,
    n_max: u32,
    samples_per_band: usize,
    pot: &PotentialMap,
) -> Result<SpectrumEstimate> {
    let scan = approximate_bands(params, pot)?;
    let total_measure = band_measure(&scan.bands);
    let c_emp = estimate_trace_bound(&scan.bands, n_max, samples_per_band, pot);
    Ok(SpectrumEstimate {
        bands: scan.bands,
        total_measure,
        c_emp,
        n_max,
    })
}

/// Deterministic audit energies: band midpoints (then quartile points)
/// in decreasing band width, keeping only energies whose orbit stays at
/// or below `orbit_cap` through level `n_check`. Midpoints of the widest
/// bands come first, so the selection is reproducible.
pub fn bounded_band_energies(
    bands: &[Band],
    count: usize,
    n_check: u32,
    orbit_cap: f64,
    pot: &PotentialMap,
) -> Vec<f64> {
    let mut ranked: Vec<&Band> = bands.iter().collect();
    ranked.sort_by(|a, b| b.width().total_cmp(&a.width()).then(a.lo.total_cmp(&b.lo)));
    let mut candidates: Vec<f64> = ranked.iter().map(|b| b.midpoint()).collect();
    for &b in &ranked {
        candidates.push(b.lo + 0.25 * b.width());
        candidates.push(b.lo + 0.75 * b.width());
    }
    let kept: Vec<Option<f64>> = candidates
        .par_iter()
        .map(|&e| {
            if trace_orbit(e, n_check, pot).sup() <= orbit_cap {
                Some(e)
            } else {
                None
            }
        })
        .collect();
    kept.into_iter().flatten().take(count).collect()
}

/// How the fine cover sits inside the coarse one: counts of fine bands
/// meeting (and missing) the union of the coarse bands. Two levels apart
/// the covers usually nest, but not always; this is a report, not an
/// assertion.
#[derive(Debug, Clone, Copy)]
pub struct NestingReport {
    pub checked: usize,
    pub misses: usize,
}

pub fn nesting_report(fine: &[Band], coarse: &[Band]) -> NestingReport {
    let misses = fine
        .iter()
        .filter(|f| !coarse.iter().any(|c| f.lo <= c.hi && c.lo <= f.hi))
        .count();
    NestingReport {
        checked: fine.len(),
        misses,
    }
}

/// Midpoint plus quartile samples of every band, in band order.
pub fn band_energy_samples(bands: &[Band]) -> Vec<f64> {
    bands
        .iter()
        .flat_map(|b| {
            [
                b.lo + 0.25 * b.width(),
                b.midpoint(),
                b.lo + 0.75 * b.width(),
            ]
        })
        .collect()
}
