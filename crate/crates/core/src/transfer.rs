//! Transfer matrices of the discrete Schrödinger operator at energy E.
//!
//! A single site contributes T(v) = [[E−v, −1], [1, 0]]; the transfer
//! across a word multiplies site matrices with the last letter leftmost,
//! so that U(m+1) = M(m)·U(1) propagates the solution column
//! U(m+1) = (u(m+1), u(m))ᵀ. Block matrices Mₙ over the words aₙ obey
//! Mₙ₊₁ = Mₙ₋₁²Mₙ, and for any m = Σ 2^{nᵢ} the prefix transfer factors
//! as M(m) = M_{n₁}·M_{n₂}·…·M_{n_k} with exponents ascending left to
//! right; the factor order is pinned by the word-level certificate in
//! [`crate::substitution::prefix_block_decomposition`].
//!
//! Off the spectrum, products grow doubly exponentially in the block
//! level. Every matrix therefore carries a `scale_log` factor: the stored
//! entries are the true matrix times e^{−scale_log}. Rescaling triggers
//! once entries exceed 1e100, which keeps traces and norms meaningful far
//! beyond the naive floating-point range.

use crate::error::{Error, Result};
use crate::linalg::{mat2_mul, spectral_norm_2x2, Mat2, IDENTITY2};
use crate::substitution::{self, Letter, Word};

/// Entry magnitude that triggers scale extraction.
const SCALE_LIMIT: f64 = 1e100;

/// Trace magnitude past which an orbit is marked as escaped.
pub const TRACE_OVERFLOW: f64 = 1e150;

/// The two site values of the potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialMap {
    value_a: f64,
    value_b: f64,
}

impl PotentialMap {
    /// A nonperiodic potential needs two distinct values.
    pub fn new(value_a: f64, value_b: f64) -> Result<Self> {
        if value_a == value_b {
            return Err(Error::Domain("potential values must be distinct".into()));
        }
        if !value_a.is_finite() || !value_b.is_finite() {
            return Err(Error::Domain("potential values must be finite".into()));
        }
        Ok(PotentialMap { value_a, value_b })
    }

    pub fn value(&self, l: Letter) -> f64 {
        match l {
            Letter::A => self.value_a,
            Letter::B => self.value_b,
        }
    }

    pub fn value_a(&self) -> f64 {
        self.value_a
    }

    pub fn value_b(&self) -> f64 {
        self.value_b
    }

    pub fn min_value(&self) -> f64 {
        self.value_a.min(self.value_b)
    }

    pub fn max_value(&self) -> f64 {
        self.value_a.max(self.value_b)
    }
}

impl Default for PotentialMap {
    /// The reference instance V(a) = −4, V(b) = 1.
    fn default() -> Self {
        PotentialMap {
            value_a: -4.0,
            value_b: 1.0,
        }
    }
}

/// A real 2×2 unit-determinant matrix in scaled representation: the true
/// matrix is e^{scale_log} times `entries`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transfer2 {
    entries: Mat2,
    scale_log: f64,
}

impl Transfer2 {
    pub fn identity() -> Self {
        Transfer2 {
            entries: IDENTITY2,
            scale_log: 0.0,
        }
    }

    pub fn from_entries(entries: Mat2) -> Self {
        Transfer2 {
            entries,
            scale_log: 0.0,
        }
        .rescaled()
    }

    pub fn entries(&self) -> &Mat2 {
        &self.entries
    }

    pub fn scale_log(&self) -> f64 {
        self.scale_log
    }

    /// Entry (i, j) with the scale factor multiplied back in. Saturates to
    /// ±inf once the true value leaves the floating range.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i][j] * self.scale_log.exp()
    }

    fn rescaled(mut self) -> Self {
        let mut mx = 0.0f64;
        for row in &self.entries {
            for &v in row {
                mx = mx.max(v.abs());
            }
        }
        if mx > SCALE_LIMIT {
            for row in &mut self.entries {
                for v in row.iter_mut() {
                    *v /= mx;
                }
            }
            self.scale_log += mx.ln();
        }
        self
    }

    /// self · rhs, rescaling the product if needed.
    pub fn mul(&self, rhs: &Transfer2) -> Transfer2 {
        Transfer2 {
            entries: mat2_mul(&self.entries, &rhs.entries),
            scale_log: self.scale_log + rhs.scale_log,
        }
        .rescaled()
    }

    /// (ln |trace|, sign of trace). The log refers to the true matrix.
    pub fn trace_log(&self) -> (f64, f64) {
        let t = self.entries[0][0] + self.entries[1][1];
        if t == 0.0 {
            (f64::NEG_INFINITY, 0.0)
        } else {
            (t.abs().ln() + self.scale_log, t.signum())
        }
    }

    /// Trace of the true matrix; saturates to ±inf when out of range.
    pub fn trace(&self) -> f64 {
        let (lg, sign) = self.trace_log();
        sign * lg.exp()
    }

    /// ln of the spectral norm of the true matrix.
    pub fn norm_log(&self) -> f64 {
        spectral_norm_2x2(&self.entries).ln() + self.scale_log
    }

    /// Residual of the unit-determinant constraint, relative to the
    /// magnitude of the products that enter the determinant. The stored
    /// entries must satisfy det = e^{−2·scale_log}; after long product
    /// chains that target underflows, so the comparison is carried out on
    /// the stored entries where the cancellation actually happens.
    pub fn det_residual(&self) -> f64 {
        let p1 = self.entries[0][0] * self.entries[1][1];
        let p2 = self.entries[0][1] * self.entries[1][0];
        let target = (-2.0 * self.scale_log).exp();
        let denom = p1.abs().max(p2.abs()).max(target).max(f64::MIN_POSITIVE);
        ((p1 - p2) - target).abs() / denom
    }

    /// Largest entrywise relative difference between two scaled matrices,
    /// relative to the larger magnitude present, floored at 1e−12.
    pub fn rel_diff(&self, other: &Transfer2) -> f64 {
        let s = self.scale_log.max(other.scale_log);
        let fa = (self.scale_log - s).exp();
        let fb = (other.scale_log - s).exp();
        let mut max_diff = 0.0f64;
        let mut max_mag = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                let a = self.entries[i][j] * fa;
                let b = other.entries[i][j] * fb;
                max_diff = max_diff.max((a - b).abs());
                max_mag = max_mag.max(a.abs()).max(b.abs());
            }
        }
        if max_mag == 0.0 {
            return 0.0;
        }
        max_diff / max_mag.max(1e-12)
    }
}

/// Single-site transfer [[E−v, −1], [1, 0]].
pub fn local_transfer(energy: f64, v: f64) -> Transfer2 {
    Transfer2 {
        entries: [[energy - v, -1.0], [1.0, 0.0]],
        scale_log: 0.0,
    }
}

/// Transfer across a word: the product of site matrices with the transfer
/// of the last letter leftmost. The empty word gives the identity.
pub fn word_transfer(energy: f64, w: &Word, pot: &PotentialMap) -> Transfer2 {
    let mut acc = Transfer2::identity();
    for &l in w.letters() {
        acc = local_transfer(energy, pot.value(l)).mul(&acc);
    }
    acc
}

/// Memoized table of block matrices Mₙ for one (E, potential) pair.
///
/// M₀ is the single-site transfer at V(a), M₁ the transfer across "ab",
/// and the rest follow from Mₙ₊₁ = Mₙ₋₁²Mₙ. The table is confined to one
/// evaluation context; energy sweeps use independent tables.
#[derive(Debug, Clone)]
pub struct BlockTable {
    energy: f64,
    blocks: Vec<Transfer2>,
}

impl BlockTable {
    pub fn new(energy: f64, pot: &PotentialMap) -> Self {
        let m0 = local_transfer(energy, pot.value_a());
        let m1 = local_transfer(energy, pot.value_b()).mul(&m0);
        BlockTable {
            energy,
            blocks: vec![m0, m1],
        }
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    fn ensure(&mut self, n: usize) {
        while self.blocks.len() <= n {
            let k = self.blocks.len();
            let prev = &self.blocks[k - 2];
            let cur = &self.blocks[k - 1];
            let next = prev.mul(prev).mul(cur);
            self.blocks.push(next);
        }
    }

    pub fn block(&mut self, n: u32) -> Transfer2 {
        self.ensure(n as usize);
        self.blocks[n as usize]
    }

    /// Trace of Mₙ in log form.
    pub fn trace_log(&mut self, n: u32) -> (f64, f64) {
        self.block(n).trace_log()
    }

    /// Trace of Mₙ, saturating.
    pub fn trace(&mut self, n: u32) -> f64 {
        self.block(n).trace()
    }

    /// Zₙ = Mₙ₋₁Mₙ, the companion product tracked by the 4×4 machinery.
    pub fn z_block(&mut self, n: u32) -> Transfer2 {
        assert!(n >= 1, "Z_n needs n >= 1");
        self.block(n - 1).mul(&self.block(n))
    }
}

/// Mₙ by the block recursion.
pub fn block_transfer(energy: f64, n: u32, pot: &PotentialMap) -> Transfer2 {
    BlockTable::new(energy, pot).block(n)
}

/// M(m) across the fixed-point prefix of length m, assembled from O(log m)
/// block factors in ascending level order. The decomposition is re-certified
/// against the word level on every call; a certificate failure propagates.
pub fn prefix_transfer(energy: f64, m: u64, pot: &PotentialMap) -> Result<Transfer2> {
    let mut table = BlockTable::new(energy, pot);
    prefix_transfer_with(&mut table, m)
}

/// Same as [`prefix_transfer`] but reusing a caller-owned block table.
pub fn prefix_transfer_with(table: &mut BlockTable, m: u64) -> Result<Transfer2> {
    let exponents = substitution::prefix_block_decomposition(m)?;
    let mut acc = Transfer2::identity();
    for &n in &exponents {
        acc = acc.mul(&table.block(n));
    }
    Ok(acc)
}

/// Traces xₙ = tr Mₙ and yₙ = tr M(bₙ) along one energy, with the block
/// scale factor recorded per level and the first escape past
/// [`TRACE_OVERFLOW`] marked.
#[derive(Debug, Clone)]
pub struct TraceOrbit {
    pub energy: f64,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub scale_logs: Vec<f64>,
    pub overflowed_at: Option<usize>,
}

impl TraceOrbit {
    /// max |xₙ| over the computed range, saturating at f64::MAX.
    pub fn sup(&self) -> f64 {
        if self.overflowed_at.is_some() {
            return f64::MAX;
        }
        self.xs.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

/// Compute the trace orbit up to level `n_max`.
///
/// yₙ is evaluated on the matrix route (bₙ = aₙ₋₁aₙ₋₁, so M(bₙ) = Mₙ₋₁²);
/// y₀ is the single-site trace E − V(b). The identity yₙ = xₙ₋₁² − 2 is an
/// audit, not an input.
pub fn trace_orbit(energy: f64, n_max: u32, pot: &PotentialMap) -> TraceOrbit {
    let mut table = BlockTable::new(energy, pot);
    let mut xs = Vec::with_capacity(n_max as usize + 1);
    let mut ys = Vec::with_capacity(n_max as usize + 1);
    let mut scale_logs = Vec::with_capacity(n_max as usize + 1);
    let mut overflowed_at = None;
    for n in 0..=n_max {
        let b = table.block(n);
        let (lg, sign) = b.trace_log();
        if lg > TRACE_OVERFLOW.ln() {
            overflowed_at = Some(n as usize);
            break;
        }
        xs.push(sign * lg.exp());
        scale_logs.push(b.scale_log());
        if n == 0 {
            ys.push(energy - pot.value_b());
        } else {
            let prev = table.block(n - 1);
            ys.push(prev.mul(&prev).trace());
        }
    }
    TraceOrbit {
        energy,
        xs,
        ys,
        scale_logs,
        overflowed_at,
    }
}

/// Normalized initial data (u(0), u(1)) with u(0)² + u(1)² = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NicState {
    u0: f64,
    u1: f64,
}

impl NicState {
    pub fn new(u0: f64, u1: f64) -> Result<Self> {
        let norm = u0.hypot(u1);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Domain(
                "initial data must be a nonzero finite vector".into(),
            ));
        }
        Ok(NicState {
            u0: u0 / norm,
            u1: u1 / norm,
        })
    }

    pub fn u0(&self) -> f64 {
        self.u0
    }

    pub fn u1(&self) -> f64 {
        self.u1
    }

    /// The deterministic 8-point sample (cos jπ/8, sin jπ/8), j = 0..7.
    pub fn circle_samples() -> Vec<NicState> {
        (0..8)
            .map(|j| {
                let th = j as f64 * std::f64::consts::PI / 8.0;
                NicState {
                    u0: th.cos(),
                    u1: th.sin(),
                }
            })
            .collect()
    }
}

/// Solution values (u(m), u(m+1)) obtained from U(m+1) = M(m)·U(1) with
/// U(1) = (u(1), u(0))ᵀ. Values saturate to ±inf far off the spectrum.
pub fn solution_from_nic(
    energy: f64,
    nic: &NicState,
    m: u64,
    pot: &PotentialMap,
) -> Result<(f64, f64)> {
    let t = prefix_transfer(energy, m, pot)?;
    let f = t.scale_log().exp();
    let u_next = (t.entries()[0][0] * nic.u1 + t.entries()[0][1] * nic.u0) * f;
    let u_m = (t.entries()[1][0] * nic.u1 + t.entries()[1][1] * nic.u0) * f;
    Ok((u_m, u_next))
}
