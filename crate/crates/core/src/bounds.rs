//! The 4×4 bound-propagation machinery and the explicit constants built
//! from an empirical trace bound.
//!
//! Bₙ propagates the block quadruple (I, Mₙ₊₁, Mₙ, Zₙ₊₁), Zₙ = Mₙ₋₁Mₙ,
//! across one level; D(n,k) = Bₙ₊ₖ···Bₙ₊₁ collects k levels. Entry and
//! norm bounds with the constants K, J, S control every prefix transfer
//! by ‖M(m)‖ ≤ m^κ, κ = 2·log₂S, which is where the upper growth
//! exponent γ₂ = (2κ+1)/2 comes from. The lower-bound constant is
//! D = (1 + 1/(4C²))^{1/2} with γ ≤ log₂(D)/3, γ₁ = γ/2, and the two
//! exponents combine into α = 2γ₁/(γ₁+γ₂) ∈ (0, 1].

use crate::error::{Error, Result};
use crate::linalg::{mat4_det, mat4_identity, mat4_mul, Mat2, Mat4, IDENTITY2};
use crate::transfer::{BlockTable, PotentialMap, Transfer2};

/// The 4×4 one-level propagation matrix. Rows one and three are fixed;
/// the determinant equals x_{n−1}².
#[derive(Debug, Clone, Copy)]
pub struct BMatrix {
    pub entries: Mat4,
    pub level: u32,
}

/// Bₙ from the neighboring traces x_{n−1} and x_{n+1}.
pub fn b_matrix(x_prev: f64, x_next: f64, level: u32) -> BMatrix {
    BMatrix {
        entries: [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, -1.0, 0.0, x_prev],
            [0.0, 1.0, 0.0, 0.0],
            [1.0 - x_prev * x_prev, x_next, x_prev, 0.0],
        ],
        level,
    }
}

impl BMatrix {
    /// |det B − x_{n−1}²| relative to the larger magnitude.
    pub fn det_residual(&self, x_prev: f64) -> f64 {
        let det = mat4_det(&self.entries);
        let target = x_prev * x_prev;
        (det - target).abs() / det.abs().max(target).max(1.0)
    }
}

fn b_at(table: &mut BlockTable, level: u32) -> BMatrix {
    let x_prev = table.trace(level - 1);
    let x_next = table.trace(level + 1);
    b_matrix(x_prev, x_next, level)
}

/// D(n,k) = Bₙ₊ₖ···Bₙ₊₁; D(n,0) is the identity.
pub fn d_product(energy: f64, n: u32, k: u32, pot: &PotentialMap) -> Mat4 {
    let mut table = BlockTable::new(energy, pot);
    d_products(&mut table, n, k).pop().unwrap()
}

/// The whole sequence D(n,0), D(n,1), …, D(n,k).
pub fn d_products(table: &mut BlockTable, n: u32, k: u32) -> Vec<Mat4> {
    let mut out = Vec::with_capacity(k as usize + 1);
    out.push(mat4_identity());
    for j in 1..=k {
        let b = b_at(table, n + j);
        out.push(mat4_mul(&b.entries, out.last().unwrap()));
    }
    out
}

/// The block quadruple (I, Mₙ₊₁, Mₙ, Zₙ₊₁) at one level.
#[derive(Debug, Clone, Copy)]
pub struct QuadState {
    pub blocks: [Mat2; 4],
    pub level: u32,
    pub energy: f64,
}

pub fn quad_state(table: &mut BlockTable, n: u32) -> QuadState {
    QuadState {
        blocks: [
            IDENTITY2,
            unscaled(&table.block(n + 1)),
            unscaled(&table.block(n)),
            unscaled(&table.z_block(n + 1)),
        ],
        level: n,
        energy: table.energy(),
    }
}

fn unscaled(t: &Transfer2) -> Mat2 {
    let f = t.scale_log().exp();
    let e = t.entries();
    [[e[0][0] * f, e[0][1] * f], [e[1][0] * f, e[1][1] * f]]
}

/// Contract D(n,k) against the level-n quadruple and compare with the
/// directly computed level-(n+k) quadruple. Returns the worst entrywise
/// residual relative to the magnitudes in each block row.
pub fn verify_quad_propagation(energy: f64, n: u32, k: u32, pot: &PotentialMap) -> f64 {
    let mut table = BlockTable::new(energy, pot);
    let d = d_products(&mut table, n, k).pop().unwrap();
    let base = quad_state(&mut table, n);
    let target = quad_state(&mut table, n + k);
    let mut worst = 0.0f64;
    for i in 0..4 {
        let mut acc = [[0.0f64; 2]; 2];
        for (j, block) in base.blocks.iter().enumerate() {
            let c = d[i][j];
            for (r, row) in block.iter().enumerate() {
                for (s, &v) in row.iter().enumerate() {
                    acc[r][s] += c * v;
                }
            }
        }
        let mut mag = 1e-12f64;
        for r in 0..2 {
            for s in 0..2 {
                mag = mag.max(acc[r][s].abs()).max(target.blocks[i][r][s].abs());
            }
        }
        for r in 0..2 {
            for s in 0..2 {
                worst = worst.max((acc[r][s] - target.blocks[i][r][s]).abs() / mag);
            }
        }
    }
    worst
}

/// Worst residual of the row recursions linking D(n,k) to D(n,k+1):
/// row 1 stays δ₁ⱼ, row 2 is −(row 2) + x_{n+k}(row 4), row 3 copies the
/// previous row 2, and row 4 combines rows 1..3 with trace coefficients.
pub fn row_recursion_residual(energy: f64, n: u32, k_max: u32, pot: &PotentialMap) -> f64 {
    let mut table = BlockTable::new(energy, pot);
    let ds = d_products(&mut table, n, k_max);
    let mut worst = 0.0f64;
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1.0);
    for k in 0..k_max {
        let cur = &ds[k as usize];
        let next = &ds[k as usize + 1];
        let x_nk = table.trace(n + k);
        let x_nk2 = table.trace(n + k + 2);
        for j in 0..4 {
            let delta = if j == 0 { 1.0 } else { 0.0 };
            worst = worst.max(rel(next[0][j], delta));
            worst = worst.max(rel(next[1][j], -cur[1][j] + x_nk * cur[3][j]));
            worst = worst.max(rel(next[2][j], cur[1][j]));
            worst = worst.max(rel(
                next[3][j],
                (1.0 - x_nk * x_nk) * delta + x_nk2 * cur[1][j] + x_nk * cur[2][j],
            ));
        }
    }
    worst
}

/// Row 3 of D(n,k) equals row 2 of D(n,k−1); the induction for the entry
/// bound silently uses this identity. Returns the worst deviation.
pub fn row_shift_residual(energy: f64, n: u32, k_max: u32, pot: &PotentialMap) -> f64 {
    let mut table = BlockTable::new(energy, pot);
    let ds = d_products(&mut table, n, k_max);
    let mut worst = 0.0f64;
    for k in 1..=k_max as usize {
        for j in 0..4 {
            let a = ds[k][2][j];
            let b = ds[k - 1][1][j];
            worst = worst.max((a - b).abs() / a.abs().max(b.abs()).max(1.0));
        }
    }
    worst
}

/// All sixteen entries of D(n,k) bounded by K^k.
pub fn check_entry_bounds(energy: f64, n: u32, k: u32, k_const: f64, pot: &PotentialMap) -> bool {
    let d = d_product(energy, n, k, pot);
    let log_bound = k as f64 * k_const.ln();
    d.iter()
        .flatten()
        .all(|&v| v == 0.0 || v.abs().ln() <= log_bound + 1e-12)
}

/// Suprema of the seed norms entering the constant J.
#[derive(Debug, Clone, Copy)]
pub struct NormSuprema {
    pub m0: f64,
    pub m1: f64,
    pub z1: f64,
}

/// Seed norms maximized over a list of energies.
pub fn norm_suprema(energies: &[f64], pot: &PotentialMap) -> NormSuprema {
    let mut sup = NormSuprema {
        m0: 0.0,
        m1: 0.0,
        z1: 0.0,
    };
    for &e in energies {
        let mut t = BlockTable::new(e, pot);
        sup.m0 = sup.m0.max(t.block(0).norm_log().exp());
        sup.m1 = sup.m1.max(t.block(1).norm_log().exp());
        sup.z1 = sup.z1.max(t.z_block(1).norm_log().exp());
    }
    sup
}

/// Every explicit constant of the growth estimates, derived from a trace
/// bound C and the seed norms.
#[derive(Debug, Clone, Copy)]
pub struct ConstantsLedger {
    pub c: f64,
    pub k: f64,
    pub j: f64,
    pub s: f64,
    pub kappa: f64,
    pub gamma2: f64,
    pub d: f64,
    pub gamma: f64,
    pub gamma1: f64,
    pub alpha: f64,
    pub c1: f64,
}

/// Build the ledger: K = C² + 2C + 1, J = max{4, K, 4‖M₀‖, 4‖M₁‖, 4‖Z₁‖},
/// S = J(4+2C), κ = 2log₂S, γ₂ = (2κ+1)/2, D = (1 + 1/(4C²))^{1/2},
/// γ = log₂(D)/3 (the largest admissible choice), γ₁ = γ/2,
/// α = 2γ₁/(γ₁+γ₂), C₁ = 1/√2.
pub fn constants_from_c(c: f64, norms: &NormSuprema) -> Result<ConstantsLedger> {
    if !(c >= 2.0) {
        return Err(Error::Domain(format!(
            "trace bound C must be at least 2, got {c}"
        )));
    }
    let k = c * c + 2.0 * c + 1.0;
    let j = [4.0, k, 4.0 * norms.m0, 4.0 * norms.m1, 4.0 * norms.z1]
        .into_iter()
        .fold(f64::MIN, f64::max);
    let s = j * (4.0 + 2.0 * c);
    let kappa = 2.0 * s.log2();
    let gamma2 = (2.0 * kappa + 1.0) / 2.0;
    let d = (1.0 + 1.0 / (4.0 * c * c)).sqrt();
    let gamma = d.log2() / 3.0;
    let gamma1 = gamma / 2.0;
    let alpha = 2.0 * gamma1 / (gamma1 + gamma2);
    if !s.is_finite() || !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::Domain(format!(
            "trace bound C = {c} degenerates the constants"
        )));
    }
    Ok(ConstantsLedger {
        c,
        k,
        j,
        s,
        kappa,
        gamma2,
        d,
        gamma,
        gamma1,
        alpha,
        c1: std::f64::consts::FRAC_1_SQRT_2,
    })
}

/// max{‖Mₙ₊₁‖, ‖Zₙ₊₁‖} ≤ J^{n+1}, compared in log form.
pub fn check_block_norm_bound(energy: f64, n: u32, j_const: f64, pot: &PotentialMap) -> bool {
    let mut table = BlockTable::new(energy, pot);
    let bound = (n as f64 + 1.0) * j_const.ln() + 1e-12;
    table.block(n + 1).norm_log() <= bound && table.z_block(n + 1).norm_log() <= bound
}

/// max{‖MₙMₙ₊ₖ‖, ‖MₙZₙ₊ₖ‖} ≤ S^{n+k}, k ≥ 1.
pub fn check_pair_norm_bound(
    energy: f64,
    n: u32,
    k: u32,
    s_const: f64,
    pot: &PotentialMap,
) -> bool {
    assert!(k >= 1);
    let mut table = BlockTable::new(energy, pot);
    let bound = (n + k) as f64 * s_const.ln() + 1e-12;
    let m_n = table.block(n);
    let a = m_n.mul(&table.block(n + k)).norm_log();
    let b = m_n.mul(&table.z_block(n + k)).norm_log();
    a <= bound && b <= bound
}

/// ‖M_{n₁}···M_{n_k}‖ ≤ S^{n_k + k − 2} for strictly ascending levels,
/// k ≥ 2. The product is formed in scaled representation and compared in
/// log form.
pub fn check_product_bound(
    energy: f64,
    indices: &[u32],
    s_const: f64,
    pot: &PotentialMap,
) -> Result<bool> {
    if indices.len() < 2 {
        return Err(Error::Domain(
            "product bound needs at least two factors".into(),
        ));
    }
    if indices.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain(
            "product bound needs strictly ascending levels".into(),
        ));
    }
    let mut table = BlockTable::new(energy, pot);
    let mut acc = Transfer2::identity();
    for &n in indices {
        acc = acc.mul(&table.block(n));
    }
    let n_k = *indices.last().unwrap() as f64;
    let k = indices.len() as f64;
    Ok(acc.norm_log() <= (n_k + k - 2.0) * s_const.ln() + 1e-12)
}

/// The prefix-transfer ceiling m^κ with κ = 2·log₂S.
pub fn prefix_norm_bound(m: u64, s_const: f64) -> f64 {
    let kappa = 2.0 * s_const.log2();
    (m as f64).powf(kappa)
}

/// ‖M(m)‖ ≤ m^κ, compared in log form.
pub fn check_prefix_norm(energy: f64, m: u64, s_const: f64, pot: &PotentialMap) -> Result<bool> {
    let kappa = 2.0 * s_const.log2();
    let t = crate::transfer::prefix_transfer(energy, m, pot)?;
    Ok(t.norm_log() <= kappa * (m as f64).ln() + 1e-12)
}

/// Tally of one audited inequality family.
#[derive(Debug, Clone, Copy, Default)]
pub struct LemmaTally {
    pub pass: usize,
    pub fail: usize,
    /// For residual audits: the worst residual seen. For bound audits:
    /// the smallest log-slack (bound − value); negative means a failure.
    pub worst_margin: f64,
}

impl LemmaTally {
    fn residual(items: impl Iterator<Item = (bool, f64)>) -> LemmaTally {
        let mut t = LemmaTally {
            worst_margin: 0.0,
            ..Default::default()
        };
        for (ok, r) in items {
            if ok {
                t.pass += 1;
            } else {
                t.fail += 1;
            }
            t.worst_margin = t.worst_margin.max(r);
        }
        t
    }

    fn slack(items: impl Iterator<Item = f64>) -> LemmaTally {
        let mut t = LemmaTally {
            worst_margin: f64::INFINITY,
            ..Default::default()
        };
        for m in items {
            if m >= 0.0 {
                t.pass += 1;
            } else {
                t.fail += 1;
            }
            t.worst_margin = t.worst_margin.min(m);
        }
        if t.pass + t.fail == 0 {
            t.worst_margin = 0.0;
        }
        t
    }
}

/// Audit report across a set of energies.
#[derive(Debug, Clone)]
pub struct BoundsAuditReport {
    pub row_recursion: LemmaTally,
    pub row_shift: LemmaTally,
    pub b_determinant: LemmaTally,
    pub quad_propagation: LemmaTally,
    pub entry_bound: LemmaTally,
    pub block_norm: LemmaTally,
    pub pair_norm: LemmaTally,
    pub product_norm: LemmaTally,
    pub prefix_norm: LemmaTally,
}

impl BoundsAuditReport {
    pub fn all_pass(&self) -> bool {
        [
            &self.row_recursion,
            &self.row_shift,
            &self.b_determinant,
            &self.quad_propagation,
            &self.entry_bound,
            &self.block_norm,
            &self.pair_norm,
            &self.product_norm,
            &self.prefix_norm,
        ]
        .iter()
        .all(|t| t.fail == 0)
    }
}

fn log_slack_entry(energy: f64, n: u32, k: u32, k_const: f64, pot: &PotentialMap) -> f64 {
    let d = d_product(energy, n, k, pot);
    let bound = k as f64 * k_const.ln();
    let worst = d
        .iter()
        .flatten()
        .filter(|v| **v != 0.0)
        .map(|v| v.abs().ln())
        .fold(f64::NEG_INFINITY, f64::max);
    if worst == f64::NEG_INFINITY {
        bound
    } else {
        bound - worst + 1e-12
    }
}

/// Run every audit of this module over an energy set, levels n ≤ n_max
/// and depths k ≤ k_max. Product-bound index sets are the binary
/// decompositions of a fixed sample of prefix lengths plus contiguous
/// runs, so the audit family is deterministic.
pub fn bounds_audit(
    energies: &[f64],
    n_max: u32,
    k_max: u32,
    ledger: &ConstantsLedger,
    pot: &PotentialMap,
) -> BoundsAuditReport {
    let nk: Vec<(u32, u32)> = (0..=n_max)
        .flat_map(|n| (0..=k_max).map(move |k| (n, k)))
        .collect();

    let row_recursion = LemmaTally::residual(energies.iter().flat_map(|&e| {
        (0..=n_max).map(move |n| {
            let r = row_recursion_residual(e, n, k_max, pot);
            (r <= 1e-9, r)
        })
    }));
    let row_shift = LemmaTally::residual(energies.iter().flat_map(|&e| {
        (0..=n_max).map(move |n| {
            let r = row_shift_residual(e, n, k_max, pot);
            (r <= 1e-9, r)
        })
    }));
    let b_determinant = LemmaTally::residual(energies.iter().flat_map(|&e| {
        (1..=n_max + k_max).map(move |lvl| {
            let mut t = BlockTable::new(e, pot);
            let x_prev = t.trace(lvl - 1);
            let x_next = t.trace(lvl + 1);
            let r = b_matrix(x_prev, x_next, lvl).det_residual(x_prev);
            (r <= 1e-9, r)
        })
    }));
    let quad_propagation = LemmaTally::residual(energies.iter().flat_map(|&e| {
        nk.iter().map(move |&(n, k)| {
            let r = verify_quad_propagation(e, n, k, pot);
            (r <= 1e-7, r)
        })
    }));
    let entry_bound = LemmaTally::slack(energies.iter().flat_map(|&e| {
        nk.iter()
            .map(move |&(n, k)| log_slack_entry(e, n, k, ledger.k, pot))
    }));
    let block_norm = LemmaTally::slack(energies.iter().flat_map(|&e| {
        (0..=n_max).map(move |n| {
            let mut t = BlockTable::new(e, pot);
            let bound = (n as f64 + 1.0) * ledger.j.ln();
            let v = t.block(n + 1).norm_log().max(t.z_block(n + 1).norm_log());
            bound - v + 1e-12
        })
    }));
    let pair_norm = LemmaTally::slack(energies.iter().flat_map(|&e| {
        (0..=n_max).flat_map(move |n| {
            (1..=k_max).map(move |k| {
                let mut t = BlockTable::new(e, pot);
                let bound = (n + k) as f64 * ledger.s.ln();
                let m_n = t.block(n);
                let v = m_n
                    .mul(&t.block(n + k))
                    .norm_log()
                    .max(m_n.mul(&t.z_block(n + k)).norm_log());
                bound - v + 1e-12
            })
        })
    }));
    // deterministic product families: binary decompositions and runs
    let mut index_sets: Vec<Vec<u32>> = Vec::new();
    for m in [3u64, 5, 7, 11, 21, 41, 85, 170, 341, 682, 1365, 2730, 4095] {
        let set: Vec<u32> = (0..12).filter(|i| (m >> i) & 1 == 1).collect();
        if set.len() >= 2 {
            index_sets.push(set);
        }
    }
    for start in 0..=n_max.min(4) {
        for len in 2..=4u32 {
            index_sets.push((start..start + len).collect());
        }
    }
    let product_norm = LemmaTally::slack(energies.iter().flat_map(|&e| {
        index_sets.iter().map(move |set| {
            let mut t = BlockTable::new(e, pot);
            let mut acc = Transfer2::identity();
            for &n in set {
                acc = acc.mul(&t.block(n));
            }
            let bound = (*set.last().unwrap() as f64 + set.len() as f64 - 2.0) * ledger.s.ln();
            bound - acc.norm_log() + 1e-12
        })
    }));
    let prefix_norm = LemmaTally::slack(energies.iter().flat_map(|&e| {
        [2u64, 3, 5, 17, 100, 1000, 4096].into_iter().map(move |m| {
            let kappa = 2.0 * ledger.s.log2();
            let t = crate::transfer::prefix_transfer(e, m, pot).expect("certified prefix");
            kappa * (m as f64).ln() - t.norm_log() + 1e-12
        })
    }));

    BoundsAuditReport {
        row_recursion,
        row_shift,
        b_determinant,
        quad_propagation,
        entry_bound,
        block_norm,
        pair_norm,
        product_norm,
        prefix_norm,
    }
}
