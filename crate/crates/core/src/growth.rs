//! Truncated solution norms, the lower-bound inequality chain, and
//! power-law exponent fits.
//!
//! For a solution u of the difference equation with normalized initial
//! data and w the integer part of L, the truncated norm is
//! ‖u‖_L = (Σ_{n=1..w} u(n)² + (L−w)·u(w+1)²)^{1/2}. The companion
//! vector norm ‖U‖_L applies the same truncation rule to
//! ‖U(n)‖² = u(n)² + u(n−1)², and the two are tied by the exact identity
//! ‖U‖²_L = ‖u‖²_L + ‖u‖²_{L−1} + u(0)².

use crate::error::{Error, Result};
use crate::linalg::least_squares_slope;
use crate::substitution::fixed_point_window;
use crate::transfer::{word_transfer, NicState, PotentialMap};

/// Site potential values V(ϖ(0)), …, V(ϖ(len−1)).
pub fn site_potentials(len: usize, pot: &PotentialMap) -> Result<Vec<f64>> {
    let w = fixed_point_window(0, len)?;
    Ok(w.letters.letters().iter().map(|&l| pot.value(l)).collect())
}

/// Solution values u(0), u(1), …, u(len+1) from the three-term recurrence
/// u(i+1) = (E − v[i−1])·u(i) − u(i−1). The site values `v` drive sites
/// 1..=len, so the result has len+2 entries.
pub fn solution_values(energy: f64, nic: &NicState, v: &[f64]) -> Vec<f64> {
    let mut us = Vec::with_capacity(v.len() + 2);
    us.push(nic.u0());
    us.push(nic.u1());
    for i in 1..=v.len() {
        let next = (energy - v[i - 1]) * us[i] - us[i - 1];
        us.push(next);
    }
    us
}

fn truncated(sq: impl Fn(usize) -> f64, l: f64) -> f64 {
    let whole = l.floor() as usize;
    let frac = l - whole as f64;
    let mut acc = 0.0;
    for n in 1..=whole {
        acc += sq(n);
    }
    if frac > 0.0 {
        acc += frac * sq(whole + 1);
    }
    acc.sqrt()
}

/// ‖u‖_L directly from the recurrence.
pub fn truncated_norm(energy: f64, nic: &NicState, l: f64, pot: &PotentialMap) -> Result<f64> {
    if !(l > 0.0) {
        return Err(Error::Domain("truncation length must be positive".into()));
    }
    let need = l.floor() as usize + 1;
    let v = site_potentials(need, pot)?;
    let us = solution_values(energy, nic, &v);
    Ok(truncated(|n| us[n] * us[n], l))
}

/// Norm samples for an ascending list of truncation lengths, computed in
/// one pass over the cumulative sums.
pub fn truncated_norms(
    energy: f64,
    nic: &NicState,
    ls: &[f64],
    pot: &PotentialMap,
) -> Result<Vec<(f64, f64)>> {
    if ls.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain(
            "truncation lengths must be strictly increasing".into(),
        ));
    }
    let max_l = match ls.last() {
        Some(&l) if l > 0.0 => l,
        _ => return Err(Error::Domain("need at least one positive length".into())),
    };
    let need = max_l.floor() as usize + 1;
    let v = site_potentials(need, pot)?;
    let us = solution_values(energy, nic, &v);
    let mut cum = vec![0.0f64; us.len()];
    for n in 1..us.len() {
        cum[n] = cum[n - 1] + us[n] * us[n];
    }
    Ok(ls
        .iter()
        .map(|&l| {
            let whole = l.floor() as usize;
            let frac = l - whole as f64;
            let mut sq = cum[whole];
            if frac > 0.0 {
                sq += frac * us[whole + 1] * us[whole + 1];
            }
            (l, sq.sqrt())
        })
        .collect())
}

/// ‖U‖_L with the same truncation rule applied to u(n)² + u(n−1)².
pub fn u_truncated_norm(us: &[f64], l: f64) -> f64 {
    truncated(|n| us[n] * us[n] + us[n - 1] * us[n - 1], l)
}

/// The two-block inequality ‖U‖_{l+2n_k} ≥ D·‖U‖_l, D = (1+1/(4C²))^{1/2}.
///
/// Hypotheses checked first: the potential word driving sites 1..l+2n_k
/// must repeat with period n_k, allowing the single defect at the end of
/// the first period that the block combinatorics forces (the two block
/// words of each level agree except at their last letter, so a literal
/// period never occurs anchored at the origin); and the transfer across
/// one period must have |trace| ≤ C. Violations are reported as errors,
/// mirroring how the inequality degenerates off the spectrum.
pub fn check_two_block_step(
    energy: f64,
    nic: &NicState,
    n_k: u64,
    l: u64,
    c: f64,
    pot: &PotentialMap,
) -> Result<bool> {
    if l < 1 || l > n_k {
        return Err(Error::Domain(format!(
            "need 1 <= l <= n_k, got l={l}, n_k={n_k}"
        )));
    }
    let total = (l + 2 * n_k) as usize;
    let window = fixed_point_window(0, total)?;
    let letters = window.letters.letters();
    for p in 0..(l + n_k - 1) as usize {
        if letters[p] != letters[p + n_k as usize] && p as u64 != n_k - 1 {
            return Err(Error::HypothesisViolation(format!(
                "potential is not n_k-periodic at offset {p}"
            )));
        }
    }
    let period = crate::substitution::Word::new(letters[..n_k as usize].to_vec());
    let tr = word_transfer(energy, &period, pot).trace();
    if !(tr.abs() <= c) {
        return Err(Error::HypothesisViolation(format!(
            "period trace {tr:.3e} exceeds the bound {c:.3e}"
        )));
    }
    let v: Vec<f64> = letters.iter().map(|&x| pot.value(x)).collect();
    let us = solution_values(energy, nic, &v);
    let d = (1.0 + 1.0 / (4.0 * c * c)).sqrt();
    Ok(u_truncated_norm(&us, (l + 2 * n_k) as f64) >= d * u_truncated_norm(&us, l as f64))
}

/// The three-scale inequality ‖U‖_{2^{n+2}} ≥ D·‖U‖_{2^{n−1}}.
pub fn check_three_scale_inequality(
    energy: f64,
    nic: &NicState,
    n: u32,
    d: f64,
    pot: &PotentialMap,
) -> Result<bool> {
    if n < 1 {
        return Err(Error::Domain("three-scale step needs n >= 1".into()));
    }
    let hi = 1u64 << (n + 2);
    let lo = 1u64 << (n - 1);
    let v = site_potentials(hi as usize, pot)?;
    let us = solution_values(energy, nic, &v);
    Ok(u_truncated_norm(&us, hi as f64) >= d * u_truncated_norm(&us, lo as f64))
}

/// Sampled norm profile with fitted growth exponents.
#[derive(Debug, Clone)]
pub struct NormProfile {
    pub energy: f64,
    pub nic: NicState,
    pub samples: Vec<(f64, f64)>,
    pub gamma1_emp: f64,
    pub gamma2_emp: f64,
    pub fit_window: (f64, f64),
}

/// Fit the exponent pair from (L, ‖u‖_L) samples inside the window.
///
/// gamma1 is the least-squares slope of log‖u‖ against log L restricted
/// to the cubic-dyadic subsequence L = 2^{3n} (falling back to all window
/// samples when fewer than two such lengths are present); gamma2 is the
/// maximal chord slope over all sample pairs in the window.
pub fn fit_power_exponents(samples: &[(f64, f64)], fit_window: (f64, f64)) -> Result<(f64, f64)> {
    let in_window: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(l, _)| *l >= fit_window.0 && *l <= fit_window.1)
        .copied()
        .collect();
    if in_window.len() < 8 {
        return Err(Error::InsufficientRange {
            samples: in_window.len(),
            decades: 0.0,
        });
    }
    let norms: Vec<f64> = in_window.iter().map(|p| p.1).collect();
    let spread = norms.iter().cloned().fold(f64::MIN, f64::max)
        - norms.iter().cloned().fold(f64::MAX, f64::min);
    if spread == 0.0 {
        return Err(Error::DegenerateFit);
    }
    if norms.iter().any(|&n| n <= 0.0) {
        return Err(Error::Domain("norms must be positive for a log fit".into()));
    }

    let logs: Vec<(f64, f64)> = in_window.iter().map(|&(l, n)| (l.ln(), n.ln())).collect();
    let is_cubic_dyadic = |l: f64| {
        let e = l.log2();
        let r = e.round();
        (e - r).abs() < 1e-9 && (r as i64) % 3 == 0 && r >= 1.0
    };
    let cubic: Vec<(f64, f64)> = in_window
        .iter()
        .filter(|(l, _)| is_cubic_dyadic(*l))
        .map(|&(l, n)| (l.ln(), n.ln()))
        .collect();
    let gamma1 = if cubic.len() >= 2 {
        least_squares_slope(&cubic)
    } else {
        least_squares_slope(&logs)
    };
    let mut gamma2 = f64::NEG_INFINITY;
    for i in 0..logs.len() {
        for j in i + 1..logs.len() {
            gamma2 = gamma2.max((logs[j].1 - logs[i].1) / (logs[j].0 - logs[i].0));
        }
    }
    Ok((gamma1, gamma2))
}

/// Profile a solution over the given lengths and fit its exponents over
/// the full sampled span.
pub fn norm_profile(
    energy: f64,
    nic: &NicState,
    ls: &[f64],
    pot: &PotentialMap,
) -> Result<NormProfile> {
    let samples = truncated_norms(energy, nic, ls, pot)?;
    let fit_window = (samples[0].0, samples[samples.len() - 1].0);
    let (gamma1_emp, gamma2_emp) = fit_power_exponents(&samples, fit_window)?;
    Ok(NormProfile {
        energy,
        nic: *nic,
        samples,
        gamma1_emp,
        gamma2_emp,
        fit_window,
    })
}

/// The dyadic length grid 2, 4, …, 2^max_exp.
pub fn dyadic_lengths(max_exp: u32) -> Vec<f64> {
    (1..=max_exp).map(|m| (1u64 << m) as f64).collect()
}

/// α = 2γ₁/(γ₁+γ₂) for 0 < γ₁ ≤ γ₂; always lands in (0, 1].
pub fn alpha_from_gammas(gamma1: f64, gamma2: f64) -> Result<f64> {
    if !(gamma1 > 0.0 && gamma1 <= gamma2) {
        return Err(Error::Domain(format!(
            "exponents must satisfy 0 < gamma1 <= gamma2, got ({gamma1}, {gamma2})"
        )));
    }
    Ok(2.0 * gamma1 / (gamma1 + gamma2))
}

/// One-sided sandwich data between ‖u‖ and ‖U‖ at the given lengths:
/// the smallest ratio ‖u‖²_L / ‖U‖²_L and the worst residual of the
/// exact identity ‖U‖²_L = ‖u‖²_L + ‖u‖²_{L−1} + u(0)².
pub fn sandwich_report(
    energy: f64,
    nic: &NicState,
    ls: &[f64],
    pot: &PotentialMap,
) -> Result<(f64, f64)> {
    let max_l = ls.iter().cloned().fold(0.0f64, f64::max);
    let v = site_potentials(max_l.floor() as usize + 1, pot)?;
    let us = solution_values(energy, nic, &v);
    let mut min_ratio = f64::MAX;
    let mut worst_identity = 0.0f64;
    for &l in ls {
        let u2 = truncated(|n| us[n] * us[n], l).powi(2);
        let uu2 = u_truncated_norm(&us, l).powi(2);
        min_ratio = min_ratio.min(u2 / uu2);
        if l >= 1.0 {
            let u2_prev = truncated(|n| us[n] * us[n], l - 1.0).powi(2);
            let rhs = u2 + u2_prev + us[0] * us[0];
            worst_identity = worst_identity.max((uu2 - rhs).abs() / uu2.max(1.0));
        }
    }
    Ok((min_ratio, worst_identity))
}
