//! Property tests for the structural invariants: unimodularity of every
//! transfer product, the trace identities, word combinatorics, and fit
//! monotonicity.

use pdspec_core::bounds::{b_matrix, constants_from_c, NormSuprema};
use pdspec_core::growth::{fit_power_exponents, solution_values, u_truncated_norm};
use pdspec_core::linalg::mat4_det;
use pdspec_core::substitution::{
    apply_substitution, block_word, fixed_point_window, n_partition, prefix_block_decomposition,
    Letter,
};
use pdspec_core::transfer::{
    block_transfer, prefix_transfer, word_transfer, NicState, PotentialMap,
};
use proptest::prelude::*;

fn pot() -> PotentialMap {
    PotentialMap::default()
}

/// tr(M²) = tr(M)² − 2 for a unit-determinant matrix. Exact in real
/// arithmetic; in floats the achievable accuracy of the matrix-side trace
/// is limited by the entry magnitudes, so large traces are compared in
/// log form and moderate ones carry a noise floor of order ε·‖M‖².
fn squared_trace_identity_holds(m: &pdspec_core::transfer::Transfer2) -> bool {
    let sq = m.mul(m);
    let (y_log, y_sign) = sq.trace_log();
    let (x_log, _) = m.trace_log();
    if x_log > 200.0 {
        return y_sign > 0.0 && (y_log - 2.0 * x_log).abs() <= 1e-9 * (2.0 * x_log);
    }
    let y = sq.trace();
    let x = m.trace();
    let rhs = x * x - 2.0;
    let noise = 1e-13 * (2.0 * m.norm_log()).exp();
    let denom = y.abs().max(rhs.abs()).max(1.0).max(noise);
    ((y - rhs) / denom).abs() <= 1e-9
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn substitution_doubles_length(len in 0usize..200, seed in any::<u64>()) {
        let letters: Vec<Letter> = (0..len)
            .map(|i| if (seed >> (i % 64)) & 1 == 0 { Letter::A } else { Letter::B })
            .collect();
        let w = pdspec_core::substitution::Word::new(letters);
        prop_assert_eq!(apply_substitution(&w).len(), 2 * w.len());
    }

    #[test]
    fn substitution_fixes_the_sequence(len in 1usize..2000) {
        let w = fixed_point_window(0, len).unwrap();
        let image = apply_substitution(&w.letters);
        let longer = fixed_point_window(0, 2 * len).unwrap();
        prop_assert_eq!(image.letters(), longer.letters.letters());
    }

    #[test]
    fn block_agreement_all_levels(n in 1u32..=14) {
        prop_assert!(pdspec_core::substitution::check_block_agreement(n).unwrap());
    }

    #[test]
    fn prefix_certificate_random_lengths(m in 1u64..=4096) {
        let exps = prefix_block_decomposition(m).unwrap();
        prop_assert_eq!(exps.iter().map(|&n| 1u64 << n).sum::<u64>(), m);
        prop_assert!(exps.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn partition_blocks_cover_aligned_windows(n in 1u32..=6, idx in -8i64..8, blocks in 1usize..8) {
        let block_len = 1i64 << n;
        let start = idx * block_len;
        let w = fixed_point_window(start, blocks << n).unwrap();
        let parts = n_partition(&w, n).unwrap();
        prop_assert_eq!(parts.len(), blocks);
        prop_assert!(pdspec_core::substitution::b_blocks_isolated(&parts));
        for (i, p) in parts.iter().enumerate() {
            prop_assert_eq!(p.offset, start + (i as i64) * block_len);
        }
    }

    #[test]
    fn transfers_stay_unimodular(e in -8.0f64..8.0, n in 0u32..=12) {
        let t = block_transfer(e, n, &pot());
        prop_assert!(t.det_residual() <= 1e-9, "residual {}", t.det_residual());
    }

    #[test]
    fn prefix_matches_brute_product(e in -8.0f64..8.0, m in 1u64..=512) {
        let w = fixed_point_window(0, m as usize).unwrap();
        let brute = word_transfer(e, &w.letters, &pot());
        let fast = prefix_transfer(e, m, &pot()).unwrap();
        prop_assert!(fast.rel_diff(&brute) <= 1e-8);
    }

    #[test]
    fn trace_identity_random_energy(e in -8.0f64..8.0, n in 1u32..=12) {
        prop_assert!(squared_trace_identity_holds(&block_transfer(e, n - 1, &pot())));
    }

    #[test]
    fn squared_trace_identity_for_any_block(e in -6.0f64..3.0, n in 0u32..=8) {
        prop_assert!(squared_trace_identity_holds(&block_transfer(e, n, &pot())));
    }

    #[test]
    fn b_matrix_determinant(x_prev in -50.0f64..50.0, x_next in -50.0f64..50.0) {
        let b = b_matrix(x_prev, x_next, 1);
        let det = mat4_det(&b.entries);
        let target = x_prev * x_prev;
        prop_assert!((det - target).abs() <= 1e-9 * det.abs().max(target).max(1.0));
    }

    #[test]
    fn ledger_holds_its_invariants(c in 2.0f64..500.0, m0 in 1.0f64..10.0, m1 in 1.0f64..10.0, z1 in 1.0f64..10.0) {
        let l = constants_from_c(c, &NormSuprema { m0, m1, z1 }).unwrap();
        prop_assert!(l.k == c * c + 2.0 * c + 1.0);
        prop_assert!(l.j >= l.k && l.j >= 4.0 * m0 && l.j >= 4.0 * m1 && l.j >= 4.0 * z1);
        prop_assert!(l.s == l.j * (4.0 + 2.0 * c));
        prop_assert!(l.gamma1 == l.gamma / 2.0);
        prop_assert!(l.alpha > 0.0 && l.alpha <= 1.0);
    }

    #[test]
    fn solution_norms_nondecreasing(e in -6.0f64..-2.0, th in 0.0f64..std::f64::consts::PI) {
        let nic = NicState::new(th.cos(), th.sin()).unwrap();
        let v = pdspec_core::growth::site_potentials(256, &pot()).unwrap();
        let us = solution_values(e, &nic, &v);
        let mut prev = 0.0;
        for l in 1..=256 {
            let cur = u_truncated_norm(&us, l as f64);
            prop_assert!(cur >= prev);
            prev = cur;
        }
    }

    #[test]
    fn fitted_exponents_are_ordered(seed in any::<u64>()) {
        // arbitrary increasing norms: least-squares slope on a subsequence
        // can never exceed the maximal chord slope over all pairs
        let mut state = seed | 1;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut norm = 1.0;
        let samples: Vec<(f64, f64)> = (1..=12)
            .map(|m| {
                norm *= 1.05 + next();
                ((1u64 << m) as f64, norm)
            })
            .collect();
        let (g1, g2) = fit_power_exponents(&samples, (2.0, 4096.0)).unwrap();
        prop_assert!(g1 <= g2 + 1e-12, "g1={g1} g2={g2}");
    }
}

#[test]
fn block_words_pin_partition_labels() {
    // every aligned chunk of a genuine window matches exactly one block word
    let a3 = block_word(Letter::A, 3).unwrap();
    let b3 = block_word(Letter::B, 3).unwrap();
    assert_ne!(a3, b3);
    let w = fixed_point_window(-64, 128).unwrap();
    for part in n_partition(&w, 3).unwrap() {
        let chunk = fixed_point_window(part.offset, 8).unwrap().letters;
        match part.label {
            Letter::A => assert_eq!(chunk, a3),
            Letter::B => assert_eq!(chunk, b3),
        }
    }
}
