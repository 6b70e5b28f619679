//! Exact-integer Stirling oracle: with harmonic weights the composition
//! sums are unsigned Stirling numbers of the first kind in disguise,
//! `C∞[N, k] · N!/k! = |s(N, k)|`.

mod common;

use common::stirling_first_triangle;
use mixprior_core::recursion::{CTable, SizeWeighting};

#[test]
fn dpm_table_reproduces_stirling_numbers() {
    let tri = stirling_first_triangle(15);
    for n in 1..=15u32 {
        let table = CTable::build(n, SizeWeighting::Dpm, n).unwrap();
        let ln_n_fact: f64 = (1..=n).map(|i| (i as f64).ln()).sum();
        for k in 1..=n {
            let ln_k_fact: f64 = (1..=k).map(|i| (i as f64).ln()).sum();
            let got = table.log_c(n, k) + ln_n_fact - ln_k_fact;
            let expected = (tri[n as usize][k as usize] as f64).ln();
            assert!(
                (got - expected).abs() <= 1e-10 * expected.abs().max(1.0),
                "n={n} k={k}: ln-domain {got} vs {expected}"
            );
        }
    }
}

#[test]
fn stirling_triangle_self_check() {
    // row sums are n! and the k = 1 column is (n-1)!
    let tri = stirling_first_triangle(12);
    let mut factorial = 1u128;
    for n in 1..=12u32 {
        factorial *= n as u128;
        let row_sum: u128 = tri[n as usize].iter().sum();
        assert_eq!(row_sum, factorial, "row {n}");
    }
    assert_eq!(tri[5][1], 24);
    assert_eq!(tri[5][2], 50);
    assert_eq!(tri[6][3], 225);
}
