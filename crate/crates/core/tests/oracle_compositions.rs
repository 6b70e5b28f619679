//! Composition-enumeration oracle: every conditional quantity the library
//! computes through the log-domain recursion must match direct summation
//! over explicitly enumerated cluster-size compositions at small `N`.

mod common;

use common::*;
use mixprior_core::functionals::{
    expected_psi, expected_psi_product, functional_stats, marginal_size_pmf,
    relative_entropy_stats, Functional,
};
use mixprior_core::eppf::{conditional_sizes_prior, LabelledSizes};
use mixprior_core::priors::{ComponentCountPrior, ModelSpec, TruncationPolicy};
use mixprior_core::recursion::{CTable, SizeWeighting};

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-12)
}

/// Specs for pointwise value comparison. The dynamic case uses a bounded
/// prior on `K` so the oracle and the production path both sum over exactly
/// `K = k..=30` — no truncation-depth disagreement can leak into the
/// comparison. (The heavy-tailed BNB dynamic spec is exercised by the
/// truncation-insensitive normalization check below.)
fn all_specs(n: u32) -> Vec<ModelSpec> {
    let uniform = ComponentCountPrior::uniform(1, 30).unwrap();
    vec![
        ModelSpec::dpm(n, 1.0).unwrap(),
        ModelSpec::static_mfm(n, 0.1, uniform).unwrap(),
        ModelSpec::static_mfm(n, 1.0, uniform).unwrap(),
        ModelSpec::static_mfm(n, 4.0, uniform).unwrap(),
        ModelSpec::dynamic_mfm(n, 0.4, uniform).unwrap(),
    ]
}

fn dynamic_bnb(n: u32) -> ModelSpec {
    let prior = ComponentCountPrior::beta_neg_binomial(1.0, 4.0, 3.0).unwrap();
    ModelSpec::dynamic_mfm(n, 0.4, prior)
        .unwrap()
        .with_truncation(TruncationPolicy::new(1e-12, 2000, 0.999).unwrap())
        .unwrap()
}

#[test]
fn c_table_matches_enumeration_to_1e12() {
    for weighting in [
        SizeWeighting::Mfm { gamma: 0.1 },
        SizeWeighting::Mfm { gamma: 1.0 },
        SizeWeighting::Mfm { gamma: 4.0 },
        SizeWeighting::Dpm,
    ] {
        let oracle_w = match weighting {
            SizeWeighting::Mfm { gamma } => OracleWeight::Gamma(gamma),
            SizeWeighting::Dpm => OracleWeight::Dpm,
        };
        for n in 1..=12u32 {
            let table = CTable::build(n, weighting, n).unwrap();
            for k in 1..=n {
                let expected = brute_c(n, k, oracle_w);
                let got = libm::exp(table.log_c(n, k));
                assert!(
                    rel_close(got, expected, 1e-12),
                    "{weighting:?} n={n} k={k}: {got} vs {expected}"
                );
            }
        }
    }
}

#[test]
fn conditional_sizes_prior_normalizes_and_matches_enumeration() {
    for n in 1..=10u32 {
        for spec in all_specs(n) {
            for k in 1..=n {
                let dist = oracle_conditional_distribution(&spec, k);
                let mut total = 0.0;
                for (comp, expected) in &dist {
                    let got = conditional_sizes_prior(
                        &LabelledSizes::new(comp.clone()).unwrap(),
                        &spec,
                    )
                    .unwrap()
                    .value;
                    total += got;
                    assert!(
                        rel_close(got, *expected, 1e-9),
                        "{:?} n={n} k={k} comp={comp:?}: {got} vs {expected}",
                        spec.class()
                    );
                }
                assert!(
                    (total - 1.0).abs() < 1e-10,
                    "{:?} n={n} k={k} sums to {total}",
                    spec.class()
                );
            }
        }
    }
}

#[test]
fn heavy_tailed_dynamic_conditionals_normalize() {
    // The mixture over K is normalized against the composition sums by
    // construction, so the conditional prior must sum to one no matter where
    // the prior tail was cut.
    for n in [6u32, 9] {
        let spec = dynamic_bnb(n);
        for k in 1..=n {
            let total: f64 = compositions(n, k)
                .into_iter()
                .map(|comp| {
                    conditional_sizes_prior(&LabelledSizes::new(comp).unwrap(), &spec)
                        .unwrap()
                        .value
                })
                .sum();
            assert!((total - 1.0).abs() < 1e-10, "n={n} k={k} sums to {total}");
        }
    }
}

#[test]
fn marginals_match_enumeration() {
    for n in [4u32, 7, 12] {
        for spec in all_specs(n) {
            for k in 1..=n {
                let dist = oracle_conditional_distribution(&spec, k);
                let expected = oracle_marginal(&dist, n, k);
                let got = marginal_size_pmf(&spec, k).unwrap().value;
                assert_eq!(got.len(), expected.len());
                for (i, (g, e)) in got.iter().zip(&expected).enumerate() {
                    assert!(
                        rel_close(*g, *e, 1e-9),
                        "{:?} n={n} k={k} size={}: {g} vs {e}",
                        spec.class(),
                        i + 1
                    );
                }
            }
        }
    }
}

#[test]
fn functional_moments_match_enumeration() {
    let kernels = [Functional::entropy(), Functional::singleton()];
    for n in [5u32, 9, 12] {
        for spec in all_specs(n) {
            for k in 1..=n {
                let dist = oracle_conditional_distribution(&spec, k);
                for f in &kernels {
                    let stats = functional_stats(&spec, k, f).unwrap().value;
                    let (mean, var) = oracle_functional_mean_var(&dist, |s| f.eval(s));
                    assert!(
                        rel_close(stats.mean, mean, 1e-9),
                        "{:?} {} n={n} k={k} mean: {} vs {mean}",
                        spec.class(),
                        f.name(),
                        stats.mean
                    );
                    assert!(
                        (stats.variance - var).abs() <= 1e-9 * var.abs().max(1.0),
                        "{:?} {} n={n} k={k} var: {} vs {var}",
                        spec.class(),
                        f.name(),
                        stats.variance
                    );
                    assert!(
                        stats.raw_variance >= -1e-9,
                        "raw variance {} fell below tolerance",
                        stats.raw_variance
                    );
                }
            }
        }
    }
}

#[test]
fn pairwise_moments_match_enumeration() {
    let singleton = Functional::singleton();
    let entropy = Functional::entropy();
    for n in [5u32, 8] {
        for spec in all_specs(n) {
            for k in 2..=n {
                let dist = oracle_conditional_distribution(&spec, k);
                for f in [&singleton, &entropy] {
                    let mut expected = 0.0;
                    for (comp, p) in &dist {
                        expected += p * f.eval(comp[0]) * f.eval(comp[1]);
                    }
                    let got = expected_psi_product(&spec, k, f).unwrap().value;
                    assert!(
                        (got - expected).abs() <= 1e-9 * expected.abs().max(1e-9),
                        "{:?} {} n={n} k={k}: {got} vs {expected}",
                        spec.class(),
                        f.name()
                    );
                }
            }
        }
    }
}

#[test]
fn single_moments_match_enumeration() {
    let entropy = Functional::entropy();
    for n in [6u32, 11] {
        for spec in all_specs(n) {
            for k in 1..=n {
                let dist = oracle_conditional_distribution(&spec, k);
                let mut expected = 0.0;
                for (comp, p) in &dist {
                    expected += p * entropy.eval(comp[0]);
                }
                let got = expected_psi(&spec, k, &entropy).unwrap().value;
                assert!(
                    (got - expected).abs() <= 1e-9 * expected.abs().max(1e-9),
                    "{:?} n={n} k={k}: {got} vs {expected}",
                    spec.class()
                );
            }
        }
    }
}

#[test]
fn relative_entropy_matches_enumeration() {
    for n in [6u32, 10] {
        for spec in all_specs(n) {
            for k in 2..=n {
                let dist = oracle_conditional_distribution(&spec, k);
                let (mean, var) = oracle_entropy_mean_var(&dist);
                let stats = relative_entropy_stats(&spec, k).unwrap().value;
                assert!(
                    rel_close(stats.mean, mean, 1e-9),
                    "{:?} n={n} k={k} mean: {} vs {mean}",
                    spec.class(),
                    stats.mean
                );
                assert!(
                    (stats.variance - var).abs() <= 1e-9 * var.abs().max(1.0),
                    "{:?} n={n} k={k} var: {} vs {var}",
                    spec.class(),
                    stats.variance
                );
            }
        }
    }
}
