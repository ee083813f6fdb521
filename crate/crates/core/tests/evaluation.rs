mod common;

use approx::assert_relative_eq;
use common::bayes_net;
use microsynth_core::eval::{conditional_compare, pairwise_pca};
use microsynth_core::table::{load_csv, write_csv, Atom, FilterPredicate};

#[test]
fn pca_shares_sum_to_one_and_score_variance_is_the_eigenvalue() {
    let t = bayes_net(5, 3000);
    let pca = pairwise_pca(&t, 4).unwrap();
    assert_relative_eq!(pca.variance_shares.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    assert!(pca.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    // Correlation-matrix eigenvalues add up to the number of features.
    assert_relative_eq!(
        pca.eigenvalues.iter().sum::<f64>(),
        pca.encoding.features.len() as f64,
        epsilon = 1e-9
    );
    for (i, j) in pca.pairs() {
        let proj = pca.projection(i, j);
        let n = proj.len() as f64;
        for (c, lambda) in [(0, pca.eigenvalues[i]), (1, pca.eigenvalues[j])] {
            let v: Vec<f64> = proj.iter().map(|p| if c == 0 { p.0 } else { p.1 }).collect();
            let mean = v.iter().sum::<f64>() / n;
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            assert_relative_eq!(mean, 0.0, epsilon = 1e-9);
            assert_relative_eq!(var, lambda, max_relative = 1e-9);
        }
    }
}

#[test]
fn csv_files_round_trip_through_disk() {
    let t = bayes_net(8, 500);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.csv");
    write_csv(&t, &path).unwrap();
    let back = load_csv(&path, Some(t.schema())).unwrap();
    assert_eq!(back, t);
    let inferred = load_csv(&path, None).unwrap();
    assert_eq!(inferred.n_rows(), t.n_rows());
    assert_eq!(inferred.column_names().collect::<Vec<_>>(), t.column_names().collect::<Vec<_>>());
}

#[test]
fn identical_subgroups_raise_no_warning() {
    let t = bayes_net(3, 2000);
    let filter = FilterPredicate::all([Atom::eq("region", "west"), Atom::eq("sector", "manuf")]);
    let c = conditional_compare(&t, &t, &filter, "immigrant").unwrap();
    assert_eq!(c.share_ratio, Some(1.0));
    assert!(c.warnings.is_empty());
}
