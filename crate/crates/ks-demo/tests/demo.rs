use ks_demo::{green_rows, profile_rows, small_eigen_rows};

#[test]
fn profile_is_symmetric_with_peaks_at_centres() {
    let rows = profile_rows(1.0, 0.0004, 1.0, 1.0, 2.0, 2, 401).unwrap();
    assert_eq!(rows.len(), 3 * 401);
    let u: Vec<f64> = rows.chunks(3).map(|r| r[1]).collect();
    for i in 0..u.len() {
        assert!((u[i] - u[u.len() - 1 - i]).abs() < 1e-9 * u[i].max(1.0));
    }
    let peak = rows.chunks(3).max_by(|a, b| a[1].total_cmp(&b[1])).unwrap();
    assert!((peak[0].abs() - 0.5).abs() < 1e-9);
}

#[test]
fn sweep_changes_sign_of_h2() {
    let rows = small_eigen_rows(0.0004, 1.0, 1.0, 2.0, 2, 0.9, 2.0, 23).unwrap();
    let h2: Vec<f64> = rows.chunks(3).map(|r| r[2]).collect();
    assert!(h2.first().unwrap() > &0.0 && h2.last().unwrap() < &0.0);
}

#[test]
fn green_curve_slope_jumps_by_mu_over_d1_at_source() {
    let (d1, mu) = (1.3, 0.7);
    let rows = green_rows(d1, mu, 2.0, 0.2, 2001).unwrap();
    let (left, right): (Vec<_>, Vec<_>) = rows.chunks(3).partition(|r| r[0] < 0.2);
    let jump = right.first().unwrap()[2] - left.last().unwrap()[2];
    assert!((jump - mu / d1).abs() < 1e-2, "{jump}");
    assert!(green_rows(d1, 1.0, 2.0, 1.0, 10).is_err());
}

#[test]
fn inadmissible_d1_is_reported() {
    let err = profile_rows(8.0 / std::f64::consts::PI.powi(2), 0.0004, 1.0, 1.0, 2.0, 2, 10).unwrap_err();
    assert!(err.contains("resonant"), "{err}");
}
