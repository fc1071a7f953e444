use proptest::prelude::*;
use semdiv_core::scorer::{fit_bias, margin_loss, sigmoid};

fn log_likelihood(scores: &[f64], eq: &[bool], c: f64) -> f64 {
    scores
        .iter()
        .zip(eq)
        .map(|(s, e)| {
            let p = sigmoid(s + c);
            if *e { p.ln() } else { (1.0 - p).ln() }
        })
        .sum()
}

proptest! {
    #[test]
    fn margin_loss_ignores_a_shared_shift(x in -20.0..20.0f64, y in -20.0..20.0f64, shift in -50.0..50.0f64, m in 0.1..10.0f64) {
        prop_assert!((margin_loss(x + shift, y + shift, m) - margin_loss(x, y, m)).abs() < 1e-9);
        prop_assert!(margin_loss(x, y, m) >= 0.0);
        prop_assert_eq!(margin_loss(x, y, m) == 0.0, x - y >= m);
    }

    #[test]
    fn fitted_bias_maximizes_likelihood(pts in prop::collection::vec((-6.0..6.0f64, any::<bool>()), 4..30)) {
        let (scores, eq): (Vec<f64>, Vec<bool>) = pts.into_iter().unzip();
        let Some(c) = fit_bias(&scores, &eq) else {
            prop_assert!(eq.iter().all(|e| *e) || eq.iter().all(|e| !*e));
            return Ok(());
        };
        // the log likelihood is concave in c, so no grid point may beat it
        let best = log_likelihood(&scores, &eq, c);
        for k in -400..=400 {
            let g = k as f64 * 0.05;
            prop_assert!(log_likelihood(&scores, &eq, g) <= best + 1e-9, "c={c} g={g}");
        }
    }
}
