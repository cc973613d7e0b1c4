//! Evaluation metrics: MSE against the truth, network MSE (disagreement),
//! recognition accuracy for support identification, and a quantile
//! coverage diagnostic.

use std::collections::BTreeSet;

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::synth::NodeData;

/// `sum_l ||w_l - truth||^2 / L`.
pub fn mse(estimates: &[Array1<f64>], truth: &Array1<f64>) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::Dimension("mse needs at least one estimate".into()));
    }
    let mut total = 0.0;
    for w in estimates {
        if w.len() != truth.len() {
            return Err(Error::Dimension(format!(
                "estimate has {} entries, truth has {}",
                w.len(),
                truth.len()
            )));
        }
        total += w
            .iter()
            .zip(truth.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
    }
    Ok(total / estimates.len() as f64)
}

/// `sum_l ||w_l - w_bar||^2 / L` about the across-node mean.
pub fn network_mse(estimates: &[Array1<f64>]) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::Dimension("network_mse needs at least one estimate".into()));
    }
    let dim = estimates[0].len();
    let mut mean = Array1::<f64>::zeros(dim);
    for w in estimates {
        if w.len() != dim {
            return Err(Error::Dimension("estimates of unequal length".into()));
        }
        mean += w;
    }
    mean /= estimates.len() as f64;
    let mut total = 0.0;
    for w in estimates {
        total += w
            .iter()
            .zip(mean.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
    }
    Ok(total / estimates.len() as f64)
}

/// Proportion of correctly classified active/inactive slope coefficients
/// over all nodes. A coefficient is declared active when its magnitude
/// exceeds `activity_eps`; the intercept is excluded.
pub fn recognition_accuracy(
    estimates: &[Array1<f64>],
    true_support: &BTreeSet<usize>,
    p: usize,
    activity_eps: f64,
) -> Result<f64> {
    if estimates.is_empty() || p == 0 {
        return Err(Error::Dimension("recognition needs estimates and p >= 1".into()));
    }
    if let Some(&max) = true_support.iter().max() {
        if max >= p {
            return Err(Error::Dimension(format!(
                "support index {max} out of range for p = {p}"
            )));
        }
    }
    if !(activity_eps >= 0.0) {
        return Err(Error::Domain(format!(
            "activity_eps must be nonnegative, got {activity_eps}"
        )));
    }
    let mut correct = 0usize;
    for w in estimates {
        if w.len() < p {
            return Err(Error::Dimension("estimate shorter than p".into()));
        }
        for j in 0..p {
            let declared_active = w[j].abs() > activity_eps;
            if declared_active == true_support.contains(&j) {
                correct += 1;
            }
        }
    }
    Ok(correct as f64 / (estimates.len() * p) as f64)
}

/// `| #{ y_i <= x_i' w } / n - tau |` pooled over all nodes.
pub fn quantile_coverage_gap(data: &[NodeData], w: &Array1<f64>, tau: f64) -> Result<f64> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::Domain(format!("tau must lie in (0,1), got {tau}")));
    }
    let mut covered = 0usize;
    let mut n = 0usize;
    for node in data {
        let fitted = node.design().dot(w);
        for (yi, fi) in node.response().iter().zip(fitted.iter()) {
            if *yi <= *fi {
                covered += 1;
            }
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::Dimension("no samples".into()));
    }
    Ok((covered as f64 / n as f64 - tau).abs())
}

/// All four metrics for one estimate set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub mse: f64,
    pub network_mse: f64,
    pub recognition_accuracy: f64,
    pub quantile_coverage_gap: f64,
}

/// Convenience bundle; the coverage gap is evaluated at the across-node
/// mean estimate.
pub fn report(
    estimates: &[Array1<f64>],
    truth: &Array1<f64>,
    true_support: &BTreeSet<usize>,
    data: &[NodeData],
    tau: f64,
    activity_eps: f64,
) -> Result<MetricReport> {
    let p = truth.len() - 1;
    let dim = estimates
        .first()
        .map(|w| w.len())
        .ok_or_else(|| Error::Dimension("no estimates".into()))?;
    let mut mean = Array1::<f64>::zeros(dim);
    for w in estimates {
        mean += w;
    }
    mean /= estimates.len() as f64;
    Ok(MetricReport {
        mse: mse(estimates, truth)?,
        network_mse: network_mse(estimates)?,
        recognition_accuracy: recognition_accuracy(estimates, true_support, p, activity_eps)?,
        quantile_coverage_gap: quantile_coverage_gap(data, &mean, tau)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn mse_examples() {
        let truth = array![1.0, 2.0];
        assert_eq!(mse(&[truth.clone(), truth.clone()], &truth).unwrap(), 0.0);
        // errors of norm 1 and 3
        let e1 = array![2.0, 2.0];
        let e3 = array![1.0, 5.0];
        assert_eq!(mse(&[e1, e3], &truth).unwrap(), 5.0);
        let single = mse(&[array![3.0, 2.0]], &truth).unwrap();
        assert_eq!(single, 4.0);
        assert!(mse(&[array![1.0]], &truth).is_err());
    }

    #[test]
    fn network_mse_examples() {
        let a = array![1.0];
        assert_eq!(network_mse(&[a.clone(), a.clone()]).unwrap(), 0.0);
        assert_eq!(network_mse(&[array![0.0], array![2.0]]).unwrap(), 1.0);
        // invariant under adding a constant vector
        let shifted = network_mse(&[array![10.0], array![12.0]]).unwrap();
        assert_eq!(shifted, 1.0);
    }

    #[test]
    fn recognition_examples() {
        let support: BTreeSet<usize> = [0, 3, 7].into_iter().collect();
        // exact recovery at every node
        let mut w = Array1::zeros(19);
        for &j in &support {
            w[j] = 1.0;
        }
        let acc = recognition_accuracy(&[w.clone(), w], &support, 18, 0.0).unwrap();
        assert_eq!(acc, 1.0);
        // all-zero estimates: only the 15 inactive positions are correct
        let z = Array1::zeros(19);
        let acc = recognition_accuracy(&[z], &support, 18, 0.0).unwrap();
        assert!((acc - 15.0 / 18.0).abs() < 1e-15);
        // everything nonzero declared active: only the 3 active are correct
        let dense = Array1::from_elem(19, 0.01);
        let acc = recognition_accuracy(&[dense.clone()], &support, 18, 0.0).unwrap();
        assert!((acc - 3.0 / 18.0).abs() < 1e-15);
        // at eps = infinity everything is declared inactive
        let acc = recognition_accuracy(&[dense], &support, 18, f64::INFINITY).unwrap();
        assert!((acc - 15.0 / 18.0).abs() < 1e-15);
    }

    #[test]
    fn coverage_gap_on_synthetic_data() {
        use crate::synth::{gen_design, gen_node_data, sparse_truth, true_augmented_w};
        let truth = sparse_truth(4, 2, 1.0, 0.2, 31).unwrap();
        let mut data = Vec::new();
        for l in 0..3 {
            let x = gen_design(5000, 4, 0.5, 100 + l).unwrap();
            data.push(gen_node_data(&x, &truth, 200 + l).unwrap());
        }
        for tau in [0.5, 0.75] {
            let w = true_augmented_w(&truth, tau).unwrap();
            let gap = quantile_coverage_gap(&data, &w, tau).unwrap();
            assert!(gap <= 0.02, "tau={tau}: gap {gap}");
        }
        // a huge intercept puts every observation below the fit
        let mut w = true_augmented_w(&truth, 0.75).unwrap();
        w[4] = 1e9;
        let gap = quantile_coverage_gap(&data, &w, 0.75).unwrap();
        assert!((gap - 0.25).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn bias_variance_identity(vals in proptest::collection::vec(-5.0f64..5.0, 3 * 4),
                                  truth in proptest::collection::vec(-5.0f64..5.0, 4)) {
            let estimates: Vec<Array1<f64>> =
                vals.chunks(4).map(|c| Array1::from_vec(c.to_vec())).collect();
            let truth = Array1::from_vec(truth);
            let total = mse(&estimates, &truth).unwrap();
            let net = network_mse(&estimates).unwrap();
            let mut mean = Array1::<f64>::zeros(4);
            for w in &estimates { mean += w; }
            mean /= estimates.len() as f64;
            let bias2: f64 = mean.iter().zip(truth.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
            prop_assert!((total - (net + bias2)).abs() < 1e-10,
                "mse {total} != net {net} + bias {bias2}");
        }
    }
}
