//! Synthetic regression data: AR(1)-correlated Gaussian designs, sparse
//! ground-truth coefficients, Gaussian noise, and the quantile-shifted
//! augmented coefficient vector used by the error metrics.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::normal::phi_inv;

/// One agent's observations: design matrix with an appended all-ones
/// intercept column, and the response vector.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeData {
    design: Array2<f64>,
    response: Array1<f64>,
}

impl NodeData {
    /// `design` must already carry the intercept column (all ones, last).
    pub fn new(design: Array2<f64>, response: Array1<f64>) -> Result<Self> {
        let (m, dim) = design.dim();
        if m == 0 || dim == 0 {
            return Err(Error::Dimension("empty design matrix".into()));
        }
        if response.len() != m {
            return Err(Error::Dimension(format!(
                "design has {m} rows but response has {} entries",
                response.len()
            )));
        }
        if design.iter().any(|v| !v.is_finite()) || response.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("nonfinite entries in node data".into()));
        }
        if design.column(dim - 1).iter().any(|&v| v != 1.0) {
            return Err(Error::Dimension(
                "last design column must be the all-ones intercept".into(),
            ));
        }
        Ok(Self { design, response })
    }

    /// Design matrix including the intercept column, `M x (P+1)`.
    pub fn design(&self) -> &Array2<f64> {
        &self.design
    }

    pub fn response(&self) -> &Array1<f64> {
        &self.response
    }

    pub fn num_samples(&self) -> usize {
        self.design.nrows()
    }

    /// Number of columns including the intercept (`P+1`).
    pub fn dim(&self) -> usize {
        self.design.ncols()
    }

    /// Writes the per-node CSV dump: one row `x_1,...,x_P,y` per sample
    /// (the intercept column is implicit).
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        let p = self.dim() - 1;
        for i in 0..self.num_samples() {
            let mut row = String::new();
            for j in 0..p {
                row.push_str(&format!("{}", self.design[(i, j)]));
                row.push(',');
            }
            row.push_str(&format!("{}", self.response[i]));
            writeln!(w, "{row}")?;
        }
        Ok(())
    }

    /// Reads the format written by [`NodeData::write_csv`], appending the
    /// intercept column.
    pub fn read_csv(r: impl BufRead) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let vals: std::result::Result<Vec<f64>, _> =
                line.split(',').map(|t| t.trim().parse::<f64>()).collect();
            let vals = vals.map_err(|_| Error::Parse(format!("bad data row: {line:?}")))?;
            if vals.len() < 2 {
                return Err(Error::Parse("data rows need at least one predictor and y".into()));
            }
            if let Some(first) = rows.first() {
                if vals.len() != first.len() {
                    return Err(Error::Parse("ragged data rows".into()));
                }
            }
            rows.push(vals);
        }
        if rows.is_empty() {
            return Err(Error::Parse("empty data file".into()));
        }
        let m = rows.len();
        let p = rows[0].len() - 1;
        let mut design = Array2::ones((m, p + 1));
        let mut response = Array1::zeros(m);
        for (i, row) in rows.iter().enumerate() {
            for j in 0..p {
                design[(i, j)] = row[j];
            }
            response[i] = row[p];
        }
        Self::new(design, response)
    }
}

/// The data-generating truth: sparse coefficients and the noise scale.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    coefficients: Array1<f64>,
    active_set: BTreeSet<usize>,
    noise_std: f64,
}

impl GroundTruth {
    pub fn new(coefficients: Array1<f64>, noise_std: f64) -> Result<Self> {
        if !(noise_std > 0.0) || !noise_std.is_finite() {
            return Err(Error::Domain(format!(
                "noise_std must be positive, got {noise_std}"
            )));
        }
        let active_set = coefficients
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, _)| i)
            .collect();
        Ok(Self {
            coefficients,
            active_set,
            noise_std,
        })
    }

    pub fn coefficients(&self) -> &Array1<f64> {
        &self.coefficients
    }

    pub fn active_set(&self) -> &BTreeSet<usize> {
        &self.active_set
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    /// The tau-quantile of the noise, `noise_std * Phi^{-1}(tau)`.
    pub fn quantile_offset(&self, tau: f64) -> Result<f64> {
        Ok(self.noise_std * phi_inv(tau)?)
    }

    /// The augmented target `[beta; noise_std * Phi^{-1}(tau)]` the
    /// estimators are compared against.
    pub fn augmented_w(&self, tau: f64) -> Result<Array1<f64>> {
        let offset = self.quantile_offset(tau)?;
        let p = self.coefficients.len();
        let mut w = Array1::zeros(p + 1);
        w.slice_mut(ndarray::s![..p]).assign(&self.coefficients);
        w[p] = offset;
        Ok(w)
    }
}

/// Free-function form of [`GroundTruth::augmented_w`].
pub fn true_augmented_w(truth: &GroundTruth, tau: f64) -> Result<Array1<f64>> {
    truth.augmented_w(tau)
}

/// Rows i.i.d. zero-mean Gaussian with covariance `corr^{|p-q|}`,
/// generated by the AR(1) recursion (exact for this covariance).
/// Deterministic in `seed`.
pub fn gen_design(m: usize, p: usize, corr: f64, seed: u64) -> Result<Array2<f64>> {
    if m == 0 || p == 0 {
        return Err(Error::Dimension("design needs m >= 1 and p >= 1".into()));
    }
    if !(0.0..1.0).contains(&corr) {
        return Err(Error::Domain(format!("corr must lie in [0,1), got {corr}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = (1.0 - corr * corr).sqrt();
    let mut x = Array2::zeros((m, p));
    for i in 0..m {
        let e0: f64 = rng.sample(StandardNormal);
        x[(i, 0)] = e0;
        for j in 1..p {
            let e: f64 = rng.sample(StandardNormal);
            x[(i, j)] = corr * x[(i, j - 1)] + scale * e;
        }
    }
    Ok(x)
}

/// Uniformly random support of size `num_active` with the given value;
/// remaining coefficients zero. Deterministic in `seed`.
pub fn sparse_truth(
    p: usize,
    num_active: usize,
    value: f64,
    noise_std: f64,
    seed: u64,
) -> Result<GroundTruth> {
    if num_active > p {
        return Err(Error::Dimension(format!(
            "num_active {num_active} exceeds p {p}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // partial Fisher-Yates over the index range
    let mut idx: Vec<usize> = (0..p).collect();
    for i in 0..num_active {
        let j = rng.random_range(i..p);
        idx.swap(i, j);
    }
    let mut beta = Array1::zeros(p);
    for &i in &idx[..num_active] {
        beta[i] = value;
    }
    GroundTruth::new(beta, noise_std)
}

/// Appends the intercept column and draws `y = X beta + noise`,
/// noise i.i.d. `N(0, noise_std^2)`. Deterministic in `seed`.
pub fn gen_node_data(design: &Array2<f64>, truth: &GroundTruth, seed: u64) -> Result<NodeData> {
    let (m, p) = design.dim();
    if p != truth.coefficients.len() {
        return Err(Error::Dimension(format!(
            "design has {p} predictors but truth has {}",
            truth.coefficients.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut full = Array2::ones((m, p + 1));
    full.slice_mut(ndarray::s![.., ..p]).assign(design);
    let mut y = design.dot(&truth.coefficients);
    for v in y.iter_mut() {
        let e: f64 = rng.sample(StandardNormal);
        *v += truth.noise_std * e;
    }
    NodeData::new(full, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn design_single_column_is_standard_normal() {
        let x = gen_design(100_000, 1, 0.5, 11).unwrap();
        let m = x.len() as f64;
        let mean = x.sum() / m;
        let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn design_covariance_matches_ar1() {
        let m = 100_000;
        let x = gen_design(m, 3, 0.5, 13).unwrap();
        let cov = |a: usize, b: usize| {
            let (ca, cb) = (x.column(a), x.column(b));
            let (ma, mb) = (ca.sum() / m as f64, cb.sum() / m as f64);
            ca.iter()
                .zip(cb.iter())
                .map(|(u, v)| (u - ma) * (v - mb))
                .sum::<f64>()
                / m as f64
        };
        assert!((cov(0, 2) - 0.25).abs() < 0.01, "cov13 {}", cov(0, 2));
        for j in 0..3 {
            assert!((cov(j, j) - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn design_covariance_frobenius_distance() {
        let m = 100_000;
        let p = 6;
        let x = gen_design(m, p, 0.5, 17).unwrap();
        let means: Vec<f64> = (0..p).map(|j| x.column(j).sum() / m as f64).collect();
        let mut dist2 = 0.0;
        for a in 0..p {
            for b in 0..p {
                let cov = x
                    .column(a)
                    .iter()
                    .zip(x.column(b).iter())
                    .map(|(u, v)| (u - means[a]) * (v - means[b]))
                    .sum::<f64>()
                    / m as f64;
                let want = 0.5f64.powi((a as i32 - b as i32).abs());
                dist2 += (cov - want) * (cov - want);
            }
        }
        assert!(dist2.sqrt() < 0.05, "Frobenius distance {}", dist2.sqrt());
    }

    #[test]
    fn design_is_deterministic() {
        let a = gen_design(50, 4, 0.5, 42).unwrap();
        let b = gen_design(50, 4, 0.5, 42).unwrap();
        assert_eq!(a, b);
        assert!(gen_design(50, 4, 1.0, 42).is_err());
    }

    #[test]
    fn node_data_noiseless_is_exact() {
        let design = ndarray::array![[2.0, 5.0]];
        // noise_std must be positive; use a negligible one and check tightly
        let truth = GroundTruth::new(ndarray::array![1.0, 0.0], 1e-300).unwrap();
        let data = gen_node_data(&design, &truth, 3).unwrap();
        assert!((data.response()[0] - 2.0).abs() < 1e-12);
        assert_eq!(data.design().ncols(), 3);
        assert_eq!(data.design()[(0, 2)], 1.0);

        let zero = GroundTruth::new(ndarray::array![0.0, 0.0], 1e-300).unwrap();
        let data = gen_node_data(&design, &zero, 3).unwrap();
        assert!(data.response()[0].abs() < 1e-12);
    }

    #[test]
    fn node_data_noise_std_matches() {
        let m = 100_000;
        let design = gen_design(m, 1, 0.0, 5).unwrap();
        let truth = GroundTruth::new(ndarray::array![0.0], 0.2).unwrap();
        let data = gen_node_data(&design, &truth, 6).unwrap();
        let mean = data.response().sum() / m as f64;
        let var = data
            .response()
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / m as f64;
        assert!((var.sqrt() - 0.2).abs() < 0.005, "std {}", var.sqrt());
    }

    #[test]
    fn node_data_dimension_mismatch() {
        let design = ndarray::array![[2.0, 5.0]];
        let truth = GroundTruth::new(ndarray::array![1.0], 0.1).unwrap();
        assert!(gen_node_data(&design, &truth, 0).is_err());
    }

    #[test]
    fn sparse_truth_examples() {
        let t = sparse_truth(18, 3, 1.0, 0.2, 9).unwrap();
        assert_eq!(t.active_set().len(), 3);
        assert_eq!(t.coefficients().iter().filter(|&&v| v == 1.0).count(), 3);

        let z = sparse_truth(5, 0, 1.0, 0.2, 9).unwrap();
        assert!(z.coefficients().iter().all(|&v| v == 0.0));
        assert!(z.active_set().is_empty());

        let full = sparse_truth(5, 5, 2.0, 0.2, 9).unwrap();
        assert!(full.coefficients().iter().all(|&v| v == 2.0));

        let a = sparse_truth(18, 3, 1.0, 0.2, 1).unwrap();
        let b = sparse_truth(18, 3, 1.0, 0.2, 1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn quantile_offsets() {
        let t = GroundTruth::new(ndarray::array![0.0], 0.2).unwrap();
        assert_eq!(t.quantile_offset(0.5).unwrap(), 0.0);
        assert!((t.quantile_offset(0.75).unwrap() - 0.134898).abs() < 1e-6);
        assert!((t.quantile_offset(0.975).unwrap() - 0.391993).abs() < 1e-6);
        assert!(t.quantile_offset(0.0).is_err());
        let w = t.augmented_w(0.75).unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(w[0], 0.0);
    }

    #[test]
    fn node_csv_round_trip() {
        let design = gen_design(20, 3, 0.5, 21).unwrap();
        let truth = sparse_truth(3, 1, 1.0, 0.2, 22).unwrap();
        let data = gen_node_data(&design, &truth, 23).unwrap();
        let mut buf = Vec::new();
        data.write_csv(&mut buf).unwrap();
        let back = NodeData::read_csv(std::io::BufReader::new(&buf[..])).unwrap();
        assert_eq!(back, data);
    }

    #[test]
    fn node_data_rejects_bad_intercept() {
        let design = ndarray::array![[1.0, 0.5], [2.0, 1.0]];
        let y = ndarray::array![0.0, 0.0];
        assert!(NodeData::new(design, y).is_err());
    }
}
