//! k-means with random-sample initialisation, the elbow scan, PCA and
//! permutation-matched accuracy.

use chronos_core::protocol::{Label, TrajectoryRecord};
use chronos_core::rng::{self, tag};
use chronos_nn::Tensor;
use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;

use crate::{Error, Result};

/// Records as a `(count, (steps+1)·qubits)` matrix of 0/1 values, in the
/// repo-wide step-major order.
pub fn flatten_records(dataset: &[TrajectoryRecord]) -> Result<Tensor> {
    let Some(first) = dataset.first() else {
        return Ok(Tensor::zeros(&[0, 0]));
    };
    let (q, rows) = (first.n_qubits(), first.n_rows());
    let width = q * rows;
    let mut data = Vec::with_capacity(dataset.len() * width);
    for (i, r) in dataset.iter().enumerate() {
        if r.n_qubits() != q || r.n_rows() != rows {
            return Err(Error::InvalidData(format!(
                "record {i} is {}x{}, expected {rows}x{q}",
                r.n_rows(),
                r.n_qubits()
            )));
        }
        data.extend(r.to_flat().into_iter().map(f64::from));
    }
    Ok(Tensor::new(&[dataset.len(), width], data)?)
}

/// Inverse of [`flatten_records`]; every value must be exactly 0 or 1.
pub fn unflatten_records(samples: &Tensor, n_qubits: usize, label: Label) -> Result<Vec<TrajectoryRecord>> {
    (0..samples.batch())
        .map(|i| {
            let bits = samples
                .row(i)
                .iter()
                .map(|&v| match v {
                    0.0 => Ok(0u8),
                    1.0 => Ok(1u8),
                    _ => Err(Error::InvalidData(format!("value {v} is not a bit"))),
                })
                .collect::<Result<Vec<u8>>>()?;
            Ok(TrajectoryRecord::from_flat(n_qubits, &bits, label)?)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iters: usize,
    /// Stop once the summed squared centroid shift falls below this.
    pub tolerance: f64,
    /// Independent initialisations; the lowest final SSE wins.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 2,
            max_iters: 300,
            tolerance: 1e-6,
            restarts: 10,
            seed: 0,
        }
    }
}

impl KMeansConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.max_iters == 0 || self.restarts == 0 || !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument(
                "k-means needs k, max_iters, restarts >= 1 and tolerance > 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterResult {
    /// `(k, d)`
    pub centroids: Tensor,
    pub labels: Vec<usize>,
    pub sse: f64,
    pub iterations_used: usize,
    /// SSE after each assignment step.
    pub sse_history: Vec<f64>,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid (lowest index on ties) and its squared distance.
fn nearest(point: &[f64], centroids: &Tensor) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centroids.batch() {
        let d = squared_distance(point, centroids.row(c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn assign(samples: &Tensor, centroids: &Tensor) -> (Vec<usize>, f64) {
    let pairs: Vec<(usize, f64)> = (0..samples.batch())
        .into_par_iter()
        .map(|i| nearest(samples.row(i), centroids))
        .collect();
    let sse = pairs.iter().map(|p| p.1).sum();
    (pairs.into_iter().map(|p| p.0).collect(), sse)
}

/// One k-means run from a random initialisation.
pub fn kmeans_run<R: Rng + ?Sized>(samples: &Tensor, cfg: &KMeansConfig, rng: &mut R) -> Result<ClusterResult> {
    cfg.validate()?;
    let (n, d) = (samples.batch(), samples.row_len());
    if n < cfg.k {
        return Err(Error::InvalidArgument(format!(
            "{n} samples cannot form {} clusters",
            cfg.k
        )));
    }
    let init: Vec<usize> = sample(rng, n, cfg.k).into_vec();
    let mut centroids = samples.gather_rows(&init);
    let mut history = Vec::new();
    let mut iterations = 0;
    for _ in 0..cfg.max_iters {
        iterations += 1;
        let (labels, sse) = assign(samples, &centroids);
        history.push(sse);
        let mut sums = vec![0.0; cfg.k * d];
        let mut counts = vec![0usize; cfg.k];
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            sums[l * d..(l + 1) * d]
                .iter_mut()
                .zip(samples.row(i))
                .for_each(|(s, x)| *s += x);
        }
        let mut next = Vec::with_capacity(cfg.k * d);
        for c in 0..cfg.k {
            if counts[c] == 0 {
                next.extend_from_slice(samples.row(rng.random_range(0..n)));
            } else {
                next.extend(sums[c * d..(c + 1) * d].iter().map(|s| s / counts[c] as f64));
            }
        }
        let next = Tensor::new(&[cfg.k, d], next)?;
        let shift = squared_distance(next.data(), centroids.data());
        centroids = next;
        if shift < cfg.tolerance {
            break;
        }
    }
    let (labels, sse) = assign(samples, &centroids);
    history.push(sse);
    Ok(ClusterResult {
        centroids,
        labels,
        sse,
        iterations_used: iterations,
        sse_history: history,
    })
}

/// Best of `cfg.restarts` runs, each on its own random stream. Ties in SSE
/// go to the lower restart index.
pub fn kmeans_fit(samples: &Tensor, cfg: &KMeansConfig) -> Result<ClusterResult> {
    cfg.validate()?;
    let runs = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::task_stream(cfg.seed, tag::KMEANS, (cfg.k as u64) << 32 | r as u64, 0);
            kmeans_run(samples, cfg, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = None::<ClusterResult>;
    for run in runs {
        if best.as_ref().is_none_or(|b| run.sse < b.sse) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Best-of-restarts SSE for every `k` in `ks` (ascending).
pub fn elbow_scan(samples: &Tensor, ks: &[usize], cfg: &KMeansConfig) -> Result<Vec<(usize, f64)>> {
    if ks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("k values must be strictly ascending".into()));
    }
    ks.iter()
        .map(|&k| {
            let fit = kmeans_fit(samples, &KMeansConfig { k, ..cfg.clone() })?;
            Ok((k, fit.sse))
        })
        .collect()
}

/// The `k` maximising `SSE(k−1) − 2·SSE(k) + SSE(k+1)` over interior points.
pub fn elbow_k(scan: &[(usize, f64)]) -> Option<usize> {
    scan.windows(3)
        .map(|w| (w[1].0, w[0].1 - 2.0 * w[1].1 + w[2].1))
        .fold(None, |best: Option<(usize, f64)>, (k, v)| match best {
            Some((_, bv)) if bv >= v => best,
            _ => Some((k, v)),
        })
        .map(|(k, _)| k)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PcaResult {
    /// `(dims, d)`, unit rows.
    pub components: Tensor,
    /// Variance captured by each component.
    pub explained_variance: Vec<f64>,
    /// Share of the total variance for each component.
    pub explained_ratio: Vec<f64>,
    pub mean: Vec<f64>,
    /// `(n, dims)`
    pub projection: Tensor,
    /// The data had no variance; the projection is all zeros.
    pub degenerate: bool,
}

/// Principal components from the symmetric eigendecomposition of the sample
/// covariance. Each component is signed so its largest-magnitude loading is
/// positive.
pub fn pca_project(samples: &Tensor, dims: usize) -> Result<PcaResult> {
    let (n, d) = (samples.batch(), samples.row_len());
    if n < 2 {
        return Err(Error::InvalidArgument("PCA needs at least two samples".into()));
    }
    if dims == 0 || dims > d {
        return Err(Error::InvalidArgument(format!(
            "cannot take {dims} components of {d} features"
        )));
    }
    let mut mean = vec![0.0; d];
    for i in 0..n {
        mean.iter_mut().zip(samples.row(i)).for_each(|(m, x)| *m += x);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut centered = samples.clone();
    for row in centered.data_mut().chunks_exact_mut(d) {
        row.iter_mut().zip(&mean).for_each(|(x, m)| *x -= m);
    }
    let mut cov = vec![0.0; d * d];
    chronos_nn::gemm(d, n, d, centered.data(), true, centered.data(), false, &mut cov, false);
    cov.iter_mut().for_each(|c| *c /= (n - 1) as f64);
    let total: f64 = (0..d).map(|i| cov[i * d + i]).sum();
    let degenerate = !(total > 1e-300);

    let eigen = DMatrix::from_row_slice(d, d, &cov).symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]));
    let mut components = Vec::with_capacity(dims * d);
    let mut variances = Vec::with_capacity(dims);
    for &c in &order[..dims] {
        let mut v: Vec<f64> = eigen.eigenvectors.column(c).iter().copied().collect();
        let lead = v.iter().fold(0.0f64, |a, x| if x.abs() > a.abs() { *x } else { a });
        if lead < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        if degenerate {
            v.fill(0.0);
        }
        variances.push(if degenerate { 0.0 } else { eigen.eigenvalues[c].max(0.0) });
        components.extend(v);
    }
    let components = Tensor::new(&[dims, d], components)?;
    let mut projection = vec![0.0; n * dims];
    chronos_nn::gemm(
        n,
        d,
        dims,
        centered.data(),
        false,
        components.data(),
        true,
        &mut projection,
        false,
    );
    let explained_ratio = variances
        .iter()
        .map(|v| if degenerate { 0.0 } else { v / total })
        .collect();
    Ok(PcaResult {
        components,
        explained_variance: variances,
        explained_ratio,
        mean,
        projection: Tensor::new(&[n, dims], projection)?,
        degenerate,
    })
}

/// Agreement between two-cluster labels and binary truth, maximised over the
/// two ways of naming the clusters.
pub fn permutation_accuracy(labels: &[usize], truth: &[usize]) -> Result<f64> {
    if labels.len() != truth.len() {
        return Err(Error::InvalidArgument(format!(
            "{} labels for {} truth values",
            labels.len(),
            truth.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::InvalidArgument("no labels to score".into()));
    }
    if labels.iter().chain(truth).any(|&l| l > 1) {
        return Err(Error::InvalidArgument("labels must be 0 or 1".into()));
    }
    let agree = labels.iter().zip(truth).filter(|(a, b)| a == b).count();
    let acc = agree as f64 / labels.len() as f64;
    Ok(acc.max(1.0 - acc))
}

/// Ground-truth class of each record: forward → 1, backward → 0.
pub fn direction_truth(dataset: &[TrajectoryRecord]) -> Result<Vec<usize>> {
    dataset
        .iter()
        .map(|r| match r.label() {
            Label::Forward => Ok(1),
            Label::Backward => Ok(0),
            Label::Unlabeled => Err(Error::InvalidData("record has no direction label".into())),
        })
        .collect()
}
