//! Core data types: point clouds, weighted discrete measures, ground costs,
//! and the report envelope every estimator returns.

use crate::error::{Error, Result};
use crate::seed::SeedSpec;
use std::collections::BTreeMap;

/// Tolerance for the simplex-sum invariant of [`DiscreteMeasure`] weights.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Above this support size the diameter scan switches from the exact O(n^2)
/// pairwise pass to a seeded subsample plus a bounding-box upper proxy.
pub const DIAMETER_EXACT_LIMIT: usize = 4096;

/// An n x d matrix of sample coordinates, row-major, always f64.
///
/// Immutable after construction; all coordinates are finite and n, d >= 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    data: Vec<f64>,
    n: usize,
    d: usize,
}

impl PointCloud {
    pub fn new(data: Vec<f64>, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("ambient dimension must be >= 1"));
        }
        if data.is_empty() {
            return Err(Error::Empty("point cloud"));
        }
        if data.len() % d != 0 {
            return Err(Error::invalid(format!(
                "coordinate buffer length {} is not a multiple of d = {}",
                data.len(),
                d
            )));
        }
        for (idx, &v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { idx, value: v });
            }
        }
        let n = data.len() / d;
        Ok(PointCloud { data, n, d })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn iter_points(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    /// New cloud holding `rows` in the given order (duplicates allowed).
    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Empty("row selection"));
        }
        let mut data = Vec::with_capacity(rows.len() * self.d);
        for &r in rows {
            if r >= self.n {
                return Err(Error::invalid(format!("row {} out of range {}", r, self.n)));
            }
            data.extend_from_slice(self.point(r));
        }
        Ok(PointCloud {
            data,
            n: rows.len(),
            d: self.d,
        })
    }

    /// First `k` rows as a borrowing-free prefix cloud.
    pub fn prefix(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.n {
            return Err(Error::invalid(format!(
                "prefix size {} outside 1..={}",
                k, self.n
            )));
        }
        Ok(PointCloud {
            data: self.data[..k * self.d].to_vec(),
            n: k,
            d: self.d,
        })
    }

    /// Concatenate rows of two clouds of equal dimension.
    pub fn concat(&self, other: &PointCloud) -> Result<Self> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch(self.d, other.d));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(PointCloud {
            data,
            n: self.n + other.n,
            d: self.d,
        })
    }

    /// Coordinate-wise (min, max) over all points.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.d];
        let mut hi = vec![f64::NEG_INFINITY; self.d];
        for p in self.iter_points() {
            for (k, &v) in p.iter().enumerate() {
                if v < lo[k] {
                    lo[k] = v;
                }
                if v > hi[k] {
                    hi[k] = v;
                }
            }
        }
        (lo, hi)
    }
}

/// A point cloud plus a probability weight vector on the simplex.
///
/// Weights are validated to sum to 1 within [`WEIGHT_SUM_TOL`] and then
/// explicitly renormalized, so downstream code may rely on an exact sum.
#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    support: PointCloud,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(support: PointCloud, mut weights: Vec<f64>) -> Result<Self> {
        if weights.len() != support.n() {
            return Err(Error::DimensionMismatch(weights.len(), support.n()));
        }
        let mut sum = 0.0;
        for (idx, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::NonFinite { idx, value: w });
            }
            if w < 0.0 {
                return Err(Error::InvalidWeights { sum: w });
            }
            sum += w;
        }
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidWeights { sum });
        }
        for w in weights.iter_mut() {
            *w /= sum;
        }
        Ok(DiscreteMeasure { support, weights })
    }

    /// Uniform weights 1/n on the given support.
    pub fn uniform(support: PointCloud) -> Self {
        let n = support.n();
        let w = 1.0 / n as f64;
        DiscreteMeasure {
            support,
            weights: vec![w; n],
        }
    }

    pub fn support(&self) -> &PointCloud {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n(&self) -> usize {
        self.support.n()
    }

    /// Drop zero-weight atoms (Sinkhorn requires strictly positive masses).
    /// Returns self unchanged when all weights are positive.
    pub fn drop_zero_atoms(&self) -> Result<DiscreteMeasure> {
        if self.weights.iter().all(|&w| w > 0.0) {
            return Ok(self.clone());
        }
        let rows: Vec<usize> = (0..self.n()).filter(|&i| self.weights[i] > 0.0).collect();
        if rows.is_empty() {
            return Err(Error::Empty("measure after dropping zero atoms"));
        }
        let support = self.support.select(&rows)?;
        let weights: Vec<f64> = rows.iter().map(|&i| self.weights[i]).collect();
        DiscreteMeasure::new(support, weights)
    }
}

/// Convenience for the empirical measure (uniform weights on the sample).
pub fn empirical_measure(cloud: &PointCloud) -> DiscreteMeasure {
    DiscreteMeasure::uniform(cloud.clone())
}

/// Ground cost c(x, y): the Euclidean power family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CostSpec {
    /// c(x, y) = ||x - y||
    EuclideanP1,
    /// c(x, y) = ||x - y||^2
    EuclideanP2Squared,
}

impl CostSpec {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "p1" | "euclidean_p1" => Ok(CostSpec::EuclideanP1),
            "p2" | "p2_squared" | "euclidean_p2_squared" => Ok(CostSpec::EuclideanP2Squared),
            other => Err(Error::invalid(format!(
                "unknown cost '{other}' (expected p1 or p2_squared)"
            ))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            CostSpec::EuclideanP1 => "euclidean_p1",
            CostSpec::EuclideanP2Squared => "euclidean_p2_squared",
        }
    }

    /// Map a squared Euclidean distance to this cost.
    #[inline]
    pub fn from_sq_dist(&self, sq: f64) -> f64 {
        match self {
            CostSpec::EuclideanP1 => sq.sqrt(),
            CostSpec::EuclideanP2Squared => sq,
        }
    }
}

/// Squared Euclidean distance. Shared by every caller (brute force, kd-tree,
/// cost matrices) so equal inputs produce bit-equal outputs everywhere.
#[inline]
pub fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    // 4-way split for auto-vectorization.
    let mut acc = [0.0f64; 4];
    let chunks = x.len() / 4;
    for c in 0..chunks {
        let i = c * 4;
        for k in 0..4 {
            let diff = x[i + k] - y[i + k];
            acc[k] += diff * diff;
        }
    }
    let mut tail = 0.0;
    for i in chunks * 4..x.len() {
        let diff = x[i] - y[i];
        tail += diff * diff;
    }
    acc[0] + acc[1] + acc[2] + acc[3] + tail
}

/// Evaluate the ground cost. Errors on dimension mismatch.
pub fn cost(spec: CostSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(x.len(), y.len()));
    }
    Ok(spec.from_sq_dist(sq_dist(x, y)))
}

/// Which path produced a diameter value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiameterMethod {
    /// Exact max over all pairs (n <= [`DIAMETER_EXACT_LIMIT`]).
    ExactPairwise,
    /// Max over a seeded 4096-point subsample, unioned with the cost between
    /// opposite bounding-box corners (an upper proxy for any pair).
    SubsampleBbox,
    /// Caller-supplied bound.
    UserSupplied,
}

impl DiameterMethod {
    pub fn label(&self) -> &'static str {
        match self {
            DiameterMethod::ExactPairwise => "exact_pairwise",
            DiameterMethod::SubsampleBbox => "subsample_bbox",
            DiameterMethod::UserSupplied => "user_supplied",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DiameterEstimate {
    pub value: f64,
    pub method: DiameterMethod,
}

/// Max pairwise cost over the sample, standing in for the population
/// supremum `C_rho` of the concentration bound. For n beyond the exact
/// limit, uses a seeded subsample and the bounding-box corner cost.
pub fn diameter_estimate(cloud: &PointCloud, spec: CostSpec) -> DiameterEstimate {
    if cloud.n() <= DIAMETER_EXACT_LIMIT {
        let mut max_sq = 0.0f64;
        for i in 0..cloud.n() {
            let xi = cloud.point(i);
            for j in (i + 1)..cloud.n() {
                let s = sq_dist(xi, cloud.point(j));
                if s > max_sq {
                    max_sq = s;
                }
            }
        }
        DiameterEstimate {
            value: spec.from_sq_dist(max_sq),
            method: DiameterMethod::ExactPairwise,
        }
    } else {
        let mut rng = SeedSpec::new(0x0d1a_0e7e, 0).rng();
        let rows = rng.sample_indices(cloud.n(), DIAMETER_EXACT_LIMIT);
        let mut max_sq = 0.0f64;
        for (a, &i) in rows.iter().enumerate() {
            let xi = cloud.point(i);
            for &j in rows.iter().skip(a + 1) {
                let s = sq_dist(xi, cloud.point(j));
                if s > max_sq {
                    max_sq = s;
                }
            }
        }
        let (lo, hi) = cloud.bounding_box();
        let bbox_sq = sq_dist(&lo, &hi);
        DiameterEstimate {
            value: spec.from_sq_dist(max_sq.max(bbox_sq)),
            method: DiameterMethod::SubsampleBbox,
        }
    }
}

/// Point estimate plus confidence half-width plus run provenance.
#[derive(Debug, Clone)]
pub struct EstimateReport {
    pub value: f64,
    /// Confidence half-width, same units as `value`; >= 0.
    pub half_width: f64,
    /// Confidence level complement: the band holds with probability 1 - delta.
    pub delta: f64,
    /// Parameter record (n, N, eta, eps, K, seed, caveat flags...).
    pub meta: BTreeMap<String, String>,
}

impl EstimateReport {
    pub fn new(value: f64, half_width: f64, delta: f64) -> Result<Self> {
        if half_width < 0.0 {
            return Err(Error::invalid("half_width must be >= 0"));
        }
        if !(0.0..1.0).contains(&delta) || delta <= 0.0 {
            return Err(Error::invalid("delta must lie in (0, 1)"));
        }
        Ok(EstimateReport {
            value,
            half_width,
            delta,
            meta: BTreeMap::new(),
        })
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.insert(key.to_string(), value.to_string());
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cost_identity_and_345() {
        assert_eq!(
            cost(CostSpec::EuclideanP1, &[3.0, 4.0], &[3.0, 4.0]).unwrap(),
            0.0
        );
        assert_eq!(
            cost(CostSpec::EuclideanP1, &[0.0, 0.0], &[3.0, 4.0]).unwrap(),
            5.0
        );
        assert_eq!(
            cost(CostSpec::EuclideanP2Squared, &[0.0, 0.0], &[3.0, 4.0]).unwrap(),
            25.0
        );
    }

    #[test]
    fn cost_dimension_mismatch_errors() {
        assert!(cost(CostSpec::EuclideanP1, &[0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn empirical_measure_uniform() {
        let c4 = PointCloud::new(vec![0.0, 1.0, 2.0, 3.0], 1).unwrap();
        let m = empirical_measure(&c4);
        assert_eq!(m.weights(), &[0.25, 0.25, 0.25, 0.25]);

        let c1 = PointCloud::new(vec![7.0], 1).unwrap();
        assert_eq!(empirical_measure(&c1).weights(), &[1.0]);

        let c3 = PointCloud::new(vec![0.0, 1.0, 2.0], 1).unwrap();
        let w = empirical_measure(&c3).weights().to_vec();
        assert!((w.iter().sum::<f64>() - 1.0).abs() <= WEIGHT_SUM_TOL);
        assert!(w.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn measure_rejects_bad_weights() {
        let c = PointCloud::new(vec![0.0, 1.0], 1).unwrap();
        assert!(DiscreteMeasure::new(c.clone(), vec![0.5, 0.6]).is_err());
        assert!(DiscreteMeasure::new(c.clone(), vec![1.2, -0.2]).is_err());
        assert!(DiscreteMeasure::new(c, vec![0.5]).is_err());
    }

    #[test]
    fn cloud_rejects_nonfinite() {
        assert!(PointCloud::new(vec![0.0, f64::NAN], 1).is_err());
        assert!(PointCloud::new(vec![f64::INFINITY], 1).is_err());
        assert!(PointCloud::new(vec![], 1).is_err());
    }

    #[test]
    fn diameter_examples() {
        let single = PointCloud::new(vec![1.0, 2.0], 2).unwrap();
        let d = diameter_estimate(&single, CostSpec::EuclideanP1);
        assert_eq!(d.value, 0.0);
        assert_eq!(d.method, DiameterMethod::ExactPairwise);

        let pair = PointCloud::new(vec![0.0, 1.0], 1).unwrap();
        assert_eq!(diameter_estimate(&pair, CostSpec::EuclideanP1).value, 1.0);

        // Brute force over the 3 pairs puts the max at ||(0,0)-(3,4)||^2 = 25.
        let tri = PointCloud::new(vec![0.0, 0.0, 3.0, 4.0, 1.0, 1.0], 2).unwrap();
        assert_eq!(
            diameter_estimate(&tri, CostSpec::EuclideanP2Squared).value,
            25.0
        );
    }

    #[test]
    fn diameter_subsample_path_upper_bounds_exact() {
        let mut rng = SeedSpec::new(5, 0).rng();
        let n = DIAMETER_EXACT_LIMIT + 100;
        let data: Vec<f64> = (0..n * 2).map(|_| rng.uniform()).collect();
        let cloud = PointCloud::new(data, 2).unwrap();
        let approx = diameter_estimate(&cloud, CostSpec::EuclideanP1);
        assert_eq!(approx.method, DiameterMethod::SubsampleBbox);
        // The bbox corner cost dominates every pairwise distance.
        for i in (0..n).step_by(97) {
            for j in (0..n).step_by(131) {
                let c = cost(CostSpec::EuclideanP1, cloud.point(i), cloud.point(j)).unwrap();
                assert!(c <= approx.value + 1e-12);
            }
        }
    }

    #[test]
    fn report_validates_fields() {
        assert!(EstimateReport::new(1.0, -0.1, 0.05).is_err());
        assert!(EstimateReport::new(1.0, 0.1, 0.0).is_err());
        assert!(EstimateReport::new(1.0, 0.1, 1.0).is_err());
        assert!(EstimateReport::new(1.0, 0.1, 0.05).is_ok());
    }

    proptest! {
        #[test]
        fn cost_symmetric(
            xs in prop::collection::vec(-100.0f64..100.0, 1..8),
            ys in prop::collection::vec(-100.0f64..100.0, 1..8),
        ) {
            let d = xs.len().min(ys.len());
            for spec in [CostSpec::EuclideanP1, CostSpec::EuclideanP2Squared] {
                let a = cost(spec, &xs[..d], &ys[..d]).unwrap();
                let b = cost(spec, &ys[..d], &xs[..d]).unwrap();
                prop_assert_eq!(a, b);
                prop_assert!(a >= 0.0);
            }
        }

        #[test]
        fn weights_on_simplex_after_normalization(
            raw in prop::collection::vec(0.0f64..10.0, 1..32),
        ) {
            let s: f64 = raw.iter().sum();
            prop_assume!(s > 0.0);
            let weights: Vec<f64> = raw.iter().map(|&w| w / s).collect();
            let cloud = PointCloud::new(vec![0.0; weights.len()], 1).unwrap();
            let m = DiscreteMeasure::new(cloud, weights).unwrap();
            let total: f64 = m.weights().iter().sum();
            prop_assert!((total - 1.0).abs() <= WEIGHT_SUM_TOL);
        }
    }
}
