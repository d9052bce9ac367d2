//! Exact nearest-support queries: the c-transform of the zero potential,
//! `min_j c(x, x_j)`, and its minimizer.
//!
//! Two backends behind one exactness contract: whatever the acceleration,
//! queries return exactly the minimum over the full support, with ties broken
//! by lowest index. The kd-tree prunes in squared Euclidean distance, which
//! serves both members of the cost family (p = 1 shares the Euclidean
//! nearest neighbor with squared cost).

use crate::error::{Error, Result};
use crate::measure::{CostSpec, PointCloud};

/// Requested query acceleration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Acceleration {
    BruteForce,
    KdTree,
}

const LEAF_SIZE: usize = 16;
/// Above this ambient dimension kd-tree pruning degenerates; fall back to
/// the brute-force scan.
const KD_MAX_DIM: usize = 30;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        dim: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Immutable nearest-neighbor index over a support cloud.
#[derive(Debug, Clone)]
pub struct SupportIndex {
    support: PointCloud,
    spec: CostSpec,
    requested: Acceleration,
    /// Effective backend after the dimensionality fallback.
    effective: Acceleration,
    nodes: Vec<Node>,
    perm: Vec<usize>,
}

/// Build an index answering exact nearest queries under the given cost.
pub fn build_index(
    support: &PointCloud,
    spec: CostSpec,
    accel: Acceleration,
) -> Result<SupportIndex> {
    let effective = match accel {
        Acceleration::KdTree if support.d() <= KD_MAX_DIM => Acceleration::KdTree,
        _ => Acceleration::BruteForce,
    };
    let mut index = SupportIndex {
        support: support.clone(),
        spec,
        requested: accel,
        effective,
        nodes: Vec::new(),
        perm: Vec::new(),
    };
    if effective == Acceleration::KdTree {
        index.perm = (0..support.n()).collect();
        let mut nodes = Vec::new();
        build_node(support, &mut index.perm, 0, support.n(), &mut nodes);
        index.nodes = nodes;
    }
    Ok(index)
}

fn build_node(
    cloud: &PointCloud,
    perm: &mut [usize],
    start: usize,
    end: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let id = nodes.len();
    if end - start <= LEAF_SIZE {
        nodes.push(Node::Leaf { start, end });
        return id;
    }
    // Median split on the widest dimension of this node's bounding box.
    let d = cloud.d();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for &p in &perm[start..end] {
        let row = cloud.point(p);
        for (k, &v) in row.iter().enumerate() {
            if v < lo[k] {
                lo[k] = v;
            }
            if v > hi[k] {
                hi[k] = v;
            }
        }
    }
    let mut dim = 0;
    let mut widest = -1.0;
    for k in 0..d {
        let w = hi[k] - lo[k];
        if w > widest {
            widest = w;
            dim = k;
        }
    }
    if widest <= 0.0 {
        // All points identical; no split can help.
        nodes.push(Node::Leaf { start, end });
        return id;
    }
    let mid = (end - start) / 2;
    perm[start..end].select_nth_unstable_by(mid, |&a, &b| {
        cloud.point(a)[dim]
            .partial_cmp(&cloud.point(b)[dim])
            .unwrap()
    });
    let value = cloud.point(perm[start + mid])[dim];
    nodes.push(Node::Leaf { start, end }); // placeholder, patched below
    let left = build_node(cloud, perm, start, start + mid, nodes);
    let right = build_node(cloud, perm, start + mid, end, nodes);
    nodes[id] = Node::Split {
        dim,
        value,
        left,
        right,
    };
    id
}

/// Squared distance with early abort once the partial sum exceeds `bound`.
/// An aborted result is strictly greater than `bound`, so it can never win
/// or tie against the current best.
#[inline]
fn sq_dist_bounded(x: &[f64], y: &[f64], bound: f64) -> f64 {
    let mut acc = 0.0;
    let mut i = 0;
    let n = x.len();
    while i + 4 <= n {
        let d0 = x[i] - y[i];
        let d1 = x[i + 1] - y[i + 1];
        let d2 = x[i + 2] - y[i + 2];
        let d3 = x[i + 3] - y[i + 3];
        acc += d0 * d0 + d1 * d1 + d2 * d2 + d3 * d3;
        if acc > bound {
            return acc;
        }
        i += 4;
    }
    while i < n {
        let diff = x[i] - y[i];
        acc += diff * diff;
        i += 1;
    }
    acc
}

impl SupportIndex {
    pub fn support(&self) -> &PointCloud {
        &self.support
    }

    pub fn n(&self) -> usize {
        self.support.n()
    }

    pub fn d(&self) -> usize {
        self.support.d()
    }

    pub fn spec(&self) -> CostSpec {
        self.spec
    }

    pub fn requested(&self) -> Acceleration {
        self.requested
    }

    pub fn effective(&self) -> Acceleration {
        self.effective
    }

    /// Exact (min squared distance, argmin) with lowest-index tie breaking.
    /// Optionally restricted to the first `limit` support points, which lets
    /// nested-support estimators share one index.
    pub fn query_sq_prefix(&self, x: &[f64], limit: usize) -> (f64, usize) {
        debug_assert!(limit >= 1 && limit <= self.n());
        match self.effective {
            Acceleration::BruteForce => self.brute_query(x, limit),
            Acceleration::KdTree => {
                if limit == self.n() {
                    let mut best = (f64::INFINITY, usize::MAX);
                    self.kd_query(x, 0, &mut best);
                    best
                } else {
                    self.brute_query(x, limit)
                }
            }
        }
    }

    pub fn query_sq(&self, x: &[f64]) -> (f64, usize) {
        self.query_sq_prefix(x, self.n())
    }

    fn brute_query(&self, x: &[f64], limit: usize) -> (f64, usize) {
        let mut best = f64::INFINITY;
        let mut arg = 0usize;
        for i in 0..limit {
            let sq = sq_dist_bounded(x, self.support.point(i), best);
            if sq < best {
                best = sq;
                arg = i;
            }
        }
        (best, arg)
    }

    fn kd_query(&self, x: &[f64], node: usize, best: &mut (f64, usize)) {
        match &self.nodes[node] {
            Node::Leaf { start, end } => {
                for &idx in &self.perm[*start..*end] {
                    let sq = sq_dist_bounded(x, self.support.point(idx), best.0);
                    if sq < best.0 || (sq == best.0 && idx < best.1) {
                        *best = (sq, idx);
                    }
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = x[*dim] - *value;
                let (near, far) = if diff < 0.0 {
                    (*left, *right)
                } else {
                    (*right, *left)
                };
                self.kd_query(x, near, best);
                // Equal plane distance can still hide a tied lower index.
                if diff * diff <= best.0 {
                    self.kd_query(x, far, best);
                }
            }
        }
    }

    /// The c-transform of the zero potential at x: `min_j c(x, x_j)` and its
    /// minimizer, ties broken by lowest index.
    pub fn zero_ctransform(&self, x: &[f64]) -> Result<(f64, usize)> {
        if x.len() != self.d() {
            return Err(Error::DimensionMismatch(x.len(), self.d()));
        }
        let (sq, arg) = self.query_sq(x);
        Ok((self.spec.from_sq_dist(sq), arg))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::SeedSpec;

    fn cloud(data: Vec<f64>, d: usize) -> PointCloud {
        PointCloud::new(data, d).unwrap()
    }

    #[test]
    fn single_point_maps_everything_to_zero() {
        let idx = build_index(
            &cloud(vec![1.0, 2.0], 2),
            CostSpec::EuclideanP1,
            Acceleration::KdTree,
        )
        .unwrap();
        for q in [[0.0, 0.0], [5.0, -3.0], [1.0, 2.0]] {
            let (_, arg) = idx.zero_ctransform(&q).unwrap();
            assert_eq!(arg, 0);
        }
    }

    #[test]
    fn zero_ctransform_examples() {
        // Support {0, 1} in 1D, p1 cost, query 0.4.
        let idx = build_index(
            &cloud(vec![0.0, 1.0], 1),
            CostSpec::EuclideanP1,
            Acceleration::BruteForce,
        )
        .unwrap();
        let (v, a) = idx.zero_ctransform(&[0.4]).unwrap();
        assert!((v - 0.4).abs() < 1e-15);
        assert_eq!(a, 0);

        // Query equal to a support point.
        let (v, a) = idx.zero_ctransform(&[1.0]).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(a, 1);

        // Tie at squared cost 2 from {(0,0), (2,0)} to (1,1): lowest index.
        let idx = build_index(
            &cloud(vec![0.0, 0.0, 2.0, 0.0], 2),
            CostSpec::EuclideanP2Squared,
            Acceleration::KdTree,
        )
        .unwrap();
        let (v, a) = idx.zero_ctransform(&[1.0, 1.0]).unwrap();
        assert_eq!(v, 2.0);
        assert_eq!(a, 0);
    }

    #[test]
    fn duplicated_points_tie_to_lowest_index() {
        let idx = build_index(
            &cloud(vec![3.0, 3.0, 3.0, 1.0], 1),
            CostSpec::EuclideanP1,
            Acceleration::KdTree,
        )
        .unwrap();
        let (_, arg) = idx.zero_ctransform(&[2.9]).unwrap();
        assert_eq!(arg, 0);
    }

    #[test]
    fn dimension_mismatch_errors() {
        let idx = build_index(
            &cloud(vec![0.0, 0.0], 2),
            CostSpec::EuclideanP1,
            Acceleration::BruteForce,
        )
        .unwrap();
        assert!(idx.zero_ctransform(&[0.0]).is_err());
    }

    #[test]
    fn kd_matches_brute_force_exactly() {
        // The accelerated path must agree with the brute-force oracle on
        // value and index, including duplicates.
        let mut rng = SeedSpec::new(17, 0).rng();
        let (n, d) = (1000, 20);
        let mut data: Vec<f64> = (0..n * d).map(|_| rng.uniform()).collect();
        // Inject duplicates to exercise ties.
        for i in 0..40 {
            let (a, b) = (i * 7 % n, i * 13 % n);
            let src: Vec<f64> = data[b * d..(b + 1) * d].to_vec();
            data[a * d..(a + 1) * d].copy_from_slice(&src);
        }
        let support = cloud(data, d);
        let kd = build_index(&support, CostSpec::EuclideanP2Squared, Acceleration::KdTree).unwrap();
        assert_eq!(kd.effective(), Acceleration::KdTree);
        let bf = build_index(
            &support,
            CostSpec::EuclideanP2Squared,
            Acceleration::BruteForce,
        )
        .unwrap();
        for _ in 0..100 {
            let q: Vec<f64> = (0..d).map(|_| rng.uniform()).collect();
            assert_eq!(kd.query_sq(&q), bf.query_sq(&q));
        }
        // Queries at support points must also agree (distance zero ties).
        for i in (0..n).step_by(31) {
            let q = support.point(i).to_vec();
            assert_eq!(kd.query_sq(&q), bf.query_sq(&q));
        }
    }

    #[test]
    fn high_dimension_falls_back_to_brute() {
        let mut rng = SeedSpec::new(1, 0).rng();
        let d = 31;
        let data: Vec<f64> = (0..10 * d).map(|_| rng.uniform()).collect();
        let idx = build_index(&cloud(data, d), CostSpec::EuclideanP1, Acceleration::KdTree).unwrap();
        assert_eq!(idx.effective(), Acceleration::BruteForce);
        assert_eq!(idx.requested(), Acceleration::KdTree);
    }

    #[test]
    fn zero_iff_in_support_and_monotone_under_growth() {
        let mut rng = SeedSpec::new(23, 0).rng();
        let d = 3;
        let data: Vec<f64> = (0..50 * d).map(|_| rng.normal()).collect();
        let support = cloud(data, d);
        let idx = build_index(&support, CostSpec::EuclideanP1, Acceleration::KdTree).unwrap();

        for i in 0..support.n() {
            let (v, _) = idx.zero_ctransform(support.point(i)).unwrap();
            assert_eq!(v, 0.0);
        }
        let q: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        let (v, _) = idx.zero_ctransform(&q).unwrap();
        assert!(v > 0.0);

        // Growing the support never increases the transform.
        for limit in [10, 25, 50] {
            for _ in 0..20 {
                let q: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
                let (full, _) = idx.query_sq_prefix(&q, 50);
                let (part, _) = idx.query_sq_prefix(&q, limit);
                assert!(full <= part);
            }
        }
    }
}
