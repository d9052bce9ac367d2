//! Solver-free Monte Carlo estimators of the Wasserstein discretization
//! error `OT_c(rho, rho_n*)` and of the optimal Voronoi weights, with
//! empirical Bernstein confidence bands.
//!
//! For the optimally weighted approximation on a fixed support, the
//! semi-dual potential is the zero vector, so the transport cost reduces to
//! an integral of the distance-to-support function. The estimator is a plain
//! Monte Carlo mean of nearest-support costs over an independent stream:
//! no OT solver appears anywhere.

use crate::error::{Error, Result};
use crate::measure::{
    diameter_estimate, sq_dist, DiameterMethod, EstimateReport, PointCloud,
    DIAMETER_EXACT_LIMIT,
};
use crate::nearest::SupportIndex;
use crate::synth::PointStream;
use rayon::prelude::*;

/// Fixed work-chunk size for the parallel Monte Carlo scan. Chunk boundaries
/// depend only on this constant, so reductions are bit-identical for any
/// rayon thread count.
pub(crate) const MC_CHUNK: usize = 1024;
const MC_BATCH: usize = 16 * MC_CHUNK;

/// Cap on retained per-sample minima.
pub const MINIMA_RESERVOIR: usize = 1_000_000;

#[derive(Debug, Clone)]
pub struct DiscretizationOptions {
    pub delta: f64,
    /// Caller-supplied cost diameter `C_rho`; when absent the sample
    /// diameter of support and MC points stands in (with a caveat flag).
    pub c_rho: Option<f64>,
    /// Keep per-sample minima (first [`MINIMA_RESERVOIR`]) for diagnostics.
    pub retain_minima: bool,
}

impl DiscretizationOptions {
    pub fn new(delta: f64) -> Self {
        DiscretizationOptions {
            delta,
            c_rho: None,
            retain_minima: false,
        }
    }
}

/// Result of one discretization-error estimate.
#[derive(Debug, Clone)]
pub struct DiscretizationEstimate {
    /// Monte Carlo mean of `min_j c(X_k, x_j)`.
    pub value: f64,
    /// Biased sample variance of the per-sample minima.
    pub sample_variance: f64,
    /// Support size n.
    pub support_n: usize,
    /// Monte Carlo sample count N.
    pub mc_n: usize,
    /// Diameter constant used in the Bernstein term.
    pub c_rho: f64,
    pub band: EstimateReport,
    /// First retained minima when requested.
    pub minima: Option<Vec<f64>>,
}

/// Optimal Voronoi weight estimates with per-index bands.
#[derive(Debug, Clone)]
pub struct OptimalWeights {
    /// counts / N; the counts partition N exactly.
    pub weights: Vec<f64>,
    pub counts: Vec<u64>,
    pub half_widths: Vec<f64>,
    pub delta: f64,
    pub mc_n: usize,
    /// True when delta was Bonferroni-split across the n intervals.
    pub joint: bool,
}

/// Empirical Bernstein half-width:
/// sqrt(2 sigma^2 log(2/delta) / N) + 7 C log(2/delta) / (3 (N - 1)).
pub fn bernstein_half_width(sigma2: f64, c_rho: f64, mc_n: usize, delta: f64) -> f64 {
    let l = (2.0 / delta).ln();
    (2.0 * sigma2 * l / mc_n as f64).sqrt() + 7.0 * c_rho * l / (3.0 * (mc_n as f64 - 1.0))
}

/// Per-weight band: the Bernoulli variance w (1 - w) plugs into the same
/// bound with range constant 1.
pub fn weight_half_width(w: f64, mc_n: usize, delta: f64) -> f64 {
    bernstein_half_width(w * (1.0 - w), 1.0, mc_n, delta)
}

fn validate(mc_n: usize, delta: f64) -> Result<()> {
    if mc_n < 2 {
        return Err(Error::invalid(
            "N must be >= 2 (the Bernstein term divides by N - 1)",
        ));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("delta must lie in (0, 1)"));
    }
    Ok(())
}

/// Draw `total` points from the stream and fold fixed-size chunks through
/// `map` in parallel, returning the per-chunk results in chunk order. The
/// stream itself is consumed sequentially, so the sample sequence is
/// independent of the thread count.
pub(crate) fn scan_stream<T, F>(
    stream: &mut dyn PointStream,
    total: usize,
    map: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&[f64], usize) -> T + Sync,
{
    let d = stream.dim();
    let mut out = Vec::with_capacity(total.div_ceil(MC_CHUNK));
    let mut buf = vec![0.0; MC_BATCH * d];
    let mut remaining = total;
    while remaining > 0 {
        let batch = remaining.min(MC_BATCH);
        for i in 0..batch {
            stream.next_point(&mut buf[i * d..(i + 1) * d])?;
        }
        let slice = &buf[..batch * d];
        let mut partials: Vec<T> = slice
            .par_chunks(MC_CHUNK * d)
            .map(|chunk| map(chunk, chunk.len() / d))
            .collect();
        out.append(&mut partials);
        remaining -= batch;
    }
    Ok(out)
}

struct ScanPartial {
    sum: f64,
    sum_sq: f64,
    counts: Vec<u64>,
    minima: Vec<f64>,
    /// MC coordinates, kept only when the union diameter scan is exact.
    points: Vec<f64>,
    bbox_lo: Vec<f64>,
    bbox_hi: Vec<f64>,
}

fn mc_scan(
    index: &SupportIndex,
    stream: &mut dyn PointStream,
    mc_n: usize,
    want_counts: bool,
    want_minima: bool,
) -> Result<ScanPartial> {
    let d = index.d();
    if stream.dim() != d {
        return Err(Error::DimensionMismatch(stream.dim(), d));
    }
    let n = index.n();
    let want_points = n + mc_n <= DIAMETER_EXACT_LIMIT;
    let partials = scan_stream(stream, mc_n, |chunk, points| {
        let mut p = ScanPartial {
            sum: 0.0,
            sum_sq: 0.0,
            counts: if want_counts { vec![0; n] } else { Vec::new() },
            minima: if want_minima {
                Vec::with_capacity(points)
            } else {
                Vec::new()
            },
            points: if want_points {
                chunk.to_vec()
            } else {
                Vec::new()
            },
            bbox_lo: vec![f64::INFINITY; d],
            bbox_hi: vec![f64::NEG_INFINITY; d],
        };
        for i in 0..points {
            let x = &chunk[i * d..(i + 1) * d];
            let (sq, arg) = index.query_sq(x);
            let c = index.spec().from_sq_dist(sq);
            p.sum += c;
            p.sum_sq += c * c;
            if want_counts {
                p.counts[arg] += 1;
            }
            if want_minima {
                p.minima.push(c);
            }
            for (k, &v) in x.iter().enumerate() {
                if v < p.bbox_lo[k] {
                    p.bbox_lo[k] = v;
                }
                if v > p.bbox_hi[k] {
                    p.bbox_hi[k] = v;
                }
            }
        }
        p
    })?;

    // Sequential fold in chunk order keeps the result thread-count-invariant.
    let mut acc = ScanPartial {
        sum: 0.0,
        sum_sq: 0.0,
        counts: if want_counts { vec![0; n] } else { Vec::new() },
        minima: Vec::new(),
        points: Vec::new(),
        bbox_lo: vec![f64::INFINITY; d],
        bbox_hi: vec![f64::NEG_INFINITY; d],
    };
    for p in partials {
        acc.sum += p.sum;
        acc.sum_sq += p.sum_sq;
        if want_counts {
            for (a, b) in acc.counts.iter_mut().zip(&p.counts) {
                *a += b;
            }
        }
        if want_minima && acc.minima.len() < MINIMA_RESERVOIR {
            let room = MINIMA_RESERVOIR - acc.minima.len();
            acc.minima
                .extend_from_slice(&p.minima[..p.minima.len().min(room)]);
        }
        if want_points {
            acc.points.extend_from_slice(&p.points);
        }
        for k in 0..d {
            if p.bbox_lo[k] < acc.bbox_lo[k] {
                acc.bbox_lo[k] = p.bbox_lo[k];
            }
            if p.bbox_hi[k] > acc.bbox_hi[k] {
                acc.bbox_hi[k] = p.bbox_hi[k];
            }
        }
    }
    Ok(acc)
}

/// Diameter constant over support and MC sample. Small unions get the exact
/// pairwise scan; larger ones combine the support diameter with the union
/// bounding-box corner cost (an upper proxy).
fn union_c_rho(index: &SupportIndex, scan: &ScanPartial) -> (f64, DiameterMethod) {
    let support = index.support();
    let spec = index.spec();
    if !scan.points.is_empty() {
        let mc_cloud = PointCloud::new(scan.points.clone(), support.d())
            .expect("retained MC points form a valid cloud");
        let union = support.concat(&mc_cloud).expect("dimensions match");
        let exact = diameter_estimate(&union, spec);
        return (exact.value, exact.method);
    }
    let base = diameter_estimate(support, spec);
    let (slo, shi) = support.bounding_box();
    let mut lo = scan.bbox_lo.clone();
    let mut hi = scan.bbox_hi.clone();
    for k in 0..lo.len() {
        if slo[k] < lo[k] {
            lo[k] = slo[k];
        }
        if shi[k] > hi[k] {
            hi[k] = shi[k];
        }
    }
    let bbox_cost = spec.from_sq_dist(sq_dist(&lo, &hi));
    (base.value.max(bbox_cost), DiameterMethod::SubsampleBbox)
}

/// Estimate `OT_c(rho, rho_n*)` from `mc_n` stream draws, with a
/// probability `1 - delta` empirical Bernstein band.
///
/// The stream must be independent of the support draw; pair the seeds
/// through [`crate::seed::SeedPair`] to get this by construction.
pub fn estimate_discretization_error(
    index: &SupportIndex,
    stream: &mut dyn PointStream,
    mc_n: usize,
    opts: &DiscretizationOptions,
) -> Result<DiscretizationEstimate> {
    validate(mc_n, opts.delta)?;
    let scan = mc_scan(index, stream, mc_n, false, opts.retain_minima)?;
    let value = scan.sum / mc_n as f64;
    let sample_variance = (scan.sum_sq / mc_n as f64 - value * value).max(0.0);

    let (c_rho, method) = match opts.c_rho {
        Some(c) => (c, DiameterMethod::UserSupplied),
        None => union_c_rho(index, &scan),
    };
    let half = bernstein_half_width(sample_variance, c_rho, mc_n, opts.delta);
    let band = EstimateReport::new(value, half, opts.delta)?
        .with_meta("n", index.n())
        .with_meta("N", mc_n)
        .with_meta("cost", index.spec().label())
        .with_meta("c_rho", c_rho)
        .with_meta("c_rho_method", method.label())
        .with_meta(
            "c_rho_caveat",
            if method == DiameterMethod::UserSupplied {
                "none"
            } else {
                // Sample-based diameter, not the population supremum; the
                // band is correspondingly approximate.
                "sample_diameter"
            },
        );

    Ok(DiscretizationEstimate {
        value,
        sample_variance,
        support_n: index.n(),
        mc_n,
        c_rho,
        band,
        minima: if opts.retain_minima {
            Some(scan.minima)
        } else {
            None
        },
    })
}

/// Estimate the optimal Voronoi weights `w_i` by nearest-cell hit counts,
/// with per-index Bernstein bands. With `joint`, delta is Bonferroni-split
/// across the n intervals so they hold simultaneously.
pub fn estimate_optimal_weights(
    index: &SupportIndex,
    stream: &mut dyn PointStream,
    mc_n: usize,
    delta: f64,
    joint: bool,
) -> Result<OptimalWeights> {
    validate(mc_n, delta)?;
    let scan = mc_scan(index, stream, mc_n, true, false)?;
    let each_delta = if joint {
        delta / index.n() as f64
    } else {
        delta
    };
    let weights: Vec<f64> = scan
        .counts
        .iter()
        .map(|&c| c as f64 / mc_n as f64)
        .collect();
    let half_widths: Vec<f64> = weights
        .iter()
        .map(|&w| weight_half_width(w, mc_n, each_delta))
        .collect();
    debug_assert_eq!(scan.counts.iter().sum::<u64>(), mc_n as u64);
    Ok(OptimalWeights {
        weights,
        counts: scan.counts,
        half_widths,
        delta,
        mc_n,
        joint,
    })
}

/// Stream adapter over a fixed cloud, in row order (for user-supplied MC
/// samples and tests).
pub struct CloudRows<'a> {
    cloud: &'a PointCloud,
    next: usize,
}

impl<'a> CloudRows<'a> {
    pub fn new(cloud: &'a PointCloud) -> Self {
        CloudRows { cloud, next: 0 }
    }
}

impl PointStream for CloudRows<'_> {
    fn dim(&self) -> usize {
        self.cloud.d()
    }

    fn next_point(&mut self, out: &mut [f64]) -> Result<()> {
        if self.next >= self.cloud.n() {
            return Err(Error::StreamExhausted { drawn: self.next });
        }
        out.copy_from_slice(self.cloud.point(self.next));
        self.next += 1;
        Ok(())
    }
}
