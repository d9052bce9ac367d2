//! Synthetic generators with known intrinsic dimension, plus
//! known-ground-truth transport pairs for benchmark oracles.
//!
//! All generators are pure functions of (config, seed). Low-rank Gaussian
//! frames are drawn once per config from a seeded orthonormalization and
//! frozen, so the intrinsic dimension is a property of the config, not of
//! the run.

use crate::error::{Error, Result};
use crate::linalg::{check_psd, jacobi_eigen, orthonormal_frame, psd_sqrt, SquareMat};
use crate::measure::PointCloud;
use crate::seed::{Rng, SeedSpec};

/// A stream of points, one draw at a time. Finite streams error when drained.
pub trait PointStream {
    fn dim(&self) -> usize;
    fn next_point(&mut self, out: &mut [f64]) -> Result<()>;

    fn fill_cloud(&mut self, n: usize) -> Result<PointCloud> {
        let d = self.dim();
        let mut data = vec![0.0; n * d];
        for i in 0..n {
            self.next_point(&mut data[i * d..(i + 1) * d])?;
        }
        PointCloud::new(data, d)
    }
}

/// Anything that can spawn independent seeded streams of i.i.d. points.
pub trait SampleSource: Sync {
    fn dim(&self) -> usize;
    fn stream(&self, seed: SeedSpec) -> Box<dyn PointStream + '_>;

    fn sample(&self, n: usize, seed: SeedSpec) -> Result<PointCloud> {
        self.stream(seed).fill_cloud(n)
    }
}

/// Generator families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManifoldKind {
    HypercubeMixture,
    LowrankGaussianMixture,
    LowrankGaussian,
    IntroMixture,
    UniformCube,
}

/// One mixture component: an intrinsic dimension, a mixture proportion, and
/// an offset in ambient space.
#[derive(Debug, Clone)]
pub struct ComponentSpec {
    pub intrinsic_dim: usize,
    pub proportion: f64,
    pub offset: Vec<f64>,
}

impl ComponentSpec {
    pub fn new(intrinsic_dim: usize, proportion: f64) -> Self {
        ComponentSpec {
            intrinsic_dim,
            proportion,
            offset: Vec::new(),
        }
    }

    pub fn with_offset(mut self, offset: Vec<f64>) -> Self {
        self.offset = offset;
        self
    }
}

#[derive(Debug, Clone)]
pub struct ManifoldConfig {
    kind: ManifoldKind,
    ambient_d: usize,
    components: Vec<ComponentSpec>,
    cumulative: Vec<f64>,
    /// Frozen d x k orthonormal frames, one per Gaussian component.
    frames: Vec<Option<Vec<f64>>>,
    frame_seed: u64,
    label: String,
}

/// Default seed for frozen component frames.
pub const DEFAULT_FRAME_SEED: u64 = 0x0f7a_4e5d;

impl ManifoldConfig {
    fn build(
        kind: ManifoldKind,
        ambient_d: usize,
        components: Vec<ComponentSpec>,
        frame_seed: u64,
        label: String,
    ) -> Result<Self> {
        if ambient_d == 0 {
            return Err(Error::invalid("ambient dimension must be >= 1"));
        }
        if components.is_empty() {
            return Err(Error::Empty("mixture components"));
        }
        let mut sum = 0.0;
        for c in &components {
            if c.intrinsic_dim == 0 || c.intrinsic_dim > ambient_d {
                return Err(Error::invalid(format!(
                    "component intrinsic dim {} outside 1..={}",
                    c.intrinsic_dim, ambient_d
                )));
            }
            if c.proportion < 0.0 || !c.proportion.is_finite() {
                return Err(Error::invalid("mixture proportions must be >= 0"));
            }
            if !c.offset.is_empty() && c.offset.len() != ambient_d {
                return Err(Error::DimensionMismatch(c.offset.len(), ambient_d));
            }
            sum += c.proportion;
        }
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidWeights { sum });
        }
        let mut cumulative = Vec::with_capacity(components.len());
        let mut acc = 0.0;
        for c in &components {
            acc += c.proportion / sum;
            cumulative.push(acc);
        }

        let gaussian = matches!(
            kind,
            ManifoldKind::LowrankGaussian | ManifoldKind::LowrankGaussianMixture
        );
        let mut frames = Vec::with_capacity(components.len());
        for (ci, c) in components.iter().enumerate() {
            if gaussian {
                let mut rng = SeedSpec::new(frame_seed, 0).derived(ci as u64).rng();
                frames.push(Some(orthonormal_frame(
                    ambient_d,
                    c.intrinsic_dim,
                    &mut rng,
                )?));
            } else {
                frames.push(None);
            }
        }

        Ok(ManifoldConfig {
            kind,
            ambient_d,
            components,
            cumulative,
            frames,
            frame_seed,
            label,
        })
    }

    /// U[0,1]^d in ambient dimension d.
    pub fn uniform_cube(d: usize) -> Result<Self> {
        Self::build(
            ManifoldKind::UniformCube,
            d,
            vec![ComponentSpec::new(d, 1.0)],
            DEFAULT_FRAME_SEED,
            format!("uniform_cube({d})"),
        )
    }

    /// Mixture of axis-aligned hypercubes U[0,1]^k x {0}^(d-k), shifted per
    /// component offset.
    pub fn hypercube_mixture(ambient_d: usize, components: Vec<ComponentSpec>) -> Result<Self> {
        let label = format!(
            "hypercube_mixture({ambient_d}; {})",
            describe_components(&components)
        );
        Self::build(
            ManifoldKind::HypercubeMixture,
            ambient_d,
            components,
            DEFAULT_FRAME_SEED,
            label,
        )
    }

    /// Single zero-mean Gaussian N(0, P P^T) with a frozen d x k frame P.
    pub fn lowrank_gaussian(ambient_d: usize, rank: usize) -> Result<Self> {
        Self::build(
            ManifoldKind::LowrankGaussian,
            ambient_d,
            vec![ComponentSpec::new(rank, 1.0)],
            DEFAULT_FRAME_SEED,
            format!("lowrank_gaussian({ambient_d},{rank})"),
        )
    }

    /// Mixture of low-rank Gaussians.
    pub fn lowrank_gaussian_mixture(
        ambient_d: usize,
        components: Vec<ComponentSpec>,
    ) -> Result<Self> {
        let label = format!(
            "lowrank_gaussian_mixture({ambient_d}; {})",
            describe_components(&components)
        );
        Self::build(
            ManifoldKind::LowrankGaussianMixture,
            ambient_d,
            components,
            DEFAULT_FRAME_SEED,
            label,
        )
    }

    /// The two-scale example measure in R^10:
    /// 1/2 U([0,1]^2 x {0}^8) + 1/2 U([1,2]^8 x {0}^2).
    pub fn intro_mixture() -> Result<Self> {
        let mut shifted = vec![0.0; 10];
        for v in shifted.iter_mut().take(8) {
            *v = 1.0;
        }
        Self::build(
            ManifoldKind::IntroMixture,
            10,
            vec![
                ComponentSpec::new(2, 0.5),
                ComponentSpec::new(8, 0.5).with_offset(shifted),
            ],
            DEFAULT_FRAME_SEED,
            "intro_mixture".to_string(),
        )
    }

    /// Shift every component by a constant offset vector.
    pub fn with_offset(mut self, offset: Vec<f64>) -> Result<Self> {
        if offset.len() != self.ambient_d {
            return Err(Error::DimensionMismatch(offset.len(), self.ambient_d));
        }
        for c in self.components.iter_mut() {
            if c.offset.is_empty() {
                c.offset = offset.clone();
            } else {
                for (o, &delta) in c.offset.iter_mut().zip(&offset) {
                    *o += delta;
                }
            }
        }
        self.label = format!("{}+offset", self.label);
        Ok(self)
    }

    /// Use a different frozen-frame seed (changes the Gaussian subspaces).
    pub fn with_frame_seed(self, frame_seed: u64) -> Result<Self> {
        Self::build(
            self.kind,
            self.ambient_d,
            self.components,
            frame_seed,
            self.label,
        )
    }

    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    pub fn frame_seed(&self) -> u64 {
        self.frame_seed
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Mean vector and raw second moment E[x x^T], exact for every kind.
    pub fn moments(&self) -> (Vec<f64>, SquareMat) {
        let d = self.ambient_d;
        let mut mean = vec![0.0; d];
        let mut second = SquareMat::zeros(d);
        let total: f64 = self.components.iter().map(|c| c.proportion).sum();
        for (ci, c) in self.components.iter().enumerate() {
            let p = c.proportion / total;
            let mut cm = vec![0.0; d];
            if !c.offset.is_empty() {
                cm.copy_from_slice(&c.offset);
            }
            let mut ccov = SquareMat::zeros(d);
            match self.kind {
                ManifoldKind::UniformCube
                | ManifoldKind::HypercubeMixture
                | ManifoldKind::IntroMixture => {
                    for j in 0..c.intrinsic_dim {
                        cm[j] += 0.5;
                        ccov.set(j, j, 1.0 / 12.0);
                    }
                }
                ManifoldKind::LowrankGaussian | ManifoldKind::LowrankGaussianMixture => {
                    let frame = self.frames[ci].as_ref().unwrap();
                    let k = c.intrinsic_dim;
                    for i in 0..d {
                        for j in 0..d {
                            let mut s = 0.0;
                            for t in 0..k {
                                s += frame[i * k + t] * frame[j * k + t];
                            }
                            ccov.set(i, j, ccov.get(i, j) + s);
                        }
                    }
                }
            }
            for i in 0..d {
                mean[i] += p * cm[i];
                for j in 0..d {
                    second.set(
                        i,
                        j,
                        second.get(i, j) + p * (ccov.get(i, j) + cm[i] * cm[j]),
                    );
                }
            }
        }
        (mean, second)
    }
}

fn describe_components(components: &[ComponentSpec]) -> String {
    components
        .iter()
        .map(|c| format!("{}:{}", c.intrinsic_dim, c.proportion))
        .collect::<Vec<_>>()
        .join(",")
}

struct ManifoldStream<'a> {
    cfg: &'a ManifoldConfig,
    rng: Rng,
}

impl PointStream for ManifoldStream<'_> {
    fn dim(&self) -> usize {
        self.cfg.ambient_d
    }

    fn next_point(&mut self, out: &mut [f64]) -> Result<()> {
        let ci = if self.cfg.components.len() == 1 {
            0
        } else {
            self.rng.categorical(&self.cfg.cumulative)
        };
        let comp = &self.cfg.components[ci];
        let k = comp.intrinsic_dim;
        match self.cfg.kind {
            ManifoldKind::UniformCube
            | ManifoldKind::HypercubeMixture
            | ManifoldKind::IntroMixture => {
                for (j, o) in out.iter_mut().enumerate() {
                    *o = if j < k { self.rng.uniform() } else { 0.0 };
                }
            }
            ManifoldKind::LowrankGaussian | ManifoldKind::LowrankGaussianMixture => {
                let frame = self.cfg.frames[ci].as_ref().unwrap();
                let z: Vec<f64> = (0..k).map(|_| self.rng.normal()).collect();
                for (i, o) in out.iter_mut().enumerate() {
                    let mut s = 0.0;
                    for (t, &zt) in z.iter().enumerate() {
                        s += frame[i * k + t] * zt;
                    }
                    *o = s;
                }
            }
        }
        if !comp.offset.is_empty() {
            for (o, &off) in out.iter_mut().zip(&comp.offset) {
                *o += off;
            }
        }
        Ok(())
    }
}

impl SampleSource for ManifoldConfig {
    fn dim(&self) -> usize {
        self.ambient_d
    }

    fn stream(&self, seed: SeedSpec) -> Box<dyn PointStream + '_> {
        Box::new(ManifoldStream {
            cfg: self,
            rng: seed.rng(),
        })
    }
}

/// Sample n i.i.d. points from a manifold config.
pub fn sample_manifold(cfg: &ManifoldConfig, n: usize, seed: SeedSpec) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::Empty("sample size"));
    }
    cfg.sample(n, seed)
}

/// A finite cloud served as a without-replacement stream in seeded
/// permutation order. Used to split user-supplied data into independent
/// support and Monte Carlo parts.
pub struct CloudSource {
    cloud: PointCloud,
}

impl CloudSource {
    pub fn new(cloud: PointCloud) -> Self {
        CloudSource { cloud }
    }

    pub fn cloud(&self) -> &PointCloud {
        &self.cloud
    }
}

struct CloudStream<'a> {
    cloud: &'a PointCloud,
    order: Vec<usize>,
    next: usize,
}

impl PointStream for CloudStream<'_> {
    fn dim(&self) -> usize {
        self.cloud.d()
    }

    fn next_point(&mut self, out: &mut [f64]) -> Result<()> {
        if self.next >= self.order.len() {
            return Err(Error::StreamExhausted { drawn: self.next });
        }
        out.copy_from_slice(self.cloud.point(self.order[self.next]));
        self.next += 1;
        Ok(())
    }
}

impl SampleSource for CloudSource {
    fn dim(&self) -> usize {
        self.cloud.d()
    }

    fn stream(&self, seed: SeedSpec) -> Box<dyn PointStream + '_> {
        let mut rng = seed.rng();
        let order = rng.permutation(self.cloud.n());
        Box::new(CloudStream {
            cloud: &self.cloud,
            order,
            next: 0,
        })
    }
}

/// Disjoint split of a finite cloud: a seeded shuffle, then the first
/// `n_first` rows vs the rest. The two parts never share a row, so streams
/// over them are independent given the shuffle.
pub fn split_cloud(
    cloud: &PointCloud,
    n_first: usize,
    seed: SeedSpec,
) -> Result<(PointCloud, PointCloud)> {
    if n_first == 0 || n_first >= cloud.n() {
        return Err(Error::invalid(format!(
            "split size {} outside 1..{}",
            n_first,
            cloud.n()
        )));
    }
    let mut rng = seed.rng();
    let order = rng.permutation(cloud.n());
    let first = cloud.select(&order[..n_first])?;
    let rest = cloud.select(&order[n_first..])?;
    Ok((first, rest))
}

/// A quadratic Brenier pair: source measure, map T(x) = A x + b with A
/// symmetric PSD (so T is the gradient of the convex potential
/// 1/2 x^T A x + b^T x), and the exact squared 2-Wasserstein distance
/// W2^2(source, T# source) = E ||x - T(x)||^2.
#[derive(Debug, Clone)]
pub struct BrenierPair {
    source: ManifoldConfig,
    map_a: SquareMat,
    map_b: Vec<f64>,
    true_w2sq: f64,
}

impl BrenierPair {
    pub fn new(source: ManifoldConfig, map_a: SquareMat, map_b: Vec<f64>) -> Result<Self> {
        let d = source.dim();
        if map_a.dim != d {
            return Err(Error::DimensionMismatch(map_a.dim, d));
        }
        if map_b.len() != d {
            return Err(Error::DimensionMismatch(map_b.len(), d));
        }
        check_psd(&map_a)?;
        let true_w2sq = analytic_w2sq(&source, &map_a, &map_b);
        Ok(BrenierPair {
            source,
            map_a,
            map_b,
            true_w2sq,
        })
    }

    pub fn source(&self) -> &ManifoldConfig {
        &self.source
    }

    pub fn true_w2sq(&self) -> f64 {
        self.true_w2sq
    }

    pub fn apply_map(&self, x: &[f64], out: &mut [f64]) {
        self.map_a.matvec(x, out);
        for (o, &b) in out.iter_mut().zip(&self.map_b) {
            *o += b;
        }
    }
}

/// E ||x - (A x + b)||^2 = tr(M^T M E[x x^T]) - 2 b^T M mean + ||b||^2
/// with M = I - A, exact from the source moments.
fn analytic_w2sq(source: &ManifoldConfig, a: &SquareMat, b: &[f64]) -> f64 {
    let d = source.dim();
    let (mean, second) = source.moments();
    let mut m = SquareMat::zeros(d);
    for i in 0..d {
        for j in 0..d {
            let idm = if i == j { 1.0 } else { 0.0 };
            m.set(i, j, idm - a.get(i, j));
        }
    }
    let mtm = m.transpose().matmul(&m);
    let mut tr = 0.0;
    for i in 0..d {
        for j in 0..d {
            tr += mtm.get(i, j) * second.get(j, i);
        }
    }
    let mut mmean = vec![0.0; d];
    m.matvec(&mean, &mut mmean);
    let cross: f64 = b.iter().zip(&mmean).map(|(&bi, &mi)| bi * mi).sum();
    let bsq: f64 = b.iter().map(|&v| v * v).sum();
    tr - 2.0 * cross + bsq
}

/// Draw (X, T(X'), true_w2sq): a source sample and the pushforward of an
/// independent source draw under the Brenier map.
pub fn sample_brenier_pair(
    pair: &BrenierPair,
    n: usize,
    seed: SeedSpec,
) -> Result<(PointCloud, PointCloud, f64)> {
    let x = pair.source.sample(n, seed.derived(1))?;
    let x_prime = pair.source.sample(n, seed.derived(2))?;
    let d = pair.source.dim();
    let mut data = vec![0.0; n * d];
    for i in 0..n {
        pair.apply_map(x_prime.point(i), &mut data[i * d..(i + 1) * d]);
    }
    let y = PointCloud::new(data, d)?;
    Ok((x, y, pair.true_w2sq))
}

/// Monte Carlo check of E ||x - T(x)||^2. Returns (estimate, standard error).
pub fn monte_carlo_w2sq(pair: &BrenierPair, n: usize, seed: SeedSpec) -> Result<(f64, f64)> {
    let d = pair.source.dim();
    let mut stream = pair.source.stream(seed);
    let mut x = vec![0.0; d];
    let mut tx = vec![0.0; d];
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        stream.next_point(&mut x)?;
        pair.apply_map(&x, &mut tx);
        let sq: f64 = x
            .iter()
            .zip(&tx)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum();
        s1 += sq;
        s2 += sq * sq;
    }
    let mean = s1 / n as f64;
    let var = (s2 / n as f64 - mean * mean).max(0.0);
    Ok((mean, (var / n as f64).sqrt()))
}

/// Closed-form squared 2-Wasserstein distance between Gaussians:
/// ||m1 - m2||^2 + tr(S1 + S2 - 2 (S1^1/2 S2 S1^1/2)^1/2).
pub fn bures_w2sq(m1: &[f64], s1: &SquareMat, m2: &[f64], s2: &SquareMat) -> Result<f64> {
    let d = m1.len();
    if m2.len() != d {
        return Err(Error::DimensionMismatch(m2.len(), d));
    }
    if s1.dim != d || s2.dim != d {
        return Err(Error::DimensionMismatch(s1.dim, s2.dim));
    }
    check_psd(s1)?;
    check_psd(s2)?;
    let root1 = psd_sqrt(s1)?;
    let inner = root1.matmul(s2).matmul(&root1);
    // Symmetrize before the second root; the product drifts slightly.
    let mut sym = inner.clone();
    for i in 0..d {
        for j in 0..d {
            let m = 0.5 * (inner.get(i, j) + inner.get(j, i));
            sym.set(i, j, m);
            sym.set(j, i, m);
        }
    }
    let cross = psd_sqrt(&sym)?;
    let mean_sq: f64 = m1
        .iter()
        .zip(m2)
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum();
    let bures = (s1.trace() + s2.trace() - 2.0 * cross.trace()).max(0.0);
    Ok(mean_sq + bures)
}

/// Sample covariance of a cloud (biased, divides by n).
pub fn sample_covariance(cloud: &PointCloud) -> SquareMat {
    let d = cloud.d();
    let n = cloud.n() as f64;
    let mut mean = vec![0.0; d];
    for p in cloud.iter_points() {
        for (k, &v) in p.iter().enumerate() {
            mean[k] += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n;
    }
    let mut cov = SquareMat::zeros(d);
    for p in cloud.iter_points() {
        for i in 0..d {
            let ci = p[i] - mean[i];
            for j in i..d {
                let add = ci * (p[j] - mean[j]);
                cov.set(i, j, cov.get(i, j) + add);
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov.get(i, j) / n;
            cov.set(i, j, v);
            cov.set(j, i, v);
        }
    }
    cov
}

/// Eigenvalues of the sample covariance, descending.
pub fn covariance_spectrum(cloud: &PointCloud) -> Result<Vec<f64>> {
    let cov = sample_covariance(cloud);
    let (mut vals, _) = jacobi_eigen(&cov)?;
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(vals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn seed(k: u64) -> SeedSpec {
        SeedSpec::new(k, 0)
    }

    #[test]
    fn uniform_cube_in_range() {
        let cfg = ManifoldConfig::uniform_cube(2).unwrap();
        let c = sample_manifold(&cfg, 3, seed(1)).unwrap();
        assert_eq!((c.n(), c.d()), (3, 2));
        assert!(c.data().iter().all(|&v| (0.0..1.0).contains(&v)));
    }

    #[test]
    fn generator_determinism() {
        let cfg = ManifoldConfig::lowrank_gaussian_mixture(
            8,
            vec![ComponentSpec::new(2, 0.7), ComponentSpec::new(5, 0.3)],
        )
        .unwrap();
        let a = sample_manifold(&cfg, 100, seed(5)).unwrap();
        let b = sample_manifold(&cfg, 100, seed(5)).unwrap();
        assert_eq!(a, b);
        let c = sample_manifold(&cfg, 100, SeedSpec::new(5, 1)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(ManifoldConfig::lowrank_gaussian(3, 4).is_err());
        assert!(ManifoldConfig::hypercube_mixture(
            5,
            vec![ComponentSpec::new(2, 0.5), ComponentSpec::new(3, 0.6)]
        )
        .is_err());
    }

    #[test]
    fn hypercube_mixture_component_fractions() {
        // 80% 2D / 20% 10D in R^20: the share of points with more than two
        // nonzero coordinates tracks the 10D proportion.
        let cfg = ManifoldConfig::hypercube_mixture(
            20,
            vec![ComponentSpec::new(2, 0.8), ComponentSpec::new(10, 0.2)],
        )
        .unwrap();
        let c = sample_manifold(&cfg, 10_000, seed(7)).unwrap();
        let high = c
            .iter_points()
            .filter(|p| p.iter().filter(|&&v| v != 0.0).count() > 2)
            .count();
        let frac = high as f64 / c.n() as f64;
        assert!((frac - 0.20).abs() <= 0.02, "fraction {frac}");
    }

    #[test]
    fn intro_mixture_split() {
        let cfg = ManifoldConfig::intro_mixture().unwrap();
        let c = sample_manifold(&cfg, 10_000, seed(9)).unwrap();
        // Component one lives on the first two coordinates: coordinates
        // 3..10 (indices 2..9) all zero.
        let low = c
            .iter_points()
            .filter(|p| p[2..].iter().all(|&v| v == 0.0))
            .count();
        let frac = low as f64 / c.n() as f64;
        assert!((frac - 0.5).abs() < 0.02, "fraction {frac}");
        // The shifted component fills [1,2]^8 x {0}^2.
        for p in c.iter_points() {
            if p[2..].iter().any(|&v| v != 0.0) {
                assert!(p[..8].iter().all(|&v| (1.0..2.0).contains(&v)));
                assert!(p[8] == 0.0 && p[9] == 0.0);
            }
        }
    }

    #[test]
    fn lowrank_gaussian_exact_rank() {
        let (d, k) = (12, 4);
        let cfg = ManifoldConfig::lowrank_gaussian(d, k).unwrap();
        let c = sample_manifold(&cfg, 600, seed(3)).unwrap();
        let spectrum = covariance_spectrum(&c).unwrap();
        let largest = spectrum[0];
        for &v in &spectrum[k..] {
            assert!(
                v.abs() < 1e-10 * largest,
                "rank leak: {v} vs largest {largest}"
            );
        }
    }

    #[test]
    fn brenier_trivial_cases() {
        let src = ManifoldConfig::lowrank_gaussian(5, 5).unwrap();
        let id = SquareMat::identity(5);

        let p = BrenierPair::new(src.clone(), id.clone(), vec![0.0; 5]).unwrap();
        assert_relative_eq!(p.true_w2sq(), 0.0, epsilon = 1e-12);

        let p = BrenierPair::new(src.clone(), id.clone(), vec![1.0; 5]).unwrap();
        assert_relative_eq!(p.true_w2sq(), 5.0, epsilon = 1e-10);

        // A = 2I, N(0, I_d): E ||x - 2x||^2 = E ||x||^2 = d.
        let mut two_i = SquareMat::identity(5);
        for i in 0..5 {
            two_i.set(i, i, 2.0);
        }
        let p = BrenierPair::new(src, two_i, vec![0.0; 5]).unwrap();
        assert_relative_eq!(p.true_w2sq(), 5.0, epsilon = 1e-9);
    }

    #[test]
    fn brenier_rejects_non_psd() {
        let src = ManifoldConfig::uniform_cube(2).unwrap();
        let bad = SquareMat::from_rows(vec![1.0, 0.0, 0.0, -1.0], 2).unwrap();
        assert!(BrenierPair::new(src, bad, vec![0.0; 2]).is_err());
    }

    #[test]
    fn brenier_truth_matches_monte_carlo() {
        // Uniform-cube source with a nontrivial PSD map; the analytic value
        // must sit within 3 standard errors of a large MC run.
        let src = ManifoldConfig::uniform_cube(3).unwrap();
        let a = SquareMat::from_rows(
            vec![1.5, 0.2, 0.0, 0.2, 0.8, 0.1, 0.0, 0.1, 1.2],
            3,
        )
        .unwrap();
        let pair = BrenierPair::new(src, a, vec![0.3, -0.7, 0.0]).unwrap();
        let (mc, se) = monte_carlo_w2sq(&pair, 1_000_000, seed(11)).unwrap();
        assert!(
            (mc - pair.true_w2sq()).abs() <= 3.0 * se,
            "analytic {} vs mc {} (se {})",
            pair.true_w2sq(),
            mc,
            se
        );
    }

    #[test]
    fn sample_brenier_pair_shapes() {
        let src = ManifoldConfig::lowrank_gaussian(4, 2).unwrap();
        let pair = BrenierPair::new(src, SquareMat::identity(4), vec![1.0; 4]).unwrap();
        let (x, y, truth) = sample_brenier_pair(&pair, 50, seed(2)).unwrap();
        assert_eq!((x.n(), y.n()), (50, 50));
        assert_relative_eq!(truth, 4.0, epsilon = 1e-10);
        // Pure translation: Y is X' + 1, so Y's bounding box shifts by ~1.
        let (_, hi_y) = y.bounding_box();
        let (_, hi_x) = x.bounding_box();
        assert!(hi_y.iter().zip(&hi_x).all(|(a, b)| a > b));
    }

    #[test]
    fn bures_examples() {
        let i2 = SquareMat::identity(2);
        assert_relative_eq!(
            bures_w2sq(&[0.0, 0.0], &i2, &[0.0, 0.0], &i2).unwrap(),
            0.0,
            epsilon = 1e-10
        );
        assert_relative_eq!(
            bures_w2sq(&[0.0, 0.0], &i2, &[3.0, 4.0], &i2).unwrap(),
            25.0,
            epsilon = 1e-10
        );
        // Commuting covariances sigma^2 I vs tau^2 I: d (sigma - tau)^2.
        let d = 4;
        let (sigma, tau) = (1.5, 0.5);
        let mut s1 = SquareMat::identity(d);
        let mut s2 = SquareMat::identity(d);
        for i in 0..d {
            s1.set(i, i, sigma * sigma);
            s2.set(i, i, tau * tau);
        }
        let zero = vec![0.0; d];
        assert_relative_eq!(
            bures_w2sq(&zero, &s1, &zero, &s2).unwrap(),
            d as f64 * (sigma - tau) * (sigma - tau),
            epsilon = 1e-9
        );
    }

    #[test]
    fn bures_symmetric_and_positive() {
        let mut rng = seed(13).rng();
        let d = 3;
        for _ in 0..10 {
            let b1 = SquareMat::from_rows((0..d * d).map(|_| rng.normal()).collect(), d).unwrap();
            let b2 = SquareMat::from_rows((0..d * d).map(|_| rng.normal()).collect(), d).unwrap();
            let s1 = b1.transpose().matmul(&b1);
            let s2 = b2.transpose().matmul(&b2);
            let m1: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
            let m2: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
            let ab = bures_w2sq(&m1, &s1, &m2, &s2).unwrap();
            let ba = bures_w2sq(&m2, &s2, &m1, &s1).unwrap();
            assert_relative_eq!(ab, ba, epsilon = 1e-6);
            assert!(ab >= 0.0);
        }
    }

    #[test]
    fn bures_rejects_non_psd() {
        let bad = SquareMat::from_rows(vec![0.0, 1.0, 1.0, 0.0], 2).unwrap();
        let i2 = SquareMat::identity(2);
        assert!(bures_w2sq(&[0.0, 0.0], &bad, &[0.0, 0.0], &i2).is_err());
    }

    #[test]
    fn cloud_source_without_replacement() {
        let cloud = PointCloud::new((0..20).map(|v| v as f64).collect(), 1).unwrap();
        let src = CloudSource::new(cloud);
        let mut stream = src.stream(seed(1));
        let drawn = stream.fill_cloud(20).unwrap();
        let mut vals: Vec<f64> = drawn.data().to_vec();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(vals, (0..20).map(|v| v as f64).collect::<Vec<_>>());
        let mut buf = [0.0];
        assert!(stream.next_point(&mut buf).is_err());
    }

    #[test]
    fn split_cloud_disjoint() {
        let cloud = PointCloud::new((0..30).map(|v| v as f64).collect(), 1).unwrap();
        let (a, b) = split_cloud(&cloud, 10, seed(4)).unwrap();
        assert_eq!((a.n(), b.n()), (10, 20));
        let mut all: Vec<f64> = a.data().iter().chain(b.data()).copied().collect();
        all.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_eq!(all, (0..30).map(|v| v as f64).collect::<Vec<_>>());
    }
}
