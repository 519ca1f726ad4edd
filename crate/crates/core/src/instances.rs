//! Lattice denoising instances and the instance file format.
//!
//! An instance on an `m × m` grid with noise variance `σ²` minimizes
//! `‖y‖²/σ² + (1/σ²)Σ(x_i² − 2y_i x_i) + Σ_{edges}(x_i − x_j)² + μΣz_i`, so
//! `Q = (1/σ²)I + L`, `a = −(2/σ²)y`, `c = μe` and the constant is `‖y‖²/σ²`.
//!
//! Randomness comes from ChaCha20 seeded with the instance seed: stream `j ∈ {0, 1, 2}` draws
//! spike `j` (center, then the nine Gaussian values), stream 3 draws the observation noise.

use std::path::Path;

use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_lower, SymMatrix};
use crate::models::{Instance, InstanceMeta, DEFAULT_BIG_M};

pub const SPIKES: usize = 3;
const NOISE_STREAM: u64 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub m: usize,
    pub sigma2: f64,
    pub mu: f64,
    pub k: usize,
    pub seed: u64,
}

impl GridSpec {
    pub fn new(m: usize, sigma2: f64, mu: f64, k: usize, seed: u64) -> Result<Self> {
        if m < 4 {
            return Err(Error::InvalidArgument(format!("grid side {m} < 4")));
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "σ² = {sigma2} must be positive"
            )));
        }
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "μ = {mu} must be nonnegative"
            )));
        }
        if k > m * m {
            return Err(Error::InvalidArgument(format!(
                "k = {k} exceeds n = {}",
                m * m
            )));
        }
        Ok(GridSpec {
            m,
            sigma2,
            mu,
            k,
            seed,
        })
    }

    /// Penalized variant: `μ` from [`default_mu`], no cardinality limit.
    pub fn penalized(m: usize, sigma2: f64, seed: u64) -> Result<Self> {
        GridSpec::new(m, sigma2, default_mu(sigma2), m * m, seed)
    }

    /// Constrained variant: `μ = 0`, `k = ⌈0.2 n⌉`.
    pub fn constrained(m: usize, sigma2: f64, seed: u64) -> Result<Self> {
        let n = m * m;
        GridSpec::new(m, sigma2, 0.0, n.div_ceil(5), seed)
    }

    pub fn n(&self) -> usize {
        self.m * self.m
    }
}

/// Penalty used for the penalized experiments: 0.25 at `σ² = 0.5`, otherwise 0.12.
pub fn default_mu(sigma2: f64) -> f64 {
    if sigma2 == 0.5 {
        0.25
    } else {
        0.12
    }
}

/// Row-major cell index of 0-based grid coordinates.
pub fn cell(m: usize, row: usize, col: usize) -> usize {
    row * m + col
}

/// `(1/σ²) I + L` for the `m × m` lattice Laplacian `L`.
pub fn grid_quadratic(m: usize, sigma2: f64) -> SymMatrix {
    let n = m * m;
    let mut q = SymMatrix::zeros(n);
    for i in 0..n {
        q.set(i, i, 1.0 / sigma2);
    }
    for r in 0..m {
        for c in 0..m {
            let u = cell(m, r, c);
            let mut link = |v: usize| {
                q.add_to(u, u, 1.0);
                q.add_to(v, v, 1.0);
                q.set(u, v, -1.0);
            };
            if c + 1 < m {
                link(cell(m, r, c + 1));
            }
            if r + 1 < m {
                link(cell(m, r + 1, c));
            }
        }
    }
    q
}

/// Precision matrix of the spike distribution: `4I` minus the adjacency of the 3×3 lattice.
pub fn spike_precision() -> SymMatrix {
    SymMatrix::from_rows(&[
        [4., -1., 0., -1., 0., 0., 0., 0., 0.],
        [-1., 4., -1., 0., -1., 0., 0., 0., 0.],
        [0., -1., 4., 0., 0., -1., 0., 0., 0.],
        [-1., 0., 0., 4., -1., 0., -1., 0., 0.],
        [0., -1., 0., -1., 4., -1., 0., -1., 0.],
        [0., 0., -1., 0., -1., 4., 0., 0., -1.],
        [0., 0., 0., -1., 0., 0., 4., -1., 0.],
        [0., 0., 0., 0., -1., 0., -1., 4., -1.],
        [0., 0., 0., 0., 0., -1., 0., -1., 4.],
    ])
    .expect("symmetric")
}

/// Draws `s ~ N(0, Θ⁻¹)` as `s = L g` with `L Lᵀ = Θ⁻¹`.
pub struct SpikeSampler {
    l: Vec<f64>,
}

impl SpikeSampler {
    pub fn new() -> Self {
        let cov = spike_precision().inverse().expect("Θ is positive definite");
        SpikeSampler {
            l: cholesky_lower(&cov).expect("Θ⁻¹ is positive definite"),
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> [f64; 9] {
        let g: [f64; 9] = std::array::from_fn(|_| rng.sample(StandardNormal));
        std::array::from_fn(|i| (0..=i).map(|j| self.l[i * 9 + j] * g[j]).sum())
    }
}

impl Default for SpikeSampler {
    fn default() -> Self {
        SpikeSampler::new()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrueSignal {
    pub m: usize,
    /// Row-major `m × m` values.
    pub x: Vec<f64>,
    /// Spike centers as 1-based `(row, col)`, each in `2..=m−1`.
    pub centers: Vec<(usize, usize)>,
}

impl TrueSignal {
    pub fn nonzeros(&self) -> usize {
        self.x.iter().filter(|v| **v != 0.0).count()
    }
}

/// Adds `|s_h|` with `h = 3j₁ + j₂` (0-based) to cell `(k − 1 + j₁, ℓ − 1 + j₂)` of each 3×3
/// block centered at 1-based `(k, ℓ)`.
pub fn place_spikes(m: usize, spikes: &[((usize, usize), [f64; 9])]) -> TrueSignal {
    let mut x = vec![0.0; m * m];
    for &((k, l), s) in spikes {
        assert!(
            (2..m).contains(&k) && (2..m).contains(&l),
            "center off the interior"
        );
        for j1 in 0..3 {
            for j2 in 0..3 {
                // 1-based (k − 1 + j₁, ℓ − 1 + j₂) → 0-based (k − 2 + j₁, ℓ − 2 + j₂)
                x[cell(m, k - 2 + j1, l - 2 + j2)] += s[3 * j1 + j2].abs();
            }
        }
    }
    TrueSignal {
        m,
        x,
        centers: spikes.iter().map(|(c, _)| *c).collect(),
    }
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Three spikes with centers uniform on the interior `{2, …, m−1}²`; overlaps allowed.
pub fn true_signal(spec: &GridSpec) -> TrueSignal {
    let sampler = SpikeSampler::new();
    let spikes: Vec<_> = (0..SPIKES as u64)
        .map(|j| {
            let mut rng = stream_rng(spec.seed, j);
            let k = rng.random_range(2..spec.m);
            let l = rng.random_range(2..spec.m);
            ((k, l), sampler.sample(&mut rng))
        })
        .collect();
    place_spikes(spec.m, &spikes)
}

/// `y_i = |X_i + ε_i|` with `ε_i ~ N(0, σ²)`.
pub fn observe(signal: &TrueSignal, sigma2: f64, rng: &mut impl Rng) -> Vec<f64> {
    let sigma = sigma2.sqrt();
    signal
        .x
        .iter()
        .map(|&v| {
            let e: f64 = rng.sample(StandardNormal);
            (v + sigma * e).abs()
        })
        .collect()
}

/// Instance data for observations `y` on an `m × m` grid.
pub fn instance_from_observations(spec: &GridSpec, y: Vec<f64>) -> Result<Instance> {
    let n = spec.n();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    let s2 = spec.sigma2;
    let a = y.iter().map(|v| -2.0 / s2 * v).collect();
    let constant = y.iter().map(|v| v * v).sum::<f64>() / s2;
    let inst = Instance::new(
        grid_quadratic(spec.m, s2),
        a,
        vec![spec.mu; n],
        constant,
        spec.k,
        DEFAULT_BIG_M,
    )?;
    Ok(inst.with_meta(InstanceMeta {
        m: Some(spec.m),
        sigma2: Some(s2),
        mu: Some(spec.mu),
        seed: Some(spec.seed),
        y: Some(y),
    }))
}

/// Generates the signal, the observations and the instance for `spec`.
pub fn assemble(spec: &GridSpec) -> Result<(Instance, TrueSignal)> {
    let signal = true_signal(spec);
    let y = observe(
        &signal,
        spec.sigma2,
        &mut stream_rng(spec.seed, NOISE_STREAM),
    );
    Ok((instance_from_observations(spec, y)?, signal))
}

/// File name used by the generator, e.g. `grid6-sigma2-0.5-mu-0.25-k36-seed1.json`.
pub fn instance_id(spec: &GridSpec) -> String {
    format!(
        "grid{}-sigma2-{}-mu-{}-k{}-seed{}",
        spec.m, spec.sigma2, spec.mu, spec.k, spec.seed
    )
}

#[derive(Serialize, Deserialize)]
struct TripletMatrix {
    triplets: Vec<(usize, usize, f64)>,
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sigma2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mu: Option<f64>,
    #[serde(default)]
    k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    y: Option<Vec<f64>>,
    #[serde(rename = "Q")]
    q: TripletMatrix,
    a: Vec<f64>,
    c: Vec<f64>,
    #[serde(default)]
    constant: f64,
    #[serde(default)]
    big_m: Option<f64>,
}

fn field_error(field: &str, message: impl std::fmt::Display) -> Error {
    Error::Parse {
        line: 0,
        column: 0,
        message: format!("field `{field}`: {message}"),
    }
}

/// Pretty-printed JSON; `Q` is stored as its nonzero upper-triangle triplets.
pub fn write_json(inst: &Instance) -> String {
    let n = inst.n();
    let mut triplets = Vec::new();
    for i in 0..n {
        for j in i..n {
            let v = inst.q.get(i, j);
            if v != 0.0 {
                triplets.push((i, j, v));
            }
        }
    }
    let file = InstanceFile {
        n,
        m: inst.meta.m,
        sigma2: inst.meta.sigma2,
        mu: inst.meta.mu,
        k: Some(inst.k),
        seed: inst.meta.seed,
        y: inst.meta.y.clone(),
        q: TripletMatrix { triplets },
        a: inst.a.clone(),
        c: inst.c.clone(),
        constant: inst.constant,
        big_m: Some(inst.big_m),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("serializable");
    s.push('\n');
    s
}

pub fn read_json(text: &str) -> Result<Instance> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let n = file.n;
    let mut q = SymMatrix::zeros(n);
    for &(i, j, v) in &file.q.triplets {
        if i >= n || j >= n {
            return Err(field_error("Q", format!("triplet ({i}, {j}) out of range")));
        }
        q.set(i, j, v);
    }
    if let Some(y) = &file.y {
        if y.len() != n {
            return Err(field_error("y", format!("length {} ≠ n = {n}", y.len())));
        }
    }
    let k = file.k.unwrap_or(n);
    let inst = Instance::new(
        q,
        file.a,
        file.c,
        file.constant,
        k,
        file.big_m.unwrap_or(DEFAULT_BIG_M),
    )
    .map_err(|e| field_error("instance", e))?;
    Ok(inst.with_meta(InstanceMeta {
        m: file.m,
        sigma2: file.sigma2,
        mu: file.mu,
        seed: file.seed,
        y: file.y,
    }))
}

pub fn write_file(inst: &Instance, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_json(inst))?;
    Ok(())
}

pub fn read_file(path: impl AsRef<Path>) -> Result<Instance> {
    read_json(&std::fs::read_to_string(path)?)
}

/// `m` comma-separated lines of `m` values.
pub fn grid_csv(values: &[f64], m: usize) -> String {
    assert_eq!(values.len(), m * m);
    let mut out = String::new();
    for row in values.chunks(m) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Random matrices and instances for tests and verification suites.
pub mod random {
    use rand::{Rng, RngExt};

    use crate::linalg::SymMatrix;
    use crate::models::{Instance, DEFAULT_BIG_M};

    /// `D + sI − B` with `B ≥ 0` sparse-ish symmetric, `s` above the spectral radius of `B` and
    /// `D ≥ 0` diagonal. Not diagonally dominant in general.
    pub fn random_stieltjes(n: usize, rng: &mut impl Rng) -> SymMatrix {
        let density = rng.random_range(0.3..1.0);
        let b = SymMatrix::from_fn(n, |i, j| {
            if i != j && rng.random::<f64>() < density {
                rng.random_range(0.05..1.0)
            } else {
                0.0
            }
        });
        let rho = b
            .to_dmatrix()
            .symmetric_eigenvalues()
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()));
        let s = rho * rng.random_range(1.05..1.6) + 0.05;
        SymMatrix::from_fn(n, |i, j| {
            if i == j {
                s + rng.random_range(0.0..1.0)
            } else {
                -b.get(i, j)
            }
        })
    }

    /// Diagonally dominant tridiagonal matrix with off-diagonal entries of random sign.
    pub fn random_tridiagonal_spd(n: usize, rng: &mut impl Rng) -> SymMatrix {
        let off: Vec<f64> = (0..n.saturating_sub(1))
            .map(|_| {
                let v = rng.random_range(0.1..1.0);
                if rng.random::<bool>() {
                    v
                } else {
                    -v
                }
            })
            .collect();
        let mut q = SymMatrix::zeros(n);
        for i in 0..n {
            let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
            let right = off.get(i).map_or(0.0, |v| v.abs());
            q.set(i, i, left + right + rng.random_range(0.1..1.0));
            if i + 1 < n {
                q.set(i, i + 1, off[i]);
            }
        }
        q
    }

    /// Random Stieltjes instance with `a ≤ 0`, `c ≥ 0`. `M` is large enough never to bind:
    /// `|x_S| ≤ ½‖a‖ / λ_min(Q)` on every support.
    pub fn random_instance(n: usize, k: usize, rng: &mut impl Rng) -> Instance {
        let q = random_stieltjes(n, rng);
        let scale: f64 = q.diag().iter().sum::<f64>() / n as f64;
        let a: Vec<f64> = (0..n)
            .map(|_| -rng.random_range(0.0..3.0) * scale)
            .collect();
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0) * scale).collect();
        let norm_a = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        let lmin = q.min_eigenvalue().expect("converges");
        let big_m = (0.5 * norm_a / lmin * 1.01).max(DEFAULT_BIG_M);
        Instance::new(q, a, c, 0.0, k, big_m).expect("valid random instance")
    }

    /// Random `Σ ≤ 0` entrywise.
    pub fn random_nonpositive(n: usize, rng: &mut impl Rng) -> SymMatrix {
        SymMatrix::from_fn(n, |_, _| -rng.random_range(0.0..1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stieltjes::is_stieltjes;

    #[test]
    fn small_grid_matrix() {
        let q = grid_quadratic(2, 1.0);
        let expect = SymMatrix::from_rows(&[
            [3., -1., -1., 0.],
            [-1., 3., 0., -1.],
            [-1., 0., 3., -1.],
            [0., -1., -1., 3.],
        ])
        .unwrap();
        assert_eq!(q, expect);
    }

    #[test]
    fn grid_structure() {
        for (m, s2) in [(10, 0.5), (6, 2.0), (4, 1.0)] {
            let q = grid_quadratic(m, s2);
            let n = m * m;
            let mut edges = 0;
            for i in 0..n {
                let row_sum: f64 = q.row(i).iter().sum();
                assert_eq!(row_sum, 1.0 / s2);
                for j in (i + 1)..n {
                    match q.get(i, j) {
                        0.0 => {}
                        -1.0 => edges += 1,
                        v => panic!("unexpected off-diagonal {v}"),
                    }
                }
            }
            assert_eq!(edges, 2 * m * (m - 1));
            assert!(is_stieltjes(&q));
        }
        assert_eq!(grid_quadratic(3, 1.0).get(4, 4), 5.0);
        assert_eq!(grid_quadratic(3, 1.0).get(0, 0), 3.0);
    }

    #[test]
    fn spike_precision_matrix() {
        let theta = spike_precision();
        assert_eq!(theta.row(0), &[4., -1., 0., -1., 0., 0., 0., 0., 0.]);
        assert!(is_stieltjes(&theta));
        let inv = theta.inverse().unwrap();
        assert!(inv.as_slice().iter().all(|&v| v >= 0.0));
        // 4I − A versus (1 + degree)I − A on the 3×3 lattice: diagonals differ by 3 − degree
        let shift = SymMatrix::from_diag(&[1., 0., 1., 0., -1., 0., 1., 0., 1.]);
        assert_eq!(theta, &grid_quadratic(3, 1.0) + &shift);
    }

    #[test]
    fn disjoint_spikes_have_27_nonzeros() {
        let s = [1.0; 9];
        let sig = place_spikes(10, &[((2, 2), s), ((2, 6), s), ((7, 4), s)]);
        assert_eq!(sig.nonzeros(), 27);
        assert_eq!(sig.x[cell(10, 0, 0)], 1.0);
        assert_eq!(sig.x[cell(10, 0, 3)], 0.0);
        let overlapping = place_spikes(10, &[((2, 2), s), ((3, 3), s), ((9, 9), s)]);
        assert_eq!(overlapping.nonzeros(), 23);
        assert_eq!(overlapping.x[cell(10, 1, 1)], 2.0);
    }

    #[test]
    fn spike_index_layout() {
        let s: [f64; 9] = std::array::from_fn(|h| -(h as f64 + 1.0));
        let sig = place_spikes(4, &[((2, 3), s)]);
        // 1-based block rows 1..=3, columns 2..=4
        assert_eq!(sig.x[cell(4, 0, 1)], 1.0);
        assert_eq!(sig.x[cell(4, 0, 3)], 3.0);
        assert_eq!(sig.x[cell(4, 1, 1)], 4.0);
        assert_eq!(sig.x[cell(4, 2, 3)], 9.0);
        assert_eq!(sig.x[cell(4, 0, 0)], 0.0);
    }

    #[test]
    fn generated_signal_is_valid() {
        for seed in 0..20 {
            let spec = GridSpec::penalized(6, 1.0, seed).unwrap();
            let sig = true_signal(&spec);
            assert_eq!(sig.centers.len(), 3);
            assert!(sig.nonzeros() <= 27);
            assert!(sig.x.iter().all(|&v| v >= 0.0));
            for &(k, l) in &sig.centers {
                assert!((2..=5).contains(&k) && (2..=5).contains(&l));
            }
        }
    }

    #[test]
    fn noiseless_observation_returns_signal() {
        let spec = GridSpec::penalized(5, 1.0, 3).unwrap();
        let sig = true_signal(&spec);
        assert_eq!(observe(&sig, 0.0, &mut stream_rng(3, 3)), sig.x);
    }

    #[test]
    fn zero_signal_noise_is_reproducible_and_half_normal() {
        let sig = TrueSignal {
            m: 100,
            x: vec![0.0; 10_000],
            centers: vec![],
        };
        let y1 = observe(&sig, 1.0, &mut stream_rng(42, 3));
        let y2 = observe(&sig, 1.0, &mut stream_rng(42, 3));
        assert_eq!(y1, y2);
        let mean = y1.iter().sum::<f64>() / y1.len() as f64;
        assert!((mean - (2.0 / std::f64::consts::PI).sqrt()).abs() < 0.02);
    }

    #[test]
    fn spike_covariance_matches_inverse_precision() {
        let sampler = SpikeSampler::new();
        let mut rng = stream_rng(9, 0);
        let draws = 100_000;
        let mut cov = [0.0; 81];
        for _ in 0..draws {
            let s = sampler.sample(&mut rng);
            for i in 0..9 {
                for j in 0..9 {
                    cov[i * 9 + j] += s[i] * s[j];
                }
            }
        }
        let target = spike_precision().inverse().unwrap();
        for i in 0..9 {
            for j in 0..9 {
                let est = cov[i * 9 + j] / draws as f64;
                let t = target.get(i, j);
                // 5% of the entry's own scale √(Σ_ii Σ_jj); the sampling error of the smallest
                // off-diagonal entries alone is about 3% of their value at 10⁵ draws
                let scale = (target.get(i, i) * target.get(j, j)).sqrt();
                assert!((est - t).abs() <= 0.05 * scale, "({i},{j}): {est} vs {t}");
            }
        }
    }

    #[test]
    fn assembled_instance_fields() {
        let spec = GridSpec::constrained(10, 2.0, 1).unwrap();
        assert_eq!(spec.k, 20);
        let (inst, _) = assemble(&spec).unwrap();
        assert_eq!(inst.n(), 100);
        assert_eq!(inst.k, 20);
        let y = inst.meta.y.as_ref().unwrap();
        for (ai, yi) in inst.a.iter().zip(y) {
            assert_eq!(*ai, -yi);
            assert!(*ai <= 0.0);
        }
        assert_eq!(inst.c, vec![0.0; 100]);
        let norm2: f64 = y.iter().map(|v| v * v).sum();
        assert_eq!(inst.constant, norm2 / 2.0);
        let pen = GridSpec::penalized(10, 0.5, 1).unwrap();
        assert_eq!((pen.mu, pen.k), (0.25, 100));
        assert_eq!(GridSpec::penalized(10, 5.0, 1).unwrap().mu, 0.12);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let spec = GridSpec::penalized(10, 0.5, 7).unwrap();
        let (inst, _) = assemble(&spec).unwrap();
        let text = write_json(&inst);
        let back = read_json(&text).unwrap();
        assert_eq!(back, inst);
        assert_eq!(write_json(&back), text);
        let (again, _) = assemble(&spec).unwrap();
        assert_eq!(write_json(&again), text);
    }

    #[test]
    fn json_errors_carry_positions() {
        match read_json("{\n  \"n\": 2,\n  \"Q\": oops\n}") {
            Err(Error::Parse { line, column, .. }) => {
                assert_eq!(line, 3);
                assert!(column > 0);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        let bad = r#"{"n": 2, "Q": {"triplets": [[0, 5, 1.0]]}, "a": [0, 0], "c": [0, 0]}"#;
        assert!(matches!(read_json(bad), Err(Error::Parse { .. })));
    }

    #[test]
    fn minimal_json_uses_defaults() {
        let text = r#"{"n": 2, "Q": {"triplets": [[0,0,2.0],[0,1,-1.0],[1,1,2.0]]},
                       "a": [-1, -1], "c": [0.5, 0.5]}"#;
        let inst = read_json(text).unwrap();
        assert_eq!(inst.k, 2);
        assert_eq!(inst.big_m, DEFAULT_BIG_M);
        assert_eq!(inst.q.get(1, 0), -1.0);
    }

    #[test]
    fn grid_csv_layout() {
        assert_eq!(grid_csv(&[1.0, 2.5, 0.0, 4.0], 2), "1,2.5\n0,4\n");
    }
}
