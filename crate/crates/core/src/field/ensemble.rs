use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::grid::Grid;
use super::kernel::KernelFamily;
use crate::error::{Error, Result};

/// Replicas are generated in fixed blocks of this size, aligned on absolute
/// replica indices, so a replica's values never depend on which range or
/// how many workers produced it.
pub const REPLICA_CHUNK: usize = 64;

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-6;

/// Covariance of the slab increment `X_{t_hi} - X_{t_lo}` on a grid and a
/// lower-triangular factor `L` with `L Lᵀ = C + jitter·scale·Id`.
#[derive(Debug, Clone)]
pub struct SlabCovariance {
    pub t_lo: f64,
    pub t_hi: f64,
    pub covariance: DMatrix<f64>,
    pub factor: DMatrix<f64>,
    /// Relative diagonal jitter that made the factorization succeed.
    pub jitter: f64,
}

pub fn slab_covariance(
    family: &KernelFamily,
    grid: &Grid,
    t_lo: f64,
    t_hi: f64,
) -> Result<SlabCovariance> {
    if !(t_lo.is_finite() && t_hi.is_finite() && 0.0 <= t_lo && t_lo <= t_hi) {
        return Err(Error::Domain(format!("invalid slab [{t_lo}, {t_hi}]")));
    }
    let g = grid.len();
    let x = grid.nodes();
    let rows: Vec<Vec<f64>> = (0..g)
        .into_par_iter()
        .map(|i| {
            (0..=i)
                .map(|j| family.k_increment(t_lo, t_hi, (x[i] - x[j]).abs()))
                .collect()
        })
        .collect();
    let mut covariance = DMatrix::zeros(g, g);
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            covariance[(i, j)] = v;
            covariance[(j, i)] = v;
        }
    }
    if t_lo == t_hi {
        return Ok(SlabCovariance {
            t_lo,
            t_hi,
            factor: DMatrix::zeros(g, g),
            covariance,
            jitter: 0.0,
        });
    }
    let scale = (0..g).map(|i| covariance[(i, i)]).fold(0.0, f64::max);
    let mut jitter = JITTER_START;
    loop {
        let mut shifted = covariance.clone();
        for i in 0..g {
            shifted[(i, i)] += jitter * scale;
        }
        if let Some(chol) = nalgebra::Cholesky::new(shifted) {
            let factor = chol.unpack();
            if factor.iter().all(|v| v.is_finite()) {
                if jitter > JITTER_START {
                    log::info!("slab [{t_lo}, {t_hi}] factorized with jitter {jitter:e}");
                }
                return Ok(SlabCovariance {
                    t_lo,
                    t_hi,
                    covariance,
                    factor,
                    jitter,
                });
            }
        }
        jitter *= 10.0;
        if jitter > JITTER_MAX * 1.000001 {
            return Err(Error::Numerical(format!(
                "factorization of slab [{t_lo}, {t_hi}] failed with jitter up to {JITTER_MAX:e}"
            )));
        }
    }
}

fn validate_slab_times(slab_times: &[f64]) -> Result<()> {
    if slab_times.len() < 2 || slab_times[0] != 0.0 {
        return Err(Error::Domain(
            "slab times must start at 0 and contain at least one positive cutoff".into(),
        ));
    }
    if !slab_times.iter().all(|t| t.is_finite()) || !slab_times.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Domain("slab times must be finite and strictly increasing".into()));
    }
    Ok(())
}

/// Counter-based stream for one (replica, slab) pair.
fn stream(master_seed: u64, replica: usize, slab: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(((replica as u64) << 16) | slab as u64);
    rng
}

/// Factorized slabs of a layered field on a grid; produces replicas on demand.
#[derive(Debug, Clone)]
pub struct FieldSampler {
    grid: Grid,
    slab_times: Vec<f64>,
    factors: Vec<DMatrix<f64>>,
    master_seed: u64,
}

/// Borrowed view of one replica: `field(k)` is `X_{t_k}` on the grid.
#[derive(Debug, Clone, Copy)]
pub struct ReplicaView<'a> {
    pub index: usize,
    values: &'a [f64],
    nodes: usize,
}

impl<'a> ReplicaView<'a> {
    pub fn field(&self, slab_index: usize) -> &'a [f64] {
        &self.values[slab_index * self.nodes..(slab_index + 1) * self.nodes]
    }
}

impl FieldSampler {
    pub fn new(
        family: &KernelFamily,
        grid: &Grid,
        slab_times: &[f64],
        master_seed: u64,
    ) -> Result<Self> {
        validate_slab_times(slab_times)?;
        grid.check_resolution(*slab_times.last().unwrap());
        let factors = slab_times
            .windows(2)
            .map(|w| slab_covariance(family, grid, w[0], w[1]).map(|s| s.factor))
            .collect::<Result<Vec<_>>>()?;
        Ok(FieldSampler {
            grid: grid.clone(),
            slab_times: slab_times.to_vec(),
            factors,
            master_seed,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn slab_times(&self) -> &[f64] {
        &self.slab_times
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    fn stride(&self) -> usize {
        self.slab_times.len() * self.grid.len()
    }

    /// Values of the replicas `64c .. 64c + 64`, laid out as
    /// `[replica][slab][node]` with slab 0 identically zero.
    fn chunk(&self, c: usize) -> Vec<f64> {
        let g = self.grid.len();
        let stride = self.stride();
        let mut out = vec![0.0; REPLICA_CHUNK * stride];
        let mut noise = DMatrix::<f64>::zeros(g, REPLICA_CHUNK);
        for (k, factor) in self.factors.iter().enumerate() {
            let slab = k + 1;
            for j in 0..REPLICA_CHUNK {
                let mut rng = stream(self.master_seed, c * REPLICA_CHUNK + j, slab);
                for i in 0..g {
                    noise[(i, j)] = StandardNormal.sample(&mut rng);
                }
            }
            let inc = factor * &noise;
            for j in 0..REPLICA_CHUNK {
                let base = j * stride;
                for i in 0..g {
                    out[base + slab * g + i] = out[base + k * g + i] + inc[(i, j)];
                }
            }
        }
        out
    }

    /// Applies `f` to replicas `start .. start + count`; results come back
    /// in replica order.
    pub fn map_replicas<T, F>(&self, start: usize, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(ReplicaView<'_>) -> T + Sync,
    {
        if count == 0 {
            return Vec::new();
        }
        let end = start + count;
        let first = start / REPLICA_CHUNK;
        let last = (end - 1) / REPLICA_CHUNK;
        let stride = self.stride();
        let g = self.grid.len();
        let parts: Vec<Vec<T>> = (first..=last)
            .into_par_iter()
            .map(|c| {
                let values = self.chunk(c);
                let lo = start.max(c * REPLICA_CHUNK);
                let hi = end.min((c + 1) * REPLICA_CHUNK);
                (lo..hi)
                    .map(|r| {
                        let j = r - c * REPLICA_CHUNK;
                        f(ReplicaView {
                            index: r,
                            values: &values[j * stride..(j + 1) * stride],
                            nodes: g,
                        })
                    })
                    .collect()
            })
            .collect();
        parts.into_iter().flatten().collect()
    }

    /// Materializes replicas `start .. start + count`.
    pub fn sample_range(&self, start: usize, count: usize) -> FieldEnsemble {
        let stride = self.stride();
        let blocks = self.map_replicas(start, count, |view| view.values.to_vec());
        let mut values = Vec::with_capacity(count * stride);
        for b in blocks {
            values.extend_from_slice(&b);
        }
        FieldEnsemble {
            grid: self.grid.clone(),
            slab_times: self.slab_times.clone(),
            first_replica: start,
            replicas: count,
            master_seed: self.master_seed,
            values,
        }
    }
}

/// Replicated layered samples `X_{t_k}(x_i)`.
#[derive(Debug, Clone)]
pub struct FieldEnsemble {
    grid: Grid,
    slab_times: Vec<f64>,
    first_replica: usize,
    replicas: usize,
    master_seed: u64,
    values: Vec<f64>,
}

impl FieldEnsemble {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn slab_times(&self) -> &[f64] {
        &self.slab_times
    }

    pub fn replicas(&self) -> usize {
        self.replicas
    }

    pub fn first_replica(&self) -> usize {
        self.first_replica
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn slab_count(&self) -> usize {
        self.slab_times.len()
    }

    pub fn cutoff(&self, slab_index: usize) -> Result<f64> {
        self.slab_times.get(slab_index).copied().ok_or_else(|| {
            Error::Domain(format!(
                "slab index {slab_index} out of range (0..{})",
                self.slab_times.len()
            ))
        })
    }

    /// `X_{t_k}` on the grid for the `replica`-th stored replica.
    pub fn field(&self, replica: usize, slab_index: usize) -> &[f64] {
        let g = self.grid.len();
        let base = (replica * self.slab_times.len() + slab_index) * g;
        &self.values[base..base + g]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

pub fn sample_ensemble(
    family: &KernelFamily,
    grid: &Grid,
    slab_times: &[f64],
    replicas: usize,
    master_seed: u64,
) -> Result<FieldEnsemble> {
    if replicas == 0 {
        return Err(Error::Domain("need at least one replica".into()));
    }
    Ok(FieldSampler::new(family, grid, slab_times, master_seed)?.sample_range(0, replicas))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn family() -> KernelFamily {
        KernelFamily::default()
    }

    #[test]
    fn equal_cutoffs_give_zero_matrix() {
        let f = family();
        let g = Grid::midpoint(&f, 5).unwrap();
        let s = slab_covariance(&f, &g, 2.0, 2.0).unwrap();
        assert!(s.covariance.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn slab_diagonal_and_two_node_entries() {
        let f = family();
        let g = Grid::from_parts(vec![0.2, 0.45], vec![0.5, 0.5]).unwrap();
        let s = slab_covariance(&f, &g, 1.0, 3.5).unwrap();
        assert_eq!(s.covariance[(0, 0)], 2.5);
        assert_eq!(s.covariance[(1, 1)], 2.5);
        let expected = f.k_kernel(3.5, 0.2, 0.45).unwrap() - f.k_kernel(1.0, 0.2, 0.45).unwrap();
        assert!((s.covariance[(0, 1)] - expected).abs() < 1e-10);
        assert_eq!(s.covariance[(0, 1)], s.covariance[(1, 0)]);
        let rebuilt = &s.factor * s.factor.transpose();
        assert!((rebuilt - &s.covariance).amax() < 1e-8);
    }

    #[test]
    fn fine_grid_factorizes_with_jitter() {
        let f = family();
        let g = Grid::midpoint(&f, 300).unwrap();
        let s = slab_covariance(&f, &g, 0.0, 2.0).unwrap();
        assert!(s.jitter <= 1e-6);
    }

    #[test]
    fn rejects_bad_slab_times() {
        let f = family();
        let g = Grid::midpoint(&f, 4).unwrap();
        assert!(sample_ensemble(&f, &g, &[0.5, 1.0], 2, 0).is_err());
        assert!(sample_ensemble(&f, &g, &[0.0, 1.0, 1.0], 2, 0).is_err());
        assert!(sample_ensemble(&f, &g, &[0.0, 1.0], 0, 0).is_err());
    }

    #[test]
    fn ranges_agree_with_full_sample() {
        let f = family();
        let g = Grid::midpoint(&f, 6).unwrap();
        let sampler = FieldSampler::new(&f, &g, &[0.0, 1.0, 2.0], 11).unwrap();
        let full = sampler.sample_range(0, 150);
        let part = sampler.sample_range(70, 20);
        for r in 0..20 {
            for k in 0..3 {
                assert_eq!(part.field(r, k), full.field(70 + r, k));
            }
        }
        assert!(full.field(3, 0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn worker_count_does_not_change_values() {
        let f = family();
        let g = Grid::midpoint(&f, 8).unwrap();
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| sample_ensemble(&f, &g, &[0.0, 1.5], 200, 5).unwrap())
        };
        assert_eq!(run(1).values(), run(3).values());
    }

    #[test]
    fn distinct_seeds_give_distinct_values() {
        let f = family();
        let g = Grid::midpoint(&f, 4).unwrap();
        let a = sample_ensemble(&f, &g, &[0.0, 1.0], 3, 1).unwrap();
        let b = sample_ensemble(&f, &g, &[0.0, 1.0], 3, 2).unwrap();
        assert_ne!(a.values(), b.values());
    }
}
