//! Synthetic k-sparse signals, Gaussian sensing ensembles and noisy
//! phaseless observations.
//!
//! The observation model is `Y_j = (A_j . x*)^2 + eps_j` with `A_j` standard
//! Gaussian rows and `eps_j ~ N(0, sigma^2)`. `sigma` is reported as the
//! Gaussian standard deviation; in sub-exponential (psi_1) units that is
//! `sqrt(2/pi) * sigma`.

use crate::error::{Error, Result};
use crate::num::dot;
use crate::rng::{stream_rng, Stream};
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

/// Default magnitude range for generated nonzero entries.
pub const DEFAULT_MAGNITUDE_RANGE: (f64, f64) = (0.15, 1.0);

/// A ground-truth k-sparse vector with cached support and norm.
#[derive(Debug, Clone)]
pub struct SparseSignal {
    values: Array1<f64>,
    support: Vec<usize>,
    norm2: f64,
}

impl SparseSignal {
    /// Wraps a dense vector, deriving the support from its nonzero entries.
    /// A zero vector yields an empty support; generation routines never
    /// produce one, but tests may.
    pub fn from_dense(values: Array1<f64>) -> Self {
        let support: Vec<usize> = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i)
            .collect();
        let norm2 = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        Self {
            values,
            support,
            norm2,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Number of nonzero entries.
    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    pub fn values(&self) -> &Array1<f64> {
        &self.values
    }

    /// Sorted indices of the nonzero entries.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// Cached Euclidean norm.
    pub fn norm2(&self) -> f64 {
        self.norm2
    }

    /// Smallest nonzero magnitude; 0 for an empty support.
    pub fn min_support_magnitude(&self) -> f64 {
        if self.support.is_empty() {
            return 0.0;
        }
        self.support
            .iter()
            .map(|&i| self.values[i].abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest magnitude over all entries.
    pub fn max_magnitude(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// Largest constant `c` such that `min |x_i| >= c * ||x||_2 / sqrt(k)`
    /// over the support. This conditioning number is reported, not enforced;
    /// recovery guarantees degrade as it shrinks.
    pub fn sparsity_constant(&self) -> f64 {
        if self.support.is_empty() || self.norm2 == 0.0 {
            return 0.0;
        }
        (self.sparsity() as f64).sqrt() * self.min_support_magnitude() / self.norm2
    }
}

/// Sensing matrix, observations and the seed they were drawn from.
#[derive(Debug, Clone)]
pub struct PhaselessDataset {
    sensing: Array2<f64>,
    observations: Array1<f64>,
    sigma: f64,
    seed: u64,
    /// True iff the sensing matrix is exactly the row-major stream of
    /// `Stream::Sensing` under `seed` (false for row subsets).
    regenerable: bool,
}

impl PhaselessDataset {
    /// Builds a dataset from explicit components (e.g. externally measured
    /// rows or hand-crafted fixtures). Not regenerable from the seed.
    pub fn from_parts(
        sensing: Array2<f64>,
        observations: Array1<f64>,
        sigma: f64,
        seed: u64,
    ) -> Result<Self> {
        if sensing.nrows() != observations.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} sensing rows vs {} observations",
                sensing.nrows(),
                observations.len()
            )));
        }
        Ok(Self {
            sensing,
            observations,
            sigma,
            seed,
            regenerable: false,
        })
    }

    /// Sample count m.
    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Ambient dimension n.
    pub fn dim(&self) -> usize {
        self.sensing.ncols()
    }

    pub fn sensing(&self) -> &Array2<f64> {
        &self.sensing
    }

    pub fn observations(&self) -> &Array1<f64> {
        &self.observations
    }

    /// Noise scale as a Gaussian standard deviation.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mean_observation(&self) -> f64 {
        self.observations.iter().sum::<f64>() / self.len() as f64
    }

    /// Signal-magnitude estimate `sqrt(max(0, mean(Y)))`. Negative means
    /// (possible under heavy noise) are clamped to zero before the root so
    /// downstream step-size formulas stay well-defined.
    pub fn magnitude_estimate(&self) -> f64 {
        self.mean_observation().max(0.0).sqrt()
    }

    /// New dataset keeping only `rows` (ascending, in the given order).
    pub(crate) fn subset(&self, rows: &[usize]) -> Result<Self> {
        let n = self.dim();
        let mut sensing = Array2::zeros((rows.len(), n));
        let mut observations = Array1::zeros(rows.len());
        for (out, &j) in rows.iter().enumerate() {
            if j >= self.len() {
                return Err(Error::InvalidParameter(format!(
                    "row index {j} out of range for m={}",
                    self.len()
                )));
            }
            sensing.row_mut(out).assign(&self.sensing.row(j));
            observations[out] = self.observations[j];
        }
        Ok(Self {
            sensing,
            observations,
            sigma: self.sigma,
            seed: self.seed,
            regenerable: false,
        })
    }
}

/// Draws a k-sparse signal: k support positions chosen uniformly without
/// replacement, nonzero magnitudes uniform on `range` with random sign.
/// Deterministic in `seed` (stream 0).
pub fn sample_signal_in_range(
    n: usize,
    k: usize,
    range: (f64, f64),
    seed: u64,
) -> Result<SparseSignal> {
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "sparsity k={k} must satisfy 1 <= k <= n={n}"
        )));
    }
    let (lo, hi) = range;
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "magnitude range ({lo}, {hi}) must satisfy 0 < lo <= hi < inf"
        )));
    }
    let mut rng = stream_rng(seed, Stream::Signal);
    let mut support = rand::seq::index::sample(&mut rng, n, k).into_vec();
    support.sort_unstable();
    let mut values = Array1::zeros(n);
    for &i in &support {
        let magnitude = rng.random_range(lo..=hi);
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        values[i] = sign * magnitude;
    }
    Ok(SparseSignal::from_dense(values))
}

/// [`sample_signal_in_range`] with the default `[0.15, 1]` magnitudes.
pub fn sample_signal(n: usize, k: usize, seed: u64) -> Result<SparseSignal> {
    sample_signal_in_range(n, k, DEFAULT_MAGNITUDE_RANGE, seed)
}

/// Draws m sensing rows (i.i.d. standard normal, stream 1) and observations
/// `Y_j = (A_j . x*)^2 + sigma * N(0,1)` (noise from stream 2).
/// Deterministic in `seed`; the sensing matrix can be regenerated from
/// `(n, m, seed)` alone.
pub fn sample_dataset(
    signal: &SparseSignal,
    m: usize,
    sigma: f64,
    seed: u64,
) -> Result<PhaselessDataset> {
    if m == 0 {
        return Err(Error::InvalidParameter("sample count m must be >= 1".into()));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise scale sigma={sigma} must be finite and >= 0"
        )));
    }
    let n = signal.dim();
    let sensing = sample_sensing(n, m, seed);
    let mut noise_rng = stream_rng(seed, Stream::Noise);
    let x = signal
        .values()
        .as_slice()
        .expect("signal values are contiguous");
    let mut observations = Array1::zeros(m);
    for (j, row) in sensing.outer_iter().enumerate() {
        let z = dot(row.as_slice().expect("row is contiguous"), x);
        let eps = if sigma > 0.0 {
            sigma * noise_rng.sample::<f64, _>(StandardNormal)
        } else {
            0.0
        };
        observations[j] = z * z + eps;
    }
    Ok(PhaselessDataset {
        sensing,
        observations,
        sigma,
        seed,
        regenerable: true,
    })
}

fn sample_sensing(n: usize, m: usize, seed: u64) -> Array2<f64> {
    let mut rng = stream_rng(seed, Stream::Sensing);
    let mut sensing = Array2::zeros((m, n));
    for mut row in sensing.outer_iter_mut() {
        for a in row.iter_mut() {
            *a = rng.sample(StandardNormal);
        }
    }
    sensing
}

/// How the sensing matrix is represented in a serialized dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SensingStorage {
    /// Matrix entries written explicitly.
    Stored,
    /// Matrix omitted; reconstructed from the seed on load.
    Seeded,
}

impl PhaselessDataset {
    /// Writes the dataset as CSV.
    ///
    /// Layout: a header line `n,m,k,sigma,seed,sensing`, one line of values,
    /// a `Y` marker followed by m observation lines, and (for
    /// [`SensingStorage::Stored`]) an `A` marker followed by m rows of n
    /// comma-separated entries. `k` is the sparsity of the generating signal,
    /// recorded for provenance. Floats use the shortest round-trip decimal
    /// form, so reloading is bit-exact.
    pub fn write_csv<W: Write>(&self, k: usize, storage: SensingStorage, mut w: W) -> Result<()> {
        if storage == SensingStorage::Seeded && !self.regenerable {
            return Err(Error::InvalidParameter(
                "dataset is a row subset; its sensing matrix cannot be regenerated from the seed"
                    .into(),
            ));
        }
        let tag = match storage {
            SensingStorage::Stored => "stored",
            SensingStorage::Seeded => "seeded",
        };
        writeln!(w, "n,m,k,sigma,seed,sensing")?;
        writeln!(
            w,
            "{},{},{},{},{},{}",
            self.dim(),
            self.len(),
            k,
            self.sigma,
            self.seed,
            tag
        )?;
        writeln!(w, "Y")?;
        for y in self.observations.iter() {
            writeln!(w, "{y}")?;
        }
        if storage == SensingStorage::Stored {
            writeln!(w, "A")?;
            for row in self.sensing.outer_iter() {
                let line: Vec<String> = row.iter().map(|a| a.to_string()).collect();
                writeln!(w, "{}", line.join(","))?;
            }
        }
        Ok(())
    }

    pub fn write_csv_file<P: AsRef<Path>>(
        &self,
        k: usize,
        storage: SensingStorage,
        path: P,
    ) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(k, storage, std::io::BufWriter::new(file))
    }

    /// Reads a dataset written by [`write_csv`]; returns it with the
    /// recorded signal sparsity k.
    pub fn read_csv<R: Read>(r: R) -> Result<(Self, usize)> {
        let mut lines = BufReader::new(r).lines();
        let mut next = |what: &str| -> Result<String> {
            lines
                .next()
                .transpose()?
                .ok_or_else(|| Error::Parse(format!("unexpected end of file, expected {what}")))
        };
        let header = next("header")?;
        if header.trim() != "n,m,k,sigma,seed,sensing" {
            return Err(Error::Parse(format!("unrecognized header: {header}")));
        }
        let meta = next("metadata line")?;
        let fields: Vec<&str> = meta.trim().split(',').collect();
        if fields.len() != 6 {
            return Err(Error::Parse(format!("expected 6 metadata fields: {meta}")));
        }
        let parse_err = |f: &str| Error::Parse(format!("bad metadata field: {f}"));
        let n: usize = fields[0].parse().map_err(|_| parse_err(fields[0]))?;
        let m: usize = fields[1].parse().map_err(|_| parse_err(fields[1]))?;
        let k: usize = fields[2].parse().map_err(|_| parse_err(fields[2]))?;
        let sigma: f64 = fields[3].parse().map_err(|_| parse_err(fields[3]))?;
        let seed: u64 = fields[4].parse().map_err(|_| parse_err(fields[4]))?;
        let stored = match fields[5] {
            "stored" => true,
            "seeded" => false,
            other => return Err(Error::Parse(format!("unknown sensing tag: {other}"))),
        };
        if next("Y marker")?.trim() != "Y" {
            return Err(Error::Parse("missing Y marker".into()));
        }
        let mut observations = Array1::zeros(m);
        for j in 0..m {
            let line = next("observation")?;
            observations[j] = line
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad observation: {line}")))?;
        }
        let sensing = if stored {
            if next("A marker")?.trim() != "A" {
                return Err(Error::Parse("missing A marker".into()));
            }
            let mut sensing = Array2::zeros((m, n));
            for j in 0..m {
                let line = next("sensing row")?;
                let row: Vec<&str> = line.trim().split(',').collect();
                if row.len() != n {
                    return Err(Error::Parse(format!(
                        "sensing row {j} has {} entries, expected {n}",
                        row.len()
                    )));
                }
                for (i, tok) in row.iter().enumerate() {
                    sensing[[j, i]] = tok
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad sensing entry: {tok}")))?;
                }
            }
            sensing
        } else {
            sample_sensing(n, m, seed)
        };
        Ok((
            Self {
                sensing,
                observations,
                sigma,
                seed,
                regenerable: !stored,
            },
            k,
        ))
    }
}
