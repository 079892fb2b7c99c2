//! Infinite-alleles mutation by killing: a block hit by a mutation is
//! counted by size and removed.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::coalescent::{EventKind, SimOptions, SpatialCoalescent, StepOutcome};
use crate::error::{invalid, Error, Result};
use crate::lambda::Mechanism;
use crate::partition::LabeledPartition;
use crate::torus::Torus;

pub use crate::coalescent::total_tree_length;

/// Allele frequency spectrum: `a(k)` alleles are carried by exactly `k`
/// sampled individuals.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Spectrum {
    counts: Vec<u64>,
}

impl Spectrum {
    pub fn empty(n: u32) -> Self {
        Spectrum {
            counts: vec![0; n as usize],
        }
    }

    /// Builds a spectrum from `(a_1, ..., a_n)`, checking `sum k a_k = n`.
    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        let s = Spectrum { counts };
        if !s.is_conserved() {
            return invalid(format!("spectrum {:?} does not sum to n", s.counts));
        }
        Ok(s)
    }

    pub fn n(&self) -> u32 {
        self.counts.len() as u32
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// `a_k` for `1 <= k <= n`.
    pub fn a(&self, k: u32) -> u64 {
        self.counts[k as usize - 1]
    }

    pub fn record(&mut self, size: u32) {
        self.counts[size as usize - 1] += 1;
    }

    /// `sum k a_k`.
    pub fn weighted_total(&self) -> u64 {
        self.counts
            .iter()
            .enumerate()
            .map(|(i, &a)| (i as u64 + 1) * a)
            .sum()
    }

    pub fn is_conserved(&self) -> bool {
        self.weighted_total() == self.counts.len() as u64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MutationConfig {
    /// Mutations per lineage per unit of unscaled time.
    pub rate: f64,
}

impl MutationConfig {
    pub fn new(rate: f64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return invalid(format!("mutation rate must be positive, got {rate}"));
        }
        Ok(MutationConfig { rate })
    }
}

/// `pi / s_L`, the per-lineage rate matching the Kingman limit.
pub fn default_mutation_rate(torus: &Torus) -> Result<f64> {
    Ok(PI / torus.time_scale()?)
}

/// Runs the spatial coalescent with killing until every block is gone.
pub fn run_infinite_alleles<R: Rng + ?Sized>(
    initial: &LabeledPartition,
    torus: Torus,
    mechanism: Mechanism,
    mcfg: MutationConfig,
    rng: &mut R,
) -> Result<Spectrum> {
    let mut sim = SpatialCoalescent::new(
        initial,
        torus,
        mechanism,
        SimOptions::with_kill_rate(mcfg.rate),
    )?;
    let mut spectrum = Spectrum::empty(initial.n());
    drain_with_killing(&mut sim, &mut spectrum, rng)?;
    Ok(spectrum)
}

/// Steps `sim` until no blocks remain, recording killed block sizes.
pub(crate) fn drain_with_killing<R: Rng + ?Sized>(
    sim: &mut SpatialCoalescent,
    spectrum: &mut Spectrum,
    rng: &mut R,
) -> Result<()> {
    loop {
        match sim.step(rng)? {
            StepOutcome::Event { event, .. } => {
                if let EventKind::Mutation { size, .. } = event.kind {
                    spectrum.record(size);
                }
            }
            StepOutcome::Empty => return Ok(()),
            StepOutcome::Absorbed => {
                return Err(Error::InvalidState("killing run absorbed with blocks left".into()))
            }
        }
    }
}

/// Total tree length to the MRCA without mutation, computed on the fly.
pub fn tree_length_to_mrca<R: Rng + ?Sized>(
    initial: &LabeledPartition,
    torus: Torus,
    mechanism: Mechanism,
    rng: &mut R,
) -> Result<f64> {
    let mut sim = SpatialCoalescent::new(initial, torus, mechanism, SimOptions::default())?;
    let mut length = 0.0;
    while sim.block_count() > 1 {
        let before = sim.block_count() as f64;
        match sim.step(rng)? {
            StepOutcome::Event { dwell, .. } => length += before * dwell,
            _ => return Err(Error::InvalidState("run stopped before the MRCA".into())),
        }
    }
    Ok(length)
}

/// Componentwise mean and standard error of replicate spectra.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanSpectrum {
    pub replicates: usize,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl MeanSpectrum {
    pub fn n(&self) -> u32 {
        self.mean.len() as u32
    }
}

pub fn mean_spectrum(spectra: &[Spectrum]) -> Result<MeanSpectrum> {
    let first = spectra
        .first()
        .ok_or_else(|| Error::InvalidArgument("no spectra to average".into()))?;
    let n = first.n() as usize;
    if spectra.iter().any(|s| s.n() as usize != n) {
        return invalid("spectra of different sample sizes");
    }
    let mut mean = vec![0.0; n];
    let mut stderr = vec![0.0; n];
    let mut column = Vec::with_capacity(spectra.len());
    for k in 0..n {
        column.clear();
        column.extend(spectra.iter().map(|s| s.counts[k] as f64));
        let (m, se) = crate::stats::mean_stderr(&column);
        mean[k] = m;
        stderr[k] = se;
    }
    Ok(MeanSpectrum {
        replicates: spectra.len(),
        mean,
        stderr,
    })
}
