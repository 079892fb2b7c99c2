//! The non-spatial Kingman coalescent, the Ewens expected spectrum, the
//! hybrid spatial-then-Kingman run and q-q pairing.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::coalescent::{Event, EventKind, EventLog, SimOptions, SpatialCoalescent, StepOutcome};
use crate::error::{invalid, Error, Result};
use crate::lambda::Mechanism;
use crate::mutation::{MutationConfig, Spectrum};
use crate::partition::{LabeledPartition, UnlabeledPartition};
use crate::stats::quantile_sorted;
use crate::torus::{Site, Torus};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KingmanConfig {
    /// Coalescence rate per unordered pair.
    pub pair_rate: f64,
    /// Optional killing rate per line.
    pub mutation_rate: Option<f64>,
}

impl KingmanConfig {
    pub fn new(pair_rate: f64) -> Result<Self> {
        if !(pair_rate > 0.0) || !pair_rate.is_finite() {
            return invalid(format!("pair rate must be positive, got {pair_rate}"));
        }
        Ok(KingmanConfig {
            pair_rate,
            mutation_rate: None,
        })
    }

    pub fn with_mutation(self, rate: f64) -> Result<Self> {
        MutationConfig::new(rate)?;
        Ok(KingmanConfig {
            mutation_rate: Some(rate),
            ..self
        })
    }

    /// Pair rate `pi / s_L`: the spatial limit, in unscaled time.
    pub fn matched(torus: &Torus) -> Result<Self> {
        Self::new(PI / torus.time_scale()?)
    }
}

/// Simulates Kingman from `start`. Blocks carry the dummy label origin in
/// the log. Runs to a single block, or to none when killing is on.
pub fn simulate_kingman<R: Rng + ?Sized>(
    start: &UnlabeledPartition,
    cfg: KingmanConfig,
    rng: &mut R,
) -> Result<EventLog> {
    let initial = LabeledPartition::from_entries(
        start.n(),
        start.blocks().iter().map(|b| (b.clone(), Site::ORIGIN)).collect(),
    )?;
    let mut ids: Vec<(u32, u32)> = start.blocks().iter().map(|b| (b[0], b.len() as u32)).collect();
    let mu = cfg.mutation_rate.unwrap_or(0.0);
    let mut clock = 0.0;
    let mut events = Vec::new();
    loop {
        let b = ids.len();
        let pairs = (b * b.saturating_sub(1) / 2) as f64;
        let merge = pairs * cfg.pair_rate;
        let kill = mu * b as f64;
        if merge + kill <= 0.0 {
            break;
        }
        let e: f64 = rng.sample(Exp1);
        clock += e / (merge + kill);
        if rng.random::<f64>() * (merge + kill) < merge {
            let i = rng.random_range(0..b);
            let mut j = rng.random_range(0..b - 1);
            if j >= i {
                j += 1;
            }
            let (hi, lo) = (i.max(j), i.min(j));
            let (a, sa) = ids.swap_remove(hi);
            let (c, sc) = ids.swap_remove(lo);
            ids.push((a.min(c), sa + sc));
            events.push(Event {
                time: clock,
                kind: EventKind::Merge {
                    blocks: vec![a.min(c), a.max(c)],
                    site: Site::ORIGIN,
                },
            });
        } else {
            let (id, size) = ids.swap_remove(rng.random_range(0..b));
            events.push(Event {
                time: clock,
                kind: EventKind::Mutation {
                    block: id,
                    site: Site::ORIGIN,
                    size,
                },
            });
        }
    }
    let mut log = EventLog {
        initial,
        events,
        terminal: Vec::new(),
    };
    log.terminal = log.replay()?;
    Ok(log)
}

/// Kingman with killing on bare block sizes, recording into `spectrum`.
pub fn kingman_killing<R: Rng + ?Sized>(
    mut sizes: Vec<u32>,
    pair_rate: f64,
    mutation_rate: f64,
    spectrum: &mut Spectrum,
    rng: &mut R,
) {
    while !sizes.is_empty() {
        let b = sizes.len();
        let merge = (b * (b - 1) / 2) as f64 * pair_rate;
        let kill = mutation_rate * b as f64;
        if rng.random::<f64>() * (merge + kill) < merge {
            let i = rng.random_range(0..b);
            let mut j = rng.random_range(0..b - 1);
            if j >= i {
                j += 1;
            }
            let moved = sizes.swap_remove(i.max(j));
            sizes[i.min(j)] += moved;
        } else {
            let k = sizes.swap_remove(rng.random_range(0..b));
            spectrum.record(k);
        }
    }
}

/// Total tree length of a Kingman coalescent from `n` singletons.
pub fn kingman_tree_length<R: Rng + ?Sized>(n: u32, pair_rate: f64, rng: &mut R) -> f64 {
    (2..=n)
        .map(|b| {
            let e: f64 = rng.sample(Exp1);
            b as f64 * e / ((b * (b - 1) / 2) as f64 * pair_rate)
        })
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EwensMethod {
    Formula,
    MonteCarlo { replicates: u64, seed: u64 },
}

/// `E[a_k]` under infinite alleles with scaled mutation rate `theta`
/// (pair rate 1, `theta / 2` per line), indexed by `k - 1`.
pub fn ewens_expected_spectrum(n: u32, theta: f64, method: EwensMethod) -> Result<Vec<f64>> {
    if n == 0 || !(theta > 0.0) {
        return invalid("ewens spectrum needs n >= 1 and theta > 0");
    }
    match method {
        EwensMethod::Formula => {
            let nf = n as f64;
            Ok((1..=n)
                .map(|j| {
                    let jf = j as f64;
                    let ln = ln_gamma(nf + 1.0) - ln_gamma(nf - jf + 1.0) + ln_gamma(nf - jf + theta)
                        - ln_gamma(nf + theta);
                    theta / jf * ln.exp()
                })
                .collect())
        }
        EwensMethod::MonteCarlo { replicates, seed } => {
            let spectra = crate::parallel::map_replicates(replicates, None, |r| {
                let mut rng = crate::rng::stream(seed, r, "ewens");
                let mut s = Spectrum::empty(n);
                kingman_killing(vec![1; n as usize], 1.0, theta / 2.0, &mut s, &mut rng);
                s
            });
            Ok(crate::mutation::mean_spectrum(&spectra)?.mean)
        }
    }
}

/// Outcome of a hybrid run.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridOutcome {
    pub spectrum: Spectrum,
    /// Blocks alive when the spatial phase stopped.
    pub handoff_blocks: usize,
    /// Whether the Kingman phase had at least two blocks to work on.
    pub used_kingman: bool,
    /// Unscaled time at handoff.
    pub handoff_time: f64,
}

/// Spatial dynamics with killing until all blocks are `threshold` apart
/// (or at most one is left), then Kingman with pair rate `pi / s_L` and the
/// same per-line mutation rate.
pub fn hybrid_run<R: Rng + ?Sized>(
    initial: &LabeledPartition,
    torus: Torus,
    mechanism: Mechanism,
    threshold: f64,
    mcfg: MutationConfig,
    rng: &mut R,
) -> Result<HybridOutcome> {
    if !(0.0..=torus.diameter()).contains(&threshold) {
        return invalid(format!(
            "threshold {threshold} outside [0, {}]",
            torus.diameter()
        ));
    }
    let pair_rate = KingmanConfig::matched(&torus)?.pair_rate;
    let mut sim = SpatialCoalescent::new(
        initial,
        torus,
        mechanism,
        SimOptions::with_kill_rate(mcfg.rate),
    )?;
    let mut spectrum = Spectrum::empty(initial.n());
    loop {
        if !sim.has_pending_merge() && (sim.block_count() <= 1 || sim.is_separated(threshold)) {
            break;
        }
        match sim.step(rng)? {
            StepOutcome::Event { event, .. } => {
                if let EventKind::Mutation { size, .. } = event.kind {
                    spectrum.record(size);
                }
            }
            StepOutcome::Empty => break,
            StepOutcome::Absorbed => {
                return Err(Error::InvalidState("hybrid run absorbed".into()))
            }
        }
    }
    let sizes: Vec<u32> = sim.block_sizes().map(|s| s as u32).collect();
    let handoff_blocks = sizes.len();
    kingman_killing(sizes, pair_rate, mcfg.rate, &mut spectrum, rng);
    Ok(HybridOutcome {
        spectrum,
        handoff_blocks,
        used_kingman: handoff_blocks >= 2,
        handoff_time: sim.clock(),
    })
}

/// Paired quantiles of two samples at the shorter sample's length.
pub fn qq_data(a: &[f64], b: &[f64]) -> Result<Vec<(f64, f64)>> {
    if a.is_empty() || b.is_empty() {
        return invalid("q-q data needs two nonempty samples");
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    let m = sa.len().min(sb.len());
    Ok((0..m)
        .map(|i| {
            let q = if m == 1 { 0.5 } else { i as f64 / (m - 1) as f64 };
            (quantile_sorted(&sa, q), quantile_sorted(&sb, q))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coalescent::total_tree_length;
    use crate::stats::{binomial_z, mean_stderr};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_block_gives_empty_log() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = UnlabeledPartition::from_blocks(3, vec![vec![1, 2, 3]]).unwrap();
        let log = simulate_kingman(&p, KingmanConfig::new(1.0).unwrap(), &mut rng).unwrap();
        assert!(log.events.is_empty());
    }

    #[test]
    fn first_wait_of_nine_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = UnlabeledPartition::singletons(9).unwrap();
        let cfg = KingmanConfig::new(1.0).unwrap();
        let u1: Vec<f64> = (0..20_000)
            .map(|_| simulate_kingman(&p, cfg, &mut rng).unwrap().events[0].time)
            .collect();
        let (m, se) = mean_stderr(&u1);
        assert!((m - 1.0 / 36.0).abs() < 4.0 * se, "{m} vs {}", 1.0 / 36.0);
    }

    #[test]
    fn pair_absorption_at_rate_pi() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = UnlabeledPartition::singletons(2).unwrap();
        let cfg = KingmanConfig::new(PI).unwrap();
        let t: Vec<f64> = (0..20_000)
            .map(|_| simulate_kingman(&p, cfg, &mut rng).unwrap().end_time())
            .collect();
        let (m, se) = mean_stderr(&t);
        assert!((m - 1.0 / PI).abs() < 4.0 * se);
    }

    #[test]
    fn log_lengths_match_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = UnlabeledPartition::singletons(5).unwrap();
        let log = simulate_kingman(&p, KingmanConfig::new(1.0).unwrap(), &mut rng).unwrap();
        assert_eq!(log.events.len(), 4);
        assert_eq!(log.terminal_partition().unwrap().len(), 1);
        assert!(total_tree_length(&log, true).unwrap() > 0.0);
    }

    #[test]
    fn ewens_formula_small_cases() {
        let e = ewens_expected_spectrum(2, 2.0, EwensMethod::Formula).unwrap();
        assert!((e[1] - 1.0 / 3.0).abs() < 1e-12);
        assert!((e[0] - 4.0 / 3.0).abs() < 1e-12);
        assert!((ewens_expected_spectrum(1, 0.7, EwensMethod::Formula).unwrap()[0] - 1.0).abs() < 1e-12);
        for (n, theta) in [(5, 1.0), (9, 2.0), (30, 0.3)] {
            let e = ewens_expected_spectrum(n, theta, EwensMethod::Formula).unwrap();
            let total: f64 = e.iter().enumerate().map(|(i, a)| (i + 1) as f64 * a).sum();
            assert!((total - n as f64).abs() < 1e-9);
        }
        assert!(ewens_expected_spectrum(0, 1.0, EwensMethod::Formula).is_err());
    }

    #[test]
    fn two_lineage_race() {
        // P(a_2 = 1) = 1 / (1 + theta) at theta = 2.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let trials = 100_000;
        let mut hits = 0;
        for _ in 0..trials {
            let mut s = Spectrum::empty(2);
            kingman_killing(vec![1, 1], 1.0, 1.0, &mut s, &mut rng);
            hits += s.a(2);
        }
        let (_, z) = binomial_z(hits, trials, 1.0 / 3.0);
        assert!(z.abs() < 4.0);
    }

    #[test]
    fn hybrid_threshold_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let t = Torus::new(5);
        let p = LabeledPartition::singletons(2, &[Site::ORIGIN, Site::new(3, 3)]).unwrap();
        let m = MutationConfig::new(0.01).unwrap();
        assert!(hybrid_run(&p, t, Mechanism::Instantaneous, 100.0, m, &mut rng).is_err());
        assert!(hybrid_run(&p, t, Mechanism::Instantaneous, -1.0, m, &mut rng).is_err());
        let out = hybrid_run(&p, t, Mechanism::Instantaneous, 0.0, m, &mut rng).unwrap();
        assert_eq!(out.handoff_blocks, 2);
        assert_eq!(out.handoff_time, 0.0);
        assert!(out.spectrum.is_conserved());
    }

    #[test]
    fn qq_examples() {
        let a = [3.0, 1.0, 2.0];
        assert_eq!(qq_data(&a, &a).unwrap(), vec![(1.0, 1.0), (2.0, 2.0), (3.0, 3.0)]);
        let b: Vec<f64> = a.iter().map(|x| 2.0 * x).collect();
        assert!(qq_data(&a, &b).unwrap().iter().all(|(x, y)| *y == 2.0 * x));
        let long = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(qq_data(&long, &[5.0, 7.0]).unwrap(), vec![(0.0, 5.0), (4.0, 7.0)]);
        assert!(qq_data(&[], &a).is_err());
    }
}
