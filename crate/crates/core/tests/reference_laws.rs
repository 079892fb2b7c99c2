//! Simulated laws against independent closed forms and simple chains.

use std::collections::BTreeMap;

use torus_coalescent::coalescent::{EventKind, StepOutcome};
use torus_coalescent::kingman::{hybrid_run, kingman_killing, simulate_kingman, KingmanConfig};
use torus_coalescent::mutation::{MutationConfig, Spectrum};
use torus_coalescent::oracles::tree_marking_spectrum;
use torus_coalescent::partition::UnlabeledPartition;
use torus_coalescent::rng::stream;
use torus_coalescent::stats::chi_square_p_value;
use torus_coalescent::{LabeledPartition, Mechanism, SimOptions, Site, SpatialCoalescent, Torus};

fn tv(a: &BTreeMap<Vec<u64>, u64>, b: &BTreeMap<Vec<u64>, u64>) -> f64 {
    let (na, nb) = (a.values().sum::<u64>() as f64, b.values().sum::<u64>() as f64);
    let keys: std::collections::BTreeSet<_> = a.keys().chain(b.keys()).collect();
    keys.into_iter()
        .map(|k| {
            let pa = *a.get(k).unwrap_or(&0) as f64 / na;
            let pb = *b.get(k).unwrap_or(&0) as f64 / nb;
            (pa - pb).abs()
        })
        .sum::<f64>()
        / 2.0
}

fn tally(reps: u64, mut draw: impl FnMut(u64) -> Spectrum) -> BTreeMap<Vec<u64>, u64> {
    let mut out = BTreeMap::new();
    for r in 0..reps {
        *out.entry(draw(r).counts().to_vec()).or_insert(0) += 1;
    }
    out
}

#[test]
fn killing_scheme_matches_marking_a_finished_tree() {
    // Pair rate 1 and per-line rate 1 correspond to theta = 2.
    let reps = 100_000;
    let mut rng = stream(11, 0, "killing");
    let killed = tally(reps, |_| {
        let mut s = Spectrum::empty(3);
        kingman_killing(vec![1; 3], 1.0, 1.0, &mut s, &mut rng);
        s
    });
    let mut rng = stream(11, 0, "marking");
    let marked = tally(reps, |_| tree_marking_spectrum(3, 2.0, &mut rng));
    let d = tv(&killed, &marked);
    assert!(d < 0.01, "total variation {d}");
}

#[test]
fn hybrid_with_zero_threshold_is_kingman_killing() {
    let torus = Torus::with_side(5).unwrap();
    let rate = torus.time_scale().unwrap().recip() * 3.0;
    let pair_rate = KingmanConfig::matched(&torus).unwrap().pair_rate;
    let start = LabeledPartition::singletons(4, &[Site::ORIGIN; 4]).unwrap();
    let mech: Mechanism = "bs".parse().unwrap();
    let reps = 50_000;
    let mut rng = stream(12, 0, "hybrid");
    let hybrid = tally(reps, |_| {
        let out = hybrid_run(&start, torus, mech.clone(), 0.0, MutationConfig::new(rate).unwrap(), &mut rng).unwrap();
        assert_eq!(out.handoff_blocks, 4);
        out.spectrum
    });
    let mut rng = stream(12, 0, "kingman");
    let kingman = tally(reps, |_| {
        let mut s = Spectrum::empty(4);
        kingman_killing(vec![1; 4], pair_rate, rate, &mut s, &mut rng);
        s
    });
    let d = tv(&hybrid, &kingman);
    assert!(d < 0.02, "total variation {d}");
}

// Blocks just before the first event after time `t`.
fn state_at(sim: &mut SpatialCoalescent, t: f64, rng: &mut impl rand::Rng) -> Vec<(Vec<u32>, Site)> {
    loop {
        let before = sim.blocks();
        match sim.step(rng).unwrap() {
            StepOutcome::Event { .. } if sim.clock() <= t => {}
            _ => return before,
        }
    }
}

fn chi_square_against(counts: &[f64], probs: &[f64]) -> f64 {
    let total: f64 = counts.iter().sum();
    let expected: Vec<f64> = probs.iter().map(|p| p * total).collect();
    chi_square_p_value(counts, &expected, counts.len() - 1).unwrap()
}

#[test]
fn single_lineage_follows_the_heat_kernel() {
    let torus = Torus::with_side(3).unwrap();
    let start = LabeledPartition::singletons(1, &[Site::ORIGIN]).unwrap();
    for (i, t) in [0.5, 2.0].into_iter().enumerate() {
        let mut rng = stream(13, i as u64, "walk");
        let mut counts = vec![0.0; torus.site_count()];
        for _ in 0..20_000 {
            let mut sim = SpatialCoalescent::new(&start, torus, Mechanism::Instantaneous, SimOptions::default()).unwrap();
            let blocks = state_at(&mut sim, t, &mut rng);
            counts[torus.index(blocks[0].1)] += 1.0;
        }
        let p = chi_square_against(&counts, &torus.transient_distribution(Site::ORIGIN, t).unwrap());
        assert!(p > 0.001, "t = {t}: p = {p}");
    }
}

#[test]
fn difference_of_two_free_lineages_is_a_rate_two_walk() {
    let torus = Torus::with_side(5).unwrap();
    let (a, b) = (Site::new(0, 0), Site::new(2, -1));
    let start = LabeledPartition::singletons(2, &[a, b]).unwrap();
    let opts = SimOptions {
        merges_enabled: false,
        ..SimOptions::default()
    };
    let t = 0.7;
    let mut rng = stream(14, 0, "difference");
    let mut counts = vec![0.0; torus.site_count()];
    for _ in 0..40_000 {
        let mut sim = SpatialCoalescent::new(&start, torus, "kingman".parse().unwrap(), opts).unwrap();
        let blocks = state_at(&mut sim, t, &mut rng);
        assert_eq!(blocks.len(), 2);
        counts[torus.index(torus.difference(blocks[1].1, blocks[0].1))] += 1.0;
    }
    let law = torus.transient_distribution(torus.difference(b, a), 2.0 * t).unwrap();
    let p = chi_square_against(&counts, &law);
    assert!(p > 0.001, "p = {p}");
}

#[test]
fn kingman_first_merge_is_uniform_over_pairs() {
    let start = UnlabeledPartition::singletons(4).unwrap();
    let cfg = KingmanConfig::new(1.0).unwrap();
    let mut rng = stream(15, 0, "pairs");
    let mut counts = BTreeMap::new();
    for _ in 0..30_000 {
        let log = simulate_kingman(&start, cfg, &mut rng).unwrap();
        let first = log
            .events
            .iter()
            .find_map(|e| match &e.kind {
                EventKind::Merge { blocks, .. } => Some(blocks.clone()),
                _ => None,
            })
            .unwrap();
        assert_eq!(first.len(), 2);
        *counts.entry(first).or_insert(0.0) += 1.0;
    }
    assert_eq!(counts.len(), 6);
    let observed: Vec<f64> = counts.values().copied().collect();
    let p = chi_square_against(&observed, &[1.0 / 6.0; 6]);
    assert!(p > 0.001, "p = {p}");
}
