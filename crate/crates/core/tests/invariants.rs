use proptest::prelude::*;
use torus_coalescent::coalescent::EventLog;
use torus_coalescent::mutation::{run_infinite_alleles, MutationConfig};
use torus_coalescent::partition::partition_metric;
use torus_coalescent::rng::stream;
use torus_coalescent::{LabeledPartition, Mechanism, SimOptions, Site, SpatialCoalescent, Torus};

// Random labelled partition of [n] on a side-5 torus: a block assignment
// per element plus a label per block.
fn labeled(max_n: u32) -> impl Strategy<Value = LabeledPartition> {
    (1..=max_n).prop_flat_map(labeled_of)
}

fn labeled_of(n: u32) -> impl Strategy<Value = LabeledPartition> {
    (
        prop::collection::vec(0..n as usize, n as usize),
        prop::collection::vec((-2i32..=2, -2i32..=2), n as usize),
    )
        .prop_map(move |(assign, sites)| {
            let mut blocks: Vec<Vec<u32>> = vec![Vec::new(); n as usize];
            for (e, &b) in assign.iter().enumerate() {
                blocks[b].push(e as u32 + 1);
            }
            let entries = blocks
                .into_iter()
                .zip(sites)
                .filter(|(b, _)| !b.is_empty())
                .map(|(b, (x, y))| (b, Site::new(x, y)))
                .collect();
            LabeledPartition::from_entries(n, entries).unwrap()
        })
}

fn mechanism() -> impl Strategy<Value = Mechanism> {
    prop_oneof![Just("kingman"), Just("bs"), Just("crw"), Just("beta:1:1.5"), Just("pointmass:0.5")]
        .prop_map(|s| s.parse().unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn partition_blocks_cover_elements_once(p in labeled(9)) {
        let mut seen: Vec<u32> = p.blocks().iter().flatten().copied().collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (1..=p.n()).collect::<Vec<_>>());
        for (i, b) in p.blocks().iter().enumerate() {
            for &e in b {
                prop_assert_eq!(p.block_of(e), i);
            }
        }
        prop_assert_eq!(p.labels().len(), p.len());
    }

    #[test]
    fn restriction_is_consistent(p in labeled(9), a in 1u32..10, b in 1u32..10) {
        let (small, large) = (a.min(b).min(p.n()), a.max(b).min(p.n()));
        prop_assert_eq!(p.restrict(large).unwrap().restrict(small).unwrap(), p.restrict(small).unwrap());
        prop_assert_eq!(p.restrict(p.n()).unwrap(), p.clone());
    }

    #[test]
    fn merge_drops_block_count(p in labeled(9), pick in prop::collection::btree_set(0usize..9, 2..4)) {
        let idx: Vec<usize> = pick.into_iter().filter(|&i| i < p.len()).collect();
        prop_assume!(idx.len() >= 2);
        let q = p.merge_relaxed(&idx, Site::ORIGIN).unwrap();
        prop_assert_eq!(q.len(), p.len() - idx.len() + 1);
        prop_assert_eq!(q.n(), p.n());
    }

    #[test]
    fn partition_metric_is_a_metric(
        (p, q, r) in (1u32..=6).prop_flat_map(|n| (labeled_of(n), labeled_of(n), labeled_of(n)))
    ) {
        let d = |a: &LabeledPartition, b: &LabeledPartition| partition_metric(a, b).unwrap();
        prop_assert_eq!(d(&p, &p), 0.0);
        prop_assert_eq!(d(&p, &q), d(&q, &p));
        prop_assert!(d(&p, &r) <= d(&p, &q).max(d(&q, &r)));
    }

    #[test]
    fn torus_distance_is_a_translation_invariant_metric(
        half in 0u32..6,
        pts in prop::collection::vec((-20i64..20, -20i64..20), 4),
    ) {
        let t = Torus::with_side(2 * half + 1).unwrap();
        let s: Vec<Site> = pts.iter().map(|&(x, y)| t.wrap(x, y)).collect();
        let (a, b, c, shift) = (s[0], s[1], s[2], s[3]);
        prop_assert_eq!(t.distance(a, a), 0.0);
        prop_assert_eq!(t.distance(a, b), t.distance(b, a));
        prop_assert!(t.distance(a, c) <= t.distance(a, b) + t.distance(b, c) + 1e-12);
        prop_assert!(t.distance(a, b) <= t.diameter() + 1e-12);
        let mv = |p: Site| t.wrap(p.x as i64 + shift.x as i64, p.y as i64 + shift.y as i64);
        prop_assert_eq!(t.distance(mv(a), mv(b)), t.distance(a, b));
    }

    #[test]
    fn spectra_conserve_sample_size(p in labeled(8), mech in mechanism(), seed in any::<u64>()) {
        let torus = Torus::with_side(5).unwrap();
        let mut rng = stream(seed, 0, "spectrum");
        let spectrum = run_infinite_alleles(&p, torus, mech, MutationConfig::new(0.3).unwrap(), &mut rng).unwrap();
        prop_assert!(spectrum.is_conserved());
        prop_assert_eq!(spectrum.weighted_total(), p.n() as u64);
    }

    #[test]
    fn runs_are_reproducible_and_replay_to_the_terminal_state(
        p in labeled(7), mech in mechanism(), seed in any::<u64>()
    ) {
        let torus = Torus::with_side(5).unwrap();
        let run = || {
            let mut sim = SpatialCoalescent::new(&p, torus, mech.clone(), SimOptions::default()).unwrap();
            let mut rng = stream(seed, 3, "replay");
            sim.run_until(|s| s.block_count() <= 1, &mut rng).unwrap()
        };
        let log = run();
        prop_assert_eq!(&log, &run());
        prop_assert_eq!(log.replay().unwrap(), log.terminal.clone());
        let mut buf = Vec::new();
        log.write_jsonl(&mut buf).unwrap();
        let back = EventLog::read_jsonl(buf.as_slice()).unwrap();
        prop_assert_eq!(back.replay().unwrap(), log.terminal.clone());
        prop_assert_eq!(back.events.len(), log.events.len());
    }
}
