//! Acceptance checks, grouped into suites. Each check reports what it
//! observed and the tolerance it was held to.

use std::f64::consts::PI;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::cannings::{pair_coalescence_prob, moment_diagnostics, trace_genealogy, CanningsModel, Method, OffspringLaw};
use crate::coalescent::{EventKind, SimOptions, SpatialCoalescent, StepOutcome};
use crate::error::Result;
use crate::experiments::{run_qq, run_spectrum, ExperimentConfig, Layout, SpectrumRun};
use crate::kingman::{ewens_expected_spectrum, kingman_tree_length, simulate_kingman, EwensMethod, KingmanConfig};
use crate::lambda::{LambdaMeasure, Mechanism};
use crate::mutation::{mean_spectrum, Spectrum};
use crate::oracles::{kingman_mean_tmrca, kingman_mean_tree_length, PairChain};
use crate::parallel::map_replicates;
use crate::partition::{LabeledPartition, UnlabeledPartition};
use crate::rng::stream;
use crate::stats::{binomial_z, ks_exponential, l1_distance, mean_stderr};
use crate::torus::{Site, Torus};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// Failed a statistical check at reduced replicate counts.
    Flagged,
    /// Informational line, not a check.
    Note,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub observed: f64,
    pub tolerance: String,
    pub status: Status,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Flagged => "FLAG",
            Status::Note => "NOTE",
        };
        write!(f, "{tag} {}: observed {:.6} ({})", self.name, self.observed, self.tolerance)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Exact,
    Statistical,
    Cannings,
}

impl std::str::FromStr for Suite {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Suite::Exact),
            "statistical" => Ok(Suite::Statistical),
            "cannings" => Ok(Suite::Cannings),
            _ => Err(crate::error::config_err("suite", format!("unknown suite `{s}`"))),
        }
    }
}

/// Shared settings and tallies for one validation pass.
#[derive(Debug)]
pub struct Validator {
    /// Replicate counts are divided by this; statistical misses then only
    /// raise flags.
    pub reduce: u64,
    pub workers: Option<usize>,
    pub seed: u64,
    spectra: AtomicU64,
    violations: AtomicU64,
}

impl Validator {
    pub fn new(reduce: u64, workers: Option<usize>, seed: u64) -> Self {
        Validator {
            reduce: reduce.max(1),
            workers,
            seed,
            spectra: AtomicU64::new(0),
            violations: AtomicU64::new(0),
        }
    }

    fn reps(&self, full: u64) -> u64 {
        (full / self.reduce).max(20.min(full))
    }

    fn check(&self, name: impl Into<String>, observed: f64, tolerance: impl Into<String>, pass: bool, statistical: bool) -> CheckResult {
        let status = match (pass, statistical && self.reduce > 1) {
            (true, _) => Status::Pass,
            (false, true) => Status::Flagged,
            (false, false) => Status::Fail,
        };
        CheckResult {
            name: name.into(),
            observed,
            tolerance: tolerance.into(),
            status,
        }
    }

    fn note(&self, name: impl Into<String>, observed: f64, text: impl Into<String>) -> CheckResult {
        CheckResult {
            name: name.into(),
            observed,
            tolerance: text.into(),
            status: Status::Note,
        }
    }

    fn tally(&self, spectra: &[Spectrum]) {
        self.spectra.fetch_add(spectra.len() as u64, Ordering::Relaxed);
        let bad = spectra.iter().filter(|s| !s.is_conserved()).count() as u64;
        self.violations.fetch_add(bad, Ordering::Relaxed);
    }

    fn tally_run(&self, run: &SpectrumRun) {
        for s in &run.summaries {
            self.spectra.fetch_add(s.spectrum.replicates as u64, Ordering::Relaxed);
            self.violations.fetch_add(s.conservation_violations, Ordering::Relaxed);
        }
    }

    pub fn run_suite(&self, suite: Suite) -> Result<Vec<CheckResult>> {
        let mut out = Vec::new();
        match suite {
            Suite::Exact => {
                out.extend(self.pair_chain()?);
                out.extend(self.coalesce_before_part()?);
                out.extend(self.kingman_reference()?);
            }
            Suite::Statistical => {
                out.extend(self.pair_meeting_law()?);
                out.extend(self.first_meeting_rate()?);
                out.extend(self.sparse_spectra()?);
                out.extend(self.tree_length_qq()?);
                out.extend(self.hybrid()?);
            }
            Suite::Cannings => out.extend(self.cannings()?),
        }
        Ok(out)
    }

    /// Criterion 1: Monte Carlo against the exact pair chain on `T^1`.
    pub fn pair_chain(&self) -> Result<Vec<CheckResult>> {
        let torus = Torus::new(1);
        let (a, b) = (Site::ORIGIN, Site::new(1, 1));
        let chain = PairChain::new(torus, 1.0)?;
        let start = LabeledPartition::singletons(2, &[a, b])?;
        let m = self.reps(100_000);
        let times = map_replicates(m, self.workers, |i| {
            let mut rng = stream(self.seed, i, "pair-chain");
            let mut sim = SpatialCoalescent::new(&start, torus, Mechanism::Lambda(LambdaMeasure::kingman()), SimOptions::default())?;
            while sim.block_count() > 1 {
                sim.step(&mut rng)?;
            }
            Ok(sim.clock())
        })
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
        let exact = chain.mean_coalescence_time(a, b)?;
        let (mean, se) = mean_stderr(&times);
        let mut out = vec![self.check(
            "c1 pair chain E[tau_c]",
            mean,
            format!("exact {exact:.6}, within 3 se = {:.6}", 3.0 * se),
            (mean - exact).abs() <= 3.0 * se,
            true,
        )];
        for t in [1.0, 5.0, 10.0] {
            let p = chain.merged_by(a, b, t);
            let hits = times.iter().filter(|&&x| x <= t).count() as u64;
            let (freq, z) = binomial_z(hits, m, p);
            out.push(self.check(
                format!("c1 pair chain P(merged by {t})"),
                freq,
                format!("exact {p:.6}, |z| = {:.2} <= 3", z.abs()),
                z.abs() <= 3.0,
                true,
            ));
        }
        Ok(out)
    }

    /// Criterion 2: co-located Kingman pair merges before parting w.p. 1/3.
    pub fn coalesce_before_part(&self) -> Result<Vec<CheckResult>> {
        let torus = Torus::new(49);
        let start = LabeledPartition::singletons(2, &[Site::ORIGIN; 2])?;
        let m = self.reps(100_000);
        let firsts = map_replicates(m, self.workers, |i| {
            let mut rng = stream(self.seed, i, "episode");
            let mut sim = SpatialCoalescent::new(&start, torus, Mechanism::Lambda(LambdaMeasure::kingman()), SimOptions::default())?;
            match sim.step(&mut rng)? {
                StepOutcome::Event { dwell, event } => Ok((matches!(event.kind, EventKind::Merge { .. }), dwell)),
                _ => unreachable!("two blocks always have an event"),
            }
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let merges = firsts.iter().filter(|(m, _)| *m).count() as u64;
        let (freq, z) = binomial_z(merges, m, 1.0 / 3.0);
        let dwell: Vec<f64> = firsts.iter().filter(|(m, _)| *m).map(|(_, d)| *d).collect();
        let ks = ks_exponential(&dwell, 3.0);
        Ok(vec![
            self.check(
                "c2 coalesce-before-part frequency",
                freq,
                format!("1/3 within 4 sd, |z| = {:.2}", z.abs()),
                z.abs() <= 4.0,
                true,
            ),
            self.check(
                "c2 co-located dwell before merging ~ Exp(3)",
                ks,
                "KS statistic < 0.02",
                ks < 0.02,
                true,
            ),
        ])
    }

    /// Criterion 3: pair meeting time over `s_L` against `Exp(pi)`.
    pub fn pair_meeting_law(&self) -> Result<Vec<CheckResult>> {
        let torus = Torus::with_side(99)?;
        let s = torus.time_scale()?;
        let start = LabeledPartition::singletons(2, &[Site::ORIGIN, Site::new(33, 0)])?;
        let m = self.reps(10_000);
        let taus = map_replicates(m, self.workers, |i| {
            let mut rng = stream(self.seed, i, "pair-meeting");
            let mut sim = SpatialCoalescent::new(&start, torus, Mechanism::Instantaneous, SimOptions::default())?;
            while sim.block_count() > 1 {
                sim.step(&mut rng)?;
            }
            Ok(sim.clock() / s)
        })
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
        let ks = ks_exponential(&taus, PI);
        Ok(vec![self.check(
            "c3 CRW pair meeting time / s_L vs Exp(pi), L'=99, distance 33",
            ks,
            "KS distance <= 0.08",
            ks <= 0.08,
            true,
        )])
    }

    /// Criterion 4: first meeting among 9 far-apart blocks at rate `36 pi`.
    pub fn first_meeting_rate(&self) -> Result<Vec<CheckResult>> {
        let torus = Torus::with_side(99)?;
        let s = torus.time_scale()?;
        let start = Layout::GridFar.sample(&torus)?;
        let m = self.reps(10_000);
        let t1 = map_replicates(m, self.workers, |i| {
            let mut rng = stream(self.seed, i, "first-meeting");
            let mut sim = SpatialCoalescent::new(&start, torus, Mechanism::Instantaneous, SimOptions::default())?;
            while sim.block_count() > 8 {
                sim.step(&mut rng)?;
            }
            Ok(sim.clock() / s)
        })
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
        let (mean, _) = mean_stderr(&t1);
        let target = 1.0 / (36.0 * PI);
        let rel = (mean - target).abs() / target;
        Ok(vec![self.check(
            "c4 mean first meeting time / s_L, 9 far blocks, L'=99",
            mean,
            format!("target {target:.6}, relative error {rel:.3} <= 0.15"),
            rel <= 0.15,
            true,
        )])
    }

    /// Criterion 5: qualitative shape of the sparse-sample spectra.
    pub fn sparse_spectra(&self) -> Result<Vec<CheckResult>> {
        let mut out = Vec::new();
        for side in [99, 197] {
            let cfg = ExperimentConfig {
                side_length: side,
                layout: Layout::GridFar,
                mechanisms: vec!["crw".into(), "bs".into(), "kingman".into()],
                replicates: self.reps(100),
                seed: self.seed,
                workers: self.workers,
                ..ExperimentConfig::default()
            };
            let run = run_spectrum(&cfg)?;
            self.tally_run(&run);
            let get = |name: &str| run.summary(name).expect("mechanism was requested");
            let (crw, bs, sc) = (get("crw"), get("bs"), get("kingman"));
            let reference_a1 = run.reference[0];
            for (label, s) in [("BS", bs), ("structured", sc)] {
                out.push(self.check(
                    format!("c5 L'={side} {label} mean a_1 above Kingman reference"),
                    s.spectrum.mean[0],
                    format!("> {reference_a1:.4}"),
                    s.spectrum.mean[0] > reference_a1,
                    true,
                ));
            }
            out.push(self.check(
                format!("c5 L'={side} CRW closer to the reference than BS (l1)"),
                crw.l1_to_reference,
                format!("< BS l1 {:.4}", bs.l1_to_reference),
                crw.l1_to_reference < bs.l1_to_reference,
                true,
            ));
            let diff = l1_distance(&bs.spectrum.mean, &sc.spectrum.mean);
            let noise: f64 = bs
                .spectrum
                .stderr
                .iter()
                .zip(&sc.spectrum.stderr)
                .map(|(a, b)| (a * a + b * b).sqrt())
                .sum();
            out.push(self.check(
                format!("c5 L'={side} BS and structured spectra agree (l1)"),
                diff,
                format!("<= 2 x noise = {:.4}", 2.0 * noise),
                diff <= 2.0 * noise,
                true,
            ));
        }
        Ok(out)
    }

    /// Criterion 6: rescaled tree lengths against the Kingman reference.
    pub fn tree_length_qq(&self) -> Result<Vec<CheckResult>> {
        let cfg = |mech: &str| ExperimentConfig {
            side_length: 197,
            layout: Layout::GridFar,
            mechanisms: vec![mech.into()],
            replicates: self.reps(1000),
            seed: self.seed,
            workers: self.workers,
            ..ExperimentConfig::default()
        };
        let bs = run_qq(&cfg("bs"))?;
        let crw = run_qq(&cfg("crw"))?;
        Ok(vec![
            self.check(
                "c6 L'=197 BS q-q pairs above the diagonal",
                bs.fraction_above(),
                ">= 0.90",
                bs.fraction_above() >= 0.9,
                true,
            ),
            self.check(
                "c6 L'=197 CRW q-q median relative deviation",
                crw.median_relative_deviation(),
                "< 0.10",
                crw.median_relative_deviation() < 0.1,
                true,
            ),
        ])
    }

    /// Criteria 7 and 8: hybrid handoff counts and speedup.
    pub fn hybrid(&self) -> Result<Vec<CheckResult>> {
        let mut out = Vec::new();
        let mut means = Vec::new();
        for (layout, lo, hi, label) in [
            (Layout::GridClose, 2.1, 3.1, "close"),
            (Layout::SameSite(9), 3.5, 4.5, "same-site"),
        ] {
            let cfg = ExperimentConfig {
                side_length: 99,
                layout,
                mechanisms: vec!["bs".into()],
                replicates: self.reps(500),
                seed: self.seed,
                threshold: Some(8.33),
                workers: self.workers,
                ..ExperimentConfig::default()
            };
            let run = run_spectrum(&cfg)?;
            self.tally_run(&run);
            let handoff = run
                .summary("bs+hybrid")
                .and_then(|s| s.handoff.clone())
                .expect("threshold set");
            means.push(handoff.mean_blocks);
            out.push(self.check(
                format!("c7 mean handoff blocks, {label} start"),
                handoff.mean_blocks,
                format!("in [{lo}, {hi}]"),
                (lo..=hi).contains(&handoff.mean_blocks),
                true,
            ));
            if label == "same-site" {
                let secs = |name: &str| {
                    run.seconds_per_replicate
                        .iter()
                        .find(|(m, _)| m == name)
                        .map(|(_, s)| *s)
                        .expect("timed")
                };
                let speedup = secs("bs") / secs("bs+hybrid");
                out.push(self.check(
                    "c8 hybrid speedup, same-site start, L'=99",
                    speedup,
                    ">= 10",
                    speedup >= 10.0,
                    false,
                ));
            }
        }
        out.insert(
            2,
            self.note(
                "c7 handoff means with the two layouts swapped",
                means[0],
                format!("close {:.3} vs 4.0, same-site {:.3} vs 2.6", means[0], means[1]),
            ),
        );
        Ok(out)
    }

    /// Criterion 9: the non-spatial reference itself.
    pub fn kingman_reference(&self) -> Result<Vec<CheckResult>> {
        let mut out = Vec::new();
        let n = 9u32;
        let cfg = KingmanConfig::new(1.0)?;
        let start = UnlabeledPartition::singletons(n)?;
        let m = self.reps(10_000);
        let waits = map_replicates(m, self.workers, |i| {
            let mut rng = stream(self.seed, i, "kingman-waits");
            let log = simulate_kingman(&start, cfg, &mut rng)?;
            let mut prev = 0.0;
            Ok(log
                .events
                .iter()
                .map(|e| {
                    let w = e.time - prev;
                    prev = e.time;
                    w
                })
                .collect::<Vec<f64>>())
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let worst = (1..n)
            .map(|k| {
                let b = (n - k + 1) as f64;
                let sample: Vec<f64> = waits.iter().map(|w| w[k as usize - 1]).collect();
                ks_exponential(&sample, b * (b - 1.0) / 2.0)
            })
            .fold(0.0, f64::max);
        out.push(self.check("c9 Kingman waiting times U_k, largest KS statistic", worst, "< 0.02", worst < 0.02, true));

        let m = self.reps(100_000);
        let lengths = map_replicates(m, self.workers, |i| {
            kingman_tree_length(n, 1.0, &mut stream(self.seed, i, "kingman-length"))
        });
        let (mean, _) = mean_stderr(&lengths);
        let target = kingman_mean_tree_length(n);
        let rel = (mean - target).abs() / target;
        out.push(self.check(
            "c9 Kingman mean tree length, n=9",
            mean,
            format!("2 H_8 = {target:.4}, relative error {rel:.4} <= 0.02"),
            rel <= 0.02,
            true,
        ));

        for (n, theta) in [(5u32, 1.0), (9, 2.0)] {
            let formula = ewens_expected_spectrum(n, theta, EwensMethod::Formula)?;
            let mc = map_replicates(self.reps(100_000), self.workers, |i| {
                let mut rng = stream(self.seed, i, "ewens-oracle");
                let mut s = Spectrum::empty(n);
                crate::kingman::kingman_killing(vec![1; n as usize], 1.0, theta / 2.0, &mut s, &mut rng);
                s
            });
            self.tally(&mc);
            let mc = mean_spectrum(&mc)?;
            let worst = formula
                .iter()
                .zip(mc.mean.iter().zip(&mc.stderr))
                .map(|(f, (m, se))| if *se > 0.0 { (f - m).abs() / se } else if (f - m).abs() < 1e-3 { 0.0 } else { f64::INFINITY })
                .fold(0.0, f64::max);
            out.push(self.check(
                format!("c9 Ewens formula vs Monte Carlo, n={n}, theta={theta}"),
                worst,
                "largest |formula - mc| / se <= 3",
                worst <= 3.0,
                true,
            ));
        }
        let a2 = ewens_expected_spectrum(2, 2.0, EwensMethod::Formula)?[1];
        out.push(self.check("c9 E[a_2] at n=2, theta=2", a2, "1/3 within 1e-12", (a2 - 1.0 / 3.0).abs() < 1e-12, false));
        Ok(out)
    }

    /// Criterion 10: Cannings diagnostics.
    pub fn cannings(&self) -> Result<Vec<CheckResult>> {
        let mut out = Vec::new();
        let trials = self.reps(1_000_000);
        for (law, name) in [(OffspringLaw::WrightFisher, "wright-fisher"), (OffspringLaw::Moran, "moran")] {
            for n in [10usize, 100] {
                let mut rng = stream(self.seed, n as u64, name);
                let exact = pair_coalescence_prob(law, n, Method::Analytic, &mut rng)?.value;
                let mc = pair_coalescence_prob(law, n, Method::MonteCarlo { trials }, &mut rng)?;
                let hits = (mc.value * trials as f64).round() as u64;
                let (_, z) = binomial_z(hits, trials, exact);
                out.push(self.check(
                    format!("c10 {name} c^N, N={n}"),
                    mc.value,
                    format!("exact {exact:.6}, |z| = {:.2} <= 4", z.abs()),
                    z.abs() <= 4.0,
                    true,
                ));
            }
        }
        let mut rng = stream(self.seed, 0, "moran-moments");
        let rows = moment_diagnostics(OffspringLaw::Moran, &[10, 50, 100], 3, self.reps(20_000), &mut rng)?;
        let worst = rows.iter().filter(|r| r.k == 3).map(|r| r.estimate.abs()).fold(0.0, f64::max);
        let exact_zero = [10, 50, 100].iter().all(|&n| OffspringLaw::Moran.factorial_moment(n, 3) == 0.0);
        out.push(self.check("c10 moran phi_1(3)", worst, "identically 0", worst == 0.0 && exact_zero, false));

        let triple = |law: OffspringLaw, n: usize, tag: &str| -> Result<(f64, f64)> {
            let model = CanningsModel::single_site(n, law)?;
            let sample = LabeledPartition::singletons(3, &[Site::ORIGIN; 3])?;
            let m = self.reps(4000);
            let hits = map_replicates(m, self.workers, |i| {
                let mut rng = stream(self.seed, i, tag);
                let g = trace_genealogy(&model, &sample, u64::MAX, &mut rng)?;
                Ok(g.merge_generations().first().map(|&(_, before, after)| before - after == 2).unwrap_or(false))
            })
            .into_iter()
            .collect::<Result<Vec<bool>>>()?;
            let p = hits.iter().filter(|&&h| h).count() as f64 / m as f64;
            Ok((p, (p * (1.0 - p) / m as f64).sqrt()))
        };
        let skew = OffspringLaw::skewed(0.5, 0.5)?;
        let (p100, se100) = triple(skew, 100, "triple-skew-100")?;
        let (p200, se200) = triple(skew, 200, "triple-skew-200")?;
        let (w100, _) = triple(OffspringLaw::WrightFisher, 100, "triple-wf-100")?;
        let (w200, _) = triple(OffspringLaw::WrightFisher, 200, "triple-wf-200")?;
        out.push(self.check("c10 skewed(0.5,0.5) triple merger share, N=100", p100, ">= 0.1", p100 >= 0.1, true));
        out.push(self.check("c10 skewed(0.5,0.5) triple merger share, N=200", p200, ">= 0.1", p200 >= 0.1, true));
        let z = (p100 - p200).abs() / (se100 * se100 + se200 * se200).sqrt();
        out.push(self.check("c10 skewed triple share stable in N", z, "|p100 - p200| / se <= 4", z <= 4.0, true));
        out.push(self.note("c10 wright-fisher triple merger share, N=100", w100, "vanishing"));
        out.push(self.check("c10 wright-fisher triple merger share, N=200", w200, "< 0.01", w200 < 0.01, true));

        let model = CanningsModel::single_site(200, OffspringLaw::WrightFisher)?;
        let sample = LabeledPartition::singletons(5, &[Site::ORIGIN; 5])?;
        let tm = map_replicates(self.reps(4000), self.workers, |i| {
            let mut rng = stream(self.seed, i, "wf-tmrca");
            let g = trace_genealogy(&model, &sample, u64::MAX, &mut rng)?;
            Ok(g.mrca_generation.expect("unbounded trace completes") as f64 / 200.0)
        })
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
        let (mean, _) = mean_stderr(&tm);
        let target = kingman_mean_tmrca(5);
        let rel = (mean - target).abs() / target;
        out.push(self.check(
            "c10 wright-fisher T_MRCA / N, n=5, N=200",
            mean,
            format!("{target} within 10% (relative error {rel:.3})"),
            rel <= 0.1,
            true,
        ));
        Ok(out)
    }

    /// Criterion 11: conservation tally and worker-count independence.
    pub fn conservation_and_determinism(&self) -> Result<Vec<CheckResult>> {
        let base = ExperimentConfig {
            side_length: 21,
            layout: Layout::GridClose,
            mechanisms: vec!["crw".into(), "bs".into(), "kingman".into(), "beta:1.5:0.5".into()],
            replicates: 40,
            seed: self.seed,
            threshold: Some(3.0),
            ..ExperimentConfig::default()
        };
        let one = run_spectrum(&ExperimentConfig { workers: Some(1), ..base.clone() })?;
        let many = run_spectrum(&ExperimentConfig { workers: Some(4), ..base.clone() })?;
        self.tally_run(&one);
        self.tally_run(&many);
        let same = one.spectrum_csv() == many.spectrum_csv() && one.summary_json(&base) == many.summary_json(&base);
        let qq_base = ExperimentConfig { mechanisms: vec!["bs".into()], threshold: None, ..base.clone() };
        let qq_one = run_qq(&ExperimentConfig { workers: Some(1), ..qq_base.clone() })?;
        let qq_many = run_qq(&ExperimentConfig { workers: Some(3), ..qq_base })?;
        let same_qq = qq_one.qq_csv() == qq_many.qq_csv();
        let checked = self.spectra.load(Ordering::Relaxed);
        let bad = self.violations.load(Ordering::Relaxed);
        Ok(vec![
            self.check(
                "c11 conservation sum k a_k = n",
                bad as f64,
                format!("zero violations over {checked} spectra"),
                bad == 0,
                false,
            ),
            self.check(
                "c11 byte-identical outputs at 1 and 4 workers",
                (same && same_qq) as u8 as f64,
                "1 = identical",
                same && same_qq,
                false,
            ),
        ])
    }
}

/// Runs suites in order, then the conservation and determinism checks,
/// which cover every spectrum produced before them.
pub fn run_all(validator: &Validator, suites: &[Suite]) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for &s in suites {
        out.extend(validator.run_suite(s)?);
    }
    out.extend(validator.conservation_and_determinism()?);
    Ok(out)
}

pub fn all_passed(results: &[CheckResult]) -> bool {
    results.iter().all(|r| r.status != Status::Fail)
}
