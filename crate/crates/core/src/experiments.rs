//! Batch experiments: mean allele frequency spectra and q-q tree length
//! data, written as CSV and JSON with deterministic content.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coalescent::{SimOptions, SpatialCoalescent};
use crate::error::{config_err, Error, Result};
use crate::kingman::{ewens_expected_spectrum, hybrid_run, kingman_tree_length, qq_data, EwensMethod};
use crate::lambda::Mechanism;
use crate::mutation::{default_mutation_rate, mean_spectrum, run_infinite_alleles, tree_length_to_mrca, MeanSpectrum, MutationConfig, Spectrum};
use crate::parallel::map_replicates;
use crate::partition::LabeledPartition;
use crate::rng::stream;
use crate::stats::{l1_distance, mean_stderr, std_dev};
use crate::torus::{Site, Torus};

/// Column name of the non-spatial reference in q-q runs.
pub const REFERENCE: &str = "reference";

#[derive(Clone, Debug, PartialEq)]
pub enum Layout {
    /// 3x3 grid with spacing a third of the side length.
    GridFar,
    /// 3x3 grid with spacing 1.
    GridClose,
    /// `n` individuals on the origin.
    SameSite(u32),
    Sites(Vec<Site>),
}

impl Layout {
    pub fn sites(&self, torus: &Torus) -> Vec<Site> {
        let grid = |offsets: [i64; 3]| {
            let mut v = Vec::with_capacity(9);
            for &x in &offsets {
                for &y in &offsets {
                    v.push(torus.wrap(x, y));
                }
            }
            v
        };
        match self {
            Layout::GridFar => {
                let side = torus.side() as i64;
                grid([0, side / 3, 2 * side / 3])
            }
            Layout::GridClose => grid([-1, 0, 1]),
            Layout::SameSite(n) => vec![Site::ORIGIN; *n as usize],
            Layout::Sites(s) => s.clone(),
        }
    }

    pub fn sample(&self, torus: &Torus) -> Result<LabeledPartition> {
        let sites = self.sites(torus);
        if let Some(bad) = sites.iter().find(|s| !torus.contains(**s)) {
            return Err(config_err("layout", format!("site {bad} lies outside the torus")));
        }
        LabeledPartition::singletons(sites.len() as u32, &sites)
            .map_err(|e| config_err("layout", e.to_string()))
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Layout::GridFar => f.write_str("grid3x3-far"),
            Layout::GridClose => f.write_str("grid3x3-close"),
            Layout::SameSite(n) => write!(f, "same-site:{n}"),
            Layout::Sites(s) => {
                f.write_str("sites:")?;
                for (i, site) in s.iter().enumerate() {
                    if i > 0 {
                        f.write_str(";")?;
                    }
                    write!(f, "{site}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for Layout {
    type Err = Error;

    /// `grid3x3-far`, `grid3x3-close`, `same-site[:N]` or
    /// `sites:(x,y);(x,y);...`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "grid3x3-far" => return Ok(Layout::GridFar),
            "grid3x3-close" => return Ok(Layout::GridClose),
            "same-site" => return Ok(Layout::SameSite(9)),
            _ => {}
        }
        if let Some(n) = s.strip_prefix("same-site:") {
            let n: u32 = n
                .parse()
                .map_err(|_| config_err("layout", format!("bad sample size `{n}`")))?;
            if n == 0 {
                return Err(config_err("layout", "sample size must be positive"));
            }
            return Ok(Layout::SameSite(n));
        }
        if let Some(list) = s.strip_prefix("sites:") {
            let sites = list
                .split(';')
                .map(|p| p.trim().parse::<Site>().map_err(|e| config_err("layout", e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            if sites.is_empty() {
                return Err(config_err("layout", "empty site list"));
            }
            return Ok(Layout::Sites(sites));
        }
        Err(config_err("layout", format!("unknown layout `{s}`")))
    }
}

impl Serialize for Layout {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Layout {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub side_length: u32,
    pub layout: Layout,
    pub mechanisms: Vec<String>,
    pub replicates: u64,
    pub seed: u64,
    /// Per-line mutation rate; `pi / s_L` when absent.
    #[serde(default)]
    pub mutation_rate: Option<f64>,
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default = "default_out", skip_serializing)]
    pub out: PathBuf,
    #[serde(default, skip_serializing)]
    pub workers: Option<usize>,
    /// Write the event log of replicate 0 of each mechanism.
    #[serde(default, skip_serializing)]
    pub emit_events: bool,
    /// Write every replicate's spectrum as JSON lines.
    #[serde(default, skip_serializing)]
    pub emit_spectra: bool,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            side_length: 99,
            layout: Layout::GridFar,
            mechanisms: vec!["crw".into(), "bs".into(), "kingman".into()],
            replicates: 100,
            seed: 1,
            mutation_rate: None,
            threshold: None,
            out: default_out(),
            workers: None,
            emit_events: false,
            emit_spectra: false,
        }
    }
}

/// A validated configuration.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub torus: Torus,
    pub sample: LabeledPartition,
    pub mechanisms: Vec<(String, Option<Mechanism>)>,
    pub mutation: MutationConfig,
    pub time_scale: f64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| config_err("config", e.to_string()))
    }

    /// Checks every field; errors name the offending one. The reference
    /// column is only accepted when `allow_reference` is set.
    pub fn resolve(&self, allow_reference: bool) -> Result<Resolved> {
        if self.side_length < 3 || self.side_length.is_multiple_of(2) {
            return Err(config_err(
                "side-length",
                format!("side length must be odd and at least 3, got {}", self.side_length),
            ));
        }
        let torus = Torus::with_side(self.side_length).map_err(|e| config_err("side-length", e.to_string()))?;
        if self.replicates == 0 {
            return Err(config_err("replicates", "need at least one replicate"));
        }
        if self.mechanisms.is_empty() {
            return Err(config_err("mechanism", "no mechanism given"));
        }
        let mechanisms = self
            .mechanisms
            .iter()
            .map(|m| {
                if allow_reference && m == REFERENCE {
                    Ok((m.clone(), None))
                } else {
                    m.parse::<Mechanism>()
                        .map(|mech| (m.clone(), Some(mech)))
                        .map_err(|e| config_err("mechanism", e.to_string()))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let sample = self.layout.sample(&torus)?;
        let time_scale = torus.time_scale().map_err(|e| config_err("side-length", e.to_string()))?;
        let rate = match self.mutation_rate {
            Some(r) => r,
            None => default_mutation_rate(&torus)?,
        };
        let mutation = MutationConfig::new(rate).map_err(|e| config_err("mutation-rate", e.to_string()))?;
        if let Some(t) = self.threshold {
            if !(t > 0.0 && t <= torus.diameter()) {
                return Err(config_err(
                    "threshold",
                    format!("threshold must lie in (0, {:.3}]", torus.diameter()),
                ));
            }
        }
        Ok(Resolved {
            torus,
            sample,
            mechanisms,
            mutation,
            time_scale,
        })
    }

    /// Short hash of the result-determining fields.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serialises");
        let digest = Sha256::digest(canonical.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Scaled mutation parameter of the matched Kingman reference:
/// `2 mu / (pi / s_L)`.
pub fn matched_theta(mutation_rate: f64, time_scale: f64) -> f64 {
    2.0 * mutation_rate * time_scale / std::f64::consts::PI
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HandoffSummary {
    pub mean_blocks: f64,
    pub std_blocks: f64,
    pub fraction_used: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MechanismSummary {
    pub mechanism: String,
    pub spectrum: MeanSpectrum,
    pub l1_to_reference: f64,
    pub conservation_violations: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub handoff: Option<HandoffSummary>,
}

/// Everything produced by a spectrum run. Wall-clock times are kept apart
/// so the rest is reproducible byte for byte.
#[derive(Clone, Debug)]
pub struct SpectrumRun {
    pub config_hash: String,
    pub theta: f64,
    pub reference: Vec<f64>,
    pub summaries: Vec<MechanismSummary>,
    /// Mean wall-clock seconds per replicate, per summary row.
    pub seconds_per_replicate: Vec<(String, f64)>,
    pub events: Vec<(String, String)>,
    /// Per-row JSON lines `{"replicate": i, "counts": [a_1, ..]}`.
    pub raw_spectra: Vec<(String, String)>,
}

impl SpectrumRun {
    pub fn summary(&self, name: &str) -> Option<&MechanismSummary> {
        self.summaries.iter().find(|s| s.mechanism == name)
    }

    pub fn spectrum_csv(&self) -> String {
        let mut out = format!("# config-hash: {}\nmechanism,k,mean_a_k,stderr_a_k,replicates\n", self.config_hash);
        for s in &self.summaries {
            for k in 0..s.spectrum.mean.len() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    s.mechanism,
                    k + 1,
                    s.spectrum.mean[k],
                    s.spectrum.stderr[k],
                    s.spectrum.replicates
                );
            }
        }
        for (k, v) in self.reference.iter().enumerate() {
            let _ = writeln!(out, "ewens,{},{},0,0", k + 1, v);
        }
        out
    }

    pub fn summary_json(&self, cfg: &ExperimentConfig) -> String {
        let doc = serde_json::json!({
            "config": cfg,
            "config_hash": self.config_hash,
            "theta": self.theta,
            "ewens_reference": self.reference,
            "mechanisms": self.summaries,
        });
        serde_json::to_string_pretty(&doc).expect("summary serialises") + "\n"
    }

    pub fn timing_json(&self) -> String {
        let rows: Vec<_> = self
            .seconds_per_replicate
            .iter()
            .map(|(m, s)| serde_json::json!({"mechanism": m, "seconds_per_replicate": s}))
            .collect();
        serde_json::to_string_pretty(&serde_json::json!({
            "config_hash": self.config_hash,
            "timing": rows,
        }))
        .expect("timing serialises")
            + "\n"
    }
}

fn spectra_jsonl(spectra: &[Spectrum]) -> String {
    let mut out = String::new();
    for (i, s) in spectra.iter().enumerate() {
        let _ = writeln!(out, "{}", serde_json::json!({"replicate": i, "counts": s.counts()}));
    }
    out
}

fn summarize(name: String, spectra: &[Spectrum], reference: &[f64]) -> Result<MechanismSummary> {
    let spectrum = mean_spectrum(spectra)?;
    Ok(MechanismSummary {
        l1_to_reference: l1_distance(&spectrum.mean, reference),
        conservation_violations: spectra.iter().filter(|s| !s.is_conserved()).count() as u64,
        mechanism: name,
        spectrum,
        handoff: None,
    })
}

/// Runs all replicates of the spectrum experiment without touching disk.
pub fn run_spectrum(cfg: &ExperimentConfig) -> Result<SpectrumRun> {
    let r = cfg.resolve(false)?;
    let theta = matched_theta(r.mutation.rate, r.time_scale);
    let reference = ewens_expected_spectrum(r.sample.n(), theta, EwensMethod::Formula)?;
    let mut summaries = Vec::new();
    let mut timing = Vec::new();
    let mut events = Vec::new();
    let mut raw_spectra = Vec::new();
    for (name, mech) in &r.mechanisms {
        let mech = mech.clone().expect("spectrum mechanisms are concrete");
        let results = map_replicates(cfg.replicates, cfg.workers, |i| {
            let mut rng = stream(cfg.seed, i, name);
            let start = Instant::now();
            let s = run_infinite_alleles(&r.sample, r.torus, mech.clone(), r.mutation, &mut rng);
            s.map(|s| (s, start.elapsed().as_secs_f64()))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let (spectra, secs): (Vec<_>, Vec<_>) = results.into_iter().unzip();
        timing.push((name.clone(), secs.iter().sum::<f64>() / secs.len() as f64));
        summaries.push(summarize(name.clone(), &spectra, &reference)?);
        if cfg.emit_spectra {
            raw_spectra.push((name.clone(), spectra_jsonl(&spectra)));
        }
        if cfg.emit_events {
            let mut rng = stream(cfg.seed, 0, name);
            let mut sim = SpatialCoalescent::new(
                &r.sample,
                r.torus,
                mech.clone(),
                SimOptions::with_kill_rate(r.mutation.rate),
            )?;
            let log = sim.run_until(|s| s.block_count() == 0, &mut rng)?;
            let mut buf = Vec::new();
            log.write_jsonl(&mut buf)?;
            events.push((name.clone(), String::from_utf8(buf).expect("json is utf-8")));
        }
        if let Some(threshold) = cfg.threshold {
            let tag = format!("{name}+hybrid");
            let results = map_replicates(cfg.replicates, cfg.workers, |i| {
                let mut rng = stream(cfg.seed, i, &tag);
                let start = Instant::now();
                hybrid_run(&r.sample, r.torus, mech.clone(), threshold, r.mutation, &mut rng)
                    .map(|o| (o, start.elapsed().as_secs_f64()))
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
            let blocks: Vec<f64> = results.iter().map(|(o, _)| o.handoff_blocks as f64).collect();
            let used = results.iter().filter(|(o, _)| o.used_kingman).count();
            let spectra: Vec<Spectrum> = results.iter().map(|(o, _)| o.spectrum.clone()).collect();
            let secs: f64 = results.iter().map(|(_, s)| s).sum::<f64>() / results.len() as f64;
            let mut summary = summarize(tag.clone(), &spectra, &reference)?;
            if cfg.emit_spectra {
                raw_spectra.push((tag.clone(), spectra_jsonl(&spectra)));
            }
            summary.handoff = Some(HandoffSummary {
                mean_blocks: mean_stderr(&blocks).0,
                std_blocks: std_dev(&blocks),
                fraction_used: used as f64 / results.len() as f64,
            });
            summaries.push(summary);
            timing.push((tag, secs));
        }
    }
    Ok(SpectrumRun {
        config_hash: cfg.hash(),
        theta,
        reference,
        summaries,
        seconds_per_replicate: timing,
        events,
        raw_spectra,
    })
}

fn write(dir: &Path, name: &str, content: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, content)?;
    Ok(path)
}

/// Runs the spectrum experiment and writes `spectrum.csv`, `summary.json`
/// and `timing.json`, plus `events-<mechanism>.jsonl` and
/// `spectra-<mechanism>.jsonl` when asked.
pub fn cmd_spectrum(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let run = run_spectrum(cfg)?;
    fs::create_dir_all(&cfg.out)?;
    let mut paths = vec![
        write(&cfg.out, "spectrum.csv", &run.spectrum_csv())?,
        write(&cfg.out, "summary.json", &run.summary_json(cfg))?,
        write(&cfg.out, "timing.json", &run.timing_json())?,
    ];
    let safe = |name: &str| -> String {
        name.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect()
    };
    for (name, text) in &run.events {
        paths.push(write(&cfg.out, &format!("events-{}.jsonl", safe(name)), text)?);
    }
    for (name, text) in &run.raw_spectra {
        paths.push(write(&cfg.out, &format!("spectra-{}.jsonl", safe(name)), text)?);
    }
    Ok(paths)
}

/// Rescaled total tree lengths for one q-q column.
pub fn tree_length_sample(cfg: &ExperimentConfig, r: &Resolved, column: &str, mech: Option<&Mechanism>) -> Result<Vec<f64>> {
    let n = r.sample.n();
    map_replicates(cfg.replicates, cfg.workers, |i| {
        let mut rng = stream(cfg.seed, i, column);
        match mech {
            // Pair rate pi: rate-1 lengths divided by pi.
            None => Ok(kingman_tree_length(n, 1.0, &mut rng) / std::f64::consts::PI),
            Some(m) => Ok(tree_length_to_mrca(&r.sample, r.torus, m.clone(), &mut rng)? / r.time_scale),
        }
    })
    .into_iter()
    .collect()
}

/// Paired quantiles of two columns: the first two mechanisms of `cfg`, the
/// second defaulting to the non-spatial reference.
#[derive(Clone, Debug)]
pub struct QqRun {
    pub config_hash: String,
    pub columns: (String, String),
    pub sample_a: Vec<f64>,
    pub sample_b: Vec<f64>,
    pub pairs: Vec<(f64, f64)>,
}

impl QqRun {
    pub fn qq_csv(&self) -> String {
        let mut out = format!(
            "# config-hash: {} columns: {} vs {}\nquantile_index,sample_a,sample_b\n",
            self.config_hash, self.columns.0, self.columns.1
        );
        for (i, (a, b)) in self.pairs.iter().enumerate() {
            let _ = writeln!(out, "{i},{a},{b}");
        }
        out
    }

    /// Fraction of quantile pairs with `a > b`.
    pub fn fraction_above(&self) -> f64 {
        self.pairs.iter().filter(|(a, b)| a > b).count() as f64 / self.pairs.len() as f64
    }

    /// Median of `|a - b| / b` over quantile pairs.
    pub fn median_relative_deviation(&self) -> f64 {
        let devs: Vec<f64> = self.pairs.iter().map(|(a, b)| (a - b).abs() / b).collect();
        crate::stats::median(&devs)
    }
}

pub fn run_qq(cfg: &ExperimentConfig) -> Result<QqRun> {
    let r = cfg.resolve(true)?;
    if r.mechanisms.len() > 2 {
        return Err(config_err("mechanism", "q-q takes at most two columns"));
    }
    let (a_name, a_mech) = r.mechanisms[0].clone();
    let (b_name, b_mech) = r
        .mechanisms
        .get(1)
        .cloned()
        .unwrap_or_else(|| (REFERENCE.to_string(), None));
    let sample_a = tree_length_sample(cfg, &r, &a_name, a_mech.as_ref())?;
    let sample_b = tree_length_sample(cfg, &r, &b_name, b_mech.as_ref())?;
    let pairs = qq_data(&sample_a, &sample_b)?;
    Ok(QqRun {
        config_hash: cfg.hash(),
        columns: (a_name, b_name),
        sample_a,
        sample_b,
        pairs,
    })
}

/// Runs the q-q experiment and writes `qq.csv`.
pub fn cmd_qq(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let run = run_qq(cfg)?;
    fs::create_dir_all(&cfg.out)?;
    Ok(vec![write(&cfg.out, "qq.csv", &run.qq_csv())?])
}
