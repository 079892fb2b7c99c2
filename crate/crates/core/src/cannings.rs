//! Forward spatial Cannings models: exchangeable reproduction in each
//! colony followed by fixed migration counts, with genealogies traced back
//! from a present-day sample.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::partition::LabeledPartition;
use crate::stats::mean_stderr;
use crate::torus::{Site, Torus};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum OffspringLaw {
    WrightFisher,
    Moran,
    /// With probability `eps` one parent has `ceil(psi N)` offspring and the
    /// rest are spread multinomially over the others; else Wright-Fisher.
    Skewed { psi: f64, eps: f64 },
}

impl OffspringLaw {
    pub fn skewed(psi: f64, eps: f64) -> Result<Self> {
        if !(psi > 0.0 && psi <= 1.0) || !(eps > 0.0 && eps <= 1.0) {
            return invalid(format!("skewed law needs psi, eps in (0, 1], got {psi}, {eps}"));
        }
        Ok(OffspringLaw::Skewed { psi, eps })
    }

    fn big_family(psi: f64, n: usize) -> usize {
        ((psi * n as f64).ceil() as usize).clamp(1, n)
    }

    /// Parent index of each of the `n` offspring slots, in exchangeable
    /// order.
    pub fn sample_parents<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<u32> {
        let wright_fisher = |rng: &mut R| (0..n).map(|_| rng.random_range(0..n) as u32).collect();
        match *self {
            OffspringLaw::WrightFisher => wright_fisher(rng),
            OffspringLaw::Moran => {
                if n == 1 {
                    return vec![0];
                }
                let a = rng.random_range(0..n);
                let mut b = rng.random_range(0..n - 1);
                if b >= a {
                    b += 1;
                }
                let mut parents: Vec<u32> = (0..n as u32).filter(|&i| i as usize != b).collect();
                parents.push(a as u32);
                parents.shuffle(rng);
                parents
            }
            OffspringLaw::Skewed { psi, eps } => {
                if rng.random::<f64>() >= eps || n == 1 {
                    return wright_fisher(rng);
                }
                let big = rng.random_range(0..n) as u32;
                let k = Self::big_family(psi, n);
                let mut parents = vec![big; k];
                parents.extend((k..n).map(|_| {
                    let mut p = rng.random_range(0..n as u32 - 1);
                    if p >= big {
                        p += 1;
                    }
                    p
                }));
                parents.shuffle(rng);
                parents
            }
        }
    }

    /// Offspring numbers `nu_1, ..., nu_N`.
    pub fn sample_offspring<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<u32> {
        let mut nu = vec![0u32; n];
        for p in self.sample_parents(n, rng) {
            nu[p as usize] += 1;
        }
        nu
    }

    /// Exact `E[(nu_1)_k]`, the `k`-th falling factorial moment.
    pub fn factorial_moment(&self, n: usize, k: u32) -> f64 {
        let nf = n as f64;
        // Binomial(m, p) factorial moment: (m)_k p^k.
        let binom = |m: f64, p: f64| falling(m, k) * p.powi(k as i32);
        match *self {
            OffspringLaw::WrightFisher => binom(nf, 1.0 / nf),
            OffspringLaw::Moran => {
                if n == 1 {
                    falling(1.0, k)
                } else {
                    falling(2.0, k) / nf
                }
            }
            OffspringLaw::Skewed { psi, eps } => {
                let wf = binom(nf, 1.0 / nf);
                if n == 1 {
                    return wf;
                }
                let big = Self::big_family(psi, n) as f64;
                let skew = falling(big, k) / nf + (nf - 1.0) / nf * binom(nf - big, 1.0 / (nf - 1.0));
                (1.0 - eps) * wf + eps * skew
            }
        }
    }
}

fn falling(x: f64, k: u32) -> f64 {
    (0..k).map(|i| x - i as f64).product()
}

impl fmt::Display for OffspringLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OffspringLaw::WrightFisher => write!(f, "wright-fisher"),
            OffspringLaw::Moran => write!(f, "moran"),
            OffspringLaw::Skewed { psi, eps } => write!(f, "skewed:{psi}:{eps}"),
        }
    }
}

impl FromStr for OffspringLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |t: &str| {
            t.parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("bad number `{t}` in law `{s}`")))
        };
        match parts.as_slice() {
            ["wright-fisher"] | ["wf"] => Ok(OffspringLaw::WrightFisher),
            ["moran"] => Ok(OffspringLaw::Moran),
            ["skewed", psi, eps] => OffspringLaw::skewed(num(psi)?, num(eps)?),
            _ => invalid(format!("unknown offspring law `{s}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Analytic,
    MonteCarlo { trials: u64 },
}

/// Estimate with its standard error; the error is zero for exact values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// `c^N = E[(nu_1)_2] / (N - 1)`: two individuals share a parent.
pub fn pair_coalescence_prob<R: Rng + ?Sized>(
    law: OffspringLaw,
    n: usize,
    method: Method,
    rng: &mut R,
) -> Result<Estimate> {
    if n < 2 {
        return invalid("c^N needs N >= 2");
    }
    match method {
        Method::Analytic => Ok(Estimate {
            value: law.factorial_moment(n, 2) / (n as f64 - 1.0),
            stderr: 0.0,
        }),
        Method::MonteCarlo { trials } => {
            let mut hits = 0u64;
            for _ in 0..trials {
                let parents = law.sample_parents(n, rng);
                hits += (parents[0] == parents[1]) as u64;
            }
            let p = hits as f64 / trials as f64;
            Ok(Estimate {
                value: p,
                stderr: (p * (1.0 - p) / trials as f64).sqrt(),
            })
        }
    }
}

/// One row of the moment table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentRow {
    pub n: usize,
    /// `k` for `E[(nu_1)_k] / (N^(k-1) c^N)`; zero marks the mixed moment
    /// `E[(nu_1)_2 (nu_2)_2] / (N^2 c^N)`.
    pub k: u32,
    pub estimate: f64,
    pub stderr: f64,
}

/// Monte Carlo moment ratios over a sweep of colony sizes, normalised by
/// the exact `c^N`.
pub fn moment_diagnostics<R: Rng + ?Sized>(
    law: OffspringLaw,
    sizes: &[usize],
    k_max: u32,
    draws: u64,
    rng: &mut R,
) -> Result<Vec<MomentRow>> {
    if k_max < 2 {
        return invalid("k_max must be at least 2");
    }
    let mut rows = Vec::new();
    for &n in sizes {
        let c = pair_coalescence_prob(law, n, Method::Analytic, rng)?.value;
        let mut samples = vec![Vec::with_capacity(draws as usize); k_max as usize];
        for _ in 0..draws {
            let nu = law.sample_offspring(n, rng);
            let (a, b) = (nu[0] as f64, nu.get(1).copied().unwrap_or(0) as f64);
            for k in 2..=k_max {
                samples[k as usize - 2].push(falling(a, k) / (n as f64).powi(k as i32 - 1) / c);
            }
            samples[k_max as usize - 1].push(falling(a, 2) * falling(b, 2) / (n * n) as f64 / c);
        }
        for (i, s) in samples.iter().enumerate() {
            let (m, se) = mean_stderr(s);
            let k = if i as u32 == k_max - 1 { 0 } else { i as u32 + 2 };
            rows.push(MomentRow {
                n,
                k,
                estimate: m,
                stderr: se,
            });
        }
    }
    Ok(rows)
}

/// Moment rows as CSV with header `N,k,estimate,stderr`.
pub fn moments_csv(rows: &[MomentRow]) -> String {
    let mut out = String::from("N,k,estimate,stderr\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.n, r.k, r.estimate, r.stderr));
    }
    out
}

/// Colonies with per-site laws and a fixed migration count matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CanningsModel {
    sizes: Vec<usize>,
    laws: Vec<OffspringLaw>,
    /// `migration[x][y]`: offspring moving from `x` to `y` each generation.
    migration: Vec<Vec<usize>>,
    labels: Vec<Site>,
}

impl CanningsModel {
    pub fn new(
        sizes: Vec<usize>,
        laws: Vec<OffspringLaw>,
        migration: Vec<Vec<usize>>,
        labels: Vec<Site>,
    ) -> Result<Self> {
        let g = sizes.len();
        if g == 0 || laws.len() != g || labels.len() != g || migration.len() != g {
            return Err(Error::InvalidModel("site data of different lengths".into()));
        }
        if sizes.contains(&0) {
            return Err(Error::InvalidModel("empty colony".into()));
        }
        for (x, row) in migration.iter().enumerate() {
            if row.len() != g {
                return Err(Error::InvalidModel(format!("migration row {x} has wrong length")));
            }
            let out: usize = row.iter().enumerate().filter(|(y, _)| *y != x).map(|(_, m)| m).sum();
            if out > sizes[x] {
                return Err(Error::InvalidModel(format!(
                    "site {x} sends {out} migrants but holds {}",
                    sizes[x]
                )));
            }
            let inflow: usize = (0..g).filter(|&y| y != x).map(|y| migration[y][x]).sum();
            if inflow != out {
                return Err(Error::InvalidModel(format!(
                    "site {x} is unbalanced: {out} out, {inflow} in"
                )));
            }
        }
        Ok(CanningsModel {
            sizes,
            laws,
            migration,
            labels,
        })
    }

    pub fn single_site(n: usize, law: OffspringLaw) -> Result<Self> {
        Self::new(vec![n], vec![law], vec![vec![0]], vec![Site::ORIGIN])
    }

    /// Every site of `torus` holds `n` individuals and sends `migrants` to
    /// each neighbour. On `T^0` migration is dropped.
    pub fn on_torus(torus: &Torus, n: usize, law: OffspringLaw, migrants: usize) -> Result<Self> {
        let g = torus.site_count();
        let mut migration = vec![vec![0; g]; g];
        for x in 0..g {
            for nb in torus.neighbors(torus.site_at(x)) {
                let y = torus.index(nb);
                if y != x {
                    migration[x][y] += migrants;
                }
            }
        }
        Self::new(vec![n; g], vec![law; g], migration, torus.sites().collect())
    }

    pub fn site_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn label(&self, site: usize) -> Site {
        self.labels[site]
    }

    pub fn site_of(&self, label: Site) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    /// For every individual of the next generation, the `(site, index)` of
    /// its parent in the current one.
    pub fn sample_parent_map<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Vec<(u32, u32)>> {
        let g = self.site_count();
        let mut next: Vec<Vec<(u32, u32)>> = (0..g).map(|x| Vec::with_capacity(self.sizes[x])).collect();
        let mut movers: Vec<Vec<(u32, u32)>> = vec![Vec::new(); g];
        for x in 0..g {
            let parents = self.laws[x].sample_parents(self.sizes[x], rng);
            let mut offspring: Vec<(u32, u32)> = parents.into_iter().map(|p| (x as u32, p)).collect();
            let out: usize = (0..g).filter(|&y| y != x).map(|y| self.migration[x][y]).sum();
            if out > 0 {
                // A uniform subset of `out` offspring leaves, split by target.
                let (chosen, _) = offspring.partial_shuffle(rng, out);
                let chosen = chosen.to_vec();
                let mut at = 0;
                for y in (0..g).filter(|&y| y != x) {
                    let m = self.migration[x][y];
                    movers[y].extend_from_slice(&chosen[at..at + m]);
                    at += m;
                }
                offspring.drain(..out);
            }
            next[x].extend(offspring);
        }
        for (x, m) in movers.into_iter().enumerate() {
            next[x].extend(m);
        }
        next
    }
}

/// Individuals per site, each carrying an inherited tag.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Population {
    pub tags: Vec<Vec<u32>>,
}

impl Population {
    /// Every individual tagged by its own position.
    pub fn founders(model: &CanningsModel) -> Self {
        let mut id = 0;
        Population {
            tags: model
                .sizes
                .iter()
                .map(|&n| {
                    (0..n)
                        .map(|_| {
                            id += 1;
                            id - 1
                        })
                        .collect()
                })
                .collect(),
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.tags.iter().map(Vec::len).collect()
    }
}

/// One generation forward: reproduction, then migration. Children inherit
/// their parent's tag.
pub fn step_generation<R: Rng + ?Sized>(
    model: &CanningsModel,
    pop: &Population,
    rng: &mut R,
) -> Result<Population> {
    if pop.sizes() != model.sizes {
        return Err(Error::InvalidState("population does not fit the model".into()));
    }
    let map = model.sample_parent_map(rng);
    let tags: Vec<Vec<u32>> = map
        .iter()
        .map(|site| {
            site.iter()
                .map(|&(y, p)| pop.tags[y as usize][p as usize])
                .collect()
        })
        .collect();
    let next = Population { tags };
    assert_eq!(next.sizes(), model.sizes, "colony sizes must be conserved");
    Ok(next)
}

/// Backward genealogy of a sample, one partition per generation.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteGenealogy {
    /// `partitions[g]` is the sample's ancestral partition `g` generations
    /// back; `partitions[0]` is the sample itself.
    pub partitions: Vec<LabeledPartition>,
    /// Generation at which a single ancestor remained.
    pub mrca_generation: Option<u64>,
}

impl DiscreteGenealogy {
    pub fn is_complete(&self) -> bool {
        self.mrca_generation.is_some()
    }

    /// Generations at which at least one merger happened, with the block
    /// counts before and after.
    pub fn merge_generations(&self) -> Vec<(u64, usize, usize)> {
        self.partitions
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[1].len() < w[0].len())
            .map(|(g, w)| (g as u64 + 1, w[0].len(), w[1].len()))
            .collect()
    }
}

/// Traces the ancestry of `sample` back until one ancestor is left or
/// `max_generations` have passed. Each generation back uses a fresh,
/// independent forward step, which is the exact backward law.
pub fn trace_genealogy<R: Rng + ?Sized>(
    model: &CanningsModel,
    sample: &LabeledPartition,
    max_generations: u64,
    rng: &mut R,
) -> Result<DiscreteGenealogy> {
    // Each block is followed through one ancestor (site, index).
    let mut used = vec![0usize; model.site_count()];
    let mut lineages: Vec<(Vec<u32>, u32, u32)> = Vec::with_capacity(sample.len());
    for (members, label) in sample.entries() {
        let x = model
            .site_of(label)
            .ok_or_else(|| Error::InvalidArgument(format!("no colony at {label}")))?;
        if used[x] >= model.sizes[x] {
            return invalid(format!("more sampled blocks at {label} than individuals"));
        }
        lineages.push((members.to_vec(), x as u32, used[x] as u32));
        used[x] += 1;
    }
    let n = sample.n();
    let to_partition = |lin: &[(Vec<u32>, u32, u32)]| {
        LabeledPartition::from_entries(
            n,
            lin.iter().map(|(m, x, _)| (m.clone(), model.labels[*x as usize])).collect(),
        )
    };
    let mut partitions = vec![sample.clone()];
    let mut mrca = (lineages.len() <= 1).then_some(0);
    let mut generation = 0;
    while mrca.is_none() && generation < max_generations {
        generation += 1;
        let map = model.sample_parent_map(rng);
        let mut next: Vec<(Vec<u32>, u32, u32)> = Vec::with_capacity(lineages.len());
        for (members, x, i) in lineages.drain(..) {
            let (y, p) = map[x as usize][i as usize];
            match next.iter_mut().find(|(_, y2, p2)| *y2 == y && *p2 == p) {
                Some(entry) => entry.0.extend(members),
                None => next.push((members, y, p)),
            }
        }
        for entry in &mut next {
            entry.0.sort_unstable();
        }
        lineages = next;
        partitions.push(to_partition(&lineages)?);
        if lineages.len() == 1 {
            mrca = Some(generation);
        }
    }
    Ok(DiscreteGenealogy {
        partitions,
        mrca_generation: mrca,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::binomial_z;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn offspring_vectors_sum_to_n() {
        let mut r = rng(1);
        for law in [
            OffspringLaw::WrightFisher,
            OffspringLaw::Moran,
            OffspringLaw::skewed(0.5, 0.3).unwrap(),
        ] {
            for n in [1, 2, 3, 10, 57] {
                for _ in 0..200 {
                    let nu = law.sample_offspring(n, &mut r);
                    assert_eq!(nu.iter().sum::<u32>() as usize, n, "{law} N={n}");
                }
            }
        }
    }

    #[test]
    fn moran_is_a_permutation_of_two_zero_ones() {
        let mut r = rng(2);
        for _ in 0..100 {
            let mut nu = OffspringLaw::Moran.sample_offspring(3, &mut r);
            nu.sort_unstable();
            assert_eq!(nu, vec![0, 1, 2]);
        }
    }

    #[test]
    fn skewed_with_certain_sweep() {
        let mut r = rng(3);
        let law = OffspringLaw::skewed(0.5, 1.0).unwrap();
        for _ in 0..500 {
            assert_eq!(*law.sample_offspring(10, &mut r).iter().max().unwrap(), 5);
        }
        assert!(OffspringLaw::skewed(0.0, 0.5).is_err());
        assert!(OffspringLaw::skewed(0.5, 1.5).is_err());
    }

    #[test]
    fn wright_fisher_mean_offspring() {
        let mut r = rng(4);
        let draws: Vec<f64> = (0..20_000)
            .map(|_| OffspringLaw::WrightFisher.sample_offspring(100, &mut r)[0] as f64)
            .collect();
        let (m, se) = mean_stderr(&draws);
        assert!((m - 1.0).abs() < 4.0 * se);
    }

    #[test]
    fn analytic_pair_probabilities() {
        let mut r = rng(5);
        let wf = pair_coalescence_prob(OffspringLaw::WrightFisher, 100, Method::Analytic, &mut r).unwrap();
        assert!((wf.value - 0.01).abs() < 1e-15);
        let mo = pair_coalescence_prob(OffspringLaw::Moran, 10, Method::Analytic, &mut r).unwrap();
        assert!((mo.value - 2.0 / 90.0).abs() < 1e-15);
        assert!(pair_coalescence_prob(OffspringLaw::Moran, 1, Method::Analytic, &mut r).is_err());
    }

    #[test]
    fn skewed_moments_match_enumeration() {
        // Independent check by Monte Carlo of E[(nu_1)_2] and E[(nu_1)_3].
        let mut r = rng(6);
        let law = OffspringLaw::skewed(0.3, 0.2).unwrap();
        let n = 12;
        for k in [2, 3] {
            let xs: Vec<f64> = (0..200_000)
                .map(|_| falling(law.sample_offspring(n, &mut r)[0] as f64, k))
                .collect();
            let (m, se) = mean_stderr(&xs);
            assert!((m - law.factorial_moment(n, k)).abs() < 4.0 * se, "k={k}: {m}");
        }
    }

    #[test]
    fn moran_has_no_triple_moment() {
        for n in [5, 50, 500] {
            assert_eq!(OffspringLaw::Moran.factorial_moment(n, 3), 0.0);
        }
        let mut r = rng(7);
        let rows = moment_diagnostics(OffspringLaw::Moran, &[10, 20], 3, 2000, &mut r).unwrap();
        assert!(rows.iter().filter(|row| row.k == 3).all(|row| row.estimate == 0.0));
    }

    #[test]
    fn moments_csv_has_one_line_per_row() {
        let mut r = rng(8);
        let rows = moment_diagnostics(OffspringLaw::WrightFisher, &[10], 3, 200, &mut r).unwrap();
        let csv = moments_csv(&rows);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("N,k,estimate,stderr"));
        assert_eq!(lines.count(), rows.len());
        assert!(csv.contains("\n10,0,"));
    }

    #[test]
    fn triple_moment_trends() {
        let phi = |law: OffspringLaw, n: usize| {
            let c = law.factorial_moment(n, 2) / (n as f64 - 1.0);
            law.factorial_moment(n, 3) / (n as f64).powi(2) / c
        };
        let sizes = [50, 100, 200, 400];
        let wf: Vec<f64> = sizes.iter().map(|&n| phi(OffspringLaw::WrightFisher, n)).collect();
        assert!(wf.windows(2).all(|w| w[1] < w[0]));
        assert!((wf[0] - 49.0 * 48.0 / 50.0f64.powi(3)).abs() < 1e-12);
        let skew = OffspringLaw::skewed(0.5, 0.1).unwrap();
        assert!(sizes.iter().all(|&n| phi(skew, n) > 0.2));
    }

    #[test]
    fn model_validation() {
        let wf = OffspringLaw::WrightFisher;
        let labels = vec![Site::ORIGIN, Site::new(1, 0)];
        assert!(CanningsModel::new(vec![4, 4], vec![wf; 2], vec![vec![0, 1], vec![1, 0]], labels.clone()).is_ok());
        assert!(CanningsModel::new(vec![4, 4], vec![wf; 2], vec![vec![0, 2], vec![1, 0]], labels.clone()).is_err());
        assert!(CanningsModel::new(vec![1, 1], vec![wf; 2], vec![vec![0, 2], vec![2, 0]], labels).is_err());
    }

    #[test]
    fn colony_sizes_are_conserved() {
        let mut r = rng(8);
        let labels = vec![Site::ORIGIN, Site::new(1, 0)];
        let model = CanningsModel::new(
            vec![4, 4],
            vec![OffspringLaw::WrightFisher; 2],
            vec![vec![0, 1], vec![1, 0]],
            labels,
        )
        .unwrap();
        let mut pop = Population::founders(&model);
        for _ in 0..100 {
            pop = step_generation(&model, &pop, &mut r).unwrap();
            assert_eq!(pop.sizes(), vec![4, 4]);
        }
        let torus = CanningsModel::on_torus(&Torus::new(1), 6, OffspringLaw::Moran, 1).unwrap();
        let mut pop = Population::founders(&torus);
        for _ in 0..20 {
            pop = step_generation(&torus, &pop, &mut r).unwrap();
        }
        assert_eq!(pop.sizes(), vec![6; 9]);
    }

    #[test]
    fn one_generation_sharing_matches_c() {
        let mut r = rng(9);
        let model = CanningsModel::single_site(10, OffspringLaw::Moran).unwrap();
        let trials = 100_000;
        let mut hits = 0;
        for _ in 0..trials {
            let pop = step_generation(&model, &Population::founders(&model), &mut r).unwrap();
            hits += (pop.tags[0][0] == pop.tags[0][1]) as u64;
        }
        let (_, z) = binomial_z(hits, trials, 2.0 / 90.0);
        assert!(z.abs() < 4.0);
    }

    #[test]
    fn single_lineage_only_moves() {
        let mut r = rng(10);
        let model = CanningsModel::on_torus(&Torus::new(1), 5, OffspringLaw::WrightFisher, 1).unwrap();
        let sample = LabeledPartition::singletons(1, &[Site::ORIGIN]).unwrap();
        let g = trace_genealogy(&model, &sample, 50, &mut r).unwrap();
        assert_eq!(g.mrca_generation, Some(0));
        assert_eq!(g.partitions.len(), 1);
    }

    #[test]
    fn moran_pair_coalescence_generation() {
        let mut r = rng(11);
        let model = CanningsModel::single_site(10, OffspringLaw::Moran).unwrap();
        let sample = LabeledPartition::singletons(2, &[Site::ORIGIN; 2]).unwrap();
        let gens: Vec<f64> = (0..10_000)
            .map(|_| trace_genealogy(&model, &sample, 100_000, &mut r).unwrap().mrca_generation.unwrap() as f64)
            .collect();
        let (m, se) = mean_stderr(&gens);
        assert!((m - 45.0).abs() < 4.0 * se, "{m} +- {se}");
    }

    #[test]
    fn genealogies_only_coarsen() {
        let mut r = rng(12);
        let model = CanningsModel::on_torus(&Torus::new(1), 4, OffspringLaw::skewed(0.5, 0.2).unwrap(), 1).unwrap();
        let sites = [Site::ORIGIN, Site::ORIGIN, Site::new(1, 0), Site::new(1, 1), Site::new(-1, 0)];
        let sample = LabeledPartition::singletons(5, &sites).unwrap();
        let g = trace_genealogy(&model, &sample, 10_000, &mut r).unwrap();
        for w in g.partitions.windows(2) {
            for block in w[0].blocks() {
                let owner = w[1].block_of(block[0]);
                assert!(block.iter().all(|&e| w[1].block_of(e) == owner));
            }
        }
        let capped = trace_genealogy(&model, &sample, 0, &mut r).unwrap();
        assert!(!capped.is_complete());
    }
}
