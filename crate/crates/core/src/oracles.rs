//! Exact and independent reference computations used to check the
//! simulators: the labelled pair chain on a small torus, a tree-marking
//! construction of infinite-alleles spectra, and closed forms.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::Exp1;

use crate::error::{invalid, Error, Result};
use crate::mutation::Spectrum;
use crate::torus::{Site, Torus};

/// Largest pair chain built densely.
pub const PAIR_CHAIN_STATE_LIMIT: usize = 1_000;

/// A finite continuous-time Markov chain given by its generator.
#[derive(Clone, Debug)]
pub struct Ctmc {
    generator: DMatrix<f64>,
}

impl Ctmc {
    /// Rows must sum to zero with nonnegative off-diagonal entries.
    pub fn new(generator: DMatrix<f64>) -> Result<Self> {
        if !generator.is_square() {
            return invalid("generator must be square");
        }
        for (i, row) in generator.row_iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if sum.abs() > 1e-9 || row.iter().enumerate().any(|(j, &q)| j != i && q < 0.0) {
                return invalid(format!("row {i} is not a generator row"));
            }
        }
        Ok(Ctmc { generator })
    }

    pub fn states(&self) -> usize {
        self.generator.nrows()
    }

    pub fn generator(&self) -> &DMatrix<f64> {
        &self.generator
    }

    /// `p0 exp(tQ)` by uniformization, truncated at tail mass `tol`.
    pub fn transient(&self, p0: &DVector<f64>, t: f64, tol: f64) -> DVector<f64> {
        let rate = (0..self.states())
            .map(|i| -self.generator[(i, i)])
            .fold(0.0, f64::max);
        if rate == 0.0 || t == 0.0 {
            return p0.clone();
        }
        let n = self.states();
        let step = DMatrix::identity(n, n) + &self.generator / rate;
        let step_t = step.transpose();
        let lt = rate * t;
        // Work in log space for the Poisson weights to survive large lt.
        let mut v = p0.clone();
        let mut out = DVector::zeros(n);
        let mut log_w = -lt;
        let mut acc = 0.0;
        let mut k = 0u64;
        loop {
            let w = log_w.exp();
            out += &v * w;
            acc += w;
            if (1.0 - acc < tol && k as f64 > lt) || k > 10 * lt as u64 + 1000 {
                break;
            }
            k += 1;
            log_w += lt.ln() - (k as f64).ln();
            v = &step_t * v;
        }
        out
    }

    /// Expected time to reach `absorbing` from each state, solving
    /// `-Q_TT h = 1` on the other states.
    pub fn mean_hitting_times(&self, absorbing: &[bool]) -> Result<Vec<f64>> {
        let transient: Vec<usize> = (0..self.states()).filter(|&i| !absorbing[i]).collect();
        let m = transient.len();
        let a = DMatrix::from_fn(m, m, |r, c| -self.generator[(transient[r], transient[c])]);
        let h = a
            .lu()
            .solve(&DVector::from_element(m, 1.0))
            .ok_or_else(|| Error::InvalidState("absorption is not certain".into()))?;
        let mut out = vec![0.0; self.states()];
        for (r, &i) in transient.iter().enumerate() {
            out[i] = h[r];
        }
        Ok(out)
    }
}

/// Two blocks on a small torus: states `(a, b)` for unmerged pairs then one
/// merged state per site.
#[derive(Clone, Debug)]
pub struct PairChain {
    torus: Torus,
    chain: Ctmc,
}

impl PairChain {
    /// Each block jumps at rate 1; co-located blocks merge at `pair_rate`.
    pub fn new(torus: Torus, pair_rate: f64) -> Result<Self> {
        let s = torus.site_count();
        if s * s + s > PAIR_CHAIN_STATE_LIMIT {
            return Err(Error::UnsupportedScale(format!(
                "pair chain on {s} sites is too large"
            )));
        }
        let n = s * s + s;
        let mut q = DMatrix::zeros(n, n);
        for a in 0..s {
            for b in 0..s {
                let i = a * s + b;
                let (sa, sb) = (torus.site_at(a), torus.site_at(b));
                for d in 0..4 {
                    let j = torus.index(torus.step(sa, d)) * s + b;
                    q[(i, j)] += 0.25;
                    let j = a * s + torus.index(torus.step(sb, d));
                    q[(i, j)] += 0.25;
                }
                if a == b {
                    q[(i, s * s + a)] += pair_rate;
                }
            }
            for d in 0..4 {
                let j = s * s + torus.index(torus.step(torus.site_at(a), d));
                q[(s * s + a, j)] += 0.25;
            }
        }
        for i in 0..n {
            let off: f64 = q.row(i).iter().sum();
            q[(i, i)] -= off;
        }
        Ok(PairChain {
            torus,
            chain: Ctmc::new(q)?,
        })
    }

    pub fn chain(&self) -> &Ctmc {
        &self.chain
    }

    pub fn state(&self, a: Site, b: Site) -> usize {
        self.torus.index(a) * self.torus.site_count() + self.torus.index(b)
    }

    fn merged(&self) -> Vec<bool> {
        let s = self.torus.site_count();
        (0..s * s + s).map(|i| i >= s * s).collect()
    }

    /// `E[tau_c]` starting from blocks at `a` and `b`.
    pub fn mean_coalescence_time(&self, a: Site, b: Site) -> Result<f64> {
        Ok(self.chain.mean_hitting_times(&self.merged())?[self.state(a, b)])
    }

    /// `P(tau_c <= t)` starting from blocks at `a` and `b`.
    pub fn merged_by(&self, a: Site, b: Site, t: f64) -> f64 {
        let mut p0 = DVector::zeros(self.chain.states());
        p0[self.state(a, b)] = 1.0;
        let p = self.chain.transient(&p0, t, 1e-13);
        self.merged()
            .iter()
            .zip(p.iter())
            .filter(|(m, _)| **m)
            .map(|(_, x)| x)
            .sum()
    }
}

/// Infinite-alleles spectrum from an explicit Kingman tree (pair rate 1)
/// with Poisson marks at rate `theta / 2` per unit branch length. A leaf
/// carries the allele of the first marked branch above it.
pub fn tree_marking_spectrum<R: Rng + ?Sized>(n: u32, theta: f64, rng: &mut R) -> Spectrum {
    let n = n as usize;
    // parent[v] and branch length above v, nodes 0..n are leaves.
    let mut parent = vec![usize::MAX; 2 * n - 1];
    let mut length = vec![0.0; 2 * n - 1];
    let mut birth = vec![0.0; 2 * n - 1];
    let mut active: Vec<usize> = (0..n).collect();
    let mut t = 0.0;
    let mut next = n;
    while active.len() > 1 {
        let b = active.len();
        let e: f64 = rng.sample(Exp1);
        t += e / (b * (b - 1) / 2) as f64;
        let i = rng.random_range(0..b);
        let mut j = rng.random_range(0..b - 1);
        if j >= i {
            j += 1;
        }
        let (x, y) = (active[i], active[j]);
        for v in [x, y] {
            parent[v] = next;
            length[v] = t - birth[v];
        }
        birth[next] = t;
        active.retain(|&v| v != x && v != y);
        active.push(next);
        next += 1;
    }
    let marked: Vec<bool> = length
        .iter()
        .map(|&l| l > 0.0 && rng.random::<f64>() < 1.0 - (-theta / 2.0 * l).exp())
        .collect();
    let root = 2 * n - 2;
    let mut allele_size = vec![0u32; 2 * n - 1];
    for leaf in 0..n {
        let mut v = leaf;
        while v != root && !marked[v] {
            v = parent[v];
        }
        allele_size[v] += 1;
    }
    let mut s = Spectrum::empty(n as u32);
    for k in allele_size.into_iter().filter(|&k| k > 0) {
        s.record(k);
    }
    s
}

/// `P(a_2 = 1)` for two lineages with pair rate 1 and `theta / 2` per line.
pub fn two_lineage_identity(theta: f64) -> f64 {
    1.0 / (1.0 + theta)
}

/// `2 H_{n-1}`: expected Kingman tree length at pair rate 1.
pub fn kingman_mean_tree_length(n: u32) -> f64 {
    2.0 * (1..n).map(|k| 1.0 / k as f64).sum::<f64>()
}

/// `2 (1 - 1/n)`: expected Kingman time to the MRCA at pair rate 1.
pub fn kingman_mean_tmrca(n: u32) -> f64 {
    2.0 * (1.0 - 1.0 / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniformization_two_state() {
        let q = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 2.0, -2.0]);
        let c = Ctmc::new(q).unwrap();
        let p = c.transient(&DVector::from_vec(vec![1.0, 0.0]), 0.7, 1e-14);
        let exact = 2.0 / 3.0 + (1.0 / 3.0) * (-3.0f64 * 0.7).exp();
        assert!((p[0] - exact).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_generators() {
        assert!(Ctmc::new(DMatrix::from_row_slice(2, 2, &[-1.0, 2.0, 0.0, 0.0])).is_err());
        assert!(PairChain::new(Torus::new(3), 1.0).is_err());
    }

    #[test]
    fn pair_chain_basic_facts() {
        let pc = PairChain::new(Torus::new(1), 1.0).unwrap();
        assert_eq!(pc.chain().states(), 90);
        // Co-located start: coalescing takes Exp(3) plus returns; at least 1/3.
        let co = pc.mean_coalescence_time(Site::ORIGIN, Site::ORIGIN).unwrap();
        let apart = pc.mean_coalescence_time(Site::ORIGIN, Site::new(1, 1)).unwrap();
        assert!(co >= 1.0 / 3.0 && apart > co);
        assert!(pc.merged_by(Site::ORIGIN, Site::new(1, 1), 0.0) == 0.0);
        let late = pc.merged_by(Site::ORIGIN, Site::new(1, 1), 1000.0);
        assert!(pc.merged_by(Site::ORIGIN, Site::new(1, 1), 5.0) < pc.merged_by(Site::ORIGIN, Site::new(1, 1), 10.0));
        assert!((late - 1.0).abs() < 1e-9);
    }

    #[test]
    fn pair_chain_without_space_is_exponential() {
        // On T^0 the two blocks always share the single site.
        let pc = PairChain::new(Torus::new(0), 2.0).unwrap();
        assert!((pc.mean_coalescence_time(Site::ORIGIN, Site::ORIGIN).unwrap() - 0.5).abs() < 1e-12);
        let p = pc.merged_by(Site::ORIGIN, Site::ORIGIN, 0.3);
        assert!((p - (1.0 - (-0.6f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn tree_marking_conserves() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            assert!(tree_marking_spectrum(7, 1.5, &mut rng).is_conserved());
        }
        assert!((kingman_mean_tree_length(9) - 5.4357).abs() < 1e-4);
    }
}
