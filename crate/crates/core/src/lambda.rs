//! The finite measure `Lambda` on `[0, 1]` and the merge rates
//! `lambda_{b,k} = int z^(k-2) (1-z)^(b-k) Lambda(dz)` it induces.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use statrs::function::beta::ln_beta;

use crate::error::{invalid, Error, Result};

const QUADRATURE_TOL: f64 = 1e-10;

/// Piecewise linear density on `[0, 1]` given by its values at nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedDensity {
    nodes: Vec<f64>,
    values: Vec<f64>,
}

impl TabulatedDensity {
    /// Nodes must start at 0, end at 1 and increase strictly; values must be
    /// nonnegative.
    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 || nodes.len() != values.len() {
            return invalid("tabulated density needs at least two nodes and one value per node");
        }
        if nodes[0] != 0.0 || *nodes.last().unwrap() != 1.0 {
            return invalid("tabulated density must span [0, 1]");
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("tabulated nodes must increase strictly");
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return invalid("tabulated density values must be finite and nonnegative");
        }
        Ok(TabulatedDensity { nodes, values })
    }

    /// Samples `f` on a uniform grid of `cells + 1` nodes.
    pub fn from_fn(cells: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let nodes: Vec<f64> = (0..=cells).map(|i| i as f64 / cells as f64).collect();
        let values = nodes.iter().map(|&z| f(z)).collect();
        Self::new(nodes, values)
    }

    fn eval(&self, z: f64) -> f64 {
        let i = match self.nodes.partition_point(|&x| x <= z) {
            0 => 0,
            i if i >= self.nodes.len() => self.nodes.len() - 2,
            i => i - 1,
        };
        let (z0, z1) = (self.nodes[i], self.nodes[i + 1]);
        let w = (z - z0) / (z1 - z0);
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    /// `int g(z) f(z) dz` by adaptive Simpson on every linear piece.
    fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        let pieces = (self.nodes.len() - 1) as f64;
        let h = |z: f64| g(z) * self.eval(z);
        self.nodes
            .windows(2)
            .map(|w| adaptive_simpson(&h, w[0], w[1], QUADRATURE_TOL / pieces, 40))
            .sum()
    }

    pub fn mass(&self) -> f64 {
        self.integrate(|_| 1.0)
    }
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, depth)
}

/// The part of `Lambda` away from the atom at zero.
#[derive(Clone, Debug, PartialEq)]
pub enum DensityPart {
    None,
    Uniform { mass: f64 },
    Beta { alpha: f64, beta: f64, mass: f64 },
    PointMass { at: f64, mass: f64 },
    Tabulated(TabulatedDensity),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LambdaMeasure {
    atom_at_zero: f64,
    density: DensityPart,
}

impl LambdaMeasure {
    pub fn new(atom_at_zero: f64, density: DensityPart) -> Result<Self> {
        if !(atom_at_zero >= 0.0) || !atom_at_zero.is_finite() {
            return invalid("atom at zero must be finite and nonnegative");
        }
        let mass_ok = |m: f64| m >= 0.0 && m.is_finite();
        match &density {
            DensityPart::None | DensityPart::Tabulated(_) => {}
            DensityPart::Uniform { mass } if !mass_ok(*mass) => {
                return invalid("uniform mass must be finite and nonnegative")
            }
            DensityPart::Beta { alpha, beta, mass } => {
                if !(*alpha > 0.0 && *beta > 0.0) {
                    return invalid("Beta parameters must be positive");
                }
                if !mass_ok(*mass) {
                    return invalid("Beta mass must be finite and nonnegative");
                }
            }
            DensityPart::PointMass { at, mass } => {
                if !(*at > 0.0 && *at <= 1.0) {
                    return invalid("point mass location must lie in (0, 1]");
                }
                if !mass_ok(*mass) {
                    return invalid("point mass must be finite and nonnegative");
                }
            }
            _ => {}
        }
        let measure = LambdaMeasure {
            atom_at_zero,
            density,
        };
        if !(measure.total_mass() > 0.0) {
            return invalid("Lambda must have positive total mass");
        }
        Ok(measure)
    }

    /// `delta_0`: binary mergers at rate 1 per pair.
    pub fn kingman() -> Self {
        LambdaMeasure {
            atom_at_zero: 1.0,
            density: DensityPart::None,
        }
    }

    /// Uniform measure of mass 1 on `[0, 1]`.
    pub fn bolthausen_sznitman() -> Self {
        LambdaMeasure {
            atom_at_zero: 0.0,
            density: DensityPart::Uniform { mass: 1.0 },
        }
    }

    pub fn beta(alpha: f64, beta: f64, mass: f64) -> Result<Self> {
        Self::new(0.0, DensityPart::Beta { alpha, beta, mass })
    }

    pub fn point_mass(at: f64, mass: f64) -> Result<Self> {
        Self::new(0.0, DensityPart::PointMass { at, mass })
    }

    pub fn atom_at_zero(&self) -> f64 {
        self.atom_at_zero
    }

    pub fn density(&self) -> &DensityPart {
        &self.density
    }

    pub fn total_mass(&self) -> f64 {
        self.atom_at_zero
            + match &self.density {
                DensityPart::None => 0.0,
                DensityPart::Uniform { mass }
                | DensityPart::Beta { mass, .. }
                | DensityPart::PointMass { mass, .. } => *mass,
                DensityPart::Tabulated(t) => t.mass(),
            }
    }

    /// The same measure with every mass multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let density = match &self.density {
            DensityPart::None => DensityPart::None,
            DensityPart::Uniform { mass } => DensityPart::Uniform { mass: mass * factor },
            DensityPart::Beta { alpha, beta, mass } => DensityPart::Beta {
                alpha: *alpha,
                beta: *beta,
                mass: mass * factor,
            },
            DensityPart::PointMass { at, mass } => DensityPart::PointMass {
                at: *at,
                mass: mass * factor,
            },
            DensityPart::Tabulated(t) => DensityPart::Tabulated(TabulatedDensity::new(
                t.nodes.clone(),
                t.values.iter().map(|v| v * factor).collect(),
            )?),
        };
        Self::new(self.atom_at_zero * factor, density)
    }

    /// Rate at which any particular `k` of `b` lines merge.
    pub fn merge_rate(&self, b: u32, k: u32) -> Result<f64> {
        if k < 2 || k > b {
            return invalid(format!("merge rate needs 2 <= k <= b, got b = {b}, k = {k}"));
        }
        let atom = if k == 2 { self.atom_at_zero } else { 0.0 };
        let (i, j) = ((k - 2) as i32, (b - k) as i32);
        let density = match &self.density {
            DensityPart::None => 0.0,
            DensityPart::Uniform { mass } => {
                mass * (ln_beta(i as f64 + 1.0, j as f64 + 1.0)).exp()
            }
            DensityPart::Beta { alpha, beta, mass } => {
                mass * (ln_beta(i as f64 + alpha, j as f64 + beta) - ln_beta(*alpha, *beta)).exp()
            }
            DensityPart::PointMass { at, mass } => mass * at.powi(i) * (1.0 - at).powi(j),
            DensityPart::Tabulated(t) => t.integrate(|z| z.powi(i) * (1.0 - z).powi(j)),
        };
        Ok(atom + density)
    }

    /// Total rate of any merger among `b` lines, `sum_k C(b,k) lambda_{b,k}`.
    pub fn total_merge_rate(&self, b: u32) -> f64 {
        (2..=b)
            .map(|k| binomial(b, k) * self.merge_rate(b, k).unwrap_or(0.0))
            .sum()
    }
}

pub(crate) fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// How co-located blocks merge.
#[derive(Clone, Debug, PartialEq)]
pub enum Mechanism {
    /// Blocks sharing a site merge according to a Lambda-coalescent.
    Lambda(LambdaMeasure),
    /// Blocks merge the instant they share a site (coalescing random walk).
    Instantaneous,
}

impl Mechanism {
    pub fn measure(&self) -> Option<&LambdaMeasure> {
        match self {
            Mechanism::Lambda(m) => Some(m),
            Mechanism::Instantaneous => None,
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let Mechanism::Lambda(m) = self else {
            return f.write_str("crw");
        };
        match (&m.density, m.atom_at_zero) {
            (DensityPart::None, a) if a == 1.0 => f.write_str("kingman"),
            (DensityPart::None, a) => write!(f, "kingman:{a}"),
            (DensityPart::Uniform { mass }, a) if a == 0.0 && *mass == 1.0 => f.write_str("bs"),
            (DensityPart::Beta { alpha, beta, mass }, a) if a == 0.0 => {
                write!(f, "beta:{alpha}:{beta}:{mass}")
            }
            (DensityPart::PointMass { at, mass }, a) if a == 0.0 => {
                write!(f, "pointmass:{at}:{mass}")
            }
            _ => write!(f, "lambda(mass={})", m.total_mass()),
        }
    }
}

impl FromStr for Mechanism {
    type Err = Error;

    /// Accepts `kingman`, `bs`, `beta:ALPHA:BETA[:MASS]`,
    /// `pointmass:P[:MASS]` and `crw`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |v: &str| {
            v.parse::<f64>()
                .map_err(|e| Error::InvalidArgument(format!("mechanism `{s}`: {e}")))
        };
        let measure = match parts.as_slice() {
            ["crw"] => return Ok(Mechanism::Instantaneous),
            ["kingman"] => LambdaMeasure::kingman(),
            ["kingman", c] => LambdaMeasure::new(num(c)?, DensityPart::None)?,
            ["bs"] => LambdaMeasure::bolthausen_sznitman(),
            ["beta", a, b] => LambdaMeasure::beta(num(a)?, num(b)?, 1.0)?,
            ["beta", a, b, c] => LambdaMeasure::beta(num(a)?, num(b)?, num(c)?)?,
            ["pointmass", p] => LambdaMeasure::point_mass(num(p)?, 1.0)?,
            ["pointmass", p, c] => LambdaMeasure::point_mass(num(p)?, num(c)?)?,
            _ => return invalid(format!("unknown mechanism `{s}`")),
        };
        Ok(Mechanism::Lambda(measure))
    }
}

/// Merge rates tabulated for up to `max_blocks` co-located blocks.
#[derive(Clone, Debug)]
pub struct RateTable {
    /// `totals[b]`, zero for `b < 2`.
    totals: Vec<f64>,
    /// `cumulative[b][k - 2]`: `P(merger size <= k)` among `b` blocks.
    cumulative: Vec<Vec<f64>>,
}

impl RateTable {
    pub fn new(measure: &LambdaMeasure, max_blocks: u32) -> Self {
        let mut totals = vec![0.0; max_blocks as usize + 1];
        let mut cumulative = vec![Vec::new(); max_blocks as usize + 1];
        for b in 2..=max_blocks {
            let weights: Vec<f64> = (2..=b)
                .map(|k| binomial(b, k) * measure.merge_rate(b, k).unwrap_or(0.0))
                .collect();
            let total: f64 = weights.iter().sum();
            totals[b as usize] = total;
            let mut acc = 0.0;
            cumulative[b as usize] = weights
                .iter()
                .map(|w| {
                    acc += w;
                    if total > 0.0 {
                        acc / total
                    } else {
                        0.0
                    }
                })
                .collect();
        }
        RateTable { totals, cumulative }
    }

    pub fn max_blocks(&self) -> u32 {
        (self.totals.len() - 1) as u32
    }

    #[inline]
    pub fn total(&self, b: u32) -> f64 {
        self.totals.get(b as usize).copied().unwrap_or(0.0)
    }

    /// Samples the merger size among `b` blocks.
    pub fn sample_size<R: Rng + ?Sized>(&self, b: u32, rng: &mut R) -> Option<u32> {
        if self.total(b) <= 0.0 {
            return None;
        }
        let u: f64 = rng.random();
        let cdf = &self.cumulative[b as usize];
        let i = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        Some(i as u32 + 2)
    }

    /// Samples a merger among `b` blocks: its size `k` and a uniform
    /// `k`-subset of `0..b`, sorted. `None` when no merger is possible.
    pub fn sample_merge<R: Rng + ?Sized>(&self, b: u32, rng: &mut R) -> Option<(u32, Vec<usize>)> {
        let k = self.sample_size(b, rng)?;
        let mut idx: Vec<usize> = (0..b as usize).collect();
        for i in 0..k as usize {
            let j = rng.random_range(i..b as usize);
            idx.swap(i, j);
        }
        idx.truncate(k as usize);
        idx.sort_unstable();
        Some((k, idx))
    }
}
