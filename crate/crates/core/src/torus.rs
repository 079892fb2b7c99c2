//! The torus `[-L, L]^2` with opposite edges identified, the simple random
//! walk on it and the wrapped Euclidean metric.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};

/// Largest torus for which [`Torus::transient_distribution`] is offered.
pub const ORACLE_SITE_LIMIT: usize = 10_000;

/// A lattice site. Coordinates are kept in `[-L, L]` by [`Torus::wrap`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Site {
    pub x: i32,
    pub y: i32,
}

impl Site {
    pub const ORIGIN: Site = Site { x: 0, y: 0 };

    pub const fn new(x: i32, y: i32) -> Self {
        Site { x, y }
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

impl FromStr for Site {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let inner = s
            .trim()
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| Error::InvalidArgument(format!("site `{s}` is not of the form (x,y)")))?;
        let (x, y) = inner
            .split_once(',')
            .ok_or_else(|| Error::InvalidArgument(format!("site `{s}` is missing a comma")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<i32>()
                .map_err(|e| Error::InvalidArgument(format!("site `{s}`: {e}")))
        };
        Ok(Site::new(parse(x)?, parse(y)?))
    }
}

impl Serialize for Site {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Site {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Torus `T^L` of half-side `L`, side `2L + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Torus {
    half: u32,
}

impl Torus {
    pub const fn new(half: u32) -> Self {
        Torus { half }
    }

    /// Torus with the given odd side length `2L + 1`.
    pub fn with_side(side: u32) -> Result<Self> {
        if side.is_multiple_of(2) {
            return invalid(format!("torus side length must be odd and positive, got {side}"));
        }
        Ok(Torus::new((side - 1) / 2))
    }

    pub const fn half(&self) -> u32 {
        self.half
    }

    pub const fn side(&self) -> u32 {
        2 * self.half + 1
    }

    pub const fn site_count(&self) -> usize {
        (self.side() as usize) * (self.side() as usize)
    }

    pub fn contains(&self, site: Site) -> bool {
        let l = self.half as i32;
        (-l..=l).contains(&site.x) && (-l..=l).contains(&site.y)
    }

    #[inline]
    fn wrap_coord(&self, v: i64) -> i32 {
        let side = self.side() as i64;
        let l = self.half as i64;
        ((v + l).rem_euclid(side) - l) as i32
    }

    /// Reduces an arbitrary lattice point into `[-L, L]^2`.
    #[inline]
    pub fn wrap(&self, x: i64, y: i64) -> Site {
        Site::new(self.wrap_coord(x), self.wrap_coord(y))
    }

    /// Row-major index of a wrapped site, in `0..site_count`.
    #[inline]
    pub fn index(&self, site: Site) -> usize {
        let l = self.half as i32;
        let side = self.side() as usize;
        (site.x + l) as usize * side + (site.y + l) as usize
    }

    pub fn site_at(&self, index: usize) -> Site {
        let side = self.side() as usize;
        let l = self.half as i32;
        Site::new((index / side) as i32 - l, (index % side) as i32 - l)
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.site_count()).map(|i| self.site_at(i))
    }

    /// Wrapped difference `a - b`.
    pub fn difference(&self, a: Site, b: Site) -> Site {
        self.wrap(a.x as i64 - b.x as i64, a.y as i64 - b.y as i64)
    }

    /// Wrapped Euclidean distance: the shortest distance from `a` to any
    /// lattice representative of `b`.
    pub fn distance(&self, a: Site, b: Site) -> f64 {
        // The wrapped difference already is the shortest representative
        // coordinate-wise, since the side is odd.
        let d = self.difference(a, b);
        ((d.x as f64).powi(2) + (d.y as f64).powi(2)).sqrt()
    }

    /// Squared wrapped distance, exact in integers.
    pub fn distance_sq(&self, a: Site, b: Site) -> i64 {
        let d = self.difference(a, b);
        (d.x as i64).pow(2) + (d.y as i64).pow(2)
    }

    /// The four nearest neighbours in the order `+x, -x, +y, -y`. Each is
    /// reached at rate 1/4, so a walker jumps at total rate 1.
    #[inline]
    pub fn neighbors(&self, a: Site) -> [Site; 4] {
        let (x, y) = (a.x as i64, a.y as i64);
        [
            self.wrap(x + 1, y),
            self.wrap(x - 1, y),
            self.wrap(x, y + 1),
            self.wrap(x, y - 1),
        ]
    }

    #[inline]
    pub fn step(&self, a: Site, direction: usize) -> Site {
        self.neighbors(a)[direction]
    }

    /// Largest distance between two sites, `sqrt(2) L`.
    pub fn diameter(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.half as f64
    }

    /// `(2L+1)^2 ln(2L+1)`, the time scale under which far-apart lineages
    /// coalesce like a Kingman coalescent with pair rate pi.
    pub fn time_scale(&self) -> Result<f64> {
        if self.half == 0 {
            return invalid("time scale is degenerate for L = 0");
        }
        let side = self.side() as f64;
        Ok(side * side * side.ln())
    }

    /// Distribution at time `t` of the rate-1 walk started at `start`,
    /// indexed like [`Torus::index`].
    ///
    /// The two coordinates move as independent rate-1/2 cycle walks, so the
    /// law factorises and each factor is diagonalised by the discrete
    /// Fourier basis of the cycle.
    pub fn transient_distribution(&self, start: Site, t: f64) -> Result<Vec<f64>> {
        if self.site_count() > ORACLE_SITE_LIMIT {
            return Err(Error::UnsupportedScale(format!(
                "{} sites exceed the oracle limit of {ORACLE_SITE_LIMIT}",
                self.site_count()
            )));
        }
        if !(t >= 0.0) {
            return invalid(format!("time must be nonnegative, got {t}"));
        }
        let side = self.side() as usize;
        let cycle: Vec<f64> = (0..side)
            .map(|d| {
                let s: f64 = (0..side)
                    .map(|k| {
                        let theta = 2.0 * PI * k as f64 / side as f64;
                        (-t * (1.0 - theta.cos()) / 2.0).exp() * (theta * d as f64).cos()
                    })
                    .sum();
                (s / side as f64).max(0.0)
            })
            .collect();
        let mut out = vec![0.0; self.site_count()];
        for (i, p) in out.iter_mut().enumerate() {
            let d = self.difference(self.site_at(i), start);
            let dx = d.x.rem_euclid(side as i32) as usize;
            let dy = d.y.rem_euclid(side as i32) as usize;
            *p = cycle[dx] * cycle[dy];
        }
        let total: f64 = out.iter().sum();
        out.iter_mut().for_each(|p| *p /= total);
        Ok(out)
    }

    /// Default minimum separation used by test configurations,
    /// `ceil(L / (ln L)^(1/4))`.
    pub fn separation_scale(&self) -> f64 {
        let l = self.half.max(2) as f64;
        (l / l.ln().powf(0.25)).ceil()
    }
}
