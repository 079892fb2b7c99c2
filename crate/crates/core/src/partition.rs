//! Partitions of `[n] = {1, ..., n}` with and without site labels.
//!
//! Blocks are sorted element lists and the block sequence is ordered by
//! minimal element. Elements are 1-based; block indices are 0-based
//! positions in the ordered sequence.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::torus::{Site, Torus};

/// Default upper bound on the sample size.
pub const MAX_SAMPLE: usize = 64;

fn check_blocks(n: u32, blocks: &[Vec<u32>]) -> Result<()> {
    if n == 0 {
        return invalid("sample size must be at least 1");
    }
    if n as usize > MAX_SAMPLE {
        return invalid(format!("sample size {n} exceeds the limit of {MAX_SAMPLE}"));
    }
    let mut seen = vec![false; n as usize + 1];
    for block in blocks {
        if block.is_empty() {
            return invalid("empty blocks are not stored");
        }
        for &e in block {
            if e == 0 || e > n {
                return invalid(format!("element {e} outside [1, {n}]"));
            }
            if std::mem::replace(&mut seen[e as usize], true) {
                return invalid(format!("element {e} appears in two blocks"));
            }
        }
    }
    if let Some(missing) = (1..=n).find(|&e| !seen[e as usize]) {
        return invalid(format!("element {missing} is not covered"));
    }
    Ok(())
}

fn format_block(f: &mut fmt::Formatter<'_>, block: &[u32]) -> fmt::Result {
    f.write_str("{")?;
    for (i, e) in block.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{e}")?;
    }
    f.write_str("}")
}

fn parse_block(s: &str) -> Result<Vec<u32>> {
    let inner = s
        .trim()
        .strip_prefix('{')
        .and_then(|r| r.strip_suffix('}'))
        .ok_or_else(|| Error::InvalidArgument(format!("block `{s}` is not braced")))?;
    inner
        .split(',')
        .map(|e| {
            e.trim()
                .parse::<u32>()
                .map_err(|err| Error::InvalidArgument(format!("block `{s}`: {err}")))
        })
        .collect()
}

/// A partition of `[n]` without labels.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UnlabeledPartition {
    n: u32,
    blocks: Vec<Vec<u32>>,
}

impl UnlabeledPartition {
    pub fn from_blocks(n: u32, mut blocks: Vec<Vec<u32>>) -> Result<Self> {
        check_blocks(n, &blocks)?;
        for b in &mut blocks {
            b.sort_unstable();
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        Ok(UnlabeledPartition { n, blocks })
    }

    pub fn singletons(n: u32) -> Result<Self> {
        Self::from_blocks(n, (1..=n).map(|e| vec![e]).collect())
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Number of blocks, `#pi`.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn blocks(&self) -> &[Vec<u32>] {
        &self.blocks
    }

    pub fn merge(&self, indices: &[usize]) -> Result<Self> {
        let chosen = validate_indices(indices, self.blocks.len())?;
        let mut merged = Vec::new();
        let mut rest = Vec::with_capacity(self.blocks.len());
        for (i, b) in self.blocks.iter().enumerate() {
            if chosen.contains(&i) {
                merged.extend_from_slice(b);
            } else {
                rest.push(b.clone());
            }
        }
        rest.push(merged);
        Self::from_blocks(self.n, rest)
    }

    pub fn restrict(&self, m: u32) -> Result<Self> {
        if m == 0 || m > self.n {
            return invalid(format!("restriction size {m} outside [1, {}]", self.n));
        }
        let blocks = self
            .blocks
            .iter()
            .map(|b| b.iter().copied().filter(|&e| e <= m).collect::<Vec<_>>())
            .filter(|b| !b.is_empty())
            .collect();
        Self::from_blocks(m, blocks)
    }
}

impl fmt::Display for UnlabeledPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            format_block(f, b)?;
        }
        Ok(())
    }
}

fn validate_indices(indices: &[usize], len: usize) -> Result<Vec<usize>> {
    if indices.len() < 2 {
        return invalid("a merge needs at least two blocks");
    }
    let mut chosen = indices.to_vec();
    chosen.sort_unstable();
    chosen.dedup();
    if chosen.len() != indices.len() {
        return invalid("merge indices must be distinct");
    }
    if let Some(&bad) = chosen.iter().find(|&&i| i >= len) {
        return invalid(format!("block index {bad} out of range for {len} blocks"));
    }
    Ok(chosen)
}

/// A partition of `[n]` whose blocks carry torus sites.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LabeledPartition {
    n: u32,
    blocks: Vec<Vec<u32>>,
    labels: Vec<Site>,
    /// `owner[e - 1]` is the index of the block holding element `e`.
    owner: Vec<u32>,
}

impl LabeledPartition {
    pub fn from_entries(n: u32, entries: Vec<(Vec<u32>, Site)>) -> Result<Self> {
        let (mut blocks, mut labels): (Vec<_>, Vec<_>) = entries.into_iter().unzip();
        check_blocks(n, &blocks)?;
        for b in &mut blocks {
            b.sort_unstable();
        }
        let mut order: Vec<usize> = (0..blocks.len()).collect();
        order.sort_unstable_by_key(|&i| blocks[i][0]);
        blocks = order.iter().map(|&i| std::mem::take(&mut blocks[i])).collect();
        labels = order.iter().map(|&i| labels[i]).collect();
        let mut owner = vec![0; n as usize];
        for (i, b) in blocks.iter().enumerate() {
            for &e in b {
                owner[e as usize - 1] = i as u32;
            }
        }
        Ok(LabeledPartition {
            n,
            blocks,
            labels,
            owner,
        })
    }

    /// All singletons, element `i` labelled `labels[i - 1]`.
    pub fn singletons(n: u32, labels: &[Site]) -> Result<Self> {
        if labels.len() != n as usize {
            return invalid(format!("{} labels given for {n} elements", labels.len()));
        }
        Self::from_entries(
            n,
            labels.iter().enumerate().map(|(i, &s)| (vec![i as u32 + 1], s)).collect(),
        )
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Number of blocks, `#pi`.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn blocks(&self) -> &[Vec<u32>] {
        &self.blocks
    }

    pub fn labels(&self) -> &[Site] {
        &self.labels
    }

    pub fn entries(&self) -> impl Iterator<Item = (&[u32], Site)> {
        self.blocks.iter().map(Vec::as_slice).zip(self.labels.iter().copied())
    }

    /// Index of the block containing element `e`.
    pub fn block_of(&self, e: u32) -> usize {
        self.owner[e as usize - 1] as usize
    }

    /// Label of the block containing element `e`.
    pub fn label_of(&self, e: u32) -> Site {
        self.labels[self.block_of(e)]
    }

    /// Number of blocks labelled `site`.
    pub fn count_at(&self, site: Site) -> usize {
        self.labels.iter().filter(|&&s| s == site).count()
    }

    /// Merges the blocks at `indices`, which must all carry `new_label`.
    pub fn merge(&self, indices: &[usize], new_label: Site) -> Result<Self> {
        let chosen = validate_indices(indices, self.blocks.len())?;
        if let Some(&i) = chosen.iter().find(|&&i| self.labels[i] != new_label) {
            return invalid(format!(
                "block {i} is labelled {} but the merge happens at {new_label}",
                self.labels[i]
            ));
        }
        self.merge_unchecked_labels(&chosen, new_label)
    }

    /// Like [`merge`](Self::merge) without requiring equal labels.
    pub fn merge_relaxed(&self, indices: &[usize], new_label: Site) -> Result<Self> {
        let chosen = validate_indices(indices, self.blocks.len())?;
        self.merge_unchecked_labels(&chosen, new_label)
    }

    fn merge_unchecked_labels(&self, chosen: &[usize], new_label: Site) -> Result<Self> {
        let mut merged = Vec::new();
        let mut entries = Vec::with_capacity(self.blocks.len());
        for (i, (b, s)) in self.blocks.iter().zip(&self.labels).enumerate() {
            if chosen.contains(&i) {
                merged.extend_from_slice(b);
            } else {
                entries.push((b.clone(), *s));
            }
        }
        entries.push((merged, new_label));
        Self::from_entries(self.n, entries)
    }

    pub fn unlabeled(&self) -> UnlabeledPartition {
        UnlabeledPartition {
            n: self.n,
            blocks: self.blocks.clone(),
        }
    }

    /// The labelled partition induced on `[m]`.
    pub fn restrict(&self, m: u32) -> Result<Self> {
        if m == 0 || m > self.n {
            return invalid(format!("restriction size {m} outside [1, {}]", self.n));
        }
        let entries = self
            .entries()
            .map(|(b, s)| (b.iter().copied().filter(|&e| e <= m).collect::<Vec<_>>(), s))
            .filter(|(b, _)| !b.is_empty())
            .collect();
        Self::from_entries(m, entries)
    }

    /// True iff every pair of distinct blocks is at torus distance in `[a, b]`.
    pub fn in_distance_class(&self, torus: &Torus, a: f64, b: f64) -> bool {
        self.labels.iter().enumerate().all(|(i, &si)| {
            self.labels[i + 1..].iter().all(|&sj| {
                let d = torus.distance(si, sj);
                d >= a && d <= b
            })
        })
    }
}

/// `sup_m 2^-m 1{p|_m != q|_m}`: `2^-m` for the smallest `m` at which the
/// restrictions differ, 0 when the partitions are equal.
pub fn partition_metric(p: &LabeledPartition, q: &LabeledPartition) -> Result<f64> {
    if p.n != q.n {
        return invalid(format!("partitions of [{}] and [{}] are not comparable", p.n, q.n));
    }
    for m in 1..=p.n {
        if p.restrict(m)? != q.restrict(m)? {
            return Ok(0.5f64.powi(m as i32));
        }
    }
    Ok(0.0)
}

impl fmt::Display for LabeledPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (b, s)) in self.entries().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            format_block(f, b)?;
            write!(f, "@{s}")?;
        }
        Ok(())
    }
}

impl FromStr for LabeledPartition {
    type Err = Error;

    /// Parses the canonical text form, e.g. `{1,3}@(0,0)|{2}@(5,-5)`.
    fn from_str(s: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for part in s.trim().split('|') {
            let (block, site) = part
                .split_once('@')
                .ok_or_else(|| Error::InvalidArgument(format!("entry `{part}` has no label")))?;
            entries.push((parse_block(block)?, site.parse()?));
        }
        let n = entries.iter().map(|(b, _)| b.len() as u32).sum();
        Self::from_entries(n, entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const X: Site = Site::new(0, 0);
    const Y: Site = Site::new(1, 0);

    fn lp(s: &str) -> LabeledPartition {
        s.parse().unwrap()
    }

    #[test]
    fn singletons_examples() {
        let p = LabeledPartition::singletons(1, &[X]).unwrap();
        assert_eq!(p.to_string(), "{1}@(0,0)");
        let p = LabeledPartition::singletons(3, &[X, Y, Site::new(2, 0)]).unwrap();
        assert_eq!(p.to_string(), "{1}@(0,0)|{2}@(1,0)|{3}@(2,0)");
        assert!(LabeledPartition::singletons(3, &[X]).is_err());
    }

    #[test]
    fn far_grid_layout() {
        let torus = Torus::with_side(99).unwrap();
        let offsets = [0i64, 33, 66];
        let labels: Vec<Site> = offsets
            .iter()
            .flat_map(|&a| offsets.iter().map(move |&b| (a, b)))
            .map(|(a, b)| torus.wrap(a, b))
            .collect();
        let p = LabeledPartition::singletons(9, &labels).unwrap();
        assert_eq!(p.len(), 9);
        assert!(p.in_distance_class(&torus, 33.0, torus.diameter()));
    }

    #[test]
    fn merge_examples() {
        let p = LabeledPartition::singletons(2, &[X, X]).unwrap();
        assert_eq!(p.merge(&[0, 1], X).unwrap().to_string(), "{1,2}@(0,0)");

        let p = LabeledPartition::singletons(3, &[X, X, X]).unwrap();
        let q = p.merge(&[1, 2], X).unwrap();
        assert_eq!(q.to_string(), "{1}@(0,0)|{2,3}@(0,0)");
        let all = p.merge(&[0, 1, 2], X).unwrap();
        assert_eq!(all.len(), 1);
        assert_eq!(all.blocks()[0], vec![1, 2, 3]);
    }

    #[test]
    fn merge_errors() {
        let p = LabeledPartition::singletons(3, &[X, Y, X]).unwrap();
        assert!(p.merge(&[0], X).is_err());
        assert!(p.merge(&[0, 3], X).is_err());
        assert!(p.merge(&[0, 0], X).is_err());
        assert!(p.merge(&[0, 1], X).is_err());
        assert!(p.merge_relaxed(&[0, 1], X).is_ok());
    }

    #[test]
    fn projection_drops_labels() {
        let p = lp("{1,2}@(0,0)");
        assert_eq!(p.unlabeled().to_string(), "{1,2}");
        let a = LabeledPartition::singletons(3, &[X, Y, X]).unwrap();
        let b = LabeledPartition::singletons(3, &[Y, Y, Y]).unwrap();
        assert_eq!(a.unlabeled(), b.unlabeled());
        assert_eq!(a.unlabeled().to_string(), "{1}|{2}|{3}");
    }

    #[test]
    fn restrict_examples() {
        let p = lp("{1,3}@(0,0)|{2}@(1,0)");
        assert_eq!(p.restrict(2).unwrap().to_string(), "{1}@(0,0)|{2}@(1,0)");
        assert_eq!(p.restrict(3).unwrap(), p);
        assert_eq!(lp("{1,2,3}@(0,0)").restrict(1).unwrap().to_string(), "{1}@(0,0)");
        assert!(p.restrict(0).is_err());
        assert!(p.restrict(4).is_err());
    }

    #[test]
    fn metric_examples() {
        let a = lp("{1,2}@(0,0)|{3}@(0,0)");
        let b = lp("{1,2,3}@(0,0)");
        assert_eq!(partition_metric(&a, &a).unwrap(), 0.0);
        assert_eq!(partition_metric(&a, &b).unwrap(), 0.125);
        let c = lp("{1,2}@(1,0)|{3}@(0,0)");
        assert_eq!(partition_metric(&a, &c).unwrap(), 0.5);
        assert!(partition_metric(&a, &lp("{1}@(0,0)")).is_err());
    }

    #[test]
    fn distance_class_examples() {
        let torus = Torus::new(49);
        assert!(lp("{1,2}@(0,0)").in_distance_class(&torus, 5.0, 6.0));
        let p = lp("{1}@(0,0)|{2}@(3,0)");
        assert!(p.in_distance_class(&torus, 2.0, 70.0));
        assert!(!p.in_distance_class(&torus, 4.0, 70.0));
    }

    #[test]
    fn text_form_roundtrip() {
        let s = "{1,3}@(0,0)|{2}@(5,-5)";
        assert_eq!(lp(s).to_string(), s);
        assert!("{1,1}@(0,0)".parse::<LabeledPartition>().is_err());
        assert!("{1}".parse::<LabeledPartition>().is_err());
    }

    #[test]
    fn block_lookup() {
        let p = lp("{1,3}@(0,0)|{2}@(5,-5)");
        assert_eq!(p.block_of(3), 0);
        assert_eq!(p.label_of(2), Site::new(5, -5));
        assert_eq!(p.count_at(X), 1);
    }
}
