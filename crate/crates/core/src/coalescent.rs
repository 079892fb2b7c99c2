//! Exact-event simulation of the spatial Lambda-coalescent on a torus.
//!
//! Every block jumps to each of its four neighbours at rate 1/4. Blocks
//! sharing a site merge at the rates of the configured [`Mechanism`]; in
//! instantaneous mode they merge as soon as they meet. An optional per-block
//! killing rate removes blocks (used for infinite-alleles mutation).
//!
//! Blocks are identified in events by their minimal element, which is
//! stable: a merged block is named after the smallest of its parts.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lambda::{Mechanism, RateTable};
use crate::partition::LabeledPartition;
use crate::torus::{Site, Torus};

/// Default cap on events per replicate.
pub const DEFAULT_EVENT_CAP: u64 = 1_000_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimOptions {
    pub event_cap: u64,
    /// Per-block killing rate; zero disables mutation events.
    pub kill_rate: f64,
    /// Harness switch: when false no merges ever happen.
    pub merges_enabled: bool,
    /// Harness switch: when false blocks never move.
    pub migration_enabled: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            event_cap: DEFAULT_EVENT_CAP,
            kill_rate: 0.0,
            merges_enabled: true,
            migration_enabled: true,
        }
    }
}

impl SimOptions {
    pub fn with_kill_rate(kill_rate: f64) -> Self {
        SimOptions {
            kill_rate,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum EventKind {
    Migration { block: u32, from: Site, to: Site },
    /// Merged block ids in increasing order; the new block is `blocks[0]`.
    Merge { blocks: Vec<u32>, site: Site },
    /// A block hit by mutation and removed, with its size.
    Mutation { block: u32, site: Site, size: u32 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StepOutcome {
    Event { dwell: f64, event: Event },
    /// Blocks remain but no event has positive rate.
    Absorbed,
    /// No blocks remain.
    Empty,
}

#[derive(Clone, Debug)]
struct Block {
    members: Vec<u32>,
    site: Site,
    cell: u32,
}

/// A running spatial coalescent. One replicate, single-threaded.
#[derive(Clone, Debug)]
pub struct SpatialCoalescent {
    torus: Torus,
    mechanism: Mechanism,
    rates: Option<RateTable>,
    opts: SimOptions,
    n: u32,
    blocks: Vec<Block>,
    occupancy: Vec<u16>,
    /// Cells holding at least two blocks.
    crowded: Vec<u32>,
    clock: f64,
    events: u64,
}

impl SpatialCoalescent {
    pub fn new(
        initial: &LabeledPartition,
        torus: Torus,
        mechanism: Mechanism,
        opts: SimOptions,
    ) -> Result<Self> {
        if !(opts.kill_rate >= 0.0) || !opts.kill_rate.is_finite() {
            return invalid("kill rate must be finite and nonnegative");
        }
        let mut occupancy = vec![0u16; torus.site_count()];
        let mut blocks = Vec::with_capacity(initial.len());
        for (members, site) in initial.entries() {
            if !torus.contains(site) {
                return invalid(format!("label {site} lies outside T^{}", torus.half()));
            }
            let cell = torus.index(site) as u32;
            occupancy[cell as usize] += 1;
            blocks.push(Block {
                members: members.to_vec(),
                site,
                cell,
            });
        }
        let mut crowded: Vec<u32> = blocks
            .iter()
            .map(|b| b.cell)
            .filter(|&c| occupancy[c as usize] >= 2)
            .collect();
        crowded.sort_unstable();
        crowded.dedup();
        let rates = mechanism
            .measure()
            .map(|m| RateTable::new(m, initial.len().max(2) as u32));
        Ok(SpatialCoalescent {
            torus,
            mechanism,
            rates,
            opts,
            n: initial.n(),
            blocks,
            occupancy,
            crowded,
            clock: 0.0,
            events: 0,
        })
    }

    pub fn torus(&self) -> &Torus {
        &self.torus
    }

    pub fn mechanism(&self) -> &Mechanism {
        &self.mechanism
    }

    pub fn options(&self) -> &SimOptions {
        &self.opts
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn event_count(&self) -> u64 {
        self.events
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn sample_size(&self) -> u32 {
        self.n
    }

    /// Sizes of the current blocks, in internal order.
    pub fn block_sizes(&self) -> impl Iterator<Item = usize> + '_ {
        self.blocks.iter().map(|b| b.members.len())
    }

    /// Current blocks with their labels, ordered by minimal element.
    pub fn blocks(&self) -> Vec<(Vec<u32>, Site)> {
        let mut out: Vec<_> = self
            .blocks
            .iter()
            .map(|b| (b.members.clone(), b.site))
            .collect();
        out.sort_unstable_by_key(|(m, _)| m[0]);
        out
    }

    /// The current labelled partition; fails once mutation removed elements.
    pub fn partition(&self) -> Result<LabeledPartition> {
        LabeledPartition::from_entries(self.n, self.blocks())
    }

    /// Total rate of all possible next events.
    pub fn total_rate(&self) -> f64 {
        let (migration, kill, merge) = self.rate_parts();
        migration + kill + merge
    }

    fn rate_parts(&self) -> (f64, f64, f64) {
        let b = self.blocks.len() as f64;
        let migration = if self.opts.migration_enabled { b } else { 0.0 };
        let kill = self.opts.kill_rate * b;
        let merge = match (&self.rates, self.opts.merges_enabled) {
            (Some(table), true) => self
                .crowded
                .iter()
                .map(|&c| table.total(self.occupancy[c as usize] as u32))
                .sum(),
            _ => 0.0,
        };
        (migration, kill, merge)
    }

    /// True when every pair of blocks is at least `threshold` apart.
    pub fn is_separated(&self, threshold: f64) -> bool {
        let t2 = threshold * threshold;
        self.blocks.iter().enumerate().all(|(i, a)| {
            self.blocks[i + 1..]
                .iter()
                .all(|b| self.torus.distance_sq(a.site, b.site) as f64 >= t2)
        })
    }

    /// In instantaneous mode a landing on an occupied site leaves a merge
    /// pending, executed by the next step with zero dwell.
    pub fn has_pending_merge(&self) -> bool {
        matches!(self.mechanism, Mechanism::Instantaneous)
            && self.opts.merges_enabled
            && !self.crowded.is_empty()
    }

    /// Samples and applies the next event.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<StepOutcome> {
        if self.blocks.is_empty() {
            return Ok(StepOutcome::Empty);
        }
        if self.events >= self.opts.event_cap {
            return Err(Error::Runaway {
                cap: self.opts.event_cap,
                partial: Box::new(EventLog::empty(self.partition_lossy())),
            });
        }
        if self.has_pending_merge() {
            let cell = self.crowded[0];
            let all: Vec<usize> = self.blocks_in(cell);
            let event = self.apply_merge(cell, &all);
            return Ok(self.finish(0.0, event));
        }
        let (migration, kill, merge) = self.rate_parts();
        let total = migration + kill + merge;
        if !(total > 0.0) {
            return Ok(StepOutcome::Absorbed);
        }
        let e: f64 = rng.sample(Exp1);
        let dwell = e / total;
        let u = rng.random::<f64>() * total;
        let event = if u < migration || (kill == 0.0 && merge == 0.0) {
            let i = rng.random_range(0..self.blocks.len());
            let dir = rng.random_range(0..4);
            self.apply_migration(i, dir)
        } else if u - migration < kill || merge == 0.0 {
            let i = rng.random_range(0..self.blocks.len());
            self.apply_kill(i)
        } else {
            let mut u = u - migration - kill;
            let table = self.rates.as_ref().expect("merge rate implies a rate table");
            let mut cell = *self.crowded.last().unwrap();
            for &c in &self.crowded {
                let w = table.total(self.occupancy[c as usize] as u32);
                if u < w {
                    cell = c;
                    break;
                }
                u -= w;
            }
            let here = self.blocks_in(cell);
            let (_, subset) = table
                .sample_merge(here.len() as u32, rng)
                .expect("crowded site has a positive merge rate");
            let chosen: Vec<usize> = subset.into_iter().map(|j| here[j]).collect();
            self.apply_merge(cell, &chosen)
        };
        Ok(self.finish(dwell, event))
    }

    fn finish(&mut self, dwell: f64, kind: EventKind) -> StepOutcome {
        self.clock += dwell;
        self.events += 1;
        StepOutcome::Event {
            dwell,
            event: Event {
                time: self.clock,
                kind,
            },
        }
    }

    fn partition_lossy(&self) -> LabeledPartition {
        self.partition()
            .unwrap_or_else(|_| LabeledPartition::singletons(1, &[Site::ORIGIN]).unwrap())
    }

    fn blocks_in(&self, cell: u32) -> Vec<usize> {
        self.blocks
            .iter()
            .enumerate()
            .filter(|(_, b)| b.cell == cell)
            .map(|(i, _)| i)
            .collect()
    }

    fn leave(&mut self, cell: u32) {
        let occ = &mut self.occupancy[cell as usize];
        *occ -= 1;
        if *occ == 1 {
            self.crowded.retain(|&c| c != cell);
        }
    }

    fn arrive(&mut self, cell: u32) {
        let occ = &mut self.occupancy[cell as usize];
        *occ += 1;
        if *occ == 2 {
            self.crowded.push(cell);
        }
    }

    fn apply_migration(&mut self, i: usize, dir: usize) -> EventKind {
        let from = self.blocks[i].site;
        let to = self.torus.step(from, dir);
        let (old, new) = (self.blocks[i].cell, self.torus.index(to) as u32);
        self.leave(old);
        self.arrive(new);
        let b = &mut self.blocks[i];
        b.site = to;
        b.cell = new;
        EventKind::Migration {
            block: b.members[0],
            from,
            to,
        }
    }

    fn apply_kill(&mut self, i: usize) -> EventKind {
        let b = self.blocks.swap_remove(i);
        self.leave(b.cell);
        EventKind::Mutation {
            block: b.members[0],
            site: b.site,
            size: b.members.len() as u32,
        }
    }

    fn apply_merge(&mut self, cell: u32, chosen: &[usize]) -> EventKind {
        debug_assert!(chosen.len() >= 2);
        let site = self.blocks[chosen[0]].site;
        let mut ids: Vec<u32> = chosen.iter().map(|&i| self.blocks[i].members[0]).collect();
        ids.sort_unstable();
        let mut members: Vec<u32> = Vec::new();
        let mut order = chosen.to_vec();
        order.sort_unstable_by(|a, b| b.cmp(a));
        for i in order {
            members.extend(self.blocks.swap_remove(i).members);
        }
        members.sort_unstable();
        for _ in 0..chosen.len() {
            self.leave(cell);
        }
        self.arrive(cell);
        self.blocks.push(Block {
            members,
            site,
            cell,
        });
        EventKind::Merge { blocks: ids, site }
    }

    /// Runs until `stop` holds, recording every event.
    ///
    /// `stop` is checked before each event and never while an instantaneous
    /// merge is pending. Returns a runaway error carrying the partial log if
    /// the event cap is hit.
    pub fn run_until<R, F>(&mut self, mut stop: F, rng: &mut R) -> Result<EventLog>
    where
        R: Rng + ?Sized,
        F: FnMut(&SpatialCoalescent) -> bool,
    {
        let initial = self.partition()?;
        let mut events = Vec::new();
        loop {
            if !self.has_pending_merge() && stop(self) {
                break;
            }
            match self.step(rng) {
                Ok(StepOutcome::Event { event, .. }) => events.push(event),
                Ok(StepOutcome::Absorbed | StepOutcome::Empty) => break,
                Err(Error::Runaway { cap, .. }) => {
                    let terminal = self.blocks();
                    return Err(Error::Runaway {
                        cap,
                        partial: Box::new(EventLog {
                            initial,
                            events,
                            terminal,
                        }),
                    });
                }
                Err(e) => return Err(e),
            }
        }
        Ok(EventLog {
            initial,
            events,
            terminal: self.blocks(),
        })
    }
}

/// The timed record of one replicate.
#[derive(Clone, Debug, PartialEq)]
pub struct EventLog {
    pub initial: LabeledPartition,
    pub events: Vec<Event>,
    /// Surviving blocks at the end, ordered by minimal element.
    pub terminal: Vec<(Vec<u32>, Site)>,
}

/// Block structure during a replay, keyed by minimal element.
#[derive(Clone, Debug, Default)]
pub struct ReplayState {
    blocks: BTreeMap<u32, (Vec<u32>, Site)>,
    owner: BTreeMap<u32, u32>,
}

impl ReplayState {
    pub fn new(initial: &LabeledPartition) -> Self {
        let mut state = ReplayState::default();
        for (members, site) in initial.entries() {
            for &e in members {
                state.owner.insert(e, members[0]);
            }
            state.blocks.insert(members[0], (members.to_vec(), site));
        }
        state
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Id (minimal element) of the block holding `e`, if `e` is still present.
    pub fn block_of(&self, e: u32) -> Option<u32> {
        self.owner.get(&e).copied()
    }

    pub fn site_of(&self, e: u32) -> Option<Site> {
        self.block_of(e).map(|id| self.blocks[&id].1)
    }

    pub fn blocks(&self) -> impl Iterator<Item = (&Vec<u32>, Site)> {
        self.blocks.values().map(|(m, s)| (m, *s))
    }

    pub fn apply(&mut self, kind: &EventKind) -> Result<()> {
        match kind {
            EventKind::Migration { block, from, to } => {
                let entry = self
                    .blocks
                    .get_mut(block)
                    .ok_or_else(|| Error::InvalidState(format!("no block {block} to migrate")))?;
                if entry.1 != *from {
                    return Err(Error::InvalidState(format!(
                        "block {block} is at {}, not {from}",
                        entry.1
                    )));
                }
                entry.1 = *to;
            }
            EventKind::Merge { blocks, site } => {
                if blocks.len() < 2 {
                    return Err(Error::InvalidState("merge of fewer than two blocks".into()));
                }
                let mut members = Vec::new();
                for id in blocks {
                    let (m, s) = self
                        .blocks
                        .remove(id)
                        .ok_or_else(|| Error::InvalidState(format!("no block {id} to merge")))?;
                    if s != *site {
                        return Err(Error::InvalidState(format!(
                            "block {id} at {s} cannot merge at {site}"
                        )));
                    }
                    members.extend(m);
                }
                members.sort_unstable();
                let id = members[0];
                for &e in &members {
                    self.owner.insert(e, id);
                }
                self.blocks.insert(id, (members, *site));
            }
            EventKind::Mutation { block, site, size } => {
                let (m, s) = self
                    .blocks
                    .remove(block)
                    .ok_or_else(|| Error::InvalidState(format!("no block {block} to kill")))?;
                if s != *site || m.len() != *size as usize {
                    return Err(Error::InvalidState(format!("mutation record for {block} mismatched")));
                }
                for e in m {
                    self.owner.remove(&e);
                }
            }
        }
        Ok(())
    }

    pub fn snapshot(&self) -> Vec<(Vec<u32>, Site)> {
        self.blocks.values().cloned().collect()
    }
}

impl EventLog {
    pub fn empty(initial: LabeledPartition) -> Self {
        let terminal = initial.entries().map(|(m, s)| (m.to_vec(), s)).collect();
        EventLog {
            initial,
            events: Vec::new(),
            terminal,
        }
    }

    pub fn end_time(&self) -> f64 {
        self.events.last().map_or(0.0, |e| e.time)
    }

    /// Replays the events from the initial partition and returns the final
    /// blocks; errors on any inconsistent record.
    pub fn replay(&self) -> Result<Vec<(Vec<u32>, Site)>> {
        let mut state = ReplayState::new(&self.initial);
        for e in &self.events {
            state.apply(&e.kind)?;
        }
        Ok(state.snapshot())
    }

    /// Calls `visit(time, state)` at time 0 and after every event.
    pub fn for_each_state(&self, mut visit: impl FnMut(f64, &ReplayState)) -> Result<()> {
        let mut state = ReplayState::new(&self.initial);
        visit(0.0, &state);
        for e in &self.events {
            state.apply(&e.kind)?;
            visit(e.time, &state);
        }
        Ok(())
    }

    /// The terminal blocks as a partition of `[n]`; fails if mutation
    /// removed elements.
    pub fn terminal_partition(&self) -> Result<LabeledPartition> {
        LabeledPartition::from_entries(self.initial.n(), self.terminal.clone())
    }

    /// Writes the log as JSON lines: a start record holding the initial
    /// partition, then one record per event.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        let start = EventRecord {
            t: 0.0,
            kind: "start".into(),
            blocks: Vec::new(),
            from: None,
            to: None,
            size: None,
            partition: Some(self.initial.to_string()),
        };
        writeln!(out, "{}", serde_json::to_string(&start)?)?;
        for e in &self.events {
            writeln!(out, "{}", serde_json::to_string(&EventRecord::from(e))?)?;
        }
        Ok(())
    }

    /// Reads a log written by [`write_jsonl`](Self::write_jsonl); the
    /// terminal blocks are recomputed by replay.
    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self> {
        let mut initial = None;
        let mut events = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: i + 1,
                message,
            };
            let rec: EventRecord =
                serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
            if rec.kind == "start" {
                let p = rec
                    .partition
                    .ok_or_else(|| parse_err("start record without partition".into()))?;
                initial = Some(p.parse::<LabeledPartition>().map_err(|e| parse_err(e.to_string()))?);
            } else {
                events.push(rec.into_event().map_err(|e| parse_err(e.to_string()))?);
            }
        }
        let initial = initial.ok_or_else(|| Error::Parse {
            line: 1,
            message: "missing start record".into(),
        })?;
        let mut log = EventLog {
            initial,
            events,
            terminal: Vec::new(),
        };
        log.terminal = log.replay()?;
        Ok(log)
    }
}

/// Line format of the event dump: `{t, kind, blocks, from, to}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct EventRecord {
    t: f64,
    kind: String,
    #[serde(default)]
    blocks: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    from: Option<Site>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    to: Option<Site>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    size: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    partition: Option<String>,
}

impl From<&Event> for EventRecord {
    fn from(e: &Event) -> Self {
        let base = |kind: &str, blocks: Vec<u32>| EventRecord {
            t: e.time,
            kind: kind.into(),
            blocks,
            from: None,
            to: None,
            size: None,
            partition: None,
        };
        match &e.kind {
            EventKind::Migration { block, from, to } => EventRecord {
                from: Some(*from),
                to: Some(*to),
                ..base("migration", vec![*block])
            },
            EventKind::Merge { blocks, site } => EventRecord {
                to: Some(*site),
                ..base("merge", blocks.clone())
            },
            EventKind::Mutation { block, site, size } => EventRecord {
                from: Some(*site),
                size: Some(*size),
                ..base("mutation", vec![*block])
            },
        }
    }
}

impl EventRecord {
    fn into_event(self) -> Result<Event> {
        let need = |v: Option<Site>, what: &str| {
            v.ok_or_else(|| Error::InvalidArgument(format!("{} record without `{what}`", self.kind)))
        };
        let kind = match self.kind.as_str() {
            "migration" => EventKind::Migration {
                block: *self
                    .blocks
                    .first()
                    .ok_or_else(|| Error::InvalidArgument("migration without block".into()))?,
                from: need(self.from, "from")?,
                to: need(self.to, "to")?,
            },
            "merge" => EventKind::Merge {
                blocks: self.blocks.clone(),
                site: need(self.to, "to")?,
            },
            "mutation" => EventKind::Mutation {
                block: *self
                    .blocks
                    .first()
                    .ok_or_else(|| Error::InvalidArgument("mutation without block".into()))?,
                site: need(self.from, "from")?,
                size: self
                    .size
                    .ok_or_else(|| Error::InvalidArgument("mutation without size".into()))?,
            },
            other => return invalid(format!("unknown event kind `{other}`")),
        };
        Ok(Event { time: self.t, kind })
    }
}

/// `tau(i, j)`: first time the blocks holding `i` and `j` share a site.
pub fn first_meeting_time(log: &EventLog, i: u32, j: u32) -> Result<Option<f64>> {
    let mut found = None;
    log.for_each_state(|t, s| {
        if found.is_none() {
            if let (Some(a), Some(b)) = (s.site_of(i), s.site_of(j)) {
                if a == b {
                    found = Some(t);
                }
            }
        }
    })?;
    Ok(found)
}

/// `tau_c(i, j)`: first time `i` and `j` lie in the same block.
pub fn first_coalescence_time(log: &EventLog, i: u32, j: u32) -> Result<Option<f64>> {
    let mut found = None;
    log.for_each_state(|t, s| {
        if found.is_none() {
            if let (Some(a), Some(b)) = (s.block_of(i), s.block_of(j)) {
                if a == b {
                    found = Some(t);
                }
            }
        }
    })?;
    Ok(found)
}

/// Meeting and coalescence jump times with their waiting times.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpTimes {
    /// `tau_1 < tau_2 < ...`: distinct positive first-meeting times of pairs.
    pub meetings: Vec<f64>,
    /// `tau_{c,1} < tau_{c,2} < ...`: times of merge events.
    pub coalescences: Vec<f64>,
    pub meeting_waits: Vec<f64>,
    pub coalescence_waits: Vec<f64>,
}

fn waits(times: &[f64]) -> Vec<f64> {
    let mut prev = 0.0;
    times
        .iter()
        .map(|&t| {
            let w = t - prev;
            prev = t;
            w
        })
        .collect()
}

/// Extracts the jump time sequences of a log in one replay.
pub fn jump_time_sequences(log: &EventLog) -> Result<JumpTimes> {
    let n = log.initial.n();
    let mut met = vec![vec![false; n as usize + 1]; n as usize + 1];
    let mut meetings: Vec<f64> = Vec::new();
    let mut coalescences: Vec<f64> = Vec::new();
    let mut record_meetings = |t: f64, s: &ReplayState, met: &mut Vec<Vec<bool>>| {
        let blocks: Vec<(&Vec<u32>, Site)> = s.blocks().collect();
        for (x, (mx, sx)) in blocks.iter().enumerate() {
            for (my, sy) in &blocks[x + 1..] {
                if sx != sy {
                    continue;
                }
                for &i in mx.iter() {
                    for &j in my.iter() {
                        let (a, b) = (i.min(j) as usize, i.max(j) as usize);
                        if !met[a][b] {
                            met[a][b] = true;
                            if t > 0.0 && meetings.last() != Some(&t) {
                                meetings.push(t);
                            }
                        }
                    }
                }
            }
        }
    };
    let mut state = ReplayState::new(&log.initial);
    // Pairs inside a block have met at time 0.
    for (m, _) in state.blocks() {
        for &i in m {
            for &j in m {
                met[i.min(j) as usize][i.max(j) as usize] = true;
            }
        }
    }
    record_meetings(0.0, &state, &mut met);
    for e in &log.events {
        state.apply(&e.kind)?;
        match &e.kind {
            EventKind::Migration { .. } => record_meetings(e.time, &state, &mut met),
            EventKind::Merge { .. } => {
                if coalescences.last() != Some(&e.time) || e.time == 0.0 {
                    coalescences.push(e.time);
                }
            }
            EventKind::Mutation { .. } => {}
        }
    }
    meetings.sort_by(f64::total_cmp);
    Ok(JumpTimes {
        meeting_waits: waits(&meetings),
        coalescence_waits: waits(&coalescences),
        meetings,
        coalescences,
    })
}

/// `int_0^T #pi_t dt`, the total branch length covered by the log.
///
/// With `run_to_mrca` the log must end with a single block and the
/// integral runs to the time of the final event.
pub fn total_tree_length(log: &EventLog, run_to_mrca: bool) -> Result<f64> {
    if run_to_mrca && log.terminal.len() > 1 {
        return Err(Error::InvalidState(format!(
            "log ends with {} blocks, not at the MRCA",
            log.terminal.len()
        )));
    }
    let mut blocks = log.initial.len() as f64;
    let mut prev = 0.0;
    let mut length = 0.0;
    for e in &log.events {
        length += blocks * (e.time - prev);
        prev = e.time;
        match &e.kind {
            EventKind::Merge { blocks: ids, .. } => blocks -= (ids.len() - 1) as f64,
            EventKind::Mutation { .. } => blocks -= 1.0,
            EventKind::Migration { .. } => {}
        }
    }
    Ok(length)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambda::LambdaMeasure;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn kingman() -> Mechanism {
        Mechanism::Lambda(LambdaMeasure::kingman())
    }

    fn sim(p: &str, half: u32, mech: Mechanism) -> SpatialCoalescent {
        SpatialCoalescent::new(&p.parse().unwrap(), Torus::new(half), mech, SimOptions::default())
            .unwrap()
    }

    #[test]
    fn single_block_only_migrates() {
        let mut s = sim("{1}@(0,0)", 3, kingman());
        assert_eq!(s.total_rate(), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            match s.step(&mut rng).unwrap() {
                StepOutcome::Event { event, .. } => {
                    assert!(matches!(event.kind, EventKind::Migration { .. }))
                }
                other => panic!("unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn colocated_pair_rates() {
        let s = sim("{1}@(0,0)|{2}@(0,0)", 3, kingman());
        assert_eq!(s.rate_parts(), (2.0, 0.0, 1.0));
        let apart = sim("{1}@(0,0)|{2}@(1,0)", 3, kingman());
        assert_eq!(apart.rate_parts(), (2.0, 0.0, 0.0));
    }

    #[test]
    fn no_blocks_left_or_frozen() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let frozen = SimOptions {
            migration_enabled: false,
            ..SimOptions::default()
        };
        let mut s = SpatialCoalescent::new(
            &"{1}@(0,0)".parse().unwrap(),
            Torus::new(2),
            kingman(),
            frozen,
        )
        .unwrap();
        assert_eq!(s.step(&mut rng).unwrap(), StepOutcome::Absorbed);
        let mut killed = SpatialCoalescent::new(
            &"{1}@(0,0)".parse().unwrap(),
            Torus::new(2),
            kingman(),
            SimOptions {
                kill_rate: 1.0,
                ..frozen
            },
        )
        .unwrap();
        assert!(matches!(killed.step(&mut rng).unwrap(), StepOutcome::Event { .. }));
        assert_eq!(killed.step(&mut rng).unwrap(), StepOutcome::Empty);
    }

    #[test]
    fn run_to_mrca_ends_in_merge() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut s = sim("{1}@(0,0)|{2}@(0,0)", 2, kingman());
        let log = s.run_until(|s| s.block_count() == 1, &mut rng).unwrap();
        assert!(matches!(log.events.last().unwrap().kind, EventKind::Merge { .. }));
        assert_eq!(log.replay().unwrap(), log.terminal);
        let len = total_tree_length(&log, true).unwrap();
        assert!((len - 2.0 * log.end_time()).abs() < 1e-9);
    }

    #[test]
    fn zero_horizon_gives_empty_log() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut s = sim("{1}@(0,0)|{2}@(1,1)", 4, kingman());
        let log = s.run_until(|s| s.clock() >= 0.0, &mut rng).unwrap();
        assert!(log.events.is_empty());
        assert_eq!(total_tree_length(&log, false).unwrap(), 0.0);
        assert!(total_tree_length(&log, true).is_err());
    }

    #[test]
    fn separation_stop_condition() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let torus = Torus::new(49);
        let start = LabeledPartition::singletons(
            9,
            &[Site::ORIGIN; 9],
        )
        .unwrap();
        let mut s = SpatialCoalescent::new(
            &start,
            torus,
            Mechanism::Lambda(LambdaMeasure::bolthausen_sznitman()),
            SimOptions::default(),
        )
        .unwrap();
        let log = s
            .run_until(|s| s.block_count() <= 1 || s.is_separated(8.33), &mut rng)
            .unwrap();
        let end = log.terminal_partition().unwrap();
        assert!(end.len() <= 1 || end.in_distance_class(&torus, 8.33, torus.diameter()));
    }

    #[test]
    fn instantaneous_merges_on_landing() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..200 {
            let mut s = sim("{1}@(0,0)|{2}@(1,0)|{3}@(-1,1)", 1, Mechanism::Instantaneous);
            let log = s.run_until(|s| s.block_count() == 1, &mut rng).unwrap();
            let mut state = ReplayState::new(&log.initial);
            for (k, e) in log.events.iter().enumerate() {
                state.apply(&e.kind).unwrap();
                let mut sites: Vec<Site> = state.blocks().map(|(_, s)| s).collect();
                let before = sites.len();
                sites.sort();
                sites.dedup();
                if sites.len() != before {
                    // Only allowed right before the zero-dwell merge.
                    let next = &log.events[k + 1];
                    assert!(matches!(next.kind, EventKind::Merge { .. }));
                    assert_eq!(next.time, e.time);
                }
            }
            let jt = jump_time_sequences(&log).unwrap();
            assert_eq!(jt.meetings, jt.coalescences);
            for (i, j) in [(1, 2), (1, 3), (2, 3)] {
                assert_eq!(
                    first_meeting_time(&log, i, j).unwrap(),
                    first_coalescence_time(&log, i, j).unwrap()
                );
            }
        }
    }

    #[test]
    fn pair_time_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut s = sim("{1,2}@(0,0)|{3}@(0,0)|{4}@(2,2)", 3, kingman());
        let log = s.run_until(|s| s.block_count() == 1, &mut rng).unwrap();
        assert_eq!(first_meeting_time(&log, 1, 2).unwrap(), Some(0.0));
        assert_eq!(first_coalescence_time(&log, 1, 2).unwrap(), Some(0.0));
        assert_eq!(first_meeting_time(&log, 1, 3).unwrap(), Some(0.0));
        let m = first_meeting_time(&log, 1, 4).unwrap().unwrap();
        let c = first_coalescence_time(&log, 1, 4).unwrap().unwrap();
        assert!(c >= m && m > 0.0);
        let jt = jump_time_sequences(&log).unwrap();
        assert_eq!(jt.coalescences.len(), 2);
        assert!(jt.meetings.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn meeting_time_matches_replay_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut s = sim("{1}@(0,0)|{2}@(2,-1)", 3, kingman());
        let log = s.run_until(|s| s.block_count() == 1, &mut rng).unwrap();
        let first_same_site = log
            .events
            .iter()
            .scan(ReplayState::new(&log.initial), |st, e| {
                st.apply(&e.kind).unwrap();
                Some((e.time, st.site_of(1) == st.site_of(2)))
            })
            .find(|&(_, same)| same)
            .map(|(t, _)| t);
        assert_eq!(first_meeting_time(&log, 1, 2).unwrap(), first_same_site);
    }

    #[test]
    fn runaway_guard_returns_partial_log() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut s = SpatialCoalescent::new(
            &"{1}@(0,0)|{2}@(3,3)".parse().unwrap(),
            Torus::new(10),
            kingman(),
            SimOptions {
                event_cap: 25,
                ..SimOptions::default()
            },
        )
        .unwrap();
        match s.run_until(|_| false, &mut rng) {
            Err(Error::Runaway { cap, partial }) => {
                assert_eq!(cap, 25);
                assert_eq!(partial.events.len(), 25);
            }
            other => panic!("expected runaway, got {other:?}"),
        }
    }

    #[test]
    fn jsonl_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut s = SpatialCoalescent::new(
            &"{1}@(0,0)|{2}@(0,0)|{3}@(1,1)".parse().unwrap(),
            Torus::new(2),
            Mechanism::Lambda(LambdaMeasure::bolthausen_sznitman()),
            SimOptions::with_kill_rate(0.05),
        )
        .unwrap();
        let log = s.run_until(|s| s.block_count() == 0, &mut rng).unwrap();
        let mut buf = Vec::new();
        log.write_jsonl(&mut buf).unwrap();
        let back = EventLog::read_jsonl(buf.as_slice()).unwrap();
        assert_eq!(back, log);
        let bad = b"{\"t\":0,\"kind\":\"start\",\"partition\":\"{1}@(0,0)\"}\n{\"t\":1,\"kind\":\"warp\"}\n";
        match EventLog::read_jsonl(&bad[..]) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn replay_detects_tampering() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut s = sim("{1}@(0,0)|{2}@(1,0)", 2, kingman());
        let mut log = s.run_until(|s| s.block_count() == 1, &mut rng).unwrap();
        if let EventKind::Migration { from, .. } = &mut log.events[0].kind {
            *from = Site::new(2, 2);
        }
        assert!(log.replay().is_err());
    }
}
