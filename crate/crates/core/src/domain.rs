//! Event sets, feature sets, tasks and the per-event feature range table.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observable human state. The discriminant is the confusion-matrix index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RealEvent {
    Absence = 0,
    Stillness = 1,
    LocalMotion = 2,
    Walking = 3,
}

impl RealEvent {
    pub const ALL: [RealEvent; 4] = [
        RealEvent::Absence,
        RealEvent::Stillness,
        RealEvent::LocalMotion,
        RealEvent::Walking,
    ];
    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            RealEvent::Absence => "absence",
            RealEvent::Stillness => "stillness",
            RealEvent::LocalMotion => "local_motion",
            RealEvent::Walking => "walking",
        }
    }
}

impl fmt::Display for RealEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Behavioural primitive driven by the Markov chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimEvent {
    LeaveThroughDoor = 0,
    EnterRoom = 1,
    WalkWithinRoom = 2,
    RemainStill = 3,
    LocalMotion = 4,
}

impl SimEvent {
    pub const ALL: [SimEvent; 5] = [
        SimEvent::LeaveThroughDoor,
        SimEvent::EnterRoom,
        SimEvent::WalkWithinRoom,
        SimEvent::RemainStill,
        SimEvent::LocalMotion,
    ];
    pub const COUNT: usize = 5;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Events whose kinematics follow a trapezoidal speed profile.
    pub fn is_locomotion(self) -> bool {
        matches!(
            self,
            SimEvent::LeaveThroughDoor | SimEvent::EnterRoom | SimEvent::WalkWithinRoom
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureDescriptor {
    #[serde(alias = "subcarrier_corr")]
    Corr,
    Dser,
    Plcr,
}

/// A descriptor evaluated over a window of `window_s` seconds.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FeatureKind {
    pub descriptor: FeatureDescriptor,
    pub window_s: f64,
}

impl FeatureKind {
    pub const fn new(descriptor: FeatureDescriptor, window_s: f64) -> Self {
        Self {
            descriptor,
            window_s,
        }
    }

    /// Slot index in [`CANONICAL_FEATURES`], if this is a canonical feature.
    pub fn slot(&self) -> Option<usize> {
        CANONICAL_FEATURES.iter().position(|k| k == self)
    }

    fn window_key(&self) -> u64 {
        // -0.0 and 0.0 compare equal
        (self.window_s + 0.0).to_bits()
    }
}

impl PartialEq for FeatureKind {
    fn eq(&self, other: &Self) -> bool {
        self.descriptor == other.descriptor && self.window_key() == other.window_key()
    }
}

impl Eq for FeatureKind {}

impl Hash for FeatureKind {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.descriptor.hash(state);
        self.window_key().hash(state);
    }
}

impl PartialOrd for FeatureKind {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FeatureKind {
    /// Canonical features first, in slot order; others after, by descriptor then window.
    fn cmp(&self, other: &Self) -> Ordering {
        let a = self.slot().unwrap_or(usize::MAX);
        let b = other.slot().unwrap_or(usize::MAX);
        a.cmp(&b)
            .then(self.descriptor.cmp(&other.descriptor))
            .then(self.window_s.total_cmp(&other.window_s))
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.descriptor {
            FeatureDescriptor::Corr => "corr",
            FeatureDescriptor::Dser => "dser",
            FeatureDescriptor::Plcr => "plcr",
        };
        write!(f, "{name}@{}s", self.window_s)
    }
}

pub const CORR_SHORT: FeatureKind = FeatureKind::new(FeatureDescriptor::Corr, 0.5);
pub const DSER_SHORT: FeatureKind = FeatureKind::new(FeatureDescriptor::Dser, 0.5);
pub const PLCR: FeatureKind = FeatureKind::new(FeatureDescriptor::Plcr, 0.1);
pub const CORR_LONG: FeatureKind = FeatureKind::new(FeatureDescriptor::Corr, 2.0);
pub const DSER_LONG: FeatureKind = FeatureKind::new(FeatureDescriptor::Dser, 2.0);

/// The five feature slots, in the order every feature vector uses.
pub const CANONICAL_FEATURES: [FeatureKind; 5] =
    [CORR_SHORT, DSER_SHORT, PLCR, CORR_LONG, DSER_LONG];

pub const N_SLOTS: usize = 5;

/// A single sensing task `q` with its event subset and feature subset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub name: String,
    pub events: BTreeSet<RealEvent>,
    pub features: BTreeSet<FeatureKind>,
    #[serde(default)]
    pub has_position: bool,
}

impl TaskSpec {
    pub fn new(
        name: impl Into<String>,
        events: impl IntoIterator<Item = RealEvent>,
        features: impl IntoIterator<Item = FeatureKind>,
        has_position: bool,
    ) -> Self {
        Self {
            name: name.into(),
            events: events.into_iter().collect(),
            features: features.into_iter().collect(),
            has_position,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.events.is_empty() {
            return Err(Error::config(format!("task '{}' has no events", self.name)));
        }
        if let Some(f) = self.features.iter().find(|f| f.slot().is_none()) {
            return Err(Error::config(format!(
                "task '{}' uses non-canonical feature {f}",
                self.name
            )));
        }
        Ok(())
    }

    pub fn tracking() -> Self {
        Self::new("tracking", RealEvent::ALL, [CORR_SHORT, DSER_SHORT, PLCR], true)
    }

    pub fn presence_detection() -> Self {
        Self::new("presence_detection", RealEvent::ALL, [CORR_SHORT, CORR_LONG], false)
    }

    pub fn state_recognition() -> Self {
        Self::new(
            "state_recognition",
            RealEvent::ALL,
            [CORR_SHORT, DSER_SHORT, CORR_LONG, DSER_LONG],
            false,
        )
    }

    /// Tracking, presence detection and state recognition.
    pub fn default_tasks() -> Vec<TaskSpec> {
        vec![
            Self::tracking(),
            Self::presence_detection(),
            Self::state_recognition(),
        ]
    }
}

/// The composed multi-task specification: union of event and feature sets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskSetSpec {
    /// Member tasks, sorted by name, duplicates removed.
    pub tasks: Vec<TaskSpec>,
    pub events: BTreeSet<RealEvent>,
    pub features: BTreeSet<FeatureKind>,
    pub has_position: bool,
}

impl PartialEq for TaskSetSpec {
    /// Two task sets are equal when they cover the same events, features and outputs.
    fn eq(&self, other: &Self) -> bool {
        self.events == other.events
            && self.features == other.features
            && self.has_position == other.has_position
    }
}

impl TaskSetSpec {
    /// Collapses the set back into a single task so it can take part in further composition.
    pub fn as_task(&self, name: impl Into<String>) -> TaskSpec {
        TaskSpec {
            name: name.into(),
            events: self.events.clone(),
            features: self.features.clone(),
            has_position: self.has_position,
        }
    }

    /// Canonical slot indices covered by the feature set, ascending.
    pub fn slots(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.features.iter().filter_map(|f| f.slot()).collect();
        s.sort_unstable();
        s
    }
}

/// Union-composes single tasks into a multi-task specification.
pub fn compose_task_sets(tasks: &[TaskSpec]) -> Result<TaskSetSpec> {
    if tasks.is_empty() {
        return Err(Error::config("task list is empty"));
    }
    for t in tasks {
        t.validate()?;
    }
    let mut members: Vec<TaskSpec> = tasks.to_vec();
    members.sort_by(|a, b| {
        (&a.name, &a.events, &a.features, a.has_position).cmp(&(
            &b.name,
            &b.events,
            &b.features,
            b.has_position,
        ))
    });
    members.dedup();

    let events: BTreeSet<RealEvent> = members.iter().flat_map(|t| t.events.iter().copied()).collect();
    let features: BTreeSet<FeatureKind> =
        members.iter().flat_map(|t| t.features.iter().copied()).collect();
    let has_position = members.iter().any(|t| t.has_position);

    if events.len() != RealEvent::COUNT {
        let missing: Vec<_> = RealEvent::ALL.iter().filter(|e| !events.contains(e)).collect();
        return Err(Error::config(format!(
            "composed task set does not cover events {missing:?}"
        )));
    }
    Ok(TaskSetSpec {
        tasks: members,
        events,
        features,
        has_position,
    })
}

/// One cell of the range table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RangeCell {
    Interval { lo: f64, hi: f64 },
    /// Value comes from the geometric range-rate model instead of a fixed interval.
    GeometricModel,
}

impl RangeCell {
    pub fn interval(lo: f64, hi: f64) -> Self {
        RangeCell::Interval { lo, hi }
    }

    pub fn bounds(&self) -> Option<(f64, f64)> {
        match *self {
            RangeCell::Interval { lo, hi } => Some((lo, hi)),
            RangeCell::GeometricModel => None,
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        match *self {
            RangeCell::Interval { lo, hi } => v >= lo && v <= hi,
            RangeCell::GeometricModel => v.is_finite(),
        }
    }
}

/// Serialized form of a cell: `[lo, hi]` or the string `"model"`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum CellRepr {
    Interval([f64; 2]),
    Marker(String),
}

impl CellRepr {
    fn into_cell(self) -> Result<RangeCell> {
        match self {
            CellRepr::Interval([lo, hi]) => {
                if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                    return Err(Error::config(format!("invalid interval [{lo}, {hi}]")));
                }
                Ok(RangeCell::Interval { lo, hi })
            }
            CellRepr::Marker(s) if s == "model" => Ok(RangeCell::GeometricModel),
            CellRepr::Marker(s) => Err(Error::config(format!(
                "range cell must be [lo, hi] or \"model\", got \"{s}\""
            ))),
        }
    }

    fn from_cell(cell: RangeCell) -> Self {
        match cell {
            RangeCell::Interval { lo, hi } => CellRepr::Interval([lo, hi]),
            RangeCell::GeometricModel => CellRepr::Marker("model".into()),
        }
    }
}

/// Expected feature ranges per real event: 4 events × 5 canonical slots.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRangeTable {
    cells: [[RangeCell; N_SLOTS]; RealEvent::COUNT],
}

impl FeatureRangeTable {
    pub fn new(cells: [[RangeCell; N_SLOTS]; RealEvent::COUNT]) -> Result<Self> {
        let t = Self { cells };
        t.validate()?;
        Ok(t)
    }

    pub fn lookup(&self, event: RealEvent, feature: FeatureKind) -> Option<RangeCell> {
        feature.slot().map(|s| self.cells[event.index()][s])
    }

    pub fn cell(&self, event: RealEvent, slot: usize) -> RangeCell {
        self.cells[event.index()][slot]
    }

    pub fn set(&mut self, event: RealEvent, slot: usize, cell: RangeCell) {
        self.cells[event.index()][slot] = cell;
    }

    pub fn validate(&self) -> Result<()> {
        for e in RealEvent::ALL {
            for (slot, cell) in self.cells[e.index()].iter().enumerate() {
                match *cell {
                    RangeCell::Interval { lo, hi } => {
                        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                            return Err(Error::config(format!(
                                "cell ({e}, {}) has invalid interval [{lo}, {hi}]",
                                CANONICAL_FEATURES[slot]
                            )));
                        }
                    }
                    RangeCell::GeometricModel => {
                        if CANONICAL_FEATURES[slot].descriptor != FeatureDescriptor::Plcr {
                            return Err(Error::config(format!(
                                "geometric model is only defined for PLCR, found in ({e}, {})",
                                CANONICAL_FEATURES[slot]
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn model_cell_count(&self) -> usize {
        self.cells
            .iter()
            .flatten()
            .filter(|c| matches!(c, RangeCell::GeometricModel))
            .count()
    }

    fn to_repr(&self) -> RangeTableRepr {
        RangeTableRepr {
            events: RealEvent::ALL.to_vec(),
            features: CANONICAL_FEATURES.to_vec(),
            ranges: self
                .cells
                .iter()
                .map(|row| row.iter().map(|c| CellRepr::from_cell(*c)).collect())
                .collect(),
        }
    }

    fn from_repr(repr: RangeTableRepr) -> Result<Self> {
        if repr.ranges.len() != repr.events.len() {
            return Err(Error::config(format!(
                "ranges has {} rows but {} events are declared",
                repr.ranges.len(),
                repr.events.len()
            )));
        }
        let mut cells: [[Option<RangeCell>; N_SLOTS]; RealEvent::COUNT] = Default::default();
        let mut slots = Vec::with_capacity(repr.features.len());
        for f in &repr.features {
            let slot = f
                .slot()
                .ok_or_else(|| Error::config(format!("feature {f} is not a canonical slot")))?;
            if slots.contains(&slot) {
                return Err(Error::config(format!("feature {f} declared twice")));
            }
            slots.push(slot);
        }
        for (row, event) in repr.ranges.into_iter().zip(&repr.events) {
            if row.len() != slots.len() {
                return Err(Error::config(format!(
                    "row for {event} has {} cells, expected {}",
                    row.len(),
                    slots.len()
                )));
            }
            for (repr_cell, &slot) in row.into_iter().zip(&slots) {
                let target = &mut cells[event.index()][slot];
                if target.is_some() {
                    return Err(Error::config(format!("event {event} declared twice")));
                }
                *target = Some(repr_cell.into_cell()?);
            }
        }
        let mut out = [[RangeCell::GeometricModel; N_SLOTS]; RealEvent::COUNT];
        for e in RealEvent::ALL {
            for s in 0..N_SLOTS {
                out[e.index()][s] = cells[e.index()][s].ok_or_else(|| {
                    Error::config(format!(
                        "range table is missing cell ({e}, {})",
                        CANONICAL_FEATURES[s]
                    ))
                })?;
            }
        }
        Self::new(out)
    }
}

impl Default for FeatureRangeTable {
    fn default() -> Self {
        default_range_table()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RangeTableRepr {
    events: Vec<RealEvent>,
    features: Vec<FeatureKind>,
    ranges: Vec<Vec<CellRepr>>,
}

impl Serialize for FeatureRangeTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_repr().serialize(s)
    }
}

impl<'de> Deserialize<'de> for FeatureRangeTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = RangeTableRepr::deserialize(d)?;
        FeatureRangeTable::from_repr(repr).map_err(serde::de::Error::custom)
    }
}

/// The empirical ranges of the four behaviours over the five feature slots.
pub fn default_range_table() -> FeatureRangeTable {
    use RangeCell::GeometricModel as M;
    let i = RangeCell::interval;
    // columns: corr@0.5, dser@0.5, plcr@0.1, corr@2, dser@2
    let cells = [
        [i(0.1, 0.3), i(-6.0, -4.0), i(0.0, 0.1), i(0.1, 0.3), i(-6.0, -4.0)],
        [i(0.2, 0.7), i(-5.2, -4.0), i(0.0, 0.1), i(0.4, 0.7), i(-5.0, -2.5)],
        [i(0.6, 1.0), i(-4.0, -1.0), i(0.0, 0.3), i(0.6, 1.0), i(-4.0, 0.0)],
        [i(0.6, 1.0), i(-4.0, -1.0), M, i(0.6, 1.0), i(-4.0, 0.0)],
    ];
    FeatureRangeTable { cells }
}
