//! Expansion of behaviour labels into trajectories, and the rule-based
//! relabelling into observable events.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{RealEvent, SimEvent};
use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Point2, Rect, Trajectory};
use crate::rng;

/// Turn probabilities are specified per step at this rate and rescaled for others.
pub const REFERENCE_RATE_HZ: f64 = 100.0;

/// Room boundary, door and link endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoomSpec {
    pub boundary: Rect,
    pub door: Point2,
    pub tx_pos: Point2,
    pub rx_pos: Point2,
}

impl Default for RoomSpec {
    fn default() -> Self {
        Self {
            boundary: Rect::new(Point2::new(0.0, 0.0), Point2::new(4.0, 3.0)),
            door: Point2::new(4.0, 2.2),
            tx_pos: Point2::new(0.0, 0.0),
            rx_pos: Point2::new(4.0, 0.0),
        }
    }
}

impl RoomSpec {
    pub const DOOR_TOLERANCE: f64 = 1e-9;

    pub fn validate(&self) -> Result<()> {
        let b = &self.boundary;
        if !(b.min.is_finite() && b.max.is_finite() && b.width() > 0.0 && b.height() > 0.0) {
            return Err(Error::config("room boundary must be a finite rectangle with positive area"));
        }
        if !b.on_boundary(self.door, Self::DOOR_TOLERANCE) {
            return Err(Error::config("door must lie on the boundary perimeter"));
        }
        let tol = Rect::new(
            b.min - Point2::new(1e-9, 1e-9),
            b.max + Point2::new(1e-9, 1e-9),
        );
        if !(tol.contains(self.tx_pos) && tol.contains(self.rx_pos)) {
            return Err(Error::config("tx_pos and rx_pos must lie inside or on the boundary"));
        }
        if self.tx_pos == self.rx_pos {
            return Err(Error::config("tx_pos and rx_pos must differ"));
        }
        Ok(())
    }

    /// Unit vector pointing from the door into the room.
    pub fn door_normal(&self) -> Point2 {
        self.boundary.inward_normal(self.door)
    }
}

/// Motion parameters sampled per segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KinematicParams {
    /// Acceleration interval, m/s^2.
    pub a_range: [f64; 2],
    /// Peak walking speed interval, m/s.
    pub vmax_range: [f64; 2],
    /// Per-step probability of a heading perturbation at the 100 Hz reference rate.
    pub turn_prob: f64,
    /// Largest heading perturbation, radians.
    pub max_turn_rad: f64,
    /// Peak speed interval of local (in-place) motion, m/s.
    pub local_motion_plcr_range: [f64; 2],
    /// Oscillation frequency interval of local motion, Hz.
    pub local_motion_freq_hz: [f64; 2],
    pub walk_speed_threshold: f64,
    pub local_extent_threshold: f64,
}

impl Default for KinematicParams {
    fn default() -> Self {
        Self {
            a_range: [1.0, 2.0],
            vmax_range: [0.8, 1.4],
            turn_prob: 0.005,
            max_turn_rad: 0.5,
            local_motion_plcr_range: [0.05, 0.15],
            local_motion_freq_hz: [0.2, 0.5],
            walk_speed_threshold: 0.2,
            local_extent_threshold: 0.3,
        }
    }
}

fn check_interval(name: &str, r: [f64; 2], strictly_positive: bool) -> Result<()> {
    let ok = r[0].is_finite() && r[1].is_finite() && r[0] <= r[1] && if strictly_positive { r[0] > 0.0 } else { r[0] >= 0.0 };
    if ok {
        Ok(())
    } else {
        Err(Error::config(format!("{name} must be an ordered non-negative interval")))
    }
}

impl KinematicParams {
    pub fn validate(&self) -> Result<()> {
        check_interval("a_range", self.a_range, true)?;
        check_interval("vmax_range", self.vmax_range, true)?;
        check_interval("local_motion_plcr_range", self.local_motion_plcr_range, false)?;
        check_interval("local_motion_freq_hz", self.local_motion_freq_hz, true)?;
        if !(0.0..=1.0).contains(&self.turn_prob) || !(self.max_turn_rad >= 0.0 && self.max_turn_rad <= PI) {
            return Err(Error::config("turn_prob must be in [0, 1] and max_turn_rad in [0, pi]"));
        }
        if !(self.walk_speed_threshold > 0.0 && self.local_extent_threshold > 0.0) {
            return Err(Error::config("thresholds must be positive"));
        }
        if self.local_motion_plcr_range[1] >= self.walk_speed_threshold {
            return Err(Error::config("local motion speed must stay below walk_speed_threshold"));
        }
        Ok(())
    }

    /// Per-step turn probability at `f_s`, keeping the per-second rate of the reference.
    pub fn turn_prob_at(&self, f_s: f64) -> f64 {
        1.0 - (1.0 - self.turn_prob).powf(REFERENCE_RATE_HZ / f_s)
    }
}

/// Accelerate / cruise / decelerate profile over a segment of `duration` seconds.
/// Collapses to a triangle when the segment is too short to reach `vmax`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trapezoid {
    pub a: f64,
    pub vmax: f64,
    pub duration: f64,
}

impl Trapezoid {
    pub fn speed(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.duration);
        (self.a * t).min(self.vmax).min(self.a * (self.duration - t)).max(0.0)
    }

    /// Speed assigned to step `i`, sampled at the step midpoint.
    pub fn step_speed(&self, i: usize, f_s: f64) -> f64 {
        self.speed((i as f64 + 0.5) / f_s)
    }
}

struct Walker<'a, R: Rng> {
    room: &'a RoomSpec,
    kin: &'a KinematicParams,
    f_s: f64,
    turn_p: f64,
    pos: Point2,
    heading: f64,
    inside: bool,
    rng: R,
    out: Trajectory,
}

impl<R: Rng> Walker<'_, R> {
    fn push(&mut self, speed: f64) {
        self.out.push(self.pos, speed, self.heading, self.inside);
    }

    fn hold(&mut self, len: usize) {
        for _ in 0..len {
            self.push(0.0);
        }
    }

    fn profile(&mut self, len: usize) -> Trapezoid {
        let a = self.rng.gen_range(self.kin.a_range[0]..=self.kin.a_range[1]);
        let vmax = self.rng.gen_range(self.kin.vmax_range[0]..=self.kin.vmax_range[1]);
        Trapezoid {
            a,
            vmax,
            duration: len as f64 / self.f_s,
        }
    }

    /// Speeds for `len` steps starting `offset` steps into `prof`.
    fn speeds(&self, prof: &Trapezoid, offset: usize, len: usize) -> Vec<f64> {
        (offset..offset + len).map(|i| prof.step_speed(i, self.f_s)).collect()
    }

    fn jitter_heading(&mut self) {
        if self.turn_p > 0.0 && self.rng.gen::<f64>() < self.turn_p {
            let m = self.kin.max_turn_rad;
            self.heading = wrap_angle(self.heading + self.rng.gen_range(-m..=m));
        }
    }

    /// One step of free walking inside the room with specular reflection.
    fn walk_step(&mut self, v: f64) {
        self.jitter_heading();
        let next = self.pos + Point2::from_polar(v / self.f_s, self.heading);
        let (p, h) = if self.room.boundary.contains(next) {
            (next, self.heading)
        } else {
            self.room.boundary.reflect(next, self.heading)
        };
        self.pos = p;
        self.heading = h;
        self.push(v);
    }

    fn walk(&mut self, speeds: &[f64], initial_heading: f64) {
        self.heading = wrap_angle(initial_heading);
        for &v in speeds {
            self.walk_step(v);
        }
    }

    fn leave(&mut self, speeds: &[f64]) {
        let outward = self.room.door_normal() * -1.0;
        for &v in speeds {
            let step = v / self.f_s;
            if self.inside {
                let to_door = self.room.door - self.pos;
                if to_door.norm() > 0.0 {
                    self.heading = to_door.angle();
                }
                if to_door.norm() <= step {
                    // the crossing frame stands on the door and is the last inside frame
                    self.pos = self.room.door;
                    self.push(v);
                    self.inside = false;
                    self.heading = outward.angle();
                } else {
                    self.pos = self.pos + Point2::from_polar(step, self.heading);
                    self.push(v);
                }
            } else {
                self.heading = outward.angle();
                self.pos = self.pos + outward * step;
                self.push(v);
            }
        }
    }

    fn enter(&mut self, speeds: &[f64]) {
        let inward = self.room.door_normal();
        for &v in speeds {
            let step = v / self.f_s;
            if self.inside {
                self.walk_step(v);
                continue;
            }
            let to_door = self.room.door - self.pos;
            if to_door.norm() > 0.0 {
                self.heading = to_door.angle();
            }
            if to_door.norm() <= step {
                self.pos = self.room.door;
                self.inside = true;
                let spread = self.kin.max_turn_rad;
                self.heading = wrap_angle(inward.angle() + self.rng.gen_range(-spread..=spread));
                self.push(v);
            } else {
                self.pos = self.pos + Point2::from_polar(step, self.heading);
                self.push(v);
            }
        }
    }

    /// Smooth bounded sway around the current position.
    fn local_motion(&mut self, len: usize) {
        if !self.inside {
            self.hold(len);
            return;
        }
        let [lo, hi] = self.kin.local_motion_plcr_range;
        let peak = self.rng.gen_range(lo..=hi);
        let [flo, fhi] = self.kin.local_motion_freq_hz;
        let freq = self.rng.gen_range(flo..=fhi);
        // per-axis amplitude so the planar speed never exceeds `peak`;
        // offsets start at zero and span at most 2 * amp per axis
        let amp = (peak / (TAU * freq * std::f64::consts::SQRT_2)).min(0.5 * self.kin.local_extent_threshold / std::f64::consts::SQRT_2);
        let (px, py): (f64, f64) = (self.rng.gen_range(0.0..TAU), self.rng.gen_range(0.0..TAU));
        let anchor = self.pos;
        let b = self.room.boundary;
        let offset = |t: f64| {
            Point2::new(
                amp * ((TAU * freq * t + px).sin() - px.sin()),
                amp * ((TAU * freq * t + py).sin() - py.sin()),
            )
        };
        for i in 0..len {
            let t = (i + 1) as f64 / self.f_s;
            let mut p = anchor + offset(t);
            p.x = p.x.clamp(b.min.x, b.max.x);
            p.y = p.y.clamp(b.min.y, b.max.y);
            let d = p - self.pos;
            let speed = d.norm() * self.f_s;
            if d.norm() > 0.0 {
                self.heading = d.angle();
            }
            self.pos = p;
            self.push(speed);
        }
    }
}

/// Runs of identical labels as `(event, start, len)`.
pub fn segments<T: PartialEq + Copy>(labels: &[T]) -> Vec<(T, usize, usize)> {
    let mut out: Vec<(T, usize, usize)> = Vec::new();
    for (i, &e) in labels.iter().enumerate() {
        match out.last_mut() {
            Some((last, _, len)) if *last == e => *len += 1,
            _ => out.push((e, i, 1)),
        }
    }
    out
}

/// Expands per-step behaviour labels into a trajectory sampled at `f_s`.
///
/// A sequence that opens with `EnterRoom` starts half a metre outside the
/// door; otherwise the target starts at a uniform position in the room.
/// After leaving, the target stays outside until the next `EnterRoom`.
pub fn expand_kinematics(
    sim_events: &[SimEvent],
    room: &RoomSpec,
    kin: &KinematicParams,
    f_s: f64,
    seed: u64,
) -> Result<Trajectory> {
    if !(f_s > 0.0 && f_s.is_finite()) {
        return Err(Error::config(format!("sample rate {f_s} must be positive")));
    }
    if sim_events.is_empty() {
        return Err(Error::config("behaviour sequence is empty"));
    }
    room.validate()?;
    kin.validate()?;
    let mut rng = rng::stream(seed, &[rng::tag::KINEMATICS]);
    let b = room.boundary;
    let (pos, inside) = if sim_events[0] == SimEvent::EnterRoom {
        (room.door - room.door_normal() * 0.5, false)
    } else {
        (
            Point2::new(rng.gen_range(b.min.x..=b.max.x), rng.gen_range(b.min.y..=b.max.y)),
            true,
        )
    };
    let heading = rng.gen_range(-PI..PI);
    let mut w = Walker {
        room,
        kin,
        f_s,
        turn_p: kin.turn_prob_at(f_s),
        pos,
        heading,
        inside,
        rng,
        out: Trajectory::with_capacity(f_s, sim_events.len()),
    };
    // consecutive locomotion segments share one speed profile, so the target
    // does not stop between e.g. walking across the room and leaving
    let segs = segments(sim_events);
    let mut k = 0;
    while k < segs.len() {
        let (event, _, len) = segs[k];
        if !event.is_locomotion() {
            match event {
                SimEvent::LocalMotion => w.local_motion(len),
                _ => w.hold(len),
            }
            k += 1;
            continue;
        }
        let run_end = (k..segs.len()).find(|&j| !segs[j].0.is_locomotion()).unwrap_or(segs.len());
        let run_len: usize = segs[k..run_end].iter().map(|s| s.2).sum();
        let prof = w.profile(run_len);
        let mut offset = 0;
        for &(event, _, len) in &segs[k..run_end] {
            let speeds = w.speeds(&prof, offset, len);
            offset += len;
            match event {
                SimEvent::WalkWithinRoom if w.inside => {
                    let h = w.rng.gen_range(-PI..PI);
                    w.walk(&speeds, h);
                }
                SimEvent::WalkWithinRoom => w.hold(len),
                SimEvent::LeaveThroughDoor => w.leave(&speeds),
                _ => w.enter(&speeds),
            }
        }
        k = run_end;
    }
    Ok(w.out)
}

/// Relabels each step: outside → Absence; speed at or above the walking
/// threshold → Walking; a slow step inside a LocalMotion segment →
/// LocalMotion; anything else → Stillness.
pub fn map_to_real_events(sim_events: &[SimEvent], traj: &Trajectory, kin: &KinematicParams) -> Result<Vec<RealEvent>> {
    if sim_events.len() != traj.len() {
        return Err(Error::config(format!(
            "{} behaviour labels for a {}-step trajectory",
            sim_events.len(),
            traj.len()
        )));
    }
    Ok(sim_events
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            if !traj.inside[i] {
                RealEvent::Absence
            } else if traj.speed[i] >= kin.walk_speed_threshold {
                RealEvent::Walking
            } else if s == SimEvent::LocalMotion {
                RealEvent::LocalMotion
            } else {
                RealEvent::Stillness
            }
        })
        .collect())
}
