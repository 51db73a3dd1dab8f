//! Waypoint sequencing and cross-track geometry in the local NED frame.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn default_acceptance_radius() -> f64 {
    25.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    /// (north, east, down), m.
    pub position: [f64; 3],
    pub airspeed: f64,
    #[serde(default = "default_acceptance_radius")]
    pub acceptance_radius: f64,
}

impl Waypoint {
    pub fn new(position: [f64; 3], airspeed: f64) -> Self {
        Waypoint {
            position,
            airspeed,
            acceptance_radius: default_acceptance_radius(),
        }
    }

    pub fn point(&self) -> Vector3<f64> {
        Vector3::from(self.position)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissionPlan {
    pub waypoints: Vec<Waypoint>,
    #[serde(default)]
    pub looping: bool,
}

impl MissionPlan {
    /// Four-corner circuit with `leg`-metre sides, flown counter-clockwise
    /// (left turns, seen from above) from the origin at altitude `altitude`
    /// (m, positive up). The first leg heads east.
    pub fn rectangle(leg: f64, altitude: f64, airspeed: f64) -> Self {
        let corners = [[0.0, 0.0], [0.0, leg], [leg, leg], [leg, 0.0]];
        MissionPlan {
            waypoints: corners
                .iter()
                .map(|c| Waypoint::new([c[0], c[1], -altitude], airspeed))
                .collect(),
            looping: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.waypoints.len() < 2 {
            return Err(Error::input("a mission needs at least two waypoints"));
        }
        for (i, wp) in self.waypoints.iter().enumerate() {
            if !(wp.airspeed > 0.0) || !(wp.acceptance_radius > 0.0) {
                return Err(Error::input(format!(
                    "waypoint {i}: airspeed and acceptance radius must be positive"
                )));
            }
            if wp.position.iter().any(|x| !x.is_finite()) {
                return Err(Error::input(format!("waypoint {i}: position must be finite")));
            }
        }
        for (i, leg) in self.legs().enumerate() {
            if (leg.end - leg.start).xy().norm() < 1e-9 {
                return Err(Error::input(format!("leg {i} joins horizontally coincident waypoints")));
            }
        }
        Ok(())
    }

    /// Every leg of the plan, including the closing leg of a looping plan.
    pub fn legs(&self) -> impl Iterator<Item = PathSegment> + '_ {
        let n = self.waypoints.len();
        let count = if self.looping { n } else { n.saturating_sub(1) };
        (0..count).map(move |i| PathSegment {
            start: self.waypoints[i].point(),
            end: self.waypoints[(i + 1) % n].point(),
        })
    }

    /// Leg ending at waypoint `target`.
    pub fn segment_to(&self, target: usize) -> PathSegment {
        let n = self.waypoints.len();
        let from = if target == 0 { n - 1 } else { target - 1 };
        PathSegment {
            start: self.waypoints[from].point(),
            end: self.waypoints[target].point(),
        }
    }
}

/// Straight leg between two waypoints.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathSegment {
    pub start: Vector3<f64>,
    pub end: Vector3<f64>,
}

impl PathSegment {
    pub fn new(start: Vector3<f64>, end: Vector3<f64>) -> Result<Self> {
        if (end - start).norm() < 1e-9 {
            return Err(Error::input("segment has zero length"));
        }
        Ok(PathSegment { start, end })
    }

    /// Horizontal distance from `p` to the segment, endpoints clamped.
    pub fn horizontal_distance(&self, p: &Vector2<f64>) -> f64 {
        let a = self.start.xy();
        let d = self.end.xy() - a;
        let len2 = d.norm_squared();
        let t = if len2 > 0.0 {
            ((p - a).dot(&d) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        (p - (a + d * t)).norm()
    }
}

/// Output of one mission-planner update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MissionStep {
    pub r_s: Vector3<f64>,
    pub airspeed_s: f64,
    pub segment: PathSegment,
    pub active_index: usize,
    /// A non-looping plan has reached its last waypoint.
    pub complete: bool,
    /// The waypoint that was just reached on this call, if any.
    pub reached: Option<usize>,
}

/// Moves to the next waypoint once the aircraft is horizontally within the
/// acceptance radius of the current target. Advances at most one waypoint.
pub fn advance_mission(plan: &MissionPlan, r_m: &Vector3<f64>, active_index: usize) -> Result<MissionStep> {
    let n = plan.waypoints.len();
    if active_index >= n {
        return Err(Error::input(format!(
            "active index {active_index} out of range for {n} waypoints"
        )));
    }
    let target = &plan.waypoints[active_index];
    let inside = (target.point().xy() - r_m.xy()).norm() <= target.acceptance_radius;

    let mut index = active_index;
    let mut complete = false;
    let mut reached = None;
    if inside {
        reached = Some(active_index);
        if active_index + 1 < n {
            index = active_index + 1;
        } else if plan.looping {
            index = 0;
        } else {
            complete = true;
        }
    }
    let wp = &plan.waypoints[index];
    Ok(MissionStep {
        r_s: wp.point(),
        airspeed_s: wp.airspeed,
        segment: plan.segment_to(index),
        active_index: index,
        complete,
        reached,
    })
}

/// Minimum horizontal distance from `r_m` to the mission polyline.
pub fn cross_track_error(r_m: &Vector3<f64>, plan: &MissionPlan) -> f64 {
    let p = r_m.xy();
    plan.legs()
        .map(|leg| leg.horizontal_distance(&p))
        .fold(f64::INFINITY, f64::min)
}
