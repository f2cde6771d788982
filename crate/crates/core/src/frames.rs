// Copyright 2026 The afm-sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Frame accounting from clock phases alone.
//!
//! Node `i` emits a frame on link `i -> j` each time `g_ij * theta_i` crosses an
//! integer, and node `j` removes one from the buffer fed by that link each time
//! `g_ij * theta_j` does. Every count below is a difference of floors.

use crate::topology::{Gearbox, Link};
use crate::trajectory::{ClockTrajectory, TrajectoryError};

/// Frames sent by the trajectory's node on the interval `(s, t]`.
pub fn frames_sent(
    theta: &ClockTrajectory,
    gearbox: Gearbox,
    s: f64,
    t: f64,
) -> Result<i64, TrajectoryError> {
    debug_assert!(s <= t);
    Ok(gearbox.floor(theta.eval(t)?) - gearbox.floor(theta.eval(s)?))
}

/// Frames received at the far end of `link` on `(s, t]`: the frames sent one
/// latency earlier.
pub fn frames_received(
    src: &ClockTrajectory,
    link: &Link,
    s: f64,
    t: f64,
) -> Result<i64, TrajectoryError> {
    frames_sent(src, link.gearbox, s - link.latency, t - link.latency)
}

/// Frames in flight on `link` at time `t`. A frame at the start of the link is
/// on it; a frame at the end is not.
pub fn link_occupancy(src: &ClockTrajectory, link: &Link, t: f64) -> Result<i64, TrajectoryError> {
    frames_sent(src, link.gearbox, t - link.latency, t)
}

/// Occupancy of the elastic buffer at `link.dst` fed by `link`.
pub fn buffer_occupancy(
    src: &ClockTrajectory,
    dst: &ClockTrajectory,
    link: &Link,
    lambda: i64,
    t: f64,
) -> Result<i64, TrajectoryError> {
    let g = link.gearbox;
    Ok(g.floor(src.eval(t - link.latency)?) - g.floor(dst.eval(t)?) + lambda)
}

/// The per-link constant tying buffer occupancy, link occupancy and clock
/// offset together, recomputed at time `t` from a buffer occupancy observed
/// at that time.
pub fn offset_constant(
    src: &ClockTrajectory,
    dst: &ClockTrajectory,
    link: &Link,
    occupancy: i64,
    t: f64,
) -> Result<i64, TrajectoryError> {
    let g = link.gearbox;
    Ok(occupancy - g.floor(src.eval(t - link.latency)?) + g.floor(dst.eval(t)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn affine(offset: f64, slope: f64) -> ClockTrajectory {
        ClockTrajectory::from_knots(
            &[
                (-20.0, offset - 20.0 * slope),
                (20.0, offset + 20.0 * slope),
            ],
            0.1,
        )
        .unwrap()
    }

    #[test]
    fn sent_counts() {
        let unit = affine(0.0, 1.0);
        assert_eq!(frames_sent(&unit, Gearbox::UNIT, 0.0, 5.5).unwrap(), 5);
        assert_eq!(frames_sent(&unit, Gearbox::UNIT, 3.3, 3.3).unwrap(), 0);
        let fast = affine(0.1, 1.4);
        assert_eq!(frames_sent(&fast, Gearbox::UNIT, 0.0, 10.0).unwrap(), 14);
        assert_eq!(
            frames_sent(&fast, Gearbox::new(2, 1), 0.0, 10.0).unwrap(),
            28
        );
    }

    #[test]
    fn link_counts() {
        let link = Link::new(0, 1, 1.0);
        assert_eq!(link_occupancy(&affine(0.5, 1.0), &link, 3.0).unwrap(), 1);
        assert_eq!(link_occupancy(&affine(0.1, 2.0), &link, 2.0).unwrap(), 2);
    }

    #[test]
    fn identical_clocks_hold_occupancy_constant() {
        let theta = affine(0.5, 1.0);
        let link = Link::new(0, 1, 1.0);
        for k in 0..100 {
            let t = -5.0 + 0.173 * k as f64;
            assert_eq!(buffer_occupancy(&theta, &theta, &link, 8, t).unwrap(), 7);
        }
    }

    #[test]
    fn out_of_domain_is_an_error() {
        let theta = affine(0.5, 1.0);
        let link = Link::new(0, 1, 1.0);
        assert!(buffer_occupancy(&theta, &theta, &link, 0, -19.5).is_err());
        assert!(link_occupancy(&theta, &link, 20.5).is_err());
    }

    #[test]
    fn received_is_sent_delayed() {
        let theta = affine(0.3, 1.7);
        let link = Link::new(0, 1, 1.25);
        for k in 0..50 {
            let s = -3.0 + 0.37 * k as f64;
            let t = s + 2.9;
            assert_eq!(
                frames_received(&theta, &link, s, t).unwrap(),
                frames_sent(&theta, Gearbox::UNIT, s - 1.25, t - 1.25).unwrap()
            );
        }
    }
}
