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

//! Piecewise-linear, strictly increasing clock phase functions.
//!
//! A [`ClockTrajectory`] holds the phase history `theta(t)` of one node as a
//! list of knots. Between knots the phase is linearly interpolated, so the
//! slope of each segment is the oscillator frequency on that interval.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrajectoryError {
    #[error("time {t} outside trajectory domain [{start}, {end}]")]
    OutOfDomain { t: f64, start: f64, end: f64 },
    #[error("phase {phase} outside trajectory range [{first}, {last}]")]
    PhaseOutOfRange { phase: f64, first: f64, last: f64 },
    #[error("knot ({t}, {phase}) does not strictly increase past ({last_t}, {last_phase})")]
    NotIncreasing {
        t: f64,
        phase: f64,
        last_t: f64,
        last_phase: f64,
    },
    #[error("segment slope {slope} does not exceed minimum frequency {min_slope}")]
    SlopeTooLow { slope: f64, min_slope: f64 },
    #[error("a trajectory needs at least one knot")]
    Empty,
}

/// A strictly increasing piecewise-linear phase function.
///
/// Invariants: knot times and phases are strictly increasing and every
/// segment slope is strictly greater than `min_slope`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClockTrajectory {
    times: Vec<f64>,
    phases: Vec<f64>,
    min_slope: f64,
}

impl ClockTrajectory {
    /// Builds a trajectory from explicit knots, checking every invariant.
    pub fn from_knots(knots: &[(f64, f64)], min_slope: f64) -> Result<Self, TrajectoryError> {
        let (&(t0, p0), rest) = knots.split_first().ok_or(TrajectoryError::Empty)?;
        let mut traj = ClockTrajectory {
            times: vec![t0],
            phases: vec![p0],
            min_slope,
        };
        for &(t, p) in rest {
            traj.append(t, p)?;
        }
        Ok(traj)
    }

    /// Trajectory prescribed before the first controller action takes effect:
    /// slope `omega_pre` on `[epoch, 0]` and slope `omega_init` on
    /// `[0, delay / omega_init]`, passing through `theta0` at `t = 0`.
    pub fn initial(
        theta0: f64,
        omega_pre: f64,
        omega_init: f64,
        epoch: f64,
        delay: f64,
        min_slope: f64,
    ) -> Result<Self, TrajectoryError> {
        Self::from_knots(
            &[
                (epoch, theta0 + omega_pre * epoch),
                (0.0, theta0),
                (delay / omega_init, theta0 + delay),
            ],
            min_slope,
        )
    }

    pub fn min_slope(&self) -> f64 {
        self.min_slope
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn knots(&self) -> impl ExactSizeIterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.phases.iter().copied())
    }

    pub fn knot(&self, idx: usize) -> Option<(f64, f64)> {
        Some((*self.times.get(idx)?, self.phases[idx]))
    }

    pub fn min_dom(&self) -> f64 {
        self.times[0]
    }

    /// Time of the last knot.
    pub fn max_dom(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn last_phase(&self) -> f64 {
        self.phases[self.phases.len() - 1]
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.min_dom() && t <= self.max_dom()
    }

    /// Phase at wall time `t`.
    pub fn eval(&self, t: f64) -> Result<f64, TrajectoryError> {
        if !self.contains(t) {
            return Err(TrajectoryError::OutOfDomain {
                t,
                start: self.min_dom(),
                end: self.max_dom(),
            });
        }
        let idx = segment_index(&self.times, t);
        Ok(interpolate(&self.times, &self.phases, idx, t))
    }

    /// The unique wall time at which the phase equals `phase`.
    pub fn inverse(&self, phase: f64) -> Result<f64, TrajectoryError> {
        let (first, last) = (self.phases[0], self.last_phase());
        if !(phase >= first && phase <= last) {
            return Err(TrajectoryError::PhaseOutOfRange { phase, first, last });
        }
        let idx = segment_index(&self.phases, phase);
        Ok(interpolate(&self.phases, &self.times, idx, phase))
    }

    /// Frequency at `t`, taken from the segment `[t_k, t_{k+1})` containing it.
    /// At the last knot the final segment's slope is returned.
    pub fn slope_at(&self, t: f64) -> Result<f64, TrajectoryError> {
        if !self.contains(t) {
            return Err(TrajectoryError::OutOfDomain {
                t,
                start: self.min_dom(),
                end: self.max_dom(),
            });
        }
        if self.times.len() == 1 {
            return Ok(f64::NAN);
        }
        let idx = segment_index(&self.times, t).min(self.times.len() - 2);
        Ok(self.segment_slope(idx))
    }

    pub fn segment_slope(&self, idx: usize) -> f64 {
        (self.phases[idx + 1] - self.phases[idx]) / (self.times[idx + 1] - self.times[idx])
    }

    /// Adds a knot at the end. Existing knots are never modified.
    pub fn append(&mut self, t_next: f64, phase_next: f64) -> Result<(), TrajectoryError> {
        let (last_t, last_phase) = (self.max_dom(), self.last_phase());
        if !(t_next > last_t && phase_next > last_phase) {
            return Err(TrajectoryError::NotIncreasing {
                t: t_next,
                phase: phase_next,
                last_t,
                last_phase,
            });
        }
        let slope = (phase_next - last_phase) / (t_next - last_t);
        if !(slope > self.min_slope) {
            return Err(TrajectoryError::SlopeTooLow {
                slope,
                min_slope: self.min_slope,
            });
        }
        self.times.push(t_next);
        self.phases.push(phase_next);
        Ok(())
    }
}

/// Index `k` of the segment with `xs[k] <= x < xs[k+1]`, or the last knot
/// index when `x` equals the final abscissa. Queries cluster at the end of the
/// list, so the last segment is checked before falling back to bisection.
fn segment_index(xs: &[f64], x: f64) -> usize {
    let n = xs.len();
    if n >= 2 && x >= xs[n - 2] {
        return if x >= xs[n - 1] { n - 1 } else { n - 2 };
    }
    xs.partition_point(|&v| v <= x) - 1
}

fn interpolate(xs: &[f64], ys: &[f64], idx: usize, x: f64) -> f64 {
    if x == xs[idx] || idx + 1 == xs.len() {
        return ys[idx];
    }
    let (x0, x1) = (xs[idx], xs[idx + 1]);
    let (y0, y1) = (ys[idx], ys[idx + 1]);
    y0 + (x - x0) * ((y1 - y0) / (x1 - x0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(knots: &[(f64, f64)]) -> ClockTrajectory {
        ClockTrajectory::from_knots(knots, 0.1).unwrap()
    }

    #[test]
    fn eval_midpoint_and_endpoints() {
        assert_eq!(line(&[(0.0, 0.0), (2.0, 4.0)]).eval(1.0).unwrap(), 2.0);
        assert_eq!(line(&[(-1.0, -0.9), (0.0, 0.1)]).eval(-1.0).unwrap(), -0.9);
    }

    #[test]
    fn eval_initial_segment_of_triangle_node() {
        let epoch = -25.0;
        let traj = line(&[(epoch, 0.1 + 1.1 * epoch), (0.0, 0.1)]);
        let v = traj.eval(-1.0).unwrap();
        assert!((v - (-1.0)).abs() < 1e-12, "{v}");
    }

    #[test]
    fn eval_out_of_domain() {
        let traj = line(&[(0.0, 0.0), (2.0, 4.0)]);
        assert!(matches!(
            traj.eval(2.5),
            Err(TrajectoryError::OutOfDomain { .. })
        ));
        assert!(matches!(
            traj.eval(-0.1),
            Err(TrajectoryError::OutOfDomain { .. })
        ));
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(line(&[(0.0, 0.0), (2.0, 4.0)]).inverse(2.0).unwrap(), 1.0);
        assert_eq!(
            line(&[(0.0, 0.1), (10.0, 10.1)]).inverse(10.1).unwrap(),
            10.0
        );
        assert!(matches!(
            line(&[(0.0, 0.1), (10.0, 10.1)]).inverse(10.2),
            Err(TrajectoryError::PhaseOutOfRange { .. })
        ));
    }

    #[test]
    fn max_dom_tracks_appends() {
        let mut traj = line(&[(-3.0, -2.0), (0.0, 0.1)]);
        assert_eq!(traj.max_dom(), 0.0);
        traj.append(5.0, 10.1).unwrap();
        assert_eq!(traj.max_dom(), 5.0);
    }

    #[test]
    fn initial_trajectory_domain_ends_at_first_actuation() {
        let traj = ClockTrajectory::initial(0.1, 1.1, 1.1, -25.0, 2.0, 0.1).unwrap();
        assert_eq!(traj.len(), 3);
        assert!((traj.max_dom() - 1.818_181_818_181_818).abs() < 1e-12);
        assert_eq!(traj.eval(0.0).unwrap(), 0.1);
        assert_eq!(traj.last_phase(), 2.1);
    }

    #[test]
    fn append_rejects_bad_knots() {
        let mut traj = line(&[(0.0, 0.0), (1.0, 1.0)]);
        assert!(matches!(
            traj.append(1.0, 2.0),
            Err(TrajectoryError::NotIncreasing { .. })
        ));
        assert!(matches!(
            traj.append(2.0, 1.0),
            Err(TrajectoryError::NotIncreasing { .. })
        ));
        // slope exactly at the floor is rejected
        assert!(matches!(
            traj.append(11.0, 2.0),
            Err(TrajectoryError::SlopeTooLow { .. })
        ));
        assert_eq!(traj.len(), 2);
    }

    #[test]
    fn slope_is_right_continuous() {
        let traj = line(&[(0.0, 0.0), (1.0, 2.0), (2.0, 5.0)]);
        assert_eq!(traj.slope_at(0.5).unwrap(), 2.0);
        assert_eq!(traj.slope_at(1.0).unwrap(), 3.0);
        assert_eq!(traj.slope_at(2.0).unwrap(), 3.0);
    }

    fn arb_trajectory() -> impl Strategy<Value = ClockTrajectory> {
        (
            -50.0f64..0.0,
            -10.0f64..10.0,
            prop::collection::vec((0.01f64..5.0, 0.2f64..4.0), 1..40),
        )
            .prop_map(|(t0, p0, segs)| {
                let mut traj = ClockTrajectory::from_knots(&[(t0, p0)], 0.1).unwrap();
                for (dt, slope) in segs {
                    let (t, p) = (traj.max_dom(), traj.last_phase());
                    traj.append(t + dt, p + slope * dt).unwrap();
                }
                traj
            })
    }

    proptest! {
        #[test]
        fn round_trips(traj in arb_trajectory(), u in 0.0f64..=1.0, v in 0.0f64..=1.0) {
            let t = traj.min_dom() + u * (traj.max_dom() - traj.min_dom());
            let back = traj.inverse(traj.eval(t).unwrap()).unwrap();
            prop_assert!((back - t).abs() <= 1e-12 * t.abs().max(1.0));

            let first = traj.knot(0).unwrap().1;
            let phase = first + v * (traj.last_phase() - first);
            let again = traj.eval(traj.inverse(phase).unwrap()).unwrap();
            prop_assert!((again - phase).abs() <= 1e-12 * phase.abs().max(1.0));
        }

        #[test]
        fn strictly_monotone_with_slope_floor(traj in arb_trajectory(), u in 0.0f64..1.0, w in 0.0f64..1.0) {
            let span = traj.max_dom() - traj.min_dom();
            let (a, b) = (traj.min_dom() + u.min(w) * span, traj.min_dom() + u.max(w) * span);
            if a < b {
                prop_assert!(traj.eval(a).unwrap() < traj.eval(b).unwrap());
            }
            for k in 0..traj.len() - 1 {
                prop_assert!(traj.segment_slope(k) > traj.min_slope());
            }
        }

        #[test]
        fn append_keeps_prefix(traj in arb_trajectory(), dt in 0.01f64..3.0) {
            let before: Vec<_> = traj.knots().collect();
            let mut grown = traj.clone();
            grown.append(traj.max_dom() + dt, traj.last_phase() + dt).unwrap();
            let after: Vec<_> = grown.knots().take(before.len()).collect();
            prop_assert_eq!(before, after);
        }
    }
}
