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

//! Decentralized frequency controllers.
//!
//! A controller sees only the buffer occupancies at its own node, sampled
//! once per period, and returns an additive frequency correction. Stateful
//! controllers keep their state inside the implementing type; anything that
//! depends on the measurement history can store that history there.

use serde::{Deserialize, Serialize};

use crate::topology::NodeId;

/// Occupancy of the buffer at the sampling node fed by `neighbor`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Measurement {
    pub neighbor: NodeId,
    pub occupancy: i64,
}

/// State-space controller for one node: each call advances the internal state
/// with the new measurement and returns the correction `c` for this step.
///
/// Implementations must be deterministic.
pub trait Controller: Send {
    fn update(&mut self, measurements: &[Measurement]) -> f64;
}

impl<F> Controller for F
where
    F: FnMut(&[Measurement]) -> f64 + Send,
{
    fn update(&mut self, measurements: &[Measurement]) -> f64 {
        self(measurements)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Clamp {
    pub min: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

impl Clamp {
    pub fn apply(&self, c: f64) -> f64 {
        let c = c.max(self.min);
        match self.max {
            Some(max) => c.min(max),
            None => c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ControllerKind {
    Zero,
    /// `c = gain * sum_j (beta_j - setpoint)`.
    Proportional {
        gain: f64,
        /// Occupancy setpoint. Zero reproduces the plain sum-of-occupancies
        /// controller; a nonzero value is an extension.
        #[serde(default)]
        setpoint: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerSpec {
    #[serde(flatten)]
    pub kind: ControllerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clamp: Option<Clamp>,
}

impl ControllerSpec {
    pub fn zero() -> Self {
        ControllerSpec {
            kind: ControllerKind::Zero,
            clamp: None,
        }
    }

    pub fn proportional(gain: f64) -> Self {
        ControllerSpec {
            kind: ControllerKind::Proportional {
                gain,
                setpoint: 0.0,
            },
            clamp: None,
        }
    }

    pub fn clamped(mut self, min: f64, max: Option<f64>) -> Self {
        self.clamp = Some(Clamp { min, max });
        self
    }

    /// Correction for one measurement set. The built-in kinds are stateless.
    pub fn correction(&self, measurements: &[Measurement]) -> f64 {
        let raw = match self.kind {
            ControllerKind::Zero => 0.0,
            ControllerKind::Proportional { gain, setpoint } => {
                let total: f64 = measurements
                    .iter()
                    .map(|m| m.occupancy as f64 - setpoint)
                    .sum();
                gain * total
            }
        };
        match self.clamp {
            Some(clamp) => clamp.apply(raw),
            None => raw,
        }
    }

    pub fn build(&self) -> Box<dyn Controller> {
        Box::new(SpecController(*self))
    }

    pub fn build_all(&self, n_nodes: usize) -> Vec<Box<dyn Controller>> {
        (0..n_nodes).map(|_| self.build()).collect()
    }

    /// Static check that `c + omega_u > omega_min` for every reachable output,
    /// assuming buffers never underflow. Conservative: a `false` verdict may
    /// still run, and the engine re-checks every step.
    pub fn admissibility(&self, omega_u: &[f64], omega_min: f64) -> Admissibility {
        let floor = match (self.clamp, self.kind) {
            (Some(clamp), _) => Some(clamp.min),
            (None, ControllerKind::Zero) => Some(0.0),
            // Nonnegative occupancies with a nonnegative gain and no setpoint
            // give c >= 0.
            (None, ControllerKind::Proportional { gain, setpoint })
                if gain >= 0.0 && setpoint <= 0.0 =>
            {
                Some(0.0)
            }
            (None, ControllerKind::Proportional { .. }) => None,
        };
        for (k, &w) in omega_u.iter().enumerate() {
            let lowest = floor.map_or(f64::NEG_INFINITY, |c| c + w);
            if !(lowest > omega_min) {
                return Admissibility::Inadmissible(Witness {
                    node: NodeId(k),
                    lowest_frequency: lowest,
                    omega_min,
                });
            }
        }
        Admissibility::Admissible
    }

    pub fn is_admissible(&self, omega_u: &[f64], omega_min: f64) -> bool {
        self.admissibility(omega_u, omega_min) == Admissibility::Admissible
    }
}

struct SpecController(ControllerSpec);

impl Controller for SpecController {
    fn update(&mut self, measurements: &[Measurement]) -> f64 {
        self.0.correction(measurements)
    }
}

/// Node whose lowest reachable frequency fails to exceed `omega_min`.
/// `lowest_frequency` is `-inf` when the correction is unbounded below.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness {
    pub node: NodeId,
    pub lowest_frequency: f64,
    pub omega_min: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Admissibility {
    Admissible,
    Inadmissible(Witness),
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ys(occ: &[i64]) -> Vec<Measurement> {
        occ.iter()
            .enumerate()
            .map(|(k, &o)| Measurement {
                neighbor: NodeId(k + 1),
                occupancy: o,
            })
            .collect()
    }

    #[test]
    fn proportional_sums_occupancies() {
        let p = ControllerSpec::proportional(0.01);
        assert!((p.correction(&ys(&[50, 50])) - 1.0).abs() < 1e-15);
        assert_eq!(p.correction(&ys(&[0])), 0.0);
        let with_ref = ControllerSpec {
            kind: ControllerKind::Proportional {
                gain: 0.5,
                setpoint: 10.0,
            },
            clamp: None,
        };
        assert_eq!(with_ref.correction(&ys(&[12, 6])), -1.0);
    }

    #[test]
    fn zero_is_zero() {
        assert_eq!(ControllerSpec::zero().correction(&ys(&[3, 99, -4])), 0.0);
    }

    #[test]
    fn clamp_saturates() {
        let p = ControllerSpec::proportional(1.0).clamped(-0.5, Some(2.0));
        assert_eq!(p.correction(&ys(&[10])), 2.0);
        assert_eq!(p.correction(&ys(&[-10])), -0.5);
        assert_eq!(p.correction(&ys(&[1])), 1.0);
    }

    #[test]
    fn correction_increases_with_occupancy() {
        let p = ControllerSpec::proportional(0.01);
        assert!(p.correction(&ys(&[51, 20])) > p.correction(&ys(&[50, 20])));
    }

    #[test]
    fn admissibility_examples() {
        let p = ControllerSpec::proportional(0.01);
        assert!(p.is_admissible(&[1.1, 1.4, 2.0], 0.1));

        assert_eq!(
            ControllerSpec::zero().admissibility(&[1.0], 1.0),
            Admissibility::Inadmissible(Witness {
                node: NodeId(0),
                lowest_frequency: 1.0,
                omega_min: 1.0
            })
        );

        match ControllerSpec::zero()
            .clamped(-0.5, None)
            .admissibility(&[1.0], 0.6)
        {
            Admissibility::Inadmissible(w) => assert!((w.lowest_frequency - 0.5).abs() < 1e-15),
            other => panic!("{other:?}"),
        }

        let negative = ControllerSpec::proportional(-0.01);
        match negative.admissibility(&[1.0], 0.1) {
            Admissibility::Inadmissible(w) => assert_eq!(w.lowest_frequency, f64::NEG_INFINITY),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = ControllerSpec::proportional(0.01).clamped(-0.2, None);
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(
            text,
            r#"{"kind":"proportional","gain":0.01,"setpoint":0.0,"clamp":{"min":-0.2}}"#
        );
        assert_eq!(serde_json::from_str::<ControllerSpec>(&text).unwrap(), spec);
    }

    #[test]
    fn closures_are_controllers() {
        let mut count = 0u32;
        let mut c = move |_: &[Measurement]| {
            count += 1;
            count as f64
        };
        assert_eq!(Controller::update(&mut c, &[]), 1.0);
        assert_eq!(Controller::update(&mut c, &[]), 2.0);
    }
}
