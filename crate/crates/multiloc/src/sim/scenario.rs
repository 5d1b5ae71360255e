//! Random room scenarios: array pose, source positions and reverberation time.

use multiloc_core::geometry::{angle_between, norm, normalize, sub};
use multiloc_core::{MicArray, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Room dimensions in meters.
    pub room: Vec3,
    /// Inclusive RT60 sampling range in seconds.
    pub rt60: [f64; 2],
    pub sources: usize,
    /// Minimum distance from any wall, floor or ceiling.
    pub wall_margin: f64,
    /// Minimum source distance from the array center.
    pub min_source_distance: f64,
    /// Minimum pairwise source separation seen from the array center, degrees.
    pub min_separation_deg: f64,
    pub max_attempts: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            room: [10.0, 10.0, 3.0],
            rt60: [0.2, 0.5],
            sources: 1,
            wall_margin: 0.5,
            min_source_distance: 0.5,
            min_separation_deg: 30.0,
            max_attempts: 10_000,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.room.iter().any(|&d| !(d > 2.0 * self.wall_margin)) {
            return Err(Error::Config(
                "room must be larger than twice the wall margin".into(),
            ));
        }
        if !(self.rt60[0] > 0.0 && self.rt60[0] <= self.rt60[1]) {
            return Err(Error::Config(
                "rt60 range must be positive and ordered".into(),
            ));
        }
        if self.sources == 0 {
            return Err(Error::Config("at least one source is required".into()));
        }
        Ok(())
    }
}

/// Rigid placement of an array in the room: `world = center + R * local`,
/// where `local` is relative to the array centroid.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayPose {
    pub center: Vec3,
    /// Row-major rotation matrix.
    pub rotation: [[f64; 3]; 3],
}

impl ArrayPose {
    pub fn identity(center: Vec3) -> Self {
        Self {
            center,
            rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    pub fn to_world(&self, local: &Vec3) -> Vec3 {
        let r = &self.rotation;
        std::array::from_fn(|i| self.center[i] + (0..3).map(|j| r[i][j] * local[j]).sum::<f64>())
    }

    /// World direction expressed in the array frame.
    pub fn to_local_direction(&self, world: &Vec3) -> Vec3 {
        let r = &self.rotation;
        std::array::from_fn(|i| (0..3).map(|j| r[j][i] * world[j]).sum())
    }

    pub fn mic_positions(&self, array: &MicArray) -> Vec<Vec3> {
        let c = array.centroid();
        array
            .positions()
            .iter()
            .map(|p| self.to_world(&sub(p, &c)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub room: Vec3,
    pub rt60: f64,
    pub array_pose: ArrayPose,
    pub source_positions: Vec<Vec3>,
    pub seed: u64,
}

impl Scenario {
    /// Unit source directions in the array frame, as seen from the array center.
    pub fn true_doas(&self) -> Vec<Vec3> {
        self.source_positions
            .iter()
            .map(|s| {
                normalize(
                    &self
                        .array_pose
                        .to_local_direction(&sub(s, &self.array_pose.center)),
                )
            })
            .collect()
    }
}

fn uniform_in_box(rng: &mut impl Rng, room: &Vec3, margin: f64) -> Vec3 {
    std::array::from_fn(|i| rng.random_range(margin..=room[i] - margin))
}

/// Uniformly distributed rotation from a random unit quaternion.
pub fn random_rotation(rng: &mut impl Rng) -> [[f64; 3]; 3] {
    let tau = std::f64::consts::TAU;
    let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let (w, x, y, z) = (
        a * (tau * u2).sin(),
        a * (tau * u2).cos(),
        b * (tau * u3).sin(),
        b * (tau * u3).cos(),
    );
    [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ]
}

/// Rejection-samples a scenario satisfying every placement constraint.
pub fn generate_scenario(config: &ScenarioConfig, seed: u64) -> Result<Scenario> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let min_sep = config.min_separation_deg.to_radians();
    for _ in 0..config.max_attempts {
        let center = uniform_in_box(&mut rng, &config.room, config.wall_margin);
        let rotation = random_rotation(&mut rng);
        let rt60 = rng.random_range(config.rt60[0]..=config.rt60[1]);
        let mut sources: Vec<Vec3> = Vec::with_capacity(config.sources);
        let mut tries = 0;
        while sources.len() < config.sources && tries < config.max_attempts {
            tries += 1;
            let s = uniform_in_box(&mut rng, &config.room, config.wall_margin);
            let d = sub(&s, &center);
            if norm(&d) < config.min_source_distance {
                continue;
            }
            let dir = normalize(&d);
            let separated = sources
                .iter()
                .all(|o| angle_between(&normalize(&sub(o, &center)), &dir) >= min_sep);
            if separated {
                sources.push(s);
            }
        }
        if sources.len() == config.sources {
            return Ok(Scenario {
                room: config.room,
                rt60,
                array_pose: ArrayPose { center, rotation },
                source_positions: sources,
                seed,
            });
        }
    }
    Err(Error::Config(format!(
        "no valid scenario after {} attempts",
        config.max_attempts
    )))
}
