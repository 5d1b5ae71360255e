//! Room simulation: scenarios, impulse responses, test signals and rendering.

pub mod render;
pub mod rir;
pub mod scenario;
pub mod speech;

pub use render::{render_mixture, render_plane_waves, render_scenario};
pub use rir::{AbsorptionModel, ImageSource, Rir};
pub use scenario::{generate_scenario, ArrayPose, Scenario, ScenarioConfig};
pub use speech::synth_speech_like;
