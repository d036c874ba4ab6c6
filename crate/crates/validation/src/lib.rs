//! Reference scenes shared by the end-to-end checks.

use arcs::harness::{default_scene, DatasetSource, ExperimentConfig, Strategy};
use arcs::signal_model::{ObjectSpec, SceneConfig};

/// Default scene with frame 1 repeated: one 8×5 object, `s = 40`.
pub fn repeat_scene(frames: usize) -> SceneConfig {
    let mut scene = default_scene();
    scene.repeat = true;
    scene.frames = frames;
    scene
}

/// One object entering from the left edge, a second appearing at frame 8.
pub fn two_object_scene(frames: usize) -> SceneConfig {
    let mut scene = default_scene();
    scene.frames = frames;
    scene.objects = vec![
        ObjectSpec {
            x: -6.0,
            y: 4.0,
            width: 6,
            height: 6,
            vx: 1.0,
            vy: 0.0,
            first: 1,
            last: usize::MAX,
        },
        ObjectSpec {
            x: 20.0,
            y: 18.0,
            width: 8,
            height: 4,
            vx: -0.5,
            vy: 0.0,
            first: 8,
            last: usize::MAX,
        },
    ];
    scene
}

/// Defaults with a synthetic dataset.
pub fn config(strategy: Strategy, scene: SceneConfig) -> ExperimentConfig {
    ExperimentConfig {
        strategy,
        dataset: DatasetSource::Synthetic(scene),
        ..ExperimentConfig::default()
    }
}
