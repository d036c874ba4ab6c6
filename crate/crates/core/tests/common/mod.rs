#![allow(dead_code)]

use std::sync::OnceLock;

use arcs::harness::{default_scene, DatasetSource, ExperimentConfig, Strategy};
use arcs::measurement::EnsembleKind;
use arcs::phase_diagram::{generate, PhaseDiagram, PhaseDiagramConfig};
use arcs::signal_model::{ObjectSpec, SceneConfig};

/// Default scene with frame 1 repeated: one 8×5 object, `s = 40`.
pub fn repeat_scene(frames: usize) -> SceneConfig {
    let mut scene = default_scene();
    scene.repeat = true;
    scene.frames = frames;
    scene
}

/// One object entering from the left edge, a second appearing later.
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

pub fn config(strategy: Strategy, scene: SceneConfig) -> ExperimentConfig {
    ExperimentConfig {
        strategy,
        dataset: DatasetSource::Synthetic(scene),
        ..ExperimentConfig::default()
    }
}

/// Coarse diagram at `n = 1024` for tests that only need a usable lookup,
/// built once per test binary.
pub fn quick_diagram() -> &'static PhaseDiagram {
    static PD: OnceLock<PhaseDiagram> = OnceLock::new();
    PD.get_or_init(build_quick_diagram)
}

fn build_quick_diagram() -> PhaseDiagram {
    let mut cfg = PhaseDiagramConfig::desk(EnsembleKind::Gaussian, 1024, 7);
    cfg.m_over_n = vec![0.0625, 0.125, 0.25, 0.375, 0.5, 0.75, 1.0];
    cfg.s_over_m = vec![0.05, 0.1, 0.15, 0.2, 0.3, 0.5];
    cfg.trials = 3;
    generate(&cfg).expect("diagram")
}
