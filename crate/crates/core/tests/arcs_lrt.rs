mod common;

use proptest::prelude::*;
use rand::Rng;

use arcs::arcs_lrt::{
    discretize_pmf, downsample, minimize_cost, recovery_constant, unscented_moments, warp_to_sparsity, warped_area,
    AreaMode, CostParams, CostTable, SparsityPmf, TemplateOutline, TrackDynamics, WarpParams,
};
use arcs::harness::{load_dataset, run_strategy, Strategy, TrackSource};
use arcs::rng::rng_for;
use arcs::signal_model::{ForegroundModel, Frame, ObjectSpec};

fn params(n: usize, lambda: f64) -> CostParams {
    CostParams {
        lambda,
        c0: recovery_constant(0.25).unwrap(),
        tau: 0.1,
        sigma_b: 4.0 / 255.0,
        dim: n,
    }
}

fn exhaustive_argmin(table: &CostTable, n: usize) -> usize {
    (1..=n)
        .map(|s| (s, table.cost(s)))
        .fold((0, f64::INFINITY), |acc, (s, c)| if c < acc.1 { (s, c) } else { acc })
        .0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn downsampling_preserves_the_mean_of_8_bit_frames(
        blocks in 1usize..9,
        factor in prop_oneof![Just(1usize), Just(2), Just(4)],
        seed in any::<u64>(),
    ) {
        let side = blocks * factor;
        let mut rng = rng_for(seed, &[]);
        let pixels: Vec<f64> = (0..side * side).map(|_| rng.random_range(0..256) as f64 / 256.0).collect();
        let hi = Frame::new(side, pixels).unwrap();
        let lo = downsample(&hi, factor).unwrap();
        prop_assert_eq!(lo.side(), blocks);
        prop_assert_eq!(lo.mean(), hi.mean());
    }

    #[test]
    fn downsampling_preserves_the_mean(blocks in 1usize..7, factor in 1usize..5, seed in any::<u64>()) {
        let side = blocks * factor;
        let mut rng = rng_for(seed, &[]);
        let hi = Frame::new(side, (0..side * side).map(|_| rng.random::<f64>()).collect()).unwrap();
        let lo = downsample(&hi, factor).unwrap();
        prop_assert!((lo.mean() - hi.mean()).abs() <= 1e-12);
    }

    #[test]
    fn geometric_area_tracks_rasterized_box(
        w in 0.5f64..25.0,
        h in 0.5f64..25.0,
        x in 0.0f64..40.0,
        y in 0.0f64..40.0,
        factor in prop_oneof![Just(1usize), Just(2), Just(4)],
    ) {
        let p = WarpParams::new(w, h, x, y);
        let d = factor as f64;
        let centres = |lo: f64, len: f64| {
            let first = (d * lo - 0.5).ceil() as i64;
            let last = (d * (lo + len) - 0.5).floor() as i64;
            (last - first + 1).max(0) as f64
        };
        let count = centres(x, w) * centres(y, h);
        let s = warp_to_sparsity(&p, &TemplateOutline::default(), factor, AreaMode::Geometric) as f64;
        prop_assert!((s - count).abs() <= 2.0 * (w + h) * d, "h = {s}, raster = {count}");
    }

    #[test]
    fn pmf_is_normalised_on_zero_to_n(mu in -100.0f64..3000.0, sd in 0.0f64..500.0, n in 1usize..2000) {
        let q = discretize_pmf(mu, sd * sd, n);
        prop_assert_eq!(q.max_value(), n);
        prop_assert!((q.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(q.probs().iter().all(|p| *p >= 0.0));
    }

    #[test]
    fn minimizer_matches_exhaustive_scan(
        n in 10usize..2000,
        mu_frac in 0.0f64..1.0,
        sd_frac in 0.001f64..0.3,
        log_lambda in -3.0f64..0.5,
    ) {
        let q = discretize_pmf(mu_frac * n as f64, (sd_frac * n as f64).powi(2), n);
        let p = params(n, 10f64.powf(log_lambda));
        let table = CostTable::new(&q, p).unwrap();
        prop_assert_eq!(minimize_cost(&q, p).unwrap(), exhaustive_argmin(&table, n));
    }
}

#[test]
fn minimizer_matches_exhaustive_scan_on_point_masses() {
    for n in [10usize, 200, 1024] {
        for k in [0, 1, n / 10, n / 2, n] {
            for lambda in [1e-3, 0.05, 0.5] {
                let q = SparsityPmf::point_mass(k, n);
                let p = params(n, lambda);
                let table = CostTable::new(&q, p).unwrap();
                assert_eq!(
                    minimize_cost(&q, p).unwrap(),
                    exhaustive_argmin(&table, n),
                    "n {n} k {k} λ {lambda}"
                );
            }
        }
    }
}

#[test]
fn unscented_mean_matches_monte_carlo() {
    let template = TemplateOutline::default();
    let dynamics = TrackDynamics::diagonal([1.0, 1.0, 3.0, 3.0]).unwrap();
    let mut rng = rng_for(21, &[]);
    for p in [
        WarpParams::new(4.0, 2.5, 5.0, 6.0),
        WarpParams::new(10.0, 3.0, 0.0, 9.0),
    ] {
        let (mean, var) = unscented_moments(&p, &dynamics, &template, 2, AreaMode::Geometric);
        let draws = 50_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..draws {
            let q = WarpParams::new(
                p.p1 + rng.sample::<f64, _>(rand_distr::StandardNormal),
                p.p2 + rng.sample::<f64, _>(rand_distr::StandardNormal),
                p.p3,
                p.p4,
            );
            let a = warped_area(&q, &template, 2, AreaMode::Geometric);
            s1 += a;
            s2 += a * a;
        }
        let mc_mean = s1 / draws as f64;
        let mc_var = s2 / draws as f64 - mc_mean * mc_mean;
        assert!((mean - mc_mean).abs() <= 0.05 * mc_mean, "{mean} vs {mc_mean}");
        // the sigma-point variance omits the fourth-order product term
        assert!(var <= mc_var && var >= 0.5 * mc_var, "{var} vs {mc_var}");
    }
}

/// `(best-term, magnitude-blind)` ℓ1 errors of one draw with sparsity `k`.
fn l1_errors<R: Rng>(rng: &mut R, model: &ForegroundModel, n: usize, k: usize, s_hat: usize) -> (f64, f64) {
    let mut mags: Vec<f64> = (0..n)
        .map(|i| {
            if i < k {
                model.draw_foreground(rng).abs()
            } else {
                model.draw_background(rng).abs()
            }
        })
        .collect();
    // keep the first min(k, ŝ) foreground entries, then background ones
    let blind: f64 = mags[s_hat.min(n)..].iter().sum();
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
    (mags[s_hat.min(n)..].iter().sum(), blind)
}

#[test]
fn error_terms_match_magnitude_blind_error_and_bound_best_term_error() {
    let n = 400;
    let model = ForegroundModel::new(0.1, (4.0f64 / 255.0).powi(2)).unwrap();
    let q = discretize_pmf(60.0, 15.0 * 15.0, n);
    let table = CostTable::new(&q, params(n, 0.1)).unwrap();
    let mut rng = rng_for(22, &[]);
    let cdf: Vec<f64> = q
        .probs()
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    for s_hat in [20, 60, 100] {
        let (j0, j1) = table.error_terms(s_hat);
        let draws = 20_000;
        let (mut best, mut blind) = (0.0, 0.0);
        for _ in 0..draws {
            let u: f64 = rng.random();
            let k = cdf.partition_point(|c| *c < u).min(n);
            let (b, m) = l1_errors(&mut rng, &model, n, k, s_hat);
            best += b;
            blind += m;
        }
        let (best, blind) = (best / draws as f64, blind / draws as f64);
        assert!(
            (blind - (j0 + j1)).abs() <= 0.05 * (j0 + j1),
            "ŝ {s_hat}: {blind} vs {}",
            j0 + j1
        );
        assert!(best <= (j0 + j1) * 1.01, "ŝ {s_hat}: {best} vs {}", j0 + j1);
    }
}

#[test]
fn lrt_overhead_is_the_low_resolution_pixel_count() {
    let pd = common::quick_diagram();
    let cfg = common::config(Strategy::ArcsLrt, common::repeat_scene(4));
    let dataset = load_dataset(&cfg).unwrap();
    let run = run_strategy(&cfg, &dataset, pd).unwrap();
    assert_eq!(run.overhead, 256);
    for m in &run.metrics {
        assert_eq!(m.m_total, m.m_t + 256);
        assert!(m.m_total as f64 >= 0.25 * 1024.0);
    }
    // perfect track on a repeated frame: one frame to adapt
    assert!(run.metrics[1..]
        .iter()
        .all(|m| (m.s_hat as f64 - 40.0).abs() <= 0.2 * 40.0));
}

#[test]
fn empty_scene_without_tracks_settles_near_zero() {
    let pd = common::quick_diagram();
    let mut scene = common::repeat_scene(4);
    scene.objects.clear();
    let cfg = common::config(Strategy::ArcsLrt, scene);
    let dataset = load_dataset(&cfg).unwrap();
    let run = run_strategy(&cfg, &dataset, pd).unwrap();
    assert!(run.metrics[1..].iter().all(|m| m.s_hat <= 2), "{:?}", run.metrics);
}

fn moving_object_run(object: ObjectSpec, tracks: TrackSource) -> arcs::harness::RunOutput {
    let pd = common::quick_diagram();
    let mut scene = common::repeat_scene(12);
    scene.repeat = false;
    scene.objects = vec![object];
    let mut cfg = common::config(Strategy::ArcsLrt, scene);
    cfg.lrt.tracks = tracks;
    let dataset = load_dataset(&cfg).unwrap();
    run_strategy(&cfg, &dataset, pd).unwrap()
}

fn mover(vx: f64, vy: f64) -> ObjectSpec {
    ObjectSpec {
        x: 2.0,
        y: 10.0,
        width: 8,
        height: 6,
        vx,
        vy,
        first: 1,
        last: usize::MAX,
    }
}

#[test]
fn blob_tracks_follow_manual_tracks_on_block_aligned_motion() {
    let manual = moving_object_run(mover(2.0, 0.0), TrackSource::Manual);
    let blob = moving_object_run(mover(2.0, 0.0), TrackSource::Blob);
    let (mut diff, mut norm) = (0.0, 0.0);
    for (a, b) in manual.metrics.iter().zip(&blob.metrics).skip(1) {
        diff += (a.s_hat as f64 - b.s_hat as f64).powi(2);
        norm += (a.s_hat as f64).powi(2);
    }
    let rel = (diff / norm).sqrt();
    assert!(rel <= 0.15, "relative RMS gap {rel:.3}");
}

#[test]
fn blob_boxes_grow_by_at_most_one_block_when_straddling() {
    // 8×6 object at odd offsets covers up to 5×4 blocks of 2×2
    let blob = moving_object_run(mover(1.0, 0.5), TrackSource::Blob);
    for d in blob.lrt.iter().skip(1).filter(|d| d.tracked) {
        assert!(d.mu_pred >= 48.0 - 1e-9 && d.mu_pred <= 80.0 + 1e-9, "{}", d.mu_pred);
    }
}
