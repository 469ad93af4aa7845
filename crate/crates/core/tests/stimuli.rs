use mlsensor::stimuli::{
    decode_display, detect_gaze, detect_keyword, detect_keywords, detect_person, detect_tap,
    render_display, render_scene, segment_lookup, synth_audio, synth_imu, DisplayLayout,
    DisplayParams, DisplayScene, Frame, GazeParams, KeywordParams, PersonParams, Reading,
    Rotation, SceneParams, ScriptEntry, SegmentSet, StimulusError, Subject, TapParams,
    DEFAULT_AUDIO_NOISE, DISPLAY_FRAME_SIZE, FRAME_SIZE, IMU_SAMPLE_PERIOD_MS, SEGMENT_TABLE,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn nominal(present: bool, facing: bool, seed: u64) -> SceneParams {
    SceneParams {
        person_present: present,
        facing_camera: facing,
        distance_m: 1.0,
        illuminance_lux: 500.0,
        noise_sigma: 4.0,
        seed,
        subject: Subject::Person,
        x_position: None,
        noise_seed: None,
    }
}

#[test]
fn scenes_are_deterministic() {
    let p = nominal(true, true, 42);
    assert_eq!(render_scene(&p).unwrap(), render_scene(&p).unwrap());
    let bad = SceneParams { distance_m: 0.1, ..p.clone() };
    assert!(render_scene(&bad).is_err());
    let facing_nobody = nominal(false, true, 1);
    assert!(render_scene(&facing_nobody).is_err());
}

#[test]
fn empty_scenes_stay_below_threshold() {
    let params = PersonParams::default();
    let max = (0..1000)
        .map(|seed| detect_person(&render_scene(&nominal(false, false, seed)).unwrap(), &params).score)
        .fold(0.0, f64::max);
    assert!(max < params.threshold, "max negative score {max}");
}

/// Rows where a noiseless render with the figure differs from the same
/// render without it.
fn figure_rows(distance_m: f64) -> usize {
    let p = SceneParams {
        distance_m,
        noise_sigma: 0.0,
        x_position: Some(0.5),
        ..nominal(true, false, 9)
    };
    let with = render_scene(&p).unwrap();
    let without = render_scene(&SceneParams { person_present: false, ..p }).unwrap();
    (0..with.height())
        .filter(|&y| (0..with.width()).any(|x| with.get(x, y) != without.get(x, y)))
        .count()
}

#[test]
fn figure_height_scales_with_inverse_distance() {
    let (near, far) = (figure_rows(1.0) as f64, figure_rows(5.0) as f64);
    assert!((near - 5.0 * far).abs() <= 5.0 + 1e-9, "{near} vs 5 × {far}");
}

#[test]
fn calibrated_vision_cores() {
    let person = PersonParams::default();
    let gaze = GazeParams::default();
    for seed in 0..200 {
        let facing = render_scene(&nominal(true, true, seed)).unwrap();
        let away = render_scene(&nominal(true, false, seed)).unwrap();
        assert!(detect_person(&facing, &person).present, "seed {seed}");
        assert!(detect_person(&away, &person).present, "seed {seed}");
        assert!(detect_gaze(&facing, &gaze).present, "seed {seed}");
        assert!(!detect_gaze(&away, &gaze).present, "seed {seed}");
    }
    let empty = render_scene(&nominal(false, false, 3)).unwrap();
    assert!(!detect_gaze(&empty, &gaze).present);
    let zero = Frame::filled(FRAME_SIZE, FRAME_SIZE, 0).unwrap();
    let d = detect_person(&zero, &person);
    assert_eq!((d.present, d.score), (false, 0.0));
    assert_eq!(detect_person(&empty, &person), detect_person(&empty, &person));
}

#[test]
fn person_score_ignores_global_intensity_scale() {
    let params = PersonParams::default();
    for seed in 0..20 {
        // Even values up to 126 scale by 0.5 and 2 without rounding or clipping.
        let base = render_scene(&nominal(true, true, seed)).unwrap();
        let px: Vec<u8> = base.pixels().iter().map(|&v| (v / 2) & !1).collect();
        let scaled = |k: f64| {
            let p = px.iter().map(|&v| (v as f64 * k) as u8).collect();
            Frame::new(base.width(), base.height(), p).unwrap()
        };
        let reference = detect_person(&scaled(1.0), &params).score;
        for k in [0.5, 2.0] {
            let s = detect_person(&scaled(k), &params).score;
            assert!((s - reference).abs() < 1e-6, "seed {seed}, ×{k}: {s} vs {reference}");
        }
    }
}

#[test]
fn person_tpr_degrades_monotonically_over_the_grid() {
    let params = PersonParams::default();
    let distances = [1.0, 2.0, 3.0, 5.0];
    let luxes = [50.0, 200.0, 1000.0];
    let tpr = |d: f64, lux: f64| {
        let hits = (0..200)
            .filter(|&seed| {
                let p = SceneParams {
                    distance_m: d,
                    illuminance_lux: lux,
                    ..nominal(true, seed % 2 == 0, seed)
                };
                detect_person(&render_scene(&p).unwrap(), &params).present
            })
            .count();
        hits as f64 / 200.0
    };
    let grid: Vec<Vec<f64>> = distances.iter().map(|&d| luxes.iter().map(|&l| tpr(d, l)).collect()).collect();
    for i in 0..distances.len() {
        for j in 0..luxes.len() {
            if i + 1 < distances.len() {
                assert!(grid[i + 1][j] <= grid[i][j], "distance step at {i},{j}: {grid:?}");
            }
            if j + 1 < luxes.len() {
                assert!(grid[i][j + 1] >= grid[i][j], "lux step at {i},{j}: {grid:?}");
            }
        }
    }
}

/// First-difference magnitude, the reference high-pass.
fn high_pass(samples: &[[f64; 3]]) -> Vec<f64> {
    let mut out = vec![0.0];
    for w in samples.windows(2) {
        let d: f64 = (0..3).map(|k| (w[1][k] - w[0][k]).powi(2)).sum();
        out.push(d.sqrt());
    }
    out
}

#[test]
fn imu_generator_statistics() {
    let sigma = 0.02;
    for seed in 0..20 {
        let quiet = synth_imu(&[], 2000, sigma, seed).unwrap();
        for s in quiet.samples() {
            let rest = [0.0, 0.0, 1.0];
            assert!((0..3).all(|k| (s[k] - rest[k]).abs() <= 5.0 * sigma), "{s:?}");
        }
        let tapped = synth_imu(&[500], 1000, sigma, seed).unwrap();
        let hp = high_pass(tapped.samples());
        let peak = (0..hp.len()).max_by(|&a, &b| hp[a].total_cmp(&hp[b])).unwrap();
        let t = peak as u64 * IMU_SAMPLE_PERIOD_MS;
        assert!((470..=560).contains(&t), "peak at {t}");
    }
    assert_eq!(synth_imu(&[100], 500, 0.1, 5).unwrap(), synth_imu(&[100], 500, 0.1, 5).unwrap());
}

#[test]
fn tap_detector_closed_loop() {
    let params = TapParams::default();
    for seed in 0..50 {
        let hits = detect_tap(&synth_imu(&[500, 900], 1500, 0.02, seed).unwrap(), &params);
        assert_eq!(hits.len(), 2, "{hits:?}");
        assert!(hits[0].abs_diff(500) <= 30 && hits[1].abs_diff(900) <= 30, "{hits:?}");
        let close = detect_tap(&synth_imu(&[500, 550], 1500, 0.02, seed).unwrap(), &params);
        assert_eq!(close.len(), 1);
        assert!(detect_tap(&synth_imu(&[], 3000, 0.01, seed).unwrap(), &params).is_empty());
    }
}

fn on_off() -> Vec<String> {
    vec!["on".into(), "off".into()]
}

#[test]
fn keyword_closed_loop() {
    let params = KeywordParams::for_vocabulary(&on_off());
    for seed in 0..50 {
        let script = [ScriptEntry::new("on", 300)];
        let audio = synth_audio(&script, &on_off(), 1500, DEFAULT_AUDIO_NOISE, seed).unwrap();
        let hit = detect_keyword(&audio, &params).unwrap();
        assert_eq!(hit.word, "on");
        assert!(hit.t_ms.abs_diff(300) <= 40, "{}", hit.t_ms);
        let silence = synth_audio(&[], &on_off(), 1500, DEFAULT_AUDIO_NOISE, seed).unwrap();
        assert!(detect_keyword(&silence, &params).is_none());
    }
}

#[test]
fn often_sometimes_sounds_like_off() {
    let params = KeywordParams::for_vocabulary(&on_off());
    let false_offs = (0..500)
        .filter(|&seed| {
            let script = [ScriptEntry::new("often", 300)];
            let audio = synth_audio(&script, &on_off(), 1000, DEFAULT_AUDIO_NOISE, seed).unwrap();
            detect_keywords(&audio, &params).iter().any(|h| h.word == "off")
        })
        .count();
    assert!(false_offs > 0);
}

fn render(r: &Reading, rotation: Rotation, x: usize, y: usize) -> Result<Frame, StimulusError> {
    let layout = DisplayLayout { rotation, x, y, ..Default::default() };
    render_display(r, &layout, &DisplayScene::default())
}

fn random_reading(rng: &mut ChaCha8Rng) -> Reading {
    let digits = |rng: &mut ChaCha8Rng, n: usize| -> String {
        (0..n).map(|_| char::from(b'0' + rng.random_range(0..10u8))).collect()
    };
    let whole_len = rng.random_range(1..=7);
    let frac_len = rng.random_range(0..=8);
    let whole = digits(rng, whole_len);
    let frac = digits(rng, frac_len);
    Reading::new(rng.random_bool(0.5), whole, frac).unwrap()
}

#[test]
fn display_round_trips_in_every_rotation() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let params = DisplayParams::default();
    for _ in 0..100 {
        let r = random_reading(&mut rng);
        for rot in Rotation::ALL {
            let (w, h) = mlsensor::stimuli::rotated_panel_size(&r, rot);
            let x = rng.random_range(0..=DISPLAY_FRAME_SIZE - w);
            let y = rng.random_range(0..=DISPLAY_FRAME_SIZE - h);
            let frame = render(&r, rot, x, y).unwrap();
            assert_eq!(decode_display(&frame, &params), Some(r.clone()), "{r} at {rot:?} ({x},{y})");
        }
    }
}

#[test]
fn display_examples() {
    let params = DisplayParams::default();
    let decoded = |text: &str, rot| decode_display(&render(&Reading::parse(text).unwrap(), rot, 10, 10).unwrap(), &params);
    assert_eq!(decoded("0.25", Rotation::R0), Some(Reading::new(false, "0", "25").unwrap()));
    assert_eq!(decoded("42", Rotation::R180), Some(Reading::new(false, "42", "").unwrap()));
    let too_wide = Reading::parse("123456789").unwrap();
    assert!(matches!(render(&too_wide, Rotation::R0, 4, 4), Err(StimulusError::LayoutOverflow(_))));
    let blank = Frame::filled(DISPLAY_FRAME_SIZE, DISPLAY_FRAME_SIZE, 30).unwrap();
    assert_eq!(decode_display(&blank, &params), None);
}

#[test]
fn segment_table_is_the_standard_decode() {
    let standard = ["abcdef", "bc", "abdeg", "abcdg", "bcfg", "acdfg", "acdefg", "abc", "abcdefg", "abcdfg"];
    for (digit, letters) in standard.iter().enumerate() {
        let set = SegmentSet::from_letters(letters).unwrap();
        assert_eq!(SEGMENT_TABLE[digit], set);
        assert_eq!(segment_lookup(set), Some(digit as u8));
    }
    let known = standard.len();
    let decodable = (0..128u8).filter(|&bits| segment_lookup(SegmentSet(bits)).is_some()).count();
    assert_eq!(decodable, known);
    assert_eq!(segment_lookup(SegmentSet::from_letters("ab").unwrap()), None);
}
