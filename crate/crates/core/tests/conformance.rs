use mlsensor::conformance::{
    assemble, compare, envelope, run, run_trial, Axis, AxisKind, ConformanceError,
    ConformanceReport, TestProtocol,
};
use mlsensor::devkit::{DevkitError, SensorDevice, SensorKind};
use mlsensor::sensors::{build_device, default_blob, person_detector, BlobPayload, DeviceConfig};
use mlsensor::stimuli::PersonParams;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn factory(kind: SensorKind) -> impl Fn() -> Result<SensorDevice, DevkitError> + Sync {
    move || build_device(kind, &DeviceConfig::default(), &default_blob(kind))
}

fn small_person(seed: u64) -> TestProtocol {
    let mut p = TestProtocol::new(
        SensorKind::Person,
        Axis::new(AxisKind::DistanceM, [1.0, 5.0]),
        Axis::new(AxisKind::Lux, [50.0, 800.0]),
        seed,
    );
    p.trials_per_cell = 10;
    p
}

#[test]
fn reports_are_reproducible_and_round_trip() {
    let p = small_person(21);
    let a = run(factory(SensorKind::Person), &p).unwrap();
    let b = run(factory(SensorKind::Person), &p).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(a.cells.len(), 4);
    assert!(a.cells.iter().all(|c| c.trials == 10 && (0.0..=1.0).contains(&c.tpr)));
    assert_eq!(ConformanceReport::from_json(&a.to_json()).unwrap(), a);
}

#[test]
fn trial_order_does_not_matter() {
    let p = small_person(5);
    let n = p.trials_per_cell;
    let mut order: Vec<usize> = (0..p.cell_count() * n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(99));
    let f = factory(SensorKind::Person);
    let mut outcomes = vec![None; order.len()];
    for i in order {
        outcomes[i] = Some(run_trial(&f, &p, i / n, i % n).unwrap());
    }
    let outcomes: Vec<_> = outcomes.into_iter().map(Option::unwrap).collect();
    let shuffled = assemble(&p, &outcomes).unwrap();
    assert_eq!(shuffled.to_json(), run(f, &p).unwrap().to_json());
}

#[test]
fn nominal_cell_matches_a_trial_by_trial_rerun() {
    let mut p = TestProtocol::new(
        SensorKind::Person,
        Axis::new(AxisKind::DistanceM, [1.0]),
        Axis::new(AxisKind::Lux, [800.0]),
        3,
    );
    p.trials_per_cell = 40;
    let report = run(factory(SensorKind::Person), &p).unwrap();
    let cell = &report.cells[0];
    assert_eq!((cell.tpr, cell.fpr), (1.0, 0.0));

    let f = factory(SensorKind::Person);
    let outcomes: Vec<_> = (0..p.trials_per_cell).map(|t| run_trial(&f, &p, 0, t).unwrap()).collect();
    let tp = outcomes.iter().filter(|o| o.positive && o.detected).count();
    let fp = outcomes.iter().filter(|o| !o.positive && o.detected).count();
    assert_eq!((tp, fp), (cell.true_positives, cell.false_positives));
    let latencies: Vec<u64> = outcomes.iter().filter_map(|o| o.latency_ms).collect();
    let mean = latencies.iter().sum::<u64>() as f64 / latencies.len() as f64;
    assert_eq!(cell.latency_mean_ms, Some(mean));
}

#[test]
fn envelope_edge_cases() {
    let report = run(factory(SensorKind::Person), &small_person(8)).unwrap();
    let all = envelope(&report, 0.0, 1.0).unwrap();
    assert_eq!(all.bound(AxisKind::DistanceM), Some(5.0));
    assert_eq!(all.bound(AxisKind::Lux), Some(50.0));
    assert!(envelope(&report, 1.01, 1.0).is_none());
}

#[test]
fn raising_the_threshold_never_adds_false_positives() {
    let p = small_person(13);
    let base = run(factory(SensorKind::Person), &p).unwrap();
    let strict = PersonParams { threshold: 0.9, ..PersonParams::default() }.to_blob();
    let raised = run(|| person_detector(Default::default(), &strict), &p).unwrap();
    let cmp = compare(&base, &raised).unwrap();
    assert!(cmp.cells.iter().all(|c| c.fpr_delta <= 0.0), "{cmp:?}");
    assert!(cmp.cells.iter().all(|c| c.tpr_delta <= 0.0), "{cmp:?}");

    let same = compare(&base, &base).unwrap();
    assert!(same.cells.iter().all(|c| c.tpr_delta == 0.0 && c.fpr_delta == 0.0));
    assert_eq!((same.a_dominates, same.b_dominates), (0, 0));

    let mut other = small_person(13);
    other.axes[0] = Axis::new(AxisKind::DistanceM, [1.0, 2.0, 5.0]);
    let other = run(factory(SensorKind::Person), &other).unwrap();
    assert!(matches!(compare(&base, &other), Err(ConformanceError::ShapeMismatch(_))));
}

#[test]
fn factory_kind_is_checked() {
    let p = small_person(1);
    let err = run(factory(SensorKind::Gaze), &p).unwrap_err();
    assert!(matches!(err, ConformanceError::FactoryKindMismatch { .. }));
}

#[test]
fn invalid_protocols_are_rejected() {
    let mut p = small_person(1);
    p.trials_per_cell = 5;
    assert!(matches!(p.validate(), Err(ConformanceError::InvalidProtocol(_))));
    let mut p = small_person(1);
    p.positive_fraction = 1.0;
    assert!(p.validate().is_err());
    let mut p = small_person(1);
    p.axes[1] = Axis::new(AxisKind::DistractorRate, [0.0]);
    assert!(p.validate().is_err());
}

fn quick(kind: SensorKind, first: Axis, second: Axis) -> ConformanceReport {
    let mut p = TestProtocol::new(kind, first, second, 17);
    p.trials_per_cell = 10;
    run(factory(kind), &p).unwrap()
}

#[test]
fn non_vision_kinds_use_their_own_axes() {
    let tap = quick(
        SensorKind::Tap,
        Axis::new(AxisKind::NoiseSigma, [0.02, 0.3]),
        Axis::new(AxisKind::DistractorRate, [0.0]),
    );
    assert_eq!(tap.cell(0, 0).tpr, 1.0);
    assert_eq!(tap.cell(0, 0).fpr, 0.0);
    assert!(tap.cell(1, 0).fpr > 0.0, "heavy noise should cause false taps");

    let voice = quick(
        SensorKind::Voice,
        Axis::new(AxisKind::NoiseSigma, [0.3]),
        Axis::new(AxisKind::DistractorRate, [0.0, 1.0]),
    );
    assert!(voice.cells.iter().all(|c| c.tpr == 1.0 && c.fpr == 0.0));

    let text = quick(
        SensorKind::TextReader,
        Axis::new(AxisKind::Lux, [50.0, 800.0]),
        Axis::new(AxisKind::NoiseSigma, [0.0, 8.0]),
    );
    assert!(text.cells.iter().all(|c| c.tpr == 1.0 && c.fpr == 0.0));
    let env = envelope(&text, 0.9, 0.05).unwrap();
    assert_eq!(env.bound(AxisKind::Lux), Some(50.0));
}
