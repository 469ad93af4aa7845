use std::any::Any;
use std::collections::BTreeMap;

use mlsensor::devkit::{
    audit, declared_surface, device_mut, exposure_csv, feed, parse_exposure_csv, power_on,
    AuditCode, DevkitError, ParameterBlob, PinRole, SensorKind,
};
use mlsensor::sensors::{build_device, default_blob, DeviceConfig};
use mlsensor::stimuli::{render_scene, synth_imu, SceneParams, Subject};
use mlsensor::vbus::{
    Bus, BusError, ExposureRecord, I2cRequest, LogicLevel, Peripheral, PinPort, SimTime,
};
use proptest::prelude::*;

fn wiring(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
}

fn device(kind: SensorKind) -> mlsensor::devkit::SensorDevice {
    build_device(kind, &DeviceConfig::default(), &default_blob(kind)).unwrap()
}

fn person_frame(seed: u64) -> mlsensor::stimuli::Frame {
    render_scene(&SceneParams {
        person_present: true,
        facing_camera: true,
        distance_m: 1.5,
        illuminance_lux: 300.0,
        noise_sigma: 4.0,
        seed,
        subject: Subject::Person,
        x_position: None,
        noise_seed: None,
    })
    .unwrap()
}

#[test]
fn bus_examples() {
    let mut bus = Bus::new();
    assert!(bus.advance(100).unwrap().is_empty());
    assert_eq!(bus.clock(), SimTime(100));
    assert_eq!(bus.advance(0), Err(BusError::ZeroAdvance));

    bus.add_line("x", LogicLevel::Low).unwrap();
    bus.drive("x", LogicLevel::High, SimTime(105)).unwrap();
    let t = bus.drive("x", LogicLevel::High, SimTime(107)).unwrap().clone();
    assert_eq!(t.transitions().len(), 1);
    bus.drive("x", LogicLevel::Low, SimTime(110)).unwrap();
    let trace = bus.trace("x").unwrap();
    let got: Vec<(u64, LogicLevel)> = trace.transitions().iter().map(|t| (t.at.0, t.level)).collect();
    assert_eq!(got, vec![(105, LogicLevel::High), (110, LogicLevel::Low)]);
    assert!(matches!(bus.drive("x", LogicLevel::High, SimTime(50)), Err(BusError::TimeTravel { .. })));
    assert!(matches!(bus.drive("nope", LogicLevel::High, SimTime(200)), Err(BusError::UnknownLine(_))));

    assert!(!bus.i2c_transfer(0x50, I2cRequest::Read(4)).is_ack());
    assert!(bus.i2c_transfer(0x50, I2cRequest::Read(4)).payload.is_empty());
}

#[test]
fn person_in_view_for_a_second_gives_one_rising_edge() {
    let mut bus = Bus::new();
    let h = power_on(
        device(SensorKind::Person),
        &mut bus,
        &wiring(&[("VDD", "vdd"), ("GND", "gnd"), ("DETECT", "detect")]),
    )
    .unwrap();
    assert_eq!(bus.trace("detect").unwrap().current_level(), LogicLevel::Low);
    let mut events = Vec::new();
    for t in (0..1000).step_by(100) {
        feed(&mut bus, h, person_frame(t).into(), SimTime(t)).unwrap();
        events.extend(bus.advance(100).unwrap());
    }
    assert_eq!(events.len(), 1);
    assert_eq!(events[0].level, LogicLevel::High);
}

#[test]
fn zero_byte_read_at_an_occupied_address() {
    let mut bus = Bus::new();
    power_on(device(SensorKind::TextReader), &mut bus, &wiring(&[("VDD", "v"), ("GND", "g")])).unwrap();
    let tx = bus.i2c_transfer(0x29, I2cRequest::Read(0));
    assert!(tx.is_ack());
    assert!(tx.payload.is_empty());
}

#[test]
fn declared_surfaces() {
    let roles = |kind| -> Vec<(String, PinRole)> {
        declared_surface(&device(kind)).pins.into_iter().map(|p| (p.name, p.role)).collect()
    };
    let three = |signal: &str| {
        vec![
            ("VDD".to_string(), PinRole::Power),
            ("GND".to_string(), PinRole::Ground),
            (signal.to_string(), PinRole::SignalOut),
        ]
    };
    assert_eq!(roles(SensorKind::Person), three("DETECT"));
    assert_eq!(roles(SensorKind::Tap), three("TAP"));
    assert!(declared_surface(&device(SensorKind::Person)).serial.is_none());
    let text = declared_surface(&device(SensorKind::TextReader));
    assert_eq!(text.pins.len(), 2);
    let serial = text.serial.unwrap();
    assert_eq!((serial.address, serial.register_map_len), (0x29, 8));
}

#[test]
fn lifecycle_errors() {
    let mut bus = Bus::new();
    let missing = power_on(device(SensorKind::Person), &mut bus, &wiring(&[("VDD", "v"), ("GND", "g")]));
    assert_eq!(missing.unwrap_err().code(), "MISSING_PIN");

    let h = power_on(
        device(SensorKind::Tap),
        &mut bus,
        &wiring(&[("VDD", "v"), ("GND", "g"), ("TAP", "tap")]),
    )
    .unwrap();
    let frame = person_frame(1);
    assert_eq!(feed(&mut bus, h, frame.into(), SimTime(0)).unwrap_err().code(), "MODALITY_MISMATCH");
    let imu = synth_imu(&[], 100, 0.0, 0).unwrap();
    feed(&mut bus, h, imu.into(), SimTime(0)).unwrap();
    let err = device_mut(&mut bus, h).unwrap().load_parameters(&default_blob(SensorKind::Tap));
    assert_eq!(err, Err(DevkitError::Powered));

    let power = wiring(&[("VDD", "v"), ("GND", "g")]);
    power_on(device(SensorKind::TextReader), &mut bus, &power).unwrap();
    let again = power_on(device(SensorKind::TextReader), &mut bus, &power);
    assert_eq!(again.unwrap_err(), DevkitError::AddressConflict(0x29));
}

#[test]
fn blob_errors() {
    let mut d = device(SensorKind::Person);
    let mut bytes = default_blob(SensorKind::Person).to_bytes();
    let last = bytes.len() - 1;
    bytes[last] ^= 0x01;
    assert_eq!(d.load_parameter_bytes(&bytes).unwrap_err().code(), "BAD_CRC");
    let err = d.load_parameters(&default_blob(SensorKind::Tap)).unwrap_err();
    assert_eq!(err.code(), "KIND_MISMATCH");
    let blob = ParameterBlob::new(SensorKind::Person, vec![1, 2, 3]);
    assert!(d.load_parameters(&blob).is_err());
}

#[test]
fn audit_examples() {
    let person = declared_surface(&device(SensorKind::Person));
    let clean = vec![ExposureRecord::pin(SimTime(200), "DETECT", "hall")];
    assert!(audit(&clean, &person).pass);

    let injected = vec![ExposureRecord::serial(SimTime(300), 0x29, 2)];
    let verdict = audit(&injected, &person);
    assert!(!verdict.pass);
    assert_eq!(verdict.findings[0].code, AuditCode::UndeclaredChannel);

    let text = declared_surface(&device(SensorKind::TextReader));
    let oversized = vec![ExposureRecord::serial(SimTime(0), 0x29, 9)];
    let verdict = audit(&oversized, &text);
    assert_eq!(verdict.findings[0].code, AuditCode::OversizedPayload);
}

#[test]
fn exposure_csv_round_trips() {
    let log = vec![
        ExposureRecord::pin(SimTime(200), "DETECT", "hall"),
        ExposureRecord::serial(SimTime(500), 0x29, 8),
    ];
    let text = exposure_csv(&log);
    assert_eq!(text, "time_ms,channel,detail,bits\n200,PIN,DETECT@hall,1\n500,SERIAL,0x29,64\n");
    assert_eq!(parse_exposure_csv(&text).unwrap(), log);
}

/// A peripheral that answers serial READs while presenting itself as a
/// pin-only device.
struct Leaky;

impl Peripheral for Leaky {
    fn cadence_ms(&self) -> u64 {
        1
    }
    fn step(&mut self, _now: SimTime, _port: &mut PinPort<'_>) {}
    fn serial_read(&mut self, len: usize) -> Vec<u8> {
        vec![0xAB; len]
    }
    fn as_any(&self) -> &dyn Any {
        self
    }
    fn as_any_mut(&mut self) -> &mut dyn Any {
        self
    }
}

#[test]
fn audit_catches_a_device_leaking_over_serial() {
    let mut bus = Bus::new();
    let h = bus.attach(Box::new(Leaky), BTreeMap::new(), Some(0x42)).unwrap();
    bus.advance(10).unwrap();
    bus.i2c_transfer(0x42, I2cRequest::Read(4));
    let log = bus.exposure_log(h);
    assert_eq!(log, vec![ExposureRecord::serial(SimTime(10), 0x42, 4)]);
    let claimed = declared_surface(&device(SensorKind::Person));
    let verdict = audit(&log, &claimed);
    assert!(!verdict.pass);
    assert_eq!(verdict.findings.len(), 1);
}

#[test]
fn identical_runs_are_identical() {
    let run = || {
        let mut bus = Bus::new();
        let h = power_on(
            device(SensorKind::Tap),
            &mut bus,
            &wiring(&[("VDD", "v"), ("GND", "g"), ("TAP", "tap")]),
        )
        .unwrap();
        let imu = synth_imu(&[300, 900, 1000], 2000, 0.05, 77).unwrap();
        feed(&mut bus, h, imu.into(), SimTime(0)).unwrap();
        bus.advance(2000).unwrap();
        (bus.trace_csv(), exposure_csv(&bus.exposure_log_all()))
    };
    assert_eq!(run(), run());
}

proptest! {
    #[test]
    fn traces_stay_well_formed_and_intervals_agree_with_levels(
        drives in prop::collection::vec((0u64..50, any::<bool>()), 0..40),
        initial in any::<bool>(),
    ) {
        let mut bus = Bus::new();
        bus.add_line("l", LogicLevel::from_bool(initial)).unwrap();
        let mut t = 0;
        for (dt, high) in drives {
            t += dt;
            bus.drive("l", LogicLevel::from_bool(high), SimTime(t)).unwrap();
        }
        let trace = bus.trace("l").unwrap();
        prop_assert!(trace.is_well_formed());
        let end = t + 10;
        let intervals = trace.high_intervals(SimTime(end));
        for s in 0..end {
            let inside = intervals.iter().any(|iv| iv.contains(SimTime(s)));
            prop_assert_eq!(inside, trace.level_at(SimTime(s)).is_high());
        }
    }

    #[test]
    fn parameters_are_frozen_after_power_on(kind_index in 0usize..5, steps in 1u64..500) {
        let kind = SensorKind::ALL[kind_index];
        let mut bus = Bus::new();
        let d = device(kind);
        let mut w = wiring(&[("VDD", "v"), ("GND", "g")]);
        for p in d.interface().signal_pins() {
            w.insert(p.name.clone(), "out".into());
        }
        let h = power_on(d, &mut bus, &w).unwrap();
        bus.advance(steps).unwrap();
        let d = device_mut(&mut bus, h).unwrap();
        prop_assert_eq!(d.load_parameters(&default_blob(kind)), Err(DevkitError::Powered));
        prop_assert_eq!(
            d.load_parameter_bytes(&default_blob(kind).to_bytes()),
            Err(DevkitError::Powered)
        );
    }
}
