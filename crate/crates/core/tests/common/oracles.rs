//! Independent reference implementations shared by the test targets.
#![allow(dead_code)]

use std::collections::BTreeMap;

use mlsensor::compose::{evaluate_all, install, Combinator, Composite};
use mlsensor::stimuli::Reading;
use mlsensor::vbus::{Bus, LogicLevel, PinTrace, SimTime};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Packed BCD built as a 16-nibble hex string and parsed back.
pub fn bcd(r: &Reading) -> [u8; 8] {
    let sign = if r.negative { 'D' } else { 'C' };
    let hex = format!("{:0>7}{sign}{:0<8}", r.whole_digits, r.frac_digits);
    let mut out = [0u8; 8];
    for (i, b) in out.iter_mut().enumerate() {
        *b = u8::from_str_radix(&hex[2 * i..2 * i + 2], 16).unwrap();
    }
    out
}

pub const SPAN: u64 = 1500;

/// Levels at ticks `0..SPAN` plus the level in force before tick 0.
struct Levels {
    before: bool,
    at: Vec<bool>,
}

impl Levels {
    fn of(trace: &PinTrace) -> Self {
        Levels {
            before: trace.initial_level().is_high(),
            at: (0..SPAN).map(|t| trace.level_at(SimTime(t)).is_high()).collect(),
        }
    }

    fn get(&self, t: i64) -> bool {
        if t < 0 {
            self.before
        } else {
            self.at[t as usize]
        }
    }

    fn rose(&self, t: i64) -> bool {
        self.get(t) && !self.get(t - 1)
    }
}

// Brute-force definitions, one tick at a time.

fn oracle_invert(a: &Levels) -> Vec<bool> {
    a.at.iter().map(|x| !x).collect()
}

fn oracle_debounce(a: &Levels, hold: u64) -> Vec<bool> {
    let mut out = Vec::new();
    let mut cur = a.before;
    for t in 0..SPAN as i64 {
        let v = a.get(t);
        if (t - hold as i64..=t).all(|s| a.get(s) == v) {
            cur = v;
        }
        out.push(cur);
    }
    out
}

fn oracle_stretch(a: &Levels, ms: u64) -> Vec<bool> {
    (0..SPAN as i64)
        .map(|t| a.get(t) || (t - ms as i64 + 1..=t).any(|r| r >= 0 && a.rose(r)))
        .collect()
}

fn oracle_gated(event: &Levels, gate: &Levels, w: u64) -> Vec<bool> {
    (0..SPAN as i64)
        .map(|t| event.rose(t) && (t - w as i64..=t).any(|s| gate.get(s.max(0))))
        .collect()
}

fn oracle_latch(set: &Levels, reset: &Levels) -> Vec<bool> {
    let mut cur = false;
    (0..SPAN as i64)
        .map(|t| {
            if reset.rose(t) {
                cur = false;
            } else if set.rose(t) {
                cur = true;
            }
            cur
        })
        .collect()
}

pub fn random_trace(rng: &mut ChaCha8Rng, id: &str) -> PinTrace {
    let initial = LogicLevel::from_bool(rng.random_bool(0.3));
    let n = rng.random_range(0..24);
    let mut times: Vec<u64> = (0..n).map(|_| rng.random_range(0..SPAN)).collect();
    times.sort_unstable();
    times.dedup();
    let mut level = initial;
    let levels = times.into_iter().map(|t| {
        level = level.inverted();
        (t, level)
    });
    PinTrace::from_levels(id, initial, levels.collect::<Vec<_>>())
}

/// Replays the sources on a bus, driving each transition just before its
/// tick, and returns the derived lines.
pub fn run_online(sources: &[&PinTrace], composites: &[Composite]) -> BTreeMap<String, PinTrace> {
    let mut bus = Bus::new();
    for s in sources {
        bus.add_line(s.line_id(), s.initial_level()).unwrap();
    }
    install(&mut bus, composites).unwrap();
    for t in 0..SPAN {
        for s in sources {
            if let Some(tr) = s.transitions().iter().find(|tr| tr.at.0 == t) {
                bus.drive(s.line_id(), tr.level, SimTime(t)).unwrap();
            }
        }
        bus.advance(1).unwrap();
    }
    composites
        .iter()
        .map(|c| (c.output.clone(), bus.trace(&c.output).unwrap().clone()))
        .collect()
}

/// Draws one random source pair with random parameters and checks every
/// combinator, offline and online, against the tick oracle.
pub fn check_random_pair(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let a = random_trace(rng, "A");
    let b = random_trace(rng, "B");
    let hold = rng.random_range(0..200);
    let ms = rng.random_range(0..200);
    let w = rng.random_range(0..200);
    let composites = vec![
        Composite::new("INV", Combinator::Invert { input: "A".into() }),
        Composite::new("DEB", Combinator::Debounce { input: "A".into(), hold_ms: hold }),
        Composite::new("STR", Combinator::PulseStretch { input: "A".into(), ms }),
        Composite::new(
            "GATED",
            Combinator::GatedEvent { event: "A".into(), gate: "B".into(), window_ms: w },
        ),
        Composite::new("LATCH", Combinator::SrLatch { set: "A".into(), reset: "B".into() }),
    ];
    let (la, lb) = (Levels::of(&a), Levels::of(&b));
    let expected: BTreeMap<&str, Vec<bool>> = [
        ("INV", oracle_invert(&la)),
        ("DEB", oracle_debounce(&la, hold)),
        ("STR", oracle_stretch(&la, ms)),
        ("GATED", oracle_gated(&la, &lb, w)),
        ("LATCH", oracle_latch(&la, &lb)),
    ]
    .into();

    let sources: BTreeMap<String, PinTrace> =
        [("A".to_string(), a.clone()), ("B".to_string(), b.clone())].into();
    let offline = evaluate_all(&sources, &composites).map_err(|e| e.to_string())?;
    let online = run_online(&[&a, &b], &composites);
    for (name, want) in &expected {
        let params = format!("hold {hold}, ms {ms}, w {w}");
        if &Levels::of(&offline[*name]).at != want {
            return Err(format!("offline {name} ({params})"));
        }
        if &Levels::of(&online[*name]).at != want {
            return Err(format!("online {name} ({params})"));
        }
        if !offline[*name].is_well_formed() {
            return Err(format!("offline {name} is not well formed"));
        }
    }
    Ok(())
}
