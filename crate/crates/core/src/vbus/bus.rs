use std::any::Any;
use std::collections::BTreeMap;

use thiserror::Error;

use super::exposure::ExposureRecord;
use super::i2c::{is_valid_address, AckStatus, Direction, I2cRequest, I2cTransaction};
use super::trace::{LogicLevel, PinTrace, SimTime};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BusError {
    #[error("dt must be ≥ 1")]
    ZeroAdvance,
    #[error("unknown line `{0}`")]
    UnknownLine(String),
    #[error("time travel: {at} is before {now}")]
    TimeTravel { at: SimTime, now: SimTime },
    #[error("line `{0}` is driven by an attached device")]
    LineOwned(String),
    #[error("line `{0}` already exists")]
    DuplicateLine(String),
    #[error("serial address 0x{0:02X} is already occupied")]
    AddressConflict(u8),
    #[error("serial address 0x{0:02X} is outside 0x08..=0x77")]
    InvalidAddress(u8),
    #[error("cadence must be ≥ 1 ms")]
    ZeroCadence,
    #[error("line id `{0}` must be non-empty and free of whitespace, `,` and `@`")]
    InvalidLineId(String),
}

/// Line ids end up in CSV cells and `pin@line` labels.
pub fn is_valid_line_id(id: &str) -> bool {
    !id.is_empty() && !id.chars().any(|c| c.is_whitespace() || c == ',' || c == '@' || c == '"')
}

/// A component stepped by the bus.
///
/// A peripheral sees the outside world only through its [`PinPort`] and the
/// serial callbacks; the bus records everything that crosses those as
/// exposure.
pub trait Peripheral: Any + Send {
    /// Step period in milliseconds, counted from the attach time.
    fn cadence_ms(&self) -> u64;

    fn step(&mut self, now: SimTime, port: &mut PinPort<'_>);

    /// Serves a controller READ. Must return exactly `len` bytes.
    fn serial_read(&mut self, len: usize) -> Vec<u8> {
        vec![0xFF; len]
    }

    fn serial_write(&mut self, _bytes: &[u8]) {}

    fn as_any(&self) -> &dyn Any;

    fn as_any_mut(&mut self) -> &mut dyn Any;
}

/// Evaluated once per tick after all devices have stepped; drives one
/// derived line from the current levels of its source lines.
pub trait LineProcessor: Send {
    fn sources(&self) -> &[String];
    fn output(&self) -> &str;
    /// Called once on registration with the current source levels; returns
    /// the initial level of the output line.
    fn start(&mut self, inputs: &[LogicLevel]) -> LogicLevel;
    fn tick(&mut self, now: SimTime, inputs: &[LogicLevel]) -> LogicLevel;
}

/// Handle to a peripheral attached to a [`Bus`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DeviceHandle(pub(crate) usize);

/// A level change reported by [`Bus::advance`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineEvent {
    pub at: SimTime,
    pub line_id: String,
    pub level: LogicLevel,
}

/// A transfer with the clock value at which it happened.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoggedTransfer {
    pub at: SimTime,
    pub transaction: I2cTransaction,
}

struct Slot {
    device: Box<dyn Peripheral>,
    /// pin name -> line id
    outputs: BTreeMap<String, String>,
    attached_at: SimTime,
    cadence: u64,
}

/// Pin access handed to a peripheral while it steps.
pub struct PinPort<'a> {
    now: SimTime,
    slot: usize,
    outputs: &'a BTreeMap<String, String>,
    lines: &'a mut BTreeMap<String, PinTrace>,
    exposure: &'a mut Vec<(usize, ExposureRecord)>,
    events: &'a mut Vec<LineEvent>,
}

impl PinPort<'_> {
    pub fn now(&self) -> SimTime {
        self.now
    }

    /// Drives a wired output pin. Unwired pin names go nowhere.
    pub fn drive(&mut self, pin: &str, level: LogicLevel) {
        let Some(line_id) = self.outputs.get(pin) else {
            return;
        };
        let trace = self
            .lines
            .get_mut(line_id)
            .expect("wired line exists on the bus");
        if trace.record(self.now, level) {
            self.exposure.push((
                self.slot,
                ExposureRecord::pin(self.now, pin, line_id.clone()),
            ));
            self.events.push(LineEvent {
                at: self.now,
                line_id: line_id.clone(),
                level,
            });
        }
    }

    pub fn level(&self, pin: &str) -> Option<LogicLevel> {
        let line_id = self.outputs.get(pin)?;
        self.lines.get(line_id).map(PinTrace::current_level)
    }
}

/// Discrete-time substrate: logic lines, an I2C channel and a 1 ms clock.
///
/// Single-threaded; independent buses share nothing.
#[derive(Default)]
pub struct Bus {
    clock: SimTime,
    lines: BTreeMap<String, PinTrace>,
    line_owner: BTreeMap<String, usize>,
    slots: Vec<Slot>,
    responders: BTreeMap<u8, usize>,
    processors: Vec<Box<dyn LineProcessor>>,
    transfers: Vec<LoggedTransfer>,
    exposure: Vec<(usize, ExposureRecord)>,
}

impl Bus {
    pub fn new() -> Self {
        Bus::default()
    }

    pub fn clock(&self) -> SimTime {
        self.clock
    }

    pub fn add_line(&mut self, line_id: &str, initial: LogicLevel) -> Result<(), BusError> {
        if !is_valid_line_id(line_id) {
            return Err(BusError::InvalidLineId(line_id.to_string()));
        }
        if self.lines.contains_key(line_id) {
            return Err(BusError::DuplicateLine(line_id.to_string()));
        }
        self.lines
            .insert(line_id.to_string(), PinTrace::new(line_id, initial));
        Ok(())
    }

    pub fn has_line(&self, line_id: &str) -> bool {
        self.lines.contains_key(line_id)
    }

    pub fn trace(&self, line_id: &str) -> Option<&PinTrace> {
        self.lines.get(line_id)
    }

    /// All traces in line-id order.
    pub fn traces(&self) -> impl Iterator<Item = &PinTrace> {
        self.lines.values()
    }

    pub fn is_address_free(&self, address: u8) -> bool {
        !self.responders.contains_key(&address)
    }

    /// Attaches a peripheral. `outputs` maps its signal pin names to line
    /// ids (created LOW if missing); `serial` registers it as the responder
    /// at that address.
    pub fn attach(
        &mut self,
        device: Box<dyn Peripheral>,
        outputs: BTreeMap<String, String>,
        serial: Option<u8>,
    ) -> Result<DeviceHandle, BusError> {
        let cadence = device.cadence_ms();
        if cadence == 0 {
            return Err(BusError::ZeroCadence);
        }
        if let Some(address) = serial {
            if !is_valid_address(address) {
                return Err(BusError::InvalidAddress(address));
            }
            if !self.is_address_free(address) {
                return Err(BusError::AddressConflict(address));
            }
        }
        if let Some(line) = outputs.values().find(|l| !is_valid_line_id(l)) {
            return Err(BusError::InvalidLineId(line.clone()));
        }
        if let Some(line) = outputs.values().find(|l| self.line_owner.contains_key(*l)) {
            return Err(BusError::LineOwned(line.clone()));
        }
        let idx = self.slots.len();
        for line in outputs.values() {
            if !self.lines.contains_key(line) {
                self.lines
                    .insert(line.clone(), PinTrace::new(line.clone(), LogicLevel::Low));
            }
            self.line_owner.insert(line.clone(), idx);
        }
        if let Some(address) = serial {
            self.responders.insert(address, idx);
        }
        self.slots.push(Slot {
            device,
            outputs,
            attached_at: self.clock,
            cadence,
        });
        Ok(DeviceHandle(idx))
    }

    /// Registers a derived line evaluated every tick from the next tick on.
    pub fn add_processor(&mut self, mut processor: Box<dyn LineProcessor>) -> Result<(), BusError> {
        let mut inputs = Vec::new();
        for src in processor.sources() {
            match self.lines.get(src) {
                Some(trace) => inputs.push(trace.current_level()),
                None => return Err(BusError::UnknownLine(src.clone())),
            }
        }
        if self.lines.contains_key(processor.output()) {
            return Err(BusError::DuplicateLine(processor.output().to_string()));
        }
        let initial = processor.start(&inputs);
        self.add_line(processor.output(), initial)?;
        self.processors.push(processor);
        Ok(())
    }

    pub fn peripheral(&self, handle: DeviceHandle) -> Option<&dyn Peripheral> {
        self.slots.get(handle.0).map(|s| s.device.as_ref())
    }

    pub fn peripheral_mut(&mut self, handle: DeviceHandle) -> Option<&mut dyn Peripheral> {
        self.slots.get_mut(handle.0).map(|s| s.device.as_mut())
    }

    /// Runs ticks `clock .. clock + dt`, stepping each device whose cadence
    /// falls on the tick, then every line processor. Returns the level
    /// changes in time order.
    pub fn advance(&mut self, dt: u64) -> Result<Vec<LineEvent>, BusError> {
        if dt == 0 {
            return Err(BusError::ZeroAdvance);
        }
        let start = self.clock.0;
        let mut events = Vec::new();
        for t in start..start + dt {
            let now = SimTime(t);
            self.clock = now;
            for (idx, slot) in self.slots.iter_mut().enumerate() {
                if (t - slot.attached_at.0) % slot.cadence != 0 {
                    continue;
                }
                let mut port = PinPort {
                    now,
                    slot: idx,
                    outputs: &slot.outputs,
                    lines: &mut self.lines,
                    exposure: &mut self.exposure,
                    events: &mut events,
                };
                slot.device.step(now, &mut port);
            }
            for proc in self.processors.iter_mut() {
                let inputs: Vec<LogicLevel> = proc
                    .sources()
                    .iter()
                    .map(|s| self.lines[s].current_level())
                    .collect();
                let level = proc.tick(now, &inputs);
                let out = self
                    .lines
                    .get_mut(proc.output())
                    .expect("processor output line exists");
                if out.record(now, level) {
                    events.push(LineEvent {
                        at: now,
                        line_id: proc.output().to_string(),
                        level,
                    });
                }
            }
        }
        self.clock = SimTime(start + dt);
        Ok(events)
    }

    /// Host-side drive of a line that no device owns.
    pub fn drive(
        &mut self,
        line_id: &str,
        level: LogicLevel,
        at: SimTime,
    ) -> Result<&PinTrace, BusError> {
        if self.line_owner.contains_key(line_id) {
            return Err(BusError::LineOwned(line_id.to_string()));
        }
        let now = self.clock;
        let trace = self
            .lines
            .get_mut(line_id)
            .ok_or_else(|| BusError::UnknownLine(line_id.to_string()))?;
        let floor = trace.last_change().map_or(now, |t| t.max(now));
        if at < floor {
            return Err(BusError::TimeTravel { at, now: floor });
        }
        trace.record(at, level);
        Ok(trace)
    }

    /// One controller transfer at the current clock. An empty address
    /// answers NACK.
    pub fn i2c_transfer(&mut self, address: u8, request: I2cRequest) -> I2cTransaction {
        let direction = request.direction();
        let responder = is_valid_address(address)
            .then(|| self.responders.get(&address).copied())
            .flatten();
        let transaction = match responder {
            None => I2cTransaction::nack(address, direction),
            Some(idx) => {
                let device = &mut self.slots[idx].device;
                let payload = match request {
                    I2cRequest::Read(n) => {
                        let mut bytes = device.serial_read(n);
                        bytes.resize(n, 0xFF);
                        self.exposure
                            .push((idx, ExposureRecord::serial(self.clock, address, n)));
                        bytes
                    }
                    I2cRequest::Write(bytes) => {
                        device.serial_write(&bytes);
                        bytes
                    }
                };
                I2cTransaction {
                    address,
                    direction,
                    payload,
                    status: AckStatus::Ack,
                }
            }
        };
        self.transfers.push(LoggedTransfer {
            at: self.clock,
            transaction: transaction.clone(),
        });
        transaction
    }

    pub fn transfers(&self) -> &[LoggedTransfer] {
        &self.transfers
    }

    /// Exposure records of one device, in the order they happened.
    pub fn exposure_log(&self, handle: DeviceHandle) -> Vec<ExposureRecord> {
        self.exposure
            .iter()
            .filter(|(idx, _)| *idx == handle.0)
            .map(|(_, r)| r.clone())
            .collect()
    }

    /// Exposure records of every device.
    pub fn exposure_log_all(&self) -> Vec<ExposureRecord> {
        self.exposure.iter().map(|(_, r)| r.clone()).collect()
    }

    /// Pin name -> line id wiring of an attached device.
    pub fn wiring(&self, handle: DeviceHandle) -> Option<&BTreeMap<String, String>> {
        self.slots.get(handle.0).map(|s| &s.outputs)
    }

    /// `time_ms,line_id,level` dump. Each line contributes its level at t=0
    /// followed by its later transitions; rows sorted by time then line id.
    pub fn trace_csv(&self) -> String {
        trace_csv(self.lines.values())
    }
}

/// Renders traces in the `time_ms,line_id,level` dump format.
pub fn trace_csv<'a>(traces: impl IntoIterator<Item = &'a PinTrace>) -> String {
    let mut rows: Vec<(u64, &str, u8)> = Vec::new();
    for trace in traces {
        rows.push((0, trace.line_id(), trace.level_at(SimTime::ZERO).bit()));
        for tr in trace.transitions().iter().filter(|tr| tr.at.0 > 0) {
            rows.push((tr.at.0, trace.line_id(), tr.level.bit()));
        }
    }
    rows.sort();
    let mut out = String::from("time_ms,line_id,level\n");
    for (t, line, level) in rows {
        out.push_str(&format!("{t},{line},{level}\n"));
    }
    out
}

/// `time_ms,address,direction,status,payload` dump of logged transfers.
pub fn i2c_log_csv(transfers: &[LoggedTransfer]) -> String {
    let mut out = String::from("time_ms,address,direction,status,payload\n");
    for t in transfers {
        let tx = &t.transaction;
        let direction = match tx.direction {
            Direction::Read => "READ",
            Direction::Write => "WRITE",
        };
        let status = if tx.is_ack() { "ACK" } else { "NACK" };
        out.push_str(&format!(
            "{},0x{:02X},{direction},{status},{}\n",
            t.at.0,
            tx.address,
            tx.payload_hex()
        ));
    }
    out
}
