use std::any::Any;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{DevkitError, InterfaceDecl, ParameterBlob, PinRole, SensorKind};
use crate::stimuli::Stimulus;
use crate::vbus::{Bus, BusError, DeviceHandle, Peripheral, PinPort, SimTime};

/// The private half of a device: detector state and stimulus queue.
pub(crate) trait Behavior: Send {
    fn cadence_ms(&self) -> u64;

    /// Rebuilds the detector from a blob payload of the device's kind.
    fn configure(&mut self, payload: &[u8]) -> Result<(), DevkitError>;

    fn feed(&mut self, stimulus: Stimulus, at: SimTime);

    fn step(&mut self, now: SimTime, port: &mut PinPort<'_>);

    /// Bytes for a controller READ; the bus pads or truncates to `len`.
    fn serial_read(&mut self, _len: usize) -> Vec<u8> {
        Vec::new()
    }

    fn timing(&self) -> DeviceTiming;

    fn diagnostics(&self) -> Diagnostics {
        Diagnostics::default()
    }
}

/// Timing constants a device is configured with. Datasheets carry a copy
/// in their pinout section, and cross-checks compare the two.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceTiming {
    pub cadence_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_period_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rise_frames: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fall_frames: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refresh_period_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub queue_depth: Option<usize>,
}

/// Test-bench counters that never cross the host interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub dropped_packets: u64,
}

/// A virtual ML sensor.
///
/// The public surface is the declaration, the kind and the timing. The
/// detector, its parameters and every stimulus fed to it stay private.
pub struct SensorDevice {
    kind: SensorKind,
    interface: InterfaceDecl,
    powered: bool,
    params: ParameterBlob,
    behavior: Box<dyn Behavior>,
}

impl fmt::Debug for SensorDevice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SensorDevice")
            .field("kind", &self.kind)
            .field("powered", &self.powered)
            .finish_non_exhaustive()
    }
}

impl SensorDevice {
    pub(crate) fn new(
        kind: SensorKind,
        interface: InterfaceDecl,
        mut behavior: Box<dyn Behavior>,
        params: ParameterBlob,
    ) -> Result<Self, DevkitError> {
        interface.validate()?;
        check_kind(kind, &params)?;
        behavior.configure(&params.payload)?;
        Ok(SensorDevice {
            kind,
            interface,
            powered: false,
            params,
            behavior,
        })
    }

    pub fn kind(&self) -> SensorKind {
        self.kind
    }

    pub fn interface(&self) -> &InterfaceDecl {
        &self.interface
    }

    pub fn cadence_ms(&self) -> u64 {
        self.behavior.cadence_ms()
    }

    pub fn timing(&self) -> DeviceTiming {
        self.behavior.timing()
    }

    pub fn is_powered(&self) -> bool {
        self.powered
    }

    pub fn diagnostics(&self) -> Diagnostics {
        self.behavior.diagnostics()
    }

    /// Replaces the calibration. Only allowed before power-on.
    pub fn load_parameters(&mut self, blob: &ParameterBlob) -> Result<(), DevkitError> {
        if self.powered {
            return Err(DevkitError::Powered);
        }
        check_kind(self.kind, blob)?;
        self.behavior.configure(&blob.payload)?;
        self.params = blob.clone();
        Ok(())
    }

    /// Parses and loads a serialised blob.
    pub fn load_parameter_bytes(&mut self, bytes: &[u8]) -> Result<(), DevkitError> {
        if self.powered {
            return Err(DevkitError::Powered);
        }
        self.load_parameters(&ParameterBlob::from_bytes(bytes)?)
    }

    /// Queues a physical input on the private channel. Environment side
    /// only: nothing fed here can be read back.
    pub fn feed_stimulus(&mut self, stimulus: Stimulus, at: SimTime) -> Result<(), DevkitError> {
        let expected = self.kind.modality();
        if stimulus.modality() != expected {
            return Err(DevkitError::ModalityMismatch {
                kind: self.kind,
                expected,
                actual: stimulus.modality(),
            });
        }
        self.behavior.feed(stimulus, at);
        Ok(())
    }
}

fn check_kind(kind: SensorKind, blob: &ParameterBlob) -> Result<(), DevkitError> {
    if blob.kind != kind {
        return Err(DevkitError::KindMismatch {
            expected: kind,
            actual: blob.kind,
        });
    }
    Ok(())
}

impl Peripheral for SensorDevice {
    fn cadence_ms(&self) -> u64 {
        self.behavior.cadence_ms()
    }

    fn step(&mut self, now: SimTime, port: &mut PinPort<'_>) {
        self.behavior.step(now, port);
    }

    fn serial_read(&mut self, len: usize) -> Vec<u8> {
        let mut bytes = self.behavior.serial_read(len);
        bytes.resize(len, 0xFF);
        bytes
    }

    fn as_any(&self) -> &dyn Any {
        self
    }

    fn as_any_mut(&mut self) -> &mut dyn Any {
        self
    }
}

/// The declaration used by audits and datasheet cross-checks.
pub fn declared_surface(device: &SensorDevice) -> InterfaceDecl {
    device.interface.clone()
}

/// [`declared_surface`] of a device already on a bus.
pub fn surface_of(bus: &Bus, handle: DeviceHandle) -> Option<InterfaceDecl> {
    device_ref(bus, handle).map(declared_surface)
}

/// Attaches a device to the bus and powers it. `wiring` maps every
/// declared pin name to a line id; power and ground entries are recorded
/// as metadata only.
pub fn power_on(
    mut device: SensorDevice,
    bus: &mut Bus,
    wiring: &BTreeMap<String, String>,
) -> Result<DeviceHandle, DevkitError> {
    if let Some(pin) = device.interface.pins.iter().find(|p| !wiring.contains_key(&p.name)) {
        return Err(DevkitError::MissingPin(pin.name.clone()));
    }
    let outputs: BTreeMap<String, String> = device
        .interface
        .pins
        .iter()
        .filter(|p| p.role == PinRole::SignalOut)
        .map(|p| (p.name.clone(), wiring[&p.name].clone()))
        .collect();
    let serial = device.interface.serial.as_ref().map(|s| s.address);
    if let Some(address) = serial {
        if !bus.is_address_free(address) {
            return Err(DevkitError::AddressConflict(address));
        }
    }
    device.powered = true;
    bus.attach(Box::new(device), outputs, serial).map_err(|e| match e {
        BusError::AddressConflict(a) => DevkitError::AddressConflict(a),
        other => DevkitError::Bus(other),
    })
}

/// Feeds a stimulus to a device already on a bus.
pub fn feed(
    bus: &mut Bus,
    handle: DeviceHandle,
    stimulus: Stimulus,
    at: SimTime,
) -> Result<(), DevkitError> {
    device_mut(bus, handle)
        .ok_or(DevkitError::UnknownDevice)?
        .feed_stimulus(stimulus, at)
}

/// The device behind `handle`, if it is a [`SensorDevice`].
pub fn device_ref(bus: &Bus, handle: DeviceHandle) -> Option<&SensorDevice> {
    bus.peripheral(handle)?.as_any().downcast_ref()
}

/// Mutable access for the environment side (stimuli) and for attempts to
/// recalibrate, which fail once powered.
pub fn device_mut(bus: &mut Bus, handle: DeviceHandle) -> Option<&mut SensorDevice> {
    bus.peripheral_mut(handle)?.as_any_mut().downcast_mut()
}
