//! Virtual hardware: logic lines with recorded traces, a simplified I2C
//! channel and a 1 ms simulation clock.
//!
//! Time is an integer count of milliseconds. Lines are two-valued. I2C is
//! modelled as atomic single-controller transfers that either ACK or NACK;
//! there is no clock stretching or arbitration.

mod bus;
mod exposure;
mod i2c;
mod trace;

pub use bus::{
    i2c_log_csv, is_valid_line_id, trace_csv, Bus, BusError, DeviceHandle, LineEvent, LineProcessor, LoggedTransfer, Peripheral,
    PinPort,
};
pub use exposure::{Channel, ExposureRecord};
pub use i2c::{
    hex_bytes, is_valid_address, AckStatus, Direction, I2cRequest, I2cTransaction, MAX_ADDRESS,
    MIN_ADDRESS,
};
pub use trace::{HighInterval, LogicLevel, PinTrace, SimTime, Transition};
