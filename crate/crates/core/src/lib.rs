//! Emulated ML sensors on a virtual bus.
//!
//! A sensor here is a sealed module with a model inside and only pins or a
//! small I2C register map outside. [`vbus`] provides the clocked bus,
//! [`devkit`] the device lifecycle and boundary audit, [`sensors`] the five
//! reference devices, and [`stimuli`] the synthetic inputs they consume.
//! On top sit [`conformance`] grids, the [`datasheet`] toolchain, pin
//! [`compose`] blocks and runnable [`scenario`] files.

pub mod compose;
pub mod conformance;
pub mod datasheet;
pub mod devkit;
pub mod interchange;
pub mod scenario;
pub mod seed;
pub mod sensors;
pub mod stimuli;
pub mod vbus;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
mod book_introduction {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/bus.md")]
mod book_bus {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/devices.md")]
mod book_devices {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/stimuli.md")]
mod book_stimuli {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/text-reader.md")]
mod book_text_reader {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/conformance.md")]
mod book_conformance {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/datasheets.md")]
mod book_datasheets {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/composition.md")]
mod book_composition {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}
