//! File formats, FFT convolution and the `halfdisk` command line on top of
//! [`halfdisk_core`].

pub mod cli;
pub mod fft;
pub mod format;

pub use halfdisk_core as core;
