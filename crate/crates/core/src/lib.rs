#![no_std]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod ambient;
pub mod error;
pub mod linalg;
pub mod dataset;
pub mod compat;
pub mod orthonormal;
pub mod report;
pub mod fixtures;
pub mod immersion;
pub mod flatconn;
pub mod family;
pub mod s2xs2;
