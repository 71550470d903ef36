//! Overhead fisheye person localization: lens model, radius-aligned box
//! geometry, equivariant matching losses, floor localization, metrics,
//! a scene simulator and file formats.

pub mod camera;
pub mod eval;
pub mod geometry;
pub mod io;
pub mod localization;
pub mod matching;
pub mod sim;
