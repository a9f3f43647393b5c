//! Ring geometry: seeded multi-strand closed splines, swept tube meshes,
//! OBJ/STL export and 2D line sketches of the strands.
//!
//! Everything in this crate is a pure function of its inputs. Random
//! generators are created per call from the seed carried by [`RingSpec`].

mod camera;
mod error;
mod export;
mod frames;
mod image;
mod mesh;
mod ring;
mod sketch;
mod spline;
mod tube;
mod vec;

pub use camera::Camera;
pub use error::{GeometryError, Result};
pub use export::{export_mesh, parse_obj, parse_stl, MeshFormat};
pub use frames::{build_frames, wrap_mismatch, Frame};
pub use image::{Image, Rgb};
pub use mesh::TriMesh;
pub use ring::{generate_ring, RingId, RingModel, RingSpec};
pub use sketch::{project_sketch, sample_strand_polyline, stroke_width_for, SKETCH_STROKE};
pub use spline::Spline;
pub use tube::{extrude_ring, extrude_tube, Extrusion};
pub use vec::Vec3;
