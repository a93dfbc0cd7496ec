//! Activation files, open-set splits and synthetic activations.

mod osav;
mod split;
mod synthetic;

pub use osav::{
    decode_osav, encode_osav, read_activations, write_activations, OSAV_MAGIC, OSAV_VERSION,
};
pub use split::{apply_split, make_open_split, OpenSplit};
pub use synthetic::{generate_synthetic, generate_synthetic_split, SyntheticSpec};
