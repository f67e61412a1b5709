//! Shared fixtures for the `liftdec` benchmarks.

use liftdec::lifting::{ground, LiftedDecPomdp};
use liftdec::model::{GroundDecPomdp, DEFAULT_ENUMERATION_CAP};
use liftdec::nano::{generate_nano, nano_desk_preset};

/// The desk nano instance with `n` agents per partition, lifted and ground.
pub fn desk(n: u64) -> (LiftedDecPomdp, GroundDecPomdp) {
    let mut p = nano_desk_preset();
    p.partition_size = n;
    let lifted = generate_nano(&p).expect("desk parameters are valid");
    let ground = ground(&lifted, DEFAULT_ENUMERATION_CAP).expect("desk instance fits");
    (lifted, ground)
}
