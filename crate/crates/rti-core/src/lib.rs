//! Biometric root-of-trust identification.
//!
//! A root of trust (RoT) proves things about the machine it runs on, but a
//! signature alone never shows *which physical machine* signed: any device
//! carrying a valid credential can answer a challenge over the network.
//! This crate binds the challenge itself to a physical device through a
//! human in front of it. The verifier locks a fresh random challenge inside
//! a fuzzy vault keyed to a fingerprint reading; only a RoT wired to a
//! sensor that the same finger touches can unlock the challenge and sign
//! it. A far-away impostor device holds the right keys but the wrong
//! finger, so it cannot even recover what it is supposed to sign.
//!
//! Module map:
//!
//! - [`gf`]: GF(2^tau) arithmetic the vault polynomial lives in.
//! - [`poly`]: polynomial evaluation/interpolation and the secret-bits
//!   codec that turns a challenge into coefficients.
//! - [`biotemplate`]: minutiae, templates, the lattice encoding, distance,
//!   noise, and the text file format.
//! - [`vault`]: fuzzy vault generation and opening, plus the vault file
//!   format.
//! - [`cryptoshim`]: hashing, Ed25519 signing, and simulated group
//!   credentials.
//! - [`protocol`]: the identification protocols (fuzzy-vault based, proxy
//!   based, and the deliberately unbound naive baseline) and their wire
//!   frames.
//! - [`simnet`]: a deterministic single-process network simulator that
//!   plays the protocols against evil-twin and cuckoo adversaries.
//! - [`experiments`]: GAR/FAR sweeps, synthetic datasets, and timing
//!   reports.

pub mod biotemplate;
pub mod cryptoshim;
pub mod experiments;
pub mod gf;
pub mod poly;
pub mod protocol;
pub mod simnet;
pub mod vault;
