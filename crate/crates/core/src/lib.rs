//! Revocation management with an authenticated, dynamic k-ary hash tree.
//!
//! Revoked certificate or pseudonym serials are the leaves of a perfect
//! k-ary tree filled left to right. Internal nodes are hashed with a duplex
//! construction over Keccak-f[800], which lets a new leaf be added with a
//! single duplexing call on its parent's retained state. A trusted third
//! party signs the root; road-side units answer status queries with either
//! a path proof or a signed "OK", and on-board units verify proofs offline.
//!
//! Modules:
//! - [`keccak`]: permutation, padding, duplex object, digest `h`.
//! - [`tree`]: the revocation tree, its wire formats, and parameter selection.
//! - [`auth`]: signed roots, proofs, OK answers, pluggable signatures.
//! - [`protocol`]: TTP / RSU / OBU state machines and the message envelope.
//! - [`sim`]: seeded scenario runner comparing tree traffic with a CRL.

pub mod auth;
pub mod keccak;
pub mod par;
pub mod protocol;
pub mod sim;
pub mod tree;
pub mod wire;

pub use keccak::{hash, Digest};
