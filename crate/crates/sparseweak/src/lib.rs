//! Dyadic sparse operators and weak-type estimates on the unit cube, at desk
//! scale: every object is finite, exact, and oracle-checkable.
//!
//! The crate implements, on the dyadic grid of [0,1)^d:
//!
//! - Young functions with numerical conjugation, log-domain conjugate
//!   inversion, and the series constant c_phi ([`young`]);
//! - dyadic cubes and nonnegative piecewise-constant functions ([`grid`]);
//! - the fractional, Orlicz, and composed dyadic maximal operators
//!   ([`maximal`]);
//! - sparse families (verification, seeded generation), the fractional
//!   sparse operator A^S, and the level-set / layer stratification with its
//!   E_Q and bottom sets ([`sparse`]);
//! - exact weak-L1 norms, the exceptional set, the per-k lemma ledger, and
//!   the end-to-end weak-type experiment with its sanity suites
//!   ([`weaktype`]);
//! - experiment configuration and byte-stable report emission ([`config`],
//!   [`report`]).

// `!(x > y)` guards reject NaN as well as the out-of-range value; the
// partial_cmp rewrite clippy suggests would lose that.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod grid;
pub mod maximal;
pub mod numeric;
pub mod report;
pub mod sparse;
pub mod weaktype;
pub mod young;

pub use error::{Error, Result};
