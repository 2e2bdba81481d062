//! Variable-exponent martingale Hardy spaces on finite filtered probability spaces.
//!
//! The crate models a finite probability space with an atom filtration and
//! makes the basic objects of variable-exponent martingale theory computable:
//! Luxemburg norms of `L^{p(.)}`, Doob maximal and conditional square
//! functions, stopping times, the stopping-time atomic decomposition of
//! `H^s_{p(.)}`, `BMO_{p(.)}` and Lipschitz norms, and a seeded experiment
//! harness that measures the constants in the associated inequalities.
//!
//! ```
//! use varhardy::space::{build_dyadic_space, Exponent, RandomVariable};
//! use varhardy::varlp::luxemburg_norm;
//!
//! let space = build_dyadic_space(1).unwrap();
//! let p = Exponent::new(vec![1.0, 2.0]).unwrap();
//! let f = RandomVariable::new(vec![1.0, 2.0]);
//! let norm = luxemburg_norm(&space, &f, &p).unwrap().norm;
//! assert!((norm - (1.0 + 33f64.sqrt()) / 4.0).abs() < 1e-12);
//! ```

pub mod bmo;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod hardy;
pub mod io;
pub mod martingale;
pub mod rng;
pub mod space;
pub mod varlp;

pub use error::{Error, Result};
