//! Generalized evolution semigroups in finite dimension.
//!
//! The crate builds real semiflows from growth rates, evolution families
//! on `R^n`, the semigroups `T_t u(s) = U(s, phi_t(s)) u(phi_t(s))` they
//! induce on decaying functions, and the dichotomy / Green-function
//! machinery that inverts their generator.
//!
//! ```
//! use evosemi::dichotomy::{certify_dichotomy, CertifyOptions};
//! use evosemi::linalg::Matrix;
//! use evosemi::{EvolutionFamily, GrowthRate, ProjectionField};
//!
//! let mu = GrowthRate::polynomial_log();
//! let family = EvolutionFamily::diagonal_dichotomy(&mu);
//! let p = ProjectionField::constant("P", Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
//! let xs: Vec<f64> = (0..30).map(|i| -8.0 + 16.0 * i as f64 / 29.0).collect();
//! let pairs: Vec<(f64, f64)> = xs.iter().flat_map(|&t| xs.iter().filter(move |&&s| s <= t).map(move |&s| (t, s))).collect();
//! let outcome = certify_dichotomy(&family, &mu, &p, &pairs, &CertifyOptions::default()).unwrap();
//! let cert = outcome.certificate().unwrap();
//! println!("N = {}, nu = {}", cert.n, cert.nu);
//! ```

pub mod dichotomy;
pub mod error;
pub mod evo_semigroup;
pub mod evolution_family;
pub mod fit;
pub mod grid_function;
pub mod growth_rate;
pub mod interp;
pub mod linalg;
pub mod ode;
pub mod probe;
pub mod quadrature;
pub mod roots;
pub mod semiflow;

pub use dichotomy::{DichotomyCertificate, GreenFunction, ProjectionField};
pub use error::{Error, Result};
pub use evo_semigroup::SemigroupContext;
pub use evolution_family::EvolutionFamily;
pub use grid_function::GridFunction;
pub use growth_rate::{Ell, GrowthRate};
pub use semiflow::{Limit, RealSemiflow};
