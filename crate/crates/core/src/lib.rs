//! Exact-arithmetic bookkeeping for non-abelian descent on hyperbolic curves.
//!
//! Integer tables are generic over [`scalar::ExactInt`] and series over
//! [`scalar::Coefficient`]; the aliases below fix the usual choices.

pub mod descent_arith;
pub mod iterated_words;
pub mod lie_dims;
pub mod padic;
pub mod padic_series;
pub mod pipeline;
pub mod scalar;
pub mod schema;
pub mod selmer_bounds;
pub mod series;
pub mod two_sided_search;

use num_bigint::BigInt;
use num_rational::BigRational;

pub type GradedDimsBig = lie_dims::GradedDims<BigInt>;
pub type GradedDimsI64 = lie_dims::GradedDims<i64>;
pub type BoundTableBig = selmer_bounds::BoundTable<BigInt>;
pub type BoundTableI64 = selmer_bounds::BoundTable<i64>;
pub type RationalSeries = series::TruncatedSeries<BigRational>;
pub type PadicTruncatedSeries = series::TruncatedSeries<padic::PadicNumber>;
pub type PadicFormSystem = iterated_words::FormSystem<padic::PadicNumber>;
pub type PadicObservable = iterated_words::Observable<padic::PadicNumber>;
