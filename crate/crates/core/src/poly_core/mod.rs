//! Exact polynomial algebra, operator representation, symbols and ball moments.

pub mod exact;
pub mod gallery;
pub mod moments;
pub mod multi_index;
pub mod operator;
pub mod polynomial;

pub use exact::{rat, rationalize, rint, to_f64, RMatrix, Rational};
pub use moments::{ball_moment, normalized_moment_exact, unit_ball_volume, BallWeight};
pub use multi_index::{homogeneous_dim, homogeneous_indices, indices_up_to, MultiIndex};
pub use operator::{make_operator, ComplexRational, DiffOperator, OperatorSpec, PolyError, SymbolMatrix, TermSpec};
pub use polynomial::{Degree, Poly, VPolyF64, VPolynomial};
