//! Exact polynomial tools: annihilators of sums of k-th roots, polynomials
//! with fractional exponents, and numeric non-vanishing witnesses.

mod annihilator;
mod cyclotomic;
mod fracpoly;
mod multipoly;
mod witness;

pub use annihilator::{
    annihilator, annihilator_with_cap, estimated_terms, verify_annihilation, verify_polynomial, AnnihilationReport,
    DEFAULT_TERM_CAP,
};
pub use fracpoly::{exponent, frac_degree, monomial_order, Degree, Exponent, FracPoly};
pub use multipoly::{eval_multipoly, Coeff, MultiPoly};
pub use witness::{logsum_witness, nonvanishing_witness, SearchBox};
