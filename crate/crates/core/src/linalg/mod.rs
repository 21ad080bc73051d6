//! Exact integer linear algebra and numeric routines.

mod enumerate;
mod exact;
mod numeric;

pub use enumerate::{
    qn_enumeration_size, qn_singular_exact, singularity_polynomial, to_f64, zero_line_probability,
    SingularityPolynomial, ZeroLineProbability, MAX_POLYNOMIAL_N,
};
pub use exact::{
    apply_exact, determinant, exact_rank, exact_rank_int, is_singular, kernel_vector, rank_mod_p,
    KernelVector,
};
pub use numeric::{dist_to_colspan, dist_to_rowspan, least_singular_value, operator_norm};
