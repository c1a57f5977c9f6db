//! Long-run solvers over a materialised [`SparseDtmc`](crate::SparseDtmc).

mod exact;
mod phase;
mod scc;
mod steady;

pub use exact::{stationary_exact, EXACT_STATE_LIMIT};
pub use phase::{edge_frequency, phase_type_waiting, WaitingTime, PMF_TAIL};
pub use scc::{bscc_decompose, BsccDecomposition};
pub use steady::{residual, stationary, SolverOptions, SteadyState};

#[cfg(test)]
pub(crate) mod testutil {
    use alloc::string::String;
    use alloc::vec;
    use alloc::vec::Vec;

    use crate::explore::SparseDtmc;

    /// Builds a chain from explicit rows.
    pub(crate) fn chain(rows: &[&[(u32, f64)]], initial: &[(u32, f64)]) -> SparseDtmc<f64> {
        let mut row_offsets = vec![0];
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        for r in rows {
            for &(c, p) in *r {
                col_indices.push(c);
                values.push(p);
            }
            row_offsets.push(col_indices.len());
        }
        SparseDtmc {
            num_states: rows.len(),
            row_offsets,
            col_indices,
            values,
            initial: initial.to_vec(),
            labels: Vec::<(String, Vec<u32>)>::new(),
            states: None,
        }
    }
}
