use serde::Serialize;

use super::SolveResult;
use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// Dense crossbar product `i_j = sum_k v_k * G[k][j]`, with no circuit effects.
pub fn ideal_mvm<T: Scalar>(v: &[T], g: &[Vec<T>]) -> Result<Vec<T>> {
    if v.len() != g.len() {
        return Err(invalid(format!("input length {} does not match {} matrix rows", v.len(), g.len())));
    }
    let m = g.first().map_or(0, Vec::len);
    if g.iter().any(|row| row.len() != m) {
        return Err(invalid("conductance matrix rows have unequal lengths"));
    }
    if g.iter().flatten().any(|&x| !(x >= T::zero())) {
        return Err(invalid("conductances must be non-negative"));
    }
    Ok((0..m).map(|j| v.iter().zip(g).map(|(&vk, row)| vk * row[j]).sum()).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IrDropReport<T> {
    /// `1 - i_j / ideal_j` per column.
    pub losses: Vec<T>,
    pub worst: T,
    pub worst_column: usize,
}

/// Per-column fractional current loss of a solve against ideal column currents.
pub fn ir_drop_metric<T: Scalar>(result: &SolveResult<T>, ideal: &[T]) -> Result<IrDropReport<T>> {
    let actual = &result.column_currents;
    if actual.len() != ideal.len() {
        return Err(invalid(format!("{} column currents vs {} ideal currents", actual.len(), ideal.len())));
    }
    if let Some(j) = ideal.iter().position(|&x| !(x > T::zero())) {
        return Err(invalid(format!("ideal current of column {j} must be positive")));
    }
    let losses: Vec<T> = actual.iter().zip(ideal).map(|(&i, &i0)| T::one() - i / i0).collect();
    let (worst_column, worst) = losses
        .iter()
        .copied()
        .enumerate()
        .fold((0, T::neg_infinity()), |acc, (j, l)| if l > acc.1 { (j, l) } else { acc });
    Ok(IrDropReport { losses, worst, worst_column })
}
