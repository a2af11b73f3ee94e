//! Boolean selector matrices of the Type II-IV conflict constraints and the
//! Kronecker-structured products used to evaluate them.

use ndarray::Array2;

use super::ConstraintError;
use crate::scenario::VehiclePair;

/// `(G+, G-)`: one row per intra-cluster pair; `G-` marks the pair's first
/// vehicle, `G+` its second.
pub fn build_g(pairs: &[VehiclePair], vehicles: usize) -> (Array2<u8>, Array2<u8>) {
    pair_selectors(pairs, vehicles)
}

/// `(H+, H-)`: one row per one-hop pair, `U x N`, oriented like `G`.
pub fn build_h(hop_pairs: &[VehiclePair], vehicles: usize) -> (Array2<u8>, Array2<u8>) {
    pair_selectors(hop_pairs, vehicles)
}

fn pair_selectors(pairs: &[VehiclePair], vehicles: usize) -> (Array2<u8>, Array2<u8>) {
    let mut plus = Array2::zeros((pairs.len(), vehicles));
    let mut minus = Array2::zeros((pairs.len(), vehicles));
    for (p, pair) in pairs.iter().enumerate() {
        minus[[p, pair.first.index()]] = 1;
        plus[[p, pair.second.index()]] = 1;
    }
    (plus, minus)
}

/// `(Q+, Q-)` for `L` subframes: `Q-` is the identity and `Q+` the strictly
/// lower-triangular all-ones matrix, so `[Q-]^T Q+` has a one at every
/// `(l, l')` with `l > l'`.
pub fn build_q(subframes: usize) -> (Array2<u8>, Array2<u8>) {
    let plus = Array2::from_shape_fn((subframes, subframes), |(r, c)| u8::from(r > c));
    let minus = Array2::eye(subframes);
    (plus, minus)
}

/// Boolean matrix product `a^T b` over the integers.
pub fn transpose_product(a: &Array2<u8>, b: &Array2<u8>) -> Array2<u8> {
    let a = a.mapv(u32::from);
    let b = b.mapv(u32::from);
    a.t().dot(&b).mapv(|v| u8::try_from(v).unwrap_or(u8::MAX))
}

/// `(A ⊗ I_m) v` without materializing the Kronecker product.
pub fn kron_identity_apply(a: &Array2<u8>, m: usize, v: &[u32]) -> Result<Vec<u32>, ConstraintError> {
    let (rows, cols) = a.dim();
    if v.len() != cols * m {
        return Err(ConstraintError::ShapeMismatch { what: "kron operand", expected: (cols * m, 1), got: (v.len(), 1) });
    }
    let mut out = vec![0u32; rows * m];
    for (r, row) in a.outer_iter().enumerate() {
        let dst = &mut out[r * m..(r + 1) * m];
        for (c, &coef) in row.iter().enumerate() {
            if coef != 0 {
                let src = &v[c * m..(c + 1) * m];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d += u32::from(coef) * s;
                }
            }
        }
    }
    Ok(out)
}

/// `(I_n ⊗ A) v` without materializing the Kronecker product.
pub fn identity_kron_apply(n: usize, a: &Array2<u8>, v: &[u32]) -> Result<Vec<u32>, ConstraintError> {
    let (rows, cols) = a.dim();
    if v.len() != n * cols {
        return Err(ConstraintError::ShapeMismatch { what: "kron operand", expected: (n * cols, 1), got: (v.len(), 1) });
    }
    let mut out = vec![0u32; n * rows];
    for block in 0..n {
        let src = &v[block * cols..(block + 1) * cols];
        for (r, row) in a.outer_iter().enumerate() {
            out[block * rows + r] = row.iter().zip(src).map(|(&coef, &s)| u32::from(coef) * s).sum();
        }
    }
    Ok(out)
}
