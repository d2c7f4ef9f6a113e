//! Order-0 ordered-statistics decoding: solve `H c = s` on the most
//! error-likely information set.

use crate::error_model::SparseBinaryMatrix;

use super::{Correction, DecodeError};

/// Sorts mechanisms by decreasing error likelihood (ascending soft LLR),
/// Gauss-Jordan eliminates the check matrix in that column order, and solves
/// for the syndrome with every non-pivot mechanism set to zero.
///
/// The output always satisfies `H c = s`; a syndrome outside the column space
/// of `H` is reported as unsolvable.
pub fn decode_osd0(
    soft: &[f64],
    syndrome: &[bool],
    h: &SparseBinaryMatrix,
) -> Result<Correction, DecodeError> {
    if soft.len() != h.cols() {
        return Err(DecodeError::LengthMismatch {
            expected: h.cols(),
            got: soft.len(),
        });
    }
    if syndrome.len() != h.rows() {
        return Err(DecodeError::LengthMismatch {
            expected: h.rows(),
            got: syndrome.len(),
        });
    }

    let cols = h.cols();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&a, &b| soft[a].total_cmp(&soft[b]).then(a.cmp(&b)));

    // Dense bit rows with the syndrome as the last column.
    let words = (cols + 1).div_ceil(64);
    let aug = cols;
    let mut rows = vec![vec![0u64; words]; h.rows()];
    for j in 0..cols {
        for &r in h.column(j) {
            rows[r as usize][j / 64] |= 1u64 << (j % 64);
        }
    }
    for (r, &bit) in syndrome.iter().enumerate() {
        if bit {
            rows[r][aug / 64] |= 1u64 << (aug % 64);
        }
    }

    let mut pivot_of_row: Vec<Option<usize>> = vec![None; h.rows()];
    let mut next_row = 0usize;
    for &j in &order {
        if next_row == h.rows() {
            break;
        }
        let word = j / 64;
        let mask = 1u64 << (j % 64);
        let Some(pivot_row) = (next_row..h.rows()).find(|&r| rows[r][word] & mask != 0) else {
            continue;
        };
        rows.swap(next_row, pivot_row);
        let (head, tail) = rows.split_at_mut(next_row);
        let (pivot, rest) = tail.split_first_mut().expect("pivot row exists");
        for row in head.iter_mut().chain(rest.iter_mut()) {
            if row[word] & mask != 0 {
                for (w, &p) in row.iter_mut().zip(pivot.iter()) {
                    *w ^= p;
                }
            }
        }
        pivot_of_row[next_row] = Some(j);
        next_row += 1;
    }

    // Rows without a pivot must carry no residual syndrome bit.
    for row in rows.iter().skip(next_row) {
        if row[aug / 64] & (1u64 << (aug % 64)) != 0 {
            return Err(DecodeError::Unsolvable);
        }
    }

    let mut bits = vec![false; cols];
    for (r, pivot) in pivot_of_row.iter().enumerate().take(next_row) {
        let j = pivot.expect("pivot recorded for every eliminated row");
        bits[j] = rows[r][aug / 64] & (1u64 << (aug % 64)) != 0;
    }
    let correction = Correction(bits);
    debug_assert_eq!(h.mul_vec(&correction.0).unwrap(), syndrome);
    Ok(correction)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: usize, columns: Vec<Vec<u32>>) -> SparseBinaryMatrix {
        SparseBinaryMatrix::from_columns(rows, columns)
    }

    fn llrs(probs: &[f64]) -> Vec<f64> {
        probs.iter().map(|p| ((1.0 - p) / p).ln()).collect()
    }

    #[test]
    fn prefers_the_more_likely_column() {
        // H = [[1, 1]]: either mechanism explains syndrome (1); the one with
        // the larger prior wins the ordering.
        let h = matrix(1, vec![vec![0], vec![0]]);
        let c = decode_osd0(&llrs(&[0.3, 0.1]), &[true], &h).unwrap();
        assert_eq!(c.0, vec![true, false]);
    }

    #[test]
    fn zero_syndrome_gives_empty_correction() {
        let h = matrix(1, vec![vec![0], vec![0]]);
        let c = decode_osd0(&llrs(&[0.3, 0.1]), &[false], &h).unwrap();
        assert!(c.is_empty());
    }

    #[test]
    fn empty_column_space_is_unsolvable() {
        let h = matrix(1, vec![vec![], vec![]]);
        assert_eq!(
            decode_osd0(&llrs(&[0.3, 0.1]), &[true], &h),
            Err(DecodeError::Unsolvable)
        );
    }

    #[test]
    fn solves_rank_deficient_systems() {
        // Two identical columns: elimination must cope with the dependent
        // column and still satisfy the syndrome.
        let h = matrix(2, vec![vec![0, 1], vec![0, 1], vec![1]]);
        let soft = llrs(&[0.2, 0.2, 0.1]);
        for s in [[true, true], [true, false], [false, true]] {
            let c = decode_osd0(&soft, &s, &h).unwrap();
            assert_eq!(h.mul_vec(&c.0).unwrap(), s.to_vec());
        }
    }

    #[test]
    fn wide_matrix_with_many_words() {
        // 70 columns forces the bit rows across word boundaries.
        let cols: Vec<Vec<u32>> = (0..70).map(|j| vec![(j % 3) as u32]).collect();
        let h = matrix(3, cols);
        let soft: Vec<f64> = (0..70).map(|j| 1.0 + (j as f64) * 0.01).collect();
        let s = [true, false, true];
        let c = decode_osd0(&soft, &s, &h).unwrap();
        assert_eq!(h.mul_vec(&c.0).unwrap(), s.to_vec());
        // Most-likely columns are the earliest ones.
        assert_eq!(
            c.support().collect::<Vec<_>>(),
            vec![0, 2]
        );
    }
}
