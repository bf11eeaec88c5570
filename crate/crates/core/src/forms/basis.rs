//! Canonical basis of `Λᵏℝⁿ`.
//!
//! A basis element `e^{i₁}∧…∧e^{i_k}` with `i₁ < … < i_k` is stored as a
//! bitmask with bit `i` set for each index. Basis elements are enumerated in
//! lexicographic order of the increasing tuples, and every matrix in the crate
//! is written in that order.

/// Largest ambient dimension supported by the bitmask representation.
pub const MAX_DIM: usize = 16;

/// Binomial coefficient `C(n, k)`, zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Enumeration of the increasing multi-indices of length `k` in `{0, …, n-1}`.
#[derive(Debug, Clone)]
pub struct FormBasis {
    dim: usize,
    degree: usize,
    masks: Vec<u32>,
    rank: Vec<u32>,
}

const NO_RANK: u32 = u32::MAX;

impl FormBasis {
    /// Builds the basis for `Λᵏℝⁿ`. For `k > n` the basis is empty.
    pub fn new(dim: usize, degree: usize) -> Self {
        assert!(dim <= MAX_DIM, "ambient dimension {dim} exceeds {MAX_DIM}");
        let mut masks = Vec::with_capacity(binomial(dim, degree));
        if degree <= dim {
            let mut idx: Vec<usize> = (0..degree).collect();
            loop {
                masks.push(idx.iter().fold(0u32, |m, &i| m | (1 << i)));
                // advance to the next increasing tuple in lexicographic order
                let mut pos = degree;
                while pos > 0 && idx[pos - 1] == dim - degree + pos - 1 {
                    pos -= 1;
                }
                if pos == 0 {
                    break;
                }
                idx[pos - 1] += 1;
                for j in pos..degree {
                    idx[j] = idx[j - 1] + 1;
                }
            }
        }
        let mut rank = vec![NO_RANK; 1 << dim];
        for (r, &m) in masks.iter().enumerate() {
            rank[m as usize] = r as u32;
        }
        Self { dim, degree, masks, rank }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    /// Bitmask of the `r`-th basis element.
    pub fn mask(&self, r: usize) -> u32 {
        self.masks[r]
    }

    pub fn masks(&self) -> &[u32] {
        &self.masks
    }

    /// Position of a mask in this basis, if it has the right degree.
    pub fn rank_of(&self, mask: u32) -> Option<usize> {
        match self.rank.get(mask as usize) {
            Some(&r) if r != NO_RANK => Some(r as usize),
            _ => None,
        }
    }

    /// Sorted index tuple of the `r`-th basis element.
    pub fn indices(&self, r: usize) -> Vec<usize> {
        mask_indices(self.masks[r])
    }
}

/// Indices set in a mask, increasing.
pub fn mask_indices(mask: u32) -> Vec<usize> {
    (0..32).filter(|&i| mask & (1 << i) != 0).collect()
}

/// Sign of `e^I ∧ e^J` relative to `e^{I∪J}`, or zero when `I ∩ J ≠ ∅`.
pub fn wedge_sign(left: u32, right: u32) -> i32 {
    if left & right != 0 {
        return 0;
    }
    // count pairs (i in left, j in right) with i > j
    let mut inversions = 0u32;
    let mut rest = right;
    while rest != 0 {
        let j = rest.trailing_zeros();
        rest &= rest - 1;
        let above = if j >= 31 { 0 } else { left & !((1u32 << (j + 1)) - 1) };
        inversions += above.count_ones();
    }
    if inversions.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Mask of the full index set `{0, …, n-1}`.
pub fn full_mask(dim: usize) -> u32 {
    if dim == 32 {
        u32::MAX
    } else {
        (1u32 << dim) - 1
    }
}

/// Sign `s` with `∗e^I = s e^{Iᶜ}`, i.e. `e^I ∧ e^{Iᶜ} = s · vol`.
pub fn star_sign(dim: usize, mask: u32) -> i32 {
    wedge_sign(mask, full_mask(dim) & !mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(4, 0), 1);
        assert_eq!(binomial(4, 4), 1);
        assert_eq!(binomial(3, 4), 0);
    }

    #[test]
    fn lexicographic_order() {
        let b = FormBasis::new(4, 2);
        let tuples: Vec<_> = (0..b.len()).map(|r| b.indices(r)).collect();
        assert_eq!(
            tuples,
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
        for r in 0..b.len() {
            assert_eq!(b.rank_of(b.mask(r)), Some(r));
        }
        assert_eq!(b.rank_of(0b111), None);
    }

    #[test]
    fn degree_extremes() {
        assert_eq!(FormBasis::new(3, 0).masks(), &[0]);
        assert_eq!(FormBasis::new(3, 3).masks(), &[0b111]);
        assert!(FormBasis::new(3, 4).is_empty());
    }

    #[test]
    fn signs() {
        // e^2 ∧ e^1 = -e^1 ∧ e^2
        assert_eq!(wedge_sign(0b10, 0b01), -1);
        assert_eq!(wedge_sign(0b01, 0b10), 1);
        assert_eq!(wedge_sign(0b01, 0b01), 0);
        // n = 2: *e^1 = e^2, *e^2 = -e^1
        assert_eq!(star_sign(2, 0b01), 1);
        assert_eq!(star_sign(2, 0b10), -1);
    }
}
