//! Index bookkeeping for alternating forms on R^n, n <= 8.
//!
//! A basis element `dx^{i1} ^ ... ^ dx^{ik}` with `i1 < ... < ik` is stored as a
//! bitmask. Each `(n, k)` pair gets the masks in lexicographic order of their
//! index tuples plus a reverse lookup table.

use std::sync::OnceLock;

pub const MAX_DIM: usize = 8;

struct Table {
    masks: Vec<u8>,
    position: [u16; 256],
}

fn tables() -> &'static Vec<Vec<Table>> {
    static TABLES: OnceLock<Vec<Vec<Table>>> = OnceLock::new();
    TABLES.get_or_init(|| {
        (0..=MAX_DIM)
            .map(|n| {
                (0..=n)
                    .map(|k| {
                        let mut masks = Vec::new();
                        let mut tuple = Vec::with_capacity(k);
                        push_lex(n, k, 0, &mut tuple, &mut masks);
                        let mut position = [u16::MAX; 256];
                        for (i, &m) in masks.iter().enumerate() {
                            position[m as usize] = i as u16;
                        }
                        Table { masks, position }
                    })
                    .collect()
            })
            .collect()
    })
}

fn push_lex(n: usize, k: usize, start: usize, tuple: &mut Vec<usize>, out: &mut Vec<u8>) {
    if tuple.len() == k {
        out.push(tuple.iter().fold(0u8, |m, &i| m | (1 << i)));
        return;
    }
    for i in start..n {
        tuple.push(i);
        push_lex(n, k, i + 1, tuple, out);
        tuple.pop();
    }
}

/// Basis masks of degree `k` on `R^n` in lexicographic order.
pub fn masks(n: usize, k: usize) -> &'static [u8] {
    &tables()[n][k].masks
}

/// Position of `mask` in the lexicographic basis of degree `popcount(mask)`.
pub fn position(n: usize, mask: u8) -> usize {
    let k = mask.count_ones() as usize;
    let p = tables()[n][k].position[mask as usize];
    debug_assert!(p != u16::MAX, "mask {mask:#b} not in basis of R^{n}");
    p as usize
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut r = 1usize;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// Indices set in `mask`, ascending.
pub fn indices(mask: u8) -> impl Iterator<Item = usize> {
    (0..MAX_DIM).filter(move |i| mask & (1 << i) != 0)
}

/// Sign of `e^a ^ e^b` relative to `e^{a|b}` for disjoint masks: the parity of the
/// number of pairs (i in a, j in b) with i > j.
pub fn wedge_sign(a: u8, b: u8) -> f64 {
    let mut swaps = 0u32;
    for j in indices(b) {
        swaps += (a >> (j + 1)).count_ones();
    }
    if swaps.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Sign picked up when removing index `j` from the front: `i_{e_j} e^I = sign * e^{I - j}`.
pub fn contraction_sign(mask: u8, j: usize) -> f64 {
    let below = (mask & ((1u8 << j).wrapping_sub(1))).count_ones();
    if below.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Determinant of a row-major `k x k` matrix stored in `a` (destroyed).
pub fn det_in_place(a: &mut [f64], k: usize) -> f64 {
    match k {
        0 => return 1.0,
        1 => return a[0],
        2 => return a[0] * a[3] - a[1] * a[2],
        3 => {
            return a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6])
                + a[2] * (a[3] * a[7] - a[4] * a[6])
        }
        _ => {}
    }
    let mut det = 1.0;
    for col in 0..k {
        let mut piv = col;
        for r in col + 1..k {
            if a[r * k + col].abs() > a[piv * k + col].abs() {
                piv = r;
            }
        }
        let p = a[piv * k + col];
        if p == 0.0 {
            return 0.0;
        }
        if piv != col {
            for c in 0..k {
                a.swap(piv * k + c, col * k + c);
            }
            det = -det;
        }
        det *= p;
        for r in col + 1..k {
            let f = a[r * k + col] / p;
            if f != 0.0 {
                for c in col..k {
                    a[r * k + c] -= f * a[col * k + c];
                }
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lex_order_and_counts() {
        assert_eq!(masks(4, 2), &[0b0011, 0b0101, 0b1001, 0b0110, 0b1010, 0b1100]);
        for n in 0..=MAX_DIM {
            for k in 0..=n {
                assert_eq!(masks(n, k).len(), binomial(n, k));
                for (i, &m) in masks(n, k).iter().enumerate() {
                    assert_eq!(position(n, m), i);
                }
            }
        }
        assert_eq!(binomial(8, 4), 70);
    }

    #[test]
    fn signs() {
        // e2 ^ e1 = -e12
        assert_eq!(wedge_sign(0b10, 0b01), -1.0);
        assert_eq!(wedge_sign(0b01, 0b10), 1.0);
        // i_{e2} e^{123} = -e^{13}
        assert_eq!(contraction_sign(0b111, 1), -1.0);
        assert_eq!(contraction_sign(0b111, 2), 1.0);
    }

    #[test]
    fn small_determinants() {
        let mut a = [2.0, 0.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 0.0, 0.0, 4.0, 0.0, 0.0, 5.0, 0.0];
        assert_eq!(det_in_place(&mut a, 4), -120.0);
    }
}
