//! Independent constructions and brute-force oracles shared by the
//! integration tests. Nothing here calls the library's group algorithms.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet, VecDeque};

use galmono::perm::Permutation;

pub type Images = Vec<usize>;

pub fn perm(images: Images) -> Permutation {
    Permutation::new(images).expect("bijection")
}

/// Product of disjoint 0-based cycles on `d` points.
pub fn cycles(d: usize, cs: &[&[usize]]) -> Images {
    let mut im: Images = (0..d).collect();
    for c in cs {
        for k in 0..c.len() {
            im[c[k]] = c[(k + 1) % c.len()];
        }
    }
    im
}

pub fn compose(a: &[usize], b: &[usize]) -> Images {
    // a first, then b
    a.iter().map(|&i| b[i]).collect()
}

/// Closure of the generated group by breadth-first search.
pub fn closure(d: usize, gens: &[Images]) -> HashSet<Images> {
    let id: Images = (0..d).collect();
    let mut seen = HashSet::from([id.clone()]);
    let mut queue = VecDeque::from([id]);
    while let Some(g) = queue.pop_front() {
        for s in gens {
            let h = compose(&g, s);
            if seen.insert(h.clone()) {
                queue.push_back(h);
            }
        }
    }
    seen
}

pub fn is_even(p: &[usize]) -> bool {
    let mut inversions = 0usize;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                inversions += 1;
            }
        }
    }
    inversions % 2 == 0
}

pub fn orbit_of_zero(d: usize, gens: &[Images]) -> BTreeSet<usize> {
    let mut orbit = BTreeSet::from([0]);
    let mut stack = vec![0];
    while let Some(p) = stack.pop() {
        for g in gens {
            if orbit.insert(g[p]) {
                stack.push(g[p]);
            }
        }
    }
    debug_assert!(d > 0);
    orbit
}

/// All permutations of `0..d` in lexicographic order.
pub fn all_perms(d: usize) -> Vec<Images> {
    let mut out = Vec::new();
    let mut cur: Images = (0..d).collect();
    loop {
        out.push(cur.clone());
        let Some(i) = (0..d.saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) else {
            return out;
        };
        let j = (i + 1..d).rev().find(|&j| cur[j] > cur[i]).unwrap();
        cur.swap(i, j);
        cur[i + 1..].reverse();
    }
}

/// Centralizer of `gens` in `S_d` by exhaustion.
pub fn brute_centralizer(d: usize, gens: &[Images]) -> BTreeSet<Images> {
    all_perms(d)
        .into_iter()
        .filter(|c| gens.iter().all(|g| compose(g, c) == compose(c, g)))
        .collect()
}

fn set_partitions(d: usize) -> Vec<Vec<usize>> {
    // restricted growth strings
    let mut out = Vec::new();
    let mut a = vec![0usize; d];
    fn rec(i: usize, max: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == a.len() {
            out.push(a.clone());
            return;
        }
        for v in 0..=max + 1 {
            a[i] = v;
            rec(i + 1, max.max(v), a, out);
        }
    }
    if d > 0 {
        rec(1, 0, &mut a, &mut out);
    }
    out
}

/// Every nontrivial block system as sorted lists of sorted blocks, found
/// by testing each set partition with equal part sizes for invariance.
pub fn brute_block_systems(d: usize, gens: &[Images]) -> BTreeSet<Vec<Vec<usize>>> {
    let mut out = BTreeSet::new();
    for labels in set_partitions(d) {
        let k = labels.iter().max().unwrap() + 1;
        if k == 1 || k == d || d % k != 0 {
            continue;
        }
        let mut blocks = vec![Vec::new(); k];
        for (p, &l) in labels.iter().enumerate() {
            blocks[l].push(p);
        }
        if blocks.iter().any(|b| b.len() != d / k) {
            continue;
        }
        let invariant = gens.iter().all(|g| {
            blocks.iter().all(|b| {
                let target = labels[g[b[0]]];
                b.iter().all(|&p| labels[g[p]] == target)
            })
        });
        if invariant {
            blocks.sort();
            out.insert(blocks);
        }
    }
    out
}

// named groups; points of S2 wr S_k are pairs (2i, 2i + 1)

/// Rigid action of `images` on `k` blocks of size `m` (block `b` holds
/// points `m b .. m b + m`).
pub fn rigid(m: usize, images: &[usize]) -> Images {
    (0..images.len() * m).map(|p| m * images[p / m] + p % m).collect()
}

fn block_sym_generators(k: usize) -> Vec<Images> {
    let mut gens = vec![cycles(k, &[&[0, 1]])];
    if k > 2 {
        let long: Vec<usize> = (0..k).collect();
        gens.push(cycles(k, &[&long]));
    }
    gens
}

/// `S2 wr S_k` on `2k` points.
pub fn wreath_s2(k: usize) -> Vec<Images> {
    let mut gens: Vec<Images> = block_sym_generators(k).iter().map(|g| rigid(2, g)).collect();
    gens.push(cycles(2 * k, &[&[0, 1]]));
    gens
}

/// `S2 wr S_k ∩ A_{2k}`: rigid block permutations and double flips.
pub fn wreath_s2_even(k: usize) -> Vec<Images> {
    let mut gens: Vec<Images> = block_sym_generators(k).iter().map(|g| rigid(2, g)).collect();
    gens.push(cycles(2 * k, &[&[0, 1], &[2, 3]]));
    gens
}

/// `S2 wr H ∩ A_{2n}` for `H` on `n` points, with flips on pairs `(2p, 2p + 1)`.
/// `far` is a point of `H`'s domain outside the block of point 1 under `H`,
/// so that double flips reach every pair of points.
pub fn wreath_s2_over_even(n: usize, h: &[Images], far: usize) -> Vec<Images> {
    let mut gens: Vec<Images> = h.iter().map(|g| rigid(2, g)).collect();
    gens.push(cycles(2 * n, &[&[0, 1], &[2, 3]]));
    gens.push(cycles(2 * n, &[&[0, 1], &[2 * far, 2 * far + 1]]));
    gens
}

/// `(C2)^9 ⋊ (S2 wr S10)` on 40 points: blocks `4b .. 4b + 4` with sign
/// pairs `(4b, 4b + 1)`, `(4b + 2, 4b + 3)`; each block may swap its two
/// sign pairs, and both sign pairs of an even number of blocks may flip.
pub fn five_point_normalized_group() -> Vec<Images> {
    let mut gens: Vec<Images> = block_sym_generators(10).iter().map(|g| rigid(4, g)).collect();
    gens.push(cycles(40, &[&[0, 2], &[1, 3]]));
    gens.push(cycles(40, &[&[0, 1], &[2, 3], &[4, 5], &[6, 7]]));
    gens
}

/// `S2 wr (S2 wr S16 ∩ A32) ∩ A64`.
pub fn three_view_group() -> Vec<Images> {
    wreath_s2_over_even(32, &wreath_s2_even(16), 2)
}

/// Two generators of the degree-12 homography group, 0-based.
pub fn homography_generators() -> Vec<Images> {
    vec![
        cycles(12, &[&[0, 1], &[2, 3], &[4, 11, 7, 8], &[5, 10, 6, 9]]),
        cycles(12, &[&[0, 10, 4], &[1, 9, 7], &[2, 8, 6], &[3, 11, 5]]),
    ]
}

/// Deck permutations attached to the homography generators above.
pub fn homography_deck_table() -> [(&'static str, Images); 3] {
    [
        ("psi1 psi2", cycles(12, &[&[0, 1], &[2, 3], &[4, 5], &[6, 7], &[8, 9], &[10, 11]])),
        ("psi1", cycles(12, &[&[0, 2], &[1, 3], &[4, 6], &[5, 7], &[8, 10], &[9, 11]])),
        ("psi2", cycles(12, &[&[0, 3], &[1, 2], &[4, 7], &[5, 6], &[8, 11], &[9, 10]])),
    ]
}

pub fn factorial(n: u32) -> num_bigint::BigUint {
    (1..=n).fold(1u32.into(), |acc: num_bigint::BigUint, k| acc * k)
}
