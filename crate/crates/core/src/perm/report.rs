use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use super::{abelian_invariants, BlockSystem, PermGroup};

mod decimal {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Structural summary of a permutation group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupReport {
    pub degree: usize,
    #[serde(with = "decimal")]
    pub order: BigUint,
    pub transitive: bool,
    pub all_even: bool,
    pub primitive: bool,
    pub is_full_symmetric: bool,
    pub is_alternating: bool,
    /// False when the degree exceeds the lattice limit or the group is
    /// intransitive; the block fields are then empty.
    pub blocks_computed: bool,
    pub block_systems: Vec<BlockSystem>,
    /// `(finer, coarser)` cover relations between entries of `block_systems`.
    pub lattice_edges: Vec<(usize, usize)>,
    /// Centralizer in the full symmetric group; absent when intransitive.
    pub deck_order: Option<usize>,
    pub deck_abelian_invariants: Vec<u64>,
    /// Deck group elements in 1-based cycle notation.
    pub deck_elements: Vec<String>,
}

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::from(1u32), |acc, k| acc * BigUint::from(k))
}

pub fn structure_report(group: &PermGroup) -> GroupReport {
    let d = group.degree();
    let order = group.order();
    let transitive = group.is_transitive();
    let all_even = group.all_even();
    let d_fact = factorial(d);
    let is_full_symmetric = order == d_fact;
    let is_alternating = d >= 2 && all_even && order.clone() * 2u32 == d_fact;

    let lattice = if transitive { group.block_lattice().ok() } else { None };
    let primitive = match &lattice {
        Some(l) => l.systems.is_empty(),
        None => group.is_primitive(),
    };
    let (blocks_computed, block_systems, lattice_edges) = match lattice {
        Some(l) => (true, l.systems, l.edges),
        None => (false, Vec::new(), Vec::new()),
    };

    let (deck_order, deck_abelian_invariants, deck_elements) = match group.centralizer_elements() {
        Ok(elems) => (
            Some(elems.len()),
            abelian_invariants(&elems),
            elems.iter().map(|p| p.cycle_notation()).collect(),
        ),
        Err(_) => (None, Vec::new(), Vec::new()),
    };

    GroupReport {
        degree: d,
        order,
        transitive,
        all_even,
        primitive,
        is_full_symmetric,
        is_alternating,
        blocks_computed,
        block_systems,
        lattice_edges,
        deck_order,
        deck_abelian_invariants,
        deck_elements,
    }
}

/// Block sizes of all nontrivial systems, ascending.
pub fn block_size_multiset(report: &GroupReport) -> Vec<usize> {
    let mut sizes: Vec<usize> = report.block_systems.iter().map(BlockSystem::block_size).collect();
    sizes.sort_unstable();
    sizes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::Permutation;

    #[test]
    fn cyclic_three() {
        let g = PermGroup::new(3, vec![Permutation::from_cycles(3, &[&[1, 2, 3]]).unwrap()]).unwrap();
        let r = structure_report(&g);
        assert_eq!(r.order, 3u32.into());
        assert!(r.transitive && r.all_even && r.primitive && r.is_alternating);
        assert!(!r.is_full_symmetric);
        assert_eq!(r.deck_order, Some(3));
        assert_eq!(r.deck_abelian_invariants, vec![3]);
    }

    #[test]
    fn order_serializes_as_decimal_string() {
        let r = structure_report(&PermGroup::symmetric(25));
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["order"], "15511210043330985984000000");
        let back: GroupReport = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn intransitive_group_has_no_deck_data() {
        let g = PermGroup::new(4, vec![Permutation::from_cycles(4, &[&[1, 2]]).unwrap()]).unwrap();
        let r = structure_report(&g);
        assert!(!r.transitive && !r.primitive && !r.blocks_computed);
        assert_eq!(r.deck_order, None);
    }
}
