use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{PermError, PermGroup, Permutation};

const MAX_LATTICE_DEGREE: usize = 64;

/// A partition of the points into blocks of equal size.
///
/// Blocks are sorted ascending and ordered by their smallest point.
/// Serialized points are 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockSystem {
    blocks: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct BlockSystemRepr {
    block_size: usize,
    num_blocks: usize,
    blocks: Vec<Vec<usize>>,
}

impl Serialize for BlockSystem {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        BlockSystemRepr {
            block_size: self.block_size(),
            num_blocks: self.num_blocks(),
            blocks: self
                .blocks
                .iter()
                .map(|b| b.iter().map(|p| p + 1).collect())
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BlockSystem {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = BlockSystemRepr::deserialize(d)?;
        let blocks = r
            .blocks
            .into_iter()
            .map(|b| b.into_iter().map(|p| p.wrapping_sub(1)).collect())
            .collect();
        BlockSystem::from_blocks(blocks).map_err(serde::de::Error::custom)
    }
}

impl BlockSystem {
    /// Normalizes and checks that the blocks partition `0..d` evenly.
    pub fn from_blocks(mut blocks: Vec<Vec<usize>>) -> Result<Self, PermError> {
        for b in &mut blocks {
            b.sort_unstable();
        }
        blocks.sort();
        let d: usize = blocks.iter().map(Vec::len).sum();
        let size = blocks.first().map_or(0, Vec::len);
        let mut seen = vec![false; d];
        for b in &blocks {
            if b.len() != size {
                return Err(PermError::BadPoints);
            }
            for &p in b {
                if p >= d || seen[p] {
                    return Err(PermError::BadPoints);
                }
                seen[p] = true;
            }
        }
        Ok(Self { blocks })
    }

    /// The system of `G`-images of `block`.
    pub fn from_block(group: &PermGroup, block: &[usize]) -> Self {
        let start: BTreeSet<usize> = block.iter().copied().collect();
        let mut found = vec![start.clone()];
        let mut k = 0;
        while k < found.len() {
            for g in group.generators() {
                let img: BTreeSet<usize> = found[k].iter().map(|&p| g.apply(p)).collect();
                if !found.contains(&img) {
                    found.push(img);
                }
            }
            k += 1;
        }
        let blocks = found.into_iter().map(|b| b.into_iter().collect()).collect();
        Self::from_blocks(blocks).expect("images of a block partition a transitive domain")
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_size(&self) -> usize {
        self.blocks.first().map_or(0, Vec::len)
    }

    pub fn degree(&self) -> usize {
        self.num_blocks() * self.block_size()
    }

    /// `block_of()[p]` is the index of the block containing `p`.
    pub fn block_of(&self) -> Vec<usize> {
        let mut out = vec![0; self.degree()];
        for (i, b) in self.blocks.iter().enumerate() {
            for &p in b {
                out[p] = i;
            }
        }
        out
    }

    pub fn block_containing(&self, p: usize) -> &[usize] {
        self.blocks
            .iter()
            .find(|b| b.contains(&p))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// True if every block of `self` lies inside a block of `other`.
    pub fn refines(&self, other: &BlockSystem) -> bool {
        let owner = other.block_of();
        self.blocks
            .iter()
            .all(|b| b.iter().all(|&p| owner[p] == owner[b[0]]))
    }

    pub fn is_invariant_under(&self, g: &Permutation) -> bool {
        let owner = self.block_of();
        self.blocks
            .iter()
            .all(|b| b.iter().all(|&p| owner[g.apply(p)] == owner[g.apply(b[0])]))
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = (ra.min(rb), ra.max(rb));
        self.parent[hi] = lo;
        true
    }
}

/// Block system lattice: nontrivial systems and their cover relations.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockLattice {
    pub systems: Vec<BlockSystem>,
    /// `(finer, coarser)` index pairs where `coarser` covers `finer`.
    pub edges: Vec<(usize, usize)>,
}

impl PermGroup {
    /// Smallest block containing all of `seed`, by union-find closure.
    fn minimal_block_of_set(&self, seed: &[usize]) -> Vec<usize> {
        let mut uf = UnionFind::new(self.degree());
        let mut queue = Vec::new();
        for w in seed.windows(2) {
            if uf.union(w[0], w[1]) {
                queue.push((w[0], w[1]));
            }
        }
        while let Some((x, y)) = queue.pop() {
            for g in self.generators() {
                let (gx, gy) = (g.apply(x), g.apply(y));
                if uf.union(gx, gy) {
                    queue.push((gx, gy));
                }
            }
        }
        let root = uf.find(seed[0]);
        (0..self.degree()).filter(|&p| uf.find(p) == root).collect()
    }

    /// The smallest block of a block system containing both `a` and `b`.
    pub fn minimal_block(&self, a: usize, b: usize) -> Result<Vec<usize>, PermError> {
        if a == b || a >= self.degree() || b >= self.degree() {
            return Err(PermError::BadPoints);
        }
        if !self.is_transitive() {
            return Err(PermError::NotTransitive);
        }
        Ok(self.minimal_block_of_set(&[a, b]))
    }

    /// All nontrivial block systems with their refinement lattice, ordered by
    /// block size and then lexicographically.
    pub fn block_lattice(&self) -> Result<BlockLattice, PermError> {
        let d = self.degree();
        if d > MAX_LATTICE_DEGREE {
            return Err(PermError::DegreeTooLarge(d));
        }
        if !self.is_transitive() {
            return Err(PermError::NotTransitive);
        }
        // blocks containing point 0, closed under joins
        let mut blocks: BTreeSet<Vec<usize>> = BTreeSet::new();
        for b in 1..d {
            blocks.insert(self.minimal_block_of_set(&[0, b]));
        }
        loop {
            let list: Vec<Vec<usize>> = blocks.iter().cloned().collect();
            let mut grew = false;
            for (i, x) in list.iter().enumerate() {
                for y in &list[i + 1..] {
                    let mut union: Vec<usize> = x.iter().chain(y).copied().collect();
                    union.sort_unstable();
                    union.dedup();
                    let j = self.minimal_block_of_set(&union);
                    grew |= blocks.insert(j);
                }
            }
            if !grew {
                break;
            }
        }
        let mut nontrivial: Vec<Vec<usize>> =
            blocks.into_iter().filter(|b| b.len() > 1 && b.len() < d).collect();
        nontrivial.sort_by(|x, y| x.len().cmp(&y.len()).then_with(|| x.cmp(y)));
        let systems: Vec<BlockSystem> = nontrivial
            .iter()
            .map(|b| BlockSystem::from_block(self, b))
            .collect();

        let contains = |big: &Vec<usize>, small: &Vec<usize>| {
            big.len() > small.len() && small.iter().all(|p| big.binary_search(p).is_ok())
        };
        let mut edges = Vec::new();
        for (i, fine) in nontrivial.iter().enumerate() {
            for (j, coarse) in nontrivial.iter().enumerate() {
                if !contains(coarse, fine) {
                    continue;
                }
                let covered = !nontrivial
                    .iter()
                    .any(|mid| contains(mid, fine) && contains(coarse, mid));
                if covered {
                    edges.push((i, j));
                }
            }
        }
        Ok(BlockLattice { systems, edges })
    }

    pub fn all_block_systems(&self) -> Result<Vec<BlockSystem>, PermError> {
        Ok(self.block_lattice()?.systems)
    }

    /// Transitive with no nontrivial block system.
    pub fn is_primitive(&self) -> bool {
        if !self.is_transitive() {
            return false;
        }
        let d = self.degree();
        (1..d).all(|b| self.minimal_block_of_set(&[0, b]).len() == d)
    }

    /// The induced action on the blocks of `system`.
    pub fn action_on_blocks(&self, system: &BlockSystem) -> PermGroup {
        let owner = system.block_of();
        let gens = self
            .generators()
            .iter()
            .map(|g| {
                let images = system.blocks().iter().map(|b| owner[g.apply(b[0])]).collect();
                Permutation::new(images).expect("block system is invariant")
            })
            .collect();
        PermGroup::new(system.num_blocks(), gens).unwrap()
    }

    /// The setwise stabilizer of `block`, restricted to the block's points
    /// (listed in ascending order).
    pub fn block_stabilizer_action(
        &self,
        system: &BlockSystem,
        block: &[usize],
    ) -> Result<PermGroup, PermError> {
        let mut sorted = block.to_vec();
        sorted.sort_unstable();
        let start = system
            .blocks()
            .iter()
            .position(|b| *b == sorted)
            .ok_or(PermError::BlockNotInSystem)?;
        let owner = system.block_of();
        let block_image = |g: &Permutation, i: usize| owner[g.apply(system.blocks()[i][0])];

        // transversal of the block orbit
        let mut transversal: HashMap<usize, Permutation> = HashMap::new();
        transversal.insert(start, Permutation::identity(self.degree()));
        let mut order = vec![start];
        let mut k = 0;
        while k < order.len() {
            let i = order[k];
            for g in self.generators() {
                let j = block_image(g, i);
                if !transversal.contains_key(&j) {
                    let u = transversal[&i].then(g);
                    transversal.insert(j, u);
                    order.push(j);
                }
            }
            k += 1;
        }

        let local: HashMap<usize, usize> =
            sorted.iter().enumerate().map(|(k, &p)| (p, k)).collect();
        let mut gens = Vec::new();
        for &i in &order {
            for g in self.generators() {
                let j = block_image(g, i);
                let s = transversal[&i].then(g).then(&transversal[&j].inverse());
                let images = sorted.iter().map(|p| local[&s.apply(*p)]).collect();
                gens.push(Permutation::new(images).expect("stabilizer preserves the block"));
            }
        }
        gens.sort();
        gens.dedup();
        PermGroup::new(sorted.len(), gens)
    }
}
