use std::collections::{BTreeSet, HashSet, VecDeque};

use num_bigint::BigUint;

use super::{PermError, Permutation};

/// A finitely generated permutation group of fixed degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermGroup {
    degree: usize,
    generators: Vec<Permutation>,
}

impl PermGroup {
    /// Identity generators are dropped; duplicates are kept out.
    pub fn new(degree: usize, generators: Vec<Permutation>) -> Result<Self, PermError> {
        let mut gens: Vec<Permutation> = Vec::new();
        for g in generators {
            if g.degree() != degree {
                return Err(PermError::DegreeMismatch {
                    expected: degree,
                    got: g.degree(),
                });
            }
            if !g.is_identity() && !gens.contains(&g) {
                gens.push(g);
            }
        }
        Ok(Self {
            degree,
            generators: gens,
        })
    }

    pub fn trivial(degree: usize) -> Self {
        Self {
            degree,
            generators: Vec::new(),
        }
    }

    pub fn symmetric(degree: usize) -> Self {
        let mut gens = Vec::new();
        if degree >= 2 {
            gens.push(Permutation::from_cycles(degree, &[&[1, 2]]).unwrap());
        }
        if degree >= 3 {
            let cycle: Vec<usize> = (1..=degree).collect();
            gens.push(Permutation::from_cycles(degree, &[&cycle]).unwrap());
        }
        Self::new(degree, gens).unwrap()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn generators(&self) -> &[Permutation] {
        &self.generators
    }

    /// Orbits sorted by smallest point, each sorted ascending.
    pub fn orbits(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.degree];
        let mut out = Vec::new();
        for start in 0..self.degree {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut orbit = vec![start];
            let mut k = 0;
            while k < orbit.len() {
                let x = orbit[k];
                for g in &self.generators {
                    let y = g.apply(x);
                    if !seen[y] {
                        seen[y] = true;
                        orbit.push(y);
                    }
                }
                k += 1;
            }
            orbit.sort_unstable();
            out.push(orbit);
        }
        out
    }

    pub fn is_transitive(&self) -> bool {
        self.degree <= 1 || self.orbits().len() == 1
    }

    pub fn all_even(&self) -> bool {
        self.generators.iter().all(Permutation::is_even)
    }

    pub fn stab_chain(&self) -> StabChain {
        StabChain::build(self.degree, &self.generators)
    }

    pub fn order(&self) -> BigUint {
        self.stab_chain().order()
    }

    pub fn contains(&self, p: &Permutation) -> bool {
        p.degree() == self.degree && self.stab_chain().contains(p)
    }

    /// Every element, by breadth-first closure. Only for small groups.
    pub fn elements(&self) -> Vec<Permutation> {
        let id = Permutation::identity(self.degree);
        let mut seen: HashSet<Permutation> = HashSet::from([id.clone()]);
        let mut queue = VecDeque::from([id.clone()]);
        let mut out = vec![id];
        while let Some(x) = queue.pop_front() {
            for g in &self.generators {
                let y = x.then(g);
                if seen.insert(y.clone()) {
                    out.push(y.clone());
                    queue.push_back(y);
                }
            }
        }
        out.sort();
        out
    }

    /// Points moved by some generator.
    pub fn support(&self) -> BTreeSet<usize> {
        self.generators
            .iter()
            .flat_map(|g| (0..self.degree).filter(move |&i| g.apply(i) != i))
            .collect()
    }
}

struct Level {
    // reps[j] maps the level's base point to j and fixes all larger points
    reps: Vec<Option<Permutation>>,
    inv_reps: Vec<Option<Permutation>>,
    gens: Vec<Permutation>,
}

enum Task {
    Add(usize, Permutation),
    Extend(usize, Permutation),
}

/// Stabilizer chain with base `d-1, d-2, .., 0` (Knuth's formulation of
/// Schreier-Sims). Level `k` holds coset representatives of the pointwise
/// stabilizer of `{k+1, .., d-1}` over that of `{k, .., d-1}`.
pub struct StabChain {
    degree: usize,
    levels: Vec<Level>,
}

impl StabChain {
    pub fn build(degree: usize, generators: &[Permutation]) -> StabChain {
        let levels = (0..degree)
            .map(|k| {
                let mut reps = vec![None; degree];
                let mut inv_reps = vec![None; degree];
                reps[k] = Some(Permutation::identity(degree));
                inv_reps[k] = Some(Permutation::identity(degree));
                Level {
                    reps,
                    inv_reps,
                    gens: Vec::new(),
                }
            })
            .collect();
        let mut chain = StabChain { degree, levels };
        if degree == 0 {
            return chain;
        }
        for g in generators {
            chain.run(Task::Add(degree - 1, g.clone()));
        }
        chain
    }

    // Explicit work stack instead of mutual recursion keeps deep chains off
    // the call stack.
    fn run(&mut self, first: Task) {
        let mut stack = vec![first];
        while let Some(task) = stack.pop() {
            match task {
                Task::Add(k, p) => {
                    if self.sifts_from(k, &p) {
                        continue;
                    }
                    let level = &mut self.levels[k];
                    level.gens.push(p.clone());
                    for rep in level.reps.iter().flatten() {
                        stack.push(Task::Extend(k, rep.then(&p)));
                    }
                }
                Task::Extend(k, p) => {
                    let j = p.apply(k);
                    let level = &mut self.levels[k];
                    match &level.inv_reps[j] {
                        None => {
                            for t in &level.gens {
                                stack.push(Task::Extend(k, p.then(t)));
                            }
                            level.inv_reps[j] = Some(p.inverse());
                            level.reps[j] = Some(p);
                        }
                        Some(inv) => {
                            let q = p.then(inv);
                            if k > 0 && !q.is_identity() {
                                stack.push(Task::Add(k - 1, q));
                            }
                        }
                    }
                }
            }
        }
    }

    fn sifts_from(&self, mut k: usize, p: &Permutation) -> bool {
        let mut p = p.clone();
        loop {
            if p.is_identity() {
                return true;
            }
            let j = p.apply(k);
            match &self.levels[k].inv_reps[j] {
                None => return false,
                Some(inv) => p = p.then(inv),
            }
            if k == 0 {
                return p.is_identity();
            }
            k -= 1;
        }
    }

    pub fn contains(&self, p: &Permutation) -> bool {
        if p.degree() != self.degree {
            return false;
        }
        self.degree == 0 || self.sifts_from(self.degree - 1, p)
    }

    /// Sizes of the basic orbits, from the top level down.
    pub fn orbit_sizes(&self) -> Vec<usize> {
        self.levels
            .iter()
            .rev()
            .map(|l| l.reps.iter().filter(|r| r.is_some()).count())
            .collect()
    }

    pub fn order(&self) -> BigUint {
        self.orbit_sizes()
            .into_iter()
            .fold(BigUint::from(1u32), |acc, s| acc * BigUint::from(s))
    }

    /// Strong generators collected over all levels.
    pub fn strong_generators(&self) -> Vec<Permutation> {
        self.levels.iter().flat_map(|l| l.gens.iter().cloned()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perm(d: usize, cycles: &[&[usize]]) -> Permutation {
        Permutation::from_cycles(d, cycles).unwrap()
    }

    #[test]
    fn cyclic_order() {
        let g = PermGroup::new(3, vec![perm(3, &[&[1, 2, 3]])]).unwrap();
        assert_eq!(g.order(), BigUint::from(3u32));
    }

    #[test]
    fn symmetric_ten() {
        assert_eq!(PermGroup::symmetric(10).order(), BigUint::from(3_628_800u32));
    }

    #[test]
    fn orbits_and_transitivity() {
        let g = PermGroup::new(4, vec![perm(4, &[&[1, 2], &[3, 4]])]).unwrap();
        assert_eq!(g.orbits(), vec![vec![0, 1], vec![2, 3]]);
        assert!(!g.is_transitive());
        assert!(PermGroup::new(4, vec![perm(4, &[&[1, 2, 3, 4]])]).unwrap().is_transitive());
    }

    #[test]
    fn membership() {
        let g = PermGroup::new(4, vec![perm(4, &[&[1, 2, 3, 4]])]).unwrap();
        assert!(g.contains(&perm(4, &[&[1, 3], &[2, 4]])));
        assert!(!g.contains(&perm(4, &[&[1, 2]])));
    }

    #[test]
    fn identity_generators_are_dropped() {
        let g = PermGroup::new(3, vec![Permutation::identity(3)]).unwrap();
        assert!(g.generators().is_empty());
        assert_eq!(g.order(), BigUint::from(1u32));
    }

    #[test]
    fn large_symmetric_group() {
        // 64! has 90 decimal digits
        assert_eq!(PermGroup::symmetric(64).order().to_string().len(), 90);
    }
}
