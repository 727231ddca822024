use std::collections::{BTreeMap, HashSet};

use super::{PermError, PermGroup, Permutation};

impl PermGroup {
    /// Elements of the centralizer of a transitive group in the full
    /// symmetric group, sorted. Each is fixed by its image of point 0.
    pub fn centralizer_elements(&self) -> Result<Vec<Permutation>, PermError> {
        if !self.is_transitive() {
            return Err(PermError::NotTransitive);
        }
        let d = self.degree();
        if d == 0 {
            return Ok(vec![Permutation::identity(0)]);
        }
        // Schreier tree from 0: point x is reached as gens[via[x]] applied to parent[x]
        let mut parent = vec![usize::MAX; d];
        let mut via = vec![usize::MAX; d];
        let mut order = vec![0];
        parent[0] = 0;
        let mut k = 0;
        while k < order.len() {
            let x = order[k];
            for (gi, g) in self.generators().iter().enumerate() {
                let y = g.apply(x);
                if parent[y] == usize::MAX {
                    parent[y] = x;
                    via[y] = gi;
                    order.push(y);
                }
            }
            k += 1;
        }

        let mut out = Vec::new();
        'candidate: for p in 0..d {
            let mut c = vec![usize::MAX; d];
            c[0] = p;
            for &x in &order[1..] {
                c[x] = self.generators()[via[x]].apply(c[parent[x]]);
            }
            for g in self.generators() {
                for y in 0..d {
                    if c[g.apply(y)] != g.apply(c[y]) {
                        continue 'candidate;
                    }
                }
            }
            if let Ok(perm) = Permutation::new(c) {
                out.push(perm);
            }
        }
        out.sort();
        Ok(out)
    }

    /// The centralizer in the full symmetric group as a group.
    pub fn centralizer_in_sym(&self) -> Result<PermGroup, PermError> {
        let elements = self.centralizer_elements()?;
        PermGroup::new(self.degree(), elements)
    }
}

fn prime_factors(mut n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            out.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Abelian invariants (prime-power elementary divisors, ascending) of the
/// abelianization of the finite group whose full element list is given.
///
/// The trivial group gives an empty list.
pub fn abelian_invariants(elements: &[Permutation]) -> Vec<u64> {
    let Some(first) = elements.first() else {
        return Vec::new();
    };
    let d = first.degree();
    // commutator subgroup by closure
    let mut commutators: HashSet<Permutation> = HashSet::new();
    for a in elements {
        for b in elements {
            commutators.insert(a.inverse().then(&b.inverse()).then(a).then(b));
        }
    }
    let gens: Vec<Permutation> = commutators.into_iter().collect();
    let derived: HashSet<Permutation> =
        PermGroup::new(d, gens).unwrap().elements().into_iter().collect();
    let quotient_order = elements.len() / derived.len();

    let mut invariants = Vec::new();
    for p in prime_factors(quotient_order) {
        // s_k = log_p #{cosets killed by p^k}; exponents >= k number s_k - s_{k-1}
        let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
        let mut prev = 0u32;
        let mut k = 1u32;
        loop {
            let pk = (p as u64).pow(k);
            let killed = elements.iter().filter(|x| derived.contains(&x.pow(pk))).count()
                / derived.len();
            let s = (killed as f64).log(p as f64).round() as u32;
            if s == prev {
                break;
            }
            counts.insert(k, s - prev);
            prev = s;
            k += 1;
        }
        // counts[k] = number of cyclic factors with exponent >= k
        let ks: Vec<u32> = counts.keys().copied().collect();
        for (i, &k) in ks.iter().enumerate() {
            let here = counts[&k];
            let next = ks.get(i + 1).map_or(0, |n| counts[n]);
            for _ in 0..(here - next) {
                invariants.push((p as u64).pow(k));
            }
        }
    }
    invariants.sort_unstable();
    invariants
}
