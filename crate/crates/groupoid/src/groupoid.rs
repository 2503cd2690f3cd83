use std::collections::BTreeMap;

use crate::GroupoidError;

/// A groupoid with finitely many objects and arrows, given by explicit
/// tables. Every law — composition domain, associativity, units, inverses —
/// is checked exhaustively at construction, so downstream code can trust the
/// tables blindly.
///
/// Arrows compose like functions: `compose(g, h)` is defined when
/// `source(g) == target(h)` and represents "h, then g". Strings `(g₁,…,g_p)`
/// are composable when `source(gᵢ) == target(gᵢ₊₁)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteGroupoid {
    objects: Vec<String>,
    arrow_labels: Vec<String>,
    source: Vec<usize>,
    target: Vec<usize>,
    compose: BTreeMap<(usize, usize), usize>,
    units: Vec<usize>,
    inverses: Vec<usize>,
}

impl FiniteGroupoid {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        objects: Vec<String>,
        arrow_labels: Vec<String>,
        source: Vec<usize>,
        target: Vec<usize>,
        compose: BTreeMap<(usize, usize), usize>,
        units: Vec<usize>,
        inverses: Vec<usize>,
    ) -> Result<Self, GroupoidError> {
        let g = Self {
            objects,
            arrow_labels,
            source,
            target,
            compose,
            units,
            inverses,
        };
        g.check_laws()?;
        Ok(g)
    }

    fn check_laws(&self) -> Result<(), GroupoidError> {
        let n_obj = self.objects.len();
        let n_arr = self.arrow_labels.len();
        let fail = |msg: String| Err(GroupoidError::LawViolation(msg));

        if self.source.len() != n_arr || self.target.len() != n_arr {
            return fail("source/target tables must cover every arrow".into());
        }
        if self.units.len() != n_obj {
            return fail("one unit per object required".into());
        }
        if self.inverses.len() != n_arr {
            return fail("one inverse per arrow required".into());
        }
        if self
            .source
            .iter()
            .chain(&self.target)
            .any(|&x| x >= n_obj)
        {
            return fail("arrow endpoint out of range".into());
        }
        if self.units.iter().chain(&self.inverses).any(|&a| a >= n_arr) {
            return fail("unit or inverse index out of range".into());
        }

        for (x, &u) in self.units.iter().enumerate() {
            if self.source[u] != x || self.target[u] != x {
                return fail(format!("unit of object {x} is not an endomorphism"));
            }
        }

        for g in 0..n_arr {
            for h in 0..n_arr {
                let composable = self.source[g] == self.target[h];
                match self.compose.get(&(g, h)) {
                    Some(&k) => {
                        if !composable {
                            return fail(format!(
                                "composite defined for non-matching pair ({g}, {h})"
                            ));
                        }
                        if k >= n_arr {
                            return fail(format!("composite of ({g}, {h}) out of range"));
                        }
                        if self.source[k] != self.source[h] || self.target[k] != self.target[g] {
                            return fail(format!("composite of ({g}, {h}) has wrong endpoints"));
                        }
                    }
                    None => {
                        if composable {
                            return fail(format!("missing composite for pair ({g}, {h})"));
                        }
                    }
                }
            }
        }

        for g in 0..n_arr {
            let us = self.units[self.source[g]];
            let ut = self.units[self.target[g]];
            if self.compose[&(g, us)] != g || self.compose[&(ut, g)] != g {
                return fail(format!("unit law fails at arrow {g}"));
            }
            let inv = self.inverses[g];
            if self.source[inv] != self.target[g] || self.target[inv] != self.source[g] {
                return fail(format!("inverse of arrow {g} has wrong endpoints"));
            }
            if self.compose[&(g, inv)] != ut || self.compose[&(inv, g)] != us {
                return fail(format!("inverse law fails at arrow {g}"));
            }
        }

        for g in 0..n_arr {
            for h in 0..n_arr {
                if self.source[g] != self.target[h] {
                    continue;
                }
                for k in 0..n_arr {
                    if self.source[h] != self.target[k] {
                        continue;
                    }
                    let left = self.compose[&(self.compose[&(g, h)], k)];
                    let right = self.compose[&(g, self.compose[&(h, k)])];
                    if left != right {
                        return fail(format!("associativity fails at ({g}, {h}, {k})"));
                    }
                }
            }
        }
        Ok(())
    }

    /// One-object groupoid from a group multiplication table
    /// (`table[g][h] = g·h`). The identity and inverses are located in the
    /// table.
    pub fn from_group_table(
        labels: Vec<String>,
        table: Vec<Vec<usize>>,
    ) -> Result<Self, GroupoidError> {
        let n = labels.len();
        if table.len() != n || table.iter().any(|row| row.len() != n) {
            return Err(GroupoidError::LawViolation(
                "multiplication table must be square over the labels".into(),
            ));
        }
        if table.iter().flatten().any(|&k| k >= n) {
            return Err(GroupoidError::LawViolation(
                "table entry out of range".into(),
            ));
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|g| table[e][g] == g && table[g][e] == g))
            .ok_or_else(|| GroupoidError::LawViolation("no identity element".into()))?;
        let mut inverses = Vec::with_capacity(n);
        for g in 0..n {
            let inv = (0..n).find(|&h| table[g][h] == identity).ok_or_else(|| {
                GroupoidError::LawViolation(format!("element {g} has no inverse"))
            })?;
            inverses.push(inv);
        }
        let compose = (0..n)
            .flat_map(|g| (0..n).map(move |h| ((g, h), 0)))
            .map(|((g, h), _)| ((g, h), table[g][h]))
            .collect();
        Self::new(
            vec!["•".into()],
            labels,
            vec![0; n],
            vec![0; n],
            compose,
            vec![identity],
            inverses,
        )
    }

    /// The cyclic group of order `n` as a one-object groupoid.
    pub fn cyclic(n: usize) -> Self {
        assert!(n >= 1);
        let labels = (0..n)
            .map(|k| match k {
                0 => "e".to_string(),
                1 => "r".to_string(),
                _ => format!("r{k}"),
            })
            .collect();
        let table = (0..n).map(|i| (0..n).map(|j| (i + j) % n).collect()).collect();
        Self::from_group_table(labels, table).expect("cyclic table is a group")
    }

    /// The symmetric group on `n` letters (n ≤ 4 keeps the tables small),
    /// with permutations labeled by their one-line image strings.
    pub fn symmetric(n: usize) -> Self {
        assert!((1..=4).contains(&n), "keep the arrow count small");
        let mut perms: Vec<Vec<usize>> = Vec::new();
        let mut items: Vec<usize> = (0..n).collect();
        fn heap(k: usize, items: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if k == 1 {
                out.push(items.clone());
                return;
            }
            for i in 0..k {
                heap(k - 1, items, out);
                if k % 2 == 0 {
                    items.swap(i, k - 1);
                } else {
                    items.swap(0, k - 1);
                }
            }
        }
        heap(n, &mut items, &mut perms);
        perms.sort();
        let index: BTreeMap<Vec<usize>, usize> =
            perms.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        let labels = perms
            .iter()
            .map(|p| p.iter().map(|i| (i + 1).to_string()).collect::<String>())
            .collect();
        let table = perms
            .iter()
            .map(|s| {
                perms
                    .iter()
                    .map(|t| {
                        let st: Vec<usize> = (0..n).map(|i| s[t[i]]).collect();
                        index[&st]
                    })
                    .collect()
            })
            .collect();
        Self::from_group_table(labels, table).expect("permutation table is a group")
    }

    /// The pair groupoid on `n` objects: exactly one arrow between any two
    /// objects.
    pub fn pair(n: usize) -> Self {
        assert!(n >= 1);
        let objects = (0..n).map(|i| format!("x{i}")).collect();
        let arrow = |i: usize, j: usize| i * n + j;
        let mut labels = Vec::new();
        let mut source = Vec::new();
        let mut target = Vec::new();
        for i in 0..n {
            for j in 0..n {
                labels.push(format!("a{i}{j}"));
                target.push(i);
                source.push(j);
            }
        }
        let mut compose = BTreeMap::new();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    compose.insert((arrow(i, j), arrow(j, k)), arrow(i, k));
                }
            }
        }
        let units = (0..n).map(|i| arrow(i, i)).collect();
        let inverses = (0..n)
            .flat_map(|i| (0..n).map(move |j| arrow(j, i)))
            .collect();
        Self::new(objects, labels, source, target, compose, units, inverses)
            .expect("pair groupoid laws hold")
    }

    /// The groupoid with the given objects and only identity arrows.
    pub fn units_only(objects: Vec<String>) -> Self {
        let n = objects.len();
        let labels = (0..n).map(|i| format!("id{i}")).collect();
        let compose = (0..n).map(|i| ((i, i), i)).collect();
        Self::new(
            objects,
            labels,
            (0..n).collect(),
            (0..n).collect(),
            compose,
            (0..n).collect(),
            (0..n).collect(),
        )
        .expect("unit groupoid laws hold")
    }

    pub fn object_count(&self) -> usize {
        self.objects.len()
    }

    pub fn arrow_count(&self) -> usize {
        self.arrow_labels.len()
    }

    pub fn object_label(&self, x: usize) -> &str {
        &self.objects[x]
    }

    pub fn arrow_label(&self, g: usize) -> &str {
        &self.arrow_labels[g]
    }

    pub fn source(&self, g: usize) -> usize {
        self.source[g]
    }

    pub fn target(&self, g: usize) -> usize {
        self.target[g]
    }

    pub fn unit(&self, x: usize) -> usize {
        self.units[x]
    }

    pub fn inverse(&self, g: usize) -> usize {
        self.inverses[g]
    }

    pub fn is_unit(&self, g: usize) -> bool {
        self.units[self.source[g]] == g
    }

    /// Composite `g∘h`, defined when `source(g) == target(h)`.
    pub fn compose(&self, g: usize, h: usize) -> Result<usize, GroupoidError> {
        self.compose.get(&(g, h)).copied().ok_or_else(|| {
            GroupoidError::NonComposableString(format!(
                "arrows {} and {} do not match",
                self.arrow_labels[g], self.arrow_labels[h]
            ))
        })
    }
}

/// A functor between finite groupoids, given by its object and arrow maps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupoidMorphism {
    pub object_map: Vec<usize>,
    pub arrow_map: Vec<usize>,
}

impl GroupoidMorphism {
    /// Checks functoriality from `h` to `g`: endpoints, units, and all
    /// composites must be respected.
    pub fn validate(
        &self,
        h: &FiniteGroupoid,
        g: &FiniteGroupoid,
    ) -> Result<(), GroupoidError> {
        let fail = |msg: String| Err(GroupoidError::NotAFunctor(msg));
        if self.object_map.len() != h.object_count() || self.arrow_map.len() != h.arrow_count() {
            return fail("maps must cover every object and arrow".into());
        }
        if self.object_map.iter().any(|&x| x >= g.object_count())
            || self.arrow_map.iter().any(|&a| a >= g.arrow_count())
        {
            return fail("image out of range".into());
        }
        for a in 0..h.arrow_count() {
            let fa = self.arrow_map[a];
            if g.source(fa) != self.object_map[h.source(a)]
                || g.target(fa) != self.object_map[h.target(a)]
            {
                return fail(format!("arrow {a} endpoints not respected"));
            }
        }
        for x in 0..h.object_count() {
            if self.arrow_map[h.unit(x)] != g.unit(self.object_map[x]) {
                return fail(format!("unit of object {x} not respected"));
            }
        }
        for a in 0..h.arrow_count() {
            for b in 0..h.arrow_count() {
                if h.source(a) != h.target(b) {
                    continue;
                }
                let ab = h.compose(a, b)?;
                let img = g.compose(self.arrow_map[a], self.arrow_map[b])?;
                if self.arrow_map[ab] != img {
                    return fail(format!("composition of ({a}, {b}) not respected"));
                }
            }
        }
        Ok(())
    }

    /// The identity functor of `g`.
    pub fn identity(g: &FiniteGroupoid) -> Self {
        Self {
            object_map: (0..g.object_count()).collect(),
            arrow_map: (0..g.arrow_count()).collect(),
        }
    }
}
