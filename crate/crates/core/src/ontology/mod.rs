//! The Gene Ontology term graph.
//!
//! Terms are stored densely and addressed by [`TermIdx`]. Indices are
//! assigned in ascending accession order, so comparing two indices gives the
//! same answer as comparing their accessions. A synthetic dummy root sits
//! above the branch roots; it is only ever returned by
//! [`OntologyDag::deepest_fork_ancestor`] and never appears in ancestor,
//! descendant or sibling sets.

mod obo;

pub use obo::{parse_obo, parse_obo_path, write_obo, EdgeRelations, OboStats};

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Accession used for the synthetic root above BP, MF and CC.
pub const DUMMY_ROOT_ACCESSION: &str = "GO:0000000";

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TermId(String);

impl TermId {
    /// Validates the `GO:` + 7 digit shape.
    pub fn new(accession: &str) -> Result<Self> {
        let digits = accession
            .strip_prefix("GO:")
            .ok_or_else(|| Error::Domain(format!("malformed GO accession {accession:?}")))?;
        if digits.len() != 7 || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::Domain(format!("malformed GO accession {accession:?}")));
        }
        Ok(TermId(accession.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for TermId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for TermId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TermId::new(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Branch {
    #[serde(rename = "BP")]
    Bp,
    #[serde(rename = "MF")]
    Mf,
    #[serde(rename = "CC")]
    Cc,
}

impl Branch {
    pub const ALL: [Branch; 3] = [Branch::Bp, Branch::Mf, Branch::Cc];

    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Bp => "BP",
            Branch::Mf => "MF",
            Branch::Cc => "CC",
        }
    }

    pub fn namespace(self) -> &'static str {
        match self {
            Branch::Bp => "biological_process",
            Branch::Mf => "molecular_function",
            Branch::Cc => "cellular_component",
        }
    }

    /// GAF column 9 letter.
    pub fn aspect(self) -> char {
        match self {
            Branch::Bp => 'P',
            Branch::Mf => 'F',
            Branch::Cc => 'C',
        }
    }

    pub fn from_namespace(ns: &str) -> Option<Branch> {
        Branch::ALL.into_iter().find(|b| b.namespace() == ns)
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "BP" | "P" | "BIOLOGICAL_PROCESS" => Ok(Branch::Bp),
            "MF" | "F" | "MOLECULAR_FUNCTION" => Ok(Branch::Mf),
            "CC" | "C" | "CELLULAR_COMPONENT" => Ok(Branch::Cc),
            _ => Err(Error::Domain(format!("unknown GO branch {s:?}"))),
        }
    }
}

/// Dense index of a term inside one [`OntologyDag`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermIdx(pub u32);

impl TermIdx {
    #[inline]
    pub fn ix(self) -> usize {
        self.0 as usize
    }
}

/// Term declaration fed to [`DagBuilder`].
#[derive(Clone, Debug)]
pub struct TermSpec {
    pub id: TermId,
    pub name: String,
    pub branch: Branch,
    pub alt_ids: Vec<String>,
}

/// Collects terms and child→parent edges, then validates them into an
/// [`OntologyDag`].
#[derive(Default, Debug)]
pub struct DagBuilder {
    terms: Vec<TermSpec>,
    edges: Vec<(String, String)>,
}

impl DagBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn term(&mut self, id: &str, name: &str, branch: Branch) -> Result<&mut Self> {
        self.terms.push(TermSpec {
            id: TermId::new(id)?,
            name: name.to_string(),
            branch,
            alt_ids: Vec::new(),
        });
        Ok(self)
    }

    pub fn term_spec(&mut self, spec: TermSpec) -> &mut Self {
        self.terms.push(spec);
        self
    }

    pub fn edge(&mut self, child: &str, parent: &str) -> &mut Self {
        self.edges.push((child.to_string(), parent.to_string()));
        self
    }

    pub fn build(self) -> Result<OntologyDag> {
        OntologyDag::from_parts(self.terms, self.edges)
    }
}

#[derive(Clone, Debug)]
pub struct OntologyDag {
    // Index `n` (== ids.len() - 1) is the dummy root.
    ids: Vec<TermId>,
    names: Vec<String>,
    branches: Vec<Branch>,
    parents: Vec<Vec<TermIdx>>,
    children: Vec<Vec<TermIdx>>,
    levels: Vec<i32>,
    ancestors: Vec<Vec<TermIdx>>,
    descendants: Vec<Vec<TermIdx>>,
    lookup: HashMap<String, TermIdx>,
    roots: Vec<TermIdx>,
}

impl OntologyDag {
    fn from_parts(mut terms: Vec<TermSpec>, edges: Vec<(String, String)>) -> Result<Self> {
        terms.sort_by(|a, b| a.id.cmp(&b.id));
        for pair in terms.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::Structural(format!("duplicate term {}", pair[0].id)));
            }
        }
        let n = terms.len();

        let mut lookup = HashMap::with_capacity(n);
        for (i, t) in terms.iter().enumerate() {
            lookup.insert(t.id.as_str().to_string(), TermIdx(i as u32));
        }
        for (i, t) in terms.iter().enumerate() {
            for alt in &t.alt_ids {
                if !lookup.contains_key(alt) {
                    lookup.insert(alt.clone(), TermIdx(i as u32));
                }
            }
        }

        let mut parents: Vec<Vec<TermIdx>> = vec![Vec::new(); n + 1];
        for (child, parent) in &edges {
            let c = *lookup
                .get(child)
                .ok_or_else(|| Error::Structural(format!("edge from unknown term {child}")))?;
            let p = *lookup.get(parent).ok_or_else(|| {
                Error::Structural(format!("edge {child} -> {parent} references unknown term"))
            })?;
            if c == p {
                return Err(Error::Structural(format!("cycle detected at term {child}")));
            }
            if terms[c.ix()].branch != terms[p.ix()].branch {
                return Err(Error::Structural(format!(
                    "edge {child} -> {parent} crosses branches"
                )));
            }
            parents[c.ix()].push(p);
        }
        for ps in &mut parents {
            ps.sort_unstable();
            ps.dedup();
        }

        let mut children: Vec<Vec<TermIdx>> = vec![Vec::new(); n + 1];
        for (c, ps) in parents.iter().enumerate() {
            for p in ps {
                children[p.ix()].push(TermIdx(c as u32));
            }
        }
        let roots: Vec<TermIdx> = (0..n)
            .filter(|&i| parents[i].is_empty())
            .map(|i| TermIdx(i as u32))
            .collect();
        children[n] = roots.clone();

        let order = topological_order(&parents[..n], &children[..n]).map_err(|at| {
            Error::Structural(format!("cycle detected at term {}", terms[at].id))
        })?;

        let mut levels = vec![-1i32; n + 1];
        let mut ancestors: Vec<Vec<TermIdx>> = vec![Vec::new(); n + 1];
        for &t in &order {
            let ps = &parents[t.ix()];
            levels[t.ix()] = ps.iter().map(|p| levels[p.ix()] + 1).max().unwrap_or(0);
            let mut anc: Vec<TermIdx> = ps.clone();
            for p in ps {
                anc.extend_from_slice(&ancestors[p.ix()]);
            }
            anc.sort_unstable();
            anc.dedup();
            ancestors[t.ix()] = anc;
        }

        let mut descendants: Vec<Vec<TermIdx>> = vec![Vec::new(); n + 1];
        for (t, anc) in ancestors.iter().enumerate() {
            for a in anc {
                descendants[a.ix()].push(TermIdx(t as u32));
            }
        }

        let mut ids = Vec::with_capacity(n + 1);
        let mut names = Vec::with_capacity(n + 1);
        let mut branches = Vec::with_capacity(n);
        for t in terms {
            ids.push(t.id);
            names.push(t.name);
            branches.push(t.branch);
        }
        ids.push(TermId(DUMMY_ROOT_ACCESSION.to_string()));
        names.push("dummy root".to_string());

        Ok(OntologyDag {
            ids,
            names,
            branches,
            parents,
            children,
            levels,
            ancestors,
            descendants,
            lookup,
            roots,
        })
    }

    /// Number of real terms (the dummy root is not counted).
    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = TermIdx> + '_ {
        (0..self.len() as u32).map(TermIdx)
    }

    pub fn terms_in(&self, branch: Branch) -> impl Iterator<Item = TermIdx> + '_ {
        self.terms().filter(move |&t| self.branches[t.ix()] == branch)
    }

    pub fn dummy_root(&self) -> TermIdx {
        TermIdx(self.len() as u32)
    }

    pub fn is_dummy(&self, t: TermIdx) -> bool {
        t.ix() == self.len()
    }

    /// Resolves a primary or alternate accession to its canonical term.
    pub fn lookup(&self, accession: &str) -> Result<TermIdx> {
        self.lookup
            .get(accession)
            .copied()
            .ok_or_else(|| Error::UnknownTerm(accession.to_string()))
    }

    pub fn id(&self, t: TermIdx) -> &TermId {
        &self.ids[t.ix()]
    }

    pub fn name(&self, t: TermIdx) -> &str {
        &self.names[t.ix()]
    }

    /// `None` only for the dummy root.
    pub fn branch(&self, t: TermIdx) -> Option<Branch> {
        self.branches.get(t.ix()).copied()
    }

    /// Terms without branch-internal parents.
    pub fn roots(&self) -> &[TermIdx] {
        &self.roots
    }

    pub fn is_root(&self, t: TermIdx) -> bool {
        !self.is_dummy(t) && self.parents[t.ix()].is_empty()
    }

    /// Branch-internal parents. Empty for branch roots and the dummy root.
    pub fn parents(&self, t: TermIdx) -> &[TermIdx] {
        &self.parents[t.ix()]
    }

    pub fn children(&self, t: TermIdx) -> &[TermIdx] {
        &self.children[t.ix()]
    }

    /// All terms reachable upward from `t`, excluding `t` and the dummy root. Sorted.
    pub fn ancestors(&self, t: TermIdx) -> &[TermIdx] {
        &self.ancestors[t.ix()]
    }

    /// All terms that have `t` among their ancestors. Sorted.
    pub fn descendants(&self, t: TermIdx) -> &[TermIdx] {
        &self.descendants[t.ix()]
    }

    pub fn is_ancestor(&self, candidate: TermIdx, of: TermIdx) -> bool {
        self.ancestors[of.ix()].binary_search(&candidate).is_ok()
    }

    /// Terms sharing at least one branch-internal parent with `t`. Sorted.
    pub fn siblings(&self, t: TermIdx) -> Vec<TermIdx> {
        let mut out: Vec<TermIdx> = self.parents[t.ix()]
            .iter()
            .flat_map(|p| self.children[p.ix()].iter().copied())
            .filter(|&s| s != t)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn are_siblings(&self, a: TermIdx, b: TermIdx) -> bool {
        a != b
            && self.parents[a.ix()]
                .iter()
                .any(|p| self.parents[b.ix()].binary_search(p).is_ok())
    }

    /// Longest-path depth below the branch root; −1 for the dummy root.
    pub fn level(&self, t: TermIdx) -> i32 {
        self.levels[t.ix()]
    }

    pub fn max_level(&self) -> i32 {
        self.levels[..self.len()].iter().copied().max().unwrap_or(-1)
    }

    /// The deepest common ancestor of two terms that lie on different paths.
    ///
    /// Ties on level go to the smallest accession. Falls back to the dummy
    /// root when the terms share no ancestor.
    pub fn deepest_fork_ancestor(&self, k: TermIdx, s: TermIdx) -> Result<TermIdx> {
        if k == s || self.is_ancestor(k, s) || self.is_ancestor(s, k) {
            return Err(Error::Domain(format!(
                "{} and {} are on a common path, no fork ancestor",
                self.id(k),
                self.id(s)
            )));
        }
        let best = intersect_sorted(self.ancestors(k), self.ancestors(s))
            .into_iter()
            .max_by(|a, b| self.level(*a).cmp(&self.level(*b)).then(b.cmp(a)));
        Ok(best.unwrap_or_else(|| self.dummy_root()))
    }

    /// Number of edges on the longest upward path from `s` to `q`.
    pub fn longest_path_distance(&self, q: TermIdx, s: TermIdx) -> Result<u32> {
        if q == s {
            return Ok(0);
        }
        if self.is_dummy(q) {
            return Ok((self.level(s) + 1) as u32);
        }
        if !self.is_ancestor(q, s) {
            return Err(Error::Domain(format!(
                "{} is not an ancestor of {}",
                self.id(q),
                self.id(s)
            )));
        }
        // A parent always has a strictly lower level than its child, so
        // walking by decreasing level is a valid topological order.
        let mut nodes: Vec<TermIdx> = self
            .ancestors(s)
            .iter()
            .copied()
            .filter(|&a| a == q || self.is_ancestor(q, a))
            .collect();
        nodes.push(s);
        nodes.sort_by_key(|&t| std::cmp::Reverse(self.level(t)));
        let mut dist: HashMap<TermIdx, i64> = HashMap::with_capacity(nodes.len());
        dist.insert(s, 0);
        for &u in &nodes {
            let Some(&du) = dist.get(&u) else { continue };
            for &p in self.parents(u) {
                if p == q || self.is_ancestor(q, p) {
                    let e = dist.entry(p).or_insert(i64::MIN);
                    *e = (*e).max(du + 1);
                }
            }
        }
        Ok(dist[&q] as u32)
    }

    /// Branch-internal parents shared by `a` and `b`.
    pub fn shared_parents(&self, a: TermIdx, b: TermIdx) -> Vec<TermIdx> {
        intersect_sorted(self.parents(a), self.parents(b))
    }

    /// Ancestors of `t` plus `t` itself, sorted.
    pub fn ancestors_or_self(&self, t: TermIdx) -> Vec<TermIdx> {
        let anc = self.ancestors(t);
        let pos = anc.binary_search(&t).unwrap_err();
        let mut out = Vec::with_capacity(anc.len() + 1);
        out.extend_from_slice(&anc[..pos]);
        out.push(t);
        out.extend_from_slice(&anc[pos..]);
        out
    }

    pub fn edge_count(&self) -> usize {
        self.parents[..self.len()].iter().map(Vec::len).sum()
    }

    /// Term counts per branch, in [`Branch::ALL`] order.
    pub fn branch_sizes(&self) -> [(Branch, usize); 3] {
        Branch::ALL.map(|b| (b, self.branches.iter().filter(|&&x| x == b).count()))
    }
}

/// Kahn's algorithm. On failure returns the index of a node lying on a cycle.
fn topological_order(
    parents: &[Vec<TermIdx>],
    children: &[Vec<TermIdx>],
) -> std::result::Result<Vec<TermIdx>, usize> {
    let n = parents.len();
    let mut pending: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut queue: Vec<TermIdx> = (0..n)
        .filter(|&i| pending[i] == 0)
        .map(|i| TermIdx(i as u32))
        .collect();
    let mut order = Vec::with_capacity(n);
    while let Some(t) = queue.pop() {
        order.push(t);
        for &c in &children[t.ix()] {
            pending[c.ix()] -= 1;
            if pending[c.ix()] == 0 {
                queue.push(c);
            }
        }
    }
    if order.len() < n {
        // Follow unresolved parents until a node repeats; that node is on a cycle.
        let start = (0..n).find(|&i| pending[i] > 0).unwrap();
        let mut seen = vec![false; n];
        let mut cur = start;
        while !seen[cur] {
            seen[cur] = true;
            cur = parents[cur]
                .iter()
                .find(|p| pending[p.ix()] > 0)
                .expect("unresolved node keeps an unresolved parent")
                .ix();
        }
        return Err(cur);
    }
    Ok(order)
}

pub(crate) fn intersect_sorted<T: Ord + Copy>(a: &[T], b: &[T]) -> Vec<T> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> OntologyDag {
        let mut b = DagBuilder::new();
        b.term("GO:0000001", "a", Branch::Bp).unwrap();
        b.term("GO:0000002", "b", Branch::Bp).unwrap();
        b.term("GO:0000003", "c", Branch::Bp).unwrap();
        b.edge("GO:0000002", "GO:0000001").edge("GO:0000003", "GO:0000002");
        b.build().unwrap()
    }

    // a <- b, a <- c, b <- d, c <- d
    fn diamond() -> OntologyDag {
        let mut b = DagBuilder::new();
        for (id, n) in [("GO:0000001", "a"), ("GO:0000002", "b"), ("GO:0000003", "c"), ("GO:0000004", "d")] {
            b.term(id, n, Branch::Mf).unwrap();
        }
        b.edge("GO:0000002", "GO:0000001")
            .edge("GO:0000003", "GO:0000001")
            .edge("GO:0000004", "GO:0000002")
            .edge("GO:0000004", "GO:0000003");
        b.build().unwrap()
    }

    fn ids(dag: &OntologyDag, ts: &[TermIdx]) -> Vec<String> {
        ts.iter().map(|&t| dag.name(t).to_string()).collect()
    }

    #[test]
    fn term_id_shape() {
        assert!(TermId::new("GO:0008150").is_ok());
        assert!(TermId::new("GO:008150").is_err());
        assert!(TermId::new("XX:0008150").is_err());
        assert!(TermId::new("GO:00081a0").is_err());
    }

    #[test]
    fn chain_queries() {
        let dag = chain();
        let [a, b, c] = [0, 1, 2].map(TermIdx);
        assert_eq!(ids(&dag, dag.ancestors(c)), ["a", "b"]);
        assert!(dag.ancestors(a).is_empty());
        assert_eq!(ids(&dag, dag.descendants(a)), ["b", "c"]);
        assert!(dag.descendants(c).is_empty());
        assert_eq!((dag.level(a), dag.level(b), dag.level(c)), (0, 1, 2));
        assert_eq!(dag.level(dag.dummy_root()), -1);
        assert_eq!(dag.longest_path_distance(b, c).unwrap(), 1);
        assert_eq!(dag.longest_path_distance(c, c).unwrap(), 0);
        assert_eq!(dag.longest_path_distance(dag.dummy_root(), c).unwrap(), 3);
        assert!(dag.longest_path_distance(c, a).is_err());
    }

    #[test]
    fn diamond_queries() {
        let dag = diamond();
        let [a, b, c, d] = [0, 1, 2, 3].map(TermIdx);
        assert_eq!(ids(&dag, dag.ancestors(d)), ["a", "b", "c"]);
        assert_eq!(ids(&dag, dag.descendants(a)), ["b", "c", "d"]);
        assert_eq!(dag.siblings(b), vec![c]);
        assert_eq!(dag.deepest_fork_ancestor(b, c).unwrap(), a);
        assert!(dag.deepest_fork_ancestor(a, d).is_err());
        assert!(dag.deepest_fork_ancestor(b, b).is_err());
    }

    #[test]
    fn level_uses_longest_path() {
        // a <- b <- d and a <- d directly
        let mut bld = DagBuilder::new();
        for (id, n) in [("GO:0000001", "a"), ("GO:0000002", "b"), ("GO:0000004", "d")] {
            bld.term(id, n, Branch::Cc).unwrap();
        }
        bld.edge("GO:0000002", "GO:0000001")
            .edge("GO:0000004", "GO:0000002")
            .edge("GO:0000004", "GO:0000001");
        let dag = bld.build().unwrap();
        assert_eq!(dag.level(TermIdx(2)), 2);
        assert_eq!(dag.longest_path_distance(TermIdx(0), TermIdx(2)).unwrap(), 2);
    }

    #[test]
    fn roots_have_no_siblings_and_fork_at_dummy() {
        let mut b = DagBuilder::new();
        b.term("GO:0008150", "biological_process", Branch::Bp).unwrap();
        b.term("GO:0003674", "molecular_function", Branch::Mf).unwrap();
        b.term("GO:0005575", "cellular_component", Branch::Cc).unwrap();
        b.term("GO:0000010", "x", Branch::Bp).unwrap();
        b.edge("GO:0000010", "GO:0008150");
        let dag = b.build().unwrap();
        for &r in dag.roots() {
            assert!(dag.siblings(r).is_empty());
            assert_eq!(dag.level(r), 0);
        }
        let x = dag.lookup("GO:0000010").unwrap();
        let mf = dag.lookup("GO:0003674").unwrap();
        let q = dag.deepest_fork_ancestor(x, mf).unwrap();
        assert!(dag.is_dummy(q));
        assert_eq!(dag.id(q).as_str(), DUMMY_ROOT_ACCESSION);
        assert_eq!(dag.longest_path_distance(q, x).unwrap(), 2);
    }

    #[test]
    fn structural_errors() {
        let mut b = DagBuilder::new();
        b.term("GO:0000001", "a", Branch::Bp).unwrap();
        b.term("GO:0000002", "b", Branch::Bp).unwrap();
        b.edge("GO:0000001", "GO:0000002").edge("GO:0000002", "GO:0000001");
        assert!(matches!(b.build(), Err(Error::Structural(m)) if m.contains("cycle")));

        let mut b = DagBuilder::new();
        b.term("GO:0000001", "a", Branch::Bp).unwrap();
        b.edge("GO:0000001", "GO:9999999");
        assert!(matches!(b.build(), Err(Error::Structural(_))));

        let mut b = DagBuilder::new();
        b.term("GO:0000001", "a", Branch::Bp).unwrap();
        b.term("GO:0000002", "b", Branch::Mf).unwrap();
        b.edge("GO:0000002", "GO:0000001");
        assert!(matches!(b.build(), Err(Error::Structural(m)) if m.contains("crosses")));
    }

    #[test]
    fn deepest_fork_prefers_level_then_accession() {
        // r <- x1 <- x2 <- x3 <- x4; k and s both children of x4 and of y (level 1).
        let mut b = DagBuilder::new();
        for (id, n) in [
            ("GO:0000001", "r"),
            ("GO:0000002", "x1"),
            ("GO:0000003", "x2"),
            ("GO:0000004", "x3"),
            ("GO:0000005", "x4"),
            ("GO:0000006", "y"),
            ("GO:0000007", "k"),
            ("GO:0000008", "s"),
        ] {
            b.term(id, n, Branch::Bp).unwrap();
        }
        b.edge("GO:0000002", "GO:0000001")
            .edge("GO:0000003", "GO:0000002")
            .edge("GO:0000004", "GO:0000003")
            .edge("GO:0000005", "GO:0000004")
            .edge("GO:0000006", "GO:0000001")
            .edge("GO:0000007", "GO:0000005")
            .edge("GO:0000007", "GO:0000006")
            .edge("GO:0000008", "GO:0000005")
            .edge("GO:0000008", "GO:0000006");
        let dag = b.build().unwrap();
        let k = dag.lookup("GO:0000007").unwrap();
        let s = dag.lookup("GO:0000008").unwrap();
        assert_eq!(dag.name(dag.deepest_fork_ancestor(k, s).unwrap()), "x4");
        let mut shared = dag.shared_parents(k, s);
        shared.sort_by_key(|&t| std::cmp::Reverse(dag.level(t)));
        assert_eq!(dag.name(shared[0]), "x4");
    }
}
