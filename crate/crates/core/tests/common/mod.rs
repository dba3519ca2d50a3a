//! Random ontology and annotation instances shared by the integration tests.

#![allow(dead_code)]

use negsel_core::annotations::{AnnotationRelease, ProteinId};
use negsel_core::ontology::{Branch, DagBuilder, OntologyDag, TermIdx};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// A random DAG in plain adjacency form, plus the library's version of it.
pub struct Instance {
    pub branch: Vec<Branch>,
    pub parents: Vec<Vec<usize>>,
    pub acc: Vec<String>,
    pub idx: Vec<TermIdx>,
    pub dag: OntologyDag,
    pub direct: Vec<Vec<usize>>,
    pub release: AnnotationRelease,
}

pub fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let n = rng.gen_range(3..=50);
    let n_branches = rng.gen_range(1..=3);
    let mut branch = Vec::new();
    let mut parents: Vec<Vec<usize>> = Vec::new();
    for b in Branch::ALL.into_iter().take(n_branches) {
        branch.push(b);
        parents.push(Vec::new());
    }
    while branch.len() < n {
        let b = Branch::ALL[rng.gen_range(0..n_branches)];
        let earlier: Vec<usize> = (0..branch.len()).filter(|&j| branch[j] == b).collect();
        let k = rng.gen_range(1..=3.min(earlier.len()));
        let mut ps: Vec<usize> = earlier.choose_multiple(rng, k).copied().collect();
        ps.sort_unstable();
        branch.push(b);
        parents.push(ps);
    }
    let mut numbers: Vec<usize> = (1..=n * 3).collect();
    numbers.shuffle(rng);
    let acc: Vec<String> = numbers[..n].iter().map(|x| format!("GO:{x:07}")).collect();

    let mut bld = DagBuilder::new();
    for j in 0..n {
        bld.term(&acc[j], &format!("t{j}"), branch[j]).unwrap();
    }
    for j in 0..n {
        for &p in &parents[j] {
            bld.edge(&acc[j], &acc[p]);
        }
    }
    let dag = bld.build().unwrap();
    let idx: Vec<TermIdx> = acc.iter().map(|a| dag.lookup(a).unwrap()).collect();

    let n_prot = rng.gen_range(1..=200);
    let direct: Vec<Vec<usize>> = (0..n_prot)
        .map(|_| {
            let k = rng.gen_range(0..=4);
            let mut t: Vec<usize> = (0..k).map(|_| rng.gen_range(0..n)).collect();
            t.sort_unstable();
            t.dedup();
            t
        })
        .collect();
    let release = AnnotationRelease::from_pairs(
        "r",
        direct
            .iter()
            .enumerate()
            .flat_map(|(i, ts)| ts.iter().map(move |&t| (ProteinId::new(&format!("P{i:03}")), t)))
            .map(|(p, t)| (p, idx[t])),
    );
    Instance {
        branch,
        parents,
        acc,
        idx,
        dag,
        direct,
        release,
    }
}

