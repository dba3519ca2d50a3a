//! Synthetic release pairs with planted co-annotation structure.
//!
//! Every branch is a root, `groups` intermediate terms and
//! `leaves_per_group` leaves under each intermediate. Leaves are partitioned
//! into modules whose members sit under distinct intermediates, so module
//! mates are never siblings and their only common ancestor is the root. Each
//! protein belongs to one module per branch; the older release annotates a
//! random subset of the module's leaves and the newer release adds some of
//! the missing ones, plus a little noise outside the module.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::annotations::{AnnotationRelease, ProteinId};
use crate::error::Result;
use crate::ontology::{Branch, DagBuilder, OntologyDag, TermIdx};
use crate::rng;

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticConfig {
    pub proteins: usize,
    pub groups: usize,
    pub leaves_per_group: usize,
    pub module_size: usize,
    /// Chance a module leaf is annotated in the older release.
    pub p_old: f64,
    /// Chance a missing module leaf is added in the newer release.
    pub p_new: f64,
    /// Chance per protein and branch of one extra novel leaf outside its module.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            proteins: 600,
            groups: 8,
            leaves_per_group: 5,
            module_size: 4,
            p_old: 0.6,
            p_new: 0.6,
            noise: 0.05,
            seed: 20_200_101,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticData {
    pub dag: OntologyDag,
    pub old: AnnotationRelease,
    pub new: AnnotationRelease,
    /// Leaf modules per branch.
    pub modules: Vec<(Branch, Vec<Vec<TermIdx>>)>,
}

fn accession(branch: Branch, local: usize) -> String {
    let base = match branch {
        Branch::Bp => 1_000_000,
        Branch::Mf => 2_000_000,
        Branch::Cc => 3_000_000,
    };
    format!("GO:{:07}", base + local)
}

fn leaf_local(group: usize, pos: usize) -> usize {
    1000 + group * 100 + pos
}

fn build_dag(cfg: &SyntheticConfig) -> Result<OntologyDag> {
    let mut b = DagBuilder::new();
    for branch in Branch::ALL {
        let root = accession(branch, 0);
        b.term(&root, &format!("{} root", branch.namespace()), branch)?;
        for g in 0..cfg.groups {
            let mid = accession(branch, g + 1);
            b.term(&mid, &format!("{branch} group {g}"), branch)?;
            b.edge(&mid, &root);
            for j in 0..cfg.leaves_per_group {
                let leaf = accession(branch, leaf_local(g, j));
                b.term(&leaf, &format!("{branch} leaf {g}.{j}"), branch)?;
                b.edge(&leaf, &mid);
            }
        }
    }
    b.build()
}

/// Generates a DAG and an (old, new) release pair.
pub fn generate(cfg: &SyntheticConfig) -> Result<SyntheticData> {
    assert!(
        cfg.module_size >= 1 && cfg.module_size <= cfg.groups && cfg.groups.is_multiple_of(cfg.module_size),
        "module size must divide the number of groups"
    );
    let dag = build_dag(cfg)?;
    let ids: Vec<ProteinId> = (0..cfg.proteins).map(|i| ProteinId::new(&format!("SYN{i:05}"))).collect();
    let mut old = Vec::new();
    let mut new = Vec::new();
    let mut modules = Vec::new();

    for (bi, branch) in Branch::ALL.into_iter().enumerate() {
        // Position-major order puts leaves of distinct groups next to each other.
        let mut leaves = Vec::new();
        for pos in 0..cfg.leaves_per_group {
            for g in 0..cfg.groups {
                leaves.push(dag.lookup(&accession(branch, leaf_local(g, pos)))?);
            }
        }
        let branch_modules: Vec<Vec<TermIdx>> = leaves.chunks(cfg.module_size).map(<[TermIdx]>::to_vec).collect();
        let mut stream = rng::stream(cfg.seed, "synthetic", bi as u64);

        for id in &ids {
            let module = &branch_modules[stream.gen_range(0..branch_modules.len())];
            let mut have: Vec<TermIdx> = module.iter().copied().filter(|_| stream.gen_bool(cfg.p_old)).collect();
            if have.is_empty() {
                have.push(*module.choose(&mut stream).unwrap());
            }
            for &t in &have {
                old.push((id.clone(), t));
                new.push((id.clone(), t));
            }
            for &t in module {
                if !have.contains(&t) && stream.gen_bool(cfg.p_new) {
                    new.push((id.clone(), t));
                }
            }
            if stream.gen_bool(cfg.noise) {
                let t = *leaves.choose(&mut stream).unwrap();
                if !module.contains(&t) {
                    new.push((id.clone(), t));
                }
            }
        }
        modules.push((branch, branch_modules));
    }

    Ok(SyntheticData {
        dag,
        old: AnnotationRelease::from_pairs("synthetic-old", old),
        new: AnnotationRelease::from_pairs("synthetic-new", new),
        modules,
    })
}
