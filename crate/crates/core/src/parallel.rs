//! Partitioned assembly: every partition integrates its owned inner elements
//! against owned and ghost outer elements, writes the rows it owns, and hands
//! contributions to foreign rows over in a deterministic exchange step.

use std::time::Instant;

use crate::assembly::distance::aprx_min_dist;
use crate::assembly::{AssemblyConfig, AssemblyStats, Engine, Method, RowOwnership, SparseMatrix, WorkerOutput};
use crate::error::{Error, Result};
use crate::fe_space::FeSpace;
use crate::kernel::KernelParams;
use crate::mesh::{partition_geometric, Mesh, PartitionMap, Region};

/// What one partition owns and sees.
#[derive(Debug, Clone)]
pub struct PartitionContext {
    pub id: usize,
    /// Ω_I: owned elements inside Ω.
    pub omega_owned: Vec<usize>,
    /// Π_I: owned elements in Γ.
    pub pi_owned: Vec<usize>,
    /// Matrix rows written by this partition.
    pub owned_rows: Vec<usize>,
    /// `ghosts[J]` = Γ_JI for J ≠ I, and Γ_II = Π_I.
    pub ghosts: Vec<Vec<usize>>,
    /// Assembly wall time of this partition, seconds.
    pub t_a: f64,
    /// Assembly plus solve wall time, seconds (filled in by the caller that
    /// runs the solve).
    pub t_t: f64,
    pub stats: AssemblyStats,
}

/// Interaction radius the ghost search uses for a given method.
pub fn ghost_radius(kernel: &KernelParams, method: Method) -> f64 {
    match method {
        Method::MollifiedAdaptive => kernel.support(),
        Method::Barycenter => kernel.delta * (1.0 + 1e-12),
    }
}

/// `result[I][J]` = Γ_JI: elements owned by J ≠ I whose box is closer than
/// `radius` to the box of I's elements; `result[I][I]` = Π_I.
pub fn ghost_regions(mesh: &Mesh, parts: &PartitionMap, radius: f64) -> Vec<Vec<Vec<usize>>> {
    let np = parts.n_parts;
    let mut out = vec![vec![Vec::new(); np]; np];
    for (e, el) in mesh.elements.iter().enumerate() {
        let j = parts.owner[e];
        for (i, row) in out.iter_mut().enumerate() {
            if i == j {
                if el.region == Region::Gamma {
                    row[i].push(e);
                }
            } else if aprx_min_dist(&el.bbox, &parts.part_bbox[i]) < radius {
                row[j].push(e);
            }
        }
    }
    out
}

/// Checks the set relations of the decomposition: Γ_JI disjoint over J,
/// Γ_II = Π_I, and ∪_I Γ_II = Γ.
pub fn check_set_relations(mesh: &Mesh, parts: &PartitionMap, ghosts: &[Vec<Vec<usize>>]) -> Result<()> {
    let n = mesh.n_elements();
    let mut gamma_cover = vec![0usize; n];
    for (i, row) in ghosts.iter().enumerate() {
        let mut seen = vec![false; n];
        for (j, set) in row.iter().enumerate() {
            for &e in set {
                if seen[e] {
                    return Err(Error::InvalidParameter(format!("element {e} in two ghost sets of partition {i}")));
                }
                seen[e] = true;
                if parts.owner[e] != j {
                    return Err(Error::InvalidParameter(format!("ghost element {e} listed under wrong owner {j}")));
                }
            }
        }
        for &e in &row[i] {
            if mesh.elements[e].region != Region::Gamma {
                return Err(Error::InvalidParameter(format!("Π_{i} contains Ω element {e}")));
            }
            gamma_cover[e] += 1;
        }
    }
    for (e, el) in mesh.elements.iter().enumerate() {
        let expect = usize::from(el.region == Region::Gamma);
        if gamma_cover[e] != expect {
            return Err(Error::InvalidParameter(format!("Γ element {e} covered {} times", gamma_cover[e])));
        }
    }
    Ok(())
}

/// Owner of each DOF row: the owner of the lowest-numbered element holding it.
pub fn row_owners(mesh: &Mesh, space: &FeSpace, parts: &PartitionMap) -> Vec<usize> {
    let mut owner = vec![usize::MAX; space.n_dofs];
    for e in 0..mesh.n_elements() {
        for &d in space.element_dofs(e) {
            if owner[d] == usize::MAX {
                owner[d] = parts.owner[e];
            }
        }
    }
    owner
}

#[derive(Debug, Clone)]
pub struct ParallelAssembly {
    pub matrix: SparseMatrix,
    /// ‖A − Aᵀ‖∞ / ‖A‖∞ before symmetrization.
    pub asymmetry: f64,
    pub contexts: Vec<PartitionContext>,
    pub partition: PartitionMap,
    pub stats: AssemblyStats,
    /// Wall time of the whole assembly, seconds.
    pub t_a: f64,
}

/// Assemble with `n_parts` partitions. With `concurrent` the partitions run on
/// separate threads; otherwise one after another. Either way the result is
/// the same.
pub fn parallel_assemble(
    mesh: &Mesh,
    space: &FeSpace,
    kernel: &KernelParams,
    config: &AssemblyConfig,
    n_parts: usize,
    concurrent: bool,
) -> Result<ParallelAssembly> {
    let start = Instant::now();
    let parts = partition_geometric(mesh, n_parts)?;
    let engine = Engine::new(mesh, space, kernel, config)?;
    let ghosts = ghost_regions(mesh, &parts, ghost_radius(kernel, config.method));
    check_set_relations(mesh, &parts, &ghosts)?;
    let mut matrix = engine.pattern();
    let owners = row_owners(mesh, space, &parts);

    struct Plan {
        elems: Vec<usize>,
        rows: Vec<usize>,
        row_slot: Vec<u32>,
        local_ptr: Vec<usize>,
        allowed: Vec<bool>,
    }
    let plans: Vec<Plan> = (0..n_parts)
        .map(|p| {
            let elems: Vec<usize> =
                (0..engine.inner_elems.len()).filter(|&k| parts.owner[engine.inner_elems[k]] == p).collect();
            let rows: Vec<usize> = (0..space.n_dofs).filter(|&i| engine.active_row[i] && owners[i] == p).collect();
            let mut row_slot = vec![u32::MAX; space.n_dofs];
            let mut local_ptr = vec![0];
            for (k, &i) in rows.iter().enumerate() {
                row_slot[i] = k as u32;
                local_ptr.push(local_ptr[k] + matrix.row_range(i).len());
            }
            let mut allowed: Vec<bool> = parts.owner.iter().map(|&o| o == p).collect();
            for set in &ghosts[p] {
                for &e in set {
                    allowed[e] = true;
                }
            }
            Plan { elems, rows, row_slot, local_ptr, allowed }
        })
        .collect();

    let run = |plan: &Plan| -> Result<(WorkerOutput, f64)> {
        let t0 = Instant::now();
        let own = RowOwnership { row_slot: &plan.row_slot, local_ptr: &plan.local_ptr };
        let out = engine.run_worker(&plan.elems, &matrix, &own, Some(&plan.allowed))?;
        Ok((out, t0.elapsed().as_secs_f64()))
    };
    let outputs: Vec<Result<(WorkerOutput, f64)>> = if concurrent && n_parts > 1 {
        std::thread::scope(|s| {
            let handles: Vec<_> = plans.iter().map(|plan| s.spawn(|| run(plan))).collect();
            handles.into_iter().map(|h| h.join().expect("assembly worker panicked")).collect()
        })
    } else {
        plans.iter().map(run).collect()
    };

    let mut contexts = Vec::with_capacity(n_parts);
    let mut stats = AssemblyStats::default();
    let mut stashes = Vec::with_capacity(n_parts);
    let mut written = vec![false; space.n_dofs];
    for (p, (plan, res)) in plans.iter().zip(outputs).enumerate() {
        let (out, t_a) = res?;
        let row_ptr = matrix.row_ptr().to_vec();
        let vals = matrix.values_mut();
        for (k, &i) in plan.rows.iter().enumerate() {
            if written[i] {
                return Err(Error::InvalidParameter(format!("row {i} written by two partitions")));
            }
            written[i] = true;
            vals[row_ptr[i]..row_ptr[i + 1]].copy_from_slice(&out.values[plan.local_ptr[k]..plan.local_ptr[k + 1]]);
        }
        stats += out.stats;
        stashes.push(out.stash);
        let owned = parts.owned(p);
        contexts.push(PartitionContext {
            id: p,
            omega_owned: owned.iter().copied().filter(|&e| mesh.elements[e].region == Region::Omega).collect(),
            pi_owned: owned.iter().copied().filter(|&e| mesh.elements[e].region == Region::Gamma).collect(),
            owned_rows: plan.rows.clone(),
            ghosts: ghosts[p].clone(),
            t_a,
            t_t: t_a,
            stats: out.stats,
        });
    }
    // Exchange: contributions to foreign rows, delivered in source order.
    for stash in stashes {
        for (i, j, v) in stash {
            matrix.add(i as usize, j as usize, v);
        }
    }
    let asymmetry = engine.finish(&mut matrix);
    Ok(ParallelAssembly { matrix, asymmetry, contexts, partition: parts, stats, t_a: start.elapsed().as_secs_f64() })
}
