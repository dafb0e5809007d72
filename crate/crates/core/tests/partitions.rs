use nonlocal_core::mesh::{partition_geometric, standard_omega};
use nonlocal_core::parallel::{check_set_relations, ghost_radius, ghost_regions, row_owners};
use nonlocal_core::{assemble, build_mesh, parallel_assemble, AssemblyConfig, FeSpace, KernelParams, MeshKind};

#[test]
fn matrix_is_independent_of_partition_count() {
    let kernel = KernelParams::new(2, 0.2, 0.05, 1.0).unwrap();
    for (kind, degree) in [(MeshKind::Quad, 1), (MeshKind::Tri, 2)] {
        let mesh = build_mesh(2, standard_omega(2), 0.1, kernel.support(), kind).unwrap();
        let space = FeSpace::new(&mesh, degree).unwrap();
        let cfg = AssemblyConfig::adaptive(1, 2);
        let serial = assemble(&mesh, &space, &kernel, &cfg).unwrap();
        let scale = serial.matrix.max_abs();
        for np in [1, 2, 4, 8] {
            let par = parallel_assemble(&mesh, &space, &kernel, &cfg, np, true).unwrap();
            let dev =
                serial.matrix.values().iter().zip(par.matrix.values()).fold(0.0f64, |w, (a, b)| w.max((a - b).abs()));
            assert!(dev <= 1e-12 * scale, "{kind:?} np={np}: {dev}");
            assert_eq!(par.contexts.len(), np);
        }
    }
}

#[test]
fn decomposition_sets_are_consistent() {
    let kernel = KernelParams::new(2, 0.2, 0.05, 1.0).unwrap();
    let mesh = build_mesh(2, standard_omega(2), 0.05, kernel.support(), MeshKind::Mixed).unwrap();
    let space = FeSpace::new(&mesh, 1).unwrap();
    for np in [2, 3, 8] {
        let parts = partition_geometric(&mesh, np).unwrap();
        let ghosts = ghost_regions(&mesh, &parts, ghost_radius(&kernel, nonlocal_core::Method::MollifiedAdaptive));
        check_set_relations(&mesh, &parts, &ghosts).unwrap();
        let owners = row_owners(&mesh, &space, &parts);
        assert!(owners.iter().all(|&o| o < np));
        let sizes: Vec<usize> = (0..np).map(|p| parts.owned(p).len()).collect();
        assert_eq!(sizes.iter().sum::<usize>(), mesh.n_elements());
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }
}
