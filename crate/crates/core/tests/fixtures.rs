use lighthill_core::mesh::read_mesh;
use lighthill_core::CellKind;

fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

#[test]
fn voronoi_fixture_fills_the_cube() {
    let m = read_mesh(fixture("voronoi_1000.mesh")).unwrap();
    assert_eq!(m.num_cells(), 1000);
    assert_eq!(m.kind(), CellKind::General);
    assert!((m.total_volume() - 1.0).abs() < 1e-12, "{}", m.total_volume());
    let b = m.bounds();
    assert_eq!(b.min, lighthill_core::Vec3::repeat(-0.5));
    assert_eq!(b.max, lighthill_core::Vec3::repeat(0.5));
}

#[test]
fn polygon_fixture_fills_the_slab() {
    let m = read_mesh(fixture("polygons_109.mesh")).unwrap();
    assert_eq!(m.num_cells(), 109);
    assert!((m.total_volume() - 1.6).abs() < 1e-12 * 1.6, "{}", m.total_volume());
}
