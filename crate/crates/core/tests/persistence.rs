//! Offline artifacts written to disk and read back.

use std::fs;

use fracrom::experiments::{build_offline, ForwardKind, IdentificationSetup};
use fracrom::persistence::{index_matrix, indices_from_matrix, trajectory_matrix, GridRecord, ToleranceRecord};
use fracrom::{
    build_deim_operator, build_rom, read_trace, rom_solve, write_trace, BenchmarkCase, CaseId, Error, FomOptions,
    ReducedBasis, RunManifest,
};

fn case() -> BenchmarkCase {
    BenchmarkCase {
        id: CaseId::Test2,
        n: 31,
        steps: 16,
        final_time: 1.0,
    }
}

fn manifest() -> RunManifest {
    let grid = case().grid().unwrap();
    RunManifest::new(
        "test2",
        GridRecord {
            dim: 1,
            n: 31,
            steps: 16,
            h: grid.axis(0).h(),
            dt: grid.time.dt(),
            final_time: 1.0,
        },
        vec![0.2, 0.4, 0.6, 0.8],
        ToleranceRecord {
            newton: 1e-10,
            newton_max_iter: 50,
            pcg: 1e-10,
            rom_newton: 1e-11,
        },
    )
}

#[test]
fn stored_rom_reproduces_the_in_memory_rom() {
    let dir = tempfile::tempdir().unwrap();
    let offline = build_offline(&case(), &[0.2, 0.4, 0.6, 0.8], 4, Some(6), &FomOptions::default()).unwrap();
    let deim = offline.deim().unwrap();

    let mut m = manifest();
    m.rank = Some(4);
    m.deim_points = Some(6);
    m.store_matrix(dir.path(), "basis", offline.rom.basis.matrix()).unwrap();
    let sigma = offline.rom.basis.singular_values();
    let sv = fracrom::DMatrix::from_column_slice(sigma.len(), 1, sigma);
    m.store_matrix(dir.path(), "singular_values", &sv).unwrap();
    m.store_matrix(dir.path(), "deim_basis", deim.psi()).unwrap();
    m.store_matrix(dir.path(), "deim_indices", &index_matrix(deim.indices()))
        .unwrap();
    let path = dir.path().join("manifest.toml");
    m.write(&path).unwrap();

    let back = RunManifest::read(&path).unwrap();
    assert_eq!(back, m);
    let phi = back.load_matrix(dir.path(), "basis").unwrap();
    let sigma: Vec<f64> = back
        .load_matrix(dir.path(), "singular_values")
        .unwrap()
        .iter()
        .copied()
        .collect();
    let basis = ReducedBasis::new(phi, sigma).unwrap();
    let psi = back.load_matrix(dir.path(), "deim_basis").unwrap();
    let idx = indices_from_matrix(&back.load_matrix(dir.path(), "deim_indices").unwrap()).unwrap();
    assert_eq!(idx, deim.indices());
    let op = build_deim_operator(basis.matrix(), &psi, &idx).unwrap();
    let spec = case().spec(0.5).unwrap();
    let rom = build_rom(&spec.stiffness().unwrap(), &basis, Some(op)).unwrap();

    let (a, _) = rom_solve(&offline.rom, &spec, spec.beta).unwrap();
    let (b, _) = rom_solve(&rom, &spec, spec.beta).unwrap();
    assert_eq!(a.lift_final(), b.lift_final());
}

#[test]
fn tampered_matrix_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let traj = fracrom::fom_solve(&case().spec(0.3).unwrap()).unwrap();
    let mut m = manifest();
    let file = m
        .store_matrix(dir.path(), "snapshots", &trajectory_matrix(&traj))
        .unwrap();
    let path = dir.path().join("manifest.toml");
    m.write(&path).unwrap();
    RunManifest::read(&path).unwrap();

    let mut bytes = fs::read(&file).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 1;
    fs::write(&file, bytes).unwrap();
    let err = RunManifest::read(&path).unwrap_err();
    assert!(matches!(err, Error::ChecksumMismatch { .. }), "{err:?}");
}

#[test]
fn writers_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let traj = fracrom::fom_solve(&case().spec(0.3).unwrap()).unwrap();
    for sub in ["a", "b"] {
        let base = dir.path().join(sub);
        fs::create_dir(&base).unwrap();
        let mut m = manifest();
        m.store_matrix(&base, "snapshots", &trajectory_matrix(&traj)).unwrap();
        m.write(&base.join("manifest.toml")).unwrap();
    }
    for file in ["snapshots.frmat", "manifest.toml"] {
        let a = fs::read(dir.path().join("a").join(file)).unwrap();
        let b = fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file}");
    }
}

#[test]
fn identification_trace_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let setup = IdentificationSetup::for_case(BenchmarkCase::new(CaseId::Ex1)).unwrap();
    let data = setup.observations(0.1, 5).unwrap();
    let res = setup.run(ForwardKind::Rom, 0.2, &data).unwrap();
    let path = dir.path().join("trace.csv");
    write_trace(&path, &res).unwrap();
    assert_eq!(read_trace(&path).unwrap(), res.trace);
}
