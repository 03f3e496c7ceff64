use std::fs;
use std::time::{Duration, Instant};

use anyhow::Context as _;
use log::info;
use rayon::prelude::*;

use fracrom::experiments::{build_offline, error_table, ident_table, ForwardKind, IdentTable};
use fracrom::inverse::{add_noise, identify, FomForward, ForwardModel, LmConfig, ObservationData, RomForward};
use fracrom::persistence::{base_dir, index_matrix, read_vector, trajectory_matrix, write_matrix, write_trace};
use fracrom::pod::{
    collect_nonlinear_snapshots, collect_snapshots, compute_basis, compute_nonlinear_basis, truncation_error,
    SnapshotKind, SnapshotMatrix,
};
use fracrom::problems::TRAINING_SAMPLES;
use fracrom::rom::rom_solve;
use fracrom::{deim_select, DMatrix, FomOptions, FomSolver, Trajectory};

use crate::args::{BenchArgs, BuildRomArgs, FomSolveArgs, IdentifyArgs, ReproduceArgs, RomSolveArgs, SnapshotArgs};
use crate::setup::{check_order, load_manifest, load_rom, load_snapshots, usage, Problem};
use crate::NumericalFailure;

const MANIFEST: &str = "manifest.toml";

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

pub fn fom_solve(args: &FomSolveArgs) -> anyhow::Result<()> {
    let problem = Problem::from_args(&args.problem)?;
    let spec = problem.spec(args.beta)?;
    let started = Instant::now();
    let (traj, stats) = FomSolver::new(spec.clone(), FomOptions::default())?.solve()?;
    let wall = started.elapsed();
    println!("problem      {}", problem.name());
    println!("unknowns     {}", spec.grid.len());
    println!("time steps   {}", spec.grid.time.steps);
    println!("beta         {}", args.beta);
    println!("wall time    {:.4} s", secs(wall));
    println!("linear solves {}", stats.linear_solves);
    println!("pcg iterations {}", stats.pcg_iterations);
    if !stats.newton.is_empty() {
        let its: usize = stats.newton.iter().map(|l| l.iterations()).sum();
        println!("newton iterations {its}");
    }
    if let Some(err) = problem.final_error(&spec, args.beta, traj.final_state())? {
        println!("final L2 error {err:.6e}");
    }
    if let Some(out) = &args.out {
        write_matrix(out, &trajectory_matrix(&traj))?;
        println!("trajectory   {}", out.display());
    }
    Ok(())
}

pub fn snapshots(args: &SnapshotArgs) -> anyhow::Result<()> {
    let problem = Problem::from_args(&args.problem)?;
    for &b in &args.samples {
        check_order(b, "sample")?;
    }
    let specs = args
        .samples
        .iter()
        .map(|&b| problem.spec(b))
        .collect::<anyhow::Result<Vec<_>>>()?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;

    let started = Instant::now();
    let trajectories: Vec<Trajectory> = specs
        .par_iter()
        .map(|spec| {
            FomSolver::new(spec.clone(), FomOptions::default())?
                .solve()
                .map(|(t, _)| t)
        })
        .collect::<fracrom::Result<_>>()?;
    info!("{} full-order runs in {:.2?}", trajectories.len(), started.elapsed());

    let mut manifest = problem.manifest(args.samples.clone())?;
    let states = collect_snapshots(&trajectories)?;
    manifest.store_matrix(&args.out, "snapshots", &states.data)?;
    println!("snapshots            {} x {}", states.nrows(), states.ncols());

    if !specs[0].is_linear() {
        let parts = trajectories
            .iter()
            .zip(&specs)
            .map(|(t, s)| collect_nonlinear_snapshots(std::slice::from_ref(t), s))
            .collect::<fracrom::Result<Vec<_>>>()?;
        let nl = SnapshotMatrix::hstack(&parts)?;
        manifest.store_matrix(&args.out, "nonlinear_snapshots", &nl.data)?;
        println!("nonlinear snapshots  {} x {}", nl.nrows(), nl.ncols());
    }
    let path = args.out.join(MANIFEST);
    manifest.write(&path)?;
    println!("manifest             {}", path.display());
    Ok(())
}

pub fn build_rom(args: &BuildRomArgs) -> anyhow::Result<()> {
    let mut manifest = load_manifest(&args.manifest)?;
    let base = base_dir(&args.manifest).to_path_buf();
    if args.r == 0 {
        return Err(usage("--r must be positive"));
    }
    if matches!(args.s, Some(0)) {
        return Err(usage("--s must be positive"));
    }
    if args.s.is_some() && !manifest.has("nonlinear_snapshots") {
        return Err(usage(
            "--s needs nonlinear snapshots, but this problem has no reaction term",
        ));
    }
    let states = load_snapshots(&manifest, &base, "snapshots", SnapshotKind::State)?;
    let basis = compute_basis(&states, args.r)?;

    let sigma = basis.singular_values();
    let shown = sigma.len().min(args.r + 4);
    println!("singular values (leading {shown} of {}):", sigma.len());
    for (i, s) in sigma.iter().take(shown).enumerate() {
        println!("  sigma_{:<3} {:.6e}  ({:.3e} of sigma_1)", i + 1, s, s / sigma[0]);
    }
    let direct = truncation_error(&states, &basis);
    let tail = basis.tail_energy();
    let rel = (direct - tail).abs() / states.energy().max(f64::MIN_POSITIVE);
    println!("projection error     {direct:.6e}");
    println!("tail energy          {tail:.6e}  (relative mismatch {rel:.2e})");

    manifest.store_matrix(&base, "basis", basis.matrix())?;
    manifest.store_matrix(
        &base,
        "singular_values",
        &DMatrix::from_column_slice(sigma.len(), 1, sigma),
    )?;
    manifest.rank = Some(args.r);
    manifest.files.remove("deim_basis");
    manifest.files.remove("deim_indices");
    manifest.deim_points = None;

    if let Some(s) = args.s {
        let nl = load_snapshots(&manifest, &base, "nonlinear_snapshots", SnapshotKind::Nonlinear)?;
        let psi = compute_nonlinear_basis(&nl, s)?;
        let indices = deim_select(psi.matrix())?;
        manifest.store_matrix(&base, "deim_basis", psi.matrix())?;
        manifest.store_matrix(&base, "deim_indices", &index_matrix(&indices))?;
        manifest.deim_points = Some(s);
        let one_based: Vec<usize> = indices.iter().map(|i| i + 1).collect();
        println!("DEIM points          {one_based:?}");
    }
    manifest.write(&args.manifest)?;
    println!("manifest             {}", args.manifest.display());
    Ok(())
}

pub fn rom_solve_cmd(args: &RomSolveArgs) -> anyhow::Result<()> {
    let manifest = load_manifest(&args.manifest)?;
    let base = base_dir(&args.manifest);
    let problem = Problem::from_manifest(&manifest)?;
    let order = check_order(args.beta, "beta")?;
    let rom = load_rom(&manifest, base, &problem)?;
    let spec = problem.spec(args.beta)?;
    let started = Instant::now();
    let (traj, stats) = rom_solve(&rom, &spec, order)?;
    let wall = started.elapsed();
    println!("problem            {}", problem.name());
    println!("reduced dimension  {}", rom.basis.dim());
    println!("DEIM points        {}", rom.deim.as_ref().map_or(0, |d| d.len()));
    println!("wall time          {:.6} s", secs(wall));
    println!("newton iterations  {}", stats.newton_iterations);
    println!("nonlinear evaluations {}", stats.nonlinear_evaluations);
    println!("full-dimension work   {}", stats.full_dim_work);
    let final_state = traj.lift_final();
    if let Some(err) = problem.final_error(&spec, args.beta, &final_state)? {
        println!("final L2 error     {err:.6e}");
    }
    if let Some(out) = &args.out {
        let n = final_state.len();
        let levels: Vec<Vec<f64>> = (0..traj.coefficients.len())
            .map(|m| traj.lift(m))
            .collect::<fracrom::Result<_>>()?;
        let m = DMatrix::from_fn(n, levels.len(), |i, j| levels[j][i]);
        write_matrix(out, &m)?;
        println!("trajectory         {}", out.display());
    }
    Ok(())
}

pub fn identify_cmd(args: &IdentifyArgs, seed: u64) -> anyhow::Result<()> {
    let manifest = load_manifest(&args.manifest)?;
    let base = base_dir(&args.manifest);
    let problem = Problem::from_manifest(&manifest)?;
    check_order(args.beta0, "beta0")?;
    if !(args.noise >= 0.0 && args.noise.is_finite()) {
        return Err(usage("--noise must be nonnegative"));
    }
    let config = LmConfig {
        beta0: args.beta0,
        alpha0: args.alpha0,
        tol: args.tol,
        kmax: args.max_iter,
        regularized: !args.unregularized,
        ..LmConfig::default()
    };
    config.validate().map_err(|e| usage(e.to_string()))?;

    let beta_star = match (args.beta_star, args.data.is_some()) {
        (Some(b), _) => Some(check_order(b, "beta-star")?.get()),
        (None, true) => None,
        (None, false) => Some(
            problem
                .beta_star()
                .ok_or_else(|| usage("synthetic data need --beta-star for this problem"))?,
        ),
    };
    // the forward operator keeps the source of the true (or configured) order
    let reference = beta_star.or(problem.beta_star()).unwrap_or(0.5);
    let spec = problem.spec(reference)?;

    let data = match &args.data {
        Some(path) => {
            let values = read_vector(path).map_err(|e| usage(format!("cannot read data {}: {e}", path.display())))?;
            if values.len() != spec.grid.len() {
                return Err(usage(format!(
                    "data holds {} values, the grid has {}",
                    values.len(),
                    spec.grid.len()
                )));
            }
            ObservationData::clean(values)
        }
        None => {
            let fom = FomForward::new(spec.clone(), FomOptions::default())?;
            let clean = fom.final_state(check_order(reference, "beta-star")?)?;
            if args.noise > 0.0 {
                add_noise(&clean, args.noise, seed)?
            } else {
                ObservationData::clean(clean)
            }
        }
    };

    let forward: Box<dyn ForwardModel> = match args.forward {
        ForwardKind::Fom => Box::new(FomForward::new(spec, FomOptions::default())?),
        ForwardKind::Rom => Box::new(RomForward::new(load_rom(&manifest, base, &problem)?, spec)),
    };
    let result = identify(&config, &data, forward.as_ref())?;

    println!("forward      {}", args.forward);
    println!("beta0        {}", args.beta0);
    println!("beta_inv     {:.10}", result.beta_inv);
    if let Some(b) = beta_star {
        println!("|beta*-beta_inv| {:.4e}", (b - result.beta_inv).abs());
    }
    println!("iterations   {}", result.iterations);
    println!("converged    {}", result.converged);
    println!("forward solves {}", result.forward_solves);
    println!("wall time    {:.4} s", secs(result.wall_time));
    if let Some(path) = &args.trace {
        write_trace(path, &result)?;
        println!("trace        {}", path.display());
    }
    if !result.converged {
        return Err(NumericalFailure(format!("no convergence within {} iterations", config.kmax)).into());
    }
    Ok(())
}

fn print_ident_summary(table: &IdentTable) {
    let fom: Vec<_> = table.records.iter().filter(|r| r.forward == ForwardKind::Fom).collect();
    let rom: Vec<_> = table.records.iter().filter(|r| r.forward == ForwardKind::Rom).collect();
    if fom.is_empty() {
        return;
    }
    let mut worst: f64 = 0.0;
    let (mut t_fom, mut t_rom) = (0.0, 0.0);
    for f in &fom {
        if let Some(r) = rom
            .iter()
            .find(|r| r.beta0 == f.beta0 && r.noise_percent == f.noise_percent)
        {
            worst = worst.max((f.result.beta_inv - r.result.beta_inv).abs());
            t_fom += secs(f.result.wall_time);
            t_rom += secs(r.result.wall_time);
        }
    }
    println!("largest |beta_inv(FOM) - beta_inv(ROM)| {worst:.3e}");
    println!(
        "wall time FOM {:.3} s, ROM {:.4} s, ratio {:.0}",
        t_fom,
        t_rom,
        t_fom / t_rom.max(1e-12)
    );
}

pub fn reproduce(args: &ReproduceArgs, seed: u64) -> anyhow::Result<()> {
    let checks = if args.table <= 4 {
        let t = error_table(args.table)?;
        print!("{t}");
        t.checks()
    } else {
        let t = ident_table(args.table, seed, !args.rom_only)?;
        print!("{t}");
        print_ident_summary(&t);
        t.checks()
    };
    let failed: Vec<_> = checks.iter().filter(|c| !c.1).collect();
    println!("{} of {} checks pass", checks.len() - failed.len(), checks.len());
    for (label, _) in failed {
        println!("FAIL {label}");
    }
    Ok(())
}

pub fn bench(args: &BenchArgs) -> anyhow::Result<()> {
    let problem = Problem::from_args(&args.problem)?;
    let Problem::Case(case) = problem else {
        return Err(usage("bench runs on the built-in problems only"));
    };
    let order = check_order(args.beta, "beta")?;
    if args.repeat == 0 {
        return Err(usage("--repeat must be positive"));
    }
    let r = args.r.unwrap_or(case.default_rank());
    let s = args.s.or(case.default_deim_points());
    let offline = build_offline(&case, &TRAINING_SAMPLES, r, s, &FomOptions::default())?;
    let spec = case.spec(args.beta)?;

    let solver = FomSolver::new(spec.clone(), FomOptions::default())?;
    let mut fom_best = Duration::MAX;
    let mut fom_stats = None;
    for _ in 0..args.repeat {
        let t0 = Instant::now();
        let (_, stats) = solver.solve()?;
        fom_best = fom_best.min(t0.elapsed());
        fom_stats = Some(stats);
    }
    let mut rom_best = Duration::MAX;
    let mut rom_stats = None;
    for _ in 0..args.repeat {
        let t0 = Instant::now();
        let (_, stats) = rom_solve(&offline.rom, &spec, order)?;
        rom_best = rom_best.min(t0.elapsed());
        rom_stats = Some(stats);
    }
    let (fs, rs) = (fom_stats.expect("repeat > 0"), rom_stats.expect("repeat > 0"));
    println!(
        "problem {} (N = {}, M = {}), beta = {}",
        case.id,
        spec.grid.len(),
        case.steps,
        args.beta
    );
    println!("offline: {:.3} s (r = {r}, s = {s:?})", secs(offline.elapsed));
    println!(
        "FOM: {:.6} s, {} linear solves, {} PCG iterations, {} Newton iterations",
        secs(fom_best),
        fs.linear_solves,
        fs.pcg_iterations,
        fs.newton.iter().map(|l| l.iterations()).sum::<usize>()
    );
    println!(
        "ROM: {:.6} s, {} Newton iterations, {} nonlinear evaluations, {} full-dimension operations",
        secs(rom_best),
        rs.newton_iterations,
        rs.nonlinear_evaluations,
        rs.full_dim_work
    );
    println!("speed-up {:.1}", secs(fom_best) / secs(rom_best).max(1e-12));
    Ok(())
}
