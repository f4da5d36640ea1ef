//! The verbs. Each one checks its outputs up front, does the work, writes its
//! files and then the manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use log::{info, warn};
use rayon::prelude::*;
use serde_json::{json, Value};

use super::config::{RunConfig, SweepSpec, TemplateKind};
use super::output::{FileDigest, Manifest, OutputDir};
use super::{Cli, CliError, Command};
use crate::constants::{charging_energy_ghz, parallel_plate_capacitance, FEMTOFARAD, MICRON};
use crate::defaults::PhysicalDefaults;
use crate::geometry::{to_toml_string, validate, Axis, FlipmonParams, NetRole, PlatePairParams, ValidatedGeometry};
use crate::loss::{extract_tangent, g_from_chi, predict_t1, LossError, LossTangentTable};
use crate::participation::{bulk_participation, full_report, read_participation_csv, ParticipationReport, RegionId};
use crate::records::{read_records_path, MeasuredQubitRecord, HEADER};
use crate::render::{render_svg, RenderOptions};
use crate::solver::{
    build_grid, capacitance_matrix, field_slice, FieldSlice, solve, write_field_dump, CapacitanceRun, DriveVector, FieldSolution,
    GridPolicy, RectilinearGrid, SlicePlane,
};
use crate::transmon::{ec_from_capacitance, fit_ej_ec, spectrum, ChargingEnergy, TransmonParams};

const DEFAULT_OUT: &str = "flipmon-out";
const MANIFEST: &str = "manifest.json";

struct Run {
    cfg: RunConfig,
    out: OutputDir,
    jobs: usize,
    inputs: Vec<FileDigest>,
    warnings: Vec<String>,
    results: serde_json::Map<String, Value>,
}

impl Run {
    fn input(&mut self, path: &Path, what: &str) -> Result<(), CliError> {
        if !path.is_file() {
            return Err(CliError::Config(format!("{what} {} not found", path.display())));
        }
        self.inputs.push(FileDigest::of(path)?);
        Ok(())
    }

    fn warn(&mut self, msg: String) {
        warn!("{msg}");
        self.warnings.push(msg);
    }

    fn result(&mut self, key: &str, v: impl Into<Value>) {
        self.results.insert(key.into(), v.into());
    }
}

pub(super) fn execute(cli: Cli, argv: Vec<String>) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => {
            if !p.is_file() {
                return Err(CliError::Config(format!("config {} not found", p.display())));
            }
            RunConfig::load(p)?
        }
        None => RunConfig::default(),
    };
    if cli.geometry.is_some() && cli.template.is_some() {
        return Err(CliError::Config("give --geometry or --template, not both".into()));
    }
    if let Some(g) = &cli.geometry {
        cfg.geometry = Some(g.clone());
    }
    if let Some(t) = cli.template {
        cfg.template = Some(t);
        cfg.geometry = None;
    }
    cfg.params.extend(cli.set.iter().cloned());
    cfg.deterministic |= cli.deterministic;
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = Some(j);
    }
    let jobs = cfg
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if jobs == 0 {
        return Err(CliError::Config("--jobs must be at least 1".into()));
    }
    let out = OutputDir::new(cfg.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)), cli.force);
    let mut run = Run {
        cfg,
        out,
        jobs,
        inputs: Vec::new(),
        warnings: Vec::new(),
        results: serde_json::Map::new(),
    };
    if let Some(p) = &cli.config {
        run.input(p, "config")?;
    }
    if let Some(g) = run.cfg.geometry.clone() {
        run.input(&g, "geometry file")?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let name = cli.command.name();
    pool.install(|| match &cli.command {
        Command::Cap => cmd_cap(&mut run),
        Command::Participation {
            slices,
            error_estimate,
            dump,
        } => cmd_participation(&mut run, slices, *error_estimate, *dump),
        Command::Sweep {
            param,
            values,
            range,
            outputs,
        } => {
            let mut spec = run.cfg.sweep.clone().unwrap_or_default();
            if let Some(p) = param {
                spec.parameter = p.clone();
            }
            if !values.is_empty() {
                spec.values = Some(values.clone());
                spec.range = None;
            }
            if let Some(r) = range {
                spec.range = Some(r.clone());
                if values.is_empty() {
                    spec.values = None;
                }
            }
            if !outputs.is_empty() {
                spec.outputs = Some(outputs.clone());
            }
            cmd_sweep(&mut run, &spec)
        }
        Command::Fit {
            input,
            participation,
            regions,
            background_t1_us,
        } => cmd_fit(&mut run, input, participation.as_deref(), regions, *background_t1_us),
        Command::Lossbudget {
            tangents,
            participation,
            f01,
        } => cmd_lossbudget(&mut run, tangents, participation.as_deref(), *f01),
        Command::Slice {
            planes,
            drive,
            samples,
            linear,
            full,
            dump,
        } => cmd_slice(&mut run, planes, drive, *samples, *linear, *full, *dump),
    })?;

    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: name.into(),
        argv,
        jobs: run.jobs,
        deterministic: run.cfg.deterministic,
        config: serde_json::to_value(&run.cfg).map_err(|e| CliError::Config(e.to_string()))?,
        defaults: PhysicalDefaults::default(),
        inputs: run.inputs.clone(),
        outputs: run.out.written().to_vec(),
        warnings: run.warnings.clone(),
        results: Value::Object(run.results.clone()),
    };
    run.out.write(MANIFEST, manifest.to_json())?;
    println!("wrote {} files to {}", run.out.written().len(), run.out.root().display());
    Ok(())
}

fn check_outputs(run: &Run, names: &[String]) -> Result<(), CliError> {
    let mut all = names.to_vec();
    all.push(MANIFEST.into());
    run.out.check(&all)
}

struct Analysis {
    grid: Arc<RectilinearGrid>,
    cap: CapacitanceRun,
    pads: (String, String),
    charging: ChargingEnergy,
}

fn mesh_grid(cfg: &RunConfig, overrides: &[(String, f64)], policy: &GridPolicy) -> Result<Arc<RectilinearGrid>, CliError> {
    let g = Arc::new(validate(cfg.device(overrides)?)?);
    let grid = build_grid(g, policy)?;
    let d = grid.dims();
    info!("grid {}x{}x{} = {} nodes", d[0], d[1], d[2], grid.node_count());
    Ok(Arc::new(grid))
}

fn analyze(cfg: &RunConfig, overrides: &[(String, f64)], policy: &GridPolicy) -> Result<Analysis, CliError> {
    analyze_grid(cfg, mesh_grid(cfg, overrides, policy)?)
}

fn analyze_grid(cfg: &RunConfig, grid: Arc<RectilinearGrid>) -> Result<Analysis, CliError> {
    let pads = cfg.pads(grid.geometry())?;
    let cap = capacitance_matrix(&grid, &cfg.solver_settings())?;
    let charging = ec_from_capacitance(&cap.matrix, (&pads.0, &pads.1), cfg.qubit.c_j_ff * FEMTOFARAD)?;
    Ok(Analysis {
        grid,
        cap,
        pads,
        charging,
    })
}

impl Analysis {
    fn qubit_mode(&self, cfg: &RunConfig) -> Result<FieldSolution, CliError> {
        Ok(self
            .cap
            .qubit_mode_solution(&self.pads.0, &self.pads.1, &cfg.solver_settings())?)
    }
}

fn capacitance_csv(a: &Analysis) -> String {
    let m = &a.cap.matrix;
    let mut s = String::from("net");
    for n in &m.nets {
        s.push(',');
        s.push_str(n);
    }
    s.push('\n');
    for (i, n) in m.nets.iter().enumerate() {
        s.push_str(n);
        for v in &m.entries[i] {
            let _ = write!(s, ",{v:.12e}");
        }
        s.push('\n');
    }
    s
}

fn charging_csv(a: &Analysis, ej_ghz: f64) -> Result<(String, Value), CliError> {
    let c = &a.charging;
    let spec = spectrum(&TransmonParams::new(ej_ghz, c.ec_ghz))?;
    let rows: [(&str, f64); 10] = [
        ("C12_fF", c.c12 / FEMTOFARAD),
        ("C1g_fF", c.c1g / FEMTOFARAD),
        ("C2g_fF", c.c2g / FEMTOFARAD),
        ("C_J_fF", c.c_j / FEMTOFARAD),
        ("C_sigma_fF", c.c_sigma / FEMTOFARAD),
        ("E_C_MHz", c.ec_ghz * 1e3),
        ("matrix_asymmetry", a.cap.matrix.asymmetry),
        ("E_J_GHz", ej_ghz),
        ("f01_GHz", spec.f01),
        ("eta_MHz", spec.anharmonicity * 1e3),
    ];
    let mut s = String::from("quantity,value\n");
    let mut obj = serde_json::Map::new();
    for (k, v) in rows {
        let _ = writeln!(s, "{k},{v:.9e}");
        obj.insert(k.into(), json!(v));
    }
    obj.insert("pads".into(), json!([a.pads.0, a.pads.1]));
    Ok((s, Value::Object(obj)))
}

fn write_cap_files(run: &mut Run, a: &Analysis) -> Result<(), CliError> {
    if a.cap.matrix.asymmetry > 0.02 {
        run.warn(format!(
            "capacitance matrix asymmetry {:.3}% before symmetrization",
            a.cap.matrix.asymmetry * 100.0
        ));
    }
    run.out.write("capacitance.csv", capacitance_csv(a))?;
    let (text, summary) = charging_csv(a, run.cfg.qubit.ej_ghz)?;
    run.out.write("charging.csv", text)?;
    run.out.write("geometry.toml", to_toml_string(a.grid.geometry().geometry())?)?;
    run.result("charging", summary);
    let d = a.grid.dims();
    run.result("mesh", json!({ "dims": d, "nodes": a.grid.node_count() }));
    let c = &a.charging;
    println!(
        "C12 = {:.3} fF, C1g = {:.3} fF, C2g = {:.3} fF, C_sigma = {:.3} fF, E_C/h = {:.2} MHz",
        c.c12 / FEMTOFARAD,
        c.c1g / FEMTOFARAD,
        c.c2g / FEMTOFARAD,
        c.c_sigma / FEMTOFARAD,
        c.ec_ghz * 1e3
    );
    Ok(())
}

const CAP_FILES: [&str; 3] = ["capacitance.csv", "charging.csv", "geometry.toml"];

fn cmd_cap(run: &mut Run) -> Result<(), CliError> {
    check_outputs(run, &CAP_FILES.map(String::from))?;
    let a = analyze(&run.cfg, &[], &run.cfg.mesh)?;
    write_cap_files(run, &a)
}

fn slice_stem(plane: &SlicePlane) -> String {
    let pos = format!("{}", plane.position).replace('-', "m").replace('.', "p");
    format!("slice_{}{pos}", plane.axis)
}

fn slice_names(planes: &[SlicePlane]) -> Vec<String> {
    planes
        .iter()
        .flat_map(|p| {
            let s = slice_stem(p);
            [format!("{s}.csv"), format!("{s}.svg")]
        })
        .collect()
}

fn config_planes(cfg: &RunConfig) -> Result<Vec<SlicePlane>, CliError> {
    cfg.slices
        .iter()
        .map(|s| s.parse::<SlicePlane>().map_err(CliError::Config))
        .collect()
}

fn write_slices(run: &mut Run, sol: &FieldSolution, planes: &[SlicePlane], options: &RenderOptions) -> Result<(), CliError> {
    let slices: Vec<FieldSlice> = planes.iter().map(|p| field_slice(sol, p)).collect::<Result<_, _>>()?;
    let mut maxima = serde_json::Map::new();
    for (plane, slice) in planes.iter().zip(slices) {
        let stem = slice_stem(plane);
        run.out.write(&format!("{stem}.csv"), slice.to_csv())?;
        run.out.write(&format!("{stem}.svg"), render_svg(&slice, options))?;
        maxima.insert(stem, json!(slice.max()));
    }
    if !maxima.is_empty() {
        run.result("slice_max_field_v_per_m", Value::Object(maxima));
    }
    Ok(())
}

/// Window around the non-ground conductors the plane cuts, with a margin of a
/// quarter of their extent plus 10 um, clipped to the domain.
fn auto_window(g: &ValidatedGeometry, plane: &SlicePlane) -> Option<[[f64; 2]; 2]> {
    let a = plane.axis.index();
    let (u, v) = plane.axis.others();
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for (i, solid) in g.solids().iter().enumerate() {
        let Some(net) = g.solid_net(i) else { continue };
        let b = &solid.bounds;
        if g.electrical_nets()[net].role == NetRole::Ground || plane.position < b.min[a] || plane.position > b.max[a] {
            continue;
        }
        for (k, ax) in [u, v].into_iter().enumerate() {
            lo[k] = lo[k].min(b.min[ax.index()]);
            hi[k] = hi[k].max(b.max[ax.index()]);
        }
    }
    if !lo[0].is_finite() {
        return None;
    }
    let d = g.domain();
    let w = |k: usize, ax: Axis| {
        let m = 0.25 * (hi[k] - lo[k]) + 10.0;
        [(lo[k] - m).max(d.min[ax.index()]), (hi[k] + m).min(d.max[ax.index()])]
    };
    Some([w(0, u), w(1, v)])
}

fn zoom(grid: &RectilinearGrid, planes: Vec<SlicePlane>) -> Vec<SlicePlane> {
    planes
        .into_iter()
        .map(|p| match (p.window, auto_window(grid.geometry(), &p)) {
            (None, Some([u, v])) => p.with_window(u, v),
            _ => p,
        })
        .collect()
}

fn check_planes(grid: &RectilinearGrid, planes: &[SlicePlane]) -> Result<(), CliError> {
    let d = grid.geometry().domain();
    for p in planes {
        let a = p.axis.index();
        if p.position < d.min[a] || p.position > d.max[a] {
            return Err(CliError::Config(format!(
                "slice plane {}={} um lies outside the domain [{}, {}]",
                p.axis, p.position, d.min[a], d.max[a]
            )));
        }
    }
    Ok(())
}

fn write_dump(run: &mut Run, sol: &FieldSolution) -> Result<(), CliError> {
    run.out.prepare()?;
    write_field_dump(sol, &run.out.path("field"))?;
    run.out.record("field.toml")?;
    run.out.record("field.bin")?;
    Ok(())
}

fn report_json(r: &ParticipationReport) -> Value {
    let values: serde_json::Map<String, Value> = r.values.iter().map(|(k, v)| (k.name().to_string(), json!(v))).collect();
    json!({ "values": values, "bulk_sum": r.bulk_sum, "sa_convention": r.sa_convention })
}

fn cmd_participation(run: &mut Run, slices: &[SlicePlane], error_estimate: bool, dump: bool) -> Result<(), CliError> {
    let mut planes = config_planes(&run.cfg)?;
    planes.extend(slices.iter().cloned());
    let mut names: Vec<String> = CAP_FILES.map(String::from).to_vec();
    names.extend(["participation.csv".into(), "participation.txt".into()]);
    names.extend(slice_names(&planes));
    if dump {
        names.extend(["field.toml".into(), "field.bin".into()]);
    }
    check_outputs(run, &names)?;

    let a = analyze(&run.cfg, &[], &run.cfg.mesh)?;
    check_planes(&a.grid, &planes)?;
    let planes = zoom(&a.grid, planes);
    let sol = a.qubit_mode(&run.cfg)?;
    let mut report = full_report(&sol)?;
    if error_estimate {
        let coarse_policy = run.cfg.mesh.scaled(2.0);
        let coarse = analyze(&run.cfg, &[], &coarse_policy)?;
        let coarse_report = full_report(&coarse.qubit_mode(&run.cfg)?)?;
        report = report.with_error_estimate(&coarse_report);
    }
    if (report.bulk_sum - 1.0).abs() > 0.02 {
        run.warn(format!("bulk participations sum to {:.4}", report.bulk_sum));
    }
    write_cap_files(run, &a)?;
    run.out.write("participation.csv", report.to_csv())?;
    let table = report.to_table();
    run.out.write("participation.txt", &table)?;
    print!("{table}");
    run.result("participation", report_json(&report));
    write_slices(run, &sol, &planes, &RenderOptions::default())?;
    if dump {
        write_dump(run, &sol)?;
    }
    Ok(())
}

fn cmd_slice(
    run: &mut Run,
    planes: &[SlicePlane],
    drive: &[(String, f64)],
    samples: Option<(usize, usize)>,
    linear: bool,
    full: bool,
    dump: bool,
) -> Result<(), CliError> {
    let mut planes: Vec<SlicePlane> = if planes.is_empty() {
        config_planes(&run.cfg)?
    } else {
        planes.to_vec()
    };
    if planes.is_empty() {
        return Err(CliError::Config("slice needs at least one --plane (e.g. --plane y=0)".into()));
    }
    if let Some((nu, nv)) = samples {
        planes = planes.into_iter().map(|p| p.with_samples(nu, nv)).collect();
    }
    let mut names = slice_names(&planes);
    if dump {
        names.extend(["field.toml".into(), "field.bin".into()]);
    }
    check_outputs(run, &names)?;

    let grid = mesh_grid(&run.cfg, &[], &run.cfg.mesh)?;
    check_planes(&grid, &planes)?;
    if !full {
        planes = zoom(&grid, planes);
    }
    let sol = if drive.is_empty() {
        let a = analyze_grid(&run.cfg, grid)?;
        run.result("drive", json!({ "qubit_mode": [a.pads.0, a.pads.1] }));
        a.qubit_mode(&run.cfg)?
    } else {
        let dv = drive.iter().fold(DriveVector::new(), |d, (n, v)| d.with(n, *v));
        run.result("drive", json!(dv.0));
        solve(&grid, &dv, &run.cfg.solver_settings())?
    };
    let options = RenderOptions {
        log_decades: if linear { None } else { RenderOptions::default().log_decades },
        ..RenderOptions::default()
    };
    write_slices(run, &sol, &planes, &options)?;
    if dump {
        write_dump(run, &sol)?;
    }
    Ok(())
}

/// Charging energy of the bare parallel-plate capacitor of a template, MHz.
fn plate_ec_mhz(kind: TemplateKind, params: &[(String, f64)]) -> Option<f64> {
    let (area, gap) = match kind {
        TemplateKind::Flipmon => {
            let mut p = FlipmonParams::default();
            for (k, v) in params {
                p.set(k, *v).ok()?;
            }
            (p.plate_overlap_area(), p.gap_d)
        }
        TemplateKind::Plates => {
            let mut p = PlatePairParams::default();
            for (k, v) in params {
                p.set(k, *v).ok()?;
            }
            (p.side * p.side, p.gap_d)
        }
        TemplateKind::Planar => return None,
    };
    let c = parallel_plate_capacitance(area * MICRON * MICRON, gap * MICRON, 1.0);
    Some(charging_energy_ghz(c) * 1e3)
}

#[derive(Debug, Clone)]
struct SweepPoint {
    value: f64,
    outputs: BTreeMap<&'static str, Option<f64>>,
}

fn sweep_point(cfg: &RunConfig, param: &str, value: f64, wanted: &[String]) -> Result<SweepPoint, CliError> {
    let overrides = [(param.to_string(), value)];
    let a = analyze(cfg, &overrides, &cfg.mesh)?;
    let c = &a.charging;
    let needs = |k: &str| wanted.iter().any(|w| w == k);
    let mut o: BTreeMap<&'static str, Option<f64>> = BTreeMap::new();
    o.insert("C12_fF", Some(c.c12 / FEMTOFARAD));
    o.insert("C1g_fF", Some(c.c1g / FEMTOFARAD));
    o.insert("C2g_fF", Some(c.c2g / FEMTOFARAD));
    o.insert("C_sigma_fF", Some(c.c_sigma / FEMTOFARAD));
    o.insert("E_C_MHz", Some(c.ec_ghz * 1e3));
    let params: Vec<(String, f64)> = cfg.params.iter().map(|(k, v)| (k.clone(), *v)).chain(overrides).collect();
    o.insert("E_C_plate_MHz", plate_ec_mhz(cfg.template_kind(), &params));
    if needs("p_Vacuum") || needs("p_VacuumGapOnly") {
        let sol = a.qubit_mode(cfg)?;
        o.insert("p_Vacuum", Some(bulk_participation(&sol, RegionId::Vacuum)?));
        o.insert("p_VacuumGapOnly", Some(bulk_participation(&sol, RegionId::VacuumGapOnly)?));
    }
    if needs("f01_GHz") || needs("eta_MHz") {
        let s = spectrum(&TransmonParams::new(cfg.qubit.ej_ghz, c.ec_ghz))?;
        o.insert("f01_GHz", Some(s.f01));
        o.insert("eta_MHz", Some(s.anharmonicity * 1e3));
    }
    Ok(SweepPoint { value, outputs: o })
}

/// `(max - min) / mean` and `last / first`.
fn spread(values: &[f64]) -> (f64, f64) {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    ((max - min) / mean, values[values.len() - 1] / values[0])
}

fn cmd_sweep(run: &mut Run, spec: &SweepSpec) -> Result<(), CliError> {
    if run.cfg.geometry.is_some() {
        return Err(CliError::Config("sweeps vary template parameters; drop the geometry file".into()));
    }
    if spec.parameter.is_empty() {
        return Err(CliError::Config("sweep needs --param".into()));
    }
    let points = spec.points()?;
    let outputs = spec.outputs()?;
    check_outputs(run, &["sweep.csv".into()])?;
    // Every point must give a valid geometry before any solve starts.
    for &v in &points {
        validate(run.cfg.device(&[(spec.parameter.clone(), v)])?)
            .map_err(|e| CliError::Config(format!("{} = {v}: {e}", spec.parameter)))?;
    }

    let cfg = run.cfg.clone();
    let rows: Vec<SweepPoint> = points
        .par_iter()
        .map(|&v| {
            info!("sweep {} = {v}", spec.parameter);
            sweep_point(&cfg, &spec.parameter, v, &outputs)
        })
        .collect::<Result<_, _>>()?;

    let mut csv = format!("{},{}\n", spec.parameter, outputs.join(","));
    for r in &rows {
        csv.push_str(&format!("{}", r.value));
        for o in &outputs {
            match r.outputs.get(o.as_str()).copied().flatten() {
                Some(v) => {
                    let _ = write!(csv, ",{v:.9e}");
                }
                None => csv.push(','),
            }
        }
        csv.push('\n');
    }
    run.out.write("sweep.csv", csv)?;

    let ec: Vec<f64> = rows.iter().map(|r| r.outputs["E_C_MHz"].unwrap()).collect();
    let increasing = ec.windows(2).all(|w| w[1] > w[0]);
    let ascending = points.windows(2).all(|w| w[1] > w[0]);
    let (s_net, r_net) = spread(&ec);
    let mut summary = json!({
        "parameter": spec.parameter,
        "points": points,
        "E_C_MHz": ec,
        "E_C_increasing": increasing,
        "E_C_spread": s_net,
        "E_C_ratio_last_first": r_net,
    });
    println!(
        "{} from {} to {}: E_C/h {:.2} -> {:.2} MHz, spread {:.2}% (+/-{:.2}%), ratio {:.4}",
        spec.parameter,
        points[0],
        points[points.len() - 1],
        ec[0],
        ec[ec.len() - 1],
        s_net * 100.0,
        s_net * 50.0,
        r_net
    );
    let plate: Option<Vec<f64>> = rows.iter().map(|r| r.outputs["E_C_plate_MHz"]).collect();
    if let Some(plate) = plate {
        let (s_plate, r_plate) = spread(&plate);
        summary["E_C_plate_MHz"] = json!(plate);
        summary["E_C_plate_spread"] = json!(s_plate);
        summary["E_C_plate_ratio_last_first"] = json!(r_plate);
        println!(
            "pure parallel plate: spread {:.2}% (+/-{:.2}%), ratio {:.4}",
            s_plate * 100.0,
            s_plate * 50.0,
            r_plate
        );
    }
    println!("claimed variation for a 5 +/- 0.4 um gap: < 3%");
    if ascending && spec.parameter == "gap_d" && !increasing {
        run.warn("E_C is not strictly increasing in gap_d".into());
    }
    run.result("sweep", summary);
    Ok(())
}

fn fmt_opt(v: Option<f64>, prec: usize) -> String {
    v.map(|x| format!("{x:.prec$}")).unwrap_or_default()
}

struct FitRow {
    ej: Option<f64>,
    ec: Option<f64>,
    g: Option<(f64, f64)>,
    tan_delta: Option<f64>,
    notes: Vec<String>,
}

fn fit_row(
    row: usize,
    r: &MeasuredQubitRecord,
    loss: Option<&(BTreeMap<RegionId, f64>, RegionId)>,
    gamma0: f64,
) -> Result<FitRow, CliError> {
    let mut out = FitRow {
        ej: None,
        ec: None,
        g: None,
        tan_delta: None,
        notes: Vec::new(),
    };
    if let Some(eta) = r.eta {
        let f = fit_ej_ec(r.f_q, eta / 1e3)
            .map_err(|e| CliError::Numerical(format!("row {row} ({}): {e}", r.label)))?;
        out.ej = Some(f.ej);
        out.ec = Some(f.ec);
    }
    if r.eta.is_some() && r.chi.is_some() {
        match g_from_chi(r) {
            Ok(c) => out.g = Some((c.g, c.g_alt)),
            Err(e) => out.notes.push(format!("row {row} ({}): no g: {e}", r.label)),
        }
    }
    if let (Some((map, region)), Some(_)) = (loss, r.t1) {
        match extract_tangent(r, map, *region, gamma0) {
            Ok(t) => out.tan_delta = Some(t.tan_delta),
            Err(e @ LossError::NegativeTangent { .. }) => {
                out.notes.push(format!("row {row} ({}): no tan delta: {e}", r.label))
            }
            Err(e) => return Err(CliError::from(e)),
        }
    }
    Ok(out)
}

fn read_participation(run: &mut Run, path: &Path) -> Result<BTreeMap<RegionId, f64>, CliError> {
    run.input(path, "participation file")?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    read_participation_csv(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn cmd_fit(
    run: &mut Run,
    input: &Path,
    participation: Option<&Path>,
    regions: &[RegionId],
    background_t1_us: Option<f64>,
) -> Result<(), CliError> {
    run.input(input, "input")?;
    check_outputs(run, &["fit.csv".into()])?;
    let records = read_records_path(input)?;
    for (i, r) in records.iter().enumerate() {
        if let Some(eta) = r.eta {
            if eta / 1e3 >= r.f_q {
                return Err(CliError::Config(format!(
                    "row {} ({}): eta = {eta} MHz is not below f_q = {} GHz",
                    i + 1,
                    r.label,
                    r.f_q
                )));
            }
        }
    }
    let gamma0 = match background_t1_us {
        Some(t) if t > 0.0 && t.is_finite() => 1e6 / t,
        Some(t) => return Err(CliError::Config(format!("background T1 must be > 0, got {t}"))),
        None => 0.0,
    };
    let loss = match participation {
        Some(p) => {
            let map = read_participation(run, p)?;
            if regions.is_empty() {
                return Err(CliError::Config("--regions is empty".into()));
            }
            let total: f64 = regions.iter().map(|r| map.get(r).copied().unwrap_or(0.0)).sum();
            if !(total > 0.0) {
                return Err(CliError::Config("selected regions have zero participation".into()));
            }
            Some((BTreeMap::from([(regions[0], total)]), regions[0]))
        }
        None => None,
    };

    let rows: Vec<FitRow> = records
        .par_iter()
        .enumerate()
        .map(|(i, r)| fit_row(i + 1, r, loss.as_ref(), gamma0))
        .collect::<Result<_, _>>()?;

    let mut header: Vec<String> = HEADER.iter().map(|s| s.to_string()).collect();
    header.extend(["EJ_GHz", "EC_MHz", "EJ_over_EC", "g_MHz", "g_alt_MHz"].map(String::from));
    let tan_col = loss.as_ref().map(|_| {
        let names: Vec<&str> = regions.iter().map(|r| r.name()).collect();
        format!("tan_delta_{}", names.join("+"))
    });
    if let Some(c) = &tan_col {
        header.push(c.clone());
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).map_err(|e| CliError::Io(e.to_string()))?;
    let mut fitted = 0;
    for (r, f) in records.iter().zip(&rows) {
        let mut cells = r.cells();
        cells.push(fmt_opt(f.ej, 6));
        cells.push(fmt_opt(f.ec.map(|x| x * 1e3), 4));
        cells.push(fmt_opt(f.ej.zip(f.ec).map(|(j, c)| j / c), 3));
        cells.push(fmt_opt(f.g.map(|g| g.0), 3));
        cells.push(fmt_opt(f.g.map(|g| g.1), 3));
        if tan_col.is_some() {
            cells.push(f.tan_delta.map(|t| format!("{t:.4e}")).unwrap_or_default());
        }
        w.write_record(&cells).map_err(|e| CliError::Io(e.to_string()))?;
        fitted += f.ej.is_some() as usize;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    run.out.write("fit.csv", bytes)?;
    for f in &rows {
        for n in &f.notes {
            run.warn(n.clone());
        }
    }
    println!("{} rows, {fitted} fitted (rows without eta are left blank)", records.len());
    run.result("fit", json!({ "rows": records.len(), "fitted": fitted }));
    Ok(())
}

fn cmd_lossbudget(run: &mut Run, tangents: &Path, participation: Option<&Path>, f01: f64) -> Result<(), CliError> {
    run.input(tangents, "tangent file")?;
    let text = std::fs::read_to_string(tangents).map_err(|e| CliError::Io(format!("{}: {e}", tangents.display())))?;
    let table = LossTangentTable::from_toml_str(&text)?;
    table.validate()?;
    if !(f01 > 0.0 && f01.is_finite()) {
        return Err(CliError::Config(format!("--f01 must be > 0, got {f01}")));
    }
    let mut names = vec!["budget.csv".to_string()];
    if participation.is_none() {
        names.push("participation.csv".into());
    }
    check_outputs(run, &names)?;

    let map = match participation {
        Some(p) => read_participation(run, p)?,
        None => {
            let a = analyze(&run.cfg, &[], &run.cfg.mesh)?;
            let report = full_report(&a.qubit_mode(&run.cfg)?)?;
            run.out.write("participation.csv", report.to_csv())?;
            report.values
        }
    };
    let budget = predict_t1(&map, &table, f01)?;
    run.out.write("budget.csv", budget.to_csv())?;
    match budget.t1_us {
        Some(t1) => println!("predicted T1 = {t1:.3} us (Q = {:.4e})", budget.quality_factor()),
        None => {
            println!("predicted T1 unbounded: no loss channel has a nonzero tangent");
            run.warn("all loss channels are zero; T1 is unbounded".into());
        }
    }
    run.result(
        "budget",
        json!({ "f01_GHz": f01, "inv_Q": budget.inv_q, "T1_us": budget.t1_us, "unbounded": budget.is_unbounded() }),
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plate_model_scales_as_gap() {
        let a = plate_ec_mhz(TemplateKind::Plates, &[("gap_d".into(), 4.6)]).unwrap();
        let b = plate_ec_mhz(TemplateKind::Plates, &[("gap_d".into(), 5.4)]).unwrap();
        assert!((b / a - 5.4 / 4.6).abs() < 1e-12);
        assert!(plate_ec_mhz(TemplateKind::Planar, &[]).is_none());
        assert!(plate_ec_mhz(TemplateKind::Flipmon, &[("nope".into(), 1.0)]).is_none());
    }

    #[test]
    fn slice_file_stems() {
        assert_eq!(slice_stem(&"y=0".parse().unwrap()), "slice_y0");
        assert_eq!(slice_stem(&"z=-2.5".parse().unwrap()), "slice_zm2p5");
    }

    #[test]
    fn spread_and_ratio() {
        let (s, r) = spread(&[1.0, 1.5, 2.0]);
        assert!((s - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(r, 2.0);
    }
}
