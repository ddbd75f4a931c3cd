use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use wellmirror::config::{ConfigError, RunConfig};
use wellmirror::constants::HBAR;
use wellmirror::experiment::{Engine, RunSeries};
use wellmirror::io::{self, fmt_f64, CsvHeader};
use wellmirror::mirror::{self, MirrorError};
use wellmirror::momentum::{self, MomentumBox};
use wellmirror::phaseshift;
use wellmirror::pilotwave;
use wellmirror::wellqm::{self, ModeIndex};
use wellmirror::{Error, Vec3};

/// Loaded configuration with its canonical echo and hash.
pub struct Context {
    pub config: RunConfig,
    pub echo: String,
    pub hash: String,
}

impl Context {
    pub fn load(path: Option<&Path>, seed: Option<u64>) -> Result<Self, Error> {
        let path = path.ok_or_else(|| ConfigError::Invalid {
            field: "--config".into(),
            message: "a configuration file is required".into(),
        })?;
        let text = io::read_file(path)?;
        let mut config = RunConfig::from_toml_str(&text)?;
        if let Some(seed) = seed {
            config.seed = seed;
        }
        let echo = config.to_toml_string();
        let hash = Sha256::digest(echo.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
        Ok(Self { config, echo, hash })
    }

    fn header(&self, command: &str) -> CsvHeader {
        CsvHeader::new(command, &self.hash, self.config.seed)
    }
}

/// Files to write (relative name, contents) and a printable summary.
#[derive(Default)]
pub struct Artifacts {
    pub files: Vec<(String, String)>,
    pub summary: String,
}

impl Artifacts {
    fn file(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    fn line(&mut self, text: impl AsRef<str>) {
        self.summary.push_str(text.as_ref());
        self.summary.push('\n');
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

pub fn levels(ctx: &Context) -> Result<Artifacts, Error> {
    let c = &ctx.config;
    let range = c.levels.min_index..=c.levels.max_index;
    let mut rows = Vec::new();
    for nx in range.clone() {
        for ny in range.clone() {
            for nz in range.clone() {
                let mode = ModeIndex::new(nx, ny, nz)?;
                rows.push((mode, wellqm::energy(&c.geometry, mode)));
            }
        }
    }
    rows.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let table: Vec<(String, Vec<f64>)> = rows
        .iter()
        .map(|(m, e)| (format!("{},{},{}", m.nx(), m.ny(), m.nz()), vec![*e]))
        .collect();
    let mut a = Artifacts::default();
    a.file("levels.csv", io::labeled_table(&ctx.header("levels"), &["nx", "ny", "nz", "energy_j"], &table));
    a.line(format!("{} level(s)", rows.len()));
    if let Some((m, e)) = rows.first() {
        a.line(format!("lowest {m}: {e:.6e} J"));
    }
    Ok(a)
}

pub fn pdf(ctx: &Context) -> Result<Artifacts, Error> {
    let c = &ctx.config;
    let mode = c.state.eigenmode()?;
    let total = momentum::integrate_prob(&c.geometry, mode, &MomentumBox::everything())?;
    let sides = c.geometry.sides();
    let n = c.pdf.points;
    let hw = c.pdf.half_width;
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let u = -hw + 2.0 * hw * i as f64 / (n - 1) as f64;
            let mut row = Vec::with_capacity(6);
            for (axis, &m) in mode.as_array().iter().enumerate() {
                let p = u * std::f64::consts::PI * HBAR / sides[axis];
                row.push(p);
                row.push(momentum::phi_sq_axis(sides[axis], m, p));
            }
            row
        })
        .collect();
    let header = ctx.header("pdf").with("mode", mode).with("grid_unit", "pi*hbar/L per axis");
    let mut a = Artifacts::default();
    a.file(
        "pdf_marginals.csv",
        io::float_table(&header, &["p_x", "density_x", "p_y", "density_y", "p_z", "density_z"], rows.iter().map(|r| r.as_slice())),
    );
    a.file(
        "pdf_normalization.csv",
        io::labeled_table(&ctx.header("pdf"), &["quantity", "value"], &[("total_probability".into(), vec![total])]),
    );
    a.line(format!("mode {mode}: total probability {}", fmt_f64(total)));
    Ok(a)
}

pub fn sample(ctx: &Context) -> Result<Artifacts, Error> {
    let c = &ctx.config;
    let mode = c.state.eigenmode()?;
    let draws = momentum::sample_momenta(&c.geometry, mode, c.seed, c.sample.count);
    let rows: Vec<[f64; 3]> = draws.iter().map(|p| p.to_array()).collect();
    let mut a = Artifacts::default();
    a.file(
        "momenta.csv",
        io::float_table(&ctx.header("sample").with("mode", mode), &["p_x", "p_y", "p_z"], rows.iter().map(|r| r.as_slice())),
    );
    a.line(format!("{} momentum sample(s) from mode {mode}", rows.len()));
    Ok(a)
}

#[derive(Serialize)]
struct MirrorSummary {
    kappa: f64,
    decay_length: f64,
    evanescent_intensity: f64,
    saturation_intensity: f64,
    surface_potential: f64,
    barrier: mirror::Barrier,
    coherence_warning: Option<mirror::CoherenceWarning>,
}

pub fn bounce(ctx: &Context) -> Result<Artifacts, Error> {
    let c = &ctx.config;
    let m = &c.mirror;
    let kappa = mirror::decay_kappa(m)?;
    let profile = mirror::barrier_analysis(m)?;
    let summary = MirrorSummary {
        kappa,
        decay_length: mirror::decay_length(m)?,
        evanescent_intensity: mirror::evanescent_intensity(m)?,
        saturation_intensity: mirror::saturation_intensity(m.linewidth, m.wavelength),
        surface_potential: mirror::surface_potential(m)?,
        barrier: profile.barrier,
        coherence_warning: mirror::coherence_warning(m),
    };
    let z_start = c.bounce.start_decay_lengths / kappa;
    let potential = mirror::Potential::new(m)?;
    let points = c.bounce.profile_points;
    let z_lo = 0.02 / kappa;
    let profile_rows: Vec<[f64; 2]> = (0..points)
        .map(|i| {
            let z = z_lo + (z_start - z_lo) * i as f64 / (points - 1) as f64;
            [z, potential.value(z)]
        })
        .collect();
    let mut bounce_rows = Vec::new();
    let mut lost = 0;
    for &v in &c.bounce.speeds {
        let p_in = -m.atom_mass * v;
        match mirror::bounce(m, p_in, z_start) {
            Ok(o) => bounce_rows.push(("reflected".to_string(), vec![v, p_in, o.p_out, o.turning_point, o.max_energy_drift])),
            Err(MirrorError::SurfaceCollision { .. }) | Err(MirrorError::Capture) => {
                lost += 1;
                bounce_rows.push(("lost".to_string(), vec![v, p_in, 0.0, 0.0, 0.0]));
            }
            Err(e) => return Err(e.into()),
        }
    }
    let mut a = Artifacts::default();
    a.file("mirror.json", json(&summary));
    a.file("profile.csv", io::float_table(&ctx.header("bounce"), &["z", "potential"], profile_rows.iter().map(|r| r.as_slice())));
    a.file(
        "bounces.csv",
        io::labeled_table(
            &ctx.header("bounce").with("z_start", fmt_f64(z_start)),
            &["status", "speed_in", "p_in", "p_out", "turning_point", "max_energy_drift"],
            &bounce_rows,
        ),
    );
    match profile.barrier_height() {
        Some(h) => a.line(format!("barrier height {h:.6e} J at z = {:.6e} m", profile.barrier_z().unwrap_or(0.0))),
        None => a.line("no barrier: the potential is attractive everywhere"),
    }
    if let Some(w) = summary.coherence_warning {
        a.line(format!("warning: detuning only {:.1} linewidths; spontaneous emission is not negligible", w.detuning_ratio));
    }
    a.line(format!("{} bounce(s), {} lost", c.bounce.speeds.len(), lost));
    Ok(a)
}

pub fn phase(ctx: &Context) -> Result<Artifacts, Error> {
    let c = &ctx.config;
    let rho = c.phase.resolve(&c.mirror)?;
    let k = phaseshift::prefactor(rho, &c.mirror)?;
    let mut rows = Vec::new();
    for &p in &c.phase.momenta {
        let phi = phaseshift::phase_shift(&phaseshift::PhaseShiftInput { momentum_max: p, atomic_density: rho, mirror: c.mirror })?;
        let back = phaseshift::invert_momentum(phi, rho, &c.mirror)?;
        rows.push([p, phi, back]);
    }
    let header = ctx.header("phase").with("rho_in", fmt_f64(rho)).with("prefactor", fmt_f64(k));
    let mut a = Artifacts::default();
    a.file("phase.csv", io::float_table(&header, &["momentum", "phi", "momentum_inverted"], rows.iter().map(|r| r.as_slice())));
    a.line(format!("phase prefactor {k:.6e} rad/(kg m/s)^2 at rho_in = {rho:.6e} m^-3"));
    for r in &rows {
        a.line(format!("p = {:.6e} -> phi = {:.6e} rad", r[0], r[1]));
    }
    Ok(a)
}

fn series_summary(a: &mut Artifacts, series: &RunSeries) {
    let phases = series.observed_phases();
    let mean = if phases.is_empty() { 0.0 } else { phases.iter().sum::<f64>() / phases.len() as f64 };
    a.line(format!(
        "{} bounce(s), {} lost, mean observed phase {mean:.6e} rad",
        series.records.len(),
        series.lost_count()
    ));
}

pub fn simulate(ctx: &Context) -> Result<Artifacts, Error> {
    let c = &ctx.config;
    let engine = Engine::new(c.experiment_config()?)?;
    let model = c.theory_model()?;
    let series = engine.simulate(&model)?;
    let header = ctx.header("simulate").with("model", model.name());
    let mut a = Artifacts::default();
    a.file("series.csv", io::series_csv(&header, &series, c.experiment.noise_sigma));
    a.line(format!("model {}", model.name()));
    series_summary(&mut a, &series);
    Ok(a)
}

pub fn discriminate(ctx: &Context, series_path: Option<&Path>) -> Result<Artifacts, Error> {
    let c = &ctx.config;
    let engine = Engine::new(c.experiment_config()?)?;
    let mut a = Artifacts::default();
    let series = match series_path {
        Some(p) => {
            let s = io::parse_series_csv(&io::read_file(p)?)?;
            a.line(format!("series read from {}", p.display()));
            s
        }
        None => {
            let model = c.theory_model()?;
            a.line(format!("model {}", model.name()));
            let s = engine.simulate(&model)?;
            a.file(
                "series.csv",
                io::series_csv(&ctx.header("discriminate").with("model", model.name()), &s, c.experiment.noise_sigma),
            );
            s
        }
    };
    series_summary(&mut a, &series);
    let mut report = engine.hypothesis_test(&series)?;
    if c.experiment.power_analysis {
        report.required_bounces = Some(engine.required_bounces(c.experiment.target_sigma)?);
    }
    a.file("report.json", json(&report));
    a.line(format!("zero-signal p-value {:.6e} (z = {:.3})", report.zero_signal.p_value, report.zero_signal.z_score));
    a.line(format!(
        "distribution KS {:.4}, p-value {:.6e}",
        report.distribution.ks_statistic, report.distribution.p_value
    ));
    if let Some(mc) = report.distribution.mc_p_value {
        a.line(format!("distribution Monte Carlo p-value {mc:.6e} ({} replicates)", report.distribution.mc_replicates));
    }
    if let Some(r) = report.required_bounces {
        a.line(format!("required bounces at {} sigma: {r:?}", c.experiment.target_sigma));
    }
    a.line(format!("verdict: {}", report.verdict));
    Ok(a)
}

pub fn trajectory(ctx: &Context) -> Result<Artifacts, Error> {
    let c = &ctx.config;
    let state = c.state.build()?;
    let g = &c.geometry;
    let unit = pilotwave::beat_period(g, &state).unwrap_or_else(|| {
        let e = wellqm::energy(g, state.terms()[0].mode);
        2.0 * std::f64::consts::PI * HBAR / e
    });
    let t1 = c.pilot.duration * unit;
    let mut a = Artifacts::default();
    for (i, f) in c.pilot.starts.iter().enumerate() {
        let start = Vec3::new(f[0] * g.side_x, f[1] * g.side_y, f[2] * g.side_z);
        let traj = pilotwave::integrate_trajectory(g, &state, start, 0.0, t1, c.pilot.tolerance)?;
        let rows: Vec<[f64; 7]> = (0..traj.len())
            .map(|k| {
                let (p, v) = (traj.positions[k], traj.velocities[k]);
                [traj.times[k], p.x, p.y, p.z, v.x, v.y, v.z]
            })
            .collect();
        a.file(
            &format!("trajectory_{i}.csv"),
            io::float_table(&ctx.header("trajectory"), &["t", "x", "y", "z", "vx", "vy", "vz"], rows.iter().map(|r| r.as_slice())),
        );
        let end = traj.end();
        a.line(format!(
            "start {i}: {} step(s), displacement {:.6e} m",
            traj.len(),
            (end - start).norm()
        ));
    }
    Ok(a)
}
