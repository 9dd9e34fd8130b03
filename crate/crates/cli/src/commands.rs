use std::fs;
use std::path::Path;

use lcm_dilation::ando::{assemble, verify_ando_model, AndoJson, AndoMode, AndoOptions};
use lcm_dilation::gns::{minimal_dilation, DilationOptions, ModelJson, Provenance, TruncatedIsoRep};
use lcm_dilation::regularity::{check_mixed_cartesian, check_mixed_free, is_star_regular, Family, ZReport};
use lcm_dilation::representation::RepresentationJson;
use lcm_dilation::sample::Sampler;
use lcm_dilation::verify::{verify_model, VerificationReport};
use lcm_dilation::{MonoidSpec, Representation};
use serde::Serialize;
use serde_json::Value;

use crate::config::{self, Input, RunConfig};
use crate::{Cli, CliError, Command, Format};

pub struct Outcome {
    pub stdout: String,
    pub code: u8,
}

/// Flags merged over the config file.
struct Params {
    radius: Option<usize>,
    m: Option<usize>,
    tol: f64,
    mode: Option<AndoMode>,
    seed: Option<u64>,
    out: Option<std::path::PathBuf>,
    format: Format,
}

impl Params {
    fn merge(cli: &Cli, cfg: &RunConfig) -> Result<Self, CliError> {
        let p = Params {
            radius: cli.radius.or(cfg.radius),
            m: cli.m.or(cfg.m),
            tol: cli.tol.or(cfg.tol).unwrap_or(1e-8),
            mode: cli.mode.map(Into::into).or(cfg.mode),
            seed: cli.seed.or(cfg.seed),
            out: cli.out.clone().or_else(|| cfg.out.clone()),
            format: cli.format,
        };
        RunConfig { radius: p.radius, m: p.m, tol: Some(p.tol), ..Default::default() }.validate()?;
        Ok(p)
    }

    fn emit<T: Serialize>(&self, value: &T, text: impl FnOnce() -> String) -> String {
        match self.format {
            Format::Json => to_json(value),
            Format::Text => text() + "\n",
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Structure(format!("{}: {e}", path.display())))
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let input = match &cli.config {
        Some(path) => config::load(path)?,
        None => Input::Config(RunConfig::default(), None),
    };
    match (&cli.command, input) {
        (Command::Verify, Input::Result(v)) => {
            let p = Params::merge(cli, &RunConfig::default())?;
            cmd_verify(&p, v, cli.tol)
        }
        (Command::Verify, Input::Config(..)) => {
            Err(CliError::Structure("verify expects a dilate or ando output file".into()))
        }
        (_, Input::Result(_)) => Err(CliError::Structure("expected a config or representation file".into())),
        (Command::Sample { monoid, dim, family, count, norm_min, norm_max }, Input::Config(cfg, _)) => {
            let p = Params::merge(cli, &cfg)?;
            let spec = monoid
                .clone()
                .or(cfg.monoid.clone())
                .ok_or_else(|| CliError::Structure("sample needs --monoid".into()))?;
            let req = SampleRequest {
                spec,
                dim: dim.or(cfg.dim).unwrap_or(2),
                count: count.or(cfg.count).unwrap_or(1),
                kind: (*family).into(),
                norms: (*norm_min, *norm_max),
            };
            cmd_sample(&p, &req)
        }
        (cmd, Input::Config(cfg, rep)) => {
            let p = Params::merge(cli, &cfg)?;
            let rep = rep.ok_or_else(|| CliError::Structure("no representation given; pass --config".into()))?;
            match cmd {
                Command::Check => cmd_check(&p, &rep),
                Command::Dilate => cmd_dilate(&p, &rep),
                Command::Ando => cmd_ando(&p, &rep),
                Command::Verify | Command::Sample { .. } => unreachable!(),
            }
        }
    }
}

#[derive(Serialize)]
struct MixedReport {
    operator: String,
    condition: &'static str,
    report: ZReport,
}

#[derive(Serialize)]
struct CheckReport {
    monoid: MonoidSpec,
    validation: VerificationReport,
    regularity: ZReport,
    mixed: Vec<MixedReport>,
    overall: bool,
}

/// Splits a representation of `NA(k) x P` or `NA(k) * P` (k ≤ 2) into the
/// `S` operators and the representation of `P`.
fn split_mixed(rep: &Representation) -> Result<Option<(AndoMode, Vec<usize>, Representation)>, CliError> {
    let (mode, a, p) = match &rep.spec {
        MonoidSpec::Cartesian(a, p) => (AndoMode::Cartesian, a, p),
        MonoidSpec::FreeProduct(a, p) => (AndoMode::Free, a, p),
        _ => return Ok(None),
    };
    let k = match **a {
        MonoidSpec::FreeAbelian(k) if k <= 2 => k,
        _ => return Ok(None),
    };
    let rest: Vec<usize> = (k..rep.spec.rank()).collect();
    Ok(Some((mode, (0..k).collect(), rep.restrict((**p).clone(), &rest)?)))
}

fn mixed_report(mode: AndoMode, s: &lcm_dilation::linalg::CMat, rep_t: &Representation, tol: f64) -> Result<MixedReport, CliError> {
    let (condition, report) = match mode {
        AndoMode::Cartesian => ("cartesian", check_mixed_cartesian(s, rep_t, tol)?),
        AndoMode::Free => ("free", check_mixed_free(s, rep_t, tol)?),
    };
    Ok(MixedReport { operator: String::new(), condition, report })
}

fn require_contractive(rep: &Representation, tol: f64) -> Result<VerificationReport, CliError> {
    let v = rep.validate(tol);
    if !v.overall {
        return Err(CliError::Structure(format!("not a contractive representation of {}:\n{v}", rep.spec)));
    }
    Ok(v)
}

fn cmd_check(p: &Params, rep: &Representation) -> Result<Outcome, CliError> {
    let validation = require_contractive(rep, p.tol)?;
    let family = p.radius.map_or(Family::Generators, Family::Ball);
    let regularity = is_star_regular(rep, family, p.tol)?;
    let mut mixed = Vec::new();
    if let Some((mode, s_idx, rep_t)) = split_mixed(rep)? {
        for i in s_idx {
            let mut m = mixed_report(mode, &rep.generators[i], &rep_t, p.tol)?;
            m.operator = rep.spec.label(i);
            mixed.push(m);
        }
    }
    let overall = regularity.passed && mixed.iter().all(|m| m.report.passed);
    let report = CheckReport { monoid: rep.spec.clone(), validation, regularity, mixed, overall };
    if let Some(out) = &p.out {
        write_file(out, &to_json(&report))?;
    }
    let stdout = p.emit(&report, || {
        let mut s = format!("{}\n\nregularity\n{}", report.validation, report.regularity.to_text());
        for m in &report.mixed {
            s += &format!("\n\nmixed {} for {}\n{}", m.condition, m.operator, m.report.to_text());
        }
        s + &format!("\n\noverall: {}", if report.overall { "pass" } else { "FAIL" })
    });
    Ok(Outcome { stdout, code: if overall { 0 } else { 2 } })
}

/// Two-letter identities (commutation, Nica) need one degree of headroom
/// beyond single-generator isometry.
fn gns_check_degree(model: &TruncatedIsoRep) -> usize {
    model.valid_degree.saturating_sub(1)
}

#[derive(Serialize)]
struct DilateFile {
    representation: RepresentationJson,
    model: ModelJson,
    report: VerificationReport,
}

fn cmd_dilate(p: &Params, rep: &Representation) -> Result<Outcome, CliError> {
    require_contractive(rep, p.tol)?;
    let radius = p.radius.unwrap_or(4);
    let opts = DilationOptions { tol: p.tol, ..Default::default() };
    let (gns, model) = minimal_dilation(rep, radius, opts)?;
    let report = verify_model(&model, rep, gns_check_degree(&model), p.tol)?;
    let file = DilateFile { representation: rep.to_json(), model: gns.export(&model), report };
    if let Some(out) = &p.out {
        write_file(out, &to_json(&file))?;
    }
    let stdout = p.emit(&file.report, || file.report.to_string());
    Ok(Outcome { stdout, code: if file.report.overall { 0 } else { 2 } })
}

#[derive(Serialize)]
struct AndoFile {
    representation: RepresentationJson,
    #[serde(flatten)]
    result: AndoJson,
}

fn cmd_ando(p: &Params, rep: &Representation) -> Result<Outcome, CliError> {
    let rep = match rep.spec {
        // no P at all: treat as NA(2) x 1
        MonoidSpec::FreeAbelian(2) => Representation::new(
            MonoidSpec::cartesian(MonoidSpec::FreeAbelian(2), MonoidSpec::Trivial),
            rep.dim,
            rep.generators.clone(),
        )?,
        _ => rep.clone(),
    };
    let Some((mode, s_idx, rep_t)) = split_mixed(&rep)?.filter(|(_, s, _)| s.len() == 2) else {
        return Err(CliError::Structure(format!("ando needs a representation of NA(2) x P or NA(2) * P, got {}", rep.spec)));
    };
    if let Some(want) = p.mode {
        if want != mode {
            return Err(CliError::Structure(format!("--mode {want:?} does not match monoid {}", rep.spec)));
        }
    }
    require_contractive(&rep, p.tol)?;
    let (s1, s2) = (&rep.generators[s_idx[0]], &rep.generators[s_idx[1]]);
    for (i, s) in [s1, s2].into_iter().enumerate() {
        let m = mixed_report(mode, s, &rep_t, p.tol)?;
        if !m.report.passed {
            let bad = m.report.worst_entry().expect("a failed report has entries");
            return Err(CliError::Condition(format!(
                "hypothesis fails for S{}: {} with F = {{{}}} has min eigenvalue {:e}",
                i + 1,
                bad.condition,
                bad.subset.join(","),
                bad.min_eigenvalue
            )));
        }
    }
    let radius = p.radius.unwrap_or(4);
    let mut opts = AndoOptions::new(radius, p.m.unwrap_or(radius));
    opts.tol = p.tol;
    let result = assemble(mode, s1, s2, &rep_t, opts)?;
    let file = AndoFile { representation: rep.to_json(), result: result.to_json() };
    if let Some(out) = &p.out {
        write_file(out, &to_json(&file))?;
    }
    let report = &file.result.report;
    let stdout = p.emit(report, || report.to_string());
    Ok(Outcome { stdout, code: if report.overall { 0 } else { 2 } })
}

fn cmd_verify(p: &Params, v: Value, tol: Option<f64>) -> Result<Outcome, CliError> {
    let rep = config::parse_representation(v["representation"].clone())?;
    let mj: ModelJson = serde_json::from_value(v["model"].clone())
        .map_err(|e| CliError::Structure(format!("bad model: {e}")))?;
    let model = TruncatedIsoRep::from_json(&mj)?;
    // default to the tolerance the producing command used
    let tol = tol.or(v["report"]["tol"].as_f64()).unwrap_or(p.tol);
    let report = match model.provenance {
        Provenance::Gns | Provenance::Manual => verify_model(&model, &rep, gns_check_degree(&model), tol)?,
        Provenance::AndoCartesian | Provenance::AndoFree => {
            verify_ando_model(&model, &rep, model.valid_degree, tol)?
        }
    };
    if let Some(out) = &p.out {
        write_file(out, &to_json(&report))?;
    }
    let stdout = p.emit(&report, || report.to_string());
    Ok(Outcome { stdout, code: if report.overall { 0 } else { 2 } })
}

struct SampleRequest {
    spec: MonoidSpec,
    dim: usize,
    count: usize,
    kind: lcm_dilation::sample::FamilyKind,
    norms: (f64, f64),
}

fn cmd_sample(p: &Params, req: &SampleRequest) -> Result<Outcome, CliError> {
    let (lo, hi) = req.norms;
    if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
        return Err(CliError::Structure(format!("norm range [{lo}, {hi}] must lie in [0, 1]")));
    }
    if req.dim == 0 || req.count == 0 {
        return Err(CliError::Structure("dim and count must be positive".into()));
    }
    let mut sampler = Sampler::new(p.seed.unwrap_or(0));
    let reps = (0..req.count)
        .map(|_| sampler.representation(&req.spec, req.dim, req.kind, req.norms))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Structure(e.to_string()))?;
    let texts: Vec<String> = reps.iter().map(|r| r.to_json_string() + "\n").collect();
    match (&p.out, req.count) {
        (None, 1) => Ok(Outcome { stdout: texts[0].clone(), code: 0 }),
        (None, _) => Err(CliError::Structure("--out directory required when --count is above 1".into())),
        (Some(out), 1) => {
            write_file(out, &texts[0])?;
            Ok(Outcome { stdout: String::new(), code: 0 })
        }
        (Some(dir), _) => {
            fs::create_dir_all(dir).map_err(|e| CliError::Structure(format!("{}: {e}", dir.display())))?;
            for (i, t) in texts.iter().enumerate() {
                write_file(&dir.join(format!("sample-{i:03}.json")), t)?;
            }
            Ok(Outcome { stdout: String::new(), code: 0 })
        }
    }
}
