//! Command-line entry point.
//!
//! Exit codes: 0 on success (for `verify`, every check passed), 1 on a failed
//! check or a computation error, 2 on a usage or configuration error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{ConfigStamp, Overrides, RunConfig};
use crate::constants::{ConstantsTable, Geometry};
use crate::operators::fields::lemma7_9_coefficients;
use crate::operators::reconstruct::{LambdaSpec, OrderProfile, Reconstructor, SamplerOpts};
use crate::operators::{BakerBasis, CoefficientField, FieldContext, Frame};
use crate::verify::special::t1_minimum;
use crate::verify::{emit_report, Regime, Slice, SliceSpec, SpecialPoints, Suite};
use crate::{c64, CVec2, Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "abelops", version, about = "Commuting matrix operators from genus-2 theta functions")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Five real branch points in increasing order.
    #[arg(long, global = true, num_args = 5, value_name = "Y", allow_negative_numbers = true)]
    pub curve: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Points per side of scan grids.
    #[arg(long, global = true, value_name = "N")]
    pub grid: Option<usize>,
    /// Multiplies every upper-bound tolerance.
    #[arg(long, global = true, value_name = "FLOAT")]
    pub tol_scale: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Period matrices; writes Omega.json.
    Periods,
    /// Riemann constants and operator constants; writes constants.json.
    Constants,
    /// Coefficient fields on a slice grid; writes coeffs/*.csv.
    Coeffs(CoeffsArgs),
    /// Reconstructs the operator of a spectral function at given points.
    Reconstruct(ReconstructArgs),
    /// Runs the verification suite; writes report.json.
    Verify(VerifyArgs),
    /// Theta on the four real tori; writes T1.csv .. T4.csv.
    Scan(ScanArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BasisArg {
    /// `(psi_1, psi_2)` built from `K`.
    Section3,
    /// `(psi, psi_{c'})` with the real regime points.
    Section2,
    /// `(psi, psi~_{c'})` with the magnetic regime points.
    Twisted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SliceArg {
    /// Real `x` in `[-1/4, 1/4]^2`.
    Real,
    /// `x = (1/2, 1/2) + i y` over one cell of `Im Omega`.
    Imaginary,
}

#[derive(Debug, Args)]
pub struct CoeffsArgs {
    #[arg(long, value_enum, default_value = "real")]
    pub slice: SliceArg,
    /// Reconstruct this spectral function instead of writing the closed-form fields.
    #[arg(long)]
    pub lambda: Option<LambdaSpec>,
    #[arg(long, value_enum, default_value = "section3")]
    pub basis: BasisArg,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// Spectral function, e.g. `D20`, `D20+D02`, `D20*D02`.
    #[arg(long, default_value = "D20")]
    pub lambda: LambdaSpec,
    #[arg(long, value_enum, default_value = "section3")]
    pub basis: BasisArg,
    /// Point as `re1,im1,re2,im2`; repeatable.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub x: Vec<CVec2>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub regime: Regime,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// Points per side of each torus grid.
    #[arg(long, default_value_t = 50)]
    pub n: usize,
}

fn parse_point(s: &str) -> std::result::Result<CVec2, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| format!("{s:?}: {e}"))?;
    match v.as_slice() {
        [a, b, c, d] => Ok([c64(*a, *b), c64(*c, *d)]),
        _ => Err(format!("{s:?}: expected four numbers re1,im1,re2,im2")),
    }
}

impl GlobalArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            branch: self.curve.as_ref().map(|v| [v[0], v[1], v[2], v[3], v[4]]),
            seed: self.seed,
            grid: self.grid,
            tol_scale: self.tol_scale,
            output_dir: self.out.clone(),
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        return EXIT_USAGE;
    }
    let cfg = match RunConfig::load(cli.global.config.as_deref(), &cli.global.overrides()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    match dispatch(&cli.command, cfg) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAIL
        }
    }
}

/// Sizes the global rayon pool from `ABELOPS_THREADS`.
fn init_threads() -> std::result::Result<(), String> {
    let Ok(v) = std::env::var("ABELOPS_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("ABELOPS_THREADS must be a positive integer, got {v:?}"))?;
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn dispatch(cmd: &Command, cfg: RunConfig) -> Result<i32> {
    let out = cfg.output_dir.clone();
    fs::create_dir_all(&out)?;
    match cmd {
        Command::Periods => periods(&cfg, &out),
        Command::Constants => constants(&cfg, &out),
        Command::Coeffs(a) => coeffs(&cfg, &out, a),
        Command::Reconstruct(a) => reconstruct(&cfg, &out, a),
        Command::Verify(a) => verify(cfg, &out, a.regime),
        Command::Scan(a) => scan(&cfg, &out, a.n),
    }
}

fn stamped(cfg: &RunConfig, body: Value) -> Value {
    let stamp = ConfigStamp::from(cfg);
    let mut v = json!({ "config_hash": stamp.config_hash, "config": stamp.config });
    if let (Value::Object(m), Value::Object(b)) = (&mut v, body) {
        m.extend(b);
    }
    v
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(v)? + "\n")?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn periods(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let geo = Geometry::from_branch(cfg.branch)?;
    let body = geo.periods.to_json(&geo.curve);
    write_json(&out.join("Omega.json"), &stamped(cfg, body))?;
    Ok(EXIT_OK)
}

fn constants(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let geo = Geometry::from_branch(cfg.branch)?;
    let table = ConstantsTable::compute(&geo)?;
    write_json(&out.join("constants.json"), &stamped(cfg, table.to_json(&geo)))?;
    Ok(EXIT_OK)
}

struct Setup {
    geo: Arc<Geometry>,
    table: Arc<ConstantsTable>,
}

impl Setup {
    fn new(cfg: &RunConfig) -> Result<Self> {
        let geo = Arc::new(Geometry::from_branch(cfg.branch)?);
        let table = Arc::new(ConstantsTable::compute(&geo)?);
        Ok(Setup { geo, table })
    }

    fn basis(&self, cfg: &RunConfig, which: BasisArg) -> Result<BakerBasis> {
        Ok(match which {
            BasisArg::Section3 => BakerBasis::section3(self.geo.clone(), &self.table, cfg.c),
            BasisArg::Section2 => BakerBasis::section2(self.geo.clone(), cfg.theorem1_c, cfg.theorem1_cprime),
            BasisArg::Twisted => {
                let cprime = cfg.cprime.unwrap_or_else(|| SpecialPoints::locate(&self.geo).cprime);
                BakerBasis::section2_twisted(self.geo.clone(), cfg.c, cprime)?
            }
        })
    }

    fn reconstructor(&self, cfg: &RunConfig, basis: BasisArg, lambda: &LambdaSpec) -> Result<Reconstructor> {
        let opts = SamplerOpts {
            seed: cfg.seed,
            ..SamplerOpts::default()
        };
        Reconstructor::new(self.basis(cfg, basis)?, lambda.clone(), OrderProfile::full(lambda.order()), opts)
    }
}

fn slice_spec(geo: &Geometry, cfg: &RunConfig, slice: SliceArg) -> SliceSpec {
    match slice {
        SliceArg::Real => SliceSpec::window(Slice::RealX, cfg.grid, [-0.25, -0.25], [0.25, 0.25]),
        SliceArg::Imaginary => SliceSpec::magnetic_cell(geo, cfg.grid),
    }
}

/// Values at slice parameters.
type Grid = Vec<([f64; 2], crate::C64)>;

/// One CSV grid: slice parameters, then real and imaginary parts.
fn write_grid(path: &Path, spec: &SliceSpec, values: &[([f64; 2], crate::C64)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let [p1, p2] = spec.parameter_names();
    w.write_record([p1, p2, "re", "im"])?;
    for (p, v) in values {
        w.serialize((p[0], p[1], v.re, v.im))?;
    }
    w.flush()?;
    Ok(())
}

fn coeffs(cfg: &RunConfig, out: &Path, a: &CoeffsArgs) -> Result<i32> {
    let setup = Setup::new(cfg)?;
    let spec = slice_spec(&setup.geo, cfg, a.slice);
    let points = spec.points();
    let dir = out.join("coeffs");
    fs::create_dir_all(&dir)?;

    // (file stem, values on the grid)
    let grids: Vec<(String, Grid)> = match &a.lambda {
        None => {
            let ctx = FieldContext::new(setup.geo.clone(), setup.table.clone(), cfg.c)?;
            let t = lemma7_9_coefficients(&ctx, Frame::Primary);
            let fields: [(&str, &CoefficientField); 10] = [
                ("g11", &t.g11),
                ("g12", &t.g12),
                ("g22", &t.g22),
                ("f11", &t.f11),
                ("f12", &t.f12),
                ("h11", &t.h11),
                ("h12", &t.h12),
                ("bigH11", &t.big_h11),
                ("bigH12", &t.big_h12),
                ("bigH22", &t.big_h22),
            ];
            fields
                .iter()
                .map(|(stem, f)| {
                    let vals = points
                        .par_iter()
                        .map(|(p, x)| Ok((*p, f.eval(*x)?)))
                        .collect::<Result<Vec<_>>>()?;
                    Ok((stem.to_string(), vals))
                })
                .collect::<Result<_>>()?
        }
        Some(lambda) => {
            let rec = setup.reconstructor(cfg, a.basis, lambda)?;
            let recs = points
                .par_iter()
                .map(|(p, x)| Ok((*p, rec.reconstruct(*x)?)))
                .collect::<Result<Vec<_>>>()?;
            let keys = rec.profile().keys();
            let mut grids = Vec::new();
            for row in 0..2 {
                for col in 0..2 {
                    for &(i, j) in &keys {
                        let vals = recs.iter().map(|(p, r)| (*p, r.coefficient(row, col, (i, j)))).collect();
                        grids.push((format!("L{}{}_D{i}{j}", row + 1, col + 1), vals));
                    }
                }
            }
            grids
        }
    };

    let mut files = Vec::new();
    for (stem, vals) in &grids {
        let name = format!("{stem}.csv");
        write_grid(&dir.join(&name), &spec, vals)?;
        files.push(name);
    }
    let body = json!({
        "slice": spec.describe(),
        "columns": [spec.parameter_names()[0], spec.parameter_names()[1], "re", "im"],
        "origin": spec.origin,
        "axes": spec.axes,
        "grid": spec.grid,
        "source": match &a.lambda {
            None => "closed form".to_string(),
            Some(l) => format!("reconstruction of {l}"),
        },
        "basis": format!("{:?}", a.basis).to_lowercase(),
        "files": files,
    });
    write_json(&dir.join("manifest.json"), &stamped(cfg, body))?;
    Ok(EXIT_OK)
}

fn reconstruct(cfg: &RunConfig, out: &Path, a: &ReconstructArgs) -> Result<i32> {
    let setup = Setup::new(cfg)?;
    let rec = setup.reconstructor(cfg, a.basis, &a.lambda)?;
    let xs = if a.x.is_empty() {
        vec![crate::verify::PROBE_X]
    } else {
        a.x.clone()
    };
    let tables = xs
        .par_iter()
        .map(|x| Ok(rec.reconstruct(*x)?.to_json()))
        .collect::<Result<Vec<_>>>()?;
    let body = json!({
        "lambda": a.lambda.to_string(),
        "basis": format!("{:?}", a.basis).to_lowercase(),
        "order": a.lambda.order(),
        "reconstructions": tables,
    });
    write_json(&out.join("reconstruct.json"), &stamped(cfg, body))?;
    Ok(EXIT_OK)
}

fn verify(cfg: RunConfig, out: &Path, regime: Regime) -> Result<i32> {
    let suite = Suite::new(cfg)?;
    let results = suite.run(regime);
    let report = emit_report(&suite, results, regime);
    for c in &report.checks {
        eprintln!(
            "{} {:<32} residual {:.3e} ({:?} {:.1e})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.residual,
            c.bound,
            c.tolerance
        );
    }
    let path = out.join("report.json");
    report.write(&path)?;
    eprintln!("wrote {}", path.display());
    Ok(if report.overall { EXIT_OK } else { EXIT_FAIL })
}

fn scan(cfg: &RunConfig, out: &Path, n: usize) -> Result<i32> {
    if n < 2 {
        return Err(Error::Config(format!("scan grid must be at least 2, got {n}")));
    }
    let geo = Geometry::from_branch(cfg.branch)?;
    let mut files = Vec::new();
    for index in 1..=4u8 {
        let name = format!("T{index}.csv");
        geo.theta.write_grid_csv(index, n, fs::File::create(out.join(&name))?)?;
        files.push(name);
    }
    let min = t1_minimum(&geo, n, 10)?;
    let special = SpecialPoints::locate(&geo);
    let body = json!({
        "n": n,
        "columns": ["t1", "t2", "re", "im"],
        "parametrization": "z = shift + i t with t = Im(Omega) s, s on an n x n grid of the unit square",
        "files": files,
        "t1_invariant_modulus": {
            "grid_min": min.grid_min,
            "refined_min": min.refined_min,
            "max": min.max,
            "at": min.at,
        },
        "special_points": special.to_json(),
    });
    write_json(&out.join("scan.json"), &stamped(cfg, body))?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_parse() {
        let p = parse_point("0.1,-0.2,0.3,0").unwrap();
        assert_eq!(p, [c64(0.1, -0.2), c64(0.3, 0.0)]);
        assert!(parse_point("1,2,3").is_err());
    }

    #[test]
    fn curve_takes_five_values() {
        let c = Cli::try_parse_from(["abelops", "--curve", "0", "1", "2", "3", "4", "periods"]).unwrap();
        assert_eq!(c.global.curve.unwrap().len(), 5);
        assert!(Cli::try_parse_from(["abelops", "--curve", "0", "1", "periods"]).is_err());
    }
}
