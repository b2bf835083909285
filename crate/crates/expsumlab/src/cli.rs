//! Batch experiment runner behind the `expsumlab` binary.
//!
//! Every verification in the library is exposed as a command that reads a
//! JSON configuration, runs under an explicit seed, and writes two reports
//! into the output directory: `rows.csv` (one row per atomic measurement,
//! fixed column set, no timing data) and `summary.json` (resolved config,
//! per-assertion outcomes, fitted slopes, wall-clock time).
//!
//! Determinism contract: for a fixed merged configuration the CSV is
//! byte-identical across worker counts. Every parallel reduction in the
//! library collects its partial results in index order before combining,
//! the runner itself is serial, and wall time never enters the rows (the
//! `wall_ms` column is always zero; real timings live in the summary).
//!
//! Exit codes: 0 when every configured assertion passes, 1 when one fails
//! (reports are still written), 2 for configuration mistakes (nothing is
//! written), 3 for budget refusals (nothing is written).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::arcs::verify_lemma22;
use crate::curve::Curve;
use crate::decoupling::{
    bilinear_curve_ratio, parabola_ratio, surface_ratio, transversality_check, ArcSpec,
    CoeffFamily, Phi1D, RhsNorm, SurfaceMode, SurfacePsi,
};
use crate::expsum::{eval_curve_sum, Coords, IntervalZ, Point4};
use crate::levelset::verify_lemma42;
use crate::localmoment::lemma76_check;
use crate::lowerbound::lower_bound_blocks;
use crate::moments::{
    moment_bilinear, moment_lp, moment_quasirandom, tuple_count_oracle, Domain4, MomentMethod,
    SamplingPlan,
};
use crate::util::fit_loglog;
use crate::{Error, Result};

/// Version stamp of the row schema and the config layout.
pub const SCHEMA_VERSION: u32 = 1;

/// Column order of `rows.csv`, fixed within a schema version.
pub const CSV_HEADER: &str = "experiment,curve_family,a,b,N,alpha,beta,p,j,s,value,bound,ratio,\
                              stderr,samples_x1,samples_x2,samples_x3,samples_x4,seed,wall_ms";

/// Exponent presets walked by `sweep-alpha`; the partner exponent is
/// beta = p/2 - 3 - alpha so that the pair stays on the critical line.
pub const SWEEP_ALPHAS: [f64; 4] = [1.5, 1.6, 1.8, 2.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Conditions,
    Moment,
    BilinearMoment,
    SweepAlpha,
    OracleCount,
    WeylVerify,
    LevelsetVerify,
    Lemma76,
    LowerBound,
    Decouple,
    RescaleIdentity,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Conditions => "conditions",
            Command::Moment => "moment",
            Command::BilinearMoment => "bilinear-moment",
            Command::SweepAlpha => "sweep-alpha",
            Command::OracleCount => "oracle-count",
            Command::WeylVerify => "weyl-verify",
            Command::LevelsetVerify => "levelset-verify",
            Command::Lemma76 => "lemma76",
            Command::LowerBound => "lower-bound",
            Command::Decouple => "decouple",
            Command::RescaleIdentity => "rescale-identity",
        }
    }
}

/// Curve selector: the cubic/quartic model family or a fractional-power
/// pair (t^a, t^b). The exponents are ignored for the model family but are
/// still echoed into the `a`/`b` row columns.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveSpec {
    pub family: String,
    pub a: f64,
    pub b: f64,
}

impl Default for CurveSpec {
    fn default() -> Self {
        CurveSpec {
            family: "moment".into(),
            a: 3.0,
            b: 4.0,
        }
    }
}

impl CurveSpec {
    pub fn build(&self) -> Result<Curve> {
        match self.family.as_str() {
            "moment" => Ok(Curve::moment()),
            "power" => {
                if !self.a.is_finite() || !self.b.is_finite() {
                    return Err(Error::Config(format!(
                        "power curve exponents must be finite, got a = {}, b = {}",
                        self.a, self.b
                    )));
                }
                Ok(Curve::power(self.a, self.b))
            }
            other => Err(Error::Config(format!(
                "unknown curve family '{other}' (expected 'moment' or 'power')"
            ))),
        }
    }
}

/// Settings consumed by the `decouple` command only.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecoupleSpec {
    /// One of "parabola", "bilinear", "surface", "transversality".
    pub op: String,
    /// Coefficient family: "one-hot", "constant" or "random-signs".
    pub family: String,
    /// Selected term for the one-hot family.
    pub index: usize,
    /// Sign seeds for the random-signs family (first and second factor).
    pub coeff_seed: u64,
    pub coeff_seed2: u64,
    /// Frequency arcs as fractions of the scale.
    pub arc1: [f64; 2],
    pub arc2: [f64; 2],
    /// Denominator for the bilinear ratio: "l2" or "l6".
    pub rhs: String,
    /// Surface denominator: 0 = point mass, otherwise columns per block.
    pub blocks: usize,
    /// Base points and cubic amplitude of the two-block surface instance.
    pub t1: f64,
    pub t2: f64,
    pub amp: f64,
}

impl Default for DecoupleSpec {
    fn default() -> Self {
        DecoupleSpec {
            op: "parabola".into(),
            family: "constant".into(),
            index: 0,
            coeff_seed: 101,
            coeff_seed2: 102,
            arc1: [0.5, 0.625],
            arc2: [0.875, 1.0],
            rhs: "l2".into(),
            blocks: 0,
            t1: 0.5,
            t2: 1.0,
            amp: 1.0,
        }
    }
}

/// The full experiment configuration. Every field has a default, so `{}` is
/// a valid config; unknown keys are rejected. The merged result (file plus
/// `--set` overrides plus flag overrides) is echoed into `summary.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub curve: CurveSpec,
    /// Scales N; commands that take a single scale use the first entry.
    pub n_list: Vec<u64>,
    /// Even moment exponent (also the target exponent for `lower-bound`).
    pub p: u32,
    /// Window exponents of the conjecture box: x3 spans N^alpha periods and
    /// x4 spans N^beta periods.
    pub alpha: f64,
    pub beta: f64,
    /// Domain-split parameter; carried and echoed, not consumed directly.
    pub delta: f64,
    /// Oversampling factor of the window quadrature (points per period are
    /// proportional to rho).
    pub rho: f64,
    /// Sample budget for quasirandom estimators and ratio measurements.
    pub samples: u64,
    /// Trial count for the statistical verifications.
    pub trials: u64,
    /// Levels probed per trial by `levelset-verify`.
    pub levels: u64,
    /// Grid resolution for `conditions`.
    pub grid: u32,
    /// Tuple arity for `oracle-count` (terms per side).
    pub k: u32,
    /// Summation interval override [lo, hi]; default is [N/2, N].
    pub interval: Option<[i64; 2]>,
    /// Right interval override for `bilinear-moment`; default [7N/8, N].
    pub interval2: Option<[i64; 2]>,
    /// Block scales M for `weyl-verify` (first entry) and `lemma76` (all).
    pub m_list: Vec<u64>,
    /// Window width parameter c of the local moment, 0 < c <= M^2.
    pub window_c: f64,
    /// Moment engine: "grid" (exact classes) or "quasirandom".
    pub method: String,
    pub decouple: DecoupleSpec,
    pub seed: u64,
    /// Worker threads; 0 keeps the library default.
    pub workers: usize,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            curve: CurveSpec::default(),
            n_list: vec![64],
            p: 12,
            alpha: 1.5,
            beta: 1.5,
            delta: 0.0,
            rho: 4.0,
            samples: 65536,
            trials: 100,
            levels: 8,
            grid: 257,
            k: 6,
            interval: None,
            interval2: None,
            m_list: vec![64],
            window_c: 1.0,
            method: "grid".into(),
            decouple: DecoupleSpec::default(),
            seed: 0,
            workers: 0,
            out: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    fn method(&self) -> Result<MomentMethod> {
        match self.method.as_str() {
            "grid" => Ok(MomentMethod::Grid),
            "quasirandom" => Ok(MomentMethod::QuasiRandom),
            other => Err(Error::Config(format!(
                "unknown method '{other}' (expected 'grid' or 'quasirandom')"
            ))),
        }
    }

    fn interval_for(&self, n: u64) -> Result<IntervalZ> {
        match self.interval {
            Some([lo, hi]) => IntervalZ::new(lo, hi),
            None => IntervalZ::new((n / 2) as i64, n as i64),
        }
    }

    fn scales(&self) -> Result<&[u64]> {
        if self.n_list.is_empty() {
            return Err(Error::Config("n_list must not be empty".into()));
        }
        Ok(&self.n_list)
    }

    fn first_scale(&self) -> Result<u64> {
        Ok(self.scales()?[0])
    }

    fn base_row(&self, experiment: &'static str) -> Row {
        Row {
            experiment,
            curve_family: self.curve.family.clone(),
            a: self.curve.a,
            b: self.curve.b,
            n: 0,
            alpha: self.alpha,
            beta: self.beta,
            p: self.p as f64,
            j: 0,
            s: 0,
            value: 0.0,
            bound: 0.0,
            ratio: 0.0,
            stderr: 0.0,
            samples: [0; 4],
            seed: self.seed,
        }
    }
}

/// Read the JSON config at `path` and apply dotted-path overrides of the
/// form `key=value`. Values parse as JSON first (numbers, arrays, booleans)
/// and fall back to plain strings, so `--set curve.family=power` and
/// `--set n_list=[4,8]` both work.
pub fn load_config(path: &Path, sets: &[String]) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("read {}: {e}", path.display())))?;
    let mut doc: Value = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("parse {}: {e}", path.display())))?;
    if !doc.is_object() {
        return Err(Error::Config(format!(
            "{} must contain a JSON object",
            path.display()
        )));
    }
    for setting in sets {
        apply_set(&mut doc, setting)?;
    }
    serde_json::from_value(doc).map_err(|e| Error::Config(format!("config: {e}")))
}

fn apply_set(doc: &mut Value, setting: &str) -> Result<()> {
    let (key, raw) = setting.split_once('=').ok_or_else(|| {
        Error::Config(format!("override '{setting}' is not of the form key=value"))
    })?;
    if key.is_empty() {
        return Err(Error::Config(format!("override '{setting}' has an empty key")));
    }
    let val: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    let (last, init) = parts.split_last().expect("key is nonempty");
    let mut cur = doc;
    for part in init {
        let obj = cur.as_object_mut().ok_or_else(|| {
            Error::Config(format!("override '{key}': '{part}' does not address an object"))
        })?;
        cur = obj
            .entry((*part).to_string())
            .or_insert_with(|| Value::Object(serde_json::Map::new()));
    }
    let obj = cur
        .as_object_mut()
        .ok_or_else(|| Error::Config(format!("override '{key}' does not address an object")))?;
    obj.insert((*last).to_string(), val);
    Ok(())
}

/// One atomic measurement. The integer columns `j` and `s` and the
/// `samples_x*` slots carry per-experiment diagnostics (block index,
/// dyadic level, interval widths, ...); unused slots stay zero.
#[derive(Debug, Clone)]
pub struct Row {
    pub experiment: &'static str,
    pub curve_family: String,
    pub a: f64,
    pub b: f64,
    pub n: u64,
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    pub j: i64,
    pub s: i64,
    pub value: f64,
    pub bound: f64,
    pub ratio: f64,
    pub stderr: f64,
    pub samples: [u64; 4],
    pub seed: u64,
}

/// 17 significant digits: round-trips every f64 and keeps rows byte-stable.
fn fnum(x: f64) -> String {
    format!("{x:.16e}")
}

impl Row {
    fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},0",
            self.experiment,
            self.curve_family,
            fnum(self.a),
            fnum(self.b),
            self.n,
            fnum(self.alpha),
            fnum(self.beta),
            fnum(self.p),
            self.j,
            self.s,
            fnum(self.value),
            fnum(self.bound),
            fnum(self.ratio),
            fnum(self.stderr),
            self.samples[0],
            self.samples[1],
            self.samples[2],
            self.samples[3],
            self.seed,
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Default)]
pub struct RunOutput {
    pub rows: Vec<Row>,
    pub assertions: Vec<Assertion>,
    pub slopes: BTreeMap<String, f64>,
}

impl RunOutput {
    fn check(&mut self, name: impl Into<String>, pass: bool, detail: String) {
        self.assertions.push(Assertion {
            name: name.into(),
            pass,
            detail,
        });
    }

    pub fn pass(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }
}

/// Run one command against a merged config. Errors leave no trace on disk;
/// writing the reports is the caller's final step.
pub fn run(command: Command, cfg: &ExperimentConfig) -> Result<RunOutput> {
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(Error::Config(format!(
            "unsupported schema_version {} (this binary writes schema {SCHEMA_VERSION})",
            cfg.schema_version
        )));
    }
    match command {
        Command::Conditions => cmd_conditions(cfg),
        Command::Moment => cmd_moment(cfg),
        Command::BilinearMoment => cmd_bilinear_moment(cfg),
        Command::SweepAlpha => cmd_sweep_alpha(cfg),
        Command::OracleCount => cmd_oracle_count(cfg),
        Command::WeylVerify => cmd_weyl_verify(cfg),
        Command::LevelsetVerify => cmd_levelset_verify(cfg),
        Command::Lemma76 => cmd_lemma76(cfg),
        Command::LowerBound => cmd_lower_bound(cfg),
        Command::Decouple => cmd_decouple(cfg),
        Command::RescaleIdentity => cmd_rescale_identity(cfg),
    }
}

fn cmd_conditions(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let curve = cfg.curve.build()?;
    let rep = curve.verify_conditions(cfg.grid as usize)?;
    let mut out = RunOutput::default();
    let mut row = cfg.base_row("conditions");
    row.value = rep.a4;
    row.bound = rep.a2;
    row.ratio = rep.a3;
    row.stderr = rep.a1;
    row.samples[0] = rep.grid as u64;
    out.rows.push(row);
    out.check(
        "window-constants-finite",
        [rep.a1, rep.a2, rep.a3, rep.a4].iter().all(|v| v.is_finite()),
        format!(
            "A1 = {}, A2 = {}, A3 = {}, A4 = {}",
            rep.a1, rep.a2, rep.a3, rep.a4
        ),
    );
    out.check("nondegenerate", rep.a4 > 0.0, format!("A4 = {}", rep.a4));
    Ok(out)
}

fn cmd_moment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let curve = cfg.curve.build()?;
    let method = cfg.method()?;
    let mut out = RunOutput::default();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &n in cfg.scales()? {
        let iv = cfg.interval_for(n)?;
        let domain = Domain4::conjecture(n, cfg.alpha, cfg.beta)?;
        let rep = match method {
            MomentMethod::Grid => {
                let plan = SamplingPlan::for_moment(&curve, n, iv, cfg.p, &domain, cfg.rho)?;
                moment_lp(&curve, n, iv, cfg.p, &domain, &plan)?
            }
            MomentMethod::QuasiRandom => {
                moment_quasirandom(&curve, n, iv, cfg.p, &domain, cfg.samples, cfg.seed)?
            }
        };
        let mut row = cfg.base_row("moment");
        row.n = n;
        row.value = rep.value;
        row.stderr = rep.stderr;
        row.samples = rep.samples;
        if let Some(floor) = rep.floor {
            row.bound = floor;
            row.ratio = rep.value / floor;
            out.check(
                format!("floor-n{n}"),
                rep.value >= floor * (1.0 - 1e-9),
                format!("value = {:.6e} vs floor = {:.6e}", rep.value, floor),
            );
        }
        match method {
            MomentMethod::Grid => out.check(
                format!("converged-n{n}"),
                rep.converged,
                format!("step halving moved the value by {:.3e} relative", rep.halved_rel),
            ),
            MomentMethod::QuasiRandom => out.check(
                format!("stderr-finite-n{n}"),
                rep.stderr.is_finite(),
                format!("stderr = {:.3e}", rep.stderr),
            ),
        }
        out.rows.push(row);
        xs.push(n as f64);
        ys.push(rep.value);
    }
    if xs.len() >= 2 {
        let (slope, _) = fit_loglog(&xs, &ys);
        out.slopes.insert("moment".into(), slope);
    }
    Ok(out)
}

fn cmd_bilinear_moment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let curve = cfg.curve.build()?;
    if cfg.method()? != MomentMethod::Grid {
        return Err(Error::Config(
            "bilinear-moment supports method = 'grid' only".into(),
        ));
    }
    let mut out = RunOutput::default();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &n in cfg.scales()? {
        let i1 = match cfg.interval {
            Some([lo, hi]) => IntervalZ::new(lo, hi)?,
            None => IntervalZ::new((n / 2) as i64, (5 * n / 8) as i64)?,
        };
        let i2 = match cfg.interval2 {
            Some([lo, hi]) => IntervalZ::new(lo, hi)?,
            None => IntervalZ::new((7 * n / 8) as i64, n as i64)?,
        };
        let domain = Domain4::conjecture(n, cfg.alpha, cfg.beta)?;
        let plan = SamplingPlan::for_bilinear(&curve, n, i1, i2, &domain, cfg.rho)?;
        let rep = moment_bilinear(&curve, n, i1, i2, &domain, &plan)?;
        let mut row = cfg.base_row("bilinear-moment");
        row.n = n;
        row.p = 6.0;
        row.j = i1.len() as i64;
        row.s = i2.len() as i64;
        row.value = rep.value;
        row.samples = rep.samples;
        out.check(
            format!("converged-n{n}"),
            rep.converged,
            format!("step halving moved the value by {:.3e} relative", rep.halved_rel),
        );
        out.rows.push(row);
        xs.push(n as f64);
        ys.push(rep.value);
    }
    if xs.len() >= 2 {
        let (slope, _) = fit_loglog(&xs, &ys);
        out.slopes.insert("bilinear".into(), slope);
    }
    Ok(out)
}

fn cmd_sweep_alpha(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let curve = cfg.curve.build()?;
    let method = cfg.method()?;
    let mut out = RunOutput::default();
    for &alpha in SWEEP_ALPHAS.iter() {
        let beta = cfg.p as f64 / 2.0 - 3.0 - alpha;
        if beta < 0.0 {
            return Err(Error::Config(format!(
                "sweep preset alpha = {alpha} gives negative beta = {beta} at p = {}",
                cfg.p
            )));
        }
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for &n in cfg.scales()? {
            let iv = cfg.interval_for(n)?;
            let domain = Domain4::conjecture(n, alpha, beta)?;
            let rep = match method {
                MomentMethod::Grid => {
                    let plan = SamplingPlan::for_moment(&curve, n, iv, cfg.p, &domain, cfg.rho)?;
                    moment_lp(&curve, n, iv, cfg.p, &domain, &plan)?
                }
                MomentMethod::QuasiRandom => {
                    moment_quasirandom(&curve, n, iv, cfg.p, &domain, cfg.samples, cfg.seed)?
                }
            };
            let mut row = cfg.base_row("sweep-alpha");
            row.n = n;
            row.alpha = alpha;
            row.beta = beta;
            row.value = rep.value;
            row.stderr = rep.stderr;
            row.samples = rep.samples;
            if let Some(floor) = rep.floor {
                row.bound = floor;
                row.ratio = rep.value / floor;
            }
            match method {
                MomentMethod::Grid => out.check(
                    format!("converged-a{alpha}-n{n}"),
                    rep.converged,
                    format!("step halving moved the value by {:.3e} relative", rep.halved_rel),
                ),
                MomentMethod::QuasiRandom => out.check(
                    format!("stderr-finite-a{alpha}-n{n}"),
                    rep.stderr.is_finite(),
                    format!("stderr = {:.3e}", rep.stderr),
                ),
            }
            out.rows.push(row);
            xs.push(n as f64);
            ys.push(rep.value);
        }
        if xs.len() >= 2 {
            let (slope, _) = fit_loglog(&xs, &ys);
            out.slopes.insert(format!("alpha-{alpha}"), slope);
        }
    }
    Ok(out)
}

fn cmd_oracle_count(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let n = cfg.first_scale()?;
    let iv = cfg.interval_for(n)?;
    let count = tuple_count_oracle(n, iv, cfg.k)?;
    let mut out = RunOutput::default();
    let mut row = cfg.base_row("oracle-count");
    row.n = n;
    row.j = cfg.k as i64;
    row.value = count as f64;
    row.samples[0] = iv.len();
    out.rows.push(row);
    out.check(
        "count-representable",
        count < (1u64 << 53),
        format!("count = {count}"),
    );
    Ok(out)
}

fn cmd_weyl_verify(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let &m = cfg
        .m_list
        .first()
        .ok_or_else(|| Error::Config("m_list must not be empty".into()))?;
    let rep = verify_lemma22(m, cfg.trials, cfg.seed, 0.05)?;
    let mf = m as f64;
    let on_cap = 8.0 * mf.powf(0.05);
    let off_cap = 0.01;
    let poisson_cap = 1e-6 * mf;
    let mut out = RunOutput::default();

    let mut row = cfg.base_row("weyl-on");
    row.n = m;
    row.value = rep.max_on_ratio;
    row.bound = on_cap;
    row.ratio = rep.max_on_ratio / on_cap;
    row.samples[0] = rep.trials_on;
    out.rows.push(row);

    let mut row = cfg.base_row("weyl-off");
    row.n = m;
    row.value = rep.max_off_frac;
    row.bound = off_cap;
    row.ratio = rep.max_off_frac / off_cap;
    row.samples[0] = rep.trials_off;
    out.rows.push(row);

    let mut row = cfg.base_row("weyl-poisson");
    row.n = m;
    row.value = rep.max_poisson_err;
    row.bound = poisson_cap;
    row.ratio = rep.max_poisson_err / poisson_cap;
    row.samples[0] = rep.trials_on + rep.trials_off;
    out.rows.push(row);

    out.check(
        "on-arc-cap",
        rep.max_on_ratio <= on_cap,
        format!("max on-arc ratio = {:.4} vs cap {:.4}", rep.max_on_ratio, on_cap),
    );
    out.check(
        "off-arc-collapse",
        rep.max_off_frac <= off_cap,
        format!("max off-arc fraction = {:.3e} vs cap {off_cap}", rep.max_off_frac),
    );
    out.check(
        "poisson-identity",
        rep.max_poisson_err <= poisson_cap,
        format!(
            "max reconstruction error = {:.3e} vs cap {poisson_cap:.3e}",
            rep.max_poisson_err
        ),
    );
    Ok(out)
}

fn cmd_levelset_verify(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let curve = cfg.curve.build()?;
    let rep = verify_lemma42(&curve, cfg.trials, cfg.levels, cfg.seed)?;
    let (l1, l2, s, v) = rep.worst;
    let mut out = RunOutput::default();
    let mut row = cfg.base_row("levelset-verify");
    row.value = rep.max_product;
    row.bound = 32.0;
    row.ratio = rep.max_product / 32.0;
    row.j = l1.unsigned_abs().max(l2.unsigned_abs()).max(1).ilog2() as i64;
    row.s = s as i64;
    row.samples[0] = cfg.trials;
    row.samples[1] = cfg.levels;
    out.rows.push(row);
    out.check(
        "product-cap",
        rep.max_product <= 32.0,
        format!(
            "max measure * sqrt(2^(j+s)) = {:.4} at (l1, l2, s, v) = ({l1}, {l2}, {s}, {v:.4})",
            rep.max_product
        ),
    );
    Ok(out)
}

fn cmd_lemma76(cfg: &ExperimentConfig) -> Result<RunOutput> {
    if cfg.m_list.is_empty() {
        return Err(Error::Config("m_list must not be empty".into()));
    }
    let mut out = RunOutput::default();
    for &m in &cfg.m_list {
        let rep = lemma76_check(m, cfg.window_c)?;
        let mf = m as f64;
        let lg = m.ilog2() as f64;
        for r in &rep.rows {
            let allowance =
                20.0 * lg.powi(3) * (mf.powi(4) * (1u64 << (2 * r.j)) as f64 + mf.powi(6));
            let mut row = cfg.base_row("lemma76");
            row.n = m;
            row.j = r.j as i64;
            row.value = r.lhs;
            row.bound = allowance;
            row.ratio = r.normalized;
            out.rows.push(row);
        }
        out.check(
            format!("allowance-m{m}"),
            rep.max_normalized <= 1.0,
            format!("max normalized ratio = {:.6}", rep.max_normalized),
        );
    }
    Ok(out)
}

fn cmd_lower_bound(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let curve = cfg.curve.build()?;
    let mut out = RunOutput::default();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &n in cfg.scales()? {
        let rep = lower_bound_blocks(&curve, n, cfg.p as f64, cfg.alpha, cfg.beta)?;
        let mut row = cfg.base_row("lower-bound");
        row.n = n;
        row.value = rep.value;
        row.s = rep.blocks as i64;
        row.samples[0] = rep.m_block;
        row.samples[1] = rep.blocks;
        out.rows.push(row);
        out.check(
            format!("positive-n{n}"),
            rep.value > 0.0,
            format!("value = {:.6e} from {} blocks of length {}", rep.value, rep.blocks, rep.m_block),
        );
        xs.push(n as f64);
        ys.push(rep.value);
    }
    if xs.len() >= 2 {
        let (slope, _) = fit_loglog(&xs, &ys);
        out.slopes.insert("lower-bound".into(), slope);
    }
    Ok(out)
}

fn coeff_family(kind: &str, index: usize, seed: u64) -> Result<CoeffFamily> {
    match kind {
        "one-hot" => Ok(CoeffFamily::OneHot(index)),
        "constant" => Ok(CoeffFamily::Constant),
        "random-signs" => Ok(CoeffFamily::RandomSigns(seed)),
        other => Err(Error::Config(format!(
            "unknown coefficient family '{other}' (expected 'one-hot', 'constant' or 'random-signs')"
        ))),
    }
}

fn cmd_decouple(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let spec = &cfg.decouple;
    let cf1 = coeff_family(&spec.family, spec.index, spec.coeff_seed)?;
    let cf2 = coeff_family(&spec.family, spec.index, spec.coeff_seed2)?;
    let arc1 = ArcSpec::new(spec.arc1[0], spec.arc1[1]);
    let arc2 = ArcSpec::new(spec.arc2[0], spec.arc2[1]);
    let mut out = RunOutput::default();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    match spec.op.as_str() {
        "parabola" => {
            for &n in cfg.scales()? {
                let v = parabola_ratio(n, &Phi1D::Square, &cf1)?;
                let mut row = cfg.base_row("decouple-parabola");
                row.n = n;
                row.p = 6.0;
                row.value = v;
                row.ratio = v;
                out.check(format!("finite-n{n}"), v.is_finite(), format!("ratio = {v:.6}"));
                out.rows.push(row);
                xs.push(n as f64);
                ys.push(v);
            }
            if xs.len() >= 2 {
                let (slope, _) = fit_loglog(&xs, &ys);
                out.slopes.insert("parabola".into(), slope);
            }
        }
        "bilinear" => {
            let rhs = match spec.rhs.as_str() {
                "l2" => RhsNorm::L2,
                "l6" => RhsNorm::L6,
                other => {
                    return Err(Error::Config(format!(
                        "unknown rhs '{other}' (expected 'l2' or 'l6')"
                    )))
                }
            };
            let curve = cfg.curve.build()?;
            for &n in cfg.scales()? {
                let rep =
                    bilinear_curve_ratio(n, &curve, arc1, arc2, &cf1, &cf2, rhs, cfg.samples, cfg.seed)?;
                let mut row = cfg.base_row("decouple-bilinear");
                row.n = n;
                row.p = 6.0;
                row.value = rep.ratio;
                row.stderr = rep.stderr;
                row.samples[0] = rep.samples;
                out.check(
                    format!("finite-n{n}"),
                    rep.ratio.is_finite(),
                    format!("ratio = {:.6}", rep.ratio),
                );
                out.rows.push(row);
                xs.push(n as f64);
                ys.push(rep.ratio);
            }
            if xs.len() >= 2 {
                let (slope, _) = fit_loglog(&xs, &ys);
                out.slopes.insert("bilinear".into(), slope);
            }
        }
        "surface" => {
            let curve = cfg.curve.build()?;
            for &n in cfg.scales()? {
                let psi = SurfacePsi::two_block_instance(n, &curve, spec.t1, spec.t2, spec.amp)?;
                let mode = if spec.blocks == 0 {
                    SurfaceMode::PointMass
                } else {
                    SurfaceMode::Blocks { m: spec.blocks }
                };
                let rep = surface_ratio(n, &psi, &cf1, mode, cfg.samples, cfg.seed)?;
                let mut row = cfg.base_row("decouple-surface");
                row.n = n;
                row.p = 6.0;
                row.j = spec.blocks as i64;
                row.value = rep.ratio;
                row.stderr = rep.stderr;
                row.samples[0] = rep.samples;
                out.check(
                    format!("finite-n{n}"),
                    rep.ratio.is_finite(),
                    format!("ratio = {:.6}", rep.ratio),
                );
                out.rows.push(row);
                xs.push(n as f64);
                ys.push(rep.ratio);
            }
            if xs.len() >= 2 {
                let (slope, _) = fit_loglog(&xs, &ys);
                out.slopes.insert("surface".into(), slope);
            }
        }
        "transversality" => {
            let curve = cfg.curve.build()?;
            for &n in cfg.scales()? {
                let rep =
                    transversality_check(n, &curve, arc1, arc2, &cf1, &cf2, cfg.samples, cfg.seed)?;
                let mut row = cfg.base_row("decouple-transversality");
                row.n = n;
                row.p = 6.0;
                row.value = rep.ratio;
                row.samples[0] = rep.samples;
                out.rows.push(row);
                let mut row = cfg.base_row("decouple-parallel");
                row.n = n;
                row.p = 6.0;
                row.value = rep.ratio_same_arc;
                row.samples[0] = rep.samples;
                out.rows.push(row);
                out.check(
                    format!("finite-n{n}"),
                    rep.ratio.is_finite() && rep.ratio_same_arc.is_finite(),
                    format!(
                        "transversal = {:.6}, parallel = {:.6}",
                        rep.ratio, rep.ratio_same_arc
                    ),
                );
            }
        }
        other => {
            return Err(Error::Config(format!(
                "unknown decouple op '{other}' (expected 'parabola', 'bilinear', 'surface' or 'transversality')"
            )))
        }
    }
    Ok(out)
}

fn cmd_rescale_identity(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let curve = cfg.curve.build()?;
    let n = cfg.first_scale()?;
    if n < 8 {
        return Err(Error::Config(format!("rescale-identity needs N >= 8, got {n}")));
    }
    if cfg.trials == 0 {
        return Err(Error::Config("trials must be positive".into()));
    }
    let narrow_series = cfg.curve.family != "moment";
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = RunOutput::default();
    let mut max_rel = 0.0f64;
    let lo0 = n.div_ceil(2);
    for _ in 0..cfg.trials {
        let (n0, m) = loop {
            let n0 = rng.gen_range(lo0..=n - 2);
            let mut mmax = (n - n0) / 2;
            if narrow_series {
                // Keep 2m/n0 well under the series-truncation width limit so
                // the mapped sum is exact to working precision.
                mmax = mmax.min(n0 / 8);
            }
            if mmax >= 1 {
                break (n0, rng.gen_range(1..=mmax));
            }
        };
        let r = curve.rescale_block(n, n0, m)?;
        let x = Point4::new(
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
        );
        let y = r.map_point(x);
        let parent = eval_curve_sum(
            &curve,
            n,
            IntervalZ::new((n0 + m) as i64, (n0 + 2 * m) as i64)?,
            x,
            Coords::Conjecture,
        )?
        .norm();
        let child = eval_curve_sum(
            &r.curve,
            m,
            IntervalZ::new(m as i64, 2 * m as i64)?,
            y,
            Coords::Conjecture,
        )?
        .norm();
        // Mixed tolerance: near total cancellation the moduli are pure
        // rounding noise, so agreement is measured against 1 + |parent|
        // (the scale of a single term) rather than |parent| alone.
        let rel = (parent - child).abs() / (1.0 + parent);
        max_rel = max_rel.max(rel);
        let mut row = cfg.base_row("rescale-identity");
        row.n = n;
        row.j = n0 as i64;
        row.s = m as i64;
        row.value = parent;
        row.bound = child;
        row.ratio = rel;
        out.rows.push(row);
    }
    out.check(
        "identity",
        max_rel <= 1e-9,
        format!("max deviation = {max_rel:.3e} over {} random blocks", cfg.trials),
    );
    Ok(out)
}

pub struct ReportPaths {
    pub rows: PathBuf,
    pub summary: PathBuf,
}

/// Write `rows.csv` and `summary.json` into the configured output
/// directory. Called only after a fully successful run, so failed runs
/// leave no partial output.
pub fn write_reports(
    cfg: &ExperimentConfig,
    command: Command,
    output: &RunOutput,
    wall_ms: u64,
) -> Result<ReportPaths> {
    fs::create_dir_all(&cfg.out)?;
    let mut csv = String::with_capacity(128 * (output.rows.len() + 1));
    csv.push_str(CSV_HEADER);
    csv.push('\n');
    for row in &output.rows {
        csv.push_str(&row.csv_line());
        csv.push('\n');
    }
    let rows = cfg.out.join("rows.csv");
    fs::write(&rows, csv)?;
    let doc = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "command": command.name(),
        "config": cfg,
        "assertions": output.assertions,
        "slopes": output.slopes,
        "rows": output.rows.len(),
        "pass": output.pass(),
        "wall_ms": wall_ms,
    });
    let text = serde_json::to_string_pretty(&doc)
        .map_err(|e| Error::Config(format!("encode summary: {e}")))?;
    let summary = cfg.out.join("summary.json");
    fs::write(&summary, text + "\n")?;
    Ok(ReportPaths { rows, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_merge_into_nested_keys() {
        let mut doc: Value = serde_json::from_str(r#"{"curve": {"family": "moment"}}"#).unwrap();
        apply_set(&mut doc, "curve.family=power").unwrap();
        apply_set(&mut doc, "curve.a=1.5").unwrap();
        apply_set(&mut doc, "n_list=[4,8]").unwrap();
        let cfg: ExperimentConfig = serde_json::from_value(doc).unwrap();
        assert_eq!(cfg.curve.family, "power");
        assert_eq!(cfg.curve.a, 1.5);
        assert_eq!(cfg.n_list, vec![4, 8]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let doc: Value = serde_json::from_str(r#"{"no_such_key": 1}"#).unwrap();
        let r: std::result::Result<ExperimentConfig, _> = serde_json::from_value(doc);
        assert!(r.is_err());
    }

    #[test]
    fn row_serialization_is_fixed_width_floats() {
        let cfg = ExperimentConfig::default();
        let mut row = cfg.base_row("conditions");
        row.value = 6.0;
        let line = row.csv_line();
        assert!(line.starts_with("conditions,moment,"));
        assert!(line.contains("6.0000000000000000e0"));
        assert!(line.ends_with(",0"));
        assert_eq!(line.split(',').count(), CSV_HEADER.split(',').count());
    }

    #[test]
    fn malformed_override_is_a_config_error() {
        let mut doc: Value = serde_json::from_str("{}").unwrap();
        assert!(apply_set(&mut doc, "no-equals-sign").is_err());
        assert!(apply_set(&mut doc, "=5").is_err());
    }
}
