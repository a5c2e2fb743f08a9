//! Command-line front end: weight tables, rank reports for covering graphs
//! and the identity-check suites.

use std::ffi::OsString;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::blocks::{
    coinvariant_rank, default_positions, degeneration_rank, fusion_table, propagation_check, sewing_element,
    sewing_map_check, untwisted_setup, BlockError, Label, LabelAssignment, Puncture, RankRow,
};
use crate::config::{LimitError, Limits};
use crate::cover::{CoveringGraph, KummerModel};
use crate::cyclo::{qi, Q};
use crate::liealg::{build_simple, dual_weight, gamma_on_weights, CartanType, GammaAction, LieAlgebra, Weight};
use crate::looprep::integrable_module;
use crate::sugawara::{casimir, fock_compatibility_check, virasoro_window_check};
use crate::torsorlab::torsor_suite;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Action of the generator of Γ on 𝔤.
#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum RhoSpec {
    Trivial,
    /// Dynkin diagram automorphism (A_n, n ≥ 2, with p = 2).
    #[value(alias = "diagram")]
    Outer,
    /// X ↦ −Xᵀ (p = 2).
    MinusTranspose,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Virasoro,
    Sewing,
    Torsor,
    Propagation,
}

#[derive(Debug, Parser)]
#[command(name = "twistcb", about = "Conformal blocks for twisted affine algebras on cyclic covers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Simple Lie algebra type, e.g. A1, A2.
    #[arg(long, global = true, default_value = "A1")]
    pub algebra: String,
    #[arg(long, global = true, default_value_t = 1)]
    pub level: u32,
    /// Order of Γ.
    #[arg(long, global = true, default_value_t = 2)]
    pub p: u32,
    /// Maximal truncation depth.
    #[arg(long, global = true, default_value_t = 4)]
    pub depth: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Seed for randomized spot checks.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum)]
    pub rho: Option<RhoSpec>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List P_ℓ, with Γ-orbits when --rho is given.
    Weights,
    /// Rank of conformal blocks for a covering graph with labels.
    Rank {
        /// Covering graph JSON with a top-level "labels" block.
        #[arg(long)]
        input: PathBuf,
        /// Labels JSON, overriding the block inside the graph file.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Run an identity-check suite.
    Check { suite: Suite },
}

/// Result of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn usage(msg: impl Into<String>) -> Self {
        Outcome { code: EXIT_USAGE, stdout: String::new(), stderr: msg.into() }
    }
}

/// One named line of a check report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn line(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> CheckLine {
    CheckLine { name: name.into(), pass, detail: detail.into() }
}

/// Validated run configuration.
pub struct RunConfig {
    pub alg: Arc<LieAlgebra>,
    pub algebra: String,
    pub level: u32,
    pub p: u32,
    pub depth: usize,
    pub format: Format,
    pub seed: u64,
    pub rho: Option<RhoSpec>,
}

impl RunConfig {
    pub fn from_cli(cli: &Cli, limits: &Limits) -> Result<Self, String> {
        let t: CartanType = cli.algebra.parse().map_err(|e| format!("--algebra: {e}"))?;
        let alg = build_simple(t).map_err(|e| format!("--algebra: {e}"))?;
        let lim = |e: LimitError| e.to_string();
        limits.check_rank(alg.rank).map_err(lim)?;
        limits.check_level(cli.level).map_err(lim)?;
        limits.check_p(cli.p).map_err(lim)?;
        limits.check_depth(cli.depth).map_err(lim)?;
        if !crate::cyclo::is_prime(cli.p) {
            return Err(format!("--p: {} is not prime", cli.p));
        }
        Ok(RunConfig {
            alg: Arc::new(alg),
            algebra: cli.algebra.to_uppercase(),
            level: cli.level,
            p: cli.p,
            depth: cli.depth,
            format: cli.format,
            seed: cli.seed,
            rho: cli.rho,
        })
    }

    pub fn gamma_action(&self) -> Result<GammaAction, String> {
        let alg = &self.alg;
        let r = match self.rho.unwrap_or(RhoSpec::Trivial) {
            RhoSpec::Trivial => GammaAction::trivial(alg, self.p),
            RhoSpec::Outer => {
                if self.p != 2 || alg.rank < 2 || !self.algebra.starts_with('A') {
                    return Err("--rho outer needs type A_n with n ≥ 2 and p = 2".into());
                }
                let perm: Vec<usize> = (0..alg.rank).rev().collect();
                GammaAction::diagram(alg, &perm, 2)
            }
            RhoSpec::MinusTranspose => {
                if self.p != 2 || !self.algebra.starts_with('A') {
                    return Err("--rho minus-transpose needs type A_n and p = 2".into());
                }
                GammaAction::minus_transpose(alg)
            }
        };
        r.map_err(|e| e.to_string())
    }
}

/// Parses arguments and runs the command.
pub fn run_from<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let text = e.render().to_string();
            return if code == EXIT_PASS {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome::usage(text)
            };
        }
    };
    let limits = match Limits::from_env() {
        Ok(l) => l,
        Err(e) => return Outcome::usage(e.to_string()),
    };
    let cfg = match RunConfig::from_cli(&cli, &limits) {
        Ok(c) => c,
        Err(e) => return Outcome::usage(e),
    };
    match &cli.command {
        Command::Weights => cmd_weights(&cfg),
        Command::Rank { input, labels } => cmd_rank(&cfg, input, labels.as_ref()),
        Command::Check { suite } => {
            if cfg.format == Format::Csv {
                return Outcome::usage("check reports are JSON only");
            }
            cmd_check(&cfg, *suite)
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Rows of P_ℓ with their Γ-orbit index when an action is given.
pub fn weight_rows(cfg: &RunConfig) -> Result<Vec<Value>, String> {
    let ws = cfg.alg.enumerate_levels(cfg.level);
    let orbit_of: Option<Vec<usize>> = match cfg.rho {
        None => None,
        Some(_) => {
            let rho = cfg.gamma_action()?;
            let mut orbit = vec![usize::MAX; ws.len()];
            let mut next = 0;
            for i in 0..ws.len() {
                if orbit[i] != usize::MAX {
                    continue;
                }
                let mut cur = ws[i].clone();
                for _ in 0..cfg.p {
                    let j = ws.iter().position(|w| *w == cur).ok_or("orbit leaves P_ℓ")?;
                    orbit[j] = next;
                    cur = gamma_on_weights(&cfg.alg, &rho, &cur).map_err(|e| e.to_string())?;
                }
                next += 1;
            }
            Some(orbit)
        }
    };
    Ok(ws
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let mut row = json!({"weight": w.0, "level": cfg.alg.level_of(w)});
            if let Some(o) = &orbit_of {
                row["orbit"] = json!(o[i]);
            }
            row
        })
        .collect())
}

fn cmd_weights(cfg: &RunConfig) -> Outcome {
    let rows = match weight_rows(cfg) {
        Ok(r) => r,
        Err(e) => return Outcome::usage(e),
    };
    let stdout = match cfg.format {
        Format::Json => to_json(&rows),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let with_orbit = cfg.rho.is_some();
            let mut header = vec!["weight", "level"];
            if with_orbit {
                header.push("orbit");
            }
            w.write_record(&header).expect("in-memory write");
            for r in &rows {
                let mut rec = vec![Weight(serde_json::from_value(r["weight"].clone()).unwrap_or_default()).to_string(), r["level"].to_string()];
                if with_orbit {
                    rec.push(r["orbit"].to_string());
                }
                w.write_record(&rec).expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
        }
    };
    Outcome { code: EXIT_PASS, stdout, stderr: String::new() }
}

fn parse_point(s: &str) -> Option<Q> {
    let (n, d) = match s.split_once('/') {
        Some((a, b)) => (a.trim().parse::<i64>().ok()?, b.trim().parse::<i64>().ok()?),
        None => (s.trim().parse::<i64>().ok()?, 1),
    };
    (d != 0).then(|| crate::cyclo::q(n, d))
}

/// Rank of a covering graph with labels: degeneration for nodal graphs,
/// truncated coinvariants for a single smooth rational component.
pub fn rank_graph(cfg: &RunConfig, graph: &CoveringGraph, labels: &LabelAssignment) -> Result<RankRow, BlockError> {
    let id = graph.id.clone().unwrap_or_else(|| "graph".into());
    let violations = graph.validate();
    if !violations.is_empty() {
        let msg: Vec<String> = violations.iter().map(|v| format!("{}: {}", v.rule, v.detail)).collect();
        return Err(BlockError::InvalidGraph(msg.join("; ")));
    }
    let row = |rank: usize, stabilized: bool, depth: usize, method: &str| RankRow {
        graph: id.clone(),
        labels: labels.describe(),
        level: cfg.level,
        rank,
        stabilized,
        depth,
        method: method.into(),
    };
    if !graph.edges.is_empty() || graph.vertices.len() != 1 {
        let table = fusion_table(&cfg.alg, cfg.level)?;
        let r = degeneration_rank(graph, labels, &table, None)?;
        return Ok(row(r as usize, true, 0, "degeneration"));
    }
    if graph.vertices[0].genus > 0 {
        return Err(BlockError::Unsupported("smooth components of positive genus".into()));
    }
    let alg = cfg.alg.clone();
    let (model, rho) = if graph.branch.is_empty() {
        untwisted_setup(&alg)
    } else {
        let mut pts = Vec::new();
        for (k, b) in graph.branch.iter().enumerate() {
            let x = b.at.as_deref().and_then(parse_point).unwrap_or_else(|| qi(-(k as i64)));
            pts.push((x, b.char));
        }
        let model = KummerModel::new(graph.p, pts)?;
        let rho = cfg.gamma_action().map_err(BlockError::Unsupported)?;
        if rho.p != graph.p {
            return Err(BlockError::Unsupported(format!("--p {} differs from the graph's p = {}", rho.p, graph.p)));
        }
        (model, rho)
    };
    let pos = default_positions(&model, graph.legs.len() + 4);
    let mut used: Vec<Q> = Vec::new();
    let mut punctures = Vec::new();
    for leg in &graph.legs {
        let x = match leg.at.as_deref().and_then(parse_point) {
            Some(x) => x,
            None => pos
                .iter()
                .find(|x| !used.contains(x))
                .cloned()
                .ok_or_else(|| BlockError::Unsupported("no free rational point on the cover for a leg".into()))?,
        };
        used.push(x.clone());
        punctures.push(Puncture { x, label: labels.get(&leg.label)?.clone() });
    }
    let r = coinvariant_rank(alg, cfg.level, &model, &rho, &punctures, cfg.depth)?;
    Ok(row(r.rank, r.stabilized, r.depth_used, "coinvariants"))
}

fn cmd_rank(cfg: &RunConfig, input: &PathBuf, labels_path: Option<&PathBuf>) -> Outcome {
    let text = match std::fs::read_to_string(input) {
        Ok(t) => t,
        Err(e) => return Outcome::usage(format!("{}: {e}", input.display())),
    };
    let mut value: Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(e) => return Outcome::usage(format!("{}: line {} column {}: {e}", input.display(), e.line(), e.column())),
    };
    let embedded = value.as_object_mut().and_then(|o| o.remove("labels"));
    let graph: CoveringGraph = match serde_json::from_value(value) {
        Ok(g) => g,
        Err(e) => return Outcome::usage(format!("{}: {e}", input.display())),
    };
    let labels: LabelAssignment = match labels_path {
        Some(p) => {
            let t = match std::fs::read_to_string(p) {
                Ok(t) => t,
                Err(e) => return Outcome::usage(format!("{}: {e}", p.display())),
            };
            match LabelAssignment::from_json(&t) {
                Ok(l) => l,
                Err(e) => return Outcome::usage(format!("{}: line {} column {}: {e}", p.display(), e.line(), e.column())),
            }
        }
        None => match embedded.map(serde_json::from_value::<LabelAssignment>).transpose() {
            Ok(l) => l.unwrap_or_default(),
            Err(e) => return Outcome::usage(format!("{}: labels: {e}", input.display())),
        },
    };
    match rank_graph(cfg, &graph, &labels) {
        Ok(row) => {
            let stdout = match cfg.format {
                Format::Json => to_json(&row),
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    w.serialize(&row).expect("in-memory write");
                    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
                }
            };
            Outcome { code: EXIT_PASS, stdout, stderr: String::new() }
        }
        Err(e @ (BlockError::InvalidGraph(_) | BlockError::MissingLabel(_) | BlockError::Level(..))) => {
            Outcome::usage(e.to_string())
        }
        Err(e) => Outcome { code: EXIT_FAIL, stdout: String::new(), stderr: e.to_string() },
    }
}

/// Both Sugawara identities for |k|, |l| ≤ 2 on H_ℓ(λ) for every λ ∈ P_ℓ,
/// plus seeded spot checks on random words.
pub fn virasoro_suite(cfg: &RunConfig) -> Result<Vec<CheckLine>, String> {
    let alg = &cfg.alg;
    let cas = casimir(alg);
    let hv = qi(alg.dual_coxeter_from_comarks());
    let mut out = vec![line(
        "dual Coxeter number from the Casimir",
        cas.dual_coxeter == hv,
        format!("{}", cas.dual_coxeter),
    )];
    for w in alg.enumerate_levels(cfg.level) {
        let m = integrable_module(cfg.alg.clone(), &w, cfg.level, cfg.depth.min(3)).map_err(|e| e.to_string())?;
        let r = virasoro_window_check(&m, &cas, 2, 2).map_err(|e| e.to_string())?;
        let mut ok = r.ok();
        let mut detail = match &r.failure {
            Some(f) => f.clone(),
            None => format!(
                "{} pairs checked, {} outside the window, {} mode checks",
                r.pairs_checked, r.pairs_outside, r.mode_checks
            ),
        };
        for k in -2..=2 {
            if let Err(f) = fock_compatibility_check(&m, &cas, k, 8, cfg.seed).map_err(|e| e.to_string())? {
                ok = false;
                detail = format!("word check k={k}: {f}");
            }
        }
        out.push(line(format!("Virasoro relations on H_{}({w})", cfg.level), ok, detail));
    }
    Ok(out)
}

/// ε(W) for every W ∈ P_ℓ and the sewing map at τ = 0.
pub fn sewing_suite(cfg: &RunConfig) -> Result<Vec<CheckLine>, String> {
    let mut out = Vec::new();
    let depth = cfg.depth.min(3);
    for w in cfg.alg.enumerate_levels(cfg.level) {
        let s = sewing_element(cfg.alg.clone(), &w, cfg.level, depth).map_err(|e| e.to_string())?;
        let ann = s.annihilation_check(3).map_err(|e| e.to_string())?;
        let ok = s.eps0_is_dual() && s.bidegrees_ok() && ann.is_ok();
        let detail = match ann {
            Ok(n) => format!("depth {depth}, {n} annihilation checks"),
            Err(f) => format!("annihilation fails at {f}"),
        };
        out.push(line(format!("sewing element for W = {w}"), ok, detail));
    }
    let v = Weight::zero(cfg.alg.rank);
    let rep = sewing_map_check(cfg.alg.clone(), cfg.level, &v, 6).map_err(|e| e.to_string())?;
    out.push(line(
        "sewing map at tau = 0 onto nodal blocks",
        rep.ok(),
        format!(
            "image rank {}, nodal rank {}, degeneration rank {}",
            rep.image_rank, rep.nodal_rank, rep.degeneration_rank
        ),
    ));
    Ok(out)
}

/// Ranks with 0, 1 and 2 trivial legs appended agree: every (λ, λ*) pair
/// and a triple of equal labels on the untwisted cover, or the vacuum on
/// two twisted Kummer models when --rho is nontrivial.
pub fn propagation_suite(cfg: &RunConfig) -> Result<Vec<CheckLine>, String> {
    let alg = &cfg.alg;
    let mut runs: Vec<(String, KummerModel, GammaAction, Vec<Label>)> = Vec::new();
    match cfg.rho {
        None | Some(RhoSpec::Trivial) => {
            let (model, rho) = untwisted_setup(alg);
            let ws = alg.enumerate_levels(cfg.level);
            for w in &ws {
                let d = dual_weight(alg, w).map_err(|e| e.to_string())?;
                runs.push((String::new(), model.clone(), rho.clone(), vec![Label::new(w, 0), Label::new(&d, 0)]));
            }
            if let Some(w) = ws.iter().find(|w| !w.is_zero()) {
                runs.push((String::new(), model, rho, vec![Label::new(w, 0); 3]));
            }
        }
        Some(_) => {
            let rho = cfg.gamma_action()?;
            let vac = vec![Label::new(&Weight::zero(alg.rank), 0)];
            let power = KummerModel::power(cfg.p, 1).map_err(|e| e.to_string())?;
            runs.push((format!("y^{} = x: ", cfg.p), power, rho.clone(), vac.clone()));
            let chars = vec![(qi(0), 1), (qi(-1), cfg.p - 1)];
            let two = KummerModel::new(cfg.p, chars).map_err(|e| e.to_string())?;
            runs.push((format!("y^{} = x(x+1)^{}: ", cfg.p, cfg.p - 1), two, rho, vac));
        }
    }
    let mut out = Vec::new();
    for (prefix, model, rho, labels) in runs {
        let names: Vec<String> = labels.iter().map(|l| l.weight().to_string()).collect();
        for extra in 1..=2 {
            let rep = propagation_check(alg.clone(), cfg.level, &model, &rho, &labels, extra, cfg.depth)
                .map_err(|e| e.to_string())?;
            out.push(line(
                format!("{prefix}{} + {extra} trivial legs", names.join(" ")),
                rep.ok(),
                format!("rank {} -> {} (depths {} and {})", rep.base.rank, rep.extended.rank, rep.base.depth_used, rep.extended.depth_used),
            ));
        }
    }
    Ok(out)
}

fn cmd_check(cfg: &RunConfig, suite: Suite) -> Outcome {
    let (name, lines) = match suite {
        Suite::Virasoro => ("virasoro", virasoro_suite(cfg)),
        Suite::Sewing => ("sewing", sewing_suite(cfg)),
        Suite::Propagation => ("propagation", propagation_suite(cfg)),
        Suite::Torsor => (
            "torsor",
            torsor_suite().map_err(|e| e.to_string()).map(|ls| ls.into_iter().map(|l| line(l.name, l.pass, l.detail)).collect()),
        ),
    };
    match lines {
        Ok(lines) => {
            let pass = lines.iter().all(|l| l.pass);
            let report = json!({"suite": name, "algebra": cfg.algebra, "level": cfg.level, "pass": pass, "checks": lines});
            Outcome { code: if pass { EXIT_PASS } else { EXIT_FAIL }, stdout: to_json(&report), stderr: String::new() }
        }
        Err(e) => Outcome { code: EXIT_FAIL, stdout: to_json(&json!({"suite": name, "pass": false, "error": e})), stderr: e },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_rows() {
        let out = run_from(["twistcb", "weights", "--algebra", "A1", "--level", "1"]);
        assert_eq!(out.code, 0);
        let v: Vec<Value> = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(v.len(), 2);
        let out = run_from(["twistcb", "weights", "--algebra", "A2", "--level", "1", "--rho", "outer"]);
        let v: Vec<Value> = serde_json::from_str(&out.stdout).unwrap();
        let orbits: Vec<u64> = v.iter().map(|r| r["orbit"].as_u64().unwrap()).collect();
        assert_eq!(orbits, vec![0, 1, 1]);
        let out = run_from(["twistcb", "weights", "--level", "0"]);
        assert_eq!(serde_json::from_str::<Vec<Value>>(&out.stdout).unwrap().len(), 1);
    }

    #[test]
    fn usage_errors() {
        assert_eq!(run_from(["twistcb", "weights", "--level", "9"]).code, EXIT_USAGE);
        assert_eq!(run_from(["twistcb", "bogus"]).code, EXIT_USAGE);
        assert_eq!(run_from(["twistcb", "check", "nosuch"]).code, EXIT_USAGE);
        assert_eq!(run_from(["twistcb", "weights", "--p", "4"]).code, EXIT_USAGE);
        assert_eq!(run_from(["twistcb", "weights", "--algebra", "A1", "--rho", "outer"]).code, EXIT_USAGE);
    }
}
