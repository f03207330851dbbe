//! Command-line front end: builds, audits, Y-towers, densities and volcano tools,
//! with JSON reports and DOT exports.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::matgroup::generator_density;
use crate::tower::{Selection, Tower, TowerParams, DEFAULT_DECK_CAP, DEFAULT_GRAPH_CAP};
use crate::voltgraph::{random_voltage_graph, Connectivity, DirectedMultigraph};
use crate::volcano::{
    colored_dot, double_intertwine, double_intertwine_colors, gen_tectonic_crater, gen_volcano, parse_colors, recognize,
    CraterSpec, EdgeColor, GraphClass, TectonicParams, Verdict,
};
use crate::field::DEFAULT_FIELD_CAP;

pub const SCHEMA: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "isotower", version, about = "Isogeny graphs with level structure as voltage-graph coverings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build levels 0..=n and write DOT files plus a JSON manifest.
    Build(TowerArgs),
    /// Run the covering and Galois checks and report a verdict per check.
    Audit(AuditArgs),
    /// Build the determinant quotient graphs Y_n and audit their deck groups.
    YTower(YArgs),
    /// Fraction of primes l generating (Z/p^2 N)^×.
    Density(DensityArgs),
    #[command(subcommand)]
    Volcano(VolcanoCommand),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SelectionArg {
    All,
    Supersingular,
    Ordinary,
}

impl From<SelectionArg> for Selection {
    fn from(s: SelectionArg) -> Selection {
        match s {
            SelectionArg::All => Selection::All,
            SelectionArg::Supersingular => Selection::Supersingular,
            SelectionArg::Ordinary => Selection::Ordinary,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct TowerArgs {
    #[arg(long)]
    pub q: u64,
    /// Extension degree; chosen automatically when omitted.
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long)]
    pub l: u64,
    #[arg(long)]
    pub p: u64,
    #[arg(long = "N", default_value_t = 1)]
    pub level: u64,
    #[arg(long, default_value_t = 1)]
    pub n: u32,
    #[arg(long, value_enum, default_value = "all")]
    pub selection: SelectionArg,
    /// Use Tate bases with a common Weil pairing value.
    #[arg(long)]
    pub normalize: bool,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_FIELD_CAP)]
    pub cap_field: u64,
    #[arg(long, default_value_t = DEFAULT_GRAPH_CAP)]
    pub cap_graph: u64,
}

impl TowerArgs {
    fn params(&self) -> TowerParams {
        let mut p = TowerParams::new(self.q, self.l, self.p, self.level, self.n).with_selection(self.selection.into());
        p.k = self.k;
        p.normalize = self.normalize;
        p.field_cap = self.cap_field;
        p.graph_cap = self.cap_graph;
        p
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// Supersingular component count against the unit index.
    SsComponents,
    /// Galois status of each level over each base component.
    Galois,
    /// Growth class of ordinary component counts.
    OrdinaryGrowth,
    /// Factorial certificate that ordinary levels are not Galois.
    OrdinaryNotGalois,
    /// Deck group of a stabilized tower against the congruence subgroup.
    StabilizedDeck,
    /// Direct Weil-pairing Y-graph against the determinant derived graph.
    YIsomorphism,
    /// Deck group of Y_n over Y_m is cyclic of order p^(n-m).
    YDeck,
    /// Seeded random voltage graphs: orbit count, transitivity, factorial shortcut.
    RandomVoltage,
}

impl Check {
    fn name(self) -> &'static str {
        match self {
            Check::SsComponents => "ss_components",
            Check::Galois => "galois",
            Check::OrdinaryGrowth => "ordinary_growth",
            Check::OrdinaryNotGalois => "ordinary_not_galois",
            Check::StabilizedDeck => "stabilized_deck",
            Check::YIsomorphism => "y_isomorphism",
            Check::YDeck => "y_deck",
            Check::RandomVoltage => "random_voltage",
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct AuditArgs {
    #[command(flatten)]
    pub tower: TowerArgs,
    /// Restrict the report to these checks.
    #[arg(long = "theorem", value_enum)]
    pub checks: Vec<Check>,
    #[arg(long, default_value_t = DEFAULT_DECK_CAP)]
    pub cap_deck: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone)]
pub struct YArgs {
    #[command(flatten)]
    pub tower: TowerArgs,
    /// Skip the direct Weil-pairing construction.
    #[arg(long)]
    pub no_direct: bool,
}

#[derive(Args, Debug, Clone)]
pub struct DensityArgs {
    #[arg(long)]
    pub p: u64,
    #[arg(long = "N", default_value_t = 1)]
    pub level: u64,
    #[arg(long, default_value_t = 100_000)]
    pub bound: u64,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum VolcanoCommand {
    /// Generate a crater, volcano truncation or tectonic crater as DOT.
    Gen(GenArgs),
    /// Decide whether a DOT or JSON graph belongs to a class.
    Recognize(RecognizeArgs),
}

#[derive(Args, Debug, Clone)]
pub struct GenArgs {
    #[arg(long, default_value_t = 2)]
    pub l: u64,
    /// `cycle:LEN` or `isolated:COUNT`.
    #[arg(long, conflicts_with = "tectonic")]
    pub crater: Option<String>,
    /// `r,s,t,c`.
    #[arg(long)]
    pub tectonic: Option<String>,
    /// Truncation depth; without it only the crater is generated.
    #[arg(long)]
    pub depth: Option<u32>,
    /// Output the double intertwinement of the generated graph.
    #[arg(long)]
    pub intertwine: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ClassArg {
    Crater,
    Volcano,
    TectonicCrater,
    TectonicVolcano,
    DoubleIntertwinement,
}

#[derive(Args, Debug, Clone)]
pub struct RecognizeArgs {
    #[arg(long, value_enum)]
    pub class: ClassArg,
    #[arg(long, default_value_t = 2)]
    pub l: u64,
    #[arg(long, default_value_t = 0)]
    pub depth: u32,
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Writes via a temporary file and a rename.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::InvalidParams(format!("{}: {e}", dir.display())))?;
        }
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(|e| Error::InvalidParams(format!("{}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| Error::InvalidParams(format!("{}: {e}", path.display())))
}

fn report(mut body: Value) -> Value {
    if let Value::Object(m) = &mut body {
        m.insert("schema".into(), json!(SCHEMA));
    }
    body
}

fn emit(body: &Value, out_dir: Option<&Path>, file: &str) -> Result<String> {
    let text = serde_json::to_string_pretty(body).unwrap() + "\n";
    if let Some(dir) = out_dir {
        write_atomic(&dir.join(file), &text)?;
    }
    Ok(text)
}

fn cmd_build(a: &TowerArgs) -> Result<(String, bool)> {
    let tower = Tower::build(a.params())?;
    let region = tower.region_all();
    let mut levels = Vec::new();
    let mut dots = Vec::new();
    let reports = tower.classify_components(a.n)?;
    for n in 0..=a.n {
        let d = tower.derived(&region, n)?;
        let values = if n == 0 { vec![0; region.edges.len()] } else { tower.voltage(&region, n)?.values };
        let parts = d.total.components(Connectivity::Weak);
        let per_component: Vec<Value> = reports
            .iter()
            .map(|r| json!({"component": r.component, "reduction": r.reduction, "cm_disc": r.cm_disc, "count": r.counts[n as usize]}))
            .collect();
        levels.push(json!({
            "n": n,
            "vertices": d.total.num_vertices,
            "edges": d.total.num_edges(),
            "components": parts.count,
            "per_component": per_component,
        }));
        let attrs = |e: usize| format!("voltage={}", values[d.edge_map[e] as usize]);
        dots.push((format!("level_{n}.dot"), d.total.to_dot(&format!("level_{n}"), Some(&parts.labels), &attrs)));
    }
    if let Some(dir) = &a.out_dir {
        for (name, text) in &dots {
            write_atomic(&dir.join(name), text)?;
        }
    }
    let body = report(json!({
        "command": "build",
        "params": tower.params,
        "k": tower.k,
        "curves": tower.curves.len(),
        "levels": levels,
    }));
    Ok((emit(&body, a.out_dir.as_deref(), "manifest.json")?, true))
}

#[derive(Serialize)]
struct CheckResult {
    check: &'static str,
    verdict: &'static str,
    witness: Value,
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

fn cmd_audit(a: &AuditArgs) -> Result<(String, bool)> {
    let wants = |c: Check| a.checks.is_empty() || a.checks.contains(&c);
    let mut params = a.tower.params();
    params.normalize = true;
    let tower = Tower::build(params)?;
    let n_max = a.tower.n;
    let mut results: Vec<CheckResult> = Vec::new();
    let parts = tower.base_components();
    let reports = tower.classify_components(n_max)?;

    if wants(Check::SsComponents) && reports.iter().any(|r| r.reduction == "supersingular") {
        for n in 0..=n_max {
            let c = tower.supersingular_count_check(n)?;
            results.push(CheckResult { check: Check::SsComponents.name(), verdict: verdict(c.pass), witness: json!(c) });
        }
    }
    if wants(Check::Galois) {
        for c in 0..parts.count {
            for n in 1..=n_max {
                let g = tower.galois_audit(c, n, a.cap_deck)?;
                // connected levels are Galois; disconnected ones are not
                let v = match g.verdict {
                    "undecided" => "undecided",
                    "galois" => verdict(g.components == 1),
                    _ => verdict(g.components > 1),
                };
                results.push(CheckResult { check: Check::Galois.name(), verdict: v, witness: json!(g) });
            }
        }
    }
    for r in reports.iter().filter(|r| r.reduction == "ordinary") {
        if let Some(fit) = &r.fit {
            if wants(Check::OrdinaryGrowth) {
                let v = if !fit.onset_reached { "undecided" } else { "pass" };
                results.push(CheckResult {
                    check: Check::OrdinaryGrowth.name(),
                    verdict: v,
                    witness: json!({"component": r.component, "counts": r.counts, "fit": fit,
                        "note": if fit.onset_reached { "" } else { "onset not reached" }}),
                });
            }
            if wants(Check::OrdinaryNotGalois) && n_max >= 1 {
                let g = tower.galois_audit(r.component, n_max, a.cap_deck)?;
                let v = match g.verdict {
                    "not_galois" => "pass",
                    "galois" => "fail",
                    _ => "undecided",
                };
                results.push(CheckResult { check: Check::OrdinaryNotGalois.name(), verdict: v, witness: json!(g) });
            }
        }
    }
    if wants(Check::StabilizedDeck) && n_max >= 1 {
        for r in reports.iter().filter(|r| r.reduction == "supersingular") {
            let s = tower.stabilized_deck_audit(r.component, n_max, n_max - 1)?;
            let v = if s.verdict == "pass" { "pass" } else if s.verdict == "fail" { "fail" } else { "undecided" };
            results.push(CheckResult { check: Check::StabilizedDeck.name(), verdict: v, witness: json!(s) });
        }
    }
    if wants(Check::YIsomorphism) {
        if tower.params.level > tower.c_q {
            for n in 1..=n_max {
                let y = tower.build_y_graph(n, true)?;
                let pass = y.agrees_smallest == Some(true) && y.agrees_largest == Some(true) && y.beta_generates_l;
                results.push(CheckResult {
                    check: Check::YIsomorphism.name(),
                    verdict: verdict(pass),
                    witness: json!({"n": n, "components": y.components, "beta_image": y.beta_image,
                        "beta_generates_l": y.beta_generates_l, "agrees_smallest": y.agrees_smallest,
                        "agrees_largest": y.agrees_largest, "component_bound": tower.y_component_bound(n)}),
                });
            }
        } else {
            results.push(CheckResult {
                check: Check::YIsomorphism.name(),
                verdict: "undecided",
                witness: json!({"reason": format!("N = {} does not exceed C_q = {}", tower.params.level, tower.c_q)}),
            });
        }
    }
    if wants(Check::YDeck) && n_max >= 1 {
        let y = tower.y_tower_audit(n_max, n_max - 1)?;
        let v = match y.verdict {
            "pass" => "pass",
            "fail" => "fail",
            _ => "undecided",
        };
        results.push(CheckResult { check: Check::YDeck.name(), verdict: v, witness: json!(y) });
    }
    if wants(Check::RandomVoltage) {
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
        let mut ok = true;
        let mut cases = Vec::new();
        for _ in 0..10 {
            let v = random_voltage_graph(&mut rng, 12, 10);
            let orbits = v.component_orbit_count(0)?;
            let d = v.derived_graph();
            let comps = d.total.components(Connectivity::Weak).count;
            let verdict = d.galois_verdict(true)?;
            let full = d.galois_verdict(false)?;
            let agree = orbits == comps && (!verdict.by_factorial_bound || !full.galois);
            ok &= agree && v.transitivity_check()?;
            cases.push(json!({"sheets": v.sheets(), "base_vertices": v.graph.num_vertices, "components": comps, "orbits": orbits}));
        }
        results.push(CheckResult { check: Check::RandomVoltage.name(), verdict: verdict(ok), witness: json!({"seed": a.seed, "cases": cases}) });
    }
    let failed = results.iter().any(|r| r.verdict == "fail");
    let body = report(json!({
        "command": "audit",
        "params": tower.params,
        "k": tower.k,
        "components": reports,
        "results": results,
    }));
    Ok((emit(&body, a.tower.out_dir.as_deref(), "audit.json")?, !failed))
}

fn cmd_y_tower(a: &YArgs) -> Result<(String, bool)> {
    let mut params = a.tower.params();
    params.normalize = true;
    let tower = Tower::build(params)?;
    let direct = !a.no_direct;
    let feasible = tower.params.level > tower.c_q;
    let mut levels = Vec::new();
    let mut ok = true;
    for n in 0..=a.tower.n {
        let y = tower.build_y_graph(n, direct)?;
        ok &= y.beta_generates_l && y.agrees_smallest != Some(false) && y.agrees_largest != Some(false);
        levels.push(json!({
            "n": n,
            "vertices": y.derived.total.num_vertices,
            "components": y.components,
            "component_bound_per_base_component": tower.y_component_bound(n),
            "beta_image": y.beta_image,
            "beta_generates_l": y.beta_generates_l,
            "direct_agrees_smallest": y.agrees_smallest,
            "direct_agrees_largest": y.agrees_largest,
        }));
    }
    let deck = if a.tower.n >= 1 { Some(tower.y_tower_audit(a.tower.n, a.tower.n - 1)?) } else { None };
    if let Some(d) = &deck {
        ok &= d.verdict != "fail";
    }
    let body = report(json!({
        "command": "y-tower",
        "params": tower.params,
        "k": tower.k,
        "c_q": tower.c_q,
        "direct_construction": if !direct { "skipped" } else if feasible { "run" } else { "infeasible: N does not exceed C_q" },
        "base_components": tower.base_components().count,
        "levels": levels,
        "deck": deck,
    }));
    Ok((emit(&body, a.tower.out_dir.as_deref(), "y_tower.json")?, ok))
}

fn cmd_density(a: &DensityArgs) -> Result<(String, bool)> {
    let d = generator_density(a.p, a.level, a.bound)?;
    let body = report(json!({"command": "density", "density": d}));
    Ok((emit(&body, a.out_dir.as_deref(), "density.json")?, true))
}

fn parse_crater(s: &str) -> Result<CraterSpec> {
    let (kind, n) = s.split_once(':').ok_or_else(|| Error::Parse(format!("crater {s:?}: expected cycle:LEN or isolated:COUNT")))?;
    let n: usize = n.parse().map_err(|_| Error::Parse(format!("crater size {n:?}")))?;
    match kind {
        "cycle" => Ok(CraterSpec::Cycle(n)),
        "isolated" => Ok(CraterSpec::Isolated(n)),
        _ => Err(Error::Parse(format!("crater kind {kind:?}"))),
    }
}

fn cmd_volcano_gen(a: &GenArgs) -> Result<(String, bool)> {
    let crater = match (&a.tectonic, &a.crater) {
        (Some(t), _) => CraterSpec::Tectonic(TectonicParams::parse(t)?),
        (None, Some(c)) => parse_crater(c)?,
        (None, None) => return Err(Error::InvalidParams("give --crater or --tectonic".into())),
    };
    let (mut graph, mut colors) = match (crater, a.depth) {
        (CraterSpec::Tectonic(p), None) => gen_tectonic_crater(p)?,
        (c, d) => {
            let v = gen_volcano(a.l, c, d.unwrap_or(0))?;
            (v.graph, v.edge_colors)
        }
    };
    if a.intertwine {
        colors = double_intertwine_colors(&colors);
        graph = double_intertwine(&graph);
    }
    let dot = colored_dot(&graph, &colors, "volcano");
    if let Some(path) = &a.out {
        write_atomic(path, &dot)?;
    }
    let body = report(json!({
        "command": "volcano gen",
        "crater": crater,
        "depth": a.depth,
        "intertwined": a.intertwine,
        "vertices": graph.num_vertices,
        "edges": graph.num_edges(),
        "dot": if a.out.is_some() { Value::Null } else { json!(dot) },
    }));
    Ok((serde_json::to_string_pretty(&body).unwrap() + "\n", true))
}

#[derive(serde::Deserialize)]
struct ColoredGraph {
    graph: DirectedMultigraph,
    #[serde(default)]
    edge_colors: Vec<Option<EdgeColor>>,
}

fn read_graph(path: &Path) -> Result<(DirectedMultigraph, Vec<Option<EdgeColor>>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::InvalidParams(format!("{}: {e}", path.display())))?;
    if text.trim_start().starts_with('{') {
        if let Ok(c) = serde_json::from_str::<ColoredGraph>(&text) {
            c.graph.validate()?;
            return Ok((c.graph, c.edge_colors));
        }
        let g: DirectedMultigraph = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
        g.validate()?;
        return Ok((g, Vec::new()));
    }
    let (g, raw) = DirectedMultigraph::from_dot(&text)?;
    Ok((g, parse_colors(&raw)))
}

fn cmd_volcano_recognize(a: &RecognizeArgs) -> Result<(String, bool)> {
    let (g, colors) = read_graph(&a.input)?;
    let class = match a.class {
        ClassArg::Crater => GraphClass::Crater,
        ClassArg::Volcano => GraphClass::Volcano { l: a.l, depth: a.depth },
        ClassArg::TectonicCrater => GraphClass::TectonicCrater,
        ClassArg::TectonicVolcano => GraphClass::TectonicVolcano { l: a.l, depth: a.depth },
        ClassArg::DoubleIntertwinement => GraphClass::DoubleIntertwinement,
    };
    let r = recognize(&g, &colors, class);
    let summary = match (r.verdict, r.params) {
        (Verdict::Yes, Some(p)) => format!("(r,s,t,c)=({},{},{},{})", p.r, p.s, p.t, p.c),
        (Verdict::Yes, None) => "yes".into(),
        (Verdict::No, _) => "no".into(),
        (Verdict::Undecided, _) => "undecided".into(),
    };
    let body = report(json!({"command": "volcano recognize", "summary": summary, "recognition": r}));
    let text = serde_json::to_string_pretty(&body).unwrap() + "\n";
    if let Some(path) = &a.out {
        write_atomic(path, &text)?;
    }
    Ok((text, true))
}

pub fn dispatch(cli: &Cli) -> Result<(String, bool)> {
    match &cli.command {
        Command::Build(a) => cmd_build(a),
        Command::Audit(a) => cmd_audit(a),
        Command::YTower(a) => cmd_y_tower(a),
        Command::Density(a) => cmd_density(a),
        Command::Volcano(VolcanoCommand::Gen(a)) => cmd_volcano_gen(a),
        Command::Volcano(VolcanoCommand::Recognize(a)) => cmd_volcano_recognize(a),
    }
}

/// Runs the command line and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok((text, ok)) => {
            print!("{text}");
            if ok {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            let body = report(json!({"error": e.to_string(), "exit_code": e.exit_code()}));
            println!("{}", serde_json::to_string(&body).unwrap());
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> Result<(String, bool)> {
        let cli = Cli::try_parse_from(std::iter::once("isotower").chain(args.iter().copied())).unwrap();
        dispatch(&cli)
    }

    #[test]
    fn guard_exit_code() {
        let e = run(&["build", "--q", "5", "--l", "2", "--p", "5"]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert_eq!(main_with_args(["isotower", "build", "--q", "5", "--l", "2", "--p", "5"]), 2);
        assert_eq!(main_with_args(["isotower", "build", "--q", "5", "--l", "2", "--p", "3", "--cap-graph", "10"]), 3);
    }

    #[test]
    fn build_is_deterministic() {
        let dir = std::env::temp_dir().join(format!("isotower-cli-{}", std::process::id()));
        let args = ["build", "--q", "5", "--l", "2", "--p", "3", "--N", "1", "--n", "1", "--selection", "supersingular", "--out-dir", dir.to_str().unwrap()];
        let (a, _) = run(&args).unwrap();
        let first = fs::read_to_string(dir.join("level_1.dot")).unwrap();
        let (b, _) = run(&args).unwrap();
        assert_eq!(a, b);
        assert_eq!(first, fs::read_to_string(dir.join("level_1.dot")).unwrap());
        let v: Value = serde_json::from_str(&a).unwrap();
        assert_eq!(v["schema"], 1);
        assert_eq!(v["levels"][1]["vertices"], 48);
        fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn audit_filter() {
        let (text, ok) = run(&["audit", "--q", "5", "--l", "2", "--p", "3", "--n", "1", "--selection", "supersingular", "--theorem", "ss-components", "--theorem", "galois"]).unwrap();
        assert!(ok);
        let v: Value = serde_json::from_str(&text).unwrap();
        let checks: Vec<&str> = v["results"].as_array().unwrap().iter().map(|r| r["check"].as_str().unwrap()).collect();
        assert!(checks.iter().all(|c| *c == "ss_components" || *c == "galois"));
        assert!(v["results"].as_array().unwrap().iter().all(|r| r["verdict"] == "pass"));
    }

    #[test]
    fn volcano_roundtrip_through_files() {
        let dir = std::env::temp_dir().join(format!("isotower-volcano-{}", std::process::id()));
        let dot = dir.join("t.dot");
        let (text, _) = run(&["volcano", "gen", "--tectonic", "5,1,1,2", "--out", dot.to_str().unwrap()]).unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["vertices"], 5);
        let (text, _) = run(&["volcano", "recognize", "--class", "tectonic-crater", dot.to_str().unwrap()]).unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["summary"], "(r,s,t,c)=(5,1,1,2)");
        let (text, _) = run(&["volcano", "gen", "--tectonic", "5,1,1,2", "--intertwine", "--out", dot.to_str().unwrap()]).unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["vertices"], 10);
        let (text, _) = run(&["volcano", "recognize", "--class", "double-intertwinement", dot.to_str().unwrap()]).unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["summary"], "yes");
        fs::write(&dot, "digraph g {\n 0 -> 1;\n 1 -> 2;\n 2 -> 0;\n 0 -> 2;\n}\n").unwrap();
        let (text, _) = run(&["volcano", "recognize", "--class", "tectonic-crater", dot.to_str().unwrap()]).unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["summary"], "no");
        assert!(v["recognition"]["reason"].is_string());
        fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn density_report() {
        let (text, _) = run(&["density", "--p", "3", "--bound", "1000"]).unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["density"]["primes"], 167);
    }
}
