//! The `lekit` command line: argument parsing, file I/O, reports and the
//! closure-condition falsifier.
//!
//! Exit codes: 0 for PASS (valid, compatible, confirmed), 1 for FAIL,
//! 2 for input errors.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command as Process, Stdio};

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::algebra::{homomorphisms, verify_normality, ComplexAlgebra, FiniteAlgebra};
use crate::constructions::{coproduct, filter_ideal_extension, filter_ideal_frame};
use crate::error::{Error, Result};
use crate::fol::{standard_translate, translate_sequent, SequentForm, Var};
use crate::frame::Frame;
use crate::morphism::{check_pmorphism, dual_pmorphism, is_injective, is_surjective, PMorphism};
use crate::polarity::{Polarity, Sort, DEFAULT_CONCEPT_CAP};
use crate::random::random_frame;
use crate::semantics::{algebra_validates, frame_validates, DEFAULT_BUDGET};
use crate::syntax::{parse_formula, parse_sequent, signature_from_value, Family, Signature, Variance};

#[derive(Debug, Parser)]
#[command(name = "lekit", version, about = "Polarity-based semantics of normal lattice-expansion logics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Print a machine-readable JSON report.
    #[arg(long, global = true)]
    pub json: bool,
    /// Seed for randomized search.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Maximum number of concepts to enumerate.
    #[arg(long, global = true, env = "LEKIT_CAP", default_value_t = DEFAULT_CONCEPT_CAP)]
    pub cap: usize,
    /// Maximum number of valuations to enumerate.
    #[arg(long, global = true, default_value_t = DEFAULT_BUDGET)]
    pub budget: u128,
    /// Skip the compatibility check on input frames.
    #[arg(long, global = true)]
    pub no_check: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check frame compatibility, or normality of an algebra.
    Check {
        file: PathBuf,
        /// Also run the subset-based compatibility check and compare.
        #[arg(long)]
        alt: bool,
    },
    /// List the concepts of a frame's polarity.
    Concepts { file: PathBuf },
    /// Decide validity of a sequent on a frame or algebra.
    Valid { file: PathBuf, sequent: String },
    /// Print the coproduct of frames as frame JSON.
    Coproduct {
        #[arg(required = true)]
        frames: Vec<PathBuf>,
    },
    /// Verify a p-morphism between two frames.
    Pmorphism {
        source: PathBuf,
        target: PathBuf,
        morphism: PathBuf,
    },
    /// Print the filter-ideal frame of an algebra, or the filter-ideal
    /// extension of a frame.
    FilterIdeal { file: PathBuf },
    /// Translate a sequent (or a formula) into two-sorted first-order logic.
    Translate {
        input: String,
        #[arg(long, value_enum, default_value_t = FormArg::ImplX)]
        form: FormArg,
        /// Signature JSON, or a frame or algebra file carrying one.
        #[arg(long)]
        signature: Option<PathBuf>,
        /// Variable sort when translating a formula.
        #[arg(long, value_enum, default_value_t = SortArg::W)]
        sort: SortArg,
    },
    /// Check that witnesses show a frame class fails a closure condition.
    Falsify {
        #[arg(long, value_enum, required_unless_present = "condition_cmd")]
        condition: Option<BuiltinCondition>,
        /// Shell command deciding membership: reads frame JSON on stdin,
        /// exits 0 if the frame is in the class and 1 if not.
        #[arg(long, conflicts_with = "condition")]
        condition_cmd: Option<String>,
        #[arg(long, value_enum)]
        construction: Construction,
        /// Witness files: frames for `coproduct`, `<source> <target>
        /// <morphism>` for morphisms, one frame for `filter-ideal-reflection`.
        witnesses: Vec<PathBuf>,
        /// Search random {box}-frames for witnesses instead.
        #[arg(long)]
        search: bool,
        #[arg(long, default_value_t = 3)]
        max_size: usize,
        #[arg(long, default_value_t = 2000)]
        trials: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormArg {
    ImplX,
    ImplY,
    Pairing,
}

impl From<FormArg> for SequentForm {
    fn from(f: FormArg) -> Self {
        match f {
            FormArg::ImplX => SequentForm::ImplX,
            FormArg::ImplY => SequentForm::ImplY,
            FormArg::Pairing => SequentForm::Pairing,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SortArg {
    W,
    U,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BuiltinCondition {
    /// R = N^c
    #[value(name = "R-equals-N-complement")]
    #[serde(rename = "R-equals-N-complement")]
    REqualsNComplement,
    /// ∀u ∃w ¬(w R u)
    #[value(name = "every-u-has-nonR-w")]
    #[serde(rename = "every-u-has-nonR-w")]
    EveryUHasNonRW,
    /// R^c ⊆ N
    #[value(name = "R-complement-subset-N")]
    #[serde(rename = "R-complement-subset-N")]
    RComplementSubsetN,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Construction {
    Coproduct,
    GeneratedSubframe,
    PMorphicImage,
    FilterIdealReflection,
}

/// A decidable property of finite frames.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClosureCondition {
    Builtin(BuiltinCondition),
    /// A shell command reading frame JSON on stdin.
    External(String),
}

/// Whether a frame satisfies a condition, with a violating datum if not.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConditionCheck {
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub datum: Option<String>,
}

impl ClosureCondition {
    pub fn name(&self) -> String {
        match self {
            ClosureCondition::Builtin(BuiltinCondition::REqualsNComplement) => "R-equals-N-complement".into(),
            ClosureCondition::Builtin(BuiltinCondition::EveryUHasNonRW) => "every-u-has-nonR-w".into(),
            ClosureCondition::Builtin(BuiltinCondition::RComplementSubsetN) => "R-complement-subset-N".into(),
            ClosureCondition::External(cmd) => format!("`{cmd}`"),
        }
    }

    pub fn check(&self, frame: &Frame) -> Result<ConditionCheck> {
        match self {
            ClosureCondition::Builtin(b) => check_builtin(*b, frame),
            ClosureCondition::External(cmd) => check_external(cmd, frame),
        }
    }
}

/// Index of the unique unary monotone g-connective, whose relation is a
/// subset of `W × U`.
fn box_relation(frame: &Frame) -> Result<usize> {
    let found: Vec<usize> = frame
        .signature
        .connectives
        .iter()
        .enumerate()
        .filter(|(_, c)| c.family == Family::G && c.order_type == [Variance::One])
        .map(|(i, _)| i)
        .collect();
    match found.as_slice() {
        [i] => Ok(*i),
        [] => Err(Error::Signature(
            "the built-in conditions need a unary monotone g-connective".into(),
        )),
        _ => Err(Error::Signature(
            "the built-in conditions need exactly one unary monotone g-connective".into(),
        )),
    }
}

fn check_builtin(b: BuiltinCondition, frame: &Frame) -> Result<ConditionCheck> {
    let rel = frame.relation_at(box_relation(frame)?);
    let p = &frame.polarity;
    let (wn, un) = (p.names(Sort::W), p.names(Sort::U));
    let r = |w: usize, u: usize| rel.contains(&[w, u]);
    let mut datum = None;
    'outer: for u in 0..p.u_len() {
        match b {
            BuiltinCondition::EveryUHasNonRW => {
                if (0..p.w_len()).all(|w| r(w, u)) {
                    datum = Some(format!("every w has w R {}", un[u]));
                    break;
                }
            }
            _ => {
                for w in 0..p.w_len() {
                    let (in_r, in_n) = (r(w, u), p.incident(w, u));
                    if b == BuiltinCondition::REqualsNComplement && in_r && in_n {
                        datum = Some(format!("({}, {}) ∈ R ∩ N", wn[w], un[u]));
                        break 'outer;
                    }
                    if !in_r && !in_n {
                        datum = Some(format!("({}, {}) ∉ R ∪ N", wn[w], un[u]));
                        break 'outer;
                    }
                }
            }
        }
    }
    Ok(ConditionCheck {
        holds: datum.is_none(),
        datum,
    })
}

fn check_external(cmd: &str, frame: &Frame) -> Result<ConditionCheck> {
    let mut child = Process::new("sh")
        .arg("-c")
        .arg(cmd)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()?;
    child
        .stdin
        .take()
        .expect("stdin is piped")
        .write_all(frame.to_json().as_bytes())?;
    let out = child.wait_with_output()?;
    let text = String::from_utf8_lossy(&out.stdout).trim().to_string();
    match out.status.code() {
        Some(0) => Ok(ConditionCheck { holds: true, datum: None }),
        Some(1) => Ok(ConditionCheck {
            holds: false,
            datum: (!text.is_empty()).then_some(text),
        }),
        code => Err(Error::Io(std::io::Error::other(format!(
            "condition command exited with {code:?}"
        )))),
    }
}

/// A frame checked against the condition during falsification.
#[derive(Debug, Clone, Serialize)]
pub struct CheckedFrame {
    pub role: String,
    #[serde(flatten)]
    pub check: ConditionCheck,
}

#[derive(Debug, Clone, Serialize)]
pub struct FalsifyReport {
    pub confirmed: bool,
    pub condition: String,
    pub construction: Construction,
    /// Frames that must satisfy the condition.
    pub members: Vec<CheckedFrame>,
    /// The frame that must violate it.
    pub constructed: Option<CheckedFrame>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl FalsifyReport {
    fn new(condition: &ClosureCondition, construction: Construction) -> Self {
        FalsifyReport {
            confirmed: false,
            condition: condition.name(),
            construction,
            members: Vec::new(),
            constructed: None,
            reason: None,
            notes: Vec::new(),
        }
    }

    fn rejected(mut self, reason: String) -> Self {
        self.reason = Some(reason);
        self
    }

    /// Records the member checks and the constructed check and sets the
    /// verdict.
    fn decide(mut self, members: Vec<CheckedFrame>, constructed: CheckedFrame) -> Self {
        if let Some(m) = members.iter().find(|m| !m.check.holds) {
            self.reason = Some(format!("{} does not satisfy the condition", m.role));
        } else if constructed.check.holds {
            self.reason = Some(format!("{} satisfies the condition", constructed.role));
        } else {
            self.confirmed = true;
        }
        self.members = members;
        self.constructed = Some(constructed);
        self
    }
}

fn checked(condition: &ClosureCondition, role: &str, frame: &Frame) -> Result<CheckedFrame> {
    Ok(CheckedFrame {
        role: role.to_string(),
        check: condition.check(frame)?,
    })
}

/// Coproduct witnesses: every component in the class, the coproduct not.
pub fn falsify_coproduct(condition: &ClosureCondition, frames: &[&Frame]) -> Result<FalsifyReport> {
    let report = FalsifyReport::new(condition, Construction::Coproduct);
    let sum = coproduct(frames)?;
    let members = frames
        .iter()
        .enumerate()
        .map(|(i, f)| checked(condition, &format!("component {}", i + 1), f))
        .collect::<Result<Vec<_>>>()?;
    let constructed = checked(condition, "the coproduct", &sum)?;
    let mut report = report.decide(members, constructed);
    if let Ok(ri) = box_relation(&sum) {
        let rel = sum.relation_at(ri);
        let p = &sum.polarity;
        let component = |name: &str| name.split(':').next().unwrap_or("").to_string();
        let cross: Vec<(usize, usize)> = (0..p.w_len())
            .flat_map(|w| (0..p.u_len()).map(move |u| (w, u)))
            .filter(|&(w, u)| component(&p.names(Sort::W)[w]) != component(&p.names(Sort::U)[u]))
            .collect();
        if !cross.is_empty() && cross.iter().all(|&(w, u)| p.incident(w, u) && rel.contains(&[w, u])) {
            let blocks: Vec<String> = (1..=frames.len())
                .flat_map(|i| (1..=frames.len()).filter(move |&j| j != i).map(move |j| format!("(W{i}×U{j})")))
                .collect();
            report.notes.push(format!("{} ⊆ N ∩ R", blocks.join("∪")));
        }
    }
    Ok(report)
}

/// Generated-subframe witnesses: an injective p-morphism `source → target`
/// with the target in the class and the source not.
pub fn falsify_generated_subframe(
    condition: &ClosureCondition,
    source: &Frame,
    target: &Frame,
    d: &PMorphism,
    cap: usize,
) -> Result<FalsifyReport> {
    let report = FalsifyReport::new(condition, Construction::GeneratedSubframe);
    if let Some(reason) = morphism_problem(d, source, target, cap, Construction::GeneratedSubframe)? {
        return Ok(report.rejected(reason));
    }
    let members = vec![checked(condition, "the target frame", target)?];
    let constructed = checked(condition, "the source frame (a generated subframe)", source)?;
    Ok(report.decide(members, constructed))
}

/// P-morphic-image witnesses: a surjective p-morphism `source → target`
/// with the source in the class and the target not.
pub fn falsify_pmorphic_image(
    condition: &ClosureCondition,
    source: &Frame,
    target: &Frame,
    d: &PMorphism,
    cap: usize,
) -> Result<FalsifyReport> {
    let report = FalsifyReport::new(condition, Construction::PMorphicImage);
    if let Some(reason) = morphism_problem(d, source, target, cap, Construction::PMorphicImage)? {
        return Ok(report.rejected(reason));
    }
    let members = vec![checked(condition, "the source frame", source)?];
    let constructed = checked(condition, "the target frame (a p-morphic image)", target)?;
    Ok(report.decide(members, constructed))
}

/// Reflection witnesses: the filter-ideal extension in the class and the
/// frame not.
pub fn falsify_reflection(condition: &ClosureCondition, frame: &Frame, cap: usize) -> Result<FalsifyReport> {
    let report = FalsifyReport::new(condition, Construction::FilterIdealReflection);
    let extension = filter_ideal_extension(frame, cap)?;
    let members = vec![checked(condition, "the filter-ideal extension", &extension)?];
    let constructed = checked(condition, "the frame", frame)?;
    Ok(report.decide(members, constructed))
}

fn morphism_problem(
    d: &PMorphism,
    source: &Frame,
    target: &Frame,
    cap: usize,
    construction: Construction,
) -> Result<Option<String>> {
    let r = check_pmorphism(d, source, target, cap)?;
    if let Some(v) = r.violation {
        return Ok(Some(format!("not a p-morphism: {} at {}: {}", v.condition, v.at.join(", "), v.detail)));
    }
    let sa = ComplexAlgebra::build_unchecked(source, cap)?;
    let ta = ComplexAlgebra::build_unchecked(target, cap)?;
    Ok(match construction {
        Construction::GeneratedSubframe if !is_injective(d, source, &sa, target, &ta, cap)? => {
            Some("the p-morphism is not injective".into())
        }
        Construction::PMorphicImage if !is_surjective(d, source, target, &ta, cap)? => {
            Some("the p-morphism is not surjective".into())
        }
        _ => None,
    })
}

/// Witnesses found by random search.
#[derive(Debug, Clone)]
pub struct FoundWitness {
    pub frames: Vec<Frame>,
    pub morphism: Option<PMorphism>,
    pub report: FalsifyReport,
}

/// Bounded random search over `{box}`-frames with at most `max_size`
/// points per sort.
pub fn search_witnesses(
    condition: &ClosureCondition,
    construction: Construction,
    max_size: usize,
    trials: usize,
    seed: u64,
    cap: usize,
) -> Result<Option<FoundWitness>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sig = Signature::box_only();
    let max = max_size.max(1);
    for _ in 0..trials {
        let a = random_frame(&mut rng, &sig, max, max, 20);
        match construction {
            Construction::Coproduct => {
                let b = random_frame(&mut rng, &sig, max, max, 20);
                let report = falsify_coproduct(condition, &[&a, &b])?;
                if report.confirmed {
                    return Ok(Some(FoundWitness {
                        frames: vec![a, b],
                        morphism: None,
                        report,
                    }));
                }
            }
            Construction::FilterIdealReflection => {
                let report = falsify_reflection(condition, &a, cap)?;
                if report.confirmed {
                    return Ok(Some(FoundWitness {
                        frames: vec![a],
                        morphism: None,
                        report,
                    }));
                }
            }
            Construction::GeneratedSubframe | Construction::PMorphicImage => {
                let b = random_frame(&mut rng, &sig, max, max, 20);
                let (source, target) = (a, b);
                let sa = ComplexAlgebra::build(&source, cap)?;
                let ta = ComplexAlgebra::build(&target, cap)?;
                // Complete homomorphisms target⁺ → source⁺ dualize to
                // p-morphisms source → target.
                let homs = homomorphisms(&ta.algebra, &sa.algebra, 8)?;
                if homs.is_empty() {
                    continue;
                }
                let h = &homs[rng.gen_range(0..homs.len())];
                let d = dual_pmorphism(h, &target, &ta, &source, &sa)?;
                let report = if construction == Construction::GeneratedSubframe {
                    falsify_generated_subframe(condition, &source, &target, &d, cap)?
                } else {
                    falsify_pmorphic_image(condition, &source, &target, &d, cap)?
                };
                if report.confirmed {
                    return Ok(Some(FoundWitness {
                        frames: vec![source, target],
                        morphism: Some(d),
                        report,
                    }));
                }
            }
        }
    }
    Ok(None)
}

/// Result of running a command.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
}

impl Outcome {
    fn verdict(pass: bool, stdout: String) -> Self {
        Outcome {
            code: if pass { 0 } else { 1 },
            stdout,
        }
    }

    fn output(stdout: String) -> Self {
        Outcome { code: 0, stdout }
    }
}

fn read(path: &Path) -> Result<(String, Value)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: format!("{}: {e}", path.display()),
    })?;
    Ok((text, value))
}

enum Structure {
    Frame(Frame),
    Algebra(FiniteAlgebra),
}

fn read_structure(path: &Path) -> Result<Structure> {
    let (text, value) = read(path)?;
    if value.get("elements").is_some() {
        Ok(Structure::Algebra(FiniteAlgebra::from_value(&value, &text)?))
    } else {
        Ok(Structure::Frame(Frame::from_value(&value, &text)?))
    }
}

fn read_frame(path: &Path, cli: &Cli) -> Result<Frame> {
    let (text, value) = read(path)?;
    let frame = Frame::from_value(&value, &text)?;
    if !cli.no_check {
        frame.require_compatible()?;
    }
    Ok(frame)
}

fn complex_algebra(frame: &Frame, cli: &Cli) -> Result<ComplexAlgebra> {
    if cli.no_check {
        ComplexAlgebra::build_unchecked(frame, cli.cap)
    } else {
        ComplexAlgebra::build(frame, cli.cap)
    }
}

fn read_signature(path: &Path) -> Result<Signature> {
    let (text, value) = read(path)?;
    match value.get("signature") {
        Some(sig) => signature_from_value(sig, &text),
        None => signature_from_value(&value, &text),
    }
}

fn pretty(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values serialize");
    s.push('\n');
    s
}

fn pass_fail(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Runs a parsed command line. Errors are input errors (exit code 2).
pub fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Check { file, alt } => cmd_check(cli, file, *alt),
        Command::Concepts { file } => cmd_concepts(cli, file),
        Command::Valid { file, sequent } => cmd_valid(cli, file, sequent),
        Command::Coproduct { frames } => {
            let frames = frames.iter().map(|f| read_frame(f, cli)).collect::<Result<Vec<_>>>()?;
            let refs: Vec<&Frame> = frames.iter().collect();
            Ok(Outcome::output(pretty(&coproduct(&refs)?.to_value())))
        }
        Command::Pmorphism {
            source,
            target,
            morphism,
        } => cmd_pmorphism(cli, source, target, morphism),
        Command::FilterIdeal { file } => {
            let frame = match read_structure(file)? {
                Structure::Algebra(a) => filter_ideal_frame(&a)?,
                Structure::Frame(f) => {
                    let alg = complex_algebra(&f, cli)?;
                    filter_ideal_frame(&alg.algebra)?
                }
            };
            Ok(Outcome::output(pretty(&frame.to_value())))
        }
        Command::Translate {
            input,
            form,
            signature,
            sort,
        } => cmd_translate(cli, input, *form, signature.as_deref(), *sort),
        Command::Falsify {
            condition,
            condition_cmd,
            construction,
            witnesses,
            search,
            max_size,
            trials,
        } => {
            let condition = match (condition, condition_cmd) {
                (Some(b), _) => ClosureCondition::Builtin(*b),
                (None, Some(cmd)) => ClosureCondition::External(cmd.clone()),
                (None, None) => return Err(Error::Formula("a condition is required".into())),
            };
            if *search {
                cmd_search(cli, &condition, *construction, *max_size, *trials)
            } else {
                cmd_falsify(cli, &condition, *construction, witnesses)
            }
        }
    }
}

fn cmd_check(cli: &Cli, file: &Path, alt: bool) -> Result<Outcome> {
    match read_structure(file)? {
        Structure::Frame(frame) => {
            let report = frame.check_compatibility();
            let alternative = if alt { Some(frame.check_compatibility_alt()?) } else { None };
            let pass = report.compatible && alternative.as_ref().is_none_or(|a| a.compatible);
            if cli.json {
                let mut v = json!({ "verdict": pass_fail(pass), "kind": "frame", "compatibility": report });
                if let Some(a) = &alternative {
                    v["alternative"] = json!(a);
                    v["agree"] = json!(a.compatible == report.compatible);
                }
                return Ok(Outcome::verdict(pass, pretty(&v)));
            }
            let mut out = String::new();
            match &report.violation {
                None => writeln!(out, "PASS: frame is compatible").unwrap(),
                Some(v) => writeln!(out, "FAIL: {v}").unwrap(),
            }
            if let Some(a) = &alternative {
                match &a.violation {
                    None => writeln!(out, "alternative check: compatible").unwrap(),
                    Some(v) => writeln!(out, "alternative check: {v}").unwrap(),
                }
            }
            Ok(Outcome::verdict(pass, out))
        }
        Structure::Algebra(a) => {
            let report = verify_normality(&a);
            if cli.json {
                let v = json!({ "verdict": pass_fail(report.normal), "kind": "algebra", "normality": report });
                return Ok(Outcome::verdict(report.normal, pretty(&v)));
            }
            let out = match &report.violation {
                None => "PASS: algebra is normal\n".to_string(),
                Some(v) => {
                    let at = match &v.pair {
                        Some((x, y)) => format!(" with {x} and {y} at coordinate {}", v.coordinate),
                        None => format!(" on the bound at coordinate {}", v.coordinate),
                    };
                    format!(
                        "FAIL: `{}`({}){at}: expected {}, got {}\n",
                        v.connective,
                        v.args.join(", "),
                        v.expected,
                        v.actual
                    )
                }
            };
            Ok(Outcome::verdict(report.normal, out))
        }
    }
}

fn cmd_concepts(cli: &Cli, file: &Path) -> Result<Outcome> {
    let (text, value) = read(file)?;
    let frame = Frame::from_value(&value, &text)?;
    let p = &frame.polarity;
    let concepts = p.enumerate_concepts(cli.cap)?;
    if cli.json {
        let list: Vec<Value> = concepts
            .iter()
            .enumerate()
            .map(|(i, c)| {
                json!({
                    "name": format!("c{i}"),
                    "extent": names_of(p, Sort::W, c.extent),
                    "intent": names_of(p, Sort::U, c.intent),
                })
            })
            .collect();
        return Ok(Outcome::output(pretty(&json!({ "count": concepts.len(), "concepts": list }))));
    }
    let mut out = format!("{} concept{}\n", concepts.len(), if concepts.len() == 1 { "" } else { "s" });
    for (i, c) in concepts.iter().enumerate() {
        writeln!(out, "c{i} = {}", p.show_concept(c)).unwrap();
    }
    Ok(Outcome::output(out))
}

fn names_of(p: &Polarity, sort: Sort, set: crate::bitset::PointSet) -> Vec<String> {
    set.iter().map(|x| p.names(sort)[x].clone()).collect()
}

/// Text and JSON renderings of an element by index.
type Describe<'a> = Box<dyn Fn(usize) -> (String, Value) + 'a>;

fn cmd_valid(cli: &Cli, file: &Path, sequent: &str) -> Result<Outcome> {
    let structure = read_structure(file)?;
    let (validity, describe): (_, Describe) = match &structure {
        Structure::Frame(frame) => {
            if !cli.no_check {
                frame.require_compatible()?;
            }
            let s = parse_sequent(sequent, &frame.signature)?;
            let alg = complex_algebra(frame, cli)?;
            let v = frame_validates(frame, &alg, &s, cli.budget)?;
            let p = &frame.polarity;
            let concepts = alg.concepts.clone();
            let describe = move |i: usize| {
                let c = &concepts[i];
                (
                    format!("c{i} = {}", p.show_concept(c)),
                    json!({
                        "element": format!("c{i}"),
                        "extent": names_of(p, Sort::W, c.extent),
                        "intent": names_of(p, Sort::U, c.intent),
                    }),
                )
            };
            (v, Box::new(describe) as Describe)
        }
        Structure::Algebra(a) => {
            let s = parse_sequent(sequent, &a.signature)?;
            let v = algebra_validates(a, &s, cli.budget)?;
            let names = a.names.clone();
            (
                v,
                Box::new(move |i: usize| (names[i].clone(), json!({ "element": names[i] }))) as Describe,
            )
        }
    };
    let counter: Vec<(String, (String, Value))> = validity
        .counter
        .iter()
        .flatten()
        .map(|(prop, &i)| (prop.clone(), describe(i)))
        .collect();
    if cli.json {
        let mut v = json!({
            "verdict": pass_fail(validity.valid),
            "valid": validity.valid,
            "valuations_checked": validity.valuations_checked as u64,
        });
        if validity.counter.is_some() {
            let map: serde_json::Map<String, Value> = counter.iter().map(|(p, (_, j))| (p.clone(), j.clone())).collect();
            v["counter_valuation"] = Value::Object(map);
        }
        return Ok(Outcome::verdict(validity.valid, pretty(&v)));
    }
    let mut out = String::new();
    if validity.valid {
        writeln!(out, "PASS: valid ({} valuations checked)", validity.valuations_checked).unwrap();
    } else {
        writeln!(out, "FAIL: not valid; counter-valuation:").unwrap();
        for (prop, (text, _)) in &counter {
            writeln!(out, "  {prop} = {text}").unwrap();
        }
        if counter.is_empty() {
            writeln!(out, "  (no propositions)").unwrap();
        }
    }
    Ok(Outcome::verdict(validity.valid, out))
}

fn cmd_pmorphism(cli: &Cli, source: &Path, target: &Path, morphism: &Path) -> Result<Outcome> {
    let f1 = read_frame(source, cli)?;
    let f2 = read_frame(target, cli)?;
    let text = std::fs::read_to_string(morphism)?;
    let d = PMorphism::from_json(&text, &f1, &f2)?;
    let report = check_pmorphism(&d, &f1, &f2, cli.cap)?;
    let flags = if report.pmorphism {
        let a1 = complex_algebra(&f1, cli)?;
        let a2 = complex_algebra(&f2, cli)?;
        Some((
            is_injective(&d, &f1, &a1, &f2, &a2, cli.cap)?,
            is_surjective(&d, &f1, &f2, &a2, cli.cap)?,
        ))
    } else {
        None
    };
    if cli.json {
        let mut v = json!({ "verdict": pass_fail(report.pmorphism), "report": report });
        if let Some((inj, surj)) = flags {
            v["injective"] = json!(inj);
            v["surjective"] = json!(surj);
        }
        return Ok(Outcome::verdict(report.pmorphism, pretty(&v)));
    }
    let mut out = String::new();
    match (&report.violation, flags) {
        (None, Some((inj, surj))) => {
            let yes = |b: bool| if b { "yes" } else { "no" };
            writeln!(out, "PASS: p-morphism (injective: {}, surjective: {})", yes(inj), yes(surj)).unwrap();
        }
        (Some(v), _) => {
            let conn = v.connective.as_ref().map(|c| format!(" for `{c}`")).unwrap_or_default();
            writeln!(out, "FAIL: {}{conn} at {}: {}", v.condition, v.at.join(", "), v.detail).unwrap();
        }
        (None, None) => unreachable!("flags are computed for every p-morphism"),
    }
    if let Some(w) = &report.equal_maps {
        writeln!(out, "witness: {}", w.detail).unwrap();
    }
    Ok(Outcome::verdict(report.pmorphism, out))
}

fn cmd_translate(cli: &Cli, input: &str, form: FormArg, signature: Option<&Path>, sort: SortArg) -> Result<Outcome> {
    let sig = match signature {
        Some(path) => read_signature(path)?,
        None => Signature::box_only(),
    };
    let fo = if input.contains("|-") || input.contains('⊢') {
        translate_sequent(&sig, &parse_sequent(input, &sig)?, form.into())?
    } else {
        let v = match sort {
            SortArg::W => Var::w(0),
            SortArg::U => Var::u(0),
        };
        standard_translate(&sig, &parse_formula(input, &sig)?, v)?
    };
    if cli.json {
        return Ok(Outcome::output(pretty(&json!({ "input": input, "formula": fo.to_string() }))));
    }
    Ok(Outcome::output(format!("{fo}\n")))
}

fn cmd_falsify(cli: &Cli, condition: &ClosureCondition, construction: Construction, witnesses: &[PathBuf]) -> Result<Outcome> {
    let report = match construction {
        Construction::Coproduct => {
            if witnesses.is_empty() {
                return Err(Error::Frame("coproduct needs at least one frame".into()));
            }
            let frames = witnesses.iter().map(|f| read_frame(f, cli)).collect::<Result<Vec<_>>>()?;
            let refs: Vec<&Frame> = frames.iter().collect();
            falsify_coproduct(condition, &refs)?
        }
        Construction::GeneratedSubframe | Construction::PMorphicImage => {
            let [source, target, morphism] = witnesses else {
                return Err(Error::Frame(
                    "morphism constructions need `<source> <target> <morphism>`".into(),
                ));
            };
            let f1 = read_frame(source, cli)?;
            let f2 = read_frame(target, cli)?;
            let d = PMorphism::from_json(&std::fs::read_to_string(morphism)?, &f1, &f2)?;
            if construction == Construction::GeneratedSubframe {
                falsify_generated_subframe(condition, &f1, &f2, &d, cli.cap)?
            } else {
                falsify_pmorphic_image(condition, &f1, &f2, &d, cli.cap)?
            }
        }
        Construction::FilterIdealReflection => {
            let [frame] = witnesses else {
                return Err(Error::Frame("filter-ideal-reflection needs one frame".into()));
            };
            falsify_reflection(condition, &read_frame(frame, cli)?, cli.cap)?
        }
    };
    Ok(render_falsify(cli, &report, None))
}

fn cmd_search(cli: &Cli, condition: &ClosureCondition, construction: Construction, max_size: usize, trials: usize) -> Result<Outcome> {
    match search_witnesses(condition, construction, max_size, trials, cli.seed, cli.cap)? {
        Some(found) => {
            let mut witness = json!({
                "frames": found.frames.iter().map(Frame::to_value).collect::<Vec<_>>(),
            });
            if let Some(d) = &found.morphism {
                witness["morphism"] = d.to_value(&found.frames[0], &found.frames[1]);
            }
            Ok(render_falsify(cli, &found.report, Some(witness)))
        }
        None => {
            let mut report = FalsifyReport::new(condition, construction);
            report.reason = Some(format!("no witnesses found in {trials} trials"));
            Ok(render_falsify(cli, &report, None))
        }
    }
}

fn render_falsify(cli: &Cli, report: &FalsifyReport, witness: Option<Value>) -> Outcome {
    if cli.json {
        let mut v = json!({ "verdict": pass_fail(report.confirmed), "report": report });
        if let Some(w) = witness {
            v["witness"] = w;
        }
        return Outcome::verdict(report.confirmed, pretty(&v));
    }
    let mut out = String::new();
    let describe = |c: &CheckedFrame| match (&c.check.holds, &c.check.datum) {
        (true, _) => format!("{}: satisfies", c.role),
        (false, Some(d)) => format!("{}: violates ({d})", c.role),
        (false, None) => format!("{}: violates", c.role),
    };
    if report.confirmed {
        writeln!(
            out,
            "PASS: closure failure confirmed; {} is not definable",
            report.condition
        )
        .unwrap();
    } else {
        writeln!(
            out,
            "FAIL: closure failure not demonstrated: {}",
            report.reason.as_deref().unwrap_or("unknown")
        )
        .unwrap();
    }
    for m in &report.members {
        writeln!(out, "  {}", describe(m)).unwrap();
    }
    if let Some(c) = &report.constructed {
        writeln!(out, "  {}", describe(c)).unwrap();
    }
    for n in &report.notes {
        writeln!(out, "  {n}").unwrap();
    }
    if let Some(w) = witness {
        writeln!(out, "witness:").unwrap();
        out.push_str(&pretty(&w));
    }
    Outcome::verdict(report.confirmed, out)
}

/// Parses the process arguments, runs, prints and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            outcome.code
        }
        Err(e) => {
            if cli.json {
                println!("{}", json!({ "verdict": "ERROR", "error": e.to_string() }));
            }
            eprintln!("error: {e}");
            2
        }
    }
}
