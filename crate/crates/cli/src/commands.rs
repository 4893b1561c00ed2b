use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Value};

use qrc1::arith::{qrc1_t_statement, shadow_env, shadow_eval, solovay_star, star_realization, ShadowStructure};
use qrc1::calculus::{search, SearchOutcome};
use qrc1::corpus::{Corpus, CorpusBounds};
use qrc1::countermodel::{countermodel_for, truth_lemma_check, CountermodelError, Pair, TruthLemmaReport};
use qrc1::semantics::{check_adequate, Assignment, Evaluator, SemanticsError, Strategy};
use qrc1::syntax::{parse_formula, parse_formula_lenient, FormulaSet};
use qrc1::{decide as decide_sequent, DecideOptions, Formula, KripkeModel, Sequent, Signature, Verdict};

use crate::config::{Format, RunConfig};
use crate::error::CliError;
use crate::{GlobalArgs, StrategyArg, Style};

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Writes the main artifact to `--out` or stdout.
fn emit(g: &GlobalArgs, text: &str) -> Result<(), CliError> {
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match &g.out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::io(path, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

fn to_value(json: &str) -> Value {
    serde_json::from_str(json).expect("library JSON is valid")
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("value serializes")
}

/// Parses formulas against `--sig` if given; otherwise leniently, with the
/// signature inferred from the formulas and `--const` names added.
fn parse_formulas(g: &GlobalArgs, texts: &[&str]) -> Result<(Vec<Formula>, Signature), CliError> {
    let mut sig = match &g.sig {
        Some(path) => Signature::from_json(&read(path)?)?,
        None => {
            let lenient = texts
                .iter()
                .map(|t| parse_formula_lenient(t))
                .collect::<Result<Vec<_>, _>>()?;
            let sig = Signature::infer(&lenient)?;
            if g.constants.is_empty() {
                return Ok((lenient, sig));
            }
            sig
        }
    };
    sig.constants.extend(g.constants.iter().cloned());
    sig.validate()?;
    let formulas = texts
        .iter()
        .map(|t| parse_formula(t, &sig))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((formulas, sig))
}

fn parse_sequent(g: &GlobalArgs, lhs: &str, rhs: &str) -> Result<(Sequent, Signature), CliError> {
    let (mut fs, sig) = parse_formulas(g, &[lhs, rhs])?;
    let rhs = fs.pop().expect("two formulas");
    let lhs = fs.pop().expect("two formulas");
    Ok((Sequent::new(lhs, rhs), sig))
}

fn named_assignment(model: &KripkeModel, world: usize, g: &Assignment) -> BTreeMap<String, String> {
    g.values
        .iter()
        .map(|(x, &a)| (x.clone(), model.domains[world][a].clone()))
        .collect()
}

fn semantic_error(e: SemanticsError) -> CliError {
    match e {
        SemanticsError::Syntax(s) => CliError::Usage(s.to_string()),
        SemanticsError::InvalidModel(_) | SemanticsError::NotAdequate(_) => CliError::Data(e.to_string()),
        other => CliError::Internal(other.to_string()),
    }
}

pub fn decide(g: &GlobalArgs, cfg: &RunConfig, lhs: &str, rhs: &str, strategy: StrategyArg) -> Result<u8, CliError> {
    let (s, sig) = parse_sequent(g, lhs, rhs)?;
    let opts = DecideOptions {
        strategy: match strategy {
            StrategyArg::Canonical => Strategy::Canonical,
            StrategyArg::Enumerate => Strategy::Enumerate,
        },
        model_cap: cfg.model_cap,
        certificate_budget: Some(cfg.depth_budget),
    };
    let verdict = match decide_sequent(&s, &sig, &opts) {
        Ok(v) => v,
        Err(e @ (SemanticsError::ResourceCap { .. } | SemanticsError::ModelSpaceTooLarge(_))) => {
            eprintln!("inconclusive: {e}");
            return Ok(2);
        }
        Err(e) => return Err(semantic_error(e)),
    };
    match verdict {
        Verdict::Derivable { certificate } => {
            let text = match (cfg.format, &certificate) {
                (Format::Json, _) => pretty(&json!({
                    "verdict": "derivable",
                    "certificate": certificate.as_ref().map(|c| to_value(&c.to_json())),
                })),
                (_, Some(c)) => format!("derivable\n{}", c.render_tree()),
                (_, None) => format!("derivable\n(no certificate within depth budget {})", cfg.depth_budget),
            };
            emit(g, &text)?;
            Ok(0)
        }
        Verdict::Refuted {
            model,
            world,
            assignment,
        } => {
            let named = named_assignment(&model, world, &assignment);
            let text = match cfg.format {
                Format::Json => pretty(&json!({
                    "verdict": "refuted",
                    "world": model.worlds[world],
                    "assignment": named,
                    "model": to_value(&model.to_json()),
                })),
                Format::Dot => model.to_dot(true),
                Format::Text => {
                    let mut t = format!("refuted at world {}\n", model.worlds[world]);
                    for (x, a) in &named {
                        let _ = writeln!(t, "  {x} = {a}");
                    }
                    t + &model.to_json()
                }
            };
            emit(g, &text)?;
            Ok(1)
        }
    }
}

pub fn prove(g: &GlobalArgs, cfg: &RunConfig, lhs: &str, rhs: &str) -> Result<u8, CliError> {
    let (s, _) = parse_sequent(g, lhs, rhs)?;
    match search(&s, cfg.depth_budget) {
        SearchOutcome::Found(d) => {
            let text = match cfg.format {
                Format::Json => d.to_json(),
                _ => d.render_tree(),
            };
            emit(g, &text)?;
            Ok(0)
        }
        SearchOutcome::Pruned => {
            eprintln!("not derivable: the right-hand side has greater modal depth");
            Ok(1)
        }
        SearchOutcome::Exhausted => {
            eprintln!("no derivation within depth budget {}", cfg.depth_budget);
            Ok(2)
        }
    }
}

fn audit_line(label: &str, r: &TruthLemmaReport) -> String {
    format!(
        "{label}: {} ({} worlds, {} formulas, {} checks, {} mismatches)",
        if r.passed() { "PASS" } else { "FAIL" },
        r.worlds,
        r.formulas,
        r.checks,
        r.mismatches.len()
    )
}

pub fn countermodel(g: &GlobalArgs, cfg: &RunConfig, lhs: &str, rhs: &str) -> Result<u8, CliError> {
    let (s, sig) = parse_sequent(g, lhs, rhs)?;
    let (frame, assignment) = match countermodel_for(&s, &sig) {
        Ok(found) => found,
        Err(CountermodelError::Derivable) => {
            eprintln!("derivable: {s} has no countermodel");
            return Ok(1);
        }
        Err(CountermodelError::Syntax(e)) => return Err(e.into()),
        Err(e) => return Err(CliError::Internal(e.to_string())),
    };
    let report = frame.truth_lemma_check().map_err(semantic_error)?;
    let model = &frame.model;
    let line = audit_line("truth-lemma audit", &report);
    let mut full_sig = sig.clone();
    full_sig.constants.extend(frame.domain.iter().cloned());
    let text = match cfg.format {
        Format::Json => {
            let pairs: Vec<Value> = frame
                .pairs
                .iter()
                .enumerate()
                .map(|(w, p)| {
                    json!({
                        "world": model.worlds[w],
                        "stage": frame.stage_of[w],
                        "positive": p.positive.iter().map(ToString::to_string).collect::<Vec<_>>(),
                        "negative": p.negative.iter().map(ToString::to_string).collect::<Vec<_>>(),
                    })
                })
                .collect();
            pretty(&json!({
                "sequent": {"lhs": s.lhs.to_string(), "rhs": s.rhs.to_string()},
                "signature": to_value(&full_sig.to_json()),
                "assignment": named_assignment(model, 0, &assignment),
                "model": to_value(&model.to_json()),
                "pairs": pairs,
                "audit": {
                    "passed": report.passed(),
                    "worlds": report.worlds,
                    "formulas": report.formulas,
                    "checks": report.checks,
                    "mismatches": report.mismatches,
                },
            }))
        }
        Format::Dot => model.to_dot(true),
        Format::Text => {
            let mut t = format!(
                "countermodel for {s}: {} worlds, domain {{{}}}\n",
                model.world_count(),
                frame.domain.join(", ")
            );
            for (x, a) in named_assignment(model, 0, &assignment) {
                let _ = writeln!(t, "  {x} = {a}");
            }
            for (w, p) in frame.pairs.iter().enumerate() {
                let succ: Vec<&str> = model.successors(w).map(|v| model.worlds[v].as_str()).collect();
                let pos: Vec<String> = p.positive.iter().map(ToString::to_string).collect();
                let _ = writeln!(
                    t,
                    "world {} (stage {}) -> [{}]\n  + {}",
                    model.worlds[w],
                    frame.stage_of[w],
                    succ.join(", "),
                    pos.join("; ")
                );
            }
            t + &line
        }
    };
    emit(g, &text)?;
    if cfg.format != Format::Text {
        eprintln!("{line}");
    }
    Ok(if report.passed() { 0 } else { 70 })
}

/// A model JSON, or the output of `countermodel --format json` with its
/// pairs parsed against the recorded signature.
struct Loaded {
    model: KripkeModel,
    pairs: Option<(Vec<Pair>, Signature)>,
}

fn load_model(path: &Path) -> Result<Loaded, CliError> {
    let text = read(path)?;
    let value: Value = serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let data = |m: String| CliError::Data(format!("{}: {m}", path.display()));
    let Some(inner) = value.get("model") else {
        let model = KripkeModel::from_json(&text).map_err(|e| data(e.to_string()))?;
        return Ok(Loaded { model, pairs: None });
    };
    let model = KripkeModel::from_json(&inner.to_string()).map_err(|e| data(e.to_string()))?;
    let sig: Signature = serde_json::from_value(value.get("signature").cloned().unwrap_or_default())
        .map_err(|e| data(format!("signature: {e}")))?;
    let mut pairs = Vec::new();
    for p in value.get("pairs").and_then(Value::as_array).into_iter().flatten() {
        let side = |key: &str| -> Result<Vec<Formula>, CliError> {
            p.get(key)
                .and_then(Value::as_array)
                .ok_or_else(|| data(format!("pair without `{key}`")))?
                .iter()
                .map(|f| {
                    let text = f.as_str().ok_or_else(|| data("formula is not a string".into()))?;
                    parse_formula(text, &sig).map_err(|e| data(e.to_string()))
                })
                .collect()
        };
        pairs.push(Pair::new(side("positive")?, side("negative")?));
    }
    if pairs.len() != model.world_count() {
        return Err(data(format!(
            "{} pairs for {} worlds",
            pairs.len(),
            model.world_count()
        )));
    }
    Ok(Loaded {
        model,
        pairs: Some((pairs, sig)),
    })
}

pub fn audit(g: &GlobalArgs, cfg: &RunConfig, file: &Path) -> Result<u8, CliError> {
    let loaded = load_model(file)?;
    loaded.model.validate().map_err(semantic_error)?;
    let adequacy = check_adequate(&loaded.model);
    let m = &loaded.model;
    let shape = json!({
        "adequate": adequacy.is_adequate(),
        "transitive": adequacy.transitive,
        "eta_coherent": adequacy.eta_coherent,
        "concordant": adequacy.concordant,
        "irreflexive": m.is_irreflexive(),
        "constant_domain": m.is_constant_domain(),
        "violations": adequacy.witnesses,
    });
    let truth = match (&loaded.pairs, adequacy.is_adequate()) {
        (Some((pairs, _)), true) => {
            let closure: FormulaSet = pairs.iter().flat_map(|p| p.formulas().cloned()).collect();
            Some(truth_lemma_check(m, pairs, &closure).map_err(semantic_error)?)
        }
        _ => None,
    };
    let text = match cfg.format {
        Format::Json => pretty(&json!({"model": shape, "truth_lemma": truth})),
        _ => {
            let mut t = format!(
                "adequate: {}\n  transitive: {}\n  eta coherent: {}\n  concordant: {}\nirreflexive: {}\nconstant domain: {}\n",
                adequacy.is_adequate(),
                adequacy.transitive,
                adequacy.eta_coherent,
                adequacy.concordant,
                m.is_irreflexive(),
                m.is_constant_domain()
            );
            for v in &adequacy.witnesses {
                let _ = writeln!(t, "  violation: {v}");
            }
            if let Some(r) = &truth {
                t += &audit_line("truth-lemma audit", r);
                for mm in r.mismatches.iter().take(10) {
                    let _ = write!(
                        t,
                        "\n  {} at {}: positive {}, satisfied {}",
                        mm.formula, mm.world, mm.in_positive, mm.satisfied
                    );
                }
            }
            t
        }
    };
    emit(g, &text)?;
    Ok(match truth {
        _ if !adequacy.is_adequate() => 1,
        Some(r) if !r.passed() => 70,
        _ => 0,
    })
}

fn subformulas(phi: &Formula, out: &mut BTreeSet<Formula>) {
    out.insert(phi.clone());
    match phi {
        Formula::And(a, b) => {
            subformulas(a, out);
            subformulas(b, out);
        }
        Formula::Diamond(a) | Formula::Forall(_, a) => subformulas(a, out),
        Formula::Top | Formula::Rel(..) => {}
    }
}

fn all_assignments(vars: &BTreeSet<String>, size: usize) -> Vec<Assignment> {
    let mut out = vec![Assignment::new()];
    for x in vars {
        out = out
            .into_iter()
            .flat_map(|g| (0..size).map(move |a| g.clone().with(x.clone(), a)))
            .collect();
    }
    out
}

pub fn realize(
    g: &GlobalArgs,
    formula: Option<&str>,
    style: Style,
    model: Option<&Path>,
    entails: Option<&str>,
    shadow_audit: Option<&Path>,
) -> Result<u8, CliError> {
    if let Some(path) = shadow_audit {
        return shadow_audit_cmd(g, formula, path);
    }
    let text = formula.ok_or_else(|| CliError::Usage("a formula is required".into()))?;
    if let Some(rhs) = entails {
        let (fs, _) = parse_formulas(g, &[text, rhs])?;
        emit(g, &qrc1_t_statement(&fs[0], &fs[1]).to_string())?;
        return Ok(0);
    }
    let (fs, _) = parse_formulas(g, &[text])?;
    let phi = &fs[0];
    let out = match style {
        Style::Star => star_realization(phi).to_string(),
        Style::Solovay => {
            let structure = match model {
                Some(path) => ShadowStructure::new(&load_model(path)?.model)
                    .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?,
                None if phi.relations().is_empty() => {
                    let trivial = KripkeModel::constant_domain(vec!["w".into()], vec!["e".into()]);
                    ShadowStructure::new(&trivial).map_err(|e| CliError::Internal(e.to_string()))?
                }
                None => {
                    return Err(CliError::Usage(
                        "--style solovay needs --model for formulas with relation symbols".into(),
                    ))
                }
            };
            solovay_star(phi, &structure)
                .map_err(|e| CliError::Data(e.to_string()))?
                .to_string()
        }
    };
    emit(g, &out)?;
    Ok(0)
}

/// Shadow evaluation of the Solovay-style interpretation against Kripke
/// truth at every original world, for every subformula of the given formula
/// and of the pair formulas of a countermodel file, under every assignment.
fn shadow_audit_cmd(g: &GlobalArgs, formula: Option<&str>, path: &Path) -> Result<u8, CliError> {
    let loaded = load_model(path)?;
    let structure =
        ShadowStructure::new(&loaded.model).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let ev = Evaluator::new(&loaded.model).map_err(semantic_error)?;
    let mut formulas = BTreeSet::new();
    if let Some((pairs, _)) = &loaded.pairs {
        for f in pairs.iter().flat_map(Pair::formulas) {
            subformulas(f, &mut formulas);
        }
    }
    if let Some(text) = formula {
        let sig = loaded.pairs.as_ref().map(|(_, s)| s.clone());
        let phi = match sig {
            Some(mut sig) => {
                sig.constants.extend(g.constants.iter().cloned());
                parse_formula(text, &sig)?
            }
            None => parse_formulas(g, &[text])?.0.remove(0),
        };
        subformulas(&phi, &mut formulas);
    }
    if formulas.is_empty() {
        return Err(CliError::Usage(
            "nothing to audit: give a formula or a countermodel file".into(),
        ));
    }
    let size = loaded.model.domains[0].len();
    let (mut checks, mut mismatches) = (0usize, Vec::new());
    for phi in &formulas {
        let star = solovay_star(phi, &structure).map_err(|e| CliError::Data(e.to_string()))?;
        for i in 1..structure.world_count() {
            for asg in all_assignments(&phi.free_vars(), size) {
                let kripke = ev.satisfies(i - 1, &asg, phi).map_err(semantic_error)?;
                let shadow = shadow_eval(&structure, i, &shadow_env(&asg, phi), &star)
                    .map_err(|e| CliError::Internal(e.to_string()))?;
                checks += 1;
                if kripke != shadow {
                    mismatches.push(format!(
                        "{phi} at {}: kripke {kripke}, shadow {shadow}",
                        loaded.model.worlds[i - 1]
                    ));
                }
            }
        }
    }
    let mut text = format!(
        "shadow audit: {} ({} formulas, {} worlds, {checks} checks, {} mismatches)",
        if mismatches.is_empty() { "PASS" } else { "FAIL" },
        formulas.len(),
        structure.world_count() - 1,
        mismatches.len()
    );
    for m in mismatches.iter().take(10) {
        let _ = write!(text, "\n  {m}");
    }
    emit(g, &text)?;
    Ok(if mismatches.is_empty() { 0 } else { 70 })
}

pub fn corpus(g: &GlobalArgs, cfg: &RunConfig, count: usize, with_verdicts: bool) -> Result<u8, CliError> {
    let mut bounds = CorpusBounds::default();
    if let Some(path) = &g.sig {
        bounds.signature = Signature::from_json(&read(path)?)?;
    }
    bounds.signature.constants.extend(g.constants.iter().cloned());
    let sig = bounds.signature.clone();
    let mut gen = Corpus::new(cfg.seed, bounds);
    let sequents: Vec<Sequent> = (0..count).map(|_| gen.sequent()).collect();
    let verdicts: Option<Vec<Result<&'static str, String>>> = if with_verdicts {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.worker_count)
            .build()
            .map_err(|e| CliError::Internal(e.to_string()))?;
        let opts = DecideOptions {
            model_cap: cfg.model_cap,
            certificate_budget: None,
            ..DecideOptions::default()
        };
        Some(pool.install(|| {
            sequents
                .par_iter()
                .map(|s| match decide_sequent(s, &sig, &opts) {
                    Ok(v) if v.is_derivable() => Ok("derivable"),
                    Ok(_) => Ok("refuted"),
                    Err(e) => Err(e.to_string()),
                })
                .collect()
        }))
    } else {
        None
    };
    let verdict_of = |i: usize| -> Result<Option<&'static str>, CliError> {
        match &verdicts {
            Some(v) => v[i].clone().map(Some).map_err(CliError::Internal),
            None => Ok(None),
        }
    };
    let text = match cfg.format {
        Format::Json => {
            let mut items = Vec::with_capacity(sequents.len());
            for (i, s) in sequents.iter().enumerate() {
                let mut item = json!({"lhs": s.lhs.to_string(), "rhs": s.rhs.to_string()});
                if let Some(v) = verdict_of(i)? {
                    item["verdict"] = json!(v);
                }
                items.push(item);
            }
            pretty(&json!({
                "seed": cfg.seed,
                "signature": to_value(&sig.to_json()),
                "sequents": items,
            }))
        }
        _ => {
            let mut t = String::new();
            for (i, s) in sequents.iter().enumerate() {
                match verdict_of(i)? {
                    Some(v) => writeln!(t, "{s}\t{v}"),
                    None => writeln!(t, "{s}"),
                }
                .expect("writing to a string");
            }
            t
        }
    };
    emit(g, &text)?;
    Ok(0)
}
