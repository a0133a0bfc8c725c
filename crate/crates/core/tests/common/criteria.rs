//! Checks of the acceptance criteria. Each returns a short summary on
//! success and a description of the first failure otherwise.

use std::collections::HashMap;
use std::path::Path;
use std::rc::Rc;

use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gen::{do_block, handler_widget, signature, Raisers, Rings};
use super::{fixture, fixture_path, program, script};
use widget_core::dispatch::{DispatchError, DisplayNode};
use widget_core::eval::{apply, program_env, Value};
use widget_core::externals::db::{Column, DbState, Scalar};
use widget_core::externals::provider::{ProviderSim, DEFAULT_RANGE};
use widget_core::harness::{run_script, run_with, start, HarnessError, RunOptions, Step, Trace};
use widget_core::modelgen::{fill_holes, generate, holes_in, load_model};
use widget_core::runtime::{Outcome, Runtime};
use widget_core::syntax::{desugar_expr, parse_expr, parse_program, parse_type};
use widget_core::typecheck::{check_program, check_runnable, Checker};
use widget_core::types::Type;

pub type Verdict = Result<String, String>;

/// Cases per generated property.
pub const CASES: u32 = 500;
/// Events per script in the soundness smoke test.
pub const SMOKE_EVENTS: usize = 200;
/// Events per script in the equivalence suites.
pub const SCRIPT_EVENTS: usize = 5;
/// Random pairs in the database round trip.
pub const DB_PAIRS: usize = 100;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn temp_opts() -> (tempfile::TempDir, RunOptions) {
    let dir = tempfile::tempdir().expect("temporary directory");
    let opts = RunOptions { data_dir: dir.path().to_path_buf(), ..RunOptions::default() };
    (dir, opts)
}

fn run(p: &widget_core::syntax::Program, steps: &[Step]) -> Result<Trace, String> {
    let (_dir, opts) = temp_opts();
    run_script(p, steps, &opts).map_err(|e| e.to_string())
}

/// Options for generated programs, which open no files.
fn scratch_opts() -> RunOptions {
    RunOptions { data_dir: std::env::temp_dir(), ..RunOptions::default() }
}

fn caption_of_kind(f: &Option<DisplayNode>, kind: &str) -> Option<String> {
    let root = f.as_ref()?;
    root.walk().into_iter().find(|n| n.kind == kind).and_then(|n| n.caption()).map(str::to_string)
}

pub fn example1_identity() -> Verdict {
    let trace = run(&program("example1.wdg"), &[Step::push("PUSHME")])?;
    ensure(trace.frames.len() == 2, || format!("{} frames", trace.frames.len()))?;
    ensure(trace.frames[0] == trace.frames[1], || "frames differ after push".into())?;
    Ok("2 identical frames".into())
}

pub fn example2_toggle() -> Verdict {
    let trace = run(&program("example2.wdg"), &script("example2.script.json"))?;
    let labels: Vec<String> = trace.frames.iter().map(|f| caption_of_kind(f, "button").unwrap_or_default()).collect();
    ensure(labels == ["PUSHME", "PUSHED", "PUSHME", "PUSHED", "PUSHME"], || format!("labels {labels:?}"))?;
    let f = &trace.frames;
    ensure(f[0] == f[2] && f[0] == f[4], || "frames 1, 3 and 5 differ".into())?;
    Ok("PUSHME/PUSHED alternate; frames 1 = 3 = 5 with ids".into())
}

pub fn buddy_end_to_end() -> Verdict {
    let trace = run(&program("buddy.wdg"), &script("buddy.script.json"))?;
    let kinds: Vec<String> =
        trace.frames.iter().map(|f| f.as_ref().map(|r| r.children[0].kind.clone()).unwrap_or_default()).collect();
    let states: Vec<&str> = kinds
        .iter()
        .map(|k| match k.as_str() {
            "clock" => "Main",
            "addscreen" => "Add",
            "label" => "Notify",
            _ => "?",
        })
        .collect();
    ensure(states == ["Main", "Add", "Main", "Notify", "Main", "Main"], || format!("states {states:?}"))?;
    let text = caption_of_kind(&trace.frames[3], "label");
    ensure(text.as_deref() == Some("CONTACT: sally@widget.org"), || format!("notify label {text:?}"))?;
    ensure(trace.frames[4] == trace.frames[5], || "unknown notify changed Main".into())?;
    Ok("Main, Add, Main, Notify, Main; unknown address leaves Main".into())
}

fn buddy_without(start: &str, end: &str) -> String {
    let src = fixture("buddy.wdg");
    let a = src.find(start).expect("handler present");
    let b = a + src[a..].find(end).expect("handler end") + end.len();
    format!("{}{}", &src[..a], &src[b..])
}

pub fn static_event_safety() -> Verdict {
    let buddy = program("buddy.wdg");
    let d = check_runnable(&buddy);
    ensure(d.is_empty(), || format!("buddy rejected: {d:?}"))?;
    let no_notify = buddy_without("notify(addr:str):<Notify + Main>", "else self\n      };");
    let d = check_runnable(&parse_program(&no_notify).map_err(|e| e.to_string())?);
    ensure(d.iter().any(|d| d.message.contains("notify(str)")), || format!("without notify: {d:?}"))?;
    let no_move = buddy_without("move(x:int,y:int):<Add> = do { return self }", "return self }");
    let d = check_runnable(&parse_program(&no_move).map_err(|e| e.to_string())?);
    ensure(d.iter().any(|d| d.message.contains("move(int,int)")), || format!("without Add.move: {d:?}"))?;
    let r = check_program(&buddy);
    let c = Checker::for_program(&buddy, &r);
    for (name, declared) in [
        ("main", "()-><Main>"),
        ("add_screen", "(Main,DB[str,str],Notifier)-><Add>"),
        ("notify_screen", "(Main,str,Notifier)-><Notify>"),
    ] {
        let want = parse_type(declared).map_err(|e| e.to_string())?;
        let got = r.signature(name).ok_or_else(|| format!("no signature for {name}"))?;
        ensure(c.type_compatible(&want, got) && c.type_compatible(got, &want), || format!("{name}: {got}"))?;
    }
    Ok("buddy accepted; notify(str) and move(int,int) reported; signatures match".into())
}

fn store_oracle(n: i64, increments: usize) -> (i64, i64) {
    let mut store: HashMap<u64, i64> = HashMap::new();
    store.insert(0, n);
    let mut last = n;
    for _ in 0..increments {
        let x = store[&0];
        store.insert(0, x + 1);
        last = x + 1;
    }
    (last, store[&0])
}

pub fn command_semantics() -> Verdict {
    let src = "\
        fun add1(l:!int):<int> = do { x:int <- get[int](l); y:int <- set[int](l,x+1) return y }\n\
        fun add2(l:!int):<int> = do { x:int <- add1(l); y:int <- add1(l) return y }\n\
        val main:<Top> = top";
    let p = parse_program(src).map_err(|e| e.to_string())?;
    let env = program_env(&p).map_err(|e| e.to_string())?;
    for n in [-3, 0, 41] {
        for (name, increments) in [("add1", 1), ("add2", 2)] {
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            let mut rt = Runtime::new(dir.path(), ProviderSim::new(DEFAULT_RANGE));
            let alloc = parse_expr(&format!("loc[int]({n})")).map_err(|e| e.to_string())?;
            let cmd = widget_core::eval::eval(&env, &desugar_expr(&Rc::new(alloc))).map_err(|e| e.to_string())?;
            let l = match rt.perform(&cmd) {
                Ok(Outcome::Value(Value::Location(l))) => l,
                other => return Err(format!("loc gave {other:?}")),
            };
            let f = env.lookup(name).map_err(|e| e.to_string())?;
            let cmd = apply(&f, vec![Value::Location(l)]).map_err(|e| e.to_string())?;
            let result = match rt.perform(&cmd) {
                Ok(Outcome::Value(Value::Int(v))) => v,
                other => return Err(format!("{name} gave {other:?}")),
            };
            let stored = match rt.load(l) {
                Some(Value::Int(v)) => *v,
                other => return Err(format!("store holds {other:?}")),
            };
            let want = store_oracle(n, increments);
            ensure((result, stored) == want, || format!("{name} on {n}: ({result},{stored}), oracle {want:?}"))?;
        }
    }
    Ok("add1 and add2 agree with the store oracle for n in {-3,0,41}".into())
}

fn runner() -> TestRunner {
    let config = Config { cases: CASES, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

/// Runs `case` on `CASES` seeds.
fn for_seeds(case: impl Fn(&mut ChaCha8Rng) -> Result<(), String>) -> Result<(), String> {
    runner()
        .run(&proptest::num::u64::ANY, |seed| case(&mut ChaCha8Rng::seed_from_u64(seed)).map_err(TestCaseError::fail))
        .map_err(|e| e.to_string())
}

/// Frames with widget ids renamed in order of first appearance.
pub fn renamed(frames: &[Option<DisplayNode>]) -> Vec<Option<DisplayNode>> {
    fn go(n: &DisplayNode, names: &mut HashMap<u64, u64>) -> DisplayNode {
        let next = names.len() as u64;
        let id = *names.entry(n.id).or_insert(next);
        DisplayNode { id, children: n.children.iter().map(|c| go(c, names)).collect(), ..n.clone() }
    }
    let mut names = HashMap::new();
    frames.iter().map(|f| f.as_ref().map(|n| go(n, &mut names))).collect()
}

fn traces_of(a: &str, b: &str, steps: &[Step]) -> Result<(Trace, Trace), String> {
    let pa = parse_program(a).map_err(|e| format!("{e}\n{a}"))?;
    let pb = parse_program(b).map_err(|e| format!("{e}\n{b}"))?;
    let opts = scratch_opts();
    let ta = run_script(&pa, steps, &opts).map_err(|e| format!("{e}\n{a}"))?;
    let tb = run_script(&pb, steps, &opts).map_err(|e| format!("{e}\n{b}"))?;
    Ok((ta, tb))
}

pub fn empty_body_equivalence() -> Verdict {
    for_seeds(|rng| {
        let rings = Rings::random(rng);
        let form = rings.random_wraps(rng);
        let (plain, wrapped) = (rings.source(&rings.plain()), rings.source(&form));
        let steps = rings.script(SCRIPT_EVENTS, rng);
        let (a, b) = traces_of(&plain, &wrapped, &steps)?;
        ensure(a.frames.len() == SCRIPT_EVENTS + 1, || format!("{} frames", a.frames.len()))?;
        ensure(renamed(&a.frames) == renamed(&b.frames), || format!("traces differ\n{plain}\n{wrapped}"))?;
        if form.wrap.iter().flatten().all(|w| !w) {
            ensure(a.frames == b.frames, || format!("projections differ\n{wrapped}"))?;
        }
        Ok(())
    })?;
    Ok(format!("{CASES} programs; equal projections and {SCRIPT_EVENTS}-event traces"))
}

pub fn split_body_equivalence() -> Verdict {
    for_seeds(|rng| {
        let rings = Rings::random(rng);
        let joined = rings.random_components(rng);
        let split = super::gen::Form { split: true, ..joined.clone() };
        let (a_src, b_src) = (rings.source(&joined), rings.source(&split));
        let steps = rings.script(SCRIPT_EVENTS, rng);
        let (a, b) = traces_of(&a_src, &b_src, &steps)?;
        ensure(renamed(&a.frames) == renamed(&b.frames), || format!("traces differ\n{a_src}\n{b_src}"))
    })?;
    Ok(format!("{CASES} programs; equal {SCRIPT_EVENTS}-event traces"))
}

fn effect_names(fx: &widget_core::types::EffectSet) -> Vec<String> {
    let mut v: Vec<String> = fx.iter().map(|s| s.to_string()).collect();
    v.sort();
    v
}

fn oracle_names(events: &[usize]) -> Vec<String> {
    let mut v: Vec<String> = events.iter().map(|&k| signature(k)).collect();
    v.sort();
    v.dedup();
    v
}

fn infer(src: &str) -> Result<Type, String> {
    let e = desugar_expr(&Rc::new(parse_expr(src).map_err(|e| format!("{e}: {src}"))?));
    Checker::default().infer(&e).map_err(|e| format!("{}: {src}", e.message))
}

pub fn do_union_law() -> Result<(), String> {
    for_seeds(|rng| {
        let (src, events) = do_block(2, rng);
        match infer(&src)? {
            Type::Cmd(_, fx) => {
                ensure(effect_names(&fx) == oracle_names(&events), || format!("{src}: {fx:?} vs {events:?}"))
            }
            t => Err(format!("{src}: not a command: {t}")),
        }
    })
}

pub fn erasure_law() -> Result<(), String> {
    for_seeds(|rng| {
        let (src, events) = handler_widget(2, rng);
        match infer(&src)? {
            Type::Cmd(w, fx) => {
                ensure(fx.is_empty(), || format!("{src}: command effects {fx:?}"))?;
                let raised = Checker::default().raises_of(&w);
                ensure(effect_names(&raised) == oracle_names(&events), || format!("{src}: {raised:?} vs {events:?}"))
            }
            t => Err(format!("{src}: not a command: {t}")),
        }
    })
}

/// Runs random scripts on every generated program the checker accepts;
/// gives the number accepted.
pub fn handler_always_found() -> Result<usize, String> {
    let accepted = std::cell::Cell::new(0);
    for_seeds(|rng| {
        let r = Raisers::random(rng);
        let src = r.source(rng);
        let p = parse_program(&src).map_err(|e| format!("{e}\n{src}"))?;
        if !check_runnable(&p).is_empty() {
            let escapes = r.slots.iter().flatten().any(|k| !r.handled.contains(k)) || !r.handles_move;
            return ensure(escapes, || format!("rejected a program that handles every event\n{src}"));
        }
        accepted.set(accepted.get() + 1);
        let (mut rt, root) = start(&p, &scratch_opts()).map_err(|e| e.to_string())?;
        let steps = r.script(SMOKE_EVENTS, rng);
        match run_with(&mut rt, root, &steps) {
            Ok(t) => ensure(t.frames.len() == SMOKE_EVENTS + 1, || format!("{} frames", t.frames.len())),
            Err(HarnessError::Dispatch(DispatchError::NoHandler { name, arity })) => {
                Err(format!("no handler for {name}/{arity}\n{src}"))
            }
            Err(e) => Err(format!("{e}\n{src}")),
        }
    })?;
    ensure(accepted.get() > 0, || "no generated program was accepted".into())?;
    Ok(accepted.get())
}

pub fn effect_laws() -> Verdict {
    do_union_law().map_err(|e| format!("do-block union: {e}"))?;
    erasure_law().map_err(|e| format!("handler erasure: {e}"))?;
    let accepted = handler_always_found().map_err(|e| format!("soundness: {e}"))?;
    Ok(format!("{CASES} do-blocks, {CASES} widgets; {accepted} accepted programs ran {SMOKE_EVENTS} events"))
}

pub fn modelgen_golden() -> Verdict {
    let model = load_model(&fixture_path("buddy-model.json")).map_err(|e| e.to_string())?;
    let g = generate(&model).map_err(|e| e.to_string())?;
    let text = g.text();
    let golden = fixture("buddy-skeleton.wdg");
    let normalize = |t: &str| parse_program(t).map(|p| fill_holes(&p, &holes_in(t))).map_err(|e| e.to_string());
    ensure(normalize(&text)? == normalize(&golden)?, || "generated skeleton differs from the golden".into())?;
    let r = check_program(&normalize(&text)?);
    ensure(r.is_ok(), || format!("filled skeleton rejected: {:?}", r.diagnostics))?;
    Ok(format!("golden AST equal; {} holes filled and type-checked", g.todos.len()))
}

fn random_scalar(rng: &mut ChaCha8Rng) -> String {
    const ALPHABET: &[char] = &['a', 'Z', '7', ' ', '\t', '\n', '\r', '\\', 'é', '@', '.', 'n', 't'];
    (0..rng.gen_range(0..12)).map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())]).collect()
}

/// The file contents the store format prescribes: one `key TAB value`
/// line per record, with backslash, tab and line breaks escaped.
fn expected_file(records: &[(String, String)]) -> String {
    let esc = |s: &str| s.replace('\\', "\\\\").replace('\t', "\\t").replace('\n', "\\n").replace('\r', "\\r");
    records.iter().map(|(k, v)| format!("{}\t{}\n", esc(k), esc(v))).collect()
}

pub fn db_round_trip(dir: &Path) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let path = dir.join("round.dat");
    let mut db = DbState::open(&path, Column::Str, Column::Str).map_err(|e| e.to_string())?;
    let mut oracle: Vec<(String, String)> = Vec::new();
    for _ in 0..DB_PAIRS {
        let k = if !oracle.is_empty() && rng.gen_bool(0.1) {
            oracle[rng.gen_range(0..oracle.len())].0.clone()
        } else {
            random_scalar(&mut rng)
        };
        let v = random_scalar(&mut rng);
        db.update(Scalar::Str(k.clone()), Scalar::Str(v.clone())).map_err(|e| e.to_string())?;
        match oracle.iter_mut().find(|(ok, _)| *ok == k) {
            Some(slot) => slot.1 = v,
            None => oracle.push((k, v)),
        }
    }
    db.save().map_err(|e| e.to_string())?;
    let written = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
    ensure(written == expected_file(&oracle), || "file contents differ from the format".into())?;
    let reloaded = DbState::open(&path, Column::Str, Column::Str).map_err(|e| e.to_string())?;
    let records: Vec<(String, String)> = reloaded
        .records
        .iter()
        .map(|(k, v)| match (k, v) {
            (Scalar::Str(k), Scalar::Str(v)) => Ok((k.clone(), v.clone())),
            other => Err(format!("non-string record {other:?}")),
        })
        .collect::<Result<_, _>>()?;
    ensure(records == oracle, || "reloaded records differ".into())?;
    Ok(format!("{DB_PAIRS} updates, {} records reloaded", records.len()))
}
