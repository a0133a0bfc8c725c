//! Random Widget programs and scripts for the property suites.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use widget_core::harness::{Select, Step};

/// Events with fixed signatures, so that generated effects never clash.
pub const EVENTS: &[(&str, &[&str])] =
    &[("ev0", &[]), ("ev1", &["int"]), ("ev2", &["str"]), ("ev3", &["bool", "int"]), ("push", &["int"])];

fn arg_value(ty: &str, rng: &mut ChaCha8Rng) -> String {
    match ty {
        "int" => rng.gen_range(-5..50).to_string(),
        "str" => format!("'s{}'", rng.gen_range(0..9)),
        _ => rng.gen_bool(0.5).to_string(),
    }
}

/// `raise e(args)` for the `k`-th event.
pub fn raise(k: usize, rng: &mut ChaCha8Rng) -> String {
    let (name, tys) = EVENTS[k];
    let args: Vec<String> = tys.iter().map(|t| arg_value(t, rng)).collect();
    format!("raise {name}({})", args.join(","))
}

/// `e(t,...)` as printed by the checker.
pub fn signature(k: usize) -> String {
    let (name, tys) = EVENTS[k];
    format!("{name}({})", tys.join(","))
}

fn handler_head(k: usize) -> String {
    let (name, tys) = EVENTS[k];
    let params: Vec<String> = tys.iter().enumerate().map(|(i, t)| format!("a{i}:{t}")).collect();
    format!("{name}({})", params.join(","))
}

/// A component definition `x:t <- e` that adds nothing to the display.
/// A hidden button raises `push`, so it only suits widgets handling it.
fn component(name: &str, handles_push: bool, rng: &mut ChaCha8Rng) -> String {
    match rng.gen_range(0..if handles_push { 4 } else { 3 }) {
        0 => format!("{name}:!int <- loc[int]({})", rng.gen_range(0..9)),
        1 => format!("{name}:Label <- label('c{}')", rng.gen_range(0..9)),
        2 => format!("{name}:int <- do {{ return {} }}", rng.gen_range(0..9)),
        _ => format!("{name}:Button <- button('hidden')"),
    }
}

/// A phone whose button slots each cycle through a ring of labels.
#[derive(Clone, Debug)]
pub struct Rings {
    pub slots: Vec<usize>,
}

/// How each widget of a ring program is written.
#[derive(Clone, Debug)]
pub struct Form {
    /// `widget (p) {}` around the root and around each button, by slot
    /// and ring position.
    pub wrap_root: bool,
    pub wrap: Vec<Vec<bool>>,
    /// A component definition on the root and on each button.
    pub root_component: Option<String>,
    pub components: Vec<Vec<Option<String>>>,
    /// Components in an inner widget of their own.
    pub split: bool,
}

impl Rings {
    pub fn random(rng: &mut ChaCha8Rng) -> Rings {
        Rings { slots: (0..rng.gen_range(1..=3)).map(|_| rng.gen_range(1..=3)).collect() }
    }

    pub fn plain(&self) -> Form {
        Form {
            wrap_root: false,
            wrap: self.slots.iter().map(|&n| vec![false; n]).collect(),
            root_component: None,
            components: self.slots.iter().map(|&n| vec![None; n]).collect(),
            split: false,
        }
    }

    pub fn random_wraps(&self, rng: &mut ChaCha8Rng) -> Form {
        let mut f = self.plain();
        while !f.wrap_root && f.wrap.iter().flatten().all(|w| !w) {
            f.wrap_root = rng.gen_bool(0.5);
            for w in f.wrap.iter_mut().flatten() {
                *w = rng.gen_bool(0.4);
            }
        }
        f
    }

    pub fn random_components(&self, rng: &mut ChaCha8Rng) -> Form {
        let mut f = self.plain();
        while f.root_component.is_none() && f.components.iter().flatten().all(Option::is_none) {
            if rng.gen_bool(0.5) {
                f.root_component = Some(component("r", false, rng));
            }
            for c in f.components.iter_mut().flatten() {
                if rng.gen_bool(0.5) {
                    *c = Some(component("x", true, rng));
                }
            }
        }
        f
    }

    /// The program for a form.
    pub fn source(&self, form: &Form) -> String {
        let mut out = String::new();
        for i in 0..self.slots.len() {
            out.push_str(&format!("type T{i} = Widget(Button) {{ push:(int)-><T{i}> }}\n"));
        }
        let union: Vec<String> = (0..self.slots.len()).map(|i| format!("T{i}")).collect();
        let union = union.join("+");
        out.push_str(&format!("type M = Widget(Phone[Label,{union}]) {{ move:(int,int)-><M> }}\n"));
        let firsts: Vec<String> = (0..self.slots.len()).map(|i| format!("b{i}_0")).collect();
        let parent = format!("phone[Label,{union}]('T',label('L'),[{}])", firsts.join(","));
        let handlers = "move(x:int,y:int):<M> = do { return self }";
        out.push_str("val main:<M> =\n  letrec\n    m:<M> = ");
        out.push_str(&body("widget self", &parent, form.root_component.as_deref(), handlers, form.split));
        for (i, &n) in self.slots.iter().enumerate() {
            for j in 0..n {
                let next = format!("b{i}_{}", (j + 1) % n);
                let push = format!("push(i:int):<T{i}> = {next}");
                let w =
                    body("widget", &format!("button('s{i}.{j}')"), form.components[i][j].as_deref(), &push, form.split);
                let w = if form.wrap[i][j] { format!("widget ({w}) {{}}") } else { w };
                out.push_str(&format!(";\n    b{i}_{j}:<T{i}> = {w}"));
            }
        }
        let root = if form.wrap_root { "widget (m) {}" } else { "m" };
        out.push_str(&format!("\n  in {root}\n"));
        out
    }

    /// Random user steps: pushes on a slot or moves of the phone.
    pub fn script(&self, len: usize, rng: &mut ChaCha8Rng) -> Vec<Step> {
        (0..len)
            .map(|_| {
                if rng.gen_bool(0.8) {
                    let slot = rng.gen_range(0..self.slots.len());
                    let select = Select { path: Some(vec![1 + slot]), ..Select::default() };
                    Step::UiEvent { select, name: "push".into(), args: None }
                } else {
                    let args = vec![rng.gen_range(0..100).into(), rng.gen_range(0..100).into()];
                    Step::ContextEvent { name: "move".into(), args }
                }
            })
            .collect()
    }
}

/// `head (parent) { component; handlers }`, or with the component moved
/// into an inner widget.
fn body(head: &str, parent: &str, component: Option<&str>, handlers: &str, split: bool) -> String {
    match component {
        None => format!("{head} ({parent}) {{ {handlers} }}"),
        Some(c) if split => format!("{head} (widget ({parent}) {{ {c} }}) {{ {handlers} }}"),
        Some(c) => format!("{head} ({parent}) {{ {c}; {handlers} }}"),
    }
}

/// A phone whose buttons either toggle or raise events that the root may
/// or may not handle.
#[derive(Clone, Debug)]
pub struct Raisers {
    /// Per slot: `None` for a toggling pair, or the event a button raises.
    pub slots: Vec<Option<usize>>,
    pub handled: Vec<usize>,
    pub handles_move: bool,
}

impl Raisers {
    pub fn random(rng: &mut ChaCha8Rng) -> Raisers {
        let slots = (0..rng.gen_range(1..=4)).map(|_| rng.gen_bool(0.6).then(|| rng.gen_range(0..4))).collect();
        let handled = (0..4).filter(|_| rng.gen_bool(0.75)).collect();
        Raisers { slots, handled, handles_move: rng.gen_bool(0.85) }
    }

    pub fn source(&self, rng: &mut ChaCha8Rng) -> String {
        let mut out = String::new();
        let mut escaping = Vec::new();
        for (i, s) in self.slots.iter().enumerate() {
            match s {
                None => out.push_str(&format!("type T{i} = Widget(Button) {{ push:(int)-><T{i}> }}\n")),
                Some(k) => {
                    let sig = signature(*k);
                    out.push_str(&format!(
                        "type T{i} = Widget(Button) raises {sig} {{ push:(int)-><*> raises {sig} }}\n"
                    ));
                    if !self.handled.contains(k) && !escaping.contains(&sig) {
                        escaping.push(sig);
                    }
                }
            }
        }
        if !self.handles_move {
            escaping.push("move(int,int)".into());
        }
        let union: Vec<String> = (0..self.slots.len()).map(|i| format!("T{i}")).collect();
        let union = union.join("+");
        let mut members: Vec<String> =
            self.handled.iter().map(|&k| format!("{}:{}-><M>", EVENTS[k].0, arg_types(k))).collect();
        if self.handles_move {
            members.push("move:(int,int)-><M>".into());
        }
        let raises = if escaping.is_empty() { String::new() } else { format!(" raises {}", escaping.join(", ")) };
        out.push_str(&format!("type M = Widget(Phone[Label,{union}]){raises} {{ {} }}\n", members.join("; ")));
        let firsts: Vec<String> = (0..self.slots.len()).map(|i| format!("b{i}_0")).collect();
        let mut handlers: Vec<String> =
            self.handled.iter().map(|&k| format!("{}:<M> = do {{ return self }}", handler_head(k))).collect();
        if self.handles_move {
            handlers.push("move(x:int,y:int):<M> = do { return self }".into());
        }
        out.push_str(&format!(
            "val main:<M> =\n  letrec\n    m:<M> = widget self (phone[Label,{union}]('T',label('L'),[{}])) {{ {} }}",
            firsts.join(","),
            handlers.join("; ")
        ));
        for (i, s) in self.slots.iter().enumerate() {
            match s {
                None => {
                    for j in 0..2 {
                        out.push_str(&format!(
                            ";\n    b{i}_{j}:<T{i}> = widget (button('s{i}.{j}')) {{ push(i:int):<T{i}> = b{i}_{} }}",
                            1 - j
                        ));
                    }
                }
                Some(k) => out.push_str(&format!(
                    ";\n    b{i}_0:<T{i}> = widget (button('s{i}')) {{ push(i:int):<*> = {} }}",
                    raise(*k, rng)
                )),
            }
        }
        out.push_str("\n  in m\n");
        out
    }

    pub fn script(&self, len: usize, rng: &mut ChaCha8Rng) -> Vec<Step> {
        Rings { slots: vec![1; self.slots.len()] }.script(len, rng)
    }
}

fn arg_types(k: usize) -> String {
    format!("({})", EVENTS[k].1.join(","))
}

/// A random command together with the events it may raise.
pub fn command(depth: usize, rng: &mut ChaCha8Rng) -> (String, Vec<usize>) {
    let choice = if depth == 0 { rng.gen_range(0..2) } else { rng.gen_range(0..5) };
    match choice {
        0 => {
            let k = rng.gen_range(0..EVENTS.len());
            (format!("do {{ u:* <- {} return 1 }}", raise(k, rng)), vec![k])
        }
        1 => ("do { return 1 }".into(), vec![]),
        2 => do_block(depth - 1, rng),
        3 => {
            let (a, x) = command(depth - 1, rng);
            let (b, y) = command(depth - 1, rng);
            (format!("if {} then {a} else {b}", rng.gen_bool(0.5)), [x, y].concat())
        }
        _ => {
            let (a, x) = command(depth - 1, rng);
            (format!("let n:int = {} in {a}", rng.gen_range(0..9)), x)
        }
    }
}

/// A do-block of random bindings and the events of its bindings.
pub fn do_block(depth: usize, rng: &mut ChaCha8Rng) -> (String, Vec<usize>) {
    let mut text = String::from("do { ");
    let mut effects = Vec::new();
    for i in 0..rng.gen_range(0..5) {
        if rng.gen_bool(0.4) {
            let k = rng.gen_range(0..EVENTS.len());
            text.push_str(&format!("x{i}:* <- {}; ", raise(k, rng)));
            effects.push(k);
        } else if rng.gen_bool(0.2) {
            text.push_str(&format!("x{i}:Button <- button('b{i}'); "));
        } else {
            let (c, x) = command(depth, rng);
            text.push_str(&format!("x{i}:int <- {c}; "));
            effects.extend(x);
        }
    }
    text.push_str("return 0 }");
    (text, effects)
}

/// A widget whose body holds only handlers, with the events its parent
/// raises computed independently.
pub fn handler_widget(depth: usize, rng: &mut ChaCha8Rng) -> (String, Vec<usize>) {
    let (parent, parent_events) = match rng.gen_range(0..if depth == 0 { 3 } else { 4 }) {
        0 => (format!("button('p{}')", rng.gen_range(0..9)), vec![4]),
        1 => ("label('l')".to_string(), vec![]),
        2 => ("clock(1,2)".to_string(), vec![]),
        _ => handler_widget(depth - 1, rng),
    };
    let mut kinds: Vec<usize> = (0..EVENTS.len()).collect();
    kinds.shuffle(rng);
    kinds.truncate(rng.gen_range(0..=3));
    let mut handlers = Vec::new();
    let mut body_events = Vec::new();
    for &k in &kinds {
        let raised = rng.gen_range(0..EVENTS.len());
        let body = if rng.gen_bool(0.3) {
            let other = rng.gen_range(0..EVENTS.len());
            body_events.push(other);
            format!("if {} then {} else {}", rng.gen_bool(0.5), raise(raised, rng), raise(other, rng))
        } else {
            raise(raised, rng)
        };
        body_events.push(raised);
        handlers.push(format!("{}:<*> = {body}", handler_head(k)));
    }
    let text = format!("widget ({parent}) {{ {} }}", handlers.join("; "));
    let mut events: Vec<usize> = parent_events.into_iter().chain(body_events).collect();
    events.retain(|e| !kinds.contains(e));
    events.sort();
    events.dedup();
    (text, events)
}
