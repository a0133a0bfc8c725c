//! Registry of platform-provided widgets: their constructors, types,
//! raised events and commands.

pub mod db;
pub mod provider;

use crate::types::{EffectSet, EventSig, Type, WidgetType};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExternalKind {
    Button,
    Label,
    Clock,
    Notifier,
    Db,
    AddScreen,
    Screen,
    Window,
    Phone,
}

/// Shape of a constructor parameter, used when performing a constructor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamShape {
    Plain,
    /// A command that is performed to a child widget.
    Command,
    /// A list of commands, each performed to a child widget.
    CommandList,
}

impl ExternalKind {
    pub const ALL: [ExternalKind; 9] = [
        ExternalKind::Button,
        ExternalKind::Label,
        ExternalKind::Clock,
        ExternalKind::Notifier,
        ExternalKind::Db,
        ExternalKind::AddScreen,
        ExternalKind::Screen,
        ExternalKind::Window,
        ExternalKind::Phone,
    ];

    /// Name of the constructor operator, also the display kind.
    pub fn ctor_name(self) -> &'static str {
        match self {
            ExternalKind::Button => "button",
            ExternalKind::Label => "label",
            ExternalKind::Clock => "clock",
            ExternalKind::Notifier => "notifier",
            ExternalKind::Db => "db",
            ExternalKind::AddScreen => "addscreen",
            ExternalKind::Screen => "screen",
            ExternalKind::Window => "window",
            ExternalKind::Phone => "phone",
        }
    }

    /// Name of the widget type.
    pub fn type_name(self) -> &'static str {
        match self {
            ExternalKind::Button => "Button",
            ExternalKind::Label => "Label",
            ExternalKind::Clock => "Clock",
            ExternalKind::Notifier => "Notifier",
            ExternalKind::Db => "DB",
            ExternalKind::AddScreen => "AddScreen",
            ExternalKind::Screen => "Screen",
            ExternalKind::Window => "Window",
            ExternalKind::Phone => "Phone",
        }
    }

    pub fn from_ctor(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.ctor_name() == name)
    }

    pub fn from_type(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.type_name() == name)
    }

    pub fn type_params(self) -> &'static [&'static str] {
        match self {
            ExternalKind::Db => &["K", "V"],
            ExternalKind::Screen | ExternalKind::Window => &["C"],
            ExternalKind::Phone => &["D", "B"],
            _ => &[],
        }
    }

    fn params_as_vars(self) -> Vec<Type> {
        self.type_params().iter().map(|p| Type::var(p)).collect()
    }

    /// The widget type `T[args]` of constructed instances.
    pub fn instance_type(self, args: Vec<Type>) -> Type {
        Type::named(self.type_name(), args)
    }

    pub fn param_shapes(self) -> Vec<ParamShape> {
        use ParamShape::*;
        match self {
            ExternalKind::Button | ExternalKind::Label | ExternalKind::Notifier | ExternalKind::Db => vec![Plain],
            ExternalKind::AddScreen => vec![Plain],
            ExternalKind::Clock => vec![Plain, Plain],
            ExternalKind::Screen => vec![Plain, Plain, Plain, Plain, Command],
            ExternalKind::Window => vec![Plain, Command],
            ExternalKind::Phone => vec![Plain, Command, CommandList],
        }
    }

    fn ctor_params(self) -> Vec<Type> {
        let record = Type::Record(vec![("key".into(), Type::Str), ("val".into(), Type::Str)]);
        match self {
            ExternalKind::Button | ExternalKind::Label | ExternalKind::Db => vec![Type::Str],
            ExternalKind::Clock => vec![Type::Int, Type::Int],
            ExternalKind::Notifier => vec![Type::Int],
            ExternalKind::AddScreen => vec![Type::list(record)],
            ExternalKind::Screen => vec![Type::Int, Type::Int, Type::Int, Type::Int, Type::cmd(Type::var("C"))],
            ExternalKind::Window => vec![Type::Str, Type::cmd(Type::var("C"))],
            ExternalKind::Phone => vec![Type::Str, Type::cmd(Type::var("D")), Type::list(Type::cmd(Type::var("B")))],
        }
    }

    /// Type of the constructor operator, universally quantified over the
    /// type parameters when there are any.
    pub fn ctor_type(self) -> Type {
        let f = Type::fun(self.ctor_params(), Type::cmd(self.instance_type(self.params_as_vars())));
        let ps = self.type_params();
        if ps.is_empty() {
            f
        } else {
            Type::Forall(ps.iter().map(|s| s.to_string()).collect(), Box::new(f))
        }
    }

    /// Events raised by the widget itself, independent of its children.
    pub fn own_raises(self) -> EffectSet {
        match self {
            ExternalKind::Button => EffectSet::single(EventSig::new("push", vec![Type::Int])),
            ExternalKind::Notifier => EffectSet::single(EventSig::new("notify", vec![Type::Str])),
            ExternalKind::Screen | ExternalKind::Window | ExternalKind::Phone => {
                EffectSet::single(EventSig::new("move", vec![Type::Int, Type::Int]))
            }
            _ => EffectSet::empty(),
        }
    }

    /// Commands and methods exposed as fields, with their arity.
    pub fn ops(self) -> &'static [(&'static str, usize)] {
        match self {
            ExternalKind::Notifier => &[("connect", 0), ("register", 1), ("move", 2)],
            ExternalKind::Db => &[("records", 0), ("update", 2), ("delete", 1)],
            ExternalKind::AddScreen => &[("name", 0), ("address", 0)],
            _ => &[],
        }
    }

    pub fn op_arity(self, op: &str) -> Option<usize> {
        self.ops().iter().find(|(n, _)| *n == op).map(|(_, a)| *a)
    }

    fn field_types(self, args: &[Type]) -> Vec<(String, Type)> {
        let f = |n: &str, t: Type| (n.to_string(), t);
        match self {
            ExternalKind::Notifier => vec![
                f("connect", Type::cmd(Type::Bool)),
                f("register", Type::fun(vec![Type::Str], Type::cmd(Type::Bool))),
                f("move", Type::fun(vec![Type::Int, Type::Int], Type::cmd(Type::Bool))),
            ],
            ExternalKind::Db => {
                let (k, v) = (args[0].clone(), args[1].clone());
                let record = Type::Record(vec![("key".into(), k.clone()), ("val".into(), v.clone())]);
                vec![
                    f("records", Type::cmd(Type::list(record))),
                    f("update", Type::fun(vec![k.clone(), v.clone()], Type::cmd(v))),
                    f("delete", Type::fun(vec![k], Type::cmd(Type::Bool))),
                ]
            }
            ExternalKind::AddScreen => vec![f("name", Type::cmd(Type::Str)), f("address", Type::cmd(Type::Str))],
            _ => vec![],
        }
    }

    /// The widget type of `T[args]`. `raises_of` computes the events of a
    /// child type argument.
    pub fn widget_type(self, args: &[Type], raises_of: &dyn Fn(&Type) -> EffectSet) -> WidgetType {
        let mut raises = self.own_raises();
        if matches!(self, ExternalKind::Screen | ExternalKind::Window | ExternalKind::Phone) {
            for a in args {
                raises = raises.union(&raises_of(a));
            }
        }
        WidgetType { parent: Type::Top, raises, fields: self.field_types(args) }
    }
}
