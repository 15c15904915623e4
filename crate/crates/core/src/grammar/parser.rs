//! Recursive-descent parser over [`Token`]s with explicit backtracking.
//!
//! utterance  := sentence ( ("." | "?" | "!" | ";") sentence )*
//! sentence   := name-cmd | clause ( conj clause )* | adjunct+   (the last
//!               form completes the previous sentence's first part)
//! clause     := adjunct* ","? verb? object adjunct* | verb article? NAME modifier*
//! object     := "it" | article? arrangement | article? color? kind | article? color? "one"
//! adjunct    := relation | relative-position | coordinates

use super::lexer::Token;
use super::{
    AnchorRef, DependentRelation, MemoryCommand, Overrides, ParsedItem, PartialPlacementSpec,
    RelationKind, RelativePosition, ScaleFactor,
};
use crate::grid::{Color, PartKind};

pub(crate) const ORDINAL_WORDS: [&str; 16] = [
    "first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth", "tenth",
    "eleventh", "twelfth", "thirteenth", "fourteenth", "fifteenth", "sixteenth",
];

pub(crate) const CARDINAL_WORDS: [&str; 16] = [
    "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven",
    "twelve", "thirteen", "fourteen", "fifteen", "sixteen",
];

const PREFACES: &[&[&str]] = &[
    &["can", "you"],
    &["could", "you"],
    &["would", "you"],
    &["will", "you"],
    &["i", "want", "you", "to"],
    &["i", "would", "like", "you", "to"],
    &["please"],
    &["now"],
    &["then"],
    &["next"],
    &["also"],
    &["ok"],
    &["okay"],
    &["finally"],
    &["and"],
];

const VERBS: &[&str] = &[
    "place", "put", "add", "set", "build", "make", "stack", "create", "recreate", "construct",
    "drop", "position", "lay",
];

/// Words that end a recalled shape's name.
const NAME_STOPS: &[&str] = &[
    ",", "and", "at", "in", "on", "with", "using", "next", "to", "beside", "behind", "starting",
    "beginning", "from", "twice", "double", "half", "but", "made", "out", "above", "adjacent",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum CoordAxis {
    X,
    Y,
    Z,
}

#[derive(Clone, Copy, Debug)]
struct CoordItem {
    axis: CoordAxis,
    value: u8,
    second: Option<u8>,
}

#[derive(Clone, Debug)]
enum Adjunct {
    Coords(Vec<CoordItem>),
    Relative(RelativePosition),
    Relation(DependentRelation),
}

#[derive(Clone, Copy, Debug)]
enum Arrangement {
    Row,
    Column,
    Tower,
}

#[derive(Clone, Debug)]
enum Object {
    Pronoun,
    Single {
        color: Option<Color>,
        kind: Option<PartKind>,
    },
    Arranged {
        arrangement: Arrangement,
        count: u8,
        color: Option<Color>,
        kind: PartKind,
    },
}

pub(crate) fn ordinal_value(word: &str) -> Option<u8> {
    if let Some(i) = ORDINAL_WORDS.iter().position(|w| *w == word) {
        return Some(i as u8 + 1);
    }
    let digits: String = word.chars().take_while(|c| c.is_ascii_digit()).collect();
    let suffix = &word[digits.len()..];
    if digits.is_empty() || !matches!(suffix, "st" | "nd" | "rd" | "th") {
        return None;
    }
    in_range(digits.parse().ok()?)
}

pub(crate) fn cardinal_value(word: &str) -> Option<u8> {
    if let Some(i) = CARDINAL_WORDS.iter().position(|w| *w == word) {
        return Some(i as u8 + 1);
    }
    if word.chars().all(|c| c.is_ascii_digit()) && !word.is_empty() && word.len() <= 3 {
        return in_range(word.parse().ok()?);
    }
    None
}

fn in_range(v: u32) -> Option<u8> {
    (1..=16).contains(&v).then_some(v as u8)
}

pub(crate) fn number_value(word: &str) -> Option<u8> {
    ordinal_value(word).or_else(|| cardinal_value(word))
}

pub(crate) fn color_word(word: &str) -> Option<Color> {
    Color::ALL.into_iter().find(|c| c.as_str() == word)
}

pub(crate) struct Cursor<'a> {
    toks: &'a [Token],
    pub pos: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(toks: &'a [Token]) -> Self {
        Cursor { toks, pos: 0 }
    }

    fn peek(&self) -> Option<&str> {
        self.toks.get(self.pos).map(|t| t.norm.as_str())
    }

    fn peek_at(&self, k: usize) -> Option<&str> {
        self.toks.get(self.pos + k).map(|t| t.norm.as_str())
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn eat(&mut self, word: &str) -> bool {
        if self.peek() == Some(word) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_any(&mut self, words: &[&str]) -> bool {
        match self.peek() {
            Some(w) if words.contains(&w) => {
                self.pos += 1;
                true
            }
            _ => false,
        }
    }

    fn eat_seq(&mut self, words: &[&str]) -> bool {
        let ok = words
            .iter()
            .enumerate()
            .all(|(i, w)| self.peek_at(i) == Some(w));
        if ok {
            self.pos += words.len();
        }
        ok
    }

    fn attempt<T>(&mut self, f: impl FnOnce(&mut Self) -> Option<T>) -> Option<T> {
        let save = self.pos;
        let out = f(self);
        if out.is_none() {
            self.pos = save;
        }
        out
    }

    fn next_with(&mut self, f: impl Fn(&str) -> Option<u8>) -> Option<u8> {
        let v = f(self.peek()?)?;
        self.pos += 1;
        Some(v)
    }

    pub fn skip_prefaces(&mut self) {
        // "next to it, ..." starts with a relation, not a preface
        while !(self.peek() == Some("next") && self.peek_at(1) == Some("to"))
            && PREFACES.iter().any(|seq| self.eat_seq(seq))
        {}
    }

    pub fn color(&mut self) -> Option<Color> {
        let c = color_word(self.peek()?)?;
        self.pos += 1;
        Some(c)
    }

    /// Part name, singular or plural.
    pub fn kind(&mut self) -> Option<PartKind> {
        self.attempt(|p| {
            let first = p.peek()?.to_string();
            p.pos += 1;
            let two = |p: &mut Cursor, k: PartKind, heads: &[&str]| {
                p.eat_any(heads).then_some(k)
            };
            match first.as_str() {
                "horizontal" => two(p, PartKind::HorizontalBridge, &["bridge", "bridges"]),
                "vertical" => two(p, PartKind::VerticalBridge, &["bridge", "bridges"]),
                "hex" | "hexagonal" => two(p, PartKind::HexNut, &["nut", "nuts"]),
                "square" => two(p, PartKind::SquareNut, &["nut", "nuts"]),
                "screw" | "screws" => Some(PartKind::Screw),
                "nut" | "nuts" => Some(PartKind::Nut),
                "washer" | "washers" => Some(PartKind::Washer),
                "bolt" | "bolts" => Some(PartKind::Bolt),
                "gasket" | "gaskets" => Some(PartKind::Gasket),
                _ => None,
            }
        })
    }

    fn verb(&mut self) -> bool {
        if self.eat_any(VERBS) {
            self.eat_any(&["me", "us", "down"]);
            true
        } else {
            false
        }
    }

    fn article(&mut self) -> bool {
        self.eat_seq(&["one", "more"]) || self.eat_any(&["a", "an", "another"])
    }

    fn object(&mut self) -> Option<Object> {
        if self.attempt(|p| p.eat_any(&["it", "that", "this"]).then_some(())).is_some() {
            return Some(Object::Pronoun);
        }
        self.attempt(|p| {
            p.article();
            if let Some(o) = p.attempt(Self::arrangement) {
                return Some(o);
            }
            if let Some(o) = p.attempt(|p| {
                let color = p.color();
                let kind = p.kind()?;
                Some(Object::Single {
                    color,
                    kind: Some(kind),
                })
            }) {
                return Some(o);
            }
            let color = p.color();
            p.eat_any(&["one", "part", "piece", "block"])
                .then_some(Object::Single { color, kind: None })
        })
    }

    fn arrangement(&mut self) -> Option<Object> {
        let orientation = match self.peek()? {
            "horizontal" => {
                self.pos += 1;
                Some(Arrangement::Row)
            }
            "vertical" => {
                self.pos += 1;
                Some(Arrangement::Column)
            }
            _ => None,
        };
        let shape = match self.peek()? {
            "row" | "line" => Arrangement::Row,
            "column" => Arrangement::Column,
            "tower" | "stack" | "pile" => Arrangement::Tower,
            _ => return None,
        };
        self.pos += 1;
        let arrangement = match (shape, orientation) {
            (Arrangement::Tower, _) => Arrangement::Tower,
            (_, Some(o)) => o,
            (s, None) => s,
        };
        if !(self.eat("of") || self.eat_seq(&["made", "of"]) || self.eat_seq(&["made", "up", "of"])) {
            return None;
        }
        let count = self.next_with(cardinal_value)?;
        self.eat("more");
        let color = self.color();
        let kind = self.kind()?;
        Some(Object::Arranged {
            arrangement,
            count,
            color,
            kind,
        })
    }

    fn anchor(&mut self) -> Option<AnchorRef> {
        self.attempt(|p| {
            if p.eat_any(&["it", "that", "this", "them"]) {
                p.eat("one");
                return Some(AnchorRef::Last);
            }
            if !p.eat("the") {
                return None;
            }
            if p.eat_any(&["previous", "last"]) {
                p.eat_any(&["one", "part", "piece"]).then_some(AnchorRef::Last)
            } else {
                let color = p.color();
                let kind = p.kind();
                if kind.is_none() && !p.eat_any(&["one", "part", "piece"]) {
                    return None;
                }
                if color.is_none() && kind.is_none() {
                    return None;
                }
                Some(AnchorRef::Described { color, kind })
            }
        })
    }

    fn relation(&mut self) -> Option<DependentRelation> {
        use RelationKind::*;
        let rel = |kind, target| Some(DependentRelation { kind, target });
        let forms: &[(&[&str], RelationKind)] = &[
            (&["next", "to"], NextTo),
            (&["beside"], NextTo),
            (&["adjacent", "to"], NextTo),
            (&["to", "the", "right", "of"], RightOf),
            (&["right", "of"], RightOf),
            (&["to", "the", "left", "of"], LeftOf),
            (&["left", "of"], LeftOf),
            (&["in", "front", "of"], InFront),
            (&["behind"], Behind),
            (&["on", "top", "of"], OnTop),
            (&["above"], OnTop),
        ];
        for (words, kind) in forms {
            if let Some(r) = self.attempt(|p| {
                if !p.eat_seq(words) {
                    return None;
                }
                rel(*kind, p.anchor()?)
            }) {
                return Some(r);
            }
        }
        if let Some(r) = self.attempt(|p| {
            p.eat_seq(&["on", "top"]).then_some(())?;
            rel(OnTop, AnchorRef::Last)
        }) {
            return Some(r);
        }
        self.attempt(|p| {
            p.eat("on").then_some(())?;
            rel(OnTop, p.anchor()?)
        })
    }

    fn relative(&mut self) -> Option<RelativePosition> {
        self.attempt(|p| {
            if !(p.eat_any(&["at", "in", "on", "to"]) && p.eat("the")) {
                return None;
            }
            let label = p.label()?;
            p.eat_any(&["corner", "side"]);
            if p.eat("of") && !(p.eat("the") && p.eat_any(&["board", "grid"])) {
                return None;
            }
            Some(label)
        })
    }

    fn label(&mut self) -> Option<RelativePosition> {
        use RelativePosition::*;
        let mid = |w: &str| matches!(w, "middle" | "center" | "centre");
        let a = self.peek()?.to_string();
        let b = self.peek_at(1).map(str::to_string).unwrap_or_default();
        let pair = match (a.as_str(), b.as_str()) {
            ("top" | "upper", "left") => Some(TopLeft),
            ("top" | "upper", "right") => Some(TopRight),
            ("bottom" | "lower", "left") => Some(BottomLeft),
            ("bottom" | "lower", "right") => Some(BottomRight),
            ("top", m) if mid(m) => Some(TopMiddle),
            ("bottom", m) if mid(m) => Some(BottomMiddle),
            ("left", m) if mid(m) => Some(LeftMiddle),
            ("right", m) if mid(m) => Some(RightMiddle),
            (m, "left") if mid(m) => Some(LeftMiddle),
            (m, "right") if mid(m) => Some(RightMiddle),
            (m, "top") if mid(m) => Some(TopMiddle),
            (m, "bottom") if mid(m) => Some(BottomMiddle),
            _ => None,
        };
        if let Some(p) = pair {
            self.pos += 2;
            return Some(p);
        }
        if mid(&a) {
            self.pos += 1;
            return Some(Middle);
        }
        None
    }

    fn coord_item(&mut self) -> Option<CoordItem> {
        let axis_of = |w: &str| match w {
            "column" | "columns" => Some(CoordAxis::X),
            "row" | "rows" => Some(CoordAxis::Y),
            "height" | "level" | "layer" => Some(CoordAxis::Z),
            _ => None,
        };
        // "the 3rd and 4th columns", "the eighth row", "the 2nd level"
        if let Some(item) = self.attempt(|p| {
            p.eat("the");
            let value = p.next_with(ordinal_value)?;
            let second = p.attempt(|p| {
                p.eat("and").then_some(())?;
                p.next_with(ordinal_value)
            });
            let axis = axis_of(p.peek()?)?;
            p.pos += 1;
            Some(CoordItem {
                axis,
                value,
                second,
            })
        }) {
            return Some(item);
        }
        // "row 4", "height 1"
        if let Some(item) = self.attempt(|p| {
            let axis = axis_of(p.peek()?)?;
            p.pos += 1;
            let value = p.next_with(number_value)?;
            Some(CoordItem {
                axis,
                value,
                second: None,
            })
        }) {
            return Some(item);
        }
        self.attempt(|p| {
            p.eat_seq(&["a", "height", "of"]).then_some(())?;
            let value = p.next_with(number_value)?;
            Some(CoordItem {
                axis: CoordAxis::Z,
                value,
                second: None,
            })
        })
    }

    fn coord_group(&mut self, with_prep: bool) -> Option<Vec<CoordItem>> {
        self.attempt(|p| {
            if with_prep {
                p.eat_any(&["starting", "beginning", "start", "begin"]);
                if !p.eat_any(&["at", "in", "on", "from"]) {
                    return None;
                }
            }
            let mut items = vec![p.coord_item()?];
            while let Some(item) = p.attempt(|p| {
                p.eat(",");
                p.eat("and");
                p.coord_item()
            }) {
                items.push(item);
            }
            Some(items)
        })
    }

    fn adjunct(&mut self, bare: bool) -> Option<Adjunct> {
        if let Some(r) = self.relation() {
            return Some(Adjunct::Relation(r));
        }
        if let Some(r) = self.relative() {
            return Some(Adjunct::Relative(r));
        }
        if let Some(c) = self.coord_group(true) {
            return Some(Adjunct::Coords(c));
        }
        if bare {
            return self.coord_group(false).map(Adjunct::Coords);
        }
        None
    }

    fn adjuncts(&mut self) -> Vec<Adjunct> {
        let mut out = Vec::new();
        loop {
            if let Some(a) = self.adjunct(false) {
                out.push(a);
            } else if let Some(a) = self.attempt(|p| {
                p.eat(",").then_some(())?;
                p.adjunct(true)
            }) {
                out.push(a);
            } else {
                return out;
            }
        }
    }

    fn overrides(&mut self, ov: &mut Overrides) -> bool {
        let size = self.attempt(|p| {
            if p.eat("twice") {
                return (p.eat_seq(&["as", "big"]) || p.eat_seq(&["as", "large"]) || p.eat_seq(&["the", "size"]))
                    .then(|| ScaleFactor::times(2));
            }
            if p.eat("double") {
                p.eat("the");
                return p.eat("size").then(|| ScaleFactor::times(2));
            }
            if p.eat("half") {
                return (p.eat_seq(&["the", "size"]) || p.eat_seq(&["as", "big"]) || p.eat_seq(&["as", "large"]))
                    .then(ScaleFactor::half);
            }
            let n = p.next_with(cardinal_value)?;
            if !(2..=8).contains(&n) || !p.eat("times") {
                return None;
            }
            (p.eat_seq(&["as", "big"]) || p.eat_seq(&["as", "large"]) || p.eat_any(&["bigger", "larger"]) || p.eat_seq(&["the", "size"]))
                .then(|| ScaleFactor::times(n))
        });
        if let Some(s) = size {
            if ov.size.replace(s).is_some() {
                return false;
            }
            return true;
        }
        if let Some(c) = self.attempt(|p| {
            p.eat("in").then_some(())?;
            p.color()
        }) {
            return ov.color.replace(c).is_none();
        }
        if let Some(k) = self.attempt(|p| {
            if !(p.eat_any(&["with", "using"]) || p.eat_seq(&["made", "of"]) || p.eat_seq(&["out", "of"])) {
                return None;
            }
            p.kind()
        }) {
            return ov.part.replace(k).is_none();
        }
        false
    }

    fn recall(&mut self) -> Option<MemoryCommand> {
        self.attempt(|p| {
            p.skip_prefaces();
            if !p.verb() {
                return None;
            }
            let _ = p.eat_seq(&["one", "more"]) || p.eat_seq(&["a", "new"]) || p.eat_any(&["another", "a", "an", "the"]);
            let start = p.pos;
            while let Some(w) = p.peek() {
                if NAME_STOPS.contains(&w) || cardinal_value(w).is_some() && p.peek_at(1) == Some("times") {
                    break;
                }
                p.pos += 1;
            }
            if p.pos == start {
                return None;
            }
            let shape = join_raw(&p.toks[start..p.pos]);
            let mut target = PartialPlacementSpec::default();
            let mut overrides = Overrides::default();
            let mut adjuncts = Vec::new();
            loop {
                p.eat("but");
                if let Some(a) = p.adjunct(false) {
                    adjuncts.push(a);
                    continue;
                }
                let save = p.pos;
                p.eat(",");
                p.eat("but");
                if p.at_end() {
                    p.pos = save;
                    break;
                }
                let before = p.pos;
                if p.overrides(&mut overrides) {
                    continue;
                }
                if p.pos != before {
                    return None;
                }
                p.pos = save;
                if let Some(a) = p.attempt(|p| {
                    p.eat(",").then_some(())?;
                    p.adjunct(true)
                }) {
                    adjuncts.push(a);
                    continue;
                }
                break;
            }
            apply_adjuncts(&mut target, &adjuncts)?;
            Some(MemoryCommand::Recall {
                shape,
                target,
                overrides,
            })
        })
    }

    fn clause(&mut self) -> Option<Vec<ParsedItem>> {
        if let Some(items) = self.attempt(|p| {
            p.skip_prefaces();
            let mut adjuncts = p.adjuncts();
            if !adjuncts.is_empty() {
                p.eat(",");
            }
            p.verb();
            let object = p.object()?;
            adjuncts.extend(p.adjuncts());
            build_specs(object, &adjuncts)
        }) {
            return Some(items);
        }
        self.recall().map(|c| vec![ParsedItem::Memory(c)])
    }

    fn conjunction(&mut self) -> bool {
        let comma = self.eat(",");
        let word = self.eat_any(&["and", "then"]);
        let then = self.eat("then");
        comma || word || then
    }

    fn clause_list(&mut self) -> Option<Vec<Vec<ParsedItem>>> {
        let mut out = vec![self.clause()?];
        loop {
            let save = self.pos;
            if !self.conjunction() {
                break;
            }
            match self.clause() {
                Some(c) => out.push(c),
                None => {
                    self.pos = save;
                    break;
                }
            }
        }
        Some(out)
    }

    fn name_rest(&mut self, strip_shape_word: bool) -> Option<String> {
        let mut toks = &self.toks[self.pos..];
        self.pos = self.toks.len();
        if strip_shape_word {
            match toks.last() {
                Some(t) if t.is("shape") || t.is("structure") => toks = &toks[..toks.len() - 1],
                _ => return None,
            }
        }
        if toks.len() > 1 && matches!(toks[0].norm.as_str(), "a" | "an" | "the") {
            toks = &toks[1..];
        }
        if toks.is_empty() || toks.iter().any(|t| t.norm == ",") {
            return None;
        }
        Some(join_raw(toks))
    }

    fn name_command(&mut self) -> Option<MemoryCommand> {
        let shape = self.attempt(|p| {
            p.skip_prefaces();
            if p.eat("this") && p.eat_any(&["is", "was", "s"]) {
                if p.eat("what") {
                    p.eat_any(&["i", "we"]).then_some(())?;
                    p.eat_any(&["will", "would", "ll", "shall"]);
                    p.eat("call").then_some(())?;
                    return p.name_rest(false);
                }
                if p.eat("called") {
                    return p.name_rest(false);
                }
                if matches!(p.peek(), Some("a" | "an" | "the")) {
                    return p.name_rest(true);
                }
                return None;
            }
            p.pos = 0;
            p.skip_prefaces();
            let _ = p.eat_seq(&["let", "us"]) || p.eat("lets");
            if p.eat("call") {
                p.eat_any(&["this", "it", "that"]).then_some(())?;
                return p.name_rest(false);
            }
            if p.eat_any(&["name", "save", "store", "remember"]) {
                p.eat_any(&["this", "it", "that"]).then_some(())?;
                p.eat("as");
                return p.name_rest(false);
            }
            None
        })?;
        Some(MemoryCommand::Name { shape })
    }

    fn adjunct_sentence(&mut self) -> Option<Vec<Adjunct>> {
        self.attempt(|p| {
            p.skip_prefaces();
            let _ = p.eat_any(&["all", "both", "everything", "each"]) || {
                let they = p.eat("they");
                p.eat("are");
                p.eat("all");
                they
            };
            p.eat_seq(&["of", "them"]);
            p.eat_any(&["are", "is"]);
            p.eat("placed");
            let adj = p.adjuncts();
            (!adj.is_empty() && p.at_end()).then_some(adj)
        })
    }
}

fn join_raw(toks: &[Token]) -> String {
    toks.iter().map(|t| t.raw.as_str()).collect::<Vec<_>>().join(" ")
}

fn apply_adjuncts(spec: &mut PartialPlacementSpec, adjuncts: &[Adjunct]) -> Option<()> {
    for adj in adjuncts {
        match adj {
            Adjunct::Coords(items) => {
                for item in items {
                    let (lo, hi) = match item.second {
                        None => (item.value, None),
                        Some(s) => {
                            let (lo, hi) = (item.value.min(s), item.value.max(s));
                            if hi != lo + 1 {
                                return None;
                            }
                            (lo, Some(hi))
                        }
                    };
                    let (first, second) = match item.axis {
                        CoordAxis::X => (&mut spec.x, &mut spec.x2),
                        CoordAxis::Y => (&mut spec.y, &mut spec.y2),
                        CoordAxis::Z => {
                            if hi.is_some() || spec.z.is_some() {
                                return None;
                            }
                            spec.z = Some(lo);
                            continue;
                        }
                    };
                    if first.is_some() {
                        return None;
                    }
                    *first = Some(lo);
                    *second = hi;
                }
            }
            Adjunct::Relative(r) => {
                if spec.relative.replace(*r).is_some() {
                    return None;
                }
            }
            Adjunct::Relation(r) => {
                if spec.relation.replace(r.clone()).is_some() {
                    return None;
                }
            }
        }
    }
    let absolute = spec.x.is_some() || spec.y.is_some();
    if spec.relation.is_some() && (absolute || spec.z.is_some() || spec.relative.is_some()) {
        return None;
    }
    if spec.relative.is_some() && absolute {
        return None;
    }
    Some(())
}

fn build_specs(object: Object, adjuncts: &[Adjunct]) -> Option<Vec<ParsedItem>> {
    let mut first = PartialPlacementSpec::default();
    let (count, follow) = match object {
        Object::Pronoun => {
            first.anchor_ref = Some(AnchorRef::Last);
            (1, None)
        }
        Object::Single { color, kind } => {
            first.color = color;
            first.kind = kind;
            (1, None)
        }
        Object::Arranged {
            arrangement,
            count,
            color,
            kind,
        } => {
            first.color = color;
            first.kind = Some(kind);
            let rel = match arrangement {
                Arrangement::Row => RelationKind::RightOf,
                Arrangement::Column => RelationKind::InFront,
                Arrangement::Tower => RelationKind::OnTop,
            };
            (count, Some(rel))
        }
    };
    let template = first.clone();
    apply_adjuncts(&mut first, adjuncts)?;
    let mut out = vec![ParsedItem::Place(first)];
    if let Some(kind) = follow {
        for _ in 1..count {
            let mut next = template.clone();
            next.relation = Some(DependentRelation {
                kind,
                target: AnchorRef::Last,
            });
            out.push(ParsedItem::Place(next));
        }
    }
    Some(out)
}

/// Parses a whole token stream; `None` when any sentence falls outside the grammar.
pub(crate) fn parse_tokens(tokens: &[Token]) -> Option<Vec<ParsedItem>> {
    let mut items: Vec<ParsedItem> = Vec::new();
    let mut last_head: Option<usize> = None;
    for mut sentence in tokens.split(Token::is_terminal) {
        while let Some(last) = sentence.last() {
            if matches!(last.norm.as_str(), "please" | "thanks" | ",") {
                sentence = &sentence[..sentence.len() - 1];
            } else {
                break;
            }
        }
        if sentence.is_empty() {
            continue;
        }
        let mut p = Cursor::new(sentence);
        if let Some(cmd) = p.name_command() {
            items.push(ParsedItem::Memory(cmd));
            last_head = None;
            continue;
        }
        p.pos = 0;
        if let Some(clauses) = p.clause_list() {
            if p.at_end() {
                for clause in clauses {
                    last_head = Some(items.len());
                    items.extend(clause);
                }
                continue;
            }
        }
        p.pos = 0;
        let adjuncts = p.adjunct_sentence()?;
        let head = last_head?;
        let spec = match &mut items[head] {
            ParsedItem::Place(s) => s,
            ParsedItem::Memory(MemoryCommand::Recall { target, .. }) => target,
            ParsedItem::Memory(MemoryCommand::Name { .. }) => return None,
        };
        apply_adjuncts(spec, &adjuncts)?;
    }
    (!items.is_empty()).then_some(items)
}
