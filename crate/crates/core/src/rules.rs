//! Composition rules: how each target character is assembled from the six
//! stroke classes. File keys follow the short feature names: `pos`, `occ`,
//! `size`, `jp`, `ds`, `ap`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::raster::{BBox, BinaryRaster, Point};
use crate::strokes::StrokeClass;

pub const RULESET_VERSION: u32 = 1;
/// First and last codepoints a rule may target (Gujarati consonants).
pub const CONSONANTS: std::ops::RangeInclusive<u32> = 0x0A95..=0x0AB9;
/// Support gap under which a second joining-point mode becomes a variant.
pub const DEFAULT_CLOSENESS: f64 = 0.10;

const DEFAULT_RULES: &str = include_str!("../assets/rules/default.json");

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize,
)]
#[serde(rename_all = "kebab-case")]
pub enum Appearance {
    #[default]
    Identity,
    FlipH,
    FlipV,
    Rot90,
    Rot180,
    Rot270,
}

impl Appearance {
    pub const ALL: [Appearance; 6] = [
        Appearance::Identity,
        Appearance::FlipH,
        Appearance::FlipV,
        Appearance::Rot90,
        Appearance::Rot180,
        Appearance::Rot270,
    ];

    pub fn apply(self, img: &BinaryRaster) -> BinaryRaster {
        match self {
            Appearance::Identity => img.clone(),
            Appearance::FlipH => img.flip_horizontal(),
            Appearance::FlipV => img.flip_vertical(),
            Appearance::Rot90 => img.rotate90(),
            Appearance::Rot180 => img.rotate90().rotate90(),
            Appearance::Rot270 => img.rotate90().rotate90().rotate90(),
        }
    }

    /// Where pixel `p` of a `w × h` raster lands after [`apply`](Self::apply).
    pub fn map_point(self, p: Point, w: usize, h: usize) -> Point {
        let (w, h) = (w as i32, h as i32);
        match self {
            Appearance::Identity => p,
            Appearance::FlipH => Point::new(w - 1 - p.x, p.y),
            Appearance::FlipV => Point::new(p.x, h - 1 - p.y),
            Appearance::Rot90 => Point::new(h - 1 - p.y, p.x),
            Appearance::Rot180 => Point::new(w - 1 - p.x, h - 1 - p.y),
            Appearance::Rot270 => Point::new(p.y, w - 1 - p.x),
        }
    }
}

/// A point on a stroke: one of its endpoints, or a percentage position
/// inside its bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JoinPoint {
    End(EndLabel),
    Percent { px: f64, py: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EndLabel {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JoinSpec {
    /// Point on the stroke being placed.
    pub this: JoinPoint,
    /// Index of an earlier placement.
    pub target: usize,
    /// Point on the target stroke.
    pub at: JoinPoint,
}

fn default_size() -> f64 {
    1.0
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrokePlacement {
    /// Stroke class 1–6.
    pub class: u8,
    /// Which bank stroke of the class to use when several exist.
    #[serde(default, skip_serializing_if = "is_default")]
    pub occ: usize,
    /// Scale relative to the bank's typical stroke extent.
    #[serde(default = "default_size")]
    pub size: f64,
    #[serde(default, skip_serializing_if = "is_default")]
    pub ap: Appearance,
    /// Weld onto an earlier stroke.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jp: Option<JoinSpec>,
    /// Gap from the previous stroke's box, percent of canvas (dx, dy).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ds: Option<(f64, f64)>,
    /// Box centre on the canvas, percent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<(f64, f64)>,
}

impl StrokePlacement {
    pub fn at(class: u8, pos: (f64, f64)) -> Self {
        Self {
            class,
            occ: 0,
            size: 1.0,
            ap: Appearance::Identity,
            jp: None,
            ds: None,
            pos: Some(pos),
        }
    }

    pub fn class(&self) -> StrokeClass {
        StrokeClass::new(self.class).expect("validated placement")
    }
}

pub type Variant = Vec<StrokePlacement>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionRule {
    #[serde(rename = "char", with = "codepoint")]
    pub character: u32,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    pub variants: Vec<Variant>,
}

impl CompositionRule {
    /// Stroke classes of a variant, sorted.
    pub fn class_multiset(&self, variant: usize) -> Vec<u8> {
        let mut c: Vec<u8> = self.variants[variant].iter().map(|p| p.class).collect();
        c.sort_unstable();
        c
    }

    /// Every placement after the first is welded to an earlier one.
    pub fn is_join_only(&self, variant: usize) -> bool {
        let v = &self.variants[variant];
        v.len() > 1 && v[1..].iter().all(|p| p.jp.is_some())
    }

    pub fn label(&self) -> String {
        format_codepoint(self.character)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleSet {
    pub version: u32,
    #[serde(default)]
    pub source: String,
    #[serde(with = "rule_list")]
    pub characters: BTreeMap<u32, CompositionRule>,
}

impl RuleSet {
    pub fn get(&self, cp: u32) -> Option<&CompositionRule> {
        self.characters.get(&cp)
    }

    pub fn len(&self) -> usize {
        self.characters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.characters.is_empty()
    }

    pub fn rules(&self) -> impl Iterator<Item = &CompositionRule> {
        self.characters.values()
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != RULESET_VERSION {
            return Err(Error::InvalidParameter(format!(
                "unsupported ruleset version {}",
                self.version
            )));
        }
        self.rules().try_for_each(validate_rule)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

pub fn format_codepoint(cp: u32) -> String {
    format!("U+{cp:04X}")
}

/// Accepts `U+0A95`, `0x0A95` or the character itself.
pub fn parse_codepoint(s: &str) -> Option<u32> {
    let t = s.trim();
    if let Some(hex) = t
        .strip_prefix("U+")
        .or_else(|| t.strip_prefix("u+"))
        .or_else(|| t.strip_prefix("0x"))
    {
        return u32::from_str_radix(hex, 16).ok();
    }
    let mut chars = t.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => Some(c as u32),
        _ => None,
    }
}

mod codepoint {
    use super::*;

    pub fn serialize<S: Serializer>(cp: &u32, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_codepoint(*cp))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<u32, D::Error> {
        let s = String::deserialize(d)?;
        parse_codepoint(&s).ok_or_else(|| serde::de::Error::custom(format!("bad codepoint {s:?}")))
    }
}

mod rule_list {
    use super::*;

    pub fn serialize<S: Serializer>(
        m: &BTreeMap<u32, CompositionRule>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(m.values())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<BTreeMap<u32, CompositionRule>, D::Error> {
        let list = Vec::<CompositionRule>::deserialize(d)?;
        let mut out = BTreeMap::new();
        for r in list {
            let cp = r.character;
            if out.insert(cp, r).is_some() {
                return Err(serde::de::Error::custom(format!(
                    "duplicate rule for {}",
                    format_codepoint(cp)
                )));
            }
        }
        Ok(out)
    }
}

fn rule_err(rule: &CompositionRule, field: String, message: impl Into<String>) -> Error {
    Error::Rule {
        character: rule.label(),
        field,
        message: message.into(),
    }
}

fn percent_ok(v: f64) -> bool {
    (0.0..=100.0).contains(&v)
}

fn check_point(rule: &CompositionRule, field: String, p: &JoinPoint) -> Result<()> {
    if let JoinPoint::Percent { px, py } = p {
        if !percent_ok(*px) || !percent_ok(*py) {
            return Err(rule_err(
                rule,
                field,
                format!("percent ({px}, {py}) outside 0..=100"),
            ));
        }
    }
    Ok(())
}

pub fn validate_rule(rule: &CompositionRule) -> Result<()> {
    if !CONSONANTS.contains(&rule.character) {
        return Err(rule_err(
            rule,
            "char".into(),
            "not a Gujarati consonant codepoint",
        ));
    }
    if rule.variants.is_empty() || rule.variants.len() > 2 {
        return Err(rule_err(
            rule,
            "variants".into(),
            format!("{} variants (expected 1 or 2)", rule.variants.len()),
        ));
    }
    for (vi, variant) in rule.variants.iter().enumerate() {
        if variant.is_empty() {
            return Err(rule_err(rule, format!("variants[{vi}]"), "no placements"));
        }
        for (i, p) in variant.iter().enumerate() {
            let f = |name: &str| format!("variants[{vi}][{i}].{name}");
            if StrokeClass::new(p.class).is_err() {
                return Err(rule_err(
                    rule,
                    f("class"),
                    format!("unknown stroke class {}", p.class),
                ));
            }
            if !(p.size > 0.0 && p.size <= 4.0) {
                return Err(rule_err(
                    rule,
                    f("size"),
                    format!("{} outside (0, 4]", p.size),
                ));
            }
            let drivers = [p.jp.is_some(), p.ds.is_some(), p.pos.is_some()]
                .iter()
                .filter(|&&b| b)
                .count();
            if drivers != 1 {
                return Err(rule_err(
                    rule,
                    f("jp"),
                    "exactly one of jp, ds, pos must be set",
                ));
            }
            if let Some(j) = &p.jp {
                if j.target >= i {
                    return Err(rule_err(
                        rule,
                        f("jp.target"),
                        format!("target {} is not an earlier placement", j.target),
                    ));
                }
                check_point(rule, f("jp.this"), &j.this)?;
                check_point(rule, f("jp.at"), &j.at)?;
            }
            if let Some((dx, dy)) = p.ds {
                if i == 0 {
                    return Err(rule_err(
                        rule,
                        f("ds"),
                        "first placement has no predecessor",
                    ));
                }
                if dx.abs() > 100.0 || dy.abs() > 100.0 {
                    return Err(rule_err(
                        rule,
                        f("ds"),
                        format!("({dx}, {dy}) outside ±100"),
                    ));
                }
            }
            if let Some((x, y)) = p.pos {
                if !percent_ok(x) || !percent_ok(y) {
                    return Err(rule_err(
                        rule,
                        f("pos"),
                        format!("({x}, {y}) outside 0..=100"),
                    ));
                }
            }
        }
    }
    Ok(())
}

pub fn load_ruleset(text: &str) -> Result<RuleSet> {
    let rs: RuleSet = serde_json::from_str(text)?;
    rs.validate()?;
    Ok(rs)
}

pub fn save_ruleset(rs: &RuleSet) -> Result<String> {
    rs.validate()?;
    rs.to_json()
}

/// The bundled hand-authored ruleset for 23 consonants.
pub fn default_ruleset() -> RuleSet {
    load_ruleset(DEFAULT_RULES).expect("bundled ruleset is valid")
}

/// Junction observation: a point and the bounding box it is measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JunctionSample {
    pub point: Point,
    pub bbox: BBox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JoinMode {
    pub px: u32,
    pub py: u32,
    pub support: f64,
}

fn percent_of(v: i32, lo: i32, extent: usize) -> u32 {
    if extent <= 1 {
        return 0;
    }
    let f = (v - lo) as f64 * 100.0 / (extent - 1) as f64;
    f.round().clamp(0.0, 100.0) as u32
}

pub fn to_percent(p: Point, bb: BBox) -> (u32, u32) {
    (
        percent_of(p.x, bb.x0, bb.width()),
        percent_of(p.y, bb.y0, bb.height()),
    )
}

/// Modal joining point over integer-percent positions. A runner-up whose
/// support is within `closeness` of the mode is returned as well.
pub fn learn_joining_point(samples: &[JunctionSample], closeness: f64) -> Result<Vec<JoinMode>> {
    if samples.is_empty() {
        return Err(Error::Empty("junction samples"));
    }
    let mut counts: HashMap<(u32, u32), usize> = HashMap::new();
    for s in samples {
        *counts.entry(to_percent(s.point, s.bbox)).or_default() += 1;
    }
    let mut ranked: Vec<((u32, u32), usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let n = samples.len() as f64;
    let mode = |(p, c): ((u32, u32), usize)| JoinMode {
        px: p.0,
        py: p.1,
        support: c as f64 / n,
    };
    let mut out = vec![mode(ranked[0])];
    if let Some(&second) = ranked.get(1) {
        if (ranked[0].1 - second.1) as f64 / n <= closeness + 1e-9 {
            out.push(mode(second));
        }
    }
    Ok(out)
}

/// One stroke of a decomposed character sample, in character coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStroke {
    pub class: StrokeClass,
    pub skeleton: Vec<Point>,
    pub endpoints: [Point; 2],
    /// Extent relative to the writer's typical stroke.
    pub size: f64,
    pub ap: Appearance,
}

impl SampleStroke {
    pub fn bbox(&self) -> BBox {
        BBox::from_points(self.skeleton.iter().copied()).expect("stroke has pixels")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharacterSample {
    pub strokes: Vec<SampleStroke>,
    /// Pixels per unit of stroke `size` in this sample.
    pub unit: f64,
}

impl CharacterSample {
    pub fn bbox(&self) -> Option<BBox> {
        self.strokes
            .iter()
            .map(SampleStroke::bbox)
            .reduce(BBox::union)
    }

    /// Strokes sorted by class, then position.
    fn canonical(&self) -> Vec<&SampleStroke> {
        let mut s: Vec<&SampleStroke> = self.strokes.iter().collect();
        s.sort_by_key(|st| {
            let bb = st.bbox();
            (st.class, bb.y0, bb.x0)
        });
        s
    }
}

fn chebyshev(a: Point, b: Point) -> i32 {
    (a.x - b.x).abs().max((a.y - b.y).abs())
}

/// Contact tolerance between a stroke end and another stroke, in pixels.
const CONTACT: i32 = 2;

/// Canvas percentage spanned by one unit of stroke size when a learned
/// free position is written out: a unit-size stroke is about 100 px on the
/// 256 px canvas.
pub const POS_UNIT_PCT: f64 = 40.0;

fn mode_of<T: Ord + Copy>(items: impl IntoIterator<Item = T>) -> Option<T> {
    let mut counts: BTreeMap<T, usize> = BTreeMap::new();
    for it in items {
        *counts.entry(it).or_default() += 1;
    }
    // BTreeMap order makes ties go to the smallest value
    counts
        .into_iter()
        .fold(None, |best: Option<(T, usize)>, (k, c)| match best {
            Some((_, bc)) if bc >= c => best,
            _ => Some((k, c)),
        })
        .map(|(k, _)| k)
}

/// Infers a rule from decomposed samples of one character: modal size and
/// appearance per stroke, modal box position for free strokes, and learned
/// joining points where a stroke end touches an earlier stroke.
pub fn derive_rule(
    samples: &[CharacterSample],
    character: u32,
    closeness: f64,
) -> Result<CompositionRule> {
    let label = format_codepoint(character);
    let first = samples.first().ok_or(Error::Empty("character samples"))?;
    let multiset = |s: &CharacterSample| {
        let mut c: Vec<StrokeClass> = s.strokes.iter().map(|st| st.class).collect();
        c.sort_unstable();
        c
    };
    let classes = multiset(first);
    if classes.is_empty() || samples.iter().any(|s| multiset(s) != classes) {
        return Err(Error::AmbiguousDecomposition(label));
    }
    let canon: Vec<Vec<&SampleStroke>> = samples.iter().map(CharacterSample::canonical).collect();
    let boxes: Vec<BBox> = samples
        .iter()
        .map(|s| s.bbox().expect("non-empty"))
        .collect();

    let mut base: Variant = Vec::new();
    let mut alternative: Option<(usize, JoinSpec)> = None;
    for i in 0..classes.len() {
        let size =
            mode_of(canon.iter().map(|c| (c[i].size * 10.0).round() as i64)).unwrap() as f64 / 10.0;
        let ap = mode_of(canon.iter().map(|c| c[i].ap)).unwrap();
        let occ = classes[..i].iter().filter(|&&c| c == classes[i]).count();

        // which earlier stroke (and which of our ends) touches, per sample
        let contacts: Vec<Option<(usize, usize)>> = canon
            .iter()
            .map(|c| {
                (0..i).find_map(|j| {
                    (0..2)
                        .find(|&e| {
                            c[j].skeleton
                                .iter()
                                .any(|&q| chebyshev(q, c[i].endpoints[e]) <= CONTACT)
                        })
                        .map(|e| (j, e))
                })
            })
            .collect();
        let joined = contacts.iter().filter(|c| c.is_some()).count();

        let mut placement = StrokePlacement {
            class: classes[i].get(),
            occ,
            size: size.max(0.1),
            ap,
            jp: None,
            ds: None,
            pos: None,
        };
        if i > 0 && joined * 2 > samples.len() {
            let (target, end) = mode_of(contacts.iter().flatten().copied()).unwrap();
            let junctions: Vec<JunctionSample> = canon
                .iter()
                .zip(&contacts)
                .filter(|(_, c)| **c == Some((target, end)))
                .map(|(c, _)| JunctionSample {
                    point: c[i].endpoints[end],
                    bbox: c[target].bbox(),
                })
                .collect();
            let modes = learn_joining_point(&junctions, closeness)?;
            let this = JoinPoint::End(if end == 0 { EndLabel::A } else { EndLabel::B });
            let spec = |m: &JoinMode| JoinSpec {
                this,
                target,
                at: JoinPoint::Percent {
                    px: m.px as f64,
                    py: m.py as f64,
                },
            };
            placement.jp = Some(spec(&modes[0]));
            if alternative.is_none() {
                if let Some(m) = modes.get(1) {
                    alternative = Some((i, spec(m)));
                }
            }
        } else {
            // offset from the character centre, in size units
            let centres = samples.iter().zip(&canon).zip(&boxes).map(|((s, c), bb)| {
                let (cx, cy) = c[i].bbox().center();
                let (bx, by) = bb.center();
                let unit = s.unit.max(f64::EPSILON);
                let pct = |v: f64, mid: f64| {
                    (50.0 + (v - mid) / unit * POS_UNIT_PCT)
                        .round()
                        .clamp(0.0, 100.0) as i64
                };
                (pct(cx, bx), pct(cy, by))
            });
            let (x, y) = mode_of(centres).unwrap();
            placement.pos = Some((x as f64, y as f64));
        }
        base.push(placement);
    }

    let mut variants = vec![base.clone()];
    if let Some((i, spec)) = alternative {
        let mut v = base;
        v[i].jp = Some(spec);
        variants.push(v);
    }
    let rule = CompositionRule {
        character,
        name: String::new(),
        variants,
    };
    validate_rule(&rule)?;
    Ok(rule)
}

impl fmt::Display for CompositionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ch = char::from_u32(self.character).unwrap_or('?');
        write!(f, "{} {}", self.label(), ch)?;
        for (i, v) in self.variants.iter().enumerate() {
            let classes: Vec<String> = v.iter().map(|p| p.class.to_string()).collect();
            write!(f, " v{i}[{}]", classes.join(","))?;
        }
        Ok(())
    }
}
