//! The geometry-file format.
//!
//! A UTF-8 document of `key = value` lines under four section headers:
//! `[geometry]`, `[domain]`, `[test]`, `[holonomy]`. `#` starts a comment,
//! lists are comma separated, and expressions use the expression grammar of
//! the engine (so no commas can appear inside an entry). The full key table
//! lives in docs/format.md; unknown sections or keys are hard errors so a
//! typo cannot silently change what gets checked.

use crate::report::Verdict;
use std::fmt;
use tractorcalc::geocalc::Scale;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolonomySettings {
    pub epsilon: f64,
    pub steps: usize,
    pub loops_per_plane: usize,
}

impl Default for HolonomySettings {
    fn default() -> HolonomySettings {
        HolonomySettings {
            epsilon: 0.03,
            steps: 2000,
            loops_per_plane: 2,
        }
    }
}

/// A parsed geometry file. Expression entries stay textual here; the
/// pipeline interns them into a pool once the chart is known.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometryFile {
    pub dimension: usize,
    pub signature: Vec<i8>,
    pub coords: Vec<String>,
    /// Row-major lower triangle: (0,0), (1,0), (1,1), (2,0), ...
    pub metric: Vec<String>,
    pub kappa: Vec<String>,
    pub scale: Scale,
    /// Per-coordinate closed box, in `coords` order.
    pub domain: Vec<(f64, f64)>,
    pub samples: usize,
    pub seed: u64,
    pub omega: Option<String>,
    pub expected_verdict: Option<Verdict>,
    pub holonomy: Option<HolonomySettings>,
}

#[derive(Debug)]
pub struct FormatError {
    /// 1-based line, or 0 for a whole-file complaint.
    pub line: usize,
    pub msg: String,
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "line {}: {}", self.line, self.msg)
        } else {
            f.write_str(&self.msg)
        }
    }
}

impl std::error::Error for FormatError {}

fn err<T>(line: usize, msg: impl Into<String>) -> Result<T, FormatError> {
    Err(FormatError {
        line,
        msg: msg.into(),
    })
}

/// Coordinates may not shadow the function names of the expression grammar.
const RESERVED: &[&str] = &["exp", "log", "sin", "cos", "tan", "sqrt", "sinh", "cosh"];

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// One `key = value` occurrence with its source line.
struct Entry {
    line: usize,
    key: String,
    value: String,
}

struct Section {
    entries: Vec<Entry>,
    present: bool,
}

impl Section {
    fn new() -> Section {
        Section {
            entries: Vec::new(),
            present: false,
        }
    }

    /// The entry for `key`, rejecting duplicates.
    fn take(&self, key: &str) -> Result<Option<&Entry>, FormatError> {
        let mut found: Option<&Entry> = None;
        for e in &self.entries {
            if e.key == key {
                if found.is_some() {
                    return err(e.line, format!("duplicate key '{key}'"));
                }
                found = Some(e);
            }
        }
        Ok(found)
    }

    fn require(&self, key: &str, section: &str) -> Result<&Entry, FormatError> {
        match self.take(key)? {
            Some(e) => Ok(e),
            None => err(0, format!("[{section}] is missing required key '{key}'")),
        }
    }
}

fn split_list(v: &str) -> Vec<String> {
    v.split(',').map(|s| s.trim().to_string()).collect()
}

fn parse_num<T: std::str::FromStr>(e: &Entry, what: &str) -> Result<T, FormatError> {
    match e.value.parse::<T>() {
        Ok(v) => Ok(v),
        Err(_) => err(e.line, format!("'{}' is not a valid {what}", e.value)),
    }
}

pub fn parse(text: &str) -> Result<GeometryFile, FormatError> {
    let mut geometry = Section::new();
    let mut domain = Section::new();
    let mut test = Section::new();
    let mut holonomy = Section::new();
    let mut current: Option<&mut Section> = None;

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = match name.strip_suffix(']') {
                Some(n) => n.trim(),
                None => return err(lineno, "section header does not end with ']'"),
            };
            let section = match name {
                "geometry" => &mut geometry,
                "domain" => &mut domain,
                "test" => &mut test,
                "holonomy" => &mut holonomy,
                _ => return err(lineno, format!("unknown section '[{name}]'")),
            };
            if section.present {
                return err(lineno, format!("section '[{name}]' appears twice"));
            }
            section.present = true;
            current = Some(section);
            continue;
        }
        let (key, value) = match line.split_once('=') {
            Some((k, v)) => (k.trim(), v.trim()),
            None => return err(lineno, "expected 'key = value'"),
        };
        if key.is_empty() {
            return err(lineno, "empty key");
        }
        match current {
            Some(ref mut s) => s.entries.push(Entry {
                line: lineno,
                key: key.to_string(),
                value: value.to_string(),
            }),
            None => return err(lineno, "key outside of any section"),
        }
    }

    if !geometry.present {
        return err(0, "missing [geometry] section");
    }
    for e in &geometry.entries {
        match e.key.as_str() {
            "dimension" | "signature" | "coords" | "metric" | "kappa" | "scale" => {}
            k => return err(e.line, format!("unknown key '{k}' in [geometry]")),
        }
    }

    let de = geometry.require("dimension", "geometry")?;
    let dimension: usize = parse_num(de, "dimension")?;
    if dimension < 3 {
        return err(de.line, "dimension must be at least 3");
    }

    let se = geometry.require("signature", "geometry")?;
    let mut signature = Vec::new();
    for tok in split_list(&se.value) {
        match tok.as_str() {
            "+1" | "1" => signature.push(1i8),
            "-1" => signature.push(-1i8),
            t => return err(se.line, format!("signature entry '{t}' is not +1 or -1")),
        }
    }
    if signature.len() != dimension {
        return err(
            se.line,
            format!("signature has {} entries, expected {dimension}", signature.len()),
        );
    }

    let ce = geometry.require("coords", "geometry")?;
    let coords = split_list(&ce.value);
    if coords.len() != dimension {
        return err(
            ce.line,
            format!("coords lists {} names, expected {dimension}", coords.len()),
        );
    }
    for c in &coords {
        if !is_ident(c) {
            return err(ce.line, format!("'{c}' is not a valid coordinate name"));
        }
        if RESERVED.contains(&c.as_str()) {
            return err(ce.line, format!("coordinate name '{c}' shadows a function"));
        }
    }
    for i in 0..coords.len() {
        for j in i + 1..coords.len() {
            if coords[i] == coords[j] {
                return err(ce.line, format!("coordinate '{}' repeats", coords[i]));
            }
        }
    }

    let me = geometry.require("metric", "geometry")?;
    let metric = split_list(&me.value);
    let want = dimension * (dimension + 1) / 2;
    if metric.len() != want {
        return err(
            me.line,
            format!(
                "metric lists {} entries, expected {want} (row-major lower triangle)",
                metric.len()
            ),
        );
    }
    if metric.iter().any(|s| s.is_empty()) {
        return err(me.line, "metric has an empty entry");
    }

    let ke = geometry.require("kappa", "geometry")?;
    let kappa = split_list(&ke.value);
    if kappa.len() != dimension {
        return err(
            ke.line,
            format!("kappa lists {} components, expected {dimension}", kappa.len()),
        );
    }
    if kappa.iter().any(|s| s.is_empty()) {
        return err(ke.line, "kappa has an empty entry");
    }

    let sce = geometry.require("scale", "geometry")?;
    let scale = match sce.value.as_str() {
        "preferred" => Scale::Preferred,
        "unknown" => Scale::Unknown,
        v => return err(sce.line, format!("scale '{v}' is not 'preferred' or 'unknown'")),
    };

    if !domain.present {
        return err(0, "missing [domain] section");
    }
    let mut boxes: Vec<Option<(f64, f64)>> = vec![None; dimension];
    for e in &domain.entries {
        let Some(pos) = coords.iter().position(|c| *c == e.key) else {
            return err(e.line, format!("'{}' is not a declared coordinate", e.key));
        };
        if boxes[pos].is_some() {
            return err(e.line, format!("duplicate domain for '{}'", e.key));
        }
        let parts: Vec<&str> = e.value.split_whitespace().collect();
        if parts.len() != 2 {
            return err(e.line, "domain entry must be 'lo hi'");
        }
        let lo: f64 = match parts[0].parse() {
            Ok(v) => v,
            Err(_) => return err(e.line, format!("'{}' is not a number", parts[0])),
        };
        let hi: f64 = match parts[1].parse() {
            Ok(v) => v,
            Err(_) => return err(e.line, format!("'{}' is not a number", parts[1])),
        };
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return err(e.line, "domain interval must satisfy lo < hi");
        }
        boxes[pos] = Some((lo, hi));
    }
    let mut dom = Vec::with_capacity(dimension);
    for (c, b) in coords.iter().zip(&boxes) {
        match b {
            Some(iv) => dom.push(*iv),
            None => return err(0, format!("[domain] gives no interval for '{c}'")),
        }
    }

    for e in &test.entries {
        match e.key.as_str() {
            "samples" | "seed" | "omega" | "expected_verdict" => {}
            k => return err(e.line, format!("unknown key '{k}' in [test]")),
        }
    }
    let samples = match test.take("samples")? {
        Some(e) => {
            let s: usize = parse_num(e, "sample count")?;
            if s == 0 {
                return err(e.line, "samples must be positive");
            }
            s
        }
        None => 20,
    };
    let seed = match test.take("seed")? {
        Some(e) => parse_num(e, "seed")?,
        None => 1,
    };
    let omega = test.take("omega")?.map(|e| e.value.clone());
    let expected_verdict = match test.take("expected_verdict")? {
        Some(e) => match Verdict::parse(&e.value) {
            Some(v) => Some(v),
            None => {
                return err(
                    e.line,
                    format!(
                        "'{}' is not a verdict (FEFFERMAN_LOCAL, ODD_DIM_NILPOTENT, \
                         HYPOTHESES_FAIL, INCONCLUSIVE_SIGN)",
                        e.value
                    ),
                )
            }
        },
        None => None,
    };

    let holonomy_settings = if holonomy.present {
        for e in &holonomy.entries {
            match e.key.as_str() {
                "epsilon" | "steps" | "loops_per_plane" => {}
                k => return err(e.line, format!("unknown key '{k}' in [holonomy]")),
            }
        }
        let mut hs = HolonomySettings::default();
        if let Some(e) = holonomy.take("epsilon")? {
            hs.epsilon = parse_num(e, "epsilon")?;
            if !(hs.epsilon > 0.0 && hs.epsilon.is_finite()) {
                return err(e.line, "epsilon must be a positive number");
            }
        }
        if let Some(e) = holonomy.take("steps")? {
            hs.steps = parse_num(e, "step count")?;
            if hs.steps == 0 {
                return err(e.line, "steps must be positive");
            }
        }
        if let Some(e) = holonomy.take("loops_per_plane")? {
            hs.loops_per_plane = parse_num(e, "loop count")?;
            if hs.loops_per_plane == 0 {
                return err(e.line, "loops_per_plane must be positive");
            }
        }
        Some(hs)
    } else {
        None
    };

    Ok(GeometryFile {
        dimension,
        signature,
        coords,
        metric,
        kappa,
        scale,
        domain: dom,
        samples,
        seed,
        omega,
        expected_verdict,
        holonomy: holonomy_settings,
    })
}

pub fn serialize(f: &GeometryFile) -> String {
    let mut o = String::new();
    o.push_str("[geometry]\n");
    o.push_str(&format!("dimension = {}\n", f.dimension));
    let sig: Vec<&str> = f
        .signature
        .iter()
        .map(|&s| if s > 0 { "+1" } else { "-1" })
        .collect();
    o.push_str(&format!("signature = {}\n", sig.join(", ")));
    o.push_str(&format!("coords = {}\n", f.coords.join(", ")));
    o.push_str(&format!("metric = {}\n", f.metric.join(", ")));
    o.push_str(&format!("kappa = {}\n", f.kappa.join(", ")));
    o.push_str(&format!(
        "scale = {}\n",
        match f.scale {
            Scale::Preferred => "preferred",
            Scale::Unknown => "unknown",
        }
    ));
    o.push_str("\n[domain]\n");
    for (c, (lo, hi)) in f.coords.iter().zip(&f.domain) {
        o.push_str(&format!("{c} = {lo} {hi}\n"));
    }
    o.push_str("\n[test]\n");
    o.push_str(&format!("samples = {}\n", f.samples));
    o.push_str(&format!("seed = {}\n", f.seed));
    if let Some(w) = &f.omega {
        o.push_str(&format!("omega = {w}\n"));
    }
    if let Some(v) = f.expected_verdict {
        o.push_str(&format!("expected_verdict = {}\n", v.as_str()));
    }
    if let Some(h) = f.holonomy {
        o.push_str("\n[holonomy]\n");
        o.push_str(&format!("epsilon = {}\n", h.epsilon));
        o.push_str(&format!("steps = {}\n", h.steps));
        o.push_str(&format!("loops_per_plane = {}\n", h.loops_per_plane));
    }
    o
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
# toy flat chart
[geometry]
dimension = 3
signature = +1, +1, -1   # Lorentzian
coords = x, y, t
metric = 1, 0, 1, 0, 0, -1
kappa = 1, 0, 1
scale = preferred

[domain]
x = -1 1
y = -1 1
t = -1 1
";

    #[test]
    fn minimal_file_parses_with_defaults() {
        let f = parse(MINIMAL).unwrap();
        assert_eq!(f.dimension, 3);
        assert_eq!(f.signature, vec![1, 1, -1]);
        assert_eq!(f.metric.len(), 6);
        assert_eq!(f.samples, 20);
        assert_eq!(f.seed, 1);
        assert!(f.omega.is_none());
        assert!(f.holonomy.is_none());
    }

    #[test]
    fn round_trips_through_serialize() {
        let f = parse(MINIMAL).unwrap();
        let again = parse(&serialize(&f)).unwrap();
        assert_eq!(f, again);
        // and the text form is a fixed point from then on
        assert_eq!(serialize(&f), serialize(&again));
    }

    #[test]
    fn unknown_key_is_rejected_with_its_line() {
        let bad = MINIMAL.replace("scale = preferred", "scale = preferred\nshade = dark");
        let e = parse(&bad).unwrap_err();
        assert!(e.msg.contains("shade"), "{e}");
        assert_eq!(e.line, 9);
    }

    #[test]
    fn wrong_entry_counts_are_rejected() {
        let bad = MINIMAL.replace("kappa = 1, 0, 1", "kappa = 1, 0");
        assert!(parse(&bad).unwrap_err().msg.contains("expected 3"));
        let bad = MINIMAL.replace("metric = 1, 0, 1, 0, 0, -1", "metric = 1, 0, 1");
        assert!(parse(&bad).unwrap_err().msg.contains("lower triangle"));
    }

    #[test]
    fn domain_must_cover_every_coordinate() {
        let bad = MINIMAL.replace("t = -1 1\n", "");
        let e = parse(&bad).unwrap_err();
        assert!(e.msg.contains("no interval for 't'"), "{e}");
        let bad = MINIMAL.replace("t = -1 1", "t = 1 -1");
        assert!(parse(&bad).unwrap_err().msg.contains("lo < hi"));
        let bad = MINIMAL.replace("t = -1 1", "t = -1 1\nw = -1 1");
        assert!(parse(&bad).unwrap_err().msg.contains("not a declared coordinate"));
    }

    #[test]
    fn verdict_annotation_and_holonomy_parse() {
        let text = format!(
            "{MINIMAL}\n[test]\nsamples = 5\nseed = 9\nomega = x/10\n\
             expected_verdict = ODD_DIM_NILPOTENT\n\n[holonomy]\nepsilon = 0.01\nsteps = 400\n"
        );
        let f = parse(&text).unwrap();
        assert_eq!(f.samples, 5);
        assert_eq!(f.seed, 9);
        assert_eq!(f.omega.as_deref(), Some("x/10"));
        assert_eq!(f.expected_verdict, Some(Verdict::OddDimNilpotent));
        let h = f.holonomy.unwrap();
        assert_eq!(h.epsilon, 0.01);
        assert_eq!(h.steps, 400);
        assert_eq!(h.loops_per_plane, 2);
        let bad = text.replace("ODD_DIM_NILPOTENT", "PROBABLY_FINE");
        assert!(parse(&bad).unwrap_err().msg.contains("not a verdict"));
    }

    #[test]
    fn reserved_and_duplicate_names_are_rejected() {
        let bad = MINIMAL.replace("coords = x, y, t", "coords = x, sin, t");
        assert!(parse(&bad).unwrap_err().msg.contains("shadows"));
        let bad = MINIMAL.replace("coords = x, y, t", "coords = x, x, t");
        assert!(parse(&bad).unwrap_err().msg.contains("repeats"));
        let two = MINIMAL.replace("dimension = 3", "dimension = 3\ndimension = 3");
        assert!(parse(&two).unwrap_err().msg.contains("duplicate"));
    }
}
