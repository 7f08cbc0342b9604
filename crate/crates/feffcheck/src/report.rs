//! Report assembly and rendering.
//!
//! One [`CheckReport`] per input file. The JSON form is written by hand so
//! the field set and order stay frozen; floats print with 17 significant
//! digits, which round-trips every f64. No timestamps or timing fields go
//! in: two runs with the same input and seed must emit identical bytes.

use std::fmt;
use tractorcalc::holonomy::HolonomyReport;

pub const TOOL: &str = "feffcheck";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Verdict {
    FeffermanLocal,
    OddDimNilpotent,
    HypothesesFail,
    InconclusiveSign,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::FeffermanLocal => "FEFFERMAN_LOCAL",
            Verdict::OddDimNilpotent => "ODD_DIM_NILPOTENT",
            Verdict::HypothesesFail => "HYPOTHESES_FAIL",
            Verdict::InconclusiveSign => "INCONCLUSIVE_SIGN",
        }
    }

    pub fn parse(s: &str) -> Option<Verdict> {
        Some(match s {
            "FEFFERMAN_LOCAL" => Verdict::FeffermanLocal,
            "ODD_DIM_NILPOTENT" => Verdict::OddDimNilpotent,
            "HYPOTHESES_FAIL" => Verdict::HypothesesFail,
            "INCONCLUSIVE_SIGN" => Verdict::InconclusiveSign,
            _ => return None,
        })
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Sign classification of the sampled scalar, at the run's tolerance tau.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum LambdaSign {
    /// mean < -10 tau with spread <= tau.
    Negative,
    /// |mean| <= 10 tau with spread <= tau.
    Zero,
    /// mean > 10 tau with spread <= tau.
    Nonnegative,
    /// spread > tau; no constant sign to report.
    Varying,
}

impl LambdaSign {
    pub fn as_str(self) -> &'static str {
        match self {
            LambdaSign::Negative => "negative",
            LambdaSign::Zero => "zero",
            LambdaSign::Nonnegative => "nonnegative",
            LambdaSign::Varying => "varying",
        }
    }
}

/// Does the sampled sign fit the verdict's meaning? Used by selftest.
pub fn sign_consistent(v: Verdict, s: LambdaSign) -> bool {
    match v {
        Verdict::FeffermanLocal => s == LambdaSign::Negative,
        Verdict::OddDimNilpotent => s == LambdaSign::Zero,
        Verdict::InconclusiveSign => matches!(s, LambdaSign::Zero | LambdaSign::Nonnegative),
        Verdict::HypothesesFail => true,
    }
}

/// One residual measurement. `anchor` states the identity being measured,
/// in plain mathematical text.
#[derive(Clone, Debug)]
pub struct CheckLine {
    pub name: &'static str,
    pub anchor: &'static str,
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct LambdaRecord {
    pub values: Vec<f64>,
    pub mean: f64,
    pub spread: f64,
    pub sign: LambdaSign,
}

#[derive(Clone, Copy, Debug)]
pub struct RescaleRecord {
    pub verdict_rescaled: Verdict,
    /// max over sample points of |lambda(rescaled) - lambda|.
    pub lambda_shift: f64,
    pub agrees: bool,
}

pub struct CheckReport {
    pub input: String,
    pub input_hash: u64,
    pub dimension: usize,
    pub signature: Vec<i8>,
    pub seed: u64,
    pub samples: usize,
    pub tolerance: f64,
    pub checks: Vec<CheckLine>,
    pub lambda: LambdaRecord,
    pub holonomy: Option<HolonomyReport>,
    pub rescale: Option<RescaleRecord>,
    pub verdict: Verdict,
}

/// FNV-1a over the raw input bytes; the hash that names a run's input.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn jf(x: f64) -> String {
    format!("{x:.16e}")
}

fn jopt(x: Option<f64>) -> String {
    match x {
        Some(v) => jf(v),
        None => String::from("null"),
    }
}

fn jstr(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

impl CheckReport {
    pub fn to_json(&self) -> String {
        let mut o = String::new();
        o.push_str("{\n");
        o.push_str(&format!("  \"tool\": {},\n", jstr(TOOL)));
        o.push_str(&format!("  \"version\": {},\n", jstr(VERSION)));
        o.push_str(&format!("  \"input\": {},\n", jstr(&self.input)));
        o.push_str(&format!("  \"input_hash\": \"{:016x}\",\n", self.input_hash));
        o.push_str(&format!("  \"dimension\": {},\n", self.dimension));
        let sig: Vec<String> = self.signature.iter().map(|s| s.to_string()).collect();
        o.push_str(&format!("  \"signature\": [{}],\n", sig.join(", ")));
        o.push_str(&format!("  \"seed\": {},\n", self.seed));
        o.push_str(&format!("  \"samples\": {},\n", self.samples));
        o.push_str(&format!("  \"tolerance\": {},\n", jf(self.tolerance)));
        o.push_str("  \"checks\": [\n");
        for (i, c) in self.checks.iter().enumerate() {
            o.push_str(&format!(
                "    {{\"name\": {}, \"residual\": {}, \"threshold\": {}, \"pass\": {}, \"anchor\": {}}}{}\n",
                jstr(c.name),
                jf(c.residual),
                jf(c.threshold),
                c.pass,
                jstr(c.anchor),
                if i + 1 == self.checks.len() { "" } else { "," }
            ));
        }
        o.push_str("  ],\n");
        o.push_str("  \"lambda\": {\n");
        o.push_str(&format!("    \"mean\": {},\n", jf(self.lambda.mean)));
        o.push_str(&format!("    \"spread\": {},\n", jf(self.lambda.spread)));
        o.push_str(&format!("    \"sign\": {},\n", jstr(self.lambda.sign.as_str())));
        let vals: Vec<String> = self.lambda.values.iter().map(|&v| jf(v)).collect();
        o.push_str(&format!("    \"values\": [{}]\n", vals.join(", ")));
        o.push_str("  },\n");
        match &self.holonomy {
            None => o.push_str("  \"holonomy\": null,\n"),
            Some(h) => {
                o.push_str("  \"holonomy\": {\n");
                o.push_str("    \"loops\": [\n");
                for (i, l) in h.loops.iter().enumerate() {
                    o.push_str(&format!(
                        "      {{\"label\": {}, \"deviation\": {}, \"metric_residual\": {}, \"j_commutator\": {}, \"det_defect\": {}}}{}\n",
                        jstr(&l.label),
                        jf(l.deviation),
                        jf(l.metric_residual),
                        jopt(l.j_commutator),
                        jopt(l.det_defect),
                        if i + 1 == h.loops.len() { "" } else { "," }
                    ));
                }
                o.push_str("    ],\n");
                o.push_str("    \"ratios\": [\n");
                for (i, r) in h.ratios.iter().enumerate() {
                    o.push_str(&format!(
                        "      {{\"label\": {}, \"full\": {}, \"half\": {}, \"ratio\": {}}}{}\n",
                        jstr(&r.label),
                        jf(r.full),
                        jf(r.half),
                        jopt(r.ratio),
                        if i + 1 == h.ratios.len() { "" } else { "," }
                    ));
                }
                o.push_str("    ],\n");
                o.push_str(&format!("    \"algebra_dim\": {},\n", h.algebra_dim));
                o.push_str(&format!("    \"skipped_logs\": {}\n", h.skipped_logs));
                o.push_str("  },\n");
            }
        }
        match &self.rescale {
            None => o.push_str("  \"rescale\": null,\n"),
            Some(r) => {
                o.push_str("  \"rescale\": {\n");
                o.push_str(&format!(
                    "    \"verdict_rescaled\": {},\n",
                    jstr(r.verdict_rescaled.as_str())
                ));
                o.push_str(&format!("    \"lambda_shift\": {},\n", jf(r.lambda_shift)));
                o.push_str(&format!("    \"agrees\": {}\n", r.agrees));
                o.push_str("  },\n");
            }
        }
        o.push_str(&format!("  \"verdict\": {}\n", jstr(self.verdict.as_str())));
        o.push('}');
        o
    }

    pub fn render_text(&self) -> String {
        let mut o = String::new();
        o.push_str(&format!("{} {}\n", TOOL, VERSION));
        o.push_str(&format!(
            "input: {} (hash {:016x})\n",
            self.input, self.input_hash
        ));
        let sig: Vec<String> = self
            .signature
            .iter()
            .map(|&s| if s > 0 { "+".into() } else { "-".into() })
            .collect();
        o.push_str(&format!(
            "dimension {}  signature ({})  seed {}  samples {}  tolerance {:.1e}\n",
            self.dimension,
            sig.join(""),
            self.seed,
            self.samples,
            self.tolerance
        ));
        let w = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in &self.checks {
            o.push_str(&format!(
                "  [{}] {:<w$}  {:9.2e} <= {:7.1e}  {}\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.residual,
                c.threshold,
                c.anchor,
                w = w
            ));
        }
        o.push_str(&format!(
            "lambda: mean {:+.6e}  spread {:.2e}  sign {}\n",
            self.lambda.mean,
            self.lambda.spread,
            self.lambda.sign.as_str()
        ));
        if let Some(h) = &self.holonomy {
            o.push_str(&format!(
                "holonomy: {} loops, algebra rank {}, {} logs skipped\n",
                h.loops.len(),
                h.algebra_dim,
                h.skipped_logs
            ));
            for l in &h.loops {
                o.push_str(&format!(
                    "  {:<28} dev {:9.2e}  metric {:9.2e}",
                    l.label, l.deviation, l.metric_residual
                ));
                if let Some(j) = l.j_commutator {
                    o.push_str(&format!("  [J,H] {:9.2e}", j));
                }
                if let Some(d) = l.det_defect {
                    o.push_str(&format!("  detC {:9.2e}", d));
                }
                o.push('\n');
            }
            for r in &h.ratios {
                match r.ratio {
                    Some(q) => o.push_str(&format!(
                        "  halving {:<20} {:9.2e} / {:9.2e} = {:.3}\n",
                        r.label, r.full, r.half, q
                    )),
                    None => o.push_str(&format!(
                        "  halving {:<20} below noise floor, not rated\n",
                        r.label
                    )),
                }
            }
        }
        if let Some(r) = &self.rescale {
            o.push_str(&format!(
                "rescale: verdict {}  lambda shift {:.2e}  {}\n",
                r.verdict_rescaled,
                r.lambda_shift,
                if r.agrees { "agrees" } else { "DISAGREES" }
            ));
        }
        o.push_str(&format!("verdict: {}\n", self.verdict));
        o
    }
}
