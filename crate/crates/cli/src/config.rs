//! Experiment configuration: TOML schema, defaults and validation.
//!
//! ```toml
//! seed = 7
//! t = 0.5
//! replicas = 100          # default 100
//! n_ladder = [50, 200, 800]
//!
//! [kernel]
//! kind = "kac"            # kac | grunbaum | mckean-vlasov | vlasov | counterexample
//! tau = 1.0               # default 1
//!
//! [initial]
//! family = "product"      # product | pure-atomic | mixture
//! law = "gaussian"
//! mean = 0.0
//! std = 1.0
//!
//! [reference]
//! kind = "pde"            # pde | large-n | atoms
//! cells = 512
//! ```

use std::path::PathBuf;

use propchaos::diagnostics::{InitialFamily, InitialLaw, SweepOptions};
use propchaos::dictionary::{dictionary, DICTIONARY_SIZE};
use propchaos::entropy::OccupancyFamily;
use propchaos::processes::{Diffusion, Drift, Force, GrunbaumMode, TransitionKernel};
use propchaos::{AtomicMeasure, Point};
use toml::{Table, Value};

pub const DEFAULT_TAU: f64 = 1.0;
pub const DEFAULT_REPLICAS: usize = 100;
pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_PDE_CELLS: usize = 512;
pub const DEFAULT_LARGE_N_FACTOR: usize = 10;
pub const DEFAULT_REFERENCE_CAP: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "json" => Some(Format::Json),
            "csv" => Some(Format::Csv),
            "both" => Some(Format::Both),
            _ => None,
        }
    }

    pub fn json(self) -> bool {
        self != Format::Csv
    }

    pub fn csv(self) -> bool {
        self != Format::Json
    }
}

/// Where the limit law for the concentration test comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceSpec {
    /// Grid solver for the limiting equation of the kernel.
    Pde { cells: usize, half_width: Option<f64>, dt: Option<f64>, theta_nodes: usize },
    /// One run with `n` particles, quantized to `cap` atoms.
    LargeN { n: usize, cap: usize },
    Atoms(AtomicMeasure),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropySpec {
    pub family: OccupancyFamily,
    pub ladder: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub t: f64,
    pub replicas: usize,
    pub n_ladder: Vec<usize>,
    pub kernel: TransitionKernel,
    pub initial: InitialFamily,
    pub reference: ReferenceSpec,
    pub diagnostics: SweepOptions,
    pub entropy: Option<EntropySpec>,
    /// Particle count for `simulate`; defaults to the largest ladder entry.
    pub simulate_n: Option<usize>,
    pub out_dir: PathBuf,
    pub format: Format,
}

/// Validation failures, all of them.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<String>);

impl std::fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

/// Key-by-key reader that remembers what it consumed, so leftovers can be
/// reported as unknown keys.
struct Reader<'e> {
    path: String,
    table: Table,
    errors: &'e mut Vec<String>,
}

impl<'e> Reader<'e> {
    fn new(path: &str, table: Table, errors: &'e mut Vec<String>) -> Self {
        Self { path: path.to_string(), table, errors }
    }

    fn key(&self, k: &str) -> String {
        if self.path.is_empty() {
            k.to_string()
        } else {
            format!("{}.{k}", self.path)
        }
    }

    fn err(&mut self, msg: String) {
        self.errors.push(msg);
    }

    fn take(&mut self, k: &str) -> Option<Value> {
        self.table.remove(k)
    }

    fn f64(&mut self, k: &str) -> Option<f64> {
        match self.take(k)? {
            Value::Float(x) => Some(x),
            Value::Integer(i) => Some(i as f64),
            v => {
                let msg = format!("{} must be a number, got {}", self.key(k), v.type_str());
                self.err(msg);
                None
            }
        }
    }

    fn usize(&mut self, k: &str) -> Option<usize> {
        match self.take(k)? {
            Value::Integer(i) if i >= 0 => Some(i as usize),
            v => {
                let msg = format!("{} must be a nonnegative integer, got {v}", self.key(k));
                self.err(msg);
                None
            }
        }
    }

    fn string(&mut self, k: &str) -> Option<String> {
        match self.take(k)? {
            Value::String(s) => Some(s),
            v => {
                let msg = format!("{} must be a string, got {}", self.key(k), v.type_str());
                self.err(msg);
                None
            }
        }
    }

    fn array(&mut self, k: &str) -> Option<Vec<Value>> {
        match self.take(k)? {
            Value::Array(a) => Some(a),
            v => {
                let msg = format!("{} must be an array, got {}", self.key(k), v.type_str());
                self.err(msg);
                None
            }
        }
    }

    fn f64s(&mut self, k: &str) -> Option<Vec<f64>> {
        let a = self.array(k)?;
        let out: Option<Vec<f64>> = a
            .iter()
            .map(|v| match v {
                Value::Float(x) => Some(*x),
                Value::Integer(i) => Some(*i as f64),
                _ => None,
            })
            .collect();
        if out.is_none() {
            let msg = format!("{} must contain only numbers", self.key(k));
            self.err(msg);
        }
        out
    }

    fn usizes(&mut self, k: &str) -> Option<Vec<usize>> {
        let a = self.array(k)?;
        let out: Option<Vec<usize>> =
            a.iter().map(|v| v.as_integer().filter(|i| *i >= 0).map(|i| i as usize)).collect();
        if out.is_none() {
            let msg = format!("{} must contain only nonnegative integers", self.key(k));
            self.err(msg);
        }
        out
    }

    fn table(&mut self, k: &str) -> Option<Table> {
        match self.take(k)? {
            Value::Table(t) => Some(t),
            v => {
                let msg = format!("{} must be a table, got {}", self.key(k), v.type_str());
                self.err(msg);
                None
            }
        }
    }

    fn parsed<T: std::str::FromStr>(&mut self, k: &str) -> Option<T>
    where
        T::Err: std::fmt::Display,
    {
        let s = self.string(k)?;
        match s.parse() {
            Ok(v) => Some(v),
            Err(e) => {
                let msg = format!("{}: {e}", self.key(k));
                self.err(msg);
                None
            }
        }
    }

    fn require<T>(&mut self, k: &str, v: Option<T>) -> Option<T> {
        if v.is_none() && !self.errors.iter().any(|e| e.starts_with(&self.key(k))) {
            let msg = format!("missing key {}", self.key(k));
            self.err(msg);
        }
        v
    }

    /// Reports every key not consumed so far.
    fn finish(self) {
        for k in self.table.keys() {
            let key = if self.path.is_empty() { k.clone() } else { format!("{}.{k}", self.path) };
            self.errors.push(format!("unknown key \"{key}\""));
        }
    }
}

fn strictly_increasing(v: &[usize]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

fn parse_kernel(table: Table, errors: &mut Vec<String>) -> Option<TransitionKernel> {
    let mut r = Reader::new("kernel", table, errors);
    let kind = r.string("kind");
    let kind = r.require("kind", kind)?;
    let positive = |r: &mut Reader, k: &str, v: f64| {
        if !(v > 0.0 && v.is_finite()) {
            let msg = format!("{} must be positive, got {v}", r.key(k));
            r.err(msg);
        }
    };
    let kernel = match kind.as_str() {
        "kac" => {
            let tau = r.f64("tau").unwrap_or(DEFAULT_TAU);
            positive(&mut r, "tau", tau);
            Some(TransitionKernel::Kac { tau })
        }
        "grunbaum" => {
            let mode = r.parsed::<GrunbaumMode>("mode").unwrap_or_default();
            Some(TransitionKernel::Grunbaum { mode })
        }
        "mckean-vlasov" => {
            let drift = r.parsed::<Drift>("drift").unwrap_or(Drift::Zero);
            let diffusion = r.parsed::<Diffusion>("diffusion").unwrap_or(Diffusion::Zero);
            let dt = r.f64("dt").unwrap_or(DEFAULT_DT);
            positive(&mut r, "dt", dt);
            Some(TransitionKernel::McKeanVlasov { drift, diffusion, dt })
        }
        "vlasov" => {
            let force = r.parsed::<Force>("force").unwrap_or(Force::Zero);
            let dt = r.f64("dt").unwrap_or(DEFAULT_DT);
            positive(&mut r, "dt", dt);
            Some(TransitionKernel::Vlasov { force, dt })
        }
        "counterexample" => Some(TransitionKernel::Counterexample),
        other => {
            r.err(format!("kernel.kind: unknown kernel \"{other}\" (expected kac, grunbaum, mckean-vlasov, vlasov or counterexample)"));
            None
        }
    };
    r.finish();
    kernel
}

fn parse_atoms(r: &mut Reader) -> Option<AtomicMeasure> {
    let points: Option<Vec<Point>> = if let Some(xs) = r.f64s("points") {
        Some(xs.into_iter().map(Point::Scalar).collect())
    } else if let Some(s) = r.usizes("symbols") {
        Some(s.into_iter().map(|c| Point::Symbol(c as u32)).collect())
    } else if let Some(a) = r.array("vec3") {
        let v: Option<Vec<Point>> = a
            .iter()
            .map(|row| {
                let row = row.as_array()?;
                let xs: Option<Vec<f64>> = row.iter().map(|x| x.as_float().or(x.as_integer().map(|i| i as f64))).collect();
                let xs = xs?;
                (xs.len() == 3).then(|| Point::Vec3([xs[0], xs[1], xs[2]]))
            })
            .collect();
        if v.is_none() {
            let msg = format!("{} must be a list of [x, y, z] triples", r.key("vec3"));
            r.err(msg);
        }
        v
    } else {
        let msg = format!("{} needs one of points, symbols or vec3", r.path);
        r.err(msg);
        None
    };
    let weights = r.f64s("weights");
    let points = points?;
    let built = match weights {
        Some(w) => AtomicMeasure::from_masses(points, w),
        None => AtomicMeasure::uniform(&points),
    };
    match built {
        Ok(m) => Some(m),
        Err(e) => {
            let msg = format!("{}: {e}", r.path);
            r.err(msg);
            None
        }
    }
}

fn parse_law(r: &mut Reader) -> Option<InitialLaw> {
    let law = r.string("law");
    let law = r.require("law", law)?;
    let out = match law.as_str() {
        "gaussian" => InitialLaw::Gaussian { mean: r.f64("mean").unwrap_or(0.0), std: r.f64("std").unwrap_or(1.0) },
        "maxwellian3" => InitialLaw::Maxwellian3 { std: r.f64("std").unwrap_or(1.0) },
        "uniform" => InitialLaw::Uniform { lo: r.f64("lo").unwrap_or(0.0), hi: r.f64("hi").unwrap_or(1.0) },
        "bernoulli" => match r.take("p") {
            Some(Value::String(s)) if s == "1/n" => InitialLaw::BernoulliInverseN,
            Some(Value::Float(p)) => InitialLaw::Bernoulli { p },
            Some(Value::Integer(p)) => InitialLaw::Bernoulli { p: p as f64 },
            Some(v) => {
                let msg = format!("{} must be a number or \"1/n\", got {v}", r.key("p"));
                r.err(msg);
                return None;
            }
            None => {
                let msg = format!("missing key {}", r.key("p"));
                r.err(msg);
                return None;
            }
        },
        "sine-sheet" => InitialLaw::SineSheet { amplitude: r.f64("amplitude").unwrap_or(0.5) },
        "atoms" => InitialLaw::Atoms(parse_atoms(r)?),
        other => {
            let msg = format!(
                "{}: unknown law \"{other}\" (expected gaussian, maxwellian3, uniform, bernoulli, sine-sheet or atoms)",
                r.key("law")
            );
            r.err(msg);
            return None;
        }
    };
    if let Err(e) = out.validate() {
        let msg = format!("{}: {e}", r.path);
        r.err(msg);
        return None;
    }
    Some(out)
}

fn parse_initial(table: Table, errors: &mut Vec<String>) -> Option<InitialFamily> {
    let mut r = Reader::new("initial", table, errors);
    let family = r.string("family").unwrap_or_else(|| "product".into());
    let out = match family.as_str() {
        "product" => parse_law(&mut r).map(InitialFamily::Product),
        "pure-atomic" => parse_law(&mut r).map(InitialFamily::PureAtomic),
        "mixture" => {
            let comps = r.array("components");
            let comps = r.require("components", comps)?;
            let mut laws = Vec::new();
            let mut ok = true;
            for (i, c) in comps.into_iter().enumerate() {
                let path = format!("initial.components[{i}]");
                match c {
                    Value::Table(t) => {
                        let mut cr = Reader::new(&path, t, r.errors);
                        match parse_law(&mut cr) {
                            Some(l) => laws.push(l),
                            None => ok = false,
                        }
                        cr.finish();
                    }
                    _ => {
                        r.err(format!("{path} must be a table"));
                        ok = false;
                    }
                }
            }
            let fam = InitialFamily::Mixture(laws);
            if ok {
                if let Err(e) = fam.validate() {
                    r.err(format!("initial: {e}"));
                    ok = false;
                }
            }
            ok.then_some(fam)
        }
        other => {
            r.err(format!("initial.family: unknown family \"{other}\" (expected product, pure-atomic or mixture)"));
            None
        }
    };
    r.finish();
    out
}

fn parse_reference(table: Option<Table>, ladder_max: usize, errors: &mut Vec<String>) -> Option<ReferenceSpec> {
    let Some(table) = table else {
        return Some(ReferenceSpec::LargeN { n: DEFAULT_LARGE_N_FACTOR * ladder_max.max(1), cap: DEFAULT_REFERENCE_CAP });
    };
    let mut r = Reader::new("reference", table, errors);
    let kind = r.string("kind");
    let out = match r.require("kind", kind)?.as_str() {
        "pde" => Some(ReferenceSpec::Pde {
            cells: r.usize("cells").unwrap_or(DEFAULT_PDE_CELLS),
            half_width: r.f64("half_width"),
            dt: r.f64("dt"),
            theta_nodes: r.usize("theta_nodes").unwrap_or(64),
        }),
        "large-n" => Some(ReferenceSpec::LargeN {
            n: r.usize("n").unwrap_or(DEFAULT_LARGE_N_FACTOR * ladder_max.max(1)),
            cap: r.usize("cap").unwrap_or(DEFAULT_REFERENCE_CAP),
        }),
        "atoms" => parse_atoms(&mut r).map(ReferenceSpec::Atoms),
        other => {
            r.err(format!("reference.kind: unknown reference \"{other}\" (expected pde, large-n or atoms)"));
            None
        }
    };
    r.finish();
    out
}

fn parse_diagnostics(table: Option<Table>, errors: &mut Vec<String>) -> SweepOptions {
    let mut opts = SweepOptions::default();
    let Some(table) = table else { return opts };
    let mut r = Reader::new("diagnostics", table, errors);
    for (k, slot) in [("g1", &mut opts.g1), ("g2", &mut opts.g2)] {
        if let Some(i) = r.usize(k) {
            if i < DICTIONARY_SIZE {
                *slot = dictionary()[i];
            } else {
                let msg = format!("{} must be a dictionary index below {DICTIONARY_SIZE}, got {i}", r.key(k));
                r.err(msg);
            }
        }
    }
    if let Some(v) = r.usize("product_atoms") {
        opts.product_atoms = v;
    }
    if let Some(v) = r.usize("bl_cap") {
        opts.metric.bl_cap = v;
    }
    if let Some(v) = r.usize("lp_cap") {
        opts.metric.lp_cap = v;
    }
    r.finish();
    opts
}

fn parse_entropy(table: Table, errors: &mut Vec<String>) -> Option<EntropySpec> {
    let mut r = Reader::new("entropy", table, errors);
    let family = r.string("family").unwrap_or_else(|| "pure-atomic".into());
    let p = r.f64s("p");
    let p = r.require("p", p);
    let ladder = r.usizes("ladder");
    let ladder = r.require("ladder", ladder);
    let out = match (family.as_str(), p, ladder) {
        ("product", Some(p), Some(l)) => Some(EntropySpec { family: OccupancyFamily::Product { p }, ladder: l }),
        ("pure-atomic", Some(p), Some(l)) => Some(EntropySpec { family: OccupancyFamily::PureAtomic { p }, ladder: l }),
        ("product" | "pure-atomic", _, _) => None,
        (other, _, _) => {
            r.err(format!("entropy.family: unknown family \"{other}\" (expected product or pure-atomic)"));
            None
        }
    };
    if let Some(s) = &out {
        if s.ladder.is_empty() || s.ladder.contains(&0) || !strictly_increasing(&s.ladder) {
            r.err("entropy.ladder must be a strictly increasing list of positive counts".into());
        }
    }
    r.finish();
    out
}

/// Parses and validates a configuration document, collecting every error.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigErrors> {
    let table: Table = toml::from_str(text).map_err(|e| ConfigErrors(vec![format!("TOML syntax: {e}")]))?;
    let mut errors = Vec::new();
    let mut r = Reader::new("", table, &mut errors);

    let seed = match r.take("seed") {
        Some(Value::Integer(s)) if s >= 0 => Some(s as u64),
        Some(v) => {
            r.err(format!("seed must be a nonnegative integer, got {v}"));
            None
        }
        None => {
            r.err("missing key seed (seeds are mandatory)".into());
            None
        }
    };
    let t = r.f64("t");
    let t = r.require("t", t);
    if let Some(t) = t {
        if !(t >= 0.0 && t.is_finite()) {
            r.err(format!("t must be finite and nonnegative, got {t}"));
        }
    }
    let replicas = r.usize("replicas").unwrap_or(DEFAULT_REPLICAS);
    if replicas < 2 {
        r.err(format!("replicas must be at least 2, got {replicas}"));
    }
    let ladder = r.usizes("n_ladder");
    let ladder = r.require("n_ladder", ladder);
    if let Some(l) = &ladder {
        if !strictly_increasing(l) {
            r.err("n_ladder not increasing".into());
        }
        if l.len() < 3 {
            r.err(format!("n_ladder needs at least 3 entries, got {}", l.len()));
        }
        if l.iter().any(|&n| n < 2) {
            r.err("n_ladder entries must be at least 2".into());
        }
    }
    let kernel_t = r.table("kernel");
    let kernel = r.require("kernel", kernel_t).and_then(|t| parse_kernel(t, r.errors));
    let initial_t = r.table("initial");
    let initial = r.require("initial", initial_t).and_then(|t| parse_initial(t, r.errors));
    let ladder_max = ladder.as_ref().and_then(|l| l.iter().copied().max()).unwrap_or(0);
    let reference_t = r.table("reference");
    let reference = parse_reference(reference_t, ladder_max, r.errors);
    let diagnostics_t = r.table("diagnostics");
    let diagnostics = parse_diagnostics(diagnostics_t, r.errors);
    let entropy = r.table("entropy").and_then(|t| parse_entropy(t, r.errors));
    let simulate_n = r.table("simulate").and_then(|t| {
        let mut s = Reader::new("simulate", t, r.errors);
        let n = s.usize("n");
        s.finish();
        n
    });
    let (mut out_dir, mut format) = (PathBuf::from("out"), Format::Both);
    if let Some(t) = r.table("output") {
        let mut o = Reader::new("output", t, r.errors);
        if let Some(d) = o.string("dir") {
            out_dir = d.into();
        }
        if let Some(f) = o.string("format") {
            match Format::parse(&f) {
                Some(f) => format = f,
                None => o.err(format!("output.format must be json, csv or both, got \"{f}\"")),
            }
        }
        o.finish();
    }
    r.finish();

    if !errors.is_empty() {
        return Err(ConfigErrors(errors));
    }
    Ok(ExperimentConfig {
        seed: seed.expect("checked"),
        t: t.expect("checked"),
        replicas,
        n_ladder: ladder.expect("checked"),
        kernel: kernel.expect("checked"),
        initial: initial.expect("checked"),
        reference: reference.expect("checked"),
        diagnostics,
        entropy,
        simulate_n,
        out_dir,
        format,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seed = 3
t = 0.5
n_ladder = [50, 200, 800]
[kernel]
kind = "kac"
[initial]
law = "gaussian"
"#;

    #[test]
    fn minimal_kac_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.kernel, TransitionKernel::Kac { tau: 1.0 });
        assert_eq!(c.replicas, 100);
        assert_eq!(c.initial, InitialFamily::Product(InitialLaw::Gaussian { mean: 0.0, std: 1.0 }));
        assert_eq!(c.reference, ReferenceSpec::LargeN { n: 8000, cap: 400 });
        assert_eq!(c.format, Format::Both);
    }

    #[test]
    fn decreasing_ladder_rejected() {
        let e = parse_config(&MINIMAL.replace("[50, 200, 800]", "[100, 50, 200]")).unwrap_err();
        assert!(e.0.iter().any(|m| m == "n_ladder not increasing"), "{e}");
    }

    #[test]
    fn unknown_key_named() {
        let e = parse_config(&format!("foo = 1\n{MINIMAL}")).unwrap_err();
        assert!(e.0.iter().any(|m| m.contains("\"foo\"")), "{e}");
        let e = parse_config(&MINIMAL.replace("kind = \"kac\"", "kind = \"kac\"\nbar = 2")).unwrap_err();
        assert!(e.0.iter().any(|m| m.contains("\"kernel.bar\"")), "{e}");
    }

    #[test]
    fn missing_seed_rejected() {
        let e = parse_config(&MINIMAL.replace("seed = 3", "")).unwrap_err();
        assert!(e.0.iter().any(|m| m.contains("seed")), "{e}");
    }

    #[test]
    fn all_errors_collected() {
        let text = MINIMAL.replace("seed = 3", "").replace("[50, 200, 800]", "[10, 5]").replace("\"gaussian\"", "\"cauchy\"");
        let e = parse_config(&format!("foo = 1\n{text}")).unwrap_err();
        assert!(e.0.len() >= 5, "{e}");
    }

    #[test]
    fn full_config_parses() {
        let text = r#"
seed = 11
t = 5
replicas = 40
n_ladder = [100, 200, 400]
[kernel]
kind = "mckean-vlasov"
drift = "ou(1.0)"
diffusion = "constant(1.0)"
dt = 0.01
[initial]
family = "mixture"
components = [{ law = "gaussian", mean = -1.0 }, { law = "gaussian", mean = 1.0 }]
[reference]
kind = "atoms"
points = [0.0, 1.0]
weights = [1, 3]
[diagnostics]
g1 = 0
g2 = 15
[entropy]
p = [0.5, 0.5]
ladder = [4, 16, 64]
[simulate]
n = 10
[output]
dir = "results"
format = "json"
"#;
        let c = parse_config(text).unwrap();
        assert_eq!(c.kernel, TransitionKernel::McKeanVlasov { drift: Drift::Ou(1.0), diffusion: Diffusion::Constant(1.0), dt: 0.01 });
        assert!(matches!(c.initial, InitialFamily::Mixture(ref v) if v.len() == 2));
        match &c.reference {
            ReferenceSpec::Atoms(m) => assert_eq!(m.weights(), &[0.25, 0.75]),
            r => panic!("{r:?}"),
        }
        assert_eq!(c.diagnostics.g2, dictionary()[15]);
        assert_eq!(c.entropy.unwrap().ladder, vec![4, 16, 64]);
        assert_eq!(c.simulate_n, Some(10));
        assert_eq!(c.out_dir, PathBuf::from("results"));
        assert_eq!(c.format, Format::Json);
    }

    #[test]
    fn bernoulli_inverse_n() {
        let text = MINIMAL.replace("kind = \"kac\"", "kind = \"counterexample\"").replace("law = \"gaussian\"", "law = \"bernoulli\"\np = \"1/n\"");
        assert_eq!(parse_config(&text).unwrap().initial, InitialFamily::Product(InitialLaw::BernoulliInverseN));
    }
}
