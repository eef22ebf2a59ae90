use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use privexp_core::euclid::{binary_euclid_approx, euclid_tai_approx};
use privexp_core::exponents::{
    binary_tai_argmax, binary_tai_exponent, corollary2_bound, tai_exponent, theorem1_lower_bound,
    zero_rate_exponent, BoundKind, ChannelFamily, ExponentQuery, ExponentResult, SearchConfig,
};
use privexp_core::gaussian::{gaussian_tai_exponent, GaussianQuery};
use privexp_core::probcore::{JointPmf, Pmf};
use privexp_core::simkit::{simulate, Hypothesis, SchemeConfig, SchemeKind};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::grid::parse_values;
use crate::manifest::emit;
use crate::*;

pub fn run(cmd: &Command) -> Result<u8, Failure> {
    let started = Instant::now();
    match cmd {
        Command::Exponent(a) => {
            let res = exponent(a)?;
            let body = serde_json::to_string_pretty(&res)? + "\n";
            emit("exponent", a, None, a.out.as_deref(), &body, started)?;
        }
        Command::Sweep(a) => {
            let body = sweep(a)?;
            emit("sweep", a, None, a.out.as_deref(), &body, started)?;
        }
        Command::Approx(a) => {
            let body = approx(a)?;
            emit("approx", a, None, a.out.as_deref(), &body, started)?;
        }
        Command::Gaussian(a) => {
            let body = gaussian(a)?;
            emit("gaussian", a, None, a.out.as_deref(), &body, started)?;
        }
        Command::Simulate(a) => {
            let file = sim_config(a)?;
            let report = simulate(&file.scheme, &file.null, file.alt.as_ref())?;
            let body = serde_json::to_string_pretty(&report)? + "\n";
            emit("simulate", &file, Some(file.scheme.seed), a.out.as_deref(), &body, started)?;
        }
        Command::Selftest(a) => {
            let report = selftest::run(a.seed)?;
            let body = serde_json::to_string_pretty(&report)? + "\n";
            emit("selftest", a, Some(a.seed), a.out.as_deref(), &body, started)?;
            if !report.passed {
                eprintln!("selftest: some checks failed");
                return Ok(1);
            }
        }
    }
    Ok(0)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn null_law(s: &Source) -> Result<JointPmf, Failure> {
    match (&s.null, s.q) {
        (Some(path), _) => read_json(path),
        (None, Some(q)) => Ok(JointPmf::dsbs(q)?),
        (None, None) => Err(Failure::usage("give the null law with --null FILE or --q")),
    }
}

fn alt_law(s: &Source, null: &JointPmf) -> Result<Option<JointPmf>, Failure> {
    if let Some(path) = &s.alt {
        return Ok(Some(read_json(path)?));
    }
    if s.independent {
        return Ok(Some(null.product_of_marginals()?));
    }
    Ok(None)
}

fn need_q(s: &Source) -> Result<f64, Failure> {
    s.q.ok_or_else(|| Failure::usage("the binary closed form needs --q"))
}

fn search_config(a: &SearchArgs, base: SearchConfig) -> SearchConfig {
    SearchConfig {
        grid_step: a.grid_step.unwrap_or(base.grid_step),
        refine_rounds: a.refine_rounds.unwrap_or(base.refine_rounds),
        u_cardinality: a.u_card.or(base.u_cardinality),
        family: if a.symmetric { ChannelFamily::Symmetric } else { base.family },
        ..base
    }
}

fn binary_result(q: f64, rate: f64, leak: f64) -> Result<ExponentResult, Failure> {
    let theta = binary_tai_exponent(q, rate, leak)?;
    let (v, w) = binary_tai_argmax(rate, leak)?;
    Ok(ExponentResult {
        theta,
        bound_kind: BoundKind::Exact,
        query: Some(ExponentQuery::new(rate, leak)?),
        privacy_channel: Some(v),
        quantizer: Some(w),
        inner_witness: None,
        rate_used: None,
        leakage_used: None,
        grid_step: None,
        evaluations: 0,
    })
}

fn exponent(a: &ExponentArgs) -> Result<ExponentResult, Failure> {
    let query = ExponentQuery::with_epsilon(a.rate, a.leak, a.epsilon)?;
    if a.method == Method::Binary {
        return binary_result(need_q(&a.source)?, a.rate, a.leak);
    }
    let p = null_law(&a.source)?;
    let alt = alt_law(&a.source, &p)?;
    let needs_alt = || alt.clone().ok_or_else(|| Failure::usage("this method needs --alt FILE or --independent"));
    let res = match a.method {
        Method::Tai => {
            if alt.is_some() {
                log::warn!("tai tests against independence; the given alternative is ignored");
            }
            tai_exponent(&p, &query, &search_config(&a.search, SearchConfig::default()))?
        }
        Method::Thm1 => {
            let cfg = search_config(&a.search, SearchConfig::theorem1_default());
            theorem1_lower_bound(&p, &needs_alt()?, &query, &cfg)?
        }
        Method::Cor2 => {
            let cfg = search_config(&a.search, SearchConfig::theorem1_default());
            corollary2_bound(&p, &needs_alt()?, a.rate, &cfg)?
        }
        Method::ZeroRate => zero_rate_exponent(&p, &needs_alt()?)?,
        Method::Binary => unreachable!(),
    };
    Ok(res)
}

/// Exact and approximate exponents at one (R, L) point.
struct Evaluator {
    q: Option<f64>,
    p: JointPmf,
    pxhat: Pmf,
    method: SweepMethod,
    general_approx: bool,
    cfg: SearchConfig,
}

impl Evaluator {
    fn new(source: &Source, method: SweepMethod, general_approx: bool, search: &SearchArgs) -> Result<Self, Failure> {
        let p = null_law(source)?;
        if method == SweepMethod::Binary {
            need_q(source)?;
        }
        let pxhat = Pmf::uniform(p.shape()[0])?;
        let cfg = search_config(search, SearchConfig::default());
        Ok(Self { q: source.q, p, pxhat, method, general_approx, cfg })
    }

    fn exact(&self, r: f64, l: f64) -> Result<f64, Failure> {
        Ok(match self.method {
            SweepMethod::Binary => binary_tai_exponent(self.q.unwrap_or_default(), r, l)?,
            SweepMethod::Tai => tai_exponent(&self.p, &ExponentQuery::new(r, l)?, &self.cfg)?.theta,
            SweepMethod::Approx => self.approx(r, l)?,
        })
    }

    fn approx(&self, r: f64, l: f64) -> Result<f64, Failure> {
        Ok(match self.q {
            Some(q) if !self.general_approx => binary_euclid_approx(q, r, l)?,
            _ => euclid_tai_approx(&self.p, r, l, &self.pxhat, &self.cfg)?,
        })
    }
}

fn rel_err(exact: f64, approx: f64) -> String {
    if exact > 0.0 {
        format!("{}", (approx - exact).abs() / exact)
    } else if approx == 0.0 {
        "0".into()
    } else {
        String::new()
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn table(ev: &Evaluator, points: &[(f64, f64)], with_approx: bool) -> Result<String, Failure> {
    let mut s = String::from(if with_approx { "R,L,theta,theta_approx,rel_err\n" } else { "R,L,theta\n" });
    for &(r, l) in points {
        let theta = ev.exact(r, l)?;
        if with_approx {
            let a = ev.approx(r, l)?;
            let _ = writeln!(s, "{r},{l},{theta},{a},{}", rel_err(theta, a));
        } else {
            let _ = writeln!(s, "{r},{l},{theta}");
        }
    }
    Ok(s)
}

fn sweep(a: &SweepArgs) -> Result<String, Failure> {
    let ev = Evaluator::new(&a.source, a.method, false, &a.search)?;
    let leaks = sorted(parse_values(&a.leak)?);
    let points: Vec<(f64, f64)> = if a.diagonal {
        leaks.iter().map(|&l| (l, l)).collect()
    } else {
        let rates = sorted(parse_values(&a.rate)?);
        rates.iter().flat_map(|&r| leaks.iter().map(move |&l| (r, l))).collect()
    };
    table(&ev, &points, a.with_approx)
}

fn approx(a: &ApproxArgs) -> Result<String, Failure> {
    let ev = Evaluator::new(&a.source, a.method, a.general, &a.search)?;
    let points: Vec<(f64, f64)> = sorted(parse_values(&a.points)?).into_iter().map(|v| (v, v)).collect();
    table(&ev, &points, true)
}

fn gaussian(a: &GaussianArgs) -> Result<String, Failure> {
    let mut s = String::from("rho,R,L,theta\n");
    for rho in sorted(parse_values(&a.rho)?) {
        for r in sorted(parse_values(&a.rate)?) {
            for l in sorted(parse_values(&a.leak)?) {
                let theta = gaussian_tai_exponent(&GaussianQuery::new(rho, r, l)?)?;
                let ls = if l.is_infinite() { "inf".to_string() } else { l.to_string() };
                let _ = writeln!(s, "{rho},{r},{ls},{theta}");
            }
        }
    }
    Ok(s)
}

/// Simulation config file: scheme fields plus the laws.
#[derive(Debug, Serialize, Deserialize)]
pub struct SimFile {
    pub null: JointPmf,
    /// Only for the general scheme; defaults to the product of the null marginals.
    #[serde(default)]
    pub alt: Option<JointPmf>,
    #[serde(flatten)]
    pub scheme: SchemeConfig,
}

fn set(obj: &mut serde_json::Map<String, Value>, key: &str, v: Option<Value>) {
    if let Some(v) = v {
        obj.insert(key.into(), v);
    }
}

fn sim_config(a: &SimulateArgs) -> Result<SimFile, Failure> {
    let mut obj = match &a.config {
        Some(path) => match read_json::<Value>(path)? {
            Value::Object(m) => m,
            _ => return Err(Failure::usage("simulation config must be a JSON object")),
        },
        None => {
            let (q, rate) = a
                .q
                .zip(a.rate)
                .ok_or_else(|| Failure::usage("give --config FILE, or --q and --rate (and --leak)"))?;
            let leak = a.leak.unwrap_or(rate);
            let (v, w) = binary_tai_argmax(rate, leak)?;
            let n = a.n.ok_or_else(|| Failure::usage("--n is required without --config"))?;
            let file = SimFile { null: JointPmf::dsbs(q)?, alt: None, scheme: SchemeConfig::new(n, 0.0, rate, v, w) };
            let mut m = match serde_json::to_value(&file)? {
                Value::Object(m) => m,
                _ => unreachable!(),
            };
            m.remove("mu");
            m
        }
    };
    let scheme = a.scheme.map(|s| match s {
        SchemeArg::General => SchemeKind::General,
        SchemeArg::Memoryless => SchemeKind::Memoryless,
    });
    let hyp = a.hypothesis.map(|h| match h {
        HypothesisArg::Null => Hypothesis::Null,
        HypothesisArg::Alt => Hypothesis::Alt,
    });
    set(&mut obj, "n", a.n.map(Value::from));
    set(&mut obj, "mu", a.mu.map(Value::from));
    set(&mut obj, "trials", a.trials.map(Value::from));
    set(&mut obj, "seed", a.seed.map(Value::from));
    set(&mut obj, "batches", a.batches.map(Value::from));
    set(&mut obj, "scheme", scheme.map(|s| serde_json::to_value(s).unwrap()));
    set(&mut obj, "hypothesis", hyp.map(|h| serde_json::to_value(h).unwrap()));
    if a.fixed_codebook {
        obj.insert("fixed_codebook".into(), Value::Bool(true));
    }
    obj.entry("seed").or_insert(Value::from(0u64));
    obj.entry("trials").or_insert(Value::from(10_000u64));
    obj.entry("hypothesis").or_insert(Value::from("null"));
    if !obj.contains_key("mu") {
        let n = obj.get("n").and_then(Value::as_u64).ok_or_else(|| Failure::usage("config needs \"n\""))?;
        obj.insert("mu".into(), Value::from((n as f64).powf(-1.0 / 3.0)));
    }
    let mut file: SimFile = serde_json::from_value(Value::Object(obj))?;
    if file.scheme.scheme == SchemeKind::General && file.alt.is_none() {
        file.alt = Some(file.null.product_of_marginals()?);
    }
    Ok(file)
}
