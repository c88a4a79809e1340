//! Payload schemas and the command dispatch table.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Deserialize;
use serde_json::{json, Value};

use super::check::check_suite;
use super::{from_json_value, Command, Computed, JobError};
use crate::affine::{azema_free, ConvergenceTable, CONVERGED_TOL, CONVERGENCE_FACTOR, DEFAULT_STEPS};
use crate::fock::{annihilation, conservation, creation, vacuum_expectation, vacuum_moments};
use crate::fock::{FockOperator, FockSpace};
use crate::levy::{self, GeneratorTuple, IncrementSpec, TupleClass};
use crate::mixed::{free_mixed_moment, tensor_mixed_moment, Letter, MarginalLaw, Word};
use crate::moments::{self, CumulantSequence, Flavor, MomentSequence};
use crate::{Error, C64};

/// Tolerance of the `levy-moments` oracle comparison.
pub const LEVY_ORACLE_TOL: f64 = 1e-9;

/// Step counts of the `azema` convergence table.
pub const CONVERGENCE_STEPS: [usize; 4] = [4, 8, 16, 32];

pub(crate) fn dispatch(command: Command, payload: &Value) -> Result<Computed, JobError> {
    match command {
        Command::Cumulants => cumulants(parse(payload)?),
        Command::Convolve => convolve(parse(payload)?),
        Command::BpMap => bp_map(parse(payload)?),
        Command::MixedMoment => mixed_moment(parse(payload)?),
        Command::FockOracle => fock_oracle(parse(payload)?),
        Command::LevyMoments => levy_moments(parse(payload)?),
        Command::Classify => classify(parse(payload)?),
        Command::ItoSplit => ito_split(parse(payload)?),
        Command::Minimal => minimal(parse(payload)?),
        Command::Azema => azema(parse(payload)?),
        Command::Check => check(parse(payload)?),
    }
}

fn parse<T: serde::de::DeserializeOwned>(payload: &Value) -> Result<T, JobError> {
    from_json_value(payload.clone(), "payload")
}

/// Routes validation errors of an input field to the schema exit code,
/// keeping size caps separate.
fn field<T>(name: &str, r: crate::Result<T>) -> Result<T, JobError> {
    r.map_err(|e| match e {
        Error::SizeLimit { .. } => JobError::Compute(e),
        other => JobError::schema(format!("payload.{name}"), other),
    })
}

fn ok(result: Value) -> Result<Computed, JobError> {
    Ok(Computed {
        result,
        tolerances: BTreeMap::new(),
        failure: None,
    })
}

fn complex_json(z: C64) -> Value {
    json!({"re": z.re, "im": z.im})
}

/// A number or an `[re, im]` pair.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
enum Scalar {
    Real(f64),
    Complex([f64; 2]),
}

impl Scalar {
    fn value(self) -> C64 {
        match self {
            Scalar::Real(x) => C64::new(x, 0.0),
            Scalar::Complex([re, im]) => C64::new(re, im),
        }
    }
}

fn complex_vec(v: &[Scalar]) -> Vec<C64> {
    v.iter().map(|s| s.value()).collect()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CumulantsPayload {
    flavor: Flavor,
    #[serde(default)]
    m: Option<Vec<f64>>,
    /// Inverse direction: cumulants in, moments out.
    #[serde(default)]
    kappa: Option<Vec<f64>>,
}

fn cumulants(p: CumulantsPayload) -> Result<Computed, JobError> {
    match (p.m, p.kappa) {
        (Some(m), None) => {
            let m = field("m", MomentSequence::new(m))?;
            let k = moments::moments_to_cumulants(&m, p.flavor)?;
            ok(json!({"flavor": p.flavor.name(), "order": k.order(), "cumulants": k.values()}))
        }
        (None, Some(kappa)) => {
            let k = field("kappa", CumulantSequence::new(p.flavor, kappa))?;
            let m = moments::cumulants_to_moments(&k)?;
            ok(json!({"flavor": p.flavor.name(), "order": m.order(), "moments": m.values()}))
        }
        _ => Err(JobError::schema("payload", "exactly one of `m` and `kappa` is required")),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConvolvePayload {
    flavor: Flavor,
    m1: Vec<f64>,
    m2: Vec<f64>,
}

fn convolve(p: ConvolvePayload) -> Result<Computed, JobError> {
    let m1 = field("m1", MomentSequence::new(p.m1))?;
    let m2 = field("m2", MomentSequence::new(p.m2))?;
    if m1.order() != m2.order() {
        return Err(JobError::schema("payload.m2", format!("order {} differs from m1's {}", m2.order(), m1.order())));
    }
    let m = moments::convolve(&m1, &m2, p.flavor)?;
    ok(json!({"flavor": p.flavor.name(), "order": m.order(), "moments": m.values()}))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BpPayload {
    m: Vec<f64>,
}

fn bp_map(p: BpPayload) -> Result<Computed, JobError> {
    let m = field("m", MomentSequence::new(p.m))?;
    let free = moments::bercovici_pata(&m)?;
    ok(json!({"order": free.order(), "moments": free.values()}))
}

/// A family index (generator 0) or a `[family, generator]` pair.
#[derive(Deserialize)]
#[serde(untagged)]
enum LetterSpec {
    Family(usize),
    Pair([usize; 2]),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WordValue {
    word: Vec<usize>,
    value: Scalar,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MarginalSpec {
    family: usize,
    /// `m_1, m_2, ...` of a single generator.
    #[serde(default)]
    moments: Vec<Scalar>,
    /// Moments of arbitrary generator words.
    #[serde(default)]
    words: Vec<WordValue>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MixedPayload {
    flavor: Flavor,
    word: Vec<LetterSpec>,
    marginals: Vec<MarginalSpec>,
}

fn mixed_moment(p: MixedPayload) -> Result<Computed, JobError> {
    let word = Word::new(
        p.word
            .iter()
            .map(|l| match *l {
                LetterSpec::Family(f) => Letter::new(f, 0),
                LetterSpec::Pair([f, g]) => Letter::new(f, g),
            })
            .collect(),
    );
    let mut laws = Vec::with_capacity(p.marginals.len());
    for (i, spec) in p.marginals.iter().enumerate() {
        let mut law = MarginalLaw::single_variable(spec.family, &complex_vec(&spec.moments));
        for (j, wv) in spec.words.iter().enumerate() {
            field(&format!("marginals[{i}].words[{j}]"), law.insert(wv.word.clone(), wv.value.value()))?;
        }
        laws.push(law);
    }
    let value = match p.flavor {
        Flavor::Classical => tensor_mixed_moment(&word, &laws),
        Flavor::Free => free_mixed_moment(&word, &laws),
        Flavor::Boolean => {
            return Err(JobError::schema("payload.flavor", "mixed moments support `tensor` and `free`"))
        }
    };
    let value = value.map_err(|e| match e {
        Error::MissingLaw(_) | Error::MissingMoment { .. } => JobError::schema("payload.marginals", e),
        other => JobError::Compute(other),
    })?;
    ok(json!({"value": complex_json(value)}))
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum TermSpec {
    Creation { u: Vec<Scalar> },
    Annihilation { v: Vec<Scalar> },
    Conservation { x: Vec<Vec<Scalar>> },
    Scalar { c: Scalar },
    Identity,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FockPayload {
    dim: usize,
    /// Defaults to the word length.
    #[serde(default)]
    depth: Option<usize>,
    /// Each named operator is the sum of its terms.
    operators: BTreeMap<String, Vec<TermSpec>>,
    /// Operator names, leftmost applied last.
    word: Vec<String>,
}

fn fock_term(space: &std::sync::Arc<FockSpace>, term: &TermSpec) -> crate::Result<FockOperator> {
    match term {
        TermSpec::Creation { u } => creation(space, &complex_vec(u)),
        TermSpec::Annihilation { v } => annihilation(space, &complex_vec(v)),
        TermSpec::Conservation { x } => {
            let d = space.dim();
            if x.len() != d || x.iter().any(|row| row.len() != d) {
                return Err(Error::Shape(format!("`x` must be a {d}x{d} matrix")));
            }
            conservation(space, &DMatrix::from_fn(d, d, |i, j| x[i][j].value()))
        }
        TermSpec::Scalar { c } => Ok(FockOperator::scalar(space, c.value())),
        TermSpec::Identity => Ok(FockOperator::identity(space)),
    }
}

fn fock_oracle(p: FockPayload) -> Result<Computed, JobError> {
    if p.dim == 0 {
        return Err(JobError::schema("payload.dim", "one-particle dimension must be at least 1"));
    }
    let depth = p.depth.unwrap_or(p.word.len());
    let space = FockSpace::bounded(p.dim, depth)?;
    let mut ops = BTreeMap::new();
    for (name, terms) in &p.operators {
        let mut op = FockOperator::zero(&space);
        for (i, term) in terms.iter().enumerate() {
            let t = field(&format!("operators.{name}[{i}]"), fock_term(&space, term))?;
            op = op.plus(&t)?;
        }
        ops.insert(name.as_str(), op);
    }
    let word = p
        .word
        .iter()
        .enumerate()
        .map(|(i, name)| {
            ops.get(name.as_str())
                .ok_or_else(|| JobError::schema(format!("payload.word[{i}]"), format!("unknown operator {name:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let value = vacuum_expectation(&word).map_err(|e| match e {
        Error::DepthExceeded { .. } => JobError::schema("payload.depth", e),
        other => JobError::Compute(other),
    })?;
    ok(json!({
        "value": complex_json(value),
        "depth": depth,
        "basis_size": space.total_dim(),
    }))
}

fn default_free() -> Flavor {
    Flavor::Free
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LevyPayload {
    tuple: GeneratorTuple,
    t: f64,
    order: usize,
    #[serde(default = "default_free")]
    flavor: Flavor,
    /// Also realize the process on a Fock space and compare moments.
    #[serde(default)]
    oracle: bool,
}

fn levy_moments(p: LevyPayload) -> Result<Computed, JobError> {
    if p.order == 0 {
        return Err(JobError::schema("payload.order", "order must be at least 1"));
    }
    let k = field("t", levy::tuple_cumulants(&p.tuple, p.t, p.flavor, p.order))?;
    let m = moments::cumulants_to_moments(&k)?;
    let mut result = json!({
        "flavor": p.flavor.name(),
        "order": p.order,
        "cumulants": k.values(),
        "moments": m.values(),
    });
    let mut tolerances = BTreeMap::new();
    let mut failure = None;
    if p.oracle {
        if p.flavor != Flavor::Free {
            return Err(JobError::schema("payload.oracle", "the Fock oracle realizes the free flavor only"));
        }
        if !p.tuple.is_symmetric() {
            return Err(JobError::schema("payload.tuple", "the Fock oracle needs u = v and symmetric T"));
        }
        if !(p.t > 0.0) {
            return Err(JobError::schema("payload.t", "the Fock oracle needs t > 0"));
        }
        let spec = field("t", IncrementSpec::new(vec![(0.0, p.t)], p.tuple.clone()))?;
        let ops = levy::realize_process(&spec, p.order)?;
        let fock: Vec<f64> = vacuum_moments(&ops[0], p.order)?.iter().map(|z| z.re).collect();
        let dev = fock
            .iter()
            .zip(m.values())
            .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
            .fold(0.0, f64::max);
        tolerances.insert("oracle".to_string(), LEVY_ORACLE_TOL);
        if dev > LEVY_ORACLE_TOL {
            failure = Some(format!("Fock moments differ from cumulant moments by {dev:e}"));
        }
        result["oracle"] = json!({"moments": fock, "max_deviation": dev});
    }
    Ok(Computed {
        result,
        tolerances,
        failure,
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TuplePayload {
    tuple: GeneratorTuple,
}

fn require_symmetric(t: &GeneratorTuple) -> Result<(), JobError> {
    if t.is_symmetric() {
        Ok(())
    } else {
        Err(JobError::schema("payload.tuple", "tuple must have u = v and symmetric T"))
    }
}

fn tuple_json(t: &GeneratorTuple) -> Value {
    serde_json::to_value(t).expect("tuples serialize")
}

fn classify(p: TuplePayload) -> Result<Computed, JobError> {
    require_symmetric(&p.tuple)?;
    let class = levy::classify(&p.tuple)?;
    let mut result = json!({"class": class.name()});
    if let TupleClass::CompoundPoisson { omega } = &class {
        result["omega"] = json!(omega.as_slice());
    }
    Ok(Computed {
        result,
        tolerances: BTreeMap::from([
            ("compound_poisson".to_string(), levy::COMPOUND_POISSON_TOL),
            ("krylov_rank".to_string(), levy::KRYLOV_RANK_TOL),
            ("pinv_cutoff".to_string(), levy::PINV_CUTOFF),
            ("zero_operator".to_string(), levy::ZERO_OPERATOR_TOL),
        ]),
        failure: None,
    })
}

fn ito_split(p: TuplePayload) -> Result<Computed, JobError> {
    require_symmetric(&p.tuple)?;
    let split = levy::ito_levy_split(&p.tuple)?;
    Ok(Computed {
        result: json!({
            "gaussian": tuple_json(&split.gaussian),
            "jump": tuple_json(&split.jump),
            "exact": split.exact,
        }),
        tolerances: BTreeMap::from([("pinv_cutoff".to_string(), levy::PINV_CUTOFF)]),
        failure: None,
    })
}

fn minimal(p: TuplePayload) -> Result<Computed, JobError> {
    let m = levy::minimal_tuple(&p.tuple);
    Ok(Computed {
        result: json!({"dim": m.dim(), "tuple": tuple_json(&m)}),
        tolerances: BTreeMap::from([("krylov_rank".to_string(), levy::KRYLOV_RANK_TOL)]),
        failure: None,
    })
}

fn default_t() -> f64 {
    1.0
}

fn default_steps() -> usize {
    DEFAULT_STEPS
}

fn default_depth() -> usize {
    6
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AzemaPayload {
    gamma_re: f64,
    #[serde(default)]
    gamma_im: f64,
    #[serde(default = "default_t")]
    t: f64,
    #[serde(default = "default_steps")]
    steps: usize,
    #[serde(default = "default_depth")]
    depth: usize,
    /// Defaults to `depth`.
    #[serde(default)]
    max_order: Option<usize>,
    #[serde(default)]
    converge: bool,
}

fn azema(p: AzemaPayload) -> Result<Computed, JobError> {
    let gamma = C64::new(p.gamma_re, p.gamma_im);
    let max_order = p.max_order.unwrap_or(p.depth);
    if !(p.t > 0.0 && p.t.is_finite()) {
        return Err(JobError::schema("payload.t", "time must be positive"));
    }
    if p.steps == 0 {
        return Err(JobError::schema("payload.steps", "at least one step is needed"));
    }
    if max_order == 0 {
        return Err(JobError::schema("payload.max_order", "order must be at least 1"));
    }
    if max_order > p.depth {
        return Err(JobError::schema(
            "payload.max_order",
            format!("order {max_order} exceeds depth {}", p.depth),
        ));
    }
    let m = azema_free(gamma, p.t, p.steps, p.depth, max_order)?;
    let by_order: serde_json::Map<String, Value> = m
        .values()
        .iter()
        .enumerate()
        .map(|(k, v)| (format!("order_{}", k + 1), json!(v)))
        .collect();
    let mut result = json!({"moments": by_order});
    let mut tolerances = BTreeMap::new();
    let mut failure = None;
    if p.converge {
        let table = ConvergenceTable::compute(gamma, p.t, &CONVERGENCE_STEPS, p.depth, max_order)?;
        let passed = table.shrinks_by(CONVERGENCE_FACTOR);
        if !passed {
            failure = Some(format!(
                "successive differences do not shrink by {CONVERGENCE_FACTOR} over N = {CONVERGENCE_STEPS:?}"
            ));
        }
        result["convergence"] = json!({
            "steps": table.steps,
            "moments": table.moments,
            "differences": table.differences(),
            "passed": passed,
        });
        tolerances.insert("convergence_factor".to_string(), CONVERGENCE_FACTOR);
        tolerances.insert("converged".to_string(), CONVERGED_TOL);
    }
    Ok(Computed {
        result,
        tolerances,
        failure,
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckPayload {
    #[serde(default)]
    filter: Option<String>,
    /// Shifts every computed value before comparison; the suite must fail.
    #[serde(default)]
    perturb: bool,
}

fn check(p: CheckPayload) -> Result<Computed, JobError> {
    let report = check_suite(p.filter.as_deref(), p.perturb)?;
    let tolerances = report
        .checks
        .iter()
        .map(|c| (format!("{}/{}", c.group, c.name), c.tolerance))
        .collect();
    let failed: Vec<String> = report
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{}/{}", c.group, c.name))
        .collect();
    Ok(Computed {
        result: serde_json::to_value(&report).expect("report serializes"),
        tolerances,
        failure: (!failed.is_empty()).then(|| format!("failed checks: {}", failed.join(", "))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(command: Command, payload: Value) -> Result<Computed, JobError> {
        dispatch(command, &payload)
    }

    #[test]
    fn cumulants_both_directions() {
        let r = run(Command::Cumulants, json!({"flavor": "free", "m": [1, 2, 5]})).unwrap();
        assert_eq!(r.result["cumulants"], json!([1.0, 1.0, 1.0]));
        let r = run(Command::Cumulants, json!({"flavor": "boolean", "kappa": [0, 1, 0, 1]})).unwrap();
        assert_eq!(r.result["moments"], json!([0.0, 1.0, 0.0, 2.0]));
        assert!(run(Command::Cumulants, json!({"flavor": "free"})).is_err());
    }

    #[test]
    fn mixed_moment_four_point() {
        let payload = json!({
            "flavor": "free",
            "word": [1, 2, 1, 2],
            "marginals": [
                {"family": 1, "moments": [1, 2]},
                {"family": 2, "moments": [1, 2]},
            ],
        });
        let r = run(Command::MixedMoment, payload).unwrap();
        assert_eq!(r.result["value"], json!({"re": 3.0, "im": 0.0}));
        let missing = json!({"flavor": "tensor", "word": [1, 3], "marginals": [{"family": 1, "moments": [1]}]});
        let err = run(Command::MixedMoment, missing).err().unwrap();
        assert!(matches!(err, JobError::Schema { .. }));
    }

    #[test]
    fn fock_oracle_catalan() {
        let payload = json!({
            "dim": 1,
            "operators": {"s": [{"kind": "creation", "u": [1]}, {"kind": "annihilation", "v": [1]}]},
            "word": ["s", "s", "s", "s", "s", "s"],
        });
        let r = run(Command::FockOracle, payload).unwrap();
        assert_eq!(r.result["value"]["re"], json!(5.0));
        let bad = json!({"dim": 1, "operators": {}, "word": ["s"]});
        let err = run(Command::FockOracle, bad).err().unwrap();
        assert!(err.to_string().contains("payload.word[0]"));
        let shallow = json!({
            "dim": 1, "depth": 1,
            "operators": {"a": [{"kind": "creation", "u": [1]}]},
            "word": ["a", "a"],
        });
        assert!(run(Command::FockOracle, shallow).is_err());
    }

    #[test]
    fn levy_oracle_agrees() {
        let tuple = json!({"d": 2, "T": [[0.5, 0.2], [0.2, -0.3]], "u": [1.0, 0.5], "lambda": 0.1});
        let r = run(
            Command::LevyMoments,
            json!({"tuple": tuple, "t": 2.0, "order": 6, "oracle": true}),
        )
        .unwrap();
        assert!(r.failure.is_none());
        assert!(r.result["oracle"]["max_deviation"].as_f64().unwrap() < 1e-12);
    }

    #[test]
    fn tuple_commands() {
        let cp = json!({"tuple": {"d": 1, "T": [[1.0]], "u": [1.0], "lambda": 1.0}});
        let r = run(Command::Classify, cp.clone()).unwrap();
        assert_eq!(r.result["class"], "compound-poisson");
        let r = run(Command::ItoSplit, cp.clone()).unwrap();
        assert_eq!(r.result["exact"], true);
        let r = run(Command::Minimal, cp).unwrap();
        assert_eq!(r.result["dim"], 1);
        let bad = json!({"tuple": {"d": 2, "T": [[1.0]], "u": [1.0, 0.0], "lambda": 0.0}});
        let err = run(Command::Classify, bad).err().unwrap();
        assert!(err.to_string().contains("payload.tuple"), "{err}");
    }

    #[test]
    fn azema_keys_and_convergence() {
        let r = run(
            Command::Azema,
            json!({"gamma_re": 1.0, "t": 1.0, "steps": 4, "depth": 4, "converge": true}),
        )
        .unwrap();
        assert_eq!(r.result["moments"]["order_4"], json!(2.0));
        assert_eq!(r.result["convergence"]["passed"], true);
        let err = run(Command::Azema, json!({"gamma_re": 1.0, "depth": 4, "max_order": 6})).err().unwrap();
        assert!(err.to_string().contains("payload.max_order"));
    }
}
