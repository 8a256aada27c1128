//! Problem files, report envelopes and CSV export.
//!
//! A problem file is a JSON object
//!
//! ```json
//! {
//!   "m": 2, "n": 2,
//!   "weights": [[0, 0, 0], [0, 1, 1], [0, 1, 1]],
//!   "nonlinearity": { "kind": "cubic_softening", "params": {} },
//!   "lambda": 3.0
//! }
//! ```
//!
//! with `weights[i][j] = p(i, j)` for `0 <= i <= m`, `0 <= j <= n` (row index
//! `i` outer). Optional members: `nonlinearity.coefficient` (an `m x n` table
//! indexed `[i-1][j-1]`), `nonlinearity.primitive_mode` (`closed_form` or
//! `quadrature`), `lambda` and `hypotheses` (the constants of
//! [`HypothesisParams`]).

use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Map, Value};

use crate::assembly::SystemMatrix;
use crate::error::Error;
use crate::grid::{flatten_index, WeightGrid};
use crate::nonlinearity::{Kind, NonlinearitySpec, PrimitiveMode, Tabulated};
use crate::problem::ProblemInstance;
use crate::regimes::HypothesisParams;
use crate::solvers::SweepEntry;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IoError {
    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },
    #[error("JSON syntax error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    /// `pointer` is a JSON pointer into the offending document.
    #[error("invalid value at {pointer}: {message}")]
    Validation { pointer: String, message: String },
}

fn invalid(pointer: impl Into<String>, message: impl Into<String>) -> IoError {
    IoError::Validation {
        pointer: pointer.into(),
        message: message.into(),
    }
}

/// A parsed problem file.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemFile {
    pub instance: ProblemInstance,
    pub lambda: Option<f64>,
    pub hypotheses: Option<HypothesisParams>,
}

pub fn load_problem(path: impl AsRef<Path>) -> Result<ProblemInstance, IoError> {
    load_problem_file(path).map(|f| f.instance)
}

pub fn load_problem_file(path: impl AsRef<Path>) -> Result<ProblemFile, IoError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| IoError::Read {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_problem(&text)
}

fn parse_json(text: &str) -> Result<Value, IoError> {
    serde_json::from_str(text).map_err(|e| IoError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn parse_problem(text: &str) -> Result<ProblemFile, IoError> {
    let doc = parse_json(text)?;
    let root = doc
        .as_object()
        .ok_or_else(|| invalid("", "expected a JSON object"))?;
    check_keys(
        root,
        "",
        &["m", "n", "weights", "nonlinearity", "lambda", "hypotheses"],
    )?;

    let m = dim(root, "m")?;
    let n = dim(root, "n")?;
    let weights = real_table(field(root, "", "weights")?, "/weights", m + 1, n + 1)?;
    let grid = WeightGrid::new(m, n, &weights).map_err(|e| match e {
        Error::BoundaryWeightNonzero { i, j, .. }
        | Error::NonpositiveInteriorWeight { i, j, .. } => {
            invalid(format!("/weights/{i}/{j}"), e.to_string())
        }
        other => invalid("/weights", other.to_string()),
    })?;

    let nl = parse_nonlinearity(field(root, "", "nonlinearity")?, m, n)?;
    let instance =
        ProblemInstance::new(grid, nl).map_err(|e| invalid("/nonlinearity", e.to_string()))?;

    let lambda = match root.get("lambda") {
        None | Some(Value::Null) => None,
        Some(v) => Some(real(v, "/lambda")?),
    };
    let hypotheses = match root.get("hypotheses") {
        None | Some(Value::Null) => None,
        Some(v) => {
            let p: HypothesisParams = serde_json::from_value(v.clone())
                .map_err(|e| invalid("/hypotheses", e.to_string()))?;
            p.validate(m, n)
                .map_err(|e| invalid(hypothesis_pointer(&e), e.to_string()))?;
            Some(p)
        }
    };
    Ok(ProblemFile {
        instance,
        lambda,
        hypotheses,
    })
}

fn hypothesis_pointer(e: &Error) -> String {
    match e {
        Error::InvalidParameter { name, .. } => format!("/hypotheses/{name}"),
        _ => "/hypotheses".into(),
    }
}

fn check_keys(obj: &Map<String, Value>, at: &str, allowed: &[&str]) -> Result<(), IoError> {
    for key in obj.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(invalid(format!("{at}/{key}"), "unknown field"));
        }
    }
    Ok(())
}

fn field<'a>(obj: &'a Map<String, Value>, at: &str, key: &str) -> Result<&'a Value, IoError> {
    obj.get(key)
        .ok_or_else(|| invalid(format!("{at}/{key}"), "missing required field"))
}

fn dim(root: &Map<String, Value>, key: &str) -> Result<usize, IoError> {
    let v = field(root, "", key)?;
    match v.as_u64() {
        Some(d) if d >= 1 => Ok(d as usize),
        _ => Err(invalid(format!("/{key}"), "expected a positive integer")),
    }
}

fn real(v: &Value, at: &str) -> Result<f64, IoError> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| invalid(at, "expected a finite number"))
}

fn real_list(v: &Value, at: &str, len: Option<usize>) -> Result<Vec<f64>, IoError> {
    let arr = v
        .as_array()
        .ok_or_else(|| invalid(at, "expected an array"))?;
    if let Some(l) = len {
        if arr.len() != l {
            return Err(invalid(
                at,
                format!("expected {l} entries, found {}", arr.len()),
            ));
        }
    }
    arr.iter()
        .enumerate()
        .map(|(k, x)| real(x, &format!("{at}/{k}")))
        .collect()
}

fn real_table(v: &Value, at: &str, rows: usize, cols: usize) -> Result<Vec<Vec<f64>>, IoError> {
    let arr = v
        .as_array()
        .ok_or_else(|| invalid(at, "expected an array of rows"))?;
    if arr.len() != rows {
        return Err(invalid(
            at,
            format!("expected {rows} rows, found {}", arr.len()),
        ));
    }
    arr.iter()
        .enumerate()
        .map(|(k, row)| real_list(row, &format!("{at}/{k}"), Some(cols)))
        .collect()
}

/// `[i-1][j-1]` table to flattened node order.
fn flatten_table(t: &[Vec<f64>], m: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for (i, row) in t.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            out[flatten_index(i + 1, j + 1, m, n).expect("in range") - 1] = v;
        }
    }
    out
}

fn parse_nonlinearity(v: &Value, m: usize, n: usize) -> Result<NonlinearitySpec, IoError> {
    const AT: &str = "/nonlinearity";
    let obj = v
        .as_object()
        .ok_or_else(|| invalid(AT, "expected an object"))?;
    check_keys(
        obj,
        AT,
        &["kind", "params", "coefficient", "primitive_mode"],
    )?;
    let kind_name = field(obj, AT, "kind")?
        .as_str()
        .ok_or_else(|| invalid("/nonlinearity/kind", "expected a string"))?;
    let empty = Map::new();
    let params = match obj.get("params") {
        None | Some(Value::Null) => &empty,
        Some(p) => p
            .as_object()
            .ok_or_else(|| invalid("/nonlinearity/params", "expected an object"))?,
    };
    const PAT: &str = "/nonlinearity/params";
    let param = |key: &str| -> Result<f64, IoError> {
        real(field(params, PAT, key)?, &format!("{PAT}/{key}"))
    };
    let param_err = |key: &str, e: Error| invalid(format!("{PAT}/{key}"), e.to_string());

    let spec = match kind_name {
        "linear" => {
            check_keys(params, PAT, &["slope"])?;
            NonlinearitySpec::linear(param("slope")?)
        }
        "cubic_softening" => {
            check_keys(params, PAT, &[])?;
            NonlinearitySpec::cubic_softening()
        }
        "power" => {
            check_keys(params, PAT, &["s", "gamma"])?;
            NonlinearitySpec::power(param("s")?, param("gamma")?)
                .map_err(|e| param_err("gamma", e))?
        }
        "rational_quartic" => {
            check_keys(params, PAT, &[])?;
            NonlinearitySpec::rational_quartic()
        }
        "damped_quadratic" => {
            check_keys(params, PAT, &[])?;
            NonlinearitySpec::damped_quadratic()
        }
        "tabulated" | "user_tabulated" => {
            check_keys(params, PAT, &["knots", "values"])?;
            let knots = real_list(
                field(params, PAT, "knots")?,
                "/nonlinearity/params/knots",
                None,
            )?;
            let values = field(params, PAT, "values")?;
            let k = knots.len();
            let per_node = values
                .as_array()
                .and_then(|a| a.first())
                .is_some_and(Value::is_array);
            let table = if per_node {
                // [i-1][j-1][lattice index]
                let vat = "/nonlinearity/params/values";
                let arr = values.as_array().expect("checked");
                if arr.len() != m {
                    return Err(invalid(
                        vat,
                        format!("expected {m} rows, found {}", arr.len()),
                    ));
                }
                let mut rows = vec![Vec::new(); m * n];
                for (i, row) in arr.iter().enumerate() {
                    let cells = row.as_array().filter(|r| r.len() == n).ok_or_else(|| {
                        invalid(format!("{vat}/{i}"), format!("expected {n} nodes"))
                    })?;
                    for (j, cell) in cells.iter().enumerate() {
                        let idx = flatten_index(i + 1, j + 1, m, n).expect("in range") - 1;
                        rows[idx] = real_list(cell, &format!("{vat}/{i}/{j}"), Some(k))?;
                    }
                }
                Tabulated::per_node(m, n, knots, rows)
            } else {
                let vals = real_list(values, "/nonlinearity/params/values", Some(k))?;
                Tabulated::shared(knots, vals)
            };
            let table = table.map_err(|e| invalid("/nonlinearity/params/knots", e.to_string()))?;
            NonlinearitySpec::new(Kind::Tabulated(table))
                .map_err(|e| invalid("/nonlinearity/params", e.to_string()))?
        }
        other => {
            return Err(invalid(
                "/nonlinearity/kind",
                format!("unknown kind `{other}`"),
            ))
        }
    };

    let spec = match obj.get("coefficient") {
        None | Some(Value::Null) => spec,
        Some(c) => {
            let at = "/nonlinearity/coefficient";
            let t = real_table(c, at, m, n)?;
            spec.with_coefficient(m, n, flatten_table(&t, m, n))
                .map_err(|e| invalid(at, e.to_string()))?
        }
    };
    let spec = match obj.get("primitive_mode") {
        None | Some(Value::Null) => spec,
        Some(v) => {
            let mode: PrimitiveMode = serde_json::from_value(v.clone()).map_err(|_| {
                invalid(
                    "/nonlinearity/primitive_mode",
                    "expected `closed_form` or `quadrature`",
                )
            })?;
            spec.with_mode(mode)
        }
    };
    Ok(spec)
}

/// `[i-1][j-1]` table from flattened node order.
fn unflatten_table(v: &[f64], m: usize, n: usize) -> Vec<Vec<f64>> {
    (1..=m)
        .map(|i| (1..=n).map(|j| v[(j - 1) * m + (i - 1)]).collect())
        .collect()
}

/// The problem-file JSON of a parsed problem; `parse_problem` inverts it.
pub fn problem_to_value(file: &ProblemFile) -> Value {
    let inst = &file.instance;
    let (m, n) = (inst.m(), inst.n());
    let nl = inst.nonlinearity();
    let params = match nl.kind() {
        Kind::Linear { slope } => json!({ "slope": slope }),
        Kind::Power { s, gamma } => json!({ "s": s, "gamma": gamma }),
        Kind::CubicSoftening | Kind::RationalQuartic | Kind::DampedQuadratic => json!({}),
        Kind::Tabulated(t) => {
            let values = match t.dims() {
                None => json!(t.rows()[0]),
                Some(_) => {
                    let rows: Vec<Vec<Vec<f64>>> = (1..=m)
                        .map(|i| {
                            (1..=n)
                                .map(|j| t.rows()[(j - 1) * m + (i - 1)].clone())
                                .collect()
                        })
                        .collect();
                    json!(rows)
                }
            };
            json!({ "knots": t.knots(), "values": values })
        }
    };
    let mut nl_obj = json!({ "kind": nl.kind().name(), "params": params });
    if let Some(c) = nl.coefficient() {
        nl_obj["coefficient"] = json!(unflatten_table(c, m, n));
    }
    if nl.mode() != PrimitiveMode::ClosedForm {
        nl_obj["primitive_mode"] = json!(nl.mode());
    }
    let mut root = json!({
        "m": m,
        "n": n,
        "weights": inst.grid().to_table(),
        "nonlinearity": nl_obj,
    });
    if let Some(l) = file.lambda {
        root["lambda"] = json!(l);
    }
    if let Some(h) = &file.hypotheses {
        root["hypotheses"] = serde_json::to_value(h).expect("plain data");
    }
    root
}

/// Pretty JSON with every float written as `{:.16e}`, i.e. 17 significant
/// digits, which round-trips `f64` exactly.
#[derive(Default)]
pub struct Digits17 {
    inner: PrettyFormatter<'static>,
}

impl Formatter for Digits17 {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> std::io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> std::io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> std::io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_object_value(w)
    }
}

/// Serializes with [`Digits17`]. Non-finite floats become `null`.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Digits17::default());
    value
        .serialize(&mut ser)
        .expect("serializing plain data cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

/// Versioned envelope: the report's own fields plus `schema_version` and
/// `report_type`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile<T> {
    pub schema_version: String,
    pub report_type: String,
    #[serde(flatten)]
    pub body: T,
}

impl<T> ReportFile<T> {
    pub fn new(report_type: &str, body: T) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.into(),
            report_type: report_type.into(),
            body,
        }
    }
}

pub fn emit_report<T: Serialize>(report_type: &str, body: &T) -> String {
    to_json_string(&ReportFile::new(report_type, body))
}

pub fn parse_report<T: DeserializeOwned>(text: &str) -> Result<ReportFile<T>, IoError> {
    let doc = parse_json(text)?;
    let version = doc.get("schema_version").and_then(Value::as_str);
    if version != Some(SCHEMA_VERSION) {
        return Err(invalid(
            "/schema_version",
            format!("expected \"{SCHEMA_VERSION}\""),
        ));
    }
    serde_json::from_value(doc).map_err(|e| invalid("", e.to_string()))
}

/// Dense matrix, one row per line.
pub fn matrix_to_csv(matrix: &SystemMatrix) -> String {
    let mut out = String::new();
    for row in matrix.to_dense() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// One line per sweep entry, for external plotting.
pub fn sweep_to_csv(entries: &[SweepEntry]) -> String {
    let mut out =
        String::from("lambda,converged,nontrivial,residual_inf,energy,norm_inf,iterations,error\n");
    for e in entries {
        match &e.report {
            Some(r) => out.push_str(&format!(
                "{:.16e},{},{},{:.16e},{:.16e},{:.16e},{},\n",
                e.lambda,
                r.converged,
                r.nontrivial,
                r.residual_inf,
                r.energy.total,
                r.u.norm_inf(),
                r.iterations
            )),
            None => out.push_str(&format!(
                "{:.16e},,,,,,,\"{}\"\n",
                e.lambda,
                e.error.as_deref().unwrap_or("").replace('"', "'")
            )),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble_m;
    use crate::spectral::eigen_extremes;

    const UNIT: &str = r#"{
        "m": 2, "n": 2,
        "weights": [[0, 0, 0], [0, 1, 1], [0, 1, 1]],
        "nonlinearity": { "kind": "cubic_softening", "params": {} },
        "lambda": 3
    }"#;

    fn with(patch: impl FnOnce(&mut Value)) -> String {
        let mut v: Value = serde_json::from_str(UNIT).unwrap();
        patch(&mut v);
        v.to_string()
    }

    fn pointer_of(r: Result<ProblemFile, IoError>) -> String {
        match r {
            Err(IoError::Validation { pointer, .. }) => pointer,
            other => panic!("expected a validation error, got {other:?}"),
        }
    }

    #[test]
    fn loads_unit_square() {
        let f = parse_problem(UNIT).unwrap();
        assert_eq!(f.instance.order(), 4);
        assert_eq!(f.lambda, Some(3.0));
        assert_eq!(f.instance.nonlinearity().kind(), &Kind::CubicSoftening);
    }

    #[test]
    fn boundary_weight_pointer() {
        let text = with(|v| v["weights"][0][1] = json!(0.5));
        assert_eq!(pointer_of(parse_problem(&text)), "/weights/0/1");
        let text = with(|v| v["weights"][2][1] = json!(-1.0));
        assert_eq!(pointer_of(parse_problem(&text)), "/weights/2/1");
    }

    #[test]
    fn unknown_kind_pointer() {
        let text = with(|v| v["nonlinearity"]["kind"] = json!("unknown"));
        assert_eq!(pointer_of(parse_problem(&text)), "/nonlinearity/kind");
    }

    #[test]
    fn shape_and_type_pointers() {
        let text = with(|v| v["weights"][1] = json!([0, 1]));
        assert_eq!(pointer_of(parse_problem(&text)), "/weights/1");
        let text = with(|v| v["weights"][1][2] = json!("x"));
        assert_eq!(pointer_of(parse_problem(&text)), "/weights/1/2");
        let text = with(|v| v["m"] = json!(0));
        assert_eq!(pointer_of(parse_problem(&text)), "/m");
        let text = with(|v| v["nonlinearity"]["params"] = json!({"gamma": 1}));
        assert_eq!(
            pointer_of(parse_problem(&text)),
            "/nonlinearity/params/gamma"
        );
        let text = with(|v| {
            v["nonlinearity"] = json!({"kind": "power", "params": {"s": 1, "gamma": 0.5}})
        });
        assert_eq!(
            pointer_of(parse_problem(&text)),
            "/nonlinearity/params/gamma"
        );
        let text = with(|v| v["extra"] = json!(1));
        assert_eq!(pointer_of(parse_problem(&text)), "/extra");
    }

    #[test]
    fn syntax_error_has_position() {
        match parse_problem("{\n  \"m\": 2,\n  oops\n}") {
            Err(IoError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn coefficient_orientation() {
        let text = with(|v| v["nonlinearity"]["coefficient"] = json!([[1.0, 2.0], [3.0, 4.0]]));
        let f = parse_problem(&text).unwrap();
        // node (i, j) = (2, 1) is flattened index 1 and carries table[1][0]
        assert_eq!(
            f.instance.nonlinearity().coefficient().unwrap(),
            &[1.0, 3.0, 2.0, 4.0]
        );
        let base = f.instance.eval_F(2, 1, 0.5).unwrap();
        assert!((base - 3.0 * (0.25 - 0.0625 / 4.0)).abs() < 1e-15);
    }

    #[test]
    fn problem_round_trip() {
        let texts = [
            UNIT.to_string(),
            with(|v| {
                v["nonlinearity"] = json!({
                    "kind": "tabulated",
                    "params": {"knots": [-1.0, 0.0, 2.0], "values": [[[1, 0, 2], [0, 0, 1]], [[3, 0, 1], [1, 1, 1]]]},
                    "coefficient": [[1.0, 2.0], [3.0, 4.0]],
                    "primitive_mode": "quadrature"
                });
                v["hypotheses"] = json!({"c": 0.5, "alpha_table": [[1, 2], [3, 4]], "A": 2});
            }),
            with(|v| {
                v["nonlinearity"] = json!({"kind": "power", "params": {"s": 1.5, "gamma": 1.5}})
            }),
        ];
        for t in texts {
            let f = parse_problem(&t).unwrap();
            let again = parse_problem(&problem_to_value(&f).to_string()).unwrap();
            assert_eq!(f, again);
        }
    }

    #[test]
    fn floats_use_seventeen_digits() {
        let s = to_json_string(&vec![0.1, 1.0 / 3.0, -2.5e-300]);
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![0.1, 1.0 / 3.0, -2.5e-300]);
    }

    #[test]
    fn report_envelope_round_trip() {
        let f = parse_problem(UNIT).unwrap();
        let s = eigen_extremes(&assemble_m(f.instance.grid())).unwrap();
        let text = emit_report("spectrum", &s);
        assert!(text.contains("\"schema_version\": \"1\""));
        let back: ReportFile<crate::spectral::SpectrumSummary> = parse_report(&text).unwrap();
        assert_eq!(back.body, s);
        assert_eq!(back.report_type, "spectrum");
        assert!(parse_report::<Value>("{\"schema_version\": \"2\"}").is_err());
    }

    #[test]
    fn csv_matrix() {
        let f = parse_problem(UNIT).unwrap();
        let csv = matrix_to_csv(&assemble_m(f.instance.grid()));
        let first: Vec<f64> = csv
            .lines()
            .next()
            .unwrap()
            .split(',')
            .map(|c| c.parse().unwrap())
            .collect();
        assert_eq!(first, vec![2.0, -1.0, -1.0, 0.0]);
        assert_eq!(csv.lines().count(), 4);
    }
}
