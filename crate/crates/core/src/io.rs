//! On-disk formats: matrix and vector CSV, sparse vectors, problem bundles,
//! solver traces and results.
//!
//! All indices in files are 1-based.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ColumnScaling, DenseMatrix};
use crate::model::{GeneratorSpec, Problem, SparseVector, Support, Truth};
use crate::solvers::{NewSupport, SolverResult, Trace};

/// Shortest text that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("line {line}: bad number {:?}", tok.trim())))
}

fn parse_usize(tok: &str, line: usize) -> Result<usize> {
    tok.trim()
        .parse::<usize>()
        .map_err(|_| Error::Parse(format!("line {line}: bad count {:?}", tok.trim())))
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty())
}

fn header_pair(it: &mut dyn Iterator<Item = (usize, &str)>, what: &str) -> Result<(usize, usize)> {
    let (ln, h) = it.next().ok_or_else(|| Error::Parse(format!("{what}: missing header")))?;
    let mut parts = h.split(',');
    let a = parse_usize(parts.next().unwrap_or(""), ln)?;
    let b = parse_usize(parts.next().ok_or_else(|| Error::Parse(format!("line {ln}: header needs two fields")))?, ln)?;
    if parts.next().is_some() {
        return Err(Error::Parse(format!("line {ln}: header needs two fields")));
    }
    Ok((a, b))
}

pub fn matrix_to_csv(a: &DenseMatrix) -> String {
    let mut s = format!("{},{}\n", a.rows(), a.cols());
    for i in 0..a.rows() {
        let row: Vec<String> = (0..a.cols()).map(|j| fmt_f64(a.get(i, j))).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn matrix_from_csv(text: &str) -> Result<DenseMatrix> {
    let mut it = data_lines(text);
    let (m, n) = header_pair(&mut it, "matrix")?;
    let mut vals = Vec::with_capacity(m * n);
    let mut rows = 0;
    for (ln, line) in it {
        let row = line.split(',').map(|t| parse_f64(t, ln)).collect::<Result<Vec<_>>>()?;
        if row.len() != n {
            return Err(Error::Parse(format!("line {ln}: expected {n} entries, found {}", row.len())));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse(format!("line {ln}: non-finite entry")));
        }
        vals.extend(row);
        rows += 1;
    }
    if rows != m {
        return Err(Error::Parse(format!("expected {m} rows, found {rows}")));
    }
    DenseMatrix::from_row_major(m, n, &vals)
}

pub fn vector_to_csv(v: &[f64]) -> String {
    let mut s = String::with_capacity(v.len() * 20);
    for x in v {
        s.push_str(&fmt_f64(*x));
        s.push('\n');
    }
    s
}

pub fn vector_from_csv(text: &str) -> Result<Vec<f64>> {
    data_lines(text).map(|(ln, l)| parse_f64(l, ln)).collect()
}

pub fn sparse_to_csv(x: &SparseVector) -> String {
    let mut s = format!("{},{}\n", x.n, x.support.len());
    for (i, v) in x.support.iter().zip(&x.values) {
        let _ = writeln!(s, "{},{}", i + 1, fmt_f64(*v));
    }
    s
}

pub fn sparse_from_csv(text: &str) -> Result<SparseVector> {
    let mut it = data_lines(text);
    let (n, k) = header_pair(&mut it, "sparse vector")?;
    let mut pairs = Vec::with_capacity(k);
    for (ln, line) in it {
        let (i, v) = line
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("line {ln}: expected index,value")))?;
        let i = parse_usize(i, ln)?;
        if i == 0 || i > n {
            return Err(Error::Parse(format!("line {ln}: index {i} outside 1..={n}")));
        }
        pairs.push((i - 1, parse_f64(v, ln)?));
    }
    if pairs.len() != k {
        return Err(Error::Parse(format!("header announces {k} entries, found {}", pairs.len())));
    }
    pairs.sort_by_key(|p| p.0);
    if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::Parse("duplicate index".into()));
    }
    SparseVector::new(n, Support::new(pairs.iter().map(|p| p.0).collect()), pairs.iter().map(|p| p.1).collect())
}

/// `meta.json` of a problem bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemMeta {
    pub k: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub spec: Option<GeneratorSpec>,
    /// File holding `x*` in sparse format, relative to the bundle.
    #[serde(default)]
    pub x_star: Option<String>,
    /// File holding the observation-space noise, relative to the bundle.
    #[serde(default)]
    pub noise: Option<String>,
    /// File holding the original column norms, relative to the bundle.
    #[serde(default)]
    pub scaling: Option<String>,
}

/// Writes `A.csv`, `y.csv`, `meta.json` and, when present, the truth files.
pub fn write_problem(dir: &Path, p: &Problem) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("A.csv"), matrix_to_csv(&p.a))?;
    fs::write(dir.join("y.csv"), vector_to_csv(&p.y))?;
    let mut meta = ProblemMeta {
        k: p.k,
        seed: p.spec.as_ref().map(|s| s.seed),
        spec: p.spec.clone(),
        x_star: None,
        noise: None,
        scaling: None,
    };
    if let Some(t) = &p.truth {
        fs::write(dir.join("x_star.csv"), sparse_to_csv(&t.x_star))?;
        fs::write(dir.join("e.csv"), vector_to_csv(&t.noise))?;
        meta.x_star = Some("x_star.csv".into());
        meta.noise = Some("e.csv".into());
    }
    if let Some(s) = &p.scaling {
        fs::write(dir.join("scaling.csv"), vector_to_csv(&s.0))?;
        meta.scaling = Some("scaling.csv".into());
    }
    fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}

pub fn read_problem(dir: &Path) -> Result<Problem> {
    let read = |name: &str| -> Result<String> {
        fs::read_to_string(dir.join(name))
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", dir.join(name).display())))
    };
    let meta: ProblemMeta = serde_json::from_str(&read("meta.json")?)
        .map_err(|e| Error::Config(format!("meta.json: {e}")))?;
    let a = matrix_from_csv(&read("A.csv")?)?;
    let y = vector_from_csv(&read("y.csv")?)?;
    let mut p = Problem::new(Arc::new(a), y, meta.k)?;
    match (&meta.x_star, &meta.noise) {
        (Some(xf), nf) => {
            let x_star = sparse_from_csv(&read(xf)?)?;
            if x_star.n != p.n() {
                return Err(Error::DimensionMismatch("x_star dimension differs from A".into()));
            }
            let noise = match nf {
                Some(f) => vector_from_csv(&read(f)?)?,
                None => {
                    let z = p.a.matvec_restricted(x_star.support.indices(), &x_star.values);
                    p.y.iter().zip(&z).map(|(y, z)| y - z).collect()
                }
            };
            if noise.len() != p.m() {
                return Err(Error::DimensionMismatch("noise length differs from m".into()));
            }
            p.truth = Some(Truth { x_star, noise });
        }
        (None, Some(_)) => return Err(Error::Config("meta.json lists noise without x_star".into())),
        (None, None) => {}
    }
    if let Some(f) = &meta.scaling {
        p.scaling = Some(ColumnScaling(vector_from_csv(&read(f)?)?));
    }
    p.spec = meta.spec;
    Ok(p)
}

/// `t,loss,new_support_flag,support` with `;`-joined 1-based supports.
pub fn trace_to_csv(trace: &Trace) -> String {
    let mut s = String::from("t,loss,new_support_flag,support\n");
    for t in 0..trace.len() {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            t,
            fmt_f64(trace.per_iteration_loss[t]),
            u8::from(trace.new_support_flags[t]),
            trace.support_sequence[t].to_one_based_string()
        );
    }
    s
}

/// Parses a trace CSV; fits and exploration vectors are left empty.
pub fn trace_from_csv(text: &str) -> Result<Trace> {
    let mut it = data_lines(text);
    let (_, header) = it.next().ok_or_else(|| Error::Parse("trace: missing header".into()))?;
    if header.replace(' ', "") != "t,loss,new_support_flag,support" {
        return Err(Error::Parse(format!("trace: unexpected header {header:?}")));
    }
    let mut tr = Trace::default();
    for (ln, line) in it {
        let f: Vec<&str> = line.splitn(4, ',').collect();
        if f.len() != 4 {
            return Err(Error::Parse(format!("line {ln}: expected 4 fields")));
        }
        let t = parse_usize(f[0], ln)?;
        if t != tr.len() {
            return Err(Error::Parse(format!("line {ln}: iterations must be consecutive from 0")));
        }
        let loss = parse_f64(f[1], ln)?;
        let flag = match f[2].trim() {
            "1" | "true" => true,
            "0" | "false" => false,
            other => return Err(Error::Parse(format!("line {ln}: bad flag {other:?}"))),
        };
        let support = Support::parse_one_based(f[3])?;
        tr.per_iteration_loss.push(loss);
        tr.new_support_flags.push(flag);
        if flag {
            tr.per_new_support.push(NewSupport { t, support: support.clone(), loss });
        }
        tr.support_sequence.push(support);
    }
    Ok(tr)
}

/// `result.json` written by `solve`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub algorithm: String,
    pub n: usize,
    pub k: usize,
    pub eta: f64,
    /// 1-based indices.
    pub support_best: Vec<usize>,
    pub values_best: Vec<f64>,
    pub t_best: usize,
    pub loss_best: f64,
    pub support_final: Vec<usize>,
    pub values_final: Vec<f64>,
    pub loss_final: f64,
    pub iterations_run: usize,
    pub supports_explored: usize,
    pub supports_after_init: usize,
    pub ls_solves: usize,
    pub halted_early: bool,
    pub capped: bool,
}

impl ResultFile {
    pub fn from_result(r: &SolverResult, k: usize) -> Self {
        let one = |s: &Support| s.iter().map(|i| i + 1).collect();
        Self {
            algorithm: r.algorithm.clone(),
            n: r.x_best.n,
            k,
            eta: r.eta,
            support_best: one(&r.x_best.support),
            values_best: r.x_best.values.clone(),
            t_best: r.t_best,
            loss_best: r.loss_best,
            support_final: one(&r.x_final.support),
            values_final: r.x_final.values.clone(),
            loss_final: r.loss_final,
            iterations_run: r.iterations_run,
            supports_explored: r.supports_explored,
            supports_after_init: r.supports_after_init,
            ls_solves: r.ls_solves,
            halted_early: r.halted_early,
            capped: r.capped,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_problem, GeneratorSpec, NoiseMode};

    #[test]
    fn number_format_round_trips() {
        for v in [0.0, -0.0, 1.0, 0.1, -3.25e-9, 1e-300, 6.02e23, 1.0 / 3.0, 12345.678] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits(), "{v}");
        }
    }

    #[test]
    fn matrix_round_trip_and_errors() {
        let a = DenseMatrix::from_row_major(2, 3, &[1.0, -2.5, 3e-7, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(matrix_from_csv(&matrix_to_csv(&a)).unwrap(), a);
        assert!(matrix_from_csv("2,2\n1,2\n").is_err());
        assert!(matrix_from_csv("1,2\n1,x\n").is_err());
    }

    #[test]
    fn sparse_round_trip() {
        let x = SparseVector::new(9, Support::new(vec![0, 8]), vec![1.5, -2.0]).unwrap();
        let s = sparse_to_csv(&x);
        assert!(s.starts_with("9,2\n1,1.5\n9,-2\n"));
        assert_eq!(sparse_from_csv(&s).unwrap(), x);
        assert!(sparse_from_csv("3,1\n0,1\n").is_err());
        assert!(sparse_from_csv("3,2\n1,1\n").is_err());
    }

    #[test]
    fn bundle_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = build_problem(&GeneratorSpec::gaussian(6, 8, 2, 3).with_noise(0.1, NoiseMode::AfterA)).unwrap();
        write_problem(dir.path(), &p).unwrap();
        let q = read_problem(dir.path()).unwrap();
        assert_eq!(*q.a, *p.a);
        assert_eq!(q.y, p.y);
        assert_eq!(q.truth, p.truth);
        assert_eq!(q.spec, p.spec);
    }

    #[test]
    fn trace_round_trip() {
        let mut tr = Trace::default();
        for (t, (s, f)) in [(vec![2usize, 0], true), (vec![1], true), (vec![2, 0], false)].into_iter().enumerate() {
            tr.per_iteration_loss.push(t as f64 * 0.5);
            tr.new_support_flags.push(f);
            tr.support_sequence.push(Support::new(s));
        }
        let csv = trace_to_csv(&tr);
        assert!(csv.contains("0,0,1,1;3\n"));
        let back = trace_from_csv(&csv).unwrap();
        assert_eq!(back.support_sequence, tr.support_sequence);
        assert_eq!(back.per_new_support.len(), 2);
    }
}
