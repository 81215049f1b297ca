//! Plain-text instance archive.
//!
//! ```text
//! gradcomp-instance v1 lqr
//! seed 7
//! A 4 4
//! 1.2345678901234567e0 ...
//! ```
//!
//! The optional `seed` line is followed by named matrices, each a
//! `name rows cols` line and then `rows` lines of `cols` floats written with 17
//! significant digits, which round-trips every `f64` exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::lqrenv::{LqrInstance, Perturbation};
use crate::matlin::Matrix;
use crate::quadbench::QuadraticInstance;

pub const HEADER: &str = "gradcomp-instance v1";

#[derive(Clone, Debug, PartialEq)]
pub enum Instance {
    Quad(QuadraticInstance),
    Lqr(LqrInstance),
}

impl Instance {
    pub fn kind(&self) -> &'static str {
        match self {
            Instance::Quad(_) => "quad",
            Instance::Lqr(_) => "lqr",
        }
    }
}

fn scalar(v: f64) -> Matrix {
    Matrix::from_diag(&[v])
}

fn write_matrix(out: &mut String, name: &str, m: &Matrix) {
    let _ = writeln!(out, "{name} {} {}", m.rows(), m.cols());
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:.16e}")).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
}

/// Serializes an instance; `seed` is recorded when known.
pub fn instance_to_string(inst: &Instance, seed: Option<u64>) -> String {
    let mut out = format!("{HEADER} {}\n", inst.kind());
    if let Some(s) = seed {
        let _ = writeln!(out, "seed {s}");
    }
    match inst {
        Instance::Quad(q) => {
            write_matrix(&mut out, "P", &q.p);
            write_matrix(&mut out, "Q", &q.q);
            write_matrix(&mut out, "c1", &scalar(q.c1));
            write_matrix(&mut out, "c2", &scalar(q.c2));
            write_matrix(&mut out, "c3", &Matrix::column(&q.c3));
        }
        Instance::Lqr(l) => {
            write_matrix(&mut out, "A", &l.a);
            write_matrix(&mut out, "B", &l.b);
            write_matrix(&mut out, "Qc", &l.qc);
            write_matrix(&mut out, "Rc", &l.rc);
            write_matrix(&mut out, "ell", &scalar(l.ell));
            write_matrix(&mut out, "horizon", &scalar(l.horizon as f64));
            write_matrix(&mut out, "sampling_radius", &scalar(l.sampling_radius));
            let flat: Vec<f64> = l.initial_states.iter().flatten().copied().collect();
            let x0 = Matrix::from_row_major(l.initial_states.len(), l.n, flat).unwrap_or_else(|_| Matrix::zeros(0, l.n));
            write_matrix(&mut out, "initial_states", &x0);
            write_matrix(&mut out, "K_hat_star", &l.k_hat_star);
            if let Some(k) = &l.k_star_ref {
                write_matrix(&mut out, "K_star_ref", k);
            }
        }
    }
    out
}

pub fn save_instance(path: &Path, inst: &Instance, seed: Option<u64>) -> Result<()> {
    std::fs::write(path, instance_to_string(inst, seed))?;
    Ok(())
}

struct Parsed {
    seed: Option<u64>,
    matrices: Vec<(String, Matrix)>,
    lines: usize,
}

impl Parsed {
    fn get(&self, name: &str) -> Result<&Matrix> {
        self.matrices
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
            .ok_or_else(|| Error::Parse {
                line: self.lines + 1,
                message: format!("missing matrix `{name}`"),
            })
    }

    fn scalar(&self, name: &str) -> Result<f64> {
        let m = self.get(name)?;
        if m.rows() != 1 || m.cols() != 1 {
            return Err(Error::Parse {
                line: self.lines + 1,
                message: format!("`{name}` must be 1x1"),
            });
        }
        Ok(m[(0, 0)])
    }
}

fn parse_body(text: &str) -> Result<(String, Parsed)> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty file".into(),
    })?;
    let kind = header
        .strip_prefix(HEADER)
        .map(str::trim)
        .filter(|k| !k.is_empty())
        .ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("expected `{HEADER} <kind>`"),
        })?
        .to_string();
    let mut parsed = Parsed {
        seed: None,
        matrices: Vec::new(),
        lines: text.lines().count(),
    };
    while let Some((no, line)) = lines.next() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields[0] == "seed" && fields.len() == 2 {
            parsed.seed = Some(fields[1].parse().map_err(|_| Error::Parse {
                line: no,
                message: format!("bad seed {:?}", fields[1]),
            })?);
            continue;
        }
        let [name, rows, cols] = fields[..] else {
            return Err(Error::Parse {
                line: no,
                message: format!("expected `name rows cols`, got {line:?}"),
            });
        };
        let dim = |s: &str| {
            s.parse::<usize>().map_err(|_| Error::Parse {
                line: no,
                message: format!("bad dimension {s:?}"),
            })
        };
        let (rows, cols) = (dim(rows)?, dim(cols)?);
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (row_no, row) = lines.next().ok_or_else(|| Error::Parse {
                line: parsed.lines + 1,
                message: format!("matrix `{name}` is truncated"),
            })?;
            let before = data.len();
            for tok in row.split_whitespace() {
                data.push(tok.parse::<f64>().map_err(|_| Error::Parse {
                    line: row_no,
                    message: format!("bad number {tok:?} in `{name}`"),
                })?);
            }
            if data.len() - before != cols {
                return Err(Error::Parse {
                    line: row_no,
                    message: format!("`{name}` row has {} entries, expected {cols}", data.len() - before),
                });
            }
        }
        let m = Matrix::from_row_major(rows, cols, data).map_err(|e| Error::Parse {
            line: no,
            message: e.to_string(),
        })?;
        parsed.matrices.push((name.to_string(), m));
    }
    Ok((kind, parsed))
}

/// Parses an archive, returning the instance and its recorded seed.
pub fn instance_from_str(text: &str) -> Result<(Instance, Option<u64>)> {
    let (kind, parsed) = parse_body(text)?;
    let inst = match kind.as_str() {
        "quad" => {
            let c3 = parsed.get("c3")?.as_slice().to_vec();
            Instance::Quad(QuadraticInstance::from_parts(
                parsed.get("P")?.clone(),
                parsed.get("Q")?.clone(),
                parsed.scalar("c1")?,
                parsed.scalar("c2")?,
                c3,
            )?)
        }
        "lqr" => {
            let a = parsed.get("A")?.clone();
            let b = parsed.get("B")?.clone();
            let x0 = parsed.get("initial_states")?;
            let ell = parsed.scalar("ell")?;
            let horizon = parsed.scalar("horizon")?;
            if !(horizon >= 1.0 && horizon.fract() == 0.0) {
                return Err(Error::Parse {
                    line: parsed.lines,
                    message: format!("horizon must be a positive integer, got {horizon}"),
                });
            }
            let k_hat_star = parsed.get("K_hat_star")?.clone();
            let (n, p) = (a.rows(), b.cols());
            if x0.cols() != n || k_hat_star.rows() != p || k_hat_star.cols() != n {
                return Err(Error::Parse {
                    line: parsed.lines,
                    message: "matrix shapes disagree".into(),
                });
            }
            Instance::Lqr(LqrInstance {
                n,
                p,
                a,
                b,
                qc: parsed.get("Qc")?.clone(),
                rc: parsed.get("Rc")?.clone(),
                h: Perturbation::ScaledSineRational { ell },
                ell,
                horizon: horizon as usize,
                sampling_radius: parsed.scalar("sampling_radius")?,
                initial_states: (0..x0.rows()).map(|i| x0.row(i).to_vec()).collect(),
                k_hat_star,
                k_star_ref: parsed.get("K_star_ref").ok().cloned(),
            })
        }
        other => {
            return Err(Error::Parse {
                line: 1,
                message: format!("unknown instance kind {other:?}"),
            })
        }
    };
    Ok((inst, parsed.seed))
}

pub fn load_instance(path: &Path) -> Result<(Instance, Option<u64>)> {
    instance_from_str(&std::fs::read_to_string(path)?)
}
