//! Text formats: systems, points, matrix transforms, certificates, contours.
//!
//! Numeric literals in the input formats may be JSON numbers (taken as exact
//! binary doubles), decimal strings, or rational strings "p/q". Decimal and
//! rational literals become exact balls when representable in an f64 and
//! tight outward enclosures otherwise.

use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::ball::BallC;
use crate::certify::{Certificate, CertificateMode};
use crate::cmatrix::BallMatrix;
use crate::error::{Error, Result};
use crate::irregular::MatrixTransform;
use crate::poly::{Exponent, PolySystem, Polynomial};
use crate::preinflate::TransformLog;
use crate::region::Polyline;

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

/// Parse a real literal into (midpoint, radius).
fn parse_real_literal(v: &Value) -> Result<(f64, f64)> {
    match v {
        Value::Number(x) => {
            let f = x.as_f64().ok_or_else(|| parse_err("number out of range"))?;
            Ok((f, 0.0))
        }
        Value::String(s) => parse_real_str(s),
        other => Err(parse_err(format!("expected a numeric literal, got {other}"))),
    }
}

fn parse_real_str(s: &str) -> Result<(f64, f64)> {
    let s = s.trim();
    let rational = if let Some((p, q)) = s.split_once('/') {
        let num = BigInt::from_str(p.trim()).map_err(|e| parse_err(format!("bad numerator: {e}")))?;
        let den = BigInt::from_str(q.trim()).map_err(|e| parse_err(format!("bad denominator: {e}")))?;
        if den.is_zero() {
            return Err(parse_err("zero denominator"));
        }
        BigRational::new(num, den)
    } else {
        decimal_to_rational(s)?
    };
    Ok(rational_to_ball(&rational))
}

fn decimal_to_rational(s: &str) -> Result<BigRational> {
    // [sign] digits [. digits] [e exp]
    let (mantissa, exp10) = match s.to_ascii_lowercase().split_once('e') {
        Some((m, e)) => (
            m.to_string(),
            i64::from_str(e).map_err(|e| parse_err(format!("bad exponent: {e}")))?,
        ),
        None => (s.to_string(), 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((a, b)) => (a.to_string(), b.to_string()),
        None => (mantissa, String::new()),
    };
    let digits = format!("{int_part}{frac_part}");
    if digits.is_empty() || digits == "-" || digits == "+" {
        return Err(parse_err(format!("empty numeric literal '{s}'")));
    }
    let num = BigInt::from_str(&digits).map_err(|e| parse_err(format!("bad literal '{s}': {e}")))?;
    let shift = frac_part.len() as i64 - exp10;
    let rational = if shift >= 0 {
        BigRational::new(num, BigInt::from(10u32).pow(shift as u32))
    } else {
        BigRational::from(num * BigInt::from(10u32).pow((-shift) as u32))
    };
    Ok(rational)
}

fn rational_to_ball(r: &BigRational) -> (f64, f64) {
    let mid = r.to_f64().unwrap_or(f64::NAN);
    if !mid.is_finite() {
        return (mid, 0.0);
    }
    // exactness test: does the f64 round-trip to the same rational?
    let back = BigRational::from_float(mid);
    match back {
        Some(b) if &b == r => (mid, 0.0),
        _ => {
            let diff = (r - BigRational::from_float(mid).unwrap()).abs();
            let rad = diff.to_f64().unwrap_or(f64::INFINITY);
            // one ulp of slack over the conversion of the difference itself
            ((mid), (rad.max(f64::MIN_POSITIVE)).next_up().next_up())
        }
    }
}

fn ball_from_value(re: &Value, im: &Value) -> Result<BallC> {
    let (mre, rre) = parse_real_literal(re)?;
    let (mim, rim) = parse_real_literal(im)?;
    let rad = (rre + rim).next_up();
    let rad = if rre == 0.0 && rim == 0.0 { 0.0 } else { rad };
    Ok(BallC::new(mre, mim, rad))
}

fn poly_from_value(n: usize, v: &Value) -> Result<Polynomial> {
    let terms = v
        .as_array()
        .ok_or_else(|| parse_err("polynomial must be a list of terms"))?;
    let mut p = Polynomial::zero(n);
    for t in terms {
        let parts = t
            .as_array()
            .ok_or_else(|| parse_err("term must be [[exponents], re, im]"))?;
        if parts.len() != 3 {
            return Err(parse_err("term must have exactly three fields"));
        }
        let exps = parts[0]
            .as_array()
            .ok_or_else(|| parse_err("exponents must be a list"))?;
        if exps.len() != n {
            return Err(parse_err(format!(
                "exponent vector length {} does not match n = {n}",
                exps.len()
            )));
        }
        let e = Exponent(
            exps.iter()
                .map(|x| {
                    x.as_u64()
                        .map(|u| u as u32)
                        .ok_or_else(|| parse_err("exponents must be non-negative integers"))
                })
                .collect::<Result<Vec<u32>>>()?,
        );
        p.add_term(e, ball_from_value(&parts[1], &parts[2])?);
    }
    Ok(p)
}

fn poly_to_value(p: &Polynomial) -> Value {
    Value::Array(
        p.terms()
            .map(|(e, c)| {
                json!([
                    e.0.clone(),
                    c.re,
                    c.im,
                ])
            })
            .collect(),
    )
}

/// Parse a system document: {"n": int, "polys": [[term, ...], ...]}.
pub fn system_from_json(text: &str) -> Result<PolySystem> {
    let v: Value = serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    let n = v["n"]
        .as_u64()
        .ok_or_else(|| parse_err("missing integer field 'n'"))? as usize;
    let polys = v["polys"]
        .as_array()
        .ok_or_else(|| parse_err("missing list field 'polys'"))?
        .iter()
        .map(|pv| poly_from_value(n, pv))
        .collect::<Result<Vec<_>>>()?;
    Ok(PolySystem::new(n, polys))
}

pub fn system_to_json(s: &PolySystem) -> String {
    let v = json!({
        "n": s.n,
        "polys": s.polys.iter().map(poly_to_value).collect::<Vec<_>>(),
    });
    serde_json::to_string_pretty(&v).expect("serialization cannot fail")
}

/// Parse a point document: {"z": [[re, im], ...]}.
pub fn point_from_json(text: &str) -> Result<Vec<BallC>> {
    let v: Value = serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    v["z"]
        .as_array()
        .ok_or_else(|| parse_err("missing list field 'z'"))?
        .iter()
        .map(|c| {
            let pair = c
                .as_array()
                .filter(|a| a.len() == 2)
                .ok_or_else(|| parse_err("coordinates must be [re, im] pairs"))?;
            ball_from_value(&pair[0], &pair[1])
        })
        .collect()
}

pub fn point_to_json(z: &[BallC]) -> String {
    let v = json!({
        "z": z.iter().map(|c| json!([c.re, c.im])).collect::<Vec<_>>(),
    });
    serde_json::to_string_pretty(&v).expect("serialization cannot fail")
}

/// Parse a matrix transform: {"n": vars, "rows": r, "cols": c, "entries": [[poly, ...], ...]}.
pub fn transform_from_json(text: &str) -> Result<MatrixTransform> {
    let v: Value = serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    let n = v["n"]
        .as_u64()
        .ok_or_else(|| parse_err("missing integer field 'n'"))? as usize;
    let entries = v["entries"]
        .as_array()
        .ok_or_else(|| parse_err("missing list field 'entries'"))?
        .iter()
        .map(|row| {
            row.as_array()
                .ok_or_else(|| parse_err("entries must be a matrix"))?
                .iter()
                .map(|pv| poly_from_value(n, pv))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    MatrixTransform::new(entries)
}

pub fn transform_to_json(t: &MatrixTransform, n: usize) -> String {
    let v = json!({
        "n": n,
        "rows": t.nrows(),
        "cols": t.ncols(),
        "entries": t
            .entries
            .iter()
            .map(|row| row.iter().map(poly_to_value).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
    });
    serde_json::to_string_pretty(&v).expect("serialization cannot fail")
}

fn ball_to_value(c: &BallC) -> Value {
    json!([c.re, c.im, c.rad])
}

fn ball_from_triple(v: &Value) -> Result<BallC> {
    let a = v
        .as_array()
        .filter(|a| a.len() == 3)
        .ok_or_else(|| parse_err("ball must be [re, im, rad]"))?;
    let f = |x: &Value| x.as_f64().ok_or_else(|| parse_err("ball fields must be numbers"));
    Ok(BallC::new(f(&a[0])?, f(&a[1])?, f(&a[2])?))
}

fn matrix_to_value(m: &BallMatrix) -> Value {
    Value::Array(
        (0..m.nrows)
            .map(|i| Value::Array(m.row(i).iter().map(ball_to_value).collect()))
            .collect(),
    )
}

fn matrix_from_value(v: &Value) -> Result<BallMatrix> {
    let rows = v
        .as_array()
        .ok_or_else(|| parse_err("matrix must be a list of rows"))?
        .iter()
        .map(|row| {
            row.as_array()
                .ok_or_else(|| parse_err("matrix row must be a list"))?
                .iter()
                .map(ball_from_triple)
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BallMatrix::from_rows(rows))
}

/// Polynomial with ball coefficients, as a list of [exps, re, im, rad].
fn poly_to_value_with_rad(p: &Polynomial) -> Value {
    Value::Array(
        p.terms()
            .map(|(e, c)| json!([e.0.clone(), c.re, c.im, c.rad]))
            .collect(),
    )
}

fn poly_from_value_with_rad(n: usize, v: &Value) -> Result<Polynomial> {
    let terms = v
        .as_array()
        .ok_or_else(|| parse_err("polynomial must be a list of terms"))?;
    let mut p = Polynomial::zero(n);
    for t in terms {
        let parts = t
            .as_array()
            .filter(|a| a.len() == 4)
            .ok_or_else(|| parse_err("logged term must be [[exps], re, im, rad]"))?;
        let exps = parts[0]
            .as_array()
            .ok_or_else(|| parse_err("exponents must be a list"))?
            .iter()
            .map(|x| x.as_u64().map(|u| u as u32).ok_or_else(|| parse_err("bad exponent")))
            .collect::<Result<Vec<u32>>>()?;
        let f = |x: &Value| x.as_f64().ok_or_else(|| parse_err("bad coefficient field"));
        p.add_term(
            Exponent(exps),
            BallC::new(f(&parts[1])?, f(&parts[2])?, f(&parts[3])?),
        );
    }
    Ok(p)
}

pub fn transform_log_to_value(log: &TransformLog) -> Value {
    let n = log.weights.len();
    json!({
        "n": n,
        "amat": matrix_to_value(&log.amat),
        "shift": log.shift.iter().map(ball_to_value).collect::<Vec<_>>(),
        "bmat": matrix_to_value(&log.bmat),
        "cmat": log.cmat.iter().map(|row| {
            Value::Array(row.iter().map(poly_to_value_with_rad).collect())
        }).collect::<Vec<_>>(),
        "var_subs": log.var_subs.iter().map(|(i, q)| {
            json!({"var": i, "poly": poly_to_value_with_rad(q)})
        }).collect::<Vec<_>>(),
        "weights": log.weights,
        "kappa": log.kappa,
        "k": log.k,
        "ell": log.ell,
    })
}

pub fn transform_log_from_value(lv: &Value) -> Result<TransformLog> {
    let n = lv["n"].as_u64().ok_or_else(|| parse_err("missing log.n"))? as usize;
    let amat = matrix_from_value(&lv["amat"])?;
    let bmat = matrix_from_value(&lv["bmat"])?;
    let shift = lv["shift"]
        .as_array()
        .ok_or_else(|| parse_err("missing log.shift"))?
        .iter()
        .map(ball_from_triple)
        .collect::<Result<Vec<_>>>()?;
    let cmat = lv["cmat"]
        .as_array()
        .ok_or_else(|| parse_err("missing log.cmat"))?
        .iter()
        .map(|row| {
            row.as_array()
                .ok_or_else(|| parse_err("cmat row must be a list"))?
                .iter()
                .map(|pv| poly_from_value_with_rad(n, pv))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let var_subs = lv["var_subs"]
        .as_array()
        .ok_or_else(|| parse_err("missing log.var_subs"))?
        .iter()
        .map(|sv| {
            let i = sv["var"].as_u64().ok_or_else(|| parse_err("missing var"))? as usize;
            let q = poly_from_value_with_rad(n, &sv["poly"])?;
            Ok((i, q))
        })
        .collect::<Result<Vec<_>>>()?;
    let weights = lv["weights"]
        .as_array()
        .ok_or_else(|| parse_err("missing log.weights"))?
        .iter()
        .map(|x| x.as_u64().map(|u| u as u32).ok_or_else(|| parse_err("bad weight")))
        .collect::<Result<Vec<u32>>>()?;
    Ok(TransformLog {
        amat,
        shift,
        bmat,
        cmat,
        var_subs,
        weights,
        kappa: lv["kappa"].as_u64().ok_or_else(|| parse_err("missing log.kappa"))? as usize,
        k: lv["k"].as_u64().ok_or_else(|| parse_err("missing log.k"))? as u32,
        ell: lv["ell"].as_u64().ok_or_else(|| parse_err("missing log.ell"))? as u32,
    })
}

pub fn transform_log_to_json(log: &TransformLog) -> String {
    serde_json::to_string_pretty(&transform_log_to_value(log)).expect("serialization cannot fail")
}

pub fn transform_log_from_json(text: &str) -> Result<TransformLog> {
    let v: Value = serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    transform_log_from_value(&v)
}

pub fn certificate_to_json(c: &Certificate) -> String {
    let v = json!({
        "mode": match c.mode {
            CertificateMode::Singular => "singular",
            CertificateMode::Cluster => "cluster",
            CertificateMode::Bound => "bound",
        },
        "kappa": c.kappa,
        "d": c.d,
        "m": c.m,
        "m1": c.m1,
        "m2": c.m2,
        "eps_minus": c.eps_minus,
        "eps_plus": c.eps_plus,
        "inflated_count": c.inflated_count,
        "cluster_count": c.cluster_count,
        "count_is_upper_bound": c.count_is_upper_bound,
        "strategy": c.strategy_used.to_string(),
        "valid": c.valid,
        "reason": c.reason,
        "log": transform_log_to_value(&c.log),
    });
    serde_json::to_string_pretty(&v).expect("serialization cannot fail")
}

pub fn certificate_from_json(text: &str) -> Result<Certificate> {
    let v: Value = serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    let log = transform_log_from_value(&v["log"])?;
    let mode = match v["mode"].as_str() {
        Some("singular") => CertificateMode::Singular,
        Some("cluster") => CertificateMode::Cluster,
        Some("bound") => CertificateMode::Bound,
        other => return Err(parse_err(format!("unknown mode {other:?}"))),
    };
    let strategy = match v["strategy"].as_str() {
        Some("diag") => crate::bounds::Strategy::DominantDiagonal,
        Some("subdiv") => crate::bounds::Strategy::Subdivision,
        _ => crate::bounds::Strategy::Auto,
    };
    let f = |key: &str| -> Result<f64> {
        v[key]
            .as_f64()
            .ok_or_else(|| parse_err(format!("missing numeric field '{key}'")))
    };
    let u = |key: &str| -> Result<u64> {
        v[key]
            .as_u64()
            .ok_or_else(|| parse_err(format!("missing integer field '{key}'")))
    };
    Ok(Certificate {
        mode,
        kappa: u("kappa")? as usize,
        d: u("d")? as u32,
        m: f("m")?,
        m1: f("m1")?,
        m2: f("m2")?,
        eps_minus: f("eps_minus")?,
        eps_plus: f("eps_plus")?,
        inflated_count: u("inflated_count")?,
        cluster_count: u("cluster_count")?,
        count_is_upper_bound: v["count_is_upper_bound"].as_bool().unwrap_or(false),
        strategy_used: strategy,
        log,
        valid: v["valid"].as_bool().unwrap_or(false),
        reason: v["reason"].as_str().unwrap_or_default().to_string(),
    })
}

/// Contour CSV: a header comment naming the certificate, then
/// segment_id,x,y rows.
pub fn contours_to_csv(lines: &[Polyline], certificate_ref: &str) -> String {
    let mut out = String::new();
    out.push_str(&format!("# region contours; certificate: {certificate_ref}\n"));
    out.push_str("segment_id,x,y\n");
    for (id, line) in lines.iter().enumerate() {
        for (x, y) in line {
            out.push_str(&format!("{id},{x:.12},{y:.12}\n"));
        }
    }
    out
}
