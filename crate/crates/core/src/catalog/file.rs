use std::path::Path;

use nalgebra::DVector;
use serde_json::{Map, Value};

use super::{Chart, ChartMap, SetDescriptor, SmoothSet, SphericalGraph};
use crate::error::{Error, Result};
use crate::grassmann::Subspace;
use crate::poly::Polynomial;

/// Reads a JSON set-definition file.
pub fn load_set_file(path: &Path) -> Result<SetDescriptor> {
    let text = std::fs::read_to_string(path)?;
    parse_set(&text)
}

/// Parses a set definition. Errors name the offending field.
pub fn parse_set(text: &str) -> Result<SetDescriptor> {
    let doc: Value = serde_json::from_str(text)?;
    let obj = doc.as_object().ok_or_else(|| Error::invalid_set("<root>", "expected a JSON object"))?;
    let name = obj.get("name").and_then(Value::as_str).ok_or_else(|| Error::invalid_set("name", "missing or not a string"))?;
    let n = field(obj, "ambient_dim")?
        .as_u64()
        .filter(|&n| n >= 2)
        .ok_or_else(|| Error::invalid_set("ambient_dim", "expected an integer >= 2"))? as usize;
    let kind = field(obj, "kind")?.as_str().ok_or_else(|| Error::invalid_set("kind", "expected a string"))?;
    match kind {
        "linear" => {
            let rows = matrix(field(obj, "frame")?, "frame", n)?;
            let vectors: Vec<DVector<f64>> = rows.into_iter().map(DVector::from_vec).collect();
            let v = Subspace::span(n, &vectors).map_err(|e| Error::invalid_set("frame", e.to_string()))?;
            SetDescriptor::linear(name, v)
        }
        "conic_graph" => {
            let vertices = matrix(field(obj, "vertices")?, "vertices", n)?;
            let edges = edge_list(obj.get("edges").unwrap_or(&Value::Array(vec![])))?;
            let g = SphericalGraph::from_rows(&vertices, &edges).map_err(|e| match e {
                Error::InvalidGraph(m) => Error::invalid_set(graph_field(&m), m),
                other => other,
            })?;
            if g.ambient_dim() != n {
                return Err(Error::invalid_set("vertices", "vertex length differs from ambient_dim"));
            }
            Ok(SetDescriptor::conic(name, g))
        }
        "smooth" => {
            let implicit = match obj.get("polynomial") {
                None | Some(Value::Null) => None,
                Some(p) => Some(polynomial(p, n)?),
            };
            let charts_v = field(obj, "charts")?.as_array().ok_or_else(|| Error::invalid_set("charts", "expected an array"))?;
            let mut charts = Vec::with_capacity(charts_v.len());
            for (i, c) in charts_v.iter().enumerate() {
                charts.push(chart(c, i, n)?);
            }
            let dim = charts.first().map(Chart::dim).unwrap_or(0);
            let declared_chi = match obj.get("declared_chi") {
                None | Some(Value::Null) => None,
                Some(v) => Some(v.as_i64().ok_or_else(|| Error::invalid_set("declared_chi", "expected an integer or null"))?),
            };
            let compact = match obj.get("compact") {
                None => false,
                Some(v) => v.as_bool().ok_or_else(|| Error::invalid_set("compact", "expected a boolean"))?,
            };
            SetDescriptor::smooth(name, n, SmoothSet { dim, charts, implicit, declared_chi, compact })
        }
        other => Err(Error::invalid_set("kind", format!("unknown kind `{other}`"))),
    }
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| Error::invalid_set(key, "missing"))
}

fn graph_field(message: &str) -> &'static str {
    if message.starts_with("edges") {
        "edges"
    } else {
        "vertices"
    }
}

fn number(v: &Value, name: &str) -> Result<f64> {
    v.as_f64().filter(|x| x.is_finite()).ok_or_else(|| Error::invalid_set(name, format!("expected a finite number, got {v}")))
}

fn matrix(v: &Value, name: &str, n: usize) -> Result<Vec<Vec<f64>>> {
    let rows = v.as_array().ok_or_else(|| Error::invalid_set(name, "expected an array of vectors"))?;
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            let here = format!("{name}[{i}]");
            let row = row.as_array().ok_or_else(|| Error::invalid_set(&here, "expected an array"))?;
            if row.len() != n {
                return Err(Error::invalid_set(&here, format!("expected {n} entries, got {}", row.len())));
            }
            row.iter().map(|x| number(x, &here)).collect()
        })
        .collect()
}

fn edge_list(v: &Value) -> Result<Vec<(usize, usize)>> {
    let list = v.as_array().ok_or_else(|| Error::invalid_set("edges", "expected an array of index pairs"))?;
    list.iter()
        .enumerate()
        .map(|(i, e)| {
            let pair = e.as_array().filter(|p| p.len() == 2).and_then(|p| Some((p[0].as_u64()? as usize, p[1].as_u64()? as usize)));
            pair.ok_or_else(|| Error::invalid_set(format!("edges[{i}]"), "expected [i, j] with non-negative integers"))
        })
        .collect()
}

fn polynomial(v: &Value, n: usize) -> Result<Polynomial> {
    let obj = v.as_object().ok_or_else(|| Error::invalid_set("polynomial", "expected an object of exponent keys"))?;
    let mut terms = Vec::with_capacity(obj.len());
    for (key, c) in obj {
        let e = Polynomial::parse_exponents(key)?;
        terms.push((e, number(c, &format!("polynomial.{key}"))?));
    }
    let p = Polynomial::from_terms(n, terms)?;
    if p.is_zero() {
        return Err(Error::invalid_set("polynomial", "polynomial is identically zero"));
    }
    Ok(p)
}

fn chart(v: &Value, i: usize, n: usize) -> Result<Chart> {
    let here = format!("charts[{i}]");
    let obj = v.as_object().ok_or_else(|| Error::invalid_set(&here, "expected an object"))?;
    let domain_v = obj.get("domain").ok_or_else(|| Error::invalid_set(format!("{here}.domain"), "missing"))?;
    let domain: Vec<(f64, f64)> = matrix(domain_v, &format!("{here}.domain"), 2)?.into_iter().map(|r| (r[0], r[1])).collect();
    let map_name =
        obj.get("map").and_then(Value::as_str).ok_or_else(|| Error::invalid_set(format!("{here}.map"), "missing or not a string"))?;
    let empty = Map::new();
    let params = match obj.get("params") {
        None | Some(Value::Null) => &empty,
        Some(p) => p.as_object().ok_or_else(|| Error::invalid_set(format!("{here}.params"), "expected an object"))?,
    };
    let p = |key: &str, default: Option<f64>| -> Result<f64> {
        match (params.get(key), default) {
            (Some(v), _) => number(v, &format!("{here}.params.{key}")),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(Error::invalid_set(format!("{here}.params.{key}"), "missing")),
        }
    };
    let positive = |key: &str, default: Option<f64>| -> Result<f64> {
        let x = p(key, default)?;
        if x > 0.0 {
            Ok(x)
        } else {
            Err(Error::invalid_set(format!("{here}.params.{key}"), "must be positive"))
        }
    };
    let vector = |key: &str| -> Result<Option<DVector<f64>>> {
        match params.get(key) {
            None => Ok(None),
            Some(v) => {
                let name = format!("{here}.params.{key}");
                let xs = v.as_array().ok_or_else(|| Error::invalid_set(&name, "expected an array"))?;
                if xs.len() != n {
                    return Err(Error::invalid_set(&name, format!("expected {n} entries")));
                }
                Ok(Some(DVector::from_vec(xs.iter().map(|x| number(x, &name)).collect::<Result<_>>()?)))
            }
        }
    };
    let map = match map_name {
        "plane" => {
            let origin = vector("origin")?.unwrap_or_else(|| DVector::zeros(n));
            let (u, w) = match (vector("u")?, vector("v")?, params.get("axes")) {
                (Some(u), Some(w), _) => (u, w),
                (_, _, Some(axes)) => {
                    let name = format!("{here}.params.axes");
                    let ax = axes
                        .as_array()
                        .filter(|a| a.len() == 2)
                        .and_then(|a| Some([a[0].as_u64()? as usize, a[1].as_u64()? as usize]))
                        .filter(|a| a[0] < n && a[1] < n && a[0] != a[1])
                        .ok_or_else(|| Error::invalid_set(&name, "expected two distinct coordinate indices"))?;
                    let e = |k: usize| DVector::from_fn(n, |r, _| if r == k { 1.0 } else { 0.0 });
                    (e(ax[0]), e(ax[1]))
                }
                _ => return Err(Error::invalid_set(format!("{here}.params"), "plane needs `axes` or both `u` and `v`")),
            };
            let orth = (u.norm() - 1.0).abs() < 1e-10 && (w.norm() - 1.0).abs() < 1e-10 && u.dot(&w).abs() < 1e-10;
            if !orth {
                return Err(Error::invalid_set(format!("{here}.params"), "plane directions must be orthonormal"));
            }
            ChartMap::Plane { origin, u, v: w }
        }
        "sphere" => {
            let c = vector("center")?.unwrap_or_else(|| DVector::zeros(n));
            if c.len() != 3 {
                return Err(Error::invalid_set(format!("{here}.map"), "sphere charts live in R^3"));
            }
            ChartMap::Sphere { center: [c[0], c[1], c[2]], radius: positive("radius", Some(1.0))? }
        }
        "torus" => ChartMap::Torus { major: positive("major", Some(2.0))?, minor: positive("minor", Some(1.0))? },
        "cylinder" => ChartMap::Cylinder { radius: positive("radius", Some(1.0))? },
        "paraboloid" => ChartMap::Paraboloid { a: p("a", Some(1.0))? },
        "hyperboloid_one_sheet" => ChartMap::Hyperboloid { a: positive("a", Some(1.0))?, c: positive("c", Some(1.0))? },
        "polynomial_curve" => {
            let name = format!("{here}.params.coefficients");
            let rows = params
                .get("coefficients")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::invalid_set(&name, "expected one coefficient array per coordinate"))?;
            let coefficients = rows
                .iter()
                .map(|r| {
                    r.as_array()
                        .ok_or_else(|| Error::invalid_set(&name, "expected arrays of numbers"))?
                        .iter()
                        .map(|x| number(x, &name))
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            ChartMap::PolynomialCurve { coefficients }
        }
        other => return Err(Error::invalid_set(format!("{here}.map"), format!("unknown chart map `{other}`"))),
    };
    if map.ambient_dim() != n {
        return Err(Error::invalid_set(
            format!("{here}.map"),
            format!("`{map_name}` maps into R^{}, set lives in R^{n}", map.ambient_dim()),
        ));
    }
    let weight = p("weight", Some(1.0))?;
    Chart::new(map, &domain, weight).map_err(|e| match e {
        Error::InvalidSet { field, message } => Error::invalid_set(field.replacen("charts", &here, 1), message),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::SetKind;

    #[test]
    fn parses_a_conic_graph() {
        let s = parse_set(
            r#"{"name": "axes", "ambient_dim": 2, "kind": "conic_graph",
                "vertices": [[1,0],[0,1],[-1,0],[0,-1]], "edges": []}"#,
        )
        .unwrap();
        assert_eq!(s.kind_tag(), "conic");
        assert_eq!(s.dim(), 1);
    }

    #[test]
    fn parses_a_smooth_set() {
        let s = parse_set(
            r#"{"name": "hyp", "ambient_dim": 3, "kind": "smooth",
                "polynomial": {"(2,0,0)": 1, "(0,2,0)": 1, "(0,0,2)": -1, "(0,0,0)": -1},
                "charts": [{"domain": [[0, 6.283185307179586], [-50, 50]], "map": "hyperboloid_one_sheet", "params": {"a": 1, "c": 1}}],
                "declared_chi": 0, "compact": false}"#,
        )
        .unwrap();
        let SetKind::Smooth(set) = &s.kind else { panic!() };
        assert_eq!(set.dim, 2);
        assert_eq!(set.declared_chi, Some(0));
    }

    #[test]
    fn errors_name_the_field() {
        let cases = [
            (r#"{"name": "x", "kind": "linear", "frame": [[1,0]]}"#, "ambient_dim"),
            (r#"{"name": "x", "ambient_dim": 2, "kind": "linear", "frame": [[1,0,0]]}"#, "frame[0]"),
            (r#"{"name": "x", "ambient_dim": 2, "kind": "blob"}"#, "kind"),
            (r#"{"name": "x", "ambient_dim": 2, "kind": "conic_graph", "vertices": [[1,0],[0,1]], "edges": [[0,5]]}"#, "edges"),
            (
                r#"{"name": "x", "ambient_dim": 3, "kind": "smooth", "charts": [{"domain": [[0,1],[0,1]], "map": "klein"}]}"#,
                "charts[0].map",
            ),
            (r#"{"name": "x", "ambient_dim": 3, "kind": "smooth", "polynomial": {"2,0,0": 1}, "charts": []}"#, "polynomial"),
            (
                r#"{"name": "x", "ambient_dim": 3, "kind": "smooth", "charts": [{"domain": [[0,6.283185307179586],[0,1]], "map": "cylinder", "params": {"radius": -1}}]}"#,
                "charts[0].params.radius",
            ),
        ];
        for (text, expected) in cases {
            match parse_set(text) {
                Err(Error::InvalidSet { field, .. }) => assert_eq!(field, expected, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn off_surface_charts_are_rejected() {
        let text = r#"{"name": "bad", "ambient_dim": 3, "kind": "smooth",
            "polynomial": {"(2,0,0)": 1, "(0,2,0)": 1, "(0,0,2)": 1, "(0,0,0)": -4},
            "charts": [{"domain": [[0, 6.283185307179586], [0, 3.141592653589793]], "map": "sphere", "params": {"radius": 1}}],
            "declared_chi": 2, "compact": true}"#;
        match parse_set(text) {
            Err(Error::InvalidSet { field, .. }) => assert_eq!(field, "polynomial"),
            other => panic!("{other:?}"),
        }
    }
}
