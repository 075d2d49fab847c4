//! Structural GeoJSON checks: object types, member presence, and coordinate
//! nesting. Coordinate reference systems and winding order are not checked.

use serde_json::Value;

/// Problems found in `value`, each prefixed by a JSON-pointer-like location.
/// Empty means structurally valid.
pub fn validate_geojson(value: &Value) -> Vec<String> {
    let mut problems = Vec::new();
    check_object(value, "", &mut problems);
    problems
}

fn type_of(value: &Value) -> Option<&str> {
    value.get("type").and_then(Value::as_str)
}

fn check_object(value: &Value, at: &str, out: &mut Vec<String>) {
    match type_of(value) {
        Some("FeatureCollection") => match value.get("features").and_then(Value::as_array) {
            Some(features) => {
                for (i, f) in features.iter().enumerate() {
                    let loc = format!("{at}/features/{i}");
                    if type_of(f) != Some("Feature") {
                        out.push(format!("{loc}: expected a Feature"));
                    } else {
                        check_feature(f, &loc, out);
                    }
                }
            }
            None => out.push(format!("{at}: FeatureCollection needs a `features` array")),
        },
        Some("Feature") => check_feature(value, at, out),
        Some(_) => check_geometry(value, at, out),
        None => out.push(format!("{at}: missing string `type`")),
    }
}

fn check_feature(f: &Value, at: &str, out: &mut Vec<String>) {
    match f.get("geometry") {
        Some(Value::Null) => {}
        Some(g) => check_geometry(g, &format!("{at}/geometry"), out),
        None => out.push(format!("{at}: Feature needs a `geometry` member")),
    }
    match f.get("properties") {
        Some(Value::Null | Value::Object(_)) => {}
        Some(_) => out.push(format!("{at}: `properties` must be an object or null")),
        None => out.push(format!("{at}: Feature needs a `properties` member")),
    }
}

fn check_geometry(g: &Value, at: &str, out: &mut Vec<String>) {
    let Some(kind) = type_of(g) else {
        out.push(format!("{at}: geometry needs a string `type`"));
        return;
    };
    if kind == "GeometryCollection" {
        match g.get("geometries").and_then(Value::as_array) {
            Some(gs) => {
                for (i, sub) in gs.iter().enumerate() {
                    check_geometry(sub, &format!("{at}/geometries/{i}"), out);
                }
            }
            None => out.push(format!("{at}: GeometryCollection needs `geometries`")),
        }
        return;
    }
    let Some(coords) = g.get("coordinates") else {
        out.push(format!("{at}: {kind} needs `coordinates`"));
        return;
    };
    let ok = match kind {
        "Point" => is_position(coords),
        "MultiPoint" => all(coords, is_position),
        "LineString" => is_line(coords),
        "MultiLineString" => all(coords, is_line),
        "Polygon" => is_polygon(coords),
        "MultiPolygon" => all(coords, is_polygon),
        other => {
            out.push(format!("{at}: unknown geometry type {other:?}"));
            return;
        }
    };
    if !ok {
        out.push(format!("{at}: malformed {kind} coordinates"));
    }
}

fn all(v: &Value, f: fn(&Value) -> bool) -> bool {
    v.as_array().is_some_and(|a| a.iter().all(f))
}

fn is_position(v: &Value) -> bool {
    v.as_array()
        .is_some_and(|a| a.len() >= 2 && a.iter().all(Value::is_number))
}

fn is_line(v: &Value) -> bool {
    v.as_array()
        .is_some_and(|a| a.len() >= 2 && a.iter().all(is_position))
}

fn is_ring(v: &Value) -> bool {
    v.as_array().is_some_and(|a| {
        a.len() >= 4 && a.iter().all(is_position) && a.first() == a.last()
    })
}

fn is_polygon(v: &Value) -> bool {
    all(v, is_ring)
}
