//! Pointcloud ingestion: ASCII PLY and XYZ-per-line text.

use nalgebra::Vector3;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum PointcloudError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("not a PLY file (missing 'ply' signature)")]
    NotPly,
    #[error("only ASCII PLY is supported, found {0:?}")]
    UnsupportedPlyFormat(String),
    #[error("PLY header has no vertex element")]
    NoVertexElement,
    #[error("PLY vertex element lacks {0} property")]
    MissingCoordinate(&'static str),
    #[error("PLY header never terminated with end_header")]
    UnterminatedHeader,
    #[error("expected {expected} vertex lines, found {found}")]
    MissingVertices { expected: usize, found: usize },
    #[error("unrecognized pointcloud extension {0:?} (use .ply, .xyz or .txt)")]
    UnknownExtension(String),
    #[error("io: {0}")]
    Io(String),
}

fn parse_float(token: &str, line: usize) -> Result<f64, PointcloudError> {
    let v: f64 = token.parse().map_err(|_| PointcloudError::Malformed {
        line,
        reason: format!("bad number {token:?}"),
    })?;
    if !v.is_finite() {
        return Err(PointcloudError::Malformed {
            line,
            reason: format!("non-finite value {token:?}"),
        });
    }
    Ok(v)
}

/// Whitespace-separated `x y z` per line; blank lines and `#` comments are
/// skipped; extra trailing columns (intensity etc.) are tolerated.
pub fn parse_xyz(text: &str) -> Result<Vec<Vector3<f64>>, PointcloudError> {
    let mut points = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut fields = content.split_whitespace();
        let mut coord = [0.0; 3];
        for slot in &mut coord {
            let token = fields.next().ok_or_else(|| PointcloudError::Malformed {
                line,
                reason: "fewer than 3 coordinates".into(),
            })?;
            *slot = parse_float(token, line)?;
        }
        points.push(Vector3::new(coord[0], coord[1], coord[2]));
    }
    Ok(points)
}

/// ASCII PLY: reads the vertex element's x/y/z properties by position,
/// tolerating extra vertex properties and ignoring later elements (faces).
pub fn parse_ply_ascii(text: &str) -> Result<Vec<Vector3<f64>>, PointcloudError> {
    let mut lines = text.lines().enumerate();

    let Some((_, first)) = lines.next() else {
        return Err(PointcloudError::NotPly);
    };
    if first.trim() != "ply" {
        return Err(PointcloudError::NotPly);
    }

    let mut vertex_count: Option<usize> = None;
    let mut vertex_props: Vec<String> = Vec::new();
    let mut in_vertex_element = false;
    let mut saw_end = false;
    let mut format_ok = false;
    for (n, raw) in lines.by_ref() {
        let line = raw.trim();
        if line == "end_header" {
            saw_end = true;
            break;
        }
        let mut fields = line.split_whitespace();
        match fields.next() {
            Some("format") => {
                let kind = fields.next().unwrap_or("");
                if kind != "ascii" {
                    return Err(PointcloudError::UnsupportedPlyFormat(kind.to_string()));
                }
                format_ok = true;
            }
            Some("comment") | Some("obj_info") => {}
            Some("element") => {
                let name = fields.next().unwrap_or("");
                let count: usize = fields.next().and_then(|c| c.parse().ok()).ok_or_else(|| {
                    PointcloudError::Malformed {
                        line: n + 1,
                        reason: "element without a count".into(),
                    }
                })?;
                if name == "vertex" {
                    vertex_count = Some(count);
                    in_vertex_element = true;
                } else {
                    in_vertex_element = false;
                }
            }
            Some("property") => {
                if in_vertex_element {
                    let rest: Vec<&str> = fields.collect();
                    if rest.first() == Some(&"list") {
                        return Err(PointcloudError::Malformed {
                            line: n + 1,
                            reason: "list property on vertex element".into(),
                        });
                    }
                    let name = rest.last().ok_or_else(|| PointcloudError::Malformed {
                        line: n + 1,
                        reason: "property without a name".into(),
                    })?;
                    vertex_props.push((*name).to_string());
                }
            }
            Some(other) => {
                return Err(PointcloudError::Malformed {
                    line: n + 1,
                    reason: format!("unexpected header keyword {other:?}"),
                });
            }
            None => {}
        }
    }
    if !saw_end {
        return Err(PointcloudError::UnterminatedHeader);
    }
    if !format_ok {
        return Err(PointcloudError::UnsupportedPlyFormat("missing".into()));
    }
    let count = vertex_count.ok_or(PointcloudError::NoVertexElement)?;
    let col = |name: &'static str| -> Result<usize, PointcloudError> {
        vertex_props
            .iter()
            .position(|p| p == name)
            .ok_or(PointcloudError::MissingCoordinate(name))
    };
    let (cx, cy, cz) = (col("x")?, col("y")?, col("z")?);

    let mut points = Vec::with_capacity(count.min(1 << 22));
    for (n, raw) in lines {
        if points.len() == count {
            break; // remaining lines belong to later elements
        }
        let line = n + 1;
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() < vertex_props.len() {
            return Err(PointcloudError::Malformed {
                line,
                reason: format!(
                    "vertex line has {} fields, header declares {}",
                    tokens.len(),
                    vertex_props.len()
                ),
            });
        }
        points.push(Vector3::new(
            parse_float(tokens[cx], line)?,
            parse_float(tokens[cy], line)?,
            parse_float(tokens[cz], line)?,
        ));
    }
    if points.len() != count {
        return Err(PointcloudError::MissingVertices {
            expected: count,
            found: points.len(),
        });
    }
    Ok(points)
}

/// Loads a pointcloud by extension: `.ply` (ASCII) or `.xyz` / `.txt`.
pub fn load_pointcloud(path: &std::path::Path) -> Result<Vec<Vector3<f64>>, PointcloudError> {
    let text = std::fs::read_to_string(path).map_err(|e| PointcloudError::Io(e.to_string()))?;
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .as_deref()
    {
        Some("ply") => parse_ply_ascii(&text),
        Some("xyz") | Some("txt") => parse_xyz(&text),
        other => Err(PointcloudError::UnknownExtension(
            other.unwrap_or("").to_string(),
        )),
    }
}
