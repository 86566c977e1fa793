//! On-disk formats: the volumetric tensor-field file (legacy
//! structured-points layout, little-endian binary), ASCII triangle
//! meshes (OBJ), CSV tables, and the fixed-schema JSON summaries.
//!
//! The field file stores the five basis coefficients as point-data
//! arrays `q0..q4` (8-byte floats, little-endian) plus a `mask` array
//! (0 exterior, 1 interior, 2 boundary). The title line carries the
//! analytic domain description so a reader can rebuild the grid
//! classification bit-identically; coefficient round-trips are exact.

use crate::domain::{build_grid, DomainSpec, Grid, NodeClass, TensorField};
use crate::energy::MonotonicityScan;
use crate::hedgehog::{HedgehogProfile, SweepReport};
use crate::qtensor::QTensor;
use crate::topology::{LevelSetMesh, RegionReport};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed field file: {0}")]
    Malformed(String),
    #[error("domain rebuild failed: {0}")]
    Domain(#[from] crate::domain::DomainError),
}

/// Format a float with 17 significant digits (reproducibility audits).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn domain_tag(spec: &DomainSpec) -> String {
    let holes = if spec.holes.is_empty() {
        "none".to_string()
    } else {
        spec.holes
            .iter()
            .map(|(c, r)| {
                format!(
                    "{},{},{},{}",
                    fmt_f64(c[0]),
                    fmt_f64(c[1]),
                    fmt_f64(c[2]),
                    fmt_f64(*r)
                )
            })
            .collect::<Vec<_>>()
            .join(";")
    };
    format!("ldg-field R={} holes={}", fmt_f64(spec.outer_radius), holes)
}

fn parse_domain_tag(line: &str) -> Result<DomainSpec, IoError> {
    let mut radius = None;
    let mut holes = Vec::new();
    for tok in line.split_whitespace() {
        if let Some(r) = tok.strip_prefix("R=") {
            radius = Some(
                r.parse::<f64>()
                    .map_err(|e| IoError::Malformed(format!("bad radius: {e}")))?,
            );
        } else if let Some(hs) = tok.strip_prefix("holes=") {
            if hs != "none" {
                for h in hs.split(';') {
                    let parts: Vec<&str> = h.split(',').collect();
                    if parts.len() != 4 {
                        return Err(IoError::Malformed(format!("bad hole spec '{h}'")));
                    }
                    let vals: Result<Vec<f64>, _> = parts.iter().map(|p| p.parse()).collect();
                    let v = vals.map_err(|e| IoError::Malformed(format!("bad hole: {e}")))?;
                    holes.push(([v[0], v[1], v[2]], v[3]));
                }
            }
        }
    }
    let radius = radius.ok_or_else(|| IoError::Malformed("missing R= in title".into()))?;
    Ok(DomainSpec::new(radius, holes)?)
}

/// Write a tensor field in the volumetric field format.
pub fn write_field(path: &Path, field: &TensorField) -> Result<(), IoError> {
    let grid = field.grid();
    let n = grid.n();
    let total = grid.node_count();
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{}", domain_tag(grid.spec()))?;
    writeln!(w, "BINARY")?;
    writeln!(w, "DATASET STRUCTURED_POINTS")?;
    writeln!(w, "DIMENSIONS {n} {n} {n}")?;
    let o = grid.origin();
    writeln!(w, "ORIGIN {} {} {}", fmt_f64(o[0]), fmt_f64(o[1]), fmt_f64(o[2]))?;
    let h = grid.spacing();
    writeln!(w, "SPACING {} {} {}", fmt_f64(h), fmt_f64(h), fmt_f64(h))?;
    writeln!(w, "POINT_DATA {total}")?;
    for comp in 0..5 {
        writeln!(w, "SCALARS q{comp} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for q in field.values() {
            w.write_all(&q.coeffs()[comp].to_le_bytes())?;
        }
        writeln!(w)?;
    }
    writeln!(w, "SCALARS mask unsigned_char 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    let mask: Vec<u8> = grid
        .classes()
        .iter()
        .map(|c| match c {
            NodeClass::Exterior => 0u8,
            NodeClass::Interior => 1,
            NodeClass::Boundary => 2,
        })
        .collect();
    w.write_all(&mask)?;
    writeln!(w)?;
    Ok(())
}

/// Read a tensor field back; the grid is rebuilt from the domain tag
/// and checked against the stored mask.
pub fn read_field(path: &Path) -> Result<TensorField, IoError> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut line = String::new();
    let mut read_line = |r: &mut BufReader<std::fs::File>| -> Result<String, IoError> {
        line.clear();
        r.read_line(&mut line)?;
        Ok(line.trim_end().to_string())
    };
    let _magic = read_line(&mut r)?;
    let title = read_line(&mut r)?;
    let spec = parse_domain_tag(&title)?;
    let fmt = read_line(&mut r)?;
    if fmt != "BINARY" {
        return Err(IoError::Malformed(format!("expected BINARY, got '{fmt}'")));
    }
    let _dataset = read_line(&mut r)?;
    let dims = read_line(&mut r)?;
    let n: usize = dims
        .split_whitespace()
        .nth(1)
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| IoError::Malformed("bad DIMENSIONS".into()))?;
    let _origin = read_line(&mut r)?;
    let _spacing = read_line(&mut r)?;
    let point_data = read_line(&mut r)?;
    let total: usize = point_data
        .split_whitespace()
        .nth(1)
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| IoError::Malformed("bad POINT_DATA".into()))?;
    if total != n * n * n {
        return Err(IoError::Malformed("POINT_DATA does not match DIMENSIONS".into()));
    }

    let grid = build_grid(&spec, n)?;
    let mut field = TensorField::zeros(grid.clone());
    let mut coeffs = vec![[0.0f64; 5]; total];
    for comp in 0..5 {
        let header = read_line(&mut r)?;
        if !header.starts_with(&format!("SCALARS q{comp} ")) {
            return Err(IoError::Malformed(format!(
                "expected SCALARS q{comp}, got '{header}'"
            )));
        }
        let _lookup = read_line(&mut r)?;
        let mut buf = vec![0u8; total * 8];
        r.read_exact(&mut buf)?;
        for (i, chunk) in buf.chunks_exact(8).enumerate() {
            coeffs[i][comp] = f64::from_le_bytes(chunk.try_into().unwrap());
        }
        let _blank = read_line(&mut r)?;
    }
    let mask_header = read_line(&mut r)?;
    if !mask_header.starts_with("SCALARS mask ") {
        return Err(IoError::Malformed("missing mask array".into()));
    }
    let _lookup = read_line(&mut r)?;
    let mut mask = vec![0u8; total];
    r.read_exact(&mut mask)?;
    for (idx, cls) in grid.classes().iter().enumerate() {
        let expect = match cls {
            NodeClass::Exterior => 0u8,
            NodeClass::Interior => 1,
            NodeClass::Boundary => 2,
        };
        if mask[idx] != expect {
            return Err(IoError::Malformed(format!(
                "mask mismatch at node {idx}: file {} vs rebuilt {}",
                mask[idx], expect
            )));
        }
    }
    let vals = field.values_mut();
    for (idx, c) in coeffs.into_iter().enumerate() {
        vals[idx] = QTensor::new(c);
    }
    Ok(field)
}

/// Write a nodal scalar (e.g. the biaxiality) in the same layout with a
/// single `beta` array plus the mask.
pub fn write_scalar_field(
    path: &Path,
    grid: &Arc<Grid>,
    name: &str,
    values: &[f64],
) -> Result<(), IoError> {
    let n = grid.n();
    let total = grid.node_count();
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{}", domain_tag(grid.spec()))?;
    writeln!(w, "BINARY")?;
    writeln!(w, "DATASET STRUCTURED_POINTS")?;
    writeln!(w, "DIMENSIONS {n} {n} {n}")?;
    let o = grid.origin();
    writeln!(w, "ORIGIN {} {} {}", fmt_f64(o[0]), fmt_f64(o[1]), fmt_f64(o[2]))?;
    let h = grid.spacing();
    writeln!(w, "SPACING {} {} {}", fmt_f64(h), fmt_f64(h), fmt_f64(h))?;
    writeln!(w, "POINT_DATA {total}")?;
    writeln!(w, "SCALARS {name} double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    writeln!(w)?;
    writeln!(w, "SCALARS mask unsigned_char 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    let mask: Vec<u8> = grid
        .classes()
        .iter()
        .map(|c| match c {
            NodeClass::Exterior => 0u8,
            NodeClass::Interior => 1,
            NodeClass::Boundary => 2,
        })
        .collect();
    w.write_all(&mask)?;
    writeln!(w)?;
    Ok(())
}

/// ASCII triangle mesh (Wavefront OBJ vertex/face lists).
pub fn write_obj(path: &Path, mesh: &LevelSetMesh) -> Result<(), IoError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "# level set t = {}", fmt_f64(mesh.level))?;
    for v in &mesh.vertices {
        writeln!(w, "v {} {} {}", fmt_f64(v[0]), fmt_f64(v[1]), fmt_f64(v[2]))?;
    }
    for t in &mesh.triangles {
        writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    Ok(())
}

/// Component table: id, euler characteristic, genus, closed flag, area.
pub fn write_component_csv(path: &Path, mesh: &LevelSetMesh) -> Result<(), IoError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "id,chi,genus,closed,area")?;
    for c in &mesh.components {
        writeln!(
            w,
            "{},{},{},{},{}",
            c.id,
            c.euler,
            c.genus.map_or("".into(), |g| g.to_string()),
            c.closed,
            fmt_f64(c.area)
        )?;
    }
    Ok(())
}

/// Monotonicity scan CSV: r, scaled_energy, annulus_radial_term.
pub fn write_monotonicity_csv(path: &Path, scan: &MonotonicityScan) -> Result<(), IoError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "r,scaled_energy,annulus_radial_term")?;
    for row in &scan.rows {
        writeln!(
            w,
            "{},{},{}",
            fmt_f64(row.radius),
            fmt_f64(row.scaled_energy),
            fmt_f64(row.annulus_radial_term)
        )?;
    }
    Ok(())
}

/// Hedgehog profile CSV: r, s.
pub fn write_profile_csv(path: &Path, profile: &HedgehogProfile) -> Result<(), IoError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "r,s")?;
    for (r, s) in profile.r.iter().zip(&profile.s) {
        writeln!(w, "{},{}", fmt_f64(*r), fmt_f64(*s))?;
    }
    Ok(())
}

/// Instability sweep CSV: mu, delta, value.
pub fn write_sweep_csv(path: &Path, report: &SweepReport) -> Result<(), IoError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "mu,delta,value")?;
    for e in &report.entries {
        writeln!(
            w,
            "{},{},{}",
            fmt_f64(e.mu),
            fmt_f64(e.delta),
            fmt_f64(e.f_second)
        )?;
    }
    Ok(())
}

fn json_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn genus_list_json(list: &[i64]) -> String {
    let items: Vec<String> = list.iter().map(|g| g.to_string()).collect();
    format!("[{}]", items.join(","))
}

/// Region report JSON with the fixed keys
/// {t1, t2, region_genus_lists, surrogate_linked, attainment}.
pub fn region_report_json(report: &RegionReport, attainment: &crate::topology::AttainmentReport) -> String {
    let mut s = String::from("{\n");
    s += &format!("  \"t1\": {},\n", fmt_f64(report.t1));
    s += &format!("  \"t2\": {},\n", fmt_f64(report.t2));
    s += &format!(
        "  \"region_genus_lists\": {{\"low\": {}, \"high\": {}}},\n",
        genus_list_json(&report.low_genus),
        genus_list_json(&report.high_genus)
    );
    s += &format!("  \"surrogate_linked\": {},\n", report.surrogate_linked);
    s += &format!(
        "  \"region_empty\": {{\"low\": {}, \"high\": {}}},\n",
        report.low_empty, report.high_empty
    );
    s += &format!(
        "  \"region_components\": {{\"low\": {}, \"high\": {}}},\n",
        report.low_components, report.high_components
    );
    s += &format!("  \"masked_nodes\": {},\n", report.masked_nodes);
    let sens: Vec<String> = report
        .sensitivity
        .iter()
        .map(|(t, g)| format!("{{\"t\": {}, \"genus\": {}}}", fmt_f64(*t), genus_list_json(g)))
        .collect();
    s += &format!("  \"sensitivity\": [{}],\n", sens.join(", "));
    let levels: Vec<String> = attainment
        .levels
        .iter()
        .map(|(t, a)| format!("{{\"level\": {}, \"attained\": {}}}", fmt_f64(*t), a))
        .collect();
    s += &format!(
        "  \"attainment\": {{\"min_beta\": {}, \"max_beta\": {}, \"levels\": [{}]}}\n",
        fmt_f64(attainment.min_beta),
        fmt_f64(attainment.max_beta),
        levels.join(", ")
    );
    s += "}\n";
    s
}

/// Fixed-schema run summary:
/// {version, config_echo, energy, min_norm, topology, timings}.
pub struct RunSummary<'a> {
    pub config_echo: &'a [(String, String)],
    pub energy: &'a crate::energy::EnergyBreakdown,
    pub min_norm: f64,
    pub max_norm: f64,
    pub iterations: usize,
    pub residual_l2: f64,
    /// (level, genus list) pairs plus degree and attainment range.
    pub topology_levels: Vec<(f64, Vec<i64>)>,
    pub boundary_degree: Option<i64>,
    pub min_beta: Option<f64>,
    pub surrogate_linked: Option<bool>,
    pub timings: Vec<(String, f64)>,
}

pub fn run_summary_json(s: &RunSummary) -> String {
    let mut out = String::from("{\n");
    out += &format!("  \"version\": \"{}\",\n", env!("CARGO_PKG_VERSION"));
    let echo: Vec<String> = s
        .config_echo
        .iter()
        .map(|(k, v)| format!("\"{}\": \"{}\"", json_escape(k), json_escape(v)))
        .collect();
    out += &format!("  \"config_echo\": {{{}}},\n", echo.join(", "));
    out += &format!(
        "  \"energy\": {{\"dirichlet\": {}, \"potential\": {}, \"penalty\": {}, \"gl_anchor\": {}, \"total\": {}, \"iterations\": {}, \"residual_l2\": {}}},\n",
        fmt_f64(s.energy.dirichlet),
        fmt_f64(s.energy.potential),
        fmt_f64(s.energy.penalty),
        fmt_f64(s.energy.gl_anchor),
        fmt_f64(s.energy.total),
        s.iterations,
        fmt_f64(s.residual_l2),
    );
    out += &format!(
        "  \"min_norm\": {},\n  \"max_norm\": {},\n",
        fmt_f64(s.min_norm),
        fmt_f64(s.max_norm)
    );
    let levels: Vec<String> = s
        .topology_levels
        .iter()
        .map(|(t, g)| format!("{{\"level\": {}, \"genus\": {}}}", fmt_f64(*t), genus_list_json(g)))
        .collect();
    out += "  \"topology\": {";
    out += &format!("\"levels\": [{}]", levels.join(", "));
    if let Some(d) = s.boundary_degree {
        out += &format!(", \"boundary_degree\": {d}");
    }
    if let Some(b) = s.min_beta {
        out += &format!(", \"min_beta\": {}", fmt_f64(b));
    }
    if let Some(l) = s.surrogate_linked {
        out += &format!(", \"surrogate_linked\": {l}");
    }
    out += "},\n";
    let timings: Vec<String> = s
        .timings
        .iter()
        .map(|(k, v)| format!("\"{}\": {}", json_escape(k), fmt_f64(*v)))
        .collect();
    out += &format!("  \"timings\": {{{}}}\n", timings.join(", "));
    out += "}\n";
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{boundary_hedgehog, build_grid, DomainSpec};

    #[test]
    fn field_round_trip_is_bitwise() {
        let spec = DomainSpec::new(1.0, vec![([0.3, 0.0, 0.0], 0.2)]).unwrap();
        let grid = build_grid(&spec, 28).unwrap();
        let mut field = boundary_hedgehog(&grid);
        field.fill_interior(|x| {
            QTensor::new([
                x[0].sin(),
                x[1].cos(),
                x[2] * 0.5,
                x[0] * x[1],
                1.0 / (1.0 + x[2] * x[2]),
            ])
        });
        let dir = std::env::temp_dir().join("ldg_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("field.vtk");
        write_field(&path, &field).unwrap();
        let back = read_field(&path).unwrap();
        assert_eq!(back.grid().n(), 24);
        for (a, b) in field.values().iter().zip(back.values()) {
            for c in 0..5 {
                assert_eq!(a.coeffs()[c].to_bits(), b.coeffs()[c].to_bits());
            }
        }
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn summary_json_is_parseable_and_17_digits() {
        let energy = crate::energy::EnergyBreakdown {
            dirichlet: std::f64::consts::PI,
            potential: 0.1,
            penalty: 0.0,
            gl_anchor: 0.0,
            total: std::f64::consts::PI + 0.1,
        };
        let echo = vec![("grid.n".to_string(), "32".to_string())];
        let s = RunSummary {
            config_echo: &echo,
            energy: &energy,
            min_norm: 0.5,
            max_norm: 1.0,
            iterations: 10,
            residual_l2: 1e-6,
            topology_levels: vec![(0.0, vec![1])],
            boundary_degree: Some(1),
            min_beta: Some(-0.995),
            surrogate_linked: Some(true),
            timings: vec![("solve".into(), 1.25)],
        };
        let json = run_summary_json(&s);
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        for key in ["version", "config_echo", "energy", "min_norm", "topology", "timings"] {
            assert!(parsed.get(key).is_some(), "missing key {key}");
        }
        // 17 significant digits in the float rendering.
        assert!(json.contains("3.1415926535897931e0"));
    }

    #[test]
    fn obj_writer_emits_faces() {
        let mesh = crate::topology::icosphere(1);
        let dir = std::env::temp_dir().join("ldg_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("mesh.obj");
        write_obj(&path, &mesh).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), mesh.vertices.len());
        assert_eq!(text.lines().filter(|l| l.starts_with("f ")).count(), mesh.triangles.len());
        std::fs::remove_file(&path).unwrap();
    }
}
