//! Text mesh format, line oriented:
//!
//! ```text
//! PACKFEM-MESH 1
//! nodes <N>
//! <x> <y> <z>                         (N lines)
//! tags <N>                            (optional, N lines of one integer)
//! elements <TET4|PYR5|PRI6|HEX8> <count>
//! <n0> <n1> ...                       (count lines, 0-based node indices)
//! field <name> <N>                    (solution files only, N value lines)
//! ```
//!
//! Coordinates are written with 17 significant digits so that
//! read-after-write reproduces every `f64` exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{Block, ElementShape, Mesh, MeshError};

const MAGIC: &str = "PACKFEM-MESH 1";

pub fn write_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    let mut out = BufWriter::new(File::create(path)?);
    write_mesh_to(mesh, &mut out)?;
    out.flush()?;
    Ok(())
}

/// Writes the mesh plus named per-node field blocks.
pub fn write_solution(
    mesh: &Mesh,
    fields: &[(&str, &[f64])],
    path: impl AsRef<Path>,
) -> Result<(), MeshError> {
    let mut out = BufWriter::new(File::create(path)?);
    write_mesh_to(mesh, &mut out)?;
    for (name, values) in fields {
        assert_eq!(values.len(), mesh.node_count(), "field {name} length");
        writeln!(out, "field {} {}", name, values.len())?;
        for v in *values {
            writeln!(out, "{v:.16e}")?;
        }
    }
    out.flush()?;
    Ok(())
}

fn write_mesh_to(mesh: &Mesh, out: &mut impl Write) -> Result<(), MeshError> {
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "nodes {}", mesh.node_count())?;
    for c in mesh.nodes() {
        writeln!(out, "{:.16e} {:.16e} {:.16e}", c[0], c[1], c[2])?;
    }
    if let Some(tags) = mesh.boundary_tags() {
        writeln!(out, "tags {}", tags.len())?;
        for t in tags {
            writeln!(out, "{t}")?;
        }
    }
    for block in mesh.blocks() {
        writeln!(out, "elements {} {}", block.shape.name(), block.len())?;
        for e in 0..block.len() {
            let conn = block.element(e);
            let line: Vec<String> = conn.iter().map(u32::to_string).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
    }
    Ok(())
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<Mesh, MeshError> {
    Ok(read_solution(path)?.0)
}

/// Reads a mesh and any trailing field blocks.
pub fn read_solution(path: impl AsRef<Path>) -> Result<(Mesh, Vec<(String, Vec<f64>)>), MeshError> {
    let reader = BufReader::new(File::open(path)?);
    parse(reader)
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line_no: usize,
}

impl<R: BufRead> Lines<R> {
    /// Next non-empty line, trimmed.
    fn next(&mut self) -> Result<Option<(usize, String)>, MeshError> {
        for line in self.inner.by_ref() {
            self.line_no += 1;
            let line = line?;
            let trimmed = line.trim();
            if !trimmed.is_empty() {
                return Ok(Some((self.line_no, trimmed.to_string())));
            }
        }
        Ok(None)
    }
}

fn err(line: usize, msg: impl Into<String>) -> MeshError {
    MeshError::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse<R: BufRead>(reader: R) -> Result<(Mesh, Vec<(String, Vec<f64>)>), MeshError> {
    let mut lines = Lines {
        inner: reader.lines(),
        line_no: 0,
    };

    match lines.next()? {
        Some((_, l)) if l == MAGIC => {}
        Some((n, l)) => return Err(err(n, format!("expected header `{MAGIC}`, got `{l}`"))),
        None => return Err(err(0, "empty file")),
    }

    let (n_line, node_header) = lines
        .next()?
        .ok_or_else(|| err(0, "missing `nodes` section"))?;
    let node_count = match node_header.split_whitespace().collect::<Vec<_>>()[..] {
        ["nodes", n] => n
            .parse::<usize>()
            .map_err(|_| err(n_line, format!("bad node count `{n}`")))?,
        _ => return Err(err(n_line, "expected `nodes <count>`")),
    };

    let mut nodes = Vec::with_capacity(node_count);
    for i in 0..node_count {
        let (ln, line) = lines.next()?.ok_or_else(|| {
            err(
                n_line,
                format!("node block declares {node_count} nodes but ends after {i}"),
            )
        })?;
        let mut it = line.split_whitespace();
        let mut coord = [0.0f64; 3];
        for c in &mut coord {
            let tok = it
                .next()
                .ok_or_else(|| err(ln, "expected 3 coordinates"))?;
            // a section keyword here means the node block is short
            if tok.parse::<f64>().is_err() {
                return Err(err(
                    ln,
                    format!("node block declares {node_count} nodes but line {ln} is `{line}`"),
                ));
            }
            *c = tok.parse().unwrap();
        }
        if it.next().is_some() {
            return Err(err(ln, "trailing tokens after 3 coordinates"));
        }
        nodes.push(coord);
    }

    let mut tags: Option<Vec<i32>> = None;
    let mut blocks: Vec<Block> = Vec::new();
    let mut fields: Vec<(String, Vec<f64>)> = Vec::new();

    while let Some((ln, line)) = lines.next()? {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks[..] {
            ["tags", n] => {
                let count: usize = n.parse().map_err(|_| err(ln, "bad tag count"))?;
                if count != node_count {
                    return Err(err(
                        ln,
                        format!("tag count {count} does not match node count {node_count}"),
                    ));
                }
                let mut t = Vec::with_capacity(count);
                for _ in 0..count {
                    let (tl, tline) = lines
                        .next()?
                        .ok_or_else(|| err(ln, "tag block truncated"))?;
                    t.push(
                        tline
                            .parse::<i32>()
                            .map_err(|_| err(tl, format!("bad tag `{tline}`")))?,
                    );
                }
                tags = Some(t);
            }
            ["elements", shape_name, n] => {
                let shape = ElementShape::from_name(shape_name)
                    .ok_or_else(|| err(ln, format!("unknown element shape `{shape_name}`")))?;
                let count: usize = n.parse().map_err(|_| err(ln, "bad element count"))?;
                let nn = shape.nnodes();
                let mut block = Block::new(shape);
                for e in 0..count {
                    let (el, eline) = lines.next()?.ok_or_else(|| {
                        err(
                            ln,
                            format!("{shape_name} block declares {count} elements but ends after {e}"),
                        )
                    })?;
                    let idx: Result<Vec<u32>, _> =
                        eline.split_whitespace().map(str::parse::<u32>).collect();
                    let idx = idx.map_err(|_| {
                        err(
                            el,
                            format!(
                                "{shape_name} block declares {count} elements but line {el} is `{eline}`"
                            ),
                        )
                    })?;
                    if idx.len() != nn {
                        return Err(err(
                            el,
                            format!("{shape_name} element needs {nn} node indices, got {}", idx.len()),
                        ));
                    }
                    for &i in &idx {
                        if i as usize >= node_count {
                            return Err(err(
                                el,
                                format!("node index {i} out of range (mesh has {node_count} nodes)"),
                            ));
                        }
                    }
                    block.push(&idx);
                }
                blocks.push(block);
            }
            ["field", name, n] => {
                let count: usize = n.parse().map_err(|_| err(ln, "bad field length"))?;
                let mut values = Vec::with_capacity(count);
                for _ in 0..count {
                    let (fl, fline) = lines
                        .next()?
                        .ok_or_else(|| err(ln, format!("field `{name}` truncated")))?;
                    values.push(
                        fline
                            .parse::<f64>()
                            .map_err(|_| err(fl, format!("bad field value `{fline}`")))?,
                    );
                }
                fields.push((name.to_string(), values));
            }
            _ => return Err(err(ln, format!("unknown section `{line}`"))),
        }
    }

    let mut mesh = Mesh::new(nodes, blocks);
    if let Some(tags) = tags {
        mesh.set_boundary_tags(tags);
    }
    Ok((mesh, fields))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_box_mesh, MixPolicy};
    use std::io::Cursor;

    fn parse_str(s: &str) -> Result<Mesh, MeshError> {
        parse(Cursor::new(s.as_bytes())).map(|(m, _)| m)
    }

    #[test]
    fn round_trip_all_tet() {
        let mesh = generate_box_mesh(1, 1, 1, MixPolicy::AllTet).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.pfm");
        write_mesh(&mesh, &path).unwrap();
        let back = read_mesh(&path).unwrap();
        assert_eq!(mesh, back);
    }

    #[test]
    fn round_trip_awkward_coordinates() {
        let mesh = Mesh::new(
            vec![
                [0.1 + 0.2, -1.0 / 3.0, 1e-301],
                [f64::MIN_POSITIVE, 1.0e300, -0.0],
                [std::f64::consts::PI, 2.5e-17, 1.0],
                [7.0 / 11.0, -2.0 / 7.0, 0.3],
            ],
            vec![{
                let mut b = Block::new(ElementShape::Tet4);
                b.push(&[0, 1, 2, 3]);
                b
            }],
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.pfm");
        write_mesh(&mesh, &path).unwrap();
        let back = read_mesh(&path).unwrap();
        for (a, b) in mesh.nodes().iter().zip(back.nodes()) {
            for d in 0..3 {
                assert_eq!(a[d].to_bits(), b[d].to_bits());
            }
        }
    }

    #[test]
    fn short_node_block_is_an_error() {
        let text = "PACKFEM-MESH 1\nnodes 5\n0 0 0\n1 0 0\n0 1 0\n0 0 1\nelements TET4 1\n0 1 2 3\n";
        let msg = parse_str(text).unwrap_err().to_string();
        assert!(msg.contains("declares 5 nodes"), "{msg}");
    }

    #[test]
    fn empty_element_section_is_an_error() {
        let text = "PACKFEM-MESH 1\nnodes 4\n0 0 0\n1 0 0\n0 1 0\n0 0 1\nelements TET4 2\n";
        let msg = parse_str(text).unwrap_err().to_string();
        assert!(msg.contains("declares 2 elements"), "{msg}");
    }

    #[test]
    fn out_of_range_index_is_an_error() {
        let text = "PACKFEM-MESH 1\nnodes 4\n0 0 0\n1 0 0\n0 1 0\n0 0 1\nelements TET4 1\n0 1 2 9\n";
        let msg = parse_str(text).unwrap_err().to_string();
        assert!(msg.contains("out of range"), "{msg}");
    }

    #[test]
    fn bad_header_is_an_error() {
        let msg = parse_str("MESHFILE 2\n").unwrap_err().to_string();
        assert!(msg.contains("expected header"), "{msg}");
    }

    #[test]
    fn solution_fields_round_trip() {
        let mesh = generate_box_mesh(1, 1, 1, MixPolicy::AllTet).unwrap();
        let phi: Vec<f64> = (0..mesh.node_count()).map(|i| i as f64 * 0.25).collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.pfm");
        write_solution(&mesh, &[("phi", &phi)], &path).unwrap();
        let (back, fields) = read_solution(&path).unwrap();
        assert_eq!(back, mesh);
        assert_eq!(fields.len(), 1);
        assert_eq!(fields[0].0, "phi");
        assert_eq!(fields[0].1, phi);
    }
}
