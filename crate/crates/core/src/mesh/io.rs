use std::io::{BufRead, Write};

use super::Mesh;
use crate::{Error, Point, Result};

/// Writes the plain-text node/element format: a header `V T`, then `V`
/// lines `x y`, then `T` lines `i j k b` with 0-based vertex indices and the
/// bisection generation `b`.
pub fn write_mesh<W: Write>(mesh: &Mesh, mut w: W) -> Result<()> {
    writeln!(w, "{} {}", mesh.num_vertices(), mesh.num_triangles())?;
    for p in mesh.vertices() {
        writeln!(w, "{:e} {:e}", p.x, p.y)?;
    }
    for (t, [i, j, k]) in mesh.triangles().iter().enumerate() {
        writeln!(w, "{i} {j} {k} {}", mesh.generation(t))?;
    }
    Ok(())
}

/// Reads the format produced by [`write_mesh`]. Refinement edges are reset
/// to the longest edge of each triangle; generations are kept.
pub fn read_mesh<R: BufRead>(r: R) -> Result<Mesh> {
    let bad = |msg: &str| Error::InvalidMesh(msg.to_string());
    let mut lines = r.lines();
    let mut next = || -> Result<Vec<String>> {
        let line = lines
            .next()
            .ok_or_else(|| bad("unexpected end of file"))??;
        Ok(line.split_whitespace().map(str::to_string).collect())
    };
    let header = next()?;
    let [nv, nt] = header.as_slice() else {
        return Err(bad("header must be `V T`"));
    };
    let nv: usize = nv.parse().map_err(|_| bad("bad vertex count"))?;
    let nt: usize = nt.parse().map_err(|_| bad("bad triangle count"))?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let f = next()?;
        let [x, y] = f.as_slice() else {
            return Err(bad("vertex line must be `x y`"));
        };
        let x: f64 = x.parse().map_err(|_| bad("bad coordinate"))?;
        let y: f64 = y.parse().map_err(|_| bad("bad coordinate"))?;
        vertices.push(Point::new(x, y));
    }
    let mut triangles = Vec::with_capacity(nt);
    let mut generations = Vec::with_capacity(nt);
    for _ in 0..nt {
        let f = next()?;
        let [i, j, k, b] = f.as_slice() else {
            return Err(bad("triangle line must be `i j k b`"));
        };
        let idx = |s: &String| s.parse::<usize>().map_err(|_| bad("bad vertex index"));
        triangles.push([idx(i)?, idx(j)?, idx(k)?]);
        generations.push(b.parse::<u32>().map_err(|_| bad("bad generation"))?);
    }
    let mesh = Mesh::new(vertices, triangles)?;
    let peaks = mesh.peaks().to_vec();
    Ok(Mesh::from_parts(
        mesh.vertices().to_vec(),
        mesh.triangles().to_vec(),
        peaks,
        generations,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{bisect, build_structured_mesh, Domain};

    #[test]
    fn round_trip() {
        let mesh = build_structured_mesh(Domain::reference_l_shape(), 4).unwrap();
        let mesh = bisect(&mesh, &[0, 5]).unwrap();
        let mut buf = Vec::new();
        write_mesh(&mesh, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(&format!(
            "{} {}\n",
            mesh.num_vertices(),
            mesh.num_triangles()
        )));
        let back = read_mesh(buf.as_slice()).unwrap();
        assert_eq!(back.vertices(), mesh.vertices());
        assert_eq!(back.triangles(), mesh.triangles());
        assert_eq!(back.generations(), mesh.generations());
    }

    #[test]
    fn truncated_input() {
        assert!(read_mesh("3 1\n0 0\n1 0\n".as_bytes()).is_err());
        assert!(read_mesh("x".as_bytes()).is_err());
    }
}
