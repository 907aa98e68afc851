//! Combinatorial area-weighted maps on closed orientable surfaces.
//!
//! A map is given by its face-boundary words; vertices are recovered by
//! gluing consecutive corners. Holonomies follow the path convention
//! `h_{x1 x2 ... xk} = h_{xk} ... h_{x2} h_{x1}`, and a group element on an
//! edge read backwards is its inverse.

use std::collections::HashMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use crate::charcalc::{ConjugacyClass, HeatKernel};
use crate::error::{Error, MapError, Result};
use crate::qseries::SeriesValue;
use crate::weights::GroupDescriptor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SignedEdge {
    pub edge: usize,
    pub inverse: bool,
}

impl SignedEdge {
    pub fn inv(self) -> Self {
        SignedEdge {
            edge: self.edge,
            inverse: !self.inverse,
        }
    }

    /// Endpoint ids: `2e` is the tail of edge `e`, `2e + 1` its head.
    fn source(self) -> usize {
        2 * self.edge + self.inverse as usize
    }

    fn target(self) -> usize {
        2 * self.edge + 1 - self.inverse as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Face {
    pub word: Vec<SignedEdge>,
    pub area: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AreaWeightedMap {
    pub edges: Vec<String>,
    pub vertex_count: usize,
    pub faces: Vec<Face>,
}

/// On-disk form: signed labels are edge names with a trailing `'` for the
/// reversed edge.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDocument {
    pub edges: Vec<String>,
    pub vertices: usize,
    pub faces: Vec<FaceDocument>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaceDocument {
    pub word: Vec<String>,
    pub area: f64,
}

impl AreaWeightedMap {
    pub fn from_document(doc: &MapDocument) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, e) in doc.edges.iter().enumerate() {
            if e.is_empty() || e.ends_with('\'') {
                return Err(MapError::Format(format!("bad edge label {e:?}")).into());
            }
            if index.insert(e.clone(), i).is_some() {
                return Err(MapError::DuplicateEdge(e.clone()).into());
            }
        }
        let faces = doc
            .faces
            .iter()
            .map(|f| {
                Ok(Face {
                    word: parse_word(&index, &f.word)?,
                    area: f.area,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(AreaWeightedMap {
            edges: doc.edges.clone(),
            vertex_count: doc.vertices,
            faces,
        })
    }

    pub fn to_document(&self) -> MapDocument {
        MapDocument {
            edges: self.edges.clone(),
            vertices: self.vertex_count,
            faces: self
                .faces
                .iter()
                .map(|f| FaceDocument {
                    word: self.format_word(&f.word),
                    area: f.area,
                })
                .collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: MapDocument = serde_json::from_str(text).map_err(|e| MapError::Format(e.to_string()))?;
        Self::from_document(&doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).unwrap()
    }

    pub fn total_area(&self) -> f64 {
        self.faces.iter().map(|f| f.area).sum()
    }

    /// Parse a word of signed labels such as `["d", "e", "f'"]`.
    pub fn parse_loop(&self, labels: &[impl AsRef<str>]) -> Result<LoopWord> {
        let index: HashMap<String, usize> = self.edges.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();
        Ok(LoopWord {
            word: parse_word(&index, labels)?,
        })
    }

    pub fn format_word(&self, word: &[SignedEdge]) -> Vec<String> {
        word.iter()
            .map(|x| {
                let mut s = self.edges[x.edge].clone();
                if x.inverse {
                    s.push('\'');
                }
                s
            })
            .collect()
    }

    /// Vertex index of every edge endpoint (see [`SignedEdge`] for ids),
    /// obtained by gluing the corners of all faces.
    pub fn vertex_classes(&self) -> Vec<usize> {
        let all: Vec<usize> = (0..self.faces.len()).collect();
        classes(self.edges.len(), &self.faces, &all).0
    }
}

fn parse_word(index: &HashMap<String, usize>, labels: &[impl AsRef<str>]) -> Result<Vec<SignedEdge>> {
    labels
        .iter()
        .map(|l| {
            let l = l.as_ref();
            let (name, inverse) = match l.strip_suffix('\'') {
                Some(n) => (n, true),
                None => (l, false),
            };
            let edge = *index.get(name).ok_or_else(|| MapError::UnknownEdge(l.to_string()))?;
            Ok(SignedEdge { edge, inverse })
        })
        .collect()
}

/// Glue corners of the chosen faces; returns the class of each endpoint and
/// the number of classes met by edges of those faces.
fn classes(edge_count: usize, faces: &[Face], chosen: &[usize]) -> (Vec<usize>, usize) {
    let mut uf = UnionFind::<usize>::new(2 * edge_count);
    for &f in chosen {
        let w = &faces[f].word;
        for k in 0..w.len() {
            uf.union(w[k].target(), w[(k + 1) % w.len()].source());
        }
    }
    let labels = uf.into_labeling();
    let mut used = vec![false; 2 * edge_count];
    for &f in chosen {
        for x in &faces[f].word {
            used[x.source()] = true;
            used[x.target()] = true;
        }
    }
    let mut renumber = HashMap::new();
    let mut out = vec![usize::MAX; 2 * edge_count];
    for id in 0..2 * edge_count {
        if used[id] {
            let next = renumber.len();
            out[id] = *renumber.entry(labels[id]).or_insert(next);
        }
    }
    (out, renumber.len())
}

/// Checks that the words describe a closed orientable surface and returns
/// its genus `(2 - V + E - F) / 2`.
pub fn validate_and_genus(map: &AreaWeightedMap) -> Result<u32> {
    let e = map.edges.len();
    for (i, f) in map.faces.iter().enumerate() {
        if f.word.is_empty() {
            return Err(MapError::EmptyFace(i).into());
        }
        if !(f.area > 0.0) || !f.area.is_finite() {
            return Err(MapError::NonPositiveArea { face: i, area: f.area }.into());
        }
    }
    let mut seen = vec![[0usize; 2]; e];
    for f in &map.faces {
        for x in &f.word {
            seen[x.edge][x.inverse as usize] += 1;
        }
    }
    for (i, s) in seen.iter().enumerate() {
        let count = s[0] + s[1];
        if count != 2 {
            return Err(MapError::EdgeOccurrence {
                edge: map.edges[i].clone(),
                count,
            }
            .into());
        }
        if s[0] != 1 {
            return Err(MapError::NonOrientable(map.edges[i].clone()).into());
        }
    }
    if !faces_connected(map, &(0..map.faces.len()).collect::<Vec<_>>()) {
        return Err(MapError::Disconnected.into());
    }
    let (_, v) = map_vertices(map);
    if v != map.vertex_count {
        return Err(MapError::VertexMismatch {
            declared: map.vertex_count,
            computed: v,
        }
        .into());
    }
    let chi = v as i64 - e as i64 + map.faces.len() as i64;
    if chi > 2 || chi % 2 != 0 {
        return Err(MapError::BadEuler(chi).into());
    }
    Ok(((2 - chi) / 2) as u32)
}

fn map_vertices(map: &AreaWeightedMap) -> (Vec<usize>, usize) {
    let all: Vec<usize> = (0..map.faces.len()).collect();
    classes(map.edges.len(), &map.faces, &all)
}

fn faces_connected(map: &AreaWeightedMap, chosen: &[usize]) -> bool {
    if chosen.is_empty() {
        return false;
    }
    let mut uf = UnionFind::<usize>::new(chosen.len());
    let mut first: HashMap<usize, usize> = HashMap::new();
    for (k, &f) in chosen.iter().enumerate() {
        for x in &map.faces[f].word {
            if let Some(&j) = first.get(&x.edge) {
                uf.union(j, k);
            } else {
                first.insert(x.edge, k);
            }
        }
    }
    (0..chosen.len()).all(|k| uf.equiv(0, k))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopWord {
    pub word: Vec<SignedEdge>,
}

impl LoopWord {
    /// Cyclically reduced form: no `x x'` pair, including across the ends.
    pub fn reduced(&self) -> LoopWord {
        let mut stack: Vec<SignedEdge> = Vec::new();
        for &x in &self.word {
            if stack.last() == Some(&x.inv()) {
                stack.pop();
            } else {
                stack.push(x);
            }
        }
        let mut lo = 0;
        let mut hi = stack.len();
        while hi - lo >= 2 && stack[lo] == stack[hi - 1].inv() {
            lo += 1;
            hi -= 1;
        }
        LoopWord {
            word: stack[lo..hi].to_vec(),
        }
    }

    pub fn inverse(&self) -> LoopWord {
        LoopWord {
            word: self.word.iter().rev().map(|x| x.inv()).collect(),
        }
    }

    /// True when consecutive edges meet, cyclically, at vertices of `map`.
    pub fn is_closed_in(&self, map: &AreaWeightedMap) -> bool {
        closed_under(&self.word, &map.vertex_classes())
    }
}

fn closed_under(word: &[SignedEdge], class: &[usize]) -> bool {
    (0..word.len()).all(|k| {
        let a = class[word[k].target()];
        let b = class[word[(k + 1) % word.len()].source()];
        a != usize::MAX && a == b
    })
}

impl fmt::Display for LoopWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for x in &self.word {
            write!(f, "e{}{}", x.edge, if x.inverse { "'" } else { "" })?;
        }
        Ok(())
    }
}

/// Planar map obtained by cutting a disc out of a surface: the chosen faces
/// keep their areas, and the rest of the surface becomes one marked outer
/// face bounded by `outer`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtractedDisc {
    pub edges: Vec<String>,
    pub vertex_count: usize,
    pub bounded: Vec<Face>,
    /// `None` when the chosen faces already cover a sphere.
    pub outer: Option<Vec<SignedEdge>>,
    /// Index in the original map of each bounded face.
    pub source_faces: Vec<usize>,
    pub loop_word: LoopWord,
}

impl ExtractedDisc {
    pub fn total_area(&self) -> f64 {
        self.bounded.iter().map(|f| f.area).sum()
    }

    /// The sphere map obtained by giving the outer face an area.
    pub fn closed_map(&self, outer_area: f64) -> AreaWeightedMap {
        let mut faces = self.bounded.clone();
        if let Some(w) = &self.outer {
            faces.push(Face {
                word: w.clone(),
                area: outer_area,
            });
        }
        AreaWeightedMap {
            edges: self.edges.clone(),
            vertex_count: self.vertex_count,
            faces,
        }
    }
}

/// Cut the union of `disc_faces` out of `map` as a planar map, carrying `lp`
/// along. The union must be a closed disc and `lp` a closed path on it.
pub fn extract_disc(map: &AreaWeightedMap, disc_faces: &[usize], lp: &LoopWord) -> Result<ExtractedDisc> {
    let genus = validate_and_genus(map)?;
    let nf = map.faces.len();
    let mut chosen = disc_faces.to_vec();
    chosen.sort_unstable();
    chosen.dedup();
    if chosen.len() != disc_faces.len() {
        return Err(MapError::NotDisc("a face is listed twice".into()).into());
    }
    if let Some(&f) = chosen.iter().find(|&&f| f >= nf) {
        return Err(MapError::FaceIndex(f).into());
    }
    if chosen.is_empty() {
        return Err(MapError::NotDisc("no faces chosen".into()).into());
    }
    if !faces_connected(map, &chosen) {
        return Err(MapError::NotDisc("the faces are not connected".into()).into());
    }
    let mut count = vec![0usize; map.edges.len()];
    for &f in &chosen {
        for x in &map.faces[f].word {
            count[x.edge] += 1;
        }
    }
    let (class, _) = classes(map.edges.len(), &map.faces, &chosen);
    let boundary: Vec<SignedEdge> = chosen
        .iter()
        .flat_map(|&f| map.faces[f].word.iter().copied())
        .filter(|x| count[x.edge] == 1)
        .collect();
    // the outer face runs through the reversed boundary occurrences; after
    // x' comes the y' leaving the vertex where x starts, i.e. with t(y) = s(x)
    let outer = if boundary.is_empty() {
        if genus != 0 {
            return Err(MapError::NotDisc(format!("the faces cover a closed surface of genus {genus}")).into());
        }
        None
    } else {
        let mut by_target: HashMap<usize, usize> = HashMap::new();
        for (k, y) in boundary.iter().enumerate() {
            if by_target.insert(class[y.target()], k).is_some() {
                return Err(MapError::NotDisc("the boundary touches itself at a vertex".into()).into());
            }
        }
        let mut word = Vec::with_capacity(boundary.len());
        let mut k = 0;
        loop {
            word.push(boundary[k].inv());
            k = *by_target
                .get(&class[boundary[k].source()])
                .ok_or_else(|| MapError::NotDisc("the boundary is not closed".into()))?;
            if k == 0 {
                break;
            }
            if word.len() > boundary.len() {
                return Err(MapError::NotDisc("the boundary is not a simple cycle".into()).into());
            }
        }
        if word.len() != boundary.len() {
            return Err(MapError::NotDisc("the boundary has several components".into()).into());
        }
        Some(word)
    };
    // relabel retained edges
    let kept: Vec<usize> = (0..map.edges.len()).filter(|&e| count[e] > 0).collect();
    let new_index: HashMap<usize, usize> = kept.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let relabel = |w: &[SignedEdge]| -> Vec<SignedEdge> {
        w.iter()
            .map(|x| SignedEdge {
                edge: new_index[&x.edge],
                inverse: x.inverse,
            })
            .collect()
    };
    for x in &lp.word {
        if count[x.edge] == 0 {
            return Err(MapError::LoopLeavesDisc(map.edges[x.edge].clone()).into());
        }
    }
    if lp.word.is_empty() || !closed_under(&lp.word, &class) {
        return Err(MapError::LoopNotClosed.into());
    }
    let edges: Vec<String> = kept.iter().map(|&e| map.edges[e].clone()).collect();
    let vertex_count = {
        let mut v: Vec<usize> = kept.iter().flat_map(|&e| [class[2 * e], class[2 * e + 1]]).collect();
        v.sort_unstable();
        v.dedup();
        v.len()
    };
    let out = ExtractedDisc {
        edges,
        vertex_count,
        bounded: chosen
            .iter()
            .map(|&f| Face {
                word: relabel(&map.faces[f].word),
                area: map.faces[f].area,
            })
            .collect(),
        outer: outer.map(|w| relabel(&w)),
        source_faces: chosen.clone(),
        loop_word: LoopWord {
            word: relabel(&lp.word),
        },
    };
    let g = validate_and_genus(&out.closed_map(1.0))?;
    if g != 0 {
        return Err(MapError::NotDisc(format!("closing the boundary gives genus {g}")).into());
    }
    Ok(out)
}

/// Group elements on the positively oriented edges.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeConfiguration {
    pub values: Vec<DMatrix<Complex64>>,
}

impl EdgeConfiguration {
    pub fn identity(group: &GroupDescriptor, edge_count: usize) -> Self {
        let n = group.matrix_size;
        EdgeConfiguration {
            values: vec![DMatrix::identity(n, n); edge_count],
        }
    }

    pub fn edge_value(&self, x: SignedEdge) -> DMatrix<Complex64> {
        let h = &self.values[x.edge];
        if x.inverse {
            h.adjoint()
        } else {
            h.clone()
        }
    }

    /// `h_{x1 ... xk} = h_{xk} ... h_{x1}`.
    pub fn holonomy(&self, word: &[SignedEdge]) -> DMatrix<Complex64> {
        let n = self.values.first().map(|m| m.nrows()).unwrap_or(1);
        let mut h = DMatrix::identity(n, n);
        for &x in word {
            h = self.edge_value(x) * h;
        }
        h
    }

    /// Gauge action `h_e -> g_{t(e)} h_e g_{s(e)}^{-1}` with one element per vertex.
    pub fn gauge_transform(&self, map: &AreaWeightedMap, per_vertex: &[DMatrix<Complex64>]) -> Self {
        let class = map.vertex_classes();
        EdgeConfiguration {
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(e, h)| &per_vertex[class[2 * e + 1]] * h * per_vertex[class[2 * e]].adjoint())
                .collect(),
        }
    }
}

/// Normalised trace `tr(h) = Tr(h) / n`.
pub fn normalized_trace(h: &DMatrix<Complex64>) -> Complex64 {
    h.trace() / h.nrows() as f64
}

/// Discrete Yang-Mills density `prod over faces of p_{a_f}(h_{boundary f})`
/// against the product of Haar measures.
pub fn ds_weight(map: &AreaWeightedMap, group: &GroupDescriptor, config: &EdgeConfiguration, tol: f64) -> Result<SeriesValue> {
    validate_and_genus(map)?;
    let kernels = map
        .faces
        .iter()
        .map(|f| HeatKernel::new(group, f.area, tol / map.faces.len() as f64))
        .collect::<Result<Vec<_>>>()?;
    ds_weight_with(map, group, config, &kernels)
}

/// As [`ds_weight`] with the per-face heat kernels already built.
pub fn ds_weight_with(
    map: &AreaWeightedMap,
    group: &GroupDescriptor,
    config: &EdgeConfiguration,
    kernels: &[HeatKernel],
) -> Result<SeriesValue> {
    if config.values.len() != map.edges.len() {
        return Err(Error::arg("configuration needs one value per edge"));
    }
    let mut value = 1.0;
    let mut upper = 1.0;
    for (f, k) in map.faces.iter().zip(kernels) {
        let cls = ConjugacyClass::from_matrix(group, &config.holonomy(&f.word))?;
        let p = k.eval(&cls)?;
        value *= p.value;
        upper *= p.value.abs() + p.tail_bound;
    }
    Ok(SeriesValue {
        value,
        tail_bound: upper - value.abs(),
    })
}

/// The map of the worked genus-one example: three faces with boundaries
/// `b' a' b a c d f c'`, `f' e d'` and `e'`.
pub fn example_torus_map(areas: [f64; 3]) -> AreaWeightedMap {
    let doc = MapDocument {
        edges: ["a", "b", "c", "d", "e", "f"].iter().map(|s| s.to_string()).collect(),
        vertices: 3,
        faces: vec![
            FaceDocument {
                word: ["b'", "a'", "b", "a", "c", "d", "f", "c'"].iter().map(|s| s.to_string()).collect(),
                area: areas[0],
            },
            FaceDocument {
                word: ["f'", "e", "d'"].iter().map(|s| s.to_string()).collect(),
                area: areas[1],
            },
            FaceDocument {
                word: vec!["e'".to_string()],
                area: areas[2],
            },
        ],
    };
    AreaWeightedMap::from_document(&doc).unwrap()
}

/// One vertex, edges `a, b`, one face `b' a' b a`: the standard torus.
pub fn one_face_torus(area: f64) -> AreaWeightedMap {
    AreaWeightedMap::from_json(&format!(
        r#"{{"edges": ["a", "b"], "vertices": 1, "faces": [{{"word": ["b'", "a'", "b", "a"], "area": {area}}}]}}"#
    ))
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charcalc::{heat_kernel_eval, torus_element};
    use crate::weights::{make_group, Family};
    use approx::assert_abs_diff_eq;

    fn map_err(r: Result<u32>) -> MapError {
        match r {
            Err(Error::Map(e)) => e,
            other => panic!("expected a map error, got {other:?}"),
        }
    }

    #[test]
    fn genus_examples() {
        assert_eq!(validate_and_genus(&one_face_torus(1.0)).unwrap(), 1);
        assert_eq!(validate_and_genus(&example_torus_map([1.0, 1.0, 1.0])).unwrap(), 1);
        let digon = AreaWeightedMap::from_json(
            r#"{"edges": ["a", "b"], "vertices": 2, "faces": [
                {"word": ["a", "b'"], "area": 1}, {"word": ["b", "a'"], "area": 2}]}"#,
        )
        .unwrap();
        assert_eq!(validate_and_genus(&digon).unwrap(), 0);
    }

    #[test]
    fn genus_diagnostics() {
        let mk = |s: &str| AreaWeightedMap::from_json(s).unwrap();
        let e = map_err(validate_and_genus(&mk(
            r#"{"edges": ["a"], "vertices": 1, "faces": [{"word": ["a"], "area": 1}]}"#,
        )));
        assert!(matches!(e, MapError::EdgeOccurrence { count: 1, .. }));
        let e = map_err(validate_and_genus(&mk(
            r#"{"edges": ["a"], "vertices": 1, "faces": [{"word": ["a", "a"], "area": 1}]}"#,
        )));
        assert!(matches!(e, MapError::NonOrientable(_)));
        let e = map_err(validate_and_genus(&mk(
            r#"{"edges": ["a", "b"], "vertices": 2, "faces": [{"word": ["b'", "a'", "b", "a"], "area": 1}]}"#,
        )));
        assert_eq!(e, MapError::VertexMismatch { declared: 2, computed: 1 });
        let e = map_err(validate_and_genus(&mk(
            r#"{"edges": ["a", "b"], "vertices": 1, "faces": [{"word": ["b'", "a'", "b", "a"], "area": 0}]}"#,
        )));
        assert!(matches!(e, MapError::NonPositiveArea { .. }));
        assert!(AreaWeightedMap::from_json(r#"{"edges": ["a"], "vertices": 1, "faces": [{"word": ["z"], "area": 1}]}"#).is_err());
    }

    #[test]
    fn relabel_and_rotate_keep_genus() {
        let mut m = example_torus_map([1.0, 2.0, 3.0]);
        m.faces[0].word.rotate_left(3);
        m.edges.reverse();
        assert_eq!(validate_and_genus(&m).unwrap(), 1);
        let json = m.to_json();
        assert_eq!(AreaWeightedMap::from_json(&json).unwrap(), m);
    }

    #[test]
    fn extract_example_disc() {
        let m = example_torus_map([1.0, 0.5, 0.5]);
        let lp = m.parse_loop(&["d", "e", "f"]).unwrap();
        let disc = extract_disc(&m, &[1, 2], &lp).unwrap();
        assert_eq!(disc.bounded.len(), 2);
        assert_eq!(disc.edges, vec!["d", "e", "f"]);
        assert_eq!(disc.vertex_count, 2);
        assert_abs_diff_eq!(disc.total_area(), 1.0);
        let outer = disc.outer.clone().unwrap();
        assert_eq!(outer.len(), 2);
        assert_eq!(validate_and_genus(&disc.closed_map(3.0)).unwrap(), 0);
        // the whole surface and a face touching itself are not discs
        assert!(extract_disc(&m, &[0, 1, 2], &lp).is_err());
        assert!(extract_disc(&m, &[0], &m.parse_loop(&["a"]).unwrap()).is_err());
        assert!(matches!(
            extract_disc(&m, &[1, 2], &m.parse_loop(&["d", "e"]).unwrap()),
            Err(Error::Map(MapError::LoopNotClosed))
        ));
        assert!(matches!(
            extract_disc(&m, &[2], &lp),
            Err(Error::Map(MapError::LoopLeavesDisc(_)))
        ));
        // a single face bounded by a simple loop
        let single = extract_disc(&m, &[2], &m.parse_loop(&["e"]).unwrap()).unwrap();
        assert_eq!(single.bounded.len(), 1);
        assert_abs_diff_eq!(single.total_area(), 0.5);
        assert_eq!(single.vertex_count, 1);
    }

    #[test]
    fn extract_whole_sphere() {
        let digon = AreaWeightedMap::from_json(
            r#"{"edges": ["a", "b"], "vertices": 2, "faces": [
                {"word": ["a", "b'"], "area": 1}, {"word": ["b", "a'"], "area": 2}]}"#,
        )
        .unwrap();
        let lp = digon.parse_loop(&["a", "b'"]).unwrap();
        let d = extract_disc(&digon, &[0, 1], &lp).unwrap();
        assert!(d.outer.is_none());
        assert_abs_diff_eq!(d.total_area(), 3.0);
        let single = extract_disc(&digon, &[0], &lp).unwrap();
        assert_eq!(single.outer.as_ref().unwrap().len(), 2);
    }

    #[test]
    fn reduction() {
        let m = example_torus_map([1.0, 1.0, 1.0]);
        let w = m.parse_loop(&["a'", "d", "e", "e'", "f", "a"]).unwrap();
        assert_eq!(w.reduced(), m.parse_loop(&["d", "f"]).unwrap());
    }

    #[test]
    fn circle_torus_weight_is_constant() {
        let u1 = make_group(Family::UnitaryTilde, 1).unwrap();
        let m = one_face_torus(1.3);
        let mut c = EdgeConfiguration::identity(&u1, 2);
        c.values[0][(0, 0)] = Complex64::from_polar(1.0, 0.7);
        c.values[1][(0, 0)] = Complex64::from_polar(1.0, -2.2);
        let w = ds_weight(&m, &u1, &c, 1e-12).unwrap();
        let direct: f64 = (-40..=40).map(|k: i32| (-1.3 * (k * k) as f64 / 2.0).exp()).sum();
        assert_abs_diff_eq!(w.value, direct, epsilon = 1e-10);
    }

    #[test]
    fn identity_weight_and_gauge_invariance() {
        let c1 = make_group(Family::Symplectic, 1).unwrap();
        let m = example_torus_map([0.6, 0.5, 0.4]);
        let id = EdgeConfiguration::identity(&c1, 6);
        let w = ds_weight(&m, &c1, &id, 1e-12).unwrap().value;
        let want: f64 = [0.6, 0.5, 0.4]
            .iter()
            .map(|t| heat_kernel_eval(&c1, *t, &ConjugacyClass::identity(&c1), 1e-13).unwrap().value)
            .product();
        assert_abs_diff_eq!(w, want, epsilon = 1e-8 * want);
        let su2 = |a: f64, b: f64, c: f64| {
            let t = torus_element(&c1, &ConjugacyClass::new(&c1, vec![a]).unwrap());
            let (s, co) = b.sin_cos();
            let r = DMatrix::from_row_slice(2, 2, &[co.into(), (-s).into(), s.into(), co.into()]);
            let t2 = torus_element(&c1, &ConjugacyClass::new(&c1, vec![c]).unwrap());
            t * r * t2
        };
        let cfg = EdgeConfiguration {
            values: (0..6).map(|i| su2(0.3 * i as f64, 0.5 + 0.2 * i as f64, 1.1 - 0.4 * i as f64)).collect(),
        };
        let w1 = ds_weight(&m, &c1, &cfg, 1e-12).unwrap();
        assert!(w1.value < w);
        let gauges = vec![su2(0.2, 1.0, -0.3), su2(-1.0, 0.4, 2.0), su2(0.9, -0.7, 0.1)];
        let w2 = ds_weight(&m, &c1, &cfg.gauge_transform(&m, &gauges), 1e-12).unwrap();
        assert_abs_diff_eq!(w1.value, w2.value, epsilon = 1e-9);
    }
}
