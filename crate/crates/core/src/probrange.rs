//! Outcome-probability maps and their ranges.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{C64, HermitianMatrix};
use crate::povm::Povm;
use crate::sampling::RandomStream;

/// A point of the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbPoint(pub Vec<f64>);

impl ProbPoint {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|&x| !(x >= -1e-10)) || (values.iter().sum::<f64>() - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidParameter(format!("{values:?} is not a probability vector")));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Euclidean distance to the uniform vector.
    pub fn distance_to_uniform(&self) -> f64 {
        let u = 1.0 / self.0.len() as f64;
        self.0.iter().map(|x| (x - u).powi(2)).sum::<f64>().sqrt()
    }
}

/// Vertex list `α_1, …, α_d` with `α_j(i) = (A_i)_{jj}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagPolytope {
    pub vertices: Vec<ProbPoint>,
}

/// `(Tr ρA_1, …, Tr ρA_k)`.
pub fn prob_point(p: &Povm, rho: &HermitianMatrix) -> Result<ProbPoint> {
    if rho.dim() != p.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state of dimension {} for a POVM on dimension {}",
            rho.dim(),
            p.dim()
        )));
    }
    if (rho.trace() - 1.0).abs() > 1e-8 || rho.lambda_min()? < -1e-10 {
        return Err(Error::InvalidParameter("ρ is not a density matrix".into()));
    }
    let values = p
        .matrices()
        .map(|m| {
            // Tr(ρA) for Hermitian ρ, A is ∑ conj(ρ_ij) A_ij
            rho.matrix()
                .as_slice()
                .iter()
                .zip(m.matrix().as_slice())
                .map(|(r, a)| (r.conj() * a).re)
                .sum()
        })
        .collect();
    ProbPoint::new(values)
}

/// Probabilities `(⟨ψ|A_i|ψ⟩)_i` of the pure state `ψ` (unit norm assumed).
pub fn pure_state_point(p: &Povm, psi: &[C64]) -> Result<ProbPoint> {
    if psi.len() != p.dim() {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} for a POVM on dimension {}",
            psi.len(),
            p.dim()
        )));
    }
    let values = p
        .matrices()
        .map(|m| {
            let av = m.matrix().matvec(psi);
            psi.iter().zip(&av).map(|(x, y)| (x.conj() * y).re).sum()
        })
        .collect();
    ProbPoint::new(values)
}

pub fn diag_polytope(p: &Povm) -> Result<DiagPolytope> {
    let d = p.dim();
    for m in p.matrices() {
        let mx = m.matrix();
        for r in 0..d {
            for c in 0..d {
                if r != c && mx[(r, c)].norm() >= 1e-10 {
                    return Err(Error::InvalidParameter(format!(
                        "effect has off-diagonal entry {} at ({r}, {c})",
                        mx[(r, c)]
                    )));
                }
            }
        }
    }
    let vertices = (0..d)
        .map(|j| ProbPoint::new(p.matrices().map(|m| m.matrix()[(j, j)].re).collect()))
        .collect::<Result<_>>()?;
    Ok(DiagPolytope { vertices })
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Counter-clockwise convex hull by Andrew's monotone chain; collinear points dropped.
fn convex_hull(mut pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ((p[0] - a[0] - t * ab[0]).powi(2) + (p[1] - a[1] - t * ab[1]).powi(2)).sqrt()
}

/// Membership of `q` in the polytope, for three outcomes, up to distance `tol`.
pub fn contains(poly: &DiagPolytope, q: &ProbPoint, tol: f64) -> Result<bool> {
    let k = q.0.len();
    if k != 3 || poly.vertices.iter().any(|v| v.0.len() != 3) {
        return Err(Error::Unsupported("polytope membership is implemented for k = 3 only".into()));
    }
    let p = [q.0[0], q.0[1]];
    let hull = convex_hull(poly.vertices.iter().map(|v| [v.0[0], v.0[1]]).collect());
    let boundary_distance = match hull.len() {
        0 => return Ok(false),
        1 => ((p[0] - hull[0][0]).powi(2) + (p[1] - hull[0][1]).powi(2)).sqrt(),
        _ => (0..hull.len())
            .map(|i| segment_distance(p, hull[i], hull[(i + 1) % hull.len()]))
            .fold(f64::INFINITY, f64::min),
    };
    if boundary_distance <= tol {
        return Ok(true);
    }
    if hull.len() < 3 {
        return Ok(false);
    }
    Ok((0..hull.len()).all(|i| cross(hull[i], hull[(i + 1) % hull.len()], p) > 0.0))
}

/// Largest distance to `(1/3, 1/3, 1/3)` over `samples` Haar-random pure qubit states.
pub fn circle_range_radius(p: &Povm, samples: usize, stream: &mut RandomStream) -> Result<f64> {
    if p.dim() != 2 || p.outcomes() != 3 {
        return Err(Error::InvalidParameter(format!(
            "expected a qubit POVM with 3 outcomes, got d = {}, k = {}",
            p.dim(),
            p.outcomes()
        )));
    }
    let mut best = 0.0f64;
    for _ in 0..samples {
        let psi = stream.unit_vector(2);
        best = best.max(pure_state_point(p, &psi)?.distance_to_uniform());
    }
    Ok(best)
}

/// For each outcome `i`, the largest `q_i` reached by an eigenvector state of the effects.
pub fn extremal_probabilities(p: &Povm) -> Result<Vec<f64>> {
    let mut best = vec![0.0f64; p.outcomes()];
    for m in p.matrices() {
        let spec = m.eig()?;
        let v = spec.eigenvectors.as_ref().expect("eig returns eigenvectors");
        for c in 0..p.dim() {
            let psi = v.column(c);
            let q = pure_state_point(p, &psi)?;
            for (b, x) in best.iter_mut().zip(&q.0) {
                *b = b.max(*x);
            }
        }
    }
    Ok(best)
}

/// `max_ψ |⟨ψ|E ψ⟩ - 1/2|`, attained at an extreme eigenvalue.
pub fn max_bias(e: &HermitianMatrix) -> Result<f64> {
    let vals = e.eigenvalues()?;
    Ok((vals[vals.len() - 1] - 0.5).max(0.5 - vals[0]))
}

/// Writes `kind,q1,…,qk` rows: polytope vertices first, then sampled range points.
pub fn write_range_csv<W: Write>(
    out: W,
    vertices: &[ProbPoint],
    points: &[ProbPoint],
) -> Result<()> {
    let k = vertices
        .first()
        .or(points.first())
        .map_or(0, |p| p.0.len());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["kind".to_string()];
    header.extend((1..=k).map(|i| format!("q{i}")));
    w.write_record(&header).map_err(csv_err)?;
    for (kind, set) in [("vertex", vertices), ("point", points)] {
        for p in set {
            let mut row = vec![kind.to_string()];
            row.extend(p.0.iter().map(|x| format!("{x:.17e}")));
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

/// The diagonal three-outcome POVM on six levels whose columns are all
/// permutations of `(1/2, 1/3, 1/6)`.
pub fn diagonal_example() -> Povm {
    let rows = [
        [3.0, 2.0, 1.0, 1.0, 2.0, 3.0],
        [2.0, 3.0, 3.0, 2.0, 1.0, 1.0],
        [1.0, 1.0, 2.0, 3.0, 3.0, 2.0],
    ];
    Povm::new(
        rows.iter()
            .map(|r| HermitianMatrix::from_real_diag(&r.map(|x| x / 6.0)))
            .collect(),
    )
    .expect("columns sum to one")
}

/// The qubit POVM `(2/3)|a_i⟩⟨a_i|` over three real unit vectors at 120°.
pub fn circle_example() -> Povm {
    let h = 3.0f64.sqrt() / 2.0;
    let dirs = [[1.0, 0.0], [-0.5, h], [-0.5, -h]];
    Povm::new(
        dirs.iter()
            .map(|a| HermitianMatrix::outer(&[C64::from(a[0]), C64::from(a[1])]).scale(2.0 / 3.0))
            .collect(),
    )
    .expect("three trine directions sum to 3/2 I")
}
